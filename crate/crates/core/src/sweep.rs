//! Phase-diagram sweeps over `(p, amplitude)` and their CSV/JSON/SVG output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SimConfig;
use crate::error::{invalid, Result};
use crate::exponent::{critical_exponent, extended_real};
use crate::grid::Field;
use crate::par::{self, Execution};
use crate::profile::PotentialProfile;
use crate::solver::{evolve_nonlinear, InconclusiveReason, OutcomeKind, SourceSpec};

/// Cells with `|p - p_star|` below this get a longer horizon.
pub const NEAR_CRITICAL_BAND: f64 = 0.25;
/// Horizon multiplier for near-critical cells.
pub const NEAR_CRITICAL_FACTOR: f64 = 10.0;

fn default_bump_width() -> f64 {
    30.0
}

fn default_source() -> SourceSpec {
    SourceSpec::FullWeight
}

/// Sweep description; also the schema of the `sweep --config` file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub alpha: f64,
    pub m: f64,
    pub p_grid: Vec<f64>,
    pub amplitude_grid: Vec<f64>,
    /// Initial data is `amplitude * exp(-(x / bump_width)^2)`.
    #[serde(default = "default_bump_width")]
    pub bump_width: f64,
    #[serde(default = "default_source")]
    pub source: SourceSpec,
    #[serde(default)]
    pub overrides: SimConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        let ascending = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
        if self.p_grid.is_empty() || self.amplitude_grid.is_empty() {
            return invalid("p and amplitude grids must be nonempty");
        }
        if !ascending(&self.p_grid) || !ascending(&self.amplitude_grid) {
            return invalid("grids must be strictly ascending");
        }
        if self.p_grid.iter().any(|&p| !(p > 1.0 && p.is_finite())) {
            return invalid("every p must be finite and exceed 1");
        }
        if self.amplitude_grid.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return invalid("amplitudes must be positive and finite");
        }
        if !(self.bump_width > 0.0) {
            return invalid("bump width must be positive");
        }
        PotentialProfile::new(self.alpha)?;
        critical_exponent(self.alpha, self.m)?;
        self.overrides.validate()
    }

    /// SHA-256 of the canonical JSON of everything that affects results.
    pub fn config_hash(&self) -> Result<String> {
        let canonical = SweepSpec { output_dir: None, ..self.clone() };
        Ok(hex::encode(Sha256::digest(serde_json::to_vec(&canonical)?)))
    }

    fn cell_config(&self, p: f64, p_star: f64) -> (SimConfig, bool) {
        let mut cfg = self.overrides.clone();
        let near = p_star.is_finite() && (p - p_star).abs() < NEAR_CRITICAL_BAND;
        if near {
            cfg.t_end *= NEAR_CRITICAL_FACTOR;
        }
        (cfg, near)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub p: f64,
    pub amplitude: f64,
    pub outcome: OutcomeKind,
    pub t_final: f64,
    pub flags: Vec<String>,
}

impl Cell {
    pub fn errored(&self) -> bool {
        matches!(self.outcome, OutcomeKind::Inconclusive { reason: InconclusiveReason::Error, .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub n: usize,
    pub xmax: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config_hash: String,
    pub grid: GridInfo,
    pub wall_time_s: f64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseDiagram {
    pub alpha: f64,
    pub m: f64,
    #[serde(with = "extended_real")]
    pub p_star: f64,
    /// Sorted by `(p, amplitude)`.
    pub cells: Vec<Cell>,
    pub metadata: Metadata,
}

impl PhaseDiagram {
    pub fn any_errored(&self) -> bool {
        self.cells.iter().any(Cell::errored)
    }
}

fn run_cell(spec: &SweepSpec, prof: &PotentialProfile, p_star: f64, p: f64, amplitude: f64) -> Cell {
    let (cfg, near) = spec.cell_config(p, p_star);
    let mut flags = Vec::new();
    if near {
        flags.push("extended_horizon".to_string());
    }
    let result = cfg.grid().and_then(|g| {
        let u0 = Field::from_fn(g, |x| amplitude * (-(x / spec.bump_width).powi(2)).exp());
        evolve_nonlinear(&u0, p, spec.m, &spec.source, prof, &cfg)
    });
    match result {
        Ok((out, _)) => {
            if out.boundary_leak {
                flags.push("boundary_leak".to_string());
            }
            Cell { p, amplitude, outcome: out.kind, t_final: out.t_final, flags }
        }
        Err(e) => {
            flags.push("error".to_string());
            Cell {
                p,
                amplitude,
                outcome: OutcomeKind::Inconclusive { reason: InconclusiveReason::Error, detail: Some(e.to_string()) },
                t_final: 0.0,
                flags,
            }
        }
    }
}

/// Runs every cell (in parallel under [`Execution::Parallel`]) and writes the
/// artifacts when the spec names an output directory.
pub fn run_sweep(spec: &SweepSpec, exec: Execution) -> Result<PhaseDiagram> {
    spec.validate()?;
    let start = Instant::now();
    let prof = PotentialProfile::new(spec.alpha)?;
    let p_star = critical_exponent(spec.alpha, spec.m)?.p_star;
    let points: Vec<(f64, f64)> =
        spec.p_grid.iter().flat_map(|&p| spec.amplitude_grid.iter().map(move |&a| (p, a))).collect();
    let mut cells = par::map(exec, &points, |&(p, a)| run_cell(spec, &prof, p_star, p, a));
    cells.sort_by(|a, b| a.p.total_cmp(&b.p).then(a.amplitude.total_cmp(&b.amplitude)));
    let diagram = PhaseDiagram {
        alpha: spec.alpha,
        m: spec.m,
        p_star,
        cells,
        metadata: Metadata {
            config_hash: spec.config_hash()?,
            grid: GridInfo {
                n: spec.overrides.n,
                xmax: spec.overrides.resolved_xmax(),
                t_end: spec.overrides.t_end,
            },
            wall_time_s: start.elapsed().as_secs_f64(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
    };
    if let Some(dir) = &spec.output_dir {
        for format in [Format::Csv, Format::Json, Format::Svg] {
            emit(&diagram, format, dir)?;
        }
    }
    Ok(diagram)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl Format {
    pub fn file_name(self) -> &'static str {
        match self {
            Format::Csv => "phase_diagram.csv",
            Format::Json => "phase_diagram.json",
            Format::Svg => "phase_diagram.svg",
        }
    }
}

/// Writes `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes one artifact into `dir` (created if missing) and returns its path.
pub fn emit(diagram: &PhaseDiagram, format: Format, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format.file_name());
    let bytes = match format {
        Format::Csv => to_csv(diagram)?,
        Format::Json => serde_json::to_vec_pretty(diagram)?,
        Format::Svg => to_svg(diagram).into_bytes(),
    };
    write_atomic(&path, &bytes)?;
    Ok(path)
}

pub fn to_csv(diagram: &PhaseDiagram) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["alpha", "m", "p", "amplitude", "outcome", "t_blowup_est", "linf_slope", "flags"])?;
    for c in &diagram.cells {
        let (t_est, slope) = match &c.outcome {
            OutcomeKind::Blowup { t_est } => (t_est.to_string(), String::new()),
            OutcomeKind::GlobalDecay { linf_slope } => (String::new(), linf_slope.map(|s| s.to_string()).unwrap_or_default()),
            OutcomeKind::Inconclusive { .. } => (String::new(), String::new()),
        };
        w.write_record([
            diagram.alpha.to_string(),
            diagram.m.to_string(),
            c.p.to_string(),
            c.amplitude.to_string(),
            c.outcome.label().to_string(),
            t_est,
            slope,
            c.flags.join(";"),
        ])?;
    }
    w.flush()?;
    w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))
}

/// Scatter of cells over `p` (linear) and amplitude (log), with a vertical
/// line at `p_star` when it is finite.
pub fn to_svg(diagram: &PhaseDiagram) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;
    let ps: Vec<f64> = diagram.cells.iter().map(|c| c.p).collect();
    let mut p_lo = ps.iter().copied().fold(f64::INFINITY, f64::min);
    let mut p_hi = ps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if diagram.p_star.is_finite() {
        p_lo = p_lo.min(diagram.p_star);
        p_hi = p_hi.max(diagram.p_star);
    }
    if !p_lo.is_finite() {
        (p_lo, p_hi) = (1.0, 2.0);
    }
    let pad = 0.1 * (p_hi - p_lo).max(0.5);
    let (p_lo, p_hi) = (p_lo - pad, p_hi + pad);
    let la: Vec<f64> = diagram.cells.iter().map(|c| c.amplitude.log10()).collect();
    let a_lo = la.iter().copied().fold(f64::INFINITY, f64::min);
    let a_hi = la.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (a_lo, a_hi) = if a_lo.is_finite() { (a_lo - 0.5, a_hi + 0.5) } else { (-1.0, 1.0) };
    let sx = |p: f64| M + (p - p_lo) / (p_hi - p_lo) * (W - 2.0 * M);
    let sy = |a: f64| H - M - (a - a_lo) / (a_hi - a_lo) * (H - 2.0 * M);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">alpha = {}, m = {}</text>"#,
        W / 2.0,
        diagram.alpha,
        diagram.m
    );
    let _ = writeln!(
        s,
        r#"<path d="M{M} {M} V{} H{}" fill="none" stroke="black"/>"#,
        H - M,
        W - M
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12">p</text>"#,
        W / 2.0,
        H - 20.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 18 {})">log10 amplitude</text>"#,
        H / 2.0,
        H / 2.0
    );
    if diagram.p_star.is_finite() {
        let x = sx(diagram.p_star);
        let _ = writeln!(
            s,
            r#"<line class="p-star" x1="{x:.2}" y1="{M}" x2="{x:.2}" y2="{}" stroke="gray" stroke-dasharray="6 4"/>"#,
            H - M
        );
    }
    for (c, &a) in diagram.cells.iter().zip(&la) {
        let (x, y) = (sx(c.p), sy(a));
        let glyph = match c.outcome {
            OutcomeKind::Blowup { .. } => format!(
                r#"<path class="blowup" d="M{:.2} {:.2} l10 10 m0 -10 l-10 10" stroke="crimson" stroke-width="2"/>"#,
                x - 5.0,
                y - 5.0
            ),
            OutcomeKind::GlobalDecay { .. } => {
                format!(r#"<circle class="global-decay" cx="{x:.2}" cy="{y:.2}" r="5" fill="steelblue"/>"#)
            }
            OutcomeKind::Inconclusive { .. } => format!(
                r#"<rect class="inconclusive" x="{:.2}" y="{:.2}" width="10" height="10" fill="none" stroke="darkorange"/>"#,
                x - 5.0,
                y - 5.0
            ),
        };
        let _ = writeln!(s, "{glyph}");
    }
    s.push_str("</svg>\n");
    s
}
