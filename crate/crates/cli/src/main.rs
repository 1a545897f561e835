use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use fujita_core::inequalities::{estimate_best_constant, FamilyMember, InequalityKind, TestFamily};
use fujita_core::plot::{loglog_svg, Series};
use fujita_core::profile::write_profile_csv;
use fujita_core::semigroup::{evolve_linear, fit_decay_exponent, predicted_decay_slope, DecayMeasure, LebesgueIndex};
use fujita_core::solver::{evolve_nonlinear, SourceSpec};
use fujita_core::sweep::{run_sweep, write_atomic, SweepSpec};
use fujita_core::testfn::{default_samples, verify_testfn_bound};
use fujita_core::{critical_exponent, make_profile, par, regime_classify, Execution, Field, SimConfig};
use serde_json::json;

#[derive(Parser)]
#[command(name = "fujita", version, about = "Blow-up and decay for heat equations with ground-state potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate psi, psi', V and the harmonic coordinate as CSV.
    Profile {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 20.0)]
        xmax: f64,
        #[arg(long, default_value_t = 401)]
        n: usize,
        /// Output file (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Critical exponent p_*(alpha, m), optionally classifying a given p.
    Exponent {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        m: f64,
        #[arg(long)]
        p: Option<f64>,
    },
    /// Fit the decay rate of the linear flow for a pair of weighted norms.
    Decay {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value = "1")]
        q1: LebesgueIndex,
        #[arg(long, default_value = "inf")]
        q2: LebesgueIndex,
        #[arg(long, default_value_t = 1000.0)]
        tend: f64,
        #[arg(long, default_value_t = 4001)]
        n: usize,
        /// Width of the Gaussian initial datum.
        #[arg(long, default_value_t = 3.0)]
        width: f64,
    },
    /// Run the nonlinear problem from a Gaussian bump and classify the outcome.
    Run {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        m: f64,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        amp: f64,
        #[arg(long, default_value_t = 30.0)]
        width: f64,
        /// Use a compactly supported source weight of this half-width.
        #[arg(long)]
        localized_source: Option<f64>,
        #[arg(long)]
        tend: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
        /// Write the snapshot norm series as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write a log-log plot of the max norms as SVG.
        #[arg(long)]
        plot: Option<PathBuf>,
    },
    /// Functional-inequality ratios over a deterministic test family.
    Ineq {
        #[arg(long, value_enum)]
        kind: IneqKind,
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value = "default")]
        family: String,
        /// Per-member ratios as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long)]
        sequential: bool,
    },
    /// Estimate the test-function constant C_T for one R.
    Testfn {
        #[arg(long, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long)]
        p: f64,
        #[arg(long = "R", alias = "r")]
        r: f64,
        /// Sample points per axis.
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Phase-diagram sweep from a JSON spec.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        sequential: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum IneqKind {
    Nash,
    Hardy,
    Wnash,
}

impl IneqKind {
    fn parts(self) -> &'static [(&'static str, InequalityKind)] {
        match self {
            IneqKind::Nash => &[("ratio", InequalityKind::Nash)],
            IneqKind::Hardy => &[
                ("r1", InequalityKind::HardyL2),
                ("r2", InequalityKind::HardyLinf),
                ("proof_ratio", InequalityKind::HardyProof),
            ],
            IneqKind::Wnash => &[("w1", InequalityKind::WeightedNashL2), ("w2", InequalityKind::WeightedNashLinf)],
        }
    }
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Profile { alpha, xmax, n, out } => {
            let rows = make_profile(alpha)?.table(xmax, n)?;
            match out {
                Some(path) => write_profile_csv(&rows, BufWriter::new(File::create(&path)?))?,
                None => write_profile_csv(&rows, io::stdout().lock())?,
            }
        }
        Command::Exponent { alpha, m, p } => {
            let r = critical_exponent(alpha, m)?;
            let mut v = serde_json::to_value(r)?;
            if let Some(p) = p {
                v["p"] = json!(p);
                v["regime"] = serde_json::to_value(regime_classify(alpha, m, p)?)?;
            }
            print_json(&v)?;
        }
        Command::Decay { alpha, q1, q2, tend, n, width } => {
            if q1 > q2 {
                bail!("need q1 <= q2");
            }
            let prof = make_profile(alpha)?;
            let cfg = SimConfig::default().with_t_end(tend).with_n(n);
            let f0 = Field::from_fn(cfg.grid()?, |x| (-(x / width).powi(2)).exp());
            let traj = evolve_linear(&f0, tend, &prof, &cfg)?;
            let window = (tend / 100.0, tend);
            let slope = fit_decay_exponent(&traj, DecayMeasure::Pair { q1, q2 }, window)?;
            print_json(&json!({
                "fitted_slope": slope,
                "predicted_slope": predicted_decay_slope(alpha, q1, q2),
                "window": [window.0, window.1],
                "extrapolation": alpha < 0.0,
                "boundary_leak": traj.boundary_leak,
            }))?;
        }
        Command::Run { alpha, m, p, amp, width, localized_source, tend, n, csv, plot } => {
            let prof = make_profile(alpha)?;
            let mut cfg = SimConfig::default();
            if let Some(t) = tend {
                cfg = cfg.with_t_end(t);
            }
            if let Some(n) = n {
                cfg = cfg.with_n(n);
            }
            let src = match localized_source {
                Some(width) => SourceSpec::Localized { width },
                None => SourceSpec::FullWeight,
            };
            let u0 = Field::from_fn(cfg.grid()?, |x| amp * (-(x / width).powi(2)).exp());
            let (out, _) = evolve_nonlinear(&u0, p, m, &src, &prof, &cfg)?;
            if let Some(path) = csv {
                let mut w = csv::Writer::from_path(&path)?;
                w.write_record(["t", "l1_psi", "linf_psi_inv", "linf", "l2"])?;
                let s = &out.series;
                for k in 0..s.len() {
                    w.write_record(
                        [s.times[k], s.l1_psi[k], s.linf_psi_inv[k], s.linf[k], s.l2[k]].map(|v| v.to_string()),
                    )?;
                }
                w.flush()?;
            }
            if let Some(path) = plot {
                let h = &out.history;
                let svg = loglog_svg(
                    &format!("alpha = {alpha}, m = {m}, p = {p}, amplitude = {amp}"),
                    &[
                        Series { label: "||u||_inf", times: &h.times, values: &h.linf, color: "black" },
                        Series { label: "||u/psi||_inf", times: &h.times, values: &h.linf_star, color: "steelblue" },
                    ],
                );
                write_atomic(&path, svg.as_bytes()).with_context(|| format!("writing {}", path.display()))?;
            }
            print_json(&serde_json::to_value(&out)?)?;
        }
        Command::Ineq { kind, alpha, family, csv, sequential } => {
            if family != "default" {
                bail!("unknown family {family:?}; available: default");
            }
            let prof = make_profile(alpha)?;
            let fam = TestFamily::default_family();
            let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
            let mut sups = serde_json::Map::new();
            let mut columns: Vec<Vec<f64>> = Vec::new();
            let mut members: Vec<FamilyMember> = Vec::new();
            for &(name, k) in kind.parts() {
                let best = estimate_best_constant(&fam, k, &prof, exec)?;
                sups.insert(name.to_string(), json!(best.sup_ratio));
                members = best.ratios.iter().map(|r| r.member).collect();
                columns.push(best.ratios.iter().map(|r| r.ratio).collect());
            }
            if let Some(path) = csv {
                let mut w = csv::Writer::from_path(&path)?;
                let mut header = vec!["family", "center", "width", "amplitude"];
                header.extend(kind.parts().iter().map(|(n, _)| *n));
                w.write_record(&header)?;
                for (i, m) in members.iter().enumerate() {
                    let mut rec = vec![
                        serde_json::to_value(m.kind)?.as_str().unwrap_or_default().to_string(),
                        m.center.to_string(),
                        m.width.to_string(),
                        m.amplitude.to_string(),
                    ];
                    rec.extend(columns.iter().map(|c| c[i].to_string()));
                    w.write_record(&rec)?;
                }
                w.flush()?;
            }
            let first = kind.parts()[0].0;
            let mut summary = json!({
                "alpha": alpha,
                "members": members.len(),
                "sup_ratio": sups[first],
                "sups": sups,
            });
            if let IneqKind::Hardy = kind {
                summary["proof_bound"] = json!(fujita_core::inequalities::hardy_proof_bound(alpha));
            }
            print_json(&summary)?;
        }
        Command::Testfn { alpha, p, r, samples } => {
            let prof = make_profile(alpha)?;
            let b = verify_testfn_bound(&prof, r, p, &default_samples(r, samples))?;
            print_json(&serde_json::to_value(&b)?)?;
        }
        Command::Sweep { config, out, jobs, sequential } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut spec: SweepSpec = serde_json::from_str(&text).context("parsing sweep spec")?;
            if out.is_some() {
                spec.output_dir = out;
            }
            if spec.output_dir.is_none() {
                bail!("no output directory: pass --out or set output_dir in the spec");
            }
            let exec = if sequential { Execution::Sequential } else { Execution::Parallel };
            let diagram = par::with_jobs(jobs, || run_sweep(&spec, exec))?;
            let errored = diagram.cells.iter().filter(|c| c.errored()).count();
            for c in &diagram.cells {
                eprintln!("p = {:<8} amplitude = {:<10} {}", c.p, c.amplitude, c.outcome.label());
            }
            if errored > 0 {
                eprintln!("{errored} cell(s) failed");
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
