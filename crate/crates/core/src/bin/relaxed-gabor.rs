use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use relaxed_gabor::certainty;
use relaxed_gabor::config::RunConfig;
use relaxed_gabor::expansion;
use relaxed_gabor::gabor::{self, SYNTHESIS_MARGIN};
use relaxed_gabor::higher;
use relaxed_gabor::io;
use relaxed_gabor::metaplectic::{metaplectic_apply, Rotation};
use relaxed_gabor::numerics::{loc_integral, theta};
use relaxed_gabor::verify;
use relaxed_gabor::{Complex64, Result};

#[derive(Parser)]
#[command(name = "relaxed-gabor", version, about = "Relaxed Gabor expansions at critical density")]
struct Cli {
    /// JSON config file; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Config override `key=value`, repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gabor transform of a signal: field CSV and summary JSON.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        field_out: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Signal CSV from a coefficient file.
    Synthesize {
        #[arg(long)]
        coefficients: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Relaxed (m = 0) or order-m expansion of a signal.
    Expand {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Certainty decomposition of a signal concentrated near a domain.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        /// Domain JSON, e.g. {"type":"disk","center":[0,0],"radius":2}.
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        residual_out: Option<PathBuf>,
    },
    /// Metaplectic rotation of a signal.
    Rotate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        angle: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Runs the invariant suite; exit status 1 if any invariant fails.
    Verify {
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Prints Θ(z) and, optionally, I(x).
    Theta {
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        re: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        im: f64,
        #[arg(long, allow_hyphen_values = true)]
        x: Option<f64>,
    },
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn pretty(v: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(v).expect("serializable") + "\n"
}

fn signal_csv(f: &relaxed_gabor::numerics::SampledSignal) -> Result<String> {
    let mut buf = Vec::new();
    io::write_signal_csv(&mut buf, f)?;
    Ok(String::from_utf8(buf).expect("ascii"))
}

fn load_config(cli: &Cli) -> Result<RunConfig> {
    let base = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    base.with_overrides(&cli.overrides)
}

/// `Ok(true)` when every invariant held.
fn run(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    let grid = cfg.grid();
    match &cli.command {
        Command::Analyze { input, field_out, output } => {
            let f = io::load_signal_csv(input, grid)?;
            let field = gabor::gabor_transform(&f, cfg.phase_grid()?)?;
            if let Some(p) = field_out {
                let mut buf = Vec::new();
                io::write_field_csv(&mut buf, &field)?;
                std::fs::write(p, buf)?;
            }
            let norm_sq = f.norm_sq();
            let summary = json!({
                "config_hash": cfg.hash(),
                "norm": norm_sq.sqrt(),
                "hdelta_norm": field.weighted_mass(|l| l.norm().powf(cfg.delta) + 1.0).sqrt(),
                "delta": cfg.delta,
                "parseval_ratio": if norm_sq > 0.0 { field.mass() / norm_sq } else { 1.0 },
            });
            emit(output.as_deref(), &pretty(&summary))?;
        }
        Command::Synthesize { coefficients, output } => {
            let c = io::parse_coefficients(&std::fs::read_to_string(coefficients)?)?;
            let f = gabor::synthesize_with_margin(&c, grid, SYNTHESIS_MARGIN)?;
            emit(output.as_deref(), &signal_csv(&f)?)?;
        }
        Command::Expand { input, order, output } => {
            let f = io::load_signal_csv(input, grid)?;
            let m = order.unwrap_or(cfg.order);
            let opts = cfg.expansion_options();
            let hdelta = expansion::hdelta_norm_on(&f, cfg.delta, cfg.phase_grid()?)?;
            let (set, seam) = if m == 0 {
                let e = expansion::relaxed_coefficients_with(&f, cfg.cutoff, &opts)?;
                (e.coefficients, e.seam_mismatch)
            } else {
                let e = higher::order_m_coefficients(&f, m, None, cfg.cutoff, &opts)?;
                (e.coefficient_set(), e.seam_mismatch)
            };
            let synth = gabor::synthesize_with_margin(&set, grid, SYNTHESIS_MARGIN)?;
            let norm = f.l2norm();
            let diff = f.sub(&synth)?.l2norm();
            let mut file = io::coefficients_to_file(&set);
            file.diagnostics = Some(json!({
                "config_hash": cfg.hash(),
                "order": m,
                "cutoff": cfg.cutoff,
                "residual": if norm > 0.0 { diff / norm } else { diff },
                "l2": set.l2(),
                "hdelta": hdelta,
                "seam_mismatch": seam,
            }));
            emit(output.as_deref(), &pretty(&file))?;
        }
        Command::Decompose { input, domain, radius, order, delta, output, residual_out } => {
            let f = io::load_signal_csv(input, grid)?;
            let k = io::load_domain(domain)?;
            let mut cfg = cfg.clone();
            if let Some(r) = radius {
                cfg.radius = *r;
            }
            if let Some(d) = delta {
                cfg.delta = *d;
            }
            cfg.validate()?;
            let m = order.unwrap_or_else(|| cfg.default_certainty_order());
            let dec = certainty::decompose_with(&f, &k, cfg.radius, m, &cfg.certainty_options())?;
            let entries = |map: &std::collections::BTreeMap<_, Complex64>, sharp| -> Vec<io::CoefficientEntry> {
                map.iter()
                    .map(|(i, c): (&relaxed_gabor::phaseplane::LatticeIndex, &Complex64)| io::CoefficientEntry {
                        k: i.k,
                        j: i.j,
                        sharp,
                        re: c.re,
                        im: c.im,
                    })
                    .collect()
            };
            let out = json!({
                "config_hash": cfg.hash(),
                "alpha": entries(&dec.alpha, false),
                "omega": entries(&dec.omega, true),
                "residual_norm": dec.report.residual_norm,
                "report": dec.report,
            });
            if let Some(p) = residual_out {
                std::fs::write(p, signal_csv(&dec.residual)?)?;
            }
            emit(output.as_deref(), &pretty(&out))?;
        }
        Command::Rotate { input, angle, output } => {
            let f = io::load_signal_csv(input, grid)?;
            emit(output.as_deref(), &signal_csv(&metaplectic_apply(Rotation::new(*angle), &f))?)?;
        }
        Command::Verify { seed, output } => {
            let mut cfg = cfg.clone();
            if let Some(s) = seed {
                cfg.seed = *s;
            }
            let report = verify::run(&cfg);
            emit(output.as_deref(), &report.to_json())?;
            for c in report.failures() {
                eprintln!("FAIL {}::{} value {} {} {}", c.module, c.name, c.value, c.comparison, c.threshold);
            }
            return Ok(report.passed);
        }
        Command::Theta { re, im, x } => {
            let t = theta(Complex64::new(*re, *im), cfg.theta());
            let mut v = json!({ "z": [re, im], "theta": [t.re, t.im] });
            if let Some(x) = x {
                v["x"] = json!(x);
                v["I"] = json!(loc_integral(*x));
            }
            emit(None, &pretty(&v))?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
