//! Command line front end: `run`, `validate` and `sweep` over a TOML config.

pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::CavityError;
use crate::moebius::conformal_compose;
use crate::observables::{energy_profile, total_energy, EnergyReport};
use crate::particles::{spectrum, sum_rule_check, SpectrumResult};
use crate::phase::{law_wu_exact_phase, solve_phase, PhaseFunction};

pub use config::{config_hash, RunConfig, RunPoint};
pub use output::emit_profile_csv;

use config::BackendChoice;
use output::{beta_csv, density_csv, profile_csv, spectrum_csv, tagged_name, Artifacts};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const RESIDUAL_PROBES: usize = 1000;

#[derive(Debug, Parser)]
#[command(
    name = "cavity",
    version,
    about = "Scalar field in a cavity with a moving wall"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every point of the configuration.
    Run(CommonArgs),
    /// Parse and check the configuration without computing anything.
    Validate(CommonArgs),
    /// Like `run`, but the configuration must define a sweep.
    Sweep(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical {
        stage: &'static str,
        message: String,
    },
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Numerical { .. } => EXIT_NUMERICAL,
        }
    }

    /// One-line JSON diagnostic.
    pub fn diagnostic(&self) -> String {
        let value = match self {
            RunError::Config(message) => {
                serde_json::json!({ "status": "config_error", "message": message })
            }
            RunError::Numerical { stage, message } => {
                serde_json::json!({ "status": "numerical_error", "stage": stage, "message": message })
            }
        };
        value.to_string()
    }
}

fn stage(stage: &'static str) -> impl Fn(CavityError) -> RunError {
    move |e| match e {
        CavityError::Config(m) => RunError::Config(m),
        other => RunError::Numerical {
            stage,
            message: other.to_string(),
        },
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SumRule {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_err: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SymmetryCheck {
    pub seed: [f64; 4],
    pub energy: f64,
    pub energy_rel_diff: f64,
    pub n_total: f64,
    pub n_k_max_rel_diff: f64,
    pub l_max: usize,
    pub truncation_warning: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalSummary {
    pub t: f64,
    pub energy: Option<EnergyReport>,
    pub n_total: Option<f64>,
    pub l_max: Option<usize>,
    pub tail_estimate: Option<f64>,
    pub truncation_warning: Option<bool>,
    pub sum_rule: Option<SumRule>,
    pub symmetry: Option<SymmetryCheck>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointSummary {
    pub sweep_value: Option<f64>,
    pub t_motion: f64,
    pub backend: String,
    pub max_moore_residual: f64,
    pub evals: Vec<EvalSummary>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub config_hash: String,
    pub tolerances: config::Tolerances,
    pub sweep_parameter: Option<config::SweepParameter>,
    pub points: Vec<PointSummary>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

/// Computes every point; files are returned, not written.
pub fn execute(
    cfg: &RunConfig,
    hash: String,
    quiet: bool,
) -> Result<(Summary, Artifacts), RunError> {
    let points = cfg.points().map_err(stage("config"))?;
    let multi = points.len() > 1 || points.iter().any(|p| p.eval_times.len() > 1);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| RunError::Config(e.to_string()))?;
    let results: Vec<Result<(PointSummary, Artifacts), RunError>> = pool.install(|| {
        points
            .par_iter()
            .enumerate()
            .map(|(i, p)| {
                let tag = |j: usize| {
                    multi.then(|| {
                        if cfg.sweep.is_some() {
                            format!("s{i}_t{j}")
                        } else {
                            format!("t{j}")
                        }
                    })
                };
                let out = run_point(cfg, p, &tag);
                if !quiet {
                    if let Ok((s, _)) = &out {
                        eprintln!("point {i}: max Moore residual {:e}", s.max_moore_residual);
                    }
                }
                out
            })
            .collect()
    });

    let mut summary = Summary {
        config_hash: hash,
        tolerances: cfg.tolerances.clone(),
        sweep_parameter: cfg.sweep.as_ref().map(|s| s.parameter),
        points: Vec::with_capacity(results.len()),
    };
    let mut artifacts = Artifacts::default();
    for r in results {
        let (s, a) = r?;
        summary.points.push(s);
        artifacts.files.extend(a.files);
    }
    Ok((summary, artifacts))
}

fn run_point(
    cfg: &RunConfig,
    p: &RunPoint,
    tag: &dyn Fn(usize) -> Option<String>,
) -> Result<(PointSummary, Artifacts), RunError> {
    let traj = &p.trajectory;
    let l = traj.length();
    let outs = &cfg.outputs;
    let t_last = p.eval_times.iter().copied().fold(0.0, f64::max);
    let span = outs.density2d.as_ref().map_or(0.0, |d| d.span);
    let mut t_final = t_last + (span + 2.0) * l;
    if let Some(range) = outs.profile.as_ref().and_then(|pr| pr.range) {
        t_final = t_final.max(range[1]);
    }

    let tol = cfg.tolerances.moore * l;
    let r = match cfg.backend {
        BackendChoice::Grid => solve_phase(traj, t_final, tol),
        BackendChoice::LawWuExact => law_wu_exact_phase(traj),
    }
    .map_err(stage("solve_phase"))?;
    let (a, b) = r.residual_window(traj, t_final);
    let residual = r
        .max_moore_residual(traj, a, b, RESIDUAL_PROBES)
        .map_err(stage("moore_residual"))?;
    if residual > tol {
        return Err(RunError::Numerical {
            stage: "moore_residual",
            message: format!("max residual {residual:e} exceeds {tol:e}"),
        });
    }

    let seed = cfg.seed().map_err(stage("config"))?;
    let mut artifacts = Artifacts::default();
    let mut evals = Vec::with_capacity(p.eval_times.len());
    for (j, &t) in p.eval_times.iter().enumerate() {
        let tag = tag(j);
        let tag = tag.as_deref();
        let energy = if outs.energy || outs.sum_rule || outs.symmetry_check {
            Some(total_energy(&r, traj, t).map_err(stage("energy"))?)
        } else {
            None
        };

        if let Some(po) = &outs.profile {
            let range = po.range.map_or((t - l, t + l), |[lo, hi]| (lo, hi));
            let prof = energy_profile(&r, range, po.samples).map_err(stage("profile"))?;
            artifacts.push(
                tagged_name(&po.file, tag),
                profile_csv(&prof).map_err(stage("profile"))?,
            );
        }
        if let Some(d) = &outs.density2d {
            let prof = energy_profile(&r, (t - l, t + l), 2).map_err(stage("density2d"))?;
            let text = density_csv(&prof, t, d.span, d.nx, d.nt).map_err(stage("density2d"))?;
            artifacts.push(tagged_name(&d.file, tag), text);
        }

        let spec = if outs.needs_spectrum() {
            Some(spectrum(&r, t, &cfg.tolerances.spectrum_options()).map_err(stage("spectrum"))?)
        } else {
            None
        };
        if let (Some(so), Some(s)) = (&outs.spectrum, &spec) {
            artifacts.push(tagged_name(&so.file, tag), spectrum_csv(s));
            if let Some(bf) = &so.beta_file {
                artifacts.push(tagged_name(bf, tag), beta_csv(s));
            }
        }

        let sum_rule = match (outs.sum_rule, &spec, &energy) {
            (true, Some(s), Some(e)) => {
                let (lhs, rhs, rel_err) = sum_rule_check(s, e);
                Some(SumRule { lhs, rhs, rel_err })
            }
            _ => None,
        };

        let symmetry = match (outs.symmetry_check, &spec, &energy) {
            (true, Some(s), Some(e)) => {
                let m = seed
                    .ok_or_else(|| RunError::Config("symmetry_check needs seed_moebius".into()))?;
                Some(symmetry_check(&r, traj, t, &m, cfg, s, e).map_err(stage("symmetry_check"))?)
            }
            _ => None,
        };

        evals.push(EvalSummary {
            t,
            energy: if outs.energy || outs.sum_rule || outs.symmetry_check {
                energy
            } else {
                None
            },
            n_total: spec.as_ref().map(|s| s.n_total),
            l_max: spec.as_ref().map(|s| s.l_max),
            tail_estimate: spec.as_ref().map(|s| s.tail_estimate),
            truncation_warning: spec.as_ref().map(|s| s.truncation_warning),
            sum_rule,
            symmetry,
        });
    }

    Ok((
        PointSummary {
            sweep_value: p.sweep_value,
            t_motion: traj.t_motion(),
            backend: r.backend().to_string(),
            max_moore_residual: residual,
            evals,
        },
        artifacts,
    ))
}

fn symmetry_check(
    r: &PhaseFunction,
    traj: &crate::trajectory::WallTrajectory,
    t: f64,
    m: &crate::moebius::MoebiusElement,
    cfg: &RunConfig,
    base: &SpectrumResult,
    energy: &EnergyReport,
) -> crate::error::Result<SymmetryCheck> {
    let rc = conformal_compose(r, m)?;
    let e = total_energy(&rc, traj, t)?;
    // composing spreads in-modes, so every n_k gets its own truncation test
    let mut opts = cfg.tolerances.spectrum_options();
    opts.l_max_start = base.l_max;
    opts.out_modes = Some(base.n_k.len());
    opts.per_mode = true;
    let s0 = spectrum(r, t, &opts)?;
    let s = spectrum(&rc, t, &opts)?;
    let floor = opts.floor;
    let n_diff = s0
        .n_k
        .iter()
        .zip(&s.n_k)
        .map(|(x, y)| (x - y).abs() / x.abs().max(floor))
        .fold(0.0, f64::max);
    Ok(SymmetryCheck {
        seed: [m.a, m.b, m.c, m.d],
        energy: e.e_total,
        energy_rel_diff: (e.e_total - energy.e_total).abs() / energy.e_total.abs().max(floor),
        n_total: s.n_total,
        n_k_max_rel_diff: n_diff,
        l_max: s.l_max.max(s0.l_max),
        truncation_warning: s.truncation_warning || s0.truncation_warning,
    })
}

fn run_command(args: &CommonArgs, require_sweep: bool, dry: bool) -> Result<(), RunError> {
    let (cfg, text) = RunConfig::load(&args.config).map_err(stage("config"))?;
    if require_sweep && cfg.sweep.is_none() {
        return Err(RunError::Config(
            "the sweep command needs a [sweep] section".into(),
        ));
    }
    if dry {
        let points = cfg.points().map_err(stage("config"))?;
        if !args.quiet {
            println!(
                "{}",
                serde_json::json!({ "status": "ok", "points": points.len() })
            );
        }
        return Ok(());
    }
    let (summary, artifacts) = execute(&cfg, config_hash(&text), args.quiet)?;
    write_outputs(&args.out, &summary, &artifacts).map_err(|e| RunError::Numerical {
        stage: "write",
        message: e.to_string(),
    })?;
    if !args.quiet {
        println!(
            "{}",
            serde_json::json!({ "status": "ok", "summary": args.out.join("summary.json") })
        );
    }
    Ok(())
}

pub fn write_outputs(
    dir: &Path,
    summary: &Summary,
    artifacts: &Artifacts,
) -> crate::error::Result<()> {
    std::fs::create_dir_all(dir)?;
    artifacts.write_all(dir)?;
    std::fs::write(dir.join("summary.json"), summary.to_json())?;
    Ok(())
}

/// Parses arguments, runs, and returns the process exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run_command(a, false, false),
        Command::Validate(a) => run_command(a, false, true),
        Command::Sweep(a) => run_command(a, true, false),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{}", e.diagnostic());
            e.exit_code()
        }
    }
}
