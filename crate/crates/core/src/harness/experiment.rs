//! Runs configured experiments and writes their traces.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{Algorithm, Horizon, ProblemKind, QpSet, ReferenceMode, RunConfig};
use super::csv::{write_aggregate_csv, write_trace_csv};
use crate::asgs::{derive_asgs_params, reference_rate_constant, run_rf_asgs, solve_spp, AsgsOptions, SppOptions};
use crate::bregman::{bregman_distance, Vector};
use crate::error::{Error, Result};
use crate::oracles::{L1Term, Noisy, SmoothOracle};
use crate::problem::ProblemSpec;
use crate::problems::{make_portfolio, make_qp, make_tv, write_pgm, GrayImage, ImageSource, SetKind};
use crate::reference::{solve_reference, RefOptions};
use crate::sgs::{compute_bound_n, derive_sgs_params, run_rf_sgs, RunOptions};
use crate::smoothing::smooth;
use crate::trace::RunTrace;

/// Problems at most this large get a reference solution under `reference = auto`.
pub const AUTO_REFERENCE_MAX_DIM: usize = 4096;

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub seed: u64,
    pub trace: RunTrace,
    /// Objective at `x̄_k` for every outer step.
    pub objectives: Vec<f64>,
    pub x: Vector,
    pub f_star: Option<f64>,
    pub outer_iterations: u64,
}

fn wants_reference(cfg: &RunConfig, dim: usize) -> bool {
    match cfg.reference {
        ReferenceMode::Always => true,
        ReferenceMode::Never => false,
        ReferenceMode::Auto => dim <= AUTO_REFERENCE_MAX_DIM,
    }
}

fn composite_problem(cfg: &RunConfig, seed: u64) -> Result<ProblemSpec> {
    match cfg.problem {
        ProblemKind::Qp => {
            let set = match cfg.qp_set {
                QpSet::Simplex => SetKind::Simplex,
                QpSet::Box { lo, hi } => SetKind::Box { lo, hi },
                QpSet::Whole => SetKind::WholeSpace,
            };
            let (qp, _) = make_qp(cfg.n, cfg.mu_f, cfg.l_f, cfg.rho, set, cfg.data_seed)?;
            qp.problem(cfg.sigma, seed)
        }
        ProblemKind::Portfolio => {
            let (_, mut p) = make_portfolio(cfg.n, cfg.data_seed, cfg.tau, cfg.rho, cfg.mu_reg)?;
            if cfg.sigma > 0.0 {
                p.h = Box::new(Noisy::new(L1Term::new(cfg.rho, cfg.n)?, cfg.sigma, seed)?);
            }
            Ok(p)
        }
        ProblemKind::Tv => Err(Error::param("tv is not a composite problem")),
    }
}

fn run_sgs(cfg: &RunConfig, seed: u64) -> Result<RunOutput> {
    let mut problem = composite_problem(cfg, seed)?;
    let params = derive_sgs_params(problem.lipschitz(), problem.mu(), 1.0)?;
    let x0 = problem.set.center();
    let reference = if wants_reference(cfg, problem.dim()) || matches!(cfg.horizon, Horizon::Epsilon(_)) {
        if cfg.reference == ReferenceMode::Never {
            return Err(Error::param("an eps horizon needs the reference solution"));
        }
        Some(solve_reference(&problem, &x0, &RefOptions::accelerated(1e-10))?)
    } else {
        None
    };
    let n = match cfg.horizon {
        Horizon::Iterations(n) => n,
        Horizon::Epsilon(eps) => {
            let sol = reference.as_ref().expect("reference computed above");
            let a = params.rate_constant(
                problem.objective(&x0) - sol.value,
                bregman_distance(&problem.dg, &x0, &sol.x_star)?,
                problem.h.lipschitz_m(),
                cfg.sigma,
            );
            compute_bound_n(a, eps, params.c)?
        }
    };
    let opts = RunOptions {
        f_star: reference.as_ref().map(|r| r.value),
        ..RunOptions::default()
    };
    let run = run_rf_sgs(&mut problem, &x0, n, &params, &opts)?;
    Ok(RunOutput {
        seed,
        trace: run.trace,
        objectives: run.objectives,
        x: run.x_bar,
        f_star: opts.f_star,
        outer_iterations: n,
    })
}

fn run_asgs(cfg: &RunConfig, seed: u64) -> Result<(RunOutput, crate::problems::TvInstance)> {
    let source = match &cfg.image {
        Some(p) => ImageSource::File(p.clone()),
        None => ImageSource::Phantom,
    };
    let (inst, spec, mut f) = make_tv(cfg.width, cfg.height, cfg.tau, cfg.sigma_noise, cfg.data_seed, source)?;
    let set = inst.set();
    let x0 = inst.g.clone();
    let use_ref = wants_reference(cfg, set.dim());
    let out = match cfg.horizon {
        Horizon::Iterations(n) => {
            let mut h = smooth(spec, cfg.eta)?;
            let f_star = if use_ref {
                Some(reference_rate_constant(&f, &h, &set, &x0, 1e-10)?.1)
            } else {
                None
            };
            let params = derive_asgs_params(
                f.lipschitz(),
                f.strong_convexity(),
                1.0,
                h.l_eta().max(f.lipschitz()),
                cfg.c,
                cfg.b,
            )?;
            let opts = AsgsOptions {
                f_star,
                ..AsgsOptions::default()
            };
            let run = if cfg.sigma > 0.0 {
                let mut noisy = Noisy::new(h, cfg.sigma, seed)?;
                run_rf_asgs(&mut f, &mut noisy, &set, &x0, n, &params, &opts)?
            } else {
                run_rf_asgs(&mut f, &mut h, &set, &x0, n, &params, &opts)?
            };
            RunOutput {
                seed,
                trace: run.trace,
                objectives: run.objectives,
                x: run.x_bar,
                f_star,
                outer_iterations: n,
            }
        }
        Horizon::Epsilon(eps) => {
            if cfg.reference == ReferenceMode::Never {
                return Err(Error::param("an eps horizon needs the reference solution"));
            }
            let opts = SppOptions {
                c: cfg.c,
                b: cfg.b,
                sigma: cfg.sigma,
                seed,
                ..SppOptions::default()
            };
            let sol = solve_spp(&mut f, spec, &set, &x0, eps, &opts)?;
            let f_star = sol
                .trace
                .last()
                .and_then(|r| r.objective_gap.map(|g| sol.smoothed_value - g));
            RunOutput {
                seed,
                objectives: Vec::new(),
                trace: sol.trace,
                x: sol.x,
                f_star,
                outer_iterations: sol.n,
            }
        }
    };
    Ok((out, inst))
}

/// One run with oracle seed `seed`; no files are written.
pub fn execute(cfg: &RunConfig, seed: u64) -> Result<RunOutput> {
    match cfg.algorithm {
        Algorithm::RfSgs => run_sgs(cfg, seed),
        Algorithm::RfAsgs => run_asgs(cfg, seed).map(|(o, _)| o),
    }
}

fn with_suffix(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}

pub fn seed_path(output: &Path, seed: u64) -> PathBuf {
    with_suffix(output, &format!("_seed{seed}"), "csv")
}

pub fn aggregate_path(output: &Path) -> PathBuf {
    with_suffix(output, "_aggregate", "csv")
}

fn write_images(cfg: &RunConfig, inst: &crate::problems::TvInstance, x: &Vector) -> Result<()> {
    let Some(prefix) = &cfg.image_out else {
        return Ok(());
    };
    for (name, v) in [("clean", &inst.clean), ("noisy", &inst.g), ("denoised", x)] {
        let img = GrayImage::from_vector(inst.width, inst.height, v)?;
        write_pgm(&img, with_suffix(prefix, &format!("_{name}"), "pgm"))?;
    }
    Ok(())
}

/// Runs the first seed and writes its trace to `cfg.output` (plus PGM
/// images for TV when `image_out` is set).
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    let seed = cfg.seeds[0];
    let out = match cfg.algorithm {
        Algorithm::RfSgs => run_sgs(cfg, seed)?,
        Algorithm::RfAsgs => {
            let (out, inst) = run_asgs(cfg, seed)?;
            write_images(cfg, &inst, &out.x)?;
            out
        }
    };
    write_trace_csv(&out.trace, &cfg.output)?;
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub runs: Vec<RunOutput>,
    pub trace_paths: Vec<PathBuf>,
    pub aggregate: PathBuf,
}

/// All seeds in parallel; one trace per seed plus a mean/std aggregate.
pub fn sweep(cfg: &RunConfig) -> Result<SweepOutput> {
    let results: Vec<Result<(RunOutput, PathBuf)>> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let out = execute(cfg, seed)?;
            let path = seed_path(&cfg.output, seed);
            write_trace_csv(&out.trace, &path)?;
            Ok((out, path))
        })
        .collect();
    let mut runs = Vec::new();
    let mut trace_paths = Vec::new();
    for r in results {
        let (o, p) = r?;
        runs.push(o);
        trace_paths.push(p);
    }
    let traces: Vec<RunTrace> = runs.iter().map(|r| r.trace.clone()).collect();
    let aggregate = aggregate_path(&cfg.output);
    write_aggregate_csv(&traces, &aggregate)?;
    Ok(SweepOutput {
        runs,
        trace_paths,
        aggregate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths() {
        let p = Path::new("/tmp/out/run.csv");
        assert_eq!(seed_path(p, 4), PathBuf::from("/tmp/out/run_seed4.csv"));
        assert_eq!(aggregate_path(p), PathBuf::from("/tmp/out/run_aggregate.csv"));
    }

    #[test]
    fn qp_run_has_gaps() {
        let cfg = RunConfig::parse("problem = qp\nn = 6\nN = 8\noutput = unused.csv").unwrap();
        let out = execute(&cfg, 0).unwrap();
        assert_eq!(out.trace.len(), 8);
        assert!(out.trace.iter().all(|r| r.objective_gap.is_some()));
    }

    #[test]
    fn reference_never_leaves_gap_empty() {
        let cfg = RunConfig::parse("problem = portfolio\nn = 10\nN = 3\nreference = never\noutput = u.csv").unwrap();
        let out = execute(&cfg, 0).unwrap();
        assert!(out.trace.iter().all(|r| r.objective_gap.is_none()));
    }

    #[test]
    fn eps_horizon_qp() {
        let cfg = RunConfig::parse("problem = qp\nn = 5\nL_f = 10\neps = 1e-4\noutput = u.csv").unwrap();
        let out = execute(&cfg, 0).unwrap();
        let last = out.trace.last().unwrap();
        assert!(last.objective_gap.unwrap() <= 1e-4);
    }

    #[test]
    fn tv_small_run() {
        let cfg = RunConfig::parse("problem = tv\nwidth = 6\nheight = 5\nN = 4\neta = 0.05\noutput = u.csv").unwrap();
        let out = execute(&cfg, 0).unwrap();
        assert_eq!(out.trace.len(), 4);
        assert!(out.trace.iter().all(|r| r.objective_gap.unwrap() >= -1e-9));
    }
}
