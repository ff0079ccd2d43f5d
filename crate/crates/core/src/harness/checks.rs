//! Invariant suite behind `rfsliding check`.
//!
//! Each check is small enough to run in well under a second; the whole
//! suite is meant as a smoke test of an installed binary.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::asgs::{asgs_inner_loop_observed, derive_asgs_params, run_rf_asgs, AsgsOptions};
use crate::bregman::{bregman_distance, Euclidean, Vector};
use crate::oracles::{SimpleTerm, SmoothOracle};
use crate::problems::portfolio::{condition_number, portfolio_problem};
use crate::problems::{make_portfolio, make_qp, make_tv, phantom, FiniteDifference2D, GrayImage, ImageSource, SetKind};
use crate::prox::{simplex_project, simplex_threshold, sliding_prox, FeasibleSet};
use crate::reference::{brute_force_simplex_qp, solve_reference, RefOptions, SmoothedComposite};
use crate::sgs::{derive_sgs_params, run_rf_sgs, RunOptions, ScheduleWeights};
use crate::smoothing::{huber, power_iteration_gram, sandwich_check, smooth, LinearOperator};

pub type Outcome = std::result::Result<String, String>;
pub type Check = (&'static str, fn() -> Outcome);

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn err(e: crate::error::Error) -> String {
    e.to_string()
}

fn rand_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.random_range(lo..hi))
}

/// `(name, check)` for every property in the suite.
pub fn all_checks() -> Vec<Check> {
    vec![
        ("prox: projection membership and idempotence", projection_props),
        ("prox: simplex threshold structure", simplex_kkt),
        ("prox: variational inequality at sliding_prox", prox_vi),
        ("prox: sliding_prox vs brute-force simplex QP", prox_brute),
        ("rf-sgs: parameter invariants", sgs_params),
        ("rf-sgs: schedule identities", sgs_schedule),
        ("rf-sgs: deterministic rate on synthetic QP", sgs_rate),
        ("rf-sgs: oracle counts and feasibility", sgs_counts),
        ("smoothing: TV adjoint identity", tv_adjoint),
        ("smoothing: TV operator norm", tv_norm),
        ("smoothing: Huber form and sandwich", smoothing_sandwich),
        ("smoothing: gradient Lipschitz and L_eta", smoothing_lipschitz),
        ("rf-asgs: parameter grid", asgs_grid),
        ("rf-asgs: averaging identity", asgs_averaging),
        ("rf-asgs: deterministic rate on smoothed TV", asgs_rate),
        ("problems: portfolio shift and conditioning", portfolio_props),
        (
            "problems: portfolio argmin ignores rho on the simplex",
            portfolio_argmin,
        ),
        ("problems: synthetic QP spectrum", qp_spectrum),
        ("problems: phantom, PGM and constant kernel", image_props),
    ]
}

pub fn run_all() -> Vec<CheckOutcome> {
    all_checks()
        .into_iter()
        .map(|(name, f)| match f() {
            Ok(detail) => CheckOutcome {
                name,
                passed: true,
                detail,
            },
            Err(detail) => CheckOutcome {
                name,
                passed: false,
                detail,
            },
        })
        .collect()
}

fn projection_props() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut count = 0;
    for n in 1..=8 {
        let sets = [
            FeasibleSet::Simplex { dim: n },
            FeasibleSet::Box {
                lo: -0.5,
                hi: 1.5,
                dim: n,
            },
            FeasibleSet::WholeSpace { dim: n },
        ];
        for set in sets {
            for _ in 0..50 {
                let v = rand_vec(&mut rng, n, -3.0, 3.0);
                let p = set.project(&v).map_err(err)?;
                ensure!(set.contains(&p, 1e-12), "{} projection left the set", set.name());
                let pp = set.project(&p).map_err(err)?;
                ensure!((&pp - &p).amax() <= 1e-15, "{} projection not idempotent", set.name());
                count += 1;
            }
        }
    }
    Ok(format!("{count} projections"))
}

fn simplex_kkt() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..300 {
        let n = rng.random_range(1..10);
        let v = rand_vec(&mut rng, n, -2.0, 2.0);
        let w = simplex_project(&v).map_err(err)?;
        let theta = simplex_threshold(&v);
        let rebuilt = v.map(|x| (x - theta).max(0.0));
        ensure!((&rebuilt - &w).amax() <= 1e-12, "w differs from max(v - theta, 0)");
        ensure!((w.sum() - 1.0).abs() <= 1e-12, "sum {} != 1", w.sum());
    }
    Ok("300 random vectors".into())
}

fn random_prox_case(rng: &mut ChaCha8Rng, n: usize, set: &FeasibleSet) -> (Vector, f64, f64, f64, Vector, Vector) {
    let g = rand_vec(rng, n, -1.0, 1.0);
    let mu = rng.random_range(0.0..1.0);
    let a = rng.random_range(0.1..2.0);
    let b = rng.random_range(0.0..2.0);
    let ca = set.project(&rand_vec(rng, n, -1.0, 1.0)).expect("dims match");
    let cb = set.project(&rand_vec(rng, n, -1.0, 1.0)).expect("dims match");
    (g, mu, a, b, ca, cb)
}

fn prox_vi() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for n in 1..=6 {
        for set in [
            FeasibleSet::Simplex { dim: n },
            FeasibleSet::Box {
                lo: -0.3,
                hi: 0.7,
                dim: n,
            },
        ] {
            let (g, mu, a, b, ca, cb) = random_prox_case(&mut rng, n, &set);
            let u = sliding_prox(&g, &SimpleTerm::quadratic(mu), &set, a, &ca, b, &cb).map_err(err)?;
            let grad = &g + &u * mu + (&u - &ca) * a + (&u - &cb) * b;
            for _ in 0..100 {
                let z = set.project(&rand_vec(&mut rng, n, -2.0, 2.0)).map_err(err)?;
                let vi = grad.dot(&(&z - &u));
                worst = worst.min(vi);
                ensure!(vi >= -1e-8, "VI value {vi:e} on {} n={n}", set.name());
            }
        }
    }
    Ok(format!("min <grad, u - u*> = {worst:.2e}"))
}

fn prox_brute() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for n in 1..=5 {
        let set = FeasibleSet::Simplex { dim: n };
        for _ in 0..20 {
            let (g, _, a, b, ca, cb) = random_prox_case(&mut rng, n, &set);
            let mu = 0.3;
            let u = sliding_prox(&g, &SimpleTerm::quadratic(mu), &set, a, &ca, b, &cb).map_err(err)?;
            let h = DMatrix::identity(n, n) * (mu + a + b);
            let lin = &g - &ca * a - &cb * b;
            let brute = brute_force_simplex_qp(&h, &lin).map_err(err)?;
            worst = worst.max((&u - &brute).amax());
        }
    }
    ensure!(worst <= 1e-8, "max deviation {worst:e}");
    Ok(format!("max deviation {worst:.2e}"))
}

fn sgs_params() -> Outcome {
    for ratio in [1.0, 4.0, 100.0, 1e4] {
        for nu in [0.5, 1.0] {
            let p = derive_sgs_params(ratio, 1.0, nu).map_err(err)?;
            ensure!(p.beta == p.l * p.gamma / p.nu, "beta != L gamma / nu at L/mu={ratio}");
            ensure!(p.c * (p.beta + p.mu) - p.beta > 0.0, "T_k ill-posed at L/mu={ratio}");
            ensure!(p.c > 0.0 && p.c < 1.0, "c = {} outside (0,1)", p.c);
            ensure!((1..=50).all(|k| p.inner_count(k) >= 1), "T_k < 1");
        }
    }
    let p = derive_sgs_params(4.0, 1.0, 1.0).map_err(err)?;
    ensure!(p.inner_count(1) == 5 && p.inner_count(2) == 6, "T_1, T_2 != 5, 6");
    Ok("8 (L, mu, nu) cases".into())
}

fn sgs_schedule() -> Outcome {
    for (l, mu) in [(4.0, 1.0), (100.0, 1.0), (1e3, 0.1)] {
        let p = derive_sgs_params(l, mu, 1.0).map_err(err)?;
        let w = ScheduleWeights::new(p);
        for k in 1..=20u64 {
            let tk = p.inner_count(k);
            let mut prod = 1.0;
            for t in 1..=tk {
                prod *= 1.0 - w.w(k, t);
                let wt = (p.beta + p.mu) / (p.beta * (1.0 + p.p(k)) + p.mu);
                ensure!((w.w(k, t) - wt).abs() <= 1e-12, "w formula at k={k}");
                ensure!((w.big_w(k, t) - prod).abs() <= 1e-12, "W product at k={k}, t={t}");
                ensure!(
                    (w.big_w(k, t) - w.big_w_closed(k, t)).abs() <= 1e-12,
                    "W closed form at k={k}"
                );
                ensure!(
                    (p.theta(k, t) - w.theta_from_weights(k, t)).abs() <= 1e-12,
                    "theta at k={k}, t={t}"
                );
            }
            let wt = w.big_w(k, tk);
            ensure!(
                (p.beta + p.mu) * wt + p.beta * (1.0 - wt) <= p.c * (p.beta + p.mu) + 1e-12,
                "W-bound at k={k}"
            );
            if k >= 2 {
                let wp = w.big_w(k - 1, p.inner_count(k - 1));
                let lhs = p.gamma / w.big_gamma(k) * (wt / (1.0 - wt) * (p.beta + p.mu) + p.beta);
                let rhs = p.gamma / (w.big_gamma(k - 1) * (1.0 - wp)) * (p.beta + p.mu);
                ensure!(
                    lhs <= rhs * (1.0 + 1e-12) + 1e-12,
                    "weight condition at k={k}: {lhs} > {rhs}"
                );
            }
        }
    }
    Ok("k <= 20 for 3 (L, mu) pairs".into())
}

fn sgs_rate() -> Outcome {
    let (_, mut problem) = make_qp(10, 1.0, 50.0, 0.1, SetKind::Simplex, 5).map_err(err)?;
    let mut x0 = Vector::zeros(10);
    x0[0] = 1.0;
    let sol = solve_reference(&problem, &x0, &RefOptions::accelerated(1e-11)).map_err(err)?;
    let p = derive_sgs_params(problem.lipschitz(), problem.mu(), 1.0).map_err(err)?;
    let v0 = bregman_distance(&problem.dg, &x0, &sol.x_star).map_err(err)?;
    let a = p.rate_constant(problem.objective(&x0) - sol.value, v0, problem.h.lipschitz_m(), 0.0);
    let run = run_rf_sgs(&mut problem, &x0, 25, &p, &RunOptions::default()).map_err(err)?;
    for (i, v) in run.objectives.iter().enumerate() {
        let n = i as u64 + 1;
        ensure!(v - sol.value <= p.rate_bound(n, a) + 1e-9, "gap exceeds bound at N={n}");
    }
    Ok(format!("N <= 25, final gap {:.2e}", run.objectives[24] - sol.value))
}

fn sgs_counts() -> Outcome {
    let (_, mut problem) = make_qp(8, 1.0, 20.0, 0.1, SetKind::Box { lo: -1.0, hi: 1.0 }, 6).map_err(err)?;
    let p = derive_sgs_params(problem.lipschitz(), problem.mu(), 1.0).map_err(err)?;
    let x0 = problem.set.center();
    let opts = RunOptions {
        keep_iterates: true,
        ..RunOptions::default()
    };
    let run = run_rf_sgs(&mut problem, &x0, 12, &p, &opts).map_err(err)?;
    ensure!(problem.grad_count() == 12, "grad count {}", problem.grad_count());
    ensure!(problem.subgrad_count() == p.total_inner(12), "subgradient count");
    ensure!(run.trace.counts_monotone(), "trace counts decrease");
    for it in &run.iterates {
        for x in [&it.x, &it.x_tilde, &it.x_bar] {
            ensure!(problem.set.contains(x, 1e-10), "iterate left the box");
        }
    }
    Ok(format!("{} subgradient calls", p.total_inner(12)))
}

fn tv_adjoint() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (w, h) in [(2, 2), (5, 3), (16, 16)] {
        let k = FiniteDifference2D::new(w, h).map_err(err)?;
        for _ in 0..20 {
            let u = rand_vec(&mut rng, k.input_dim(), -1.0, 1.0);
            let y = rand_vec(&mut rng, k.output_dim(), -1.0, 1.0);
            let d = (k.apply(&u).dot(&y) - u.dot(&k.apply_t(&y))).abs();
            ensure!(d <= 1e-10, "adjoint mismatch {d:e} at {w}x{h}");
        }
    }
    Ok("3 sizes x 20 pairs".into())
}

fn tv_norm() -> Outcome {
    let mut est = Vec::new();
    for s in [2, 4, 8, 16] {
        let k = FiniteDifference2D::new(s, s).map_err(err)?;
        let l = power_iteration_gram(&k, 300, 0x5eed);
        ensure!(l <= 8.0 + 1e-6, "|K|^2 estimate {l} > 8 at {s}x{s}");
        est.push(format!("{s}x{s}: {l:.4}"));
    }
    Ok(est.join(", "))
}

fn smoothing_sandwich() -> Outcome {
    let (_, spec, _) = make_tv(6, 6, 1.0, 0.0, 0, ImageSource::Phantom).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for eta in [1e-3, 0.1, 1.0] {
        let h = smooth(spec.clone(), eta).map_err(err)?;
        for _ in 0..200 {
            let x = rand_vec(&mut rng, 36, 0.0, 1.0);
            let (lo, hi) = sandwich_check(&spec, &h, &x).map_err(err)?;
            ensure!(lo && hi, "sandwich fails at eta={eta}");
            let hub: f64 = spec.operator().apply(&x).iter().map(|&t| huber(t, eta)).sum();
            ensure!((hub - h.h_eta(&x)).abs() <= 1e-12, "Huber form at eta={eta}");
        }
    }
    ensure!(
        (huber(0.5, 1.0) - 0.125).abs() < 1e-15 && (huber(2.0, 1.0) - 1.5).abs() < 1e-15,
        "Huber examples"
    );
    Ok("3 eta values x 200 images".into())
}

fn smoothing_lipschitz() -> Outcome {
    let (_, spec, _) = make_tv(6, 6, 1.0, 0.0, 0, ImageSource::Phantom).map_err(err)?;
    let h = smooth(spec.clone(), 0.05).map_err(err)?;
    ensure!(
        h.l_eta() == spec.op_norm().powi(2) / (h.eta() * spec.mu_s()),
        "L_eta formula"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let x = rand_vec(&mut rng, 36, -1.0, 1.0);
        let y = rand_vec(&mut rng, 36, -1.0, 1.0);
        let ratio = (h.grad_h_eta(&x) - h.grad_h_eta(&y)).norm() / (&x - &y).norm();
        worst = worst.max(ratio / h.l_eta());
    }
    ensure!(worst <= 1.0 + 1e-6, "ratio {worst}");
    spec.reset_counters();
    let x = Vector::zeros(36);
    spec.apply_k(&x);
    spec.apply_kt(&spec.apply_k(&x));
    ensure!(spec.k_count() == 3, "K count {}", spec.k_count());
    Ok(format!("max ratio / L_eta = {worst:.4}"))
}

fn asgs_grid() -> Outcome {
    let mut cases = 0;
    for ratio in [1.0, 10.0, 1e3] {
        for leta in [1.0, 10.0, 1e4] {
            for c in [0.5, 1.0, 1.5] {
                let bmax = 3.0 / c - 2.0;
                for b in [0.0, bmax / 2.0, bmax] {
                    let p = derive_asgs_params(ratio, 1.0, 1.0, ratio * leta, c, b).map_err(err)?;
                    ensure!((p.lambda - (p.nu * p.mu / p.l).sqrt()).abs() <= 1e-15, "lambda");
                    ensure!(p.beta == p.l * p.gamma / p.nu, "beta");
                    ensure!(p.t >= 1, "T < 1");
                    ensure!(
                        (p.big_lambda(p.t) * (1.0 - p.alpha) - (1.0 - p.gamma / p.lambda)).abs() <= 1e-12,
                        "Lambda_T identity at {ratio}, {leta}, {c}, {b}"
                    );
                    ensure!(p.alpha <= p.alpha_hat() + 1e-12, "alpha > alpha_hat");
                    for t in 1..=p.t {
                        ensure!(
                            p.beta * p.p + p.q(t) >= p.lambda * p.l_eta * p.alpha / p.nu - 1e-12,
                            "beta p + q_t bound at t={t}"
                        );
                        ensure!((p.q(t) - p.b * p.mu * p.big_lambda(t)).abs() <= 1e-15, "q_t");
                    }
                    cases += 1;
                }
            }
        }
    }
    Ok(format!("{cases} cases"))
}

fn asgs_averaging() -> Outcome {
    let (inst, spec, f) = make_tv(5, 4, 1.0, 0.05, 3, ImageSource::Phantom).map_err(err)?;
    let mut h = smooth(spec, 0.01).map_err(err)?;
    let set = inst.set();
    let p = derive_asgs_params(f.lipschitz(), f.strong_convexity(), 1.0, h.l_eta(), 1.5, 0.0).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let x_prev = rand_vec(&mut rng, 20, 0.0, 1.0);
    let xbar_prev = rand_vec(&mut rng, 20, 0.0, 1.0);
    let grad = f.peek_gradient(&x_prev);
    let mut us = Vec::new();
    let out = asgs_inner_loop_observed(&p, &grad, &x_prev, &xbar_prev, &mut h, &set, |_, u| us.push(u.clone()))
        .map_err(err)?;
    let lam_t = p.big_lambda(p.t);
    let mut rebuilt = &xbar_prev * (1.0 - p.alpha);
    for (i, u) in us.iter().enumerate() {
        rebuilt.axpy(p.alpha / p.big_lambda(i as u64 + 1), u, 1.0);
    }
    rebuilt *= lam_t;
    let d = (&rebuilt - &out.averaged).amax();
    ensure!(d <= 1e-10, "averaging identity off by {d:e}");
    Ok(format!("T = {}, deviation {d:.2e}", p.t))
}

fn asgs_rate() -> Outcome {
    let (inst, spec, mut f) = make_tv(8, 8, 1.0, 0.05, 7, ImageSource::Phantom).map_err(err)?;
    let mut h = smooth(spec, 1e-2).map_err(err)?;
    let set = inst.set();
    let x0 = inst.g.clone();
    let sol = solve_reference(
        &SmoothedComposite {
            f: &f,
            h: &h,
            set: &set,
        },
        &x0,
        &RefOptions::accelerated(1e-11),
    )
    .map_err(err)?;
    let mu = f.strong_convexity();
    let v0 = bregman_distance(&Euclidean::new(64), &x0, &sol.x_star).map_err(err)?;
    let a = f.value(&x0) + h.h_eta(&x0) - sol.value + mu * v0;
    let p = derive_asgs_params(f.lipschitz(), mu, 1.0, h.l_eta(), 1.5, 0.0).map_err(err)?;
    let opts = AsgsOptions {
        keep_iterates: true,
        ..AsgsOptions::default()
    };
    let run = run_rf_asgs(&mut f, &mut h, &set, &x0, 40, &p, &opts).map_err(err)?;
    for (i, v) in run.objectives.iter().enumerate() {
        let n = i as u64 + 1;
        ensure!(v - sol.value <= p.rate_bound(n, a) + 1e-9, "gap exceeds bound at N={n}");
    }
    ensure!(run.trace.counts_monotone(), "trace counts decrease");
    Ok(format!("N <= 40, T = {}", p.t))
}

fn portfolio_props() -> Outcome {
    let (inst, problem) = make_portfolio(40, 3, 1.0, 0.1, 0.1).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let w = rand_vec(&mut rng, 40, -1.0, 1.0);
        let d = (problem.objective(&w) - inst.objective(&w)).abs();
        ensure!(
            d <= 1e-12 * (1.0 + inst.objective(&w).abs()),
            "shifted objective differs by {d:e}"
        );
    }
    let sigma = inst.sigma();
    let min_eig = sigma.clone().symmetric_eigenvalues().min();
    ensure!(min_eig >= inst.mu_reg - 1e-10, "min eigenvalue {min_eig}");
    let cond = condition_number(&sigma);
    ensure!((3.5..=6.5).contains(&cond), "cond(Sigma) = {cond}");
    Ok(format!("cond(Sigma) = {cond:.3}"))
}

fn portfolio_argmin() -> Outcome {
    let (inst, p0) = make_portfolio(6, 4, 1.0, 0.0, 0.1).map_err(err)?;
    let mut inst1 = inst.clone();
    inst1.rho = 0.5;
    let p1 = portfolio_problem(&inst1).map_err(err)?;
    let x0 = p0.set.center();
    let s0 = solve_reference(&p0, &x0, &RefOptions::default()).map_err(err)?;
    let s1 = solve_reference(&p1, &x0, &RefOptions::default()).map_err(err)?;
    let d = (&s0.x_star - &s1.x_star).amax();
    ensure!(d <= 1e-7, "minimisers differ by {d:e}");
    Ok(format!("minimisers agree to {d:.2e}"))
}

fn qp_spectrum() -> Outcome {
    let (qp, _) = make_qp(12, 0.5, 40.0, 0.1, SetKind::WholeSpace, 12).map_err(err)?;
    let eig = qp.a.clone().symmetric_eigenvalues();
    ensure!(
        eig.min() >= 0.5 - 1e-9 && eig.max() <= 40.0 + 1e-9,
        "spectrum [{}, {}]",
        eig.min(),
        eig.max()
    );
    Ok(format!("spectrum [{:.4}, {:.4}]", eig.min(), eig.max()))
}

fn image_props() -> Outcome {
    ensure!(phantom(12, 9) == phantom(12, 9), "phantom not deterministic");
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let pixels: Vec<u8> = (0..64).map(|_| rng.random()).collect();
    let img = GrayImage::new(8, 8, pixels).map_err(err)?;
    let back = crate::problems::pgm::parse_pgm(&crate::problems::pgm::encode_pgm(&img)).map_err(err)?;
    ensure!(back == img, "PGM round trip changed the image");
    let k = FiniteDifference2D::new(7, 5).map_err(err)?;
    let ku = k.apply(&Vector::from_element(35, 0.42));
    ensure!(ku.amax() == 0.0, "K of a constant image is not 0");
    Ok("phantom, 8x8 PGM, 7x5 constant".into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes() {
        for c in run_all() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
