//! Restart-free accelerated stochastic gradient sliding for
//! `min_{x ∈ X} φ(x) = f(x) + h_η(x)` with `μ`-strongly convex `f`.
//!
//! ```text
//! λ = √(νμ/L),  γ = cλ/3,  β = Lγ/ν
//! T = ⌈log(1 − c/3) / log(1 − (c/3)√(L/L_η))⌉
//! α = 1 − (1 − c/3)^{1/T},  p = (1 − α)/α,  q_t = bμΛ_t
//! ```
//!
//! and `φ(x̄_N) − φ* ≤ (1 − γ)^N (φ(x̄₀) − φ* + μV(x₀, x*))` for exact
//! gradients of `h_η`.

use std::sync::Arc;
use std::time::Instant;

use crate::bregman::{bregman_distance, Euclidean, Vector};
use crate::error::{check_dim, Error, Result};
use crate::oracles::{Noisy, SimpleTerm, SmoothOracle, SubgradientOracle};
use crate::prox::{sliding_prox, FeasibleSet};
use crate::reference::{solve_reference, RefOptions, SmoothedComposite};
use crate::sgs::DEFAULT_INNER_BUDGET;
use crate::smoothing::{choose_eta, smooth, SaddleSpec, SmoothedOracle};
use crate::trace::{RunTrace, TraceRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfAsgsParams {
    pub c: f64,
    pub b: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub beta: f64,
    pub t: u64,
    pub alpha: f64,
    pub p: f64,
    pub l: f64,
    pub mu: f64,
    pub nu: f64,
    pub l_eta: f64,
}

pub fn derive_asgs_params(l: f64, mu: f64, nu: f64, l_eta: f64, c: f64, b: f64) -> Result<RfAsgsParams> {
    for (name, v) in [("L", l), ("mu", mu), ("nu", nu), ("L_eta", l_eta)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::param(format!("{name} must be positive and finite, got {v}")));
        }
    }
    if !(c > 0.0 && c <= 1.5) {
        return Err(Error::param(format!("c must lie in (0, 3/2], got {c}")));
    }
    if !(b >= 0.0 && b <= 3.0 / c - 2.0) {
        return Err(Error::param(format!("b must lie in [0, 3/c - 2], got {b}")));
    }
    if l < nu * mu {
        return Err(Error::AssumptionViolation(format!(
            "lambda > 1: L = {l} is below nu*mu = {}",
            nu * mu
        )));
    }
    if l_eta < l {
        return Err(Error::AssumptionViolation(format!("L_eta = {l_eta} is below L = {l}")));
    }
    let lambda = (nu * mu / l).sqrt();
    let gamma = c * lambda / 3.0;
    let beta = l * gamma / nu;
    let log_keep = (-c / 3.0).ln_1p();
    let ratio = log_keep / (-(c / 3.0) * (l / l_eta).sqrt()).ln_1p();
    let t = (ratio.ceil() as u64).max(1);
    let alpha = -(log_keep / t as f64).exp_m1();
    Ok(RfAsgsParams {
        c,
        b,
        lambda,
        gamma,
        beta,
        t,
        alpha,
        p: (1.0 - alpha) / alpha,
        l,
        mu,
        nu,
        l_eta,
    })
}

impl RfAsgsParams {
    /// `Λ_t = (1 − α)^{t−1}`.
    pub fn big_lambda(&self, t: u64) -> f64 {
        (1.0 - self.alpha).powi((t - 1) as i32)
    }

    /// `q_t = bμΛ_t`.
    pub fn q(&self, t: u64) -> f64 {
        self.b * self.mu * self.big_lambda(t)
    }

    /// `(c/3)√(L/L_η)`, the upper bound on `α`.
    pub fn alpha_hat(&self) -> f64 {
        self.c / 3.0 * (self.l / self.l_eta).sqrt()
    }

    /// `(1 − γ)^N · A`.
    pub fn rate_bound(&self, n: u64, a: f64) -> f64 {
        (n as f64 * (-self.gamma).ln_1p()).exp() * a
    }

    /// Smallest `N ≥ 1` with `(1 − γ)^N · a ≤ target`.
    pub fn outer_count(&self, a: f64, target: f64) -> Result<u64> {
        if !(a > 0.0 && target > 0.0) {
            return Err(Error::param("rate constant and target must be positive"));
        }
        let n = ((a / target).ln() / -(-self.gamma).ln_1p()).ceil();
        Ok(if n < 1.0 { 1 } else { n as u64 })
    }
}

/// Weight used in `x̄_k = (1 − w)x̄_{k−1} + w x̃_k`.
///
/// `Lambda` is what the convergence analysis uses (`x̄⁺ = (1 − λ)x̄ + λx̃⁺`);
/// `Gamma` follows the algorithm listing literally. They coincide only when
/// `c = 3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OuterWeight {
    #[default]
    Lambda,
    Gamma,
}

#[derive(Debug, Clone)]
pub struct InnerOutput {
    pub last: Vector,
    pub averaged: Vector,
}

/// Inner loop of outer step `k`: `T` prox steps sharing `grad_fx = ∇f(x̲_k)`,
/// starting from `u_0 = x_prev`, `ũ_0 = xbar_prev`.
pub fn asgs_inner_loop<H: SubgradientOracle + ?Sized>(
    params: &RfAsgsParams,
    grad_fx: &Vector,
    x_prev: &Vector,
    xbar_prev: &Vector,
    h: &mut H,
    set: &FeasibleSet,
) -> Result<InnerOutput> {
    asgs_inner_loop_observed(params, grad_fx, x_prev, xbar_prev, h, set, |_, _| {})
}

pub fn asgs_inner_loop_observed<H: SubgradientOracle + ?Sized>(
    params: &RfAsgsParams,
    grad_fx: &Vector,
    x_prev: &Vector,
    xbar_prev: &Vector,
    h: &mut H,
    set: &FeasibleSet,
    mut observe: impl FnMut(u64, &Vector),
) -> Result<InnerOutput> {
    let RfAsgsParams {
        lambda, alpha, beta, p, ..
    } = *params;
    let mut u = x_prev.clone();
    let mut averaged = xbar_prev.clone();
    for t in 1..=params.t {
        let mut u_low = xbar_prev * (1.0 - lambda);
        u_low.axpy(lambda * (1.0 - alpha), &averaged, 1.0);
        u_low.axpy(lambda * alpha, &u, 1.0);
        let mut g = h.sample(&u_low);
        g += grad_fx;
        let next = sliding_prox(&g, &SimpleTerm::Zero, set, beta, x_prev, beta * p + params.q(t), &u)?;
        averaged *= 1.0 - alpha;
        averaged.axpy(alpha, &next, 1.0);
        observe(t, &next);
        u = next;
    }
    Ok(InnerOutput { last: u, averaged })
}

#[derive(Debug, Clone)]
pub struct AsgsOptions {
    pub f_star: Option<f64>,
    pub outer_weight: OuterWeight,
    pub inner_budget: u64,
    pub keep_iterates: bool,
}

impl Default for AsgsOptions {
    fn default() -> Self {
        Self {
            f_star: None,
            outer_weight: OuterWeight::Lambda,
            inner_budget: DEFAULT_INNER_BUDGET,
            keep_iterates: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AsgsRun {
    pub trace: RunTrace,
    /// `φ(x̄_k)` for `k = 1..N`.
    pub objectives: Vec<f64>,
    pub x_bar: Vector,
    pub x_last: Vector,
    /// `(x_k, x̃_k, x̄_k)` when requested.
    pub iterates: Vec<(Vector, Vector, Vector)>,
}

/// `N` outer iterations on `φ = f + h`, where `h` returns (possibly noisy)
/// gradients of `h_η`.
pub fn run_rf_asgs<H: SubgradientOracle + ?Sized>(
    f: &mut dyn SmoothOracle,
    h: &mut H,
    set: &FeasibleSet,
    x0: &Vector,
    n: u64,
    params: &RfAsgsParams,
    opts: &AsgsOptions,
) -> Result<AsgsRun> {
    check_dim(set.dim(), x0.len())?;
    check_dim(set.dim(), f.dim())?;
    check_dim(set.dim(), h.dim())?;
    if !set.contains(x0, 1e-9) {
        return Err(Error::param("x0 is not in the feasible set"));
    }
    let needed = n.saturating_mul(params.t);
    if needed > opts.inner_budget {
        return Err(Error::BudgetExceeded {
            needed,
            cap: opts.inner_budget,
        });
    }
    let start = Instant::now();
    let w = match opts.outer_weight {
        OuterWeight::Lambda => params.lambda,
        OuterWeight::Gamma => params.gamma,
    };
    let step = 1.0 / params.l;
    let mut x = x0.clone();
    let mut x_bar = x0.clone();
    let mut trace = RunTrace::new();
    let mut objectives = Vec::with_capacity(n as usize);
    let mut iterates = Vec::new();

    for k in 1..=n {
        let x_low = &x_bar * (1.0 - params.gamma) + &x * params.gamma;
        let grad = f.gradient(&x_low);
        let inner = asgs_inner_loop(params, &grad, &x, &x_bar, h, set)?;
        x_bar *= 1.0 - w;
        x_bar.axpy(w, &inner.averaged, 1.0);
        x = inner.last;
        if opts.keep_iterates {
            iterates.push((x.clone(), inner.averaged, x_bar.clone()));
        }

        let objective = f.value(&x_bar) + h.value(&x_bar);
        objectives.push(objective);
        let g = f.peek_gradient(&x_bar) + h.subgradient(&x_bar);
        let moved = set.project(&(&x_bar - g * step))?;
        trace.push(TraceRecord {
            k: k as usize,
            objective_gap: opts.f_star.map(|fs| objective - fs),
            grad_map_norm: (&x_bar - moved).norm() / step,
            grad_f_count: f.grad_count(),
            subgrad_h_count: h.sample_count(),
            elapsed_seconds: start.elapsed().as_secs_f64(),
        });
    }
    Ok(AsgsRun {
        trace,
        objectives,
        x_bar,
        x_last: x,
        iterates,
    })
}

#[derive(Debug, Clone)]
pub struct SppOptions {
    pub c: f64,
    pub b: f64,
    /// `A` in the rate bound. Computed with the reference solver when absent.
    pub rate_constant: Option<f64>,
    /// Gradient noise on `h_η`; zero gives the exact oracle.
    pub sigma: f64,
    pub seed: u64,
    pub outer_weight: OuterWeight,
    pub inner_budget: u64,
    /// Mapping-norm tolerance for the reference solve behind `A`.
    pub reference_tol: f64,
    /// `φ_η*` for the trace's gap column; filled in from the reference
    /// solve when that runs.
    pub f_star: Option<f64>,
}

impl Default for SppOptions {
    fn default() -> Self {
        Self {
            c: 1.5,
            b: 0.0,
            rate_constant: None,
            sigma: 0.0,
            seed: 0,
            outer_weight: OuterWeight::Lambda,
            inner_budget: DEFAULT_INNER_BUDGET,
            reference_tol: 1e-8,
            f_star: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SppSolution {
    pub x: Vector,
    pub trace: RunTrace,
    pub eta: f64,
    pub l_eta: f64,
    pub n: u64,
    pub params: RfAsgsParams,
    pub rate_constant: f64,
    /// `φ_η(x)` at the returned point.
    pub smoothed_value: f64,
}

/// `A = φ(x₀) − φ* + μV(x₀, x*)` for the smoothed problem, via the
/// reference solver.
pub fn reference_rate_constant(
    f: &dyn SmoothOracle,
    h: &SmoothedOracle,
    set: &FeasibleSet,
    x0: &Vector,
    tol: f64,
) -> Result<(f64, f64)> {
    let comp = SmoothedComposite { f, h, set };
    let sol = solve_reference(&comp, x0, &RefOptions::accelerated(tol))?;
    let phi0 = f.value(x0) + h.h_eta(x0);
    let v0 = bregman_distance(&Euclidean::new(set.dim()), x0, &sol.x_star)?;
    Ok((phi0 - sol.value + f.strong_convexity() * v0, sol.value))
}

/// ε-solution of `min_x f(x) + max_{y ∈ Y} ⟨Kx, y⟩ − J(y)`: smooth with
/// `η = ε/(2Ω)`, then run enough outer steps for `(1 − γ)^N A ≤ ε/2`.
pub fn solve_spp(
    f: &mut dyn SmoothOracle,
    spec: Arc<SaddleSpec>,
    set: &FeasibleSet,
    x0: &Vector,
    eps: f64,
    opts: &SppOptions,
) -> Result<SppSolution> {
    let (eta, l_eta) = choose_eta(eps, &spec)?;
    let mut h = smooth(spec, eta)?;
    let mu = f.strong_convexity();
    let l = f.lipschitz();
    let params = derive_asgs_params(l, mu, 1.0, l_eta.max(l), opts.c, opts.b)?;
    let (a, f_star) = match opts.rate_constant {
        Some(a) => (a, opts.f_star),
        None => {
            let (a, phi_star) = reference_rate_constant(&*f, &h, set, x0, opts.reference_tol)?;
            (a, opts.f_star.or(Some(phi_star)))
        }
    };
    // A can be 0 when x0 is already optimal
    let n = if a <= eps / 2.0 {
        1
    } else {
        params.outer_count(a, eps / 2.0)?
    };
    let run_opts = AsgsOptions {
        f_star,
        outer_weight: opts.outer_weight,
        inner_budget: opts.inner_budget,
        ..AsgsOptions::default()
    };
    let run = if opts.sigma > 0.0 {
        let mut noisy = Noisy::new(h.clone(), opts.sigma, opts.seed)?;
        run_rf_asgs(f, &mut noisy, set, x0, n, &params, &run_opts)?
    } else {
        run_rf_asgs(f, &mut h, set, x0, n, &params, &run_opts)?
    };
    let smoothed_value = run
        .objectives
        .last()
        .copied()
        .unwrap_or_else(|| f.value(x0) + h.h_eta(x0));
    Ok(SppSolution {
        x: run.x_bar,
        trace: run.trace,
        eta,
        l_eta,
        n,
        params,
        rate_constant: a,
        smoothed_value,
    })
}
