//! Restart-free stochastic gradient sliding for `min f + h + χ` with a
//! strongly convex simple term `χ`.
//!
//! One gradient of `f` per outer step is reused across `T_k` cheap
//! subgradient prox steps on `h`. The schedule
//!
//! ```text
//! c   = r / (1 + r),  r = √(L/(μν))
//! β   = L(1 − c)/ν,   γ = 1 − c
//! T_k = ⌈c^{−k/2} (β+μ)(1−c) / (c(β+μ) − β)⌉
//! p_t = ((β+μ)/β) c^{−k/2}
//! θ_t = (1 − ρ) / (1 − ρ^t),  ρ = 1/(1 + c^{k/2})
//! ```
//!
//! grows the inner budget geometrically instead of restarting, and gives
//! `E[Ψ(x̄_N) − Ψ*] ≤ c^{N/2}·A`.

use std::time::Instant;

use crate::bregman::{bregman_distance, DistanceGenerator, Vector};
use crate::error::{Error, Result};
use crate::oracles::{SimpleTerm, SubgradientOracle};
use crate::problem::ProblemSpec;
use crate::prox::{sliding_prox, FeasibleSet};
use crate::trace::{RunTrace, TraceRecord};

/// Outer indices beyond this are rejected; `c^{k/2}` is meaningless there.
pub const MAX_OUTER: u64 = 10_000;

/// Default cap on `Σ T_k` for a single run.
pub const DEFAULT_INNER_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RfSgsParams {
    pub c: f64,
    pub beta: f64,
    pub gamma: f64,
    pub l: f64,
    pub mu: f64,
    pub nu: f64,
    /// `(β+μ)(1−c) / (c(β+μ) − β)`, the `k`-independent factor of `T_k`.
    inner_base: f64,
}

pub fn derive_sgs_params(l: f64, mu: f64, nu: f64) -> Result<RfSgsParams> {
    for (name, v) in [("L", l), ("mu", mu), ("nu", nu)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::param(format!("{name} must be positive and finite, got {v}")));
        }
    }
    let r = (l / (mu * nu)).sqrt();
    let c = r / (1.0 + r);
    let gamma = 1.0 / (1.0 + r);
    let beta = l / nu * gamma;
    let slack = c * (beta + mu) - beta;
    if !(slack > 0.0) {
        return Err(Error::param(format!(
            "c(β+μ) − β = {slack:e} is not positive; L/(μν) = {} is out of floating-point range",
            r * r
        )));
    }
    Ok(RfSgsParams {
        c,
        beta,
        gamma,
        l,
        mu,
        nu,
        inner_base: (beta + mu) * (1.0 - c) / slack,
    })
}

impl RfSgsParams {
    /// `c^{k/2}`, evaluated in log space.
    pub fn half_power(&self, k: u64) -> f64 {
        (0.5 * k as f64 * self.c.ln()).exp()
    }

    pub fn inner_base(&self) -> f64 {
        self.inner_base
    }

    /// `T_k`.
    pub fn inner_count(&self, k: u64) -> u64 {
        assert!((1..=MAX_OUTER).contains(&k), "outer index {k} out of range");
        let t = (self.inner_base * (-0.5 * k as f64 * self.c.ln()).exp()).ceil();
        (t as u64).max(1)
    }

    /// `Σ_{k=1}^{n} T_k`.
    pub fn total_inner(&self, n: u64) -> u64 {
        (1..=n).map(|k| self.inner_count(k)).sum()
    }

    /// `p_t`; constant in `t`.
    pub fn p(&self, k: u64) -> f64 {
        (self.beta + self.mu) / self.beta / self.half_power(k)
    }

    /// `θ_t`, with `θ_1 = 1` exactly.
    pub fn theta(&self, k: u64, t: u64) -> f64 {
        if t == 1 {
            return 1.0;
        }
        let s = self.half_power(k);
        // 1 − ρ = s/(1+s), 1 − ρ^t = −expm1(−t·ln(1+s))
        (s / (1.0 + s)) / -(-(t as f64) * s.ln_1p()).exp_m1()
    }

    /// `A = Δ₀ + (β+μ)(1−c)V(x₀,x*) + 2(M²+σ²)/(ν(β+μ))`.
    pub fn rate_constant(&self, delta0: f64, v0: f64, m: f64, sigma: f64) -> f64 {
        delta0
            + (self.beta + self.mu) * (1.0 - self.c) * v0
            + 2.0 * (m * m + sigma * sigma) / (self.nu * (self.beta + self.mu))
    }

    /// `c^{N/2}·A`.
    pub fn rate_bound(&self, n: u64, a: f64) -> f64 {
        self.half_power(n) * a
    }
}

/// The analysis weights `w_t`, `W_t`, `Γ_k` built from the parameters by
/// their defining recursions rather than the closed forms.
#[derive(Debug, Clone, Copy)]
pub struct ScheduleWeights {
    params: RfSgsParams,
}

impl ScheduleWeights {
    pub fn new(params: RfSgsParams) -> Self {
        Self { params }
    }

    /// `w_t = (β+μ)/(β(1+p_t)+μ)`.
    pub fn w(&self, k: u64, _t: u64) -> f64 {
        let RfSgsParams { beta, mu, .. } = self.params;
        (beta + mu) / (beta * (1.0 + self.params.p(k)) + mu)
    }

    /// `W_t = Π_{i≤t}(1 − w_i)`, `W_0 = 1`.
    pub fn big_w(&self, k: u64, t: u64) -> f64 {
        (1..=t).fold(1.0, |acc, i| acc * (1.0 - self.w(k, i)))
    }

    /// `(1/(1+c^{k/2}))^t`.
    pub fn big_w_closed(&self, k: u64, t: u64) -> f64 {
        (-(t as f64) * self.params.half_power(k).ln_1p()).exp()
    }

    /// `Γ_k = Π_{i≤k}(1 − γ)`, `Γ_0 = 1`.
    pub fn big_gamma(&self, k: u64) -> f64 {
        (1..=k).fold(1.0, |acc, _| acc * (1.0 - self.params.gamma))
    }

    /// `(W_{t−1} − W_t)/((1 − W_t)W_{t−1})`.
    pub fn theta_from_weights(&self, k: u64, t: u64) -> f64 {
        let prev = self.big_w(k, t - 1);
        let cur = self.big_w(k, t);
        (prev - cur) / ((1.0 - cur) * prev)
    }
}

/// Result of one inner loop.
#[derive(Debug, Clone)]
pub struct InnerOutput {
    /// `x_k = u_{T_k}`
    pub last: Vector,
    /// `x̃_k = ũ_{T_k}`
    pub averaged: Vector,
}

/// Steps 4–9 of the outer iteration `k`: `T_k` prox steps that all reuse
/// `grad_fx = ∇f(x̲_k)`.
#[allow(clippy::too_many_arguments)]
pub fn sgs_inner_loop<H: SubgradientOracle + ?Sized>(
    params: &RfSgsParams,
    k: u64,
    grad_fx: &Vector,
    x_prev: &Vector,
    h: &mut H,
    chi: &SimpleTerm,
    set: &FeasibleSet,
) -> Result<InnerOutput> {
    sgs_inner_loop_observed(params, k, grad_fx, x_prev, h, chi, set, |_, _| {})
}

/// [`sgs_inner_loop`] with a callback receiving each `(t, u_t)`.
#[allow(clippy::too_many_arguments)]
pub fn sgs_inner_loop_observed<H: SubgradientOracle + ?Sized>(
    params: &RfSgsParams,
    k: u64,
    grad_fx: &Vector,
    x_prev: &Vector,
    h: &mut H,
    chi: &SimpleTerm,
    set: &FeasibleSet,
    mut observe: impl FnMut(u64, &Vector),
) -> Result<InnerOutput> {
    let steps = params.inner_count(k);
    let weight = params.beta * params.p(k);
    let mut u = x_prev.clone();
    let mut averaged = x_prev.clone();
    for t in 1..=steps {
        let mut g = h.sample(&u);
        g += grad_fx;
        let next = sliding_prox(&g, chi, set, params.beta, x_prev, weight, &u)?;
        let theta = params.theta(k, t);
        averaged *= 1.0 - theta;
        averaged.axpy(theta, &next, 1.0);
        observe(t, &next);
        u = next;
    }
    Ok(InnerOutput { last: u, averaged })
}

/// Composite prox-gradient mapping `‖x − x⁺‖/step` with
/// `x⁺ = argmin_X ⟨∇f(x) + h'(x), u⟩ + χ(u) + V(x,u)/step`, using exact
/// (noise-free, uncounted) first-order information.
pub fn grad_mapping_norm(problem: &ProblemSpec, x: &Vector, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::param(format!("step must be > 0, got {step}")));
    }
    let g = problem.f.peek_gradient(x) + problem.h.subgradient(x);
    let next = sliding_prox(&g, &problem.chi, &problem.set, 1.0 / step, x, 0.0, x)?;
    Ok((x - next).norm() / step)
}

/// `N = ⌈2 log(A/ε) / log(1/c)⌉`, at least 1.
pub fn compute_bound_n(a: f64, eps: f64, c: f64) -> Result<u64> {
    if !(a > 0.0 && eps > 0.0) {
        return Err(Error::param("A and eps must be positive"));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::param(format!("c must lie in (0, 1), got {c}")));
    }
    let n = (2.0 * (a / eps).ln() / (1.0 / c).ln()).ceil();
    Ok(if n < 1.0 { 1 } else { n as u64 })
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Optimal value used for the `objective_gap` column.
    pub f_star: Option<f64>,
    pub inner_budget: u64,
    /// Keep `(x_k, x̃_k, x̄_k)` for every outer step.
    pub keep_iterates: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            f_star: None,
            inner_budget: DEFAULT_INNER_BUDGET,
            keep_iterates: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OuterIterates {
    pub x: Vector,
    pub x_tilde: Vector,
    pub x_bar: Vector,
}

#[derive(Debug, Clone)]
pub struct SgsRun {
    pub trace: RunTrace,
    /// `Ψ(x̄_k)` for `k = 1..N`.
    pub objectives: Vec<f64>,
    pub x_bar: Vector,
    pub x_last: Vector,
    pub iterates: Vec<OuterIterates>,
}

/// Runs `n` outer iterations from `x0`.
pub fn run_rf_sgs(
    problem: &mut ProblemSpec,
    x0: &Vector,
    n: u64,
    params: &RfSgsParams,
    opts: &RunOptions,
) -> Result<SgsRun> {
    let mu = problem.mu();
    if !(mu > 0.0) {
        return Err(Error::StrongConvexityRequired(mu));
    }
    crate::error::check_dim(problem.dim(), x0.len())?;
    if !problem.set.contains(x0, 1e-9) {
        return Err(Error::param("x0 is not in the feasible set"));
    }
    if n > MAX_OUTER {
        return Err(Error::param(format!("N = {n} exceeds the outer cap {MAX_OUTER}")));
    }
    let needed = params.total_inner(n);
    if needed > opts.inner_budget {
        return Err(Error::BudgetExceeded {
            needed,
            cap: opts.inner_budget,
        });
    }

    let start = Instant::now();
    let gamma = params.gamma;
    let step = 1.0 / problem.lipschitz();
    let mut x = x0.clone();
    let mut x_bar = x0.clone();
    let mut trace = RunTrace::new();
    let mut objectives = Vec::with_capacity(n as usize);
    let mut iterates = Vec::new();

    for k in 1..=n {
        let x_low = &x_bar * (1.0 - gamma) + &x * gamma;
        let grad = problem.f.gradient(&x_low);
        let inner = sgs_inner_loop(params, k, &grad, &x, &mut problem.h, &problem.chi, &problem.set)?;
        x_bar *= 1.0 - gamma;
        x_bar.axpy(gamma, &inner.averaged, 1.0);
        x = inner.last;
        if opts.keep_iterates {
            iterates.push(OuterIterates {
                x: x.clone(),
                x_tilde: inner.averaged,
                x_bar: x_bar.clone(),
            });
        }

        let objective = problem.objective(&x_bar);
        objectives.push(objective);
        trace.push(TraceRecord {
            k: k as usize,
            objective_gap: opts.f_star.map(|fs| objective - fs),
            grad_map_norm: grad_mapping_norm(problem, &x_bar, step)?,
            grad_f_count: problem.grad_count(),
            subgrad_h_count: problem.subgrad_count(),
            elapsed_seconds: start.elapsed().as_secs_f64(),
        });
    }

    Ok(SgsRun {
        trace,
        objectives,
        x_bar,
        x_last: x,
        iterates,
    })
}

/// `V(x₀, x*)` under the problem's distance generator.
pub fn initial_distance(problem: &ProblemSpec, x0: &Vector, x_star: &Vector) -> Result<f64> {
    bregman_distance(&problem.dg, x0, x_star)
}

/// Convenience: `ν` of the problem's generator.
pub fn modulus(problem: &ProblemSpec) -> f64 {
    problem.dg.modulus()
}
