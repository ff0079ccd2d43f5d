//! Ground-truth solver for the acceptance tests: proximal gradient with an
//! exact prox, optionally with monotone strongly convex momentum.

use nalgebra::DMatrix;

use crate::bregman::Vector;
use crate::error::{check_dim, Error, Result};
use crate::oracles::{NonsmoothKind, SimpleTerm, SmoothOracle};
use crate::problem::ProblemSpec;
use crate::prox::FeasibleSet;
use crate::smoothing::SmoothedOracle;

/// `F = s + r` with `s` smooth and `r` prox-friendly (including the set).
pub trait CompositeObjective {
    fn dim(&self) -> usize;
    fn smooth_value(&self, x: &Vector) -> f64;
    fn smooth_gradient(&self, x: &Vector) -> Vector;
    fn smooth_lipschitz(&self) -> f64;
    /// The prox-handled part; the set indicator is implicit.
    fn prox_value(&self, x: &Vector) -> f64;
    /// `argmin_{u ∈ X} r(u) + ‖u − v‖²/(2·step)`.
    fn prox(&self, v: &Vector, step: f64) -> Result<Vector>;
    /// Strong convexity of the prox-handled part.
    fn prox_mu(&self) -> f64;
    /// Strong convexity of `F`.
    fn strong_convexity(&self) -> f64;

    fn value(&self, x: &Vector) -> f64 {
        self.smooth_value(x) + self.prox_value(x)
    }
}

/// Prox of `ρ‖u‖₁ + (μ/2)‖u‖²` over `set`.
fn l1_quadratic_prox(v: &Vector, step: f64, rho: f64, mu: f64, set: &FeasibleSet) -> Result<Vector> {
    let scale = 1.0 / (1.0 + step * mu);
    match *set {
        // ‖u‖₁ is constant on the simplex
        FeasibleSet::Simplex { .. } => set.project(&(v * scale)),
        FeasibleSet::Box { .. } | FeasibleSet::WholeSpace { .. } => {
            let t = step * rho;
            let soft = v.map(|x| x.signum() * (x.abs() - t).max(0.0) * scale);
            set.project(&soft)
        }
    }
}

impl CompositeObjective for ProblemSpec {
    fn dim(&self) -> usize {
        ProblemSpec::dim(self)
    }
    fn smooth_value(&self, x: &Vector) -> f64 {
        self.f.value(x)
    }
    fn smooth_gradient(&self, x: &Vector) -> Vector {
        self.f.peek_gradient(x)
    }
    fn smooth_lipschitz(&self) -> f64 {
        self.f.lipschitz()
    }
    fn prox_value(&self, x: &Vector) -> f64 {
        self.h.value(x) + self.chi.value(x)
    }
    fn prox(&self, v: &Vector, step: f64) -> Result<Vector> {
        let rho = match self.h.kind() {
            NonsmoothKind::Zero => 0.0,
            NonsmoothKind::L1 { rho } => rho,
            NonsmoothKind::Opaque => return Err(Error::UnsupportedProx("opaque nonsmooth term".into())),
        };
        let mu = match &self.chi {
            SimpleTerm::Zero => 0.0,
            SimpleTerm::Quadratic { mu, .. } => *mu,
            SimpleTerm::General { name, .. } => return Err(Error::UnsupportedProx(name.clone())),
        };
        l1_quadratic_prox(v, step, rho, mu, &self.set)
    }
    fn prox_mu(&self) -> f64 {
        self.chi.strong_mu()
    }
    fn strong_convexity(&self) -> f64 {
        self.f.strong_convexity() + self.chi.strong_mu()
    }
}

/// `φ = f + h_η` over `X`, all of it treated as smooth.
pub struct SmoothedComposite<'a> {
    pub f: &'a dyn SmoothOracle,
    pub h: &'a SmoothedOracle,
    pub set: &'a FeasibleSet,
}

impl CompositeObjective for SmoothedComposite<'_> {
    fn dim(&self) -> usize {
        self.set.dim()
    }
    fn smooth_value(&self, x: &Vector) -> f64 {
        self.f.value(x) + self.h.h_eta(x)
    }
    fn smooth_gradient(&self, x: &Vector) -> Vector {
        self.f.peek_gradient(x) + self.h.grad_h_eta(x)
    }
    fn smooth_lipschitz(&self) -> f64 {
        self.f.lipschitz() + self.h.l_eta()
    }
    fn prox_value(&self, _x: &Vector) -> f64 {
        0.0
    }
    fn prox(&self, v: &Vector, _step: f64) -> Result<Vector> {
        self.set.project(v)
    }
    fn prox_mu(&self) -> f64 {
        0.0
    }
    fn strong_convexity(&self) -> f64 {
        self.f.strong_convexity()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefMethod {
    ProximalGradient,
    /// Momentum `(1 − √q)/(1 + √q)`, `q = μ/(L + μ_χ)`, with a plain
    /// prox-gradient step whenever the objective would increase.
    Accelerated,
}

#[derive(Debug, Clone)]
pub struct RefOptions {
    pub method: RefMethod,
    /// Target for the prox-gradient mapping norm.
    pub tol: f64,
    pub max_iter: u64,
    pub record_values: bool,
}

impl Default for RefOptions {
    fn default() -> Self {
        Self {
            method: RefMethod::ProximalGradient,
            tol: 1e-10,
            max_iter: 10_000_000,
            record_values: false,
        }
    }
}

impl RefOptions {
    pub fn accelerated(tol: f64) -> Self {
        Self {
            method: RefMethod::Accelerated,
            tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct RefSolution {
    pub x_star: Vector,
    pub value: f64,
    /// Prox-gradient mapping norm at `x_star`.
    pub certificate: f64,
    pub iterations: u64,
    /// Objective after every iteration, when requested.
    pub values: Vec<f64>,
    /// Upper bound on `F(x_star) − F*` implied by the certificate.
    pub gap_bound: Option<f64>,
}

/// Prox-gradient mapping norm `‖x − prox(x − s∇)‖/s`.
pub fn mapping_norm<P: CompositeObjective + ?Sized>(p: &P, x: &Vector, step: f64) -> Result<f64> {
    let next = p.prox(&(x - p.smooth_gradient(x) * step), step)?;
    Ok((x - next).norm() / step)
}

/// Minimises `p` from `x0` until the mapping norm at step `1/(L + μ_χ)`
/// drops below `opts.tol`.
pub fn solve_reference<P: CompositeObjective + ?Sized>(p: &P, x0: &Vector, opts: &RefOptions) -> Result<RefSolution> {
    check_dim(p.dim(), x0.len())?;
    if !(opts.tol > 0.0) {
        return Err(Error::param(format!("tol must be positive, got {}", opts.tol)));
    }
    let big_l = p.smooth_lipschitz() + p.prox_mu();
    if !(big_l > 0.0) || !big_l.is_finite() {
        return Err(Error::param(format!("invalid Lipschitz constant {big_l}")));
    }
    let step = 1.0 / big_l;
    let mu = p.strong_convexity();
    let momentum = {
        let q = (mu / big_l).clamp(0.0, 1.0).sqrt();
        (1.0 - q) / (1.0 + q)
    };

    let pg = |x: &Vector| -> Result<Vector> { p.prox(&(x - p.smooth_gradient(x) * step), step) };

    let mut x = p.prox(x0, step)?;
    let mut fx = p.value(&x);
    let mut y = x.clone();
    let mut values = Vec::new();
    let mut it = 0u64;
    loop {
        // certificate at the current point
        let x_pg = pg(&x)?;
        let cert = (&x - &x_pg).norm() / step;
        if cert <= opts.tol {
            let gap_bound = (mu > 0.0).then(|| cert * cert / mu);
            return Ok(RefSolution {
                value: fx,
                x_star: x,
                certificate: cert,
                iterations: it,
                values,
                gap_bound,
            });
        }
        if it >= opts.max_iter {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: cert,
            });
        }
        it += 1;
        let (next, f_next) = match opts.method {
            RefMethod::ProximalGradient => {
                let f = p.value(&x_pg);
                (x_pg, f)
            }
            RefMethod::Accelerated => {
                let cand = pg(&y)?;
                let fc = p.value(&cand);
                if fc <= fx {
                    y = &cand + (&cand - &x) * momentum;
                    (cand, fc)
                } else {
                    let f = p.value(&x_pg);
                    y = x_pg.clone();
                    (x_pg, f)
                }
            }
        };
        // a plain prox-gradient step is always taken; near the optimum F can
        // then move by rounding only
        x = next;
        fx = f_next;
        if opts.record_values {
            values.push(fx);
        }
    }
}

/// Exact minimiser of `½uᵀHu + gᵀu` over the simplex by enumerating every
/// support set.
pub fn brute_force_simplex_qp(h: &DMatrix<f64>, g: &Vector) -> Result<Vector> {
    let n = g.len();
    if n == 0 {
        return Err(Error::EmptyVector);
    }
    if n > 8 {
        return Err(Error::Size(n));
    }
    check_dim(n, h.nrows())?;
    check_dim(n, h.ncols())?;
    let mut best: Option<(f64, Vector)> = None;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let s = idx.len();
        // KKT on the face: [H_SS 1; 1ᵀ 0][u; ν] = [−g_S; 1]
        let mut kkt = DMatrix::zeros(s + 1, s + 1);
        let mut rhs = Vector::zeros(s + 1);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                kkt[(a, b)] = h[(i, j)];
            }
            kkt[(a, s)] = 1.0;
            kkt[(s, a)] = 1.0;
            rhs[a] = -g[i];
        }
        rhs[s] = 1.0;
        let Some(sol) = kkt.lu().solve(&rhs) else {
            continue;
        };
        if sol.iter().take(s).any(|&v| v < -1e-12) {
            continue;
        }
        let mut u = Vector::zeros(n);
        for (a, &i) in idx.iter().enumerate() {
            u[i] = sol[a].max(0.0);
        }
        let total = u.sum();
        u /= total;
        let val = 0.5 * u.dot(&(h * &u)) + g.dot(&u);
        if best.as_ref().is_none_or(|(bv, _)| val < *bv) {
            best = Some((val, u));
        }
    }
    best.map(|(_, u)| u)
        .ok_or_else(|| Error::param("no feasible support set; H is not positive definite"))
}
