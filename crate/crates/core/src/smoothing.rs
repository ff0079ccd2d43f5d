//! Nesterov smoothing of `h(x) = max_{y ∈ Y} ⟨Kx, y⟩ − J(y)`.
//!
//! With `d(y) = ½‖y − y_s‖²` on a box `Y`, the smoothed term
//! `h_η(x) = max_y ⟨Kx, y⟩ − J(y) − η d(y)` has the explicit maximiser
//! `y*(x) = clip(y_s + (Kx − c_J)/η)` and gradient `Kᵀy*(x)`, which is
//! `L_η = ‖K‖²/(η μ_s)`-Lipschitz.

use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::bregman::Vector;
use crate::error::{check_dim, Error, Result};
use crate::oracles::{gaussian_draw, SubgradientOracle};

/// A linear map `K: ℝⁿ → ℝᵐ` together with its adjoint.
pub trait LinearOperator: Send + Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn apply(&self, x: &Vector) -> Vector;
    fn apply_t(&self, y: &Vector) -> Vector;
    /// `‖K‖` when it is known in closed form.
    fn known_norm(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone)]
pub struct DenseOperator(pub DMatrix<f64>);

impl LinearOperator for DenseOperator {
    fn input_dim(&self) -> usize {
        self.0.ncols()
    }
    fn output_dim(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &Vector) -> Vector {
        &self.0 * x
    }
    fn apply_t(&self, y: &Vector) -> Vector {
        self.0.tr_mul(y)
    }
}

/// The dual term `J`.
#[derive(Debug, Clone, PartialEq)]
pub enum DualTerm {
    Zero,
    /// `J(y) = ⟨c, y⟩`
    Linear(Vector),
    /// Anything without a closed-form inner maximiser.
    Other,
}

/// Largest eigenvalue of `KᵀK` by power iteration from a fixed seeded start.
pub fn power_iteration_gram(op: &dyn LinearOperator, iters: usize, seed: u64) -> f64 {
    let n = op.input_dim();
    let mut v = gaussian_draw(seed, 0, n, 1.0);
    let nv = v.norm();
    if nv == 0.0 {
        return 0.0;
    }
    v /= nv;
    let mut est = 0.0;
    for _ in 0..iters {
        let w = op.apply_t(&op.apply(&v));
        est = v.dot(&w);
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        v = w / nw;
    }
    est
}

/// `‖K‖` from 200 power iterations, inflated by `1 + 1e-6`.
pub fn estimate_op_norm(op: &dyn LinearOperator) -> f64 {
    power_iteration_gram(op, 200, 0x5eed).max(0.0).sqrt() * (1.0 + 1e-6)
}

/// `min_x f(x) + max_{y ∈ Y} ⟨Kx, y⟩ − J(y)` with `Y = [lo, hi]ᵐ`.
pub struct SaddleSpec {
    op: Arc<dyn LinearOperator>,
    lo: f64,
    hi: f64,
    j: DualTerm,
    y_s: Vector,
    op_norm: f64,
    k_count: AtomicU64,
}

impl fmt::Debug for SaddleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SaddleSpec")
            .field("n", &self.op.input_dim())
            .field("m", &self.op.output_dim())
            .field("box", &(self.lo, self.hi))
            .field("op_norm", &self.op_norm)
            .field("k_count", &self.k_count())
            .finish()
    }
}

impl SaddleSpec {
    /// `op_norm` overrides both the operator's closed form and the
    /// power-iteration estimate.
    pub fn new(op: Arc<dyn LinearOperator>, lo: f64, hi: f64, j: DualTerm, op_norm: Option<f64>) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::param("dual set must be bounded"));
        }
        if lo > hi {
            return Err(Error::param(format!("dual box bounds out of order: [{lo}, {hi}]")));
        }
        let m = op.output_dim();
        if let DualTerm::Linear(c) = &j {
            check_dim(m, c.len())?;
        }
        let op_norm = match op_norm.or_else(|| op.known_norm()) {
            Some(v) if v >= 0.0 && v.is_finite() => v,
            Some(v) => return Err(Error::param(format!("operator norm must be finite and >= 0, got {v}"))),
            None => estimate_op_norm(op.as_ref()),
        };
        // prox center of s = ½‖·‖² on the box
        let y_s = Vector::from_element(m, 0.0f64.clamp(lo, hi));
        Ok(Self {
            op,
            lo,
            hi,
            j,
            y_s,
            op_norm,
            k_count: AtomicU64::new(0),
        })
    }

    pub fn operator(&self) -> &Arc<dyn LinearOperator> {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.input_dim()
    }

    pub fn dual_dim(&self) -> usize {
        self.op.output_dim()
    }

    pub fn op_norm(&self) -> f64 {
        self.op_norm
    }

    pub fn dual_bounds(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn dual_term(&self) -> &DualTerm {
        &self.j
    }

    /// Modulus of `s = ½‖·‖²`.
    pub fn mu_s(&self) -> f64 {
        1.0
    }

    /// `d(y) = ½‖y − y_s‖²`.
    pub fn d(&self, y: &Vector) -> f64 {
        0.5 * (y - &self.y_s).norm_squared()
    }

    /// `Ω = max_{y ∈ Y} d(y)`.
    pub fn omega(&self) -> f64 {
        let ys = self.y_s.get(0).copied().unwrap_or(0.0);
        let r = (self.lo - ys).abs().max((self.hi - ys).abs());
        0.5 * r * r * self.dual_dim() as f64
    }

    /// Counted `Kx`.
    pub fn apply_k(&self, x: &Vector) -> Vector {
        self.k_count.fetch_add(1, Ordering::Relaxed);
        self.op.apply(x)
    }

    /// Counted `Kᵀy`.
    pub fn apply_kt(&self, y: &Vector) -> Vector {
        self.k_count.fetch_add(1, Ordering::Relaxed);
        self.op.apply_t(y)
    }

    pub fn k_count(&self) -> u64 {
        self.k_count.load(Ordering::Relaxed)
    }

    pub fn reset_counters(&self) {
        self.k_count.store(0, Ordering::Relaxed);
    }

    fn shifted(&self, kx: Vector) -> Vector {
        match &self.j {
            DualTerm::Linear(c) => kx - c,
            _ => kx,
        }
    }

    /// Exact `h(x)`, uncounted. For `J ≡ 0` on `[−1, 1]` this is `‖Kx‖₁`.
    pub fn h_exact(&self, x: &Vector) -> Result<f64> {
        if self.j == DualTerm::Other {
            return Err(Error::UnsupportedSmoothing);
        }
        let v = self.shifted(self.op.apply(x));
        Ok(v.iter().map(|&t| (t * self.lo).max(t * self.hi)).sum())
    }

    /// An exact subgradient of `h`, uncounted.
    pub fn h_subgradient(&self, x: &Vector) -> Result<Vector> {
        if self.j == DualTerm::Other {
            return Err(Error::UnsupportedSmoothing);
        }
        let v = self.shifted(self.op.apply(x));
        let y = v.map(|t| {
            if t > 0.0 {
                self.hi
            } else if t < 0.0 {
                self.lo
            } else {
                0.0f64.clamp(self.lo, self.hi)
            }
        });
        Ok(self.op.apply_t(&y))
    }

    fn maximiser(&self, v: &Vector, eta: f64) -> Vector {
        Vector::from_iterator(
            v.len(),
            v.iter()
                .zip(self.y_s.iter())
                .map(|(&t, &ys)| (ys + t / eta).clamp(self.lo, self.hi)),
        )
    }

    fn smoothed_value(&self, v: &Vector, eta: f64) -> f64 {
        let y = self.maximiser(v, eta);
        v.dot(&y) - eta * self.d(&y)
    }
}

/// Gradient oracle for `h_η`. Each `sample` costs one `K` and one `Kᵀ`.
#[derive(Debug, Clone)]
pub struct SmoothedOracle {
    spec: Arc<SaddleSpec>,
    eta: f64,
    l_eta: f64,
    count: u64,
}

impl SmoothedOracle {
    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn l_eta(&self) -> f64 {
        self.l_eta
    }

    pub fn spec(&self) -> &Arc<SaddleSpec> {
        &self.spec
    }

    pub fn h_eta(&self, x: &Vector) -> f64 {
        let v = self.spec.shifted(self.spec.op.apply(x));
        self.spec.smoothed_value(&v, self.eta)
    }

    /// `∇h_η(x)`, uncounted.
    pub fn grad_h_eta(&self, x: &Vector) -> Vector {
        let v = self.spec.shifted(self.spec.op.apply(x));
        self.spec.op.apply_t(&self.spec.maximiser(&v, self.eta))
    }

    /// The dual maximiser `y*(x)`.
    pub fn dual_point(&self, x: &Vector) -> Vector {
        let v = self.spec.shifted(self.spec.op.apply(x));
        self.spec.maximiser(&v, self.eta)
    }
}

impl SubgradientOracle for SmoothedOracle {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn value(&self, x: &Vector) -> f64 {
        self.h_eta(x)
    }

    fn subgradient(&self, x: &Vector) -> Vector {
        self.grad_h_eta(x)
    }

    fn sample(&mut self, x: &Vector) -> Vector {
        self.count += 1;
        let v = self.spec.shifted(self.spec.apply_k(x));
        let y = self.spec.maximiser(&v, self.eta);
        self.spec.apply_kt(&y)
    }

    /// `‖K‖ · max_{y ∈ Y} ‖y‖`.
    fn lipschitz_m(&self) -> f64 {
        let r = self.spec.lo.abs().max(self.spec.hi.abs());
        self.spec.op_norm * r * (self.spec.dual_dim() as f64).sqrt()
    }

    fn sample_count(&self) -> u64 {
        self.count
    }

    fn reset_counters(&mut self) {
        self.count = 0;
    }
}

/// Builds the `h_η` oracle.
pub fn smooth(spec: Arc<SaddleSpec>, eta: f64) -> Result<SmoothedOracle> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::param(format!("eta must be positive, got {eta}")));
    }
    if spec.j == DualTerm::Other {
        return Err(Error::UnsupportedSmoothing);
    }
    let l_eta = spec.op_norm * spec.op_norm / (eta * spec.mu_s());
    Ok(SmoothedOracle {
        spec,
        eta,
        l_eta,
        count: 0,
    })
}

/// `η = ε/(2Ω)` and `L_η = 2Ω‖K‖²/(μ_s ε)`.
pub fn choose_eta(eps: f64, spec: &SaddleSpec) -> Result<(f64, f64)> {
    if !(eps > 0.0) {
        return Err(Error::param(format!("eps must be positive, got {eps}")));
    }
    let omega = spec.omega();
    if omega == 0.0 {
        return Err(Error::param("Omega = 0: h is affine and needs no smoothing"));
    }
    let eta = eps / (2.0 * omega);
    let l_eta = 2.0 * omega * spec.op_norm * spec.op_norm / (spec.mu_s() * eps);
    Ok((eta, l_eta))
}

/// `(h_η(x) ≤ h(x), h(x) ≤ h_η(x) + ηΩ)`, each with `1e-10` slack.
pub fn sandwich_check(spec: &SaddleSpec, oracle: &SmoothedOracle, x: &Vector) -> Result<(bool, bool)> {
    let h = spec.h_exact(x)?;
    let he = oracle.h_eta(x);
    Ok((he <= h + 1e-10, h <= he + oracle.eta * spec.omega() + 1e-10))
}

/// `t²/(2η)` for `|t| ≤ η`, else `|t| − η/2`.
pub fn huber(t: f64, eta: f64) -> f64 {
    if t.abs() <= eta {
        t * t / (2.0 * eta)
    } else {
        t.abs() - eta / 2.0
    }
}
