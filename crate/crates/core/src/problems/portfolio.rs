//! Mean-variance portfolio selection on the simplex:
//! `min_{w ∈ Δ} (τ/2)wᵀΣw − qᵀw + ρ‖w‖₁`, `Σ = Σ0 + μI`.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bregman::Vector;
use crate::error::{Error, Result};
use crate::oracles::{Hessian, L1Term, QuadraticOracle, ShiftedSmooth, SimpleTerm};
use crate::problem::ProblemSpec;
use crate::prox::FeasibleSet;

/// Largest eigenvalue of the generated `Σ0`.
pub const SIGMA0_TOP: f64 = 0.4;
/// Target condition number of `Σ0`.
pub const SIGMA0_COND: f64 = 8000.0;

#[derive(Debug, Clone)]
pub struct PortfolioInstance {
    pub sigma0: DMatrix<f64>,
    pub mu_reg: f64,
    pub q_returns: Vector,
    pub tau: f64,
    pub rho: f64,
    pub seed: u64,
}

impl PortfolioInstance {
    pub fn dim(&self) -> usize {
        self.q_returns.len()
    }

    /// `Σ0 + μI`.
    pub fn sigma(&self) -> DMatrix<f64> {
        &self.sigma0 + DMatrix::identity(self.dim(), self.dim()) * self.mu_reg
    }

    /// The unshifted objective.
    pub fn objective(&self, w: &Vector) -> f64 {
        0.5 * self.tau * w.dot(&(self.sigma() * w)) - self.q_returns.dot(w) + self.rho * w.lp_norm(1)
    }
}

/// Condition number of a symmetric positive definite matrix.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let ev = SymmetricEigen::new(m.clone()).eigenvalues;
    ev.max() / ev.min()
}

/// Seeded factor-model covariance, remapped affinely so that its spectrum
/// spans `[SIGMA0_TOP/SIGMA0_COND, SIGMA0_TOP]`.
fn factor_covariance(n: usize, rng: &mut ChaCha8Rng) -> Result<DMatrix<f64>> {
    let k = (n / 10).max(2);
    let b = DMatrix::from_fn(n, k, |_, _| -> f64 { StandardNormal.sample(&mut *rng) });
    let d = Vector::from_fn(n, |_, _| rng.random_range(0.01..0.1));
    let cov = &b * b.transpose() / k as f64 + DMatrix::from_diagonal(&d);
    let ev = SymmetricEigen::new(cov.clone()).eigenvalues;
    let (lo, hi) = (ev.min(), ev.max());
    if !(hi > lo) {
        return Err(Error::param("degenerate factor covariance"));
    }
    let target_lo = SIGMA0_TOP / SIGMA0_COND;
    let a = (SIGMA0_TOP - target_lo) / (hi - lo);
    let shift = SIGMA0_TOP - a * hi;
    let mut out = cov * a + DMatrix::identity(n, n) * shift;
    out = (&out + out.transpose()) * 0.5;
    Ok(out)
}

pub fn make_portfolio(
    n: usize,
    seed: u64,
    tau: f64,
    rho: f64,
    mu_reg: f64,
) -> Result<(PortfolioInstance, ProblemSpec)> {
    if n < 2 {
        return Err(Error::param(format!("portfolio needs n >= 2, got {n}")));
    }
    if !(tau > 0.0) || !(mu_reg > 0.0) || !(rho >= 0.0) {
        return Err(Error::param("portfolio needs tau > 0, mu_reg > 0, rho >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma0 = factor_covariance(n, &mut rng)?;
    let q_returns = Vector::from_fn(n, |_, _| {
        let z: f64 = StandardNormal.sample(&mut rng);
        0.05 + 0.02 * z
    });
    let inst = PortfolioInstance {
        sigma0,
        mu_reg,
        q_returns,
        tau,
        rho,
        seed,
    };
    let spec = portfolio_problem(&inst)?;
    Ok((inst, spec))
}

/// Builds the composite form with `τμ` moved into `χ`.
pub fn portfolio_problem(inst: &PortfolioInstance) -> Result<ProblemSpec> {
    let n = inst.dim();
    let sigma = inst.sigma();
    let ev = SymmetricEigen::new(sigma.clone()).eigenvalues;
    let f = QuadraticOracle::new(
        Hessian::Dense(sigma * inst.tau),
        inst.q_returns.clone(),
        0.0,
        inst.tau * ev.max(),
        inst.tau * ev.min().max(inst.mu_reg),
    )?;
    let shift = inst.tau * inst.mu_reg;
    ProblemSpec::new(
        Box::new(ShiftedSmooth::new(f, shift)?),
        Box::new(L1Term::new(inst.rho, n)?),
        SimpleTerm::quadratic(shift),
        FeasibleSet::Simplex { dim: n },
    )
}
