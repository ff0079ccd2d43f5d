//! Strongly convex QP `½xᵀAx − bᵀx + ρ‖x‖₁` with a prescribed spectrum.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bregman::Vector;
use crate::error::{check_dim, Error, Result};
use crate::oracles::{Hessian, L1Term, Noisy, QuadraticOracle, ShiftedSmooth, SimpleTerm, SubgradientOracle};
use crate::problem::ProblemSpec;
use crate::prox::FeasibleSet;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SetKind {
    Simplex,
    Box { lo: f64, hi: f64 },
    WholeSpace,
}

impl SetKind {
    pub fn build(self, dim: usize) -> Result<FeasibleSet> {
        Ok(match self {
            SetKind::Simplex => FeasibleSet::Simplex { dim },
            SetKind::Box { lo, hi } => {
                if !(lo <= hi) {
                    return Err(Error::param(format!("box bounds out of order: [{lo}, {hi}]")));
                }
                FeasibleSet::Box { lo, hi, dim }
            }
            SetKind::WholeSpace => FeasibleSet::WholeSpace { dim },
        })
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticQp {
    pub a: DMatrix<f64>,
    pub b: Vector,
    pub rho: f64,
    pub set: FeasibleSet,
    pub mu_f: f64,
    pub l_f: f64,
}

impl SyntheticQp {
    /// Uses `a` as given; `mu_f`/`l_f` must bound its spectrum.
    pub fn from_parts(a: DMatrix<f64>, b: Vector, rho: f64, set: FeasibleSet, mu_f: f64, l_f: f64) -> Result<Self> {
        check_dim(set.dim(), b.len())?;
        check_dim(set.dim(), a.nrows())?;
        check_dim(set.dim(), a.ncols())?;
        if !(mu_f > 0.0) || !(mu_f <= l_f) {
            return Err(Error::param(format!("need 0 < mu_f <= L_f, got {mu_f}, {l_f}")));
        }
        if !(rho >= 0.0) {
            return Err(Error::param(format!("rho must be >= 0, got {rho}")));
        }
        Ok(Self {
            a,
            b,
            rho,
            set,
            mu_f,
            l_f,
        })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// `f = ½xᵀAx − bᵀx − (μ_f/2)‖x‖²`, `χ = (μ_f/2)‖x‖²`, `h = ρ‖x‖₁`
    /// with Gaussian noise of level `sigma` on `h'` when `sigma > 0`.
    pub fn problem(&self, sigma: f64, seed: u64) -> Result<ProblemSpec> {
        let n = self.dim();
        let f = QuadraticOracle::new(Hessian::Dense(self.a.clone()), self.b.clone(), 0.0, self.l_f, self.mu_f)?;
        let f = ShiftedSmooth::new(f, self.mu_f)?;
        let l1 = L1Term::new(self.rho, n)?;
        let h: Box<dyn SubgradientOracle> = if sigma > 0.0 {
            Box::new(Noisy::new(l1, sigma, seed)?)
        } else if sigma == 0.0 {
            Box::new(l1)
        } else {
            return Err(Error::param(format!("sigma must be >= 0, got {sigma}")));
        };
        ProblemSpec::new(Box::new(f), h, SimpleTerm::quadratic(self.mu_f), self.set)
    }
}

/// Random `A = Qᵀ diag(λ) Q` with `λ` evenly spread over `[mu_f, l_f]`.
pub fn make_qp(
    n: usize,
    mu_f: f64,
    l_f: f64,
    rho: f64,
    set_kind: SetKind,
    seed: u64,
) -> Result<(SyntheticQp, ProblemSpec)> {
    if n == 0 {
        return Err(Error::param("n must be >= 1"));
    }
    if !(mu_f > 0.0) {
        return Err(Error::param(format!("mu_f must be > 0, got {mu_f}")));
    }
    if !(l_f >= mu_f) {
        return Err(Error::param(format!("L_f must be >= mu_f, got {l_f}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let g = DMatrix::from_fn(n, n, |_, _| normal());
    let q = g.qr().q();
    let eig = Vector::from_fn(n, |i, _| {
        if n == 1 {
            mu_f
        } else {
            mu_f + (l_f - mu_f) * i as f64 / (n - 1) as f64
        }
    });
    let a = q.transpose() * DMatrix::from_diagonal(&eig) * &q;
    let a = (&a + a.transpose()) * 0.5;
    let b = Vector::from_fn(n, |_, _| normal());
    let qp = SyntheticQp::from_parts(a, b, rho, set_kind.build(n)?, mu_f, l_f)?;
    let spec = qp.problem(0.0, seed)?;
    Ok((qp, spec))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reference::{brute_force_simplex_qp, solve_reference, RefOptions};

    #[test]
    fn spectrum_in_range() {
        let (qp, _) = make_qp(12, 0.5, 20.0, 0.0, SetKind::WholeSpace, 4).unwrap();
        let ev = qp.a.clone().symmetric_eigen().eigenvalues;
        assert!(ev.min() >= 0.5 - 1e-10 && ev.max() <= 20.0 + 1e-10);
        assert!((ev.max() - 20.0).abs() < 1e-9 && (ev.min() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_mu() {
        assert!(matches!(
            make_qp(3, 0.0, 1.0, 0.0, SetKind::Simplex, 0),
            Err(Error::Param(_))
        ));
        assert!(matches!(
            make_qp(3, 2.0, 1.0, 0.0, SetKind::Simplex, 0),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn scalar_and_symmetric_examples() {
        let qp = SyntheticQp::from_parts(
            DMatrix::from_element(1, 1, 2.0),
            Vector::from_element(1, 4.0),
            0.0,
            FeasibleSet::WholeSpace { dim: 1 },
            2.0,
            2.0,
        )
        .unwrap();
        let p = qp.problem(0.0, 0).unwrap();
        let sol = solve_reference(&p, &Vector::zeros(1), &RefOptions::default()).unwrap();
        assert!((sol.x_star[0] - 2.0).abs() < 1e-10 && (sol.value + 4.0).abs() < 1e-10);

        let qp = SyntheticQp::from_parts(
            DMatrix::identity(2, 2),
            Vector::from_element(2, 1.0),
            0.0,
            FeasibleSet::Simplex { dim: 2 },
            1.0,
            1.0,
        )
        .unwrap();
        let p = qp.problem(0.0, 0).unwrap();
        let sol = solve_reference(&p, &Vector::from_row_slice(&[0.9, 0.1]), &RefOptions::default()).unwrap();
        assert!((&sol.x_star - Vector::from_element(2, 0.5)).amax() < 1e-10);
    }

    #[test]
    fn reference_matches_enumeration_with_l1() {
        // ρ‖x‖₁ = ρ on the simplex, so it only shifts the value
        let (qp, p) = make_qp(5, 1.0, 10.0, 0.1, SetKind::Simplex, 7).unwrap();
        let sol = solve_reference(&p, &p.set.center(), &RefOptions::default()).unwrap();
        let u = brute_force_simplex_qp(&qp.a, &(-&qp.b)).unwrap();
        let val = 0.5 * u.dot(&(&qp.a * &u)) - qp.b.dot(&u) + 0.1;
        assert!((sol.value - val).abs() < 1e-8);
        assert!((&sol.x_star - &u).amax() < 1e-7);
    }
}
