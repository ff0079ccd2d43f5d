//! First-order oracles with exact call accounting.
//!
//! Algorithms only ever call the counting entry points (`gradient`,
//! `sample`). Reporting code uses the `peek_*`/exact variants, which never
//! touch the counters, so the counts in a trace are exactly the oracle
//! complexity of the run.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bregman::Vector;
use crate::error::{Error, Result};

/// Smooth convex `f` with `L`-Lipschitz gradient.
pub trait SmoothOracle: Send {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    /// `∇f(x)` without touching the counter.
    fn peek_gradient(&self, x: &Vector) -> Vector;
    fn lipschitz(&self) -> f64;
    fn strong_convexity(&self) -> f64;
    fn grad_count(&self) -> u64;
    fn reset_counters(&mut self);
    fn bump_grad_count(&mut self);

    /// Counted gradient evaluation.
    fn gradient(&mut self, x: &Vector) -> Vector {
        self.bump_grad_count();
        self.peek_gradient(x)
    }
}

/// How a nonsmooth term can be handled by an exact prox, if at all.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NonsmoothKind {
    Zero,
    L1 { rho: f64 },
    Opaque,
}

/// Nonsmooth convex `h` accessed through a (possibly noisy) subgradient oracle.
pub trait SubgradientOracle: Send {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    /// An exact subgradient `h'(x)`; never counted.
    fn subgradient(&self, x: &Vector) -> Vector;
    /// `H(x, ξ)`; counted.
    fn sample(&mut self, x: &Vector) -> Vector;
    fn lipschitz_m(&self) -> f64;
    fn sigma(&self) -> f64 {
        0.0
    }
    fn sample_count(&self) -> u64;
    fn reset_counters(&mut self);
    fn kind(&self) -> NonsmoothKind {
        NonsmoothKind::Opaque
    }
}

impl<T: SmoothOracle + ?Sized> SmoothOracle for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &Vector) -> f64 {
        (**self).value(x)
    }
    fn peek_gradient(&self, x: &Vector) -> Vector {
        (**self).peek_gradient(x)
    }
    fn lipschitz(&self) -> f64 {
        (**self).lipschitz()
    }
    fn strong_convexity(&self) -> f64 {
        (**self).strong_convexity()
    }
    fn grad_count(&self) -> u64 {
        (**self).grad_count()
    }
    fn reset_counters(&mut self) {
        (**self).reset_counters()
    }
    fn bump_grad_count(&mut self) {
        (**self).bump_grad_count()
    }
}

impl<T: SubgradientOracle + ?Sized> SubgradientOracle for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &Vector) -> f64 {
        (**self).value(x)
    }
    fn subgradient(&self, x: &Vector) -> Vector {
        (**self).subgradient(x)
    }
    fn sample(&mut self, x: &Vector) -> Vector {
        (**self).sample(x)
    }
    fn lipschitz_m(&self) -> f64 {
        (**self).lipschitz_m()
    }
    fn sigma(&self) -> f64 {
        (**self).sigma()
    }
    fn sample_count(&self) -> u64 {
        (**self).sample_count()
    }
    fn reset_counters(&mut self) {
        (**self).reset_counters()
    }
    fn kind(&self) -> NonsmoothKind {
        (**self).kind()
    }
}

#[derive(Debug, Clone)]
pub enum Hessian {
    Dense(DMatrix<f64>),
    ScaledIdentity { scale: f64, dim: usize },
}

impl Hessian {
    pub fn dim(&self) -> usize {
        match self {
            Hessian::Dense(m) => m.nrows(),
            Hessian::ScaledIdentity { dim, .. } => *dim,
        }
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        match self {
            Hessian::Dense(m) => m * x,
            Hessian::ScaledIdentity { scale, .. } => x * *scale,
        }
    }
}

/// `f(x) = ½xᵀQx − bᵀx + c`.
#[derive(Debug, Clone)]
pub struct QuadraticOracle {
    hessian: Hessian,
    linear: Vector,
    constant: f64,
    lipschitz: f64,
    strong: f64,
    grad_count: u64,
}

impl QuadraticOracle {
    /// `lipschitz`/`strong` are the caller's bounds on the spectrum of `Q`.
    pub fn new(hessian: Hessian, linear: Vector, constant: f64, lipschitz: f64, strong: f64) -> Result<Self> {
        crate::error::check_dim(hessian.dim(), linear.len())?;
        if !(lipschitz > 0.0) || strong < 0.0 {
            return Err(Error::param("quadratic needs L > 0 and mu >= 0"));
        }
        Ok(Self {
            hessian,
            linear,
            constant,
            lipschitz,
            strong,
            grad_count: 0,
        })
    }

    /// `(τ/2)‖x − center‖²`.
    pub fn scaled_distance(tau: f64, center: &Vector) -> Result<Self> {
        let dim = center.len();
        Self::new(
            Hessian::ScaledIdentity { scale: tau, dim },
            center * tau,
            0.5 * tau * center.norm_squared(),
            tau,
            tau,
        )
    }

    pub fn hessian(&self) -> &Hessian {
        &self.hessian
    }

    pub fn linear(&self) -> &Vector {
        &self.linear
    }
}

impl SmoothOracle for QuadraticOracle {
    fn dim(&self) -> usize {
        self.linear.len()
    }
    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&self.hessian.apply(x)) - self.linear.dot(x) + self.constant
    }
    fn peek_gradient(&self, x: &Vector) -> Vector {
        self.hessian.apply(x) - &self.linear
    }
    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }
    fn strong_convexity(&self) -> f64 {
        self.strong
    }
    fn grad_count(&self) -> u64 {
        self.grad_count
    }
    fn reset_counters(&mut self) {
        self.grad_count = 0;
    }
    fn bump_grad_count(&mut self) {
        self.grad_count += 1;
    }
}

/// `f̃(x) = f(x) − (μ/2)‖x‖²`: moves strong convexity out of `f` so the
/// simple term can carry it. `f̃` keeps the Lipschitz bound of `f`.
#[derive(Debug, Clone)]
pub struct ShiftedSmooth<F> {
    inner: F,
    mu: f64,
}

impl<F: SmoothOracle> ShiftedSmooth<F> {
    pub fn new(inner: F, mu: f64) -> Result<Self> {
        if mu < 0.0 || mu > inner.strong_convexity() + 1e-12 * inner.strong_convexity().max(1.0) {
            return Err(Error::param(format!(
                "shift {mu} exceeds the strong convexity {} of f",
                inner.strong_convexity()
            )));
        }
        Ok(Self { inner, mu })
    }

    pub fn shift(&self) -> f64 {
        self.mu
    }

    pub fn inner(&self) -> &F {
        &self.inner
    }
}

impl<F: SmoothOracle> SmoothOracle for ShiftedSmooth<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &Vector) -> f64 {
        self.inner.value(x) - 0.5 * self.mu * x.norm_squared()
    }
    fn peek_gradient(&self, x: &Vector) -> Vector {
        self.inner.peek_gradient(x) - x * self.mu
    }
    fn lipschitz(&self) -> f64 {
        self.inner.lipschitz()
    }
    fn strong_convexity(&self) -> f64 {
        (self.inner.strong_convexity() - self.mu).max(0.0)
    }
    fn grad_count(&self) -> u64 {
        self.inner.grad_count()
    }
    fn reset_counters(&mut self) {
        self.inner.reset_counters()
    }
    fn bump_grad_count(&mut self) {
        self.inner.bump_grad_count()
    }
}

/// Draw number `index` of the noise stream `seed`: an isotropic Gaussian
/// in `dim` coordinates with `E‖z‖² = sigma²`.
///
/// Each draw reads its own ChaCha stream, so the value depends only on
/// `(seed, index)` and streams can be split across threads freely.
pub fn gaussian_draw(seed: u64, index: u64, dim: usize, sigma: f64) -> Vector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let scale = sigma / (dim as f64).sqrt();
    Vector::from_iterator(
        dim,
        (0..dim).map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        }),
    )
}

/// Wraps an exact oracle and adds seeded Gaussian noise to every sample.
#[derive(Debug, Clone)]
pub struct Noisy<O> {
    inner: O,
    sigma: f64,
    seed: u64,
    draws: u64,
}

impl<O: SubgradientOracle> Noisy<O> {
    pub fn new(inner: O, sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::param(format!("noise sigma must be >= 0, got {sigma}")));
        }
        Ok(Self {
            inner,
            sigma,
            seed,
            draws: 0,
        })
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }

    pub fn inner_mut(&mut self) -> &mut O {
        &mut self.inner
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }
}

impl<O: SubgradientOracle> SubgradientOracle for Noisy<O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &Vector) -> f64 {
        self.inner.value(x)
    }
    fn subgradient(&self, x: &Vector) -> Vector {
        self.inner.subgradient(x)
    }
    fn sample(&mut self, x: &Vector) -> Vector {
        let g = self.inner.sample(x);
        if self.sigma == 0.0 {
            return g;
        }
        let z = gaussian_draw(self.seed, self.draws, g.len(), self.sigma);
        self.draws += 1;
        g + z
    }
    fn lipschitz_m(&self) -> f64 {
        self.inner.lipschitz_m()
    }
    fn sigma(&self) -> f64 {
        self.sigma
    }
    fn sample_count(&self) -> u64 {
        self.inner.sample_count()
    }
    fn reset_counters(&mut self) {
        self.inner.reset_counters()
    }
    fn kind(&self) -> NonsmoothKind {
        self.inner.kind()
    }
}

type SubgradFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
type ValueFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;

/// A subgradient oracle built from closures.
#[derive(Clone)]
pub struct FnSubgradient {
    dim: usize,
    subgrad: SubgradFn,
    value: Option<ValueFn>,
    lipschitz_m: f64,
    count: u64,
}

impl fmt::Debug for FnSubgradient {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnSubgradient")
            .field("dim", &self.dim)
            .field("lipschitz_m", &self.lipschitz_m)
            .field("count", &self.count)
            .finish()
    }
}

impl FnSubgradient {
    pub fn new(dim: usize, subgrad: impl Fn(&Vector) -> Vector + Send + Sync + 'static) -> Self {
        Self {
            dim,
            subgrad: Arc::new(subgrad),
            value: None,
            lipschitz_m: 0.0,
            count: 0,
        }
    }

    pub fn with_value(mut self, value: impl Fn(&Vector) -> f64 + Send + Sync + 'static) -> Self {
        self.value = Some(Arc::new(value));
        self
    }

    pub fn with_lipschitz(mut self, m: f64) -> Self {
        self.lipschitz_m = m;
        self
    }
}

impl SubgradientOracle for FnSubgradient {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &Vector) -> f64 {
        self.value.as_ref().map_or(f64::NAN, |v| v(x))
    }
    fn subgradient(&self, x: &Vector) -> Vector {
        (self.subgrad)(x)
    }
    fn sample(&mut self, x: &Vector) -> Vector {
        self.count += 1;
        (self.subgrad)(x)
    }
    fn lipschitz_m(&self) -> f64 {
        self.lipschitz_m
    }
    fn sample_count(&self) -> u64 {
        self.count
    }
    fn reset_counters(&mut self) {
        self.count = 0;
    }
}

/// Stochastic oracle returning `exact_subgrad(x) + z` with seeded Gaussian `z`.
pub fn make_noisy(
    dim: usize,
    exact_subgrad: impl Fn(&Vector) -> Vector + Send + Sync + 'static,
    sigma: f64,
    seed: u64,
) -> Result<Noisy<FnSubgradient>> {
    Noisy::new(FnSubgradient::new(dim, exact_subgrad), sigma, seed)
}

/// `h ≡ 0`.
#[derive(Debug, Clone)]
pub struct ZeroTerm {
    dim: usize,
    count: u64,
}

impl ZeroTerm {
    pub fn new(dim: usize) -> Self {
        Self { dim, count: 0 }
    }
}

impl SubgradientOracle for ZeroTerm {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &Vector) -> f64 {
        0.0
    }
    fn subgradient(&self, _x: &Vector) -> Vector {
        Vector::zeros(self.dim)
    }
    fn sample(&mut self, _x: &Vector) -> Vector {
        self.count += 1;
        Vector::zeros(self.dim)
    }
    fn lipschitz_m(&self) -> f64 {
        0.0
    }
    fn sample_count(&self) -> u64 {
        self.count
    }
    fn reset_counters(&mut self) {
        self.count = 0;
    }
    fn kind(&self) -> NonsmoothKind {
        NonsmoothKind::Zero
    }
}

/// `h(x) = ρ‖x‖₁` with subgradient `ρ·sign(x)`.
#[derive(Debug, Clone)]
pub struct L1Term {
    rho: f64,
    dim: usize,
    count: u64,
}

impl L1Term {
    pub fn new(rho: f64, dim: usize) -> Result<Self> {
        if !(rho >= 0.0) {
            return Err(Error::param(format!("l1 weight must be >= 0, got {rho}")));
        }
        Ok(Self { rho, dim, count: 0 })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }
}

impl SubgradientOracle for L1Term {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, x: &Vector) -> f64 {
        self.rho * x.iter().map(|v| v.abs()).sum::<f64>()
    }
    fn subgradient(&self, x: &Vector) -> Vector {
        x.map(|v| {
            if v > 0.0 {
                self.rho
            } else if v < 0.0 {
                -self.rho
            } else {
                0.0
            }
        })
    }
    fn sample(&mut self, x: &Vector) -> Vector {
        self.count += 1;
        self.subgradient(x)
    }
    /// Worst-case subgradient norm of `ρ‖·‖₁` under ℓ2: `ρ√n`.
    fn lipschitz_m(&self) -> f64 {
        self.rho * (self.dim as f64).sqrt()
    }
    fn sample_count(&self) -> u64 {
        self.count
    }
    fn reset_counters(&mut self) {
        self.count = 0;
    }
    fn kind(&self) -> NonsmoothKind {
        NonsmoothKind::L1 { rho: self.rho }
    }
}

/// The prox-friendly term `χ`.
#[derive(Clone)]
pub enum SimpleTerm {
    Zero,
    /// `(μ/2)‖u‖² + constant`.
    Quadratic {
        mu: f64,
        constant: f64,
    },
    /// Anything else; carried for evaluation but rejected by the exact prox.
    General {
        name: String,
        mu: f64,
        value: Arc<dyn Fn(&Vector) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for SimpleTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleTerm::Zero => write!(f, "Zero"),
            SimpleTerm::Quadratic { mu, constant } => {
                write!(f, "Quadratic {{ mu: {mu}, constant: {constant} }}")
            }
            SimpleTerm::General { name, mu, .. } => write!(f, "General {{ name: {name:?}, mu: {mu} }}"),
        }
    }
}

impl SimpleTerm {
    pub fn quadratic(mu: f64) -> Self {
        SimpleTerm::Quadratic { mu, constant: 0.0 }
    }

    pub fn value(&self, x: &Vector) -> f64 {
        match self {
            SimpleTerm::Zero => 0.0,
            SimpleTerm::Quadratic { mu, constant } => 0.5 * mu * x.norm_squared() + constant,
            SimpleTerm::General { value, .. } => value(x),
        }
    }

    pub fn strong_mu(&self) -> f64 {
        match self {
            SimpleTerm::Zero => 0.0,
            SimpleTerm::Quadratic { mu, .. } | SimpleTerm::General { mu, .. } => *mu,
        }
    }

    /// `∇χ(u)` for the differentiable kinds.
    pub fn gradient(&self, x: &Vector) -> Option<Vector> {
        match self {
            SimpleTerm::Zero => Some(Vector::zeros(x.len())),
            SimpleTerm::Quadratic { mu, .. } => Some(x * *mu),
            SimpleTerm::General { .. } => None,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            SimpleTerm::Zero => "zero",
            SimpleTerm::Quadratic { .. } => "quadratic",
            SimpleTerm::General { name, .. } => name,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn zero_noise_is_exact() {
        let mut o = make_noisy(3, |x: &Vector| x * 2.0, 0.0, 7).unwrap();
        let x = v(&[1.0, -2.0, 0.5]);
        assert_eq!(o.sample(&x), &x * 2.0);
        assert_eq!(o.sample_count(), 1);
    }

    #[test]
    fn negative_sigma_rejected() {
        assert!(matches!(
            make_noisy(1, |x: &Vector| x.clone(), -1.0, 0),
            Err(Error::Param(_))
        ));
    }

    #[test]
    fn noise_second_moment() {
        // E‖z‖² = σ² with σ = 1 in four coordinates.
        let draws = 100_000u64;
        let mean: f64 = (0..draws)
            .map(|i| gaussian_draw(11, i, 4, 1.0).norm_squared())
            .sum::<f64>()
            / draws as f64;
        assert!((0.98..=1.02).contains(&mean), "mean ‖z‖² = {mean}");
    }

    #[test]
    fn same_seed_same_stream() {
        let run = |seed| {
            let mut o = make_noisy(5, |x: &Vector| x.clone(), 0.7, seed).unwrap();
            (0..20)
                .map(|i| o.sample(&Vector::from_element(5, i as f64)))
                .collect::<Vec<_>>()
        };
        let (a, b) = (run(3), run(3));
        for (x, y) in a.iter().zip(&b) {
            assert!(x.iter().zip(y.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));
        }
        assert_ne!(run(3), run(4));
    }

    #[test]
    fn noise_independent_of_query_point() {
        let mut a = make_noisy(3, |_x: &Vector| Vector::zeros(3), 1.0, 5).unwrap();
        let mut b = make_noisy(3, |_x: &Vector| Vector::zeros(3), 1.0, 5).unwrap();
        for i in 0..10 {
            let za = a.sample(&Vector::from_element(3, i as f64));
            let zb = b.sample(&Vector::from_element(3, -3.0 * i as f64));
            assert_eq!(za, zb);
        }
    }

    #[test]
    fn noise_is_unbiased() {
        let sigma = 2.0;
        let exact = |x: &Vector| x.map(|t| t.signum());
        let mut o = make_noisy(6, exact, sigma, 99).unwrap();
        let x = v(&[1.0, -1.0, 2.0, 0.5, -0.3, 4.0]);
        let n = 10_000;
        let mut acc = Vector::zeros(6);
        for _ in 0..n {
            acc += o.sample(&x) - exact(&x);
        }
        acc /= n as f64;
        assert!(acc.norm() <= 5.0 * sigma / 100.0, "bias {}", acc.norm());
        assert_eq!(o.sample_count(), n);
    }

    #[test]
    fn counters_reset() {
        let mut f = QuadraticOracle::scaled_distance(1.0, &v(&[1.0, 2.0])).unwrap();
        for _ in 0..3 {
            f.gradient(&v(&[0.0, 0.0]));
        }
        assert_eq!(f.grad_count(), 3);
        f.reset_counters();
        assert_eq!(f.grad_count(), 0);
        f.reset_counters();
        assert_eq!(f.grad_count(), 0);
        f.gradient(&v(&[0.0, 0.0]));
        assert_eq!(f.grad_count(), 1);
        let _ = f.peek_gradient(&v(&[0.0, 0.0]));
        let _ = f.value(&v(&[0.0, 0.0]));
        assert_eq!(f.grad_count(), 1);

        let mut h = L1Term::new(0.5, 2).unwrap();
        h.sample(&v(&[1.0, 1.0]));
        h.reset_counters();
        assert_eq!(h.sample_count(), 0);
    }

    #[test]
    fn descent_lemma_on_samples() {
        let q = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let lmax = q.symmetric_eigenvalues().max();
        let f = QuadraticOracle::new(Hessian::Dense(q), v(&[1.0, -1.0]), 0.0, lmax, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let x = Vector::from_fn(2, |_, _| rand::Rng::random_range(&mut rng, -5.0..5.0));
            let y = Vector::from_fn(2, |_, _| rand::Rng::random_range(&mut rng, -5.0..5.0));
            let bound = f.value(&y) + f.peek_gradient(&y).dot(&(&x - &y)) + 0.5 * lmax * (&x - &y).norm_squared();
            assert!(f.value(&x) <= bound + 1e-10);
        }
    }

    #[test]
    fn shift_moves_but_keeps_sum() {
        let f = QuadraticOracle::scaled_distance(2.0, &v(&[1.0, -1.0])).unwrap();
        let s = ShiftedSmooth::new(f.clone(), 0.5).unwrap();
        let chi = SimpleTerm::quadratic(0.5);
        let x = v(&[0.3, 0.9]);
        assert!((s.value(&x) + chi.value(&x) - f.value(&x)).abs() < 1e-14);
        assert!((s.peek_gradient(&x) + chi.gradient(&x).unwrap() - f.peek_gradient(&x)).norm() < 1e-14);
        assert!(ShiftedSmooth::new(f, 3.0).is_err());
    }

    #[test]
    fn l1_subgradient_on_positive_orthant() {
        let h = L1Term::new(0.3, 4).unwrap();
        assert_eq!(h.subgradient(&v(&[0.1, 0.2, 0.3, 0.4])), Vector::from_element(4, 0.3));
        assert!((h.lipschitz_m() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn simple_term_strong_convexity_samples() {
        let chi = SimpleTerm::quadratic(0.7);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let x = Vector::from_fn(3, |_, _| rand::Rng::random_range(&mut rng, -3.0..3.0));
            let z = Vector::from_fn(3, |_, _| rand::Rng::random_range(&mut rng, -3.0..3.0));
            let gap = chi.value(&z) - chi.value(&x) - chi.gradient(&x).unwrap().dot(&(&z - &x));
            assert!(gap >= 0.5 * chi.strong_mu() * (&z - &x).norm_squared() - 1e-12);
        }
    }
}
