use crate::bregman::{Euclidean, Vector};
use crate::error::{check_dim, Result};
use crate::oracles::{SimpleTerm, SmoothOracle, SubgradientOracle};
use crate::prox::FeasibleSet;

/// `min_{x ∈ X} f(x) + h(x) + χ(x)`.
pub struct ProblemSpec {
    pub f: Box<dyn SmoothOracle>,
    pub h: Box<dyn SubgradientOracle>,
    pub chi: SimpleTerm,
    pub set: FeasibleSet,
    pub dg: Euclidean,
}

impl ProblemSpec {
    pub fn new(
        f: Box<dyn SmoothOracle>,
        h: Box<dyn SubgradientOracle>,
        chi: SimpleTerm,
        set: FeasibleSet,
    ) -> Result<Self> {
        let n = set.dim();
        check_dim(n, f.dim())?;
        check_dim(n, h.dim())?;
        Ok(Self {
            f,
            h,
            chi,
            set,
            dg: Euclidean::new(n),
        })
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    /// `Ψ(x)` with the exact `h`.
    pub fn objective(&self, x: &Vector) -> f64 {
        self.f.value(x) + self.h.value(x) + self.chi.value(x)
    }

    pub fn lipschitz(&self) -> f64 {
        self.f.lipschitz()
    }

    pub fn mu(&self) -> f64 {
        self.chi.strong_mu()
    }

    pub fn grad_count(&self) -> u64 {
        self.f.grad_count()
    }

    pub fn subgrad_count(&self) -> u64 {
        self.h.sample_count()
    }

    pub fn reset_counters(&mut self) {
        self.f.reset_counters();
        self.h.reset_counters();
    }
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("dim", &self.dim())
            .field("L", &self.f.lipschitz())
            .field("M", &self.h.lipschitz_m())
            .field("sigma", &self.h.sigma())
            .field("chi", &self.chi)
            .field("set", &self.set)
            .finish()
    }
}
