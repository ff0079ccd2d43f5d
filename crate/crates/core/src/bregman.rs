//! Distance-generating functions and Bregman distances.
//!
//! Every prox step in the sliding methods is written in terms of
//! `V(x, z) = ω(z) − ω(x) − ⟨∇ω(x), z − x⟩`. Only the Euclidean generator
//! `ω = ½‖·‖²` (modulus 1) ships; the trait leaves room for others.

use nalgebra::DVector;

use crate::error::{check_dim, Result};

pub type Vector = DVector<f64>;

/// A continuously differentiable, `modulus`-strongly convex function.
pub trait DistanceGenerator: Send + Sync {
    fn dim(&self) -> usize;
    fn omega(&self, x: &Vector) -> f64;
    fn grad_omega(&self, x: &Vector) -> Vector;
    fn modulus(&self) -> f64;
}

/// `ω(x) = ½‖x‖₂²`, `∇ω(x) = x`, `ν = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Euclidean {
    dim: usize,
}

impl Euclidean {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1, "euclidean generator needs dim >= 1");
        Self { dim }
    }
}

pub fn euclidean_generator(dim: usize) -> Euclidean {
    Euclidean::new(dim)
}

impl DistanceGenerator for Euclidean {
    fn dim(&self) -> usize {
        self.dim
    }

    fn omega(&self, x: &Vector) -> f64 {
        0.5 * x.norm_squared()
    }

    fn grad_omega(&self, x: &Vector) -> Vector {
        x.clone()
    }

    fn modulus(&self) -> f64 {
        1.0
    }
}

/// `V(x, z) = ω(z) − ω(x) − ⟨∇ω(x), z − x⟩`, with `ω` differentiated at `x`.
pub fn bregman_distance<D: DistanceGenerator + ?Sized>(dg: &D, x: &Vector, z: &Vector) -> Result<f64> {
    check_dim(x.len(), z.len())?;
    if x == z {
        return Ok(0.0);
    }
    let v = dg.omega(z) - dg.omega(x) - dg.grad_omega(x).dot(&(z - x));
    Ok(v.max(0.0))
}

/// `½‖z − x‖₂²` without the cancellation of the generic formula.
pub fn half_sq_dist(x: &Vector, z: &Vector) -> f64 {
    debug_assert_eq!(x.len(), z.len());
    0.5 * x.iter().zip(z.iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    LInf,
}

impl Norm {
    pub fn eval(&self, x: &Vector) -> f64 {
        match self {
            Norm::L1 => x.iter().map(|v| v.abs()).sum(),
            Norm::L2 => x.norm(),
            Norm::LInf => x.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    pub fn dual(&self) -> Norm {
        match self {
            Norm::L1 => Norm::LInf,
            Norm::L2 => Norm::L2,
            Norm::LInf => Norm::L1,
        }
    }
}

/// A norm together with its dual.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormPair {
    pub primal: Norm,
    pub dual: Norm,
}

impl NormPair {
    pub fn new(primal: Norm) -> Self {
        Self {
            primal,
            dual: primal.dual(),
        }
    }

    pub fn euclidean() -> Self {
        Self::new(Norm::L2)
    }

    /// ℓ∞ primal with ℓ1 dual, the pairing of the TV dual box.
    pub fn box_pair() -> Self {
        Self::new(Norm::LInf)
    }
}

impl Default for NormPair {
    fn default() -> Self {
        Self::euclidean()
    }
}

/// Returns true when every entry is finite.
pub fn is_finite(x: &Vector) -> bool {
    x.iter().all(|v| v.is_finite())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn distance_examples() {
        let dg = Euclidean::new(2);
        assert_eq!(bregman_distance(&dg, &v(&[1.0, 2.0]), &v(&[1.0, 2.0])).unwrap(), 0.0);
        assert_eq!(bregman_distance(&dg, &v(&[0.0, 0.0]), &v(&[3.0, 4.0])).unwrap(), 12.5);
        assert_eq!(bregman_distance(&dg, &v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 1.0);
    }

    #[test]
    fn generator_examples() {
        let dg = euclidean_generator(3);
        assert_eq!(dg.omega(&v(&[1.0, 1.0, 1.0])), 1.5);
        assert_eq!(euclidean_generator(2).modulus(), 1.0);
        let d = bregman_distance(&euclidean_generator(2), &v(&[0.0, 0.0]), &v(&[1.0, 1.0])).unwrap();
        assert_eq!(d, 1.0);
    }

    #[test]
    fn mismatched_dims() {
        let dg = Euclidean::new(2);
        let err = bregman_distance(&dg, &v(&[0.0, 0.0]), &v(&[1.0])).unwrap_err();
        assert!(matches!(err, crate::Error::Dimension { expected: 2, got: 1 }));
    }

    #[test]
    fn norms() {
        let x = v(&[3.0, -4.0]);
        assert_eq!(Norm::L1.eval(&x), 7.0);
        assert_eq!(Norm::L2.eval(&x), 5.0);
        assert_eq!(Norm::LInf.eval(&x), 4.0);
        let p = NormPair::box_pair();
        assert_eq!(p.dual, Norm::L1);
        assert_eq!(NormPair::default().dual, Norm::L2);
        for n in [Norm::L1, Norm::L2, Norm::LInf] {
            assert_eq!(n.eval(&Vector::zeros(3)), 0.0);
            assert!((n.eval(&(&x * -2.5)) - 2.5 * n.eval(&x)).abs() < 1e-12);
        }
    }

    fn pair(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (
            prop::collection::vec(-10.0..10.0f64, n),
            prop::collection::vec(-10.0..10.0f64, n),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn euclidean_distance_is_half_sq((a, b) in pair(5)) {
            let dg = Euclidean::new(5);
            let (x, z) = (Vector::from_vec(a), Vector::from_vec(b));
            let d = bregman_distance(&dg, &x, &z).unwrap();
            prop_assert!((d - 0.5 * (&z - &x).norm_squared()).abs() <= 1e-12 * (1.0 + d));
            prop_assert_eq!(bregman_distance(&dg, &x, &x).unwrap(), 0.0);
            prop_assert!(d <= half_sq_dist(&x, &z) + 1e-12 * (1.0 + d));
        }

        #[test]
        fn euclidean_strong_convexity((a, b) in pair(4)) {
            let dg = Euclidean::new(4);
            let (x, z) = (Vector::from_vec(a), Vector::from_vec(b));
            let lhs = (&x - &z).dot(&(dg.grad_omega(&x) - dg.grad_omega(&z)));
            prop_assert!(lhs >= dg.modulus() * (&x - &z).norm_squared() - 1e-12);
        }
    }
}
