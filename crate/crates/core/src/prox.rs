//! Exact prox solvers for the inner steps of the sliding methods.
//!
//! Only closed forms are supported. Anything that would need an inner
//! iterative solver is refused with [`Error::UnsupportedProx`].

use crate::bregman::Vector;
use crate::error::{check_dim, Error, Result};
use crate::oracles::SimpleTerm;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FeasibleSet {
    /// `{w : Σw = 1, w ≥ 0}`
    Simplex {
        dim: usize,
    },
    /// `[lo, hi]ⁿ`
    Box {
        lo: f64,
        hi: f64,
        dim: usize,
    },
    WholeSpace {
        dim: usize,
    },
}

impl FeasibleSet {
    pub fn dim(&self) -> usize {
        match *self {
            FeasibleSet::Simplex { dim } | FeasibleSet::Box { dim, .. } | FeasibleSet::WholeSpace { dim } => dim,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FeasibleSet::Simplex { .. } => "simplex",
            FeasibleSet::Box { .. } => "box",
            FeasibleSet::WholeSpace { .. } => "whole",
        }
    }

    pub fn project(&self, v: &Vector) -> Result<Vector> {
        check_dim(self.dim(), v.len())?;
        match *self {
            FeasibleSet::Simplex { .. } => simplex_project(v),
            FeasibleSet::Box { lo, hi, .. } => box_clip(v, lo, hi),
            FeasibleSet::WholeSpace { .. } => Ok(v.clone()),
        }
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> bool {
        if x.len() != self.dim() || !crate::bregman::is_finite(x) {
            return false;
        }
        match *self {
            FeasibleSet::Simplex { .. } => x.iter().all(|&v| v >= -tol) && (x.sum() - 1.0).abs() <= tol,
            FeasibleSet::Box { lo, hi, .. } => x.iter().all(|&v| v >= lo - tol && v <= hi + tol),
            FeasibleSet::WholeSpace { .. } => true,
        }
    }

    /// A canonical feasible point: the barycenter, the box center, or 0.
    pub fn center(&self) -> Vector {
        match *self {
            FeasibleSet::Simplex { dim } => Vector::from_element(dim, 1.0 / dim as f64),
            FeasibleSet::Box { lo, hi, dim } => Vector::from_element(dim, 0.5 * (lo + hi)),
            FeasibleSet::WholeSpace { dim } => Vector::zeros(dim),
        }
    }
}

/// Euclidean projection onto the probability simplex by sort-and-threshold.
pub fn simplex_project(v: &Vector) -> Result<Vector> {
    if v.is_empty() {
        return Err(Error::EmptyVector);
    }
    let theta = simplex_threshold(v);
    let mut w = v.map(|x| (x - theta).max(0.0));
    // one renormalisation pass absorbs the rounding in theta
    let s = w.sum();
    if s > 0.0 && s != 1.0 {
        let support = w.iter().filter(|&&x| x > 0.0).count() as f64;
        let shift = (s - 1.0) / support;
        w.apply(|x| {
            if *x > 0.0 {
                *x = (*x - shift).max(0.0)
            }
        });
    }
    Ok(w)
}

/// The `θ` with `Σ max(v_i − θ, 0) = 1`.
pub fn simplex_threshold(v: &Vector) -> f64 {
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = sorted[0] - 1.0;
    for (i, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    theta
}

pub fn box_clip(v: &Vector, lo: f64, hi: f64) -> Result<Vector> {
    if lo > hi || lo.is_nan() || hi.is_nan() {
        return Err(Error::param(format!("box bounds out of order: [{lo}, {hi}]")));
    }
    Ok(v.map(|x| x.clamp(lo, hi)))
}

/// Exact minimizer over `set` of
///
/// ```text
/// ⟨g, u⟩ + χ(u) + a·V(center_a, u) + b·V(center_b, u)
/// ```
///
/// with Euclidean `V`. For the shipped `χ` this is the projection of
/// `(a·center_a + b·center_b − g) / (a + b + μ_χ)`.
pub fn sliding_prox(
    g: &Vector,
    chi: &SimpleTerm,
    set: &FeasibleSet,
    a: f64,
    center_a: &Vector,
    b: f64,
    center_b: &Vector,
) -> Result<Vector> {
    let n = set.dim();
    check_dim(n, g.len())?;
    check_dim(n, center_a.len())?;
    check_dim(n, center_b.len())?;
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::param(format!("prox weight a must be > 0, got {a}")));
    }
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::param(format!("prox weight b must be >= 0, got {b}")));
    }
    let mu = match chi {
        SimpleTerm::Zero => 0.0,
        SimpleTerm::Quadratic { mu, .. } => *mu,
        SimpleTerm::General { name, .. } => return Err(Error::UnsupportedProx(name.clone())),
    };
    let denom = a + b + mu;
    assert!(denom > 0.0);
    let mut target = center_a * a - g;
    if b > 0.0 {
        target.axpy(b, center_b, 1.0);
    }
    target /= denom;
    set.project(&target)
}
