//! Small simplex QPs checked against a nested grid search that knows
//! nothing about gradients or projections.

use rfsliding::bregman::Vector;
use rfsliding::problem::ProblemSpec;
use rfsliding::problems::{make_qp, SetKind};
use rfsliding::reference::{brute_force_simplex_qp, solve_reference, RefMethod, RefOptions};

/// Minimises `f` over the simplex in `n` dims by scanning a grid in the
/// first `n - 1` coordinates and repeatedly halving the window around the
/// best point.
fn nested_grid(n: usize, f: impl Fn(&Vector) -> f64, rounds: usize, per_dim: usize) -> (Vector, f64) {
    let m = n - 1;
    let mut center = vec![1.0 / n as f64; m];
    let mut radius = 1.0;
    let mut best = (Vector::from_element(n, 1.0 / n as f64), f64::INFINITY);
    for _ in 0..rounds {
        let step = 2.0 * radius / (per_dim - 1) as f64;
        let total = per_dim.pow(m as u32);
        for idx in 0..total {
            let mut rest = idx;
            let mut w = Vector::zeros(n);
            let mut ok = true;
            for j in 0..m {
                let v = center[j] - radius + step * (rest % per_dim) as f64;
                rest /= per_dim;
                if v < 0.0 {
                    ok = false;
                    break;
                }
                w[j] = v;
            }
            if !ok {
                continue;
            }
            let last = 1.0 - w.rows(0, m).sum();
            if last < 0.0 {
                continue;
            }
            w[m] = last;
            let v = f(&w);
            if v < best.1 {
                best = (w, v);
            }
        }
        center.copy_from_slice(best.0.rows(0, m).as_slice());
        radius *= 0.5;
    }
    best
}

fn qp(n: usize, rho: f64, seed: u64) -> ProblemSpec {
    make_qp(n, 1.0, 10.0, rho, SetKind::Simplex, seed).unwrap().1
}

#[test]
fn reference_matches_grid_up_to_four_dims() {
    for n in 2..=4 {
        for seed in 0..3 {
            let p = qp(n, 0.0, 100 + seed);
            let x0 = p.set.center();
            let (_, grid_val) = nested_grid(n, |w| p.objective(w), 40, 21);
            for method in [RefMethod::ProximalGradient, RefMethod::Accelerated] {
                let opts = RefOptions {
                    method,
                    ..RefOptions::default()
                };
                let sol = solve_reference(&p, &x0, &opts).unwrap();
                assert!(
                    (sol.value - grid_val).abs() <= 1e-6,
                    "n={n}, seed={seed}, {method:?}: {} vs {grid_val}",
                    sol.value
                );
            }
        }
    }
}

#[test]
fn five_dim_with_l1_term() {
    let p = qp(5, 0.1, 7);
    let sol = solve_reference(&p, &p.set.center(), &RefOptions::default()).unwrap();
    let (w, grid_val) = nested_grid(5, |w| p.objective(w), 40, 11);
    assert!((sol.value - grid_val).abs() <= 1e-8, "{} vs {grid_val}", sol.value);
    assert!((&w - &sol.x_star).amax() <= 1e-4);
}

#[test]
fn brute_force_agrees_with_grid() {
    // ½ wᵀ H w + gᵀ w with a hand-picked positive definite H
    let h = nalgebra::DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.2, 0.0, 0.2, 3.0]);
    let g = Vector::from_vec(vec![-1.0, 0.3, -0.2]);
    let f = |w: &Vector| 0.5 * w.dot(&(&h * w)) + g.dot(w);
    let exact = brute_force_simplex_qp(&h, &g).unwrap();
    let (w, val) = nested_grid(3, f, 40, 21);
    assert!((f(&exact) - val).abs() <= 1e-10);
    assert!((&w - &exact).amax() <= 1e-6);
}
