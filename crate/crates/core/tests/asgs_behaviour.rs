use rayon::prelude::*;
use rfsliding::asgs::{derive_asgs_params, run_rf_asgs, solve_spp, AsgsOptions, SppOptions};
use rfsliding::oracles::{Noisy, SmoothOracle};
use rfsliding::problems::{make_tv, ImageSource};
use rfsliding::reference::{solve_reference, RefOptions, SmoothedComposite};
use rfsliding::smoothing::smooth;

#[test]
fn halving_eps_grows_n_additively_and_t_by_root_two() {
    let (inst, spec, mut f) = make_tv(8, 8, 1.0, 0.05, 3, ImageSource::Phantom).unwrap();
    let set = inst.set();
    let x0 = inst.g.clone();
    let a = solve_spp(&mut f, spec.clone(), &set, &x0, 0.1, &SppOptions::default()).unwrap();
    let b = solve_spp(&mut f, spec, &set, &x0, 0.05, &SppOptions::default()).unwrap();
    assert!(b.n >= a.n && b.n - a.n <= 2, "N went from {} to {}", a.n, b.n);
    let ratio = b.params.t as f64 / a.params.t as f64;
    assert!(
        ratio <= 2f64.sqrt() * (1.0 + 1.0 / a.params.t as f64),
        "T ratio {ratio}"
    );
}

#[test]
fn noisy_gradients_record_gap() {
    let (inst, spec, f) = make_tv(8, 8, 1.0, 0.05, 7, ImageSource::Phantom).unwrap();
    let h = smooth(spec, 1e-2).unwrap();
    let set = inst.set();
    let x0 = inst.g.clone();
    let sol = solve_reference(
        &SmoothedComposite {
            f: &f,
            h: &h,
            set: &set,
        },
        &x0,
        &RefOptions::accelerated(1e-11),
    )
    .unwrap();
    let p = derive_asgs_params(f.lipschitz(), f.strong_convexity(), 1.0, h.l_eta(), 1.5, 0.0).unwrap();
    let opts = AsgsOptions::default();
    let exact = {
        let (mut f, mut h) = (f.clone(), h.clone());
        run_rf_asgs(&mut f, &mut h, &set, &x0, 30, &p, &opts)
            .unwrap()
            .objectives[29]
            - sol.value
    };
    let gaps: Vec<f64> = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let mut f = f.clone();
            let mut noisy = Noisy::new(h.clone(), 0.1, seed).unwrap();
            run_rf_asgs(&mut f, &mut noisy, &set, &x0, 30, &p, &opts)
                .unwrap()
                .objectives[29]
                - sol.value
        })
        .collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    // no bound is claimed for the noisy case; the numbers are reported only
    println!("N=30: exact gap {exact:.3e}, mean noisy gap (sigma=0.1, 50 seeds) {mean:.3e}");
    assert!(mean.is_finite() && gaps.iter().all(|g| *g >= -1e-9));
}
