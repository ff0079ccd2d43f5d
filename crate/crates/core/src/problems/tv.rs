//! Total-variation denoising
//! `min_u (τ/2)‖u − g‖² + ‖Ku‖₁ = min_u max_{‖p‖∞ ≤ 1} ⟨Ku, p⟩ + (τ/2)‖u − g‖²`.

use std::path::PathBuf;
use std::sync::Arc;

use crate::bregman::Vector;
use crate::error::{Error, Result};
use crate::oracles::{gaussian_draw, QuadraticOracle};
use crate::prox::FeasibleSet;
use crate::smoothing::{DualTerm, LinearOperator, SaddleSpec};

use super::pgm::{read_pgm, GrayImage};

/// Forward differences on a row-major `width × height` image with Neumann
/// boundary. Output is all horizontal differences, then all vertical ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FiniteDifference2D {
    pub width: usize,
    pub height: usize,
}

impl FiniteDifference2D {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < 2 || height < 2 {
            return Err(Error::param(format!(
                "image must be at least 2x2, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }

    fn pixels(&self) -> usize {
        self.width * self.height
    }
}

impl LinearOperator for FiniteDifference2D {
    fn input_dim(&self) -> usize {
        self.pixels()
    }

    fn output_dim(&self) -> usize {
        2 * self.pixels()
    }

    fn apply(&self, u: &Vector) -> Vector {
        let (w, h, n) = (self.width, self.height, self.pixels());
        let mut out = Vector::zeros(2 * n);
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                if c + 1 < w {
                    out[i] = u[i + 1] - u[i];
                }
                if r + 1 < h {
                    out[n + i] = u[i + w] - u[i];
                }
            }
        }
        out
    }

    fn apply_t(&self, p: &Vector) -> Vector {
        let (w, h, n) = (self.width, self.height, self.pixels());
        let mut out = Vector::zeros(n);
        for r in 0..h {
            for c in 0..w {
                let i = r * w + c;
                if c + 1 < w {
                    out[i + 1] += p[i];
                    out[i] -= p[i];
                }
                if r + 1 < h {
                    out[i + w] += p[n + i];
                    out[i] -= p[n + i];
                }
            }
        }
        out
    }

    fn known_norm(&self) -> Option<f64> {
        Some(8f64.sqrt())
    }
}

/// Deterministic piecewise-constant test image: two blocks and a disk on a
/// dark background, intensities in `[0, 1]`.
pub fn phantom(width: usize, height: usize) -> Vector {
    let (wf, hf) = (width as f64, height as f64);
    let radius = wf.min(hf) / 6.0;
    Vector::from_iterator(
        width * height,
        (0..height).flat_map(|r| (0..width).map(move |c| (r, c))).map(|(r, c)| {
            let (x, y) = ((c as f64 + 0.5) / wf, (r as f64 + 0.5) / hf);
            let (dx, dy) = (c as f64 + 0.5 - 0.65 * wf, r as f64 + 0.5 - 0.7 * hf);
            if dx * dx + dy * dy <= radius * radius {
                1.0
            } else if (0.125..0.5).contains(&x) && (0.125..0.5).contains(&y) {
                0.8
            } else if (0.5..0.875).contains(&x) && (0.2..0.45).contains(&y) {
                0.5
            } else {
                0.15
            }
        }),
    )
}

#[derive(Debug, Clone)]
pub enum ImageSource {
    Phantom,
    File(PathBuf),
    Image(GrayImage),
}

#[derive(Debug, Clone)]
pub struct TvInstance {
    pub width: usize,
    pub height: usize,
    pub clean: Vector,
    /// Observed image `clip(clean + noise, 0, 1)`.
    pub g: Vector,
    pub tau: f64,
    pub sigma_noise: f64,
    pub seed: u64,
}

impl TvInstance {
    pub fn set(&self) -> FeasibleSet {
        FeasibleSet::WholeSpace {
            dim: self.width * self.height,
        }
    }

    /// `f(u) = (τ/2)‖u − g‖²`.
    pub fn fidelity(&self) -> Result<QuadraticOracle> {
        QuadraticOracle::scaled_distance(self.tau, &self.g)
    }
}

/// Builds the instance, its saddle form (`K` = forward differences,
/// `Y = [−1, 1]^{2n}`, `J ≡ 0`) and the fidelity term. For file sources the
/// file's dimensions replace `width` and `height`.
pub fn make_tv(
    width: usize,
    height: usize,
    tau: f64,
    sigma_noise: f64,
    seed: u64,
    source: ImageSource,
) -> Result<(TvInstance, Arc<SaddleSpec>, QuadraticOracle)> {
    if !(tau > 0.0) {
        return Err(Error::param(format!("tau must be > 0, got {tau}")));
    }
    if !(sigma_noise >= 0.0) {
        return Err(Error::param(format!("sigma_noise must be >= 0, got {sigma_noise}")));
    }
    let (width, height, clean) = match source {
        ImageSource::Phantom => (width, height, phantom(width, height)),
        ImageSource::File(path) => {
            let img = read_pgm(path)?;
            (img.width, img.height, img.to_vector())
        }
        ImageSource::Image(img) => (img.width, img.height, img.to_vector()),
    };
    let op = FiniteDifference2D::new(width, height)?;
    let n = width * height;
    // the noise draw is a per-pixel standard deviation
    let noise = gaussian_draw(seed, 0, n, sigma_noise * (n as f64).sqrt());
    let g = (&clean + noise).map(|v| v.clamp(0.0, 1.0));
    let inst = TvInstance {
        width,
        height,
        clean,
        g,
        tau,
        sigma_noise,
        seed,
    };
    let spec = Arc::new(SaddleSpec::new(Arc::new(op), -1.0, 1.0, DualTerm::Zero, None)?);
    let f = inst.fidelity()?;
    Ok((inst, spec, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smoothing::power_iteration_gram;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_image_has_zero_gradient() {
        let k = FiniteDifference2D::new(5, 4).unwrap();
        assert_eq!(k.apply(&Vector::from_element(20, 0.3)).amax(), 0.0);
    }

    #[test]
    fn two_by_two_example() {
        // rows identical: [[0, 1], [0, 1]]
        let k = FiniteDifference2D::new(2, 2).unwrap();
        let ku = k.apply(&Vector::from_row_slice(&[0.0, 1.0, 0.0, 1.0]));
        assert_eq!(
            ku.rows(0, 4).iter().copied().collect::<Vec<_>>(),
            vec![1.0, 0.0, 1.0, 0.0]
        );
        assert_eq!(ku.rows(4, 4).amax(), 0.0);
    }

    #[test]
    fn adjoint_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for (w, h) in [(2, 2), (3, 5), (8, 8)] {
            let k = FiniteDifference2D::new(w, h).unwrap();
            for _ in 0..20 {
                let u = Vector::from_fn(w * h, |_, _| rng.random_range(-1.0..1.0));
                let p = Vector::from_fn(2 * w * h, |_, _| rng.random_range(-1.0..1.0));
                assert!((k.apply(&u).dot(&p) - u.dot(&k.apply_t(&p))).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn norm_bound() {
        for s in [2, 8, 16] {
            let k = FiniteDifference2D::new(s, s).unwrap();
            assert!(power_iteration_gram(&k, 200, 0x5eed) <= 8.0 + 1e-6);
        }
    }

    #[test]
    fn rejects_tiny() {
        assert!(FiniteDifference2D::new(1, 5).is_err());
        assert!(make_tv(1, 1, 1.0, 0.0, 0, ImageSource::Phantom).is_err());
    }

    #[test]
    fn phantom_is_deterministic_and_in_range() {
        let a = phantom(16, 12);
        assert_eq!(a, phantom(16, 12));
        assert!(a.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert!(a.iter().any(|&v| v == 1.0) && a.iter().any(|&v| v == 0.8));
    }

    #[test]
    fn noisy_observation() {
        let (inst, spec, f) = make_tv(16, 16, 1.0, 0.05, 3, ImageSource::Phantom).unwrap();
        assert_eq!(inst.g.len(), 256);
        assert!(inst.g.iter().all(|&v| (0.0..=1.0).contains(&v)));
        assert_eq!(spec.dual_dim(), 512);
        assert_eq!(spec.omega(), 256.0);
        assert!((spec.op_norm() - 8f64.sqrt()).abs() < 1e-15);
        use crate::oracles::SmoothOracle;
        assert_eq!(f.lipschitz(), 1.0);
        let (again, _, _) = make_tv(16, 16, 1.0, 0.05, 3, ImageSource::Phantom).unwrap();
        assert_eq!(inst.g, again.g);
        let rms = ((&inst.g - &inst.clean).norm_squared() / 256.0).sqrt();
        assert!(rms > 0.02 && rms < 0.08, "{rms}");
    }

    #[test]
    fn file_source_sets_dimensions() {
        let img = GrayImage::new(3, 4, vec![10; 12]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.pgm");
        super::super::pgm::write_pgm(&img, &path).unwrap();
        let (inst, _, _) = make_tv(99, 99, 1.0, 0.0, 0, ImageSource::File(path)).unwrap();
        assert_eq!((inst.width, inst.height), (3, 4));
        let bad = dir.path().join("bad.pgm");
        std::fs::write(&bad, b"P6 1 1 255\n\x00\x00\x00").unwrap();
        assert!(matches!(
            make_tv(2, 2, 1.0, 0.0, 0, ImageSource::File(bad)),
            Err(Error::Format(_))
        ));
    }
}
