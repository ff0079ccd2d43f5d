//! Flat `key = value` run configuration.
//!
//! ```text
//! # portfolio with noisy subgradients
//! problem = portfolio
//! algorithm = rf-sgs
//! n = 100
//! N = 40
//! sigma = 0.1
//! seeds = 1, 2, 3
//! output = traces/portfolio.csv
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Qp,
    Portfolio,
    Tv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    RfSgs,
    RfAsgs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Iterations(u64),
    /// Target accuracy; the outer count comes from the rate bound.
    Epsilon(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceMode {
    Auto,
    Always,
    Never,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QpSet {
    Simplex,
    Box { lo: f64, hi: f64 },
    Whole,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub algorithm: Algorithm,
    pub horizon: Horizon,
    /// Oracle noise seeds; `run` uses the first.
    pub seeds: Vec<u64>,
    /// Seed for problem data (matrices, images).
    pub data_seed: u64,
    /// Noise level of the stochastic oracle.
    pub sigma: f64,
    pub n: usize,
    pub width: usize,
    pub height: usize,
    pub tau: f64,
    pub rho: f64,
    pub mu_reg: f64,
    pub mu_f: f64,
    pub l_f: f64,
    pub qp_set: QpSet,
    pub sigma_noise: f64,
    pub eta: f64,
    pub c: f64,
    pub b: f64,
    pub image: Option<PathBuf>,
    pub image_out: Option<PathBuf>,
    pub reference: ReferenceMode,
    pub output: PathBuf,
}

const KEYS: &[&str] = &[
    "problem",
    "algorithm",
    "N",
    "eps",
    "seeds",
    "seed",
    "data_seed",
    "sigma",
    "n",
    "width",
    "height",
    "tau",
    "rho",
    "mu_reg",
    "mu_f",
    "L_f",
    "set",
    "box_lo",
    "box_hi",
    "sigma_noise",
    "eta",
    "c",
    "b",
    "image",
    "image_out",
    "reference",
    "output",
];

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn get(&self, key: &str) -> Option<(usize, &str)> {
        self.map.get(key).map(|(l, v)| (*l, v.as_str()))
    }

    fn line_of(&self, key: &str) -> usize {
        self.map.get(key).map(|(l, _)| *l).unwrap_or(0)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some((line, v)) => v.parse::<T>().map_err(|_| Error::Config {
                line,
                msg: format!("{key}: cannot parse {v:?}"),
            }),
        }
    }

    fn real(&self, key: &str, default: f64, ok: impl Fn(f64) -> bool, what: &str) -> Result<f64> {
        let v: f64 = self.parse(key, default)?;
        if !v.is_finite() || !ok(v) {
            return Err(Error::Config {
                line: self.line_of(key),
                msg: format!("{key} must be {what}, got {v}"),
            });
        }
        Ok(v)
    }
}

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((k, v)) = body.split_once('=') else {
                return Err(Error::Config {
                    line,
                    msg: format!("expected `key = value`, found {body:?}"),
                });
            };
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::Config {
                    line,
                    msg: format!("unknown key {k:?}"),
                });
            }
            if v.is_empty() {
                return Err(Error::Config {
                    line,
                    msg: format!("{k}: empty value"),
                });
            }
            if map.insert(k.to_string(), (line, v.to_string())).is_some() {
                return Err(Error::Config {
                    line,
                    msg: format!("duplicate key {k:?}"),
                });
            }
        }
        Self::from_entries(&Entries { map })
    }

    fn from_entries(e: &Entries) -> Result<Self> {
        let cfg_err = |key: &str, msg: String| Error::Config {
            line: e.line_of(key),
            msg,
        };
        let problem = match e.get("problem") {
            None => return Err(cfg_err("problem", "missing required key `problem`".into())),
            Some((_, "qp")) => ProblemKind::Qp,
            Some((_, "portfolio")) => ProblemKind::Portfolio,
            Some((_, "tv")) => ProblemKind::Tv,
            Some((_, v)) => {
                return Err(cfg_err(
                    "problem",
                    format!("problem must be qp, portfolio or tv, got {v:?}"),
                ))
            }
        };
        let algorithm = match e.get("algorithm") {
            None => match problem {
                ProblemKind::Tv => Algorithm::RfAsgs,
                _ => Algorithm::RfSgs,
            },
            Some((_, "rf-sgs")) => Algorithm::RfSgs,
            Some((_, "rf-asgs")) => Algorithm::RfAsgs,
            Some((_, v)) => {
                return Err(cfg_err(
                    "algorithm",
                    format!("algorithm must be rf-sgs or rf-asgs, got {v:?}"),
                ))
            }
        };
        match (problem, algorithm) {
            (ProblemKind::Tv, Algorithm::RfSgs) => {
                return Err(cfg_err("algorithm", "tv is a saddle-point problem; use rf-asgs".into()))
            }
            (ProblemKind::Qp | ProblemKind::Portfolio, Algorithm::RfAsgs) => {
                return Err(cfg_err("algorithm", "rf-asgs needs problem = tv".into()))
            }
            _ => {}
        }
        let horizon = match (e.get("N"), e.get("eps")) {
            (Some(_), Some(_)) => return Err(cfg_err("eps", "give either N or eps, not both".into())),
            (None, None) => {
                return Err(cfg_err(
                    "N",
                    "missing N (outer iterations) or eps (target accuracy)".into(),
                ))
            }
            (Some(_), None) => {
                let n: u64 = e.parse("N", 0)?;
                if n > crate::sgs::MAX_OUTER {
                    return Err(cfg_err("N", format!("N must be at most {}", crate::sgs::MAX_OUTER)));
                }
                Horizon::Iterations(n)
            }
            (None, Some(_)) => Horizon::Epsilon(e.real("eps", 0.0, |v| v > 0.0, "positive")?),
        };
        let seeds = match (e.get("seeds"), e.get("seed")) {
            (Some(_), Some(_)) => return Err(cfg_err("seed", "give either seed or seeds".into())),
            (Some((line, v)), None) => {
                let mut out = Vec::new();
                for part in v.split(',') {
                    out.push(part.trim().parse::<u64>().map_err(|_| Error::Config {
                        line,
                        msg: format!("seeds: cannot parse {part:?}"),
                    })?);
                }
                out
            }
            (None, Some(_)) => vec![e.parse("seed", 0u64)?],
            (None, None) => vec![0],
        };
        let qp_set = match e.get("set") {
            None | Some((_, "simplex")) => QpSet::Simplex,
            Some((_, "whole")) => QpSet::Whole,
            Some((_, "box")) => {
                let lo = e.real("box_lo", -1.0, |_| true, "finite")?;
                let hi = e.real("box_hi", 1.0, |v| v >= lo, "at least box_lo")?;
                QpSet::Box { lo, hi }
            }
            Some((_, v)) => return Err(cfg_err("set", format!("set must be simplex, box or whole, got {v:?}"))),
        };
        let reference = match e.get("reference") {
            None | Some((_, "auto")) => ReferenceMode::Auto,
            Some((_, "always")) => ReferenceMode::Always,
            Some((_, "never")) => ReferenceMode::Never,
            Some((_, v)) => {
                return Err(cfg_err(
                    "reference",
                    format!("reference must be auto, always or never, got {v:?}"),
                ))
            }
        };
        let n: usize = e.parse("n", if problem == ProblemKind::Portfolio { 100 } else { 20 })?;
        let min_n = if problem == ProblemKind::Portfolio { 2 } else { 1 };
        if n < min_n {
            return Err(cfg_err("n", format!("n must be at least {min_n}")));
        }
        let width: usize = e.parse("width", 16)?;
        let height: usize = e.parse("height", 16)?;
        if problem == ProblemKind::Tv && e.get("image").is_none() && (width < 2 || height < 2) {
            return Err(cfg_err("width", "images must be at least 2x2".into()));
        }
        let mu_f = e.real("mu_f", 1.0, |v| v > 0.0, "positive")?;
        let l_f = e.real("L_f", 100.0, |v| v >= mu_f, "at least mu_f")?;
        let c = e.real("c", 1.5, |v| v > 0.0 && v <= 1.5, "in (0, 3/2]")?;
        let b = e.real("b", 0.0, |v| v >= 0.0 && v <= 3.0 / c - 2.0, "in [0, 3/c - 2]")?;
        let output = match e.get("output") {
            Some((_, v)) => PathBuf::from(v),
            None => return Err(cfg_err("output", "missing required key `output`".into())),
        };
        Ok(Self {
            problem,
            algorithm,
            horizon,
            seeds,
            data_seed: e.parse("data_seed", 0u64)?,
            sigma: e.real("sigma", 0.0, |v| v >= 0.0, "non-negative")?,
            n,
            width,
            height,
            tau: e.real("tau", 1.0, |v| v > 0.0, "positive")?,
            rho: e.real("rho", 0.1, |v| v >= 0.0, "non-negative")?,
            mu_reg: e.real("mu_reg", 0.1, |v| v > 0.0, "positive")?,
            mu_f,
            l_f,
            qp_set,
            sigma_noise: e.real("sigma_noise", 0.05, |v| v >= 0.0, "non-negative")?,
            eta: e.real("eta", 1e-3, |v| v > 0.0, "positive")?,
            c,
            b,
            image: e.get("image").map(|(_, v)| PathBuf::from(v)),
            image_out: e.get("image_out").map(|(_, v)| PathBuf::from(v)),
            reference,
            output,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<RunConfig> {
        RunConfig::parse(s)
    }

    #[test]
    fn minimal_qp() {
        let c = parse("problem = qp\nN = 30\noutput = out.csv\n").unwrap();
        assert_eq!(c.problem, ProblemKind::Qp);
        assert_eq!(c.algorithm, Algorithm::RfSgs);
        assert_eq!(c.horizon, Horizon::Iterations(30));
        assert_eq!(c.seeds, vec![0]);
        assert_eq!(c.n, 20);
    }

    #[test]
    fn comments_and_lists() {
        let c = parse("# header\nproblem = tv # inline\neps = 0.01\nseeds = 4, 5,6\nwidth=8\nheight=8\noutput=x.csv")
            .unwrap();
        assert_eq!(c.algorithm, Algorithm::RfAsgs);
        assert_eq!(c.horizon, Horizon::Epsilon(0.01));
        assert_eq!(c.seeds, vec![4, 5, 6]);
    }

    fn line_of(err: Error) -> usize {
        match err {
            Error::Config { line, .. } => line,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn diagnostics_point_at_lines() {
        assert_eq!(
            line_of(parse("problem = qp\nN = 3\nsigma = -1\noutput = o").unwrap_err()),
            3
        );
        assert_eq!(line_of(parse("problem = qp\nbogus = 1\n").unwrap_err()), 2);
        assert_eq!(line_of(parse("problem = qp\nN = three\noutput = o").unwrap_err()), 2);
        assert_eq!(line_of(parse("problem = qp\nN 3\n").unwrap_err()), 2);
        assert_eq!(line_of(parse("problem = qp\nN = 3\nN = 4\n").unwrap_err()), 3);
        assert_eq!(
            line_of(parse("problem = tv\nalgorithm = rf-sgs\nN = 1\noutput = o").unwrap_err()),
            2
        );
        assert_eq!(line_of(parse("problem = qp\nN = 1\nc = 2\noutput = o").unwrap_err()), 3);
        assert!(matches!(parse("N = 3\noutput = o"), Err(Error::Config { .. })));
        assert!(matches!(parse("problem = qp\noutput = o"), Err(Error::Config { .. })));
        assert!(matches!(parse("problem = qp\nN = 2"), Err(Error::Config { .. })));
    }
}
