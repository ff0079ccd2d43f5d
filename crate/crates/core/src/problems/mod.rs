//! Test and benchmark problem families.

pub mod pgm;
pub mod portfolio;
pub mod qp;
pub mod tv;

pub use pgm::{read_pgm, write_pgm, GrayImage};
pub use portfolio::{make_portfolio, PortfolioInstance};
pub use qp::{make_qp, SetKind, SyntheticQp};
pub use tv::{make_tv, phantom, FiniteDifference2D, ImageSource, TvInstance};
