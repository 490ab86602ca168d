//! Numerical core for copula-based co-movement analysis of return series.
//!
//! The crate is `no_std` (with `alloc`) and contains only pure computation:
//! ARMA-GARCH Student-t marginal filtering, Archimedean copulas and their
//! mixtures, pseudo-likelihood fitting, local Kendall's tau surfaces and
//! DCC-based hedge ratios. File formats, the pipeline and the command line
//! live in the `copdep` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod copula;
pub mod error;
pub mod fitting;
pub mod linalg;
pub mod localdep;
pub mod marginal;
pub mod optim;
pub mod portfolio;
pub mod series;
pub mod special;

pub use copula::{CopulaModel, Family, PseudoSample};
pub use error::{Error, Result};
pub use fitting::{FitResult, RollingPath, SelectionTable};
pub use localdep::{ChiPlotPoints, QuantileRegion, RegionKind, TauSurface};
pub use marginal::{GarchParams, MarginalFit, MarginalSpec};
pub use portfolio::{DccFit, HedgePath, WeightPath};
pub use series::{PriceSeries, ReturnSeries, SummaryStats};
