//! Cold-started rolling windows fitted concurrently.

use chrono::NaiveDate;
use copdep_core::copula::{Family, PseudoSample};
use copdep_core::fitting::{
    assemble_path, check_rolling_inputs, fit_window, rolling_windows, RollingOptions, RollingPath,
};
use rayon::prelude::*;

use crate::error::Result;

/// Same windows as the sequential path, each fitted from its own cold start.
/// Results do not depend on scheduling.
pub fn rolling_fit_parallel(
    dates: &[NaiveDate],
    s: &PseudoSample,
    family: Family,
    opts: &RollingOptions,
) -> Result<RollingPath> {
    check_rolling_inputs(dates, s, opts)?;
    let fits = rolling_windows(s.len(), opts.window, opts.step)
        .into_par_iter()
        .map(|range| fit_window(family, s, range, opts.min_distinct, None))
        .collect();
    Ok(assemble_path(family, dates, opts, fits))
}
