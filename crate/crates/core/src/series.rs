//! Price and return series, log returns and descriptive statistics.

use alloc::string::String;
use alloc::vec::Vec;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::chi2_sf;
#[allow(unused_imports)] // std inherents shadow it when std is linked
use num_traits::Float;

/// Dated index levels with strictly increasing dates and positive prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub name: String,
    pub dates: Vec<NaiveDate>,
    pub prices: Vec<f64>,
}

impl PriceSeries {
    pub fn new(name: impl Into<String>, dates: Vec<NaiveDate>, prices: Vec<f64>) -> Result<Self> {
        if dates.len() != prices.len() {
            return Err(Error::LengthMismatch(dates.len(), prices.len()));
        }
        if dates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Precondition("dates must be strictly increasing".into()));
        }
        if prices.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(Error::Precondition("prices must be finite and positive".into()));
        }
        Ok(Self {
            name: name.into(),
            dates,
            prices,
        })
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }
}

/// Percent log returns, dated by the later of the two observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReturnSeries {
    pub name: String,
    pub dates: Vec<NaiveDate>,
    pub returns: Vec<f64>,
}

impl ReturnSeries {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }
}

/// `r_t = 100 (ln p_{t+1} - ln p_t)`.
pub fn log_returns(p: &PriceSeries) -> Result<ReturnSeries> {
    if p.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: p.len(),
        });
    }
    let returns = p.prices.windows(2).map(|w| 100.0 * (w[1].ln() - w[0].ln())).collect();
    Ok(ReturnSeries {
        name: p.name.clone(),
        dates: p.dates[1..].to_vec(),
        returns,
    })
}

/// Restricts two series to their common dates, preserving order.
pub fn inner_join(a: &ReturnSeries, b: &ReturnSeries) -> (Vec<NaiveDate>, Vec<f64>, Vec<f64>) {
    let (mut i, mut j) = (0, 0);
    let mut dates = Vec::new();
    let mut xa = Vec::new();
    let mut xb = Vec::new();
    while i < a.len() && j < b.len() {
        match a.dates[i].cmp(&b.dates[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                dates.push(a.dates[i]);
                xa.push(a.returns[i]);
                xb.push(b.returns[j]);
                i += 1;
                j += 1;
            }
        }
    }
    (dates, xa, xb)
}

/// Table-1 style summary. Kurtosis is raw (normal = 3); skewness and
/// kurtosis use population central moments; `std_dev` uses `n - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub mean: f64,
    pub median: f64,
    pub max: f64,
    pub min: f64,
    pub std_dev: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub jarque_bera_stat: f64,
    pub jarque_bera_pvalue: f64,
    pub n: usize,
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with `n - 1` denominator.
pub fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn summary_stats(r: &[f64]) -> Result<SummaryStats> {
    let n = r.len();
    if n < 8 {
        return Err(Error::TooShort { needed: 8, got: n });
    }
    if r.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("returns must be finite".into()));
    }
    let m = mean(r);
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in r {
        let d = v - m;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    let nf = n as f64;
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;
    if m2 <= f64::EPSILON * m.abs().max(1.0).powi(2) {
        return Err(Error::Degenerate("zero variance series"));
    }
    let skewness = m3 / m2.powf(1.5);
    let kurtosis = m4 / (m2 * m2);
    let jb = nf / 6.0 * (skewness * skewness + 0.25 * (kurtosis - 3.0).powi(2));
    let (min, max) = r.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    Ok(SummaryStats {
        mean: m,
        median: median(r),
        max,
        min,
        std_dev: (m2 * nf / (nf - 1.0)).sqrt(),
        skewness,
        kurtosis,
        jarque_bera_stat: jb,
        jarque_bera_pvalue: chi2_sf(jb, 2.0),
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn day(i: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2005, 1, 3).unwrap() + chrono::Days::new(i as u64)
    }

    fn prices(p: &[f64]) -> PriceSeries {
        PriceSeries::new("x", (0..p.len() as u32).map(day).collect(), p.to_vec()).unwrap()
    }

    #[test]
    fn log_return_examples() {
        assert_eq!(log_returns(&prices(&[100.0, 100.0])).unwrap().returns, vec![0.0]);
        let r = log_returns(&prices(&[100.0, 101.0])).unwrap();
        assert!((r.returns[0] - 0.995033085316809).abs() < 1e-12);
        assert_eq!(r.dates, vec![day(1)]);
        let r = log_returns(&prices(&[100.0, 90.0])).unwrap();
        assert!((r.returns[0] + 10.536051565782628).abs() < 1e-12);
    }

    #[test]
    fn too_short_series_rejected() {
        assert!(matches!(log_returns(&prices(&[100.0])), Err(Error::TooShort { .. })));
    }

    #[test]
    fn price_series_invariants() {
        assert!(PriceSeries::new("x", vec![day(1), day(1)], vec![1.0, 2.0]).is_err());
        assert!(PriceSeries::new("x", vec![day(1), day(2)], vec![1.0, 0.0]).is_err());
        assert!(PriceSeries::new("x", vec![day(1)], vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn symmetric_sample_has_zero_skew() {
        let s = summary_stats(&[-1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(s.mean, 0.0);
        assert_eq!(s.skewness, 0.0);
        assert_eq!(s.median, 0.0);
        // m2 = 0.5, m4 = 0.5 -> kurtosis 2
        assert!((s.kurtosis - 2.0).abs() < 1e-15);
        assert!((s.jarque_bera_stat - 8.0 / 6.0 * 0.25).abs() < 1e-12);
    }

    #[test]
    fn constant_series_is_degenerate() {
        assert!(matches!(summary_stats(&[2.5; 20]), Err(Error::Degenerate(_))));
    }

    #[test]
    fn inner_join_keeps_common_dates() {
        let a = ReturnSeries {
            name: "a".into(),
            dates: vec![day(1), day(2), day(4)],
            returns: vec![1.0, 2.0, 4.0],
        };
        let b = ReturnSeries {
            name: "b".into(),
            dates: vec![day(2), day(3), day(4)],
            returns: vec![20.0, 30.0, 40.0],
        };
        let (d, x, y) = inner_join(&a, &b);
        assert_eq!(d, vec![day(2), day(4)]);
        assert_eq!(x, vec![2.0, 4.0]);
        assert_eq!(y, vec![20.0, 40.0]);
    }

    proptest! {
        #[test]
        fn returns_invariant_to_price_scale(
            p in proptest::collection::vec(1.0f64..1000.0, 2..40),
            c in 0.01f64..100.0,
        ) {
            let a = log_returns(&prices(&p)).unwrap();
            let scaled: Vec<f64> = p.iter().map(|v| v * c).collect();
            let b = log_returns(&prices(&scaled)).unwrap();
            for (x, y) in a.returns.iter().zip(&b.returns) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }

        #[test]
        fn moment_bounds(x in proptest::collection::vec(-50.0f64..50.0, 8..200)) {
            if let Ok(s) = summary_stats(&x) {
                prop_assert!(s.kurtosis >= s.skewness * s.skewness + 1.0 - 1e-9);
                prop_assert!(s.jarque_bera_stat >= 0.0);
                prop_assert!(s.min <= s.median && s.median <= s.max);
                prop_assert!(s.std_dev >= 0.0);
            }
        }
    }
}
