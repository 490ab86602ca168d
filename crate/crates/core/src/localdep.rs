//! Local dependence: chi-plots and Kendall's tau restricted to quantile
//! regions, with Monte Carlo theoretical layers from a fitted copula.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::copula::{kendall_tau, kendall_tau_empirical, CopulaModel, PseudoSample};
use crate::error::{Error, Result};
#[allow(unused_imports)] // std inherents shadow it when std is linked
use num_traits::Float;

pub const QUANTILE_MIN: f64 = 0.05;
pub const QUANTILE_MAX: f64 = 0.95;
pub const DEFAULT_MIN_COUNT: usize = 30;
pub const DEFAULT_MC_N: usize = 5000;
/// 95% Fisher-Switzer constant for the chi-plot band `c_p / sqrt(n)`.
pub const CHI_BAND_95: f64 = 1.78;
pub const CHI_FIXED_BAND: f64 = 0.05;
const MIN_CHI_LEN: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiPlotPoints {
    pub lambda: Vec<f64>,
    pub chi: Vec<f64>,
    /// `1.78 / sqrt(n)` with `n` the input length.
    pub control_band: f64,
    pub fixed_band: f64,
    /// Input indices of the retained points.
    pub index: Vec<usize>,
    pub n: usize,
}

impl ChiPlotPoints {
    pub fn len(&self) -> usize {
        self.chi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chi.is_empty()
    }

    /// Fraction of retained points with `|chi| > band`.
    pub fn exceedance_rate(&self, band: f64) -> f64 {
        if self.chi.is_empty() {
            return 0.0;
        }
        self.chi.iter().filter(|c| c.abs() > band).count() as f64 / self.chi.len() as f64
    }
}

/// Chi-plot coordinates from leave-one-out empirical proportions.
/// Points whose marginal proportion is 0 or 1 are dropped.
pub fn chi_plot(x: &[f64], y: &[f64]) -> Result<ChiPlotPoints> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < MIN_CHI_LEN {
        return Err(Error::TooShort {
            needed: MIN_CHI_LEN,
            got: n,
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Precondition("chi-plot input must be finite".into()));
    }
    let d = (n - 1) as f64;
    let mut out = ChiPlotPoints {
        lambda: Vec::new(),
        chi: Vec::new(),
        control_band: CHI_BAND_95 / (n as f64).sqrt(),
        fixed_band: CHI_FIXED_BAND,
        index: Vec::new(),
        n,
    };
    for i in 0..n {
        let (mut h, mut f, mut g) = (0usize, 0usize, 0usize);
        for j in 0..n {
            if j == i {
                continue;
            }
            let bx = x[j] <= x[i];
            let by = y[j] <= y[i];
            f += bx as usize;
            g += by as usize;
            h += (bx && by) as usize;
        }
        let (h, f, g) = (h as f64 / d, f as f64 / d, g as f64 / d);
        if f <= 0.0 || f >= 1.0 || g <= 0.0 || g >= 1.0 {
            continue;
        }
        let (df, dg) = (f - 0.5, g - 0.5);
        let s = if df * dg >= 0.0 { 1.0 } else { -1.0 };
        out.lambda.push(4.0 * s * (df * df).max(dg * dg));
        out.chi.push((h - f * g) / (f * (1.0 - f) * g * (1.0 - g)).sqrt());
        out.index.push(i);
    }
    if out.chi.is_empty() {
        return Err(Error::Degenerate(
            "every chi-plot point lies on an empirical margin edge",
        ));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionKind {
    /// Both coordinates at or below their quantile.
    LL,
    /// Both at or above.
    UU,
    /// First above, second below.
    UL,
    /// First below, second above.
    LU,
}

impl RegionKind {
    pub fn name(self) -> &'static str {
        match self {
            RegionKind::LL => "LL",
            RegionKind::UU => "UU",
            RegionKind::UL => "UL",
            RegionKind::LU => "LU",
        }
    }
}

impl core::fmt::Display for RegionKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

impl core::str::FromStr for RegionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "LL" => Ok(RegionKind::LL),
            "UU" => Ok(RegionKind::UU),
            "UL" => Ok(RegionKind::UL),
            "LU" => Ok(RegionKind::LU),
            _ => Err(Error::InvalidParameter(alloc::format!("unknown region kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileRegion {
    pub kind: RegionKind,
    pub p: f64,
    pub q: f64,
}

impl QuantileRegion {
    pub fn new(kind: RegionKind, p: f64, q: f64) -> Result<Self> {
        let ok = |x: f64| (QUANTILE_MIN - 1e-12..=QUANTILE_MAX + 1e-12).contains(&x);
        if !ok(p) || !ok(q) {
            return Err(Error::Precondition(alloc::format!(
                "region quantiles ({p}, {q}) outside [0.05, 0.95]"
            )));
        }
        Ok(Self { kind, p, q })
    }

    #[inline]
    pub fn contains(&self, u: f64, v: f64) -> bool {
        match self.kind {
            RegionKind::LL => u <= self.p && v <= self.q,
            RegionKind::UU => u >= self.p && v >= self.q,
            RegionKind::UL => u >= self.p && v <= self.q,
            RegionKind::LU => u <= self.p && v >= self.q,
        }
    }
}

/// A local tau estimate; `tau` is `None` when fewer than `min_count` points fall in the region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalTau {
    pub tau: Option<f64>,
    pub count: usize,
}

fn restricted_tau(s: &PseudoSample, r: &QuantileRegion, min_count: usize) -> LocalTau {
    let (mut u, mut v) = (Vec::new(), Vec::new());
    for (&a, &b) in s.u.iter().zip(&s.v) {
        if r.contains(a, b) {
            u.push(a);
            v.push(b);
        }
    }
    let count = u.len();
    let tau = if count >= min_count.max(2) {
        kendall_tau(&u, &v).ok()
    } else {
        None
    };
    LocalTau { tau, count }
}

/// Sample Kendall's tau of the pairs falling in the region.
pub fn local_tau_empirical(s: &PseudoSample, r: &QuantileRegion, min_count: usize) -> LocalTau {
    restricted_tau(s, r, min_count)
}

/// Monte Carlo local tau from `mc_n` draws of the model.
pub fn local_tau_theoretical(
    c: &CopulaModel,
    r: &QuantileRegion,
    mc_n: usize,
    seed: u64,
    min_count: usize,
) -> Result<LocalTau> {
    let sim = c.sample(mc_n, seed)?;
    Ok(restricted_tau(&sim, r, min_count))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalOptions {
    pub mc_n: usize,
    pub seed: u64,
    pub min_count: usize,
    /// Draw a fresh Monte Carlo sample per cell instead of sharing one.
    pub fresh_draws: bool,
}

impl Default for LocalOptions {
    fn default() -> Self {
        Self {
            mc_n: DEFAULT_MC_N,
            seed: 0,
            min_count: DEFAULT_MIN_COUNT,
            fresh_draws: false,
        }
    }
}

fn cell_seed(seed: u64, cell: usize) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ (cell as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Theoretical<'a> {
    model: &'a CopulaModel,
    opts: &'a LocalOptions,
    shared: Option<PseudoSample>,
}

impl<'a> Theoretical<'a> {
    fn new(model: &'a CopulaModel, opts: &'a LocalOptions) -> Result<Self> {
        model.validate()?;
        let shared = if opts.fresh_draws {
            None
        } else {
            Some(model.sample(opts.mc_n, opts.seed)?)
        };
        Ok(Self { model, opts, shared })
    }

    fn cell(&self, r: &QuantileRegion, idx: usize) -> Result<LocalTau> {
        match &self.shared {
            Some(s) => Ok(restricted_tau(s, r, self.opts.min_count)),
            None => local_tau_theoretical(
                self.model,
                r,
                self.opts.mc_n,
                cell_seed(self.opts.seed, idx),
                self.opts.min_count,
            ),
        }
    }
}

/// Evenly spaced quantiles from 0.05 to 0.95; `(0.95 - 0.05) / step + 1` of them.
pub fn quantile_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step <= QUANTILE_MAX - QUANTILE_MIN) {
        return Err(Error::InvalidParameter(alloc::format!("grid step {step}")));
    }
    let m = ((QUANTILE_MAX - QUANTILE_MIN) / step + 1e-9).floor() as usize;
    Ok((0..=m)
        .map(|i| {
            let x = QUANTILE_MIN + i as f64 * step;
            (x * 1e10).round() / 1e10
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagonalPoint {
    pub p: f64,
    pub theoretical: LocalTau,
    pub empirical: LocalTau,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalProfile {
    pub points: Vec<DiagonalPoint>,
    pub global_theoretical: f64,
    pub global_empirical: f64,
}

/// Local tau along the main diagonal: `LL(p, p)` for `p <= 0.5`, `UU(p, p)` above.
pub fn diagonal_profile(
    c: &CopulaModel,
    s: &PseudoSample,
    grid: &[f64],
    opts: &LocalOptions,
) -> Result<DiagonalProfile> {
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Precondition("diagonal grid must be strictly increasing".into()));
    }
    let theo = Theoretical::new(c, opts)?;
    let mut points = Vec::with_capacity(grid.len());
    for (i, &p) in grid.iter().enumerate() {
        let kind = if p <= 0.5 { RegionKind::LL } else { RegionKind::UU };
        let r = QuantileRegion::new(kind, p, p)?;
        points.push(DiagonalPoint {
            p,
            theoretical: theo.cell(&r, i)?,
            empirical: local_tau_empirical(s, &r, opts.min_count),
        });
    }
    Ok(DiagonalProfile {
        points,
        global_theoretical: c.kendall_tau()?,
        global_empirical: kendall_tau_empirical(s)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauSurface {
    pub kind: RegionKind,
    pub grid: Vec<f64>,
    /// Row-major over `(p, q)`: index `i * grid.len() + j` is `(grid[i], grid[j])`.
    pub theoretical: Vec<LocalTau>,
    pub empirical: Vec<LocalTau>,
    pub min_count: usize,
}

impl TauSurface {
    pub fn side(&self) -> usize {
        self.grid.len()
    }

    pub fn theoretical_at(&self, i: usize, j: usize) -> LocalTau {
        self.theoretical[i * self.side() + j]
    }

    pub fn empirical_at(&self, i: usize, j: usize) -> LocalTau {
        self.empirical[i * self.side() + j]
    }
}

/// Theoretical and empirical local-tau surfaces over the `(p, q)` lattice.
/// For `UU` the grid values act as lower bounds of the region.
pub fn tail_surface(
    c: &CopulaModel,
    s: &PseudoSample,
    kind: RegionKind,
    grid_step: f64,
    opts: &LocalOptions,
) -> Result<TauSurface> {
    let grid = quantile_grid(grid_step)?;
    let theo = Theoretical::new(c, opts)?;
    let m = grid.len();
    let mut theoretical = Vec::with_capacity(m * m);
    let mut empirical = Vec::with_capacity(m * m);
    for (i, &p) in grid.iter().enumerate() {
        for (j, &q) in grid.iter().enumerate() {
            let r = QuantileRegion::new(kind, p, q)?;
            theoretical.push(theo.cell(&r, i * m + j)?);
            empirical.push(local_tau_empirical(s, &r, opts.min_count));
        }
    }
    Ok(TauSurface {
        kind,
        grid,
        theoretical,
        empirical,
        min_count: opts.min_count,
    })
}
