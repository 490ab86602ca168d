//! Gumbel and Clayton copulas, their 180-degree rotations, the product
//! copula and the four two-component mixtures.
//!
//! A [`CopulaModel`] is a tagged family with a flat parameter vector:
//!
//! | family       | params                         |
//! |--------------|--------------------------------|
//! | `Gumbel`     | `[alpha]`, alpha >= 1          |
//! | `RotGumbel`  | `[alpha]`                      |
//! | `Clayton`    | `[theta]`, theta > 0           |
//! | `RotClayton` | `[theta]`                      |
//! | `Product`    | `[]`                           |
//! | `Mix1`       | `[phi, alpha_G, theta_CL]`     |
//! | `Mix2`       | `[phi, alpha_rG, theta_rCL]`   |
//! | `Mix3`       | `[phi, alpha_G, alpha_rG]`     |
//! | `Mix4`       | `[phi, theta_CL, theta_rCL]`   |
//!
//! Mixtures are `phi * C1 + (1 - phi) * C2` with the components in the
//! order listed.

mod kernel;
mod rank;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub(crate) use kernel::Point;
use kernel::{Component, Generator};
#[allow(unused_imports)] // std inherents shadow it when std is linked
use num_traits::Float;
pub use rank::{average_ranks, kendall_tau, pseudo_observations};

/// Densities are only evaluated on `[DENSITY_EPS, 1 - DENSITY_EPS]`.
pub const DENSITY_EPS: f64 = 1e-10;

/// Grid size per axis for the numerical Kendall's tau.
pub const TAU_GRID: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Gumbel,
    RotGumbel,
    Clayton,
    RotClayton,
    Product,
    Mix1,
    Mix2,
    Mix3,
    Mix4,
}

impl Family {
    pub const INDIVIDUAL: [Family; 4] = [Family::Gumbel, Family::RotGumbel, Family::Clayton, Family::RotClayton];
    pub const MIXTURES: [Family; 4] = [Family::Mix1, Family::Mix2, Family::Mix3, Family::Mix4];
    /// The eight candidates compared during model selection.
    pub const CANDIDATES: [Family; 8] = [
        Family::Gumbel,
        Family::RotGumbel,
        Family::Clayton,
        Family::RotClayton,
        Family::Mix1,
        Family::Mix2,
        Family::Mix3,
        Family::Mix4,
    ];

    pub fn n_params(self) -> usize {
        match self {
            Family::Product => 0,
            Family::Gumbel | Family::RotGumbel | Family::Clayton | Family::RotClayton => 1,
            _ => 3,
        }
    }

    pub fn is_mixture(self) -> bool {
        self.n_params() == 3
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Gumbel => "Gumbel",
            Family::RotGumbel => "RotGumbel",
            Family::Clayton => "Clayton",
            Family::RotClayton => "RotClayton",
            Family::Product => "Product",
            Family::Mix1 => "Mix1",
            Family::Mix2 => "Mix2",
            Family::Mix3 => "Mix3",
            Family::Mix4 => "Mix4",
        }
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::Gumbel | Family::RotGumbel => &["alpha"],
            Family::Clayton | Family::RotClayton => &["theta"],
            Family::Product => &[],
            Family::Mix1 => &["phi", "alpha_g", "theta_cl"],
            Family::Mix2 => &["phi", "alpha_rg", "theta_rcl"],
            Family::Mix3 => &["phi", "alpha_g", "alpha_rg"],
            Family::Mix4 => &["phi", "theta_cl", "theta_rcl"],
        }
    }

    /// For each parameter, whether it is Gumbel-type (`>= 1`), Clayton-type
    /// (`> 0`) or a mixture weight.
    pub(crate) fn param_kinds(self) -> &'static [ParamKind] {
        use ParamKind::*;
        match self {
            Family::Gumbel | Family::RotGumbel => &[GumbelAlpha],
            Family::Clayton | Family::RotClayton => &[ClaytonTheta],
            Family::Product => &[],
            Family::Mix1 | Family::Mix2 => &[Weight, GumbelAlpha, ClaytonTheta],
            Family::Mix3 => &[Weight, GumbelAlpha, GumbelAlpha],
            Family::Mix4 => &[Weight, ClaytonTheta, ClaytonTheta],
        }
    }

    /// Individual families making up a mixture, in weight order.
    pub fn components(self) -> Option<(Family, Family)> {
        match self {
            Family::Mix1 => Some((Family::Gumbel, Family::Clayton)),
            Family::Mix2 => Some((Family::RotGumbel, Family::RotClayton)),
            Family::Mix3 => Some((Family::Gumbel, Family::RotGumbel)),
            Family::Mix4 => Some((Family::Clayton, Family::RotClayton)),
            _ => None,
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: alloc::string::String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        Ok(match key.as_str() {
            "gumbel" | "g" => Family::Gumbel,
            "rotgumbel" | "rotatedgumbel" | "rg" => Family::RotGumbel,
            "clayton" | "cl" => Family::Clayton,
            "rotclayton" | "rotatedclayton" | "rcl" => Family::RotClayton,
            "product" | "independence" => Family::Product,
            "mix1" => Family::Mix1,
            "mix2" => Family::Mix2,
            "mix3" => Family::Mix3,
            "mix4" => Family::Mix4,
            _ => return Err(Error::InvalidParameter(format!("unknown copula family `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ParamKind {
    Weight,
    GumbelAlpha,
    ClaytonTheta,
}

#[derive(Debug, Clone, Copy)]
enum Structure {
    Single(Component),
    Mixture {
        weight: f64,
        first: Component,
        second: Component,
    },
}

/// A copula family together with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaModel {
    pub family: Family,
    pub params: Vec<f64>,
}

/// Paired uniforms on the open unit square.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoSample {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl PseudoSample {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if u.len() != v.len() {
            return Err(Error::LengthMismatch(u.len(), v.len()));
        }
        if u.iter().chain(&v).any(|x| !(*x > 0.0 && *x < 1.0)) {
            return Err(Error::Precondition("pseudo-observations must lie in (0, 1)".into()));
        }
        Ok(Self { u, v })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Sub-sample by index range.
    pub fn slice(&self, range: core::ops::Range<usize>) -> PseudoSample {
        PseudoSample {
            u: self.u[range.clone()].to_vec(),
            v: self.v[range].to_vec(),
        }
    }
}

fn check_kind(kind: ParamKind, x: f64) -> Result<()> {
    let ok = x.is_finite()
        && match kind {
            ParamKind::Weight => (0.0..=1.0).contains(&x),
            ParamKind::GumbelAlpha => x >= 1.0,
            ParamKind::ClaytonTheta => x > 0.0,
        };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter(match kind {
            ParamKind::Weight => format!("mixture weight {x} outside [0, 1]"),
            ParamKind::GumbelAlpha => format!("Gumbel alpha {x} must be >= 1"),
            ParamKind::ClaytonTheta => format!("Clayton theta {x} must be > 0"),
        }))
    }
}

fn component(family: Family, p: f64) -> Component {
    match family {
        Family::Gumbel => Component {
            generator: Generator::Gumbel(p),
            rotated: false,
        },
        Family::RotGumbel => Component {
            generator: Generator::Gumbel(p),
            rotated: true,
        },
        Family::Clayton => Component {
            generator: Generator::Clayton(p),
            rotated: false,
        },
        Family::RotClayton => Component {
            generator: Generator::Clayton(p),
            rotated: true,
        },
        _ => Component {
            generator: Generator::Independence,
            rotated: false,
        },
    }
}

impl CopulaModel {
    pub fn new(family: Family, params: Vec<f64>) -> Result<Self> {
        let m = Self { family, params };
        m.validate()?;
        Ok(m)
    }

    pub fn product() -> Self {
        Self {
            family: Family::Product,
            params: Vec::new(),
        }
    }

    pub fn gumbel(alpha: f64) -> Result<Self> {
        Self::new(Family::Gumbel, vec![alpha])
    }

    pub fn rot_gumbel(alpha: f64) -> Result<Self> {
        Self::new(Family::RotGumbel, vec![alpha])
    }

    pub fn clayton(theta: f64) -> Result<Self> {
        Self::new(Family::Clayton, vec![theta])
    }

    pub fn rot_clayton(theta: f64) -> Result<Self> {
        Self::new(Family::RotClayton, vec![theta])
    }

    pub fn mixture(family: Family, weight: f64, first: f64, second: f64) -> Result<Self> {
        if !family.is_mixture() {
            return Err(Error::InvalidParameter(format!("{family} is not a mixture")));
        }
        Self::new(family, vec![weight, first, second])
    }

    pub fn validate(&self) -> Result<()> {
        let kinds = self.family.param_kinds();
        if kinds.len() != self.params.len() {
            return Err(Error::InvalidParameter(format!(
                "{} expects {} parameters, got {}",
                self.family,
                kinds.len(),
                self.params.len()
            )));
        }
        kinds.iter().zip(&self.params).try_for_each(|(&k, &x)| check_kind(k, x))
    }

    fn structure(&self) -> Structure {
        match self.family.components() {
            Some((f1, f2)) => Structure::Mixture {
                weight: self.params[0],
                first: component(f1, self.params[1]),
                second: component(f2, self.params[2]),
            },
            None => Structure::Single(component(self.family, self.params.first().copied().unwrap_or(1.0))),
        }
    }

    /// Number of free parameters (1 for individual families, 3 for mixtures).
    pub fn n_free(&self) -> usize {
        self.family.n_params()
    }

    /// `C(u, v)` on the closed unit square.
    pub fn cdf(&self, u: f64, v: f64) -> Result<f64> {
        self.validate()?;
        if !((0.0..=1.0).contains(&u) && (0.0..=1.0).contains(&v)) {
            return Err(Error::Precondition(format!("({u}, {v}) outside the unit square")));
        }
        Ok(self.cdf_unchecked(u, v))
    }

    pub(crate) fn cdf_unchecked(&self, u: f64, v: f64) -> f64 {
        match self.structure() {
            Structure::Single(c) => c.cdf(u, v),
            Structure::Mixture { weight, first, second } => {
                weight * first.cdf(u, v) + (1.0 - weight) * second.cdf(u, v)
            }
        }
    }

    /// Density `d2C/du dv`. Inputs are clamped into `[DENSITY_EPS, 1 - DENSITY_EPS]`;
    /// the flag reports whether clamping happened.
    pub fn pdf_flagged(&self, u: f64, v: f64) -> Result<(f64, bool)> {
        self.validate()?;
        if !(u.is_finite() && v.is_finite()) {
            return Err(Error::Precondition("non-finite input".into()));
        }
        let uc = u.clamp(DENSITY_EPS, 1.0 - DENSITY_EPS);
        let vc = v.clamp(DENSITY_EPS, 1.0 - DENSITY_EPS);
        let lp = self.log_pdf_at(&Point::new(uc, vc));
        Ok((lp.exp(), uc != u || vc != v))
    }

    pub fn pdf(&self, u: f64, v: f64) -> Result<f64> {
        self.pdf_flagged(u, v).map(|(d, _)| d)
    }

    pub fn log_pdf(&self, u: f64, v: f64) -> Result<f64> {
        self.validate()?;
        let uc = u.clamp(DENSITY_EPS, 1.0 - DENSITY_EPS);
        let vc = v.clamp(DENSITY_EPS, 1.0 - DENSITY_EPS);
        Ok(self.log_pdf_at(&Point::new(uc, vc)))
    }

    pub(crate) fn log_pdf_at(&self, p: &Point) -> f64 {
        match self.structure() {
            Structure::Single(c) => c.log_pdf(p),
            Structure::Mixture { weight, first, second } => {
                let a = if weight > 0.0 {
                    weight.ln() + first.log_pdf(p)
                } else {
                    f64::NEG_INFINITY
                };
                let b = if weight < 1.0 {
                    (1.0 - weight).ln() + second.log_pdf(p)
                } else {
                    f64::NEG_INFINITY
                };
                crate::special::log_add_exp(a, b)
            }
        }
    }

    /// Conditional distribution `dC/du (u, v)`.
    pub fn h(&self, u: f64, v: f64) -> f64 {
        match self.structure() {
            Structure::Single(c) => c.h(u, v),
            Structure::Mixture { weight, first, second } => weight * first.h(u, v) + (1.0 - weight) * second.h(u, v),
        }
    }

    /// i.i.d. draws, deterministic for a given seed.
    pub fn sample(&self, n: usize, seed: u64) -> Result<PseudoSample> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(n, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<PseudoSample> {
        self.validate()?;
        if n == 0 {
            return Err(Error::Precondition("sample size must be >= 1".into()));
        }
        let structure = self.structure();
        let mut u = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            let (a, b) = match structure {
                Structure::Single(c) => c.sample(rng),
                Structure::Mixture { weight, first, second } => {
                    if rng.random::<f64>() < weight {
                        first.sample(rng)
                    } else {
                        second.sample(rng)
                    }
                }
            };
            u.push(a);
            v.push(b);
        }
        Ok(PseudoSample { u, v })
    }

    /// `n` draws of the `dim`-dimensional exchangeable extension (one shared
    /// frailty per draw; mixtures pick a component per draw). Row-major output.
    pub fn sample_exchangeable(&self, dim: usize, n: usize, seed: u64) -> Result<Vec<f64>> {
        self.validate()?;
        if dim < 2 || n == 0 {
            return Err(Error::Precondition("need dim >= 2 and n >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let structure = self.structure();
        let mut out = vec![0.0; dim * n];
        for row in out.chunks_mut(dim) {
            let c = match structure {
                Structure::Single(c) => c,
                Structure::Mixture { weight, first, second } => {
                    if rng.random::<f64>() < weight {
                        first
                    } else {
                        second
                    }
                }
            };
            c.sample_into(&mut rng, row);
        }
        Ok(out)
    }

    /// Global Kendall's tau: closed form for individual families, numerical
    /// integration for mixtures.
    pub fn kendall_tau(&self) -> Result<f64> {
        self.validate()?;
        match self.structure() {
            Structure::Single(c) => Ok(c.tau()),
            Structure::Mixture { .. } => self.kendall_tau_numeric(TAU_GRID),
        }
    }

    /// `tau = 4 E[C(U, V)] - 1`, evaluated through the equivalent form
    /// `1 - 4 * int int dC/du * dC/dv du dv` with an `grid x grid` midpoint rule.
    /// The integrand is bounded, unlike `C * c`.
    pub fn kendall_tau_numeric(&self, grid: usize) -> Result<f64> {
        self.validate()?;
        let h = 1.0 / grid as f64;
        let nodes: Vec<f64> = (0..grid).map(|i| (i as f64 + 0.5) * h).collect();
        // dC/du on the grid; exchangeability gives dC/dv(u, v) = dC/du(v, u).
        let mut du = vec![0.0; grid * grid];
        for (i, &u) in nodes.iter().enumerate() {
            for (j, &v) in nodes.iter().enumerate() {
                du[i * grid + j] = self.h(u, v);
            }
        }
        let mut acc = 0.0;
        for i in 0..grid {
            for j in 0..grid {
                acc += du[i * grid + j] * du[j * grid + i];
            }
        }
        let tau = 1.0 - 4.0 * acc * h * h;
        if !tau.is_finite() || tau.abs() > 1.0 + 1e-9 {
            return Err(Error::NonConvergence(grid));
        }
        Ok(tau.clamp(-1.0, 1.0))
    }

    /// `(lambda_lower, lambda_upper)`; mixtures weight their components.
    pub fn tail_dependence(&self) -> Result<(f64, f64)> {
        self.validate()?;
        Ok(match self.structure() {
            Structure::Single(c) => c.tail_dependence(),
            Structure::Mixture { weight, first, second } => {
                let (l1, u1) = first.tail_dependence();
                let (l2, u2) = second.tail_dependence();
                (weight * l1 + (1.0 - weight) * l2, weight * u1 + (1.0 - weight) * u2)
            }
        })
    }
}

/// Empirical Kendall's tau of a pseudo-sample.
pub fn kendall_tau_empirical(s: &PseudoSample) -> Result<f64> {
    kendall_tau(&s.u, &s.v)
}
