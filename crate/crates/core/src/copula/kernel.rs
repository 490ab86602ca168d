//! Closed-form building blocks of the Gumbel and Clayton generators and
//! their 180-degree rotations.

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Open01};

use crate::special::log_add_exp;
#[allow(unused_imports)] // std inherents shadow it when std is linked
use num_traits::Float;

/// Per-observation logarithms shared by every density evaluation.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Point {
    pub lu: f64,
    pub lv: f64,
    /// ln(-ln u), ln(-ln v)
    pub lx: f64,
    pub ly: f64,
    /// the same quantities at (1 - u, 1 - v)
    pub lu_r: f64,
    pub lv_r: f64,
    pub lx_r: f64,
    pub ly_r: f64,
}

impl Point {
    pub fn new(u: f64, v: f64) -> Self {
        let lu = u.ln();
        let lv = v.ln();
        let lu_r = (-u).ln_1p();
        let lv_r = (-v).ln_1p();
        Self {
            lu,
            lv,
            lx: (-lu).ln(),
            ly: (-lv).ln(),
            lu_r,
            lv_r,
            lx_r: (-lu_r).ln(),
            ly_r: (-lv_r).ln(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Generator {
    Gumbel(f64),
    Clayton(f64),
    Independence,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Component {
    pub generator: Generator,
    pub rotated: bool,
}

// ln(u^-t + v^-t - 1) for t > 0, stable for small t and for large exponents.
fn clayton_log_s(theta: f64, lu: f64, lv: f64) -> f64 {
    let a = -theta * lu;
    let b = -theta * lv;
    let m = a.max(b);
    if m < 30.0 {
        (a.exp_m1() + b.exp_m1()).ln_1p()
    } else {
        m + ((a - m).exp() + (b - m).exp() - (-m).exp()).ln()
    }
}

impl Generator {
    fn cdf(self, u: f64, v: f64) -> f64 {
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return v.min(1.0);
        }
        if v >= 1.0 {
            return u;
        }
        match self {
            Generator::Independence => u * v,
            Generator::Gumbel(a) => {
                let la = log_add_exp(a * (-u.ln()).ln(), a * (-v.ln()).ln());
                (-(la / a).exp()).exp()
            }
            Generator::Clayton(t) => (-clayton_log_s(t, u.ln(), v.ln()) / t).exp(),
        }
    }

    fn log_pdf(self, lu: f64, lv: f64, lx: f64, ly: f64) -> f64 {
        match self {
            Generator::Independence => 0.0,
            Generator::Gumbel(a) => {
                let la = log_add_exp(a * lx, a * ly);
                let w = (la / a).exp();
                -w + (a - 1.0) * (lx + ly) - lu - lv + (1.0 / a - 2.0) * la + (w + a - 1.0).ln()
            }
            Generator::Clayton(t) => t.ln_1p() - (t + 1.0) * (lu + lv) - (2.0 + 1.0 / t) * clayton_log_s(t, lu, lv),
        }
    }

    /// Conditional distribution `dC/du`.
    fn h(self, u: f64, v: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        if v >= 1.0 {
            return 1.0;
        }
        if u <= 0.0 || u >= 1.0 {
            return match self {
                Generator::Independence => v,
                // limits of dC/du at the edges of the unit square
                _ => {
                    if u <= 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
        }
        match self {
            Generator::Independence => v,
            Generator::Gumbel(a) => {
                let lu = u.ln();
                let lx = (-lu).ln();
                let la = log_add_exp(a * lx, a * (-v.ln()).ln());
                let w = (la / a).exp();
                (-w + (1.0 / a - 1.0) * la + (a - 1.0) * lx - lu).exp()
            }
            Generator::Clayton(t) => {
                let lu = u.ln();
                let ls = clayton_log_s(t, lu, v.ln());
                (-(t + 1.0) * lu - (1.0 / t + 1.0) * ls).exp()
            }
        }
    }

    /// One draw via the Marshall-Olkin frailty construction.
    /// Marshall-Olkin draw of an exchangeable vector: one frailty shared by
    /// all coordinates of `out`.
    fn sample_into<R: Rng + ?Sized>(self, rng: &mut R, out: &mut [f64]) {
        match self {
            Generator::Independence => out.iter_mut().for_each(|x| *x = rng.sample(Open01)),
            Generator::Gumbel(a) => {
                let s = 1.0 / a;
                let frailty = if s >= 1.0 { 1.0 } else { positive_stable(s, rng) };
                for x in out.iter_mut() {
                    let e: f64 = rng.sample(Exp1);
                    *x = (-(e / frailty).powf(s)).exp();
                }
            }
            Generator::Clayton(t) => {
                let frailty = Gamma::new(1.0 / t, 1.0)
                    .expect("clayton parameter validated")
                    .sample(rng);
                for x in out.iter_mut() {
                    let e: f64 = rng.sample(Exp1);
                    *x = (-(e / frailty).ln_1p() / t).exp();
                }
            }
        }
    }
}

/// Positive stable variate with Laplace transform `exp(-s^alpha)`, `0 < alpha < 1`
/// (Kanter's representation).
fn positive_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let theta: f64 = core::f64::consts::PI * rng.sample::<f64, _>(Open01);
    let w: f64 = rng.sample(Exp1);
    let a = (alpha * theta).sin() / theta.sin().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * theta).sin() / w).powf((1.0 - alpha) / alpha);
    a * b
}

const SAMPLE_EPS: f64 = 1e-15;

impl Component {
    pub fn cdf(self, u: f64, v: f64) -> f64 {
        if self.rotated {
            if u <= 0.0 || v <= 0.0 {
                return 0.0;
            }
            if u >= 1.0 {
                return v.min(1.0);
            }
            if v >= 1.0 {
                return u;
            }
            (u + v - 1.0 + self.generator.cdf(1.0 - u, 1.0 - v)).max(0.0)
        } else {
            self.generator.cdf(u, v)
        }
    }

    pub fn log_pdf(self, p: &Point) -> f64 {
        if self.rotated {
            self.generator.log_pdf(p.lu_r, p.lv_r, p.lx_r, p.ly_r)
        } else {
            self.generator.log_pdf(p.lu, p.lv, p.lx, p.ly)
        }
    }

    pub fn h(self, u: f64, v: f64) -> f64 {
        if self.rotated {
            1.0 - self.generator.h(1.0 - u, 1.0 - v)
        } else {
            self.generator.h(u, v)
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> (f64, f64) {
        let mut x = [0.0; 2];
        self.sample_into(rng, &mut x);
        (x[0], x[1])
    }

    pub fn sample_into<R: Rng + ?Sized>(self, rng: &mut R, out: &mut [f64]) {
        self.generator.sample_into(rng, out);
        for x in out.iter_mut() {
            let y = if self.rotated { 1.0 - *x } else { *x };
            *x = y.clamp(SAMPLE_EPS, 1.0 - SAMPLE_EPS);
        }
    }

    pub fn tau(self) -> f64 {
        match self.generator {
            Generator::Gumbel(a) => 1.0 - 1.0 / a,
            Generator::Clayton(t) => t / (t + 2.0),
            Generator::Independence => 0.0,
        }
    }

    /// (lower, upper) tail-dependence coefficients.
    pub fn tail_dependence(self) -> (f64, f64) {
        let (lower, upper) = match self.generator {
            Generator::Gumbel(a) => (0.0, 2.0 - 2f64.powf(1.0 / a)),
            Generator::Clayton(t) => (2f64.powf(-1.0 / t), 0.0),
            Generator::Independence => (0.0, 0.0),
        };
        if self.rotated {
            (upper, lower)
        } else {
            (lower, upper)
        }
    }
}
