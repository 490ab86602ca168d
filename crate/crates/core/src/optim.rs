//! Derivative-free simplex search and quasi-Newton refinement.
//!
//! Objectives are minimized over unconstrained coordinates; callers map
//! constrained parameters through smooth transforms and return `+inf` for
//! infeasible points.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // std inherents shadow it when std is linked
use num_traits::Float;

#[derive(Debug, Clone, Copy)]
pub struct Options {
    /// Iteration budget shared between the simplex and quasi-Newton phases.
    pub max_iter: usize,
    /// Iterations spent in the simplex phase before refinement (0 skips it).
    pub simplex_iter: usize,
    /// Absolute tolerance on successive objective values.
    pub f_tol: f64,
    /// Sup-norm tolerance on the numerical gradient.
    pub g_tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            max_iter: 2000,
            simplex_iter: 400,
            f_tol: 1e-8,
            g_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
}

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    }
}

/// Simplex search followed by BFGS refinement from the simplex optimum.
pub fn minimize<F>(f: F, x0: &[f64], steps: &[f64], opts: &Options) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let mut obj = Counted { f, evals: 0 };
    let (start, used) = if opts.simplex_iter > 0 {
        let budget = opts.simplex_iter.min(opts.max_iter);
        let nm = nelder_mead_impl(&mut obj, x0, steps, budget, opts.f_tol);
        (nm.x, nm.iterations)
    } else {
        (x0.to_vec(), 0)
    };
    let mut refined = bfgs_impl(&mut obj, &start, opts.max_iter.saturating_sub(used).max(1), opts);
    refined.iterations += used;
    refined.evaluations = obj.evals;
    refined
}

pub fn nelder_mead<F>(f: F, x0: &[f64], steps: &[f64], max_iter: usize, f_tol: f64) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let mut obj = Counted { f, evals: 0 };
    let mut m = nelder_mead_impl(&mut obj, x0, steps, max_iter, f_tol);
    m.evaluations = obj.evals;
    m
}

pub fn bfgs<F>(f: F, x0: &[f64], opts: &Options) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let mut obj = Counted { f, evals: 0 };
    let mut m = bfgs_impl(&mut obj, x0, opts.max_iter, opts);
    m.evaluations = obj.evals;
    m
}

fn nelder_mead_impl<F>(obj: &mut Counted<F>, x0: &[f64], steps: &[f64], max_iter: usize, f_tol: f64) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += steps[i];
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| obj.call(p)).collect();
    let mut converged = false;
    let mut iter = 0;
    let mut centroid = vec![0.0; n];
    let mut trial = vec![0.0; n];
    let mut trial2 = vec![0.0; n];

    while iter < max_iter {
        iter += 1;
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let size = simplex[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if values[0].is_finite() && spread.abs() <= f_tol && size <= 1e-6 {
            converged = true;
            break;
        }

        for j in 0..n {
            centroid[j] = simplex[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64;
        }
        let worst = &simplex[n];
        for j in 0..n {
            trial[j] = centroid[j] + (centroid[j] - worst[j]);
        }
        let fr = obj.call(&trial);
        if fr < values[0] {
            for j in 0..n {
                trial2[j] = centroid[j] + 2.0 * (centroid[j] - worst[j]);
            }
            let fe = obj.call(&trial2);
            if fe < fr {
                simplex[n].copy_from_slice(&trial2);
                values[n] = fe;
            } else {
                simplex[n].copy_from_slice(&trial);
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n].copy_from_slice(&trial);
            values[n] = fr;
        } else {
            let outside = fr < values[n];
            for j in 0..n {
                trial2[j] = if outside {
                    centroid[j] + 0.5 * (trial[j] - centroid[j])
                } else {
                    centroid[j] + 0.5 * (worst[j] - centroid[j])
                };
            }
            let fc = obj.call(&trial2);
            if fc < values[n].min(fr) {
                simplex[n].copy_from_slice(&trial2);
                values[n] = fc;
            } else {
                // shrink towards the best vertex
                for i in 1..=n {
                    for j in 0..n {
                        simplex[i][j] = simplex[0][j] + 0.5 * (simplex[i][j] - simplex[0][j]);
                    }
                    values[i] = obj.call(&simplex[i]);
                }
            }
        }
    }
    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        f: values[best],
        iterations: iter,
        evaluations: 0,
        converged,
    }
}

fn default_step(x: f64) -> f64 {
    1e-5 * x.abs().max(1.0)
}

fn gradient<F>(obj: &mut Counted<F>, x: &[f64], fx: f64, g: &mut [f64])
where
    F: FnMut(&[f64]) -> f64,
{
    let mut p = x.to_vec();
    for i in 0..x.len() {
        let h = default_step(x[i]);
        p[i] = x[i] + h;
        let fp = obj.call(&p);
        p[i] = x[i] - h;
        let fm = obj.call(&p);
        p[i] = x[i];
        g[i] = match (fp.is_finite(), fm.is_finite()) {
            (true, true) => (fp - fm) / (2.0 * h),
            (true, false) => (fp - fx) / h,
            (false, true) => (fx - fm) / h,
            (false, false) => 0.0,
        };
    }
}

fn bfgs_impl<F>(obj: &mut Counted<F>, x0: &[f64], max_iter: usize, opts: &Options) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut fx = obj.call(&x);
    let mut g = vec![0.0; n];
    if !fx.is_finite() {
        return Minimum {
            x,
            f: fx,
            iterations: 0,
            evaluations: 0,
            converged: false,
        };
    }
    gradient(obj, &x, fx, &mut g);
    let mut h_inv = identity(n);
    let mut first = true;
    let mut converged = false;
    let mut iter = 0;
    let mut small_steps = 0;
    let mut d = vec![0.0; n];
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];

    while iter < max_iter {
        iter += 1;
        if sup_norm(&g) <= opts.g_tol {
            converged = true;
            break;
        }
        for i in 0..n {
            d[i] = -(0..n).map(|j| h_inv[i * n + j] * g[j]).sum::<f64>();
        }
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            h_inv = identity(n);
            d.iter_mut().zip(&g).for_each(|(di, gi)| *di = -gi);
            slope = -g.iter().map(|v| v * v).sum::<f64>();
        }
        let dn = sup_norm(&d);
        let mut t = if dn > 5.0 { 5.0 / dn } else { 1.0 };
        let mut accepted = false;
        let mut fn_ = fx;
        for _ in 0..60 {
            for i in 0..n {
                xn[i] = x[i] + t * d[i];
            }
            fn_ = obj.call(&xn);
            if fn_.is_finite() && fn_ <= fx + 1e-4 * t * slope {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            if first {
                break;
            }
            // restart from steepest descent once before giving up
            h_inv = identity(n);
            first = true;
            continue;
        }
        gradient(obj, &xn, fn_, &mut gn);
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let df = fx - fn_;
        x.copy_from_slice(&xn);
        g.copy_from_slice(&gn);
        fx = fn_;
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if first {
                let yy: f64 = y.iter().map(|v| v * v).sum();
                let scale = sy / yy;
                h_inv = identity(n);
                h_inv.iter_mut().for_each(|v| *v *= scale);
                first = false;
            }
            bfgs_update(&mut h_inv, &s, &y, sy);
        }
        if df.abs() <= opts.f_tol {
            small_steps += 1;
            if small_steps >= 2 {
                converged = sup_norm(&g) <= opts.g_tol * 100.0;
                break;
            }
        } else {
            small_steps = 0;
        }
    }
    if !converged && sup_norm(&g) <= opts.g_tol {
        converged = true;
    }
    Minimum {
        x,
        f: fx,
        iterations: iter,
        evaluations: 0,
        converged,
    }
}

fn bfgs_update(h: &mut [f64], s: &[f64], y: &[f64], sy: f64) {
    let n = s.len();
    let rho = 1.0 / sy;
    let hy: Vec<f64> = (0..n).map(|i| (0..n).map(|j| h[i * n + j] * y[j]).sum()).collect();
    let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
    for i in 0..n {
        for j in 0..n {
            h[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
        }
    }
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Central-difference Hessian with per-coordinate steps `h`.
/// Entries touching a non-finite evaluation are returned as NaN.
pub fn hessian<F>(mut f: F, x: &[f64], h: &[f64]) -> Vec<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x.len();
    let f0 = f(x);
    let mut out = vec![0.0; n * n];
    let mut p = x.to_vec();
    for i in 0..n {
        p[i] = x[i] + h[i];
        let fp = f(&p);
        p[i] = x[i] - h[i];
        let fm = f(&p);
        p[i] = x[i];
        out[i * n + i] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        for j in 0..i {
            let mut eval = |si: f64, sj: f64| {
                p[i] = x[i] + si * h[i];
                p[j] = x[j] + sj * h[j];
                let v = f(&p);
                p[i] = x[i];
                p[j] = x[j];
                v
            };
            let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0)) / (4.0 * h[i] * h[j]);
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    out.iter_mut().for_each(|v| {
        if !v.is_finite() {
            *v = f64::NAN
        }
    });
    out
}
