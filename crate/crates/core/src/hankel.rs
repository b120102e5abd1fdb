//! Zeroth-order Hankel inversion `int_0^inf J0(q rho) F(q, z) q dq`.
//!
//! The integral is split at `a = pi/(4 rho)`: a direct Gauss rule on `[0, a]`,
//! the remainder of `q J0(q rho)` after its two-term asymptotic expansion on
//! `[a, inf)`, and the two oscillatory integrals of the asymptotic part, which are
//! summed with the Ooura–Mori double-exponential rule.

use std::f64::consts::PI;

use crate::quadrature::gauss_rule;
use crate::specfun::{bessel_j0, j0_tail_correction};
use crate::{Error, Result};

/// Spectral kernel `F(q, z)` evaluated for a batch of depths at once.
pub trait SpectralKernel: Sync {
    /// Writes `F(q, z_k)` into `out[k]`.
    fn eval(&self, q: f64, zs: &[f64], out: &mut [f64]) -> Result<()>;

    /// Simple real poles in `q > 0`: `F ~ residue(z) / (q - q_pole)`. The integral
    /// is then understood as a principal value.
    fn poles(&self, _zs: &[f64]) -> Result<Vec<Pole>> {
        Ok(Vec::new())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pole {
    pub q: f64,
    pub residues: Vec<f64>,
}

impl<F> SpectralKernel for F
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    fn eval(&self, q: f64, zs: &[f64], out: &mut [f64]) -> Result<()> {
        for (o, &z) in out.iter_mut().zip(zs) {
            *o = self(q, z);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DEConfig {
    pub h: f64,
    pub n_k: usize,
    /// Gauss points on `[0, a]`.
    pub low_q_rule: usize,
    /// Gauss points per panel of the tail correction.
    pub tail_rule: usize,
    /// Relative change allowed between successive `(h/2, 2 N_k)` refinements.
    pub convergence: f64,
    pub max_refinements: usize,
}

impl Default for DEConfig {
    fn default() -> Self {
        Self { h: 0.1, n_k: 60, low_q_rule: 32, tail_rule: 16, convergence: 1e-8, max_refinements: 3 }
    }
}

impl DEConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) || self.n_k < 8 || self.low_q_rule == 0 || self.tail_rule == 0 {
            return Err(Error::InvalidParameter(format!("invalid DE configuration {self:?}")));
        }
        if !(self.convergence > 0.0) {
            return Err(Error::InvalidParameter("convergence tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// `a = pi / (4 rho)`.
pub fn split_point(rho: f64) -> f64 {
    PI / (4.0 * rho)
}

/// `phi(t) = t / (1 - exp(-6 sinh t))`, with `phi(0) = 1/6`.
pub fn de_phi(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        return 1.0 / 6.0 + t / 2.0 + 17.0 / 36.0 * t * t;
    }
    let den = -(-6.0 * t.sinh()).exp_m1();
    if den.is_infinite() {
        return 0.0;
    }
    t / den
}

/// `phi'(t) = (1 - (1 + 6 t cosh t) e^{-6 sinh t}) / (1 - e^{-6 sinh t})^2`.
pub fn de_phi_prime(t: f64) -> f64 {
    if t.abs() < 1e-4 {
        return 0.5 + 17.0 / 18.0 * t;
    }
    let u = 6.0 * t.sinh();
    let b = 1.0 + 6.0 * t * t.cosh();
    if t > 0.0 {
        let e = (-u).exp();
        (1.0 - b * e) / (-(-u).exp_m1()).powi(2)
    } else {
        // multiply through by e^{2u}, which is small for t < 0
        let e = u.exp();
        (e * e - b * e) / u.exp_m1().powi(2)
    }
}

/// Per-depth pieces of one inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct Inversion {
    /// `int_0^a q J0 F dq`.
    pub low: Vec<f64>,
    /// `int_a^inf d(q, rho) F dq`.
    pub tail: Vec<f64>,
    /// `int_0^inf (f_1 + f_2) ds`.
    pub oscillatory: Vec<f64>,
    /// Principal-value contribution of subtracted poles.
    pub poles: Vec<f64>,
    /// `low + tail + sqrt(2/(pi rho)) oscillatory + poles`.
    pub total: Vec<f64>,
    pub refinements: usize,
    /// Largest relative change at the last refinement.
    pub residual: f64,
    /// `(h, N_k)` used for the returned oscillatory piece.
    pub de_used: (f64, usize),
}

/// `F` with its poles removed: `F - sum_k c_k B_k(q)/(q - q_k)`,
/// `B_k(q) = exp(-((q - q_k)/sigma_k)^2)`, `sigma_k = q_k/3`.
struct Regularized<'a, K: SpectralKernel + ?Sized> {
    kernel: &'a K,
    poles: Vec<Pole>,
}

fn pole_bump(q: f64, pole: f64) -> f64 {
    let t = 3.0 * (q - pole) / pole;
    (-t * t).exp()
}

impl<K: SpectralKernel + ?Sized> Regularized<'_, K> {
    fn eval(&self, q: f64, zs: &[f64], out: &mut [f64]) -> Result<()> {
        self.kernel.eval(q, zs, out)?;
        for p in &self.poles {
            let b = pole_bump(q, p.q) / (q - p.q);
            for (o, c) in out.iter_mut().zip(&p.residues) {
                *o -= c * b;
            }
        }
        Ok(())
    }
}

/// `PV int_0^inf J0(q rho) q B(q) / (q - q*) dq` for the Gaussian bump `B`.
fn pole_integral(pole: f64, rho: f64) -> f64 {
    let h = |q: f64| bessel_j0(q * rho) * q * pole_bump(q, pole);
    let rule = gauss_rule(16);
    let width = (PI / rho).min(pole / 4.0);
    // symmetric fold on (0, q*): [H(q*+t) - H(q*-t)] / t
    let panels = (pole / width).ceil() as usize;
    let dt = pole / panels as f64;
    let mut sum = 0.0;
    for k in 0..panels {
        let (a, b) = (k as f64 * dt, (k + 1) as f64 * dt);
        for &(x, w) in &rule {
            let t = 0.5 * (a + b) + 0.5 * (b - a) * x;
            sum += 0.5 * (b - a) * w * (h(pole + t) - h(pole - t)) / t;
        }
    }
    // regular part beyond 2 q*, where the bump has fallen below e^{-81} at 4 q*
    let end = 4.0 * pole;
    let panels = ((end - 2.0 * pole) / width).ceil() as usize;
    let dq = (end - 2.0 * pole) / panels as f64;
    for k in 0..panels {
        let (a, b) = (2.0 * pole + k as f64 * dq, 2.0 * pole + (k + 1) as f64 * dq);
        for &(x, w) in &rule {
            let q = 0.5 * (a + b) + 0.5 * (b - a) * x;
            sum += 0.5 * (b - a) * w * h(q) / (q - pole);
        }
    }
    sum
}

fn low_piece<K: SpectralKernel + ?Sized>(f: &Regularized<K>, rho: f64, zs: &[f64], cfg: &DEConfig) -> Result<Vec<f64>> {
    let a = split_point(rho);
    let mut acc = vec![0.0; zs.len()];
    let mut buf = vec![0.0; zs.len()];
    for (x, w) in gauss_rule(cfg.low_q_rule) {
        let q = 0.5 * a * (1.0 + x);
        f.eval(q, zs, &mut buf)?;
        let c = 0.5 * a * w * q * bessel_j0(q * rho);
        for (s, v) in acc.iter_mut().zip(&buf) {
            *s += c * v;
        }
    }
    Ok(acc)
}

/// `int_a^inf d(q, rho) F dq = rho^{-2} int_{pi/4}^inf D(x) F(x/rho) dx` on panels of
/// width `pi` in `x = q rho`, stopped once the remaining tail bound
/// `max_z |F| 0.08 x^{-5/2} / rho^2` is negligible.
fn tail_piece<K: SpectralKernel + ?Sized>(f: &Regularized<K>, rho: f64, zs: &[f64], low: &[f64], cfg: &DEConfig) -> Result<Vec<f64>> {
    const MAX_PANELS: usize = 200_000;
    let rule = gauss_rule(cfg.tail_rule);
    let mut acc = vec![0.0; zs.len()];
    let mut buf = vec![0.0; zs.len()];
    let mut x0 = PI / 4.0;
    for _ in 0..MAX_PANELS {
        let x1 = x0 + PI;
        let mut fmax: f64 = 0.0;
        for &(t, w) in &rule {
            let x = 0.5 * (x0 + x1) + 0.5 * PI * t;
            let q = x / rho;
            f.eval(q, zs, &mut buf)?;
            let c = 0.5 * PI * w * j0_tail_correction(q, rho)?;
            for (s, v) in acc.iter_mut().zip(&buf) {
                *s += c * v;
                fmax = fmax.max(v.abs());
            }
        }
        x0 = x1;
        let bound = fmax * 0.08 * x0.powf(-2.5) / (rho * rho);
        let scale = acc.iter().zip(low).fold(0.0_f64, |m, (v, l)| m.max(v.abs() / rho).max(l.abs()));
        if bound <= 1e-14 * scale || fmax == 0.0 || bound < 1e-300 {
            // rho^{-1} from dq = dx / rho; the other from D(x) = rho d(q, rho)
            return Ok(acc.into_iter().map(|v| v / rho).collect());
        }
    }
    Err(Error::NoConvergence { residual: f64::NAN })
}

/// The two DE sums for `int_0^inf (f_1 + f_2) ds`.
pub fn oscillatory_sums<K: SpectralKernel + ?Sized>(kernel: &K, rho: f64, zs: &[f64], h: f64, n_k: usize) -> Result<Vec<f64>> {
    let f = Regularized { kernel, poles: kernel.poles(zs)? };
    oscillatory_regularized(&f, rho, zs, h, n_k)
}

fn oscillatory_regularized<K: SpectralKernel + ?Sized>(f: &Regularized<K>, rho: f64, zs: &[f64], h: f64, n_k: usize) -> Result<Vec<f64>> {
    let a = split_point(rho);
    let mut acc = vec![0.0; zs.len()];
    let mut buf = vec![0.0; zs.len()];
    let nk = n_k as i64;
    for k in -nk..=nk {
        // cosine piece on half-step nodes, sine piece on integer nodes
        for (tau, cosine) in [(k as f64 * h + 0.5 * h, true), (k as f64 * h, false)] {
            let phi = de_phi(tau);
            let dphi = de_phi_prime(tau);
            if dphi == 0.0 || !dphi.is_finite() {
                continue;
            }
            let sr = PI * phi / h;
            let s = sr / rho;
            let q = s + a;
            let x = sr + PI / 4.0;
            let amp = if cosine {
                (1.0 - 9.0 / (128.0 * x * x)) * sr.cos()
            } else {
                (1.0 / (8.0 * x) - 75.0 / (1024.0 * x * x * x)) * sr.sin()
            };
            let c = PI / rho * q.sqrt() * amp * dphi;
            if c == 0.0 {
                continue;
            }
            f.eval(q, zs, &mut buf)?;
            for (s, v) in acc.iter_mut().zip(&buf) {
                *s += c * v;
            }
        }
    }
    Ok(acc)
}

/// Three-piece inversion with DE refinement; returns every piece.
pub fn invert_detailed<K: SpectralKernel + ?Sized>(kernel: &K, rho: f64, zs: &[f64], cfg: &DEConfig) -> Result<Inversion> {
    cfg.validate()?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let poles = kernel.poles(zs)?;
    let pole_part: Vec<f64> = (0..zs.len())
        .map(|k| poles.iter().map(|p| p.residues[k] * pole_integral(p.q, rho)).sum())
        .collect();
    let f = Regularized { kernel, poles };
    let low = low_piece(&f, rho, zs, cfg)?;
    let tail = tail_piece(&f, rho, zs, &low, cfg)?;
    let pref = (2.0 / (PI * rho)).sqrt();
    let fixed: Vec<f64> = (0..zs.len()).map(|k| low[k] + tail[k] + pole_part[k]).collect();

    let (mut h, mut n_k) = (cfg.h, cfg.n_k);
    let mut osc = oscillatory_regularized(&f, rho, zs, h, n_k)?;
    let mut residual = f64::INFINITY;
    let mut refinements = 0;
    while refinements < cfg.max_refinements {
        h /= 2.0;
        n_k *= 2;
        let next = oscillatory_regularized(&f, rho, zs, h, n_k)?;
        refinements += 1;
        residual = (0..zs.len())
            .map(|k| {
                let total = fixed[k] + pref * next[k];
                pref * (next[k] - osc[k]).abs() / total.abs().max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max);
        osc = next;
        if residual <= cfg.convergence {
            break;
        }
    }
    if residual > cfg.convergence {
        return Err(Error::NoConvergence { residual });
    }
    let total = (0..zs.len()).map(|k| fixed[k] + pref * osc[k]).collect();
    Ok(Inversion { low, tail, oscillatory: osc, poles: pole_part, total, refinements, residual, de_used: (h, n_k) })
}

/// `int_0^inf J0(q rho) F(q, z) q dq` for every `z` in `zs`.
pub fn invert<K: SpectralKernel + ?Sized>(kernel: &K, rho: f64, zs: &[f64], cfg: &DEConfig) -> Result<Vec<f64>> {
    Ok(invert_detailed(kernel, rho, zs, cfg)?.total)
}
