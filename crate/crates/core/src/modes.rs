//! Plane-wave eigenmodes in rotated reference frames.
//!
//! A mode with separation constant `nu` and transverse wave vector `q` decays
//! along the complex unit vector `k = (-i nu q cos phi_q, -i nu q sin phi_q, k_z)`
//! with `k_z = sqrt(1 + (nu q)^2)`. Its angular profile is the laboratory-frame
//! eigenvector rotated so that the z-axis points along `k`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::quadrature::QuadratureSet;
use crate::specfun::{legendre_p, p_lm_row, p_mm_seed, spherical_harmonic, wigner_d_continued, ChandrasekharTable, WignerDTable};
use crate::eigen::EigenFamily;
use crate::{Error, MediumParams, Result};

/// Rotated frame of one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFrame {
    pub nu: f64,
    pub q: f64,
    pub phi_q: f64,
    pub k_z_hat: f64,
    /// Continuation argument of the d-matrices, `nu q`.
    pub x_arg: f64,
    pub phi_khat: f64,
}

impl ModeFrame {
    pub fn new(nu: f64, q: f64, phi_q: f64) -> Self {
        let x = nu * q;
        Self {
            nu,
            q,
            phi_q,
            k_z_hat: (1.0 + x * x).sqrt(),
            x_arg: x,
            phi_khat: if nu > 0.0 { phi_q + PI } else { phi_q },
        }
    }

    /// `(-i nu q)^2 + k_z^2`, equal to one.
    pub fn bilinear_norm(&self) -> f64 {
        -(self.x_arg * self.x_arg) + self.k_z_hat * self.k_z_hat
    }
}

/// `s . k = k_z mu - i nu q sqrt(1 - mu^2) cos(phi - phi_q)`.
pub fn s_dot_khat(mu: f64, phi: f64, frame: &ModeFrame) -> Complex64 {
    let st = (1.0 - mu * mu).max(0.0).sqrt();
    Complex64::new(frame.k_z_hat * mu, -frame.x_arg * st * (phi - frame.phi_q).cos())
}

/// `g^m(nu, w) = sum_l (2l+1) g^l g_l^m(nu) p_l^m(w)` at a complex argument.
pub fn g_sum_continued(m: i32, table: &ChandrasekharTable, w: Complex64, params: &MediumParams) -> Complex64 {
    let am = m.unsigned_abs() as usize;
    if am > params.l_max {
        return Complex64::new(0.0, 0.0);
    }
    let row = p_lm_row(m, params.l_max, w);
    let s = table_sign(m, table);
    (am..=params.l_max)
        .map(|l| row[l - am] * (s * (2 * l + 1) as f64 * params.moment(l) * table.get(l)))
        .sum()
}

/// `g_l^{-m} = (-1)^m g_l^m`; families store the table of `|m|`.
fn table_sign(m: i32, table: &ChandrasekharTable) -> f64 {
    if m < 0 && table.m >= 0 && m.rem_euclid(2) == 1 {
        -1.0
    } else {
        1.0
    }
}

/// `(albedo nu / 2) g^m(nu, w) / (nu - w)`: the eigenvector continued to a
/// complex direction cosine.
pub fn phi_continued(m: i32, nu: f64, w: Complex64, table: &ChandrasekharTable, params: &MediumParams) -> Result<Complex64> {
    let den = Complex64::new(nu, 0.0) - w;
    if den.norm() < 1e-13 {
        return Err(Error::InvalidParameter(format!("pole: |nu - w| = {:.3e}", den.norm())));
    }
    Ok(g_sum_continued(m, table, w, params) * (params.albedo() * nu / 2.0) / den)
}

/// `r_k Y_lm(s) = sum_m' e^{-i m' phi_k} d^l_{m'm} Y_lm'(s)`, or with `conjugate`
/// `r_k Y*_lm(s) = sum_m' e^{i m' phi_k} d^l_{m'm} Y*_lm'(s)`.
pub fn rotate_ylm(d: &WignerDTable, phi_khat: f64, l: usize, m: i32, mu: f64, phi: f64, conjugate: bool) -> Complex64 {
    let li = l as i32;
    let sgn = if conjugate { 1.0 } else { -1.0 };
    (-li..=li)
        .map(|mp| {
            let y = spherical_harmonic(l, mp, mu, phi);
            let y = if conjugate { y.conj() } else { y };
            Complex64::from_polar(1.0, sgn * mp as f64 * phi_khat) * d.get(l, mp, m) * y
        })
        .sum()
}

/// A mode `r_k Phi_nu^m` ready for evaluation at many directions.
#[derive(Debug, Clone)]
pub struct RotatedMode {
    pub m: i32,
    pub frame: ModeFrame,
    /// `sqrt((2l+1) pi) g^l g_l^m(nu)` for `l = 0..=l_max` (zero below `|m|`).
    coeffs: Vec<f64>,
    wigner: WignerDTable,
    prefactor: f64,
    table: ChandrasekharTable,
    params: MediumParams,
}

impl RotatedMode {
    pub fn new(m: i32, table: &ChandrasekharTable, frame: ModeFrame, params: &MediumParams) -> Self {
        let ts = table_sign(m, table);
        let coeffs = (0..=params.l_max)
            .map(|l| ts * ((2 * l + 1) as f64 * PI).sqrt() * params.moment(l) * table.get(l))
            .collect();
        let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        Self {
            m,
            frame,
            coeffs,
            wigner: wigner_d_continued(params.l_max.max(m.unsigned_abs() as usize), frame.x_arg),
            prefactor: sign * params.albedo() * frame.nu,
            table: table.clone(),
            params: *params,
        }
    }

    fn denominator(&self, mu: f64, phi: f64) -> Result<Complex64> {
        let den = Complex64::new(self.frame.nu, 0.0) - s_dot_khat(mu, phi, &self.frame);
        if den.norm() < 1e-13 {
            return Err(Error::InvalidParameter(format!("pole: |nu - s.k| = {:.3e}", den.norm())));
        }
        Ok(den)
    }

    fn rotated_sum(&self, mu: f64, phi: f64, conjugate: bool) -> Complex64 {
        let am = self.m.unsigned_abs() as usize;
        (am..=self.params.l_max)
            .filter(|&l| self.coeffs[l] != 0.0)
            .map(|l| rotate_ylm(&self.wigner, self.frame.phi_khat, l, self.m, mu, phi, conjugate) * self.coeffs[l])
            .sum()
    }

    /// `r_k Phi^m(s)`: `(-1)^m albedo nu / (nu - s.k) sum_l sqrt((2l+1) pi) g^l g_l^m (r_k Y_lm)(s)`
    /// with `r_k Y_lm = sum_m' e^{-i m' phi_k} d^l_{m'm} Y_lm'`.
    pub fn eval(&self, mu: f64, phi: f64) -> Result<Complex64> {
        Ok(self.rotated_sum(mu, phi, false) * self.prefactor / self.denominator(mu, phi)?)
    }

    /// `r_k (Phi^m)^*(s)`: the rotation applied to the conjugated mode,
    /// `r_k Y*_lm = sum_m' e^{i m' phi_k} d^l_{m'm} Y*_lm'`. The factor
    /// `1/(nu - s.k)` is not conjugated.
    pub fn eval_conj(&self, mu: f64, phi: f64) -> Result<Complex64> {
        Ok(self.rotated_sum(mu, phi, true) * self.prefactor / self.denominator(mu, phi)?)
    }

    /// Product route: `phi^m(nu, s.k)` times the rotated degree-`|m|` factor
    /// `r_k[(1-mu^2)^{|m|/2} e^{i m phi}]`. Independent of the per-`l` rotation.
    pub fn eval_product(&self, mu: f64, phi: f64) -> Result<Complex64> {
        let w = s_dot_khat(mu, phi, &self.frame);
        let radial = phi_continued(self.m, self.frame.nu, w, &self.table, &self.params)?;
        let k = self.m.unsigned_abs() as usize;
        let ki = k as i32;
        let seed = p_mm_seed(k) * if self.m < 0 && k % 2 == 1 { -1.0 } else { 1.0 };
        let sign = if self.m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let norm = ((2 * k + 1) as f64 / (4.0 * PI)).sqrt() * sign * seed;
        let mut ang = Complex64::new(0.0, 0.0);
        for mp in -ki..=ki {
            ang += Complex64::from_polar(1.0, -(mp as f64) * self.frame.phi_khat)
                * self.wigner.get(k, mp, self.m)
                * spherical_harmonic(k, mp, mu, phi);
        }
        Ok(radial * ang / norm)
    }

    /// `(1/2pi) sum_i w_i int phi^m(nu, s.k) [1 - (s.k)^2]^{|m|} dphi`, which is
    /// one only up to the discretization of `mu`.
    pub fn rotated_normalization(&self, quad: &QuadratureSet, n_phi: usize) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        for (&mu, &w) in quad.nodes.iter().zip(&quad.weights) {
            for j in 0..n_phi {
                let phi = 2.0 * PI * j as f64 / n_phi as f64;
                let sk = s_dot_khat(mu, phi, &self.frame);
                let f = phi_continued(self.m, self.frame.nu, sk, &self.table, &self.params)?;
                total += f * (Complex64::new(1.0, 0.0) - sk * sk).powu(self.m.unsigned_abs()) * w;
            }
        }
        Ok(total / n_phi as f64)
    }

    /// `int_0^2pi r_k Phi^m(mu, phi) dphi`, identical for the conjugated mode.
    /// Each harmonic `e^{i m' phi}` against `1/(alpha + i beta cos psi)` integrates
    /// in closed form, so no azimuthal rule is involved.
    pub fn azimuth_integral(&self, mu: f64) -> Result<Complex64> {
        let alpha = self.frame.nu - self.frame.k_z_hat * mu;
        let beta = self.frame.x_arg * (1.0 - mu * mu).max(0.0).sqrt();
        if alpha.abs() < 1e-13 {
            return Err(Error::InvalidParameter(format!("pole: nu - k_z mu = {alpha:.3e}")));
        }
        let top = self.params.l_max;
        let harmonics = azimuthal_harmonics(alpha, beta, top);
        let am = self.m.unsigned_abs() as usize;
        let mut total = Complex64::new(0.0, 0.0);
        for l in (am..=top).filter(|&l| self.coeffs[l] != 0.0) {
            let li = l as i32;
            let mut s = Complex64::new(0.0, 0.0);
            for mp in -li..=li {
                let parity = if mp.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                let y = spherical_harmonic(l, mp, mu, 0.0).re;
                s += self.wigner.get(l, mp, self.m) * harmonics[mp.unsigned_abs() as usize] * (parity * y);
            }
            total += s * self.coeffs[l];
        }
        Ok(total * self.prefactor)
    }

    /// Relative residual of the discrete-ordinates transport equation for the
    /// separated solution `r_k Phi e^{-k_z z / nu}`:
    /// `(1 - s_i.k/nu) r_k Phi(s_i) - albedo sum_i' w_i' int p(s_i.s_i') r_k Phi(s_i') dphi'`,
    /// maximized over ordinates and `n_phi` azimuths, relative to `max |r_k Phi|`.
    pub fn mode_residual(&self, quad: &QuadratureSet, n_phi: usize) -> Result<f64> {
        let az: Vec<f64> = (0..n_phi).map(|j| 2.0 * PI * j as f64 / n_phi as f64).collect();
        let mut vals = Vec::with_capacity(quad.len() * n_phi);
        for &mu in &quad.nodes {
            for &phi in &az {
                vals.push(self.eval(mu, phi)?);
            }
        }
        let scale = vals.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let dphi = 2.0 * PI / n_phi as f64;
        let lm = self.params.l_max;
        let mut worst: f64 = 0.0;
        for (i, &mu) in quad.nodes.iter().enumerate() {
            for (j, &phi) in az.iter().enumerate() {
                let lhs = (Complex64::new(1.0, 0.0) - s_dot_khat(mu, phi, &self.frame) / self.frame.nu) * vals[i * n_phi + j];
                let mut rhs = Complex64::new(0.0, 0.0);
                for (ip, (&mup, &wp)) in quad.nodes.iter().zip(&quad.weights).enumerate() {
                    for (jp, &phip) in az.iter().enumerate() {
                        let c = mu * mup + ((1.0 - mu * mu) * (1.0 - mup * mup)).max(0.0).sqrt() * (phi - phip).cos();
                        let p: f64 = (0..=lm)
                            .map(|l| (2 * l + 1) as f64 / (4.0 * PI) * self.params.moment(l) * legendre_p(l, c))
                            .sum();
                        rhs += vals[ip * n_phi + jp] * (p * wp * dphi);
                    }
                }
                worst = worst.max((lhs - rhs * self.params.albedo()).norm());
            }
        }
        Ok(worst / scale)
    }
}

/// `I_n = int_0^2pi cos(n psi) / (alpha + i beta cos psi) dpsi` for `n = 0..=top`:
/// `(2pi / r) t^n` with `r = sign(alpha) sqrt(alpha^2 + beta^2)` and
/// `t = -i beta / (r + alpha)`.
fn azimuthal_harmonics(alpha: f64, beta: f64, top: usize) -> Vec<Complex64> {
    let r = alpha.signum() * alpha.hypot(beta);
    let t = Complex64::new(0.0, -beta / (r + alpha));
    let mut out = Vec::with_capacity(top + 1);
    let mut v = Complex64::new(2.0 * PI / r, 0.0);
    for _ in 0..=top {
        out.push(v);
        v *= t;
    }
    out
}

/// `r_k Phi^m_{nu_n}(s_i)` for one family member.
pub fn rotated_phi(m: i32, family: &EigenFamily, n: usize, frame: &ModeFrame, mu: f64, phi: f64, params: &MediumParams) -> Result<Complex64> {
    let table = family.tables.get(n).ok_or(Error::IndexOutOfRange { index: n, len: family.len() })?;
    RotatedMode::new(m, table, *frame, params).eval(mu, phi)
}
