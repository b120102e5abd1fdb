//! Singular-eigenfunction (Case) solution for `l_max <= 1`: dispersion function,
//! discrete root, normalizations, and the isotropic-source energy density used
//! as an independent oracle for the discrete-ordinates engine.

use num_complex::Complex64;

use crate::hankel::{invert, DEConfig, SpectralKernel};
use crate::quadrature::gauss_interval;
use crate::specfun::{chandrasekhar_forward, p_lm_row};
use crate::{Error, MediumParams, Result};

fn check_closed_form(params: &MediumParams) -> Result<()> {
    params.validate()?;
    if params.l_max > 1 {
        return Err(Error::InvalidParameter(format!(
            "analytic engine requires lmax <= 1 (got {})",
            params.l_max
        )));
    }
    Ok(())
}

/// `3 g (1 - albedo)`: the coefficient of `z^2` in `g^0(z, z)`.
fn c_coeff(params: &MediumParams) -> f64 {
    3.0 * params.moment(1) * (1.0 - params.albedo())
}

/// `lambda(nu) = 1 - albedo nu atanh(nu)` on `(-1, 1)`.
pub fn lambda_iso(nu: f64, albedo: f64) -> Result<f64> {
    if !(nu.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!("lambda requires |nu| < 1, got {nu}")));
    }
    Ok(1.0 - albedo * nu * nu.atanh())
}

/// `Lambda(z) = 1 - albedo z atanh(1/z)` for isotropic scattering, `z > 1`.
pub fn dispersion_l0(z: f64, albedo: f64) -> Result<f64> {
    if !(z > 1.0) {
        return Err(Error::InvalidParameter(format!("dispersion requires z > 1, got {z}")));
    }
    Ok(1.0 - albedo * z * (1.0 / z).atanh())
}

/// `Lambda(z) = 1 + 3 g albedo (1-albedo) z^2 - (1 + 3 g (1-albedo) z^2) albedo z atanh(1/z)`.
pub fn dispersion(z: f64, params: &MediumParams) -> Result<f64> {
    check_closed_form(params)?;
    if !(z > 1.0) {
        return Err(Error::InvalidParameter(format!("dispersion requires z > 1, got {z}")));
    }
    let w = params.albedo();
    let c = c_coeff(params);
    Ok(1.0 + c * w * z * z - (1.0 + c * z * z) * w * z * (1.0 / z).atanh())
}

/// `dLambda/dz = 6 g albedo (1-albedo) z - albedo (1 + 9 g (1-albedo) z^2) atanh(1/z)
///  + albedo (1 + 3 g (1-albedo) z^2) z / (z^2 - 1)`.
pub fn dispersion_prime(z: f64, params: &MediumParams) -> Result<f64> {
    check_closed_form(params)?;
    if !(z > 1.0) {
        return Err(Error::InvalidParameter(format!("dispersion requires z > 1, got {z}")));
    }
    let w = params.albedo();
    let c = c_coeff(params);
    Ok(2.0 * c * w * z - w * (1.0 + 3.0 * c * z * z) * (1.0 / z).atanh() + w * (1.0 + c * z * z) * z / (z * z - 1.0))
}

/// Discrete root `nu0 > 1` of the dispersion function: bisection on a doubling
/// bracket followed by Newton polishing.
pub fn find_nu0(params: &MediumParams) -> Result<f64> {
    check_closed_form(params)?;
    let w = params.albedo();
    if !(w > 0.0 && w < 1.0) {
        return Err(Error::InvalidParameter(format!("albedo must lie in (0, 1), got {w}")));
    }
    let f = |z: f64| dispersion(z, params);
    let mut lo = 1.0 + 1e-12;
    let mut hi = 2.0;
    let f_lo = f(lo)?;
    while f(hi)?.signum() == f_lo.signum() {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::NoDiscreteRoot);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)?.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut z = 0.5 * (lo + hi);
    for _ in 0..5 {
        let step = f(z)? / dispersion_prime(z, params)?;
        let next = z - step;
        if !(next > lo.min(hi) * (1.0 - 1e-12) && next < hi.max(lo) * (1.0 + 1e-12)) {
            break;
        }
        z = next;
        if step.abs() <= 1e-16 * z {
            break;
        }
    }
    let residual = f(z)?.abs();
    if residual > 1e-12 {
        return Err(Error::NoConvergence { residual });
    }
    Ok(z)
}

/// Sign changes of `Lambda` on a logarithmic grid of `(1, z_max]`.
pub fn count_roots(params: &MediumParams, z_max: f64, points: usize) -> Result<usize> {
    let (a, b) = ((1e-9f64).ln(), (z_max - 1.0).ln());
    let mut prev = dispersion(1.0 + a.exp(), params)?;
    let mut count = 0;
    for k in 1..=points {
        let z = 1.0 + (a + (b - a) * k as f64 / points as f64).exp();
        let v = dispersion(z, params)?;
        if v.signum() != prev.signum() {
            count += 1;
        }
        prev = v;
    }
    Ok(count)
}

/// `N^0(nu0) = (albedo nu0^2 / 2) g^0(nu0, nu0) Lambda'(nu0)`, `g^0(nu0, nu0) = 1 + 3 g (1-albedo) nu0^2`.
pub fn n0_discrete(nu0: f64, params: &MediumParams) -> Result<f64> {
    let g0 = 1.0 + c_coeff(params) * nu0 * nu0;
    Ok(params.albedo() * nu0 * nu0 / 2.0 * g0 * dispersion_prime(nu0, params)?)
}

/// Boundary value `lim_{eps -> 0+} Lambda(nu + i eps)` on `(-1, 1)`.
pub fn boundary_value(nu: f64, params: &MediumParams) -> Result<Complex64> {
    check_closed_form(params)?;
    let w = params.albedo();
    let c = c_coeff(params);
    let lam = lambda_iso(nu, w)?;
    let re = (1.0 + c * nu * nu) * lam - 3.0 * params.moment(1) * (1.0 - w).powi(2) * nu * nu;
    let im = std::f64::consts::PI * w * nu / 2.0 * (1.0 + c * nu * nu);
    Ok(Complex64::new(re, im))
}

/// `N^0(nu) = nu Lambda^+(nu) Lambda^-(nu)` on the continuum `0 < nu < 1`.
pub fn n0_continuum(nu: f64, params: &MediumParams) -> Result<f64> {
    if !(nu > 0.0 && nu < 1.0) {
        return Err(Error::InvalidParameter(format!("continuum normalization requires 0 < nu < 1, got {nu}")));
    }
    Ok(nu * boundary_value(nu, params)?.norm_sqr())
}

/// `lambda^m(nu) = 1 - (albedo nu / 2) PV int_{-1}^{1} g^m(nu, mu) (1 - mu^2)^{|m|} / (nu - mu) dmu`
/// for `|nu| < 1` and any `l_max`. The numerator is a polynomial, so the
/// subtracted integrand is integrated exactly by Gauss–Legendre.
pub fn lambda_m(m: i32, nu: f64, params: &MediumParams) -> Result<f64> {
    params.validate()?;
    if !(nu.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!("lambda^m requires |nu| < 1, got {nu}")));
    }
    let am = m.unsigned_abs() as usize;
    if am > params.l_max {
        return Ok(1.0);
    }
    let table = chandrasekhar_forward(am as i32, nu, params.l_max, params);
    let g = |mu: f64| -> f64 {
        let row = p_lm_row(am as i32, params.l_max, mu);
        let s: f64 = (am..=params.l_max)
            .map(|l| (2 * l + 1) as f64 * params.moment(l) * table.get(l) * row[l - am])
            .sum();
        s * (1.0 - mu * mu).powi(am as i32)
    };
    let g_nu = g(nu);
    let points = params.l_max + am + 4;
    let (x, w) = gauss_interval(points, -1.0, 1.0);
    let smooth: f64 = x.iter().zip(&w).map(|(&mu, &wt)| wt * (g(mu) - g_nu) / (nu - mu)).sum();
    let pv = smooth + g_nu * 2.0 * nu.atanh();
    Ok(1.0 - params.albedo() * nu / 2.0 * pv)
}

/// Panel boundaries of the continuum rule: graded towards 0 for the
/// `exp(-z/nu)` layer and geometrically towards 1, where `nu / N^0(nu)` falls off
/// only like `1 / ln^2(1 - nu)`.
fn continuum_panels() -> Vec<f64> {
    let mut b = vec![0.0, 0.01, 0.1, 0.5, 0.9];
    for k in 2..=10 {
        b.push(1.0 - 10f64.powi(-k));
    }
    b
}

#[derive(Debug, Clone)]
struct ContinuumRule {
    nu: Vec<f64>,
    /// `w nu / N^0(nu)`.
    weight: Vec<f64>,
}

impl ContinuumRule {
    fn new(points: usize, params: &MediumParams) -> Result<Self> {
        let panels = continuum_panels();
        let mut nu = Vec::new();
        let mut weight = Vec::new();
        for p in panels.windows(2) {
            let (x, w) = gauss_interval(points, p[0], p[1]);
            for (x, w) in x.into_iter().zip(w) {
                weight.push(w * x / n0_continuum(x, params)?);
                nu.push(x);
            }
        }
        Ok(Self { nu, weight })
    }

    fn integrate(&self, q: f64, z: f64) -> f64 {
        self.nu
            .iter()
            .zip(&self.weight)
            .map(|(&nu, &w)| w * (-(1.0 / (nu * nu) + q * q).sqrt() * z).exp())
            .sum()
    }
}

/// Dispersion data for `l_max <= 1`.
#[derive(Debug, Clone)]
pub struct Dispersion {
    pub params: MediumParams,
    pub nu0: f64,
    pub n0_discrete: f64,
    rules: Vec<ContinuumRule>,
}

impl Dispersion {
    pub fn new(params: &MediumParams) -> Result<Self> {
        check_closed_form(params)?;
        let nu0 = find_nu0(params)?;
        let n0 = n0_discrete(nu0, params)?;
        let rules = [32, 64, 128].iter().map(|&p| ContinuumRule::new(p, params)).collect::<Result<Vec<_>>>()?;
        Ok(Self { params: *params, nu0, n0_discrete: n0, rules })
    }

    /// `nu0 exp(-k_z(nu0 q) z / nu0) / N^0(nu0)`.
    pub fn discrete_term(&self, q: f64, z: f64) -> f64 {
        let kz = (1.0 + (self.nu0 * q).powi(2)).sqrt();
        self.nu0 * (-kz * z / self.nu0).exp() / self.n0_discrete
    }

    /// `int_0^1 nu exp(-k_z(nu q) z / nu) / N^0(nu) dnu`, with the rule doubled
    /// until two successive levels agree to `1e-8` of the full kernel.
    pub fn continuum_term(&self, q: f64, z: f64) -> Result<f64> {
        let scale_extra = self.discrete_term(q, z).abs();
        let mut prev = self.rules[0].integrate(q, z);
        let mut residual = f64::INFINITY;
        for rule in &self.rules[1..] {
            let next = rule.integrate(q, z);
            residual = (next - prev).abs() / (next.abs() + scale_extra).max(f64::MIN_POSITIVE);
            if residual <= 1e-8 {
                return Ok(next);
            }
            prev = next;
        }
        Err(Error::NoConvergence { residual })
    }

    /// `F_a(q, z)`.
    pub fn kernel(&self, q: f64, z: f64) -> Result<f64> {
        Ok(self.discrete_term(q, z) + self.continuum_term(q, z)?)
    }
}

impl SpectralKernel for Dispersion {
    fn eval(&self, q: f64, zs: &[f64], out: &mut [f64]) -> Result<()> {
        for (o, &z) in out.iter_mut().zip(zs) {
            *o = self.kernel(q, z)?;
        }
        Ok(())
    }
}

/// Isotropic-source energy density `(1-albedo) mu_t^2 int J0(q rho) F_a q dq`;
/// `rho` and `zs` in mm, result in mm^-2 per unit source.
pub fn analytic_energy_density(rho: f64, zs: &[f64], params: &MediumParams, cfg: &DEConfig) -> Result<Vec<f64>> {
    let disp = Dispersion::new(params)?;
    analytic_energy_density_with(&disp, rho, zs, cfg)
}

pub fn analytic_energy_density_with(disp: &Dispersion, rho: f64, zs: &[f64], cfg: &DEConfig) -> Result<Vec<f64>> {
    let mt = disp.params.mu_t();
    let zs_star: Vec<f64> = zs.iter().map(|z| z * mt).collect();
    let pref = (1.0 - disp.params.albedo()) * mt * mt;
    Ok(invert(disp, rho * mt, &zs_star, cfg)?.into_iter().map(|v| v * pref).collect())
}
