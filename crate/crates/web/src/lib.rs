//! Browser bindings. Each exported function validates its inputs, runs one
//! solver call and returns a flat `Float64Array`; errors surface as JS exceptions.
//! The plain functions are usable natively, which is how they are tested.

use ado3d::analytic::analytic_energy_density;
use ado3d::eigen::{solve_eigen_family, EigenSystem};
use ado3d::halfspace::{energy_density, IsoKernel, PencilKernel, SourceSpec};
use ado3d::hankel::DEConfig;
use ado3d::quadrature::gauss_legendre;
use ado3d::MediumParams;
use wasm_bindgen::prelude::*;

fn medium(mua: f64, mus: f64, g: f64, lmax: usize, n: usize) -> Result<MediumParams, String> {
    MediumParams::new(mua, mus, g, lmax, n).map_err(|e| e.to_string())
}

fn grid(min: f64, max: f64, count: usize) -> Result<Vec<f64>, String> {
    if count < 2 || !(max > min) || !min.is_finite() || !max.is_finite() {
        return Err("grid needs count >= 2 and min < max".into());
    }
    Ok((0..count).map(|k| min + (max - min) * k as f64 / (count - 1) as f64).collect())
}

/// `u(rho, z)` in mm^-2 on `nz` depths in `[zmin, zmax]` mm.
/// `engine` is `ado-iso`, `ado-pencil` or `analytic` (the last needs `lmax <= 1`).
#[allow(clippy::too_many_arguments)]
pub fn profile(engine: &str, mua: f64, mus: f64, g: f64, lmax: usize, n: usize, rho: f64, zmin: f64, zmax: f64, nz: usize) -> Result<Vec<f64>, String> {
    let p = medium(mua, mus, g, lmax, n)?;
    let zs = grid(zmin, zmax, nz)?;
    let cfg = DEConfig::default();
    let err = |e: ado3d::Error| e.to_string();
    match engine {
        "ado-iso" | "ado-pencil" => {
            let sys = EigenSystem::azimuthal_zero(&p).map_err(err)?;
            let src = if engine == "ado-iso" { SourceSpec::Isotropic } else { SourceSpec::normal_pencil(&sys.quad) };
            energy_density(&sys, &src, rho, &zs, &cfg).map_err(err)
        }
        "analytic" => {
            if lmax > 1 {
                return Err("analytic engine requires lmax <= 1".into());
            }
            analytic_energy_density(rho, &zs, &p, &cfg).map_err(err)
        }
        other => Err(format!("unknown engine '{other}'")),
    }
}

/// Discrete-ordinates eigenvalues `nu_n` of azimuthal order `m`, descending.
pub fn spectrum(mua: f64, mus: f64, g: f64, lmax: usize, n: usize, m: usize) -> Result<Vec<f64>, String> {
    let p = medium(mua, mus, g, lmax, n)?;
    let quad = gauss_legendre(n).map_err(|e| e.to_string())?;
    Ok(solve_eigen_family(m, &quad, &p).map_err(|e| e.to_string())?.nu)
}

/// Spectral kernel `F(q, z)` on `nq` wave numbers in `[0, qmax]` (units of `mu_t`)
/// at depth `z_mm`. `kind` is `iso` or `pencil`; pencil poles show up as spikes.
#[allow(clippy::too_many_arguments)]
pub fn kernel(kind: &str, mua: f64, mus: f64, g: f64, lmax: usize, n: usize, z_mm: f64, qmax: f64, nq: usize) -> Result<Vec<f64>, String> {
    let p = medium(mua, mus, g, lmax, n)?;
    let qs = grid(0.0, qmax, nq)?;
    let z = z_mm * p.mu_t();
    let sys = EigenSystem::azimuthal_zero(&p).map_err(|e| e.to_string())?;
    match kind {
        "iso" => {
            let k = IsoKernel::new(&sys).map_err(|e| e.to_string())?;
            Ok(qs.iter().map(|&q| k.eval_point(q, z)).collect())
        }
        "pencil" => {
            let k = PencilKernel::new(&sys).map_err(|e| e.to_string())?;
            // values within the pole guard are reported as NaN and drawn as gaps
            Ok(qs.iter().map(|&q| k.eval_point(q, z).unwrap_or(f64::NAN)).collect())
        }
        other => Err(format!("unknown kernel '{other}'")),
    }
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn energy_profile(engine: &str, mua: f64, mus: f64, g: f64, lmax: usize, n: usize, rho: f64, zmin: f64, zmax: f64, nz: usize) -> Result<Vec<f64>, JsError> {
    profile(engine, mua, mus, g, lmax, n, rho, zmin, zmax, nz).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn eigenvalues(mua: f64, mus: f64, g: f64, lmax: usize, n: usize, m: usize) -> Result<Vec<f64>, JsError> {
    spectrum(mua, mus, g, lmax, n, m).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn spectral_kernel(kind: &str, mua: f64, mus: f64, g: f64, lmax: usize, n: usize, z_mm: f64, qmax: f64, nq: usize) -> Result<Vec<f64>, JsError> {
    kernel(kind, mua, mus, g, lmax, n, z_mm, qmax, nq).map_err(|e| JsError::new(&e))
}
