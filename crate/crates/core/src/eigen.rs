//! Discrete-ordinates eigenproblem per azimuthal order.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::quadrature::gauss_legendre;
use crate::specfun::{chandrasekhar, p_lm_row, ChandrasekharTable};
use crate::{Error, MediumParams, QuadratureSet, Result};

/// Eigenmodes of one azimuthal order `m >= 0`.
#[derive(Debug, Clone)]
pub struct EigenFamily {
    pub m: usize,
    /// `nu_n`, positive and sorted descending.
    pub nu: Vec<f64>,
    /// `phi[n][i] = phi^m(nu_n, mu_i)` over all `2N` ordinates.
    pub phi: Vec<Vec<f64>>,
    /// `N^m(nu_n)`.
    pub norm: Vec<f64>,
    /// `g_l^m(nu_n)` up to `l_max`.
    pub tables: Vec<ChandrasekharTable>,
}

impl EigenFamily {
    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }
}

/// `(1 - mu^2)^m`.
pub fn sin_power(mu: f64, m: usize) -> f64 {
    (1.0 - mu * mu).powi(m as i32)
}

/// `{W_pm}_ij = w_j (1-mu_j^2)^m sum_{l=m}^{l_max} (2l+1) g^l p_l^m(pm mu_i) p_l^m(mu_j)`.
///
/// The `(1-mu_j^2)^m` factor makes the scattering sum a quadrature of the
/// azimuthal Fourier component of the phase function; without it the
/// normalization and orthogonality relations fail for `m >= 1`.
pub fn build_w(m: usize, quad: &QuadratureSet, params: &MediumParams) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = quad.half_order;
    let mut wp = DMatrix::zeros(n, n);
    let mut wm = DMatrix::zeros(n, n);
    if m > params.l_max {
        return (wp, wm);
    }
    let rows: Vec<Vec<f64>> = quad.positive_nodes().iter().map(|&mu| p_lm_row(m as i32, params.l_max, mu)).collect();
    let coef: Vec<f64> = (m..=params.l_max).map(|l| (2 * l + 1) as f64 * params.moment(l)).collect();
    for i in 0..n {
        for j in 0..n {
            let scale = quad.weights[j] * sin_power(quad.nodes[j], m);
            let (mut sp, mut sm) = (0.0, 0.0);
            for (k, c) in coef.iter().enumerate() {
                let t = c * rows[i][k] * rows[j][k];
                sp += t;
                // p_l^m(-mu) = (-1)^{l-m} p_l^m(mu)
                sm += if k % 2 == 0 { t } else { -t };
            }
            wp[(i, j)] = scale * sp;
            wm[(i, j)] = scale * sm;
        }
    }
    (wp, wm)
}

/// Closed form `(albedo nu / 2) g^m(nu, mu) / (nu - mu)` with
/// `g^m(nu, mu) = sum_l (2l+1) g^l g_l^m(nu) p_l^m(mu)`.
pub fn phi_closed_form(m: usize, table: &ChandrasekharTable, mu: f64, params: &MediumParams) -> f64 {
    let nu = table.nu;
    if m > params.l_max {
        return 0.0;
    }
    let row = p_lm_row(m as i32, params.l_max, mu);
    let gm: f64 = (m..=params.l_max)
        .map(|l| (2 * l + 1) as f64 * params.moment(l) * table.get(l) * row[l - m])
        .sum();
    params.albedo() * nu / 2.0 * gm / (nu - mu)
}

/// Solves `E_- E_+ Y = nu^{-2} Y` with `E_pm = [I - (albedo/2)(W_+ pm W_-)] Xi^{-1}`,
/// recovers `Phi_pm = (U pm V)/2` and normalizes so that
/// `sum_i w_i phi (1-mu_i^2)^m = 1`.
///
/// `W_pm = K_pm D` with `K_pm` symmetric and `D = diag(w_j (1-mu_j^2)^m)`, so
/// `E_- E_+` is similar to `N M` with `M = Xi^{-1/2} S_+ Xi^{-1/2}`,
/// `N = Xi^{-1/2} S_- Xi^{-1/2}` and `S_pm = I - (albedo/2) D^{1/2}(K_+ pm K_-)D^{1/2}`.
/// With `M = L L^T` the spectrum is that of the symmetric `L^T N L`. The product
/// form itself is far from normal (entries grow like `1/mu_1^2`), and a general
/// solver loses several digits in the eigenvectors at large `m`.
pub fn solve_eigen_family(m: usize, quad: &QuadratureSet, params: &MediumParams) -> Result<EigenFamily> {
    params.validate()?;
    let n = quad.half_order;
    let albedo = params.albedo();
    let mu = quad.positive_nodes();
    let d_half: Vec<f64> = (0..n).map(|j| (quad.weights[j] * sin_power(mu[j], m)).sqrt()).collect();

    // S_pm built directly in symmetric form.
    let mut s_plus = DMatrix::<f64>::identity(n, n);
    let mut s_minus = DMatrix::<f64>::identity(n, n);
    if m <= params.l_max {
        let rows: Vec<Vec<f64>> = mu.iter().map(|&x| p_lm_row(m as i32, params.l_max, x)).collect();
        for i in 0..n {
            for j in 0..n {
                let (mut even, mut odd) = (0.0, 0.0);
                for l in m..=params.l_max {
                    let t = (2 * l + 1) as f64 * params.moment(l) * rows[i][l - m] * rows[j][l - m];
                    if (l - m).is_multiple_of(2) {
                        even += t;
                    } else {
                        odd += t;
                    }
                }
                // (K_+ + K_-) keeps even l-m twice, (K_+ - K_-) odd l-m twice.
                let scale = albedo * d_half[i] * d_half[j];
                s_plus[(i, j)] -= scale * even;
                s_minus[(i, j)] -= scale * odd;
            }
        }
    }
    let xi_mhalf: Vec<f64> = mu.iter().map(|x| 1.0 / x.sqrt()).collect();
    let mm = DMatrix::from_fn(n, n, |i, j| xi_mhalf[i] * s_plus[(i, j)] * xi_mhalf[j]);
    let nn = DMatrix::from_fn(n, n, |i, j| xi_mhalf[i] * s_minus[(i, j)] * xi_mhalf[j]);
    let chol = mm.cholesky().ok_or_else(|| {
        Error::SpectralAssumption(format!("m = {m}: I - (albedo/2)(W_+ + W_-) is not positive definite"))
    })?;
    let l = chol.l();
    let mut h = l.transpose() * &nn * &l;
    h = (&h + h.transpose()) * 0.5;
    let eig = h.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    // ascending lambda = descending nu
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());

    let lt = l.transpose();
    let mut fam = EigenFamily { m, nu: Vec::with_capacity(n), phi: Vec::with_capacity(n), norm: Vec::new(), tables: Vec::with_capacity(n) };
    for &k in &order {
        let lambda = eig.eigenvalues[k];
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::SpectralAssumption(format!("m = {m}: eigenvalue {lambda} of E_- E_+ is not positive")));
        }
        let nu = 1.0 / lambda.sqrt();
        let v = lt
            .solve_upper_triangular(&eig.eigenvectors.column(k).into_owned())
            .ok_or_else(|| Error::SpectralAssumption(format!("m = {m}: singular Cholesky factor")))?;
        // Symmetrized U: psi_u = D^{1/2} U = Xi^{-1/2} v; symmetrized V = nu Xi^{-1} S_+ psi_u.
        let psi_u = DVector::from_fn(n, |i, _| xi_mhalf[i] * v[i]);
        let s_u = &s_plus * &psi_u;
        let mut phi = vec![0.0; 2 * n];
        for i in 0..n {
            let psi_v = nu * s_u[i] / mu[i];
            phi[i] = (psi_u[i] + psi_v) / (2.0 * d_half[i]);
            phi[n + i] = (psi_u[i] - psi_v) / (2.0 * d_half[i]);
        }
        let s: f64 = (0..2 * n).map(|i| quad.weights[i] * sin_power(quad.nodes[i], m) * phi[i]).sum();
        if s.abs() < 1e-300 || !s.is_finite() {
            return Err(Error::SpectralAssumption(format!("m = {m}: eigenvector with vanishing normalization sum")));
        }
        phi.iter_mut().for_each(|p| *p /= s);
        fam.nu.push(nu);
        fam.phi.push(phi);
        fam.tables.push(chandrasekhar(m as i32, nu, params.l_max.max(m), params));
    }
    reorthogonalize_clusters(&mut fam, quad);
    fam.norm = (0..n).map(|k| bilinear_lab(&fam, quad, k, k, false)).collect();
    Ok(fam)
}

/// `E_- E_+` assembled from [`build_w`]; the product form the symmetric solve
/// is similar to.
pub fn product_matrix(m: usize, quad: &QuadratureSet, params: &MediumParams) -> DMatrix<f64> {
    let n = quad.half_order;
    let albedo = params.albedo();
    let (wp, wm) = build_w(m, quad, params);
    let xi_inv = DMatrix::from_diagonal(&DVector::from_iterator(n, quad.positive_nodes().iter().map(|x| 1.0 / x)));
    let eye = DMatrix::<f64>::identity(n, n);
    let e_plus = (&eye - (&wp + &wm) * (albedo / 2.0)) * &xi_inv;
    let e_minus = (&eye - (&wp - &wm) * (albedo / 2.0)) * &xi_inv;
    e_minus * e_plus
}

/// Gram–Schmidt against the weighted bilinear form for eigenvalues closer than
/// `1e-12` relative; a no-op for simple spectra.
fn reorthogonalize_clusters(fam: &mut EigenFamily, quad: &QuadratureSet) {
    let n = fam.len();
    for b in 1..n {
        for a in 0..b {
            if (fam.nu[a] - fam.nu[b]).abs() >= 1e-12 * fam.nu[a] {
                continue;
            }
            let num = bilinear_lab(fam, quad, a, b, false);
            let den = bilinear_lab(fam, quad, a, a, false);
            let (pa, pb) = (fam.phi[a].clone(), &mut fam.phi[b]);
            pb.iter_mut().zip(&pa).for_each(|(x, y)| *x -= num / den * y);
            let s: f64 = (0..pb.len()).map(|i| quad.weights[i] * sin_power(quad.nodes[i], fam.m) * pb[i]).sum();
            pb.iter_mut().for_each(|x| *x /= s);
        }
    }
}

/// Laboratory-frame orthogonality form
/// `sum_i w_i mu_i phi(nu_a, mu_i) phi(pm nu_b, mu_i) (1-mu_i^2)^m`.
/// With `flip_b` the second vector is the `-nu_b` mode, `phi(-nu, mu) = phi(nu, -mu)`.
pub fn bilinear_lab(fam: &EigenFamily, quad: &QuadratureSet, a: usize, b: usize, flip_b: bool) -> f64 {
    let n = quad.half_order;
    (0..2 * n)
        .map(|i| {
            let jb = if flip_b { (i + n) % (2 * n) } else { i };
            quad.weights[i] * quad.nodes[i] * sin_power(quad.nodes[i], fam.m) * fam.phi[a][i] * fam.phi[b][jb]
        })
        .sum()
}

/// Stored eigenvector `phi^m(nu_n, mu_i)` over all `2N` ordinates.
pub fn phi_values(fam: &EigenFamily, n: usize) -> Result<&[f64]> {
    fam.phi.get(n).map(|v| v.as_slice()).ok_or(Error::IndexOutOfRange { index: n, len: fam.len() })
}

/// Largest relative deviation between the stored eigenvector and the closed form.
pub fn closed_form_deviation(fam: &EigenFamily, n: usize, quad: &QuadratureSet, params: &MediumParams) -> Result<f64> {
    let phi = phi_values(fam, n)?;
    let scale = phi.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    Ok(quad
        .nodes
        .iter()
        .zip(phi)
        .map(|(&mu, &p)| (phi_closed_form(fam.m, &fam.tables[n], mu, params) - p).abs() / scale)
        .fold(0.0, f64::max))
}

/// Distance from `nu_n` to the nearest ordinate. The closed form divides by
/// `nu - mu_i`, so its attainable agreement with the eigenvector is about
/// `eps / gap`; high-order near-streaming modes can sit within `1e-15` of a node.
pub fn node_gap(fam: &EigenFamily, n: usize, quad: &QuadratureSet) -> f64 {
    quad.nodes.iter().map(|x| (x - fam.nu[n]).abs()).fold(f64::INFINITY, f64::min)
}

/// Quadrature, parameters and one eigen family per `m = 0..=l_max`.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub params: MediumParams,
    pub quad: QuadratureSet,
    pub families: Vec<EigenFamily>,
}

impl EigenSystem {
    pub fn new(params: &MediumParams) -> Result<Self> {
        let quad = gauss_legendre(params.n)?;
        let families = (0..=params.l_max)
            .into_par_iter()
            .map(|m| solve_eigen_family(m, &quad, params))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { params: *params, quad, families })
    }

    /// Only the `m = 0` family; sufficient for energy densities.
    pub fn azimuthal_zero(params: &MediumParams) -> Result<Self> {
        let quad = gauss_legendre(params.n)?;
        let families = vec![solve_eigen_family(0, &quad, params)?];
        Ok(Self { params: *params, quad, families })
    }

    /// Family for `|m|`; negative orders share the vectors of `|m|`.
    pub fn family(&self, m: i32) -> &EigenFamily {
        &self.families[m.unsigned_abs() as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn w_examples() {
        let q = gauss_legendre(3).unwrap();
        let iso = MediumParams::from_albedo(0.8, 0.0, 0, 3).unwrap();
        let (wp, wm) = build_w(0, &q, &iso);
        for i in 0..3 {
            for j in 0..3 {
                assert!((wp[(i, j)] - q.weights[j]).abs() < 1e-15);
                assert_eq!(wp[(i, j)], wm[(i, j)]);
            }
        }
        let zero_g = MediumParams::from_albedo(0.8, 0.0, 2, 3).unwrap();
        let (wp, _) = build_w(2, &q, &zero_g);
        assert!(wp.iter().all(|&x| x == 0.0));
        let lin = MediumParams::from_albedo(0.8, 0.6, 1, 3).unwrap();
        let (wp, wm) = build_w(0, &q, &lin);
        for i in 0..3 {
            for j in 0..3 {
                let (mi, mj, w) = (q.nodes[i], q.nodes[j], q.weights[j]);
                assert!((wp[(i, j)] - w * (1.0 + 1.8 * mi * mj)).abs() < 1e-14);
                assert!((wm[(i, j)] - w * (1.0 - 1.8 * mi * mj)).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn streaming_limit() {
        let q = gauss_legendre(5).unwrap();
        let p = MediumParams::from_albedo(1e-12, 0.5, 3, 5).unwrap();
        let f = solve_eigen_family(0, &q, &p).unwrap();
        for n in 0..5 {
            assert!((f.nu[n] - q.nodes[4 - n]).abs() < 1e-9);
        }
    }

    #[test]
    fn normalization_and_orthogonality() {
        let p = MediumParams::tissue(9, 9);
        let sys = EigenSystem::new(&p).unwrap();
        for fam in &sys.families {
            assert_eq!(fam.len(), 9);
            for n in 0..9 {
                let s: f64 = (0..18).map(|i| sys.quad.weights[i] * sin_power(sys.quad.nodes[i], fam.m) * fam.phi[n][i]).sum();
                assert!((s - 1.0).abs() < 1e-12);
                for k in 0..9 {
                    let b = bilinear_lab(fam, &sys.quad, n, k, false);
                    let flip = bilinear_lab(fam, &sys.quad, n, k, true);
                    let scale = (fam.norm[n] * fam.norm[k]).abs().sqrt();
                    if n != k {
                        assert!(b.abs() < 1e-9 * scale, "m={} {n},{k}: {b}", fam.m);
                    }
                    assert!(flip.abs() < 1e-9 * scale, "m={} {n},-{k}: {flip}", fam.m);
                }
            }
        }
    }

    #[test]
    fn closed_form_agrees() {
        let p = MediumParams::tissue(1, 9);
        let sys = EigenSystem::new(&p).unwrap();
        for fam in &sys.families {
            for n in 0..9 {
                let d = closed_form_deviation(fam, n, &sys.quad, &p).unwrap();
                assert!(d < 1e-8, "m={} n={n} nu={}: {d}", fam.m, fam.nu[n]);
            }
        }
        let p = MediumParams::tissue(9, 9);
        let sys = EigenSystem::new(&p).unwrap();
        for fam in &sys.families {
            for n in 0..9 {
                let d = closed_form_deviation(fam, n, &sys.quad, &p).unwrap();
                let tol = 1e-8 + 8.0 * f64::EPSILON / node_gap(fam, n, &sys.quad);
                assert!(d < tol, "m={} n={n} nu={}: {d}", fam.m, fam.nu[n]);
            }
        }
    }

    #[test]
    fn symmetric_solve_matches_product_form() {
        let p = MediumParams::tissue(9, 9);
        let q = gauss_legendre(9).unwrap();
        for m in [0, 3, 9] {
            let fam = solve_eigen_family(m, &q, &p).unwrap();
            let a = product_matrix(m, &q, &p);
            let mut ev: Vec<f64> = a.complex_eigenvalues().iter().map(|z| z.re).collect();
            ev.sort_by(|x, y| x.partial_cmp(y).unwrap());
            for (lam, nu) in ev.iter().zip(&fam.nu) {
                assert!((lam * nu * nu - 1.0).abs() < 1e-9, "m={m}: {lam} vs nu={nu}");
            }
            // residual of the original (unsymmetrized) eigen equation on Y = Xi U
            for n in 0..9 {
                let y = DVector::from_fn(9, |i, _| q.nodes[i] * (fam.phi[n][i] + fam.phi[n][9 + i]));
                let r = &a * &y - &y / (fam.nu[n] * fam.nu[n]);
                assert!(r.norm() <= 1e-9 * (a.norm() * y.norm()), "m={m} n={n}");
            }
        }
    }
}
