//! Gauss–Legendre angular quadrature and medium parameters.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::specfun::legendre_p;
use crate::{Error, Result};

/// Optical properties of the medium and the truncation orders of the solver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    /// Absorption coefficient, 1/mm.
    pub mu_a: f64,
    /// Scattering coefficient, 1/mm.
    pub mu_s: f64,
    /// Anisotropy factor in `[0, 1)`.
    pub g: f64,
    /// Phase-function truncation order.
    pub l_max: usize,
    /// Quadrature half-order: `2N` ordinates in total.
    pub n: usize,
}

impl MediumParams {
    pub fn new(mu_a: f64, mu_s: f64, g: f64, l_max: usize, n: usize) -> Result<Self> {
        let p = Self { mu_a, mu_s, g, l_max, n };
        p.validate()?;
        Ok(p)
    }

    /// Unit-`mu_t` medium with the given albedo; convenient for nondimensional work.
    pub fn from_albedo(albedo: f64, g: f64, l_max: usize, n: usize) -> Result<Self> {
        Self::new(1.0 - albedo, albedo, g, l_max, n)
    }

    /// Soft-tissue-like medium: `mu_a = 0.01`, `mu_s = 10`, `g = 0.9` (1/mm).
    pub fn tissue(l_max: usize, n: usize) -> Self {
        Self { mu_a: 0.01, mu_s: 10.0, g: 0.9, l_max, n }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_a > 0.0 && self.mu_a.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu_a must be > 0, got {}", self.mu_a)));
        }
        if !(self.mu_s > 0.0 && self.mu_s.is_finite()) {
            return Err(Error::InvalidParameter(format!("mu_s must be > 0, got {}", self.mu_s)));
        }
        if !(0.0..1.0).contains(&self.g) {
            return Err(Error::InvalidParameter(format!("g must lie in [0, 1), got {}", self.g)));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("N must be >= 1".into()));
        }
        Ok(())
    }

    pub fn mu_t(&self) -> f64 {
        self.mu_a + self.mu_s
    }

    pub fn albedo(&self) -> f64 {
        self.mu_s / self.mu_t()
    }

    /// `g^l` for `l <= l_max`, zero beyond the truncation.
    pub fn moment(&self, l: usize) -> f64 {
        if l > self.l_max {
            0.0
        } else {
            self.g.powi(l as i32)
        }
    }
}

/// `2N` Gauss–Legendre ordinates. Indices `0..N` hold the positive nodes in
/// ascending order; index `N + i` holds `-mu_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSet {
    pub half_order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Positive nodes `mu_1 < ... < mu_N`.
    pub fn positive_nodes(&self) -> &[f64] {
        &self.nodes[..self.half_order]
    }

    pub fn positive_weights(&self) -> &[f64] {
        &self.weights[..self.half_order]
    }
}

/// Legendre polynomial and derivative by the three-term recurrence.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (x * p1 - p0) / (x * x - 1.0))
}

/// Golub–Welsch on the Jacobi matrix of order `2N`, polished by Newton steps on
/// `P_{2N}`. Weights come from `2 / ((1 - x^2) P'(x)^2)`.
pub fn gauss_legendre(n: usize) -> Result<QuadratureSet> {
    if n == 0 {
        return Err(Error::InvalidParameter("quadrature half-order must be >= 1".into()));
    }
    let order = 2 * n;
    let jacobi = DMatrix::from_fn(order, order, |i, j| {
        if i + 1 == j || j + 1 == i {
            let k = i.max(j) as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let mut roots: Vec<f64> = SymmetricEigen::new(jacobi)
        .eigenvalues
        .iter()
        .copied()
        .filter(|&x| x > 0.0)
        .collect();
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    debug_assert_eq!(roots.len(), n);

    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for (i, root) in roots.into_iter().enumerate() {
        let mut x = root;
        for _ in 0..3 {
            let (p, dp) = legendre_with_derivative(order, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(order, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = x;
        nodes[n + i] = -x;
        weights[i] = w;
        weights[n + i] = w;
    }
    Ok(QuadratureSet { half_order: n, nodes, weights })
}

/// Gauss–Legendre nodes and weights mapped onto `[a, b]`, in ascending order.
pub fn gauss_interval(points: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let rule = gauss_rule(points);
    let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
    rule.iter().map(|&(x, w)| (c + h * x, h * w)).unzip()
}

/// Ascending Gauss–Legendre rule on `[-1, 1]` with any point count.
pub fn gauss_rule(points: usize) -> Vec<(f64, f64)> {
    assert!(points >= 1);
    let mut rule = Vec::with_capacity(points);
    for k in 0..points {
        // Tricomi initial guess, then Newton.
        let theta = std::f64::consts::PI * (k as f64 + 0.75) / (points as f64 + 0.5);
        let mut x = -theta.cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(points, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(points, x);
        rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    rule
}

/// Zeroth and first angular moments of the truncated phase function over the
/// discrete ordinates, with the azimuthal integral done by a trapezoid rule that
/// is exact for the degree-`l_max` trigonometric polynomial.
///
/// Every ordinate is tested; the pair from the ordinate deviating most from
/// `(1, g)` is returned.
pub fn phase_moment_check(quad: &QuadratureSet, params: &MediumParams) -> (f64, f64) {
    let two_pi = 2.0 * std::f64::consts::PI;
    let n_phi = 4 * (params.l_max + 2);
    let coeffs: Vec<f64> = (0..=params.l_max)
        .map(|l| (2 * l + 1) as f64 * params.moment(l) / (4.0 * std::f64::consts::PI))
        .collect();
    let phase = |cos_gamma: f64| -> f64 {
        coeffs.iter().enumerate().map(|(l, c)| c * legendre_p(l, cos_gamma)).sum()
    };

    let mut worst = (1.0, params.g);
    let mut worst_dev = -1.0;
    for &mu in &quad.nodes {
        let (mut m0, mut m1) = (0.0, 0.0);
        for (&mu_p, &w_p) in quad.nodes.iter().zip(&quad.weights) {
            let transverse = ((1.0 - mu * mu) * (1.0 - mu_p * mu_p)).max(0.0).sqrt();
            let (mut a0, mut a1) = (0.0, 0.0);
            for k in 0..n_phi {
                let c = mu * mu_p + transverse * (two_pi * k as f64 / n_phi as f64).cos();
                let p = phase(c);
                a0 += p;
                a1 += c * p;
            }
            let dphi = two_pi / n_phi as f64;
            m0 += w_p * a0 * dphi;
            m1 += w_p * a1 * dphi;
        }
        let dev = (m0 - 1.0).abs() + (m1 - params.g).abs();
        if dev > worst_dev {
            worst_dev = dev;
            worst = (m0, m1);
        }
    }
    worst
}
