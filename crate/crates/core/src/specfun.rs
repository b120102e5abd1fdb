//! Special functions: normalized associated Legendre functions, Chandrasekhar
//! polynomials, analytically continued Wigner d-matrices and `J0`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::ops::{Add, Div, Mul, Sub};

use num_complex::Complex64;

use crate::{Error, MediumParams, Result};

/// Arithmetic needed by the Legendre recurrences; implemented for `f64` and
/// `Complex64` so the same code serves real ordinates and continued arguments.
pub trait Scalar:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Mul<f64, Output = Self> + Div<f64, Output = Self> + From<f64>
{
}

impl Scalar for f64 {}
impl Scalar for Complex64 {}

/// `p_m^m = (2m-1)!! / sqrt((2m)!)`, accumulated as a product to avoid overflow.
pub fn p_mm_seed(m: usize) -> f64 {
    (1..=m).map(|k| ((2 * k - 1) as f64 / (2 * k) as f64).sqrt()).product()
}

fn parity(m: i32) -> f64 {
    if m.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `p_l^m(x)` for `l = |m| ..= l_top`; element `k` holds degree `|m| + k`.
///
/// Uses `sqrt((l+1)^2 - m^2) p_{l+1} = (2l+1) x p_l - sqrt(l^2 - m^2) p_{l-1}`
/// and `p_l^{-m} = (-1)^m p_l^m`.
pub fn p_lm_row<T: Scalar>(m: i32, l_top: usize, x: T) -> Vec<T> {
    let am = m.unsigned_abs() as usize;
    if l_top < am {
        return Vec::new();
    }
    let seed = p_mm_seed(am) * if m < 0 { parity(m) } else { 1.0 };
    let mut row: Vec<T> = Vec::with_capacity(l_top - am + 1);
    row.push(T::from(seed));
    if l_top > am {
        row.push(x * ((2 * am + 1) as f64).sqrt() * seed);
    }
    let m2 = (am * am) as f64;
    for l in (am + 1)..l_top {
        let lf = l as f64;
        let a = ((lf + 1.0) * (lf + 1.0) - m2).sqrt();
        let b = (lf * lf - m2).sqrt();
        let k = l - am;
        let next = (x * row[k] * (2.0 * lf + 1.0) - row[k - 1] * b) / a;
        row.push(next);
    }
    row
}

/// Normalized associated Legendre function
/// `p_l^m(mu) = (-1)^m sqrt((l-m)!/(l+m)!) P_l^m(mu) (1-mu^2)^{-|m|/2}`.
pub fn p_lm(l: usize, m: i32, mu: f64) -> Result<f64> {
    if (m.unsigned_abs() as usize) > l {
        return Err(Error::InvalidParameter(format!("p_lm requires l >= |m|, got l={l}, m={m}")));
    }
    Ok(*p_lm_row(m, l, mu).last().unwrap())
}

/// Legendre polynomial `P_l(x)`.
pub fn legendre_p(l: usize, x: f64) -> f64 {
    *p_lm_row(0, l, x).last().unwrap()
}

/// Spherical harmonic `Y_lm(mu, phi)` built from `p_l^m`:
/// `sqrt((2l+1)/4pi) (-1)^m p_l^m(mu) (1-mu^2)^{|m|/2} e^{i m phi}`.
pub fn spherical_harmonic(l: usize, m: i32, mu: f64, phi: f64) -> Complex64 {
    let p = p_lm(l, m, mu).expect("spherical_harmonic requires l >= |m|");
    let s = (1.0 - mu * mu).max(0.0).powf(m.unsigned_abs() as f64 / 2.0);
    let norm = ((2 * l + 1) as f64 / (4.0 * PI)).sqrt() * parity(m);
    Complex64::from_polar(norm * p * s, m as f64 * phi)
}

/// `h_l = (2l+1)(1 - albedo g^l)` inside the truncation, `2l+1` beyond it.
pub fn h_coeff(l: usize, params: &MediumParams) -> f64 {
    (2 * l + 1) as f64 * (1.0 - params.albedo() * params.moment(l))
}

/// Normalized Chandrasekhar polynomials `g_l^m(nu)` for `l = |m| ..= l_top`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChandrasekharTable {
    pub m: i32,
    pub nu: f64,
    /// `values[k] = g_{|m|+k}^m(nu)`.
    pub values: Vec<f64>,
}

impl ChandrasekharTable {
    pub fn l_top(&self) -> usize {
        self.m.unsigned_abs() as usize + self.values.len() - 1
    }

    /// `g_l^m(nu)`; zero below `|m|`.
    pub fn get(&self, l: usize) -> f64 {
        let am = self.m.unsigned_abs() as usize;
        if l < am {
            0.0
        } else {
            self.values[l - am]
        }
    }

    /// Largest relative residual of the three-term recurrence over the table.
    pub fn recurrence_residual(&self, params: &MediumParams) -> f64 {
        let am = self.m.unsigned_abs() as usize;
        let m2 = (am * am) as f64;
        let mut worst: f64 = 0.0;
        for l in (am + 1)..self.l_top() {
            let lf = l as f64;
            let r = ((lf + 1.0).powi(2) - m2).sqrt() * self.get(l + 1) + (lf * lf - m2).sqrt() * self.get(l - 1)
                - self.nu * h_coeff(l, params) * self.get(l);
            worst = worst.max(r.abs() / self.get(l).abs().max(1.0));
        }
        worst
    }
}

fn chandrasekhar_seed(m: i32) -> f64 {
    p_mm_seed(m.unsigned_abs() as usize) * if m < 0 { parity(m) } else { 1.0 }
}

/// Forward three-term recurrence from `g_{|m|}^m`. Stable for `|nu| <= 1` and
/// moderate `nu`; loses accuracy for large `nu` where the dominant solution grows.
pub fn chandrasekhar_forward(m: i32, nu: f64, l_top: usize, params: &MediumParams) -> ChandrasekharTable {
    let am = m.unsigned_abs() as usize;
    let l_top = l_top.max(am);
    let m2 = (am * am) as f64;
    let mut values = Vec::with_capacity(l_top - am + 1);
    values.push(chandrasekhar_seed(m));
    if l_top > am {
        values.push(nu * h_coeff(am, params) * values[0] / ((2 * am + 1) as f64).sqrt());
    }
    for l in (am + 1)..l_top {
        let lf = l as f64;
        let k = l - am;
        let next = (nu * h_coeff(l, params) * values[k] - (lf * lf - m2).sqrt() * values[k - 1])
            / ((lf + 1.0).powi(2) - m2).sqrt();
        values.push(next);
    }
    ChandrasekharTable { m, nu, values }
}

/// Default starting index of the backward ratio recursion.
pub fn default_l_start(params: &MediumParams) -> usize {
    (2 * params.l_max).max(params.l_max + 20)
}

/// Backward table together with the relative deviation of the reconstructed
/// `g_{|m|+1}` from the first-step identity `sqrt(2|m|+1) g_{|m|+1} = nu h_{|m|} g_{|m|}`.
#[derive(Debug, Clone)]
pub struct BackwardResult {
    pub table: ChandrasekharTable,
    pub seed_residual: f64,
    pub l_start: usize,
}

fn backward_once(m: i32, nu: f64, l_top: usize, l_start: usize, params: &MediumParams) -> Result<(ChandrasekharTable, f64)> {
    let am = m.unsigned_abs() as usize;
    let m2 = (am * am) as f64;
    // ratios[k] = g_{am+k+1} / g_{am+k}
    let top = l_start.max(l_top + 1);
    let mut ratios = vec![0.0; top - am + 1];
    let mut r = 0.0;
    for l in ((am + 1)..=top).rev() {
        let lf = l as f64;
        let denom = nu * h_coeff(l, params) - ((lf + 1.0).powi(2) - m2).sqrt() * r;
        if denom.abs() < 1e-300 || !denom.is_finite() {
            return Err(Error::IllConditioned { nu, detail: format!("vanishing denominator at l = {l}") });
        }
        r = (lf * lf - m2).sqrt() / denom;
        ratios[l - 1 - am] = r;
    }
    let mut values = Vec::with_capacity(l_top - am + 1);
    values.push(chandrasekhar_seed(m));
    for k in 1..=(l_top - am) {
        let prev = values[k - 1];
        values.push(prev * ratios[k - 1]);
    }
    let expected = nu * h_coeff(am, params) / ((2 * am + 1) as f64).sqrt();
    let seed_residual = (ratios[0] - expected).abs() / expected.abs().max(f64::MIN_POSITIVE);
    Ok((ChandrasekharTable { m, nu, values }, seed_residual))
}

/// Backward ratio recursion `g~_{l-1} = sqrt(l^2-m^2) / (nu h_l - sqrt((l+1)^2-m^2) g~_l)`
/// from `g~_{L_start} = 0`, then `g_{l+1} = g~_l g_l` upward from the seed.
///
/// `L_start` is doubled (at most four times) while the first-step identity is
/// violated by more than `1e-12`; the best attempt is returned with its residual.
pub fn chandrasekhar_backward(m: i32, nu: f64, l_top: usize, l_start: usize, params: &MediumParams) -> Result<BackwardResult> {
    if nu.abs() <= 1.0 {
        return Err(Error::InvalidParameter(format!("backward recursion requires |nu| > 1, got {nu}")));
    }
    let am = m.unsigned_abs() as usize;
    let l_top = l_top.max(am);
    let mut l_start = l_start.max(l_top + 1);
    let (mut table, mut res) = backward_once(m, nu, l_top, l_start, params)?;
    let mut best_start = l_start;
    for _ in 0..4 {
        if res <= 1e-12 {
            break;
        }
        l_start *= 2;
        let (t, r) = backward_once(m, nu, l_top, l_start, params)?;
        if r < res {
            table = t;
            res = r;
            best_start = l_start;
        }
    }
    Ok(BackwardResult { table, seed_residual: res, l_start: best_start })
}

/// Chandrasekhar table by the construction suited to `nu`: the backward ratio
/// recursion when it reproduces the first-step identity (large `|nu| > 1`, the
/// minimal solution), the forward recurrence otherwise.
pub fn chandrasekhar(m: i32, nu: f64, l_top: usize, params: &MediumParams) -> ChandrasekharTable {
    if nu.abs() > 1.0 {
        if let Ok(b) = chandrasekhar_backward(m, nu, l_top, default_l_start(params), params) {
            if b.seed_residual <= 1e-10 {
                return b.table;
            }
        }
    }
    chandrasekhar_forward(m, nu, l_top, params)
}

/// Wigner d-matrices `d^l_{m'm}` continued to the imaginary angle with
/// `cos(theta) = sqrt(1 + x^2)`, for `0 <= l <= l_max`.
#[derive(Debug, Clone)]
pub struct WignerDTable {
    pub l_max: usize,
    pub x: f64,
    data: Vec<Vec<Complex64>>,
}

impl WignerDTable {
    /// `d^l_{m' m}`.
    pub fn get(&self, l: usize, mp: i32, m: i32) -> Complex64 {
        let li = l as i32;
        debug_assert!(mp.abs() <= li && m.abs() <= li);
        let w = 2 * l + 1;
        self.data[l][(mp + li) as usize * w + (m + li) as usize]
    }

    fn set(&mut self, l: usize, mp: i32, m: i32, v: Complex64) {
        let li = l as i32;
        let w = 2 * l + 1;
        self.data[l][(mp + li) as usize * w + (m + li) as usize] = v;
    }
}

/// Pyramid scheme: bulk recurrence in `l` for first index `<= l-2`, corner and
/// edge relations for the two outermost rows, symmetry for everything else.
pub fn wigner_d_continued(l_max: usize, x: f64) -> WignerDTable {
    let x = x.abs();
    let c = (1.0 + x * x).sqrt();
    let i = Complex64::i();
    let mut t = WignerDTable {
        l_max,
        x,
        data: (0..=l_max).map(|l| vec![Complex64::new(0.0, 0.0); (2 * l + 1) * (2 * l + 1)]).collect(),
    };
    t.set(0, 0, 0, 1.0.into());
    if l_max == 0 {
        return t;
    }
    let d11 = (1.0 + c) / 2.0;
    let d1m1 = (1.0 - c) / 2.0;
    t.set(1, 0, 0, c.into());
    t.set(1, 0, 1, i * (x * FRAC_1_SQRT_2));
    t.set(1, 1, 1, d11.into());
    t.set(1, 1, -1, d1m1.into());
    t.set(1, 1, 0, -i * (x * FRAC_1_SQRT_2));
    fill_by_symmetry(&mut t, 1);
    let ratio = (d1m1 / d11).abs().sqrt();

    for l in 2..=l_max {
        let lf = l as f64;
        let li = l as i32;
        for m in 0..=(li - 2) {
            for mp in -m..=m {
                let (mf, mpf) = (m as f64, mp as f64);
                let pre = lf * (2.0 * lf - 1.0) / ((lf * lf - mf * mf) * (lf * lf - mpf * mpf)).sqrt();
                let back = (((lf - 1.0).powi(2) - mf * mf) * ((lf - 1.0).powi(2) - mpf * mpf)).sqrt()
                    / ((lf - 1.0) * (2.0 * lf - 1.0));
                let older = if m.abs() <= li - 2 && mp.abs() <= li - 2 { t.get(l - 2, m, mp) } else { 0.0.into() };
                let v = (t.get(l - 1, m, mp) * (c - mf * mpf / (lf * (lf - 1.0))) - older * back) * pre;
                t.set(l, m, mp, v);
            }
        }
        let prev = t.get(l - 1, li - 1, li - 1);
        t.set(l, li, li, prev * d11);
        t.set(l, li - 1, li - 1, prev * (lf * c - lf + 1.0));
        for mp in (-li..=(li - 1)).rev() {
            let mpf = mp as f64;
            let f = ((lf + mpf + 1.0) / (lf - mpf)).sqrt() * ratio;
            let v = -i * f * t.get(l, li, mp + 1);
            t.set(l, li, mp, v);
        }
        for mp in ((1 - li)..=(li - 2)).rev() {
            let mpf = mp as f64;
            let f = (lf * c - mpf) / (lf * c - mpf - 1.0) * ((lf + mpf + 1.0) / (lf - mpf)).sqrt() * ratio;
            let v = -i * f * t.get(l, li - 1, mp + 1);
            t.set(l, li - 1, mp, v);
        }
        fill_by_symmetry(&mut t, l);
    }
    t
}

/// Entries with first index `>= |second|` are canonical; the rest follow from
/// `d_{mm'} = d_{-m',-m} = (-1)^{m+m'} d_{-m,-m'} = (-1)^{m+m'} d_{m'm}`.
fn fill_by_symmetry(t: &mut WignerDTable, l: usize) {
    let li = l as i32;
    for a in -li..=li {
        for b in -li..=li {
            if a >= b.abs() {
                continue;
            }
            let sign = parity(a + b);
            let v = if b >= a.abs() {
                t.get(l, b, a) * sign
            } else if -a >= b.abs() {
                t.get(l, -a, -b) * sign
            } else {
                t.get(l, -b, -a)
            };
            t.set(l, a, b, v);
        }
    }
}

/// Bessel function `J0(x)`: Miller's backward recurrence normalized by
/// `J0 + 2 sum J_{2k} = 1` for `x <= 25`, Hankel's asymptotic expansion beyond.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x == 0.0 {
        return 1.0;
    }
    if x <= 25.0 {
        let start = {
            let n = (x + 20.0 + 9.0 * x.cbrt()).ceil() as usize;
            n + (n % 2)
        };
        let (mut jp1, mut j) = (0.0_f64, 1e-30_f64);
        let mut j0 = 0.0;
        let mut norm = 0.0;
        for k in (0..start).rev() {
            // J_{k} = (2(k+1)/x) J_{k+1} - J_{k+2}
            let jm1 = 2.0 * (k as f64 + 1.0) / x * j - jp1;
            jp1 = j;
            j = jm1;
            if k == 0 {
                j0 = j;
                norm += j;
            } else if k % 2 == 0 {
                norm += 2.0 * j;
            }
            if j.abs() > 1e250 {
                j *= 1e-250;
                jp1 *= 1e-250;
                norm *= 1e-250;
            }
        }
        return j0 / norm;
    }
    let (p, q) = hankel_pq(x);
    let (s, c) = x.sin_cos();
    // cos(x - pi/4) and sin(x - pi/4) without rounding pi/4 into a large argument.
    let cos_chi = (c + s) * FRAC_1_SQRT_2;
    let sin_chi = (s - c) * FRAC_1_SQRT_2;
    (2.0 / (PI * x)).sqrt() * (p * cos_chi - q * sin_chi)
}

/// Asymptotic series `P_0(x)`, `Q_0(x)` truncated at the smallest term.
fn hankel_pq(x: f64) -> (f64, f64) {
    hankel_pq_from(x, 1)
}

/// Terms of order `x^{-k}` with `k >= first` of the asymptotic series
/// (`P` starts at 1 when `first <= 0`).
fn hankel_pq_from(x: f64, first: usize) -> (f64, f64) {
    let mut p = if first <= 1 { 1.0 } else { 0.0 };
    let mut q = 0.0;
    let mut term = 1.0_f64;
    let mut k = 1usize;
    loop {
        let kk = (2 * k - 1) as f64;
        let next = term * kk * kk / (k as f64 * 8.0 * x);
        if next.abs() >= term.abs() || next.abs() < 1e-18 * if first <= 1 { 1.0 } else { x.powi(-(first as i32)) } {
            break;
        }
        term = next;
        if k >= first {
            let sign = if (k / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
            if k % 2 == 1 {
                q -= sign * term;
            } else {
                p += sign * term;
            }
        }
        k += 1;
    }
    (p, q)
}

/// `d(q, rho) = q J0(q rho) - sqrt(2q/(pi rho)) [(1 - 9/(128 x^2)) cos(x - pi/4)
/// + (1/(8x) - 75/(1024 x^3)) sin(x - pi/4)]` with `x = q rho`.
pub fn j0_tail_correction(q: f64, rho: f64) -> Result<f64> {
    let x = q * rho;
    if !(x >= PI / 8.0) || !(q > 0.0) || !(rho > 0.0) {
        return Err(Error::InvalidParameter(format!("j0_tail_correction requires q rho >= pi/8, got {x}")));
    }
    let (s, c) = x.sin_cos();
    let cos_chi = (c + s) * FRAC_1_SQRT_2;
    let sin_chi = (s - c) * FRAC_1_SQRT_2;
    if x > 25.0 {
        // the retained terms cancel exactly; keep only the remainder of the series
        let (p, qq) = hankel_pq_from(x, 4);
        return Ok((2.0 * q / (PI * rho)).sqrt() * (p * cos_chi - qq * sin_chi));
    }
    let asym = (2.0 * q / (PI * rho)).sqrt()
        * ((1.0 - 9.0 / (128.0 * x * x)) * cos_chi + (1.0 / (8.0 * x) - 75.0 / (1024.0 * x * x * x)) * sin_chi);
    Ok(q * bessel_j0(x) - asym)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre;

    /// `J0(x) = (1/pi) int_0^pi cos(x cos t) dt`, trapezoid on the periodic integrand.
    fn j0_hansen(x: f64) -> f64 {
        let n = (x as usize) + 64;
        let h = PI / n as f64;
        let mut s = 0.5 * ((x).cos() + (-x).cos());
        for k in 1..n {
            s += (x * (k as f64 * h).cos()).cos();
        }
        s * h / PI
    }

    #[test]
    fn j0_values() {
        assert_eq!(bessel_j0(0.0), 1.0);
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-14);
        assert!(bessel_j0(2.404_825_557_695_773).abs() < 1e-14);
        for &x in &[1e-6, 0.3, 2.0, 7.9, 8.1, 15.0, 24.99, 25.01, 40.0, 123.4, 999.0, 5000.5, 1e4] {
            let (a, b) = (bessel_j0(x), j0_hansen(x));
            assert!((a - b).abs() < 1e-12, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn tail_correction() {
        assert!(j0_tail_correction(0.01, 1.0).is_err());
        let d = j0_tail_correction(1.0, 10.0).unwrap();
        assert!(d.abs() <= 1e-5, "{d}");
        let far = j0_tail_correction(10.0, 100.0).unwrap();
        assert!(far.abs() < 1e-9 * 10f64.sqrt());
        // the remainder form continues the direct difference across x = 25
        for x in [25.5, 40.0, 80.0] {
            let (s, c) = f64::sin_cos(x);
            let (cc, sc) = ((c + s) * FRAC_1_SQRT_2, (s - c) * FRAC_1_SQRT_2);
            let direct = x * j0_hansen(x)
                - (2.0 * x / PI).sqrt() * ((1.0 - 9.0 / (128.0 * x * x)) * cc + (1.0 / (8.0 * x) - 75.0 / (1024.0 * x * x * x)) * sc);
            let d = j0_tail_correction(x, 1.0).unwrap();
            assert!((d - direct).abs() < 1e-12 * x, "x={x}: {d} vs {direct}");
            // leading remainder: sqrt(2x/pi) 3675/(32768 x^4) cos(x - pi/4)
            assert!(d.abs() < 0.1 * x.powf(-3.5), "x={x}: {d}");
        }
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(p_lm(0, 0, 0.4).unwrap(), 1.0);
        assert!((p_lm(1, 1, 0.3).unwrap() - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((p_lm(1, -1, 0.3).unwrap() + FRAC_1_SQRT_2).abs() < 1e-15);
        assert!(p_lm(1, 2, 0.3).is_err());
        // P_3(x) = (5x^3 - 3x)/2
        let x = 0.37;
        assert!((legendre_p(3, x) - (5.0 * x * x * x - 3.0 * x) / 2.0).abs() < 1e-15);
        // p_2^1 = -sqrt(1/6) P_2^1 / sqrt(1-x^2) with P_2^1 = -3x sqrt(1-x^2)
        assert!((p_lm(2, 1, x).unwrap() - 3.0 * x / 6f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn legendre_discrete_orthogonality() {
        let n = 9;
        let q = gauss_legendre(n).unwrap();
        for m in 0..=9i32 {
            let top = 2 * n - 1 - m as usize;
            if top < m as usize {
                continue;
            }
            let rows: Vec<Vec<f64>> = q.nodes.iter().map(|&mu| p_lm_row(m, top, mu)).collect();
            for a in m as usize..=top {
                for b in m as usize..=top {
                    let s: f64 = (0..2 * n)
                        .map(|i| {
                            q.weights[i] * rows[i][a - m as usize] * rows[i][b - m as usize]
                                * (1.0 - q.nodes[i].powi(2)).powi(m)
                        })
                        .sum();
                    let exact = if a == b { 2.0 / (2 * a + 1) as f64 } else { 0.0 };
                    assert!((s - exact).abs() < 1e-12, "m={m} l={a} l'={b}: {s}");
                }
            }
        }
    }

    #[test]
    fn h_examples() {
        let p = MediumParams::from_albedo(0.5, 0.9, 1, 4).unwrap();
        assert!((h_coeff(0, &p) - 0.5).abs() < 1e-15);
        assert!((h_coeff(1, &p) - 1.65).abs() < 1e-15);
        assert_eq!(h_coeff(2, &p), 5.0);
    }

    #[test]
    fn chandrasekhar_examples() {
        let p = MediumParams::from_albedo(0.9, 0.5, 3, 4).unwrap();
        let t = chandrasekhar_forward(0, 0.7, 5, &p);
        assert_eq!(t.get(0), 1.0);
        assert!((t.get(1) - 0.7 * 0.1).abs() < 1e-15);
        assert!((chandrasekhar_forward(1, 0.7, 3, &p).get(1) - FRAC_1_SQRT_2).abs() < 1e-15);
        let t0 = chandrasekhar_forward(0, 0.0, 4, &p);
        assert!((t0.get(2) + 0.5).abs() < 1e-15);
        assert!(t.recurrence_residual(&p) < 1e-12);
        let neg = chandrasekhar_forward(-1, 0.7, 5, &p);
        let pos = chandrasekhar_forward(1, 0.7, 5, &p);
        for l in 1..=5 {
            assert_eq!(neg.get(l), -pos.get(l));
        }
    }

    fn factorial(n: i32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Explicit Wigner sum with complex half-angle functions.
    fn wigner_explicit(l: i32, mp: i32, m: i32, x: f64) -> Complex64 {
        let c = (1.0 + x * x).sqrt();
        let ch = Complex64::new(((1.0 + c) / 2.0).sqrt(), 0.0);
        let sh = Complex64::new(0.0, ((c - 1.0) / 2.0).sqrt());
        let pre = (factorial(l + mp) * factorial(l - mp) * factorial(l + m) * factorial(l - m)).sqrt();
        let mut s = Complex64::new(0.0, 0.0);
        for k in 0..=(2 * l) {
            if l + m - k < 0 || l - k - mp < 0 || k - m + mp < 0 {
                continue;
            }
            let den = factorial(l + m - k) * factorial(k) * factorial(l - k - mp) * factorial(k - m + mp);
            let sign = parity(k - m + mp);
            s += ch.powi(2 * l - 2 * k + m - mp) * sh.powi(2 * k - m + mp) * (sign * pre / den);
        }
        s
    }

    #[test]
    fn wigner_matches_explicit_sum() {
        for &x in &[0.0, 0.1, 0.5, 1.0, 2.0, 10.0] {
            let t = wigner_d_continued(9, x);
            for l in 0..=9i32 {
                for mp in -l..=l {
                    for m in -l..=l {
                        let a = t.get(l as usize, mp, m);
                        let b = wigner_explicit(l, mp, m, x);
                        let scale = (1.0 + x * x).sqrt().powi(l).max(1.0);
                        assert!((a - b).norm() <= 1e-12 * scale, "x={x} l={l} m'={mp} m={m}: {a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn wigner_initial_terms() {
        let t = wigner_d_continued(1, 1.0);
        assert!((t.get(1, 0, 0).re - 2f64.sqrt()).abs() < 1e-15);
        assert!((t.get(1, 0, 1) - Complex64::new(0.0, FRAC_1_SQRT_2)).norm() < 1e-15);
        assert!((t.get(1, 1, 1).re - (1.0 + 2f64.sqrt()) / 2.0).abs() < 1e-15);
        let id = wigner_d_continued(6, 0.0);
        for l in 0..=6i32 {
            for mp in -l..=l {
                for m in -l..=l {
                    let e = if mp == m { 1.0 } else { 0.0 };
                    assert!((id.get(l as usize, mp, m) - e).norm() < 1e-15);
                }
            }
        }
    }
}
