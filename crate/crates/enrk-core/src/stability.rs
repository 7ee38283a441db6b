//! Stability polynomials of explicit tableaus, the per-eigenvalue
//! polynomial whose sign tracks |R(phi*lambda)| against the unit circle,
//! and the elementary-stability threshold derived from it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tableau::ButcherTableau;

/// Coefficients c_0..c_s of the stability function R(z) = sum c_j z^j,
/// with c_0 = 1 and c_j = b^T A^{j-1} 1.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityPolynomial {
    pub coeffs: Vec<f64>,
}

impl StabilityPolynomial {
    /// Evaluates R(z) by complex Horner.
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

/// Builds the stability polynomial of an explicit tableau.
pub fn stability_coeffs(t: &ButcherTableau) -> StabilityPolynomial {
    let s = t.s;
    let mut coeffs = Vec::with_capacity(s + 1);
    coeffs.push(1.0);
    // w starts as the all-ones vector; after j-1 multiplications by A it
    // holds A^{j-1} 1, so b.w is c_j.
    let mut w = vec![1.0; s];
    for _ in 1..=s {
        coeffs.push(t.b.iter().zip(&w).map(|(bi, wi)| bi * wi).sum());
        let next: Vec<f64> = t
            .a
            .iter()
            .map(|row| row.iter().zip(&w).map(|(aij, wj)| aij * wj).sum())
            .collect();
        w = next;
    }
    StabilityPolynomial { coeffs }
}

/// A Jacobian eigenvalue with its polar form cached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
    r: f64,
    theta: f64,
}

impl Eigenvalue {
    pub fn new(re: f64, im: f64) -> Self {
        Eigenvalue {
            re,
            im,
            r: re.hypot(im),
            theta: im.atan2(re),
        }
    }

    pub fn modulus(&self) -> f64 {
        self.r
    }

    pub fn cos_theta(&self) -> f64 {
        if self.r == 0.0 {
            1.0
        } else {
            self.re / self.r
        }
    }

    pub fn sin_theta(&self) -> f64 {
        if self.r == 0.0 {
            0.0
        } else {
            self.im / self.r
        }
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn conj(&self) -> Self {
        Eigenvalue::new(self.re, -self.im)
    }
}

/// Eigenvalues split by the role they play for elementary stability:
/// the full spectra of linearly stable equilibria, and the positive-real-part
/// eigenvalues of linearly unstable equilibria.
#[derive(Debug, Clone, Default)]
pub struct SpectrumClassification {
    pub stable_eigs: Vec<Eigenvalue>,
    pub unstable_eigs: Vec<Eigenvalue>,
}

impl SpectrumClassification {
    pub fn is_empty(&self) -> bool {
        self.stable_eigs.is_empty() && self.unstable_eigs.is_empty()
    }
}

/// Real polynomial in ascending coefficient order.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    pub coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn eval(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Magnitude scale of the evaluation at x: sum |c_i| x^i. |P(x)| far
    /// below this is numerically indistinguishable from a zero of P.
    pub fn scale_at(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for &c in self.coeffs.iter().rev() {
            acc = acc * x + c.abs();
        }
        acc
    }
}

/// Builds P(phi) = (|R(phi*lambda)|^2 - 1) / phi as a polynomial of degree
/// at most 2s - 1. The coefficient of phi^{m-1} is
/// r^m * sum_{j+k=m} c_j c_k cos((j-k)theta); the constant term is
/// 2 r cos(theta), so its sign is the sign of Re(lambda).
pub fn p_polynomial(sp: &StabilityPolynomial, lambda: &Eigenvalue) -> Result<Polynomial> {
    let r = lambda.modulus();
    if r == 0.0 {
        return Err(Error::Domain(
            "p_polynomial requires an eigenvalue with nonzero magnitude".into(),
        ));
    }
    let s = sp.degree();
    let theta = lambda.theta;
    let c = &sp.coeffs;
    let mut coeffs = Vec::with_capacity(2 * s);
    let mut r_pow = 1.0;
    for m in 1..=(2 * s) {
        r_pow *= r;
        let mut acc = 0.0;
        for j in m.saturating_sub(s)..=m.min(s) {
            let k = m - j;
            acc += c[j] * c[k] * ((j as f64 - k as f64) * theta).cos();
        }
        coeffs.push(acc * r_pow);
    }
    Ok(Polynomial { coeffs })
}

/// Locates the smallest root of `poly` in (0, scan_limit] by a sign-change
/// scan with step 100*tol refined by bisection. Scan nodes where |P| drops
/// below tol times the local evaluation scale open a tangency window: if a
/// sign change follows inside the window the root is bisected as usual,
/// otherwise the minimizing node is reported as a tangential root (a
/// touch of zero must not be certified as a sign-definite interval).
/// Returns None when the scan finds neither.
pub fn smallest_positive_root(poly: &Polynomial, scan_limit: f64, tol: f64) -> Option<f64> {
    assert!(scan_limit > 0.0 && tol > 0.0);
    let step = tol * 100.0;
    let n = (scan_limit / step).ceil() as usize;

    let mut prev_x = 0.0;
    let v0 = poly.eval(0.0);
    // A zero constant term is a root at the origin, which is outside the
    // half-open search interval; take the reference sign from the next node.
    let mut sign = if v0 == 0.0 { 0.0 } else { v0.signum() };
    let mut i = 1usize;
    while i <= n {
        let x = (i as f64) * step;
        let v = poly.eval(x);
        if sign == 0.0 {
            if v != 0.0 {
                sign = v.signum();
            }
            prev_x = x;
            i += 1;
            continue;
        }
        if v == 0.0 || v.signum() != sign {
            return Some(bisect(poly, prev_x, x, sign, tol));
        }
        if v.abs() < tol * poly.scale_at(x) {
            // walk the near-zero window: a crossing inside it is a regular
            // root; staying one-signed means P only touches zero.
            let mut best_x = x;
            let mut best_v = v.abs();
            let mut wx = x;
            let mut j = i + 1;
            while j <= n {
                let xj = (j as f64) * step;
                let vj = poly.eval(xj);
                if vj == 0.0 || vj.signum() != sign {
                    return Some(bisect(poly, wx, xj, sign, tol));
                }
                if vj.abs() >= tol * poly.scale_at(xj) {
                    break;
                }
                if vj.abs() < best_v {
                    best_v = vj.abs();
                    best_x = xj;
                }
                wx = xj;
                j += 1;
            }
            return Some(best_x);
        }
        prev_x = x;
        i += 1;
    }
    None
}

fn bisect(poly: &Polynomial, mut lo: f64, mut hi: f64, lo_sign: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let v = poly.eval(mid);
        if v == 0.0 {
            return mid;
        }
        if v.signum() == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Which side of the equilibrium dichotomy an eigenvalue came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdMode {
    /// lambda drawn from the spectrum of a stable equilibrium: the scheme
    /// must keep |R(phi*lambda)| < 1.
    Stable,
    /// lambda with positive real part at an unstable equilibrium: the scheme
    /// must keep |R(phi*lambda)| > 1.
    Unstable,
}

pub const ROOT_SCAN_LIMIT: f64 = 64.0;
pub const ROOT_TOL: f64 = 1e-6;

/// Supremum of the initial phi-interval on which P keeps the sign required
/// by `mode`, i.e. the first positive root of P, or +inf when none exists
/// below the scan limit.
pub fn stability_threshold_for_eigen(
    sp: &StabilityPolynomial,
    lambda: &Eigenvalue,
    mode: ThresholdMode,
) -> Result<f64> {
    if mode == ThresholdMode::Unstable && lambda.re <= 0.0 {
        return Err(Error::Precondition(format!(
            "unstable-mode threshold requires Re(lambda) > 0, got {}",
            lambda.re
        )));
    }
    let poly = p_polynomial(sp, lambda)?;
    Ok(smallest_positive_root(&poly, ROOT_SCAN_LIMIT, ROOT_TOL).unwrap_or(f64::INFINITY))
}

/// phi* = min over stable spectra of the stable threshold and over
/// positive-real-part unstable eigenvalues of the unstable threshold.
/// Infinite when a side is empty; errors when both are.
pub fn elementary_stability_threshold(
    t: &ButcherTableau,
    cls: &SpectrumClassification,
) -> Result<f64> {
    if cls.is_empty() {
        return Err(Error::Domain(
            "no equilibria supplied: both eigenvalue sets are empty".into(),
        ));
    }
    let sp = stability_coeffs(t);
    let mut phi_star = f64::INFINITY;
    for lambda in &cls.stable_eigs {
        phi_star = phi_star.min(stability_threshold_for_eigen(
            &sp,
            lambda,
            ThresholdMode::Stable,
        )?);
    }
    for lambda in &cls.unstable_eigs {
        phi_star = phi_star.min(stability_threshold_for_eigen(
            &sp,
            lambda,
            ThresholdMode::Unstable,
        )?);
    }
    Ok(phi_star)
}
