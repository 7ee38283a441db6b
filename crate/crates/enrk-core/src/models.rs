//! The bundled benchmark systems: a Beddington-DeAngelis predator-prey
//! model, an S/I/V vaccination model, and two patch-occupancy
//! (metapopulation) models, each carrying its Jacobian, equilibria with
//! stability flags, positivity constant, and linear invariants.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::positivity::PositivityClass;
use crate::stability::{Eigenvalue, SpectrumClassification};

pub type RhsFn = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;
pub type JacFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub state: Vec<f64>,
    pub stability: Stability,
}

#[derive(Clone)]
pub struct ModelDescriptor {
    pub name: String,
    pub dim: usize,
    pub params: Vec<(String, f64)>,
    f: RhsFn,
    jac: JacFn,
    pub equilibria: Vec<Equilibrium>,
    pub alpha: PositivityClass,
    /// Pairs (w, c) with w . y == c along every trajectory.
    pub linear_invariants: Vec<(Vec<f64>, f64)>,
    pub default_initial: Vec<f64>,
    /// Caveats accumulated during construction (omitted equilibria,
    /// numerically located equilibria, ...).
    pub notes: Vec<String>,
}

impl std::fmt::Debug for ModelDescriptor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelDescriptor")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("params", &self.params)
            .field("equilibria", &self.equilibria)
            .field("alpha", &self.alpha)
            .finish_non_exhaustive()
    }
}

impl ModelDescriptor {
    pub fn eval(&self, y: &[f64], dy: &mut [f64]) {
        (self.f)(y, dy)
    }

    pub fn rhs(&self) -> RhsFn {
        Arc::clone(&self.f)
    }

    pub fn jacobian(&self, y: &[f64]) -> Vec<Vec<f64>> {
        (self.jac)(y)
    }
}

pub const MODEL_NAMES: [&str; 4] = ["predator_prey", "vaccination", "keymer", "amarasekare"];

/// Builds a bundled model by name, applying `overrides` to its parameters.
pub fn model_by_name(name: &str, overrides: &[(String, f64)]) -> Result<ModelDescriptor> {
    let lookup = |defaults: &[(&str, f64)]| -> Result<Vec<f64>> {
        let mut values: Vec<f64> = defaults.iter().map(|&(_, v)| v).collect();
        for (key, value) in overrides {
            let idx = defaults
                .iter()
                .position(|&(name, _)| name == key)
                .ok_or_else(|| {
                    Error::Precondition(format!(
                        "unknown parameter `{key}`; expected one of: {}",
                        defaults
                            .iter()
                            .map(|&(n, _)| n)
                            .collect::<Vec<_>>()
                            .join(", ")
                    ))
                })?;
            values[idx] = *value;
        }
        Ok(values)
    };
    match name {
        "predator_prey" => {
            let v = lookup(&[("A", 2.0), ("D", 1.0), ("E", 10.0)])?;
            Ok(predator_prey(v[0], v[1], v[2]))
        }
        "vaccination" => {
            if !overrides.is_empty() {
                return Err(Error::Precondition(
                    "the vaccination model has fixed constants and accepts no overrides".into(),
                ));
            }
            Ok(vaccination())
        }
        "keymer" => {
            let v = lookup(&[("lambda", 1.0), ("e", 0.1), ("delta", 0.2), ("beta", 1.0)])?;
            Ok(keymer(v[0], v[1], v[2], v[3]))
        }
        "amarasekare" => {
            let v = lookup(&[
                ("beta_I", 0.8),
                ("beta_L", 0.6),
                ("e_I", 0.2),
                ("e_L", 0.1),
                ("f", 0.3),
                ("g", 0.2),
                ("P", 1.0),
            ])?;
            Ok(amarasekare(AmarasekareParams {
                beta_i: v[0],
                beta_l: v[1],
                e_i: v[2],
                e_l: v[3],
                f: v[4],
                g: v[5],
                p_total: v[6],
            }))
        }
        _ => Err(Error::UnknownModel {
            name: name.to_string(),
            valid: MODEL_NAMES.join(", "),
        }),
    }
}

/// dx/dt = x - A x y / (1+x+y), dy/dt = E x y / (1+x+y) - D y.
pub fn predator_prey(a: f64, d: f64, e: f64) -> ModelDescriptor {
    let f: RhsFn = Arc::new(move |y, dy| {
        let (x, yy) = (y[0], y[1]);
        let den = 1.0 + x + yy;
        dy[0] = x - a * x * yy / den;
        dy[1] = e * x * yy / den - d * yy;
    });
    let jac: JacFn = Arc::new(move |y| {
        let (x, yy) = (y[0], y[1]);
        let den = 1.0 + x + yy;
        let den2 = den * den;
        vec![
            vec![
                1.0 - a * yy * (1.0 + yy) / den2,
                -a * x * (1.0 + x) / den2,
            ],
            vec![
                e * yy * (1.0 + yy) / den2,
                e * x * (1.0 + x) / den2 - d,
            ],
        ]
    });

    let mut states = vec![vec![0.0, 0.0]];
    let mut notes = Vec::new();
    let interior_scale = a * e - e - a * d;
    if interior_scale > 0.0 {
        states.push(vec![a * d / interior_scale, e / interior_scale]);
    } else {
        notes.push(
            "interior equilibrium absent for these parameters (A*E - E - A*D <= 0)".to_string(),
        );
    }
    let equilibria = flag_equilibria(&jac, states);

    ModelDescriptor {
        name: "predator_prey".into(),
        dim: 2,
        params: vec![("A".into(), a), ("D".into(), d), ("E".into(), e)],
        f,
        jac,
        equilibria,
        alpha: PositivityClass::new((a - 1.0).max(d)),
        linear_invariants: vec![],
        default_initial: vec![1.0, 1.6],
        notes,
    }
}

/// S/I/V compartments with vaccination; total population is conserved.
pub fn vaccination() -> ModelDescriptor {
    const BETA: f64 = 0.7;
    const C: f64 = 0.1;
    const MU: f64 = 0.8;
    const DELTA: f64 = 0.8;
    const PHI: f64 = 0.8;
    const N: f64 = 100.0;

    let f: RhsFn = Arc::new(move |y, dy| {
        let (s, i, v) = (y[0], y[1], y[2]);
        dy[0] = MU * N - BETA * s * i / N - (MU + PHI) * s + C * i + DELTA * v;
        dy[1] = BETA * s * i / N - (MU + C) * i;
        dy[2] = PHI * s - (MU + DELTA) * v;
    });
    let jac: JacFn = Arc::new(move |y| {
        let (s, i) = (y[0], y[1]);
        vec![
            vec![-BETA * i / N - (MU + PHI), -BETA * s / N + C, DELTA],
            vec![BETA * i / N, BETA * s / N - (MU + C), 0.0],
            vec![PHI, 0.0, -(MU + DELTA)],
        ]
    });

    let disease_free = vec![
        (MU + DELTA) * N / (MU + DELTA + PHI),
        0.0,
        PHI * N / (MU + DELTA + PHI),
    ];
    let equilibria = flag_equilibria(&jac, vec![disease_free]);

    ModelDescriptor {
        name: "vaccination".into(),
        dim: 3,
        params: vec![
            ("beta".into(), BETA),
            ("c".into(), C),
            ("mu".into(), MU),
            ("delta".into(), DELTA),
            ("phi".into(), PHI),
            ("N".into(), N),
        ],
        f,
        jac,
        equilibria,
        // The source analysis carries alpha = 2.5 for these constants.
        alpha: PositivityClass::new(2.5),
        linear_invariants: vec![(vec![1.0, 1.0, 1.0], N)],
        default_initial: vec![30.0, 0.2, 69.8],
        notes: Vec::new(),
    }
}

/// Three-patch occupancy model: uninhabitable, habitable-empty,
/// habitable-occupied proportions.
pub fn keymer(lambda: f64, e: f64, delta: f64, beta: f64) -> ModelDescriptor {
    let f: RhsFn = Arc::new(move |p, dp| {
        let (p0, p1, p2) = (p[0], p[1], p[2]);
        dp[0] = e * (p1 + p2) - lambda * p0;
        dp[1] = lambda * p0 - beta * p1 * p2 + delta * p2 - e * p1;
        dp[2] = beta * p1 * p2 - (delta + e) * p2;
    });
    let jac: JacFn = Arc::new(move |p| {
        let (p1, p2) = (p[1], p[2]);
        vec![
            vec![-lambda, e, e],
            vec![lambda, -beta * p2 - e, -beta * p1 + delta],
            vec![0.0, beta * p2, beta * p1 - (delta + e)],
        ]
    });

    let invariants = vec![(vec![1.0, 1.0, 1.0], 1.0)];
    let mut notes = vec![
        "equilibria located numerically; threshold results are conditional on the found equilibria"
            .to_string(),
    ];
    let seeds: Vec<Vec<f64>> = vec![vec![0.5, 0.5, 0.0], vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]];
    let states = locate_equilibria(&f, &jac, &invariants, seeds, &mut notes);
    let equilibria = flag_equilibria(&jac, states);

    ModelDescriptor {
        name: "keymer".into(),
        dim: 3,
        params: vec![
            ("lambda".into(), lambda),
            ("e".into(), e),
            ("delta".into(), delta),
            ("beta".into(), beta),
        ],
        f,
        jac,
        equilibria,
        alpha: PositivityClass::new(lambda.max(beta + e).max(delta + e)),
        linear_invariants: invariants,
        default_initial: vec![0.4, 0.4, 0.2],
        notes,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AmarasekareParams {
    pub beta_i: f64,
    pub beta_l: f64,
    pub e_i: f64,
    pub e_l: f64,
    pub f: f64,
    pub g: f64,
    pub p_total: f64,
}

impl Default for AmarasekareParams {
    fn default() -> Self {
        AmarasekareParams {
            beta_i: 0.8,
            beta_l: 0.6,
            e_i: 0.2,
            e_l: 0.1,
            f: 0.3,
            g: 0.2,
            p_total: 1.0,
        }
    }
}

/// Four-patch occupancy model (infected/susceptible/latent/recovered
/// patches); the total patch count is conserved.
pub fn amarasekare(params: AmarasekareParams) -> ModelDescriptor {
    let AmarasekareParams {
        beta_i,
        beta_l,
        e_i,
        e_l,
        f: fr,
        g,
        p_total,
    } = params;

    let f: RhsFn = Arc::new(move |y, dy| {
        let (i, s, l, r) = (y[0], y[1], y[2], y[3]);
        dy[0] = beta_i * s * i - e_i * i + fr * l - g * i;
        dy[1] = e_i * i - beta_i * s * i + fr * r - g * s;
        dy[2] = g * i - fr * l - e_l * l + beta_l * r * i;
        dy[3] = g * s - fr * r + e_l * l - beta_l * r * i;
    });
    let jac: JacFn = Arc::new(move |y| {
        let (i, s, r) = (y[0], y[1], y[3]);
        vec![
            vec![beta_i * s - e_i - g, beta_i * i, fr, 0.0],
            vec![e_i - beta_i * s, -beta_i * i - g, 0.0, fr],
            vec![g + beta_l * r, 0.0, -fr - e_l, beta_l * i],
            vec![-beta_l * r, g, e_l, -fr - beta_l * i],
        ]
    });

    let invariants = vec![(vec![1.0, 1.0, 1.0, 1.0], p_total)];
    let mut notes = vec![
        "equilibria located numerically; threshold results are conditional on the found equilibria"
            .to_string(),
    ];
    let q = 0.25 * p_total;
    let seeds = vec![
        vec![0.0, 0.5 * p_total, 0.0, 0.5 * p_total],
        vec![q, q, q, q],
    ];
    let states = locate_equilibria(&f, &jac, &invariants, seeds, &mut notes);
    let equilibria = flag_equilibria(&jac, states);

    ModelDescriptor {
        name: "amarasekare".into(),
        dim: 4,
        params: vec![
            ("beta_I".into(), beta_i),
            ("beta_L".into(), beta_l),
            ("e_I".into(), e_i),
            ("e_L".into(), e_l),
            ("f".into(), fr),
            ("g".into(), g),
            ("P".into(), p_total),
        ],
        f,
        jac,
        equilibria,
        alpha: PositivityClass::new((e_i + g).max(beta_i + g).max(fr + e_l).max(fr + beta_l)),
        linear_invariants: invariants,
        default_initial: vec![0.1 * p_total, 0.5 * p_total, 0.1 * p_total, 0.3 * p_total],
        notes,
    }
}

// ---------------------------------------------------------------------------
// Equilibrium location
// ---------------------------------------------------------------------------

/// Inclusion gate for located equilibria.
const EQ_RESIDUAL_TOL: f64 = 1e-10;
/// Newton keeps polishing down to this target so equilibria behave as
/// fixed points of the stepper to machine precision.
const EQ_TARGET_TOL: f64 = 1e-15;
const EQ_DEDUP_TOL: f64 = 1e-8;

/// Damped Newton on the system with redundant rows replaced by the linear
/// invariants (w . f == 0 identically, so one f-row per invariant carries
/// no independent information and the replacement keeps iterates on the
/// correct level set).
fn locate_equilibria(
    f: &RhsFn,
    jac: &JacFn,
    invariants: &[(Vec<f64>, f64)],
    seeds: Vec<Vec<f64>>,
    notes: &mut Vec<String>,
) -> Vec<Vec<f64>> {
    let mut found: Vec<Vec<f64>> = Vec::new();
    for seed in seeds {
        match newton_constrained(f, jac, invariants, &seed) {
            Some(state) => {
                if !found
                    .iter()
                    .any(|other| max_abs_diff(other, &state) < EQ_DEDUP_TOL)
                {
                    found.push(state);
                }
            }
            None => notes.push(format!(
                "equilibrium search from seed {seed:?} did not converge; omitted"
            )),
        }
    }
    found
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn newton_constrained(
    f: &RhsFn,
    jac: &JacFn,
    invariants: &[(Vec<f64>, f64)],
    seed: &[f64],
) -> Option<Vec<f64>> {
    let n = seed.len();
    let n_inv = invariants.len();
    let residual = |y: &[f64]| -> Vec<f64> {
        let mut fy = vec![0.0; n];
        f(y, &mut fy);
        for (l, (w, c)) in invariants.iter().enumerate() {
            fy[n - n_inv + l] = dot(w, y) - c;
        }
        fy
    };
    let norm_inf = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let fnorm = |y: &[f64]| -> f64 {
        let mut fy = vec![0.0; n];
        f(y, &mut fy);
        norm_inf(&fy)
    };

    let mut y = seed.to_vec();
    for _ in 0..200 {
        let g = residual(&y);
        let gnorm = norm_inf(&g);
        if fnorm(&y) < EQ_TARGET_TOL && gnorm < EQ_TARGET_TOL {
            return Some(y);
        }
        let mut j = jac(&y);
        for (l, (w, _)) in invariants.iter().enumerate() {
            j[n - n_inv + l] = w.clone();
        }
        let delta = gauss_solve(j, g.clone())?;
        let mut t = 1.0;
        let mut improved = false;
        while t >= 1e-8 {
            let candidate: Vec<f64> = y.iter().zip(&delta).map(|(yi, di)| yi - t * di).collect();
            if norm_inf(&residual(&candidate)) < gnorm {
                y = candidate;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            // stalled at the rounding floor: accept when well converged
            break;
        }
    }
    let final_norm = fnorm(&y).max(norm_inf(&residual(&y)));
    (final_norm <= EQ_RESIDUAL_TOL).then_some(y)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting; fine at these dimensions.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot][col].abs() < 1e-14 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let pivot_row = a[col].clone();
        for row in (col + 1)..n {
            let factor = a[row][col] / pivot_row[col];
            if factor != 0.0 {
                for (dst, src) in a[row][col..].iter_mut().zip(&pivot_row[col..]) {
                    *dst -= factor * src;
                }
                b[row] -= factor * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in (row + 1)..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

// ---------------------------------------------------------------------------
// Eigenvalues of small Jacobians
// ---------------------------------------------------------------------------

/// Real parts at or below this scale-relative size are treated as zero
/// when flagging stability. Conservation laws force one exact zero
/// eigenvalue per linear invariant (w^T J == 0 identically), and those
/// modes carry no stability information.
const ZERO_RE_TOL: f64 = 1e-9;

/// Eigenvalues of the model Jacobian at `y` for n <= 4, via the
/// characteristic polynomial (Faddeev-LeVerrier) and closed-form root
/// extraction polished by complex Newton. Conjugate pairs come out
/// adjacent.
pub fn jacobian_eigenvalues(m: &ModelDescriptor, y: &[f64]) -> Result<Vec<Eigenvalue>> {
    let j = m.jacobian(y);
    eigenvalues_dense(&j)
}

pub fn eigenvalues_dense(j: &[Vec<f64>]) -> Result<Vec<Eigenvalue>> {
    let n = j.len();
    if n == 0 || n > 4 {
        return Err(Error::Domain(format!(
            "eigenvalue extraction supports dimensions 1..=4, got {n}"
        )));
    }
    let coeffs = charpoly(j);
    let mut roots = poly_roots(&coeffs);
    for root in &mut roots {
        *root = polish_root(&coeffs, *root);
    }
    Ok(symmetrize(roots))
}

/// Monic characteristic polynomial coefficients [a_0, ..., a_{n-1}, 1]
/// (ascending) via the Faddeev-LeVerrier recurrence.
#[allow(clippy::needless_range_loop)]
fn charpoly(j: &[Vec<f64>]) -> Vec<f64> {
    let n = j.len();
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut m = j.to_vec();
    for k in 1..=n {
        let trace: f64 = (0..n).map(|i| m[i][i]).sum();
        let a_k = -trace / k as f64;
        coeffs[n - k] = a_k;
        if k == n {
            break;
        }
        // M <- J (M + a_k I)
        let mut shifted = m.clone();
        for i in 0..n {
            shifted[i][i] += a_k;
        }
        let mut next = vec![vec![0.0; n]; n];
        for r in 0..n {
            for c in 0..n {
                let mut acc = 0.0;
                for t in 0..n {
                    acc += j[r][t] * shifted[t][c];
                }
                next[r][c] = acc;
            }
        }
        m = next;
    }
    coeffs
}

fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    match coeffs.len() - 1 {
        1 => vec![Complex64::new(-coeffs[0], 0.0)],
        2 => roots_quadratic(coeffs[1], coeffs[0]),
        3 => roots_cubic(coeffs[2], coeffs[1], coeffs[0]),
        4 => roots_quartic(coeffs[3], coeffs[2], coeffs[1], coeffs[0]),
        _ => unreachable!("dimension checked by caller"),
    }
}

/// x^2 + bx + c.
fn roots_quadratic(b: f64, c: f64) -> Vec<Complex64> {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // avoid cancellation: compute the larger-magnitude root first
        let q = -0.5 * (b + b.signum() * sq);
        let (r1, r2) = if b == 0.0 {
            (sq / 2.0, -sq / 2.0)
        } else {
            (q, c / q)
        };
        vec![Complex64::new(r1, 0.0), Complex64::new(r2, 0.0)]
    } else {
        let im = (-disc).sqrt() / 2.0;
        let re = -b / 2.0;
        vec![Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

/// x^3 + ax^2 + bx + c.
fn roots_cubic(a: f64, b: f64, c: f64) -> Vec<Complex64> {
    // depress: x = t - a/3
    let shift = a / 3.0;
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let disc = -4.0 * p * p * p - 27.0 * q * q;
    if disc >= 0.0 {
        // three real roots (trigonometric form)
        if p.abs() < 1e-300 {
            let t = -q.cbrt();
            return vec![Complex64::new(t - shift, 0.0); 3];
        }
        let rho = 2.0 * (-p / 3.0).sqrt();
        let arg = (3.0 * q / (p * rho)).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|k| {
                let t = rho * (theta - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos();
                Complex64::new(t - shift, 0.0)
            })
            .collect()
    } else {
        // one real root (Cardano), complex pair by quadratic deflation
        let half_q = q / 2.0;
        let inner = (half_q * half_q + p * p * p / 27.0).sqrt();
        let u = (-half_q + inner).cbrt();
        let v = (-half_q - inner).cbrt();
        let t_real = u + v;
        let x_real = t_real - shift;
        // deflate: x^3 + ax^2 + bx + c = (x - x_real)(x^2 + ex + f)
        let e = a + x_real;
        let fq = b + x_real * e;
        let mut roots = vec![Complex64::new(x_real, 0.0)];
        roots.extend(roots_quadratic(e, fq));
        roots
    }
}

/// x^4 + ax^3 + bx^2 + cx + d, by splitting the depressed quartic into
/// two quadratics through the resolvent cubic.
fn roots_quartic(a: f64, b: f64, c: f64, d: f64) -> Vec<Complex64> {
    // depress: x = t - a/4
    let shift = a / 4.0;
    let p = b - 3.0 * a * a / 8.0;
    let q = c - a * b / 2.0 + a * a * a / 8.0;
    let r = d - a * c / 4.0 + a * a * b / 16.0 - 3.0 * a * a * a * a / 256.0;

    let to_roots = |t_roots: Vec<Complex64>| -> Vec<Complex64> {
        t_roots
            .into_iter()
            .map(|t| t - Complex64::new(shift, 0.0))
            .collect()
    };

    if q.abs() < 1e-12 * (1.0 + p.abs() + r.abs()) {
        // biquadratic: t^4 + p t^2 + r
        let mut out = Vec::with_capacity(4);
        for w in roots_quadratic(p, r) {
            let sq = w.sqrt();
            out.push(sq);
            out.push(-sq);
        }
        return to_roots(out);
    }

    // factor t^4 + pt^2 + qt + r = (t^2 + alpha t + beta)(t^2 - alpha t + gamma):
    // u = alpha^2 satisfies u^3 + 2p u^2 + (p^2 - 4r) u - q^2 = 0, u > 0 exists.
    let u_roots = roots_cubic(2.0 * p, p * p - 4.0 * r, -q * q);
    let mut u_best = 0.0f64;
    for root in &u_roots {
        if root.im.abs() < 1e-9 * (1.0 + root.re.abs()) && root.re > u_best {
            u_best = root.re;
        }
    }
    let alpha = u_best.max(0.0).sqrt();
    let (beta, gamma) = if alpha > 0.0 {
        (
            0.5 * (p + alpha * alpha - q / alpha),
            0.5 * (p + alpha * alpha + q / alpha),
        )
    } else {
        // should have been caught by the biquadratic branch
        (p / 2.0, p / 2.0)
    };
    let mut out = roots_quadratic(alpha, beta);
    out.extend(roots_quadratic(-alpha, gamma));
    to_roots(out)
}

fn poly_eval_complex(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

fn poly_deriv_eval_complex(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &c) in coeffs.iter().enumerate().skip(1).rev() {
        acc = acc * z + c * k as f64;
    }
    acc
}

fn polish_root(coeffs: &[f64], mut z: Complex64) -> Complex64 {
    for _ in 0..8 {
        let value = poly_eval_complex(coeffs, z);
        let deriv = poly_deriv_eval_complex(coeffs, z);
        if deriv.norm() < 1e-300 {
            break;
        }
        let step = value / deriv;
        z -= step;
        if step.norm() < 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

/// Forces exact conjugate symmetry and adjacency: real roots first (sorted),
/// then conjugate pairs (positive imaginary part first).
fn symmetrize(roots: Vec<Complex64>) -> Vec<Eigenvalue> {
    let scale = roots.iter().fold(1.0f64, |m, z| m.max(z.norm()));
    let mut real: Vec<f64> = Vec::new();
    let mut upper: Vec<Complex64> = Vec::new();
    for z in roots {
        if z.im.abs() <= 1e-9 * scale {
            real.push(z.re);
        } else if z.im > 0.0 {
            upper.push(z);
        }
    }
    real.sort_by(|a, b| a.partial_cmp(b).unwrap());
    upper.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
    let mut out: Vec<Eigenvalue> = real.into_iter().map(|re| Eigenvalue::new(re, 0.0)).collect();
    for z in upper {
        out.push(Eigenvalue::new(z.re, z.im));
        out.push(Eigenvalue::new(z.re, -z.im));
    }
    out
}

fn flag_equilibria(jac: &JacFn, states: Vec<Vec<f64>>) -> Vec<Equilibrium> {
    states
        .into_iter()
        .map(|state| {
            let eigs = eigenvalues_dense(&jac(&state)).expect("bundled models have n <= 4");
            let stability = classify_spectrum(&eigs);
            Equilibrium { state, stability }
        })
        .collect()
}

/// Stable iff every eigenvalue that is not a conservation-law zero mode has
/// negative real part.
fn classify_spectrum(eigs: &[Eigenvalue]) -> Stability {
    let scale = eigs.iter().fold(1.0f64, |m, e| m.max(e.modulus()));
    let significant: Vec<&Eigenvalue> = eigs
        .iter()
        .filter(|e| e.re.abs() > ZERO_RE_TOL * scale)
        .collect();
    if !significant.is_empty() && significant.iter().all(|e| e.re < 0.0) {
        Stability::Stable
    } else {
        Stability::Unstable
    }
}

/// Splits the spectra of all equilibria into the two sets the stability
/// threshold is minimized over. Conjugate pairs are deduplicated (the
/// thresholds coincide) and conservation-law zero modes are dropped.
pub fn spectrum_classification(m: &ModelDescriptor) -> Result<SpectrumClassification> {
    let mut cls = SpectrumClassification::default();
    for eq in &m.equilibria {
        let eigs = jacobian_eigenvalues(m, &eq.state)?;
        let scale = eigs.iter().fold(1.0f64, |acc, e| acc.max(e.modulus()));
        for e in eigs {
            if e.im < 0.0 {
                continue; // conjugate twin already accounted for
            }
            if e.re.abs() <= ZERO_RE_TOL * scale {
                continue;
            }
            match eq.stability {
                Stability::Stable => cls.stable_eigs.push(e),
                Stability::Unstable => {
                    if e.re > 0.0 {
                        cls.unstable_eigs.push(e);
                    }
                }
            }
        }
    }
    Ok(cls)
}


#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn eig_set(m: &ModelDescriptor, state: &[f64]) -> Vec<(f64, f64)> {
        jacobian_eigenvalues(m, state)
            .unwrap()
            .iter()
            .map(|e| (e.re, e.im))
            .collect()
    }

    #[test]
    fn predator_prey_equilibria() {
        let m = predator_prey(2.0, 1.0, 10.0);
        assert_eq!(m.equilibria.len(), 2);
        let origin = &m.equilibria[0];
        assert_eq!(origin.state, vec![0.0, 0.0]);
        assert_eq!(origin.stability, Stability::Unstable);
        let interior = &m.equilibria[1];
        assert_relative_eq!(interior.state[0], 0.25, epsilon = 1e-14);
        assert_relative_eq!(interior.state[1], 1.25, epsilon = 1e-14);
        assert_eq!(interior.stability, Stability::Stable);
    }

    #[test]
    fn predator_prey_alpha() {
        assert_relative_eq!(predator_prey(2.0, 1.0, 10.0).alpha.alpha, 1.0);
    }

    #[test]
    fn predator_prey_rhs_vanishes_at_equilibria() {
        let m = predator_prey(2.0, 1.0, 10.0);
        for eq in &m.equilibria {
            let mut dy = vec![0.0; 2];
            m.eval(&eq.state, &mut dy);
            assert!(dy.iter().all(|v| v.abs() <= 1e-10), "{dy:?}");
        }
    }

    #[test]
    fn predator_prey_interior_absent_when_scale_nonpositive() {
        let m = predator_prey(2.0, 10.0, 10.0); // AE - E - AD = -10
        assert_eq!(m.equilibria.len(), 1);
        assert!(!m.notes.is_empty());
    }

    #[test]
    fn predator_prey_spectra() {
        let m = predator_prey(2.0, 1.0, 10.0);
        let at_origin = eig_set(&m, &[0.0, 0.0]);
        assert_relative_eq!(at_origin[0].0, -1.0, epsilon = 1e-10);
        assert_relative_eq!(at_origin[1].0, 1.0, epsilon = 1e-10);
        let interior = eig_set(&m, &[0.25, 1.25]);
        assert_relative_eq!(interior[0].0, -0.2, epsilon = 1e-10);
        assert_relative_eq!(interior[0].1.abs(), 0.6, epsilon = 1e-10);
    }

    #[test]
    fn vaccination_equilibrium_and_spectrum() {
        let m = vaccination();
        assert_eq!(m.equilibria.len(), 1);
        let eq = &m.equilibria[0];
        assert_relative_eq!(eq.state[0], 200.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(eq.state[1], 0.0);
        assert_relative_eq!(eq.state[2], 100.0 / 3.0, epsilon = 1e-12);
        assert_eq!(eq.stability, Stability::Stable);
        assert_relative_eq!(m.alpha.alpha, 2.5);

        let mut eigs: Vec<f64> = eig_set(&m, &eq.state).iter().map(|e| e.0).collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_relative_eq!(eigs[0], -2.4, epsilon = 1e-9);
        assert_relative_eq!(eigs[1], -0.8, epsilon = 1e-9);
        assert_relative_eq!(eigs[2], -13.0 / 30.0, epsilon = 1e-9);
    }

    #[test]
    fn keymer_invariant_and_alpha() {
        let m = keymer(1.0, 0.1, 0.2, 1.0);
        assert_relative_eq!(m.alpha.alpha, 1.1, epsilon = 1e-15);
        // w . f == 0 at arbitrary states
        let mut dy = vec![0.0; 3];
        for p in [[0.2, 0.3, 0.5], [1.0, 2.0, 3.0], [0.0, 0.0, 4.0]] {
            m.eval(&p, &mut dy);
            assert!(dy.iter().sum::<f64>().abs() <= 1e-12);
        }
    }

    #[test]
    fn keymer_finds_both_equilibria() {
        let m = keymer(1.0, 0.1, 0.2, 1.0);
        assert_eq!(m.equilibria.len(), 2, "{:?}", m.equilibria);
        for eq in &m.equilibria {
            let sum: f64 = eq.state.iter().sum();
            assert_relative_eq!(sum, 1.0, epsilon = 1e-9);
            let mut dy = vec![0.0; 3];
            m.eval(&eq.state, &mut dy);
            assert!(dy.iter().all(|v| v.abs() <= 1e-10));
        }
        // interior state (p2 > 0) is the attractor for these rates
        let interior = m
            .equilibria
            .iter()
            .find(|eq| eq.state[2] > 0.1)
            .expect("interior equilibrium");
        assert_eq!(interior.stability, Stability::Stable);
        assert_relative_eq!(interior.state[1], 0.3, epsilon = 1e-9);
        // patch-extinction state is unstable here
        let extinction = m
            .equilibria
            .iter()
            .find(|eq| eq.state[2] < 0.1)
            .expect("extinction equilibrium");
        assert_eq!(extinction.stability, Stability::Unstable);
    }

    #[test]
    fn keymer_pure_uninhabitable_state_is_not_equilibrium() {
        // p = (1,0,0) has dp0/dt = -lambda
        let m = keymer(1.0, 0.1, 0.2, 1.0);
        let mut dy = vec![0.0; 3];
        m.eval(&[1.0, 0.0, 0.0], &mut dy);
        assert_relative_eq!(dy[0], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn amarasekare_invariant_and_alpha() {
        let m = amarasekare(AmarasekareParams::default());
        assert_relative_eq!(m.alpha.alpha, 1.0, epsilon = 1e-15);
        let mut dy = vec![0.0; 4];
        for y in [[0.1, 0.2, 0.3, 0.4], [1.0, 1.0, 1.0, 1.0], [0.5, 0.0, 0.2, 0.0]] {
            m.eval(&y, &mut dy);
            assert!(dy.iter().sum::<f64>().abs() <= 1e-12);
        }
    }

    #[test]
    fn amarasekare_equilibria_on_simplex() {
        let m = amarasekare(AmarasekareParams::default());
        assert!(!m.equilibria.is_empty());
        for eq in &m.equilibria {
            let sum: f64 = eq.state.iter().sum();
            assert_relative_eq!(sum, 1.0, epsilon = 1e-9);
            let mut dy = vec![0.0; 4];
            m.eval(&eq.state, &mut dy);
            assert!(dy.iter().all(|v| v.abs() <= 1e-10));
        }
    }

    #[test]
    fn jacobians_match_finite_differences() {
        let models = [
            predator_prey(2.0, 1.0, 10.0),
            vaccination(),
            keymer(1.0, 0.1, 0.2, 1.0),
            amarasekare(AmarasekareParams::default()),
        ];
        let mut seed = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for m in &models {
            let n = m.dim;
            let scale = if m.name == "vaccination" { 100.0 } else { 2.0 };
            for _ in 0..100 {
                let y: Vec<f64> = (0..n).map(|_| next() * scale).collect();
                let jac = m.jacobian(&y);
                let step = 1e-6 * scale;
                for col in 0..n {
                    let mut yp = y.clone();
                    let mut ym = y.clone();
                    yp[col] += step;
                    ym[col] -= step;
                    let mut fp = vec![0.0; n];
                    let mut fm = vec![0.0; n];
                    m.eval(&yp, &mut fp);
                    m.eval(&ym, &mut fm);
                    for row in 0..n {
                        let fd = (fp[row] - fm[row]) / (2.0 * step);
                        let denom = jac[row][col].abs().max(1.0);
                        assert!(
                            (jac[row][col] - fd).abs() <= 1e-5 * denom,
                            "{}: J[{row}][{col}] = {} vs fd {}",
                            m.name,
                            jac[row][col],
                            fd
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn eigenvalues_satisfy_characteristic_polynomial() {
        let models = [
            predator_prey(2.0, 1.0, 10.0),
            vaccination(),
            keymer(1.0, 0.1, 0.2, 1.0),
            amarasekare(AmarasekareParams::default()),
        ];
        for m in &models {
            for eq in &m.equilibria {
                let j = m.jacobian(&eq.state);
                let coeffs = charpoly(&j);
                let norm: f64 = coeffs.iter().map(|c| c.abs()).sum();
                for e in jacobian_eigenvalues(m, &eq.state).unwrap() {
                    let v = poly_eval_complex(&coeffs, e.as_complex());
                    assert!(
                        v.norm() <= 1e-8 * norm,
                        "{}: residual {} at {:?}",
                        m.name,
                        v.norm(),
                        e
                    );
                }
            }
        }
    }

    #[test]
    fn cubic_companion_with_complex_pair() {
        // companion of (x+1)(x^2+2x+5): eigenvalues -1, -1 +- 2i
        let j = vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![-5.0, -7.0, -3.0],
        ];
        let eigs = eigenvalues_dense(&j).unwrap();
        assert_eq!(eigs.len(), 3);
        assert_relative_eq!(eigs[0].re, -1.0, epsilon = 1e-10);
        assert_relative_eq!(eigs[0].im, 0.0);
        assert_relative_eq!(eigs[1].re, -1.0, epsilon = 1e-10);
        assert_relative_eq!(eigs[1].im, 2.0, epsilon = 1e-10);
        assert_relative_eq!(eigs[2].im, -2.0, epsilon = 1e-10);
    }

    #[test]
    fn quartic_with_two_complex_pairs() {
        // (x^2 + 1)(x^2 + 2x + 5): roots +-i, -1 +- 2i
        let coeffs = vec![5.0, 2.0, 6.0, 2.0, 1.0];
        let roots = poly_roots(&coeffs);
        let mut polished: Vec<Complex64> = roots
            .into_iter()
            .map(|z| polish_root(&coeffs, z))
            .collect();
        polished.sort_by(|a, b| {
            (a.re, a.im)
                .partial_cmp(&(b.re, b.im))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let expect = [
            Complex64::new(-1.0, -2.0),
            Complex64::new(-1.0, 2.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
        ];
        for (got, want) in polished.iter().zip(expect) {
            assert!((got - want).norm() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn spectrum_classification_predator_prey() {
        let m = predator_prey(2.0, 1.0, 10.0);
        let cls = spectrum_classification(&m).unwrap();
        // conjugate pair deduplicated: one stable entry
        assert_eq!(cls.stable_eigs.len(), 1);
        assert_relative_eq!(cls.stable_eigs[0].re, -0.2, epsilon = 1e-9);
        assert_relative_eq!(cls.stable_eigs[0].im, 0.6, epsilon = 1e-9);
        assert_eq!(cls.unstable_eigs.len(), 1);
        assert_relative_eq!(cls.unstable_eigs[0].re, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn spectrum_classification_drops_zero_modes() {
        let m = keymer(1.0, 0.1, 0.2, 1.0);
        let cls = spectrum_classification(&m).unwrap();
        for e in cls.stable_eigs.iter().chain(&cls.unstable_eigs) {
            assert!(e.re.abs() > 1e-10);
        }
        assert!(!cls.stable_eigs.is_empty());
        assert!(!cls.unstable_eigs.is_empty());
    }

    #[test]
    fn model_by_name_with_overrides() {
        let m = model_by_name("predator_prey", &[("A".into(), 3.0)]).unwrap();
        assert_eq!(m.params[0], ("A".to_string(), 3.0));
        assert!(model_by_name("predator_prey", &[("Z".into(), 1.0)]).is_err());
        assert!(model_by_name("nope", &[]).is_err());
        assert!(model_by_name("vaccination", &[("beta".into(), 0.5)]).is_err());
    }

    #[test]
    fn p_alpha_membership_in_invariant_regions() {
        let mut seed = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        // predator-prey on [0,10]^2
        let m = predator_prey(2.0, 1.0, 10.0);
        let alpha = m.alpha.alpha;
        let mut dy = vec![0.0; 2];
        for _ in 0..10_000 {
            let y = [next() * 10.0, next() * 10.0];
            m.eval(&y, &mut dy);
            for i in 0..2 {
                assert!(dy[i] + alpha * y[i] >= -1e-12, "{y:?} -> {dy:?}");
            }
        }
        // vaccination on the simplex S + I + V = 100
        let m = vaccination();
        let alpha = m.alpha.alpha;
        let mut dy = vec![0.0; 3];
        for _ in 0..10_000 {
            let mut cuts = [next(), next()];
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let y = [
                100.0 * cuts[0],
                100.0 * (cuts[1] - cuts[0]),
                100.0 * (1.0 - cuts[1]),
            ];
            m.eval(&y, &mut dy);
            for i in 0..3 {
                assert!(dy[i] + alpha * y[i] >= -1e-9, "{y:?} -> {dy:?}");
            }
        }
        // metapopulation models on the unit simplex
        for m in [
            keymer(1.0, 0.1, 0.2, 1.0),
            amarasekare(AmarasekareParams::default()),
        ] {
            let n = m.dim;
            let alpha = m.alpha.alpha;
            let mut dy = vec![0.0; n];
            for _ in 0..10_000 {
                let mut cuts: Vec<f64> = (0..n - 1).map(|_| next()).collect();
                cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
                cuts.insert(0, 0.0);
                cuts.push(1.0);
                let y: Vec<f64> = cuts.windows(2).map(|w| w[1] - w[0]).collect();
                m.eval(&y, &mut dy);
                for i in 0..n {
                    assert!(dy[i] + alpha * y[i] >= -1e-12, "{}: {y:?}", m.name);
                }
            }
        }
    }
}
