//! Explicit Butcher tableaus, classical order verification, and the
//! Kraaijevanger radius of absolute monotonicity R(A,b).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient scheme (A, b) of an explicit Runge-Kutta method.
///
/// `a` is strictly lower triangular, `c` holds the row sums of `a`, and
/// `p` is the classical order the scheme is registered with.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    pub name: String,
    pub s: usize,
    pub p: u32,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

/// JSON projection of a tableau: `{name, s, p, A (row-major), b}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableauJson {
    pub name: String,
    pub s: usize,
    pub p: u32,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl ButcherTableau {
    fn new(name: &str, p: u32, a: Vec<Vec<f64>>, b: Vec<f64>) -> Self {
        let s = b.len();
        assert_eq!(a.len(), s, "A must be s x s");
        for (i, row) in a.iter().enumerate() {
            assert_eq!(row.len(), s, "A must be s x s");
            for (j, &v) in row.iter().enumerate() {
                assert!(j < i || v == 0.0, "A must be strictly lower triangular");
            }
        }
        let c = a.iter().map(|row| row.iter().sum()).collect();
        ButcherTableau {
            name: name.to_string(),
            s,
            p,
            a,
            b,
            c,
        }
    }

    pub fn to_json(&self) -> TableauJson {
        TableauJson {
            name: self.name.clone(),
            s: self.s,
            p: self.p,
            a: self.a.iter().flatten().copied().collect(),
            b: self.b.clone(),
        }
    }
}

pub const REGISTRY_NAMES: [&str; 5] = ["euler", "rk2", "rk43", "rk54", "rk4classic"];

/// Looks up one of the bundled tableaus by name.
pub fn registry_get(name: &str) -> Result<ButcherTableau> {
    match name {
        "euler" => Ok(ButcherTableau::new("euler", 1, vec![vec![0.0]], vec![1.0])),
        // Heun / explicit trapezoidal.
        "rk2" => Ok(ButcherTableau::new(
            "rk2",
            2,
            vec![vec![0.0, 0.0], vec![1.0, 0.0]],
            vec![0.5, 0.5],
        )),
        // 4-stage order-3 scheme with maximal R(A,b) = 2.
        "rk43" => Ok(ButcherTableau::new(
            "rk43",
            3,
            vec![
                vec![0.0, 0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0, 0.0],
                vec![0.5, 0.5, 0.0, 0.0],
                vec![1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.0],
            ],
            vec![1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0, 0.5],
        )),
        // Optimal 5-stage order-4 scheme, R(A,b) ~= 1.50818.
        "rk54" => Ok(ButcherTableau::new(
            "rk54",
            4,
            vec![
                vec![0.0, 0.0, 0.0, 0.0, 0.0],
                vec![0.391752226571890, 0.0, 0.0, 0.0, 0.0],
                vec![0.217669096261169, 0.368410593050371, 0.0, 0.0, 0.0],
                vec![
                    0.082692086657811,
                    0.139958502191896,
                    0.251891774271694,
                    0.0,
                    0.0,
                ],
                vec![
                    0.067966283637115,
                    0.115034698504632,
                    0.207034898597385,
                    0.544974750228521,
                    0.0,
                ],
            ],
            vec![
                0.146811876084786,
                0.248482909444976,
                0.104258830331980,
                0.274438900901350,
                0.226007483236906,
            ],
        )),
        "rk4classic" => Ok(ButcherTableau::new(
            "rk4classic",
            4,
            vec![
                vec![0.0, 0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0, 0.0],
                vec![0.0, 0.5, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
        )),
        _ => Err(Error::UnknownMethod {
            name: name.to_string(),
            valid: REGISTRY_NAMES.join(", "),
        }),
    }
}

const ORDER_TOL: f64 = 1e-12;

/// True iff all classical order conditions up to order `p` (p <= 4) hold
/// within 1e-12.
pub fn verify_order(t: &ButcherTableau, p: u32) -> bool {
    assert!((1..=4).contains(&p), "order conditions implemented for p <= 4");
    let b = &t.b;
    let c = &t.c;
    let dot = |x: &[f64], y: &[f64]| -> f64 { x.iter().zip(y).map(|(a, b)| a * b).sum() };
    let amul = |x: &[f64]| -> Vec<f64> { t.a.iter().map(|row| dot(row, x)).collect() };

    let mut conds: Vec<f64> = vec![b.iter().sum::<f64>() - 1.0];
    if p >= 2 {
        conds.push(dot(b, c) - 0.5);
    }
    if p >= 3 {
        let c2: Vec<f64> = c.iter().map(|x| x * x).collect();
        conds.push(dot(b, &c2) - 1.0 / 3.0);
        conds.push(dot(b, &amul(c)) - 1.0 / 6.0);
    }
    if p >= 4 {
        let c2: Vec<f64> = c.iter().map(|x| x * x).collect();
        let c3: Vec<f64> = c.iter().map(|x| x * x * x).collect();
        let ac = amul(c);
        let cac: Vec<f64> = c.iter().zip(&ac).map(|(x, y)| x * y).collect();
        conds.push(dot(b, &c3) - 0.25);
        conds.push(dot(b, &cac) - 0.125);
        conds.push(dot(b, &amul(&c2)) - 1.0 / 12.0);
        conds.push(dot(b, &amul(&ac)) - 1.0 / 24.0);
    }
    conds.iter().all(|r| r.abs() <= ORDER_TOL)
}

/// Slack for the elementwise feasibility checks; the boundary of the
/// feasible interval is located by bisection, so only roundoff matters here.
const FEAS_SLACK: f64 = 1e-13;

/// Feasibility predicate for the radius of absolute monotonicity:
/// A(I+rA)^{-1} >= 0, b^T(I+rA)^{-1} >= 0, rA(I+rA)^{-1}1 <= 1,
/// r b^T(I+rA)^{-1}1 <= 1. (I+rA) is unit lower triangular, so the solves
/// are plain forward/backward substitutions.
#[allow(clippy::needless_range_loop)]
fn radius_feasible(t: &ButcherTableau, r: f64) -> bool {
    let s = t.s;
    // m = (I + rA)^{-1} A, column by column by forward substitution.
    // A and (I + rA) commute, so this equals A (I + rA)^{-1}.
    let mut m = vec![vec![0.0; s]; s];
    for col in 0..s {
        for row in 0..s {
            let mut acc = t.a[row][col];
            for k in 0..row {
                acc -= r * t.a[row][k] * m[k][col];
            }
            m[row][col] = acc;
        }
    }
    // v^T = b^T (I + rA)^{-1}  <=>  (I + rA)^T v = b, backward substitution.
    let mut v = vec![0.0; s];
    for row in (0..s).rev() {
        let mut acc = t.b[row];
        for k in (row + 1)..s {
            acc -= r * t.a[k][row] * v[k];
        }
        v[row] = acc;
    }
    for row in 0..s {
        let mut rowsum = 0.0;
        for col in 0..s {
            if m[row][col] < -FEAS_SLACK {
                return false;
            }
            rowsum += m[row][col];
        }
        if r * rowsum > 1.0 + FEAS_SLACK {
            return false;
        }
    }
    let mut vsum = 0.0;
    for row in 0..s {
        if v[row] < -FEAS_SLACK {
            return false;
        }
        vsum += v[row];
    }
    r * vsum <= 1.0 + FEAS_SLACK
}

const RADIUS_SCAN_STEP: f64 = 0.25;
const RADIUS_SCAN_LIMIT: f64 = 64.0;

/// Radius of absolute monotonicity R(A,b), located by a coarse scan
/// followed by bisection to absolute accuracy `tol`. Returns 0 when no
/// r > 0 is feasible and +inf when the scan never leaves the feasible set.
pub fn positivity_radius(t: &ButcherTableau, tol: f64) -> f64 {
    assert!(tol > 0.0, "tol must be positive");
    let mut lo = 0.0;
    let mut hi = None;
    let mut r = RADIUS_SCAN_STEP;
    while r <= RADIUS_SCAN_LIMIT {
        if radius_feasible(t, r) {
            lo = r;
        } else {
            hi = Some(r);
            break;
        }
        r += RADIUS_SCAN_STEP;
    }
    let Some(mut hi) = hi else {
        return f64::INFINITY;
    };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if radius_feasible(t, mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // No feasible r > 0 at all: the radius is exactly zero.
    if lo == 0.0 {
        return 0.0;
    }
    0.5 * (lo + hi)
}
