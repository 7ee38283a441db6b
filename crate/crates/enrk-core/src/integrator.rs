//! The nonstandard Runge-Kutta stepper: classical explicit stages with
//! every occurrence of the step size replaced by phi(h).

use serde::{Deserialize, Serialize};

use crate::denominator::DenominatorSpec;
use crate::error::{Error, Result};
use crate::tableau::ButcherTableau;

/// Any state component beyond this magnitude aborts the run; unstable
/// standard runs at large h must fail loudly.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// A fixed-step solution: `states[k]` approximates y(t0 + k*h).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub t0: f64,
    pub h: f64,
    pub n: usize,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.states.len().saturating_sub(1)
    }

    pub fn terminal(&self) -> &[f64] {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.h
    }

    /// CSV rendering: header `t,y1,...,yn`, one row per stored state,
    /// 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push('t');
        for i in 1..=self.n {
            out.push_str(&format!(",y{i}"));
        }
        out.push('\n');
        for (k, state) in self.states.iter().enumerate() {
            out.push_str(&format!("{:.16e}", self.time_at(k)));
            for v in state {
                out.push_str(&format!(",{v:.16e}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Reusable stage workspace so long integrations do not allocate per step.
struct Stepper<'t> {
    tableau: &'t ButcherTableau,
    phi: f64,
    k: Vec<Vec<f64>>,
    arg: Vec<f64>,
}

impl<'t> Stepper<'t> {
    fn new(tableau: &'t ButcherTableau, phi: f64, dim: usize) -> Self {
        Stepper {
            tableau,
            phi,
            k: vec![vec![0.0; dim]; tableau.s],
            arg: vec![0.0; dim],
        }
    }

    /// One step in place; `out` receives y_{k+1}.
    fn step<F>(&mut self, f: &F, y: &[f64], out: &mut [f64]) -> std::result::Result<(), usize>
    where
        F: Fn(&[f64], &mut [f64]) + ?Sized,
    {
        let t = self.tableau;
        for i in 0..t.s {
            self.arg.copy_from_slice(y);
            for j in 0..i {
                let a = t.a[i][j];
                if a != 0.0 {
                    for (argd, kd) in self.arg.iter_mut().zip(&self.k[j]) {
                        *argd += self.phi * a * kd;
                    }
                }
            }
            f(&self.arg, &mut self.k[i]);
            if self.k[i].iter().any(|v| !v.is_finite()) {
                return Err(i);
            }
        }
        out.copy_from_slice(y);
        for i in 0..t.s {
            let bi = t.b[i];
            if bi != 0.0 {
                for (od, kd) in out.iter_mut().zip(&self.k[i]) {
                    *od += self.phi * bi * kd;
                }
            }
        }
        Ok(())
    }
}

/// One ENRK step with an explicit stage scale phi: K_1 = f(y),
/// K_i = f(y + phi * sum_{j<i} a_ij K_j), result y + phi * sum b_i K_i.
/// With phi = h this is the standard explicit step. phi = 0.0 is accepted
/// as the underflow limit of the vanishing denominator families and makes
/// the step the identity.
pub fn enrk_step<F>(t: &ButcherTableau, phi: f64, f: &F, y: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64], &mut [f64]) + ?Sized,
{
    assert!(phi >= 0.0, "stage scale phi must be nonnegative");
    let mut stepper = Stepper::new(t, phi, y.len());
    let mut out = vec![0.0; y.len()];
    stepper.step(f, y, &mut out).map_err(|stage| Error::Divergence {
        step: 0,
        stage: Some(stage),
        detail: "right-hand side returned a non-finite value".into(),
    })?;
    Ok(out)
}

/// Integrates `steps` fixed steps from y0. The denominator is evaluated
/// once (the step size never changes mid-run) and every state is recorded.
pub fn integrate<F>(
    t: &ButcherTableau,
    spec: &DenominatorSpec,
    f: &F,
    y0: &[f64],
    h: f64,
    steps: usize,
) -> Result<Trajectory>
where
    F: Fn(&[f64], &mut [f64]) + ?Sized,
{
    integrate_from(t, spec, f, y0, 0.0, h, steps)
}

pub fn integrate_from<F>(
    t: &ButcherTableau,
    spec: &DenominatorSpec,
    f: &F,
    y0: &[f64],
    t0: f64,
    h: f64,
    steps: usize,
) -> Result<Trajectory>
where
    F: Fn(&[f64], &mut [f64]) + ?Sized,
{
    if steps == 0 {
        return Err(Error::Precondition("steps must be at least 1".into()));
    }
    let phi = spec.eval(h)?;
    let dim = y0.len();
    let mut stepper = Stepper::new(t, phi, dim);
    let mut states = Vec::with_capacity(steps + 1);
    states.push(y0.to_vec());
    let mut current = y0.to_vec();
    let mut next = vec![0.0; dim];
    for step in 1..=steps {
        stepper
            .step(f, &current, &mut next)
            .map_err(|stage| Error::Divergence {
                step,
                stage: Some(stage),
                detail: "right-hand side returned a non-finite value".into(),
            })?;
        if next
            .iter()
            .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT)
        {
            return Err(Error::Divergence {
                step,
                stage: None,
                detail: format!("state left the admissible range (|y| > {DIVERGENCE_LIMIT:e})"),
            });
        }
        states.push(next.clone());
        std::mem::swap(&mut current, &mut next);
    }
    Ok(Trajectory {
        t0,
        h,
        n: dim,
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denominator::{DenominatorKind, DenominatorSpec};
    use crate::tableau::registry_get;
    use approx::assert_relative_eq;

    fn scalar_linear(lambda: f64) -> impl Fn(&[f64], &mut [f64]) {
        move |y, dy| dy[0] = lambda * y[0]
    }

    #[test]
    fn euler_one_stage_linear() {
        let t = registry_get("euler").unwrap();
        let f = scalar_linear(-1.0);
        let y = enrk_step(&t, 0.5, &f, &[2.0]).unwrap();
        assert_relative_eq!(y[0], 2.0 * (1.0 - 0.5), epsilon = 1e-15);
    }

    #[test]
    fn rk2_linear_matches_stability_function() {
        let t = registry_get("rk2").unwrap();
        let phi = 0.3;
        let lambda = -0.7;
        let f = scalar_linear(lambda);
        let y = enrk_step(&t, phi, &f, &[1.0]).unwrap();
        let z = phi * lambda;
        assert_relative_eq!(y[0], 1.0 + z + z * z / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        // f vanishing at y* keeps every stage and the update at zero.
        let f = |y: &[f64], dy: &mut [f64]| {
            dy[0] = y[0] - 0.25;
            dy[1] = (y[1] - 1.25) * 2.0;
        };
        for name in crate::tableau::REGISTRY_NAMES {
            let t = registry_get(name).unwrap();
            let y = enrk_step(&t, 3.7, &f, &[0.25, 1.25]).unwrap();
            assert!((y[0] - 0.25).abs() <= 1e-13);
            assert!((y[1] - 1.25).abs() <= 1e-13);
        }
    }

    #[test]
    fn euler_two_steps_quarter() {
        let t = registry_get("euler").unwrap();
        let spec = DenominatorSpec::standard(1);
        let f = scalar_linear(-1.0);
        let traj = integrate(&t, &spec, &f, &[1.0], 0.5, 2).unwrap();
        assert_eq!(traj.states.len(), 3);
        assert_relative_eq!(traj.terminal()[0], 0.25, epsilon = 1e-15);
    }

    #[test]
    fn divergence_carries_step_index() {
        let t = registry_get("euler").unwrap();
        let spec = DenominatorSpec::standard(1);
        // dy/dt = y^2 from y=2 at h=1: 2 -> 6 -> 42 -> ... superexponential
        let f = |y: &[f64], dy: &mut [f64]| dy[0] = y[0] * y[0];
        let err = integrate(&t, &spec, &f, &[2.0], 1.0, 100).unwrap_err();
        match err {
            Error::Divergence { step, .. } => assert!(step > 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn non_finite_rhs_reports_stage() {
        let t = registry_get("rk2").unwrap();
        let f = |y: &[f64], dy: &mut [f64]| dy[0] = (y[0] - 1.5).recip().sqrt();
        // first stage evaluates at y=1.0 -> sqrt of negative -> NaN
        let err = enrk_step(&t, 1.0, &f, &[1.0]).unwrap_err();
        match err {
            Error::Divergence { stage: Some(0), .. } => {}
            other => panic!("expected stage-0 divergence, got {other:?}"),
        }
    }

    #[test]
    fn phi_evaluated_once_per_run() {
        // phi3 at h=4 has theta ~ 0, so the run is pure phi1: verify the
        // trajectory equals integrating with the equivalent fixed scale.
        let t = registry_get("rk2").unwrap();
        let kind = DenominatorKind::Phi1 { tau1: 0.68 };
        let spec = DenominatorSpec::new(kind, 2).unwrap();
        let f = scalar_linear(-0.4);
        let traj = integrate(&t, &spec, &f, &[1.0], 4.0, 5).unwrap();
        let phi = spec.eval(4.0).unwrap();
        let mut y = 1.0;
        for _ in 0..5 {
            let z = phi * -0.4;
            y *= 1.0 + z + z * z / 2.0;
        }
        assert_relative_eq!(traj.terminal()[0], y, epsilon = 1e-14);
    }

    #[test]
    fn csv_layout() {
        let traj = Trajectory {
            t0: 0.0,
            h: 0.5,
            n: 2,
            states: vec![vec![1.0, 1.6], vec![0.9, 1.7]],
        };
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,y1,y2");
        let row = lines.next().unwrap();
        assert!(row.starts_with("0.0000000000000000e0,"));
        assert_eq!(csv.lines().count(), 3);
        // 17 significant digits survive a round trip
        let reparsed: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(reparsed, 1.0);
    }
}
