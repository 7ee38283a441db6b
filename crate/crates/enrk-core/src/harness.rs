//! Reference-solution generation, error and rate metrics, and the
//! threshold/convergence reports that drive the CLI and service.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::denominator::{
    auto_tau1, auto_tau2, tau1_opt, tau2_opt, DenominatorKind, DenominatorSpec,
};
use crate::error::{Error, Result};
use crate::integrator::{integrate, Trajectory};
use crate::models::{spectrum_classification, ModelDescriptor};
use crate::positivity::{pes_threshold, positivity_step_threshold, StepThreshold};
use crate::stability::elementary_stability_threshold;
use crate::tableau::{positivity_radius, ButcherTableau};

pub const DEFAULT_H_REF: f64 = 1e-5;
pub const DEFAULT_T_CONVERGENCE: f64 = 10.0;
pub const DEFAULT_T_ASYMPTOTIC: f64 = 50.0;
const RADIUS_TOL: f64 = 1e-9;
const GRID_TOL: f64 = 1e-9;

/// A positive real extended with infinity, kept JSON-safe ("inf").
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtReal(pub f64);

impl Serialize for ExtReal {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            ser.serialize_str("inf")
        } else {
            ser.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Tag(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(v) => Ok(ExtReal(v)),
            Raw::Tag(s) if s == "inf" => Ok(ExtReal(f64::INFINITY)),
            Raw::Tag(s) => Err(serde::de::Error::custom(format!(
                "expected number or \"inf\", got \"{s}\""
            ))),
        }
    }
}

// ---------------------------------------------------------------------------
// Reference solutions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct ReferenceKey {
    model: String,
    params: Vec<u64>,
    y0: Vec<u64>,
    t_end: u64,
    h_ref: u64,
}

impl ReferenceKey {
    fn new(m: &ModelDescriptor, y0: &[f64], t_end: f64, h_ref: f64) -> Self {
        ReferenceKey {
            model: m.name.clone(),
            params: m.params.iter().map(|(_, v)| v.to_bits()).collect(),
            y0: y0.iter().map(|v| v.to_bits()).collect(),
            t_end: t_end.to_bits(),
            h_ref: h_ref.to_bits(),
        }
    }
}

type CacheCell = Arc<OnceLock<std::result::Result<Arc<Trajectory>, Error>>>;

/// Shared cache of fine-step reference trajectories. Lookups take a read
/// lock; the first requester of a key computes it (once) and everyone else
/// shares the result.
#[derive(Default)]
pub struct ReferenceCache {
    inner: RwLock<HashMap<ReferenceKey, CacheCell>>,
}

impl ReferenceCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn cell(&self, key: ReferenceKey) -> CacheCell {
        if let Some(cell) = self.inner.read().expect("cache lock").get(&key) {
            return Arc::clone(cell);
        }
        let mut map = self.inner.write().expect("cache lock");
        Arc::clone(map.entry(key).or_default())
    }

    pub fn len(&self) -> usize {
        self.inner.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Fine-step benchmark trajectory: the order-4 rk54 scheme with the
/// standard denominator at `h_ref`, cached per (model, y0, T, h_ref).
pub fn reference_solution(
    cache: &ReferenceCache,
    m: &ModelDescriptor,
    y0: &[f64],
    t_end: f64,
    h_ref: f64,
) -> Result<Arc<Trajectory>> {
    if h_ref.is_nan() || h_ref <= 0.0 || t_end.is_nan() || t_end <= 0.0 {
        return Err(Error::Precondition(
            "reference solutions need positive T and h_ref".into(),
        ));
    }
    let steps_real = t_end / h_ref;
    if (steps_real - steps_real.round()).abs() > GRID_TOL * steps_real.max(1.0) {
        return Err(Error::Precondition(format!(
            "T = {t_end} is not an integer multiple of h_ref = {h_ref}"
        )));
    }
    let steps = steps_real.round() as usize;
    let cell = cache.cell(ReferenceKey::new(m, y0, t_end, h_ref));
    let result = cell.get_or_init(|| {
        let tableau = crate::tableau::registry_get("rk54").expect("registry");
        let spec = DenominatorSpec::standard(tableau.p);
        integrate(&tableau, &spec, m.rhs().as_ref(), y0, h_ref, steps).map(Arc::new)
    });
    result.clone()
}

/// max over shared grid nodes of the componentwise 1-norm deviation,
/// comparing coarse state k with fine state k * (traj.h / ref.h).
pub fn error_metric(traj: &Trajectory, reference: &Trajectory) -> Result<f64> {
    if traj.t0 != reference.t0 {
        return Err(Error::Precondition("trajectories start at different t0".into()));
    }
    if traj.n != reference.n {
        return Err(Error::Precondition("dimension mismatch".into()));
    }
    let ratio_real = traj.h / reference.h;
    let ratio = ratio_real.round();
    if (ratio_real - ratio).abs() > GRID_TOL * ratio.max(1.0) || ratio < 1.0 {
        return Err(Error::Precondition(format!(
            "coarse step {} is not an integer multiple of reference step {}",
            traj.h, reference.h
        )));
    }
    let ratio = ratio as usize;
    if traj.steps() * ratio != reference.steps() {
        return Err(Error::Precondition(format!(
            "span mismatch: {} coarse steps vs {} reference steps at ratio {ratio}",
            traj.steps(),
            reference.steps()
        )));
    }
    let mut worst = 0.0f64;
    for (k, state) in traj.states.iter().enumerate() {
        let fine = &reference.states[k * ratio];
        let dev: f64 = state.iter().zip(fine).map(|(a, b)| (a - b).abs()).sum();
        worst = worst.max(dev);
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
// Convergence tables
// ---------------------------------------------------------------------------

/// One entry of a convergence row: the measured error for a denominator
/// spec (None when the run diverged) and the rate against the previous row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceCell {
    pub spec: String,
    pub error: Option<f64>,
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub cells: Vec<ConvergenceCell>,
}

/// Errors and observed rates on a descending step-size ladder, one column
/// group per denominator spec, all measured against the shared reference.
pub fn convergence_table(
    cache: &ReferenceCache,
    t: &ButcherTableau,
    m: &ModelDescriptor,
    specs: &[DenominatorSpec],
    hs: &[f64],
    t_end: f64,
    h_ref: f64,
) -> Result<Vec<ConvergenceRow>> {
    if hs.is_empty() || specs.is_empty() {
        return Err(Error::Precondition("need at least one h and one spec".into()));
    }
    for pair in hs.windows(2) {
        if pair[1] >= pair[0] {
            return Err(Error::Precondition("step sizes must be strictly decreasing".into()));
        }
    }
    for &h in hs {
        if h.is_nan() || h <= 0.0 {
            return Err(Error::Precondition("step sizes must be positive".into()));
        }
        let n = t_end / h;
        if (n - n.round()).abs() > GRID_TOL * n.max(1.0) {
            return Err(Error::Precondition(format!(
                "h = {h} does not divide T = {t_end}"
            )));
        }
    }
    let y0 = m.default_initial.clone();
    let reference = reference_solution(cache, m, &y0, t_end, h_ref)?;

    let f = m.rhs();
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(hs.len());
    for &h in hs {
        let steps = (t_end / h).round() as usize;
        let mut cells = Vec::with_capacity(specs.len());
        for spec in specs {
            let error = match integrate(t, spec, f.as_ref(), &y0, h, steps) {
                Ok(traj) => Some(error_metric(&traj, &reference)?),
                Err(Error::Divergence { .. }) => None,
                Err(other) => return Err(other),
            };
            let rate = rows.last().and_then(|prev: &ConvergenceRow| {
                let prev_cell = &prev.cells[cells.len()];
                match (prev_cell.error, error) {
                    (Some(e1), Some(e2)) if e1 > 0.0 && e2 > 0.0 => {
                        Some((e1 / e2).ln() / (prev.h / h).ln())
                    }
                    _ => None,
                }
            });
            cells.push(ConvergenceCell {
                spec: spec.kind.to_string(),
                error,
                rate,
            });
        }
        rows.push(ConvergenceRow { h, cells });
    }
    Ok(rows)
}

/// CSV rendering of a convergence table: `h,err[spec],rate[spec],...`
/// with RFC-4180 quoting for labels that contain commas.
pub fn convergence_to_csv(rows: &[ConvergenceRow]) -> String {
    let quote = |field: &str| -> String {
        if field.contains(',') || field.contains('"') {
            format!("\"{}\"", field.replace('"', "\"\""))
        } else {
            field.to_string()
        }
    };
    let mut out = String::from("h");
    if let Some(first) = rows.first() {
        for cell in &first.cells {
            out.push(',');
            out.push_str(&quote(&format!("err[{}]", cell.spec)));
            out.push(',');
            out.push_str(&quote(&format!("rate[{}]", cell.spec)));
        }
    }
    out.push('\n');
    for row in rows {
        out.push_str(&format!("{:.16e}", row.h));
        for cell in &row.cells {
            match cell.error {
                Some(e) => out.push_str(&format!(",{e:.16e}")),
                None => out.push_str(",diverged"),
            }
            match cell.rate {
                Some(r) => out.push_str(&format!(",{r:.4}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Threshold reports
// ---------------------------------------------------------------------------

/// tau* plus the flag marking the positivity side as undetermined.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauStar {
    pub value: ExtReal,
    pub stability_only: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecommendedSpecs {
    pub phi1: String,
    pub phi2: String,
    pub phi3: String,
}

/// Per method-model thresholds and suggested denominator parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub method: String,
    pub model: String,
    pub s: usize,
    pub p: u32,
    pub radius: f64,
    pub alpha: f64,
    pub phi_star: ExtReal,
    pub h: StepThreshold,
    pub tau_star: TauStar,
    pub tau1_opt: Option<f64>,
    pub tau2_opt: Option<f64>,
    pub m: u32,
    pub k: u32,
    pub recommended: Option<RecommendedSpecs>,
    pub notes: Vec<String>,
}

/// Assembles phi*, H, tau* and the parameter rules for one method-model
/// pair. `m_choice`/`k_choice` select the exponents used by the phi2/phi3
/// recommendations (both must be at least the method order).
pub fn threshold_report(
    t: &ButcherTableau,
    m: &ModelDescriptor,
    m_choice: u32,
    k_choice: u32,
) -> Result<ThresholdReport> {
    if m_choice < t.p || k_choice < t.p {
        return Err(Error::Precondition(format!(
            "m and k must be at least the method order {} (got m={m_choice}, k={k_choice})",
            t.p
        )));
    }
    let cls = spectrum_classification(m)?;
    if cls.is_empty() {
        return Err(Error::Domain(format!(
            "model `{}` has no usable equilibria for threshold analysis",
            m.name
        )));
    }
    let phi_star = elementary_stability_threshold(t, &cls)?;
    let radius = positivity_radius(t, RADIUS_TOL);
    let h = positivity_step_threshold(radius, &m.alpha);
    let tau = pes_threshold(phi_star, h);

    let mut notes = m.notes.clone();
    if tau.stability_only {
        notes.push(
            "positivity threshold undetermined (radius 0); tau* falls back to the \
             elementary stability threshold"
                .to_string(),
        );
    }

    let (tau1, tau2, recommended) = if tau.value.is_finite() {
        let tau1 = tau1_opt(tau.value);
        let tau2 = tau2_opt(tau.value, m_choice);
        let phi1 = DenominatorKind::Phi1 {
            tau1: auto_tau1(tau.value),
        };
        let phi2 = DenominatorKind::Phi2 {
            tau2: auto_tau2(tau.value, m_choice),
            m: m_choice,
        };
        let phi3 = DenominatorKind::Phi3 {
            tau1: auto_tau1(tau.value),
            tau2: auto_tau2(tau.value, m_choice),
            m: m_choice,
            k: k_choice,
        };
        // structural validation (m, k against the method order)
        for kind in [phi2, phi3] {
            DenominatorSpec::new(kind, t.p)?;
        }
        (
            Some(tau1),
            Some(tau2),
            Some(RecommendedSpecs {
                phi1: phi1.to_string(),
                phi2: phi2.to_string(),
                phi3: phi3.to_string(),
            }),
        )
    } else {
        notes.push("tau* is unbounded; any denominator keeps the scheme admissible".to_string());
        (None, None, None)
    };

    Ok(ThresholdReport {
        method: t.name.clone(),
        model: m.name.clone(),
        s: t.s,
        p: t.p,
        radius,
        alpha: m.alpha.alpha,
        phi_star: ExtReal(phi_star),
        h,
        tau_star: TauStar {
            value: ExtReal(tau.value),
            stability_only: tau.stability_only,
        },
        tau1_opt: tau1,
        tau2_opt: tau2,
        m: m_choice,
        k: k_choice,
        recommended,
        notes,
    })
}
