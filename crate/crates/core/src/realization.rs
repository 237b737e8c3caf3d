//! Classical and quantum realizations of behaviors.
//!
//! A classical realization is a finite probability space `(Λ, μ)` with one
//! response function `f_A : Λ → O` per measurement; it reproduces a behavior
//! when `p(s|C) = μ(⋂_{A∈C} f_A⁻¹(s_A))`. Verification is exact.
//!
//! A quantum realization is a density matrix together with one complete set
//! of orthogonal projectors per measurement. The observable of a measurement
//! is `T_A = Σ_s e(s) P_s` under the outcome encoding [`outcome_value`].
//! Verification runs in floating point with a single tolerance.
//!
//! The lifts go NC → classical → quantum: a global section becomes a
//! realization over `Λ = O^A`, and a classical realization becomes a diagonal
//! quantum one. [`DiagonalRealization`] keeps the diagonal form in exact
//! arithmetic.

use std::sync::Arc;

use indexmap::IndexMap;
use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{Behavior, BehaviorError, ScenarioRef};
use crate::polytope::{ContextDiscrepancy, GlobalDistribution};
use crate::rational::{self, Prob};
use crate::scenario::{rank, ContextId, MeasurementId, OutcomeId, Scenario, ScenarioError, SCHEMA_VERSION};

/// Default `τ_q` for floating-point quantum checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;

pub type CMatrix = DMatrix<Complex64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RealizationError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error("objects refer to different scenarios")]
    ScenarioMismatch,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("invalid response function for {measurement}: {detail}")]
    InvalidResponse { measurement: String, detail: String },
    #[error("invalid density matrix: {0}")]
    InvalidState(String),
    #[error("invalid projectors for {measurement}: {detail}")]
    InvalidProjectors { measurement: String, detail: String },
    #[error("unsupported schema version {0}")]
    UnsupportedVersion(u32),
    #[error("{0}")]
    Parse(String),
}

fn same_scenario(a: &Arc<Scenario>, b: &Arc<Scenario>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Real eigenvalue assigned to an outcome. Dichotomic scenarios use
/// `first ↦ −1, second ↦ +1` (for `[⊥, ⊤]` that is `⊥ ↦ −1, ⊤ ↦ +1`);
/// larger outcome sets use the outcome index.
pub fn outcome_value(scenario: &Scenario, o: OutcomeId) -> f64 {
    if scenario.num_outcomes() == 2 {
        if o.0 == 0 { -1.0 } else { 1.0 }
    } else {
        o.0 as f64
    }
}

/// Tables `μ(⋂ f_A⁻¹(s_A))` for weights `μ` and responses `f`.
fn response_tables(scenario: &Scenario, weights: &[Prob], responses: &[Vec<OutcomeId>]) -> Vec<Vec<Prob>> {
    scenario
        .context_ids()
        .map(|ctx| {
            let members = scenario.context(ctx).expect("valid context");
            let mut table = vec![Prob::zero(); scenario.joint_outcome_count(ctx).expect("valid context")];
            for (lambda, w) in weights.iter().enumerate() {
                if w.is_zero() {
                    continue;
                }
                let values: Vec<OutcomeId> = members.iter().map(|m| responses[m.0][lambda]).collect();
                table[rank(&values, scenario.num_outcomes())] += w;
            }
            table
        })
        .collect()
}

fn compare_tables(behavior: &Behavior, found: Vec<Vec<Prob>>) -> Vec<ContextDiscrepancy> {
    behavior
        .tables()
        .iter()
        .zip(found)
        .enumerate()
        .filter(|(_, (expected, found))| *expected != found)
        .map(|(c, (expected, found))| ContextDiscrepancy { context: ContextId(c), expected: expected.clone(), found })
        .collect()
}

/// Finite hidden-variable model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalRealization {
    scenario: Arc<Scenario>,
    states: Vec<String>,
    measure: Vec<Prob>,
    /// `responses[A][λ] = f_A(λ)`.
    responses: Vec<Vec<OutcomeId>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClassicalReport {
    pub discrepancies: Vec<ContextDiscrepancy>,
}

impl ClassicalReport {
    pub fn passed(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

impl ClassicalRealization {
    pub fn new(
        scenario: Arc<Scenario>,
        states: Vec<String>,
        measure: Vec<Prob>,
        responses: Vec<Vec<OutcomeId>>,
    ) -> Result<Self, RealizationError> {
        if states.is_empty() {
            return Err(RealizationError::InvalidMeasure("no hidden states".into()));
        }
        if measure.len() != states.len() {
            return Err(RealizationError::InvalidMeasure(format!(
                "{} weights for {} states",
                measure.len(),
                states.len()
            )));
        }
        if let Some(w) = measure.iter().find(|w| !rational::is_probability(w)) {
            return Err(RealizationError::InvalidMeasure(format!("weight {} outside [0, 1]", rational::format(w))));
        }
        let total: Prob = measure.iter().sum();
        if !total.is_one() {
            return Err(RealizationError::InvalidMeasure(format!("total mass {}", rational::format(&total))));
        }
        if responses.len() != scenario.num_measurements() {
            return Err(RealizationError::InvalidResponse {
                measurement: "*".into(),
                detail: format!("{} response functions for {} measurements", responses.len(), scenario.num_measurements()),
            });
        }
        for (m, f) in responses.iter().enumerate() {
            let label = scenario.measurement_label(MeasurementId(m)).to_string();
            if f.len() != states.len() {
                return Err(RealizationError::InvalidResponse { measurement: label, detail: "not total on Λ".into() });
            }
            if f.iter().any(|o| o.0 >= scenario.num_outcomes()) {
                return Err(RealizationError::InvalidResponse { measurement: label, detail: "unknown outcome".into() });
            }
        }
        Ok(ClassicalRealization { scenario, states, measure, responses })
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn measure(&self) -> &[Prob] {
        &self.measure
    }

    pub fn response(&self, m: MeasurementId, lambda: usize) -> OutcomeId {
        self.responses[m.0][lambda]
    }

    /// The behavior this realization produces.
    pub fn behavior(&self) -> Behavior {
        Behavior::new(self.scenario.clone(), response_tables(&self.scenario, &self.measure, &self.responses))
            .expect("joint distributions of random variables are normalized")
    }

    pub fn to_doc(&self) -> ClassicalDoc {
        let s = &self.scenario;
        ClassicalDoc {
            version: SCHEMA_VERSION,
            scenario: ScenarioRef::Inline(s.to_doc()),
            states: self.states.clone(),
            measure: self.measure.iter().map(rational::format).collect(),
            responses: self
                .responses
                .iter()
                .enumerate()
                .map(|(m, f)| {
                    (
                        s.measurement_label(MeasurementId(m)).to_string(),
                        f.iter().map(|o| s.outcome_label(*o).to_string()).collect(),
                    )
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &ClassicalDoc) -> Result<Self, RealizationError> {
        if doc.version != SCHEMA_VERSION {
            return Err(RealizationError::UnsupportedVersion(doc.version));
        }
        let scenario = Arc::new(doc.scenario.resolve()?);
        let measure = doc
            .measure
            .iter()
            .map(|w| rational::parse(w).map_err(|e| RealizationError::Parse(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let mut responses = vec![None; scenario.num_measurements()];
        for (label, values) in &doc.responses {
            let m = scenario.measurement_id(label)?;
            let f = values.iter().map(|o| scenario.outcome_id(o)).collect::<Result<Vec<_>, _>>()?;
            responses[m.0] = Some(f);
        }
        let responses = responses
            .into_iter()
            .enumerate()
            .map(|(m, f)| {
                f.ok_or_else(|| RealizationError::InvalidResponse {
                    measurement: scenario.measurement_label(MeasurementId(m)).to_string(),
                    detail: "missing".into(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        ClassicalRealization::new(scenario, doc.states.clone(), measure, responses)
    }
}

/// Exact check that the realization's joint distributions equal the behavior.
pub fn verify_classical(
    realization: &ClassicalRealization,
    behavior: &Behavior,
) -> Result<ClassicalReport, RealizationError> {
    if !same_scenario(&realization.scenario, behavior.scenario()) {
        return Err(RealizationError::ScenarioMismatch);
    }
    let found = response_tables(&realization.scenario, &realization.measure, &realization.responses);
    Ok(ClassicalReport { discrepancies: compare_tables(behavior, found) })
}

/// `Λ = O^A`, `μ` = the witness, `f_A(t) = t(A)`.
pub fn nc_to_classical(witness: &GlobalDistribution) -> ClassicalRealization {
    let s = witness.scenario().clone();
    let n = witness.table().len();
    let assignments: Vec<_> = (0..n).map(|k| s.global_assignment(k)).collect();
    let states = assignments.iter().map(|t| s.outcome_key(&t.values)).collect();
    let responses = (0..s.num_measurements())
        .map(|m| assignments.iter().map(|t| t.values[m]).collect())
        .collect();
    ClassicalRealization::new(s, states, witness.table().to_vec(), responses)
        .expect("a global distribution is a valid measure on O^A")
}

/// Diagonal quantum realization in exact arithmetic: `ρ = diag(μ)` and
/// `P^{(A)}_s = diag(1[f_A(λ) = s])`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagonalRealization {
    scenario: Arc<Scenario>,
    rho: Vec<Prob>,
    responses: Vec<Vec<OutcomeId>>,
}

impl DiagonalRealization {
    pub fn dimension(&self) -> usize {
        self.rho.len()
    }

    pub fn rho_diagonal(&self) -> &[Prob] {
        &self.rho
    }

    /// Diagonal of `P^{(A)}_s`.
    pub fn projector_diagonal(&self, m: MeasurementId, s: OutcomeId) -> Vec<bool> {
        self.responses[m.0].iter().map(|o| *o == s).collect()
    }

    /// `tr(ρ ∏_{A∈C} P^{(A)}_{s_A})` for every context and joint outcome, as
    /// exact sums of diagonal products.
    pub fn born_behavior(&self) -> Behavior {
        let s = &self.scenario;
        let tables = s
            .context_ids()
            .map(|ctx| {
                let members = s.context(ctx).expect("valid context");
                s.joint_outcomes(ctx)
                    .expect("valid context")
                    .iter()
                    .map(|j| {
                        (0..self.dimension())
                            .filter(|&l| members.iter().zip(&j.values).all(|(m, o)| self.responses[m.0][l] == *o))
                            .map(|l| self.rho[l].clone())
                            .sum()
                    })
                    .collect()
            })
            .collect();
        Behavior::new(s.clone(), tables).expect("diagonal Born rule yields normalized tables")
    }

    pub fn to_quantum(&self) -> QuantumRealization {
        let d = self.dimension();
        let rho = CMatrix::from_fn(d, d, |i, j| {
            if i == j { Complex64::new(rational::to_f64(&self.rho[i]), 0.0) } else { Complex64::zero() }
        });
        let projectors = (0..self.scenario.num_measurements())
            .map(|m| {
                (0..self.scenario.num_outcomes())
                    .map(|o| {
                        let diag = self.projector_diagonal(MeasurementId(m), OutcomeId(o));
                        CMatrix::from_fn(d, d, |i, j| {
                            if i == j && diag[i] { Complex64::one() } else { Complex64::zero() }
                        })
                    })
                    .collect()
            })
            .collect();
        QuantumRealization::new(self.scenario.clone(), rho, projectors, DEFAULT_TOLERANCE)
            .expect("diagonal lift is a valid realization")
    }
}

pub fn classical_to_diagonal(realization: &ClassicalRealization) -> DiagonalRealization {
    DiagonalRealization {
        scenario: realization.scenario.clone(),
        rho: realization.measure.clone(),
        responses: realization.responses.clone(),
    }
}

/// Diagonal lift with `dimension = |Λ|`.
pub fn classical_to_quantum(realization: &ClassicalRealization) -> QuantumRealization {
    classical_to_diagonal(realization).to_quantum()
}

/// Density matrix plus projective measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumRealization {
    scenario: Arc<Scenario>,
    rho: CMatrix,
    /// `projectors[A][s] = P^{(A)}_s`.
    projectors: Vec<Vec<CMatrix>>,
    observables: Vec<CMatrix>,
}

fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    (m - m.adjoint()).norm() <= tol
}

impl QuantumRealization {
    /// Checks the state (Hermitian, unit trace, PSD) and every measurement's
    /// projectors (Hermitian, idempotent, mutually orthogonal, summing to the
    /// identity) within `tolerance`.
    pub fn new(
        scenario: Arc<Scenario>,
        rho: CMatrix,
        projectors: Vec<Vec<CMatrix>>,
        tolerance: f64,
    ) -> Result<Self, RealizationError> {
        let d = rho.nrows();
        if d == 0 || rho.ncols() != d {
            return Err(RealizationError::DimensionMismatch(format!("ρ is {}x{}", rho.nrows(), rho.ncols())));
        }
        if projectors.len() != scenario.num_measurements() {
            return Err(RealizationError::DimensionMismatch(format!(
                "{} projector sets for {} measurements",
                projectors.len(),
                scenario.num_measurements()
            )));
        }
        if !is_hermitian(&rho, tolerance) {
            return Err(RealizationError::InvalidState("not Hermitian".into()));
        }
        let trace = rho.trace();
        if (trace - Complex64::one()).norm() > tolerance {
            return Err(RealizationError::InvalidState(format!("trace {trace}")));
        }
        let min_eigen = rho.clone().symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eigen < -tolerance {
            return Err(RealizationError::InvalidState(format!("negative eigenvalue {min_eigen:e}")));
        }

        let identity = CMatrix::identity(d, d);
        let mut observables = Vec::with_capacity(projectors.len());
        for (m, set) in projectors.iter().enumerate() {
            let label = scenario.measurement_label(MeasurementId(m)).to_string();
            let bad = |detail: String| RealizationError::InvalidProjectors { measurement: label.clone(), detail };
            if set.len() != scenario.num_outcomes() {
                return Err(bad(format!("{} projectors for {} outcomes", set.len(), scenario.num_outcomes())));
            }
            for (o, p) in set.iter().enumerate() {
                if p.nrows() != d || p.ncols() != d {
                    return Err(RealizationError::DimensionMismatch(format!(
                        "projector {label}/{} is {}x{}, expected {d}x{d}",
                        scenario.outcome_label(OutcomeId(o)),
                        p.nrows(),
                        p.ncols()
                    )));
                }
                if !is_hermitian(p, tolerance) {
                    return Err(bad(format!("P_{o} is not Hermitian")));
                }
                if (p * p - p).norm() > tolerance {
                    return Err(bad(format!("P_{o} is not idempotent")));
                }
                for (o2, q) in set.iter().enumerate().skip(o + 1) {
                    if (p * q).norm() > tolerance {
                        return Err(bad(format!("P_{o} and P_{o2} are not orthogonal")));
                    }
                }
            }
            let sum = set.iter().fold(CMatrix::zeros(d, d), |acc, p| acc + p);
            if (sum - &identity).norm() > tolerance {
                return Err(bad("projectors do not sum to the identity".into()));
            }
            let t = set.iter().enumerate().fold(CMatrix::zeros(d, d), |acc, (o, p)| {
                acc + p * Complex64::new(outcome_value(&scenario, OutcomeId(o)), 0.0)
            });
            observables.push(t);
        }
        Ok(QuantumRealization { scenario, rho, projectors, observables })
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn dimension(&self) -> usize {
        self.rho.nrows()
    }

    pub fn rho(&self) -> &CMatrix {
        &self.rho
    }

    pub fn projector(&self, m: MeasurementId, o: OutcomeId) -> &CMatrix {
        &self.projectors[m.0][o.0]
    }

    pub fn observable(&self, m: MeasurementId) -> &CMatrix {
        &self.observables[m.0]
    }

    /// Born-rule probability `tr(ρ ∏_{A∈C} P^{(A)}_{s_A})`, product taken in
    /// context order.
    pub fn born_probability(&self, ctx: ContextId, values: &[OutcomeId]) -> Result<f64, RealizationError> {
        let members = self.scenario.context(ctx)?;
        let d = self.dimension();
        let product = members
            .iter()
            .zip(values)
            .fold(CMatrix::identity(d, d), |acc, (m, o)| acc * &self.projectors[m.0][o.0]);
        Ok((&self.rho * product).trace().re)
    }

    pub fn to_doc(&self) -> QuantumDoc {
        let s = &self.scenario;
        QuantumDoc {
            version: SCHEMA_VERSION,
            scenario: ScenarioRef::Inline(s.to_doc()),
            dimension: self.dimension(),
            rho: matrix_to_rows(&self.rho),
            projectors: self
                .projectors
                .iter()
                .enumerate()
                .map(|(m, set)| {
                    (
                        s.measurement_label(MeasurementId(m)).to_string(),
                        set.iter()
                            .enumerate()
                            .map(|(o, p)| (s.outcome_label(OutcomeId(o)).to_string(), matrix_to_rows(p)))
                            .collect(),
                    )
                })
                .collect(),
        }
    }

    pub fn from_doc(doc: &QuantumDoc, tolerance: f64) -> Result<Self, RealizationError> {
        if doc.version != SCHEMA_VERSION {
            return Err(RealizationError::UnsupportedVersion(doc.version));
        }
        let scenario = Arc::new(doc.scenario.resolve()?);
        let d = doc.dimension;
        let rho = rows_to_matrix(&doc.rho, d, "rho")?;
        let mut projectors = Vec::with_capacity(scenario.num_measurements());
        for m in scenario.measurements() {
            let set = doc.projectors.get(m).ok_or_else(|| RealizationError::InvalidProjectors {
                measurement: m.clone(),
                detail: "missing".into(),
            })?;
            let mut mats = Vec::with_capacity(scenario.num_outcomes());
            for o in scenario.outcomes() {
                let rows = set.get(o).ok_or_else(|| RealizationError::InvalidProjectors {
                    measurement: m.clone(),
                    detail: format!("missing outcome {o:?}"),
                })?;
                mats.push(rows_to_matrix(rows, d, &format!("{m}/{o}"))?);
            }
            if set.len() != scenario.num_outcomes() {
                return Err(RealizationError::InvalidProjectors { measurement: m.clone(), detail: "unknown outcome key".into() });
            }
            projectors.push(mats);
        }
        if doc.projectors.len() != scenario.num_measurements() {
            return Err(RealizationError::Parse("projectors mention an unknown measurement".into()));
        }
        QuantumRealization::new(scenario, rho, projectors, tolerance)
    }
}

/// Row-major complex matrix, entries as `[re, im]`.
pub type MatrixRows = Vec<Vec<[f64; 2]>>;

fn matrix_to_rows(m: &CMatrix) -> MatrixRows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn rows_to_matrix(rows: &MatrixRows, d: usize, what: &str) -> Result<CMatrix, RealizationError> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(RealizationError::DimensionMismatch(format!("{what} is not {d}x{d}")));
    }
    Ok(CMatrix::from_fn(d, d, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassicalDoc {
    #[serde(default = "default_version")]
    pub version: u32,
    pub scenario: ScenarioRef,
    pub states: Vec<String>,
    pub measure: Vec<String>,
    pub responses: IndexMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuantumDoc {
    #[serde(default = "default_version")]
    pub version: u32,
    pub scenario: ScenarioRef,
    pub dimension: usize,
    pub rho: MatrixRows,
    pub projectors: IndexMap<String, IndexMap<String, MatrixRows>>,
}

fn default_version() -> u32 {
    SCHEMA_VERSION
}

/// First failing condition of [`verify_quantum`].
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumFailure {
    /// (a) an outcome has a zero projector, so the spectrum of `T_A` misses it.
    Spectrum { measurement: String, outcome: String, norm: f64 },
    /// (b) two observables of one context do not commute.
    Commutation { context: ContextId, first: String, second: String, norm: f64 },
    /// (c) the Born rule misses a table entry.
    BornRule { context: ContextId, outcome: String, expected: f64, found: f64 },
}

impl QuantumFailure {
    pub fn condition(&self) -> &'static str {
        match self {
            QuantumFailure::Spectrum { .. } => "a",
            QuantumFailure::Commutation { .. } => "b",
            QuantumFailure::BornRule { .. } => "c",
        }
    }

    pub fn describe(&self) -> String {
        match self {
            QuantumFailure::Spectrum { measurement, outcome, norm } => {
                format!("condition (a): projector of {measurement}={outcome} has norm {norm:e}")
            }
            QuantumFailure::Commutation { context, first, second, norm } => {
                format!("condition (b): ‖[T_{first}, T_{second}]‖ = {norm:e} in {context}")
            }
            QuantumFailure::BornRule { context, outcome, expected, found } => {
                format!("condition (c): p({outcome}|{context}) = {expected}, Born rule gives {found}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuantumReport {
    pub failure: Option<QuantumFailure>,
    /// Largest Born-rule deviation seen (only meaningful once (a) and (b) pass).
    pub max_deviation: f64,
}

impl QuantumReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Checks spectrum (a), commutation within contexts (b) and the Born rule (c)
/// in that order, stopping at the first failure.
pub fn verify_quantum(
    realization: &QuantumRealization,
    behavior: &Behavior,
    tolerance: f64,
) -> Result<QuantumReport, RealizationError> {
    if !same_scenario(&realization.scenario, behavior.scenario()) {
        return Err(RealizationError::ScenarioMismatch);
    }
    let s = &realization.scenario;

    for (m, set) in realization.projectors.iter().enumerate() {
        for (o, p) in set.iter().enumerate() {
            let norm = p.norm();
            if norm <= tolerance {
                return Ok(QuantumReport {
                    failure: Some(QuantumFailure::Spectrum {
                        measurement: s.measurement_label(MeasurementId(m)).to_string(),
                        outcome: s.outcome_label(OutcomeId(o)).to_string(),
                        norm,
                    }),
                    max_deviation: 0.0,
                });
            }
        }
    }

    for ctx in s.context_ids() {
        let members = s.context(ctx)?;
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                let (ta, tb) = (&realization.observables[a.0], &realization.observables[b.0]);
                let norm = (ta * tb - tb * ta).norm();
                if norm > tolerance {
                    return Ok(QuantumReport {
                        failure: Some(QuantumFailure::Commutation {
                            context: ctx,
                            first: s.measurement_label(*a).to_string(),
                            second: s.measurement_label(*b).to_string(),
                            norm,
                        }),
                        max_deviation: 0.0,
                    });
                }
            }
        }
    }

    let mut max_deviation: f64 = 0.0;
    for ctx in s.context_ids() {
        for j in s.joint_outcomes(ctx)? {
            let expected = rational::to_f64(behavior.prob(ctx, &j.values)?);
            let found = realization.born_probability(ctx, &j.values)?;
            let dev = (found - expected).abs();
            max_deviation = max_deviation.max(dev);
            if dev > tolerance {
                return Ok(QuantumReport {
                    failure: Some(QuantumFailure::BornRule {
                        context: ctx,
                        outcome: s.outcome_key(&j.values),
                        expected,
                        found,
                    }),
                    max_deviation,
                });
            }
        }
    }
    Ok(QuantumReport { failure: None, max_deviation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{generalized_coin_toss, rearranged_device_behavior};
    use crate::polytope::{decide_noncontextual, DecisionOptions};
    use crate::rational::ratio;
    use crate::scenario::{GlobalAssignment, DEFAULT_ENUMERATION_LIMIT, BOTTOM, TOP};

    fn five() -> Arc<Scenario> {
        generalized_coin_toss().scenario().clone()
    }

    fn alternating_section() -> GlobalDistribution {
        let s = five();
        let t = |l: &[&str]| GlobalAssignment { values: l.iter().map(|x| s.outcome_id(x).unwrap()).collect() };
        GlobalDistribution::from_support(
            s.clone(),
            &[(t(&[TOP, BOTTOM, TOP, BOTTOM, TOP]), ratio(1, 2)), (t(&[BOTTOM, TOP, BOTTOM, TOP, BOTTOM]), ratio(1, 2))],
            DEFAULT_ENUMERATION_LIMIT,
        )
        .unwrap()
    }

    fn single_state_all_top() -> ClassicalRealization {
        let s = five();
        let top = s.outcome_id(TOP).unwrap();
        ClassicalRealization::new(s, vec!["λ".into()], vec![Prob::one()], vec![vec![top]; 5]).unwrap()
    }

    #[test]
    fn global_section_realization_reproduces_rearranged_behavior() {
        let real = nc_to_classical(&alternating_section());
        assert_eq!(real.states().len(), 32);
        assert_eq!(real.measure().iter().filter(|w| !w.is_zero()).count(), 2);
        assert!(verify_classical(&real, &rearranged_device_behavior()).unwrap().passed());
    }

    #[test]
    fn single_state_realization() {
        let real = single_state_all_top();
        let s = real.scenario().clone();
        let all_top = Behavior::deterministic(s, &GlobalAssignment { values: vec![OutcomeId(1); 5] });
        assert!(verify_classical(&real, &all_top).unwrap().passed());
        let report = verify_classical(&real, &generalized_coin_toss()).unwrap();
        assert_eq!(report.discrepancies.len(), 5);
    }

    #[test]
    fn classical_constructor_rejects_bad_measures() {
        let s = five();
        let top = s.outcome_id(TOP).unwrap();
        assert!(matches!(
            ClassicalRealization::new(s.clone(), vec!["a".into()], vec![ratio(1, 2)], vec![vec![top]; 5]),
            Err(RealizationError::InvalidMeasure(_))
        ));
        assert!(matches!(
            ClassicalRealization::new(s.clone(), vec!["a".into()], vec![Prob::one()], vec![vec![top]; 4]),
            Err(RealizationError::InvalidResponse { .. })
        ));
        assert!(matches!(
            ClassicalRealization::new(s, vec!["a".into()], vec![Prob::one()], vec![vec![OutcomeId(7)]; 5]),
            Err(RealizationError::InvalidResponse { .. })
        ));
    }

    #[test]
    fn diagonal_lift_matches_exactly_and_numerically() {
        let real = nc_to_classical(&alternating_section());
        let diag = classical_to_diagonal(&real);
        assert_eq!(diag.born_behavior(), rearranged_device_behavior());
        let q = classical_to_quantum(&real);
        assert_eq!(q.dimension(), 32);
        let report = verify_quantum(&q, &rearranged_device_behavior(), DEFAULT_TOLERANCE).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn point_mass_lift_has_rank_one_state() {
        let q = classical_to_quantum(&single_state_all_top());
        assert_eq!(q.dimension(), 1);
        let s = q.scenario().clone();
        let all_top = Behavior::deterministic(s.clone(), &GlobalAssignment { values: vec![OutcomeId(1); 5] });
        assert_eq!(classical_to_diagonal(&single_state_all_top()).born_behavior(), all_top);
        for ctx in s.context_ids() {
            for j in s.joint_outcomes(ctx).unwrap() {
                let expected = rational::to_f64(all_top.prob(ctx, &j.values).unwrap());
                assert_eq!(q.born_probability(ctx, &j.values).unwrap(), expected);
            }
        }
        // One hidden state leaves ⊥ with a zero projector, so the spectrum misses it.
        let report = verify_quantum(&q, &all_top, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(report.failure.unwrap().condition(), "a");
    }

    #[test]
    fn lifted_observables_commute_and_use_sign_encoding() {
        let q = classical_to_quantum(&nc_to_classical(&alternating_section()));
        let s = q.scenario().clone();
        for c in s.contexts() {
            let (a, b) = (q.observable(c[0]), q.observable(c[1]));
            assert!((a * b - b * a).norm() == 0.0);
        }
        // state "⊤,⊥,⊤,⊥,⊤" sits at global rank 0b10101 = 21
        let t0 = q.observable(MeasurementId(0));
        assert_eq!(t0[(21, 21)].re, 1.0);
        assert_eq!(t0[(0, 0)].re, -1.0);
    }

    /// Swap states λ, λ' in both projectors of one measurement, i.e. change
    /// `f_A` at two points.
    fn swap_response(q: &QuantumRealization, m: usize, l1: usize, l2: usize) -> QuantumRealization {
        let mut projectors = q.projectors.clone();
        for p in projectors[m].iter_mut() {
            let (a, b) = (p[(l1, l1)], p[(l2, l2)]);
            p[(l1, l1)] = b;
            p[(l2, l2)] = a;
        }
        QuantumRealization::new(q.scenario.clone(), q.rho.clone(), projectors, DEFAULT_TOLERANCE).unwrap()
    }

    #[test]
    fn swapped_projector_entries_fail_born_rule() {
        let q = classical_to_quantum(&nc_to_classical(&alternating_section()));
        // state 21 carries weight 1/2 and has A0 = ⊤; state 0 has weight 0 and A0 = ⊥
        let bad = swap_response(&q, 0, 21, 0);
        let report = verify_quantum(&bad, &rearranged_device_behavior(), DEFAULT_TOLERANCE).unwrap();
        let failure = report.failure.unwrap();
        assert_eq!(failure.condition(), "c");
        // C0 = (A0, A1): A0 flips to ⊥ on the weighted state, so p(⊥,⊥|C0)
        // becomes 1/2 against an expected 0.
        assert!(matches!(failure, QuantumFailure::BornRule { context: ContextId(0), ref outcome, expected, found }
            if outcome == "⊥,⊥" && expected == 0.0 && (found - 0.5).abs() < 1e-12));
    }

    #[test]
    fn non_commuting_context_fails_condition_b() {
        // Qubit: A0 measured in the Z basis, A1 in the X basis.
        let s = Arc::new(Scenario::n_cycle(3).unwrap());
        let c = |re: f64| Complex64::new(re, 0.0);
        let z0 = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        let z1 = CMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(1.0)]);
        let xp = CMatrix::from_row_slice(2, 2, &[c(0.5), c(0.5), c(0.5), c(0.5)]);
        let xm = CMatrix::from_row_slice(2, 2, &[c(0.5), c(-0.5), c(-0.5), c(0.5)]);
        let rho = z0.clone();
        let q = QuantumRealization::new(
            s.clone(),
            rho,
            vec![vec![z0.clone(), z1.clone()], vec![xm, xp], vec![z0, z1]],
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        let b = crate::behavior::anticorrelated_cycle(3);
        let report = verify_quantum(&q, &b, DEFAULT_TOLERANCE).unwrap();
        let failure = report.failure.unwrap();
        assert_eq!(failure.condition(), "b");
        assert!(matches!(failure, QuantumFailure::Commutation { context: ContextId(0), .. }));
    }

    #[test]
    fn zero_projector_fails_condition_a() {
        let s = Arc::new(Scenario::n_cycle(3).unwrap());
        let one = CMatrix::identity(1, 1);
        let zero = CMatrix::zeros(1, 1);
        let q = QuantumRealization::new(
            s.clone(),
            one.clone(),
            vec![vec![zero.clone(), one.clone()]; 3],
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        let all_top = Behavior::deterministic(s, &GlobalAssignment { values: vec![OutcomeId(1); 3] });
        let report = verify_quantum(&q, &all_top, DEFAULT_TOLERANCE).unwrap();
        assert_eq!(report.failure.unwrap().condition(), "a");
    }

    #[test]
    fn invalid_states_and_projectors_rejected() {
        let s = Arc::new(Scenario::n_cycle(3).unwrap());
        let c = |re: f64| Complex64::new(re, 0.0);
        let id = CMatrix::identity(2, 2);
        let z0 = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)]);
        let z1 = CMatrix::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.0), c(1.0)]);
        let good = vec![vec![z0.clone(), z1.clone()]; 3];
        // trace 2
        assert!(matches!(
            QuantumRealization::new(s.clone(), id.clone(), good.clone(), DEFAULT_TOLERANCE),
            Err(RealizationError::InvalidState(_))
        ));
        // negative eigenvalue
        let neg = CMatrix::from_row_slice(2, 2, &[c(1.5), c(0.0), c(0.0), c(-0.5)]);
        assert!(matches!(
            QuantumRealization::new(s.clone(), neg, good.clone(), DEFAULT_TOLERANCE),
            Err(RealizationError::InvalidState(_))
        ));
        // incomplete projectors
        let bad = vec![vec![z0.clone(), z0.clone()]; 3];
        assert!(matches!(
            QuantumRealization::new(s.clone(), z0.clone(), bad, DEFAULT_TOLERANCE),
            Err(RealizationError::InvalidProjectors { .. })
        ));
        // wrong dimension
        let small = vec![vec![CMatrix::identity(1, 1), CMatrix::zeros(1, 1)]; 3];
        assert!(matches!(
            QuantumRealization::new(s, z0, small, DEFAULT_TOLERANCE),
            Err(RealizationError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn decided_witness_round_trips_through_both_lifts() {
        let b = rearranged_device_behavior();
        let witness = decide_noncontextual(&b, DecisionOptions::default()).unwrap().witness().unwrap().clone();
        let real = nc_to_classical(&witness);
        assert!(verify_classical(&real, &b).unwrap().passed());
        assert!(verify_quantum(&classical_to_quantum(&real), &b, DEFAULT_TOLERANCE).unwrap().passed());
    }

    #[test]
    fn documents_roundtrip() {
        let real = nc_to_classical(&alternating_section());
        let json = serde_json::to_string(&real.to_doc()).unwrap();
        let back = ClassicalRealization::from_doc(&serde_json::from_str(&json).unwrap()).unwrap();
        assert_eq!(back, real);

        let q = classical_to_quantum(&single_state_all_top());
        let json = serde_json::to_string(&q.to_doc()).unwrap();
        let back = QuantumRealization::from_doc(&serde_json::from_str(&json).unwrap(), DEFAULT_TOLERANCE).unwrap();
        assert_eq!(back, q);
    }
}
