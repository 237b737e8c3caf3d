//! The noncontextual polytope.
//!
//! A behavior is noncontextual when some distribution on global assignments
//! `O^A` has every context table as its marginal. [`decide_noncontextual`]
//! poses that as the feasibility problem
//!
//! ```text
//!   Σ_{t : t|_C = s} q(t) = p(s|C)    for every context C and s ∈ O^C
//!   q(t) >= 0
//! ```
//!
//! (global normalization is implied by any one context's rows) and solves it
//! exactly. A feasible point is returned as a [`GlobalDistribution`]; an
//! infeasible system yields Farkas multipliers, which are exactly the
//! coefficients of a linear inequality that every deterministic vertex
//! satisfies and the input violates.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{Behavior, BehaviorError};
use crate::rational::{self, Prob};
use crate::scenario::{
    ContextId, GlobalAssignment, Scenario, ScenarioError, DEFAULT_ENUMERATION_LIMIT, SCHEMA_VERSION,
};
use crate::simplex::{self, Feasibility};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolytopeError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error("objects refer to different scenarios")]
    ScenarioMismatch,
    #[error("an inequality needs at least one nonzero coefficient")]
    ZeroInequality,
    #[error("coefficient table has the wrong shape")]
    WrongShape,
    #[error("global distribution is not a probability distribution: {0}")]
    NotADistribution(String),
    #[error("{0}")]
    Parse(String),
}

fn same_scenario(a: &Arc<Scenario>, b: &Arc<Scenario>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Distribution on `O^A`, stored densely in global-rank order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GlobalDistribution {
    scenario: Arc<Scenario>,
    table: Vec<Prob>,
}

impl GlobalDistribution {
    pub fn new(scenario: Arc<Scenario>, table: Vec<Prob>) -> Result<Self, PolytopeError> {
        let expected = scenario.check_enumeration_limit(usize::MAX)?;
        if table.len() != expected {
            return Err(PolytopeError::WrongShape);
        }
        if let Some(p) = table.iter().find(|p| !rational::is_probability(p)) {
            return Err(PolytopeError::NotADistribution(format!("entry {}", rational::format(p))));
        }
        let sum: Prob = table.iter().sum();
        if !sum.is_one() {
            return Err(PolytopeError::NotADistribution(format!("sums to {}", rational::format(&sum))));
        }
        Ok(GlobalDistribution { scenario, table })
    }

    /// Builds a distribution from its support. Repeated assignments add up.
    pub fn from_support(
        scenario: Arc<Scenario>,
        support: &[(GlobalAssignment, Prob)],
        limit: usize,
    ) -> Result<Self, PolytopeError> {
        let n = scenario.check_enumeration_limit(limit)?;
        let mut table = vec![Prob::zero(); n];
        for (t, p) in support {
            if t.values.len() != scenario.num_measurements()
                || t.values.iter().any(|o| o.0 >= scenario.num_outcomes())
            {
                return Err(PolytopeError::WrongShape);
            }
            table[scenario.global_rank(t)] += p;
        }
        GlobalDistribution::new(scenario, table)
    }

    pub fn point_mass(scenario: Arc<Scenario>, t: &GlobalAssignment) -> Result<Self, PolytopeError> {
        GlobalDistribution::from_support(scenario, &[(t.clone(), Prob::one())], usize::MAX)
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn table(&self) -> &[Prob] {
        &self.table
    }

    pub fn prob(&self, t: &GlobalAssignment) -> &Prob {
        &self.table[self.scenario.global_rank(t)]
    }

    /// Nonzero entries in global-rank order.
    pub fn support(&self) -> Vec<(GlobalAssignment, Prob)> {
        self.table
            .iter()
            .enumerate()
            .filter(|(_, p)| !p.is_zero())
            .map(|(k, p)| (self.scenario.global_assignment(k), p.clone()))
            .collect()
    }

    /// `q_C`: the marginal on a context.
    pub fn marginal(&self, ctx: ContextId) -> Result<Vec<Prob>, PolytopeError> {
        let mut out = vec![Prob::zero(); self.scenario.joint_outcome_count(ctx)?];
        for (k, p) in self.table.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let t = self.scenario.global_assignment(k);
            out[self.scenario.restriction_rank(&t, ctx)] += p;
        }
        Ok(out)
    }

    /// The behavior whose tables are this distribution's context marginals.
    pub fn induced_behavior(&self) -> Behavior {
        let tables = self
            .scenario
            .context_ids()
            .map(|c| self.marginal(c).expect("valid context"))
            .collect();
        Behavior::new(self.scenario.clone(), tables).expect("marginals of a distribution are normalized")
    }

    pub fn to_doc(&self) -> GlobalDistributionDoc {
        let s = &self.scenario;
        GlobalDistributionDoc {
            support: self
                .support()
                .into_iter()
                .map(|(t, p)| SupportEntry {
                    assignment: (0..s.num_measurements())
                        .map(|m| {
                            (s.measurements()[m].clone(), s.outcome_label(t.values[m]).to_string())
                        })
                        .collect(),
                    probability: rational::format(&p),
                })
                .collect(),
        }
    }

    pub fn from_doc(scenario: Arc<Scenario>, doc: &GlobalDistributionDoc) -> Result<Self, PolytopeError> {
        let support = doc
            .support
            .iter()
            .map(|e| {
                let t = scenario.assignment_from_labels(
                    e.assignment.iter().map(|(m, o)| (m.as_str(), o.as_str())),
                )?;
                let p = rational::parse(&e.probability).map_err(|e| PolytopeError::Parse(e.to_string()))?;
                Ok((t, p))
            })
            .collect::<Result<Vec<_>, PolytopeError>>()?;
        GlobalDistribution::from_support(scenario, &support, DEFAULT_ENUMERATION_LIMIT)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportEntry {
    pub assignment: indexmap::IndexMap<String, String>,
    pub probability: String,
}

/// Sparse JSON form of a [`GlobalDistribution`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalDistributionDoc {
    pub support: Vec<SupportEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<=")]
    AtMost,
}

impl Direction {
    pub fn holds(self, value: &Prob, bound: &Prob) -> bool {
        match self {
            Direction::AtLeast => value >= bound,
            Direction::AtMost => value <= bound,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Direction::AtLeast => ">=",
            Direction::AtMost => "<=",
        }
    }
}

/// `Σ_{C,s} c(C,s) p(s|C)  (>= | <=)  bound`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NCInequality {
    scenario: Arc<Scenario>,
    coefficients: Vec<Vec<Prob>>,
    bound: Prob,
    direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub value: Prob,
    pub bound: Prob,
    pub direction: Direction,
    pub satisfied: bool,
}

impl NCInequality {
    pub fn new(
        scenario: Arc<Scenario>,
        coefficients: Vec<Vec<Prob>>,
        bound: Prob,
        direction: Direction,
    ) -> Result<Self, PolytopeError> {
        if coefficients.len() != scenario.num_contexts() {
            return Err(PolytopeError::WrongShape);
        }
        for (ci, row) in coefficients.iter().enumerate() {
            if row.len() != scenario.joint_outcome_count(ContextId(ci))? {
                return Err(PolytopeError::WrongShape);
            }
        }
        if coefficients.iter().flatten().all(Zero::is_zero) {
            return Err(PolytopeError::ZeroInequality);
        }
        Ok(NCInequality { scenario, coefficients, bound, direction })
    }

    /// Same functional with the bound replaced by its extreme value over the
    /// deterministic vertices, i.e. the tightest valid bound.
    pub fn with_classical_bound(self, limit: usize) -> Result<Self, PolytopeError> {
        let (min, max) = vertex_range(&self.scenario, &self.coefficients, limit)?;
        let bound = match self.direction {
            Direction::AtLeast => min,
            Direction::AtMost => max,
        };
        Ok(NCInequality { bound, ..self })
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn coefficients(&self) -> &[Vec<Prob>] {
        &self.coefficients
    }

    pub fn bound(&self) -> &Prob {
        &self.bound
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    /// `Σ c · p` without the comparison.
    pub fn functional(&self, behavior: &Behavior) -> Result<Prob, PolytopeError> {
        if !same_scenario(&self.scenario, behavior.scenario()) {
            return Err(PolytopeError::ScenarioMismatch);
        }
        Ok(self
            .coefficients
            .iter()
            .zip(behavior.tables())
            .flat_map(|(c, t)| c.iter().zip(t))
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, p)| c * p)
            .sum())
    }

    pub fn evaluate(&self, behavior: &Behavior) -> Result<Evaluation, PolytopeError> {
        let value = self.functional(behavior)?;
        Ok(Evaluation {
            satisfied: self.direction.holds(&value, &self.bound),
            value,
            bound: self.bound.clone(),
            direction: self.direction,
        })
    }

    pub fn to_doc(&self, value: Option<&Prob>) -> InequalityDoc {
        let s = &self.scenario;
        InequalityDoc {
            coefficients: s
                .context_ids()
                .map(|ctx| {
                    let entries = s
                        .joint_outcomes(ctx)
                        .expect("valid context")
                        .iter()
                        .zip(&self.coefficients[ctx.0])
                        .filter(|(_, c)| !c.is_zero())
                        .map(|(j, c)| (s.outcome_key(&j.values), rational::format(c)))
                        .collect();
                    (ctx.to_string(), entries)
                })
                .collect(),
            bound: rational::format(&self.bound),
            direction: self.direction,
            value: value.map(rational::format),
        }
    }
}

/// JSON form of an [`NCInequality`]; `value` is filled in on certificates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InequalityDoc {
    pub coefficients: indexmap::IndexMap<String, indexmap::IndexMap<String, String>>,
    pub bound: String,
    pub direction: Direction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

/// `evaluate_inequality` as a free function.
pub fn evaluate_inequality(behavior: &Behavior, inequality: &NCInequality) -> Result<Evaluation, PolytopeError> {
    inequality.evaluate(behavior)
}

/// Smallest and largest value of a coefficient functional over all
/// deterministic behaviors.
fn vertex_range(
    scenario: &Scenario,
    coefficients: &[Vec<Prob>],
    limit: usize,
) -> Result<(Prob, Prob), PolytopeError> {
    let n = scenario.check_enumeration_limit(limit)?;
    let mut range: Option<(Prob, Prob)> = None;
    for k in 0..n {
        let t = scenario.global_assignment(k);
        let v: Prob = scenario
            .context_ids()
            .map(|c| coefficients[c.0][scenario.restriction_rank(&t, c)].clone())
            .sum();
        range = Some(match range {
            None => (v.clone(), v),
            Some((lo, hi)) => (if v < lo { v.clone() } else { lo }, if v > hi { v } else { hi }),
        });
    }
    Ok(range.expect("at least one global assignment"))
}

/// The `|O|^|A|` behaviors induced by point-mass global distributions: the
/// vertices of the noncontextual polytope.
pub fn deterministic_vertices(scenario: &Arc<Scenario>, limit: usize) -> Result<Vec<Behavior>, PolytopeError> {
    Ok(scenario
        .global_assignments(limit)?
        .iter()
        .map(|t| Behavior::deterministic(scenario.clone(), t))
        .collect())
}

/// The correlation-sum inequality `Σ_i ⟨A_i A_{i+1}⟩ >= bound` on the n-cycle,
/// with `⊤ ↦ +1, ⊥ ↦ −1`: coefficient `+1` on equal-outcome pairs and `−1`
/// on unequal ones. The bound is computed by vertex enumeration.
pub fn cycle_correlation_inequality(n: usize) -> Result<NCInequality, PolytopeError> {
    let scenario = Arc::new(Scenario::n_cycle(n)?);
    let coefficients = scenario
        .context_ids()
        .map(|ctx| {
            scenario
                .joint_outcomes(ctx)
                .expect("valid context")
                .iter()
                .map(|j| if j.values[0] == j.values[1] { Prob::one() } else { -Prob::one() })
                .collect()
        })
        .collect();
    NCInequality::new(scenario, coefficients, Prob::zero(), Direction::AtLeast)?
        .with_classical_bound(DEFAULT_ENUMERATION_LIMIT)
}

/// KCBS in correlation form on the 5-cycle: `Σ_{i=0}^{4} ⟨A_i A_{i+1}⟩ >= −3`.
pub fn kcbs_inequality() -> NCInequality {
    cycle_correlation_inequality(5).expect("5-cycle is small")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecisionOptions {
    /// Maximum number of LP columns (`|O|^|A|`).
    pub enumeration_limit: usize,
}

impl Default for DecisionOptions {
    fn default() -> Self {
        DecisionOptions { enumeration_limit: DEFAULT_ENUMERATION_LIMIT }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Noncontextual,
    Contextual,
}

/// Outcome of [`decide_noncontextual`]: a witness or a certificate, never both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NCDecision {
    Noncontextual { witness: GlobalDistribution },
    Contextual { certificate: NCInequality, value: Prob },
}

impl NCDecision {
    pub fn verdict(&self) -> Verdict {
        match self {
            NCDecision::Noncontextual { .. } => Verdict::Noncontextual,
            NCDecision::Contextual { .. } => Verdict::Contextual,
        }
    }

    pub fn is_noncontextual(&self) -> bool {
        self.verdict() == Verdict::Noncontextual
    }

    pub fn witness(&self) -> Option<&GlobalDistribution> {
        match self {
            NCDecision::Noncontextual { witness } => Some(witness),
            NCDecision::Contextual { .. } => None,
        }
    }

    pub fn certificate(&self) -> Option<&NCInequality> {
        match self {
            NCDecision::Contextual { certificate, .. } => Some(certificate),
            NCDecision::Noncontextual { .. } => None,
        }
    }

    pub fn to_doc(&self) -> DecisionDoc {
        match self {
            NCDecision::Noncontextual { witness } => DecisionDoc {
                version: SCHEMA_VERSION,
                verdict: Verdict::Noncontextual,
                witness: Some(witness.to_doc()),
                certificate: None,
                kcbs: None,
            },
            NCDecision::Contextual { certificate, value } => DecisionDoc {
                version: SCHEMA_VERSION,
                verdict: Verdict::Contextual,
                witness: None,
                certificate: Some(certificate.to_doc(Some(value))),
                kcbs: None,
            },
        }
    }
}

/// JSON form of an [`NCDecision`]. `kcbs` is attached by callers when the
/// scenario is the 5-cycle.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecisionDoc {
    pub version: u32,
    pub verdict: Verdict,
    pub witness: Option<GlobalDistributionDoc>,
    pub certificate: Option<InequalityDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kcbs: Option<KcbsDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KcbsDoc {
    pub value: String,
    pub bound: String,
    pub violated: bool,
}

impl KcbsDoc {
    pub fn from_evaluation(e: &Evaluation) -> Self {
        KcbsDoc { value: rational::format(&e.value), bound: rational::format(&e.bound), violated: !e.satisfied }
    }
}

/// Marginal-problem constraint rows, one per (context, joint outcome), over
/// columns indexed by global rank. Exact duplicate rows are dropped.
type ConstraintRows = (Vec<Vec<Prob>>, Vec<Prob>, Vec<(ContextId, usize)>);

fn constraint_rows(behavior: &Behavior, n_columns: usize) -> ConstraintRows {
    let s = behavior.scenario();
    let mut rows: Vec<Vec<Prob>> = Vec::new();
    let mut rhs = Vec::new();
    let mut labels = Vec::new();
    for ctx in s.context_ids() {
        let count = s.joint_outcome_count(ctx).expect("valid context");
        let ranks: Vec<usize> = (0..n_columns).map(|col| s.restriction_rank(&s.global_assignment(col), ctx)).collect();
        for k in 0..count {
            let row: Vec<Prob> = ranks.iter().map(|&r| if r == k { Prob::one() } else { Prob::zero() }).collect();
            let b = behavior.tables()[ctx.0][k].clone();
            let duplicate = rows.iter().zip(&rhs).any(|(r, v)| *r == row && *v == b);
            if !duplicate {
                rows.push(row);
                rhs.push(b);
                labels.push((ctx, k));
            }
        }
    }
    (rows, rhs, labels)
}

/// Decides whether `behavior` is noncontextual.
///
/// Disturbing behaviors are valid input; they come out contextual with a
/// certificate like any other.
pub fn decide_noncontextual(behavior: &Behavior, options: DecisionOptions) -> Result<NCDecision, PolytopeError> {
    let s = behavior.scenario().clone();
    let n = s.check_enumeration_limit(options.enumeration_limit)?;
    let (rows, rhs, labels) = constraint_rows(behavior, n);

    match simplex::solve_feasibility(&rows, &rhs) {
        Feasibility::Feasible(x) => {
            let witness = GlobalDistribution::new(s, x)?;
            Ok(NCDecision::Noncontextual { witness })
        }
        Feasibility::Infeasible(y) => {
            debug_assert!(simplex::is_farkas_certificate(&rows, &rhs, &y));
            // yᵀA <= 0 on every vertex column and yᵀb > 0, so with c = −y the
            // functional is >= 0 on the polytope and < 0 at the behavior.
            let y = rational::normalize_integer(&y);
            let mut coefficients: Vec<Vec<Prob>> = s
                .context_ids()
                .map(|c| vec![Prob::zero(); s.joint_outcome_count(c).expect("valid context")])
                .collect();
            for ((ctx, k), yi) in labels.iter().zip(&y) {
                coefficients[ctx.0][*k] = -yi;
            }
            let certificate = NCInequality::new(s, coefficients, Prob::zero(), Direction::AtLeast)?
                .with_classical_bound(options.enumeration_limit)?;
            let value = certificate.functional(behavior)?;
            debug_assert!(value.is_negative() && value < certificate.bound);
            Ok(NCDecision::Contextual { certificate, value })
        }
    }
}

/// Per-context mismatch between a behavior and a candidate global section.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextDiscrepancy {
    pub context: ContextId,
    pub expected: Vec<Prob>,
    pub found: Vec<Prob>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SectionReport {
    pub discrepancies: Vec<ContextDiscrepancy>,
}

impl SectionReport {
    pub fn is_global_section(&self) -> bool {
        self.discrepancies.is_empty()
    }
}

/// Checks `p(·|C) = q_C` exactly for every context.
pub fn verify_global_section(
    behavior: &Behavior,
    candidate: &GlobalDistribution,
) -> Result<SectionReport, PolytopeError> {
    if !same_scenario(behavior.scenario(), candidate.scenario()) {
        return Err(PolytopeError::ScenarioMismatch);
    }
    let mut discrepancies = Vec::new();
    for ctx in behavior.scenario().context_ids() {
        let found = candidate.marginal(ctx)?;
        let expected = behavior.table(ctx)?.to_vec();
        if found != expected {
            discrepancies.push(ContextDiscrepancy { context: ctx, expected, found });
        }
    }
    Ok(SectionReport { discrepancies })
}

/// Quick sign check used in reports: is the certificate strictly violated
/// and satisfied by every vertex?
pub fn certificate_is_sound(
    certificate: &NCInequality,
    behavior: &Behavior,
    limit: usize,
) -> Result<bool, PolytopeError> {
    if certificate.evaluate(behavior)?.satisfied {
        return Ok(false);
    }
    for v in deterministic_vertices(behavior.scenario(), limit)? {
        if !certificate.evaluate(&v)?.satisfied {
            return Ok(false);
        }
    }
    Ok(true)
}
