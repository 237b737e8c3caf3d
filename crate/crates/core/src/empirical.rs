//! Counts from simulated trials and their statistical analysis.
//!
//! Joint and sequential presses are tallied into separate per-context tables;
//! single presses into per-measurement tallies. A table source is turned into
//! an exact behavior by dividing each count by its context's trial total.

use std::sync::Arc;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{Behavior, BehaviorDoc, BehaviorError};
use crate::device::{PressMode, TrialRecord};
use crate::polytope::{cycle_correlation_inequality, decide_noncontextual, DecisionDoc, DecisionOptions, NCDecision, PolytopeError};
use crate::rational;
use crate::scenario::{rank, ContextId, MeasurementId, OutcomeId, Scenario, ScenarioError, SCHEMA_VERSION};

/// Two-sided 95% normal quantile.
pub const DEFAULT_Z: f64 = 1.96;
/// Marginal differences beyond this many standard errors count as disturbance.
pub const DEFAULT_DISTURBANCE_SIGMAS: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmpiricalError {
    #[error("no {data} data for context(s) {}", .contexts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", "))]
    MissingContextData { data: DataSource, contexts: Vec<ContextId> },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error(transparent)]
    Polytope(#[from] PolytopeError),
    #[error("counts annex: {0}")]
    Annex(String),
}

/// Which per-context tables to read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataSource {
    Joint,
    Sequential,
}

impl std::fmt::Display for DataSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DataSource::Joint => "joint",
            DataSource::Sequential => "sequential",
        })
    }
}

/// Raw counts attached to an exported behavior.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CountsAnnex {
    pub kind: DataSource,
    pub totals: IndexMap<String, u64>,
    pub counts: IndexMap<String, IndexMap<String, u64>>,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub singles: IndexMap<String, IndexMap<String, u64>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalBehavior {
    scenario: Arc<Scenario>,
    joint: Vec<Vec<u64>>,
    sequential: Vec<Vec<u64>>,
    /// `single[A][o]`.
    single: Vec<Vec<u64>>,
}

impl EmpiricalBehavior {
    pub fn new(scenario: Arc<Scenario>) -> Self {
        let tables: Vec<Vec<u64>> = scenario
            .context_ids()
            .map(|c| vec![0; scenario.joint_outcome_count(c).expect("valid context")])
            .collect();
        let single = vec![vec![0; scenario.num_outcomes()]; scenario.num_measurements()];
        EmpiricalBehavior { joint: tables.clone(), sequential: tables, single, scenario }
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    fn tables(&self, source: DataSource) -> &[Vec<u64>] {
        match source {
            DataSource::Joint => &self.joint,
            DataSource::Sequential => &self.sequential,
        }
    }

    /// Adds one trial. Sequential readings are stored in the shared
    /// context's measurement order, whatever the press order was.
    pub fn record(&mut self, trial: &TrialRecord) {
        let base = self.scenario.num_outcomes();
        match (trial.press.mode(), trial.table_context) {
            (PressMode::Single, _) => {
                for r in &trial.readings {
                    self.single[r.measurement.0][r.outcome.0] += 1;
                }
            }
            (mode, Some(ctx)) => {
                let members = &self.scenario.contexts()[ctx.0];
                let values: Vec<OutcomeId> = members
                    .iter()
                    .map(|m| {
                        trial.readings.iter().find(|r| r.measurement == *m).expect("trial reads every member").outcome
                    })
                    .collect();
                let tables = if mode == PressMode::Joint { &mut self.joint } else { &mut self.sequential };
                tables[ctx.0][rank(&values, base)] += 1;
            }
            (_, None) => unreachable!("joint and sequential trials name their table context"),
        }
    }

    /// Adds another tally on the same scenario.
    pub fn merge(&mut self, other: &EmpiricalBehavior) {
        assert_eq!(self.scenario, other.scenario, "merging tallies of different scenarios");
        for (mine, theirs) in [(&mut self.joint, &other.joint), (&mut self.sequential, &other.sequential), (&mut self.single, &other.single)] {
            for (a, b) in mine.iter_mut().zip(theirs) {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
        }
    }

    pub fn counts(&self, source: DataSource, ctx: ContextId) -> &[u64] {
        &self.tables(source)[ctx.0]
    }

    pub fn total(&self, source: DataSource, ctx: ContextId) -> u64 {
        self.counts(source, ctx).iter().sum()
    }

    pub fn single_counts(&self, m: MeasurementId) -> &[u64] {
        &self.single[m.0]
    }

    /// `counts / total` per context; empty contexts give an empty table.
    pub fn frequencies(&self, source: DataSource) -> Vec<Vec<f64>> {
        self.tables(source)
            .iter()
            .map(|t| {
                let total: u64 = t.iter().sum();
                if total == 0 { Vec::new() } else { t.iter().map(|&c| c as f64 / total as f64).collect() }
            })
            .collect()
    }

    pub fn has_data(&self, source: DataSource) -> bool {
        self.tables(source).iter().any(|t| t.iter().any(|&c| c > 0))
    }

    fn missing(&self, source: DataSource) -> Result<(), EmpiricalError> {
        let contexts: Vec<ContextId> = self.scenario.context_ids().filter(|&c| self.total(source, c) == 0).collect();
        if contexts.is_empty() { Ok(()) } else { Err(EmpiricalError::MissingContextData { data: source, contexts }) }
    }

    /// Exact behavior with `p(s|C) = count / total(C)`.
    pub fn rationalize(&self, source: DataSource) -> Result<Behavior, EmpiricalError> {
        self.missing(source)?;
        let tables = self
            .tables(source)
            .iter()
            .map(|t| {
                let total = t.iter().sum();
                t.iter().map(|&c| rational::frequency(c, total)).collect()
            })
            .collect();
        Ok(Behavior::new(self.scenario.clone(), tables)?)
    }

    pub fn annex(&self, source: DataSource) -> CountsAnnex {
        let s = &self.scenario;
        let mut totals = IndexMap::new();
        let mut counts = IndexMap::new();
        for ctx in s.context_ids() {
            totals.insert(ctx.to_string(), self.total(source, ctx));
            let entries = s
                .joint_outcomes(ctx)
                .expect("valid context")
                .iter()
                .zip(self.counts(source, ctx))
                .map(|(j, &c)| (s.outcome_key(&j.values), c))
                .collect();
            counts.insert(ctx.to_string(), entries);
        }
        let singles = if self.single.iter().flatten().any(|&c| c > 0) {
            self.single
                .iter()
                .enumerate()
                .map(|(m, t)| {
                    let entries = t.iter().enumerate().map(|(o, &c)| (s.outcome_label(OutcomeId(o)).to_string(), c)).collect();
                    (s.measurement_label(MeasurementId(m)).to_string(), entries)
                })
                .collect()
        } else {
            IndexMap::new()
        };
        CountsAnnex { kind: source, totals, counts, singles }
    }

    /// Rationalized behavior document carrying the raw counts.
    pub fn export(&self, source: DataSource) -> Result<BehaviorDoc, EmpiricalError> {
        let mut doc = self.rationalize(source)?.to_doc();
        doc.counts = Some(self.annex(source));
        Ok(doc)
    }

    /// Rebuilds the tally of an exported document from its counts annex.
    pub fn from_doc(doc: &BehaviorDoc) -> Result<Option<EmpiricalBehavior>, EmpiricalError> {
        let Some(annex) = &doc.counts else { return Ok(None) };
        let scenario = Arc::new(doc.scenario.resolve()?);
        let mut e = EmpiricalBehavior::new(scenario.clone());
        let bad = |m: String| EmpiricalError::Annex(m);
        for (key, entries) in &annex.counts {
            let ctx = ContextId::parse(key)
                .filter(|c| c.0 < scenario.num_contexts())
                .ok_or_else(|| bad(format!("unknown context {key}")))?;
            let len = scenario.context(ctx)?.len();
            for (outcome, &c) in entries {
                let values = scenario.parse_outcome_key(outcome, len).map_err(|_| bad(format!("{key}/{outcome}")))?;
                let k = rank(&values, scenario.num_outcomes());
                match annex.kind {
                    DataSource::Joint => e.joint[ctx.0][k] = c,
                    DataSource::Sequential => e.sequential[ctx.0][k] = c,
                }
            }
            if annex.totals.get(key) != Some(&e.total(annex.kind, ctx)) {
                return Err(bad(format!("total of {key} does not match its counts")));
            }
        }
        for (label, entries) in &annex.singles {
            let m = scenario.measurement_id(label)?;
            for (outcome, &c) in entries {
                e.single[m.0][scenario.outcome_id(outcome)?.0] = c;
            }
        }
        Ok(Some(e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub source: DataSource,
    pub z: f64,
    pub disturbance_sigmas: f64,
    pub decision: DecisionOptions,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        CertifyOptions {
            source: DataSource::Joint,
            z: DEFAULT_Z,
            disturbance_sigmas: DEFAULT_DISTURBANCE_SIGMAS,
            decision: DecisionOptions::default(),
        }
    }
}

/// Estimate of `Σ_i ⟨A_i A_{i+1}⟩` on an n-cycle (KCBS when n = 5).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    /// Exact value on the rationalized behavior.
    pub exact: String,
    pub value: f64,
    pub std_error: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub z: f64,
    pub bound: String,
    /// The whole interval lies below the classical bound.
    pub violated: bool,
    /// The interval contains the classical bound.
    pub near_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalDeviation {
    pub first: String,
    pub second: String,
    pub measurements: Vec<String>,
    pub outcome: String,
    pub difference: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisturbanceCheck {
    /// Exact non-disturbance of the rationalized behavior.
    pub exact: bool,
    pub sigmas: f64,
    /// Largest `|difference| / σ` over all shared marginals.
    pub max_score: f64,
    /// Deviations beyond `sigmas` standard errors.
    pub flagged: Vec<MarginalDeviation>,
}

impl DisturbanceCheck {
    pub fn passed(&self) -> bool {
        self.flagged.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub source: DataSource,
    pub totals: Vec<u64>,
    pub correlation: Option<CorrelationEstimate>,
    pub disturbance: DisturbanceCheck,
    pub decision: NCDecision,
}

impl AnalysisReport {
    /// Sampling noise could flip the classical/nonclassical reading: the
    /// correlation interval contains the classical bound. Without a
    /// correlation estimate, exactly disturbing but statistically
    /// non-disturbing data count as near the boundary.
    pub fn boundary_proximity(&self) -> bool {
        match &self.correlation {
            Some(c) => c.near_bound,
            None => !self.disturbance.exact && self.disturbance.passed(),
        }
    }

    pub fn to_doc(&self, scenario: &Scenario) -> AnalysisDoc {
        AnalysisDoc {
            version: SCHEMA_VERSION,
            source: self.source,
            totals: scenario.context_ids().map(|c| c.to_string()).zip(self.totals.iter().copied()).collect(),
            correlation: self.correlation.clone(),
            disturbance: self.disturbance.clone(),
            decision: self.decision.to_doc(),
            boundary_proximity: self.boundary_proximity(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisDoc {
    pub version: u32,
    pub source: DataSource,
    pub totals: IndexMap<String, u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<CorrelationEstimate>,
    pub disturbance: DisturbanceCheck,
    pub decision: DecisionDoc,
    pub boundary_proximity: bool,
}

fn correlation_estimate(
    empirical: &EmpiricalBehavior,
    behavior: &Behavior,
    options: &CertifyOptions,
) -> Result<Option<CorrelationEstimate>, EmpiricalError> {
    let s = empirical.scenario();
    if !s.is_n_cycle() {
        return Ok(None);
    }
    let inequality = cycle_correlation_inequality(s.num_measurements())?;
    let exact = inequality.functional(behavior)?;
    let mut value = 0.0;
    let mut variance = 0.0;
    for ctx in s.context_ids() {
        let counts = empirical.counts(options.source, ctx);
        let total = empirical.total(options.source, ctx) as f64;
        let mut agree = 0.0;
        for (j, &c) in s.joint_outcomes(ctx)?.iter().zip(counts) {
            agree += if j.values[0] == j.values[1] { c as f64 } else { -(c as f64) };
        }
        let e = agree / total;
        value += e;
        variance += (1.0 - e * e).max(0.0) / total;
    }
    let std_error = variance.sqrt();
    let (ci_low, ci_high) = (value - options.z * std_error, value + options.z * std_error);
    let bound = rational::to_f64(inequality.bound());
    Ok(Some(CorrelationEstimate {
        exact: rational::format(&exact),
        value,
        std_error,
        ci_low,
        ci_high,
        z: options.z,
        bound: rational::format(inequality.bound()),
        violated: ci_high < bound,
        near_bound: ci_low <= bound && bound <= ci_high,
    }))
}

fn disturbance_check(empirical: &EmpiricalBehavior, behavior: &Behavior, options: &CertifyOptions) -> DisturbanceCheck {
    let s = empirical.scenario();
    let report = behavior.check_nondisturbance();
    let mut max_score: f64 = 0.0;
    let mut flagged = Vec::new();
    for d in &report.violations {
        let n1 = empirical.total(options.source, d.first.context) as f64;
        let n2 = empirical.total(options.source, d.second.context) as f64;
        for (k, (p1, p2)) in d.first.table.iter().zip(&d.second.table).enumerate() {
            if p1 == p2 {
                continue;
            }
            let (p1, p2) = (rational::to_f64(p1), rational::to_f64(p2));
            let pooled = (p1 * n1 + p2 * n2) / (n1 + n2);
            let sigma = (pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)).sqrt();
            let difference = p1 - p2;
            let score = if sigma > 0.0 { difference.abs() / sigma } else { f64::INFINITY };
            max_score = max_score.max(score);
            if score > options.disturbance_sigmas {
                let values = crate::scenario::unrank(k, d.first.subset.len(), s.num_outcomes());
                flagged.push(MarginalDeviation {
                    first: d.first.context.to_string(),
                    second: d.second.context.to_string(),
                    measurements: d.first.subset.iter().map(|m| s.measurement_label(*m).to_string()).collect(),
                    outcome: s.outcome_key(&values),
                    difference,
                    sigma,
                });
            }
        }
    }
    DisturbanceCheck { exact: report.is_nondisturbing(), sigmas: options.disturbance_sigmas, max_score, flagged }
}

/// Rationalizes the chosen tables, estimates the cycle correlation sum with
/// a normal-approximation interval, checks non-disturbance against sampling
/// error, and decides noncontextuality of the rationalized behavior.
pub fn estimate_and_certify(
    empirical: &EmpiricalBehavior,
    options: CertifyOptions,
) -> Result<AnalysisReport, EmpiricalError> {
    let behavior = empirical.rationalize(options.source)?;
    let correlation = correlation_estimate(empirical, &behavior, &options)?;
    let disturbance = disturbance_check(empirical, &behavior, &options);
    let decision = decide_noncontextual(&behavior, options.decision)?;
    Ok(AnalysisReport {
        source: options.source,
        totals: empirical.scenario().context_ids().map(|c| empirical.total(options.source, c)).collect(),
        correlation,
        disturbance,
        decision,
    })
}

/// Fraction of `outcome` among the readings of `m` in single presses.
pub fn single_frequency(empirical: &EmpiricalBehavior, m: MeasurementId, outcome: OutcomeId) -> Option<f64> {
    let counts = empirical.single_counts(m);
    let total: u64 = counts.iter().sum();
    (total > 0).then(|| counts[outcome.0] as f64 / total as f64)
}
