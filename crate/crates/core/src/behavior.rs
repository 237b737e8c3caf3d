//! Behaviors (empirical models), marginals and non-disturbance.
//!
//! A [`Behavior`] stores one exact distribution per maximal context; table
//! `k` of a context is indexed like [`Scenario::joint_outcomes`]. Anything on
//! a smaller set of measurements is derived by marginalization.

use std::sync::Arc;

use indexmap::IndexMap;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::empirical::CountsAnnex;
use crate::rational::{self, Prob};
use crate::scenario::{
    rank, unrank, ContextId, GlobalAssignment, MeasurementId, OutcomeId, Scenario, ScenarioDoc,
    ScenarioError, SCHEMA_VERSION,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BehaviorError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("expected {expected} context tables, found {found}")]
    WrongTableCount { expected: usize, found: usize },
    #[error("table for {context} has {found} entries, expected {expected}")]
    WrongTableSize { context: ContextId, expected: usize, found: usize },
    #[error("probability {value} at {context}[{index}] is outside [0, 1]")]
    OutOfRange { context: ContextId, index: usize, value: String },
    #[error("table for {context} sums to {sum}, not 1")]
    NotNormalized { context: ContextId, sum: String },
    #[error("measurement {measurement} is not in context {context}")]
    SubsetNotInContext { context: ContextId, measurement: String },
    #[error("no table given for context {0}")]
    MissingTable(ContextId),
    #[error("unknown table key {0:?}")]
    UnknownTableKey(String),
    #[error("objects refer to different scenarios")]
    ScenarioMismatch,
    #[error("unsupported schema version {0}")]
    UnsupportedVersion(u32),
    #[error("{0}")]
    Parse(String),
}

/// Exact behavior on a scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Behavior {
    scenario: Arc<Scenario>,
    tables: Vec<Vec<Prob>>,
}

/// Distribution on `O^{E'}` for a subset `E'` of a context `E`. The subset is
/// kept in measurement declaration order so that marginals of different
/// contexts on the same set are directly comparable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarginalDistribution {
    pub context: ContextId,
    pub subset: Vec<MeasurementId>,
    pub table: Vec<Prob>,
}

/// Sum `table` (laid out over `source`) down onto `target ⊆ source`.
fn marginal_table(
    source: &[MeasurementId],
    table: &[Prob],
    target: &[MeasurementId],
    base: usize,
) -> Vec<Prob> {
    let positions: Vec<usize> = target
        .iter()
        .map(|m| source.iter().position(|s| s == m).expect("target is a subset of source"))
        .collect();
    let mut out = vec![Prob::zero(); base.pow(target.len() as u32)];
    for (k, p) in table.iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let values = unrank(k, source.len(), base);
        let restricted: Vec<OutcomeId> = positions.iter().map(|&i| values[i]).collect();
        out[rank(&restricted, base)] += p;
    }
    out
}

fn canonical_subset(subset: &[MeasurementId]) -> Vec<MeasurementId> {
    let mut s = subset.to_vec();
    s.sort();
    s.dedup();
    s
}

impl MarginalDistribution {
    /// Further marginalize onto `subset ⊆ self.subset`.
    pub fn marginalize(&self, scenario: &Scenario, subset: &[MeasurementId]) -> Result<Self, BehaviorError> {
        let subset = canonical_subset(subset);
        if let Some(m) = subset.iter().find(|m| !self.subset.contains(m)) {
            return Err(BehaviorError::SubsetNotInContext {
                context: self.context,
                measurement: scenario.measurement_label(*m).to_string(),
            });
        }
        Ok(MarginalDistribution {
            context: self.context,
            table: marginal_table(&self.subset, &self.table, &subset, scenario.num_outcomes()),
            subset,
        })
    }

    pub fn total(&self) -> Prob {
        self.table.iter().sum()
    }
}

/// Two intersecting contexts whose marginals on the intersection differ.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Disturbance {
    pub first: MarginalDistribution,
    pub second: MarginalDistribution,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NondisturbanceReport {
    pub violations: Vec<Disturbance>,
}

impl NondisturbanceReport {
    pub fn is_nondisturbing(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violating_pairs(&self) -> Vec<(ContextId, ContextId)> {
        self.violations.iter().map(|d| (d.first.context, d.second.context)).collect()
    }
}

impl Behavior {
    /// Validates shape, range and normalization (exactly).
    pub fn new(scenario: Arc<Scenario>, tables: Vec<Vec<Prob>>) -> Result<Self, BehaviorError> {
        if tables.len() != scenario.num_contexts() {
            return Err(BehaviorError::WrongTableCount {
                expected: scenario.num_contexts(),
                found: tables.len(),
            });
        }
        for (ci, table) in tables.iter().enumerate() {
            let ctx = ContextId(ci);
            let expected = scenario.joint_outcome_count(ctx)?;
            if table.len() != expected {
                return Err(BehaviorError::WrongTableSize { context: ctx, expected, found: table.len() });
            }
            if let Some((index, value)) = table.iter().enumerate().find(|(_, p)| !rational::is_probability(p)) {
                return Err(BehaviorError::OutOfRange { context: ctx, index, value: rational::format(value) });
            }
            let sum: Prob = table.iter().sum();
            if !sum.is_one() {
                return Err(BehaviorError::NotNormalized { context: ctx, sum: rational::format(&sum) });
            }
        }
        Ok(Behavior { scenario, tables })
    }

    /// Builds a behavior entry by entry.
    pub fn from_fn(
        scenario: Arc<Scenario>,
        mut f: impl FnMut(ContextId, &[OutcomeId]) -> Prob,
    ) -> Result<Self, BehaviorError> {
        let mut tables = Vec::with_capacity(scenario.num_contexts());
        for ctx in scenario.context_ids() {
            let table = scenario.joint_outcomes(ctx)?.iter().map(|j| f(ctx, &j.values)).collect();
            tables.push(table);
        }
        Behavior::new(scenario, tables)
    }

    /// The deterministic behavior whose every context sees `t|_C` with
    /// probability one.
    pub fn deterministic(scenario: Arc<Scenario>, t: &GlobalAssignment) -> Self {
        let tables = scenario
            .context_ids()
            .map(|ctx| {
                let n = scenario.joint_outcome_count(ctx).expect("valid context");
                let hit = scenario.restriction_rank(t, ctx);
                (0..n).map(|k| if k == hit { Prob::one() } else { Prob::zero() }).collect()
            })
            .collect();
        Behavior { scenario, tables }
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    pub fn tables(&self) -> &[Vec<Prob>] {
        &self.tables
    }

    pub fn table(&self, ctx: ContextId) -> Result<&[Prob], BehaviorError> {
        self.tables
            .get(ctx.0)
            .map(Vec::as_slice)
            .ok_or(BehaviorError::Scenario(ScenarioError::UnknownContext(ctx)))
    }

    /// `p(s | C)`.
    pub fn prob(&self, ctx: ContextId, values: &[OutcomeId]) -> Result<&Prob, BehaviorError> {
        let table = self.table(ctx)?;
        Ok(&table[rank(values, self.scenario.num_outcomes())])
    }

    /// `p(· | E', E)`: sums `p(s|E)` over every `s` restricting to each `t`.
    pub fn marginalize(&self, ctx: ContextId, subset: &[MeasurementId]) -> Result<MarginalDistribution, BehaviorError> {
        let members = self.scenario.context(ctx)?;
        let subset = canonical_subset(subset);
        if let Some(m) = subset.iter().find(|m| !members.contains(m)) {
            return Err(BehaviorError::SubsetNotInContext {
                context: ctx,
                measurement: self
                    .scenario
                    .measurements()
                    .get(m.0)
                    .cloned()
                    .unwrap_or_else(|| format!("#{}", m.0)),
            });
        }
        Ok(MarginalDistribution {
            context: ctx,
            table: marginal_table(members, &self.tables[ctx.0], &subset, self.scenario.num_outcomes()),
            subset,
        })
    }

    /// Compares the two marginals on every non-empty pairwise intersection.
    pub fn check_nondisturbance(&self) -> NondisturbanceReport {
        let contexts = self.scenario.contexts();
        let mut violations = Vec::new();
        for i in 0..contexts.len() {
            for j in (i + 1)..contexts.len() {
                let shared: Vec<MeasurementId> =
                    contexts[i].iter().filter(|m| contexts[j].contains(m)).copied().collect();
                if shared.is_empty() {
                    continue;
                }
                let first = self.marginalize(ContextId(i), &shared).expect("intersection ⊆ context");
                let second = self.marginalize(ContextId(j), &shared).expect("intersection ⊆ context");
                if first.table != second.table {
                    violations.push(Disturbance { first, second });
                }
            }
        }
        NondisturbanceReport { violations }
    }

    /// Convex combination `Σ w_i b_i` of behaviors on the same scenario.
    /// Weights must be nonnegative and sum to one.
    pub fn mixture(parts: &[(Prob, &Behavior)]) -> Result<Behavior, BehaviorError> {
        let first = parts.first().ok_or(BehaviorError::WrongTableCount { expected: 1, found: 0 })?.1;
        let scenario = first.scenario.clone();
        let mut tables: Vec<Vec<Prob>> =
            first.tables.iter().map(|t| vec![Prob::zero(); t.len()]).collect();
        for (w, b) in parts {
            if b.scenario != scenario {
                return Err(BehaviorError::ScenarioMismatch);
            }
            for (acc, t) in tables.iter_mut().zip(&b.tables) {
                for (a, p) in acc.iter_mut().zip(t) {
                    *a += w * p;
                }
            }
        }
        Behavior::new(scenario, tables)
    }

    pub fn to_doc(&self) -> BehaviorDoc {
        let s = &self.scenario;
        let tables = s
            .context_ids()
            .map(|ctx| {
                let entries = s
                    .joint_outcomes(ctx)
                    .expect("valid context")
                    .iter()
                    .zip(&self.tables[ctx.0])
                    .map(|(j, p)| (s.outcome_key(&j.values), rational::format(p)))
                    .collect();
                (ctx.to_string(), entries)
            })
            .collect();
        BehaviorDoc {
            version: SCHEMA_VERSION,
            scenario: ScenarioRef::Inline(s.to_doc()),
            tables,
            counts: None,
        }
    }

    /// Parses and validates a behavior document. Outcome entries that are
    /// absent from a table are taken as zero; every context needs a table.
    pub fn from_doc(doc: &BehaviorDoc) -> Result<Behavior, BehaviorError> {
        if doc.version != SCHEMA_VERSION {
            return Err(BehaviorError::UnsupportedVersion(doc.version));
        }
        let scenario = Arc::new(doc.scenario.resolve()?);
        let mut tables: Vec<Option<Vec<Prob>>> = vec![None; scenario.num_contexts()];
        for (key, entries) in &doc.tables {
            let ctx = ContextId::parse(key)
                .filter(|c| c.0 < scenario.num_contexts())
                .ok_or_else(|| BehaviorError::UnknownTableKey(key.clone()))?;
            let len = scenario.context(ctx)?.len();
            let mut table = vec![Prob::zero(); scenario.joint_outcome_count(ctx)?];
            for (outcome, value) in entries {
                let values = scenario
                    .parse_outcome_key(outcome, len)
                    .map_err(|_| BehaviorError::UnknownTableKey(format!("{key}/{outcome}")))?;
                table[rank(&values, scenario.num_outcomes())] =
                    rational::parse(value).map_err(|e| BehaviorError::Parse(e.to_string()))?;
            }
            tables[ctx.0] = Some(table);
        }
        let tables = tables
            .into_iter()
            .enumerate()
            .map(|(i, t)| t.ok_or(BehaviorError::MissingTable(ContextId(i))))
            .collect::<Result<_, _>>()?;
        Behavior::new(scenario, tables)
    }
}

/// Scenario given inline or by reference to a built-in family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Cycle(CycleRef),
    Inline(ScenarioDoc),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleRef {
    pub cycle: usize,
}

impl ScenarioRef {
    pub fn resolve(&self) -> Result<Scenario, ScenarioError> {
        match self {
            ScenarioRef::Cycle(c) => Scenario::n_cycle(c.cycle),
            ScenarioRef::Inline(doc) => Ok(Scenario::validate(doc)?),
        }
    }
}

/// `{"scenario": ..., "tables": {"C0": {"⊥,⊤": "1/2", ...}, ...}}`, with an
/// optional `counts` annex on simulator exports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BehaviorDoc {
    #[serde(default = "default_version")]
    pub version: u32,
    pub scenario: ScenarioRef,
    pub tables: IndexMap<String, IndexMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<CountsAnnex>,
}

fn default_version() -> u32 {
    SCHEMA_VERSION
}

fn n_cycle(n: usize) -> Arc<Scenario> {
    Arc::new(Scenario::n_cycle(n).expect("n >= 3"))
}

fn dichotomic_pattern(
    scenario: Arc<Scenario>,
    correlated: impl Fn(usize) -> bool,
) -> Behavior {
    let half = rational::ratio(1, 2);
    Behavior::from_fn(scenario, |ctx, v| {
        if (v[0] == v[1]) == correlated(ctx.0) {
            half.clone()
        } else {
            Prob::zero()
        }
    })
    .expect("pattern tables are normalized")
}

/// On the n-cycle: every context perfectly anti-correlated with uniform
/// marginals.
pub fn anticorrelated_cycle(n: usize) -> Behavior {
    dichotomic_pattern(n_cycle(n), |_| false)
}

/// The generalized coin toss on the 5-cycle: in every context
/// `p(⊥,⊤) = p(⊤,⊥) = 1/2` and `p(⊥,⊥) = p(⊤,⊤) = 0`.
pub fn generalized_coin_toss() -> Behavior {
    anticorrelated_cycle(5)
}

/// The overlapped-detector device's behavior on the 5-cycle: anti-correlated
/// on `C0..C3`, perfectly correlated on `C4 = {A4, A0}`.
pub fn rearranged_device_behavior() -> Behavior {
    dichotomic_pattern(n_cycle(5), |c| c == 4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use crate::scenario::{BOTTOM, TOP};

    fn m(i: usize) -> MeasurementId {
        MeasurementId(i)
    }

    fn key_table(b: &Behavior, ctx: usize) -> Vec<(String, Prob)> {
        let s = b.scenario();
        s.joint_outcomes(ContextId(ctx))
            .unwrap()
            .iter()
            .map(|j| (s.outcome_key(&j.values), b.table(ContextId(ctx)).unwrap()[rank(&j.values, 2)].clone()))
            .collect()
    }

    #[test]
    fn coin_toss_tables() {
        let b = generalized_coin_toss();
        let half = ratio(1, 2);
        for ctx in 0..5 {
            assert_eq!(
                key_table(&b, ctx),
                vec![
                    ("⊥,⊥".into(), Prob::zero()),
                    ("⊥,⊤".into(), half.clone()),
                    ("⊤,⊥".into(), half.clone()),
                    ("⊤,⊤".into(), Prob::zero()),
                ]
            );
        }
    }

    #[test]
    fn coin_toss_single_marginals_are_fair() {
        let b = generalized_coin_toss();
        for ctx in 0..5 {
            for &a in b.scenario().context(ContextId(ctx)).unwrap() {
                let marg = b.marginalize(ContextId(ctx), &[a]).unwrap();
                assert_eq!(marg.table, vec![ratio(1, 2), ratio(1, 2)]);
            }
        }
    }

    #[test]
    fn coin_toss_is_nondisturbing() {
        assert!(generalized_coin_toss().check_nondisturbance().is_nondisturbing());
        assert!(rearranged_device_behavior().check_nondisturbance().is_nondisturbing());
    }

    #[test]
    fn rearranged_tables_differ_only_at_c4() {
        let r = rearranged_device_behavior();
        let c = generalized_coin_toss();
        for ctx in 0..4 {
            assert_eq!(r.table(ContextId(ctx)).unwrap(), c.table(ContextId(ctx)).unwrap());
        }
        let half = ratio(1, 2);
        assert_eq!(
            key_table(&r, 4),
            vec![
                ("⊥,⊥".into(), half.clone()),
                ("⊥,⊤".into(), Prob::zero()),
                ("⊤,⊥".into(), Prob::zero()),
                ("⊤,⊤".into(), half),
            ]
        );
        // C4 is declared (A4, A0)
        let names: Vec<&str> =
            r.scenario().context(ContextId(4)).unwrap().iter().map(|m| r.scenario().measurement_label(*m)).collect();
        assert_eq!(names, vec!["A4", "A0"]);
    }

    #[test]
    fn full_subset_marginal_is_identity() {
        let b = rearranged_device_behavior();
        let marg = b.marginalize(ContextId(1), &[m(2), m(1)]).unwrap();
        assert_eq!(marg.subset, vec![m(1), m(2)]);
        assert_eq!(marg.table, b.table(ContextId(1)).unwrap());
    }

    #[test]
    fn deterministic_marginal() {
        let s = n_cycle(5);
        let top = s.outcome_id(TOP).unwrap();
        let b = Behavior::deterministic(s.clone(), &GlobalAssignment { values: vec![top; 5] });
        let marg = b.marginalize(ContextId(0), &[m(1)]).unwrap();
        assert_eq!(marg.table, vec![Prob::zero(), Prob::one()]);
    }

    #[test]
    fn subset_outside_context_is_rejected() {
        let b = generalized_coin_toss();
        assert_eq!(
            b.marginalize(ContextId(0), &[m(3)]),
            Err(BehaviorError::SubsetNotInContext { context: ContextId(0), measurement: "A3".into() })
        );
    }

    #[test]
    fn disturbing_behavior_is_reported() {
        // C0 forces A1 = ⊤, C1 forces A1 = ⊥
        let s = n_cycle(5);
        let top = s.outcome_id(TOP).unwrap();
        let bot = s.outcome_id(BOTTOM).unwrap();
        let b = Behavior::from_fn(s, |ctx, v| {
            let hit = match ctx.0 {
                0 => v == [bot, top],
                1 => v == [bot, bot],
                _ => v == [bot, bot],
            };
            if hit { Prob::one() } else { Prob::zero() }
        })
        .unwrap();
        let report = b.check_nondisturbance();
        assert_eq!(report.violating_pairs(), vec![(ContextId(0), ContextId(1))]);
        let v = &report.violations[0];
        assert_eq!(v.first.subset, vec![m(1)]);
        assert_eq!(v.first.table, vec![Prob::zero(), Prob::one()]);
        assert_eq!(v.second.table, vec![Prob::one(), Prob::zero()]);
    }

    #[test]
    fn construction_rejects_bad_tables() {
        let s = n_cycle(3);
        let good = vec![ratio(1, 4); 4];
        assert!(matches!(
            Behavior::new(s.clone(), vec![good.clone(); 2]),
            Err(BehaviorError::WrongTableCount { expected: 3, found: 2 })
        ));
        assert!(matches!(
            Behavior::new(s.clone(), vec![good.clone(), good.clone(), vec![ratio(1, 2); 2]]),
            Err(BehaviorError::WrongTableSize { .. })
        ));
        let neg = vec![ratio(-1, 4), ratio(1, 2), ratio(1, 2), ratio(1, 4)];
        assert!(matches!(
            Behavior::new(s.clone(), vec![good.clone(), good.clone(), neg]),
            Err(BehaviorError::OutOfRange { .. })
        ));
        let short = vec![ratio(1, 4), ratio(1, 4), ratio(1, 4), Prob::zero()];
        assert!(matches!(
            Behavior::new(s, vec![good.clone(), short, good]),
            Err(BehaviorError::NotNormalized { context: ContextId(1), .. })
        ));
    }

    #[test]
    fn document_roundtrip_and_sparse_tables() {
        let b = rearranged_device_behavior();
        let json = serde_json::to_string(&b.to_doc()).unwrap();
        let back: BehaviorDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(Behavior::from_doc(&back).unwrap(), b);

        let sparse = r#"{"scenario":{"cycle":3},"tables":{
            "C0":{"⊥,⊤":"1/2","⊤,⊥":"1/2"},
            "C1":{"⊥,⊤":"1/2","⊤,⊥":"1/2"},
            "C2":{"⊥,⊤":"1/2","⊤,⊥":"1/2"}}}"#;
        let doc: BehaviorDoc = serde_json::from_str(sparse).unwrap();
        assert_eq!(Behavior::from_doc(&doc).unwrap(), anticorrelated_cycle(3));
    }

    #[test]
    fn document_errors() {
        let missing = r#"{"scenario":{"cycle":3},"tables":{"C0":{"⊥,⊤":"1/1"},"C1":{"⊥,⊤":"1/1"}}}"#;
        let doc: BehaviorDoc = serde_json::from_str(missing).unwrap();
        assert_eq!(Behavior::from_doc(&doc), Err(BehaviorError::MissingTable(ContextId(2))));

        let bad_key = r#"{"scenario":{"cycle":3},"tables":{"C9":{}}}"#;
        let doc: BehaviorDoc = serde_json::from_str(bad_key).unwrap();
        assert!(matches!(Behavior::from_doc(&doc), Err(BehaviorError::UnknownTableKey(_))));

        let unnormalized = r#"{"scenario":{"cycle":3},"tables":{"C0":{"⊥,⊤":"1/2"},"C1":{"⊥,⊤":"1"},"C2":{"⊥,⊤":"1"}}}"#;
        let doc: BehaviorDoc = serde_json::from_str(unnormalized).unwrap();
        assert!(matches!(Behavior::from_doc(&doc), Err(BehaviorError::NotNormalized { .. })));

        assert!(serde_json::from_str::<BehaviorDoc>(r#"{"scenario":{"cycle":3},"tables":{},"x":0}"#).is_err());
    }
}
