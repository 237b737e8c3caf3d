//! Measurement scenarios as hypergraphs.
//!
//! A [`Scenario`] is a set of measurement labels, a collection of maximal
//! contexts (hyperedges) and a finite outcome set. Labels are opaque strings
//! mapped to dense indices in declaration order; every downstream vector
//! (behavior tables, LP columns, global distributions) is laid out in that
//! order.
//!
//! Joint outcomes of a context are enumerated lexicographically: the first
//! measurement of the context (as declared) is the most significant digit,
//! outcomes vary in declaration order. For the 5-cycle context `{A2, A3}` over
//! `[⊥, ⊤]` that is `(⊥,⊥), (⊥,⊤), (⊤,⊥), (⊤,⊤)`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const BOTTOM: &str = "⊥";
pub const TOP: &str = "⊤";

/// Default cap on `|O|^|A|`, the number of global assignments.
pub const DEFAULT_ENUMERATION_LIMIT: usize = 1 << 20;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MeasurementId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct OutcomeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContextId(pub usize);

impl fmt::Display for ContextId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.0)
    }
}

impl ContextId {
    /// Parses the `C<i>` form used as table keys.
    pub fn parse(s: &str) -> Option<Self> {
        s.strip_prefix('C')?.parse().ok().map(ContextId)
    }
}

/// One violated structural condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScenarioIssue {
    EmptyStructure(String),
    DuplicateLabel { kind: &'static str, label: String },
    InvalidLabel { kind: &'static str, label: String },
    UnknownMeasurement { context: usize, label: String },
    DuplicateContext { first: usize, second: usize },
    /// Condition (a): the measurement appears in no context.
    CoverViolation { measurement: String },
    /// Condition (b): context `inner` is strictly contained in `outer`.
    MaximalityViolation { inner: Vec<String>, outer: Vec<String> },
}

impl ScenarioIssue {
    pub fn code(&self) -> &'static str {
        match self {
            Self::EmptyStructure(_) => "EmptyStructure",
            Self::DuplicateLabel { .. } => "DuplicateLabel",
            Self::InvalidLabel { .. } => "InvalidLabel",
            Self::UnknownMeasurement { .. } => "UnknownMeasurement",
            Self::DuplicateContext { .. } => "DuplicateContext",
            Self::CoverViolation { .. } => "CoverViolation",
            Self::MaximalityViolation { .. } => "MaximalityViolation",
        }
    }

    pub fn detail(&self) -> String {
        match self {
            Self::EmptyStructure(what) => what.clone(),
            Self::DuplicateLabel { kind, label } => format!("{kind} label {label:?} declared twice"),
            Self::InvalidLabel { kind, label } => {
                format!("{kind} label {label:?} must be non-empty and must not contain ','")
            }
            Self::UnknownMeasurement { context, label } => {
                format!("context #{context} mentions undeclared measurement {label:?}")
            }
            Self::DuplicateContext { first, second } => {
                format!("contexts #{first} and #{second} are the same set")
            }
            Self::CoverViolation { measurement } => {
                format!("measurement {measurement:?} belongs to no context")
            }
            Self::MaximalityViolation { inner, outer } => format!(
                "context {{{}}} is strictly contained in {{{}}}",
                inner.join(","),
                outer.join(",")
            ),
        }
    }
}

/// Machine-readable form of a [`ScenarioIssue`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueRecord {
    pub code: String,
    pub detail: String,
}

/// Every condition a raw description violated.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid scenario: {}", .0.iter().map(|i| i.detail()).collect::<Vec<_>>().join("; "))]
pub struct ValidationErrors(pub Vec<ScenarioIssue>);

impl ValidationErrors {
    pub fn records(&self) -> Vec<IssueRecord> {
        self.0
            .iter()
            .map(|i| IssueRecord { code: i.code().to_string(), detail: i.detail() })
            .collect()
    }

    pub fn has(&self, code: &str) -> bool {
        self.0.iter().any(|i| i.code() == code)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error(transparent)]
    Invalid(#[from] ValidationErrors),
    #[error("an n-cycle needs n >= 3 (got {0})")]
    CycleTooShort(usize),
    #[error("unknown context {0}")]
    UnknownContext(ContextId),
    #[error("unknown measurement {0:?}")]
    UnknownMeasurement(String),
    #[error("unknown outcome {0:?}")]
    UnknownOutcome(String),
    #[error("scenario has {count} global assignments, above the enumeration limit {limit}")]
    TooLarge { count: String, limit: usize },
}

/// Raw, unvalidated scenario document:
/// `{"measurements": [...], "outcomes": [...], "contexts": [[...], ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default = "schema_version")]
    pub version: u32,
    pub measurements: Vec<String>,
    pub outcomes: Vec<String>,
    pub contexts: Vec<Vec<String>>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

/// A validated measurement scenario. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    measurements: Vec<String>,
    outcomes: Vec<String>,
    contexts: Vec<Vec<MeasurementId>>,
    measurement_index: HashMap<String, MeasurementId>,
    outcome_index: HashMap<String, OutcomeId>,
}

/// An element of `O^C`: one outcome per measurement of the context, aligned
/// with the context's measurement order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct JointOutcome {
    pub context: ContextId,
    pub values: Vec<OutcomeId>,
}

/// An element of `O^A`, indexed by measurement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GlobalAssignment {
    pub values: Vec<OutcomeId>,
}

impl GlobalAssignment {
    pub fn get(&self, m: MeasurementId) -> OutcomeId {
        self.values[m.0]
    }

    /// `t|_C` for the given measurement list.
    pub fn restrict(&self, measurements: &[MeasurementId]) -> Vec<OutcomeId> {
        measurements.iter().map(|m| self.values[m.0]).collect()
    }
}

/// Mixed-radix rank with the first entry most significant.
pub fn rank(values: &[OutcomeId], base: usize) -> usize {
    values.iter().fold(0, |acc, v| acc * base + v.0)
}

/// Inverse of [`rank`].
pub fn unrank(mut index: usize, len: usize, base: usize) -> Vec<OutcomeId> {
    let mut out = vec![OutcomeId(0); len];
    for slot in out.iter_mut().rev() {
        *slot = OutcomeId(index % base);
        index /= base;
    }
    out
}

fn checked_size(base: usize, len: usize) -> Option<usize> {
    u32::try_from(len).ok().and_then(|l| base.checked_pow(l))
}

impl Scenario {
    /// Validates a raw description against the cover and antichain
    /// conditions. All violations are collected, not just the first.
    pub fn validate(doc: &ScenarioDoc) -> Result<Scenario, ValidationErrors> {
        let mut issues = Vec::new();

        if doc.measurements.is_empty() {
            issues.push(ScenarioIssue::EmptyStructure("no measurements declared".into()));
        }
        if doc.outcomes.is_empty() {
            issues.push(ScenarioIssue::EmptyStructure("no outcomes declared".into()));
        }
        if doc.contexts.is_empty() {
            issues.push(ScenarioIssue::EmptyStructure("no contexts declared".into()));
        }

        let mut measurement_index = HashMap::new();
        for (i, label) in doc.measurements.iter().enumerate() {
            if label.is_empty() || label.contains(',') {
                issues.push(ScenarioIssue::InvalidLabel { kind: "measurement", label: label.clone() });
            }
            if measurement_index.insert(label.clone(), MeasurementId(i)).is_some() {
                issues.push(ScenarioIssue::DuplicateLabel { kind: "measurement", label: label.clone() });
            }
        }
        let mut outcome_index = HashMap::new();
        for (i, label) in doc.outcomes.iter().enumerate() {
            if label.is_empty() || label.contains(',') {
                issues.push(ScenarioIssue::InvalidLabel { kind: "outcome", label: label.clone() });
            }
            if outcome_index.insert(label.clone(), OutcomeId(i)).is_some() {
                issues.push(ScenarioIssue::DuplicateLabel { kind: "outcome", label: label.clone() });
            }
        }

        let mut contexts = Vec::with_capacity(doc.contexts.len());
        let mut sets: Vec<BTreeSet<MeasurementId>> = Vec::with_capacity(doc.contexts.len());
        for (ci, ctx) in doc.contexts.iter().enumerate() {
            if ctx.is_empty() {
                issues.push(ScenarioIssue::EmptyStructure(format!("context #{ci} is empty")));
            }
            let mut ids = Vec::with_capacity(ctx.len());
            let mut set = BTreeSet::new();
            for label in ctx {
                match measurement_index.get(label) {
                    Some(&id) => {
                        if !set.insert(id) {
                            issues.push(ScenarioIssue::DuplicateLabel {
                                kind: "context member",
                                label: label.clone(),
                            });
                        }
                        ids.push(id);
                    }
                    None => issues.push(ScenarioIssue::UnknownMeasurement {
                        context: ci,
                        label: label.clone(),
                    }),
                }
            }
            contexts.push(ids);
            sets.push(set);
        }

        // (a) cover
        for (i, label) in doc.measurements.iter().enumerate() {
            if !sets.iter().any(|s| s.contains(&MeasurementId(i))) {
                issues.push(ScenarioIssue::CoverViolation { measurement: label.clone() });
            }
        }

        // (b) antichain; equal sets are reported as duplicates
        let names = |s: &BTreeSet<MeasurementId>| -> Vec<String> {
            s.iter().map(|m| doc.measurements[m.0].clone()).collect()
        };
        for i in 0..sets.len() {
            for j in 0..sets.len() {
                if i == j || sets[i].is_empty() {
                    continue;
                }
                if sets[i] == sets[j] {
                    if i < j {
                        issues.push(ScenarioIssue::DuplicateContext { first: i, second: j });
                    }
                } else if sets[i].is_subset(&sets[j]) {
                    issues.push(ScenarioIssue::MaximalityViolation {
                        inner: names(&sets[i]),
                        outer: names(&sets[j]),
                    });
                }
            }
        }

        if issues.is_empty() {
            Ok(Scenario {
                measurements: doc.measurements.clone(),
                outcomes: doc.outcomes.clone(),
                contexts,
                measurement_index,
                outcome_index,
            })
        } else {
            Err(ValidationErrors(issues))
        }
    }

    /// The dichotomic n-cycle: measurements `A0..A{n-1}`, outcomes `[⊥, ⊤]`
    /// and contexts `C_i = {A_i, A_{i+1 mod n}}`.
    pub fn n_cycle(n: usize) -> Result<Scenario, ScenarioError> {
        if n < 3 {
            return Err(ScenarioError::CycleTooShort(n));
        }
        let doc = ScenarioDoc {
            version: SCHEMA_VERSION,
            measurements: (0..n).map(|i| format!("A{i}")).collect(),
            outcomes: vec![BOTTOM.to_string(), TOP.to_string()],
            contexts: (0..n)
                .map(|i| vec![format!("A{i}"), format!("A{}", (i + 1) % n)])
                .collect(),
        };
        Ok(Scenario::validate(&doc)?)
    }

    pub fn to_doc(&self) -> ScenarioDoc {
        ScenarioDoc {
            version: SCHEMA_VERSION,
            measurements: self.measurements.clone(),
            outcomes: self.outcomes.clone(),
            contexts: self
                .contexts
                .iter()
                .map(|c| c.iter().map(|m| self.measurements[m.0].clone()).collect())
                .collect(),
        }
    }

    pub fn measurements(&self) -> &[String] {
        &self.measurements
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn num_measurements(&self) -> usize {
        self.measurements.len()
    }

    pub fn num_outcomes(&self) -> usize {
        self.outcomes.len()
    }

    pub fn num_contexts(&self) -> usize {
        self.contexts.len()
    }

    pub fn context_ids(&self) -> impl Iterator<Item = ContextId> {
        (0..self.contexts.len()).map(ContextId)
    }

    pub fn context(&self, id: ContextId) -> Result<&[MeasurementId], ScenarioError> {
        self.contexts
            .get(id.0)
            .map(Vec::as_slice)
            .ok_or(ScenarioError::UnknownContext(id))
    }

    pub fn contexts(&self) -> &[Vec<MeasurementId>] {
        &self.contexts
    }

    pub fn measurement_id(&self, label: &str) -> Result<MeasurementId, ScenarioError> {
        self.measurement_index
            .get(label)
            .copied()
            .ok_or_else(|| ScenarioError::UnknownMeasurement(label.to_string()))
    }

    pub fn outcome_id(&self, label: &str) -> Result<OutcomeId, ScenarioError> {
        self.outcome_index
            .get(label)
            .copied()
            .ok_or_else(|| ScenarioError::UnknownOutcome(label.to_string()))
    }

    pub fn measurement_label(&self, m: MeasurementId) -> &str {
        &self.measurements[m.0]
    }

    pub fn outcome_label(&self, o: OutcomeId) -> &str {
        &self.outcomes[o.0]
    }

    /// Contexts that contain `m`, in context order.
    pub fn contexts_containing(&self, m: MeasurementId) -> Vec<ContextId> {
        self.context_ids()
            .filter(|c| self.contexts[c.0].contains(&m))
            .collect()
    }

    /// Whether the scenario is the dichotomic n-cycle as built by
    /// [`Scenario::n_cycle`].
    pub fn is_n_cycle(&self) -> bool {
        Scenario::n_cycle(self.num_measurements()).is_ok_and(|c| &c == self)
    }

    /// `|O|^|C|`.
    pub fn joint_outcome_count(&self, ctx: ContextId) -> Result<usize, ScenarioError> {
        let len = self.context(ctx)?.len();
        checked_size(self.num_outcomes(), len).ok_or(ScenarioError::TooLarge {
            count: format!("{}^{}", self.num_outcomes(), len),
            limit: usize::MAX,
        })
    }

    /// All of `O^C` in canonical order; position `k` in the returned list is
    /// the table index used by behaviors.
    pub fn joint_outcomes(&self, ctx: ContextId) -> Result<Vec<JointOutcome>, ScenarioError> {
        let len = self.context(ctx)?.len();
        let count = self.joint_outcome_count(ctx)?;
        Ok((0..count)
            .map(|k| JointOutcome { context: ctx, values: unrank(k, len, self.num_outcomes()) })
            .collect())
    }

    /// `|O|^|A|`, if it fits in a `usize`.
    pub fn global_assignment_count(&self) -> Option<usize> {
        checked_size(self.num_outcomes(), self.num_measurements())
    }

    pub fn check_enumeration_limit(&self, limit: usize) -> Result<usize, ScenarioError> {
        match self.global_assignment_count() {
            Some(n) if n <= limit => Ok(n),
            other => Err(ScenarioError::TooLarge {
                count: other
                    .map(|n| n.to_string())
                    .unwrap_or_else(|| format!("{}^{}", self.num_outcomes(), self.num_measurements())),
                limit,
            }),
        }
    }

    /// All of `O^A` in canonical order (first measurement most significant).
    pub fn global_assignments(&self, limit: usize) -> Result<Vec<GlobalAssignment>, ScenarioError> {
        let count = self.check_enumeration_limit(limit)?;
        Ok((0..count).map(|k| self.global_assignment(k)).collect())
    }

    pub fn global_assignment(&self, index: usize) -> GlobalAssignment {
        GlobalAssignment { values: unrank(index, self.num_measurements(), self.num_outcomes()) }
    }

    pub fn global_rank(&self, t: &GlobalAssignment) -> usize {
        rank(&t.values, self.num_outcomes())
    }

    /// Table index of the restriction of `t` to `ctx`.
    pub fn restriction_rank(&self, t: &GlobalAssignment, ctx: ContextId) -> usize {
        let base = self.num_outcomes();
        self.contexts[ctx.0].iter().fold(0, |acc, m| acc * base + t.values[m.0].0)
    }

    /// `"⊥,⊤"`-style key for a joint outcome.
    pub fn outcome_key(&self, values: &[OutcomeId]) -> String {
        values
            .iter()
            .map(|o| self.outcomes[o.0].as_str())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse_outcome_key(&self, key: &str, len: usize) -> Result<Vec<OutcomeId>, ScenarioError> {
        let parts: Vec<&str> = if key.is_empty() { Vec::new() } else { key.split(',').collect() };
        if parts.len() != len {
            return Err(ScenarioError::UnknownOutcome(key.to_string()));
        }
        parts.iter().map(|p| self.outcome_id(p.trim())).collect()
    }

    /// Parses a global assignment given as a full measurement → outcome map.
    pub fn assignment_from_labels<'a>(
        &self,
        pairs: impl IntoIterator<Item = (&'a str, &'a str)>,
    ) -> Result<GlobalAssignment, ScenarioError> {
        let mut values = vec![None; self.num_measurements()];
        for (m, o) in pairs {
            values[self.measurement_id(m)?.0] = Some(self.outcome_id(o)?);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| ScenarioError::UnknownMeasurement(self.measurements[i].clone())))
            .collect::<Result<_, _>>()?;
        Ok(GlobalAssignment { values })
    }
}
