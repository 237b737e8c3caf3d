//! Monte Carlo model of the decagon coin-toss device.
//!
//! The object is a regular `2n`-gon whose sector `k` carries a color and a
//! shade. Positions are fixed slots around the housing; a configuration says
//! which sector sits in each slot. A toss about axis `s` leaves the object in
//! one of two resting configurations, the reference one or its mirror image
//! `x ↦ (s − x) mod 2n`, each with probability 1/2. A detector is a window of
//! slots; asked for color `j`, it finds the slot in its window showing color
//! `j` and reports `⊤` for dark, `⊥` for light.
//!
//! Every trial draws from its own ChaCha8 stream positioned by
//! `(seed, schedule index, trial index)`, so serial and parallel runs see the
//! same random bits.

use std::sync::Arc;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::Behavior;
use crate::empirical::EmpiricalBehavior;
use crate::rational::{self, Prob};
use crate::scenario::{rank, ContextId, MeasurementId, OutcomeId, Scenario, ScenarioError, SCHEMA_VERSION, BOTTOM, TOP};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DeviceError {
    #[error("invalid device configuration: {}", .0.join("; "))]
    InvalidConfig(Vec<String>),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("unknown context {0}")]
    UnknownContext(String),
    #[error("unknown measurement {0}")]
    UnknownMeasurement(String),
    #[error("{first} and {second} share no context")]
    NotCompatible { first: String, second: String },
    #[error("single press of {0} needs a context under the agent-chosen policy")]
    ContextChoiceRequired(String),
    #[error("single press of {0} names a context under the random-uniform policy")]
    ContextChoiceNotAllowed(String),
    #[error("context {context} does not contain {measurement}")]
    ContextMismatch { measurement: String, context: String },
    #[error("empty schedule")]
    EmptySchedule,
    #[error("unsupported schema version {0}")]
    UnsupportedVersion(u32),
    #[error("i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shade {
    Dark,
    Light,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sector {
    pub color: usize,
    pub shade: Shade,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorMode {
    /// One detector per context, each reading an adjacent pair of slots.
    ContextualDetectors,
    /// A single shared axis and detector for every context.
    OverlappedDetectors,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionPolicy {
    RandomUniform,
    AgentChosen,
}

/// Axis `s` is the reflection `x ↦ (s − x) mod 2n`; `window` lists the
/// detector's slots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContextGeometry {
    pub axis: usize,
    pub window: Vec<usize>,
}

/// Device description. Context `i` of the n-cycle reads colors `i` and
/// `i + 1 mod n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    #[serde(default = "default_version")]
    pub version: u32,
    pub colors: usize,
    pub sectors: Vec<Sector>,
    pub contexts: Vec<ContextGeometry>,
    pub mode: DetectorMode,
    pub selection: SelectionPolicy,
}

fn default_version() -> u32 {
    SCHEMA_VERSION
}

/// Which sector occupies each slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DeviceState {
    /// `None` is the reference configuration; `Some(s)` its mirror about `s`.
    pub mirrored_about: Option<usize>,
}

impl DeviceState {
    pub const REFERENCE: DeviceState = DeviceState { mirrored_about: None };

    /// Resting configuration after a toss about `axis`.
    pub fn resting(axis: usize, flipped: bool) -> DeviceState {
        DeviceState { mirrored_about: flipped.then_some(axis) }
    }

    pub fn sector_at(&self, slot: usize, sides: usize) -> usize {
        match self.mirrored_about {
            None => slot % sides,
            Some(s) => (s % sides + sides - slot % sides) % sides,
        }
    }

    /// Orientation bit relative to `axis`: whether this is the mirrored one of
    /// the two resting configurations of that axis.
    pub fn orientation(&self, axis: usize) -> bool {
        self.mirrored_about == Some(axis)
    }
}

impl DeviceConfig {
    pub fn sides(&self) -> usize {
        2 * self.colors
    }

    /// Slot of `window` that shows `color`, if exactly one does.
    fn locate(&self, state: DeviceState, window: &[usize], color: usize) -> Option<usize> {
        let mut hits = window.iter().filter(|&&p| self.sectors[state.sector_at(p, self.sides())].color == color);
        match (hits.next(), hits.next()) {
            (Some(&p), None) => Some(p),
            _ => None,
        }
    }

    /// Returns every broken invariant.
    pub fn validate(&self) -> Result<(), DeviceError> {
        let mut issues = Vec::new();
        let n = self.colors;
        if self.version != SCHEMA_VERSION {
            return Err(DeviceError::UnsupportedVersion(self.version));
        }
        if n < 3 {
            issues.push(format!("need at least 3 colors, got {n}"));
            return Err(DeviceError::InvalidConfig(issues));
        }
        let sides = self.sides();
        if self.sectors.len() != sides {
            issues.push(format!("{} sectors for {n} colors", self.sectors.len()));
            return Err(DeviceError::InvalidConfig(issues));
        }
        for (k, sector) in self.sectors.iter().enumerate() {
            if sector.color >= n {
                issues.push(format!("sector {k} has unknown color {}", sector.color));
            }
        }
        for k in 0..n {
            let (a, b) = (self.sectors[k], self.sectors[k + n]);
            if a.color != b.color {
                issues.push(format!("sectors {k} and {} are opposite but differ in color", k + n));
            }
            if a.shade == b.shade {
                issues.push(format!("sectors {k} and {} are opposite but share a shade", k + n));
            }
        }
        for color in 0..n {
            let count = self.sectors.iter().filter(|s| s.color == color).count();
            if count != 2 {
                issues.push(format!("color {color} appears on {count} sectors"));
            }
        }
        if self.contexts.len() != n {
            issues.push(format!("{} context geometries for {n} contexts", self.contexts.len()));
        }
        if !issues.is_empty() {
            return Err(DeviceError::InvalidConfig(issues));
        }

        for (i, g) in self.contexts.iter().enumerate() {
            if g.axis >= sides {
                issues.push(format!("C{i}: axis {} out of range", g.axis));
                continue;
            }
            if g.window.is_empty() || g.window.iter().any(|&p| p >= sides) {
                issues.push(format!("C{i}: window slots out of range"));
                continue;
            }
            for flipped in [false, true] {
                let state = DeviceState::resting(g.axis, flipped);
                for color in [i, (i + 1) % n] {
                    if self.locate(state, &g.window, color).is_none() {
                        issues.push(format!(
                            "C{i}: window does not show color {color} exactly once in resting configuration {}",
                            u8::from(flipped)
                        ));
                    }
                }
            }
            if self.mode == DetectorMode::ContextualDetectors {
                let adjacent = g.window.len() == 2
                    && (g.window[1] == (g.window[0] + 1) % sides || g.window[0] == (g.window[1] + 1) % sides);
                if !adjacent {
                    issues.push(format!("C{i}: contextual detector must read two adjacent slots"));
                }
            }
        }
        if self.mode == DetectorMode::OverlappedDetectors && self.contexts.windows(2).any(|w| w[0] != w[1]) {
            issues.push("overlapped detectors need one shared axis and window".into());
        }
        if issues.is_empty() { Ok(()) } else { Err(DeviceError::InvalidConfig(issues)) }
    }
}

fn decagon_sectors() -> Vec<Sector> {
    (0..10)
        .map(|k| Sector { color: k % 5, shade: if k % 2 == 0 { Shade::Dark } else { Shade::Light } })
        .collect()
}

/// Canonical decagon: sector `k` has color `k mod 5`, dark iff `k` is even.
/// Context `C_i` reads slots `{p, p+1}` with `p = i` for even `i` and
/// `p = i + 5` for odd `i`, and tosses about axis `2p + 6 mod 10`. Both
/// resting configurations show colors `i, i+1` in the window, with shades
/// swapped between them. The two detectors reading any one color sit on
/// opposite sides of the object.
pub fn default_device() -> DeviceConfig {
    let start = |i: usize| if i.is_multiple_of(2) { i } else { i + 5 };
    DeviceConfig {
        version: SCHEMA_VERSION,
        colors: 5,
        sectors: decagon_sectors(),
        contexts: (0..5)
            .map(|i| {
                let p = start(i);
                ContextGeometry { axis: (2 * p + 6) % 10, window: vec![p, (p + 1) % 10] }
            })
            .collect(),
        mode: DetectorMode::ContextualDetectors,
        selection: SelectionPolicy::RandomUniform,
    }
}

/// Decagon with all detectors merged into one semicircular window of slots
/// `window_start .. window_start + 5` and one shared axis that mirrors it
/// onto the opposite semicircle.
pub fn overlapped_device(window_start: usize) -> DeviceConfig {
    let w = window_start % 10;
    let geometry = ContextGeometry { axis: (2 * w + 9) % 10, window: (0..5).map(|k| (w + k) % 10).collect() };
    DeviceConfig {
        version: SCHEMA_VERSION,
        colors: 5,
        sectors: decagon_sectors(),
        contexts: vec![geometry; 5],
        mode: DetectorMode::OverlappedDetectors,
        selection: SelectionPolicy::RandomUniform,
    }
}

/// Validated configuration with its n-cycle scenario.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Device {
    config: DeviceConfig,
    scenario: Arc<Scenario>,
    top: OutcomeId,
    bottom: OutcomeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Press {
    Joint(ContextId),
    /// `context` is the agent's choice; `None` under random-uniform selection.
    Single { measurement: MeasurementId, context: Option<ContextId> },
    Sequential { first: MeasurementId, second: MeasurementId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PressMode {
    Joint,
    Single,
    Sequential,
}

impl Press {
    pub fn mode(&self) -> PressMode {
        match self {
            Press::Joint(_) => PressMode::Joint,
            Press::Single { .. } => PressMode::Single,
            Press::Sequential { .. } => PressMode::Sequential,
        }
    }
}

/// One detector report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reading {
    pub measurement: MeasurementId,
    /// Context whose axis and detector produced the reading.
    pub context: ContextId,
    pub outcome: OutcomeId,
}

/// Position of a trial in the random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngPath {
    pub seed: u64,
    pub press: u64,
    pub trial: u64,
}

impl std::fmt::Display for RngPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.seed, self.press, self.trial)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRecord {
    pub press: Press,
    /// Context whose table the trial counts toward: the pressed context for
    /// joint presses, the shared context for sequential ones.
    pub table_context: Option<ContextId>,
    /// In press order.
    pub readings: Vec<Reading>,
    pub rng_path: Option<RngPath>,
}

/// JSON-lines form of a [`TrialRecord`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialLine {
    pub press: String,
    pub mode: PressMode,
    pub readings: Vec<ReadingLine>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rng: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReadingLine {
    pub measurement: String,
    pub context: String,
    pub outcome: String,
}

impl TrialRecord {
    pub fn outcomes(&self) -> Vec<OutcomeId> {
        self.readings.iter().map(|r| r.outcome).collect()
    }

    pub fn to_line(&self, scenario: &Scenario) -> TrialLine {
        let m = |id: MeasurementId| scenario.measurement_label(id).to_string();
        let press = match self.press {
            Press::Joint(c) => c.to_string(),
            Press::Single { measurement, context: None } => m(measurement),
            Press::Single { measurement, context: Some(c) } => format!("{}@{c}", m(measurement)),
            Press::Sequential { first, second } => format!("{}>{}", m(first), m(second)),
        };
        TrialLine {
            press,
            mode: self.press.mode(),
            readings: self
                .readings
                .iter()
                .map(|r| ReadingLine {
                    measurement: m(r.measurement),
                    context: r.context.to_string(),
                    outcome: scenario.outcome_label(r.outcome).to_string(),
                })
                .collect(),
            rng: self.rng_path.map(|p| p.to_string()),
        }
    }
}

/// Random words reserved per trial; a trial draws at most four.
const WORDS_PER_TRIAL: u128 = 16;

/// Generator for trial `trial` of schedule entry `press`.
pub fn trial_rng(path: RngPath) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(path.seed);
    rng.set_stream(path.press);
    rng.set_word_pos(u128::from(path.trial) * WORDS_PER_TRIAL);
    rng
}

impl Device {
    pub fn new(config: DeviceConfig) -> Result<Device, DeviceError> {
        config.validate()?;
        let scenario = Arc::new(Scenario::n_cycle(config.colors)?);
        let top = scenario.outcome_id(TOP)?;
        let bottom = scenario.outcome_id(BOTTOM)?;
        Ok(Device { config, scenario, top, bottom })
    }

    pub fn config(&self) -> &DeviceConfig {
        &self.config
    }

    pub fn scenario(&self) -> &Arc<Scenario> {
        &self.scenario
    }

    fn check_context(&self, ctx: ContextId) -> Result<(), DeviceError> {
        if ctx.0 < self.scenario.num_contexts() {
            Ok(())
        } else {
            Err(DeviceError::UnknownContext(ctx.to_string()))
        }
    }

    fn check_measurement(&self, m: MeasurementId) -> Result<(), DeviceError> {
        if m.0 < self.scenario.num_measurements() {
            Ok(())
        } else {
            Err(DeviceError::UnknownMeasurement(format!("#{}", m.0)))
        }
    }

    /// Detector of `ctx` asked for the color of `m` in configuration `state`.
    pub fn read(&self, ctx: ContextId, state: DeviceState, m: MeasurementId) -> OutcomeId {
        let g = &self.config.contexts[ctx.0];
        let slot = self.config.locate(state, &g.window, m.0).expect("validated geometry shows each context color once");
        match self.config.sectors[state.sector_at(slot, self.config.sides())].shade {
            Shade::Dark => self.top,
            Shade::Light => self.bottom,
        }
    }

    fn toss<R: Rng + ?Sized>(&self, ctx: ContextId, rng: &mut R) -> DeviceState {
        DeviceState::resting(self.config.contexts[ctx.0].axis, rng.random())
    }

    fn shared_context(&self, first: MeasurementId, second: MeasurementId) -> Result<ContextId, DeviceError> {
        self.scenario
            .context_ids()
            .find(|c| {
                let members = &self.scenario.contexts()[c.0];
                first != second && members.contains(&first) && members.contains(&second)
            })
            .ok_or_else(|| DeviceError::NotCompatible {
                first: self.scenario.measurement_label(first).to_string(),
                second: self.scenario.measurement_label(second).to_string(),
            })
    }

    /// Policy check for a single press: `Some(c)` for an agent-chosen
    /// context, `None` when the context is drawn at random.
    fn single_choice(&self, m: MeasurementId, choice: Option<ContextId>) -> Result<Option<ContextId>, DeviceError> {
        let label = || self.scenario.measurement_label(m).to_string();
        match (self.config.selection, choice) {
            (SelectionPolicy::RandomUniform, None) => Ok(None),
            (SelectionPolicy::RandomUniform, Some(_)) => Err(DeviceError::ContextChoiceNotAllowed(label())),
            (SelectionPolicy::AgentChosen, None) => Err(DeviceError::ContextChoiceRequired(label())),
            (SelectionPolicy::AgentChosen, Some(c)) => {
                self.check_context(c)?;
                if self.scenario.contexts()[c.0].contains(&m) {
                    Ok(Some(c))
                } else {
                    Err(DeviceError::ContextMismatch { measurement: label(), context: c.to_string() })
                }
            }
        }
    }

    fn single_context<R: Rng + ?Sized>(
        &self,
        m: MeasurementId,
        choice: Option<ContextId>,
        rng: &mut R,
    ) -> Result<ContextId, DeviceError> {
        Ok(match self.single_choice(m, choice)? {
            Some(c) => c,
            None => {
                let options = self.scenario.contexts_containing(m);
                options[rng.random_range(0..options.len())]
            }
        })
    }

    /// Both buttons of `ctx` at once: one toss, both colors read from the
    /// resulting configuration.
    pub fn press_joint<R: Rng + ?Sized>(&self, ctx: ContextId, rng: &mut R) -> Result<TrialRecord, DeviceError> {
        self.check_context(ctx)?;
        let state = self.toss(ctx, rng);
        let readings = self.scenario.contexts()[ctx.0]
            .iter()
            .map(|&m| Reading { measurement: m, context: ctx, outcome: self.read(ctx, state, m) })
            .collect();
        Ok(TrialRecord { press: Press::Joint(ctx), table_context: Some(ctx), readings, rng_path: None })
    }

    fn single_reading<R: Rng + ?Sized>(
        &self,
        m: MeasurementId,
        choice: Option<ContextId>,
        rng: &mut R,
    ) -> Result<Reading, DeviceError> {
        self.check_measurement(m)?;
        let ctx = self.single_context(m, choice, rng)?;
        let state = self.toss(ctx, rng);
        Ok(Reading { measurement: m, context: ctx, outcome: self.read(ctx, state, m) })
    }

    /// One button: a context containing `m` is selected by the policy, its
    /// axis tossed, and only the color of `m` read.
    pub fn press_single<R: Rng + ?Sized>(
        &self,
        m: MeasurementId,
        context: Option<ContextId>,
        rng: &mut R,
    ) -> Result<TrialRecord, DeviceError> {
        let reading = self.single_reading(m, context, rng)?;
        Ok(TrialRecord {
            press: Press::Single { measurement: m, context },
            table_context: None,
            readings: vec![reading],
            rng_path: None,
        })
    }

    /// Two single presses in order. Under the agent-chosen policy both use
    /// the context the pair shares.
    pub fn press_sequential<R: Rng + ?Sized>(
        &self,
        first: MeasurementId,
        second: MeasurementId,
        rng: &mut R,
    ) -> Result<TrialRecord, DeviceError> {
        self.check_measurement(first)?;
        self.check_measurement(second)?;
        let shared = self.shared_context(first, second)?;
        let choice = (self.config.selection == SelectionPolicy::AgentChosen).then_some(shared);
        let a = self.single_reading(first, choice, rng)?;
        let b = self.single_reading(second, choice, rng)?;
        Ok(TrialRecord {
            press: Press::Sequential { first, second },
            table_context: Some(shared),
            readings: vec![a, b],
            rng_path: None,
        })
    }

    pub fn press<R: Rng + ?Sized>(&self, press: Press, rng: &mut R) -> Result<TrialRecord, DeviceError> {
        match press {
            Press::Joint(c) => self.press_joint(c, rng),
            Press::Single { measurement, context } => self.press_single(measurement, context, rng),
            Press::Sequential { first, second } => self.press_sequential(first, second, rng),
        }
    }

    /// Checks a press without drawing randomness.
    pub fn check_press(&self, press: Press) -> Result<(), DeviceError> {
        match press {
            Press::Joint(c) => self.check_context(c),
            Press::Single { measurement, context } => {
                self.check_measurement(measurement)?;
                self.single_choice(measurement, context).map(|_| ())
            }
            Press::Sequential { first, second } => {
                self.check_measurement(first)?;
                self.check_measurement(second)?;
                self.shared_context(first, second).map(|_| ())
            }
        }
    }

    /// Exact joint-press behavior: each context sees its two resting
    /// configurations with probability 1/2.
    pub fn induced_behavior(&self) -> Behavior {
        let half = rational::ratio(1, 2);
        let base = self.scenario.num_outcomes();
        let tables = self
            .scenario
            .context_ids()
            .map(|ctx| {
                let members = &self.scenario.contexts()[ctx.0];
                let mut table = vec![Prob::zero(); self.scenario.joint_outcome_count(ctx).expect("valid context")];
                for flipped in [false, true] {
                    let state = DeviceState::resting(self.config.contexts[ctx.0].axis, flipped);
                    let values: Vec<OutcomeId> = members.iter().map(|&m| self.read(ctx, state, m)).collect();
                    table[rank(&values, base)] += &half;
                }
                table
            })
            .collect();
        Behavior::new(self.scenario.clone(), tables).expect("two half-weight configurations per context")
    }

    /// Runs `trials` trials of every press in `schedule`, passing each record
    /// to `sink` in schedule order.
    pub fn run_experiment_with(
        &self,
        schedule: &[Press],
        seed: u64,
        trials: u64,
        mut sink: impl FnMut(&TrialRecord) -> std::io::Result<()>,
    ) -> Result<EmpiricalBehavior, DeviceError> {
        self.check_schedule(schedule)?;
        let mut empirical = EmpiricalBehavior::new(self.scenario.clone());
        for (index, &press) in schedule.iter().enumerate() {
            for trial in 0..trials {
                let record = self.run_trial(press, RngPath { seed, press: index as u64, trial })?;
                empirical.record(&record);
                sink(&record).map_err(|e| DeviceError::Io(e.to_string()))?;
            }
        }
        Ok(empirical)
    }

    pub fn run_experiment(&self, schedule: &[Press], seed: u64, trials: u64) -> Result<EmpiricalBehavior, DeviceError> {
        self.run_experiment_with(schedule, seed, trials, |_| Ok(()))
    }

    /// Same counts as [`Device::run_experiment`], generated on the rayon pool.
    pub fn run_experiment_parallel(
        &self,
        schedule: &[Press],
        seed: u64,
        trials: u64,
    ) -> Result<EmpiricalBehavior, DeviceError> {
        const CHUNK: u64 = 4096;
        self.check_schedule(schedule)?;
        let jobs: Vec<(usize, u64)> = (0..schedule.len())
            .flat_map(|i| (0..trials.div_ceil(CHUNK)).map(move |c| (i, c * CHUNK)))
            .collect();
        jobs.into_par_iter()
            .map(|(index, start)| {
                let mut part = EmpiricalBehavior::new(self.scenario.clone());
                for trial in start..(start + CHUNK).min(trials) {
                    part.record(&self.run_trial(schedule[index], RngPath { seed, press: index as u64, trial })?);
                }
                Ok(part)
            })
            .try_reduce(
                || EmpiricalBehavior::new(self.scenario.clone()),
                |mut a, b| {
                    a.merge(&b);
                    Ok(a)
                },
            )
    }

    fn check_schedule(&self, schedule: &[Press]) -> Result<(), DeviceError> {
        if schedule.is_empty() {
            return Err(DeviceError::EmptySchedule);
        }
        schedule.iter().try_for_each(|&p| self.check_press(p))
    }

    fn run_trial(&self, press: Press, path: RngPath) -> Result<TrialRecord, DeviceError> {
        let mut record = self.press(press, &mut trial_rng(path))?;
        record.rng_path = Some(path);
        Ok(record)
    }

    /// Joint press of every context, in context order.
    pub fn joint_schedule(&self) -> Vec<Press> {
        self.scenario.context_ids().map(Press::Joint).collect()
    }

    /// Sequential press of each context's pair, in context order.
    pub fn sequential_schedule(&self) -> Vec<Press> {
        self.scenario
            .contexts()
            .iter()
            .map(|c| Press::Sequential { first: c[0], second: c[1] })
            .collect()
    }

    /// Single press of every measurement; under the agent-chosen policy each
    /// measurement is pressed once per context containing it.
    pub fn single_schedule(&self) -> Vec<Press> {
        (0..self.scenario.num_measurements())
            .map(MeasurementId)
            .flat_map(|m| match self.config.selection {
                SelectionPolicy::RandomUniform => vec![Press::Single { measurement: m, context: None }],
                SelectionPolicy::AgentChosen => self
                    .scenario
                    .contexts_containing(m)
                    .into_iter()
                    .map(|c| Press::Single { measurement: m, context: Some(c) })
                    .collect(),
            })
            .collect()
    }
}
