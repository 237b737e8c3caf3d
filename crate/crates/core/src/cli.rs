//! Command-line front end: `scenario`, `simulate`, `certify`, `verify`.
//!
//! Exit codes: 0 success or positive verdict, 1 negative verdict (contextual
//! behavior, failed realization), 2 invalid input, 64 usage error, 74 I/O
//! failure.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::behavior::{Behavior, BehaviorDoc};
use crate::device::{default_device, overlapped_device, Device, DeviceConfig, DetectorMode};
use crate::empirical::{estimate_and_certify, AnalysisReport, CertifyOptions, DataSource, EmpiricalBehavior};
use crate::polytope::{decide_noncontextual, kcbs_inequality, DecisionOptions, KcbsDoc, NCDecision};
use crate::rational;
use crate::realization::{
    verify_classical, verify_quantum, ClassicalDoc, ClassicalRealization, QuantumDoc, QuantumRealization,
    DEFAULT_TOLERANCE,
};
use crate::scenario::{Scenario, ScenarioDoc, ScenarioError, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_IO: i32 = 74;

#[derive(Debug, Parser)]
#[command(name = "contextuality", version, about = "Contextuality scenarios, certificates, realizations and device simulation")]
pub struct Cli {
    /// Seed for the simulator's random streams.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for output files (created if missing).
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Pretty,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build or validate a measurement scenario.
    Scenario(ScenarioArgs),
    /// Run the decagon device and write a trial log, behavior and report.
    Simulate(SimulateArgs),
    /// Decide noncontextuality of a behavior file.
    Certify(CertifyArgs),
    /// Check a classical or quantum realization against a behavior.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ScenarioArgs {
    /// Build the n-cycle.
    #[arg(long)]
    pub cycle: Option<usize>,
    /// Validate a scenario document.
    #[arg(long)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMode {
    /// Joint presses of every context.
    Joint,
    /// Joint presses on the shared-detector device.
    Overlapped,
    /// Sequential presses of each context's pair.
    Sequential,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Device configuration document; defaults to the built-in decagon.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SimMode::Joint)]
    pub mode: SimMode,
    /// Trials per schedule entry.
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    /// First slot of the shared window for the built-in overlapped device.
    #[arg(long, default_value_t = 0)]
    pub window_start: usize,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    #[arg(long)]
    pub behavior: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RealizationKind {
    Classical,
    Quantum,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub behavior: PathBuf,
    #[arg(long)]
    pub realization: PathBuf,
    #[arg(long, value_enum)]
    pub kind: RealizationKind,
    /// Numerical tolerance for quantum checks.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
}

/// Reproducibility record written next to command outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub version: u32,
    pub command: String,
    pub arguments: Vec<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl RunManifest {
    pub fn new(command: &str, arguments: Vec<String>) -> Self {
        RunManifest {
            version: SCHEMA_VERSION,
            command: command.to_string(),
            arguments,
            inputs: Vec::new(),
            outputs: Vec::new(),
            seed: None,
            trials: None,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const TRIALS_FILE: &str = "trials.jsonl";
pub const BEHAVIOR_FILE: &str = "behavior.json";
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn invalid(message: impl std::fmt::Display) -> Self {
        CliError { code: EXIT_INVALID, message: message.to_string() }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError { code: EXIT_IO, message: format!("{}: {e}", path.display()) }
    }
}

type CliResult = Result<i32, CliError>;

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let (code, sink): (i32, &mut dyn Write) = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => (EXIT_OK, out),
                _ => (EXIT_USAGE, err),
            };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let arguments = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(&cli, arguments, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(cli: &Cli, arguments: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match &cli.command {
        Command::Scenario(a) => cmd_scenario(cli, a, arguments, out, err),
        Command::Simulate(a) => cmd_simulate(cli, a, arguments, out),
        Command::Certify(a) => cmd_certify(cli, a, arguments, out, err),
        Command::Verify(a) => cmd_verify(cli, a, arguments, out),
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::invalid(format!("{}: {e}", path.display())))
}

fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("documents serialize");
    s.push('\n');
    s
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError { code: EXIT_IO, message: format!("stdout: {e}") })
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_file(dir: &Path, name: &str, contents: &str, manifest: &mut RunManifest) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    manifest.outputs.push(path.display().to_string());
    Ok(())
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, to_pretty_json(manifest)).map_err(|e| CliError::io(&path, e))
}

fn cmd_scenario(
    cli: &Cli,
    args: &ScenarioArgs,
    arguments: Vec<String>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> CliResult {
    let mut manifest = RunManifest::new("scenario", arguments);
    let result = match (&args.cycle, &args.file) {
        (Some(n), _) => Scenario::n_cycle(*n),
        (None, Some(path)) => {
            manifest.inputs.push(path.display().to_string());
            let doc: ScenarioDoc = read_json(path)?;
            Scenario::validate(&doc).map_err(ScenarioError::from)
        }
        (None, None) => unreachable!("clap enforces one source"),
    };
    let scenario = match result {
        Ok(s) => s,
        Err(e) => {
            let records = match &e {
                ScenarioError::Invalid(v) => v.records(),
                other => vec![crate::scenario::IssueRecord { code: "InvalidScenario".into(), detail: other.to_string() }],
            };
            let text = match cli.format {
                Format::Json => to_pretty_json(&serde_json::json!({ "errors": records })),
                Format::Pretty => records.iter().map(|r| format!("{}: {}\n", r.code, r.detail)).collect(),
            };
            let _ = err.write_all(text.as_bytes());
            return Ok(EXIT_INVALID);
        }
    };
    let json = to_pretty_json(&scenario.to_doc());
    match cli.format {
        Format::Json => emit(out, &json)?,
        Format::Pretty => {
            let mut text = format!(
                "{} measurements, outcomes {:?}, {} contexts\n",
                scenario.num_measurements(),
                scenario.outcomes(),
                scenario.num_contexts()
            );
            for (ctx, members) in scenario.context_ids().zip(scenario.contexts()) {
                let labels: Vec<&str> = members.iter().map(|m| scenario.measurement_label(*m)).collect();
                text.push_str(&format!("  {ctx} = {{{}}}\n", labels.join(", ")));
            }
            emit(out, &text)?;
        }
    }
    if let Some(dir) = &cli.output {
        ensure_dir(dir)?;
        write_file(dir, "scenario.json", &json, &mut manifest)?;
        write_manifest(dir, &manifest)?;
    }
    Ok(EXIT_OK)
}

fn load_device(args: &SimulateArgs) -> Result<Device, CliError> {
    let config: DeviceConfig = match &args.config {
        Some(path) => read_json(path)?,
        None if args.mode == SimMode::Overlapped => overlapped_device(args.window_start),
        None => default_device(),
    };
    if args.mode == SimMode::Overlapped && config.mode != DetectorMode::OverlappedDetectors {
        return Err(CliError::invalid("--mode overlapped needs an overlapped-detectors configuration"));
    }
    Device::new(config).map_err(CliError::invalid)
}

fn format_report(report: &AnalysisReport, empirical: &EmpiricalBehavior) -> String {
    let s = empirical.scenario();
    let mut text = format!("source: {}\n", report.source);
    let freqs = empirical.frequencies(report.source);
    for ctx in s.context_ids() {
        let entries: Vec<String> = s
            .joint_outcomes(ctx)
            .expect("valid context")
            .iter()
            .zip(&freqs[ctx.0])
            .map(|(j, f)| format!("p({})={f:.4}", s.outcome_key(&j.values)))
            .collect();
        text.push_str(&format!("  {ctx} n={:<8} {}\n", report.totals[ctx.0], entries.join("  ")));
    }
    if let Some(c) = &report.correlation {
        text.push_str(&format!(
            "correlation sum: {:.4} (exact {}), {:.0}% CI [{:.4}, {:.4}], classical bound {}{}\n",
            c.value,
            c.exact,
            95.0,
            c.ci_low,
            c.ci_high,
            c.bound,
            if c.violated { ", violated" } else { "" }
        ));
    }
    text.push_str(&format!(
        "non-disturbance: {} (max score {:.2} sigma)\n",
        if report.disturbance.passed() { "consistent" } else { "violated" },
        report.disturbance.max_score
    ));
    text.push_str(&format!("verdict on rationalized data: {:?}\n", report.decision.verdict()));
    if report.boundary_proximity() {
        text.push_str("note: the estimate is within sampling error of the classical boundary\n");
    }
    text
}

fn cmd_simulate(cli: &Cli, args: &SimulateArgs, arguments: Vec<String>, out: &mut dyn Write) -> CliResult {
    let Some(dir) = &cli.output else {
        return Err(CliError { code: EXIT_USAGE, message: "simulate needs --output <dir>".into() });
    };
    if args.trials == 0 {
        return Err(CliError { code: EXIT_USAGE, message: "--trials must be positive".into() });
    }
    let device = load_device(args)?;
    let seed = cli.seed.unwrap_or(0);
    let mut manifest = RunManifest::new("simulate", arguments);
    manifest.seed = Some(seed);
    manifest.trials = Some(args.trials);
    if let Some(p) = &args.config {
        manifest.inputs.push(p.display().to_string());
    }
    let (schedule, source) = match args.mode {
        SimMode::Joint | SimMode::Overlapped => (device.joint_schedule(), DataSource::Joint),
        SimMode::Sequential => (device.sequential_schedule(), DataSource::Sequential),
    };

    ensure_dir(dir)?;
    let log_path = dir.join(TRIALS_FILE);
    let file = fs::File::create(&log_path).map_err(|e| CliError::io(&log_path, e))?;
    let mut log = BufWriter::new(file);
    let scenario = device.scenario().clone();
    let empirical = device
        .run_experiment_with(&schedule, seed, args.trials, |record| {
            serde_json::to_writer(&mut log, &record.to_line(&scenario)).map_err(std::io::Error::other)?;
            log.write_all(b"\n")
        })
        .map_err(|e| match e {
            crate::device::DeviceError::Io(m) => CliError::io(&log_path, m),
            other => CliError::invalid(other),
        })?;
    log.flush().map_err(|e| CliError::io(&log_path, e))?;
    manifest.outputs.push(log_path.display().to_string());

    let behavior_doc = empirical.export(source).map_err(CliError::invalid)?;
    write_file(dir, BEHAVIOR_FILE, &to_pretty_json(&behavior_doc), &mut manifest)?;
    let report = estimate_and_certify(&empirical, CertifyOptions { source, ..CertifyOptions::default() })
        .map_err(CliError::invalid)?;
    let report_doc = report.to_doc(&scenario);
    write_file(dir, REPORT_FILE, &to_pretty_json(&report_doc), &mut manifest)?;
    write_manifest(dir, &manifest)?;

    match cli.format {
        Format::Json => emit(out, &to_pretty_json(&report_doc))?,
        Format::Pretty => emit(out, &format_report(&report, &empirical))?,
    }
    Ok(EXIT_OK)
}

fn decision_summary(decision: &NCDecision, kcbs: Option<&KcbsDoc>) -> String {
    let mut text = match decision {
        NCDecision::Noncontextual { witness } => {
            let mut t = String::from("verdict: noncontextual\nglobal section:\n");
            let s = witness.scenario();
            for (assignment, p) in witness.support() {
                t.push_str(&format!("  ({})  {}\n", s.outcome_key(&assignment.values), rational::format(&p)));
            }
            t
        }
        NCDecision::Contextual { certificate, value } => format!(
            "verdict: contextual\ncertificate: value {} here, {} {} on every noncontextual behavior\n",
            rational::format(value),
            certificate.direction().symbol(),
            rational::format(certificate.bound()),
        ),
    };
    if let Some(k) = kcbs {
        text.push_str(&format!(
            "KCBS: {} (classical bound {}){}\n",
            k.value,
            k.bound,
            if k.violated { ", violated" } else { "" }
        ));
    }
    text
}

fn cmd_certify(cli: &Cli, args: &CertifyArgs, arguments: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let doc: BehaviorDoc = read_json(&args.behavior)?;
    let behavior = Behavior::from_doc(&doc).map_err(CliError::invalid)?;
    let decision = decide_noncontextual(&behavior, DecisionOptions::default()).map_err(CliError::invalid)?;
    let mut decision_doc = decision.to_doc();
    let kcbs = kcbs_inequality();
    if behavior.scenario().as_ref() == kcbs.scenario().as_ref() {
        let e = kcbs.evaluate(&behavior).map_err(CliError::invalid)?;
        decision_doc.kcbs = Some(KcbsDoc::from_evaluation(&e));
    }
    let analysis = match EmpiricalBehavior::from_doc(&doc).map_err(CliError::invalid)? {
        Some(empirical) => {
            let source = doc.counts.as_ref().map_or(DataSource::Joint, |c| c.kind);
            let report = estimate_and_certify(&empirical, CertifyOptions { source, ..CertifyOptions::default() })
                .map_err(CliError::invalid)?;
            Some((report.to_doc(behavior.scenario()), format_report(&report, &empirical)))
        }
        None => None,
    };
    let summary = decision_summary(&decision, decision_doc.kcbs.as_ref());
    let json = to_pretty_json(&decision_doc);
    match cli.format {
        Format::Json => {
            emit(out, &json)?;
            let _ = err.write_all(summary.as_bytes());
        }
        Format::Pretty => {
            emit(out, &summary)?;
            if let Some((_, text)) = &analysis {
                emit(out, text)?;
            }
        }
    }
    if let Some(dir) = &cli.output {
        let mut manifest = RunManifest::new("certify", arguments);
        manifest.inputs.push(args.behavior.display().to_string());
        ensure_dir(dir)?;
        write_file(dir, "decision.json", &json, &mut manifest)?;
        if let Some((doc, _)) = &analysis {
            write_file(dir, REPORT_FILE, &to_pretty_json(doc), &mut manifest)?;
        }
        write_manifest(dir, &manifest)?;
    }
    Ok(if decision.is_noncontextual() { EXIT_OK } else { EXIT_NEGATIVE })
}

/// Result document of `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyDoc {
    pub version: u32,
    pub kind: String,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_deviation: Option<f64>,
}

fn cmd_verify(cli: &Cli, args: &VerifyArgs, arguments: Vec<String>, out: &mut dyn Write) -> CliResult {
    let doc: BehaviorDoc = read_json(&args.behavior)?;
    let behavior = Behavior::from_doc(&doc).map_err(CliError::invalid)?;
    let report = match args.kind {
        RealizationKind::Classical => {
            let rdoc: ClassicalDoc = read_json(&args.realization)?;
            let real = ClassicalRealization::from_doc(&rdoc).map_err(CliError::invalid)?;
            let r = verify_classical(&real, &behavior).map_err(CliError::invalid)?;
            let failure = r.discrepancies.first().map(|d| {
                let fmt = |t: &[rational::Prob]| t.iter().map(rational::format).collect::<Vec<_>>().join(", ");
                format!("{}: expected [{}], realization gives [{}]", d.context, fmt(&d.expected), fmt(&d.found))
            });
            VerifyDoc {
                version: SCHEMA_VERSION,
                kind: "classical".into(),
                passed: r.passed(),
                condition: None,
                failure,
                max_deviation: None,
            }
        }
        RealizationKind::Quantum => {
            let rdoc: QuantumDoc = read_json(&args.realization)?;
            let real = QuantumRealization::from_doc(&rdoc, args.tolerance).map_err(CliError::invalid)?;
            let r = verify_quantum(&real, &behavior, args.tolerance).map_err(CliError::invalid)?;
            VerifyDoc {
                version: SCHEMA_VERSION,
                kind: "quantum".into(),
                passed: r.passed(),
                condition: r.failure.as_ref().map(|f| f.condition().to_string()),
                failure: r.failure.as_ref().map(|f| f.describe()),
                max_deviation: Some(r.max_deviation),
            }
        }
    };
    let json = to_pretty_json(&report);
    match cli.format {
        Format::Json => emit(out, &json)?,
        Format::Pretty => {
            let text = match &report.failure {
                None => format!("{} realization reproduces the behavior\n", report.kind),
                Some(f) => format!("{} realization fails: {f}\n", report.kind),
            };
            emit(out, &text)?;
        }
    }
    if let Some(dir) = &cli.output {
        let mut manifest = RunManifest::new("verify", arguments);
        manifest.inputs.push(args.behavior.display().to_string());
        manifest.inputs.push(args.realization.display().to_string());
        ensure_dir(dir)?;
        write_file(dir, "verification.json", &json, &mut manifest)?;
        write_manifest(dir, &manifest)?;
    }
    Ok(if report.passed { EXIT_OK } else { EXIT_NEGATIVE })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("contextuality").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn manifest_roundtrips() {
        let mut m = RunManifest::new("simulate", vec!["--seed".into(), "42".into()]);
        m.seed = Some(42);
        m.trials = Some(10);
        m.outputs.push("out/trials.jsonl".into());
        let back: RunManifest = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<RunManifest>(r#"{"version":1,"extra":0}"#).is_err());
    }

    #[test]
    fn usage_errors_exit_64() {
        assert_eq!(run_capture(&[]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["scenario"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["scenario", "--cycle", "5", "--file", "x.json"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["frobnicate"]).0, EXIT_USAGE);
        assert_eq!(run_capture(&["simulate"]).0, EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        let (code, out, _) = run_capture(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("certify"));
    }

    #[test]
    fn scenario_cycle() {
        let (code, out, _) = run_capture(&["scenario", "--cycle", "5"]);
        assert_eq!(code, EXIT_OK);
        let doc: ScenarioDoc = serde_json::from_str(&out).unwrap();
        assert_eq!(doc.contexts[4], vec!["A4", "A0"]);
        let (code, _, err) = run_capture(&["scenario", "--cycle", "2"]);
        assert_eq!(code, EXIT_INVALID);
        assert!(err.contains("InvalidScenario"));
    }

    #[test]
    fn missing_input_is_io_error() {
        let (code, _, err) = run_capture(&["certify", "--behavior", "/nonexistent/behavior.json"]);
        assert_eq!(code, EXIT_IO);
        assert!(err.contains("/nonexistent/behavior.json"));
    }
}
