//! Build the 5-cycle, then validate hand-written scenarios and show how
//! violations of the cover and antichain conditions are reported.

use contextuality::scenario::{ContextId, Scenario, ScenarioDoc, ScenarioError};

fn doc(measurements: &[&str], contexts: &[&[&str]]) -> ScenarioDoc {
    ScenarioDoc {
        version: 1,
        measurements: measurements.iter().map(|s| s.to_string()).collect(),
        outcomes: vec!["⊥".into(), "⊤".into()],
        contexts: contexts.iter().map(|c| c.iter().map(|s| s.to_string()).collect()).collect(),
    }
}

fn main() -> Result<(), ScenarioError> {
    let cycle = Scenario::n_cycle(5)?;
    println!("5-cycle: {} measurements, {} contexts", cycle.num_measurements(), cycle.num_contexts());
    for (ctx, members) in cycle.context_ids().zip(cycle.contexts()) {
        let labels: Vec<_> = members.iter().map(|m| cycle.measurement_label(*m)).collect();
        println!("  {ctx} = {{{}}}", labels.join(", "));
    }
    let c4 = ContextId(4);
    let keys: Vec<_> = cycle.joint_outcomes(c4)?.iter().map(|j| format!("({})", cycle.outcome_key(&j.values))).collect();
    println!("joint outcomes of C4: {}", keys.join(" "));
    println!("global assignments: {}", cycle.global_assignment_count().unwrap_or(0));

    let cases = [
        ("subset context", doc(&["A", "B", "C"], &[&["A", "B"], &["A"], &["B", "C"]])),
        ("uncovered measurement", doc(&["A", "B", "C", "D"], &[&["A", "B"], &["B", "C"]])),
        ("triangle", doc(&["A", "B", "C"], &[&["A", "B"], &["B", "C"], &["C", "A"]])),
    ];
    for (name, d) in cases {
        match Scenario::validate(&d) {
            Ok(s) => println!("{name}: valid, {} contexts", s.num_contexts()),
            Err(errors) => {
                for r in errors.records() {
                    println!("{name}: {} ({})", r.code, r.detail);
                }
            }
        }
    }
    match Scenario::n_cycle(2) {
        Err(e) => println!("n = 2: {e}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
