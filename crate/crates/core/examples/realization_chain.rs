//! Global section → classical hidden-variable model → diagonal quantum model,
//! verified at each step, then a tampered projector caught by the Born rule.

use contextuality::behavior::rearranged_device_behavior;
use contextuality::polytope::{decide_noncontextual, DecisionOptions};
use contextuality::realization::{
    classical_to_diagonal, classical_to_quantum, nc_to_classical, verify_classical, verify_quantum, QuantumRealization,
    DEFAULT_TOLERANCE,
};
use contextuality::scenario::MeasurementId;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = rearranged_device_behavior();
    let decision = decide_noncontextual(&b, DecisionOptions::default())?;
    let witness = decision.witness().expect("noncontextual");

    let classical = nc_to_classical(witness);
    let weighted: Vec<_> = classical
        .states()
        .iter()
        .zip(classical.measure())
        .filter(|(_, w)| **w != contextuality::rational::zero())
        .map(|(s, w)| format!("λ=({s}) μ={w}"))
        .collect();
    println!("classical model on {} states; support: {}", classical.states().len(), weighted.join(", "));
    println!("classical verification: {}", verify_classical(&classical, &b)?.passed());

    let exact = classical_to_diagonal(&classical).born_behavior();
    println!("exact diagonal Born rule reproduces the behavior: {}", exact == b);

    let quantum = classical_to_quantum(&classical);
    let report = verify_quantum(&quantum, &b, DEFAULT_TOLERANCE)?;
    println!("quantum model of dimension {}: passed {}, max deviation {:e}", quantum.dimension(), report.passed(), report.max_deviation);

    // State 21 is (⊤,⊥,⊤,⊥,⊤), weight 1/2; state 0 carries no weight.
    let doc = {
        let mut d = quantum.to_doc();
        let (l1, l2) = (21, 0);
        for rows in d.projectors["A0"].values_mut() {
            let (a, b) = (rows[l1][l1], rows[l2][l2]);
            rows[l1][l1] = b;
            rows[l2][l2] = a;
        }
        d
    };
    let tampered = QuantumRealization::from_doc(&doc, DEFAULT_TOLERANCE)?;
    let report = verify_quantum(&tampered, &b, DEFAULT_TOLERANCE)?;
    match report.failure {
        Some(f) => println!("tampered model: {}", f.describe()),
        None => println!("tampered model unexpectedly passed"),
    }
    let t = tampered.observable(MeasurementId(0));
    println!("T_A0 eigenvalue at state 21 is now {}", t[(21, 21)].re);
    Ok(())
}
