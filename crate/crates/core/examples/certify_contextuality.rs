//! Decide noncontextuality exactly and print the Farkas certificate as a
//! noncontextuality inequality, checked against every deterministic vertex.

use contextuality::behavior::{anticorrelated_cycle, generalized_coin_toss, rearranged_device_behavior, Behavior};
use contextuality::polytope::{certificate_is_sound, decide_noncontextual, DecisionOptions, NCDecision};
use contextuality::rational;
use contextuality::scenario::DEFAULT_ENUMERATION_LIMIT;

fn report(name: &str, b: &Behavior) -> Result<(), Box<dyn std::error::Error>> {
    let s = b.scenario();
    match decide_noncontextual(b, DecisionOptions::default())? {
        NCDecision::Noncontextual { witness } => {
            println!("{name}: noncontextual, global section on {} assignments", witness.support().len());
            for (t, p) in witness.support() {
                println!("    ({})  {}", s.outcome_key(&t.values), rational::format(&p));
            }
        }
        NCDecision::Contextual { certificate, value } => {
            println!(
                "{name}: contextual; certificate value {value}, noncontextual behaviors give {} {}",
                certificate.direction().symbol(),
                certificate.bound()
            );
            for (ctx, row) in s.context_ids().zip(certificate.coefficients()) {
                let terms: Vec<String> = s
                    .joint_outcomes(ctx)?
                    .iter()
                    .zip(row)
                    .filter(|(_, c)| **c != rational::zero())
                    .map(|(j, c)| format!("{c:+} p({}|{ctx})", s.outcome_key(&j.values)))
                    .collect();
                if !terms.is_empty() {
                    println!("    {}", terms.join(" "));
                }
            }
            let sound = certificate_is_sound(&certificate, b, DEFAULT_ENUMERATION_LIMIT)?;
            println!("    satisfied by every vertex and violated here: {sound}");
        }
    }
    Ok(())
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    report("generalized coin toss", &generalized_coin_toss())?;
    report("rearranged device", &rearranged_device_behavior())?;
    for n in 3..=6 {
        report(&format!("anti-correlated {n}-cycle"), &anticorrelated_cycle(n))?;
    }
    Ok(())
}
