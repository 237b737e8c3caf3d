//! The overlapped-detector behavior: its tables, the two-point global
//! section, and the exact check that the section reproduces every context.

use contextuality::behavior::rearranged_device_behavior;
use contextuality::polytope::{decide_noncontextual, kcbs_inequality, verify_global_section, DecisionOptions, GlobalDistribution};
use contextuality::rational::{self, ratio};
use contextuality::scenario::{GlobalAssignment, DEFAULT_ENUMERATION_LIMIT};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let b = rearranged_device_behavior();
    let s = b.scenario().clone();
    for ctx in s.context_ids() {
        let support: Vec<String> = s
            .joint_outcomes(ctx)?
            .iter()
            .filter(|j| *b.prob(ctx, &j.values).unwrap() != rational::zero())
            .map(|j| format!("({})", s.outcome_key(&j.values)))
            .collect();
        println!("{ctx}: 1/2 on each of {}", support.join(", "));
    }
    println!("KCBS value: {}", kcbs_inequality().functional(&b)?);

    let t = |labels: &[&str]| -> Result<GlobalAssignment, Box<dyn std::error::Error>> {
        Ok(GlobalAssignment { values: labels.iter().map(|l| s.outcome_id(l)).collect::<Result<_, _>>()? })
    };
    let section = GlobalDistribution::from_support(
        s.clone(),
        &[(t(&["⊤", "⊥", "⊤", "⊥", "⊤"])?, ratio(1, 2)), (t(&["⊥", "⊤", "⊥", "⊤", "⊥"])?, ratio(1, 2))],
        DEFAULT_ENUMERATION_LIMIT,
    )?;
    let check = verify_global_section(&b, &section)?;
    println!("two-point distribution is a global section: {}", check.is_global_section());

    let decision = decide_noncontextual(&b, DecisionOptions::default())?;
    let witness = decision.witness().expect("noncontextual");
    println!("solver's own witness (support {}):", witness.support().len());
    for (t, p) in witness.support() {
        println!("    ({})  {}", s.outcome_key(&t.values), rational::format(&p));
    }
    Ok(())
}
