//! The generalized coin toss against the KCBS inequality: exact value, the
//! classical bound from the 32 deterministic vertices, and marginal checks.

use contextuality::behavior::generalized_coin_toss;
use contextuality::polytope::{deterministic_vertices, evaluate_inequality, kcbs_inequality};
use contextuality::rational;
use contextuality::scenario::{MeasurementId, DEFAULT_ENUMERATION_LIMIT};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let coin = generalized_coin_toss();
    let s = coin.scenario().clone();
    for ctx in s.context_ids() {
        let row: Vec<String> = s
            .joint_outcomes(ctx)?
            .iter()
            .map(|j| format!("p({})={}", s.outcome_key(&j.values), rational::format(coin.prob(ctx, &j.values).unwrap())))
            .collect();
        println!("{ctx}: {}", row.join("  "));
    }

    let kcbs = kcbs_inequality();
    let e = evaluate_inequality(&coin, &kcbs)?;
    println!("\nΣ⟨A_i A_(i+1)⟩ = {}  (classical: {} {})", e.value, e.direction.symbol(), e.bound);
    println!("violated: {}", !e.satisfied);

    let values: Vec<_> = deterministic_vertices(&s, DEFAULT_ENUMERATION_LIMIT)?
        .iter()
        .map(|v| kcbs.functional(v).map(|x| rational::to_f64(&x) as i64))
        .collect::<Result<_, _>>()?;
    let min = values.iter().min().unwrap();
    let at_min = values.iter().filter(|v| *v == min).count();
    println!("over the 32 deterministic vertices: min {min}, attained by {at_min}, max {}", values.iter().max().unwrap());

    let report = coin.check_nondisturbance();
    println!("\nnondisturbing: {}", report.is_nondisturbing());
    let a0 = MeasurementId(0);
    for ctx in s.contexts_containing(a0) {
        let m = coin.marginalize(ctx, &[a0])?;
        let t: Vec<_> = m.table.iter().map(rational::format).collect();
        println!("marginal of A0 from {ctx}: [{}]", t.join(", "));
    }
    Ok(())
}
