//! Prints the attribute grid an external editing model should follow.

use openset_eval::augment::AttributePlan;

fn main() {
    let plan = AttributePlan::new(3);
    for c in &plan.combos {
        let extras: Vec<String> = c.extras.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!(
            "{:2}: hair={:?} eyeglasses={} facial_hair={:?} {}",
            c.index, c.hair, c.eyeglasses, c.facial_hair, extras.join(" ")
        );
    }
}
