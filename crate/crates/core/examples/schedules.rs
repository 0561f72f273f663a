// Round-robin pairing of modes into compound forms, and the per-setting
// element map of a plan.

use zwm_tomography::forms::round_robin;
use zwm_tomography::{plan_schedule, PhaseGridSpec, Protocol};

pub fn run_example() -> zwm_tomography::Result<()> {
    for n in [4, 5, 8] {
        let forms = round_robin(n);
        println!("N = {n}: {} compound forms", forms.len());
        for (i, f) in forms.iter().enumerate() {
            println!("  {i}: {f:?}");
        }
    }

    let spec = PhaseGridSpec::default();
    for protocol in [Protocol::Basic, Protocol::Compound] {
        let plan = plan_schedule(4, protocol, &spec)?;
        println!("{protocol:?} at N = 4: {} forms, {} settings", plan.forms.len(), plan.settings.len());
    }

    let plan = plan_schedule(4, Protocol::Compound, &spec)?;
    println!("setting  form  theta  mode  ->  element  rule");
    for t in plan.element_map.iter().filter(|t| t.primary) {
        println!(
            "{:>7} {:>5}  {:>5}  {:>4}  ->  U[{}][{}]  {:?}",
            t.setting_id,
            t.form_index,
            if t.theta == zwm_tomography::ThetaChoice::Zero { "0" } else { "pi/2" },
            t.mode,
            t.row,
            t.col,
            t.rule
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> zwm_tomography::Result<()> {
    run_example()
}
