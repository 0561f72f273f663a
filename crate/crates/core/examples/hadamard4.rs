// Reconstructs the four-dimensional Hadamard gate with the compound protocol
// and prints each element next to its exact value.

use zwm_tomography::{named_gate, plan_schedule, reconstruct, PhaseGridSpec, PhaseMode, Protocol, Simulator};

pub fn run_example() -> zwm_tomography::Result<()> {
    let h = named_gate("hadamard4", 4)?;
    let plan = plan_schedule(4, Protocol::Compound, &PhaseGridSpec::default())?;
    println!("{} forms, {} settings", plan.forms.len(), plan.settings.len());

    let report = reconstruct(&Simulator::ideal(h.clone()), &plan, PhaseMode::Absolute, Some(&h))?;
    println!("row col   |U^|      arg U^    arg U");
    for row in 0..4 {
        for col in 0..4 {
            let got = report.estimate.get(row, col);
            let want = h.matrix().get(row, col);
            println!("{row:>3} {col:>3}  {:.6}  {:+.6}  {:+.6}", got.norm(), got.arg(), want.arg());
        }
    }
    println!("fidelity: {:.15}", report.fidelity_vs_truth.unwrap_or(f64::NAN));
    Ok(())
}

#[allow(dead_code)]
fn main() -> zwm_tomography::Result<()> {
    run_example()
}
