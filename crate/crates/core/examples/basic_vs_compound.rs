// Both protocols recover the same matrix; the compound one needs fewer forms.

use zwm_tomography::{haar_random, plan_schedule, reconstruct, PhaseGridSpec, PhaseMode, Protocol, Simulator};

pub fn run_example() -> zwm_tomography::Result<()> {
    let spec = PhaseGridSpec::default();
    println!("  N  basic forms  compound forms  max |difference|");
    for n in 2..=8 {
        let u = haar_random(n, 7 * n as u64)?;
        let sim = Simulator::ideal(u);
        let basic = plan_schedule(n, Protocol::Basic, &spec)?;
        let compound = plan_schedule(n, Protocol::Compound, &spec)?;
        let a = reconstruct(&sim, &basic, PhaseMode::Absolute, None)?;
        let b = reconstruct(&sim, &compound, PhaseMode::Absolute, None)?;
        println!(
            "{n:>3}  {:>11}  {:>14}  {:.2e}",
            basic.forms.len(),
            compound.forms.len(),
            a.estimate.max_abs_diff(&b.estimate)?
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> zwm_tomography::Result<()> {
    run_example()
}
