// When the interferometer phase carries an unknown offset, absolute
// reconstruction fails but relative mode recovers the unitary up to a global
// phase.

use zwm_tomography::{
    haar_random, plan_schedule, reconstruct, verify_report, NoiseConfig, PhaseGridSpec, PhaseMode,
    PhaseOffsetMode, Protocol, Simulator,
};

pub fn run_example() -> zwm_tomography::Result<()> {
    let u = haar_random(5, 17)?;
    let noise = NoiseConfig {
        phase_offset_mode: PhaseOffsetMode::Hidden,
        master_seed: 99,
        ..NoiseConfig::default()
    };
    let sim = Simulator::new(u.clone(), 0.5, 1.0, noise)?;
    let plan = plan_schedule(5, Protocol::Compound, &PhaseGridSpec::default())?;
    println!("hidden offset: {:+.6} rad", sim.hidden_offset());

    for mode in [PhaseMode::Absolute, PhaseMode::Relative] {
        let report = reconstruct(&sim, &plan, mode, Some(&u))?;
        let summary = verify_report(&report, 1e-6, 1e-6);
        println!(
            "{mode:?}: verification {}, {} of {} elements off",
            if summary.passed { "passed" } else { "failed" },
            summary.failures().count(),
            summary.checks.len()
        );
        println!("  convention: {:?}", report.phase_convention);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> zwm_tomography::Result<()> {
    run_example()
}
