// Writes simulated patterns to disk, then reconstructs from the files alone,
// as one would with measured data.

use zwm_tomography::io::{write_json, write_pattern, DirectorySource};
use zwm_tomography::{
    haar_random, plan_schedule, reconstruct, NoiseConfig, PatternSource, PhaseGridSpec, PhaseMode,
    Protocol, Simulator,
};

pub fn run_example() -> zwm_tomography::Result<()> {
    let dir = std::env::temp_dir().join(format!("zwm-pattern-files-{}", std::process::id()));
    let u = haar_random(4, 8)?;
    let sim = Simulator::new(u.clone(), 0.5, 1.0, NoiseConfig::poisson(1e5, 1))?;
    let plan = plan_schedule(4, Protocol::Compound, &PhaseGridSpec::default())?;
    for setting in &plan.settings {
        write_pattern(&dir, 4, &sim.simulate(setting)?, sim.noise(), sim.seeds())?;
    }
    write_json(&dir.join("plan.json"), &plan)?;
    println!("wrote {} patterns to {}", plan.settings.len(), dir.display());

    let source = DirectorySource::new(&dir, 4);
    let report = reconstruct(&source, &source.plan()?, PhaseMode::Absolute, Some(&u))?;
    println!("fidelity from files: {:.6}", report.fidelity_vs_truth.unwrap_or(f64::NAN));
    std::fs::remove_dir_all(&dir).map_err(|e| zwm_tomography::Error::io(&dir, e))?;
    Ok(())
}

#[allow(dead_code)]
fn main() -> zwm_tomography::Result<()> {
    run_example()
}
