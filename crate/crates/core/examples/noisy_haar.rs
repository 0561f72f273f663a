// Reconstruction of random unitaries under photon-counting noise, at several
// count levels.

use zwm_tomography::{
    haar_random, plan_schedule, reconstruct, NoiseConfig, PhaseGridSpec, PhaseMode, Protocol,
    Simulator,
};

pub fn run_example() -> zwm_tomography::Result<()> {
    let seeds = 10;
    println!("  N   counts/sample   median fidelity");
    for n in [3, 5, 8] {
        let u = haar_random(n, 2024 + n as u64)?;
        let plan = plan_schedule(n, Protocol::Compound, &PhaseGridSpec::default())?;
        for counts in [1e2, 1e4, 1e6] {
            let mut fids = Vec::with_capacity(seeds);
            for seed in 0..seeds as u64 {
                let sim = Simulator::new(u.clone(), 0.5, 1.0, NoiseConfig::poisson(counts, seed))?;
                let report = reconstruct(&sim, &plan, PhaseMode::Absolute, Some(&u))?;
                fids.push(report.fidelity_vs_truth.unwrap_or(0.0));
            }
            fids.sort_by(|a, b| a.total_cmp(b));
            println!("{n:>3}   {counts:>13.0e}   {:.6}", fids[seeds / 2]);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> zwm_tomography::Result<()> {
    run_example()
}
