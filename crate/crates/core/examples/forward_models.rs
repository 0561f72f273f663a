// The closed-form fringe and the explicit two-photon state give the same
// detected rate.

use zwm_tomography::forms::round_robin;
use zwm_tomography::{
    closed_form_pattern, haar_random, statevector_pattern, CompoundForm, PhaseGridSpec,
};

pub fn run_example() -> zwm_tomography::Result<()> {
    let grid = PhaseGridSpec::default().grid()?;
    for n in [2, 3, 5, 8] {
        let u = haar_random(n, n as u64)?;
        let mut worst = 0.0f64;
        for pairs in round_robin(n) {
            for theta in [0.0, std::f64::consts::FRAC_PI_2] {
                let o = CompoundForm::new(pairs.clone(), theta, n)?.matrix();
                for mode in 0..n {
                    let a = closed_form_pattern(&u, &o, mode, &grid, 0.5, 1.0)?;
                    let b = statevector_pattern(&u, &o, mode, &grid, 0.5)?;
                    for (x, y) in a.values().zip(b.values()) {
                        worst = worst.max((x - y).abs());
                    }
                }
            }
        }
        println!("N = {n}: max |closed form - state vector| = {worst:.2e}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> zwm_tomography::Result<()> {
    run_example()
}
