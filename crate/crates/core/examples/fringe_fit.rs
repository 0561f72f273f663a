// Fits a sampled sinusoid and reads off visibility and phase.

use zwm_tomography::interferometer::{Sample, ValueKind};
use zwm_tomography::{fit_fringe, visibility_minmax, InterferencePattern, PhaseGridSpec};

pub fn run_example() -> zwm_tomography::Result<()> {
    let grid = PhaseGridSpec::default().grid()?;
    for (v, d) in [(0.5, 0.0), (0.8, 2.0), (0.25, -3.0), (1.0, std::f64::consts::PI)] {
        let pattern = InterferencePattern {
            setting: None,
            mode: 0,
            samples: grid
                .iter()
                .map(|&phi| Sample { phi, value: 0.5 * (1.0 + v * (phi + d).sin()) })
                .collect(),
            value_kind: ValueKind::Probability,
            scale: 0.5,
            coherence: 1.0,
        };
        let fit = fit_fringe(&pattern)?;
        println!(
            "true (v={v:.2}, d={d:+.4})  fit (v={:.12}, d={:+.12})  min/max v={:.4}  rms={:.1e}",
            fit.visibility,
            fit.phase,
            visibility_minmax(&pattern)?,
            fit.residual_rms
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> zwm_tomography::Result<()> {
    run_example()
}
