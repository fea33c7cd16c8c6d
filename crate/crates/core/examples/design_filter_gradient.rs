//! Projected gradient ascent on the filter transmittance.

use vora_filter::{
    cie1931_observer, optimize, reference_camera, Method, OptimizerConfig, WavelengthGrid,
};

fn main() -> vora_filter::Result<()> {
    let grid = WavelengthGrid::default();
    let camera = reference_camera(grid)?;
    let observer = cie1931_observer(grid)?;
    let config = OptimizerConfig {
        method: Method::Gradient,
        ..OptimizerConfig::default()
    };
    let report = optimize(&camera, &observer, &config)?;

    for r in report
        .iterations
        .iter()
        .filter(|r| r.iter.is_power_of_two() || r.iter == 0)
    {
        println!(
            "iter {:5}  vora {:.12}  |g| {:.2e}",
            r.iter, r.vora, r.grad_norm
        );
    }
    println!(
        "{} after {} steps: {:.12} -> {:.12}",
        report.termination,
        report.steps(),
        report.initial_vora,
        report.final_vora
    );
    let f = report.normalized_filter();
    for (w, t) in grid.wavelengths().zip(f.transmittance().iter()).step_by(3) {
        println!("{w:5.0} nm  {t:.4}");
    }
    Ok(())
}
