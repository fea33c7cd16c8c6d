//! Regularized Newton against gradient ascent on the same camera.

use std::time::Instant;

use vora_filter::{
    cie1931_observer, optimize, reference_camera, Method, OptimizerConfig, WavelengthGrid,
};

fn main() -> vora_filter::Result<()> {
    let grid = WavelengthGrid::default();
    let camera = reference_camera(grid)?;
    let observer = cie1931_observer(grid)?;

    for (method, alpha) in [
        (Method::Gradient, 1e-4),
        (Method::Newton, 1e-4),
        (Method::Newton, 1e-2),
    ] {
        let config = OptimizerConfig {
            method,
            alpha,
            ..OptimizerConfig::default()
        };
        let start = Instant::now();
        let report = optimize(&camera, &observer, &config)?;
        println!(
            "{method:<6} alpha {alpha:.0e}: vora {:.12} in {:5} steps ({}, {:.1} ms)",
            report.final_vora,
            report.steps(),
            report.termination,
            start.elapsed().as_secs_f64() * 1e3
        );
    }
    Ok(())
}
