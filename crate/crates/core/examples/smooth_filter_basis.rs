//! Optimizing over a smooth cosine basis, `f = B c`.

use vora_filter::{
    cie1931_observer, optimize, reference_camera, BasisSpec, Method, OptimizerConfig,
    WavelengthGrid,
};

fn main() -> vora_filter::Result<()> {
    let grid = WavelengthGrid::default();
    let camera = reference_camera(grid)?;
    let observer = cie1931_observer(grid)?;

    for size in [2, 4, 8, 16] {
        let config = OptimizerConfig {
            method: Method::Newton,
            basis: Some(format!("cosine:{size}").parse::<BasisSpec>()?),
            ..OptimizerConfig::default()
        };
        let report = optimize(&camera, &observer, &config)?;
        let c = report
            .coefficients
            .as_ref()
            .expect("basis run has coefficients");
        println!(
            "cosine:{size:<2}  vora {:.12}  steps {:3}  c0 {:+.4}",
            report.final_vora,
            report.steps(),
            c[0]
        );
    }
    Ok(())
}
