//! Vora-Value of the synthetic Gaussian camera against the CIE 1931 observer,
//! with and without a filter in front of it.

use nalgebra::{DMatrix, DVector};
use vora_filter::{
    cie1931_observer, filtered_vora_value, reference_camera, vora_value, FilterSpectrum,
    WavelengthGrid,
};

fn main() -> vora_filter::Result<()> {
    let grid = WavelengthGrid::default();
    let observer = cie1931_observer(grid)?;
    let camera = reference_camera(grid)?;

    println!("grid {grid}");
    println!(
        "camera vs observer      {:.12}",
        vora_value(&camera, &observer)?.value()
    );

    let mixing = DMatrix::from_row_slice(3, 3, &[0.9, 0.2, 0.0, 0.1, 1.0, 0.1, 0.0, 0.3, 1.2]);
    let colorimetric = observer.transformed(&mixing)?;
    println!(
        "mixed observer          {:.12}",
        vora_value(&colorimetric, &observer)?.value()
    );

    let yellowish = FilterSpectrum::new(
        grid,
        DVector::from_iterator(
            grid.count(),
            grid.wavelengths()
                .map(|w| 0.4 + 0.6 * ((w - 400.0) / 300.0)),
        ),
    )?;
    println!(
        "camera behind ramp      {:.12}",
        filtered_vora_value(&camera, &observer, &yellowish)?.value()
    );
    Ok(())
}
