//! Parses the bundled 5 nm CIE table and resamples it onto a coarser grid.

use vora_filter::spectral::{
    parse_spectral_csv, resample_to_grid, write_spectral_csv, CIE1931_2DEG_CSV,
};
use vora_filter::WavelengthGrid;

fn main() -> vora_filter::Result<()> {
    let table = parse_spectral_csv(CIE1931_2DEG_CSV, 3)?;
    println!(
        "{} rows, {}..{} nm, channels {:?}",
        table.wavelengths.len(),
        table.wavelengths[0],
        table.wavelengths[table.wavelengths.len() - 1],
        table.channels
    );

    let grid: WavelengthGrid = "420:20:15".parse()?;
    let values = resample_to_grid(&table.wavelengths, &table.values, &grid)?;
    let wavelengths: Vec<f64> = grid.wavelengths().collect();
    print!(
        "{}",
        write_spectral_csv(&wavelengths, &["x", "y", "z"], &values)
    );
    Ok(())
}
