//! Spectral data: wavelength grids, CSV ingestion, resampling and the two
//! spectral quantities every computation works with, sensor sets (`Q`, `X`)
//! and filter transmittances (`f`).

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tolerance, in nanometres, under which a source wavelength is treated as
/// coinciding with a grid point.
const WAVELENGTH_EPS: f64 = 1e-9;

/// CIE 1931 2-degree colour matching functions, 400-700 nm at 5 nm.
pub const CIE1931_2DEG_CSV: &str = include_str!("../data/cie1931_2deg_5nm.csv");

/// Synthetic Gaussian RGB camera (600/550/450 nm peaks, 30 nm sigma), 400-700 nm at 5 nm.
pub const GAUSSIAN_CAMERA_CSV: &str = include_str!("../data/gaussian_camera.csv");

/// Peaks of the reference synthetic camera, in channel order r, g, b.
pub const GAUSSIAN_CAMERA_PEAKS: [f64; 3] = [600.0, 550.0, 450.0];
pub const GAUSSIAN_CAMERA_SIGMA: f64 = 30.0;

/// A uniform sampling lattice `start, start + step, ..., start + (count - 1) step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavelengthGrid {
    start_nm: f64,
    step_nm: f64,
    count: usize,
}

impl WavelengthGrid {
    pub const MIN_COUNT: usize = 4;

    pub fn new(start_nm: f64, step_nm: f64, count: usize) -> Result<Self> {
        if !start_nm.is_finite() || !step_nm.is_finite() {
            return Err(Error::InvalidGrid("start and step must be finite".into()));
        }
        if step_nm <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "step must be positive, got {step_nm}"
            )));
        }
        if count < Self::MIN_COUNT {
            return Err(Error::InvalidGrid(format!(
                "count must be at least {}, got {count}",
                Self::MIN_COUNT
            )));
        }
        Ok(Self {
            start_nm,
            step_nm,
            count,
        })
    }

    pub fn start_nm(&self) -> f64 {
        self.start_nm
    }

    pub fn step_nm(&self) -> f64 {
        self.step_nm
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn end_nm(&self) -> f64 {
        self.wavelength(self.count - 1)
    }

    pub fn wavelength(&self, i: usize) -> f64 {
        self.start_nm + i as f64 * self.step_nm
    }

    pub fn wavelengths(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.count).map(|i| self.wavelength(i))
    }
}

impl Default for WavelengthGrid {
    /// 400-700 nm every 10 nm, 31 samples.
    fn default() -> Self {
        Self {
            start_nm: 400.0,
            step_nm: 10.0,
            count: 31,
        }
    }
}

impl FromStr for WavelengthGrid {
    type Err = Error;

    /// Parses `start:step:count`, e.g. `400:10:31`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::InvalidGrid(format!(
                "expected start:step:count, got {s:?}"
            )));
        }
        let bad = |what: &str| Error::InvalidGrid(format!("cannot parse {what} in {s:?}"));
        let start = parts[0].parse::<f64>().map_err(|_| bad("start"))?;
        let step = parts[1].parse::<f64>().map_err(|_| bad("step"))?;
        let count = parts[2].parse::<usize>().map_err(|_| bad("count"))?;
        Self::new(start, step, count)
    }
}

impl fmt::Display for WavelengthGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start_nm, self.step_nm, self.count)
    }
}

/// Raw samples of a spectral CSV file, before resampling.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralTable {
    pub wavelengths: Vec<f64>,
    pub channels: Vec<String>,
    /// One row per wavelength, one column per channel.
    pub values: DMatrix<f64>,
}

/// Parses `wavelength,<c1>[,<c2>,...]` CSV text with exactly
/// `expected_channels` value columns.
///
/// Lines starting with `#` and blank lines are skipped. Rows must be
/// strictly ascending in wavelength.
pub fn parse_spectral_csv(text: &str, expected_channels: usize) -> Result<SpectralTable> {
    let header_line = text
        .lines()
        .position(|l| {
            let l = l.trim();
            !l.is_empty() && !l.starts_with('#')
        })
        .map_or(1, |i| i as u64 + 1);

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .has_headers(true)
        .from_reader(text.as_bytes());

    let header = reader
        .headers()
        .map_err(|e| csv_error(e, header_line))?
        .clone();
    if header.is_empty() || header.iter().all(str::is_empty) {
        return Err(Error::MalformedCsv {
            line: header_line,
            reason: "missing header row".into(),
        });
    }
    if !header[0].eq_ignore_ascii_case("wavelength") {
        return Err(Error::MalformedCsv {
            line: header_line,
            reason: format!("first column must be `wavelength`, got {:?}", &header[0]),
        });
    }
    if header.len() != expected_channels + 1 {
        return Err(Error::MalformedCsv {
            line: header_line,
            reason: format!(
                "expected {expected_channels} value column(s), header has {}",
                header.len() - 1
            ),
        });
    }
    let channels: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();

    let mut wavelengths = Vec::new();
    let mut flat = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, header_line))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != expected_channels + 1 {
            return Err(Error::MalformedCsv {
                line,
                reason: format!(
                    "expected {} fields, found {}",
                    expected_channels + 1,
                    record.len()
                ),
            });
        }
        let mut cells = record.iter().map(|cell| {
            cell.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::MalformedCsv {
                    line,
                    reason: format!("not a finite number: {cell:?}"),
                })
        });
        let wavelength = cells.next().expect("arity checked")?;
        if let Some(&prev) = wavelengths.last() {
            if wavelength == prev {
                return Err(Error::DuplicateWavelength { line, wavelength });
            }
            if wavelength < prev {
                return Err(Error::UnsortedWavelength { line, wavelength });
            }
        }
        wavelengths.push(wavelength);
        for cell in cells {
            flat.push(cell?);
        }
    }
    if wavelengths.is_empty() {
        return Err(Error::MalformedCsv {
            line: header_line,
            reason: "no data rows".into(),
        });
    }
    let values = DMatrix::from_row_slice(wavelengths.len(), expected_channels, &flat);
    Ok(SpectralTable {
        wavelengths,
        channels,
        values,
    })
}

fn csv_error(err: csv::Error, fallback_line: u64) -> Error {
    let line = err.position().map_or(fallback_line, |p| p.line());
    Error::MalformedCsv {
        line,
        reason: err.to_string(),
    }
}

/// Formats a value with 17 significant digits, enough to round-trip any `f64`.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serializes samples in the format read by [`parse_spectral_csv`].
pub fn write_spectral_csv(wavelengths: &[f64], channels: &[&str], values: &DMatrix<f64>) -> String {
    assert_eq!(values.nrows(), wavelengths.len());
    assert_eq!(values.ncols(), channels.len());
    let mut out = String::from("wavelength");
    for c in channels {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (i, w) in wavelengths.iter().enumerate() {
        out.push_str(&w.to_string());
        for j in 0..values.ncols() {
            out.push(',');
            out.push_str(&format_value(values[(i, j)]));
        }
        out.push('\n');
    }
    out
}

/// Linearly interpolates every column of `values` onto `grid`.
///
/// Grid points that coincide with a source wavelength copy that row
/// exactly. Source samples outside the grid are ignored; the grid may not
/// extend beyond the source range.
pub fn resample_to_grid(
    wavelengths: &[f64],
    values: &DMatrix<f64>,
    grid: &WavelengthGrid,
) -> Result<DMatrix<f64>> {
    if values.nrows() != wavelengths.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} wavelengths but {} rows",
            wavelengths.len(),
            values.nrows()
        )));
    }
    let (first, last) = match (wavelengths.first(), wavelengths.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => {
            return Err(Error::InsufficientCoverage {
                source_start: f64::NAN,
                source_end: f64::NAN,
                grid_start: grid.start_nm(),
                grid_end: grid.end_nm(),
            })
        }
    };
    if grid.start_nm() < first - WAVELENGTH_EPS || grid.end_nm() > last + WAVELENGTH_EPS {
        return Err(Error::InsufficientCoverage {
            source_start: first,
            source_end: last,
            grid_start: grid.start_nm(),
            grid_end: grid.end_nm(),
        });
    }

    let mut out = DMatrix::zeros(grid.count(), values.ncols());
    for (row, lambda) in grid.wavelengths().enumerate() {
        let j = wavelengths.partition_point(|&w| w < lambda - WAVELENGTH_EPS);
        if j < wavelengths.len() && (wavelengths[j] - lambda).abs() <= WAVELENGTH_EPS {
            out.row_mut(row).copy_from(&values.row(j));
            continue;
        }
        // coverage check guarantees 0 < j < len here
        let (w0, w1) = (wavelengths[j - 1], wavelengths[j]);
        let t = (lambda - w0) / (w1 - w0);
        for col in 0..values.ncols() {
            out[(row, col)] = values[(j - 1, col)] * (1.0 - t) + values[(j, col)] * t;
        }
    }
    Ok(out)
}

/// Relative threshold used when counting singular values: `sigma_1 * rows * eps * 1e3`.
pub fn rank_tolerance(largest_singular_value: f64, rows: usize) -> f64 {
    largest_singular_value * rows as f64 * f64::EPSILON * 1e3
}

pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let largest = sv.iter().copied().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    let tol = rank_tolerance(largest, m.nrows());
    sv.iter().filter(|&&s| s > tol).count()
}

/// An `n x 3` matrix of sensor responses (camera `Q` or observer `X`):
/// rows are wavelengths, columns are channels.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorSet {
    grid: WavelengthGrid,
    responses: DMatrix<f64>,
    channel_names: [String; 3],
}

impl SensorSet {
    pub fn new(
        grid: WavelengthGrid,
        responses: DMatrix<f64>,
        channel_names: [String; 3],
    ) -> Result<Self> {
        if responses.nrows() != grid.count() || responses.ncols() != 3 {
            return Err(Error::ShapeMismatch(format!(
                "sensor set must be {}x3, got {}x{}",
                grid.count(),
                responses.nrows(),
                responses.ncols()
            )));
        }
        if responses.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("sensor responses"));
        }
        let rank = numerical_rank(&responses);
        if rank < 3 {
            return Err(Error::RankDeficient { rank, expected: 3 });
        }
        Ok(Self {
            grid,
            responses,
            channel_names,
        })
    }

    /// Builds a sensor set with default channel names `c1, c2, c3`.
    pub fn from_matrix(grid: WavelengthGrid, responses: DMatrix<f64>) -> Result<Self> {
        Self::new(grid, responses, ["c1".into(), "c2".into(), "c3".into()])
    }

    /// Parses and resamples a three-channel spectral CSV.
    pub fn from_csv(text: &str, grid: WavelengthGrid) -> Result<Self> {
        let table = parse_spectral_csv(text, 3)?;
        let responses = resample_to_grid(&table.wavelengths, &table.values, &grid)?;
        let [a, b, c]: [String; 3] = table.channels.try_into().expect("three channels parsed");
        Self::new(grid, responses, [a, b, c])
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn responses(&self) -> &DMatrix<f64> {
        &self.responses
    }

    pub fn channel_names(&self) -> &[String; 3] {
        &self.channel_names
    }

    /// Right-multiplies the responses by a 3x3 matrix (`Q T`).
    pub fn transformed(&self, t: &DMatrix<f64>) -> Result<Self> {
        if t.shape() != (3, 3) {
            return Err(Error::ShapeMismatch("transform must be 3x3".into()));
        }
        Self::new(self.grid, &self.responses * t, self.channel_names.clone())
    }

    pub fn to_csv(&self) -> String {
        let wavelengths: Vec<f64> = self.grid.wavelengths().collect();
        let names: Vec<&str> = self.channel_names.iter().map(String::as_str).collect();
        write_spectral_csv(&wavelengths, &names, &self.responses)
    }
}

/// Reads a three-channel CSV file and resamples it onto `grid`.
pub fn load_sensor_set(path: impl AsRef<Path>, grid: WavelengthGrid) -> Result<SensorSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
    SensorSet::from_csv(&text, grid).map_err(|e| e.in_file(path))
}

/// CIE 1931 2-degree observer resampled onto `grid`.
pub fn cie1931_observer(grid: WavelengthGrid) -> Result<SensorSet> {
    SensorSet::from_csv(CIE1931_2DEG_CSV, grid)
}

/// A camera whose channels are unit-height Gaussians.
pub fn gaussian_camera(grid: WavelengthGrid, peaks: [f64; 3], sigma: f64) -> Result<SensorSet> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sigma must be positive, got {sigma}"
        )));
    }
    let responses = DMatrix::from_fn(grid.count(), 3, |i, j| {
        let d = grid.wavelength(i) - peaks[j];
        (-d * d / (2.0 * sigma * sigma)).exp()
    });
    SensorSet::new(grid, responses, ["r".into(), "g".into(), "b".into()])
}

/// The reference synthetic camera: peaks at 600/550/450 nm, sigma 30 nm.
pub fn reference_camera(grid: WavelengthGrid) -> Result<SensorSet> {
    gaussian_camera(grid, GAUSSIAN_CAMERA_PEAKS, GAUSSIAN_CAMERA_SIGMA)
}

/// Per-wavelength transmittance `f` of a filter. Every entry is finite and
/// strictly positive so that `diag(f)` is invertible.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpectrum {
    grid: WavelengthGrid,
    transmittance: DVector<f64>,
}

impl FilterSpectrum {
    pub fn new(grid: WavelengthGrid, transmittance: DVector<f64>) -> Result<Self> {
        if transmittance.len() != grid.count() {
            return Err(Error::ShapeMismatch(format!(
                "filter has {} samples, grid has {}",
                transmittance.len(),
                grid.count()
            )));
        }
        check_positive(&transmittance)?;
        Ok(Self {
            grid,
            transmittance,
        })
    }

    pub fn ones(grid: WavelengthGrid) -> Self {
        Self {
            grid,
            transmittance: DVector::from_element(grid.count(), 1.0),
        }
    }

    pub fn from_csv(text: &str, grid: WavelengthGrid) -> Result<Self> {
        let table = parse_spectral_csv(text, 1)?;
        let resampled = resample_to_grid(&table.wavelengths, &table.values, &grid)?;
        Self::new(grid, resampled.column(0).into_owned())
    }

    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn transmittance(&self) -> &DVector<f64> {
        &self.transmittance
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.grid, &self.transmittance * k)
    }

    /// `f / max(f)`; the Vora-Value does not depend on the filter's scale.
    pub fn normalized(&self) -> Self {
        let max = self.transmittance.max();
        Self {
            grid: self.grid,
            transmittance: &self.transmittance / max,
        }
    }

    pub fn is_within(&self, tau_min: f64, tau_max: f64) -> bool {
        self.transmittance
            .iter()
            .all(|&t| t >= tau_min && t <= tau_max)
    }

    /// CSV with header `wavelength,transmittance`.
    pub fn to_csv(&self) -> String {
        let wavelengths: Vec<f64> = self.grid.wavelengths().collect();
        let values =
            DMatrix::from_column_slice(self.grid.count(), 1, self.transmittance.as_slice());
        write_spectral_csv(&wavelengths, &["transmittance"], &values)
    }
}

pub(crate) fn check_positive(values: &DVector<f64>) -> Result<()> {
    for (index, &value) in values.iter().enumerate() {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositiveFilter { index, value });
        }
    }
    Ok(())
}

pub fn load_filter(path: impl AsRef<Path>, grid: WavelengthGrid) -> Result<FilterSpectrum> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
    FilterSpectrum::from_csv(&text, grid).map_err(|e| e.in_file(path))
}
