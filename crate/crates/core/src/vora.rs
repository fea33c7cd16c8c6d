//! The Vora-Value `ν(Q, X) = tr(P{Q} P{X}) / 3` and its filtered variant.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::projector::orthonormalize;
use crate::spectral::{FilterSpectrum, SensorSet};

/// A Vora-Value. The raw value can stray outside `[0, 1]` by rounding;
/// [`VoraValue::value`] clamps it for reporting.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct VoraValue {
    raw: f64,
}

impl VoraValue {
    pub fn raw(&self) -> f64 {
        self.raw
    }

    pub fn value(&self) -> f64 {
        self.raw.clamp(0.0, 1.0)
    }
}

/// `tr(W Wᵀ V Vᵀ) / 3` for orthonormal `W` and `V`, evaluated as `‖Wᵀ V‖²_F / 3`.
pub(crate) fn vora_of_bases(w: &DMatrix<f64>, v: &DMatrix<f64>) -> f64 {
    w.tr_mul(v).norm_squared() / 3.0
}

pub fn vora_value(camera: &SensorSet, observer: &SensorSet) -> Result<VoraValue> {
    if camera.grid() != observer.grid() {
        return Err(Error::GridMismatch);
    }
    let w = orthonormalize(camera)?;
    let v = orthonormalize(observer)?;
    Ok(VoraValue {
        raw: vora_of_bases(w.basis(), v.basis()),
    })
}

/// Vora-Value of the filtered camera `diag(f) Q` against the observer.
pub fn filtered_vora_value(
    camera: &SensorSet,
    observer: &SensorSet,
    filter: &FilterSpectrum,
) -> Result<VoraValue> {
    if filter.grid() != camera.grid() {
        return Err(Error::GridMismatch);
    }
    let filtered = SensorSet::new(
        *camera.grid(),
        filter_responses(camera.responses(), filter),
        camera.channel_names().clone(),
    )?;
    vora_value(&filtered, observer)
}

/// `diag(f) Q` without materializing the diagonal matrix.
pub(crate) fn filter_responses(q: &DMatrix<f64>, filter: &FilterSpectrum) -> DMatrix<f64> {
    let f = filter.transmittance();
    DMatrix::from_fn(q.nrows(), q.ncols(), |i, j| f[i] * q[(i, j)])
}

/// `μ(f) = ν(FQ, X) + (α/2) fᵀf`, the primitive whose gradient is `∇ν + α f`.
pub fn regularized_objective(
    camera: &SensorSet,
    observer: &SensorSet,
    filter: &FilterSpectrum,
    alpha: f64,
) -> Result<f64> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "alpha must be nonnegative, got {alpha}"
        )));
    }
    let nu = filtered_vora_value(camera, observer, filter)?.raw();
    Ok(nu + 0.5 * alpha * filter.transmittance().norm_squared())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{cie1931_observer, reference_camera, WavelengthGrid};

    #[test]
    fn observer_against_itself_is_one() {
        let x = cie1931_observer(WavelengthGrid::default()).unwrap();
        let v = vora_value(&x, &x).unwrap();
        assert!((v.raw() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_filter_is_neutral() {
        let grid = WavelengthGrid::default();
        let x = cie1931_observer(grid).unwrap();
        let q = reference_camera(grid).unwrap();
        let plain = vora_value(&q, &x).unwrap();
        let filtered = filtered_vora_value(&q, &x, &FilterSpectrum::ones(grid)).unwrap();
        assert_eq!(plain, filtered);
        assert!(plain.raw() > 0.0 && plain.raw() < 1.0);
    }

    #[test]
    fn regularizer_adds_half_alpha_norm() {
        let grid = WavelengthGrid::default();
        let x = cie1931_observer(grid).unwrap();
        let q = reference_camera(grid).unwrap();
        let ones = FilterSpectrum::ones(grid);
        let nu = filtered_vora_value(&q, &x, &ones).unwrap().raw();
        assert_eq!(regularized_objective(&q, &x, &ones, 0.0).unwrap(), nu);
        assert_eq!(
            regularized_objective(&q, &x, &ones, 2.0).unwrap(),
            nu + 31.0
        );
        assert!(regularized_objective(&q, &x, &ones, -1.0).is_err());
    }

    #[test]
    fn grid_mismatch() {
        let x = cie1931_observer(WavelengthGrid::default()).unwrap();
        let q = reference_camera(WavelengthGrid::new(400.0, 5.0, 61).unwrap()).unwrap();
        assert!(matches!(vora_value(&q, &x), Err(Error::GridMismatch)));
    }

    #[test]
    fn clamped_reporting() {
        assert_eq!(VoraValue { raw: 1.0 + 1e-15 }.value(), 1.0);
        assert_eq!(VoraValue { raw: -1e-15 }.value(), 0.0);
    }
}
