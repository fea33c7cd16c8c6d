//! Analytic derivatives of the filtered Vora-Value with respect to the filter.
//!
//! With `A = P{X}`, `B = P{FQ}` and `C = F⁻¹` (all symmetric):
//!
//! ```text
//! ∇ν  = 2/3 · ediag(C B A (I - B))
//! ∇²ν = 2/3 · [ -2 (CB) ∘ ((I-B) A B C)
//!               +  (CBC) ∘ ((I-B) A)
//!               -  (C B A (I-2B)) ∘ (BC)
//!               -  (C B A B C) ∘ I ]
//! ```
//!
//! The regularized objective `μ = ν + (α/2)‖f‖²` has `∇μ = ∇ν + α f` and
//! `∇²μ = ∇²ν + α I`.

mod basis;
pub mod fd;

use nalgebra::{DMatrix, DVector};

pub use basis::{make_basis, BasisKind, BasisSet, BasisSpec};

use crate::error::{Error, Result};
use crate::projector::orthonormal_columns;
use crate::spectral::{check_positive, FilterSpectrum, SensorSet, WavelengthGrid};
use crate::vora::vora_of_bases;

/// `∂ν/∂f_i` (or `∂μ/∂f_i`, `∂ν/∂c_i`) on a wavelength grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    grid: WavelengthGrid,
    values: DVector<f64>,
}

impl GradientVector {
    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_values(self) -> DVector<f64> {
        self.values
    }
}

/// Symmetrized Hessian, `∇²ν + α I`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianMatrix {
    matrix: DMatrix<f64>,
    alpha: f64,
    asymmetry: f64,
}

impl HessianMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `max |H - Hᵀ|` of the assembled matrix before symmetrization.
    pub fn asymmetry(&self) -> f64 {
        self.asymmetry
    }
}

/// A camera/observer pair with the observer projector precomputed, for
/// repeated evaluation at many filters.
#[derive(Debug, Clone)]
pub struct VoraProblem<'a> {
    camera: &'a SensorSet,
    observer_basis: DMatrix<f64>,
    observer_projector: DMatrix<f64>,
}

/// Quantities shared by the gradient and Hessian at one filter.
struct FilterState {
    /// `1 / f`
    inv: DVector<f64>,
    /// `P{FQ}`
    proj: DMatrix<f64>,
}

impl<'a> VoraProblem<'a> {
    pub fn new(camera: &'a SensorSet, observer: &SensorSet) -> Result<Self> {
        if camera.grid() != observer.grid() {
            return Err(Error::GridMismatch);
        }
        let v = orthonormal_columns(observer.responses())?;
        // rank check on the camera up front so later failures are about the filter
        orthonormal_columns(camera.responses())?;
        let observer_projector = &v * v.transpose();
        Ok(Self {
            camera,
            observer_basis: v,
            observer_projector,
        })
    }

    pub fn grid(&self) -> &WavelengthGrid {
        self.camera.grid()
    }

    pub fn dim(&self) -> usize {
        self.camera.grid().count()
    }

    pub fn camera(&self) -> &SensorSet {
        self.camera
    }

    /// `P{X}`
    pub fn observer_projector(&self) -> &DMatrix<f64> {
        &self.observer_projector
    }

    fn filtered_basis(&self, f: &DVector<f64>) -> Result<DMatrix<f64>> {
        if f.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "filter has {} samples, grid has {}",
                f.len(),
                self.dim()
            )));
        }
        check_positive(f)?;
        let q = self.camera.responses();
        orthonormal_columns(&DMatrix::from_fn(q.nrows(), 3, |i, j| f[i] * q[(i, j)]))
    }

    fn state(&self, f: &DVector<f64>) -> Result<FilterState> {
        let w = self.filtered_basis(f)?;
        Ok(FilterState {
            inv: f.map(|x| 1.0 / x),
            proj: &w * w.transpose(),
        })
    }

    /// Raw `ν(diag(f) Q, X)`.
    pub fn value(&self, f: &DVector<f64>) -> Result<f64> {
        let w = self.filtered_basis(f)?;
        Ok(vora_of_bases(&w, &self.observer_basis))
    }

    /// `∇ν(f) = 2/3 · ediag(F⁻¹ P{FQ} P{X} (I - P{FQ}))`.
    pub fn gradient(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        let s = self.state(f)?;
        Ok(self.gradient_from(&s))
    }

    fn gradient_from(&self, s: &FilterState) -> DVector<f64> {
        let b = &s.proj;
        let ba = b * &self.observer_projector;
        let bab = &ba * b;
        DVector::from_fn(b.nrows(), |i, _| {
            // [B A (I - B)]_ii = [BA]_ii - [BAB]_ii
            2.0 / 3.0 * s.inv[i] * (ba[(i, i)] - bab[(i, i)])
        })
    }

    /// Value and gradient from one projector evaluation.
    pub fn value_and_gradient(&self, f: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let w = self.filtered_basis(f)?;
        let value = vora_of_bases(&w, &self.observer_basis);
        let s = FilterState {
            inv: f.map(|x| 1.0 / x),
            proj: &w * w.transpose(),
        };
        Ok((value, self.gradient_from(&s)))
    }

    /// `∇²ν(f) + α I`.
    pub fn hessian(&self, f: &DVector<f64>, alpha: f64) -> Result<HessianMatrix> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "alpha must be finite and nonnegative, got {alpha}"
            )));
        }
        let s = self.state(f)?;
        let n = self.dim();
        let a = &self.observer_projector;
        let b = &s.proj;
        let c = &s.inv;
        let eye = DMatrix::<f64>::identity(n, n);

        let cb = scale_rows(b, c);
        let bc = scale_cols(b, c);
        let cbc = scale_cols(&cb, c);
        let i_minus_b = &eye - b;
        let i_minus_2b = &eye - b * 2.0;
        let abc = a * &bc;
        let cba = &cb * a;

        let mut h = cb.component_mul(&(&i_minus_b * &abc)) * -2.0;
        h += cbc.component_mul(&(&i_minus_b * a));
        h -= (&cba * &i_minus_2b).component_mul(&bc);
        let cbabc = &cba * &bc;
        for i in 0..n {
            h[(i, i)] -= cbabc[(i, i)];
        }
        h *= 2.0 / 3.0;

        let asymmetry = (&h - h.transpose()).amax();
        let mut matrix = (&h + h.transpose()) * 0.5;
        for i in 0..n {
            matrix[(i, i)] += alpha;
        }
        Ok(HessianMatrix {
            matrix,
            alpha,
            asymmetry,
        })
    }
}

fn scale_rows(m: &DMatrix<f64>, s: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| s[i] * m[(i, j)])
}

fn scale_cols(m: &DMatrix<f64>, s: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * s[j])
}

fn check_filter_grid(camera: &SensorSet, filter: &FilterSpectrum) -> Result<()> {
    if filter.grid() != camera.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Analytic gradient of the filtered Vora-Value with respect to the filter.
pub fn gradient(
    camera: &SensorSet,
    observer: &SensorSet,
    filter: &FilterSpectrum,
) -> Result<GradientVector> {
    check_filter_grid(camera, filter)?;
    let problem = VoraProblem::new(camera, observer)?;
    Ok(GradientVector {
        grid: *camera.grid(),
        values: problem.gradient(filter.transmittance())?,
    })
}

/// `∇μ = ∇ν + α f`.
pub fn regularized_gradient(
    camera: &SensorSet,
    observer: &SensorSet,
    filter: &FilterSpectrum,
    alpha: f64,
) -> Result<GradientVector> {
    let mut g = gradient(camera, observer, filter)?;
    g.values += filter.transmittance() * alpha;
    Ok(g)
}

/// `∇²ν + α I`, symmetrized.
pub fn hessian(
    camera: &SensorSet,
    observer: &SensorSet,
    filter: &FilterSpectrum,
    alpha: f64,
) -> Result<HessianMatrix> {
    check_filter_grid(camera, filter)?;
    VoraProblem::new(camera, observer)?.hessian(filter.transmittance(), alpha)
}

/// `Bᵀ ∇ν(Bc)`: the gradient with respect to basis coefficients.
pub fn gradient_in_basis(
    camera: &SensorSet,
    observer: &SensorSet,
    basis: &BasisSet,
    coeffs: &DVector<f64>,
) -> Result<DVector<f64>> {
    if basis.grid() != camera.grid() {
        return Err(Error::GridMismatch);
    }
    let problem = VoraProblem::new(camera, observer)?;
    let f = basis.filter_values(coeffs)?;
    Ok(basis.matrix().tr_mul(&problem.gradient(&f)?))
}

/// `Bᵀ (∇²ν + α I) B` at `f = Bc`.
pub fn hessian_in_basis(
    camera: &SensorSet,
    observer: &SensorSet,
    basis: &BasisSet,
    coeffs: &DVector<f64>,
    alpha: f64,
) -> Result<DMatrix<f64>> {
    if basis.grid() != camera.grid() {
        return Err(Error::GridMismatch);
    }
    let problem = VoraProblem::new(camera, observer)?;
    let f = basis.filter_values(coeffs)?;
    let h = problem.hessian(&f, alpha)?;
    let b = basis.matrix();
    Ok(b.tr_mul(&(h.matrix() * b)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{cie1931_observer, reference_camera};

    fn fixtures() -> (SensorSet, SensorSet) {
        let grid = WavelengthGrid::default();
        (
            reference_camera(grid).unwrap(),
            cie1931_observer(grid).unwrap(),
        )
    }

    fn wavy_filter(n: usize) -> DVector<f64> {
        DVector::from_fn(n, |i, _| 0.55 + 0.4 * (i as f64 * 0.45).sin())
    }

    #[test]
    fn gradient_is_orthogonal_to_filter() {
        let (q, x) = fixtures();
        let p = VoraProblem::new(&q, &x).unwrap();
        let f = wavy_filter(31);
        let g = p.gradient(&f).unwrap();
        assert!(f.dot(&g).abs() <= 1e-10 * f.norm() * g.norm());
    }

    #[test]
    fn gradient_vanishes_for_colorimetric_camera() {
        let (_, x) = fixtures();
        let t = DMatrix::from_row_slice(3, 3, &[0.9, 0.2, 0.1, -0.3, 1.1, 0.0, 0.05, 0.4, 0.7]);
        let q = x.transformed(&t).unwrap();
        let g = gradient(&q, &x, &FilterSpectrum::ones(*x.grid())).unwrap();
        assert!(g.values().amax() < 1e-10, "{}", g.values().amax());
    }

    #[test]
    fn hessian_gradient_identity() {
        let (q, x) = fixtures();
        let p = VoraProblem::new(&q, &x).unwrap();
        let f = wavy_filter(31);
        let g = p.gradient(&f).unwrap();
        let h = p.hessian(&f, 0.0).unwrap();
        assert!(h.asymmetry() < 1e-9, "{}", h.asymmetry());
        assert!((&g + h.matrix() * &f).amax() < 1e-8);
    }

    #[test]
    fn regularized_hessian_adds_alpha_identity() {
        let (q, x) = fixtures();
        let p = VoraProblem::new(&q, &x).unwrap();
        let f = wavy_filter(31);
        let h0 = p.hessian(&f, 0.0).unwrap();
        let h1 = p.hessian(&f, 0.25).unwrap();
        let diff = h1.matrix() - h0.matrix();
        assert!((diff - DMatrix::identity(31, 31) * 0.25).amax() < 1e-15);
        assert!(p.hessian(&f, -1.0).is_err());
    }

    #[test]
    fn non_positive_filter_rejected() {
        let (q, x) = fixtures();
        let p = VoraProblem::new(&q, &x).unwrap();
        let mut f = wavy_filter(31);
        f[7] = 0.0;
        assert!(matches!(
            p.gradient(&f),
            Err(Error::NonPositiveFilter { index: 7, .. })
        ));
        assert!(matches!(
            p.hessian(&f, 0.0),
            Err(Error::NonPositiveFilter { index: 7, .. })
        ));
    }

    #[test]
    fn identity_basis_reproduces_gradient() {
        let (q, x) = fixtures();
        let grid = *q.grid();
        let basis = make_basis(BasisKind::Identity, 31, grid).unwrap();
        let f = wavy_filter(31);
        let direct = gradient(&q, &x, &FilterSpectrum::new(grid, f.clone()).unwrap()).unwrap();
        let via_basis = gradient_in_basis(&q, &x, &basis, &f).unwrap();
        assert!((direct.values() - via_basis).amax() < 1e-15);
    }

    #[test]
    fn basis_guard_rejects_non_positive_filter() {
        let (q, x) = fixtures();
        let basis = make_basis(BasisKind::Cosine, 4, *q.grid()).unwrap();
        let c = DVector::from_vec(vec![0.1, 1.0, 0.0, 0.0]);
        let err = gradient_in_basis(&q, &x, &basis, &c).unwrap_err();
        assert!(matches!(err, Error::NonPositiveFilter { .. }), "{err}");
    }
}
