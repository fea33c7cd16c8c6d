//! Central finite differences, used as independent oracles for the
//! analytic derivatives.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default step for differencing the objective.
pub const GRADIENT_STEP: f64 = 1e-6;
/// Default step for differencing the analytic gradient.
pub const HESSIAN_STEP: f64 = 1e-5;

/// `(g(x + h eᵢ) - g(x - h eᵢ)) / 2h` for every coordinate, without any
/// domain restriction on `x`.
pub fn central_difference<F>(point: &DVector<f64>, h: f64, mut objective: F) -> Result<DVector<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<f64>,
{
    check_step(h)?;
    let mut out = DVector::zeros(point.len());
    let mut x = point.clone();
    for i in 0..point.len() {
        x[i] = point[i] + h;
        let up = objective(&x)?;
        x[i] = point[i] - h;
        let down = objective(&x)?;
        x[i] = point[i];
        out[i] = (up - down) / (2.0 * h);
    }
    Ok(out)
}

/// Jacobian of a vector function by central differences; column `j` holds
/// the derivative with respect to `x_j`.
pub fn central_difference_jacobian<G>(
    point: &DVector<f64>,
    h: f64,
    mut function: G,
) -> Result<DMatrix<f64>>
where
    G: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    check_step(h)?;
    let n = point.len();
    let mut x = point.clone();
    let mut columns = Vec::with_capacity(n);
    for j in 0..n {
        x[j] = point[j] + h;
        let up = function(&x)?;
        x[j] = point[j] - h;
        let down = function(&x)?;
        x[j] = point[j];
        columns.push((up - down) / (2.0 * h));
    }
    if columns.is_empty() {
        return Ok(DMatrix::zeros(0, 0));
    }
    Ok(DMatrix::from_columns(&columns))
}

/// Finite-difference gradient of a filter objective. Every perturbed filter
/// must stay strictly positive.
pub fn fd_gradient<F>(objective: F, filter: &DVector<f64>, h: f64) -> Result<DVector<f64>>
where
    F: FnMut(&DVector<f64>) -> Result<f64>,
{
    check_positive_perturbation(filter, h)?;
    central_difference(filter, h, objective)
}

/// Finite-difference Hessian from an analytic gradient function.
pub fn fd_hessian<G>(gradient: G, filter: &DVector<f64>, h: f64) -> Result<DMatrix<f64>>
where
    G: FnMut(&DVector<f64>) -> Result<DVector<f64>>,
{
    check_positive_perturbation(filter, h)?;
    central_difference_jacobian(filter, h, gradient)
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "step must be positive, got {h}"
        )));
    }
    Ok(())
}

fn check_positive_perturbation(filter: &DVector<f64>, h: f64) -> Result<()> {
    check_step(h)?;
    match filter.iter().position(|&v| !(v - h > 0.0)) {
        Some(index) => Err(Error::StepTooLarge { index, h }),
        None => Ok(()),
    }
}

/// `‖a - b‖∞ / ‖b‖∞`, the error measure used against finite-difference references.
pub fn relative_error(actual: &[f64], reference: &[f64]) -> f64 {
    assert_eq!(actual.len(), reference.len());
    let diff = actual
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let scale = reference.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}
