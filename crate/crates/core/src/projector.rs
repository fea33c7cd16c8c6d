//! Orthonormal bases and projector matrices.
//!
//! Projectors are always built as `V Vᵀ` from an orthonormal basis `V` of
//! the column space. The normal-equations form `M (MᵀM)⁻¹ Mᵀ` is never used
//! here: `diag(f) Q` becomes badly conditioned when the filter approaches
//! its lower bound.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spectral::{numerical_rank, SensorSet, WavelengthGrid};

/// `n x 3` matrix with orthonormal columns spanning the same space as a sensor set.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalBasis {
    grid: WavelengthGrid,
    basis: DMatrix<f64>,
}

impl OrthonormalBasis {
    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn projector(&self) -> ProjectorMatrix {
        ProjectorMatrix {
            matrix: &self.basis * self.basis.transpose(),
        }
    }
}

/// Symmetric idempotent `n x n` matrix projecting onto a column space.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectorMatrix {
    matrix: DMatrix<f64>,
}

impl ProjectorMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace()
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.matrix * v
    }
}

pub fn orthonormalize(sensors: &SensorSet) -> Result<OrthonormalBasis> {
    Ok(OrthonormalBasis {
        grid: *sensors.grid(),
        basis: orthonormal_columns(sensors.responses())?,
    })
}

/// Orthonormal basis of the column space of a full-column-rank matrix,
/// by classical Gram-Schmidt with one full re-orthogonalization pass.
pub fn orthonormal_columns(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = m.shape();
    if cols == 0 || cols > rows {
        return Err(Error::ShapeMismatch(format!(
            "cannot orthonormalize a {rows}x{cols} matrix"
        )));
    }
    let rank = numerical_rank(m);
    if rank < cols {
        return Err(Error::RankDeficient {
            rank,
            expected: cols,
        });
    }

    let mut q = DMatrix::<f64>::zeros(rows, cols);
    for j in 0..cols {
        let mut v = m.column(j).into_owned();
        let original = v.norm();
        for _ in 0..2 {
            let done = q.columns(0, j);
            let coeffs = done.tr_mul(&v);
            v -= done * coeffs;
        }
        let norm = v.norm();
        if !(norm > original * f64::EPSILON * rows as f64) {
            return Err(Error::RankDeficient {
                rank: j,
                expected: cols,
            });
        }
        q.set_column(j, &(v / norm));
    }
    Ok(q)
}

/// Projector onto the column space of `m`.
pub fn projector(m: &DMatrix<f64>) -> Result<ProjectorMatrix> {
    let v = orthonormal_columns(m)?;
    Ok(ProjectorMatrix {
        matrix: &v * v.transpose(),
    })
}

/// Extracts the diagonal of a square matrix.
pub fn ediag(m: &DMatrix<f64>) -> Result<DVector<f64>> {
    if !m.is_square() {
        return Err(Error::ShapeMismatch(format!(
            "ediag needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.diagonal())
}

pub fn diag_of(v: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_diagonal(v)
}

/// Elementwise product.
pub fn hadamard(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!(
            "hadamard of {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.component_mul(b))
}
