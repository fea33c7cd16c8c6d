use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::spectral::{check_positive, numerical_rank, WavelengthGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    /// DCT-II atoms `cos(π j (i + ½) / n)`.
    Cosine,
    /// Gaussian bumps with evenly spaced centres and `σ = span / k`.
    Gaussian,
    /// The first `k` columns of the identity.
    Identity,
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            BasisKind::Cosine => "cosine",
            BasisKind::Gaussian => "gaussian",
            BasisKind::Identity => "identity",
        })
    }
}

impl FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cosine" | "cos" | "dct" => Ok(BasisKind::Cosine),
            "gaussian" | "gauss" => Ok(BasisKind::Gaussian),
            "identity" | "id" => Ok(BasisKind::Identity),
            other => Err(Error::BadBasisSpec(format!("unknown basis kind {other:?}"))),
        }
    }
}

/// `kind:k`, e.g. `cosine:8`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisSpec {
    pub kind: BasisKind,
    pub size: usize,
}

impl FromStr for BasisSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, size) = s
            .split_once(':')
            .ok_or_else(|| Error::BadBasisSpec(format!("expected kind:k, got {s:?}")))?;
        let size = size
            .trim()
            .parse()
            .map_err(|_| Error::BadBasisSpec(format!("cannot parse basis size in {s:?}")))?;
        Ok(BasisSpec {
            kind: kind.parse()?,
            size,
        })
    }
}

impl fmt::Display for BasisSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.size)
    }
}

/// An `n x k` full-column-rank matrix `B`; filters are parametrized as `f = B c`.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    grid: WavelengthGrid,
    basis: DMatrix<f64>,
    kind: BasisKind,
}

impl BasisSet {
    pub fn grid(&self) -> &WavelengthGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.basis.ncols()
    }

    pub fn spec(&self) -> BasisSpec {
        BasisSpec {
            kind: self.kind,
            size: self.size(),
        }
    }

    /// `B c`, required to be strictly positive.
    pub fn filter_values(&self, coeffs: &DVector<f64>) -> Result<DVector<f64>> {
        if coeffs.len() != self.size() {
            return Err(Error::ShapeMismatch(format!(
                "{} coefficients for a basis of size {}",
                coeffs.len(),
                self.size()
            )));
        }
        let f = &self.basis * coeffs;
        check_positive(&f)?;
        Ok(f)
    }

    /// Least-squares coefficients `argmin ‖B c - f‖`.
    pub fn fit(&self, f: &DVector<f64>) -> Result<DVector<f64>> {
        if f.len() != self.grid.count() {
            return Err(Error::ShapeMismatch(format!(
                "filter has {} samples, grid has {}",
                f.len(),
                self.grid.count()
            )));
        }
        self.basis
            .clone()
            .svd(true, true)
            .solve(f, f64::EPSILON * 1e3)
            .map_err(|e| Error::BadBasisSpec(e.to_string()))
    }
}

pub fn make_basis(kind: BasisKind, k: usize, grid: WavelengthGrid) -> Result<BasisSet> {
    let n = grid.count();
    if k == 0 || k > n {
        return Err(Error::BadBasisSpec(format!(
            "basis size must be in 1..={n}, got {k}"
        )));
    }
    let basis = match kind {
        BasisKind::Cosine => DMatrix::from_fn(n, k, |i, j| {
            (PI * j as f64 * (i as f64 + 0.5) / n as f64).cos()
        }),
        BasisKind::Gaussian => {
            let span = grid.end_nm() - grid.start_nm();
            let sigma = span / k as f64;
            DMatrix::from_fn(n, k, |i, j| {
                let centre = if k == 1 {
                    grid.start_nm() + span / 2.0
                } else {
                    grid.start_nm() + j as f64 * span / (k - 1) as f64
                };
                let d = grid.wavelength(i) - centre;
                (-d * d / (2.0 * sigma * sigma)).exp()
            })
        }
        BasisKind::Identity => DMatrix::from_fn(n, k, |i, j| if i == j { 1.0 } else { 0.0 }),
    };
    let rank = numerical_rank(&basis);
    if rank < k {
        return Err(Error::BadBasisSpec(format!(
            "{kind} basis of size {k} has numerical rank {rank}"
        )));
    }
    Ok(BasisSet { grid, basis, kind })
}
