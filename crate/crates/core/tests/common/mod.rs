//! Independent reference implementations shared by the integration tests.
//!
//! Everything here deliberately avoids the library's orthonormal-basis
//! route: projectors come from the normal equations with an explicit
//! inverse.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vora_filter::{cie1931_observer, gaussian_camera, SensorSet, WavelengthGrid};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn grid() -> WavelengthGrid {
    WavelengthGrid::default()
}

pub fn observer() -> SensorSet {
    cie1931_observer(grid()).unwrap()
}

/// `M (MᵀM)⁻¹ Mᵀ`.
pub fn normal_projector(m: &DMatrix<f64>) -> DMatrix<f64> {
    let gram = m.tr_mul(m);
    let inv = gram.try_inverse().expect("gram matrix is singular");
    m * inv * m.transpose()
}

/// `tr(P{Q} P{X}) / 3` from normal-equation projectors.
pub fn direct_vora(q: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    (normal_projector(q) * normal_projector(x)).trace() / 3.0
}

/// `U Uᵀ` from the leading three left singular vectors.
pub fn svd_projector(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, false);
    let u = svd.u.unwrap();
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let cols: Vec<_> = order[..3]
        .iter()
        .map(|&j| u.column(j).into_owned())
        .collect();
    let u3 = DMatrix::from_columns(&cols);
    &u3 * u3.transpose()
}

/// `tr(P{Q} P{X}) / 3` with SVD projectors, for ill-conditioned inputs.
pub fn direct_vora_svd(q: &DMatrix<f64>, x: &DMatrix<f64>) -> f64 {
    (svd_projector(q) * svd_projector(x)).trace() / 3.0
}

/// Filtered value with `(QᵀF²Q)⁻¹` written out.
pub fn explicit_filtered_vora(q: &DMatrix<f64>, x: &DMatrix<f64>, f: &DVector<f64>) -> f64 {
    let fq = DMatrix::from_diagonal(f) * q;
    let inner = (q.transpose() * DMatrix::from_diagonal(&f.map(|v| v * v)) * q)
        .try_inverse()
        .unwrap();
    let p_fq = &fq * inner * fq.transpose();
    (p_fq * normal_projector(x)).trace() / 3.0
}

/// RGB-like camera: Gaussian channels with peaks drawn from red, green and
/// blue bands. Every grid wavelength is sensed by at least one channel.
pub fn random_camera(rng: &mut impl Rng) -> SensorSet {
    let peaks = [
        rng.gen_range(570.0..630.0),
        rng.gen_range(510.0..570.0),
        rng.gen_range(430.0..480.0),
    ];
    let sigma = rng.gen_range(25.0..45.0);
    gaussian_camera(grid(), peaks, sigma).unwrap()
}

/// Gaussian camera with unconstrained peaks in `[420, 680]`. Cameras from
/// this family can be nearly blind at the grid ends.
pub fn random_wide_camera(rng: &mut impl Rng) -> SensorSet {
    loop {
        let mut peaks = [0.0; 3];
        for p in &mut peaks {
            *p = rng.gen_range(420.0..680.0);
        }
        let sigma = rng.gen_range(20.0..60.0);
        if let Ok(camera) = gaussian_camera(grid(), peaks, sigma) {
            return camera;
        }
    }
}

/// Full-rank `n×3` matrix with entries in `[-1, 1]`.
pub fn random_sensors(rng: &mut impl Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, 3, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn random_filter(rng: &mut impl Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(0.2..1.0))
}

/// Random 3×3 matrix with condition number below 100.
pub fn random_transform(rng: &mut impl Rng) -> DMatrix<f64> {
    loop {
        let t = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
        let sv = t.singular_values();
        if sv[2] > 0.0 && sv[0] / sv[2] < 100.0 {
            return t;
        }
    }
}

/// `n×3` matrix with prescribed condition number.
pub fn conditioned_sensors(rng: &mut impl Rng, n: usize, cond: f64) -> DMatrix<f64> {
    let u = random_sensors(rng, n).qr().q();
    let v = random_transform(rng).qr().q();
    let s = DMatrix::from_diagonal(&DVector::from_vec(vec![
        1.0,
        cond.sqrt().recip(),
        cond.recip(),
    ]));
    u * s * v.transpose()
}
