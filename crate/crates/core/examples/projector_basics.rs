//! Orthonormal bases, projectors and the principal-angle reading of the
//! Vora-Value.

use vora_filter::{cie1931_observer, orthonormalize, reference_camera, WavelengthGrid};

fn main() -> vora_filter::Result<()> {
    let grid = WavelengthGrid::default();
    let w = orthonormalize(&reference_camera(grid)?)?;
    let v = orthonormalize(&cie1931_observer(grid)?)?;

    let p = w.projector();
    let idempotence = (p.matrix() * p.matrix() - p.matrix()).amax();
    println!("trace(P) = {:.12}, |PP - P| = {idempotence:.2e}", p.trace());

    // Singular values of WᵀV are the cosines of the principal angles.
    let cosines = w.basis().tr_mul(v.basis()).singular_values();
    for (i, c) in cosines.iter().enumerate() {
        println!("angle {i}: {:7.3} deg", c.min(1.0).acos().to_degrees());
    }
    let nu: f64 = cosines.iter().map(|c| c * c).sum::<f64>() / 3.0;
    println!("mean squared cosine = {nu:.12}");
    Ok(())
}
