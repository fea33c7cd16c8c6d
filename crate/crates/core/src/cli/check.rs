//! Identity suite behind `vora-filter check`.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::fd::{self, relative_error};
use crate::calculus::VoraProblem;
use crate::error::Result;
use crate::optimizer::{newton_step_closed_form, regularized_newton_step};

pub const GRADIENT_FD_TOL: f64 = 1e-5;
pub const HESSIAN_FD_TOL: f64 = 1e-4;
pub const HESSIAN_ASYMMETRY_TOL: f64 = 1e-9;
pub const ORTHOGONALITY_TOL: f64 = 1e-10;
pub const HESSIAN_GRADIENT_TOL: f64 = 1e-8;
pub const CURVATURE_TOL: f64 = 1e-8;
pub const NEWTON_CLOSED_FORM_TOL: f64 = 1e-8;

pub const CURVATURE_ALPHAS: [f64; 3] = [1e-6, 1e-4, 1e-2];
pub const NEWTON_ALPHA: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub max_error: f64,
    pub tolerance: f64,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.max_error < self.tolerance
    }
}

/// Random test filters, uniform in `[0.2, 1]`.
pub fn random_filters(n: usize, trials: usize, seed: u64) -> Vec<DVector<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| DVector::from_fn(n, |_, _| rng.gen_range(0.2..=1.0)))
        .collect()
}

/// Runs every derivative identity on each filter and returns the worst
/// error per identity. With `sabotage`, the analytic gradient is perturbed
/// so that the suite must fail.
pub fn run_suite(
    problem: &VoraProblem<'_>,
    filters: &[DVector<f64>],
    sabotage: bool,
) -> Result<Vec<IdentityCheck>> {
    let gradient = |f: &DVector<f64>| -> Result<DVector<f64>> {
        let mut g = problem.gradient(f)?;
        if sabotage {
            g[0] += 1e-3 * g.amax().max(1e-3);
        }
        Ok(g)
    };

    let mut worst = [0.0f64; 7];
    for f in filters {
        let g = gradient(f)?;
        let g_fd = fd::fd_gradient(|x| problem.value(x), f, fd::GRADIENT_STEP)?;
        worst[0] = worst[0].max(relative_error(g.as_slice(), g_fd.as_slice()));

        let h = problem.hessian(f, 0.0)?;
        let h_fd = fd::fd_hessian(gradient, f, fd::HESSIAN_STEP)?;
        worst[1] = worst[1].max(relative_error(h.matrix().as_slice(), h_fd.as_slice()));
        worst[2] = worst[2].max(h.asymmetry());

        worst[3] = worst[3].max(f.dot(&g).abs() / (f.norm() * g.norm()));
        worst[4] = worst[4].max((&g + h.matrix() * f).amax());

        let ff = f.norm_squared();
        for alpha in CURVATURE_ALPHAS {
            let hm = problem.hessian(f, alpha)?;
            let curvature = f.dot(&(hm.matrix() * f));
            worst[5] = worst[5].max((curvature - alpha * ff).abs());
        }

        let direct = regularized_newton_step(h.matrix(), &g, f, NEWTON_ALPHA)?;
        let closed = newton_step_closed_form(h.matrix(), f, NEWTON_ALPHA)?;
        worst[6] = worst[6].max(relative_error(direct.as_slice(), closed.as_slice()));
    }

    let names_tols = [
        ("gradient vs finite differences (rel)", GRADIENT_FD_TOL),
        ("hessian vs finite differences (rel)", HESSIAN_FD_TOL),
        (
            "hessian asymmetry before symmetrization",
            HESSIAN_ASYMMETRY_TOL,
        ),
        ("f . grad / (|f| |grad|)", ORTHOGONALITY_TOL),
        ("|grad + H f|_inf", HESSIAN_GRADIENT_TOL),
        ("|f' (H + aI) f - a f'f|", CURVATURE_TOL),
        (
            "newton step direct vs closed form (rel)",
            NEWTON_CLOSED_FORM_TOL,
        ),
    ];
    if filters.is_empty() {
        return Ok(Vec::new());
    }
    Ok(names_tols
        .iter()
        .zip(worst)
        .map(|(&(name, tolerance), max_error)| IdentityCheck {
            name,
            max_error,
            tolerance,
        })
        .collect())
}
