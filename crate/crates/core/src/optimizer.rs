//! Filter design: maximize `ν(diag(f) Q, X)` over filters in a box.
//!
//! Both methods share one loop: pick an ascent direction, backtrack from
//! `t = 1` until the (projected, rescaled) trial point strictly increases
//! `ν`, repeat. `ν` does not depend on the filter's scale, so every iterate
//! is rescaled to `max(f) = tau_max`; this fixes the gauge and keeps the
//! upper bound inactive except at the largest sample.
//!
//! The Newton direction comes from the regularized system. Near a maximum
//! `∇²ν` is negative semidefinite with `f` in its null space (`∇ν + ∇²ν f = 0`
//! and `∇ν → 0`), so the loop solves the ascent form `(αI - ∇²ν) d = ∇ν`,
//! escalating `α` tenfold until the matrix is positive definite, and
//! removes the component of `d` along `f`, which only rescales the filter.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::{make_basis, BasisSet, BasisSpec, VoraProblem};
use crate::error::{Error, Result};
use crate::spectral::{format_value, FilterSpectrum, SensorSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Projected gradient ascent with Barzilai-Borwein step scaling.
    Gradient,
    /// Regularized Newton.
    Newton,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "grad" | "gradient" => Ok(Method::Gradient),
            "newton" => Ok(Method::Newton),
            other => Err(Error::InvalidConfig(format!("unknown method {other:?}"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Method::Gradient => "grad",
            Method::Newton => "newton",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    /// The unfiltered camera.
    Ones,
    /// Uniform samples in `[0.25, 1]` from a seeded ChaCha8 stream.
    Random(u64),
    /// An explicit starting filter on the camera's grid.
    Filter(DVector<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearch {
    /// Step shrink factor in `(0, 1)`.
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearch {
    fn default() -> Self {
        Self {
            shrink: 0.5,
            max_backtracks: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub method: Method,
    /// Regularizer weight `α`.
    pub alpha: f64,
    pub max_iters: usize,
    /// Absolute change in `ν` below which a step counts as stagnant.
    pub tol_obj: f64,
    /// Infinity-norm bound on the projected gradient.
    pub tol_grad: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub init: Init,
    pub basis: Option<BasisSpec>,
    pub line_search: LineSearch,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            method: Method::Gradient,
            alpha: 1e-4,
            max_iters: 5000,
            tol_obj: 1e-12,
            tol_grad: 1e-8,
            tau_min: 1e-4,
            tau_max: 1.0,
            init: Init::Ones,
            basis: None,
            line_search: LineSearch::default(),
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.tau_min > 0.0 && self.tau_min < self.tau_max && self.tau_max <= 1.0) {
            return bad(format!(
                "need 0 < tau_min < tau_max <= 1, got {} and {}",
                self.tau_min, self.tau_max
            ));
        }
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return bad(format!(
                "alpha must be finite and nonnegative, got {}",
                self.alpha
            ));
        }
        if self.method == Method::Newton && self.alpha == 0.0 {
            return bad("the Newton method needs alpha > 0".into());
        }
        if !(self.tol_obj >= 0.0) || !(self.tol_grad >= 0.0) {
            return bad("tolerances must be nonnegative".into());
        }
        let ls = self.line_search;
        if !(ls.shrink > 0.0 && ls.shrink < 1.0) {
            return bad(format!(
                "line-search shrink must be in (0, 1), got {}",
                ls.shrink
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ConvergedObj,
    ConvergedGrad,
    MaxIters,
    Stalled,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Termination::ConvergedObj => "converged_obj",
            Termination::ConvergedGrad => "converged_grad",
            Termination::MaxIters => "max_iters",
            Termination::Stalled => "stalled",
        })
    }
}

/// One row of the optimization trace. Row 0 is the starting point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub vora: f64,
    pub mu: f64,
    /// Accepted line-search step length.
    pub step: f64,
    /// Infinity norm of the projected gradient at this iterate.
    pub grad_norm: f64,
    pub backtracks: usize,
}

#[derive(Debug, Clone)]
pub struct OptimizationReport {
    pub method: Method,
    pub alpha: f64,
    pub iterations: Vec<IterationRecord>,
    /// Filter at every row of `iterations`.
    pub path: Vec<DVector<f64>>,
    pub final_filter: FilterSpectrum,
    /// Basis and final coefficients when optimizing over `f = B c`.
    pub basis: Option<BasisSet>,
    pub coefficients: Option<DVector<f64>>,
    pub initial_vora: f64,
    pub final_vora: f64,
    pub termination: Termination,
}

impl OptimizationReport {
    /// Number of accepted steps.
    pub fn steps(&self) -> usize {
        self.iterations.len() - 1
    }

    /// `f / max(f)`.
    pub fn normalized_filter(&self) -> FilterSpectrum {
        self.final_filter.normalized()
    }

    pub const TRACE_HEADER: &'static str = "iter,vora,mu,step,gradnorm,backtracks";

    pub fn trace_csv(&self) -> String {
        let mut out = String::from(Self::TRACE_HEADER);
        out.push('\n');
        for r in &self.iterations {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.iter,
                format_value(r.vora),
                format_value(r.mu),
                format_value(r.step),
                format_value(r.grad_norm),
                r.backtracks
            ));
        }
        out
    }
}

/// Componentwise clamp into `[tau_min, tau_max]`; NaN maps to `tau_min`.
pub fn project_to_box(values: &DVector<f64>, tau_min: f64, tau_max: f64) -> DVector<f64> {
    assert!(tau_min <= tau_max, "empty box [{tau_min}, {tau_max}]");
    values.map(|v| {
        if v.is_nan() {
            tau_min
        } else {
            v.clamp(tau_min, tau_max)
        }
    })
}

/// Solves `(H + αI) Δ = -(g + α x)`, the Newton step of `μ = ν + (α/2)‖x‖²`
/// given `H = ∇²ν` and `g = ∇ν`.
pub fn regularized_newton_step(
    hessian: &DMatrix<f64>,
    gradient: &DVector<f64>,
    point: &DVector<f64>,
    alpha: f64,
) -> Result<DVector<f64>> {
    let rhs = -(gradient + point * alpha);
    solve_shifted(hessian, alpha, &rhs)
}

/// `(H + αI)⁻¹ (H - αI) x`, the closed form of the regularized Newton step
/// that follows from `∇ν = -∇²ν f`.
pub fn newton_step_closed_form(
    hessian: &DMatrix<f64>,
    point: &DVector<f64>,
    alpha: f64,
) -> Result<DVector<f64>> {
    let rhs = hessian * point - point * alpha;
    solve_shifted(hessian, alpha, &rhs)
}

fn solve_shifted(hessian: &DMatrix<f64>, alpha: f64, rhs: &DVector<f64>) -> Result<DVector<f64>> {
    let n = hessian.nrows();
    let shifted = hessian + DMatrix::identity(n, n) * alpha;
    if let Some(chol) = shifted.clone().cholesky() {
        return Ok(chol.solve(rhs));
    }
    shifted
        .lu()
        .solve(rhs)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or(Error::SingularSystem { alpha })
}

/// Regularized Newton step `-(∇²ν + αI)⁻¹ (∇ν + α f)` at `filter`.
pub fn newton_step(
    camera: &SensorSet,
    observer: &SensorSet,
    filter: &FilterSpectrum,
    alpha: f64,
) -> Result<DVector<f64>> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "Newton step needs a positive alpha, got {alpha}"
        )));
    }
    if filter.grid() != camera.grid() {
        return Err(Error::GridMismatch);
    }
    let problem = VoraProblem::new(camera, observer)?;
    let f = filter.transmittance();
    let g = problem.gradient(f)?;
    let h = problem.hessian(f, 0.0)?;
    regularized_newton_step(h.matrix(), &g, f, alpha)
}

/// How the optimizer's coordinates map to a filter.
enum Coordinates {
    Full,
    Basis(BasisSet),
}

struct Iterate {
    x: DVector<f64>,
    f: DVector<f64>,
    vora: f64,
    /// Gradient of `ν` with respect to `x`.
    grad: DVector<f64>,
}

struct Run<'p, 'a> {
    problem: &'p VoraProblem<'a>,
    config: &'p OptimizerConfig,
    coords: Coordinates,
}

impl Run<'_, '_> {
    /// Rescales to `max(f) = tau_max` and enforces the lower bound. Returns
    /// `None` when a basis-constrained point cannot satisfy it.
    fn feasible(&self, x: DVector<f64>) -> Option<(DVector<f64>, DVector<f64>)> {
        let (tau_min, tau_max) = (self.config.tau_min, self.config.tau_max);
        match &self.coords {
            Coordinates::Full => {
                let x = x.map(|v| if v.is_nan() { tau_min } else { v.max(tau_min) });
                let x = &x * (tau_max / x.max());
                let x = project_to_box(&x, tau_min, tau_max);
                Some((x.clone(), x))
            }
            Coordinates::Basis(b) => {
                let f = b.matrix() * &x;
                let max = f.max();
                if !(max > 0.0) || !max.is_finite() {
                    return None;
                }
                let scale = tau_max / max;
                let f = f * scale;
                if f.min() < tau_min {
                    return None;
                }
                Some((x * scale, f))
            }
        }
    }

    fn evaluate(&self, x: DVector<f64>, f: DVector<f64>) -> Result<Iterate> {
        let (vora, grad_f) = self.problem.value_and_gradient(&f)?;
        let grad = match &self.coords {
            Coordinates::Full => grad_f,
            Coordinates::Basis(b) => b.matrix().tr_mul(&grad_f),
        };
        Ok(Iterate { x, f, vora, grad })
    }

    fn projected_grad_norm(&self, it: &Iterate) -> f64 {
        match &self.coords {
            Coordinates::Full => {
                let moved = project_to_box(
                    &(&it.f + &it.grad),
                    self.config.tau_min,
                    self.config.tau_max,
                );
                (moved - &it.f).amax()
            }
            Coordinates::Basis(_) => it.grad.amax(),
        }
    }

    /// Coordinates free to move: in full mode, samples sitting on the lower
    /// bound whose gradient points outward are held fixed.
    fn free_mask(&self, it: &Iterate) -> Vec<bool> {
        match &self.coords {
            Coordinates::Full => {
                let edge = self.config.tau_min * (1.0 + 1e-9);
                it.f.iter()
                    .zip(it.grad.iter())
                    .map(|(&f, &g)| !(f <= edge && g < 0.0))
                    .collect()
            }
            Coordinates::Basis(b) => vec![true; b.size()],
        }
    }

    fn mu(&self, f: &DVector<f64>, vora: f64) -> f64 {
        vora + 0.5 * self.config.alpha * f.norm_squared()
    }

    fn newton_direction(&self, it: &Iterate, free: &[bool]) -> Result<DVector<f64>> {
        let h = self.problem.hessian(&it.f, 0.0)?.into_matrix();
        let (h, metric) = match &self.coords {
            Coordinates::Full => {
                let n = h.nrows();
                (h, DMatrix::identity(n, n))
            }
            Coordinates::Basis(b) => {
                let bm = b.matrix();
                (bm.tr_mul(&(&h * bm)), bm.tr_mul(bm))
            }
        };
        let idx: Vec<usize> = (0..free.len()).filter(|&i| free[i]).collect();
        let m = idx.len();
        let h_ff = DMatrix::from_fn(m, m, |i, j| h[(idx[i], idx[j])]);
        let g_ff = DMatrix::from_fn(m, m, |i, j| metric[(idx[i], idx[j])]);
        let rhs = DVector::from_fn(m, |i, _| it.grad[idx[i]]);

        let mut alpha = self.config.alpha;
        let chol = loop {
            let system = &g_ff * alpha - &h_ff;
            if let Some(chol) = system.cholesky() {
                break chol;
            }
            alpha *= 10.0;
            if !alpha.is_finite() || alpha > 1e30 {
                return Err(Error::SingularSystem { alpha });
            }
        };
        let d_free = chol.solve(&rhs);
        let mut d = DVector::zeros(it.x.len());
        for (k, &i) in idx.iter().enumerate() {
            d[i] = d_free[k];
        }
        Ok(remove_gauge(d, &it.x, free))
    }

    fn gradient_direction(
        &self,
        it: &Iterate,
        prev: Option<&(DVector<f64>, DVector<f64>)>,
        free: &[bool],
    ) -> DVector<f64> {
        let gmax = it.grad.amax();
        let mut lambda = 0.1 * it.x.amax() / gmax;
        if let Some((px, pg)) = prev {
            let s = &it.x - px;
            let y = &it.grad - pg;
            let sy = s.dot(&y);
            if sy < 0.0 {
                lambda = (-s.norm_squared() / sy).clamp(1e-10, 1e10);
            }
        }
        DVector::from_fn(it.grad.len(), |i, _| {
            if free[i] {
                lambda * it.grad[i]
            } else {
                0.0
            }
        })
    }
}

/// Drops the component of `d` along `x` (restricted to free coordinates).
fn remove_gauge(mut d: DVector<f64>, x: &DVector<f64>, free: &[bool]) -> DVector<f64> {
    let masked = DVector::from_fn(x.len(), |i, _| if free[i] { x[i] } else { 0.0 });
    let nn = masked.norm_squared();
    if nn > 0.0 {
        let k = masked.dot(&d) / nn;
        d -= masked * k;
    }
    d
}

fn initial_filter(config: &OptimizerConfig, n: usize) -> Result<DVector<f64>> {
    match &config.init {
        Init::Ones => Ok(DVector::from_element(n, 1.0)),
        Init::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            Ok(DVector::from_fn(n, |_, _| rng.gen_range(0.25..=1.0)))
        }
        Init::Filter(f) => {
            if f.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "initial filter has {} samples, grid has {n}",
                    f.len()
                )));
            }
            crate::spectral::check_positive(f)?;
            Ok(f.clone())
        }
    }
}

/// Maximizes the filtered Vora-Value.
pub fn optimize(
    camera: &SensorSet,
    observer: &SensorSet,
    config: &OptimizerConfig,
) -> Result<OptimizationReport> {
    config.validate()?;
    let problem = VoraProblem::new(camera, observer)?;
    let n = problem.dim();
    let f0 = initial_filter(config, n)?;

    let coords = match config.basis {
        None => Coordinates::Full,
        Some(spec) => Coordinates::Basis(make_basis(spec.kind, spec.size, *camera.grid())?),
    };
    let run = Run {
        problem: &problem,
        config,
        coords,
    };

    let x0 = match &run.coords {
        Coordinates::Full => f0,
        Coordinates::Basis(b) => b.fit(&f0)?,
    };
    let (x0, f0) = run.feasible(x0).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "initial filter is not representable in the basis within [{}, {}]",
            config.tau_min, config.tau_max
        ))
    })?;

    let mut it = run.evaluate(x0, f0)?;
    let initial_vora = it.vora;
    let mut records = vec![IterationRecord {
        iter: 0,
        vora: it.vora,
        mu: run.mu(&it.f, it.vora),
        step: 0.0,
        grad_norm: run.projected_grad_norm(&it),
        backtracks: 0,
    }];
    let mut path = vec![it.f.clone()];
    let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut stagnant = 0;
    let ls = config.line_search;

    let termination = loop {
        let k = records.len() - 1;
        if records[k].grad_norm < config.tol_grad {
            break Termination::ConvergedGrad;
        }
        if k >= config.max_iters {
            break Termination::MaxIters;
        }

        let free = run.free_mask(&it);
        let direction = match config.method {
            Method::Gradient => run.gradient_direction(&it, prev.as_ref(), &free),
            Method::Newton => run.newton_direction(&it, &free)?,
        };

        let mut t = 1.0;
        let mut accepted = None;
        for backtracks in 0..=ls.max_backtracks {
            if let Some((x, f)) = run.feasible(&it.x + &direction * t) {
                let vora = problem.value(&f)?;
                if vora > it.vora {
                    accepted = Some((x, f, backtracks));
                    break;
                }
            }
            t *= ls.shrink;
        }
        let Some((x, f, backtracks)) = accepted else {
            if k == 0 {
                return Err(Error::NoAscent);
            }
            break Termination::Stalled;
        };

        let next = run.evaluate(x, f)?;
        let delta = next.vora - it.vora;
        prev = Some((it.x.clone(), it.grad.clone()));
        it = next;
        records.push(IterationRecord {
            iter: k + 1,
            vora: it.vora,
            mu: run.mu(&it.f, it.vora),
            step: t,
            grad_norm: run.projected_grad_norm(&it),
            backtracks,
        });
        path.push(it.f.clone());

        stagnant = if delta.abs() < config.tol_obj {
            stagnant + 1
        } else {
            0
        };
        if stagnant >= 3 {
            break Termination::ConvergedObj;
        }
    };

    let (basis, coefficients) = match run.coords {
        Coordinates::Full => (None, None),
        Coordinates::Basis(b) => (Some(b), Some(it.x.clone())),
    };
    Ok(OptimizationReport {
        method: config.method,
        alpha: config.alpha,
        iterations: records,
        path,
        final_filter: FilterSpectrum::new(*camera.grid(), it.f)?,
        basis,
        coefficients,
        initial_vora,
        final_vora: it.vora,
        termination,
    })
}
