//! Acceptance suite: one line per criterion, non-zero exit if any fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;

use vora_filter::calculus::fd::{self, relative_error};
use vora_filter::calculus::VoraProblem;
use vora_filter::{
    filtered_vora_value, gaussian_camera, newton_step_closed_form, optimize, reference_camera,
    regularized_newton_step, vora_value, Error, FilterSpectrum, Method, OptimizerConfig, SensorSet,
};

const INSTANCES: u64 = 20;
const ALPHAS: [f64; 3] = [1e-6, 1e-4, 1e-2];
const SEARCH_SAMPLES: usize = 100_000;

type Outcome = std::result::Result<(bool, String), Error>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Instance {
    camera: SensorSet,
    filter: DVector<f64>,
}

fn instances() -> Vec<Instance> {
    (0..INSTANCES)
        .map(|seed| {
            let mut rng = common::rng(1000 + seed);
            let camera = common::random_camera(&mut rng);
            let filter = common::random_filter(&mut rng, camera.grid().count());
            Instance { camera, filter }
        })
        .collect()
}

fn gradient_correctness(set: &[Instance], observer: &SensorSet) -> Outcome {
    let mut worst = 0.0f64;
    for inst in set {
        let p = VoraProblem::new(&inst.camera, observer)?;
        let g = p.gradient(&inst.filter)?;
        let g_fd = fd::fd_gradient(|x| p.value(x), &inst.filter, 1e-6)?;
        worst = worst.max(relative_error(g.as_slice(), g_fd.as_slice()));
    }
    Ok((worst < 1e-5, format!("max rel err {worst:.2e} (tol 1e-5)")))
}

fn hessian_correctness(set: &[Instance], observer: &SensorSet) -> Outcome {
    let (mut worst, mut asym) = (0.0f64, 0.0f64);
    for inst in set {
        let p = VoraProblem::new(&inst.camera, observer)?;
        let h = p.hessian(&inst.filter, 0.0)?;
        let h_fd = fd::fd_hessian(|x| p.gradient(x), &inst.filter, 1e-5)?;
        worst = worst.max(relative_error(h.matrix().as_slice(), h_fd.as_slice()));
        asym = asym.max(h.asymmetry());
    }
    Ok((
        worst < 1e-4 && asym < 1e-9,
        format!("max rel err {worst:.2e} (tol 1e-4), asymmetry {asym:.2e} (tol 1e-9)"),
    ))
}

fn orthogonality(set: &[Instance], observer: &SensorSet) -> Outcome {
    let mut worst = 0.0f64;
    for inst in set {
        let p = VoraProblem::new(&inst.camera, observer)?;
        let g = p.gradient(&inst.filter)?;
        worst = worst.max(inst.filter.dot(&g).abs() / (inst.filter.norm() * g.norm()));
    }
    Ok((
        worst < 1e-10,
        format!("max |f.g|/(|f||g|) {worst:.2e} (tol 1e-10)"),
    ))
}

fn hessian_gradient(set: &[Instance], observer: &SensorSet) -> Outcome {
    let mut worst = 0.0f64;
    for inst in set {
        let p = VoraProblem::new(&inst.camera, observer)?;
        let g = p.gradient(&inst.filter)?;
        let h = p.hessian(&inst.filter, 0.0)?;
        worst = worst.max((g + h.matrix() * &inst.filter).amax());
    }
    Ok((
        worst < 1e-8,
        format!("max |grad + H f|_inf {worst:.2e} (tol 1e-8)"),
    ))
}

fn positive_definiteness(set: &[Instance], observer: &SensorSet) -> Outcome {
    let mut worst = 0.0f64;
    for inst in set {
        let p = VoraProblem::new(&inst.camera, observer)?;
        let f = &inst.filter;
        for alpha in ALPHAS {
            let h = p.hessian(f, alpha)?;
            worst = worst.max((f.dot(&(h.matrix() * f)) - alpha * f.norm_squared()).abs());
        }
    }
    Ok((
        worst < 1e-8,
        format!("max |f'(H+aI)f - a f'f| {worst:.2e} (tol 1e-8)"),
    ))
}

fn alignment(p: &VoraProblem<'_>, f: &DVector<f64>) -> Result<f64, Error> {
    let g = p.gradient(f)?;
    let h = p.hessian(f, 0.0)?;
    let step = regularized_newton_step(h.matrix(), &g, f, 1e-12)?;
    Ok(step.dot(f) / (step.norm() * f.norm()))
}

fn newton_closed_form(set: &[Instance], observer: &SensorSet) -> Outcome {
    let (mut worst, mut min_cos) = (0.0f64, f64::INFINITY);
    for inst in set {
        let p = VoraProblem::new(&inst.camera, observer)?;
        let f = &inst.filter;
        let g = p.gradient(f)?;
        let h = p.hessian(f, 0.0)?;
        for alpha in ALPHAS {
            let direct = regularized_newton_step(h.matrix(), &g, f, alpha)?;
            let closed = newton_step_closed_form(h.matrix(), f, alpha)?;
            worst = worst.max(relative_error(direct.as_slice(), closed.as_slice()));
        }
        min_cos = min_cos.min(alignment(&p, f)?);
    }
    let mut wide_cos = f64::INFINITY;
    for seed in 0..INSTANCES {
        let mut rng = common::rng(1000 + seed);
        let camera = common::random_wide_camera(&mut rng);
        let f = common::random_filter(&mut rng, camera.grid().count());
        wide_cos = wide_cos.min(alignment(&VoraProblem::new(&camera, observer)?, &f)?);
    }
    Ok((
        worst < 1e-8 && min_cos > 1.0 - 1e-4,
        format!(
            "max rel err {worst:.2e} (tol 1e-8), min cos at a=1e-12 {min_cos:.10} (> 1 - 1e-4); \
             info: wide-peak cameras with blind wavelengths reach min cos {wide_cos:.4}"
        ),
    ))
}

fn vora_bounds(observer: &SensorSet) -> Outcome {
    let grid = common::grid();
    let n = grid.count();
    let self_err = (vora_value(observer, observer)?.raw() - 1.0).abs();

    let mut rng = common::rng(77);
    let camera = reference_camera(grid)?;
    let base = vora_value(&camera, observer)?.raw();
    let mut invariance = 0.0f64;
    for _ in 0..50 {
        let t = common::random_transform(&mut rng);
        let a = vora_value(&camera.transformed(&t)?, observer)?.raw();
        let b = vora_value(&camera, &observer.transformed(&t)?)?.raw();
        invariance = invariance.max((a - base).abs()).max((b - base).abs());
    }

    let (mut lo, mut hi, mut dual) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
    for _ in 0..1000 {
        let q = common::random_sensors(&mut rng, n);
        let x = common::random_sensors(&mut rng, n);
        let v = vora_value(
            &SensorSet::from_matrix(grid, q.clone())?,
            &SensorSet::from_matrix(grid, x.clone())?,
        )?
        .raw();
        lo = lo.min(v);
        hi = hi.max(v);
        dual = dual.max((v - common::direct_vora(&q, &x)).abs());
    }
    let passed = self_err <= 1e-12
        && invariance <= 1e-10
        && lo >= -1e-12
        && hi <= 1.0 + 1e-12
        && dual <= 1e-9;
    Ok((
        passed,
        format!(
            "|v(X,X)-1| {self_err:.1e}, transform drift {invariance:.1e}, range [{lo:.4}, {hi:.4}], dual diff {dual:.1e}"
        ),
    ))
}

fn optimization_efficacy(camera: &SensorSet, observer: &SensorSet) -> Outcome {
    let mut best = f64::NEG_INFINITY;
    let mut details = Vec::new();
    let mut passed = true;
    for method in [Method::Gradient, Method::Newton] {
        let config = OptimizerConfig {
            method,
            ..OptimizerConfig::default()
        };
        let report = optimize(camera, observer, &config)?;
        let gain = report.final_vora - report.initial_vora;
        let monotone = report.iterations.windows(2).all(|w| w[1].vora >= w[0].vora);
        passed &= gain >= 1e-4 && monotone;
        best = best.max(report.final_vora);
        details.push(format!("{method} +{gain:.3e} in {} steps", report.steps()));
        if !monotone {
            details.push(format!("{method} trace not monotone"));
        }
    }

    let problem = VoraProblem::new(camera, observer)?;
    let config = OptimizerConfig::default();
    let mut rng = common::rng(2024);
    let n = problem.dim();
    let mut search = f64::NEG_INFINITY;
    for _ in 0..SEARCH_SAMPLES {
        let f = DVector::from_fn(n, |_, _| rng.gen_range(config.tau_min..=config.tau_max));
        search = search.max(problem.value(&f)?);
    }
    passed &= search <= best + 1e-6;
    details.push(format!(
        "random search best {search:.6} vs optimizer {best:.6}"
    ));
    Ok((passed, details.join(", ")))
}

fn identity_neutrality(camera: &SensorSet, observer: &SensorSet) -> Outcome {
    let grid = *camera.grid();
    let plain = vora_value(camera, observer)?;
    let ones = filtered_vora_value(camera, observer, &FilterSpectrum::ones(grid))?;
    let exact = plain.raw().to_bits() == ones.raw().to_bits();

    let mut rng = common::rng(9);
    let mut drift = 0.0f64;
    for _ in 0..20 {
        let f = FilterSpectrum::new(grid, common::random_filter(&mut rng, grid.count()))?;
        let v = filtered_vora_value(camera, observer, &f)?.raw();
        for k in [0.1, 10.0] {
            let vk = filtered_vora_value(camera, observer, &f.scaled(k)?)?.raw();
            drift = drift.max((vk - v).abs());
        }
    }
    Ok((
        exact && drift <= 1e-12,
        format!("f=1 bitwise equal: {exact}, scale drift {drift:.1e} (tol 1e-12)"),
    ))
}

fn run_cli(args: &[&str]) -> std::io::Result<std::process::Output> {
    Command::new(env!("CARGO_BIN_EXE_vora-filter"))
        .args(args)
        .env_remove("VORA_FILTER_DATA")
        .output()
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir()?;
    let golden_path =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/newton_seed7_trace.csv");
    let golden = std::fs::read_to_string(&golden_path)?;
    let mut traces = Vec::new();
    for run in 0..2 {
        let trace = dir.path().join(format!("trace{run}.csv"));
        let out = run_cli(&[
            "optimize",
            "--method",
            "newton",
            "--init",
            "random",
            "--seed",
            "7",
            "--out-trace",
            trace.to_str().unwrap(),
        ])?;
        if !out.status.success() {
            return Ok((
                false,
                format!("optimize exited with {:?}", out.status.code()),
            ));
        }
        traces.push(std::fs::read_to_string(&trace)?);
    }
    let repeat = traces[0] == traces[1];
    let matches_golden = traces[0] == golden;
    let check = run_cli(&["check", "--trials", "20"])?.status.code();
    let sabotage = run_cli(&["check", "--trials", "20", "--sabotage"])?
        .status
        .code();
    Ok((
        repeat && matches_golden && check == Some(0) && sabotage == Some(4),
        format!(
            "repeat identical: {repeat}, golden match: {matches_golden}, check exit {check:?}, sabotaged check exit {sabotage:?}"
        ),
    ))
}

fn runtime(camera: &SensorSet, observer: &SensorSet) -> Outcome {
    let config = OptimizerConfig {
        method: Method::Newton,
        ..OptimizerConfig::default()
    };
    let start = Instant::now();
    let report = optimize(camera, observer, &config)?;
    let elapsed = start.elapsed().as_secs_f64();
    Ok((
        elapsed < 1.0,
        format!("{elapsed:.3} s for {} Newton steps", report.steps()),
    ))
}

fn main() {
    let observer = common::observer();
    let grid = common::grid();
    let camera = gaussian_camera(
        grid,
        vora_filter::spectral::GAUSSIAN_CAMERA_PEAKS,
        vora_filter::spectral::GAUSSIAN_CAMERA_SIGMA,
    )
    .expect("reference camera");
    let set = instances();

    let criteria: Vec<Criterion> = vec![
        (
            "gradient correctness",
            Box::new(|| gradient_correctness(&set, &observer)),
        ),
        (
            "hessian correctness",
            Box::new(|| hessian_correctness(&set, &observer)),
        ),
        (
            "orthogonality identity",
            Box::new(|| orthogonality(&set, &observer)),
        ),
        (
            "hessian-gradient identity",
            Box::new(|| hessian_gradient(&set, &observer)),
        ),
        (
            "positive-definiteness relation",
            Box::new(|| positive_definiteness(&set, &observer)),
        ),
        (
            "newton closed form",
            Box::new(|| newton_closed_form(&set, &observer)),
        ),
        (
            "vora bounds and fixed points",
            Box::new(|| vora_bounds(&observer)),
        ),
        (
            "optimization efficacy",
            Box::new(|| optimization_efficacy(&camera, &observer)),
        ),
        (
            "identity-filter neutrality",
            Box::new(|| identity_neutrality(&camera, &observer)),
        ),
        (
            "cli determinism and golden files",
            Box::new(cli_determinism),
        ),
        ("runtime", Box::new(|| runtime(&camera, &observer))),
    ];

    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (passed, detail) = match check() {
            Ok(outcome) => outcome,
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "{} {:>2}. {name}: {detail} [{:.2} s]",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
