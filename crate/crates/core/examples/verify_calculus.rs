//! Checks the analytic gradient and Hessian against finite differences and
//! the scale-invariance identities on a few random filters.

use vora_filter::calculus::VoraProblem;
use vora_filter::cli::check::{random_filters, run_suite};
use vora_filter::{cie1931_observer, reference_camera, WavelengthGrid};

fn main() -> vora_filter::Result<()> {
    let grid = WavelengthGrid::default();
    let camera = reference_camera(grid)?;
    let observer = cie1931_observer(grid)?;
    let problem = VoraProblem::new(&camera, &observer)?;

    let filters = random_filters(problem.dim(), 10, 42);
    for check in run_suite(&problem, &filters, false)? {
        println!(
            "{:<42} {:10.3e} (tol {:.0e}) {}",
            check.name,
            check.max_error,
            check.tolerance,
            if check.passed() { "ok" } else { "FAIL" }
        );
    }
    Ok(())
}
