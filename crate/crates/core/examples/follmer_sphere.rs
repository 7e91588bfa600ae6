//! Föllmer sampling of a zonal tilt on S^2 from the equator, and the law of
//! the drifted path as an f(X_T)-reweighting of Brownian paths.

use scl::entropy::{bridge_law_check_sphere, follmer_sample_sphere, PathFunctional, ZonalTarget};
use scl::spectral::{SpectralSemigroup, ZonalFunction};
use scl::stochastics::TimeGrid;

fn main() -> scl::Result<()> {
    let s = SpectralSemigroup::with_defaults(2)?;
    let target = ZonalTarget::finite_horizon(&s, &ZonalFunction::exp_tilt(1.0), 0, 0.0, 2.0)?;
    let frame = target.start_frame()?;
    let grid = TimeGrid::new(2.0, 200)?;
    let r = follmer_sample_sphere(&target, &frame, grid, 10_000, 2, 0)?.report;
    println!(
        "H = {:.5}, drift energy = {:.5} ± {:.1e}",
        r.entropy, r.drift_energy.mean, r.drift_energy.std_error
    );
    for m in &r.moments {
        println!(
            "E x_0^{} = {:.5} ± {:.1e} (quadrature {:.5})",
            m.order, m.sample.mean, m.sample.std_error, m.oracle
        );
    }
    for row in bridge_law_check_sphere(
        &target,
        &frame,
        &PathFunctional::standard_set(),
        grid,
        10_000,
        (3, 4),
        0,
    )? {
        println!(
            "{:<12} Föllmer {:.4}  reweighted {:.4}",
            row.name, row.follmer.mean, row.reweighted.mean
        );
    }
    Ok(())
}
