//! Horizontal Brownian motion on the orthonormal frame bundle of S^2 and
//! stochastic development of a fixed driving path.

use scl::geometry::{SphereFrame, SpherePoint};
use scl::inequalities::frame_lemma_check;
use scl::simulate::develop;
use scl::stochastics::TimeGrid;

fn main() -> scl::Result<()> {
    let frame = SphereFrame::standard_at(SpherePoint::pole(2, 2));
    let steps = 400;
    let grid = TimeGrid::new(std::f64::consts::FRAC_PI_2, steps)?;
    // a straight driving path rolls the sphere along a great circle
    let driving: Vec<f64> = (0..steps).flat_map(|_| [grid.dt(), 0.0]).collect();
    let path = develop(&frame, &grid, &driving)?;
    let end = path.terminal();
    println!("end point after rolling π/2: {:?}", end.base().coords());
    println!("orthonormality defect: {:.2e}", end.orthonormality_defect());

    for n in [2, 3, 5, 10] {
        let r = frame_lemma_check(n, 20_000, 11, 0)?;
        println!(
            "n = {n:>2}: max Σ<θ^i,y>²/|y|² = {:.4} ({} violations)",
            r.max_ratio, r.violations
        );
    }
    Ok(())
}
