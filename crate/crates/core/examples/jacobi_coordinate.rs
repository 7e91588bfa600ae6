//! One coordinate of Brownian motion on S^n is a Jacobi diffusion. Compare
//! terminal moments from the frame-bundle stepper and from the scalar SDE.

use scl::geometry::{SphereFrame, SpherePoint};
use scl::simulate::{run_batch, ControlVariate, JacobiSystem, SphereSystem};
use scl::stats::{combined_std_error, MeanEstimate};
use scl::stochastics::{sample_brownian, TimeGrid, ZeroPolicy};

fn moments(xs: &[f64]) -> Vec<MeanEstimate> {
    (1..=4)
        .map(|k| MeanEstimate::from_samples(&xs.iter().map(|x| x.powi(k)).collect::<Vec<_>>()))
        .collect()
}

fn main() -> scl::Result<()> {
    let grid = TimeGrid::new(1.0, 200)?;
    for n in [2usize, 3, 5] {
        let mut c = vec![0.0; n + 1];
        c[0] = 0.5;
        c[1] = 0.75f64.sqrt();
        let sphere = SphereSystem {
            frame0: SphereFrame::standard_at(SpherePoint::new(c)?),
        };
        let jacobi = JacobiSystem { n, x0: 0.5 };
        let a: Vec<f64> = run_batch(
            &sphere,
            &ZeroPolicy,
            ControlVariate::None,
            &sample_brownian(grid, n, 10_000, 1)?,
            0,
        )
        .iter()
        .map(|o| o.terminal.base().coords()[0])
        .collect();
        let b: Vec<f64> = run_batch(
            &jacobi,
            &ZeroPolicy,
            ControlVariate::None,
            &sample_brownian(grid, 1, 10_000, 2)?,
            0,
        )
        .iter()
        .map(|o| o.terminal)
        .collect();
        print!("n = {n}:");
        for (k, (x, y)) in moments(&a).iter().zip(moments(&b)).enumerate() {
            print!(
                "  m{} z = {:+.2}",
                k + 1,
                (x.mean - y.mean) / combined_std_error(x, &y)
            );
        }
        println!();
    }
    Ok(())
}
