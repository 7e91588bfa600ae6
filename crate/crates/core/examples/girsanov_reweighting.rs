//! Paths of B + U reweighted by the Girsanov density have the law of B.

use scl::control::{girsanov_identity_check, PathFunctional};
use scl::stochastics::{ConstantPolicy, TimeGrid};

fn main() -> scl::Result<()> {
    let terminal = |p: &[f64], d: usize| p[p.len() - d];
    let running_max = |p: &[f64], d: usize| {
        p.iter()
            .step_by(d)
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let one = |_: &[f64], _: usize| 1.0;
    let hs: [&PathFunctional; 3] = [&terminal, &running_max, &one];
    let grid = TimeGrid::new(1.0, 100)?;
    let rows =
        girsanov_identity_check(&ConstantPolicy::new(vec![0.7]), &hs, grid, 1, 20_000, 5, 0)?;
    for (name, r) in ["B_T", "max B", "D_T"].iter().zip(rows) {
        println!(
            "{name:<6} weighted {:>8.5}  plain {:>8.5}  z = {:+.2}",
            r.weighted.mean,
            r.plain.mean,
            r.difference / r.std_error.max(f64::MIN_POSITIVE)
        );
    }
    Ok(())
}
