//! Control values of a few drifts for f(x) = a·x in R^1, against
//! log E e^{f(B_1)} = a²/2.

use scl::control::{
    h_transform_euclidean_linear, log_partition_gaussian_linear, verify_variational, PolicyCase,
};
use scl::simulate::{EuclideanModel, EuclideanSystem};
use scl::stochastics::{sample_brownian, ConstantPolicy, TimeGrid, ZeroPolicy};

fn main() -> scl::Result<()> {
    let a = [1.0];
    let grid = TimeGrid::new(1.0, 200)?;
    let batch = sample_brownian(grid, 1, 20_000, 7)?;
    let sys = EuclideanSystem {
        model: EuclideanModel::brownian(1),
        x0: vec![0.0],
    };
    let payoff = |x: &Vec<f64>| a[0] * x[0];
    let lhs = log_partition_gaussian_linear(&a, &[0.0], 1.0);

    let half = ConstantPolicy::new(vec![0.5]);
    let exact = ConstantPolicy::new(a.to_vec());
    let optimal = h_transform_euclidean_linear(&a)?;
    let cases = [
        PolicyCase::plain(&ZeroPolicy),
        PolicyCase::plain(&half),
        PolicyCase::plain(&exact),
        PolicyCase::optimal(&optimal),
    ];
    println!("log E e^(aB_1) = {:.6}", lhs.value);
    for (case, gap) in cases
        .iter()
        .zip(verify_variational(&sys, &payoff, lhs, &cases, &batch, 0)?)
    {
        println!(
            "{:<28} control value {:>9.6}  gap {:>9.6} ± {:.1e}",
            case.policy.info().name,
            gap.rhs.best().mean,
            gap.gap,
            gap.std_error
        );
    }
    Ok(())
}
