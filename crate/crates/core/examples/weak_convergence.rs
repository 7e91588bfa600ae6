//! Weak error of the sphere stepper for f(x) = x_0 from the pole, with
//! common random numbers across step sizes and a martingale control variate.

use scl::control::{estimate_control_value, ValueKind, ZonalValue};
use scl::geometry::{SphereFrame, SpherePoint};
use scl::simulate::{ControlVariate, SphereSystem};
use scl::spectral::{SpectralSemigroup, ZonalFunction};
use scl::stochastics::{sample_brownian, TimeGrid, ZeroPolicy};

fn main() -> scl::Result<()> {
    let n = 2;
    let s = SpectralSemigroup::with_defaults(n)?;
    let sys = SphereSystem {
        frame0: SphereFrame::standard_at(SpherePoint::pole(n, 0)),
    };
    let exact = (-(n as f64) / 2.0).exp();
    let finest = sample_brownian(TimeGrid::new(1.0, 400)?, n, 10_000, 6)?;
    let payoff = |fr: &SphereFrame| fr.base().coords()[0];
    let mut last: Option<f64> = None;
    for factor in [4, 2, 1] {
        let b = finest.coarsened(factor)?;
        let v = ZonalValue::new(
            &s,
            &ZonalFunction::linear(1.0),
            0,
            b.grid(),
            ValueKind::Linear,
        )?;
        let est =
            estimate_control_value(&sys, &payoff, &ZeroPolicy, ControlVariate::Value(&v), &b, 0)?
                .best();
        let err = est.mean - exact;
        let ratio = last
            .map(|l| format!("ratio {:.2}", l / err))
            .unwrap_or_default();
        println!(
            "N = {:>3}: error {:+.3e} ± {:.1e} {ratio}",
            b.grid().steps(),
            err,
            est.std_error
        );
        last = Some(err);
    }
    Ok(())
}
