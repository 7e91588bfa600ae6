//! The optimal drift on S^2 for the zonal payoff f(x) = a·x_0 recovers the
//! spectral log Q_T(e^f) up to an O(dt) gap.

use scl::control::{estimate_control_value, h_transform_zonal, log_partition_spectral};
use scl::geometry::{SphereFrame, SpherePoint};
use scl::simulate::{ControlVariate, SphereSystem};
use scl::spectral::{SpectralSemigroup, ZonalFunction};
use scl::stochastics::{sample_brownian, TimeGrid};

fn main() -> scl::Result<()> {
    let s = SpectralSemigroup::with_defaults(2)?;
    let sys = SphereSystem {
        frame0: SphereFrame::standard_at(SpherePoint::new(vec![0.0, 1.0, 0.0])?),
    };
    let fine = sample_brownian(TimeGrid::new(1.0, 400)?, 2, 5_000, 3)?;
    for a in [0.5, 1.0] {
        let f = ZonalFunction::linear(a);
        let lhs = log_partition_spectral(&s, &f, 1.0, 0.0)?;
        println!("a = {a}: log Q_1(e^f)(equator) = {:.8}", lhs.value);
        for factor in [4, 2, 1] {
            let b = fine.coarsened(factor)?;
            let h = h_transform_zonal(&s, &f, 0, b.grid())?;
            let payoff = move |fr: &SphereFrame| a * fr.base().coords()[0];
            let v =
                estimate_control_value(&sys, &payoff, &h, ControlVariate::Policy, &b, 0)?.best();
            println!(
                "  N = {:>4}: gap {:.3e} ± {:.1e}",
                b.grid().steps(),
                lhs.value - v.mean,
                v.std_error
            );
        }
    }
    Ok(())
}
