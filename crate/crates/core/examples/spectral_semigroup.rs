//! The zonal heat semigroup on S^n in the Gegenbauer basis.

use scl::spectral::{nu_quadrature, semigroup_apply, NuMeasure, SpectralSemigroup, ZonalFunction};

fn main() -> scl::Result<()> {
    let n = 3;
    let s = SpectralSemigroup::with_defaults(n)?;
    let t = 0.5;
    for x in [-0.5, 0.0, 0.9] {
        let q = semigroup_apply(&s, t, &ZonalFunction::linear(1.0), x)?;
        println!(
            "Q_{t}(t)({x}) = {:.12}   e^(-nT/2)x = {:.12}",
            q.value,
            (-0.5 * n as f64 * t).exp() * x
        );
    }

    let g = ZonalFunction::exp_tilt(2.0);
    let e = s.project(&g)?;
    println!(
        "∫g dν_{n} = {:.12} (mean coefficient {:.12})",
        nu_quadrature(n, &g)?,
        e.mean()
    );
    for time in [0.1, 1.0, 10.0] {
        println!("Q_{time} g(0.3) = {:.12}", e.apply(time, 0.3));
    }

    // the heat kernel from the north pole integrates to one against ν_n
    let k = s.heat_kernel(1.0);
    let nu = NuMeasure::new(n, 128)?;
    println!(
        "∫k_0.2(1, t) dν_n(t) = {:.12}",
        nu.integrate(|t| k.apply(0.2, t))?
    );
    Ok(())
}
