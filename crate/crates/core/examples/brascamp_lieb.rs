//! ∫∏g_i(x_i) dσ ≤ ∏‖g_i‖_{L²(ν_n)} on S^n, and a pair of ridge functions that
//! breaks the L¹ version.

use scl::inequalities::{bl_verify, BLInstance};

fn main() -> scl::Result<()> {
    for n in [2usize, 3, 5] {
        let mut worst: f64 = 0.0;
        for i in 0..20 {
            let r = bl_verify(&BLInstance::random_tilts(n, 9, i)?, 20_000, 100 + i, 0)?;
            worst = worst.max(r.ratio);
        }
        println!("n = {n}: largest lhs/rhs over 20 random tilts = {worst:.4}");
    }
    let r = bl_verify(&BLInstance::ridge_bump()?, 100_000, 1, 0)?;
    println!(
        "ridge bump: lhs {:.5} ± {:.1e}, L² bound {:.5}, L¹ bound {:.5} (violated: {})",
        r.lhs.mean, r.lhs.std_error, r.rhs, r.rhs_l1, r.l1_violated
    );
    Ok(())
}
