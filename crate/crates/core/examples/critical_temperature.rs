//! Critical inverse temperatures from the Gaussian tanh² integral, and the
//! Monte-Carlo tail harnesses checked against their bounds.

use spinlab::thresholds::{
    beta_c, beta_rec, gw_sqr_tail_harness, half_normal_tail_harness, theta_tail_harness, upsilon_path_harness, KAPPA_C,
};

fn main() -> spinlab::Result<()> {
    for d in [2.0, 4.0, 8.0, 30.0, 100.0, 1e4] {
        println!("d = {d:>7}: β_c = {:.8}, β_rec = {:.8}, √d·β_c = {:.5}", beta_c(d, KAPPA_C)?, beta_rec(d)?, d.sqrt() * beta_c(d, KAPPA_C)?);
    }
    let samples = 20_000;
    let reports = [
        theta_tail_harness(30.0, beta_c(30.0, KAPPA_C)?, 0.5, samples, 1, 4)?,
        gw_sqr_tail_harness(20.0, beta_c(20.0, KAPPA_C)?, KAPPA_C, 3, 1.2, 10.0, samples, 2, 4)?,
        half_normal_tail_harness(100, 1.0, 0.2, samples, 3, 4)?,
    ];
    for r in &reports {
        println!("{:<12} {:<40} empirical {:.4e}  bound {:.4e}  ok {}", r.harness, r.params, r.empirical, r.bound, r.within_bound());
    }
    let u = upsilon_path_harness(500, 8.0, beta_c(8.0, KAPPA_C)?, 5, 2_000, 4, 4)?;
    println!("Υ over {} paths: {} above {:.3}, max {:.3}", u.paths, u.exceedances, u.threshold, u.max_upsilon);
    Ok(())
}
