//! Empirical convergence order against the theoretical rate min(rho + 1/2, 1).
//!
//! Sweeps the step count on the Hoelder time probe, estimates the L^2
//! sup-norm error over a Monte-Carlo ensemble, and fits the order on
//! log-log axes. Run with `cargo run --release --example convergence_order`.

use randeuler::analysis::{estimate_error, fit_order};
use randeuler::noise::NoiseModel;
use randeuler::problem::SchemeTag;
use randeuler::problems::holder_time_probe;

fn main() -> randeuler::Result<()> {
    let paths = 100;
    let seed = 42;
    for rho in [0.25, 0.5, 1.0] {
        let problem = holder_time_probe(rho, 1.0, 0.0, 1.0)?;
        let noise = NoiseModel::zero(0.0, 1)?;
        println!("rho = {rho}: {:>6} {:>14} {:>12}", "n", "error", "std err");
        let mut points = Vec::new();
        for exp in 6..=12 {
            let n = 1usize << exp;
            let e = estimate_error(
                &problem,
                &noise,
                SchemeTag::ExplicitRandEuler,
                n,
                paths,
                2.0,
                seed,
                8,
            )?;
            println!("         {n:>6} {:>14.6e} {:>12.2e}", e.value, e.std_error);
            points.push((n, e.value));
        }
        let fit = fit_order(&points, false)?;
        let theory = (rho + 0.5f64).min(1.0);
        println!(
            "         fitted order {:.4} (theory {theory}), r^2 = {:.5}\n",
            fit.fitted_order, fit.r_squared
        );
    }
    Ok(())
}
