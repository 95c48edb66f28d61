//! Exact-iterate check on the linear problem z' = z, z(0) = 1.
//!
//! Both schemes have closed-form node values here: the explicit scheme
//! produces (1 + h)^j, the implicit scheme (1 - h)^{-j}. Run with
//! `cargo run --release --example closed_form_check`.

use randeuler::noise::NoiseModel;
use randeuler::problem::make_mesh;
use randeuler::problems::linear_autonomous;
use randeuler::rng::{draw_uniforms, split_for_path};
use randeuler::schemes::{explicit_rand_euler, implicit_rand_euler, ImplicitSolverConfig};

fn main() -> randeuler::Result<()> {
    let problem = linear_autonomous(1.0, 1.0, 0.0, 1.0)?;
    let pp = randeuler::noise::PerturbedProblem::new(problem, NoiseModel::zero(0.0, 1)?)?;
    let cfg = ImplicitSolverConfig::default();

    println!(
        "{:>6} {:>24} {:>24}",
        "n", "explicit max rel err", "implicit max rel err"
    );
    for n in [10usize, 100, 1000] {
        let (tau_spec, noise_spec) = split_for_path(42, 0);
        let taus = draw_uniforms(&tau_spec, n);
        let mesh = make_mesh(&pp.base, n, &taus)?;
        let h = mesh.h;

        let mut noise_rng = noise_spec.rng();
        let explicit = explicit_rand_euler(&pp, mesh.clone(), &mut noise_rng)?;
        let (implicit, _) = implicit_rand_euler(&pp, mesh, &cfg, &mut noise_rng)?;

        let mut worst_e = 0.0f64;
        let mut worst_i = 0.0f64;
        for j in 0..=n {
            let ve = (1.0 + h).powi(j as i32);
            let ui = (1.0 - h).powi(-(j as i32));
            worst_e = worst_e.max((explicit.node(j)[0] - ve).abs() / ve);
            worst_i = worst_i.max((implicit.node(j)[0] - ui).abs() / ui);
        }
        println!("{n:>6} {worst_e:>24.3e} {worst_i:>24.3e}");
    }

    // The endpoint error itself decays like 1/n: the scheme is first order
    // on this problem no matter how smooth the field is.
    println!("\n{:>6} {:>18}", "n", "|z(1) - V^n|");
    for n in [10usize, 100, 1000, 10000] {
        let h = 1.0 / n as f64;
        let endpoint = (1.0 + h).powi(n as i32);
        println!("{n:>6} {:>18.6e}", (std::f64::consts::E - endpoint).abs());
    }
    Ok(())
}
