//! A-priori bound suite: ball containment of the explicit iterates, the
//! implicit iterate bound, and the coupled-path perturbation bounds, checked
//! over Monte-Carlo ensembles on every fixture.
//!
//! These inequalities hold pathwise with probability one, so a single
//! violation indicates a bug or inconsistent class metadata. Run with
//! `cargo run --release --example validate_bounds`.

use randeuler::analysis::validate_bounds;
use randeuler::commands::min_implicit_steps;
use randeuler::noise::{NoiseClass, NoiseModel};
use randeuler::problem::SchemeTag;
use randeuler::problems::{
    adversarial_pair, holder_time_probe, linear_autonomous, lipschitz_state_probe,
};
use randeuler::schemes::ImplicitSolverConfig;

fn main() -> randeuler::Result<()> {
    let fixtures = vec![
        linear_autonomous(1.0, 1.0, 0.0, 1.0)?,
        holder_time_probe(0.25, 1.0, 0.0, 1.0)?,
        lipschitz_state_probe(1.0, 0.5, 2, 0.0, 1.0)?,
        adversarial_pair(0.1, 0.0, 1.0)?.0,
    ];
    let cfg = ImplicitSolverConfig::default();
    println!(
        "{:<18} {:>10} {:>7} {:>12} {:>12} {:>12} {:>6}",
        "fixture", "scheme", "delta", "ball ratio", "iter ratio", "pert ratio", "pass"
    );
    let mut all = true;
    for p in &fixtures {
        for scheme in [SchemeTag::ExplicitRandEuler, SchemeTag::ImplicitRandEuler] {
            let n = if scheme.is_implicit() {
                min_implicit_steps(p).max(64)
            } else {
                64
            };
            for delta in [0.0, 0.01, 0.1] {
                let noise = NoiseModel::linear_in_state(delta, p.d, 1.0)?;
                assert_eq!(noise.class_tag, NoiseClass::K2);
                let rep = validate_bounds(p, &noise, scheme, n, 50, 42, &cfg)?;
                let pert_ratio = if rep.perturbation_bound > 0.0 {
                    format!("{:.4}", rep.perturbation_max / rep.perturbation_bound)
                } else {
                    format!("{:.1}", rep.perturbation_max)
                };
                println!(
                    "{:<18} {:>10} {:>7} {:>12} {:>12} {:>12} {:>6}",
                    p.name,
                    scheme.label(),
                    delta,
                    rep.ball_ratio
                        .map(|r| format!("{r:.4}"))
                        .unwrap_or_else(|| "-".into()),
                    rep.iterate_ratio
                        .map(|r| format!("{r:.4}"))
                        .unwrap_or_else(|| "-".into()),
                    pert_ratio,
                    rep.passes,
                );
                all &= rep.passes;
            }
        }
    }
    println!("\nall bounds hold: {all}");
    Ok(())
}
