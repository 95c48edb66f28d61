//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with its measurements (run with `-- --nocapture` to see them
//! on success; failures are loud either way).

use std::time::Instant;

use num_complex::Complex64;
use randeuler::analysis::{estimate_error, fit_order, noise_floor_sweep, validate_bounds};
use randeuler::commands::min_implicit_steps;
use randeuler::noise::{NoiseClass, NoiseModel, PerturbedProblem};
use randeuler::problem::{compute_class_constants, make_mesh, SchemeTag};
use randeuler::problems::{
    adversarial_cancel_noise, adversarial_pair, holder_time_probe, linear_autonomous,
    lipschitz_state_probe, stability_problem,
};
use randeuler::rng::{draw_uniforms, split_for_path, PurposeTag, StreamRng, StreamSpec};
use randeuler::schemes::{explicit_rand_euler, implicit_rand_euler, ImplicitSolverConfig};
use randeuler::stability::{
    classify, explicit_step_factor, ms_moment_explicit, raster_region, StabilityMode,
    StabilityQuery, Thresholds,
};

const SEED: u64 = 42;

fn budget(start: Instant, seconds: f64, what: &str) -> f64 {
    let elapsed = start.elapsed().as_secs_f64();
    assert!(
        elapsed < seconds,
        "{what}: {elapsed:.1} s exceeded the {seconds} s budget"
    );
    elapsed
}

/// Criterion 1: closed-form iterates on the linear problem, explicit to
/// 1e-12 relative and implicit to 1e-9 relative, within one second.
#[test]
fn criterion_1_closed_form_iterates() {
    let start = Instant::now();
    let problem = linear_autonomous(1.0, 1.0, 0.0, 1.0).unwrap();
    let pp = PerturbedProblem::new(problem, NoiseModel::zero(0.0, 1).unwrap()).unwrap();
    let cfg = ImplicitSolverConfig::default();
    let mut worst_explicit = 0.0f64;
    let mut worst_implicit = 0.0f64;
    for n in [10usize, 100, 1000] {
        let (tau_spec, noise_spec) = split_for_path(SEED, 0);
        let taus = draw_uniforms(&tau_spec, n);
        let mesh = make_mesh(&pp.base, n, &taus).unwrap();
        let h = mesh.h;
        let mut noise_rng = noise_spec.rng();
        let explicit = explicit_rand_euler(&pp, mesh.clone(), &mut noise_rng).unwrap();
        let (implicit, _) = implicit_rand_euler(&pp, mesh, &cfg, &mut noise_rng).unwrap();
        for j in 0..=n {
            let ve = (1.0 + h).powi(j as i32);
            let ui = (1.0 - h).powi(-(j as i32));
            worst_explicit = worst_explicit.max((explicit.node(j)[0] - ve).abs() / ve);
            worst_implicit = worst_implicit.max((implicit.node(j)[0] - ui).abs() / ui);
        }
    }
    assert!(
        worst_explicit <= 1e-12,
        "explicit deviation {worst_explicit}"
    );
    assert!(
        worst_implicit <= 1e-9,
        "implicit deviation {worst_implicit}"
    );
    let elapsed = budget(start, 1.0, "criterion 1");
    println!(
        "criterion 1 PASS: closed-form iterates, explicit dev {worst_explicit:.2e} <= 1e-12, \
         implicit dev {worst_implicit:.2e} <= 1e-9 ({elapsed:.2} s < 1 s)"
    );
}

fn convergence_order(rho: f64, scheme: SchemeTag) -> (f64, f64) {
    let problem = holder_time_probe(rho, 1.0, 0.0, 1.0).unwrap();
    let noise = NoiseModel::zero(0.0, 1).unwrap();
    let points: Vec<(usize, f64)> = (6..=13)
        .map(|exp| {
            let n = 1usize << exp;
            let e = estimate_error(&problem, &noise, scheme, n, 200, 2.0, SEED, 8).unwrap();
            (n, e.value)
        })
        .collect();
    let fit = fit_order(&points, false).unwrap();
    (fit.fitted_order, fit.r_squared)
}

/// Criterion 2: empirical order on the rho = 0.25 probe lands on the
/// theoretical exponent rho + 1/2 = 0.75 for both schemes.
#[test]
fn criterion_2_convergence_order_rho_quarter() {
    let start = Instant::now();
    let mut report = String::new();
    for scheme in [SchemeTag::ExplicitRandEuler, SchemeTag::ImplicitRandEuler] {
        let (order, r2) = convergence_order(0.25, scheme);
        assert!(
            (0.65..=0.85).contains(&order),
            "{}: fitted order {order} outside [0.65, 0.85]",
            scheme.label()
        );
        assert!(r2 >= 0.98, "{}: r^2 = {r2} below 0.98", scheme.label());
        report.push_str(&format!("{} {order:.3} (r^2 {r2:.4}) ", scheme.label()));
    }
    let elapsed = budget(start, 120.0, "criterion 2");
    println!(
        "criterion 2 PASS: holder(0.25) fitted order in [0.65, 0.85]: {report}({elapsed:.1} s < 120 s)"
    );
}

/// Criterion 3: empirical order on the rho = 1 probe saturates at the
/// theoretical min(rho + 1/2, 1) = 1 for both schemes; the closed-form
/// linear problem shows the same saturation.
#[test]
fn criterion_3_convergence_order_rho_one() {
    let start = Instant::now();
    let mut report = String::new();
    for scheme in [SchemeTag::ExplicitRandEuler, SchemeTag::ImplicitRandEuler] {
        let (order, r2) = convergence_order(1.0, scheme);
        assert!(
            (0.90..=1.10).contains(&order),
            "{}: fitted order {order} outside [0.90, 1.10]",
            scheme.label()
        );
        assert!(r2 >= 0.98, "{}: r^2 = {r2} below 0.98", scheme.label());
        report.push_str(&format!("{} {order:.3} (r^2 {r2:.4}) ", scheme.label()));
    }

    // Supporting check: the linear problem's endpoint error is Theta(1/n),
    // so its fitted order must sit in the same band.
    let problem = linear_autonomous(1.0, 1.0, 0.0, 1.0).unwrap();
    let noise = NoiseModel::zero(0.0, 1).unwrap();
    let points: Vec<(usize, f64)> = (6..=13)
        .map(|exp| {
            let n = 1usize << exp;
            let e = estimate_error(
                &problem,
                &noise,
                SchemeTag::ExplicitRandEuler,
                n,
                200,
                2.0,
                SEED,
                8,
            )
            .unwrap();
            (n, e.value)
        })
        .collect();
    let fit = fit_order(&points, false).unwrap();
    assert!(
        (0.90..=1.10).contains(&fit.fitted_order),
        "linear fixture order {}",
        fit.fitted_order
    );
    let elapsed = budget(start, 120.0, "criterion 3");
    println!(
        "criterion 3 PASS: holder(1.0) fitted order in [0.90, 1.10]: {report}linear {:.3} \
         ({elapsed:.1} s < 120 s)",
        fit.fitted_order
    );
}

/// Criterion 4: the lower-bound demonstration meets (b - a) delta exactly,
/// and the noise sweep's error/delta ratio sits between (b - a) and the
/// a-priori constant.
#[test]
fn criterion_4_noise_floor_and_lower_bound() {
    let start = Instant::now();
    let (a, b) = (0.0, 1.0);

    for delta in [0.01, 0.05, 0.1] {
        let (plus, minus, info) = adversarial_pair(delta, a, b).unwrap();
        let bound = (b - a) * info.delta;
        for scheme in [SchemeTag::ExplicitRandEuler, SchemeTag::ImplicitRandEuler] {
            let mut max_error = 0.0f64;
            for (problem, sign) in [(&plus, 1.0), (&minus, -1.0)] {
                let cancel = adversarial_cancel_noise(delta, sign).unwrap();
                let value = estimate_error(problem, &cancel, scheme, 64, 2, 2.0, SEED, 8)
                    .unwrap()
                    .value;
                max_error = max_error.max(value);
            }
            assert!(
                max_error >= bound - 1e-12 && (max_error - bound).abs() <= 1e-12,
                "{} delta {delta}: max error {max_error} vs floor {bound}",
                scheme.label()
            );
        }
    }

    let (plus, _, _) = adversarial_pair(0.1, a, b).unwrap();
    let constants = compute_class_constants(&plus);
    let rows = noise_floor_sweep(
        &plus,
        "constant-direction",
        SchemeTag::ExplicitRandEuler,
        1 << 13,
        &[0.01, 0.05, 0.1],
        100,
        2.0,
        SEED,
        8,
        &ImplicitSolverConfig::default(),
    )
    .unwrap();
    let mut ratios = String::new();
    for row in &rows {
        let ratio = row.error_over_delta.unwrap();
        assert!(
            ratio >= (b - a) && ratio <= constants.explicit_noise_c + 0.1,
            "delta {}: error/delta = {ratio} outside [(b-a), C + 0.1]",
            row.delta
        );
        ratios.push_str(&format!("{ratio:.3} "));
    }
    let elapsed = budget(start, 60.0, "criterion 4");
    println!(
        "criterion 4 PASS: lower bound met exactly at deltas {{0.01, 0.05, 0.1}}; sweep \
         error/delta = {ratios}in [1, {:.2}] ({elapsed:.1} s < 60 s)",
        constants.explicit_noise_c + 0.1
    );
}

/// Criterion 5: the a-priori bound suite holds over every fixture, scheme,
/// and delta with M = 100 paths and zero violations.
#[test]
fn criterion_5_theorem_bound_suite() {
    let start = Instant::now();
    let fixtures = vec![
        linear_autonomous(1.0, 1.0, 0.0, 1.0).unwrap(),
        holder_time_probe(0.25, 1.0, 0.0, 1.0).unwrap(),
        holder_time_probe(1.0, 1.0, 0.0, 1.0).unwrap(),
        lipschitz_state_probe(1.0, 0.5, 2, 0.0, 1.0).unwrap(),
        adversarial_pair(0.1, 0.0, 1.0).unwrap().0,
        stability_problem(Complex64::new(-1.0, 0.5), 1.0).unwrap(),
    ];
    let cfg = ImplicitSolverConfig::default();
    let kinds = [
        "constant-direction",
        "linear-in-state",
        "state-scaled-sine",
        "adversarial-sign",
    ];
    let mut cases = 0usize;
    for p in &fixtures {
        for scheme in [SchemeTag::ExplicitRandEuler, SchemeTag::ImplicitRandEuler] {
            let n = if scheme.is_implicit() {
                min_implicit_steps(p).max(64)
            } else {
                64
            };
            for kind in kinds {
                for delta in [0.0, 0.01, 0.1] {
                    let mut noise = NoiseModel::from_name(kind, delta, p.d).unwrap();
                    if scheme.is_implicit() && noise.class_tag != NoiseClass::K2 {
                        continue;
                    }
                    if delta > 0.0 {
                        let mut shift = vec![0.0; p.d];
                        shift[0] = 0.5 * delta;
                        noise = noise.with_eta_perturbation(shift).unwrap();
                    }
                    let report = validate_bounds(p, &noise, scheme, n, 100, SEED, &cfg).unwrap();
                    assert!(
                        report.passes,
                        "{} {} {kind} delta {delta}: {report:?}",
                        p.name,
                        scheme.label()
                    );
                    cases += 1;
                }
            }
        }
    }
    let elapsed = budget(start, 120.0, "criterion 5");
    println!(
        "criterion 5 PASS: ball containment, iterate bound, and coupled perturbation bounds \
         hold in all {cases} cases ({elapsed:.1} s < 120 s)"
    );
}

/// Criterion 6: stability verdicts at the reference point and over the
/// 50 x 50 raster match the region theorems; the closed-form second moment
/// matches Monte-Carlo within three standard errors.
#[test]
fn criterion_6_stability() {
    let start = Instant::now();
    let lambda = Complex64::new(-1.0, 0.0);
    let query = |mode| StabilityQuery {
        lambda,
        h: 0.1,
        steps: 5000,
        paths: 1000,
        thresholds: Thresholds::default(),
        mode,
    };
    let explicit = classify(&query(StabilityMode::Explicit), SEED).unwrap();
    assert!(explicit.all_unstable(), "explicit verdict {explicit:?}");
    let implicit = classify(&query(StabilityMode::Implicit), SEED).unwrap();
    assert!(implicit.all_stable(), "implicit verdict {implicit:?}");

    let raster_exp = raster_region(
        StabilityMode::Explicit,
        (-4.0, 1.0),
        (-2.0, 2.0),
        50,
        50,
        0.1,
        2000,
        100,
        Thresholds::default(),
        SEED,
    )
    .unwrap();
    let (ms, as_, sp) = raster_exp.stable_fraction();
    assert_eq!(
        (ms, as_, sp),
        (0.0, 0.0, 0.0),
        "explicit raster stable fractions"
    );
    assert_eq!(raster_exp.det_agreement_fraction(), 1.0);

    let raster_imp = raster_region(
        StabilityMode::Implicit,
        (-4.0, 1.0),
        (-2.0, 2.0),
        50,
        50,
        0.1,
        2000,
        100,
        Thresholds::default(),
        SEED,
    )
    .unwrap();
    // No grid point of this rectangle sits on the closed positive real axis.
    assert!(raster_imp
        .cells
        .iter()
        .all(|c| !c.verdict.evidence.flagged_positive_real_axis));
    let (ms, as_, sp) = raster_imp.stable_fraction();
    assert_eq!(
        (ms, as_, sp),
        (1.0, 1.0, 1.0),
        "implicit raster stable fractions"
    );
    assert_eq!(raster_imp.det_agreement_fraction(), 1.0);

    // Closed-form log E |V^K|^2 against a plain Monte-Carlo second moment.
    let (h, steps, paths) = (0.1, 50usize, 100_000u64);
    let analytic = ms_moment_explicit(lambda, h, steps).unwrap().exp();
    let samples: Vec<f64> = (0..paths)
        .map(|p| {
            let mut rng = StreamRng::from_spec(&StreamSpec::new(SEED, p, PurposeTag::TauDraws));
            let mut acc = 0.0f64;
            for j in 1..=steps {
                let theta = h * ((j - 1) as f64 + rng.next_open01());
                acc += explicit_step_factor(lambda, h, theta).norm_sqr().ln();
            }
            acc.exp()
        })
        .collect();
    let m = paths as f64;
    let mean = samples.iter().sum::<f64>() / m;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (m * (m - 1.0));
    let gap = (mean - analytic).abs();
    assert!(
        gap <= 3.0 * var.sqrt(),
        "moment gap {gap} vs 3 se = {}",
        3.0 * var.sqrt()
    );

    let elapsed = budget(start, 180.0, "criterion 6");
    println!(
        "criterion 6 PASS: explicit unstable / implicit stable at the reference point, raster \
         fractions 0.000 / 1.000 with 100% deterministic agreement, moment gap {gap:.2e} <= 3 se \
         ({elapsed:.1} s < 180 s)"
    );
}

/// Criterion 7: the CLI produces byte-identical outputs when re-run with
/// the same config and seed at 1 versus 8 worker threads.
#[test]
fn criterion_7_reproducibility_across_thread_counts() {
    let bin = env!("CARGO_BIN_EXE_randeuler");
    let base = std::env::temp_dir().join(format!("randeuler-acceptance-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&base);

    type RunSpec = (
        &'static str,
        &'static [(&'static str, &'static str)],
        &'static [&'static str],
    );
    let runs: &[RunSpec] = &[
        (
            "convergence",
            &[
                ("n_list", "16,32,64,128"),
                ("paths", "24"),
                ("sup_refinement", "4"),
            ],
            &["convergence.csv", "order.json"],
        ),
        (
            "noise-sweep",
            &[("n", "256"), ("paths", "16")],
            &["noisefloor.csv"],
        ),
        (
            "stability",
            &[
                ("nx", "6"),
                ("ny", "6"),
                ("horizon", "1200"),
                ("paths", "32"),
            ],
            &["stability.csv", "stability.pgm", "stability_summary.json"],
        ),
        (
            "validate",
            &[
                ("fixtures", "linear,holder(0.25)"),
                ("paths", "16"),
                ("n", "32"),
            ],
            &["bounds.json"],
        ),
        ("demo-lower-bound", &[("n", "16")], &["lower_bound.json"]),
    ];

    for (command, overrides, files) in runs {
        let mut outputs = Vec::new();
        for threads in ["1", "8"] {
            let dir = base.join(format!("{command}-{threads}"));
            let mut cmd = std::process::Command::new(bin);
            cmd.arg(command)
                .arg("--seed")
                .arg("42")
                .arg("--threads")
                .arg(threads)
                .arg("--out")
                .arg(&dir);
            for (k, v) in *overrides {
                cmd.arg(format!("--{k}")).arg(v);
            }
            let status = cmd.status().unwrap();
            assert!(status.success(), "{command} failed at {threads} threads");
            outputs.push(dir);
        }
        for file in *files {
            let one = std::fs::read(outputs[0].join(file)).unwrap();
            let eight = std::fs::read(outputs[1].join(file)).unwrap();
            assert_eq!(
                one, eight,
                "{command}/{file} differs between 1 and 8 threads"
            );
        }
    }
    let _ = std::fs::remove_dir_all(&base);
    println!(
        "criterion 7 PASS: byte-identical CSV/JSON/PGM outputs at 1 vs 8 worker threads for all \
         five commands"
    );
}
