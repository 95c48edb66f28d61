//! Experiment commands behind the CLI subcommands: each one validates its
//! config, fans path work out to a worker pool, and writes CSV/JSON (and a
//! graymap for rasters) into the output directory.
//!
//! Outputs are byte-deterministic given (config, seed): reductions run in a
//! fixed order, JSON keys are sorted, and reals are printed with 17
//! significant digits so that values round-trip exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::analysis::{
    estimate_error_with, fit_order, noise_floor_sweep, validate_bounds, ErrorEstimate,
};
use crate::config::{Command, ExperimentConfig};
use crate::error::{Error, Result};
use crate::noise::{NoiseClass, NoiseModel};
use crate::problem::{compute_class_constants, ProblemSpec, SchemeTag};
use crate::problems::{adversarial_cancel_noise, adversarial_pair, fixture_from_name};
use crate::schemes::ImplicitSolverConfig;
use crate::stability::{raster_region, StabilityRaster, Thresholds, Trinary};

/// Version string embedded into JSON summaries.
pub const VERSION: &str = env!("RANDEULER_GIT_DESCRIBE");

/// Reals in CSV/JSON payloads: 17 significant digits, round-trip exact for
/// 64-bit floats.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(f)
}

fn out_dir(cfg: &ExperimentConfig) -> Result<PathBuf> {
    let dir = PathBuf::from(cfg.get_str("out_dir")?);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

/// Provenance block for JSON summaries: version plus the resolved config,
/// minus execution-environment keys (thread count, output directory) that
/// must not change the payload.
fn provenance(cfg: &ExperimentConfig) -> Value {
    json!({
        "version": VERSION,
        "config": cfg.serialize_filtered(&["threads", "out_dir"]),
    })
}

fn expect_command(cfg: &ExperimentConfig, want: Command) -> Result<()> {
    if cfg.command == want {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "config section [{}] handed to the {} command",
            cfg.command.name(),
            want.name()
        )))
    }
}

fn solver_config(cfg: &ExperimentConfig) -> Result<ImplicitSolverConfig> {
    let mut sc = ImplicitSolverConfig {
        fp_tolerance: cfg.get_f64("fp_tolerance")?,
        ..Default::default()
    };
    if cfg.get_str("force").is_ok() {
        sc.force = cfg.get_bool("force")?;
    }
    Ok(sc)
}

/// Step count satisfying the implicit-scheme preconditions h(L+1) < 1 and
/// h(K+1) <= 1/2 with a contraction factor of at most 1/2, so the inner
/// iteration converges in a few dozen steps instead of crawling at the
/// precondition boundary.
pub fn min_implicit_steps(p: &ProblemSpec) -> usize {
    let span = p.b - p.a;
    (2.0 * span * (p.K.max(p.L) + 1.0)).ceil().max(1.0) as usize
}

/// Run the convergence study: error estimates over `n_list` and the
/// log-log order fit against the theoretical rate min(rho + 1/2, 1).
pub fn cmd_convergence(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    expect_command(cfg, Command::Convergence)?;
    cfg.validate()?;
    let (a, b) = (cfg.get_f64("a")?, cfg.get_f64("b")?);
    let problem = fixture_from_name(cfg.get_str("fixture")?, a, b)?;
    let scheme = cfg.scheme_tag("scheme")?;
    let noise = NoiseModel::from_name(cfg.get_str("noise")?, cfg.get_f64("delta")?, problem.d)?;
    let n_list = cfg.get_usize_list("n_list")?;
    let paths = cfg.get_usize("paths")?;
    let p_exp = cfg.get_f64("p")?;
    let seed = cfg.get_u64("seed")?;
    let refinement = cfg.get_usize("sup_refinement")?;
    let sc = solver_config(cfg)?;

    let estimates: Vec<ErrorEstimate> = with_pool(cfg.get_usize("threads")?, || {
        n_list
            .iter()
            .map(|&n| {
                estimate_error_with(
                    &problem, &noise, scheme, n, paths, p_exp, seed, refinement, &sc,
                )
            })
            .collect()
    })?;

    let points: Vec<(usize, f64)> = estimates.iter().map(|e| (e.n, e.value)).collect();
    let fit = fit_order(&points, false)?;
    let theoretical = (problem.rho + 0.5).min(1.0);

    let dir = out_dir(cfg)?;
    let mut csv = String::from("scheme,fixture,rho,delta,n,h,p,M,error,std_error\n");
    for e in &estimates {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            scheme.label(),
            problem.name,
            fmt_f64(problem.rho),
            fmt_f64(noise.delta),
            e.n,
            fmt_f64((b - a) / e.n as f64),
            fmt_f64(e.p),
            e.paths,
            fmt_f64(e.value),
            fmt_f64(e.std_error),
        ));
    }
    let csv_path = dir.join("convergence.csv");
    write_text(&csv_path, &csv)?;

    let order = json!({
        "fitted_order": fit.fitted_order,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "theoretical_order": theoretical,
        "points": fit.points.iter().map(|(n, e)| json!([n, e])).collect::<Vec<_>>(),
        "provenance": provenance(cfg),
    });
    let order_path = dir.join("order.json");
    write_text(
        &order_path,
        &format!("{}\n", serde_json::to_string_pretty(&order)?),
    )?;
    Ok(vec![csv_path, order_path])
}

/// Run the noise-floor sweep: fixed n, increasing precision delta.
pub fn cmd_noise_sweep(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    expect_command(cfg, Command::NoiseSweep)?;
    cfg.validate()?;
    let (a, b) = (cfg.get_f64("a")?, cfg.get_f64("b")?);
    let problem = fixture_from_name(cfg.get_str("fixture")?, a, b)?;
    let scheme = cfg.scheme_tag("scheme")?;
    let deltas = cfg.get_f64_list("deltas")?;
    let sc = solver_config(cfg)?;

    let rows = with_pool(cfg.get_usize("threads")?, || {
        noise_floor_sweep(
            &problem,
            cfg.get_str("noise")?,
            scheme,
            cfg.get_usize("n")?,
            &deltas,
            cfg.get_usize("paths")?,
            cfg.get_f64("p")?,
            cfg.get_u64("seed")?,
            cfg.get_usize("sup_refinement")?,
            &sc,
        )
    })?;

    let dir = out_dir(cfg)?;
    let mut csv = String::from("delta,error,error_over_delta,lower_bound\n");
    for row in &rows {
        csv.push_str(&format!(
            "{},{},{},{}\n",
            fmt_f64(row.delta),
            fmt_f64(row.estimate.value),
            row.error_over_delta.map(fmt_f64).unwrap_or_default(),
            fmt_f64((b - a) * row.delta),
        ));
    }
    let csv_path = dir.join("noisefloor.csv");
    write_text(&csv_path, &csv)?;
    Ok(vec![csv_path])
}

fn pgm_of_raster(raster: &StabilityRaster) -> String {
    // Plain graymap, one cell per pixel: brightness counts the stable
    // verdicts (0..3 -> 0, 85, 170, 255).
    let mut pgm = format!("P2\n{} {}\n255\n", raster.nx, raster.ny);
    for iy in 0..raster.ny {
        let row: Vec<String> = (0..raster.nx)
            .map(|ix| {
                let v = &raster.cells[iy * raster.nx + ix].verdict;
                let stable = [v.ms_stable, v.as_stable, v.sp_stable]
                    .iter()
                    .filter(|t| **t == Trinary::Stable)
                    .count();
                (stable * 85).to_string()
            })
            .collect();
        pgm.push_str(&row.join(" "));
        pgm.push('\n');
    }
    pgm
}

/// Rasterize stability verdicts over a rectangle of the lambda plane and
/// summarize the stable fractions and deterministic-variant agreement.
pub fn cmd_stability(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    expect_command(cfg, Command::Stability)?;
    cfg.validate()?;
    let mode = cfg.stability_mode("mode")?;
    let h = cfg.get_f64("h")?;
    let thresholds = Thresholds {
        blowup: cfg.get_f64("blowup")?,
        decay: cfg.get_f64("decay")?,
    };
    let raster = with_pool(cfg.get_usize("threads")?, || {
        raster_region(
            mode,
            (cfg.get_f64("re_min")?, cfg.get_f64("re_max")?),
            (cfg.get_f64("im_min")?, cfg.get_f64("im_max")?),
            cfg.get_usize("nx")?,
            cfg.get_usize("ny")?,
            h,
            cfg.get_usize("horizon")?,
            cfg.get_usize("paths")?,
            thresholds,
            cfg.get_u64("seed")?,
        )
    })?;

    // Presentation plane: the regions are sets of h^2 lambda, so the raster
    // can be reported in either coordinate.
    let scale = if cfg.get_str("plane")? == "h2lambda" {
        h * h
    } else {
        1.0
    };

    let dir = out_dir(cfg)?;
    let mut csv = String::from("re,im,ms,as,sp,det_agrees\n");
    for cell in &raster.cells {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            fmt_f64(cell.lambda.re * scale),
            fmt_f64(cell.lambda.im * scale),
            cell.verdict.ms_stable.label(),
            cell.verdict.as_stable.label(),
            cell.verdict.sp_stable.label(),
            u8::from(cell.det_agrees),
        ));
    }
    let csv_path = dir.join("stability.csv");
    write_text(&csv_path, &csv)?;

    let pgm_path = dir.join("stability.pgm");
    write_text(&pgm_path, &pgm_of_raster(&raster))?;

    let (ms, as_, sp) = raster.stable_fraction();
    let singular: usize = raster
        .cells
        .iter()
        .map(|c| c.verdict.evidence.singular_events)
        .sum();
    let flagged = raster
        .cells
        .iter()
        .filter(|c| c.verdict.evidence.flagged_positive_real_axis)
        .count();
    let summary = json!({
        "mode": mode.label(),
        "h": h,
        "horizon": raster.steps,
        "paths": raster.paths,
        "nx": raster.nx,
        "ny": raster.ny,
        "plane": cfg.get_str("plane")?,
        "stable_fraction": { "ms": ms, "as": as_, "sp": sp },
        "det_agreement_fraction": raster.det_agreement_fraction(),
        "flagged_positive_real_axis_cells": flagged,
        "singular_events": singular,
        "provenance": provenance(cfg),
    });
    let summary_path = dir.join("stability_summary.json");
    write_text(
        &summary_path,
        &format!("{}\n", serde_json::to_string_pretty(&summary)?),
    )?;
    Ok(vec![csv_path, pgm_path, summary_path])
}

/// Run the a-priori bound suite over fixtures x schemes x noises x deltas.
/// Any observed violation is reported in bounds.json and returned as a
/// bound-violation error: these inequalities are theorems, so a failure
/// means inconsistent metadata or a bug.
pub fn cmd_validate(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    expect_command(cfg, Command::Validate)?;
    cfg.validate()?;
    let (a, b) = (cfg.get_f64("a")?, cfg.get_f64("b")?);
    let deltas = cfg.get_f64_list("deltas")?;
    let n_base = cfg.get_usize("n")?;
    let paths = cfg.get_usize("paths")?;
    let seed = cfg.get_u64("seed")?;
    let eta_shift = cfg.get_bool("eta_shift")?;
    let sc = solver_config(cfg)?;

    let schemes: Vec<SchemeTag> = cfg
        .get_str_list("schemes")?
        .iter()
        .map(|s| {
            let mut probe = ExperimentConfig::defaults(Command::Convergence);
            probe.set("scheme", s)?;
            probe.scheme_tag("scheme")
        })
        .collect::<Result<_>>()?;

    let mut cases = Vec::new();
    let mut all_pass = true;
    let result: Result<()> = with_pool(cfg.get_usize("threads")?, || {
        for fixture in cfg.get_str_list("fixtures")? {
            let problem = fixture_from_name(&fixture, a, b)?;
            let constants = compute_class_constants(&problem);
            for &scheme in &schemes {
                // Raise n where the declared constants demand a finer mesh.
                let n = if scheme.is_implicit() {
                    n_base.max(min_implicit_steps(&problem))
                } else {
                    n_base
                };
                for kind in cfg.get_str_list("noises")? {
                    for &delta in &deltas {
                        let mut noise = NoiseModel::from_name(&kind, delta, problem.d)?;
                        if scheme.is_implicit() && noise.class_tag != NoiseClass::K2 {
                            // The implicit theorems only cover K2 noise.
                            continue;
                        }
                        if eta_shift && delta > 0.0 {
                            let mut shift = vec![0.0; problem.d];
                            shift[0] = 0.5 * delta;
                            noise = noise.with_eta_perturbation(shift)?;
                        }
                        let report =
                            validate_bounds(&problem, &noise, scheme, n, paths, seed, &sc)?;
                        all_pass &= report.passes;
                        cases.push(json!({
                            "fixture": problem.name,
                            "scheme": scheme.label(),
                            "noise": kind,
                            "delta": delta,
                            "n": n,
                            "paths": report.paths,
                            "ball_ratio": report.ball_ratio,
                            "center_ratio": report.center_ratio,
                            "iterate_ratio": report.iterate_ratio,
                            "perturbation_max": report.perturbation_max,
                            "perturbation_bound": report.perturbation_bound,
                            "perturbation_slack": report.perturbation_slack,
                            "r1": constants.r1,
                            "implicit_iterate_bound": constants.implicit_iterate_bound,
                            "noise_constant": if scheme.is_implicit() {
                                constants.implicit_noise_c
                            } else {
                                constants.explicit_noise_c
                            },
                            "passes": report.passes,
                        }));
                    }
                }
            }
        }
        Ok(())
    });
    result?;

    let dir = out_dir(cfg)?;
    let doc = json!({
        "all_pass": all_pass,
        "cases": cases,
        "provenance": provenance(cfg),
    });
    let path = dir.join("bounds.json");
    write_text(&path, &format!("{}\n", serde_json::to_string_pretty(&doc)?))?;

    if !all_pass {
        return Err(Error::BoundViolation(format!(
            "bound suite found violations; see {}",
            path.display()
        )));
    }
    Ok(vec![path])
}

/// Run the adversarial-pair demonstration: both problems, both schemes, under
/// canceling noise (the scheme sees the zero field), reported against the
/// information-theoretic floor (b - a) delta.
pub fn cmd_demo_lower_bound(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    expect_command(cfg, Command::DemoLowerBound)?;
    cfg.validate()?;
    let (a, b) = (cfg.get_f64("a")?, cfg.get_f64("b")?);
    let n = cfg.get_usize("n")?;
    let seed = cfg.get_u64("seed")?;
    let refinement = cfg.get_usize("sup_refinement")?;
    let sc = solver_config(cfg)?;

    let mut rows = Vec::new();
    let mut all_meet = true;
    let result: Result<()> = with_pool(cfg.get_usize("threads")?, || {
        for &delta in &cfg.get_f64_list("deltas")? {
            let (plus, minus, info) = adversarial_pair(delta, a, b)?;
            let bound = (b - a) * info.delta;
            for scheme in [SchemeTag::ExplicitRandEuler, SchemeTag::ImplicitRandEuler] {
                let n_eff = if scheme.is_implicit() {
                    n.max(min_implicit_steps(&plus))
                } else {
                    n
                };
                let mut errors = [0.0f64; 2];
                for (slot, (problem, sign)) in [(&plus, 1.0), (&minus, -1.0)].iter().enumerate() {
                    let cancel = adversarial_cancel_noise(delta, *sign)?;
                    let est = estimate_error_with(
                        problem, &cancel, scheme, n_eff, 2, 2.0, seed, refinement, &sc,
                    )?;
                    errors[slot] = est.value;
                }
                let max_error = errors[0].max(errors[1]);
                let meets = max_error >= bound - 1e-12;
                all_meet &= meets;
                rows.push(json!({
                    "delta": delta,
                    "scheme": scheme.label(),
                    "error_plus": errors[0],
                    "error_minus": errors[1],
                    "max_error": max_error,
                    "lower_bound": bound,
                    "meets_lower_bound": meets,
                }));
            }
        }
        Ok(())
    });
    result?;

    let dir = out_dir(cfg)?;
    let doc = json!({
        "all_meet_lower_bound": all_meet,
        "rows": rows,
        "provenance": provenance(cfg),
    });
    let path = dir.join("lower_bound.json");
    write_text(&path, &format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
    if !all_meet {
        return Err(Error::BoundViolation(
            "a scheme fed canceling noise beat the information floor; this contradicts the \
             two-solution separation argument"
                .into(),
        ));
    }
    Ok(vec![path])
}

/// Emit a self-contained gnuplot script referencing the CSV outputs; no
/// plotting library is linked into the binary.
pub fn cmd_plot(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    expect_command(cfg, Command::Plot)?;
    cfg.validate()?;
    let dir = out_dir(cfg)?;
    let script = r#"# gnuplot script; run from this directory: gnuplot plots.gp
set datafile separator ','

# Empirical convergence order: error against n on log-log axes.
set terminal pngcairo size 900,600
set output 'convergence.png'
set logscale xy
set xlabel 'n'
set ylabel 'L^p sup-norm error'
set key left bottom
plot 'convergence.csv' every ::1 using 5:9 with linespoints pt 7 title 'measured', \
     'convergence.csv' every ::1 using 5:9:10 with yerrorbars notitle

# Noise floor: error and error/delta against the precision.
set output 'noisefloor.png'
set logscale xy
set xlabel 'delta'
set ylabel 'error'
plot 'noisefloor.csv' every ::1 using 1:2 with linespoints pt 7 title 'error', \
     'noisefloor.csv' every ::1 using 1:4 with lines dashtype 2 title '(b-a) delta'

# Stability raster: brightness = stability verdict per cell.
set output 'stability.png'
unset logscale
set xlabel 'Re'
set ylabel 'Im'
verdict(s) = (s eq 'stable') ? 2.0 : (s eq 'inconclusive') ? 1.0 : 0.0
set palette defined (0 'dark-red', 1 'gray', 2 'dark-green')
unset colorbox
plot 'stability.csv' every ::1 using 1:2:(verdict(stringcolumn(3))) \
     with points pt 5 ps 1.6 palette notitle
"#;
    let path = dir.join("plots.gp");
    write_text(&path, script)?;
    Ok(vec![path])
}

/// Dispatch a parsed config to its command.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    match cfg.command {
        Command::Convergence => cmd_convergence(cfg),
        Command::NoiseSweep => cmd_noise_sweep(cfg),
        Command::Stability => cmd_stability(cfg),
        Command::Validate => cmd_validate(cfg),
        Command::DemoLowerBound => cmd_demo_lower_bound(cfg),
        Command::Plot => cmd_plot(cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("randeuler-cmd-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    fn small_convergence(dir: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::defaults(Command::Convergence);
        cfg.set("n_list", "16,32,64,128").unwrap();
        cfg.set("paths", "12").unwrap();
        cfg.set("sup_refinement", "4").unwrap();
        cfg.set("out_dir", dir.to_str().unwrap()).unwrap();
        cfg
    }

    #[test]
    fn convergence_writes_csv_and_order_json() {
        let dir = tmp_dir("conv");
        let cfg = small_convergence(&dir);
        let files = cmd_convergence(&cfg).unwrap();
        assert_eq!(files.len(), 2);
        let csv = fs::read_to_string(dir.join("convergence.csv")).unwrap();
        assert!(csv.starts_with("scheme,fixture,rho,delta,n,h,p,M,error,std_error\n"));
        assert_eq!(csv.lines().count(), 5);
        let order: Value =
            serde_json::from_str(&fs::read_to_string(dir.join("order.json")).unwrap()).unwrap();
        assert_eq!(order["theoretical_order"], json!(0.75));
        assert!(order["fitted_order"].as_f64().unwrap() > 0.3);
        assert!(order["provenance"]["config"]
            .as_str()
            .unwrap()
            .contains("seed = 42"));
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn reruns_are_byte_identical_across_thread_counts() {
        let dir1 = tmp_dir("det1");
        let dir8 = tmp_dir("det8");
        let mut cfg1 = small_convergence(&dir1);
        cfg1.set("threads", "1").unwrap();
        let mut cfg8 = small_convergence(&dir8);
        cfg8.set("threads", "8").unwrap();
        cmd_convergence(&cfg1).unwrap();
        cmd_convergence(&cfg8).unwrap();
        for name in ["convergence.csv", "order.json"] {
            let b1 = fs::read(dir1.join(name)).unwrap();
            let b8 = fs::read(dir8.join(name)).unwrap();
            assert_eq!(b1, b8, "{name} differs across thread counts");
        }
        let _ = fs::remove_dir_all(&dir1);
        let _ = fs::remove_dir_all(&dir8);
    }

    #[test]
    fn noise_sweep_reports_the_floor_on_the_adversarial_fixture() {
        let dir = tmp_dir("sweep");
        let mut cfg = ExperimentConfig::defaults(Command::NoiseSweep);
        cfg.set("n", "64").unwrap();
        cfg.set("paths", "4").unwrap();
        cfg.set("deltas", "0.01,0.1").unwrap();
        cfg.set("out_dir", dir.to_str().unwrap()).unwrap();
        cmd_noise_sweep(&cfg).unwrap();
        let csv = fs::read_to_string(dir.join("noisefloor.csv")).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "delta,error,error_over_delta,lower_bound"
        );
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            let ratio: f64 = cols[2].parse().unwrap();
            // f_tilde = 2 delta e1 against the exact slope delta: the ratio
            // is exactly (b - a).
            assert!((ratio - 1.0).abs() < 1e-12, "{line}");
        }
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn demo_lower_bound_meets_the_floor_exactly() {
        let dir = tmp_dir("demo");
        let mut cfg = ExperimentConfig::defaults(Command::DemoLowerBound);
        cfg.set("n", "16").unwrap();
        cfg.set("out_dir", dir.to_str().unwrap()).unwrap();
        cmd_demo_lower_bound(&cfg).unwrap();
        let doc: Value =
            serde_json::from_str(&fs::read_to_string(dir.join("lower_bound.json")).unwrap())
                .unwrap();
        assert_eq!(doc["all_meet_lower_bound"], json!(true));
        for row in doc["rows"].as_array().unwrap() {
            let max = row["max_error"].as_f64().unwrap();
            let bound = row["lower_bound"].as_f64().unwrap();
            assert!((max - bound).abs() < 1e-12);
            // Sign symmetry of the pair.
            assert_eq!(row["error_plus"], row["error_minus"]);
        }
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn validate_passes_on_a_small_slice() {
        let dir = tmp_dir("validate");
        let mut cfg = ExperimentConfig::defaults(Command::Validate);
        cfg.set("fixtures", "linear,adversarial(0.1)").unwrap();
        cfg.set("noises", "linear-in-state,adversarial-sign")
            .unwrap();
        cfg.set("deltas", "0,0.1").unwrap();
        cfg.set("paths", "10").unwrap();
        cfg.set("n", "32").unwrap();
        cfg.set("out_dir", dir.to_str().unwrap()).unwrap();
        cmd_validate(&cfg).unwrap();
        let doc: Value =
            serde_json::from_str(&fs::read_to_string(dir.join("bounds.json")).unwrap()).unwrap();
        assert_eq!(doc["all_pass"], json!(true));
        let cases = doc["cases"].as_array().unwrap();
        // K1 noise is skipped for the implicit scheme.
        assert!(cases.iter().all(
            |c| !(c["scheme"] == json!("implicit") && c["noise"] == json!("adversarial-sign"))
        ));
        assert!(cases.iter().any(|c| c["scheme"] == json!("implicit")));
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn stability_emits_raster_files() {
        let dir = tmp_dir("stab");
        let mut cfg = ExperimentConfig::defaults(Command::Stability);
        cfg.set("nx", "3").unwrap();
        cfg.set("ny", "3").unwrap();
        cfg.set("horizon", "1200").unwrap();
        cfg.set("paths", "20").unwrap();
        cfg.set("out_dir", dir.to_str().unwrap()).unwrap();
        cmd_stability(&cfg).unwrap();
        let csv = fs::read_to_string(dir.join("stability.csv")).unwrap();
        assert!(csv.starts_with("re,im,ms,as,sp,det_agrees\n"));
        assert_eq!(csv.lines().count(), 10);
        let pgm = fs::read_to_string(dir.join("stability.pgm")).unwrap();
        assert!(pgm.starts_with("P2\n3 3\n255\n"));
        let summary: Value =
            serde_json::from_str(&fs::read_to_string(dir.join("stability_summary.json")).unwrap())
                .unwrap();
        // Explicit raster: nothing is stable.
        assert_eq!(summary["stable_fraction"]["ms"], json!(0.0));
        assert_eq!(summary["det_agreement_fraction"], json!(1.0));
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn plot_script_is_emitted() {
        let dir = tmp_dir("plot");
        let mut cfg = ExperimentConfig::defaults(Command::Plot);
        cfg.set("out_dir", dir.to_str().unwrap()).unwrap();
        cmd_plot(&cfg).unwrap();
        let gp = fs::read_to_string(dir.join("plots.gp")).unwrap();
        assert!(gp.contains("convergence.csv"));
        assert!(gp.contains("stability.csv"));
        let _ = fs::remove_dir_all(&dir);
    }
}
