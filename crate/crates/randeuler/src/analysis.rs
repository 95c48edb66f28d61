//! Monte-Carlo estimation of the L^p sup-norm error, reference solutions,
//! convergence-order regression, the noise-floor sweep, and validation of
//! the a-priori bounds.
//!
//! The error of one path is the supremum over a refined time grid of the
//! one-norm deviation between the exact solution and the scheme's piecewise
//! linear output; the ensemble statistic is the p-th moment over paths. All
//! reductions run in a fixed order (pairwise summation over the path index),
//! so results are bit-identical at any degree of parallelism.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::noise::{NoiseClass, NoiseModel, PerturbedProblem};
use crate::problem::{
    compute_class_constants, make_mesh, one_norm, one_norm_diff, ProblemSpec, SchemeTag, Trajectory,
};
use crate::rng::{draw_uniforms, split_for_path, StreamRng, StreamSpec};
use crate::schemes::{
    deterministic_variants, explicit_rand_euler, implicit_rand_euler, DetVariant,
    ImplicitSolverConfig,
};

/// Monte-Carlo estimate of the L^p sup-norm error.
#[derive(Debug, Clone, Copy)]
pub struct ErrorEstimate {
    /// The L^p exponent (p >= 2).
    pub p: f64,
    /// Ensemble size M.
    pub paths: usize,
    pub n: usize,
    pub delta: f64,
    /// Estimate of || sup_t |z - l|_1 ||_p.
    pub value: f64,
    /// Delta-method standard error of `value`.
    pub std_error: f64,
    /// Interior sample points per step used for the t-supremum.
    pub sup_refinement: usize,
}

/// Least-squares fit of log(error) = -order log(n) + intercept.
#[derive(Debug, Clone)]
pub struct OrderFit {
    pub points: Vec<(usize, f64)>,
    pub fitted_order: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// One row of a noise-floor sweep.
#[derive(Debug, Clone, Copy)]
pub struct NoiseFloorRow {
    pub delta: f64,
    pub estimate: ErrorEstimate,
    /// error / delta; absent on the delta = 0 row.
    pub error_over_delta: Option<f64>,
}

/// Worst observed ratios against the a-priori constants over an ensemble.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub scheme: SchemeTag,
    pub delta: f64,
    pub paths: usize,
    /// max_j |W^j - eta| / R1 over all paths (explicit schemes).
    pub ball_ratio: Option<f64>,
    /// max_j |W^j| / (R1 - K) (explicit schemes).
    pub center_ratio: Option<f64>,
    /// max_j |W^j| / ((K+2) e^{2(K+1)(b-a)} - 1) (implicit schemes).
    pub iterate_ratio: Option<f64>,
    /// Worst coupled-path deviation max_j |W^j - Wbar^j| over paths.
    pub perturbation_max: f64,
    /// The bound C delta it is held against.
    pub perturbation_bound: f64,
    /// Absolute slack granted on the perturbation bound (inexact inner
    /// solves of the implicit scheme).
    pub perturbation_slack: f64,
    pub passes: bool,
}

/// Sampled check of the declared class assumptions of a problem.
#[derive(Debug, Clone, Copy)]
pub struct AssumptionReport {
    /// max |f(t,x)| / (K (1 + |x|)).
    pub growth_ratio: f64,
    /// max |f(t,x) - f(s,x)| / (L |t-s|^rho).
    pub time_holder_ratio: f64,
    /// max |f(t,x) - f(t,y)| / (L |x-y|).
    pub state_lipschitz_ratio: f64,
    pub passes: bool,
}

/// Deterministic pairwise sum; the reduction order depends only on the
/// slice layout, never on scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Reference values of the exact solution on an ascending grid, flat with
/// stride d.
///
/// Uses the analytic solution when the problem carries one; otherwise a
/// classical 4th-order one-step method on a mesh at least 64 times finer
/// than the grid spacing, with a step-doubling self-check: the halved-step
/// rerun must agree to 1e-10 in the one-norm at every grid point.
pub fn reference_solution(p: &ProblemSpec, t_grid: &[f64]) -> Result<Vec<f64>> {
    if t_grid.is_empty() {
        return Err(Error::Domain("empty reference grid".into()));
    }
    let eps = 1e-12 * (1.0 + p.a.abs().max(p.b.abs()));
    if t_grid[0] < p.a - eps || *t_grid.last().unwrap() > p.b + eps {
        return Err(Error::Domain("reference grid leaves [a, b]".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "reference grid must be strictly ascending".into(),
        ));
    }
    let d = p.d;
    if let Some(sol) = &p.analytic_solution {
        let mut out = vec![0.0; t_grid.len() * d];
        for (g, t) in t_grid.iter().enumerate() {
            sol(*t, &mut out[g * d..(g + 1) * d]);
        }
        return Ok(out);
    }
    let min_gap = t_grid
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
        .min(p.b - p.a);
    let target = min_gap / 64.0;
    let coarse = rk4_on_grid(p, t_grid, target);
    let fine = rk4_on_grid(p, t_grid, target / 2.0);
    let mut worst = 0.0f64;
    for g in 0..t_grid.len() {
        let gap = one_norm_diff(&coarse[g * d..(g + 1) * d], &fine[g * d..(g + 1) * d]);
        worst = worst.max(gap);
    }
    if worst >= 1e-10 {
        return Err(Error::ReferenceAccuracy(format!(
            "step-doubling residual {worst} >= 1e-10 on {}",
            p.name
        )));
    }
    Ok(fine)
}

fn rk4_on_grid(p: &ProblemSpec, t_grid: &[f64], max_step: f64) -> Vec<f64> {
    let d = p.d;
    let mut out = vec![0.0; t_grid.len() * d];
    let mut state = p.eta.clone();
    let mut t = p.a;
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; d],
        vec![0.0; d],
        vec![0.0; d],
        vec![0.0; d],
        vec![0.0; d],
    );
    for (g, &tg) in t_grid.iter().enumerate() {
        let span = tg - t;
        if span > 0.0 {
            let substeps = (span / max_step).ceil().max(1.0) as usize;
            let h = span / substeps as f64;
            for s in 0..substeps {
                let ts = t + s as f64 * h;
                p.eval_rhs(ts, &state, &mut k1);
                for i in 0..d {
                    tmp[i] = state[i] + 0.5 * h * k1[i];
                }
                p.eval_rhs(ts + 0.5 * h, &tmp, &mut k2);
                for i in 0..d {
                    tmp[i] = state[i] + 0.5 * h * k2[i];
                }
                p.eval_rhs(ts + 0.5 * h, &tmp, &mut k3);
                for i in 0..d {
                    tmp[i] = state[i] + h * k3[i];
                }
                p.eval_rhs(ts + h, &tmp, &mut k4);
                for i in 0..d {
                    state[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
            }
            t = tg;
        }
        out[g * d..(g + 1) * d].copy_from_slice(&state);
    }
    out
}

/// Integrate one path of the given scheme with its own streams.
pub fn run_path(
    pp: &PerturbedProblem,
    scheme: SchemeTag,
    n: usize,
    seed: u64,
    path: u64,
    cfg: &ImplicitSolverConfig,
) -> Result<Trajectory> {
    let (tau_spec, noise_spec) = split_for_path(seed, path);
    let taus = draw_uniforms(&tau_spec, n);
    let mesh = make_mesh(&pp.base, n, &taus)?;
    let mut noise_rng = noise_spec.rng();
    match scheme {
        SchemeTag::ExplicitRandEuler => explicit_rand_euler(pp, mesh, &mut noise_rng),
        SchemeTag::ImplicitRandEuler => {
            implicit_rand_euler(pp, mesh, cfg, &mut noise_rng).map(|(t, _)| t)
        }
        SchemeTag::ExplicitDetEuler => {
            deterministic_variants(pp, mesh, DetVariant::ExplicitLeftNode, cfg, &mut noise_rng)
        }
        SchemeTag::ImplicitDetEuler => {
            deterministic_variants(pp, mesh, DetVariant::ImplicitRightNode, cfg, &mut noise_rng)
        }
    }
}

/// The supremum grid: every mesh node plus `refinement` equispaced interior
/// points per step.
fn sup_grid(a: f64, h: f64, n: usize, refinement: usize) -> Vec<f64> {
    let per = refinement + 1;
    let mut grid = Vec::with_capacity(n * per + 1);
    for j in 0..n {
        for i in 0..per {
            grid.push(a + h * (j as f64 + i as f64 / per as f64));
        }
    }
    grid.push(a + h * n as f64);
    grid
}

/// Sup over the refined grid of the one-norm deviation between the
/// piecewise-linear trajectory output and the reference values.
fn path_sup(traj: &Trajectory, z_ref: &[f64], refinement: usize) -> f64 {
    let d = traj.dim();
    let n = traj.n();
    let per = refinement + 1;
    let mut sup = 0.0f64;
    for j in 0..n {
        let w0 = traj.node(j);
        let w1 = traj.node(j + 1);
        for i in 0..per {
            let s = i as f64 / per as f64;
            let g = (j * per + i) * d;
            let z = &z_ref[g..g + d];
            let mut dev = 0.0;
            for k in 0..d {
                let l = w0[k] + (w1[k] - w0[k]) * s;
                dev += (l - z[k]).abs();
            }
            sup = sup.max(dev);
        }
    }
    let g = n * per * d;
    sup.max(one_norm_diff(traj.node(n), &z_ref[g..g + d]))
}

fn check_compat(noise: &NoiseModel, scheme: SchemeTag) -> Result<()> {
    if scheme.is_implicit() && noise.class_tag != NoiseClass::K2 {
        return Err(Error::Config(format!(
            "implicit scheme requires a K2 noise model, got {} (K1)",
            noise.kind.label()
        )));
    }
    Ok(())
}

/// Monte-Carlo estimate of the L^p sup-norm error with explicit solver
/// configuration.
#[allow(clippy::too_many_arguments)]
pub fn estimate_error_with(
    p: &ProblemSpec,
    noise: &NoiseModel,
    scheme: SchemeTag,
    n: usize,
    paths: usize,
    p_exponent: f64,
    seed: u64,
    sup_refinement: usize,
    cfg: &ImplicitSolverConfig,
) -> Result<ErrorEstimate> {
    if paths < 2 {
        return Err(Error::Config(format!("need at least 2 paths, got {paths}")));
    }
    if sup_refinement == 0 {
        return Err(Error::Config("sup_refinement must be >= 1".into()));
    }
    if !(p_exponent >= 2.0) {
        return Err(Error::Config(format!(
            "p exponent must be >= 2, got {p_exponent}"
        )));
    }
    check_compat(noise, scheme)?;
    let pp = PerturbedProblem::new(p.clone(), noise.clone())?;
    let h = (p.b - p.a) / n as f64;
    let grid = sup_grid(p.a, h, n, sup_refinement);
    let z_ref = reference_solution(p, &grid)?;

    let sups: Vec<f64> = (0..paths as u64)
        .into_par_iter()
        .map(|path| {
            let traj = run_path(&pp, scheme, n, seed, path, cfg)?;
            Ok(path_sup(&traj, &z_ref, sup_refinement))
        })
        .collect::<Result<Vec<f64>>>()?;

    let powered: Vec<f64> = sups.iter().map(|s| s.powf(p_exponent)).collect();
    let m = paths as f64;
    let mean_pow = pairwise_sum(&powered) / m;
    let value = mean_pow.powf(1.0 / p_exponent);
    let centered: Vec<f64> = powered
        .iter()
        .map(|x| (x - mean_pow) * (x - mean_pow))
        .collect();
    let var_mean = pairwise_sum(&centered) / (m * (m - 1.0));
    let std_error = if mean_pow > 0.0 {
        mean_pow.powf(1.0 / p_exponent - 1.0) / p_exponent * var_mean.sqrt()
    } else {
        0.0
    };
    Ok(ErrorEstimate {
        p: p_exponent,
        paths,
        n,
        delta: noise.delta,
        value,
        std_error,
        sup_refinement,
    })
}

/// `estimate_error_with` under the default implicit-solver configuration.
#[allow(clippy::too_many_arguments)]
pub fn estimate_error(
    p: &ProblemSpec,
    noise: &NoiseModel,
    scheme: SchemeTag,
    n: usize,
    paths: usize,
    p_exponent: f64,
    seed: u64,
    sup_refinement: usize,
) -> Result<ErrorEstimate> {
    estimate_error_with(
        p,
        noise,
        scheme,
        n,
        paths,
        p_exponent,
        seed,
        sup_refinement,
        &ImplicitSolverConfig::default(),
    )
}

/// Fit log(error) against log(n) by least squares. All errors must be
/// positive; with `drop_zero` set, non-positive points are dropped instead
/// of failing (at least three must survive).
pub fn fit_order(points: &[(usize, f64)], drop_zero: bool) -> Result<OrderFit> {
    let usable: Vec<(usize, f64)> = if drop_zero {
        points.iter().copied().filter(|(_, e)| *e > 0.0).collect()
    } else {
        if let Some((n, e)) = points.iter().find(|(_, e)| !(*e > 0.0)) {
            return Err(Error::Domain(format!(
                "non-positive error {e} at n = {n} cannot enter a log-log fit"
            )));
        }
        points.to_vec()
    };
    if usable.len() < 3 {
        return Err(Error::Domain(format!(
            "order fit needs at least 3 positive points, got {}",
            usable.len()
        )));
    }
    let m = usable.len() as f64;
    let xs: Vec<f64> = usable.iter().map(|(n, _)| (*n as f64).ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|(_, e)| e.ln()).collect();
    let mean_x = pairwise_sum(&xs) / m;
    let mean_y = pairwise_sum(&ys) / m;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if sxx == 0.0 {
        return Err(Error::Domain(
            "order fit needs at least two distinct n".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (x, y) in xs.iter().zip(&ys) {
        let pred = intercept + slope * x;
        ss_res += (y - pred) * (y - pred);
        ss_tot += (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(OrderFit {
        points: usable,
        fitted_order: -slope,
        intercept,
        r_squared,
    })
}

/// Estimate the error at a fixed n for each precision in `deltas`, with the
/// noise model rebuilt per row. Reports error/delta alongside.
#[allow(clippy::too_many_arguments)]
pub fn noise_floor_sweep(
    p: &ProblemSpec,
    noise_kind: &str,
    scheme: SchemeTag,
    n_fixed: usize,
    deltas: &[f64],
    paths: usize,
    p_exponent: f64,
    seed: u64,
    sup_refinement: usize,
    cfg: &ImplicitSolverConfig,
) -> Result<Vec<NoiseFloorRow>> {
    deltas
        .iter()
        .map(|&delta| {
            let noise = NoiseModel::from_name(noise_kind, delta, p.d)?;
            let estimate = estimate_error_with(
                p,
                &noise,
                scheme,
                n_fixed,
                paths,
                p_exponent,
                seed,
                sup_refinement,
                cfg,
            )?;
            Ok(NoiseFloorRow {
                delta,
                estimate,
                error_over_delta: (delta > 0.0).then(|| estimate.value / delta),
            })
        })
        .collect()
}

/// Validate the a-priori bounds over an ensemble: ball containment of the
/// explicit iterates, the implicit iterate bound, and the coupled-path
/// perturbation bound against the clean run on identical draws.
#[allow(clippy::too_many_arguments)]
pub fn validate_bounds(
    p: &ProblemSpec,
    noise: &NoiseModel,
    scheme: SchemeTag,
    n: usize,
    paths: usize,
    seed: u64,
    cfg: &ImplicitSolverConfig,
) -> Result<BoundReport> {
    if paths == 0 {
        return Err(Error::Config("need at least one path".into()));
    }
    check_compat(noise, scheme)?;
    let constants = compute_class_constants(p);
    let noisy = PerturbedProblem::new(p.clone(), noise.clone())?;
    let clean = PerturbedProblem::new(p.clone(), NoiseModel::zero(0.0, p.d)?)?;
    let implicit = scheme.is_implicit();

    struct PathStats {
        containment: f64,
        center: f64,
        deviation: f64,
    }

    let stats: Vec<PathStats> = (0..paths as u64)
        .into_par_iter()
        .map(|path| {
            let bar = run_path(&noisy, scheme, n, seed, path, cfg)?;
            let plain = run_path(&clean, scheme, n, seed, path, cfg)?;
            let mut containment = 0.0f64;
            let mut center = 0.0f64;
            let mut deviation = 0.0f64;
            for j in 0..=n {
                let w = bar.node(j);
                containment = containment
                    .max(one_norm_diff(w, &p.eta))
                    .max(one_norm_diff(plain.node(j), &p.eta));
                center = center.max(one_norm(w)?).max(one_norm(plain.node(j))?);
                deviation = deviation.max(one_norm_diff(w, plain.node(j)));
            }
            Ok(PathStats {
                containment,
                center,
                deviation,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let worst_containment = stats.iter().map(|s| s.containment).fold(0.0, f64::max);
    let worst_center = stats.iter().map(|s| s.center).fold(0.0, f64::max);
    let perturbation_max = stats.iter().map(|s| s.deviation).fold(0.0, f64::max);

    let (noise_c, slack) = if implicit {
        (constants.implicit_noise_c, 1e-9)
    } else {
        (constants.explicit_noise_c, 0.0)
    };
    // At delta = 0 the bound is exactly zero; spelled out so an overflowed
    // constant (huge L makes e^{2L(b-a)} infinite) cannot turn it into NaN.
    let perturbation_bound = if noise.delta == 0.0 {
        0.0
    } else {
        noise_c * noise.delta
    };

    let (ball_ratio, center_ratio, iterate_ratio, structural_pass) = if implicit {
        let ratio = worst_center / constants.implicit_iterate_bound;
        (None, None, Some(ratio), ratio <= 1.0 + 1e-12)
    } else {
        let ball = worst_containment / constants.r1;
        let center = worst_center / (constants.r1 - p.K);
        (
            Some(ball),
            Some(center),
            None,
            ball <= 1.0 + 1e-12 && center <= 1.0 + 1e-12,
        )
    };
    let perturbation_pass = perturbation_max <= perturbation_bound + slack;

    Ok(BoundReport {
        scheme,
        delta: noise.delta,
        paths,
        ball_ratio,
        center_ratio,
        iterate_ratio,
        perturbation_max,
        perturbation_bound,
        perturbation_slack: slack,
        passes: structural_pass && perturbation_pass,
    })
}

/// Spot-check the declared class assumptions on sampled points and pairs in
/// [a,b] x B(eta, min(R0, lipschitz_radius)).
pub fn check_assumptions(p: &ProblemSpec, samples: usize, seed: u64) -> Result<AssumptionReport> {
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let constants = compute_class_constants(p);
    let radius = constants.r0.min(p.lipschitz_radius);
    let d = p.d;
    let mut rng = StreamRng::from_spec(&StreamSpec::new(seed, 0, crate::rng::PurposeTag::TauDraws));
    let (mut x, mut y) = (vec![0.0; d], vec![0.0; d]);
    let (mut fx, mut fy, mut gx) = (vec![0.0; d], vec![0.0; d], vec![0.0; d]);
    let mut growth: f64 = 0.0;
    let mut time_ratio: f64 = 0.0;
    let mut state_ratio: f64 = 0.0;
    for i in 0..samples {
        let t = p.a + rng.next_open01() * (p.b - p.a);
        let s = p.a + rng.next_open01() * (p.b - p.a);
        for (k, xk) in x.iter_mut().enumerate() {
            *xk = p.eta[k] + (2.0 * rng.next_open01() - 1.0) * radius / d as f64;
        }
        if i % 2 == 0 {
            for (k, yk) in y.iter_mut().enumerate() {
                *yk = p.eta[k] + (2.0 * rng.next_open01() - 1.0) * radius / d as f64;
            }
        } else {
            y.copy_from_slice(&x);
            let k = (rng.next_open01() * d as f64) as usize % d;
            y[k] += 1e-6 * (1.0 + radius) * (2.0 * rng.next_open01() - 1.0);
        }
        p.eval_rhs(t, &x, &mut fx);
        growth = growth.max(one_norm(&fx)? / (p.K * (1.0 + one_norm(&x)?)));
        if (t - s).abs() > 0.0 {
            p.eval_rhs(s, &x, &mut gx);
            time_ratio =
                time_ratio.max(one_norm_diff(&fx, &gx) / (p.L * (t - s).abs().powf(p.rho)));
        }
        let gap = one_norm_diff(&x, &y);
        if gap > 0.0 {
            p.eval_rhs(t, &y, &mut fy);
            state_ratio = state_ratio.max(one_norm_diff(&fx, &fy) / (p.L * gap));
        }
    }
    let tol = 1.0 + 1e-12;
    Ok(AssumptionReport {
        growth_ratio: growth,
        time_holder_ratio: time_ratio,
        state_lipschitz_ratio: state_ratio,
        passes: growth <= tol && time_ratio <= tol && state_ratio <= tol,
    })
}
