//! Stability laboratory for the non-autonomous test problem
//! z' = 2 lambda t z on [0, infinity).
//!
//! Applied to this problem the schemes reduce to scalar complex products:
//! the explicit step multiplies by `1 + 2 lambda h theta_k`, the implicit
//! step by `1 / (1 - 2 lambda h theta_k)`, with `theta_k = h (k - 1 + tau_k)`.
//! The lab works on these closed-form factors directly. All modulus products
//! are accumulated as sums of logarithms: the explicit scheme provably blows
//! up and would overflow in linear space.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{PurposeTag, StreamRng, StreamSpec};

/// Which recurrence the classification simulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabilityMode {
    Explicit,
    Implicit,
    ExplicitDet,
    ImplicitDet,
}

impl StabilityMode {
    pub fn is_implicit(&self) -> bool {
        matches!(self, StabilityMode::Implicit | StabilityMode::ImplicitDet)
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(
            self,
            StabilityMode::ExplicitDet | StabilityMode::ImplicitDet
        )
    }

    /// The matching deterministic (or randomized) variant for agreement
    /// checks.
    pub fn counterpart(&self) -> StabilityMode {
        match self {
            StabilityMode::Explicit => StabilityMode::ExplicitDet,
            StabilityMode::Implicit => StabilityMode::ImplicitDet,
            StabilityMode::ExplicitDet => StabilityMode::Explicit,
            StabilityMode::ImplicitDet => StabilityMode::Implicit,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            StabilityMode::Explicit => "explicit",
            StabilityMode::Implicit => "implicit",
            StabilityMode::ExplicitDet => "explicit-det",
            StabilityMode::ImplicitDet => "implicit-det",
        }
    }
}

/// Three-valued stability verdict; a finite-horizon classifier cannot always
/// decide, so Inconclusive is a first-class outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trinary {
    Stable,
    Unstable,
    Inconclusive,
}

impl Trinary {
    pub fn label(&self) -> &'static str {
        match self {
            Trinary::Stable => "stable",
            Trinary::Unstable => "unstable",
            Trinary::Inconclusive => "inconclusive",
        }
    }
}

/// Decision thresholds on |W^K / eta|.
#[derive(Debug, Clone, Copy)]
pub struct Thresholds {
    pub blowup: f64,
    pub decay: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            blowup: 1e6,
            decay: 1e-6,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if self.blowup > 1.0 && self.decay < 1.0 && self.decay > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "thresholds need blowup > 1 > decay > 0, got blowup = {}, decay = {}",
                self.blowup, self.decay
            )))
        }
    }
}

/// One stability classification request.
#[derive(Debug, Clone, Copy)]
pub struct StabilityQuery {
    pub lambda: Complex64,
    pub h: f64,
    /// Horizon: number of steps simulated.
    pub steps: usize,
    /// Ensemble size for the pathwise (AS/SP) verdicts.
    pub paths: usize,
    pub thresholds: Thresholds,
    pub mode: StabilityMode,
}

/// Ensemble summary behind a verdict.
#[derive(Debug, Clone, Copy)]
pub struct StabilityEvidence {
    pub mean_log_modulus: f64,
    pub min_log_modulus: f64,
    pub max_log_modulus: f64,
    /// Fraction of paths with log |W^K / eta| below log(decay).
    pub decayed_fraction: f64,
    /// Fraction of paths above log(blowup).
    pub blown_fraction: f64,
    pub singular_events: usize,
    /// Set when lambda lies on the closed positive real axis, where the
    /// implicit factor can be singular; such queries are decided by fiat.
    pub flagged_positive_real_axis: bool,
}

/// The full trinary verdict of one query.
#[derive(Debug, Clone, Copy)]
pub struct StabilityVerdict {
    pub ms_stable: Trinary,
    pub as_stable: Trinary,
    pub sp_stable: Trinary,
    /// log E |W^K / eta|^2 via the product of per-step factor moments.
    pub ms_analytic_log_moment: f64,
    pub evidence: StabilityEvidence,
}

impl StabilityVerdict {
    pub fn triple(&self) -> (Trinary, Trinary, Trinary) {
        (self.ms_stable, self.as_stable, self.sp_stable)
    }

    pub fn all_stable(&self) -> bool {
        self.triple() == (Trinary::Stable, Trinary::Stable, Trinary::Stable)
    }

    pub fn all_unstable(&self) -> bool {
        self.triple() == (Trinary::Unstable, Trinary::Unstable, Trinary::Unstable)
    }
}

/// Explicit per-step factor 1 + 2 lambda h theta.
pub fn explicit_step_factor(lambda: Complex64, h: f64, theta: f64) -> Complex64 {
    Complex64::new(1.0, 0.0) + 2.0 * lambda * h * theta
}

/// Implicit per-step factor 1 / (1 - 2 lambda h theta); singular only for
/// lambda on the positive real axis.
pub fn implicit_step_factor(lambda: Complex64, h: f64, theta: f64) -> Result<Complex64> {
    let denom = Complex64::new(1.0, 0.0) - 2.0 * lambda * h * theta;
    if denom.norm_sqr() == 0.0 {
        return Err(Error::Singularity { theta });
    }
    Ok(denom.inv())
}

/// Closed-form log E |V^K / eta|^2 of the explicit scheme: averaging the
/// squared factor modulus over tau_j ~ U(0,1) with theta_j = h (j - 1 + tau_j)
/// gives the per-step moment
/// 1 + 4 Re(lambda) h^2 (j - 1/2) + 4 |lambda|^2 h^4 (j^2 - j + 1/3).
pub fn ms_moment_explicit(lambda: Complex64, h: f64, steps: usize) -> Result<f64> {
    if steps == 0 {
        return Err(Error::Domain("horizon must be >= 1".into()));
    }
    let re = lambda.re;
    let abs2 = lambda.norm_sqr();
    let h2 = h * h;
    let h4 = h2 * h2;
    let mut acc = 0.0;
    for j in 1..=steps {
        let jf = j as f64;
        let m = 1.0 + 4.0 * re * h2 * (jf - 0.5) + 4.0 * abs2 * h4 * (jf * jf - jf + 1.0 / 3.0);
        if m <= 0.0 {
            return Err(Error::LogDomain { value: m });
        }
        acc += m.ln();
    }
    Ok(acc)
}

/// E over u in (0,1) of 1 / |1 - 2 lambda h^2 (j - 1 + u)|^2 by composite
/// Simpson quadrature; the panel count is raised when the real part of the
/// denominator changes sign inside the step.
fn implicit_factor_sq_moment(lambda: Complex64, h: f64, j: usize) -> Result<f64> {
    let h2 = h * h;
    let (re, im) = (lambda.re, lambda.im);
    let base = (j - 1) as f64;
    let dsq = |u: f64| -> f64 {
        let v = base + u;
        let rp = 1.0 - 2.0 * re * h2 * v;
        let ip = -2.0 * im * h2 * v;
        rp * rp + ip * ip
    };
    let mut panels = 64usize;
    if re > 0.0 {
        let v0 = 1.0 / (2.0 * re * h2);
        if v0 >= base && v0 <= base + 1.0 {
            if im == 0.0 {
                return Err(Error::Singularity { theta: h * v0 });
            }
            panels = 1024;
        }
    }
    let step = 1.0 / panels as f64;
    let mut sum = 1.0 / dsq(0.0) + 1.0 / dsq(1.0);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w / dsq(i as f64 * step);
    }
    Ok(sum * step / 3.0)
}

/// log E |U^K / eta|^2 of the implicit scheme via the product formula; the
/// per-step moments come from quadrature.
pub fn ms_moment_implicit(lambda: Complex64, h: f64, steps: usize) -> Result<f64> {
    if steps == 0 {
        return Err(Error::Domain("horizon must be >= 1".into()));
    }
    let mut acc = 0.0;
    for j in 1..=steps {
        let m = implicit_factor_sq_moment(lambda, h, j)?;
        if m <= 0.0 {
            return Err(Error::LogDomain { value: m });
        }
        acc += m.ln();
    }
    Ok(acc)
}

fn det_theta(mode: StabilityMode, h: f64, j: usize) -> f64 {
    match mode {
        StabilityMode::ExplicitDet => h * (j - 1) as f64,
        StabilityMode::ImplicitDet => h * j as f64,
        _ => unreachable!("det_theta on a randomized mode"),
    }
}

/// log E |W^K / eta|^2 for any mode; deterministic variants have no
/// randomness, so the moment is the exact squared modulus product.
pub fn ms_log_moment(mode: StabilityMode, lambda: Complex64, h: f64, steps: usize) -> Result<f64> {
    match mode {
        StabilityMode::Explicit => ms_moment_explicit(lambda, h, steps),
        StabilityMode::Implicit => ms_moment_implicit(lambda, h, steps),
        det => {
            let mut acc = 0.0;
            for j in 1..=steps {
                let theta = det_theta(det, h, j);
                let fsq = if det == StabilityMode::ExplicitDet {
                    explicit_step_factor(lambda, h, theta).norm_sqr()
                } else {
                    implicit_step_factor(lambda, h, theta)?.norm_sqr()
                };
                if fsq <= 0.0 {
                    return Err(Error::LogDomain { value: fsq });
                }
                acc += fsq.ln();
            }
            Ok(acc)
        }
    }
}

/// First step index beyond which the explicit squared factor exceeds 2 no
/// matter where theta falls in its step interval (lambda != 0); at and after
/// the returned index the iterate modulus grows strictly.
pub fn explicit_crossover_index(lambda: Complex64, h: f64) -> Result<usize> {
    crossover_index(lambda, h, false)
}

/// First step index beyond which the implicit squared factor is below 1/2
/// for every theta in its step interval (lambda off the positive real axis).
pub fn implicit_crossover_index(lambda: Complex64, h: f64) -> Result<usize> {
    crossover_index(lambda, h, true)
}

fn crossover_index(lambda: Complex64, h: f64, implicit: bool) -> Result<usize> {
    if lambda.norm_sqr() == 0.0 {
        return Err(Error::Domain("no crossover for lambda = 0".into()));
    }
    if !(h > 0.0) {
        return Err(Error::Domain("step size must be positive".into()));
    }
    let re = if implicit { lambda.re } else { -lambda.re };
    let abs2 = lambda.norm_sqr();
    // The relevant quadratic in x = theta / h is
    //   4 |lambda|^2 h^4 x^2 -+ 4 Re(lambda) h^2 x - 1 > 1,
    // whose positive root and vertex give the index past which the
    // interval minimum clears the threshold.
    let root = (re + (re * re + abs2).sqrt()) / (2.0 * abs2 * h * h);
    let vertex = re.max(0.0) / (2.0 * abs2 * h * h);
    Ok(root.max(vertex).ceil() as usize + 2)
}

fn path_log_modulus(q: &StabilityQuery, seed: u64, path: u64, singular: &mut usize) -> f64 {
    let mut acc = 0.0f64;
    match q.mode {
        StabilityMode::Explicit | StabilityMode::Implicit => {
            let mut rng = StreamRng::from_spec(&StreamSpec::new(seed, path, PurposeTag::TauDraws));
            for j in 1..=q.steps {
                let theta = q.h * ((j - 1) as f64 + rng.next_open01());
                acc += log_factor(q, theta, singular);
            }
        }
        det => {
            for j in 1..=q.steps {
                acc += log_factor(q, det_theta(det, q.h, j), singular);
            }
        }
    }
    acc
}

fn log_factor(q: &StabilityQuery, theta: f64, singular: &mut usize) -> f64 {
    if q.mode.is_implicit() {
        match implicit_step_factor(q.lambda, q.h, theta) {
            Ok(f) => 0.5 * f.norm_sqr().ln(),
            Err(_) => {
                // Exactly singular draws have probability zero; count the
                // event and cap the path as blown without going non-finite.
                *singular += 1;
                f64::MAX.ln()
            }
        }
    } else {
        0.5 * explicit_step_factor(q.lambda, q.h, theta).norm_sqr().ln()
    }
}

/// Classify one (lambda, h) against the three stability notions.
///
/// MS uses the analytic log-moment; AS requires every path below the decay
/// threshold (or every path blown, for the unstable call); SP asks for the
/// decayed fraction to clear 99% (or fall below 1%). lambda = 0 keeps
/// |W^k| = |eta| > 0 forever and is unstable under all three notions;
/// lambda on the open positive real axis is out of every implicit region by
/// fiat (the step factor can be singular there) and the query is flagged.
pub fn classify(q: &StabilityQuery, seed: u64) -> Result<StabilityVerdict> {
    q.thresholds.validate()?;
    if q.steps == 0 || q.paths == 0 {
        return Err(Error::Config(
            "classification needs steps >= 1 and paths >= 1".into(),
        ));
    }
    let lambda = q.lambda;
    let on_axis = lambda.im == 0.0 && lambda.re > 0.0;

    if lambda.norm_sqr() == 0.0 {
        let evidence = StabilityEvidence {
            mean_log_modulus: 0.0,
            min_log_modulus: 0.0,
            max_log_modulus: 0.0,
            decayed_fraction: 0.0,
            blown_fraction: 0.0,
            singular_events: 0,
            flagged_positive_real_axis: false,
        };
        return Ok(StabilityVerdict {
            ms_stable: Trinary::Unstable,
            as_stable: Trinary::Unstable,
            sp_stable: Trinary::Unstable,
            ms_analytic_log_moment: 0.0,
            evidence,
        });
    }

    if on_axis && q.mode.is_implicit() {
        let evidence = StabilityEvidence {
            mean_log_modulus: f64::MAX.ln(),
            min_log_modulus: f64::MAX.ln(),
            max_log_modulus: f64::MAX.ln(),
            decayed_fraction: 0.0,
            blown_fraction: 1.0,
            singular_events: 0,
            flagged_positive_real_axis: true,
        };
        return Ok(StabilityVerdict {
            ms_stable: Trinary::Unstable,
            as_stable: Trinary::Unstable,
            sp_stable: Trinary::Unstable,
            ms_analytic_log_moment: f64::INFINITY,
            evidence,
        });
    }

    let ms_log = ms_log_moment(q.mode, lambda, q.h, q.steps)?;
    let ln_decay = q.thresholds.decay.ln();
    let ln_blowup = q.thresholds.blowup.ln();

    // Deterministic variants have identical paths; one is enough.
    let effective_paths = if q.mode.is_deterministic() {
        1
    } else {
        q.paths
    };
    let results: Vec<(f64, usize)> = (0..effective_paths as u64)
        .into_par_iter()
        .map(|path| {
            let mut singular = 0usize;
            let acc = path_log_modulus(q, seed, path, &mut singular);
            (acc, singular)
        })
        .collect();
    let singular_events: usize = results.iter().map(|(_, s)| s).sum();
    let logs: Vec<f64> = results.iter().map(|(a, _)| *a).collect();
    let m = logs.len() as f64;
    let decayed = logs.iter().filter(|a| **a < ln_decay).count();
    let blown = logs.iter().filter(|a| **a > ln_blowup).count();
    let decayed_fraction = decayed as f64 / m;
    let blown_fraction = blown as f64 / m;

    let ms_stable = if ms_log < ln_decay {
        Trinary::Stable
    } else if ms_log > ln_blowup {
        Trinary::Unstable
    } else {
        Trinary::Inconclusive
    };
    let as_stable = if decayed == logs.len() {
        Trinary::Stable
    } else if decayed == 0 && blown == logs.len() {
        Trinary::Unstable
    } else {
        Trinary::Inconclusive
    };
    let sp_stable = if decayed_fraction >= 0.99 {
        Trinary::Stable
    } else if decayed_fraction <= 0.01 {
        Trinary::Unstable
    } else {
        Trinary::Inconclusive
    };

    let evidence = StabilityEvidence {
        mean_log_modulus: crate::analysis::pairwise_sum(&logs) / m,
        min_log_modulus: logs.iter().copied().fold(f64::INFINITY, f64::min),
        max_log_modulus: logs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        decayed_fraction,
        blown_fraction,
        singular_events,
        flagged_positive_real_axis: on_axis,
    };
    Ok(StabilityVerdict {
        ms_stable,
        as_stable,
        sp_stable,
        ms_analytic_log_moment: ms_log,
        evidence,
    })
}

/// One rasterized grid cell.
#[derive(Debug, Clone, Copy)]
pub struct RasterCell {
    pub lambda: Complex64,
    pub verdict: StabilityVerdict,
    pub det_verdict: StabilityVerdict,
    pub det_agrees: bool,
}

/// Verdict raster over a rectangle of the lambda plane.
#[derive(Debug, Clone)]
pub struct StabilityRaster {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub steps: usize,
    pub paths: usize,
    pub mode: StabilityMode,
    /// Row-major cells: the imaginary axis varies slowest.
    pub cells: Vec<RasterCell>,
}

impl StabilityRaster {
    pub fn stable_fraction(&self) -> (f64, f64, f64) {
        let m = self.cells.len() as f64;
        let count = |pick: fn(&StabilityVerdict) -> Trinary| {
            self.cells
                .iter()
                .filter(|c| pick(&c.verdict) == Trinary::Stable)
                .count() as f64
                / m
        };
        (
            count(|v| v.ms_stable),
            count(|v| v.as_stable),
            count(|v| v.sp_stable),
        )
    }

    pub fn det_agreement_fraction(&self) -> f64 {
        self.cells.iter().filter(|c| c.det_agrees).count() as f64 / self.cells.len() as f64
    }
}

/// Classify every grid cell of `[re_min, re_max] x [im_min, im_max]` at the
/// given resolution, together with the deterministic-variant verdict.
#[allow(clippy::too_many_arguments)]
pub fn raster_region(
    mode: StabilityMode,
    re_range: (f64, f64),
    im_range: (f64, f64),
    nx: usize,
    ny: usize,
    h: f64,
    steps: usize,
    paths: usize,
    thresholds: Thresholds,
    seed: u64,
) -> Result<StabilityRaster> {
    if nx < 2 || ny < 2 {
        return Err(Error::Config(
            "raster resolution must be at least 2 x 2".into(),
        ));
    }
    if !(re_range.1 > re_range.0) || !(im_range.1 > im_range.0) {
        return Err(Error::Config("raster rectangle is degenerate".into()));
    }
    let cells: Vec<RasterCell> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let iy = idx / nx;
            let ix = idx % nx;
            let re = re_range.0 + (re_range.1 - re_range.0) * ix as f64 / (nx - 1) as f64;
            let im = im_range.0 + (im_range.1 - im_range.0) * iy as f64 / (ny - 1) as f64;
            let lambda = Complex64::new(re, im);
            let cell_seed = seed ^ (idx as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
            let q = StabilityQuery {
                lambda,
                h,
                steps,
                paths,
                thresholds,
                mode,
            };
            let verdict = classify(&q, cell_seed)?;
            let qd = StabilityQuery {
                mode: mode.counterpart(),
                ..q
            };
            let det_verdict = classify(&qd, cell_seed)?;
            Ok(RasterCell {
                lambda,
                verdict,
                det_verdict,
                det_agrees: verdict.triple() == det_verdict.triple(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StabilityRaster {
        nx,
        ny,
        h,
        steps,
        paths,
        mode,
        cells,
    })
}
