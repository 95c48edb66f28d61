//! The randomized explicit and implicit Euler integrators, plus their
//! classical deterministic variants.
//!
//! Explicit recurrence: `W^0 = eta_tilde`, `W^j = W^{j-1} + h f_tilde(theta_j, W^{j-1})`.
//! Implicit recurrence: `W^0 = eta_tilde`, `W^j = W^{j-1} + h f_tilde(theta_j, W^j)`,
//! with each implicit step solved by the fixed-point (Picard) iteration
//! `x_{k+1} = W^{j-1} + h f_tilde(theta_j, x_k)`. The iteration contracts with
//! factor `h (L + 1) < 1`, which is exactly the existence condition of the
//! scheme, so Newton's method (and the Jacobian it would require) is not
//! needed.

use crate::error::{Error, Result};
use crate::noise::{NoiseClass, PerturbedProblem};
use crate::problem::{RandomMesh, SchemeTag, Trajectory};
use crate::rng::StreamRng;

/// Starting point of the per-step fixed-point iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Predictor {
    /// Start from the previous node value.
    PreviousNode,
    /// Start from one explicit Euler step (one extra evaluation, fewer
    /// iterations).
    ExplicitEulerPredictor,
}

/// Controls for the implicit per-step solve.
#[derive(Debug, Clone, Copy)]
pub struct ImplicitSolverConfig {
    /// Successive-iterate tolerance, scaled by `1 + |iterate|`.
    pub fp_tolerance: f64,
    pub max_iterations: usize,
    pub predictor: Predictor,
    /// Downgrade precondition violations to best-effort execution
    /// (exploratory runs only).
    pub force: bool,
}

impl Default for ImplicitSolverConfig {
    fn default() -> Self {
        Self {
            fp_tolerance: 1e-12,
            max_iterations: 200,
            predictor: Predictor::ExplicitEulerPredictor,
            force: false,
        }
    }
}

impl ImplicitSolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fp_tolerance > 0.0) {
            return Err(Error::Config(format!(
                "fp_tolerance must be positive, got {}",
                self.fp_tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-step solve diagnostics of the implicit scheme.
#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub fixed_point_iterations: usize,
    /// The contraction factor bound h (L + 1) of the Picard map.
    pub contraction_factor_bound: f64,
    /// One-norm gap between the first iterate and the predictor; the
    /// geometric convergence bound is computed from it.
    pub first_iterate_gap: f64,
}

/// Deterministic evaluation-point choices recovering the classical schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetVariant {
    /// theta_j = t_{j-1} (classical explicit Euler).
    ExplicitLeftNode,
    /// theta_j = t_j (classical implicit Euler).
    ImplicitRightNode,
}

fn check_finite(state: &[f64], step: usize) -> Result<()> {
    if state.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence { step })
    }
}

fn check_mesh(pp: &PerturbedProblem, mesh: &RandomMesh) -> Result<()> {
    let same = (mesh.nodes[0] - pp.base.a).abs() <= 1e-12 * (1.0 + pp.base.a.abs())
        && (mesh.nodes[mesh.n] - pp.base.b).abs() <= 1e-12 * (1.0 + pp.base.b.abs());
    if same {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "mesh interval [{}, {}] does not match problem interval [{}, {}]",
            mesh.nodes[0], mesh.nodes[mesh.n], pp.base.a, pp.base.b
        )))
    }
}

fn explicit_kernel(
    pp: &PerturbedProblem,
    mesh: RandomMesh,
    thetas: &[f64],
    tag: SchemeTag,
    noise_rng: &mut StreamRng,
) -> Result<Trajectory> {
    check_mesh(pp, &mesh)?;
    let d = pp.base.d;
    let n = mesh.n;
    let h = mesh.h;
    let mut values = vec![0.0; (n + 1) * d];
    values[..d].copy_from_slice(&pp.eta_tilde());
    let mut fbuf = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    for j in 1..=n {
        let (done, rest) = values.split_at_mut(j * d);
        let prev = &done[(j - 1) * d..];
        pp.eval_rhs_tilde(thetas[j - 1], prev, noise_rng, &mut fbuf, &mut scratch)?;
        let cur = &mut rest[..d];
        for k in 0..d {
            cur[k] = prev[k] + h * fbuf[k];
        }
        check_finite(cur, j)?;
    }
    Ok(Trajectory::new(mesh, tag, d, values))
}

/// Run the randomized explicit Euler scheme over the mesh. Exactly one
/// corrupted evaluation per step, at `(theta_j, W^{j-1})`.
pub fn explicit_rand_euler(
    pp: &PerturbedProblem,
    mesh: RandomMesh,
    noise_rng: &mut StreamRng,
) -> Result<Trajectory> {
    let thetas = mesh.thetas.clone();
    explicit_kernel(pp, mesh, &thetas, SchemeTag::ExplicitRandEuler, noise_rng)
}

fn implicit_preconditions(pp: &PerturbedProblem, h: f64, force: bool) -> Result<()> {
    let (k, l) = (pp.base.K, pp.base.L);
    if pp.noise.class_tag != NoiseClass::K2 && !force {
        return Err(Error::Config(format!(
            "implicit scheme requires a K2 noise model, got {} (K1)",
            pp.noise.kind.label()
        )));
    }
    let ok = h * (l + 1.0) < 1.0 && h * (k + 1.0) <= 0.5;
    if !ok && !force {
        return Err(Error::Precondition(format!(
            "implicit scheme needs h(L+1) < 1 and h(K+1) <= 1/2; got h(L+1) = {}, h(K+1) = {}",
            h * (l + 1.0),
            h * (k + 1.0)
        )));
    }
    Ok(())
}

fn implicit_kernel(
    pp: &PerturbedProblem,
    mesh: RandomMesh,
    thetas: &[f64],
    tag: SchemeTag,
    cfg: &ImplicitSolverConfig,
    noise_rng: &mut StreamRng,
) -> Result<(Trajectory, Vec<StepReport>)> {
    cfg.validate()?;
    check_mesh(pp, &mesh)?;
    implicit_preconditions(pp, mesh.h, cfg.force)?;
    let d = pp.base.d;
    let n = mesh.n;
    let h = mesh.h;
    let contraction = h * (pp.base.L + 1.0);

    let mut values = vec![0.0; (n + 1) * d];
    values[..d].copy_from_slice(&pp.eta_tilde());
    let mut fbuf = vec![0.0; d];
    let mut scratch = vec![0.0; d];
    let mut x = vec![0.0; d];
    let mut x_next = vec![0.0; d];
    let mut reports = Vec::with_capacity(n);

    for j in 1..=n {
        let theta = thetas[j - 1];
        let prev_start = (j - 1) * d;
        {
            let prev = &values[prev_start..prev_start + d];
            match cfg.predictor {
                Predictor::PreviousNode => x.copy_from_slice(prev),
                Predictor::ExplicitEulerPredictor => {
                    pp.eval_rhs_tilde(theta, prev, noise_rng, &mut fbuf, &mut scratch)?;
                    for k in 0..d {
                        x[k] = prev[k] + h * fbuf[k];
                    }
                }
            }
        }
        let mut iterations = 0;
        let mut first_gap = 0.0;
        let mut converged = false;
        while iterations < cfg.max_iterations {
            iterations += 1;
            pp.eval_rhs_tilde(theta, &x, noise_rng, &mut fbuf, &mut scratch)?;
            let prev = &values[prev_start..prev_start + d];
            let mut gap = 0.0;
            let mut norm = 0.0;
            for k in 0..d {
                x_next[k] = prev[k] + h * fbuf[k];
                gap += (x_next[k] - x[k]).abs();
                norm += x_next[k].abs();
            }
            check_finite(&x_next, j)?;
            std::mem::swap(&mut x, &mut x_next);
            if iterations == 1 {
                first_gap = gap;
            }
            if gap <= cfg.fp_tolerance * (1.0 + norm) {
                converged = true;
                break;
            }
        }
        if !converged {
            // Impossible under the contraction precondition; reaching this
            // point means the declared K/L metadata is inconsistent.
            return Err(Error::Nonconvergence {
                step: j,
                iterations,
            });
        }
        values[j * d..(j + 1) * d].copy_from_slice(&x);
        reports.push(StepReport {
            fixed_point_iterations: iterations,
            contraction_factor_bound: contraction,
            first_iterate_gap: first_gap,
        });
    }
    Ok((Trajectory::new(mesh, tag, d, values), reports))
}

/// Run the randomized implicit Euler scheme over the mesh, solving each step
/// with the Picard iteration. Requires `h(L+1) < 1`, `h(K+1) <= 1/2`, and a
/// K2 noise model.
pub fn implicit_rand_euler(
    pp: &PerturbedProblem,
    mesh: RandomMesh,
    cfg: &ImplicitSolverConfig,
    noise_rng: &mut StreamRng,
) -> Result<(Trajectory, Vec<StepReport>)> {
    let thetas = mesh.thetas.clone();
    implicit_kernel(
        pp,
        mesh,
        &thetas,
        SchemeTag::ImplicitRandEuler,
        cfg,
        noise_rng,
    )
}

/// Run the classical deterministic variants: identical recurrences with
/// theta_j replaced by the left (explicit) or right (implicit) node.
pub fn deterministic_variants(
    pp: &PerturbedProblem,
    mesh: RandomMesh,
    which: DetVariant,
    cfg: &ImplicitSolverConfig,
    noise_rng: &mut StreamRng,
) -> Result<Trajectory> {
    match which {
        DetVariant::ExplicitLeftNode => {
            let thetas = mesh.left_nodes().to_vec();
            explicit_kernel(pp, mesh, &thetas, SchemeTag::ExplicitDetEuler, noise_rng)
        }
        DetVariant::ImplicitRightNode => {
            let thetas = mesh.right_nodes().to_vec();
            let (traj, _) = implicit_kernel(
                pp,
                mesh,
                &thetas,
                SchemeTag::ImplicitDetEuler,
                cfg,
                noise_rng,
            )?;
            Ok(traj)
        }
    }
}
