//! Core domain types: initial-value problems, random meshes, trajectories
//! with piecewise-linear dense output, and the a-priori class constants.
//!
//! Every vector norm in this crate is the one-norm (sum of coordinate
//! absolute values); balls are one-norm balls.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Right-hand side f(t, y), written into `out` (no per-call allocation).
pub type RhsFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;

/// Exact solution t -> z(t), written into `out`.
pub type SolutionFn = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;

/// One-norm of a vector: sum of |x_k|.
pub fn one_norm(x: &[f64]) -> Result<f64> {
    if x.is_empty() {
        return Err(Error::Dimension("one_norm of an empty vector".into()));
    }
    Ok(x.iter().map(|v| v.abs()).sum())
}

/// One-norm of the difference x - y.
pub fn one_norm_diff(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum()
}

/// An initial-value problem z' = f(t, z), z(a) = eta, on [a, b], together
/// with its declared class metadata.
///
/// The growth constant `K`, the time-Hoelder/state-Lipschitz constant `L`,
/// the Hoelder exponent `rho` and the Lipschitz radius are user-asserted;
/// the library only spot-checks them on sampled points (see
/// `analysis::check_assumptions`), it never verifies them symbolically.
#[derive(Clone)]
#[allow(non_snake_case)] // K and L are the standard class-constant symbols
pub struct ProblemSpec {
    pub a: f64,
    pub b: f64,
    pub d: usize,
    pub eta: Vec<f64>,
    pub rhs: RhsFn,
    /// Growth and initial-value constant: |eta| <= K and |f| <= K(1+|y|).
    pub K: f64,
    /// Time-Hoelder and state-Lipschitz constant.
    pub L: f64,
    /// Hoelder exponent of f in time, in (0, 1].
    pub rho: f64,
    /// Radius of the ball around eta on which the Lipschitz conditions are
    /// asserted; `f64::INFINITY` means globally Lipschitz.
    pub lipschitz_radius: f64,
    pub analytic_solution: Option<SolutionFn>,
    /// Short name used in CSV output and config files.
    pub name: String,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("a", &self.a)
            .field("b", &self.b)
            .field("d", &self.d)
            .field("eta", &self.eta)
            .field("K", &self.K)
            .field("L", &self.L)
            .field("rho", &self.rho)
            .field("lipschitz_radius", &self.lipschitz_radius)
            .field("analytic", &self.analytic_solution.is_some())
            .finish()
    }
}

#[allow(clippy::too_many_arguments)]
impl ProblemSpec {
    pub fn new(
        name: &str,
        a: f64,
        b: f64,
        eta: Vec<f64>,
        rhs: RhsFn,
        big_k: f64,
        big_l: f64,
        rho: f64,
        lipschitz_radius: f64,
        analytic_solution: Option<SolutionFn>,
    ) -> Result<Self> {
        if !(a < b) {
            return Err(Error::Domain(format!("need a < b, got [{a}, {b}]")));
        }
        if eta.is_empty() {
            return Err(Error::Dimension("eta must have dimension >= 1".into()));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::Domain(format!("rho must be in (0,1], got {rho}")));
        }
        if !(big_k > 0.0) || !(big_l > 0.0) {
            return Err(Error::Domain(format!(
                "K, L must be positive, got K={big_k}, L={big_l}"
            )));
        }
        if one_norm(&eta)? > big_k {
            return Err(Error::Domain(format!(
                "initial value violates |eta| <= K: |eta| = {}, K = {}",
                one_norm(&eta)?,
                big_k
            )));
        }
        let d = eta.len();
        let spec = Self {
            a,
            b,
            d,
            eta,
            rhs,
            K: big_k,
            L: big_l,
            rho,
            lipschitz_radius,
            analytic_solution,
            name: name.to_string(),
        };
        if let Some(sol) = &spec.analytic_solution {
            let mut z0 = vec![0.0; d];
            sol(a, &mut z0);
            if one_norm_diff(&z0, &spec.eta) > 1e-12 {
                return Err(Error::Domain(
                    "analytic solution does not match eta at t = a".into(),
                ));
            }
        }
        Ok(spec)
    }

    /// Evaluate the exact right-hand side into `out`.
    #[inline]
    pub fn eval_rhs(&self, t: f64, y: &[f64], out: &mut [f64]) {
        (self.rhs)(t, y, out);
    }

    /// Evaluate the analytic solution, if present.
    pub fn eval_solution(&self, t: f64, out: &mut [f64]) -> Option<()> {
        self.analytic_solution.as_ref().map(|sol| sol(t, out))
    }
}

/// Which recurrence produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SchemeTag {
    ExplicitRandEuler,
    ImplicitRandEuler,
    ExplicitDetEuler,
    ImplicitDetEuler,
}

impl SchemeTag {
    pub fn is_implicit(&self) -> bool {
        matches!(
            self,
            SchemeTag::ImplicitRandEuler | SchemeTag::ImplicitDetEuler
        )
    }

    pub fn label(&self) -> &'static str {
        match self {
            SchemeTag::ExplicitRandEuler => "explicit",
            SchemeTag::ImplicitRandEuler => "implicit",
            SchemeTag::ExplicitDetEuler => "explicit-det",
            SchemeTag::ImplicitDetEuler => "implicit-det",
        }
    }
}

/// Uniform grid t_j = a + j h together with the per-step draws tau_j and
/// the random evaluation points theta_j = t_{j-1} + tau_j h.
#[derive(Debug, Clone)]
pub struct RandomMesh {
    pub n: usize,
    pub h: f64,
    pub nodes: Vec<f64>,
    pub taus: Vec<f64>,
    pub thetas: Vec<f64>,
}

impl RandomMesh {
    /// Build a mesh on [a, b] from n per-step draws in (0,1).
    pub fn from_draws(a: f64, b: f64, n: usize, draws: &[f64]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("mesh needs n >= 1 steps".into()));
        }
        if !(a < b) {
            return Err(Error::Domain(format!("need a < b, got [{a}, {b}]")));
        }
        if draws.len() != n {
            return Err(Error::Dimension(format!(
                "expected {n} draws, got {}",
                draws.len()
            )));
        }
        if let Some(bad) = draws.iter().find(|u| !(**u > 0.0 && **u < 1.0)) {
            return Err(Error::Domain(format!(
                "draw {bad} outside the open interval (0,1)"
            )));
        }
        let h = (b - a) / n as f64;
        let nodes: Vec<f64> = (0..=n).map(|j| a + j as f64 * h).collect();
        let thetas: Vec<f64> = draws
            .iter()
            .enumerate()
            .map(|(j, u)| nodes[j] + u * h)
            .collect();
        Ok(Self {
            n,
            h,
            nodes,
            taus: draws.to_vec(),
            thetas,
        })
    }

    /// The deterministic variant meshes of Remark-style schemes: evaluation
    /// at the left node (classical explicit Euler) or right node (classical
    /// implicit Euler).
    pub fn left_nodes(&self) -> &[f64] {
        &self.nodes[..self.n]
    }

    pub fn right_nodes(&self) -> &[f64] {
        &self.nodes[1..]
    }
}

/// Mesh for a problem's interval from explicit draws.
pub fn make_mesh(p: &ProblemSpec, n: usize, draws: &[f64]) -> Result<RandomMesh> {
    RandomMesh::from_draws(p.a, p.b, n, draws)
}

/// Node values W^0..W^n of one scheme run, with piecewise-linear dense
/// output between nodes. Node storage is flat with stride d.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub mesh: RandomMesh,
    pub scheme_tag: SchemeTag,
    d: usize,
    values: Vec<f64>,
}

impl Trajectory {
    pub fn new(mesh: RandomMesh, scheme_tag: SchemeTag, d: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), (mesh.n + 1) * d);
        Self {
            mesh,
            scheme_tag,
            d,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Node value W^j.
    #[inline]
    pub fn node(&self, j: usize) -> &[f64] {
        &self.values[j * self.d..(j + 1) * self.d]
    }

    pub fn n(&self) -> usize {
        self.mesh.n
    }

    /// Piecewise-linear dense output at time t in [a, b], written into
    /// `out`. At a node the node value is returned exactly; interior node
    /// hits resolve to the left subinterval (both give the same value).
    pub fn eval_dense_into(&self, t: f64, out: &mut [f64]) -> Result<()> {
        let nodes = &self.mesh.nodes;
        let (a, b) = (nodes[0], nodes[self.mesh.n]);
        if !(t >= a && t <= b) {
            return Err(Error::Domain(format!("t = {t} outside [{a}, {b}]")));
        }
        // First node index with nodes[j] >= t; exact hits short-circuit.
        let j = nodes.partition_point(|x| *x < t).max(1).min(self.mesh.n);
        if nodes[j] == t {
            out.copy_from_slice(self.node(j));
            return Ok(());
        }
        if nodes[j - 1] == t {
            out.copy_from_slice(self.node(j - 1));
            return Ok(());
        }
        let w0 = self.node(j - 1);
        let w1 = self.node(j);
        let s = (t - nodes[j - 1]) / self.mesh.h;
        for k in 0..self.d {
            out[k] = w0[k] + (w1[k] - w0[k]) * s;
        }
        Ok(())
    }

    pub fn eval_dense(&self, t: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.d];
        self.eval_dense_into(t, &mut out)?;
        Ok(out)
    }
}

/// The computable constants the a-priori analysis attaches to a problem
/// class (a, b, K, L): containment radii and perturbation constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassConstants {
    /// Containment radius of the explicit iterates around eta.
    pub r1: f64,
    /// Containment radius of the exact solution around eta.
    pub r2: f64,
    /// max(r1, r2); the class radius the error theorems require.
    pub r0: f64,
    /// Pathwise bound constant: max_j |V^j - Vbar^j| <= explicit_noise_c * delta.
    pub explicit_noise_c: f64,
    /// A-priori bound on |Ubar^j| for the implicit scheme.
    pub implicit_iterate_bound: f64,
    /// Pathwise bound constant: max_j |U^j - Ubar^j| <= implicit_noise_c * delta.
    pub implicit_noise_c: f64,
}

/// Evaluate the class constants from (a, b, K, L).
pub fn compute_class_constants(p: &ProblemSpec) -> ClassConstants {
    let span = p.b - p.a;
    let (k, l) = (p.K, p.L);
    let r1 = (k + 2.0) * ((k + 1.0) * span).exp() + k - 1.0;
    let r2 = k * (1.0 + span) * (k * span).exp() + k;
    let r0 = r1.max(r2);
    let explicit_noise_c = (l * span).exp() * (1.0 + (1.0 + r1 - k) / l);
    let implicit_iterate_bound = (k + 2.0) * (2.0 * (k + 1.0) * span).exp() - 1.0;
    let e2l = (2.0 * l * span).exp();
    let implicit_noise_c = e2l + ((1.0 + implicit_iterate_bound) / l) * (e2l - 1.0);
    ClassConstants {
        r1,
        r2,
        r0,
        explicit_noise_c,
        implicit_iterate_bound,
        implicit_noise_c,
    }
}
