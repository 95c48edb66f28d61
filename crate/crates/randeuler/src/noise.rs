//! Corrupting-function models: the information the schemes consume is
//! `f_tilde = f + delta_tilde` with `delta_tilde` bounded by the precision
//! parameter, plus a perturbed initial value inside the delta-ball.
//!
//! Two admissibility classes are distinguished. Class K1 only requires the
//! linear-growth bound `|delta_tilde(t,y)| <= delta (1 + |y|)`; class K2
//! additionally requires `delta`-Lipschitz continuity in the state. The
//! implicit scheme is only defined against K2 models.

use crate::error::{Error, Result};
use crate::problem::{compute_class_constants, one_norm, one_norm_diff, ProblemSpec};
use crate::rng::StreamRng;

/// Admissibility class of a corrupting function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseClass {
    K1,
    K2,
}

/// The built-in corrupting-function families.
///
/// The class definitions admit arbitrary Borel functions; these kinds span
/// the regimes the experiments need: exact information, the constant
/// adversarial direction of the lower-bound construction, state-proportional
/// Lipschitz noise, oscillatory growth-saturating noise, and per-evaluation
/// sign flipping.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseKind {
    /// delta_tilde = 0 (admissible at every precision).
    Zero,
    /// delta * sign * e1 at every (t, y); sign in {-1, +1}.
    ConstantDirection { sign: f64 },
    /// delta * scale * y with |scale| <= 1.
    LinearInState { scale: f64 },
    /// Coordinate i: delta * sin(omega t + state_freq |y|) * u_i * (1 + |y|)
    /// with the uniform unit direction u_i = 1/d. For state_freq != 0 the
    /// state-Lipschitz constant exceeds delta, so the model is K1-only.
    StateScaledSine { omega: f64, state_freq: f64 },
    /// delta * sigma * e1 with sigma in {-1, +1} drawn fresh per evaluation
    /// from the path's noise stream.
    AdversarialSign,
}

impl NoiseKind {
    pub fn label(&self) -> &'static str {
        match self {
            NoiseKind::Zero => "zero",
            NoiseKind::ConstantDirection { .. } => "constant-direction",
            NoiseKind::LinearInState { .. } => "linear-in-state",
            NoiseKind::StateScaledSine { .. } => "state-scaled-sine",
            NoiseKind::AdversarialSign => "adversarial-sign",
        }
    }
}

/// A corrupting function with its precision, class tag, and the initial-value
/// perturbation it applies.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub delta: f64,
    pub class_tag: NoiseClass,
    pub kind: NoiseKind,
    pub eta_perturbation: Vec<f64>,
}

impl NoiseModel {
    fn validate(delta: f64, d: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::Domain(format!(
                "precision delta must be in [0,1], got {delta}"
            )));
        }
        if d == 0 {
            return Err(Error::Dimension("noise dimension must be >= 1".into()));
        }
        Ok(())
    }

    /// Exact information: delta_tilde = 0. A nonzero precision records the
    /// admissibility radius without corrupting anything.
    pub fn zero(delta: f64, d: usize) -> Result<Self> {
        Self::validate(delta, d)?;
        Ok(Self {
            delta,
            class_tag: NoiseClass::K2,
            kind: NoiseKind::Zero,
            eta_perturbation: vec![0.0; d],
        })
    }

    pub fn constant_direction(delta: f64, d: usize, sign: f64) -> Result<Self> {
        Self::validate(delta, d)?;
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::Domain(format!("sign must be +1 or -1, got {sign}")));
        }
        Ok(Self {
            delta,
            // Constant in the state, hence Lipschitz with constant zero.
            class_tag: NoiseClass::K2,
            kind: NoiseKind::ConstantDirection { sign },
            eta_perturbation: vec![0.0; d],
        })
    }

    pub fn linear_in_state(delta: f64, d: usize, scale: f64) -> Result<Self> {
        Self::validate(delta, d)?;
        if scale.abs() > 1.0 {
            return Err(Error::Domain(format!("|scale| must be <= 1, got {scale}")));
        }
        Ok(Self {
            delta,
            class_tag: NoiseClass::K2,
            kind: NoiseKind::LinearInState { scale },
            eta_perturbation: vec![0.0; d],
        })
    }

    pub fn state_scaled_sine(delta: f64, d: usize, omega: f64, state_freq: f64) -> Result<Self> {
        Self::validate(delta, d)?;
        let class_tag = if state_freq == 0.0 {
            NoiseClass::K2
        } else {
            NoiseClass::K1
        };
        Ok(Self {
            delta,
            class_tag,
            kind: NoiseKind::StateScaledSine { omega, state_freq },
            eta_perturbation: vec![0.0; d],
        })
    }

    pub fn adversarial_sign(delta: f64, d: usize) -> Result<Self> {
        Self::validate(delta, d)?;
        Ok(Self {
            delta,
            class_tag: NoiseClass::K1,
            kind: NoiseKind::AdversarialSign,
            eta_perturbation: vec![0.0; d],
        })
    }

    /// Force a different class tag (used by tests probing misdeclared models).
    pub fn with_class_tag(mut self, class_tag: NoiseClass) -> Self {
        self.class_tag = class_tag;
        self
    }

    /// Replace the initial-value perturbation; its one-norm must stay within
    /// the precision.
    pub fn with_eta_perturbation(mut self, shift: Vec<f64>) -> Result<Self> {
        if shift.len() != self.eta_perturbation.len() {
            return Err(Error::Dimension(
                "eta perturbation has wrong dimension".into(),
            ));
        }
        if one_norm(&shift)? > self.delta * (1.0 + 1e-12) {
            return Err(Error::Domain(format!(
                "|eta perturbation| = {} exceeds delta = {}",
                one_norm(&shift)?,
                self.delta
            )));
        }
        self.eta_perturbation = shift;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.eta_perturbation.len()
    }

    /// Build a config-file noise model by kind name, with optional
    /// parenthesized parameters: `zero`, `constant-direction(sign)`,
    /// `linear-in-state(scale)`, `state-scaled-sine(omega,state_freq)`,
    /// `adversarial-sign`. Omitted parameters take the defaults below.
    pub fn from_name(name: &str, delta: f64, d: usize) -> Result<Self> {
        let name = name.trim();
        let (head, args) = match name.split_once('(') {
            Some((head, rest)) => {
                let inner = rest.strip_suffix(')').ok_or_else(|| {
                    Error::Config(format!("unbalanced parentheses in noise kind `{name}`"))
                })?;
                let vals: Vec<f64> = inner
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Config(format!("bad noise parameters `{name}`: {e}")))?;
                (head, vals)
            }
            None => (name, Vec::new()),
        };
        let arg = |i: usize, default: f64| args.get(i).copied().unwrap_or(default);
        let expect_at_most = |n: usize| {
            if args.len() > n {
                Err(Error::Config(format!(
                    "noise kind `{head}` takes at most {n} parameter(s), got {}",
                    args.len()
                )))
            } else {
                Ok(())
            }
        };
        match head {
            "zero" => {
                expect_at_most(0)?;
                Self::zero(delta, d)
            }
            "constant-direction" => {
                expect_at_most(1)?;
                Self::constant_direction(delta, d, arg(0, 1.0))
            }
            "linear-in-state" => {
                expect_at_most(1)?;
                Self::linear_in_state(delta, d, arg(0, 1.0))
            }
            "state-scaled-sine" => {
                expect_at_most(2)?;
                Self::state_scaled_sine(delta, d, arg(0, 5.0), arg(1, 3.0))
            }
            "adversarial-sign" => {
                expect_at_most(0)?;
                Self::adversarial_sign(delta, d)
            }
            other => Err(Error::Config(format!("unknown noise kind `{other}`"))),
        }
    }

    /// Evaluate delta_tilde(t, y) into `out`. Stochastic kinds consume the
    /// supplied stream; deterministic kinds ignore it. The class bound is
    /// re-checked on every evaluation; a violation is a programming error in
    /// the model, not bad user input.
    pub fn corrupt(&self, t: f64, y: &[f64], rng: &mut StreamRng, out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(y.len(), out.len());
        if self.delta == 0.0 {
            out.fill(0.0);
            return Ok(());
        }
        match &self.kind {
            NoiseKind::Zero => out.fill(0.0),
            NoiseKind::ConstantDirection { sign } => {
                out.fill(0.0);
                out[0] = self.delta * sign;
            }
            NoiseKind::LinearInState { scale } => {
                for (o, yk) in out.iter_mut().zip(y) {
                    *o = self.delta * scale * yk;
                }
            }
            NoiseKind::StateScaledSine { omega, state_freq } => {
                let ny: f64 = y.iter().map(|v| v.abs()).sum();
                let amp =
                    self.delta * (omega * t + state_freq * ny).sin() * (1.0 + ny) / y.len() as f64;
                out.fill(amp);
            }
            NoiseKind::AdversarialSign => {
                let sigma = if rng.next_open01() < 0.5 { -1.0 } else { 1.0 };
                out.fill(0.0);
                out[0] = self.delta * sigma;
            }
        }
        let bound = self.delta * (1.0 + y.iter().map(|v| v.abs()).sum::<f64>());
        let norm: f64 = out.iter().map(|v| v.abs()).sum();
        if norm > bound * (1.0 + 1e-12) {
            return Err(Error::NoiseContract(format!(
                "{} produced |delta_tilde| = {norm} > delta (1 + |y|) = {bound}",
                self.kind.label()
            )));
        }
        Ok(())
    }
}

/// A problem bundled with the noise model corrupting its information.
#[derive(Debug, Clone)]
pub struct PerturbedProblem {
    pub base: ProblemSpec,
    pub noise: NoiseModel,
}

impl PerturbedProblem {
    pub fn new(base: ProblemSpec, noise: NoiseModel) -> Result<Self> {
        if noise.dim() != base.d {
            return Err(Error::Dimension(format!(
                "noise dimension {} does not match problem dimension {}",
                noise.dim(),
                base.d
            )));
        }
        Ok(Self { base, noise })
    }

    /// The perturbed initial value eta + eta_perturbation.
    pub fn eta_tilde(&self) -> Vec<f64> {
        self.base
            .eta
            .iter()
            .zip(&self.noise.eta_perturbation)
            .map(|(e, s)| e + s)
            .collect()
    }

    /// f_tilde(t, y) = f(t, y) + delta_tilde(t, y), written into `out`;
    /// `scratch` must have length d.
    pub fn eval_rhs_tilde(
        &self,
        t: f64,
        y: &[f64],
        rng: &mut StreamRng,
        out: &mut [f64],
        scratch: &mut [f64],
    ) -> Result<()> {
        self.base.eval_rhs(t, y, out);
        self.noise.corrupt(t, y, rng, scratch)?;
        for (o, s) in out.iter_mut().zip(scratch.iter()) {
            *o += s;
        }
        Ok(())
    }
}

/// Result of sampling a noise model against its declared class.
#[derive(Debug, Clone)]
pub struct NoiseClassReport {
    pub samples: usize,
    /// max |delta_tilde(t,y)| / (delta (1 + |y|)); must be <= 1.
    pub max_growth_ratio: f64,
    /// max |delta_tilde(t,x) - delta_tilde(t,y)| / (delta |x - y|); only
    /// checked for K2 models.
    pub max_lipschitz_ratio: Option<f64>,
    pub passes: bool,
}

/// Sample (t, y) from [a,b] x B(eta, R0) (and nearby state pairs for K2
/// models) and report the worst observed class ratios. Report-only; callers
/// assert on `passes`.
pub fn verify_class_membership(
    m: &NoiseModel,
    p: &ProblemSpec,
    samples: usize,
    seed: u64,
) -> Result<NoiseClassReport> {
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    if m.dim() != p.d {
        return Err(Error::Dimension("noise/problem dimension mismatch".into()));
    }
    let r0 = compute_class_constants(p).r0;
    let mut rng = StreamRng::from_spec(&crate::rng::StreamSpec::new(
        seed,
        0,
        crate::rng::PurposeTag::NoiseDraws,
    ));
    let d = p.d;
    let mut x = vec![0.0; d];
    let mut y = vec![0.0; d];
    let mut dx = vec![0.0; d];
    let mut dy = vec![0.0; d];

    let sample_point = |rng: &mut StreamRng, out: &mut [f64]| {
        // Coordinates spread so the one-norm offset stays within R0.
        for (k, o) in out.iter_mut().enumerate() {
            *o = p.eta[k] + (2.0 * rng.next_open01() - 1.0) * r0 / d as f64;
        }
    };

    let mut max_growth: f64 = 0.0;
    let mut max_lip: f64 = 0.0;
    let check_k2 = m.class_tag == NoiseClass::K2;

    for i in 0..samples {
        let t = p.a + rng.next_open01() * (p.b - p.a);
        sample_point(&mut rng, &mut x);
        m.corrupt(t, &x, &mut rng, &mut dx)?;
        let denom = m.delta * (1.0 + one_norm(&x)?);
        let norm = one_norm(&dx)?;
        let ratio = if denom > 0.0 {
            norm / denom
        } else if norm == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        max_growth = max_growth.max(ratio);

        if check_k2 {
            // Alternate far pairs and close perturbation pairs; the latter
            // expose the local Lipschitz constant.
            if i % 2 == 0 {
                sample_point(&mut rng, &mut y);
            } else {
                y.copy_from_slice(&x);
                let k = (rng.next_open01() * d as f64) as usize % d;
                y[k] += 1e-6 * (1.0 + r0) * (2.0 * rng.next_open01() - 1.0);
            }
            m.corrupt(t, &y, &mut rng, &mut dy)?;
            let gap = one_norm_diff(&x, &y);
            if gap > 0.0 {
                let lip_denom = m.delta * gap;
                let diff = one_norm_diff(&dx, &dy);
                let ratio = if lip_denom > 0.0 {
                    diff / lip_denom
                } else if diff == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                max_lip = max_lip.max(ratio);
            }
        }
    }

    let tol = 1.0 + 1e-12;
    let passes = max_growth <= tol && (!check_k2 || max_lip <= tol);
    Ok(NoiseClassReport {
        samples,
        max_growth_ratio: max_growth,
        max_lipschitz_ratio: check_k2.then_some(max_lip),
        passes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{PurposeTag, StreamSpec};
    use std::sync::Arc;

    fn test_problem(d: usize) -> ProblemSpec {
        ProblemSpec::new(
            "noise-test",
            0.0,
            1.0,
            vec![0.0; d],
            Arc::new(|_t, _y, out: &mut [f64]| out.fill(0.0)),
            1.0,
            1.0,
            1.0,
            f64::INFINITY,
            None,
        )
        .unwrap()
    }

    fn rng() -> StreamRng {
        StreamRng::from_spec(&StreamSpec::new(7, 0, PurposeTag::NoiseDraws))
    }

    #[test]
    fn zero_noise_is_zero_everywhere() {
        let m = NoiseModel::zero(0.3, 3).unwrap();
        let mut out = vec![1.0; 3];
        m.corrupt(0.5, &[1.0, -2.0, 0.5], &mut rng(), &mut out)
            .unwrap();
        assert_eq!(out, vec![0.0; 3]);
    }

    #[test]
    fn constant_direction_matches_lower_bound_construction() {
        let m = NoiseModel::constant_direction(0.1, 2, 1.0).unwrap();
        let mut out = vec![0.0; 2];
        for (t, y) in [(0.0, [0.0, 0.0]), (0.5, [3.0, -1.0]), (1.0, [-0.2, 0.7])] {
            m.corrupt(t, &y, &mut rng(), &mut out).unwrap();
            assert_eq!(out, vec![0.1, 0.0]);
        }
    }

    #[test]
    fn linear_in_state_respects_class_bound() {
        let m = NoiseModel::linear_in_state(0.05, 2, 1.0).unwrap();
        let mut out = vec![0.0; 2];
        m.corrupt(0.3, &[1.0, 1.0], &mut rng(), &mut out).unwrap();
        assert!(one_norm(&out).unwrap() <= 0.05 * 3.0 + 1e-15);
        assert_eq!(out, vec![0.05, 0.05]);
    }

    #[test]
    fn delta_zero_forces_exact_information() {
        for m in [
            NoiseModel::linear_in_state(0.0, 2, 1.0).unwrap(),
            NoiseModel::adversarial_sign(0.0, 2).unwrap(),
            NoiseModel::state_scaled_sine(0.0, 2, 3.0, 2.0).unwrap(),
        ] {
            let mut out = vec![1.0; 2];
            m.corrupt(0.2, &[4.0, -3.0], &mut rng(), &mut out).unwrap();
            assert_eq!(out, vec![0.0; 2]);
            assert_eq!(m.eta_perturbation, vec![0.0; 2]);
        }
    }

    #[test]
    fn all_builtin_kinds_pass_their_declared_class() {
        let p = test_problem(2);
        for delta in [0.0, 0.05, 0.3, 1.0] {
            let models = [
                NoiseModel::zero(delta, 2).unwrap(),
                NoiseModel::constant_direction(delta, 2, -1.0).unwrap(),
                NoiseModel::linear_in_state(delta, 2, 0.8).unwrap(),
                NoiseModel::state_scaled_sine(delta, 2, 4.0, 3.0).unwrap(),
                NoiseModel::adversarial_sign(delta, 2).unwrap(),
            ];
            for m in models {
                let report = verify_class_membership(&m, &p, 10_000, 31).unwrap();
                assert!(
                    report.passes,
                    "{} delta={delta}: growth {} lip {:?}",
                    m.kind.label(),
                    report.max_growth_ratio,
                    report.max_lipschitz_ratio
                );
            }
        }
    }

    #[test]
    fn constant_direction_ratios() {
        let p = test_problem(2);
        let m = NoiseModel::constant_direction(0.1, 2, 1.0).unwrap();
        let report = verify_class_membership(&m, &p, 5000, 5).unwrap();
        assert!(report.max_growth_ratio <= 1.0 + 1e-12);
        // State-constant noise has Lipschitz ratio zero.
        assert_eq!(report.max_lipschitz_ratio, Some(0.0));
    }

    #[test]
    fn misdeclared_sine_fails_k2_check() {
        let p = test_problem(1);
        let m = NoiseModel::state_scaled_sine(0.1, 1, 2.0, 6.0)
            .unwrap()
            .with_class_tag(NoiseClass::K2);
        let report = verify_class_membership(&m, &p, 10_000, 11).unwrap();
        assert!(!report.passes, "lip ratio {:?}", report.max_lipschitz_ratio);
        assert!(report.max_lipschitz_ratio.unwrap() > 1.0);
    }

    #[test]
    fn class_nesting_in_delta() {
        // A model valid at delta stays valid at any larger precision.
        let p = test_problem(2);
        let m = NoiseModel::linear_in_state(0.05, 2, 1.0).unwrap();
        let mut out = vec![0.0; 2];
        let mut sampler = rng();
        for _ in 0..1000 {
            let t = sampler.next_open01();
            let y = [
                4.0 * sampler.next_open01() - 2.0,
                4.0 * sampler.next_open01() - 2.0,
            ];
            m.corrupt(t, &y, &mut sampler, &mut out).unwrap();
            for dprime in [0.05, 0.1, 0.9] {
                assert!(one_norm(&out).unwrap() <= dprime * (1.0 + one_norm(&y).unwrap()) + 1e-15);
            }
        }
        let _ = p;
    }

    #[test]
    fn noise_names_resolve_with_parameters() {
        let m = NoiseModel::from_name("constant-direction(-1)", 0.1, 2).unwrap();
        assert_eq!(m.kind, NoiseKind::ConstantDirection { sign: -1.0 });
        let m = NoiseModel::from_name("linear-in-state(0.5)", 0.1, 2).unwrap();
        assert_eq!(m.kind, NoiseKind::LinearInState { scale: 0.5 });
        let m = NoiseModel::from_name("state-scaled-sine(2,0)", 0.1, 2).unwrap();
        assert_eq!(m.class_tag, NoiseClass::K2);
        let m = NoiseModel::from_name("state-scaled-sine", 0.1, 2).unwrap();
        assert_eq!(m.class_tag, NoiseClass::K1);
        assert!(NoiseModel::from_name("zero(1)", 0.1, 2).is_err());
        assert!(NoiseModel::from_name("linear-in-state(2)", 0.1, 2).is_err());
        assert!(NoiseModel::from_name("mystery", 0.1, 2).is_err());
    }

    #[test]
    fn eta_perturbation_is_validated() {
        let m = NoiseModel::zero(0.1, 2).unwrap();
        assert!(m.clone().with_eta_perturbation(vec![0.05, 0.04]).is_ok());
        assert!(m.with_eta_perturbation(vec![0.08, 0.08]).is_err());
    }

    #[test]
    fn perturbed_problem_combines_field_and_noise() {
        let p = test_problem(2);
        let m = NoiseModel::constant_direction(0.2, 2, -1.0).unwrap();
        let pp = PerturbedProblem::new(p, m).unwrap();
        let mut out = vec![0.0; 2];
        let mut scratch = vec![0.0; 2];
        pp.eval_rhs_tilde(0.5, &[1.0, 1.0], &mut rng(), &mut out, &mut scratch)
            .unwrap();
        assert_eq!(out, vec![-0.2, 0.0]);
        assert_eq!(pp.eta_tilde(), vec![0.0, 0.0]);
    }
}
