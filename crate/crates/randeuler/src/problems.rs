//! Fixture library: initial-value problems with known class parameters,
//! covering the closed-form linear problem, time-regularity probes with an
//! exact Hoelder exponent, a state-coupled problem without closed form, the
//! adversarial pair of the lower-bound construction, and the non-autonomous
//! stability test problem.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::problem::{ProblemSpec, RhsFn, SolutionFn};

/// The scalar linear problem f(t, y) = A y with A = min{K, L} and eta = A.
/// Exact solution A exp(A (t - a)); both schemes have closed-form iterates
/// on it, and its endpoint error decays exactly like 1/n.
pub fn linear_autonomous(big_k: f64, big_l: f64, a: f64, b: f64) -> Result<ProblemSpec> {
    if !(big_k > 0.0 && big_l > 0.0) {
        return Err(Error::Domain("K and L must be positive".into()));
    }
    let amp = big_k.min(big_l);
    let rhs: RhsFn = Arc::new(move |_t, y, out: &mut [f64]| out[0] = amp * y[0]);
    let sol: SolutionFn =
        Arc::new(move |t: f64, out: &mut [f64]| out[0] = amp * (amp * (t - a)).exp());
    ProblemSpec::new(
        "linear",
        a,
        b,
        vec![amp],
        rhs,
        big_k,
        big_l,
        1.0,
        f64::INFINITY,
        Some(sol),
    )
}

/// Number of dyadic frequency levels in the Hoelder probe for rho < 1;
/// level 16 puts oscillation below step sizes of (b - a) / 30000, which
/// covers every desk-scale mesh the harness sweeps. At rho = 1 the Lipschitz
/// bound caps oscillation at every scale by the derivative bound, so
/// multi-scale roughness degenerates and a single maximal-slope oscillation
/// is the sharp probe.
const HOLDER_LEVELS: usize = 17;

fn holder_levels(rho: f64) -> usize {
    if rho < 1.0 {
        HOLDER_LEVELS
    } else {
        1
    }
}

/// A scalar probe whose right-hand side has exactly Hoelder-rho time
/// regularity, uniformly over the interval, plus a linear state coupling:
///
/// f(t, y) = A sum_k 2^{-k rho} cos(2^k w (t - a) + phi_k) + (L/2) y,
/// w = 3 / (b - a).
///
/// Every step of every mesh sees time oscillation of size (w h)^rho, so the
/// randomized Riemann-sum part of the error genuinely decays at the rate
/// n^{-(rho + 1/2)}; a field that is rough at one point only (an isolated
/// kink, say) superconverges, because a single step sees the worst case.
/// The state coupling supplies the O(h) Euler drift that saturates the rate
/// at one for rho > 1/2. The amplitude A is calibrated so the dyadic-block
/// bound on the time-Hoelder quotient equals the declared L; the exact
/// solution is the integrating-factor form, termwise in closed form.
pub fn holder_time_probe(rho: f64, big_l: f64, a: f64, b: f64) -> Result<ProblemSpec> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Domain(format!("rho must be in (0,1], got {rho}")));
    }
    if !(big_l > 0.0) {
        return Err(Error::Domain("L must be positive".into()));
    }
    let w = 3.0 / (b - a);
    let coupling = 0.5 * big_l;
    let levels = holder_levels(rho);
    // Hoelder constant of the series: splitting |t-s| at the dyadic scale
    // gives |g(t)-g(s)| <= A w^rho (1/(2^{1-rho}-1) + 2/(1-2^{-rho})) |t-s|^rho
    // for rho < 1; the single rho = 1 oscillation is Lipschitz with
    // constant A w.
    let holder_scale = if rho < 1.0 {
        w.powf(rho) * (1.0 / ((1.0 - rho).exp2() - 1.0) + 2.0 / (1.0 - (-rho).exp2()))
    } else {
        w
    };
    let amp = big_l / holder_scale;
    // Golden-angle phases keep the level maxima from aligning.
    let phases: Vec<f64> = (0..levels).map(|k| k as f64 * 2.399963229728653).collect();
    let weights: Vec<f64> = (0..levels)
        .map(|k| amp * (-(k as f64) * rho).exp2())
        .collect();
    let freqs: Vec<f64> = (0..levels).map(|k| (k as f64).exp2() * w).collect();

    let big_k = weights.iter().sum::<f64>().max(coupling);
    let (ws, fs, ps) = (weights.clone(), freqs.clone(), phases.clone());
    let rhs: RhsFn = Arc::new(move |t: f64, y, out: &mut [f64]| {
        let mut acc = coupling * y[0];
        for ((w_k, f_k), p_k) in ws.iter().zip(&fs).zip(&ps) {
            acc += w_k * (f_k * (t - a) + p_k).cos();
        }
        out[0] = acc;
    });
    // z(t) = e^{s v} sum_k w_k (I_k(v) - I_k(0)) with s the coupling,
    // v = t - a, and I_k the closed-form integral of e^{-s v} cos(f_k v + p_k).
    let sol: SolutionFn = Arc::new(move |t: f64, out: &mut [f64]| {
        let v = t - a;
        let ikernel = |freq: f64, phase: f64, v: f64| -> f64 {
            let angle = freq * v + phase;
            (-coupling * v).exp() * (-coupling * angle.cos() + freq * angle.sin())
                / (coupling * coupling + freq * freq)
        };
        let mut acc = 0.0;
        for ((w_k, f_k), p_k) in weights.iter().zip(&freqs).zip(&phases) {
            acc += w_k * (ikernel(*f_k, *p_k, v) - ikernel(*f_k, *p_k, 0.0));
        }
        out[0] = (coupling * v).exp() * acc;
    });
    let mut p = ProblemSpec::new(
        "holder",
        a,
        b,
        vec![0.0],
        rhs,
        big_k,
        big_l,
        rho,
        f64::INFINITY,
        Some(sol),
    )?;
    p.name = format!("holder({rho})");
    Ok(p)
}

/// A d-dimensional state-coupled bounded field,
/// f_i(t, y) = K/(2d) (1 + sin y_i), globally Lipschitz with constant K/2.
/// No closed form; reference solutions come from the analysis module.
pub fn lipschitz_state_probe(
    big_k: f64,
    big_l: f64,
    d: usize,
    a: f64,
    b: f64,
) -> Result<ProblemSpec> {
    if d == 0 {
        return Err(Error::Dimension("state dimension must be >= 1".into()));
    }
    if big_k / 2.0 > big_l {
        return Err(Error::Domain(format!(
            "field Lipschitz constant K/2 = {} exceeds declared L = {}",
            big_k / 2.0,
            big_l
        )));
    }
    let amp = big_k / (2.0 * d as f64);
    let rhs: RhsFn = Arc::new(move |_t, y, out: &mut [f64]| {
        for (o, yi) in out.iter_mut().zip(y) {
            *o = amp * (1.0 + yi.sin());
        }
    });
    let mut p = ProblemSpec::new(
        "state",
        a,
        b,
        vec![0.0; d],
        rhs,
        big_k,
        big_l,
        1.0,
        f64::INFINITY,
        None,
    )?;
    p.name = format!("state({d})");
    Ok(p)
}

/// The adversarial pair of the lower-bound construction: two problems with
/// constant fields +delta e1 and -delta e1 and eta = 0. Their solutions are
/// +-delta (t - a), which stay 2 delta (b - a) apart in the sup norm, while
/// the zero function is admissible information for both at precision delta:
/// any scheme fed it must err at least (b - a) delta on one of the two.
pub fn adversarial_pair(
    delta: f64,
    a: f64,
    b: f64,
) -> Result<(ProblemSpec, ProblemSpec, NoiseModel)> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::Domain(format!(
            "delta must be in (0, min(K,1)] = (0, 1], got {delta}"
        )));
    }
    let make = |sign: f64| -> Result<ProblemSpec> {
        let rhs: RhsFn = Arc::new(move |_t, _y, out: &mut [f64]| out[0] = sign * delta);
        let sol: SolutionFn =
            Arc::new(move |t: f64, out: &mut [f64]| out[0] = sign * delta * (t - a));
        let mut p = ProblemSpec::new(
            "adversarial",
            a,
            b,
            vec![0.0],
            rhs,
            1.0,
            1.0,
            1.0,
            f64::INFINITY,
            Some(sol),
        )?;
        p.name = format!(
            "adversarial({delta},{})",
            if sign > 0.0 { "+" } else { "-" }
        );
        Ok(p)
    };
    Ok((make(1.0)?, make(-1.0)?, NoiseModel::zero(delta, 1)?))
}

/// The noise model realizing f_tilde = 0 for one adversarial problem: the
/// constant corruption -sign delta e1 cancels the field sign delta e1.
pub fn adversarial_cancel_noise(delta: f64, sign: f64) -> Result<NoiseModel> {
    NoiseModel::constant_direction(delta, 1, -sign)
}

/// The non-autonomous stability test problem z' = 2 lambda t z as a
/// two-dimensional real system (rotation-scaling form), truncated to [0, b].
/// Exact solution eta exp(lambda t^2); the time-dependent field is what lets
/// the randomization of the evaluation points matter.
pub fn stability_problem(lambda: Complex64, b: f64) -> Result<ProblemSpec> {
    if !(b > 0.0) {
        return Err(Error::Domain("horizon b must be positive".into()));
    }
    let (re, im) = (lambda.re, lambda.im);
    let l1 = re.abs() + im.abs();
    let rhs: RhsFn = Arc::new(move |t: f64, y, out: &mut [f64]| {
        out[0] = 2.0 * t * (re * y[0] - im * y[1]);
        out[1] = 2.0 * t * (im * y[0] + re * y[1]);
    });
    let sol: SolutionFn = Arc::new(move |t: f64, out: &mut [f64]| {
        let scale = (re * t * t).exp();
        out[0] = scale * (im * t * t).cos();
        out[1] = scale * (im * t * t).sin();
    });
    // Growth: |f(t,y)| <= 2 b l1 |y| <= K (1 + |y|); |eta| = 1 <= K.
    let big_k = (2.0 * b * l1).max(1.0);
    // The state Lipschitz constant is 2 b l1; the time-Hoelder constant on
    // the containment ball B(eta, R0) is 2 l1 (1 + R0), with R0 depending on
    // (b, K) only.
    let r1 = (big_k + 2.0) * ((big_k + 1.0) * b).exp() + big_k - 1.0;
    let r2 = big_k * (1.0 + b) * (big_k * b).exp() + big_k;
    let r0 = r1.max(r2);
    let big_l = (2.0 * b * l1).max(2.0 * l1 * (1.0 + r0)).max(1e-12);
    let mut p = ProblemSpec::new(
        "stability",
        0.0,
        b,
        vec![1.0, 0.0],
        rhs,
        big_k,
        big_l,
        1.0,
        f64::INFINITY,
        Some(sol),
    )?;
    p.name = format!("stability({re},{im})");
    Ok(p)
}

/// Resolve a config-file fixture name on the interval [a, b]:
/// `linear`, `holder(rho)`, `state(d)`, `adversarial(delta)`,
/// `stability(re,im)`. The adversarial name yields the +delta problem;
/// commands that need the full pair call `adversarial_pair` directly.
pub fn fixture_from_name(name: &str, a: f64, b: f64) -> Result<ProblemSpec> {
    let name = name.trim();
    if name == "linear" {
        return linear_autonomous(1.0, 1.0, a, b);
    }
    if let Some(args) = parse_call(name, "holder") {
        let rho = parse_f64(args, 1, "holder")?[0];
        return holder_time_probe(rho, 1.0, a, b);
    }
    if let Some(args) = parse_call(name, "state") {
        let d = parse_f64(args, 1, "state")?[0];
        if d < 1.0 || d.fract() != 0.0 {
            return Err(Error::Config(format!(
                "state(d) needs a positive integer, got {d}"
            )));
        }
        return lipschitz_state_probe(1.0, 0.5, d as usize, a, b);
    }
    if let Some(args) = parse_call(name, "adversarial") {
        let delta = parse_f64(args, 1, "adversarial")?[0];
        let (plus, _, _) = adversarial_pair(delta, a, b)?;
        return Ok(plus);
    }
    if let Some(args) = parse_call(name, "stability") {
        let v = parse_f64(args, 2, "stability")?;
        return stability_problem(Complex64::new(v[0], v[1]), b);
    }
    Err(Error::Config(format!("unknown fixture `{name}`")))
}

fn parse_call<'a>(name: &'a str, head: &str) -> Option<&'a str> {
    name.strip_prefix(head)
        .and_then(|rest| rest.strip_prefix('('))
        .and_then(|rest| rest.strip_suffix(')'))
}

fn parse_f64(args: &str, count: usize, what: &str) -> Result<Vec<f64>> {
    let vals: Vec<f64> = args
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(format!("bad arguments for {what}: {e}")))?;
    if vals.len() != count {
        return Err(Error::Config(format!(
            "{what} expects {count} argument(s), got {}",
            vals.len()
        )));
    }
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{one_norm, one_norm_diff};
    use crate::rng::{PurposeTag, StreamRng, StreamSpec};

    #[test]
    fn linear_fixture_solution_values() {
        let p = linear_autonomous(1.0, 1.0, 0.0, 1.0).unwrap();
        let mut z = [0.0];
        p.eval_solution(1.0, &mut z).unwrap();
        assert!((z[0] - std::f64::consts::E).abs() < 1e-12);
        p.eval_solution(0.0, &mut z).unwrap();
        assert_eq!(z[0], p.eta[0]);
        // A = min{K, L} even when they differ.
        let p = linear_autonomous(2.0, 0.5, 0.0, 1.0).unwrap();
        assert_eq!(p.eta[0], 0.5);
    }

    #[test]
    fn linear_endpoint_error_is_positive_for_explicit_iterates() {
        // A (e^{A(b-a)} - (1 + A(b-a)/n)^n) > 0 for every finite n.
        for n in [4u32, 16, 64, 256] {
            let gap = std::f64::consts::E - (1.0 + 1.0 / n as f64).powi(n as i32);
            assert!(gap > 0.0);
        }
    }

    #[test]
    fn holder_probe_solution_matches_quadrature_oracle() {
        // Independent oracle for the integrating-factor solution of
        // z' = g(t) + s z, z(a) = 0: fine Simpson quadrature of
        // e^{s(t-u)} g(u). The panel count resolves the top oscillation
        // frequency of the field.
        for (rho, big_l, a, b) in [
            (0.25, 1.0, 0.0, 1.0),
            (0.5, 1.0, 0.0, 1.0),
            (1.0, 2.0, -1.0, 3.0),
        ] {
            let p = holder_time_probe(rho, big_l, a, b).unwrap();
            let s = 0.5 * big_l;
            let mut f = [0.0];
            let mut z = [0.0];
            for t_end in [0.3 * a + 0.7 * b, b] {
                let panels = 1 << 22;
                let step = (t_end - a) / panels as f64;
                let mut quad = 0.0;
                for i in 0..=panels {
                    let weight = if i == 0 || i == panels {
                        1.0
                    } else if i % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    let u = a + i as f64 * step;
                    // The state-free part of the field.
                    p.eval_rhs(u, &[0.0], &mut f);
                    quad += weight * (-s * (u - a)).exp() * f[0];
                }
                quad *= step / 3.0;
                let expect = (s * (t_end - a)).exp() * quad;
                p.eval_solution(t_end, &mut z).unwrap();
                assert!(
                    (z[0] - expect).abs() < 1e-8,
                    "rho={rho}: z({t_end}) = {} vs quadrature {expect}",
                    z[0]
                );
            }
        }
    }

    #[test]
    fn holder_probe_roughness_is_uniform_and_exactly_rho() {
        // The Hoelder quotient must stay below the declared L at every
        // scale, and come close to it at fine dyadic scales everywhere in
        // the interval (roughness is not localized at a special point).
        let rho = 0.25;
        let p = holder_time_probe(rho, 1.0, 0.0, 1.0).unwrap();
        let mut fa = [0.0];
        let mut fb = [0.0];
        for scale_exp in [4, 7, 10, 13] {
            let d = 0.5f64.powi(scale_exp);
            let mut best: f64 = 0.0;
            let mut rng =
                StreamRng::from_spec(&StreamSpec::new(scale_exp as u64, 0, PurposeTag::TauDraws));
            for _ in 0..4000 {
                let t = rng.next_open01() * (1.0 - d);
                p.eval_rhs(t, &[0.0], &mut fa);
                p.eval_rhs(t + d, &[0.0], &mut fb);
                let q = (fa[0] - fb[0]).abs() / (p.L * d.powf(rho));
                assert!(q <= 1.0 + 1e-12, "Hoelder quotient {q} above declared L");
                best = best.max(q);
            }
            assert!(
                best > 0.05,
                "scale 2^-{scale_exp}: quotient {best} too small; probe not rough at this scale"
            );
        }
    }

    #[test]
    fn state_probe_field_properties() {
        let d = 3;
        let p = lipschitz_state_probe(1.0, 0.5, d, 0.0, 1.0).unwrap();
        let mut f = vec![0.0; d];
        // sin(y_i) = -1 for all i zeroes the field.
        let y = vec![-std::f64::consts::FRAC_PI_2; d];
        p.eval_rhs(0.3, &y, &mut f);
        assert!(one_norm(&f).unwrap() < 1e-15);

        // Growth bound and sampled Lipschitz ratio <= K/2.
        let mut rng = StreamRng::from_spec(&StreamSpec::new(77, 0, PurposeTag::TauDraws));
        let mut fx = vec![0.0; d];
        let mut fy = vec![0.0; d];
        let mut max_ratio: f64 = 0.0;
        for _ in 0..10_000 {
            let t = rng.next_open01();
            let x: Vec<f64> = (0..d).map(|_| 8.0 * rng.next_open01() - 4.0).collect();
            let y: Vec<f64> = (0..d).map(|_| 8.0 * rng.next_open01() - 4.0).collect();
            p.eval_rhs(t, &x, &mut fx);
            assert!(one_norm(&fx).unwrap() <= p.K * (1.0 + one_norm(&x).unwrap()) + 1e-15);
            p.eval_rhs(t, &y, &mut fy);
            let gap = one_norm_diff(&x, &y);
            if gap > 0.0 {
                max_ratio = max_ratio.max(one_norm_diff(&fx, &fy) / gap);
            }
        }
        assert!(max_ratio <= p.K / 2.0 + 1e-12, "ratio {max_ratio}");
        assert!(lipschitz_state_probe(2.0, 0.5, 2, 0.0, 1.0).is_err());
    }

    #[test]
    fn adversarial_pair_geometry() {
        let (plus, minus, noise) = adversarial_pair(0.1, 0.0, 1.0).unwrap();
        let mut zp = [0.0];
        let mut zm = [0.0];
        plus.eval_solution(1.0, &mut zp).unwrap();
        minus.eval_solution(1.0, &mut zm).unwrap();
        assert!((zp[0] - 0.1).abs() < 1e-15);
        assert!((zm[0] + 0.1).abs() < 1e-15);
        // Sup-norm separation 2 delta (b - a).
        assert!(((zp[0] - zm[0]) - 0.2).abs() < 1e-15);
        assert_eq!(noise.delta, 0.1);
        assert!(adversarial_pair(0.0, 0.0, 1.0).is_err());
        assert!(adversarial_pair(1.5, 0.0, 1.0).is_err());

        // The canceling corruption makes f_tilde vanish for the + problem.
        let cancel = adversarial_cancel_noise(0.1, 1.0).unwrap();
        let mut noise_val = [0.0];
        let mut rng = StreamRng::from_spec(&StreamSpec::new(1, 0, PurposeTag::NoiseDraws));
        cancel
            .corrupt(0.5, &[0.0], &mut rng, &mut noise_val)
            .unwrap();
        let mut field = [0.0];
        plus.eval_rhs(0.5, &[0.0], &mut field);
        assert_eq!(field[0] + noise_val[0], 0.0);
    }

    #[test]
    fn stability_problem_solution_modulus() {
        let p = stability_problem(Complex64::new(-1.0, 0.0), 1.0).unwrap();
        let mut z = [0.0, 0.0];
        p.eval_solution(1.0, &mut z).unwrap();
        assert!((one_norm(&z).unwrap() - (-1.0f64).exp()).abs() < 1e-12);
        assert!(((z[0] * z[0] + z[1] * z[1]).sqrt() - 0.3678794).abs() < 1e-6);

        // Purely imaginary lambda keeps |z| = 1.
        let p = stability_problem(Complex64::new(0.0, 1.0), 2.0).unwrap();
        for t in [0.0, 0.5, 1.3, 2.0] {
            p.eval_solution(t, &mut z).unwrap();
            assert!(((z[0] * z[0] + z[1] * z[1]).sqrt() - 1.0).abs() < 1e-12);
        }

        // Re(lambda) < 0 decays with the horizon.
        let p = stability_problem(Complex64::new(-0.5, 0.3), 4.0).unwrap();
        let mut prev = f64::INFINITY;
        for t in [1.0, 2.0, 3.0, 4.0] {
            p.eval_solution(t, &mut z).unwrap();
            let m = (z[0] * z[0] + z[1] * z[1]).sqrt();
            assert!(m < prev);
            prev = m;
        }
    }

    #[test]
    fn fixture_names_resolve() {
        assert_eq!(
            fixture_from_name("linear", 0.0, 1.0).unwrap().name,
            "linear"
        );
        assert_eq!(
            fixture_from_name("holder(0.25)", 0.0, 1.0).unwrap().rho,
            0.25
        );
        assert_eq!(fixture_from_name("state(3)", 0.0, 1.0).unwrap().d, 3);
        assert_eq!(
            fixture_from_name("adversarial(0.1)", 0.0, 1.0).unwrap().d,
            1
        );
        assert_eq!(
            fixture_from_name("stability(-1,0.5)", 0.0, 1.0).unwrap().d,
            2
        );
        assert!(fixture_from_name("mystery", 0.0, 1.0).is_err());
        assert!(fixture_from_name("holder(2)", 0.0, 1.0).is_err());
        assert!(fixture_from_name("state(0)", 0.0, 1.0).is_err());
    }

    #[test]
    fn analytic_solutions_satisfy_the_ode() {
        // Central differences of z against f(t, z(t)). The rough probe needs
        // a smaller stencil: its third derivative grows with the top
        // oscillation frequency.
        let fixtures = vec![
            (linear_autonomous(1.0, 1.0, 0.0, 1.0).unwrap(), 1e-6),
            (holder_time_probe(0.25, 1.0, 0.0, 1.0).unwrap(), 4e-9),
            (holder_time_probe(1.0, 1.0, 0.0, 1.0).unwrap(), 4e-9),
            (adversarial_pair(0.2, 0.0, 1.0).unwrap().0, 1e-6),
            (
                stability_problem(Complex64::new(-1.0, 0.7), 1.0).unwrap(),
                1e-6,
            ),
        ];
        for (p, eps) in fixtures {
            let mut rng = StreamRng::from_spec(&StreamSpec::new(13, 0, PurposeTag::TauDraws));
            let d = p.d;
            let (mut lo, mut hi, mut z, mut f) =
                (vec![0.0; d], vec![0.0; d], vec![0.0; d], vec![0.0; d]);
            for _ in 0..100 {
                let t = p.a + eps + rng.next_open01() * (p.b - p.a - 2.0 * eps);
                p.eval_solution(t - eps, &mut lo).unwrap();
                p.eval_solution(t + eps, &mut hi).unwrap();
                p.eval_solution(t, &mut z).unwrap();
                p.eval_rhs(t, &z, &mut f);
                let mut err = 0.0;
                for k in 0..d {
                    err += ((hi[k] - lo[k]) / (2.0 * eps) - f[k]).abs();
                }
                assert!(
                    err < 1e-8,
                    "{}: derivative residual {err} at t = {t}",
                    p.name
                );
            }
        }
    }
}
