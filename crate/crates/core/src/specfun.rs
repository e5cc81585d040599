//! Mittag-Leffler functions, stable scale functions, the restricted-process
//! exponent in closed and integral form, passage probabilities and the
//! moment and deviation bounds used by the experiments.

use std::f64::consts::PI;

use crate::error::{param, Error, Result};
use crate::quad::{integrate, QuadOptions};

pub use statrs::function::gamma::ln_gamma;

/// Γ(x), exact at positive integers up to 171.
pub fn gamma(x: f64) -> f64 {
    if (1.0..=171.0).contains(&x) && x.fract() == 0.0 {
        return (2..x as u32).fold(1.0, |acc, k| acc * k as f64);
    }
    statrs::function::gamma::gamma(x)
}

/// Series controls for [`mittag_leffler_with`]. `tol` is relative to the
/// magnitude of the sum (absolute once the sum is below 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MlParams {
    pub rho: f64,
    pub beta: f64,
    pub tol: f64,
    pub range: f64,
}

impl MlParams {
    pub fn new(rho: f64, beta: f64) -> Self {
        Self {
            rho,
            beta,
            tol: 1e-15,
            range: 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MlValue {
    pub value: f64,
    pub terms: usize,
}

const MAX_TERMS: usize = 20_000;
const CANCEL_TOL: f64 = 1e-10;

fn ml_term(rho: f64, beta: f64, x: f64, k: usize) -> f64 {
    if k == 0 {
        return 1.0 / gamma(beta);
    }
    let mag = (k as f64 * x.abs().ln() - ln_gamma(beta + k as f64 * rho)).exp();
    if x < 0.0 && k % 2 == 1 {
        -mag
    } else {
        mag
    }
}

fn ml_series(p: &MlParams, x: f64, start: usize) -> Result<MlValue> {
    if !(p.rho > 0.0) || !(p.beta > 0.0) {
        return Err(param(format!(
            "Mittag-Leffler needs rho > 0 and beta > 0, got ({}, {})",
            p.rho, p.beta
        )));
    }
    if !(x.abs() <= p.range) {
        return Err(Error::UnsupportedRange { x, limit: p.range });
    }
    if x == 0.0 {
        let value = if start == 0 { 1.0 / gamma(p.beta) } else { 0.0 };
        return Ok(MlValue { value, terms: 1 });
    }
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut max_term = 0.0f64;
    let mut prev = f64::INFINITY;
    for k in start..start + MAX_TERMS {
        let t = ml_term(p.rho, p.beta, x, k);
        let y = t - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
        let a = t.abs();
        max_term = max_term.max(a);
        if a < 0.5 * prev && a <= 0.5 * p.tol * sum.abs().max(1.0) {
            if x < 0.0 && max_term * f64::EPSILON > CANCEL_TOL * sum.abs().max(1.0) {
                return Err(Error::Numeric(format!(
                    "Mittag-Leffler series at x={x} loses accuracy to cancellation (largest term {max_term:e})"
                )));
            }
            return Ok(MlValue {
                value: sum,
                terms: k + 1 - start,
            });
        }
        prev = a;
    }
    Err(Error::Numeric(format!(
        "Mittag-Leffler series at x={x} did not converge in {MAX_TERMS} terms"
    )))
}

pub fn mittag_leffler_with(p: &MlParams, x: f64) -> Result<MlValue> {
    ml_series(p, x, 0)
}

/// E_{rho,beta}(x) = Σ_k x^k / Γ(beta + k rho).
pub fn mittag_leffler(rho: f64, beta: f64, x: f64) -> Result<f64> {
    Ok(mittag_leffler_with(&MlParams::new(rho, beta), x)?.value)
}

/// Fixed-length partial sum over k < n.
pub fn mittag_leffler_terms(rho: f64, beta: f64, x: f64, n: usize) -> f64 {
    (0..n).map(|k| ml_term(rho, beta, x, k)).sum()
}

/// E_{rho,beta}(x) − 1/Γ(beta), summed from k=1 to avoid cancellation.
fn ml_without_constant(rho: f64, beta: f64, x: f64) -> Result<f64> {
    Ok(ml_series(&MlParams::new(rho, beta), x, 1)?.value)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(param(format!("alpha must lie in (0,1), got {alpha}")))
    }
}

/// W^{(q)}(x) = x^α E_{1+α,1+α}(q x^{1+α}).
pub fn scale_w(alpha: f64, q: f64, x: f64) -> Result<f64> {
    scale_w_with_range(alpha, q, x, MlParams::new(1.0, 1.0).range)
}

/// [`scale_w`] with an explicit Mittag-Leffler argument range.
pub fn scale_w_with_range(alpha: f64, q: f64, x: f64, range: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if x < 0.0 {
        return Err(param(format!("scale function needs x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let r = 1.0 + alpha;
    let p = MlParams {
        range,
        ..MlParams::new(r, r)
    };
    Ok(x.powf(alpha) * mittag_leffler_with(&p, q * x.powf(r))?.value)
}

/// Z^{(q)}(x) = E_{1+α}(q x^{1+α}).
pub fn scale_z(alpha: f64, q: f64, x: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if x < 0.0 {
        return Err(param(format!("scale function needs x >= 0, got {x}")));
    }
    let r = 1.0 + alpha;
    mittag_leffler(r, 1.0, q * x.powf(r))
}

fn check_theta_args(alpha: f64, a: f64, b: f64, q: f64) -> Result<()> {
    check_alpha(alpha)?;
    if !(a > 0.0) || !(b > 0.0) || !(q >= 0.0) {
        return Err(param(format!(
            "theta needs a > 0, b > 0, q >= 0, got a={a}, b={b}, q={q}"
        )));
    }
    Ok(())
}

/// Laplace exponent of the inverse local time at 0 of the process restricted
/// to [0,b], Mittag-Leffler form. For a ≠ 1 this is a·Θ₁(q/a), the time-change
/// image under the occupation-density normalization of local time.
pub fn theta_b_closed(alpha: f64, a: f64, b: f64, q: f64) -> Result<f64> {
    check_theta_args(alpha, a, b, q)?;
    if q == 0.0 {
        return Ok(0.0);
    }
    let r = 1.0 + alpha;
    let z = q * b.powf(r) / a;
    let num = ml_without_constant(r, 1.0 - alpha, z)?;
    let den = mittag_leffler(r, 1.0, z)?;
    Ok(a * b.powf(-alpha) * num / den)
}

/// Same exponent from the integral (1/Z(b)) ∫_0^b Πbarbar(b−z) q W(z) dz,
/// with z = b − v^{1/(1−α)} so the integrand is bounded at z = b.
pub fn theta_b_integral(alpha: f64, a: f64, b: f64, q: f64) -> Result<f64> {
    check_theta_args(alpha, a, b, q)?;
    if q == 0.0 {
        return Ok(0.0);
    }
    let qa = q / a;
    let k = 1.0 / ((1.0 - alpha) * gamma(1.0 - alpha));
    let e = 1.0 / (1.0 - alpha);
    let vmax = b.powf(1.0 - alpha);
    let f = |v: f64| {
        let z = (b - v.powf(e)).max(0.0);
        k * q * scale_w(alpha, qa, z).unwrap_or(f64::NAN)
    };
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-13,
        max_intervals: 4000,
    };
    let r = integrate(f, 0.0, vmax, opts).map_err(|err| {
        Error::Numeric(format!(
            "theta integral (alpha={alpha}, b={b}, q={q}): {err}"
        ))
    })?;
    Ok(r.value / scale_z(alpha, qa, b)?)
}

/// Quadrature of ∫_0^∞ e^{−ηx} W^{(q)}(x) dx, requiring η^{1+α} > q.
pub fn laplace_transform_w(alpha: f64, q: f64, eta: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(q >= 0.0) || !(eta.powf(1.0 + alpha) > q) {
        return Err(param(format!(
            "Laplace transform of W needs eta^(1+alpha) > q >= 0, got eta={eta}, q={q}"
        )));
    }
    let range = 1e4;
    let f = |x: f64| {
        let w = scale_w_with_range(alpha, q, x, range).unwrap_or(f64::INFINITY);
        if w.is_finite() {
            (-eta * x).exp() * w
        } else {
            0.0
        }
    };
    let opts = QuadOptions {
        abs_tol: 0.0,
        rel_tol: 1e-10,
        max_intervals: 4000,
    };
    Ok(crate::quad::integrate_to_inf(f, 0.0, opts)?.value)
}

/// Laplace exponent of the inverse local time at 0: (1+α) ξ^{α/(1+α)}.
pub fn laplace_tau0(alpha: f64, xi: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if xi < 0.0 {
        return Err(param(format!("xi must be >= 0, got {xi}")));
    }
    Ok((1.0 + alpha) * xi.powf(alpha / (1.0 + alpha)))
}

/// c Γ(1−α/q) ξ^{α/q}.
pub fn subordinator_theta(alpha: f64, q: f64, c: f64, xi: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(q > alpha) {
        return Err(param(format!(
            "subordinator exponent needs q > alpha, got q={q}, alpha={alpha}"
        )));
    }
    if xi < 0.0 {
        return Err(param(format!("xi must be >= 0, got {xi}")));
    }
    Ok(c * gamma(1.0 - alpha / q) * xi.powf(alpha / q))
}

/// P(T_y < λ) for the hitting time of y > 0 and an independent λ ~ Exp(1).
pub fn lemma7_prob(alpha: f64, y: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if !(y >= 0.0) {
        return Err(param(format!("lemma7_prob needs y >= 0, got {y}")));
    }
    let r = 1.0 + alpha;
    let (sn, cs) = (PI * alpha).sin_cos();
    let f = move |s: f64| {
        let sr = s.powf(r);
        r / PI * sn * sr / (sr * sr + 2.0 * sr * cs + 1.0) * (-y * s).exp()
    };
    let opts = QuadOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-12,
        max_intervals: 4000,
    };
    let head = integrate(f, 0.0, 1.0, opts)?.value;
    // s = v^{-1/α} on [1, ∞) gives a bounded integrand on (0, 1].
    let g = |v: f64| {
        if v <= 0.0 {
            return if y > 0.0 { 0.0 } else { r / PI * sn / alpha };
        }
        let s = v.powf(-1.0 / alpha);
        f(s) * s / (alpha * v)
    };
    let tail = integrate(g, 0.0, 1.0, opts)?.value;
    Ok(head + tail)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonMdp {
    pub lhs: f64,
    pub rhs: f64,
}

/// Exact P(|N_t − t| ≥ √(t log t)·√(2z)) for N_t ~ Poisson(t), against t^{−z+δ}.
pub fn poisson_mdp(t: f64, z: f64, delta: f64) -> Result<PoissonMdp> {
    if !(t > 1.0) || !(delta > 0.0) || !(z > delta) {
        return Err(param(format!(
            "poisson_mdp needs t > 1 and z > delta > 0, got t={t}, z={z}, delta={delta}"
        )));
    }
    let d = (t * t.ln()).sqrt() * (2.0 * z).sqrt();
    let lt = t.ln();
    let log_pmf = |k: f64| -t + k * lt - ln_gamma(k + 1.0);
    let mut lhs = 0.0;
    let mut k = (t + d).ceil();
    loop {
        let p = log_pmf(k).exp();
        lhs += p;
        if p < 1e-300 || p < lhs * 1e-18 {
            break;
        }
        k += 1.0;
    }
    let lo = (t - d).floor();
    if lo >= 0.0 {
        let mut k = lo;
        loop {
            let p = log_pmf(k).exp();
            lhs += p;
            if k == 0.0 || p < 1e-300 || p < lhs * 1e-18 {
                break;
            }
            k -= 1.0;
        }
    }
    Ok(PoissonMdp {
        lhs,
        rhs: t.powf(-z + delta),
    })
}

/// Moment bound for the γ-Hölder constant of BESQ paths on [0,1]:
/// 2^{γp+p+1}(c + 2√((p−1)(c+p−2)) + 2√(p−1)√(|x|+2(c+p−2))) / (1−2^{γ+(2−p)/2p})^p.
pub fn holder_moment_bound(c: f64, x: f64, p: f64, gamma_exp: f64) -> Result<f64> {
    if !(p > 2.0) {
        return Err(param(format!("holder bound needs p > 2, got {p}")));
    }
    if !(c > 0.0) {
        return Err(param(format!("holder bound needs c > 0, got {c}")));
    }
    let g_max = (p - 2.0) / (2.0 * p);
    if !(gamma_exp > 0.0 && gamma_exp < g_max) {
        return Err(param(format!(
            "holder bound needs 0 < gamma < (p-2)/2p = {g_max}, got {gamma_exp}"
        )));
    }
    let num = 2f64.powf(gamma_exp * p + p + 1.0)
        * (c + 2.0 * ((p - 1.0) * (c + p - 2.0)).sqrt()
            + 2.0 * (p - 1.0).sqrt() * (x.abs() + 2.0 * (c + p - 2.0)).sqrt());
    let den = (1.0 - 2f64.powf(gamma_exp + (2.0 - p) / (2.0 * p))).powf(p);
    Ok(num / den)
}
