//! Logarithmic small-deviation constants: closed forms for weighted L2 norms,
//! the conversion from an eigenvalue power law, a Chernoff-bound oracle and a
//! Monte Carlo estimator.

mod chernoff;
mod montecarlo;

pub use chernoff::{chernoff_logprob, AnalyticTail, ChernoffResult};
pub use montecarlo::{mc_smallball, McEstimate, Tilt, MC_BLOCK};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{invalid, Error, Result};
use crate::operator::CoefficientSequence;
use crate::quadrature::integrate;
use crate::scalar::Real;
use crate::spectrum::{fou_tail, fractional_part, TailDescriptor};
use crate::special::gamma;
use crate::weights::{integral_q_power, q_r_seminorm, SummabilityVerdict, Weight};

/// Cells `|j| ≤ SEMINORM_CELLS` inspected by the summability check.
pub const SEMINORM_CELLS: usize = 200;

/// Which closed form produced a prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    PeriodicReal,
    PeriodicProper,
    Sequence,
    ContinuousReal,
    ContinuousProper,
    FractionalOu,
    PowerLawFit,
}

/// The squared norm that `ε²` bounds is `norm / divisor`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonConvention<T> {
    pub norm: String,
    pub divisor: T,
    pub description: String,
}

/// `ln P(norm/divisor ≤ ε²) ≈ −coefficient · ε^{−exponent}` as `ε → 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallBallPrediction<T> {
    pub coefficient: T,
    pub exponent: T,
    pub provenance: Provenance,
    pub epsilon_convention: EpsilonConvention<T>,
    pub diagnostics: Map<String, Value>,
}

impl<T: Real + Serialize> SmallBallPrediction<T> {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

impl<T: Real> SmallBallPrediction<T> {
    /// `−K ε^{−γ}`.
    pub fn logprob(&self, eps: T) -> T {
        -self.coefficient * eps.powf(-self.exponent)
    }
}

fn num<T: Real>(x: T) -> Value {
    serde_json::Number::from_f64(x.to_f64_lossy()).map_or(Value::Null, Value::Number)
}

fn check_r<T: Real>(r: T) -> Result<()> {
    if !(r >= T::lit(1.01)) || !r.is_finite() {
        return Err(invalid("r", format!("exponent must be at least 1.01, got {r}")));
    }
    Ok(())
}

/// `B_r = (r−1)/2 · (π/(r sin(π/r)))^{r/(r−1)}`, refused below `r = 1.01`
/// where it blows up.
pub fn b_r<T: Real>(r: T) -> Result<T> {
    check_r(r)?;
    let one = T::one();
    let base = T::PI() / (r * (T::PI() / r).sin());
    Ok((r - one) / T::lit(2.0) * base.powf(r / (r - one)))
}

/// `−B_r (C/ε²)^{1/(r−1)}` for an eigenvalue law `λ_n ∼ C n^{−r}`.
pub fn logprob_from_fit<T: Real>(c: T, r: T, eps: T) -> Result<T> {
    if !(c > T::zero()) {
        return Err(invalid("C", "prefactor must be positive"));
    }
    if !(eps > T::zero()) {
        return Err(invalid("eps", "must be positive"));
    }
    Ok(-b_r(r)? * (c / (eps * eps)).powf((r - T::one()).recip()))
}

/// Prediction `(B_r C^{1/(r−1)}, 2/(r−1))` from an eigenvalue law `λ_n ∼ C n^{−r}`
/// in the norm the eigenvalues were computed for.
pub fn prediction_from_fit<T: Real>(c: T, r: T, norm: &str) -> Result<SmallBallPrediction<T>> {
    if !(c > T::zero()) {
        return Err(invalid("C", "prefactor must be positive"));
    }
    let g = T::lit(2.0) / (r - T::one());
    let mut d = Map::new();
    d.insert("c".into(), num(c));
    d.insert("r".into(), num(r));
    Ok(SmallBallPrediction {
        coefficient: b_r(r)? * c.powf((r - T::one()).recip()),
        exponent: g,
        provenance: Provenance::PowerLawFit,
        epsilon_convention: EpsilonConvention {
            norm: norm.to_string(),
            divisor: T::one(),
            description: format!("ε² bounds {norm}"),
        },
        diagnostics: d,
    })
}

fn require_period_2pi<T: Real>(w: &Weight<T>) -> Result<()> {
    match w.period() {
        Some(p) if (p - T::TAU()).abs() <= T::tolerance_floor() * T::TAU() => Ok(()),
        _ => Err(Error::DomainMismatch(
            "periodic constants need a weight given on [0, 2π) with period 2π".into(),
        )),
    }
}

fn weight_integral<T: Real>(w: &Weight<T>, r: T, d: &mut Map<String, Value>) -> Result<T> {
    let int = integral_q_power(w, r)?;
    if !(int.value > T::zero()) {
        return Err(invalid("weight", "∫ q^{1/r} vanishes; the weight must be non-zero on a set of positive measure"));
    }
    d.insert("weight_integral".into(), num(int.value));
    d.insert("weight_integral_error".into(), num(int.error));
    Ok(int.value)
}

/// `(bracket · I)^{r/(r−1)} (r−1)(2π)^{1/(r−1)} / halving`.
fn process_constant<T: Real>(bracket: T, integral: T, r: T, halve: bool) -> T {
    let one = T::one();
    let k = (bracket * integral).powf(r / (r - one)) * (r - one) * T::TAU().powf((r - one).recip());
    if halve {
        k / T::lit(2.0)
    } else {
        k
    }
}

fn sine_term<T: Real>(r: T) -> T {
    r * (T::PI() / r).sin()
}

fn symmetric_m<T: Real>(tail: &TailDescriptor<T>) -> Result<T> {
    if !tail.is_symmetric() {
        return Err(invalid(
            "tail",
            "a real process has an even spectrum; use the proper-process constant for M₋ ≠ M₊",
        ));
    }
    if !(tail.m_plus > T::zero()) {
        return Err(invalid("M", "tail constant must be positive"));
    }
    Ok(tail.m_plus)
}

fn prediction<T: Real>(
    coefficient: T,
    r: T,
    provenance: Provenance,
    norm: &str,
    description: &str,
    diagnostics: Map<String, Value>,
) -> SmallBallPrediction<T> {
    SmallBallPrediction {
        coefficient,
        exponent: T::lit(2.0) / (r - T::one()),
        provenance,
        epsilon_convention: EpsilonConvention {
            norm: norm.to_string(),
            divisor: T::one(),
            description: description.to_string(),
        },
        diagnostics,
    }
}

const PERIODIC_NORM: &str = "∫_0^{2π} q(t)|X(t)|² dt";
const LINE_NORM: &str = "∫ q(t)|X(t)|² dt";

/// Real 2π-periodic process with `μ_k ∼ M|k|^{−r}`:
/// `K = (M^{1/r}/(r sin(π/r)) ∫_0^{2π} q^{1/r})^{r/(r−1)} (r−1)(2π)^{1/(r−1)}/2`.
pub fn constant_periodic_real<T: Real>(tail: &TailDescriptor<T>, w: &Weight<T>) -> Result<SmallBallPrediction<T>> {
    check_r(tail.r)?;
    require_period_2pi(w)?;
    let m = symmetric_m(tail)?;
    let mut d = Map::new();
    let i = weight_integral(w, tail.r, &mut d)?;
    let bracket = m.powf(tail.r.recip()) / sine_term(tail.r);
    Ok(prediction(
        process_constant(bracket, i, tail.r, true),
        tail.r,
        Provenance::PeriodicReal,
        PERIODIC_NORM,
        "ε² bounds the plain integral over one 2π period",
        d,
    ))
}

/// Proper complex 2π-periodic process with `μ_k ∼ M±|k|^{−r}`:
/// `K = ((M₋^{1/r}+M₊^{1/r})/(2r sin(π/r)) ∫_0^{2π} q^{1/r})^{r/(r−1)} (r−1)(2π)^{1/(r−1)}`.
pub fn constant_periodic_proper<T: Real>(tail: &TailDescriptor<T>, w: &Weight<T>) -> Result<SmallBallPrediction<T>> {
    check_r(tail.r)?;
    require_period_2pi(w)?;
    if !(tail.m_minus + tail.m_plus > T::zero()) {
        return Err(invalid("M", "M₋ + M₊ must be positive"));
    }
    let mut d = Map::new();
    let i = weight_integral(w, tail.r, &mut d)?;
    let bracket = tail.root_sum() / (T::lit(2.0) * sine_term(tail.r));
    Ok(prediction(
        process_constant(bracket, i, tail.r, false),
        tail.r,
        Provenance::PeriodicProper,
        PERIODIC_NORM,
        "ε² bounds the plain integral over one 2π period",
        d,
    ))
}

/// `∫_0^{2π} |𝔞(t)|^{1/p} dt` with `𝔞(t) = Σ a_k e^{ikt}`.
pub fn symbol_integral<T: Real>(a: &CoefficientSequence, p: T) -> Result<T> {
    if a.values.iter().all(|v| *v == 0.0) {
        return Err(invalid("a", "coefficient sequence is identically zero"));
    }
    if a.values.iter().filter(|v| **v != 0.0).count() == 1 {
        let v = a.values.iter().find(|v| **v != 0.0).copied().unwrap_or(0.0);
        return Ok(T::TAU() * T::lit(v.abs()).powf(p.recip()));
    }
    let inv = p.recip();
    let symbol = |t: T| {
        let (mut re, mut im) = (T::zero(), T::zero());
        for (j, v) in a.values.iter().enumerate() {
            let k = T::lit((a.offset + j as i64) as f64);
            let (s, c) = (k * t).sin_cos();
            re = re + T::lit(*v) * c;
            im = im + T::lit(*v) * s;
        }
        (re * re + im * im).sqrt().powf(inv)
    };
    let tol = T::lit(1e-12).max(T::tolerance_floor());
    // Split into pieces so that isolated zeros of the symbol land on short panels.
    let pieces = 64;
    let mut total = T::zero();
    for j in 0..pieces {
        let lo = T::TAU() * T::from_count(j) / T::from_count(pieces);
        let hi = T::TAU() * T::from_count(j + 1) / T::from_count(pieces);
        let q = integrate(symbol, lo, hi, tol, tol);
        total = total + q.value;
    }
    Ok(total)
}

/// Weighted stationary sequence `Z_k = d_k U_k`, `d_k ∼ d±|k|^{−p}`, with
/// `U_k = Σ a_m X_{k−m}` over white noise:
/// `K = ((d₋^{1/p}+d₊^{1/p})/(4p sin(π/2p)) ∫_0^{2π}|𝔞|^{1/p})^{2p/(2p−1)} (2p−1)/2`.
pub fn constant_sequence<T: Real>(p: T, d_minus: T, d_plus: T, a: &CoefficientSequence) -> Result<SmallBallPrediction<T>> {
    if !(p > T::lit(0.5)) {
        return Err(invalid("p", format!("must exceed 1/2, got {p}")));
    }
    if !(d_minus >= T::zero() && d_plus >= T::zero() && d_minus + d_plus > T::zero()) {
        return Err(invalid("d", "need d₋, d₊ ≥ 0 with d₋ + d₊ > 0"));
    }
    let two = T::lit(2.0);
    let r = two * p;
    check_r(r)?;
    let inv = p.recip();
    let i = symbol_integral(a, p)?;
    let bracket = (d_minus.powf(inv) + d_plus.powf(inv)) / (T::lit(4.0) * p * (T::PI() / r).sin());
    let k = (bracket * i).powf(r / (r - T::one())) * (r - T::one()) / two;
    let mut d = Map::new();
    d.insert("symbol_integral".into(), num(i));
    Ok(prediction(
        k,
        r,
        Provenance::Sequence,
        "Σ_k d_k² U_k²",
        "ε² bounds the weighted sum of squares",
        d,
    ))
}

fn check_summable<T: Real>(w: &Weight<T>, r: T, d: &mut Map<String, Value>) -> Result<()> {
    let trace = q_r_seminorm(w, r, SEMINORM_CELLS)?;
    let verdict = serde_json::to_value(trace.verdict)?;
    d.insert("seminorm_verdict".into(), verdict);
    if let Some(s) = trace.increment_slope {
        d.insert("seminorm_increment_slope".into(), num(s));
    }
    if let Some(last) = trace.partial_sums.last() {
        d.insert("seminorm_partial_sum".into(), num(*last));
    }
    if trace.verdict == SummabilityVerdict::Diverged {
        return Err(Error::Divergent(format!(
            "cell sums Σ_j ‖q‖_{{L1(j,j+1)}}^{{1/r}} grow without bound (increment slope {})",
            trace.increment_slope.map_or("n/a".into(), |s| format!("{s:.3}"))
        )));
    }
    Ok(())
}

fn require_line<T: Real>(w: &Weight<T>) -> Result<()> {
    if w.period().is_some() {
        return Err(Error::DomainMismatch("continuous-spectrum constants need a weight on the line".into()));
    }
    Ok(())
}

/// Real process on the line with spectral density `m(u) ∼ M|u|^{−r}`:
/// `K = (M^{1/r}/(r sin(π/r)) ∫ q^{1/r})^{r/(r−1)} (r−1)(2π)^{1/(r−1)}/2`.
pub fn constant_continuous_real<T: Real>(tail: &TailDescriptor<T>, w: &Weight<T>) -> Result<SmallBallPrediction<T>> {
    check_r(tail.r)?;
    require_line(w)?;
    let m = symmetric_m(tail)?;
    let mut d = Map::new();
    check_summable(w, tail.r, &mut d)?;
    let i = weight_integral(w, tail.r, &mut d)?;
    let bracket = m.powf(tail.r.recip()) / sine_term(tail.r);
    Ok(prediction(
        process_constant(bracket, i, tail.r, true),
        tail.r,
        Provenance::ContinuousReal,
        LINE_NORM,
        "ε² bounds the plain integral over the line",
        d,
    ))
}

/// Proper complex process on the line with `m(u) ∼ M±|u|^{−r}`.
pub fn constant_continuous_proper<T: Real>(tail: &TailDescriptor<T>, w: &Weight<T>) -> Result<SmallBallPrediction<T>> {
    check_r(tail.r)?;
    require_line(w)?;
    if !(tail.m_minus + tail.m_plus > T::zero()) {
        return Err(invalid("M", "M₋ + M₊ must be positive"));
    }
    let mut d = Map::new();
    check_summable(w, tail.r, &mut d)?;
    let i = weight_integral(w, tail.r, &mut d)?;
    let bracket = tail.root_sum() / (T::lit(2.0) * sine_term(tail.r));
    Ok(prediction(
        process_constant(bracket, i, tail.r, false),
        tail.r,
        Provenance::ContinuousProper,
        LINE_NORM,
        "ε² bounds the plain integral over the line",
        d,
    ))
}

/// Stationary fOU process of level `h` (`H = {h}`):
/// `K = (∫ q^{1/(2h+1)} / ((2h+1) sin(π/(2h+1))))^{(2h+1)/(2h)} · h (Γ(2H+1) sin πH)^{1/(2h)}`, `γ = 1/h`.
pub fn constant_fou<T: Real>(h: T, w: &Weight<T>) -> Result<SmallBallPrediction<T>> {
    let frac = fractional_part(h)?;
    if !(h > T::zero()) {
        return Err(invalid("h", "level must be positive"));
    }
    require_line(w)?;
    let two = T::lit(2.0);
    let r = two * h + T::one();
    check_r(r)?;
    let mut d = Map::new();
    check_summable(w, r, &mut d)?;
    let i = weight_integral(w, r, &mut d)?;
    let scale = gamma(two * frac + T::one()) * (T::PI() * frac).sin();
    let k = (i / sine_term(r)).powf(r / (two * h)) * h * scale.powf((two * h).recip());
    d.insert("tail_m".into(), num(fou_tail(h)?.m_plus));
    Ok(SmallBallPrediction {
        coefficient: k,
        exponent: h.recip(),
        provenance: Provenance::FractionalOu,
        epsilon_convention: EpsilonConvention {
            norm: LINE_NORM.to_string(),
            divisor: T::one(),
            description: "ε² bounds the plain integral over the line".into(),
        },
        diagnostics: d,
    })
}

/// Restates a prediction for `norm / (c · divisor)`: `ε²` in the old statement
/// becomes `c ε²`, so `K ↦ K c^{−γ/2}`.
pub fn rescale_epsilon<T: Real>(pred: &SmallBallPrediction<T>, c: T) -> Result<SmallBallPrediction<T>> {
    if !(c > T::zero()) || !c.is_finite() {
        return Err(invalid("c", "norm scale must be positive"));
    }
    let mut out = pred.clone();
    out.coefficient = pred.coefficient * c.powf(-pred.exponent / T::lit(2.0));
    out.epsilon_convention.divisor = pred.epsilon_convention.divisor * c;
    out.epsilon_convention.description = format!(
        "ε² bounds ({}) / {}",
        pred.epsilon_convention.norm,
        out.epsilon_convention.divisor
    );
    Ok(out)
}

/// Eigenvalue prefactor `C` of `λ_n ∼ C n^{−r}` predicted for a weighted periodic
/// process, in `L2([0, 2π), dt/2π)`:
/// `C = ((M₋^{1/r}+M₊^{1/r})/(2π) ∫_0^{2π} q^{1/r})^r`.
pub fn lemma_constant_periodic<T: Real>(tail: &TailDescriptor<T>, w: &Weight<T>) -> Result<T> {
    check_r(tail.r)?;
    require_period_2pi(w)?;
    let i = integral_q_power(w, tail.r)?.value;
    Ok((tail.root_sum() / T::TAU() * i).powf(tail.r))
}

/// Same for a process on the line, in plain `L2(R)`; carries an extra `2π`
/// relative to the periodic normalization.
pub fn lemma_constant_continuous<T: Real>(tail: &TailDescriptor<T>, w: &Weight<T>) -> Result<T> {
    check_r(tail.r)?;
    require_line(w)?;
    let i = integral_q_power(w, tail.r)?.value;
    Ok((tail.root_sum() / T::TAU() * i).powf(tail.r) * T::TAU())
}

/// Eigenvalue prefactor for the weighted sequence, exponent `2p`:
/// `C = ((d₋^{1/p}+d₊^{1/p})/(2π) ∫_0^{2π}|𝔞|^{1/p})^{2p}`.
pub fn lemma_constant_sequence<T: Real>(p: T, d_minus: T, d_plus: T, a: &CoefficientSequence) -> Result<T> {
    if !(p > T::lit(0.5)) {
        return Err(invalid("p", "must exceed 1/2"));
    }
    let inv = p.recip();
    let i = symbol_integral(a, p)?;
    Ok(((d_minus.powf(inv) + d_plus.powf(inv)) / T::TAU() * i).powf(T::lit(2.0) * p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{bogoliubov_spectrum, integrated_bridge_spectrum};
    use crate::weights::WeightDomain;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    fn one_2pi() -> Weight<f64> {
        Weight::constant(1.0, WeightDomain::Periodic { period: TAU }).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn b_r_values() {
        assert!(rel(b_r(2.0).unwrap(), PI * PI / 8.0) < 1e-15);
        let b3 = (2.0 * PI / (3.0 * 3f64.sqrt())).powf(1.5);
        assert!(rel(b_r(3.0).unwrap(), b3) < 1e-14);
        assert!((b_r(3.0f64).unwrap() - 1.329_679_5).abs() < 1e-6);
        assert!(b_r(1.01f64).unwrap().is_finite());
        assert!(b_r(1.005f64).is_err());
        assert!(b_r(1.0f64).is_err());
    }

    #[test]
    fn logprob_examples() {
        assert!(rel(logprob_from_fit(1.0, 2.0, 1.0).unwrap(), -PI * PI / 8.0) < 1e-15);
        let eps = 0.01;
        assert!(rel(logprob_from_fit(4.0, 2.0, eps).unwrap(), -PI * PI / (2.0 * eps * eps)) < 1e-14);
        let a = logprob_from_fit(2.0, 3.0, 0.1).unwrap();
        let b = logprob_from_fit(8.0, 3.0, 0.2).unwrap();
        assert!(rel(a, b) < 1e-14);
    }

    #[test]
    fn bogoliubov_golden() {
        let spec = bogoliubov_spectrum(1.0).unwrap();
        let k = constant_periodic_real(&spec.tail(), &one_2pi()).unwrap();
        assert!(rel(k.coefficient, PI / 4.0) < 1e-12);
        let unit = rescale_epsilon(&k, TAU).unwrap();
        assert!(rel(unit.coefficient, 0.125) < 1e-12);
        assert_eq!(unit.exponent, 2.0);
        for a in [-1.0, 0.5, 2.0] {
            let w = Weight::exponential(a / TAU, TAU).unwrap();
            let k = rescale_epsilon(&constant_periodic_real(&spec.tail(), &w).unwrap(), TAU).unwrap();
            let expect = 0.125 * ((f64::exp(a) - 1.0) / a).powi(2);
            assert!(rel(k.coefficient, expect) < 1e-10, "a = {a}");
        }
    }

    #[test]
    fn bridge_golden() {
        for m in 1..=3u32 {
            let spec = integrated_bridge_spectrum::<f64>(m).unwrap();
            let k = rescale_epsilon(&constant_periodic_real(&spec.tail(), &one_2pi()).unwrap(), TAU).unwrap();
            let mm = 2.0 * m as f64;
            let expect = (mm - 1.0) / 2.0 * (mm * (PI / mm).sin()).powf(-mm / (mm - 1.0));
            assert!(rel(k.coefficient, expect) < 1e-12, "m = {m}");
            assert!(rel(k.exponent, 2.0 / (mm - 1.0)) < 1e-15);
        }
    }

    #[test]
    fn proper_is_twice_real() {
        for r in [1.5, 2.0, 3.0, 4.0] {
            let tail = TailDescriptor::symmetric(r, 0.3).unwrap();
            let w = Weight::exponential(0.2, TAU).unwrap();
            let real = constant_periodic_real(&tail, &w).unwrap().coefficient;
            let proper = constant_periodic_proper(&tail, &w).unwrap().coefficient;
            // B_r (2^{r−1} C)^{1/(r−1)} = 2 B_r C^{1/(r−1)}.
            assert!(rel(proper, 2.0 * real) < 1e-12, "r = {r}");
            let one_sided = TailDescriptor::new(r, 0.0, 0.3).unwrap();
            let half = constant_periodic_proper(&one_sided, &w).unwrap().coefficient;
            assert!(rel(half, proper * 0.5f64.powf(r / (r - 1.0))) < 1e-12);
        }
        let spec = bogoliubov_spectrum(1.0).unwrap();
        let k = constant_periodic_proper(&spec.tail(), &one_2pi()).unwrap();
        assert!(rel(rescale_epsilon(&k, TAU).unwrap().coefficient, 0.25) < 1e-12);
    }

    #[test]
    fn sequence_constants() {
        let delta = CoefficientSequence::finite(0, vec![1.0]).unwrap();
        let k = constant_sequence(1.0, 1.0, 1.0, &delta).unwrap();
        assert!(rel(k.coefficient, PI * PI / 2.0) < 1e-12);
        let c = lemma_constant_sequence(1.0, 1.0, 1.0, &delta).unwrap();
        assert!(rel(b_r(2.0).unwrap() * c, PI * PI / 2.0) < 1e-12);
        let one_sided = constant_sequence(1.0, 0.0, 1.0, &delta).unwrap();
        assert!(rel(one_sided.coefficient, PI * PI / 8.0) < 1e-12);
        let scaled = CoefficientSequence::finite(0, vec![3.0]).unwrap();
        assert!(rel(constant_sequence(1.0, 1.0, 1.0, &scaled).unwrap().coefficient, 9.0 * PI * PI / 2.0) < 1e-12);
        assert!(constant_sequence(0.5, 1.0, 1.0, &delta).is_err());
    }

    #[test]
    fn symbol_integral_of_moving_average() {
        // |1 + e^{it}| = 2|cos(t/2)|, so ∫ |𝔞| = 8.
        let a = CoefficientSequence::finite(0, vec![1.0, 1.0]).unwrap();
        assert!(rel(symbol_integral(&a, 1.0).unwrap(), 8.0) < 1e-10);
        // ∫ |𝔞|² = 2π Σ a_k².
        let a = CoefficientSequence::finite(-1, vec![0.5, 1.0, -0.25]).unwrap();
        assert!(rel(symbol_integral(&a, 0.5).unwrap(), TAU * (0.25 + 1.0 + 0.0625)) < 1e-10);
    }

    #[test]
    fn ou_and_fou_paths() {
        let w = Weight::indicator(0.0, 1.0, WeightDomain::RealLine).unwrap();
        let ou = constant_continuous_real(&fou_tail(0.5).unwrap(), &w).unwrap();
        assert!(rel(ou.coefficient, 0.125) < 1e-12);
        let fou = constant_fou(0.5, &w).unwrap();
        assert!(rel(fou.coefficient, 0.125) < 1e-12);
        let fou = constant_fou(1.5, &w).unwrap();
        assert!(rel(fou.exponent, 2.0 / 3.0) < 1e-15);
        let via = constant_continuous_real(&TailDescriptor::symmetric(4.0, 1.0 / TAU).unwrap(), &w).unwrap();
        assert!(rel(fou.coefficient, via.coefficient) < 1e-12);
        let w2 = Weight::indicator(0.0, 2.0, WeightDomain::RealLine).unwrap();
        let ou2 = constant_continuous_real(&fou_tail(0.5).unwrap(), &w2).unwrap();
        assert!(rel(ou2.coefficient, 4.0 * ou.coefficient) < 1e-12);
        assert!(constant_fou(2.0, &w).is_err());
    }

    #[test]
    fn continuous_proper_relation() {
        let w = Weight::indicator(0.0, 1.0, WeightDomain::RealLine).unwrap();
        let tail = fou_tail(0.5).unwrap();
        let real = constant_continuous_real(&tail, &w).unwrap().coefficient;
        let proper = constant_continuous_proper(&tail, &w).unwrap().coefficient;
        assert!(rel(proper, 0.25) < 1e-12 && rel(proper, 2.0 * real) < 1e-12);
        let one_sided = TailDescriptor::new(2.0, 0.0, tail.m_plus).unwrap();
        assert!(rel(constant_continuous_proper(&one_sided, &w).unwrap().coefficient, proper / 4.0) < 1e-12);
    }

    #[test]
    fn continuous_refusals() {
        let tail = fou_tail(0.5).unwrap();
        let zero = Weight::constant(0.0, WeightDomain::RealLine).unwrap();
        assert!(constant_continuous_real(&tail, &zero).is_err());
        // (1+t²)^{-1}: cells decay like j^{-2/r}, summable only for r < 2.
        let cauchy = Weight::power_decay(1.0).unwrap();
        assert!(matches!(constant_continuous_real(&TailDescriptor::symmetric(3.0, 1.0).unwrap(), &cauchy), Err(Error::Divergent(_))));
        assert!(constant_continuous_real(&TailDescriptor::symmetric(1.5, 1.0).unwrap(), &cauchy).is_ok());
        assert!(constant_periodic_real(&tail, &Weight::indicator(0.0, 1.0, WeightDomain::RealLine).unwrap()).is_err());
    }

    #[test]
    fn lemma_and_theorem_agree() {
        let tail = bogoliubov_spectrum(1.0).unwrap().tail();
        let w = Weight::exponential(1.0 / TAU, TAU).unwrap();
        let c = lemma_constant_periodic(&tail, &w).unwrap();
        assert!(rel(c, (f64::exp(1.0) - 1.0).powi(2) / (PI * PI)) < 1e-12);
        // Normalized-measure law rescaled to the plain integral over [0, 2π).
        let from_lemma = b_r(2.0).unwrap() * c * TAU;
        let thm = constant_periodic_real(&tail, &w).unwrap().coefficient;
        assert!(rel(from_lemma, thm) < 1e-12);
        let line = Weight::indicator(0.0, 1.0, WeightDomain::RealLine).unwrap();
        let c = lemma_constant_continuous(&fou_tail(0.5).unwrap(), &line).unwrap();
        assert!(rel(b_r(2.0).unwrap() * c, 0.125) < 1e-12);
    }

    #[test]
    fn rescale_identity_and_json() {
        let spec = bogoliubov_spectrum(1.0).unwrap();
        let k = constant_periodic_real(&spec.tail(), &one_2pi()).unwrap();
        assert_eq!(rescale_epsilon(&k, 1.0).unwrap().coefficient, k.coefficient);
        let json = rescale_epsilon(&k, TAU).unwrap().to_json().unwrap();
        let v: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["provenance"], "periodic_real");
        assert!((v["epsilon_convention"]["divisor"].as_f64().unwrap() - TAU).abs() < 1e-15);
    }

    #[test]
    fn f32_smoke() {
        let tail = TailDescriptor::<f32>::symmetric(2.0, 1.0 / (std::f32::consts::TAU * std::f32::consts::TAU)).unwrap();
        let w = Weight::constant(1.0f32, WeightDomain::Periodic { period: std::f32::consts::TAU }).unwrap();
        let k = rescale_epsilon(&constant_periodic_real(&tail, &w).unwrap(), std::f32::consts::TAU).unwrap();
        assert!((k.coefficient - 0.125).abs() < 1e-5);
        assert!((b_r(2.0f32).unwrap() - 1.233_700_6).abs() < 1e-5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn weight_homogeneity(c in 0.01f64..100.0, r in 1.2f64..5.0, a in -2.0f64..2.0) {
            let tail = TailDescriptor::symmetric(r, 0.7).unwrap();
            let w = Weight::exponential(a / TAU, TAU).unwrap();
            let base = constant_periodic_real(&tail, &w).unwrap();
            let scaled = constant_periodic_real(&tail, &w.scaled(c).unwrap()).unwrap();
            prop_assert!(rel(scaled.coefficient, base.coefficient * c.powf(base.exponent / 2.0)) < 1e-12);
            let proper = constant_periodic_proper(&tail, &w.scaled(c).unwrap()).unwrap();
            prop_assert!(rel(proper.coefficient, 2.0 * scaled.coefficient) < 1e-12);
            let line = Weight::indicator(0.0, 1.0 + a.abs(), WeightDomain::RealLine).unwrap();
            let b = constant_continuous_real(&tail, &line).unwrap();
            let s = constant_continuous_real(&tail, &line.scaled(c).unwrap()).unwrap();
            prop_assert!(rel(s.coefficient, b.coefficient * c.powf(b.exponent / 2.0)) < 1e-12);
        }

        #[test]
        fn fou_matches_continuous(h in 0.05f64..3.0) {
            prop_assume!((h - h.round()).abs() > 1e-3);
            let w = Weight::indicator(-0.5, 1.5, WeightDomain::RealLine).unwrap();
            let a = constant_fou(h, &w).unwrap();
            let b = constant_continuous_real(&fou_tail(h).unwrap(), &w).unwrap();
            prop_assert!(rel(a.coefficient, b.coefficient) < 1e-12);
        }
    }
}
