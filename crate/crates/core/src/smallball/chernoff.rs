use serde::Serialize;

use crate::eigensolve::EigenSequence;
use crate::error::{invalid, Error, Result};
use crate::quadrature::integrate;
use crate::scalar::Real;

/// Power-law continuation `λ_n = C n^{−r}` of an eigenvalue list beyond its end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnalyticTail<T> {
    pub c: T,
    pub r: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChernoffResult<T> {
    /// `inf_{s>0} [s ε² − ½ Σ ln(1 + 2sλ_n)]`, an upper bound on `ln P(Σ λ_n ξ_n² ≤ ε²)`.
    pub log_prob: T,
    pub s_star: T,
    /// Final bisection bracket in `s`.
    pub bracket: (T, T),
    pub iterations: usize,
    /// True when no analytic tail was attached.
    pub truncated: bool,
}

const S_MIN: f64 = 1e-12;
const S_MAX: f64 = 1e40;

struct Objective<'a, T> {
    values: &'a [T],
    tail: Option<(AnalyticTail<T>, T)>,
    eps2: T,
}

impl<T: Real> Objective<'_, T> {
    /// `ε² − Σ λ/(1+2sλ) − ∫_a^∞ C x^{−r}/(1 + 2sC x^{−r}) dx`.
    fn derivative(&self, s: T) -> T {
        let two_s = T::lit(2.0) * s;
        let mut sum = T::zero();
        for &l in self.values {
            sum = sum + l / (T::one() + two_s * l);
        }
        if let Some((t, a)) = self.tail {
            sum = sum + tail_derivative(t, a, s);
        }
        self.eps2 - sum
    }

    fn value(&self, s: T) -> T {
        let two_s = T::lit(2.0) * s;
        let mut sum = T::zero();
        for &l in self.values {
            sum = sum + (two_s * l).ln_1p();
        }
        if let Some((t, a)) = self.tail {
            sum = sum + tail_log_integral(t, a, s);
        }
        s * self.eps2 - sum / T::lit(2.0)
    }
}

fn quad_tol<T: Real>() -> T {
    T::lit(1e-13).max(T::tolerance_floor())
}

/// Split point `b ≥ a` past which `c x^{−r} ≤ 2^{−r}` and the series converge fast.
fn split<T: Real>(t: AnalyticTail<T>, a: T, c: T) -> T {
    let x0 = c.powf(t.r.recip());
    a.max(T::lit(2.0) * x0)
}

/// `∫_a^∞ ln(1 + c x^{−r}) dx` with `c = 2sC`.
fn tail_log_integral<T: Real>(t: AnalyticTail<T>, a: T, s: T) -> T {
    let c = T::lit(2.0) * s * t.c;
    if !(c > T::zero()) {
        return T::zero();
    }
    let b = split(t, a, c);
    let mut total = T::zero();
    if b > a {
        let f = |u: T| {
            let x = u.exp();
            x * (c * x.powf(-t.r)).ln_1p()
        };
        total = total + integrate(f, a.ln(), b.ln(), T::zero(), quad_tol()).value;
    }
    // b Σ (−1)^{j+1} y^j / (j(rj − 1)), y = c b^{−r}.
    let y = c * b.powf(-t.r);
    let mut series = T::zero();
    let mut yj = T::one();
    for j in 1..400 {
        yj = yj * y;
        let jf = T::from_count(j);
        let term = yj / (jf * (t.r * jf - T::one()));
        series = if j % 2 == 1 { series + term } else { series - term };
        if term <= T::epsilon() * series.abs() {
            break;
        }
    }
    total + b * series
}

/// `∫_a^∞ C x^{−r} / (1 + c x^{−r}) dx` with `c = 2sC`.
fn tail_derivative<T: Real>(t: AnalyticTail<T>, a: T, s: T) -> T {
    let c = T::lit(2.0) * s * t.c;
    let b = split(t, a, c);
    let mut total = T::zero();
    if b > a {
        let f = |u: T| {
            let x = u.exp();
            let p = x.powf(-t.r);
            x * t.c * p / (T::one() + c * p)
        };
        total = total + integrate(f, a.ln(), b.ln(), T::zero(), quad_tol()).value;
    }
    // C b^{1−r} Σ (−y)^j / (r(j+1) − 1).
    let y = c * b.powf(-t.r);
    let mut series = T::zero();
    let mut yj = T::one();
    for j in 0..400 {
        if j > 0 {
            yj = -yj * y;
        }
        let term = yj / (t.r * T::from_count(j + 1) - T::one());
        series = series + term;
        if term.abs() <= T::epsilon() * series.abs() {
            break;
        }
    }
    total + t.c * b.powf(T::one() - t.r) * series
}

/// Chernoff bound on `ln P(Σ λ_n ξ_n² ≤ ε²)`.
///
/// The derivative of the convex objective is monotone, so the minimizer is
/// bracketed by a geometric scan in `s` and then bisected (in `ln s`) to
/// relative width `10⁻¹⁰`. With `tail`, the terms `n > N` are replaced by
/// `½ ∫_{N+½}^∞ ln(1 + 2sC x^{−r}) dx`.
pub fn chernoff_logprob<T: Real>(eig: &EigenSequence<T>, tail: Option<AnalyticTail<T>>, eps: T) -> Result<ChernoffResult<T>> {
    if !(eps > T::zero()) || !eps.is_finite() {
        return Err(invalid("eps", "must be positive"));
    }
    if eig.values.iter().any(|v| *v < T::zero() || !v.is_finite()) {
        return Err(invalid("eigenvalues", "must be finite and non-negative"));
    }
    if let Some(t) = tail {
        if !(t.c > T::zero()) || !(t.r > T::one()) {
            return Err(invalid("tail", "needs C > 0 and r > 1"));
        }
    }
    let values: Vec<T> = eig.values.iter().copied().filter(|v| *v > T::zero()).collect();
    if values.is_empty() && tail.is_none() {
        return Err(invalid("eigenvalues", "all eigenvalues vanish"));
    }
    let start = T::from_count(eig.values.len()) + T::lit(0.5);
    let obj = Objective {
        values: &values,
        tail: tail.map(|t| (t, start)),
        eps2: eps * eps,
    };
    let truncated = tail.is_none();
    let zero = T::zero();
    // Objective is 0 at s = 0 with slope ε² − Σλ; non-negative slope means the bound is trivial.
    let mass: T = values.iter().copied().sum::<T>()
        + tail.map_or(zero, |t| t.c * start.powf(T::one() - t.r) / (t.r - T::one()));
    if obj.eps2 >= mass {
        return Ok(ChernoffResult {
            log_prob: zero,
            s_star: zero,
            bracket: (zero, zero),
            iterations: 0,
            truncated,
        });
    }
    let mut lo = T::lit(S_MIN);
    let mut iterations = 0;
    if obj.derivative(lo) >= zero {
        // Minimizer below the scan floor: bisect linearly on [0, S_MIN].
        let mut a = zero;
        let mut b = lo;
        while b - a > T::lit(1e-10) * b && iterations < 200 {
            let m = (a + b) / T::lit(2.0);
            if obj.derivative(m) < zero {
                a = m;
            } else {
                b = m;
            }
            iterations += 1;
        }
        let s = (a + b) / T::lit(2.0);
        return Ok(ChernoffResult {
            log_prob: obj.value(s),
            s_star: s,
            bracket: (a, b),
            iterations,
            truncated,
        });
    }
    let mut hi = lo * T::lit(10.0);
    while obj.derivative(hi) < zero {
        lo = hi;
        hi = hi * T::lit(10.0);
        if hi > T::lit(S_MAX) || !hi.is_finite() {
            return Err(Error::NoConvergence {
                what: "Chernoff bracket",
                detail: format!("derivative still negative at s = {hi}; last bracket [{lo}, {hi}]"),
            });
        }
    }
    let rel = T::lit(1e-10).max(T::epsilon() * T::lit(16.0));
    while hi / lo - T::one() > rel {
        let m = (lo * hi).sqrt();
        if !(m > lo && m < hi) {
            break;
        }
        if obj.derivative(m) < zero {
            lo = m;
        } else {
            hi = m;
        }
        iterations += 1;
        if iterations > 500 {
            return Err(Error::NoConvergence {
                what: "Chernoff bisection",
                detail: format!("bracket [{lo}, {hi}]"),
            });
        }
    }
    let s = (lo * hi).sqrt();
    Ok(ChernoffResult {
        log_prob: obj.value(s),
        s_star: s,
        bracket: (lo, hi),
        iterations,
        truncated,
    })
}
