//! Non-negative weight functions, their fractional-power integrals, Fourier
//! coefficients on a period, and the cell-wise summability check used for
//! weights on the whole line.

use num_complex::Complex;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate_from_neg_infinity, integrate_pieces, integrate_to_infinity};
use crate::scalar::Real;
use crate::spectrum::interpolate;

const QUAD_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightDomain<T> {
    /// `[0, period)`, extended periodically.
    Periodic { period: T },
    RealLine,
    /// `(0, ∞)`.
    PositiveHalfLine,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind<T> {
    Constant { value: T },
    /// `e^{2at}`.
    Exponential { a: T },
    /// Indicator of `[start, end]`.
    Indicator { start: T, end: T },
    /// Piecewise-linear through `(t, q(t))`, zero outside the table.
    Tabulated { points: Vec<(T, T)> },
    /// `e^{-2·rate·|t|}`.
    TwoSidedExponential { rate: T },
    /// `(1 + t²)^{-power}`.
    PowerDecay { power: T },
    /// `ρ(t) = q(ln t) / t^{2h+1}` on `t > 0`.
    LogPullback { h: T, base: Box<Weight<T>> },
    Scaled { factor: T, base: Box<Weight<T>> },
    Sum(Vec<Weight<T>>),
    /// `q(t · factor)`.
    TimeScaled { factor: T, base: Box<Weight<T>> },
}

/// A non-negative weight `q` together with the domain it lives on.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight<T> {
    domain: WeightDomain<T>,
    kind: WeightKind<T>,
}

/// Integral value with an error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub error: T,
}

fn check_nonneg<T: Real>(name: &'static str, v: T) -> Result<()> {
    if !(v >= T::zero()) || !v.is_finite() {
        return Err(invalid(name, format!("must be finite and non-negative, got {v}")));
    }
    Ok(())
}

impl<T: Real> Weight<T> {
    pub fn constant(value: T, domain: WeightDomain<T>) -> Result<Self> {
        check_nonneg("value", value)?;
        Self::on(domain, WeightKind::Constant { value })
    }

    /// `q(t) = e^{2at}` on `[0, period)`.
    pub fn exponential(a: T, period: T) -> Result<Self> {
        if !a.is_finite() {
            return Err(invalid("a", "must be finite"));
        }
        Self::on(WeightDomain::Periodic { period }, WeightKind::Exponential { a })
    }

    pub fn indicator(start: T, end: T, domain: WeightDomain<T>) -> Result<Self> {
        if !(end > start) {
            return Err(invalid("indicator", format!("empty interval [{start}, {end}]")));
        }
        if let WeightDomain::Periodic { period } = domain {
            if start < T::zero() || end > period {
                return Err(invalid("indicator", "interval must lie inside one period"));
            }
        }
        Self::on(domain, WeightKind::Indicator { start, end })
    }

    pub fn tabulated(points: Vec<(T, T)>, domain: WeightDomain<T>) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("tabulated", "needs at least two points"));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(invalid("tabulated", "abscissae must be strictly increasing"));
        }
        for p in &points {
            check_nonneg("tabulated value", p.1)?;
        }
        Self::on(domain, WeightKind::Tabulated { points })
    }

    pub fn two_sided_exponential(rate: T) -> Result<Self> {
        if !(rate > T::zero()) {
            return Err(invalid("rate", "must be positive"));
        }
        Self::on(WeightDomain::RealLine, WeightKind::TwoSidedExponential { rate })
    }

    pub fn power_decay(power: T) -> Result<Self> {
        if !(power > T::zero()) {
            return Err(invalid("power", "must be positive"));
        }
        Self::on(WeightDomain::RealLine, WeightKind::PowerDecay { power })
    }

    pub fn sum(parts: Vec<Weight<T>>) -> Result<Self> {
        let first = parts.first().ok_or_else(|| invalid("sum", "needs at least one term"))?;
        let domain = first.domain;
        if parts.iter().any(|p| p.domain != domain) {
            return Err(Error::DomainMismatch("summed weights must share a domain".into()));
        }
        Self::on(domain, WeightKind::Sum(parts))
    }

    /// `c · q`.
    pub fn scaled(&self, factor: T) -> Result<Self> {
        check_nonneg("factor", factor)?;
        Self::on(
            self.domain,
            WeightKind::Scaled {
                factor,
                base: Box::new(self.clone()),
            },
        )
    }

    /// Maps a periodic weight on `[0, L)` to `t ↦ q(t L / L')` on `[0, L')`.
    pub fn reparametrize_period(&self, new_period: T) -> Result<Self> {
        let period = self.period().ok_or_else(|| Error::DomainMismatch("weight is not periodic".into()))?;
        if !(new_period > T::zero()) {
            return Err(invalid("period", "must be positive"));
        }
        if period == new_period {
            return Ok(self.clone());
        }
        Self::on(
            WeightDomain::Periodic { period: new_period },
            WeightKind::TimeScaled {
                factor: period / new_period,
                base: Box::new(self.clone()),
            },
        )
    }

    fn on(domain: WeightDomain<T>, kind: WeightKind<T>) -> Result<Self> {
        if let WeightDomain::Periodic { period } = domain {
            if !(period > T::zero()) || !period.is_finite() {
                return Err(invalid("period", format!("must be positive, got {period}")));
            }
        }
        Ok(Self { domain, kind })
    }

    pub fn domain(&self) -> WeightDomain<T> {
        self.domain
    }

    pub fn kind(&self) -> &WeightKind<T> {
        &self.kind
    }

    pub fn period(&self) -> Option<T> {
        match self.domain {
            WeightDomain::Periodic { period } => Some(period),
            _ => None,
        }
    }

    /// `q(t)`; periodic weights are evaluated on their periodic extension and
    /// half-line weights vanish for `t ≤ 0`.
    pub fn eval(&self, t: T) -> T {
        let t = match self.domain {
            WeightDomain::Periodic { period } => t - period * (t / period).floor(),
            WeightDomain::PositiveHalfLine if t <= T::zero() => return T::zero(),
            _ => t,
        };
        match &self.kind {
            WeightKind::Constant { value } => *value,
            WeightKind::Exponential { a } => (T::lit(2.0) * *a * t).exp(),
            WeightKind::Indicator { start, end } => {
                if t >= *start && t <= *end {
                    T::one()
                } else {
                    T::zero()
                }
            }
            WeightKind::Tabulated { points } => interpolate(points, t),
            WeightKind::TwoSidedExponential { rate } => (-T::lit(2.0) * *rate * t.abs()).exp(),
            WeightKind::PowerDecay { power } => (T::one() + t * t).powf(-*power),
            WeightKind::LogPullback { h, base } => {
                base.eval(t.ln()) * t.powf(-(T::lit(2.0) * *h + T::one()))
            }
            WeightKind::Scaled { factor, base } => *factor * base.eval(t),
            WeightKind::Sum(parts) => parts.iter().map(|p| p.eval(t)).sum(),
            WeightKind::TimeScaled { factor, base } => base.eval(t * *factor),
        }
    }

    /// Like [`Weight::eval`] but rejects points outside the domain.
    pub fn try_eval(&self, t: T) -> Result<T> {
        if self.domain == WeightDomain::PositiveHalfLine && t <= T::zero() {
            return Err(Error::DomainMismatch(format!("t = {t} is outside (0, ∞)")));
        }
        Ok(self.eval(t))
    }

    /// Closed hull of the support as `(lo, hi)`; infinite ends are `±∞`.
    pub fn support(&self) -> (T, T) {
        if let WeightDomain::Periodic { period } = self.domain {
            return (T::zero(), period);
        }
        let inf = T::infinity();
        let hull = match &self.kind {
            WeightKind::Constant { value } if *value == T::zero() => (T::zero(), T::zero()),
            WeightKind::Indicator { start, end } => (*start, *end),
            WeightKind::Tabulated { points } => (points[0].0, points[points.len() - 1].0),
            WeightKind::LogPullback { base, .. } => {
                let (lo, hi) = base.support();
                (lo.exp(), hi.exp())
            }
            WeightKind::Scaled { base, .. } => base.support(),
            WeightKind::TimeScaled { factor, base } => {
                let (lo, hi) = base.support();
                (lo / *factor, hi / *factor)
            }
            WeightKind::Sum(parts) => parts
                .iter()
                .map(Weight::support)
                .fold((inf, -inf), |(a, b), (c, d)| (a.min(c), b.max(d))),
            _ => (-inf, inf),
        };
        if self.domain == WeightDomain::PositiveHalfLine {
            (hull.0.max(T::zero()), hull.1)
        } else {
            hull
        }
    }

    /// Points where `q` may fail to be smooth.
    pub fn breakpoints(&self) -> Vec<T> {
        let mut out = match &self.kind {
            WeightKind::Indicator { start, end } => vec![*start, *end],
            WeightKind::Tabulated { points } => points.iter().map(|p| p.0).collect(),
            WeightKind::TwoSidedExponential { .. } => vec![T::zero()],
            WeightKind::LogPullback { base, .. } => base
                .breakpoints()
                .into_iter()
                .map(T::exp)
                .filter(|x| x.is_finite())
                .collect(),
            WeightKind::Scaled { base, .. } => base.breakpoints(),
            WeightKind::TimeScaled { factor, base } => {
                let mut b: Vec<T> = base.breakpoints().into_iter().map(|x| x / *factor).collect();
                if let WeightDomain::Periodic { period } = base.domain {
                    b.push(period / *factor);
                }
                b
            }
            WeightKind::Sum(parts) => parts.iter().flat_map(Weight::breakpoints).collect(),
            _ => Vec::new(),
        };
        out.retain(|x| x.is_finite());
        out.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        out.dedup();
        out
    }

    /// `∫ q(t)^p dt` over the domain (one period for periodic weights).
    /// Zero values of `q` contribute zero for every `p > 0`.
    pub fn integral_power(&self, p: T) -> Result<Integral<T>> {
        if !(p > T::zero()) {
            return Err(invalid("p", "power must be positive"));
        }
        match &self.kind {
            WeightKind::Scaled { factor, base } if base.domain == self.domain => {
                let inner = base.integral_power(p)?;
                let c = factor.powf(p);
                return Ok(Integral {
                    value: c * inner.value,
                    error: c * inner.error,
                });
            }
            WeightKind::Tabulated { points } => return Ok(trapezoid_power(points, p)),
            WeightKind::LogPullback { h, base } => {
                // t = e^x:  ∫ ρ^p dt = ∫ q(x)^p e^{x(1 - (2h+1)p)} dx.
                let slope = T::one() - (T::lit(2.0) * *h + T::one()) * p;
                let f = |x: T| {
                    let q = base.eval(x);
                    if q <= T::zero() {
                        T::zero()
                    } else {
                        q.powf(p) * (slope * x).exp()
                    }
                };
                return integrate_on_line(&f, base.support(), &base.breakpoints(), "log-pullback weight");
            }
            _ => {}
        }
        if self.domain != WeightDomain::PositiveHalfLine {
            // Whole-line constants and exponentials cannot be integrable.
            let divergent = match (&self.domain, &self.kind) {
                (WeightDomain::RealLine, WeightKind::Constant { value }) => *value > T::zero(),
                (WeightDomain::RealLine, WeightKind::Exponential { .. }) => true,
                _ => false,
            };
            if divergent {
                return Err(Error::Divergent("weight is not integrable on the real line".into()));
            }
        }
        let f = |t: T| {
            let q = self.eval(t);
            if q <= T::zero() {
                T::zero()
            } else {
                q.powf(p)
            }
        };
        integrate_on_line(&f, self.support(), &self.breakpoints(), "weight integral")
    }

    /// Normalized Fourier coefficient `(1/L) ∫_0^L q(t) e^{-2πimt/L} dt` when a
    /// closed form is known.
    pub fn fourier_coefficient_exact(&self, m: i64) -> Option<Complex<T>> {
        let period = self.period()?;
        let zero = Complex::new(T::zero(), T::zero());
        let omega = T::TAU() * T::lit(m as f64) / period;
        match &self.kind {
            WeightKind::Constant { value } => Some(if m == 0 { Complex::new(*value, T::zero()) } else { zero }),
            WeightKind::Exponential { a } => {
                let z = Complex::new(T::lit(2.0) * *a, -omega);
                if z.norm() <= T::tolerance_floor() {
                    return Some(Complex::new(T::one(), T::zero()));
                }
                let zl = z * period;
                Some(((zl).exp() - Complex::new(T::one(), T::zero())) / zl)
            }
            WeightKind::Indicator { start, end } => {
                if m == 0 {
                    return Some(Complex::new((*end - *start) / period, T::zero()));
                }
                let e = |t: T| Complex::new(T::zero(), -omega * t).exp();
                Some((e(*end) - e(*start)) / Complex::new(T::zero(), -omega * period))
            }
            WeightKind::Scaled { factor, base } => base.fourier_coefficient_exact(m).map(|c| c * *factor),
            WeightKind::TimeScaled { base, .. } => base.fourier_coefficient_exact(m),
            WeightKind::Sum(parts) => parts
                .iter()
                .map(|p| p.fourier_coefficient_exact(m))
                .try_fold(zero, |acc, c| c.map(|c| acc + c)),
            _ => None,
        }
    }

    /// Fourier coefficients of `q` for `m ∈ [-n, n]` (index `m + n`), exact when a
    /// closed form exists, otherwise by FFT on a midpoint grid of at least `8(2n+1)` points.
    pub fn fourier_coefficients(&self, n: usize) -> Result<Vec<Complex<T>>> {
        self.period()
            .ok_or_else(|| Error::DomainMismatch("Fourier coefficients need a periodic weight".into()))?;
        let exact: Option<Vec<_>> = (-(n as i64)..=n as i64)
            .map(|m| self.fourier_coefficient_exact(m))
            .collect();
        match exact {
            Some(v) => Ok(v),
            None => Ok(fft_coefficients(|t| self.eval(t), self.period().unwrap(), n)),
        }
    }
}

/// Integrates `f` over `support`, splitting at `breaks` and mapping infinite
/// ends onto the unit interval. Non-convergence is reported as divergence.
fn integrate_on_line<T: Real, F: Fn(T) -> T>(f: &F, support: (T, T), breaks: &[T], what: &str) -> Result<Integral<T>> {
    let (lo, hi) = support;
    if !(hi > lo) {
        return Ok(Integral {
            value: T::zero(),
            error: T::zero(),
        });
    }
    let tol = T::lit(QUAD_TOL);
    let inner: Vec<T> = breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
    let anchor_lo = if lo.is_finite() {
        lo
    } else {
        inner.first().copied().unwrap_or_else(T::zero).min(hi) - T::one()
    };
    let anchor_hi = if hi.is_finite() {
        hi
    } else {
        inner.last().copied().unwrap_or_else(T::zero).max(anchor_lo) + T::one()
    };
    let mut pieces = vec![anchor_lo];
    pieces.extend(inner.iter().copied().filter(|b| *b > anchor_lo && *b < anchor_hi));
    pieces.push(anchor_hi);
    for (finite, sign) in [(lo.is_finite(), -T::one()), (hi.is_finite(), T::one())] {
        if !finite && heavy_tail(f, sign) {
            return Err(Error::Divergent(format!("{what}: integrand decays no faster than 1/|t|")));
        }
    }
    let mut parts = vec![integrate_pieces(f, &pieces, tol, tol)];
    if !lo.is_finite() {
        parts.push(integrate_from_neg_infinity(f, anchor_lo, tol, tol));
    }
    if !hi.is_finite() {
        parts.push(integrate_to_infinity(f, anchor_hi, tol, tol));
    }
    let value: T = parts.iter().map(|q| q.value).sum();
    let error: T = parts.iter().map(|q| q.error).sum();
    if parts.iter().any(|q| !q.converged) || !value.is_finite() {
        return Err(Error::Divergent(format!(
            "{what}: quadrature failed to converge (partial value {value}, error {error})"
        )));
    }
    Ok(Integral { value, error })
}

/// Probes the local log-slope of `|f|` far out on one side; a decay no faster
/// than `|t|^{-1}` cannot be integrable.
fn heavy_tail<T: Real, F: Fn(T) -> T>(f: &F, sign: T) -> bool {
    let probes = [1e6, 1e8, 1e10].map(|x| f(sign * T::lit(x)).abs());
    if probes.iter().any(|v| *v <= T::zero() || !v.is_finite()) {
        return false;
    }
    let slope = |a: T, b: T| (b.ln() - a.ln()) / T::lit(100f64.ln());
    slope(probes[0], probes[1]) >= T::lit(-1.001) && slope(probes[1], probes[2]) >= T::lit(-1.001)
}

/// Trapezoid rule on the table nodes, with `|T_h - T_{2h}| / 3` as the error bound.
fn trapezoid_power<T: Real>(points: &[(T, T)], p: T) -> Integral<T> {
    let pw = |q: T| if q <= T::zero() { T::zero() } else { q.powf(p) };
    let rule = |step: usize| {
        let idx: Vec<usize> = (0..points.len()).step_by(step).chain(std::iter::once(points.len() - 1)).collect();
        let mut s = T::zero();
        for w in idx.windows(2) {
            if w[1] == w[0] {
                continue;
            }
            let (a, b) = (points[w[0]], points[w[1]]);
            s = s + T::lit(0.5) * (b.0 - a.0) * (pw(a.1) + pw(b.1));
        }
        s
    };
    let fine = rule(1);
    let coarse = rule(2);
    Integral {
        value: fine,
        error: (fine - coarse).abs() / T::lit(3.0),
    }
}

/// Normalized Fourier coefficients of `f` on `[0, period)` for `m ∈ [-n, n]`.
fn fft_coefficients<T: Real, F: Fn(T) -> T>(f: F, period: T, n: usize) -> Vec<Complex<T>> {
    let grid = (8 * (2 * n + 1)).next_power_of_two();
    let h = period.to_f64_lossy() / grid as f64;
    let mut buf: Vec<Complex64> = (0..grid)
        .map(|j| Complex64::new(f(T::lit((j as f64 + 0.5) * h)).to_f64_lossy(), 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(grid).process(&mut buf);
    (-(n as i64)..=n as i64)
        .map(|m| {
            let idx = m.rem_euclid(grid as i64) as usize;
            // Midpoint grid: shift by half a cell.
            let phase = Complex64::from_polar(1.0, -std::f64::consts::PI * m as f64 / grid as f64);
            let c = buf[idx] * phase / grid as f64;
            Complex::new(T::lit(c.re), T::lit(c.im))
        })
        .collect()
}

/// Fourier coefficients of `√q` with the energy left outside the retained modes.
#[derive(Debug, Clone, PartialEq)]
pub struct SqrtFourierTable<T> {
    /// `coefficients[m + n] = q_m` for `m ∈ [-n, n]`.
    pub coefficients: Vec<Complex<T>>,
    pub n_modes: usize,
    /// `(1/L) ∫ q − Σ_{|m|≤n} |q_m|²`.
    pub parseval_defect: T,
}

impl<T: Real> SqrtFourierTable<T> {
    pub fn get(&self, m: i64) -> Complex<T> {
        self.coefficients[(m + self.n_modes as i64) as usize]
    }
}

/// `q_m = (1/L) ∫_0^L √q(t) e^{-2πimt/L} dt` for `|m| ≤ n_modes`, by FFT on a
/// midpoint grid of at least `8 n_modes` points.
pub fn fourier_coefficients_sqrt_q<T: Real>(w: &Weight<T>, n_modes: usize) -> Result<SqrtFourierTable<T>> {
    let period = w
        .period()
        .ok_or_else(|| Error::DomainMismatch("Fourier coefficients need a periodic weight".into()))?;
    let coefficients = fft_coefficients(|t| w.eval(t).max(T::zero()).sqrt(), period, n_modes);
    let energy: T = coefficients.iter().map(|c| c.norm_sqr()).sum();
    let mean = w.integral_power(T::one())?.value / period;
    Ok(SqrtFourierTable {
        coefficients,
        n_modes,
        parseval_defect: mean - energy,
    })
}

/// `∫ q(t)^{1/r} dt` over the weight's domain.
pub fn integral_q_power<T: Real>(w: &Weight<T>, r: T) -> Result<Integral<T>> {
    if !(r > T::one()) {
        return Err(invalid("r", format!("exponent must exceed 1, got {r}")));
    }
    w.integral_power(r.recip())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SummabilityVerdict {
    Converged,
    Diverged,
    Inconclusive,
}

/// Partial sums `S_J = Σ_{|j|≤J} ‖q‖_{L1(j,j+1)}^{1/r}` for `J = 0..=j_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeminormTrace<T> {
    pub partial_sums: Vec<T>,
    /// Fitted decay exponent of the increments over the last decade, if any.
    pub increment_slope: Option<T>,
    pub verdict: SummabilityVerdict,
}

/// Cell-wise summability functional `|q|_r` with a heuristic verdict: the
/// increments over the last decade of `J` are fitted to a power law; slopes
/// below −1.2 count as summable and slopes above −1.05 as divergent.
pub fn q_r_seminorm<T: Real>(w: &Weight<T>, r: T, j_max: usize) -> Result<SeminormTrace<T>> {
    if !(r > T::one()) {
        return Err(invalid("r", format!("exponent must exceed 1, got {r}")));
    }
    if w.period().is_some() {
        return Err(Error::DomainMismatch("summability check applies to weights on the line".into()));
    }
    if j_max < 10 {
        return Err(invalid("j_max", "window must contain at least ten cells"));
    }
    let inv = r.recip();
    let tol = T::lit(QUAD_TOL);
    let breaks = w.breakpoints();
    let cell = |j: i64| -> Result<T> {
        let a = T::lit(j as f64);
        let b = a + T::one();
        let mut pts = vec![a];
        pts.extend(breaks.iter().copied().filter(|x| *x > a && *x < b));
        pts.push(b);
        let q = integrate_pieces(&|t: T| w.eval(t).max(T::zero()), &pts, tol, tol);
        if !q.converged {
            return Err(Error::NoConvergence {
                what: "cell integral",
                detail: format!("cell ({j}, {})", j + 1),
            });
        }
        Ok(q.value.max(T::zero()).powf(inv))
    };
    let mut sums = Vec::with_capacity(j_max + 1);
    let mut increments = Vec::with_capacity(j_max + 1);
    let mut s = cell(0)?;
    sums.push(s);
    increments.push(s);
    for j in 1..=j_max as i64 {
        let inc = cell(j)? + cell(-j)?;
        s = s + inc;
        sums.push(s);
        increments.push(inc);
    }
    let start = (j_max / 10).max(1);
    let tiny = T::epsilon() * s.abs().max(T::min_positive_value());
    let window: Vec<(T, T)> = (start..=j_max)
        .filter(|&j| increments[j] > tiny)
        .map(|j| (T::from_count(j).ln(), increments[j].ln()))
        .collect();
    if window.len() < 3 {
        return Ok(SeminormTrace {
            partial_sums: sums,
            increment_slope: None,
            verdict: SummabilityVerdict::Converged,
        });
    }
    let slope = least_squares_slope(&window);
    let verdict = if slope < T::lit(-1.2) {
        SummabilityVerdict::Converged
    } else if slope > T::lit(-1.05) {
        SummabilityVerdict::Diverged
    } else {
        SummabilityVerdict::Inconclusive
    };
    Ok(SeminormTrace {
        partial_sums: sums,
        increment_slope: Some(slope),
        verdict,
    })
}

pub(crate) fn least_squares_slope<T: Real>(pts: &[(T, T)]) -> T {
    least_squares(pts).0
}

/// Ordinary least squares `y = slope·x + intercept`.
pub(crate) fn least_squares<T: Real>(pts: &[(T, T)]) -> (T, T) {
    let n = T::from_count(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `ρ(t) = q(ln t) / t^{2h+1}` on `(0, ∞)`.
pub fn log_pullback_weight<T: Real>(q: &Weight<T>, h: T) -> Result<Weight<T>> {
    if !(h > T::zero()) {
        return Err(invalid("h", format!("level must be positive, got {h}")));
    }
    if q.domain() != WeightDomain::RealLine {
        return Err(Error::DomainMismatch("log pull-back needs a weight on the real line".into()));
    }
    Weight::on(
        WeightDomain::PositiveHalfLine,
        WeightKind::LogPullback {
            h,
            base: Box::new(q.clone()),
        },
    )
}
