//! Spectral models: discrete measures on the integers, spectral densities on
//! the line, and the power-law tail constants that drive every asymptotic
//! constant in the crate.

use std::collections::BTreeMap;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::special::gamma;

/// Default symmetric truncation for spectral series.
pub const DEFAULT_TRUNCATION: u64 = 100_000;

/// Power-law tail `|k|^r μ_k → M±` (or `|u|^r m(u) → M±`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailDescriptor<T> {
    pub r: T,
    pub m_minus: T,
    pub m_plus: T,
}

impl<T: Real> TailDescriptor<T> {
    pub fn new(r: T, m_minus: T, m_plus: T) -> Result<Self> {
        if !(r > T::one()) || !r.is_finite() {
            return Err(invalid("r", format!("decay exponent must exceed 1, got {r}")));
        }
        if !(m_minus >= T::zero()) || !(m_plus >= T::zero()) || !m_minus.is_finite() || !m_plus.is_finite() {
            return Err(invalid("m_minus/m_plus", "tail constants must be finite and non-negative"));
        }
        if m_minus + m_plus <= T::zero() {
            return Err(invalid("m_minus/m_plus", "at least one tail constant must be positive"));
        }
        Ok(Self { r, m_minus, m_plus })
    }

    pub fn symmetric(r: T, m: T) -> Result<Self> {
        Self::new(r, m, m)
    }

    pub fn is_symmetric(&self) -> bool {
        self.m_minus == self.m_plus
    }

    /// `M(sign)`: the constant governing the tail on the side of `sign`.
    pub fn constant_for(&self, sign: T) -> T {
        if sign < T::zero() {
            self.m_minus
        } else {
            self.m_plus
        }
    }

    /// `M₋^{1/r} + M₊^{1/r}`.
    pub fn root_sum(&self) -> T {
        let inv = self.r.recip();
        self.m_minus.powf(inv) + self.m_plus.powf(inv)
    }

    /// `(M₋ + M₊) ∫_K^∞ x^{-r} dx`: analytic remainder of a symmetric series truncated at `K`.
    pub fn series_remainder(&self, cutoff: T) -> T {
        (self.m_minus + self.m_plus) * cutoff.powf(T::one() - self.r) / (self.r - T::one())
    }
}

/// Outcome of a truncated series with its analytic remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum<T> {
    pub value: T,
    pub remainder: T,
    /// Set when the partial sums fail a Cauchy test against the declared tail.
    pub divergent: bool,
}

/// Largest deviation of the numeric tail ratio from the declared constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailCheck<T> {
    pub max_relative_deviation: T,
}

impl<T: Real> TailCheck<T> {
    pub fn within(&self, tol: T) -> bool {
        self.max_relative_deviation <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DiscreteModel<T> {
    /// `μ_k = 1/(ω² + (2πk)²)`.
    Bogoliubov { omega: T },
    /// `μ_k = (2π|k|)^{-2m}`, `μ_0 = 0`.
    IntegratedBridge { m: u32 },
    /// Explicit masses for `|k| ≤ radius`; beyond it the tail law `M±|k|^{-r}` is used.
    Table { masses: BTreeMap<i64, T>, radius: i64 },
}

/// Spectral measure `(μ_k)_{k∈Z}` of a 2π-periodic stationary process.
///
/// The same masses describe the 1-periodic parametrization used by the
/// Bogoliubov and integrated-bridge families; only the time axis differs.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteSpectrum<T> {
    model: DiscreteModel<T>,
    tail: TailDescriptor<T>,
    truncation: u64,
}

impl<T: Real> DiscreteSpectrum<T> {
    pub fn model(&self) -> &DiscreteModel<T> {
        &self.model
    }

    pub fn tail(&self) -> TailDescriptor<T> {
        self.tail
    }

    pub fn truncation(&self) -> u64 {
        self.truncation
    }

    pub fn with_truncation(mut self, k_max: u64) -> Result<Self> {
        if k_max < 2 {
            return Err(invalid("truncation", "must be at least 2"));
        }
        self.truncation = k_max;
        Ok(self)
    }

    /// Builds a tabulated spectrum from `(k, μ_k)` pairs.
    pub fn from_table(entries: &[(i64, T)], tail: TailDescriptor<T>) -> Result<Self> {
        let mut masses = BTreeMap::new();
        for &(k, mu) in entries {
            if !(mu >= T::zero()) || !mu.is_finite() {
                return Err(invalid("mass", format!("μ_{k} = {mu} is not a finite non-negative number")));
            }
            if masses.insert(k, mu).is_some() {
                return Err(invalid("mass", format!("index {k} listed twice")));
            }
        }
        let radius = masses.keys().map(|k| k.abs()).max().unwrap_or(0);
        Ok(Self {
            model: DiscreteModel::Table { masses, radius },
            tail,
            truncation: DEFAULT_TRUNCATION,
        })
    }

    /// Spectral mass `μ_k`.
    pub fn mass(&self, k: i64) -> T {
        match &self.model {
            DiscreteModel::Bogoliubov { omega } => {
                let w = T::TAU() * T::lit(k as f64);
                (*omega * *omega + w * w).recip()
            }
            DiscreteModel::IntegratedBridge { m } => {
                if k == 0 {
                    T::zero()
                } else {
                    (T::TAU() * T::lit(k.unsigned_abs() as f64)).powi(-2 * *m as i32)
                }
            }
            DiscreteModel::Table { masses, radius } => {
                if k.abs() <= *radius {
                    masses.get(&k).copied().unwrap_or_else(T::zero)
                } else {
                    let kf = T::lit(k as f64);
                    self.tail.constant_for(kf) * kf.abs().powf(-self.tail.r)
                }
            }
        }
    }

    /// True when `μ_{-k} = μ_k` for every `k` (real-process models).
    pub fn is_even(&self) -> bool {
        match &self.model {
            DiscreteModel::Bogoliubov { .. } | DiscreteModel::IntegratedBridge { .. } => true,
            DiscreteModel::Table { radius, .. } => {
                self.tail.is_symmetric() && (1..=*radius).all(|k| self.mass(k) == self.mass(-k))
            }
        }
    }

    /// Compares `|k|^r μ_k` with `M±` at the ten largest indices below the truncation.
    pub fn verify_tail(&self) -> TailCheck<T> {
        let k_max = self.truncation as i64;
        let mut worst = T::zero();
        for j in 0..10 {
            for sign in [-1i64, 1] {
                let k = sign * (k_max - j);
                let kf = T::lit(k as f64);
                let target = self.tail.constant_for(kf);
                let ratio = kf.abs().powf(self.tail.r) * self.mass(k);
                let dev = if target > T::zero() {
                    ((ratio - target) / target).abs()
                } else {
                    ratio.abs()
                };
                worst = worst.max(dev);
            }
        }
        TailCheck {
            max_relative_deviation: worst,
        }
    }

    fn partial_sum(&self, cutoff: i64) -> T {
        // Smallest terms first.
        let mut sum = T::zero();
        for k in (1..=cutoff).rev() {
            sum = sum + self.mass(k) + self.mass(-k);
        }
        sum + self.mass(0)
    }

    /// `Σ_k μ_k` over `|k| ≤ K_max` with the analytic tail remainder.
    pub fn total_mass(&self) -> SeriesSum<T> {
        let k_max = self.truncation as i64;
        let full = self.partial_sum(k_max);
        let half = self.partial_sum(k_max / 2);
        let kf = T::lit(k_max as f64);
        let remainder = self.tail.series_remainder(kf);
        let predicted = self.tail.series_remainder(T::lit((k_max / 2) as f64)) - remainder;
        let increment = full - half;
        let divergent = !full.is_finite() || increment > T::lit(10.0) * predicted + T::tolerance_floor() * full.abs();
        SeriesSum {
            value: full,
            remainder,
            divergent,
        }
    }
}

/// Bogoliubov process spectrum, `μ_k = 1/(ω² + (2πk)²)`, tail `r = 2`, `M = (2π)^{-2}`.
pub fn bogoliubov_spectrum<T: Real>(omega: T) -> Result<DiscreteSpectrum<T>> {
    if !(omega > T::zero()) || !omega.is_finite() {
        return Err(invalid("omega", format!("must be positive, got {omega}")));
    }
    let m = T::TAU().powi(-2);
    Ok(DiscreteSpectrum {
        model: DiscreteModel::Bogoliubov { omega },
        tail: TailDescriptor::symmetric(T::lit(2.0), m)?,
        truncation: DEFAULT_TRUNCATION,
    })
}

/// Spectrum of the m-times integrated centered Brownian bridge,
/// `μ_k = (2π|k|)^{-2m}`, tail `r = 2m`, `M = (2π)^{-2m}`.
pub fn integrated_bridge_spectrum<T: Real>(m: u32) -> Result<DiscreteSpectrum<T>> {
    if m == 0 {
        return Err(invalid("m", "integration order must be at least 1"));
    }
    let r = T::lit(2.0 * m as f64);
    Ok(DiscreteSpectrum {
        model: DiscreteModel::IntegratedBridge { m },
        tail: TailDescriptor::symmetric(r, T::TAU().powf(-r))?,
        truncation: DEFAULT_TRUNCATION,
    })
}

/// Fractional part `H` of a level `h`, rejecting integers.
pub fn fractional_part<T: Real>(h: T) -> Result<T> {
    if !(h > T::zero()) || !h.is_finite() {
        return Err(invalid("h", format!("level must be positive, got {h}")));
    }
    let frac = h - h.floor();
    if frac <= T::tolerance_floor() || frac >= T::one() - T::tolerance_floor() {
        return Err(invalid("h", format!("level must not be an integer, got {h}")));
    }
    Ok(frac)
}

/// Tail of the level-`h` stationary fractional Ornstein–Uhlenbeck spectrum:
/// `r = 2h + 1`, `M = Γ(2H+1) sin(πH) / (2π)` with `H = {h}`.
pub fn fou_tail<T: Real>(h: T) -> Result<TailDescriptor<T>> {
    let frac = fractional_part(h)?;
    let m = gamma(T::lit(2.0) * frac + T::one()) * (T::PI() * frac).sin() / T::TAU();
    TailDescriptor::symmetric(T::lit(2.0) * h + T::one(), m)
}

/// A spectral density `u ↦ m(u)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Density<T> {
    /// Exact Ornstein–Uhlenbeck density `(1/2π) / (1/4 + u²)` (covariance `e^{-|t|/2}`).
    OuBase,
    /// `u ↦ parent(u) / (u² + level²)`.
    Step { parent: Box<Density<T>>, level: T },
    /// Piecewise-linear table over strictly increasing `u`, zero outside.
    Table { points: Vec<(T, T)> },
    Constant(T),
}

impl<T: Real> Density<T> {
    pub fn eval(&self, u: T) -> T {
        match self {
            Density::OuBase => T::TAU().recip() / (T::lit(0.25) + u * u),
            Density::Step { parent, level } => parent.eval(u) / (u * u + *level * *level),
            Density::Table { points } => interpolate(points, u),
            Density::Constant(c) => *c,
        }
    }

    /// `(c, [p_1, ..., p_n])` when the density equals `c Π 1/(u² + p_j²)`.
    pub fn rational_form(&self) -> Option<(T, Vec<T>)> {
        match self {
            Density::OuBase => Some((T::TAU().recip(), vec![T::lit(0.5)])),
            Density::Constant(c) => Some((*c, Vec::new())),
            Density::Step { parent, level } => {
                let (c, mut poles) = parent.rational_form()?;
                poles.push(level.abs());
                Some((c, poles))
            }
            Density::Table { .. } => None,
        }
    }

    pub fn is_even(&self) -> bool {
        match self {
            Density::OuBase | Density::Constant(_) => true,
            Density::Step { parent, .. } => parent.is_even(),
            Density::Table { points } => {
                let n = points.len();
                (0..n).all(|i| {
                    let (u, m) = points[i];
                    let (v, w) = points[n - 1 - i];
                    (u + v).abs() <= T::tolerance_floor() * u.abs().max(T::one()) && m == w
                })
            }
        }
    }
}

pub(crate) fn interpolate<T: Real>(points: &[(T, T)], x: T) -> T {
    let (first, last) = match (points.first(), points.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return T::zero(),
    };
    if x < first.0 || x > last.0 {
        return T::zero();
    }
    let idx = points.partition_point(|p| p.0 <= x);
    if idx == 0 {
        return first.1;
    }
    if idx >= points.len() {
        return last.1;
    }
    let (x0, y0) = points[idx - 1];
    let (x1, y1) = points[idx];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// One level of the recursion `μ_h(du) = μ_{h-1}(du)/(u² + h²)`.
pub fn fou_density_step<T: Real>(parent: Density<T>, h: T) -> Density<T> {
    Density::Step {
        parent: Box::new(parent),
        level: h,
    }
}

/// Spectral measure with a density on the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousSpectrum<T> {
    density: Option<Density<T>>,
    tail: TailDescriptor<T>,
}

impl<T: Real> ContinuousSpectrum<T> {
    pub fn with_density(density: Density<T>, tail: TailDescriptor<T>) -> Self {
        Self {
            density: Some(density),
            tail,
        }
    }

    /// A model known only through its tail constants.
    pub fn tail_only(tail: TailDescriptor<T>) -> Self {
        Self { density: None, tail }
    }

    /// Tabulated density from `(u, m(u))` pairs in strictly increasing `u`.
    pub fn from_table(points: Vec<(T, T)>, tail: TailDescriptor<T>) -> Result<Self> {
        if points.len() < 2 {
            return Err(invalid("density_table", "needs at least two points"));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(invalid("density_table", "abscissae must be strictly increasing"));
        }
        if points.iter().any(|p| !(p.1 >= T::zero()) || !p.1.is_finite()) {
            return Err(invalid("density_table", "densities must be finite and non-negative"));
        }
        Ok(Self::with_density(Density::Table { points }, tail))
    }

    pub fn tail(&self) -> TailDescriptor<T> {
        self.tail
    }

    pub fn density(&self) -> Option<&Density<T>> {
        self.density.as_ref()
    }

    pub fn density_available(&self) -> bool {
        self.density.is_some()
    }

    pub fn require_density(&self, what: &'static str) -> Result<&Density<T>> {
        self.density.as_ref().ok_or(Error::TailOnlyModel(what))
    }

    pub fn is_even(&self) -> bool {
        self.tail.is_symmetric() && self.density.as_ref().is_none_or(Density::is_even)
    }

    /// Compares `|u|^r m(u)` with `M±` at ten points on each side of `horizon`.
    pub fn verify_tail(&self, horizon: T) -> Result<TailCheck<T>> {
        let density = self.require_density("tail verification")?;
        let mut worst = T::zero();
        for j in 0..10 {
            for sign in [-T::one(), T::one()] {
                let u = sign * horizon * (T::one() + T::lit(j as f64) / T::lit(10.0));
                let target = self.tail.constant_for(sign);
                let ratio = u.abs().powf(self.tail.r) * density.eval(u);
                let dev = if target > T::zero() {
                    ((ratio - target) / target).abs()
                } else {
                    ratio.abs()
                };
                worst = worst.max(dev);
            }
        }
        Ok(TailCheck {
            max_relative_deviation: worst,
        })
    }
}

/// Stationary fOU model of level `h`. A density is attached when `H = 1/2`
/// (built from the exact OU density by the integer-shift recursion); other
/// levels are tail-only.
pub fn fou_spectrum<T: Real>(h: T) -> Result<ContinuousSpectrum<T>> {
    let tail = fou_tail(h)?;
    let frac = fractional_part(h)?;
    if (frac - T::lit(0.5)).abs() > T::tolerance_floor() {
        return Ok(ContinuousSpectrum::tail_only(tail));
    }
    let mut density = Density::OuBase;
    let mut level = T::lit(1.5);
    while level <= h + T::tolerance_floor() {
        density = fou_density_step(density, level);
        level = level + T::one();
    }
    Ok(ContinuousSpectrum::with_density(density, tail))
}
