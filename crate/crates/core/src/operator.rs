//! Finite matrices whose spectra approximate the weighted covariance operator
//! `f ↦ √q · K_X(√q f)` in the periodic, continuous and sequence settings.

use std::io::Write;

use faer::{c64, Mat};
use num_complex::Complex;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::quadrature::{gauss_legendre, integrate_pieces, integrate_to_infinity};
use crate::scalar::Real;
use crate::spectrum::{ContinuousSpectrum, Density, DiscreteModel, DiscreteSpectrum};
use crate::weights::{Weight, WeightDomain};

/// Default Fourier mode cutoff for the periodic setting.
pub const DEFAULT_MODE_CUTOFF: usize = 4096;
const PANEL_ORDER: usize = 8;
const TAIL_MASS_FRACTION: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Setting {
    PeriodicGalerkin,
    Nystrom,
    Sequence,
}

impl Setting {
    fn tag(self) -> u32 {
        match self {
            Setting::PeriodicGalerkin => 0,
            Setting::Nystrom => 1,
            Setting::Sequence => 2,
        }
    }
}

/// Measure on which the operator acts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    /// `dt / L` over one period.
    Normalized,
    Lebesgue,
    Counting,
}

#[derive(Debug, Clone)]
pub enum Entries {
    Real(Mat<f64>),
    Complex(Mat<c64>),
}

/// How a matrix was obtained.
#[derive(Debug, Clone, Default)]
pub struct DiscretizationMeta {
    /// Mode or index cutoff `K` (matrix indices run over `[-K, K]`).
    pub cutoff: Option<usize>,
    pub nodes: Vec<f64>,
    pub quadrature_weights: Vec<f64>,
    /// `∫ q` discarded by truncating the support.
    pub discarded_mass: f64,
    pub description: String,
}

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    entries: Entries,
    setting: Setting,
    measure: Measure,
    meta: DiscretizationMeta,
}

impl OperatorMatrix {
    /// Wraps a real matrix, checking bit-exact symmetry.
    pub fn from_real(m: Mat<f64>, setting: Setting, measure: Measure, meta: DiscretizationMeta) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(invalid("matrix", "must be square"));
        }
        for i in 0..n {
            for j in 0..i {
                if m[(i, j)].to_bits() != m[(j, i)].to_bits() {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self {
            entries: Entries::Real(m),
            setting,
            measure,
            meta,
        })
    }

    /// Wraps a complex matrix, checking bit-exact Hermitian symmetry.
    pub fn from_complex(m: Mat<c64>, setting: Setting, measure: Measure, meta: DiscretizationMeta) -> Result<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return Err(invalid("matrix", "must be square"));
        }
        for i in 0..n {
            if m[(i, i)].im != 0.0 {
                return Err(Error::NotSymmetric { row: i, col: i });
            }
            for j in 0..i {
                let (a, b) = (m[(i, j)], m[(j, i)]);
                if a.re.to_bits() != b.re.to_bits() || a.im.to_bits() != (-b.im).to_bits() {
                    return Err(Error::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(Self {
            entries: Entries::Complex(m),
            setting,
            measure,
            meta,
        })
    }

    pub fn size(&self) -> usize {
        match &self.entries {
            Entries::Real(m) => m.nrows(),
            Entries::Complex(m) => m.nrows(),
        }
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    pub fn setting(&self) -> Setting {
        self.setting
    }

    pub fn measure(&self) -> Measure {
        self.measure
    }

    pub fn meta(&self) -> &DiscretizationMeta {
        &self.meta
    }

    pub fn is_complex(&self) -> bool {
        matches!(self.entries, Entries::Complex(_))
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        match &self.entries {
            Entries::Real(m) => Complex64::new(m[(i, j)], 0.0),
            Entries::Complex(m) => m[(i, j)],
        }
    }

    pub fn trace(&self) -> f64 {
        (0..self.size()).map(|i| self.get(i, i).re).sum()
    }

    /// Raw dump: `u32` size, `u32` setting tag (`| 0x100` when complex), then the
    /// entries row-major as little-endian `f64` (real and imaginary parts
    /// interleaved for complex matrices).
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.size();
        let n32 = u32::try_from(n).map_err(|_| invalid("matrix", "too large for the binary header"))?;
        let tag = self.setting.tag() | if self.is_complex() { 0x100 } else { 0 };
        out.write_all(&n32.to_le_bytes())?;
        out.write_all(&tag.to_le_bytes())?;
        for i in 0..n {
            for j in 0..n {
                let z = self.get(i, j);
                out.write_all(&z.re.to_le_bytes())?;
                if self.is_complex() {
                    out.write_all(&z.im.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    /// CSV dump for small matrices; complex entries are written as `re+imi`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self.size();
        if n > 512 {
            return Err(invalid("matrix", format!("CSV export is limited to N ≤ 512, got {n}")));
        }
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| {
                    let z = self.get(i, j);
                    if self.is_complex() {
                        format!("{:e}{:+e}i", z.re, z.im)
                    } else {
                        format!("{:e}", z.re)
                    }
                })
                .collect();
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }
}

fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64_lossy()
}

fn require_period_2pi<T: Real>(w: &Weight<T>) -> Result<()> {
    match w.period() {
        Some(p) if (to_f64(p) - std::f64::consts::TAU).abs() <= 1e-12 * std::f64::consts::TAU => Ok(()),
        Some(p) => Err(Error::DomainMismatch(format!(
            "periodic assembly needs a weight of period 2π, got period {p}"
        ))),
        None => Err(Error::DomainMismatch("periodic assembly needs a periodic weight".into())),
    }
}

/// Fourier–Galerkin matrix `A_{kℓ} = √(μ_k μ_ℓ) q̂(k−ℓ)`, `k, ℓ ∈ [-K, K]`, with `q̂`
/// the normalized Fourier coefficients of `q` on `[0, 2π)`.
///
/// Even spectra are assembled in the real basis `{1, √2 cos kt, √2 sin kt}`,
/// which gives a real symmetric matrix with the same eigenvalues.
pub fn assemble_periodic<T: Real>(spec: &DiscreteSpectrum<T>, w: &Weight<T>, k: usize) -> Result<OperatorMatrix> {
    if k == 0 {
        return Err(invalid("K", "mode cutoff must be at least 1"));
    }
    require_period_2pi(w)?;
    let lag = 2 * k;
    let coeffs: Vec<Complex64> = w
        .fourier_coefficients(lag)?
        .into_iter()
        .map(|c| Complex64::new(to_f64(c.re), to_f64(c.im)))
        .collect();
    let qhat = |m: i64| coeffs[(m + lag as i64) as usize];
    let ki = k as i64;
    let size = 2 * k + 1;
    let meta = DiscretizationMeta {
        cutoff: Some(k),
        description: format!("Fourier–Galerkin, modes |k| ≤ {k}"),
        ..Default::default()
    };
    if spec.is_even() {
        let root: Vec<f64> = (0..=ki).map(|j| to_f64(spec.mass(j)).max(0.0).sqrt()).collect();
        let s2 = std::f64::consts::SQRT_2;
        // Layout: 0 → constant, 2j-1 → cos(jt), 2j → sin(jt).
        let entry = |a: usize, b: usize| -> f64 {
            let (ja, ca) = basis_index(a);
            let (jb, cb) = basis_index(b);
            let scale = root[ja as usize] * root[jb as usize];
            let v = match (ja, ca, jb, cb) {
                (0, _, 0, _) => qhat(0).re,
                (0, _, l, true) | (l, true, 0, _) => s2 * qhat(l).re,
                (0, _, l, false) | (l, false, 0, _) => -s2 * qhat(l).im,
                (p, true, l, true) => qhat(p - l).re + qhat(p + l).re,
                (p, false, l, false) => qhat(p - l).re - qhat(p + l).re,
                (p, true, l, false) => -qhat(p + l).im - qhat(l - p).im,
                (p, false, l, true) => -qhat(l + p).im - qhat(p - l).im,
            };
            scale * v
        };
        let mut m = Mat::<f64>::zeros(size, size);
        for i in 0..size {
            for j in i..size {
                let v = entry(i, j);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        OperatorMatrix::from_real(m, Setting::PeriodicGalerkin, Measure::Normalized, meta)
    } else {
        let root: Vec<f64> = (-ki..=ki).map(|j| to_f64(spec.mass(j)).max(0.0).sqrt()).collect();
        let mut m = Mat::<c64>::zeros(size, size);
        for i in 0..size {
            m[(i, i)] = c64::new(root[i] * root[i] * qhat(0).re, 0.0);
            for j in i + 1..size {
                let v = qhat(i as i64 - j as i64) * (root[i] * root[j]);
                m[(i, j)] = v;
                m[(j, i)] = v.conj();
            }
        }
        OperatorMatrix::from_complex(m, Setting::PeriodicGalerkin, Measure::Normalized, meta)
    }
}

fn basis_index(a: usize) -> (i64, bool) {
    if a == 0 {
        (0, true)
    } else {
        (a.div_ceil(2) as i64, a % 2 == 1)
    }
}

/// Stationary covariance `s ↦ K_X(s)`.
pub trait CovarianceKernel: Sync {
    fn eval(&self, s: f64) -> Complex64;

    /// True when `K_X` is real (even spectrum).
    fn is_real(&self) -> bool;

    /// Period of `K_X`, if it is periodic.
    fn period(&self) -> Option<f64>;
}

/// Kernel of a discrete spectrum laid out on period `L`:
/// `K(s) = Σ_k μ_k e^{2πiks/L}`.
pub struct PeriodicKernel {
    form: PeriodicForm,
    period: f64,
    even: bool,
}

enum PeriodicForm {
    Bogoliubov { omega: f64 },
    Bridge { m: u32, bernoulli: Vec<f64> },
    Grid { values: Vec<Complex64> },
}

const KERNEL_GRID: usize = 1 << 16;

impl PeriodicKernel {
    pub fn new<T: Real>(spec: &DiscreteSpectrum<T>, period: f64) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(invalid("period", "must be positive"));
        }
        let form = match spec.model() {
            DiscreteModel::Bogoliubov { omega } => PeriodicForm::Bogoliubov { omega: to_f64(*omega) },
            DiscreteModel::IntegratedBridge { m } => PeriodicForm::Bridge {
                m: *m,
                bernoulli: bernoulli_numbers(2 * *m as usize),
            },
            DiscreteModel::Table { .. } => {
                // Fold the truncated series onto a uniform grid of one period.
                let mut buf = vec![Complex64::new(0.0, 0.0); KERNEL_GRID];
                let kmax = spec.truncation() as i64;
                for k in -kmax..=kmax {
                    let idx = k.rem_euclid(KERNEL_GRID as i64) as usize;
                    buf[idx] += to_f64(spec.mass(k));
                }
                FftPlanner::new().plan_fft_inverse(KERNEL_GRID).process(&mut buf);
                PeriodicForm::Grid { values: buf }
            }
        };
        Ok(Self {
            form,
            period,
            even: spec.is_even(),
        })
    }
}

impl CovarianceKernel for PeriodicKernel {
    fn eval(&self, s: f64) -> Complex64 {
        let u = (s / self.period).rem_euclid(1.0);
        match &self.form {
            PeriodicForm::Bogoliubov { omega } => {
                let w = *omega;
                Complex64::new((w * (u - 0.5)).cosh() / (2.0 * w * (0.5 * w).sinh()), 0.0)
            }
            PeriodicForm::Bridge { m, bernoulli } => {
                let n = 2 * *m as usize;
                let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
                Complex64::new(sign * bernoulli_polynomial(bernoulli, n, u) / factorial(n), 0.0)
            }
            PeriodicForm::Grid { values } => {
                let g = values.len();
                let x = u * g as f64;
                let i = x.floor() as i64;
                let t = x - i as f64;
                let at = |j: i64| values[j.rem_euclid(g as i64) as usize];
                // Catmull–Rom on the periodic grid.
                let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
                let v = p1
                    + (p2 - p0) * (0.5 * t)
                    + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * (0.5 * t * t)
                    + (p1 * 3.0 - p0 - p2 * 3.0 + p3) * (0.5 * t * t * t);
                if self.even {
                    Complex64::new(v.re, 0.0)
                } else {
                    v
                }
            }
        }
    }

    fn is_real(&self) -> bool {
        self.even
    }

    fn period(&self) -> Option<f64> {
        Some(self.period)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// `B_0 .. B_n` with `B_1 = -1/2`.
fn bernoulli_numbers(n: usize) -> Vec<f64> {
    let mut b = vec![0.0; n + 1];
    b[0] = 1.0;
    for m in 1..=n {
        let s: f64 = (0..m).map(|k| binomial(m + 1, k) * b[k]).sum();
        b[m] = -s / (m + 1) as f64;
    }
    b
}

fn bernoulli_polynomial(b: &[f64], n: usize, x: f64) -> f64 {
    (0..=n).map(|k| binomial(n, k) * b[k] * x.powi((n - k) as i32)).sum()
}

/// Covariance of a process with a spectral density on the real line,
/// `K(s) = ∫ e^{ius} m(u) du`.
pub struct ContinuousKernel {
    form: ContinuousForm,
    even: bool,
}

enum ContinuousForm {
    /// `Σ_j a_j e^{-c_j |s|}`.
    Exponentials(Vec<(f64, f64)>),
    Table(Vec<(f64, f64)>),
}

impl ContinuousKernel {
    pub fn new<T: Real>(spec: &ContinuousSpectrum<T>) -> Result<Self> {
        let density = spec.require_density("the covariance kernel")?;
        let form = match density.rational_form() {
            Some((_, poles)) if poles.is_empty() => {
                return Err(Error::Divergent("a constant spectral density has no covariance function".into()))
            }
            Some((c, poles)) => {
                let c = to_f64(c);
                let poles: Vec<f64> = poles.into_iter().map(to_f64).collect();
                let mut terms = Vec::with_capacity(poles.len());
                for (j, &cj) in poles.iter().enumerate() {
                    let mut a = 1.0;
                    for (i, &ci) in poles.iter().enumerate() {
                        if i != j {
                            let d = ci * ci - cj * cj;
                            if d == 0.0 {
                                return Err(invalid("density", "repeated poles are not supported"));
                            }
                            a /= d;
                        }
                    }
                    terms.push((c * a * std::f64::consts::PI / cj, cj));
                }
                ContinuousForm::Exponentials(terms)
            }
            None => match density {
                Density::Table { points } => {
                    ContinuousForm::Table(points.iter().map(|&(u, m)| (to_f64(u), to_f64(m))).collect())
                }
                _ => return Err(invalid("density", "no kernel representation")),
            },
        };
        Ok(Self {
            form,
            even: spec.is_even(),
        })
    }
}

impl CovarianceKernel for ContinuousKernel {
    fn eval(&self, s: f64) -> Complex64 {
        match &self.form {
            ContinuousForm::Exponentials(terms) => {
                Complex64::new(terms.iter().map(|&(a, c)| a * (-c * s.abs()).exp()).sum(), 0.0)
            }
            ContinuousForm::Table(points) => {
                // Exact transform of the piecewise-linear interpolant.
                let mut acc = Complex64::new(0.0, 0.0);
                for w in points.windows(2) {
                    let ((u0, y0), (u1, y1)) = (w[0], w[1]);
                    acc += linear_piece_transform(u0, y0, u1, y1, s);
                }
                if self.even {
                    Complex64::new(acc.re, 0.0)
                } else {
                    acc
                }
            }
        }
    }

    fn is_real(&self) -> bool {
        self.even
    }

    fn period(&self) -> Option<f64> {
        None
    }
}

/// `∫_{u0}^{u1} (y0 + (y1-y0)(u-u0)/(u1-u0)) e^{ius} du`.
fn linear_piece_transform(u0: f64, y0: f64, u1: f64, y1: f64, s: f64) -> Complex64 {
    let h = u1 - u0;
    if (s * h).abs() < 1e-4 {
        // Short panel: two-point Gauss is exact enough for the smooth factor.
        let g = 0.5 / 3f64.sqrt();
        let mut acc = Complex64::new(0.0, 0.0);
        for x in [0.5 - g, 0.5 + g] {
            let u = u0 + x * h;
            acc += Complex64::from_polar(1.0, u * s) * (y0 + (y1 - y0) * x) * (0.5 * h);
        }
        return acc;
    }
    let i = Complex64::new(0.0, 1.0);
    let e0 = Complex64::from_polar(1.0, u0 * s);
    let e1 = Complex64::from_polar(1.0, u1 * s);
    let slope = (y1 - y0) / h;
    // ∫ (a + b u') e^{is(u0+u')} du' over [0, h].
    (e1 * y1 - e0 * y0) / (i * s) - (e1 - e0) * slope / (i * s * i * s)
}

/// Value of a discrete-spectrum kernel together with the bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue<T> {
    pub value: Complex<T>,
    pub remainder: T,
}

/// `K_X(s) = Σ_{|k| ≤ K_max} μ_k e^{2πiks}` in the 1-periodic layout, with the
/// analytic bound `Σ_{|k| > K_max} μ_k` on the omitted terms.
pub fn kernel_from_discrete<T: Real>(spec: &DiscreteSpectrum<T>, s: T) -> KernelValue<T> {
    let kmax = spec.truncation() as i64;
    let mut acc = Complex::new(T::zero(), T::zero());
    for k in (1..=kmax).rev() {
        let phase = T::TAU() * T::lit(k as f64) * s;
        let (sin, cos) = phase.sin_cos();
        let (mp, mm) = (spec.mass(k), spec.mass(-k));
        acc = acc + Complex::new((mp + mm) * cos, (mp - mm) * sin);
    }
    acc = acc + Complex::new(spec.mass(0), T::zero());
    KernelValue {
        value: acc,
        remainder: spec.tail().series_remainder(T::lit(kmax as f64)),
    }
}

/// Quadrature rule used by a Nyström assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct NystromGrid {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub discarded_mass: f64,
    pub measure: Measure,
}

/// Composite Gauss–Legendre rule on the effective support of `w`, with panels
/// aligned to its breakpoints. Infinite supports are cut where the discarded
/// `∫ q` falls below `10⁻⁸` of the total.
pub fn nystrom_grid<T: Real>(w: &Weight<T>, n: usize) -> Result<NystromGrid> {
    if n == 0 {
        return Err(invalid("N", "grid size must be positive"));
    }
    let (mut lo, mut hi) = w.support();
    let (lo_t, hi_t) = (to_f64(lo), to_f64(hi));
    let mut discarded = 0.0;
    let measure = match w.domain() {
        WeightDomain::Periodic { .. } => Measure::Normalized,
        _ => Measure::Lebesgue,
    };
    if !(hi_t > lo_t) {
        let nodes: Vec<f64> = (0..n).map(|i| i as f64).collect();
        return Ok(NystromGrid {
            weights: vec![0.0; n],
            nodes,
            discarded_mass: 0.0,
            measure,
        });
    }
    if !lo_t.is_finite() || !hi_t.is_finite() {
        let total = to_f64(w.integral_power(T::one())?.value);
        let q = |t: f64| to_f64(w.eval(T::lit(t)));
        let tail = |cut: f64| {
            let mut m = 0.0;
            if !hi_t.is_finite() {
                m += integrate_to_infinity(q, cut, 1e-16, 1e-10).value;
            }
            if !lo_t.is_finite() {
                m += integrate_to_infinity(|t| q(-t), cut, 1e-16, 1e-10).value;
            }
            m
        };
        let mut cut = 1.0f64;
        let anchor = w
            .breakpoints()
            .iter()
            .map(|b| to_f64(*b).abs())
            .fold(0.0, f64::max);
        cut = cut.max(anchor + 1.0);
        while tail(cut) > TAIL_MASS_FRACTION * total {
            cut *= 2.0;
            if cut > 1e12 {
                return Err(Error::Divergent("weight mass does not concentrate on a bounded window".into()));
            }
        }
        discarded = tail(cut);
        if !lo_t.is_finite() {
            lo = T::lit(-cut);
        }
        if !hi_t.is_finite() {
            hi = T::lit(cut);
        }
    }
    let (lo, hi) = (to_f64(lo), to_f64(hi));
    let mut breaks = vec![lo];
    breaks.extend(w.breakpoints().into_iter().map(to_f64).filter(|b| *b > lo && *b < hi));
    breaks.push(hi);
    breaks.dedup();
    let order = PANEL_ORDER.min(n);
    let panels = n.div_ceil(order).max(breaks.len() - 1);
    let length = hi - lo;
    // Panels per segment, proportional to length, at least one each.
    let segs = breaks.len() - 1;
    let mut counts: Vec<usize> = breaks
        .windows(2)
        .map(|s| (((s[1] - s[0]) / length) * panels as f64).floor().max(1.0) as usize)
        .collect();
    let mut assigned: usize = counts.iter().sum();
    let mut i = 0;
    while assigned < panels {
        let widest = (0..segs)
            .max_by(|&a, &b| {
                let wa = (breaks[a + 1] - breaks[a]) / counts[a] as f64;
                let wb = (breaks[b + 1] - breaks[b]) / counts[b] as f64;
                wa.partial_cmp(&wb).unwrap().then(b.cmp(&a))
            })
            .unwrap_or(i % segs);
        counts[widest] += 1;
        assigned += 1;
        i += 1;
    }
    let (x, wt) = gauss_legendre(order);
    let scale = if measure == Measure::Normalized { 1.0 / length } else { 1.0 };
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for (s, &count) in breaks.windows(2).zip(&counts) {
        let h = (s[1] - s[0]) / count as f64;
        for p in 0..count {
            let a = s[0] + p as f64 * h;
            for (xi, wi) in x.iter().zip(&wt) {
                nodes.push(a + 0.5 * h * (xi + 1.0));
                weights.push(0.5 * h * wi * scale);
            }
        }
    }
    Ok(NystromGrid {
        nodes,
        weights,
        discarded_mass: discarded,
        measure,
    })
}

/// Nyström matrix `B_{ij} = √(w_i q(t_i)) K_X(t_i − t_j) √(w_j q(t_j))` on a
/// composite Gauss–Legendre rule of about `n` nodes (rounded up to whole panels).
///
/// Periodic weights are integrated over one period against `dt/L`; other
/// weights against Lebesgue measure.
pub fn assemble_nystrom<T: Real, K: CovarianceKernel + ?Sized>(kernel: &K, w: &Weight<T>, n: usize) -> Result<OperatorMatrix> {
    if let (Some(pw), Some(pk)) = (w.period(), kernel.period()) {
        let pw = to_f64(pw);
        if (pw - pk).abs() > 1e-12 * pk {
            return Err(Error::DomainMismatch(format!(
                "weight period {pw} differs from kernel period {pk}"
            )));
        }
    }
    let grid = nystrom_grid(w, n)?;
    let size = grid.nodes.len();
    let scale: Vec<f64> = grid
        .nodes
        .iter()
        .zip(&grid.weights)
        .map(|(&t, &wt)| (wt * to_f64(w.eval(T::lit(t))).max(0.0)).sqrt())
        .collect();
    let meta = DiscretizationMeta {
        cutoff: None,
        description: format!("Nyström, {size} Gauss–Legendre nodes"),
        discarded_mass: grid.discarded_mass,
        nodes: grid.nodes.clone(),
        quadrature_weights: grid.weights.clone(),
    };
    let t = &grid.nodes;
    if kernel.is_real() {
        let mut m = Mat::<f64>::zeros(size, size);
        for i in 0..size {
            for j in i..size {
                let v = if scale[i] == 0.0 || scale[j] == 0.0 {
                    0.0
                } else {
                    scale[i] * kernel.eval(t[i] - t[j]).re * scale[j]
                };
                check_finite(v)?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        OperatorMatrix::from_real(m, Setting::Nystrom, grid.measure, meta)
    } else {
        let mut m = Mat::<c64>::zeros(size, size);
        for i in 0..size {
            for j in i..size {
                let v = if scale[i] == 0.0 || scale[j] == 0.0 {
                    c64::new(0.0, 0.0)
                } else {
                    kernel.eval(t[i] - t[j]) * (scale[i] * scale[j])
                };
                check_finite(v.re)?;
                check_finite(v.im)?;
                if i == j {
                    m[(i, i)] = c64::new(v.re, 0.0);
                } else {
                    m[(i, j)] = v;
                    m[(j, i)] = v.conj();
                }
            }
        }
        OperatorMatrix::from_complex(m, Setting::Nystrom, grid.measure, meta)
    }
}

fn check_finite(v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite("kernel evaluation"))
    }
}

/// Result of grid doubling until the leading eigenvalues settle.
#[derive(Debug, Clone)]
pub struct RefinedNystrom {
    pub matrix: OperatorMatrix,
    pub top_relative_change: f64,
    pub converged: bool,
}

/// Doubles the Nyström grid from `n0` until the top `top` eigenvalues move less
/// than `rel_tol` relatively, or `n_max` is reached.
pub fn assemble_nystrom_refined<T: Real, K: CovarianceKernel + ?Sized>(
    kernel: &K,
    w: &Weight<T>,
    n0: usize,
    n_max: usize,
    top: usize,
    rel_tol: f64,
) -> Result<RefinedNystrom> {
    let mut n = n0.max(PANEL_ORDER);
    let mut matrix = assemble_nystrom(kernel, w, n)?;
    let mut prev = crate::eigensolve::eigenvalues(&matrix)?.values;
    loop {
        if 2 * n > n_max {
            return Ok(RefinedNystrom {
                matrix,
                top_relative_change: f64::INFINITY,
                converged: false,
            });
        }
        n *= 2;
        let next_matrix = assemble_nystrom(kernel, w, n)?;
        let next = crate::eigensolve::eigenvalues(&next_matrix)?.values;
        let lead = next.first().copied().unwrap_or(0.0);
        let change = prev
            .iter()
            .zip(&next)
            .take(top)
            .filter(|(_, b)| **b > 1e-12 * lead)
            .map(|(a, b)| ((a - b) / b).abs())
            .fold(0.0, f64::max);
        matrix = next_matrix;
        prev = next;
        if change < rel_tol {
            return Ok(RefinedNystrom {
                matrix,
                top_relative_change: change,
                converged: true,
            });
        }
    }
}

/// Square-summable coefficient sequence `(a_m)` of the moving average
/// `U_k = Σ_m a_m X_{k−m}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSequence {
    /// Index of `values[0]`.
    pub offset: i64,
    pub values: Vec<f64>,
    /// `Σ a_m²` left out of `values` (zero for finitely supported sequences).
    pub omitted_energy: f64,
}

impl CoefficientSequence {
    pub fn finite(offset: i64, values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergent("coefficient sequence has non-finite entries".into()));
        }
        Ok(Self {
            offset,
            values,
            omitted_energy: 0.0,
        })
    }

    /// `a_m = amplitude (1+|m|)^{-power}` for `|m| ≤ cutoff`; needs `power > 1/2`.
    pub fn power_decay(amplitude: f64, power: f64, cutoff: usize) -> Result<Self> {
        if !(power > 0.5) {
            return Err(Error::Divergent(format!(
                "(1+|m|)^-{power} is not square-summable"
            )));
        }
        let c = cutoff as i64;
        let values = (-c..=c).map(|m| amplitude * (1.0 + m.abs() as f64).powf(-power)).collect();
        // Σ_{j > c+1} j^{-2p} ≤ ∫_{c+1}^∞ x^{-2p} dx, twice for both sides.
        let b = cutoff as f64 + 1.0;
        let omitted = 2.0 * amplitude * amplitude * b.powf(1.0 - 2.0 * power) / (2.0 * power - 1.0);
        Ok(Self {
            offset: -c,
            values,
            omitted_energy: omitted,
        })
    }

    /// `ρ(n) = Σ_m a_m a_{m+n}` for `|n| ≤ max_lag` (index `n + max_lag`).
    pub fn autocovariance(&self, max_lag: usize) -> Vec<f64> {
        let len = self.values.len();
        let mut out = vec![0.0; 2 * max_lag + 1];
        if len == 0 {
            return out;
        }
        if len <= 512 {
            for n in 0..=max_lag.min(len - 1) {
                let s: f64 = (0..len - n).map(|m| self.values[m] * self.values[m + n]).sum();
                out[max_lag + n] = s;
                out[max_lag - n] = s;
            }
            return out;
        }
        let size = (2 * len).next_power_of_two();
        let mut buf: Vec<Complex64> = self
            .values
            .iter()
            .map(|&v| Complex64::new(v, 0.0))
            .chain(std::iter::repeat(Complex64::new(0.0, 0.0)))
            .take(size)
            .collect();
        let mut planner = FftPlanner::new();
        planner.plan_fft_forward(size).process(&mut buf);
        for z in &mut buf {
            *z = Complex64::new(z.norm_sqr(), 0.0);
        }
        planner.plan_fft_inverse(size).process(&mut buf);
        for n in 0..=max_lag.min(len - 1) {
            let s = buf[n].re / size as f64;
            out[max_lag + n] = s;
            out[max_lag - n] = s;
        }
        out
    }
}

/// `d_k = d± |k|^{-p}` for `0 < |k| ≤ k_max`, `d_0 = 0` (index `k + k_max`).
pub fn power_weights(p: f64, d_minus: f64, d_plus: f64, k_max: usize) -> Vec<f64> {
    let k = k_max as i64;
    (-k..=k)
        .map(|j| match j.cmp(&0) {
            std::cmp::Ordering::Less => d_minus * (j.abs() as f64).powf(-p),
            std::cmp::Ordering::Equal => 0.0,
            std::cmp::Ordering::Greater => d_plus * (j as f64).powf(-p),
        })
        .collect()
}

/// Covariance matrix `C_{jk} = d_j d_k ρ(k−j)` of `Z_k = d_k U_k`, `j, k ∈ [-K, K]`.
/// `d` holds `d_k` at index `k + K`.
pub fn assemble_sequence(a: &CoefficientSequence, d: &[f64], k: usize) -> Result<OperatorMatrix> {
    let size = 2 * k + 1;
    if d.len() != size {
        return Err(invalid("d", format!("expected {size} weights for |k| ≤ {k}, got {}", d.len())));
    }
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("weight sequence"));
    }
    if !a.omitted_energy.is_finite() {
        return Err(Error::Divergent("coefficient sequence is not square-summable".into()));
    }
    let rho = a.autocovariance(2 * k);
    let lag = 2 * k as i64;
    let mut m = Mat::<f64>::zeros(size, size);
    for i in 0..size {
        for j in i..size {
            let v = d[i] * d[j] * rho[(j as i64 - i as i64 + lag) as usize];
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    let meta = DiscretizationMeta {
        cutoff: Some(k),
        description: format!("moving-average covariance, |k| ≤ {k}"),
        ..Default::default()
    };
    OperatorMatrix::from_real(m, Setting::Sequence, Measure::Counting, meta)
}

/// Trace identity helper: `∫ q(t) dt · K_X(0)` by adaptive quadrature, in the
/// measure the Nyström assembly uses.
pub fn trace_reference<T: Real, K: CovarianceKernel + ?Sized>(kernel: &K, w: &Weight<T>) -> Result<f64> {
    let k0 = kernel.eval(0.0).re;
    let mass = match w.period() {
        Some(p) => {
            let p = to_f64(p);
            let mut breaks = vec![0.0];
            breaks.extend(w.breakpoints().into_iter().map(to_f64).filter(|b| *b > 0.0 && *b < p));
            breaks.push(p);
            integrate_pieces(&|t: f64| to_f64(w.eval(T::lit(t))), &breaks, 1e-14, 1e-13).value / p
        }
        None => to_f64(w.integral_power(T::one())?.value),
    };
    Ok(mass * k0)
}
