//! Full-spectrum solves of assembled operators, power-law tail fits and the
//! singular-number distribution functional.

use std::io::Write;

use faer::{Mat, Side};

use crate::error::{invalid, Error, Result};
use crate::operator::{Entries, OperatorMatrix};
use crate::scalar::Real;
use crate::weights::least_squares;

const CLIP: f64 = 1e-14;
const NEGATIVITY_TOLERANCE: f64 = 1e-10;

/// Non-increasing, non-negative eigenvalue sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSequence<T> {
    pub values: Vec<T>,
    /// Size of the discretization the values came from; fit windows must stay
    /// within its first quarter.
    pub trusted_size: usize,
    pub source: String,
}

impl<T: Real> EigenSequence<T> {
    /// Wraps an arbitrary sequence (sorted and clipped here).
    pub fn from_values(mut values: Vec<T>, source: impl Into<String>) -> Self {
        values.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        let top = values.first().copied().unwrap_or_else(T::zero);
        let floor = T::lit(CLIP) * top.max(T::zero());
        for v in &mut values {
            if *v < floor {
                *v = T::zero();
            }
        }
        let trusted_size = values.len();
        Self {
            values,
            trusted_size,
            source: source.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `λ_n`, 1-based.
    pub fn get(&self, n: usize) -> T {
        self.values[n - 1]
    }

    /// CSV with columns `n, lambda_n, n_pow_r_lambda`.
    pub fn write_csv<W: Write>(&self, r: T, mut out: W) -> Result<()> {
        writeln!(out, "n,lambda_n,n_pow_r_lambda")?;
        for (i, v) in self.values.iter().enumerate() {
            let n = T::from_count(i + 1);
            writeln!(out, "{},{:e},{:e}", i + 1, v.to_f64_lossy(), (n.powf(r) * *v).to_f64_lossy())?;
        }
        Ok(())
    }
}

fn check_entries(mat: &OperatorMatrix) -> Result<()> {
    let finite = match mat.entries() {
        Entries::Real(m) => m.col_iter().all(|c| c.iter().all(|v| v.is_finite())),
        Entries::Complex(m) => m.col_iter().all(|c| c.iter().all(|v| v.re.is_finite() && v.im.is_finite())),
    };
    if finite {
        Ok(())
    } else {
        Err(Error::NonFinite("operator matrix"))
    }
}

fn finish(mut raw: Vec<f64>, mat: &OperatorMatrix) -> Result<EigenSequence<f64>> {
    raw.sort_by(|a, b| b.total_cmp(a));
    let max = raw.first().copied().unwrap_or(0.0);
    let min = raw.last().copied().unwrap_or(0.0);
    if min < -NEGATIVITY_TOLERANCE * max.abs() {
        return Err(Error::Indefinite { min, max });
    }
    let mut seq = EigenSequence::from_values(raw, mat.meta().description.clone());
    seq.trusted_size = mat.size();
    Ok(seq)
}

/// All eigenvalues of a symmetric/Hermitian operator matrix, non-increasing,
/// with values below `10⁻¹⁴ λ₁` clipped to zero.
pub fn eigenvalues(mat: &OperatorMatrix) -> Result<EigenSequence<f64>> {
    check_entries(mat)?;
    if mat.size() == 0 {
        return Ok(EigenSequence::from_values(Vec::new(), mat.meta().description.clone()));
    }
    let raw = match mat.entries() {
        Entries::Real(m) => m.self_adjoint_eigenvalues(Side::Lower),
        Entries::Complex(m) => m.self_adjoint_eigenvalues(Side::Lower),
    }
    .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    finish(raw, mat)
}

/// Eigenvalues (non-increasing) and matching orthonormal eigenvectors (columns)
/// of a real operator matrix. Eigenvalues are not clipped.
pub fn eigen_decomposition(mat: &OperatorMatrix) -> Result<(Vec<f64>, Mat<f64>)> {
    check_entries(mat)?;
    let m = match mat.entries() {
        Entries::Real(m) => m,
        Entries::Complex(_) => return Err(invalid("matrix", "eigenvectors are only provided for real matrices")),
    };
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
    let n = m.nrows();
    let s = evd.S().column_vector();
    let u = evd.U();
    let values: Vec<f64> = (0..n).rev().map(|i| s[i]).collect();
    let vectors = Mat::from_fn(n, n, |i, j| u[(i, n - 1 - j)]);
    Ok((values, vectors))
}

/// 1-based inclusive index range `[n1, n2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct Window {
    pub n1: usize,
    pub n2: usize,
}

impl Window {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 <= n1 {
            return Err(invalid("window", format!("need 1 ≤ n1 < n2, got [{n1}, {n2}]")));
        }
        Ok(Self { n1, n2 })
    }

    /// `[N/20, N/4]` for a discretization of size `N`.
    pub fn default_for(size: usize) -> Result<Self> {
        Self::new((size / 20).max(1), size / 4)
    }

    fn check<T>(&self, eig: &EigenSequence<T>) -> Result<()> {
        if self.n2 > eig.values.len() {
            return Err(invalid("window", format!("n2 = {} exceeds the {} available values", self.n2, eig.values.len())));
        }
        if 4 * self.n2 > eig.trusted_size {
            return Err(invalid(
                "window",
                format!("n2 = {} is beyond a quarter of the discretization size {}", self.n2, eig.trusted_size),
            ));
        }
        Ok(())
    }
}

/// Least-squares line through `(ln n, ln λ_n)` on a window.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PowerLawFit<T> {
    pub r_hat: T,
    pub c_hat: T,
    pub window: Window,
    /// `max |λ_n n^{r̂} / Ĉ − 1|` over the window.
    pub residual: T,
}

pub fn fit_power_law<T: Real>(eig: &EigenSequence<T>, window: Window) -> Result<PowerLawFit<T>> {
    window.check(eig)?;
    let mut pts = Vec::with_capacity(window.n2 - window.n1 + 1);
    for n in window.n1..=window.n2 {
        let v = eig.get(n);
        if !(v > T::zero()) {
            return Err(invalid("window", format!("λ_{n} is zero; the fit needs positive values")));
        }
        pts.push((T::from_count(n).ln(), v.ln()));
    }
    let (slope, intercept) = least_squares(&pts);
    let r_hat = -slope;
    let c_hat = intercept.exp();
    let residual = (window.n1..=window.n2)
        .map(|n| (eig.get(n) * T::from_count(n).powf(r_hat) / c_hat - T::one()).abs())
        .fold(T::zero(), T::max);
    Ok(PowerLawFit {
        r_hat,
        c_hat,
        window,
        residual,
    })
}

/// Geometric mean of `λ_n n^r` over a window: the prefactor with the exponent held fixed.
pub fn prefactor_at_exponent<T: Real>(eig: &EigenSequence<T>, r: T, window: Window) -> Result<T> {
    window.check(eig)?;
    let mut acc = T::zero();
    for n in window.n1..=window.n2 {
        let v = eig.get(n);
        if !(v > T::zero()) {
            return Err(invalid("window", format!("λ_{n} is zero; the fit needs positive values")));
        }
        acc = acc + (v * T::from_count(n).powf(r)).ln();
    }
    Ok((acc / T::from_count(window.n2 - window.n1 + 1)).exp())
}

/// Plateau of `n ↦ n λ_n^θ` over a window.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DeltaEstimate<T> {
    pub median: T,
    /// `max |v / median − 1|` over the window.
    pub spread: T,
    pub window: Window,
}

pub fn delta_theta<T: Real>(eig: &EigenSequence<T>, theta: T, window: Window) -> Result<DeltaEstimate<T>> {
    if !(theta > T::zero()) {
        return Err(invalid("theta", "must be positive"));
    }
    window.check(eig)?;
    let mut vals: Vec<T> = (window.n1..=window.n2)
        .map(|n| T::from_count(n) * eig.get(n).powf(theta))
        .collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let k = vals.len();
    let median = if k % 2 == 1 {
        vals[k / 2]
    } else {
        (vals[k / 2 - 1] + vals[k / 2]) / T::lit(2.0)
    };
    let spread = vals
        .iter()
        .map(|v| (*v / median - T::one()).abs())
        .fold(T::zero(), T::max);
    Ok(DeltaEstimate { median, spread, window })
}

/// `(λ₁/2, λ₁/2, λ₂/2, λ₂/2, …)`: the spectrum of the real and imaginary parts
/// of a proper complex process.
pub fn proper_doubling<T: Real>(eig: &EigenSequence<T>) -> EigenSequence<T> {
    let half = T::lit(0.5);
    let values = eig.values.iter().flat_map(|v| [*v * half, *v * half]).collect();
    EigenSequence {
        values,
        trusted_size: 2 * eig.trusted_size,
        source: format!("{} (proper doubling)", eig.source),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{assemble_periodic, assemble_sequence, CoefficientSequence, DiscretizationMeta, Measure, Setting};
    use crate::spectrum::bogoliubov_spectrum;
    use crate::weights::{Weight, WeightDomain};
    use proptest::prelude::*;
    use std::f64::consts::TAU;

    fn real(m: Mat<f64>) -> OperatorMatrix {
        OperatorMatrix::from_real(m, Setting::Sequence, Measure::Counting, DiscretizationMeta::default()).unwrap()
    }

    #[test]
    fn small_matrices() {
        let white = CoefficientSequence::finite(0, vec![1.0]).unwrap();
        let d = [3f64.sqrt(), 1.0, 2f64.sqrt()];
        let eig = eigenvalues(&assemble_sequence(&white, &d, 1).unwrap()).unwrap();
        for (a, b) in eig.values.iter().zip([3.0, 2.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
        let m = Mat::from_fn(2, 2, |i, j| if i == j { 2.0 } else { 1.0 });
        let eig = eigenvalues(&real(m)).unwrap();
        assert!((eig.values[0] - 3.0).abs() < 1e-14 && (eig.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn diagonal_galerkin_reproduces_masses() {
        let spec = bogoliubov_spectrum(1.0).unwrap();
        let w = Weight::constant(1.0, WeightDomain::Periodic { period: TAU }).unwrap();
        let eig = eigenvalues(&assemble_periodic(&spec, &w, 64).unwrap()).unwrap();
        assert!((eig.values[0] - spec.mass(0)).abs() <= 1e-14 * spec.mass(0));
        for k in 1..=64i64 {
            let m = spec.mass(k);
            for idx in [2 * k as usize - 1, 2 * k as usize] {
                assert!((eig.values[idx] - m).abs() <= 1e-14 * m, "k = {k}");
            }
        }
    }

    #[test]
    fn non_finite_and_indefinite_are_rejected() {
        let m = Mat::from_fn(2, 2, |i, j| if i == j { f64::NAN } else { 0.0 });
        assert!(matches!(eigenvalues(&real(m)), Err(Error::NonFinite(_))));
        let m = Mat::from_fn(2, 2, |i, j| if i == j { 1.0 } else { 2.0 });
        assert!(matches!(eigenvalues(&real(m)), Err(Error::Indefinite { .. })));
    }

    #[test]
    fn exact_power_law() {
        let vals: Vec<f64> = (1..=2000).map(|n| 2.0 * (n as f64).powi(-3)).collect();
        let eig = EigenSequence::from_values(vals, "synthetic");
        let fit = fit_power_law(&eig, Window::new(10, 400).unwrap()).unwrap();
        assert!((fit.r_hat - 3.0).abs() < 1e-10);
        assert!((fit.c_hat - 2.0).abs() < 1e-9);
        assert!(fit.residual < 1e-9);
    }

    #[test]
    fn biased_power_law_improves_to_the_right() {
        let vals: Vec<f64> = (1..=1600).map(|n| 2.0 * (n as f64).powi(-3) * (1.0 + 1.0 / n as f64)).collect();
        let eig = EigenSequence::from_values(vals, "synthetic");
        let early = fit_power_law(&eig, Window::new(10, 40).unwrap()).unwrap();
        let w = Window::new(100, 400).unwrap();
        let late = fit_power_law(&eig, w).unwrap();
        // The free exponent absorbs part of the 1/n bias into the prefactor.
        assert!((late.c_hat - 2.0).abs() / 2.0 < 0.04);
        assert!((late.r_hat - 3.0).abs() < (early.r_hat - 3.0).abs());
        assert!((late.c_hat - 2.0).abs() < (early.c_hat - 2.0).abs());
        let pinned = prefactor_at_exponent(&eig, 3.0, w).unwrap();
        assert!((pinned - 2.0).abs() / 2.0 < 0.02);
    }

    #[test]
    fn window_validation() {
        let eig = EigenSequence::from_values(vec![1.0; 100], "x");
        assert!(fit_power_law(&eig, Window::new(5, 26).unwrap()).is_err());
        assert!(Window::new(0, 3).is_err());
        let zeros = EigenSequence::from_values((0..100).map(|n| if n < 10 { 1.0 } else { 0.0 }).collect(), "x");
        assert!(fit_power_law(&zeros, Window::new(5, 20).unwrap()).is_err());
        assert_eq!(Window::default_for(8193).unwrap(), Window { n1: 409, n2: 2048 });
    }

    #[test]
    fn delta_plateau() {
        let eig = EigenSequence::from_values((1..=400).map(|n| 5.0 * (n as f64).powi(-2)).collect(), "x");
        let d = delta_theta(&eig, 0.5, Window::new(10, 100).unwrap()).unwrap();
        assert!((d.median - 5f64.sqrt()).abs() < 1e-12);
        assert!(d.spread < 1e-12);
    }

    #[test]
    fn doubling_examples() {
        let one = proper_doubling(&EigenSequence::from_values(vec![1.0], "x"));
        assert_eq!(one.values, vec![0.5, 0.5]);
        let two = proper_doubling(&EigenSequence::from_values(vec![4.0, 1.0], "x"));
        assert_eq!(two.values, vec![2.0, 2.0, 0.5, 0.5]);
        let base = EigenSequence::from_values((1..=10_000).map(|n| (n as f64).powi(-2)).collect(), "x");
        let doubled = proper_doubling(&base);
        let fit = fit_power_law(&doubled, Window::new(1000, 5000).unwrap()).unwrap();
        assert!((fit.c_hat - 2.0).abs() < 0.02);
        assert!((fit.r_hat - 2.0).abs() < 0.01);
    }

    #[test]
    fn eigenvectors_diagonalize() {
        let m = Mat::from_fn(3, 3, |i, j| 1.0 / (1.0 + i as f64 + j as f64));
        let mat = real(m.clone());
        let (vals, vecs) = eigen_decomposition(&mat).unwrap();
        assert!(vals[0] >= vals[1] && vals[1] >= vals[2]);
        let av = &m * vecs.col(0);
        for i in 0..3 {
            assert!((av[i] - vals[0] * vecs[(i, 0)]).abs() < 1e-14);
        }
    }

    #[test]
    fn csv_columns() {
        let eig = EigenSequence::from_values(vec![1.0, 0.25], "x");
        let mut out = Vec::new();
        eig.write_csv(2.0, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next().unwrap(), "n,lambda_n,n_pow_r_lambda");
        assert!(text.lines().nth(2).unwrap().starts_with("2,2.5e-1,1e0"));
    }

    #[test]
    fn f32_fit() {
        let vals: Vec<f32> = (1..=800).map(|n| 3.0 * (n as f32).powf(-1.5)).collect();
        let eig = EigenSequence::from_values(vals, "f32");
        let fit = fit_power_law(&eig, Window::new(20, 200).unwrap()).unwrap();
        assert!((fit.r_hat - 1.5).abs() < 1e-3);
        assert!((fit.c_hat - 3.0).abs() < 1e-2);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn doubling_scales_prefactor(r in 1.2f64..3.0, c in 0.1f64..10.0) {
            let base = EigenSequence::from_values((1..=20_000).map(|n| c * (n as f64).powf(-r)).collect(), "x");
            let fit = fit_power_law(&base, Window::new(1000, 5000).unwrap()).unwrap();
            let doubled = fit_power_law(&proper_doubling(&base), Window::new(2000, 10_000).unwrap()).unwrap();
            prop_assert!((doubled.r_hat - fit.r_hat).abs() < 0.01);
            prop_assert!((doubled.c_hat / fit.c_hat / 2f64.powf(r - 1.0) - 1.0).abs() < 0.02);
        }

        #[test]
        fn delta_matches_fit(r in 1.2f64..4.0, c in 0.1f64..10.0) {
            let eig = EigenSequence::from_values((1..=2000).map(|n| c * (n as f64).powf(-r)).collect(), "x");
            let w = Window::new(50, 500).unwrap();
            let fit = fit_power_law(&eig, w).unwrap();
            let d = delta_theta(&eig, 1.0 / fit.r_hat, w).unwrap();
            prop_assert!((d.median / fit.c_hat.powf(1.0 / fit.r_hat) - 1.0).abs() < 1e-6);
        }

        #[test]
        fn permutation_invariance(seed in 0u64..1000) {
            let n = 12;
            let base = Mat::from_fn(n, n, |i, j| {
                let x = ((i * 31 + j * 17 + seed as usize) % 97) as f64 / 97.0;
                let y = ((j * 31 + i * 17 + seed as usize) % 97) as f64 / 97.0;
                x + y
            });
            let m = &base * base.transpose();
            let m = Mat::from_fn(n, n, |i, j| if i >= j { m[(i, j)] } else { m[(j, i)] });
            let perm: Vec<usize> = (0..n).map(|i| (i * 5 + seed as usize) % n).collect();
            let p = Mat::from_fn(n, n, |i, j| m[(perm[i], perm[j])]);
            let a = eigenvalues(&real(m)).unwrap().values;
            let b = eigenvalues(&real(p)).unwrap().values;
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() <= 1e-12 * a[0]);
            }
        }
    }
}
