//! Karhunen–Loève sampling: truncated spectral series on a uniform grid of
//! `[0, 2π)`, and eigen-expansions of assembled Nyström operators.

use std::io::Write;

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::eigensolve::eigen_decomposition;
use crate::error::{invalid, Error, Result};
use crate::operator::{OperatorMatrix, Setting};
use crate::scalar::Real;
use crate::spectrum::DiscreteSpectrum;
use crate::weights::Weight;

pub const GENERATOR: &str = "ChaCha20 (rand_chacha), stream = path index";

/// One sampled path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
    pub seed: u64,
    pub stream: u64,
    /// Mode cutoff `K`, or the number of eigenpairs for operator samples.
    pub truncation: usize,
    pub generator: &'static str,
    pub real: bool,
}

impl PathSample {
    /// CSV with columns `t, re, im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t,re,im")?;
        for (t, v) in self.grid.iter().zip(&self.values) {
            writeln!(out, "{t:e},{:e},{:e}", v.re, v.im)?;
        }
        Ok(())
    }
}

fn rng_for(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal(rng: &mut ChaCha20Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Midpoints `2π(j + ½)/G`.
pub fn periodic_grid(g: usize) -> Vec<f64> {
    (0..g)
        .map(|j| std::f64::consts::TAU * (j as f64 + 0.5) / g as f64)
        .collect()
}

/// Evaluates `Σ_k c_k e^{ikt}` on the midpoint grid by one inverse FFT; modes
/// beyond the grid are folded.
fn synthesize(coeffs: &[(i64, Complex64)], g: usize) -> Vec<Complex64> {
    let mut buf = vec![Complex64::new(0.0, 0.0); g];
    for &(k, c) in coeffs {
        let shift = Complex64::from_polar(1.0, std::f64::consts::PI * k as f64 / g as f64);
        buf[k.rem_euclid(g as i64) as usize] += c * shift;
    }
    FftPlanner::new().plan_fft_inverse(g).process(&mut buf);
    buf
}

fn check_args(k: usize, g: usize) -> Result<()> {
    if k == 0 {
        return Err(invalid("K", "mode cutoff must be at least 1"));
    }
    if g < 2 {
        return Err(invalid("grid", "needs at least two points"));
    }
    Ok(())
}

fn root_masses<T: Real>(spec: &DiscreteSpectrum<T>, k: usize) -> Vec<f64> {
    let ki = k as i64;
    (-ki..=ki).map(|j| spec.mass(j).to_f64_lossy().max(0.0).sqrt()).collect()
}

/// Real process `√μ₀ ξ₀ + Σ_{k=1}^K √μ_k (√2 A_k cos kt − √2 B_k sin kt)` with
/// independent standard normals `ξ₀, A_k, B_k`, on a midpoint grid of `g` points.
pub fn sample_real_periodic<T: Real>(spec: &DiscreteSpectrum<T>, k: usize, g: usize, seed: u64, stream: u64) -> Result<PathSample> {
    check_args(k, g)?;
    if !spec.is_even() {
        return Err(invalid("spectrum", "real sampling needs an even spectrum; use proper sampling"));
    }
    let root = root_masses(spec, k);
    let mut rng = rng_for(seed, stream);
    let mut coeffs = Vec::with_capacity(2 * k + 1);
    coeffs.push((0, Complex64::new(root[k] * normal(&mut rng), 0.0)));
    let h = std::f64::consts::FRAC_1_SQRT_2;
    for j in 1..=k {
        let a = normal(&mut rng);
        let b = normal(&mut rng);
        // √2(A cos − B sin) = Re[√2 (A + iB) e^{ikt}].
        let c = Complex64::new(a, b) * (root[k + j] * h);
        coeffs.push((j as i64, c));
        coeffs.push((-(j as i64), c.conj()));
    }
    let mut values = synthesize(&coeffs, g);
    for v in &mut values {
        v.im = 0.0;
    }
    Ok(PathSample {
        grid: periodic_grid(g),
        values,
        seed,
        stream,
        truncation: k,
        generator: GENERATOR,
        real: true,
    })
}

/// Proper complex process `Σ_{|k|≤K} √μ_k ξ_k e^{ikt}` with `ξ_k` spherical:
/// real and imaginary parts independent `N(0, 1/2)`.
pub fn sample_proper_periodic<T: Real>(spec: &DiscreteSpectrum<T>, k: usize, g: usize, seed: u64, stream: u64) -> Result<PathSample> {
    check_args(k, g)?;
    let root = root_masses(spec, k);
    let mut rng = rng_for(seed, stream);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let coeffs: Vec<(i64, Complex64)> = (-(k as i64)..=k as i64)
        .zip(&root)
        .map(|(j, r)| {
            let re = normal(&mut rng);
            let im = normal(&mut rng);
            (j, Complex64::new(re, im) * (h * r))
        })
        .collect();
    Ok(PathSample {
        grid: periodic_grid(g),
        values: synthesize(&coeffs, g),
        seed,
        stream,
        truncation: k,
        generator: GENERATOR,
        real: false,
    })
}

/// `∫_0^{2π} q|X|² dt` and the same divided by `2π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NormSq {
    pub plain: f64,
    pub normalized: f64,
}

/// Weighted squared norm of a periodic path by the midpoint rule.
pub fn weighted_norm_sq<T: Real>(path: &PathSample, w: &Weight<T>) -> Result<NormSq> {
    let period = w
        .period()
        .map(|p| p.to_f64_lossy())
        .ok_or_else(|| Error::DomainMismatch("periodic paths need a periodic weight".into()))?;
    let tau = std::f64::consts::TAU;
    if (period - tau).abs() > 1e-12 * tau {
        return Err(Error::DomainMismatch(format!("weight period {period} does not match the path period 2π")));
    }
    let g = path.grid.len();
    if g != path.values.len() || g == 0 {
        return Err(invalid("path", "grid and values differ in length"));
    }
    let expected = periodic_grid(g);
    if expected.iter().zip(&path.grid).any(|(a, b)| (a - b).abs() > 1e-12) {
        return Err(Error::DomainMismatch("path grid is not the uniform midpoint grid on [0, 2π)".into()));
    }
    let sum: f64 = path
        .grid
        .iter()
        .zip(&path.values)
        .map(|(t, v)| w.eval(T::lit(*t)).to_f64_lossy() * v.norm_sqr())
        .sum();
    let plain = sum * tau / g as f64;
    Ok(NormSq {
        plain,
        normalized: plain / tau,
    })
}

/// How to draw the paths of a batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Real,
    Proper,
}

/// Weighted squared norms (normalized measure) of `n` independent paths; path
/// `i` uses stream `i`, so the output does not depend on `workers`.
pub fn batch_norms<T: Real>(
    spec: &DiscreteSpectrum<T>,
    w: &Weight<T>,
    kind: PathKind,
    k: usize,
    g: usize,
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<f64>> {
    let one = |i: usize| -> Result<f64> {
        let path = match kind {
            PathKind::Real => sample_real_periodic(spec, k, g, seed, i as u64)?,
            PathKind::Proper => sample_proper_periodic(spec, k, g, seed, i as u64)?,
        };
        Ok(weighted_norm_sq(&path, w)?.normalized)
    };
    let workers = workers.max(1).min(n.max(1));
    if workers == 1 {
        return (0..n).map(one).collect();
    }
    let chunk = n.div_ceil(workers);
    let mut out = vec![0.0; n];
    let results: Vec<Result<()>> = std::thread::scope(|scope| {
        let handles: Vec<_> = out
            .chunks_mut(chunk)
            .enumerate()
            .map(|(c, slots)| {
                let one = &one;
                scope.spawn(move || -> Result<()> {
                    for (i, slot) in slots.iter_mut().enumerate() {
                        *slot = one(c * chunk + i)?;
                    }
                    Ok(())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("sampling worker panicked")).collect()
    });
    for r in results {
        r?;
    }
    Ok(out)
}

/// CSV with columns `sample_id, norm_sq`.
pub fn write_norms_csv<W: Write>(norms: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "sample_id,norm_sq")?;
    for (i, v) in norms.iter().enumerate() {
        writeln!(out, "{i},{v:e}")?;
    }
    Ok(())
}

/// Draws `Σ λ_n ξ_n²` directly from an eigenvalue list; draw `i` uses stream `i`.
pub fn eigen_quadratic_forms(values: &[f64], n: usize, seed: u64) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let mut rng = rng_for(seed, i as u64);
            values
                .iter()
                .map(|l| {
                    let z = normal(&mut rng);
                    l * z * z
                })
                .sum()
        })
        .collect()
}

/// Karhunen–Loève sampler for a real Nyström operator: with `B = V Λ Vᵀ`, the
/// vector `y = V Λ^{1/2} ξ` has covariance `B`, and `X(t_i) = y_i / √(w_i q(t_i))`.
pub struct OperatorSampler {
    values: Vec<f64>,
    vectors: Mat<f64>,
    nodes: Vec<f64>,
    scale: Vec<f64>,
}

impl OperatorSampler {
    pub fn new<T: Real>(mat: &OperatorMatrix, w: &Weight<T>) -> Result<Self> {
        if mat.setting() != Setting::Nystrom {
            return Err(invalid("matrix", "operator sampling needs a Nyström matrix"));
        }
        let meta = mat.meta();
        let (values, vectors) = eigen_decomposition(mat)?;
        let values = values.into_iter().map(|v| v.max(0.0)).collect();
        let scale = meta
            .nodes
            .iter()
            .zip(&meta.quadrature_weights)
            .map(|(t, wt)| (wt * w.eval(T::lit(*t)).to_f64_lossy().max(0.0)).sqrt())
            .collect();
        Ok(Self {
            values,
            vectors,
            nodes: meta.nodes.clone(),
            scale,
        })
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values
    }

    /// One path on the quadrature nodes (zero where `q` vanishes) together
    /// with its weighted squared norm `|y|² = Σ λ_n ξ_n²`.
    pub fn sample(&self, seed: u64, stream: u64) -> (PathSample, f64) {
        let n = self.values.len();
        let mut rng = rng_for(seed, stream);
        let xi: Vec<f64> = self.values.iter().map(|l| l.sqrt() * normal(&mut rng)).collect();
        let mut y = vec![0.0; n];
        for (j, c) in xi.iter().enumerate() {
            if *c == 0.0 {
                continue;
            }
            for (i, yi) in y.iter_mut().enumerate() {
                *yi += self.vectors[(i, j)] * c;
            }
        }
        let norm = y.iter().map(|v| v * v).sum();
        let values = y
            .iter()
            .zip(&self.scale)
            .map(|(v, s)| Complex64::new(if *s > 0.0 { v / s } else { 0.0 }, 0.0))
            .collect();
        (
            PathSample {
                grid: self.nodes.clone(),
                values,
                seed,
                stream,
                truncation: n,
                generator: GENERATOR,
                real: true,
            },
            norm,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolve::eigenvalues;
    use crate::operator::{assemble_nystrom, assemble_periodic, kernel_from_discrete, ContinuousKernel};
    use crate::special::{ks_p_value, ks_statistic};
    use crate::spectrum::{bogoliubov_spectrum, fou_spectrum, TailDescriptor};
    use crate::weights::WeightDomain;
    use std::f64::consts::TAU;

    fn mean_var(x: &[f64]) -> (f64, f64) {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v)
    }

    #[test]
    fn constant_mode_gives_constant_path() {
        let mut entries = vec![(0i64, 1.0)];
        entries.extend((1..=4).flat_map(|k| [(k, 0.0), (-k, 0.0)]));
        let spec = DiscreteSpectrum::from_table(&entries, TailDescriptor::symmetric(2.0, 1.0).unwrap()).unwrap();
        let p = sample_real_periodic(&spec, 4, 64, 1, 0).unwrap();
        let x0 = p.values[0].re;
        assert!(p.values.iter().all(|v| (v.re - x0).abs() < 1e-14));
        let one = Weight::constant(1.0, WeightDomain::Periodic { period: TAU }).unwrap();
        let n = weighted_norm_sq(&p, &one).unwrap();
        assert!((n.plain - TAU * x0 * x0).abs() < 1e-12);
        assert!((n.normalized - x0 * x0).abs() < 1e-14);
    }

    #[test]
    fn unit_path_norms() {
        let p = PathSample {
            grid: periodic_grid(16),
            values: vec![Complex64::new(1.0, 0.0); 16],
            seed: 0,
            stream: 0,
            truncation: 0,
            generator: GENERATOR,
            real: true,
        };
        let one = Weight::constant(1.0, WeightDomain::Periodic { period: TAU }).unwrap();
        let n = weighted_norm_sq(&p, &one).unwrap();
        assert!((n.plain - TAU).abs() < 1e-14 && (n.normalized - 1.0).abs() < 1e-15);
        let wrong = Weight::constant(1.0, WeightDomain::Periodic { period: 1.0 }).unwrap();
        assert!(weighted_norm_sq(&p, &wrong).is_err());
    }

    #[test]
    fn real_variance_and_lag_covariance() {
        let spec = bogoliubov_spectrum(1.0).unwrap();
        let (k, g, n) = (256, 512, 10_000);
        let mut x0 = Vec::with_capacity(n);
        let mut prod = Vec::with_capacity(n);
        for i in 0..n {
            let p = sample_real_periodic(&spec, k, g, 2024, i as u64).unwrap();
            let a = p.values[0].re;
            let b = p.values[g / 4].re;
            x0.push(a * a);
            prod.push(a * b);
        }
        let (m, v) = mean_var(&x0);
        let target = kernel_from_discrete(&spec, 0.0).value.re;
        assert!((m - target).abs() < 3.0 * (v / n as f64).sqrt(), "{m} vs {target}");
        let (m, v) = mean_var(&prod);
        // Lag π/2 on [0, 2π) is a quarter period in the 1-periodic layout.
        let target = kernel_from_discrete(&spec, 0.25).value.re;
        assert!((m - target).abs() < 3.0 * (v / n as f64).sqrt(), "{m} vs {target}");
    }

    #[test]
    fn proper_moments_and_rotation() {
        let spec = bogoliubov_spectrum(1.0).unwrap();
        let (k, g, n) = (64, 128, 10_000);
        let mut sq_re = Vec::with_capacity(n);
        let mut sq_im = Vec::with_capacity(n);
        let mut abs2 = Vec::with_capacity(n);
        let mut arm_a = Vec::with_capacity(n);
        let mut arm_b = Vec::with_capacity(n);
        let rot = Complex64::from_polar(1.0, 0.7);
        for i in 0..n {
            let p = sample_proper_periodic(&spec, k, g, 5, i as u64).unwrap();
            let z = p.values[3];
            let z2 = z * z;
            sq_re.push(z2.re);
            sq_im.push(z2.im);
            abs2.push(z.norm_sqr());
            arm_a.push(p.values[0].re);
            let q = sample_proper_periodic(&spec, k, g, 6, i as u64).unwrap();
            arm_b.push((q.values[0] * rot).re);
        }
        for s in [&sq_re, &sq_im] {
            let (m, v) = mean_var(s);
            assert!(m.abs() < 3.0 * (v / n as f64).sqrt());
        }
        let (m, v) = mean_var(&abs2);
        let total: f64 = (-(k as i64)..=k as i64).map(|j| spec.mass(j)).sum();
        assert!((m - total).abs() < 3.0 * (v / n as f64).sqrt());
        let d = ks_statistic(&arm_a, &arm_b);
        assert!(ks_p_value(d, n, n) > 0.01);
    }

    #[test]
    fn odd_spectrum_rejected_for_real_paths() {
        let entries: Vec<(i64, f64)> = (-3..=3).map(|k| (k, 1.0 / (1.0 + (k * k) as f64))).collect();
        let spec = DiscreteSpectrum::from_table(&entries, TailDescriptor::new(2.0, 1.0, 2.0).unwrap()).unwrap();
        assert!(sample_real_periodic(&spec, 3, 16, 0, 0).is_err());
        assert!(sample_proper_periodic(&spec, 3, 16, 0, 0).is_ok());
    }

    #[test]
    fn karhunen_loeve_distribution() {
        let spec = bogoliubov_spectrum(1.0).unwrap();
        let w = Weight::exponential(0.5 / TAU, TAU).unwrap();
        let k = 64;
        let eig = eigenvalues(&assemble_periodic(&spec, &w, k).unwrap()).unwrap();
        let paths = batch_norms(&spec, &w, PathKind::Real, k, 4096, 10_000, 17, 4).unwrap();
        let forms = eigen_quadratic_forms(&eig.values, 10_000, 18);
        let d = ks_statistic(&paths, &forms);
        assert!(ks_p_value(d, 10_000, 10_000) > 0.01, "KS distance {d}");
    }

    #[test]
    fn reproducible_batches() {
        let spec = bogoliubov_spectrum(1.0).unwrap();
        let w = Weight::constant(1.0, WeightDomain::Periodic { period: TAU }).unwrap();
        let a = batch_norms(&spec, &w, PathKind::Proper, 16, 64, 50, 3, 1).unwrap();
        let b = batch_norms(&spec, &w, PathKind::Proper, 16, 64, 50, 3, 3).unwrap();
        assert_eq!(a, b);
        let p = sample_real_periodic(&spec, 16, 64, 9, 2).unwrap();
        let q = sample_real_periodic(&spec, 16, 64, 9, 2).unwrap();
        assert_eq!(p, q);
        let mut csv = Vec::new();
        write_norms_csv(&a[..2], &mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 3);
    }

    #[test]
    fn operator_sampler_matches_kernel_variance() {
        let spec = fou_spectrum(0.5).unwrap();
        let kern = ContinuousKernel::new(&spec).unwrap();
        let w = Weight::indicator(0.0, 1.0, WeightDomain::RealLine).unwrap();
        let mat = assemble_nystrom(&kern, &w, 64).unwrap();
        let sampler = OperatorSampler::new(&mat, &w).unwrap();
        let n = 4000;
        let mut x2 = Vec::with_capacity(n);
        for i in 0..n {
            let (p, norm) = sampler.sample(1, i as u64);
            assert!(norm >= 0.0);
            x2.push(p.values[10].re.powi(2));
        }
        let (m, v) = mean_var(&x2);
        // Stationary variance K_X(0) = 1.
        assert!((m - 1.0).abs() < 3.0 * (v / n as f64).sqrt(), "{m}");
    }
}
