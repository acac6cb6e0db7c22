//! Adaptive Gauss–Kronrod integration and Gauss–Legendre rules.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::scalar::Real;

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK abscissae).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_INTERVALS: usize = 4000;

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature<T> {
    pub value: T,
    pub error: T,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T: Real> Eq for Panel<T> {}
impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.partial_cmp(&other.error).unwrap_or(Ordering::Equal)
    }
}

fn kronrod<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> Panel<T> {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let radius = half * (b - a);
    let fc = f(center);
    let mut kron = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = radius * T::lit(x);
        let pair = f(center - dx) + f(center + dx);
        kron = kron + T::lit(w) * pair;
        if j % 2 == 1 {
            gauss = gauss + T::lit(WG[j / 2]) * pair;
        }
    }
    Panel {
        a,
        b,
        value: kron * radius,
        error: ((kron - gauss) * radius).abs(),
    }
}

/// Integrates `f` over `[a, b]`, bisecting the worst panel until the summed
/// error estimate drops below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, abs_tol: T, rel_tol: T) -> Quadrature<T> {
    integrate_pieces(&f, &[a, b], abs_tol, rel_tol)
}

/// Like [`integrate`], over consecutive intervals `[p0, p1], [p1, p2], ...`
/// so that known kinks and jumps fall on panel boundaries.
pub fn integrate_pieces<T: Real, F: Fn(T) -> T>(f: &F, breaks: &[T], abs_tol: T, rel_tol: T) -> Quadrature<T> {
    let abs_tol = abs_tol.max(T::min_positive_value());
    let rel_tol = rel_tol.max(T::tolerance_floor());
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            heap.push(kronrod(f, w[0], w[1]));
        }
    }
    if heap.is_empty() {
        return Quadrature {
            value: T::zero(),
            error: T::zero(),
            converged: true,
        };
    }
    let total = |h: &BinaryHeap<Panel<T>>| {
        h.iter().fold((T::zero(), T::zero()), |(v, e), p| (v + p.value, e + p.error))
    };
    loop {
        let (value, error) = total(&heap);
        let target = abs_tol.max(rel_tol * value.abs());
        if error <= target || !value.is_finite() {
            return Quadrature {
                value,
                error,
                converged: value.is_finite(),
            };
        }
        if heap.len() >= MAX_INTERVALS {
            return Quadrature {
                value,
                error,
                converged: false,
            };
        }
        let worst = heap.pop().expect("non-empty heap");
        let mid = T::lit(0.5) * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel has collapsed to adjacent floats; cannot refine further.
            heap.push(worst);
            let (value, error) = total(&heap);
            return Quadrature {
                value,
                error,
                converged: false,
            };
        }
        heap.push(kronrod(f, worst.a, mid));
        heap.push(kronrod(f, mid, worst.b));
    }
}

/// Integrates `f` over `[a, ∞)` through the map `t = a + (1 - u) / u`.
pub fn integrate_to_infinity<T: Real, F: Fn(T) -> T>(f: F, a: T, abs_tol: T, rel_tol: T) -> Quadrature<T> {
    let g = |u: T| {
        let t = a + (T::one() - u) / u;
        let v = f(t) / u / u;
        if v.is_finite() {
            v
        } else {
            T::zero()
        }
    };
    integrate(g, T::zero(), T::one(), abs_tol, rel_tol)
}

/// Integrates `f` over `(-∞, a]`.
pub fn integrate_from_neg_infinity<T: Real, F: Fn(T) -> T>(f: F, a: T, abs_tol: T, rel_tol: T) -> Quadrature<T> {
    integrate_to_infinity(|t: T| f(-t), -a, abs_tol, rel_tol)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on the
/// Legendre recurrence.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
