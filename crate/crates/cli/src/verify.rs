//! Acceptance criteria, runnable from `smallball verify` and from the test suite.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use faer::Mat;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smallball_core::eigensolve::{eigenvalues, fit_power_law, proper_doubling, EigenSequence, Window};
use smallball_core::operator::{assemble_periodic, assemble_sequence, power_weights, CoefficientSequence, Entries, OperatorMatrix};
use smallball_core::simulate::{batch_norms, eigen_quadratic_forms, PathKind};
use smallball_core::smallball::{
    b_r, chernoff_logprob, constant_continuous_real, constant_fou, constant_periodic_proper, constant_periodic_real, constant_sequence,
    lemma_constant_periodic, logprob_from_fit, mc_smallball, rescale_epsilon, AnalyticTail, Tilt,
};
use smallball_core::special::{ks_p_value, ks_statistic};
use smallball_core::spectrum::{bogoliubov_spectrum, fou_tail, integrated_bridge_spectrum, TailDescriptor};
use smallball_core::weights::{Weight, WeightDomain};

use crate::commands::{CliResult, Output};

pub const CRITERIA: [&str; 7] = [
    "golden-constants",
    "lemma-eigenvalues",
    "sequence-crosscheck",
    "proper-doubling",
    "oracle-convergence",
    "mc-coherence",
    "property-suites",
];

/// Outcome of one criterion: measured values, one per line.
#[derive(Debug, Clone, Default)]
pub struct Check {
    pub passed: bool,
    pub lines: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Self {
            passed: true,
            lines: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, line: String) {
        self.passed &= ok;
        self.lines.push(format!("{} {line}", if ok { "ok  " } else { "FAIL" }));
    }

    fn rel(&mut self, what: &str, got: f64, want: f64, tol: f64) {
        let e = (got / want - 1.0).abs();
        self.record(e <= tol, format!("{what}: {got:.12e} vs {want:.12e} (rel {e:.2e}, tol {tol:.0e})"));
    }

    fn fail(&mut self, what: &str, err: impl std::fmt::Display) {
        self.record(false, format!("{what}: {err}"));
    }
}

macro_rules! attempt {
    ($check:expr, $what:expr, $e:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => {
                $check.fail($what, err);
                return $check;
            }
        }
    };
}

fn one_2pi() -> Weight<f64> {
    Weight::constant(1.0, WeightDomain::Periodic { period: TAU }).expect("valid weight")
}

pub fn golden_constants() -> Check {
    let mut c = Check::new();
    let tol = 1e-10;
    let bog = attempt!(c, "bogoliubov", bogoliubov_spectrum(1.0));
    let unit = |w: &Weight<f64>, tail: &TailDescriptor<f64>| -> smallball_core::Result<f64> {
        Ok(rescale_epsilon(&constant_periodic_real(tail, w)?, TAU)?.coefficient)
    };
    let k = attempt!(c, "bogoliubov q=1", unit(&one_2pi(), &bog.tail()));
    c.rel("bogoliubov, q = 1", k, 0.125, tol);
    for a in [-1.0, 0.5, 2.0] {
        let w = attempt!(c, "weight", Weight::exponential(a / TAU, TAU));
        let k = attempt!(c, "bogoliubov weighted", unit(&w, &bog.tail()));
        c.rel(&format!("bogoliubov, q = e^(2as), a = {a}"), k, 0.125 * ((f64::exp(a) - 1.0) / a).powi(2), tol);
    }
    let mut bridge1 = f64::NAN;
    for m in 1..=3u32 {
        let spec = attempt!(c, "bridge", integrated_bridge_spectrum::<f64>(m));
        let k = attempt!(c, "bridge constant", unit(&one_2pi(), &spec.tail()));
        let mm = 2.0 * m as f64;
        let want = (mm - 1.0) / 2.0 * (mm * (PI / mm).sin()).powf(-mm / (mm - 1.0));
        c.rel(&format!("integrated bridge, m = {m}"), k, want, tol);
        if m == 1 {
            bridge1 = k;
        }
    }
    c.rel("bridge m = 1 against bogoliubov", bridge1, k, tol);
    let b2 = attempt!(c, "b_r", b_r(2.0));
    c.rel("b_r(2)", b2, PI * PI / 8.0, tol);
    let ind = attempt!(c, "indicator", Weight::indicator(0.0, 1.0, WeightDomain::RealLine));
    let fou = attempt!(c, "fou", constant_fou(0.5, &ind));
    c.rel("fou(1/2, 1[0,1])", fou.coefficient, 0.125, tol);
    let ou = attempt!(c, "ou", constant_continuous_real(&attempt!(c, "tail", fou_tail(0.5)), &ind));
    c.rel("continuous OU, 1[0,1]", ou.coefficient, 0.125, tol);
    c
}

/// Mode cutoff for the weighted Bogoliubov run: `|k| ≤ 2048` gives a
/// 4097-dimensional matrix.
pub const LEMMA_CUTOFF: usize = 2048;

pub fn lemma_eigenvalues() -> Check {
    let mut c = Check::new();
    let spec = attempt!(c, "bogoliubov", bogoliubov_spectrum(1.0));
    let a = 1.0;
    let w = attempt!(c, "weight", Weight::exponential(a / TAU, TAU));
    let mat = attempt!(c, "assemble", assemble_periodic(&spec, &w, LEMMA_CUTOFF));
    let eig = attempt!(c, "eigenvalues", eigenvalues(&mat));
    let window = attempt!(c, "window", Window::new(200, 800));
    let fit = attempt!(c, "fit", fit_power_law(&eig, window));
    let want = attempt!(c, "lemma", lemma_constant_periodic(&spec.tail(), &w));
    c.rel(&format!("C fit on [200, 800], N = {}, a = {a}", mat.size()), fit.c_hat, want, 0.05);
    c.rel("r fit", fit.r_hat, 2.0, 0.01);
    c
}

pub fn sequence_crosscheck() -> Check {
    let mut c = Check::new();
    let want = PI * PI / 2.0;
    let delta = attempt!(c, "delta", CoefficientSequence::finite(0, vec![1.0]));
    let k = attempt!(c, "constant_sequence", constant_sequence(1.0, 1.0, 1.0, &delta));
    c.rel("constant_sequence(1, 1, 1, δ0)", k.coefficient, want, 1e-10);
    let cutoff = 2000;
    let mat = attempt!(c, "assemble", assemble_sequence(&delta, &power_weights(1.0, 1.0, 1.0, cutoff), cutoff));
    let eig = attempt!(c, "eigenvalues", eigenvalues(&mat));
    let window = attempt!(c, "window", Window::default_for(mat.size()));
    let fit = attempt!(c, "fit", fit_power_law(&eig, window));
    let route = attempt!(c, "logprob", logprob_from_fit(fit.c_hat, fit.r_hat, 1.0));
    c.rel(&format!("eigenvalue route, K = {cutoff}, window [{}, {}]", window.n1, window.n2), -route, want, 0.05);
    c
}

pub fn proper_doubling_check() -> Check {
    let mut c = Check::new();
    let pre = 1.7;
    for r in [1.5, 2.0, 3.0] {
        let eig = EigenSequence::from_values((1..=10_000).map(|n| pre * (n as f64).powf(-r)).collect(), "synthetic");
        let doubled = proper_doubling(&eig);
        let window = attempt!(c, "window", Window::new(2000, 5000));
        let fit = attempt!(c, "fit", fit_power_law(&doubled, window));
        c.rel(&format!("doubled prefactor, r = {r}"), fit.c_hat, 2f64.powf(r - 1.0) * pre, 0.01);
    }
    let w = attempt!(c, "weight", Weight::exponential(0.2, TAU));
    for r in [1.5, 2.0, 3.0, 4.0] {
        let tail = attempt!(c, "tail", TailDescriptor::symmetric(r, 0.3));
        let real = attempt!(c, "real", constant_periodic_real(&tail, &w));
        let proper = attempt!(c, "proper", constant_periodic_proper(&tail, &w));
        // B_r (2^{r−1} C)^{1/(r−1)} = 2 B_r C^{1/(r−1)}.
        c.rel(&format!("proper = 2·real, r = {r}"), proper.coefficient, 2.0 * real.coefficient, 1e-10);
    }
    c
}

pub const ORACLE_EPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
pub const ORACLE_TERMS: usize = 2000;

pub fn oracle_convergence() -> Check {
    let mut c = Check::new();
    for r in [1.5, 2.0, 3.0] {
        let eig = EigenSequence::from_values((1..=ORACLE_TERMS).map(|n| (n as f64).powf(-r)).collect(), "synthetic");
        let tail = Some(AnalyticTail { c: 1.0, r });
        let mut ratios = Vec::new();
        for eps in ORACLE_EPS {
            let ch = attempt!(c, "chernoff", chernoff_logprob(&eig, tail, eps));
            let th = attempt!(c, "theorem", logprob_from_fit(1.0, r, eps));
            ratios.push(ch.log_prob / th);
        }
        let up = ratios.windows(2).all(|p| p[1] >= p[0]);
        let down = ratios.windows(2).all(|p| p[1] <= p[0]);
        let list = ratios.iter().map(|v| format!("{v:.5}")).collect::<Vec<_>>().join(", ");
        c.record(up || down, format!("r = {r}: ratios over ε = 1e-1..1e-4 monotone: [{list}]"));
        let last = ratios[ratios.len() - 1];
        c.record((0.9..=1.1).contains(&last), format!("r = {r}: ratio at ε = 1e-4 is {last:.5}, want [0.9, 1.1]"));
    }
    c
}

pub fn mc_coherence(workers: usize) -> Check {
    let mut c = Check::new();
    let one = EigenSequence::from_values(vec![1.0], "single");
    let est = attempt!(c, "mc", mc_smallball(&one, 0.5, 200_000, 20_240_501, Tilt::None, workers));
    let z = (est.probability - 0.38292).abs() / est.std_error;
    c.record(z <= 3.0, format!("λ = (1), ε = 0.5: {:.5} ± {:.5} vs 0.38292 ({z:.2} SE)", est.probability, est.std_error));
    let two = EigenSequence::from_values(vec![1.0, 1.0], "chi2");
    let est = attempt!(c, "mc", mc_smallball(&two, 1.0, 200_000, 20_240_502, Tilt::None, workers));
    let want = 1.0 - (-0.5f64).exp();
    let z = (est.probability - want).abs() / est.std_error;
    c.record(z <= 3.0, format!("χ²₂, ε = 1: {:.5} ± {:.5} vs {want:.5} ({z:.2} SE)", est.probability, est.std_error));

    let spec = attempt!(c, "bogoliubov", bogoliubov_spectrum(1.0));
    let w = attempt!(c, "weight", Weight::exponential(0.5 / TAU, TAU));
    let k = 64;
    let eig = attempt!(c, "eigenvalues", assemble_periodic(&spec, &w, k).and_then(|m| eigenvalues(&m)));
    let n = 10_000;
    let paths = attempt!(c, "paths", batch_norms(&spec, &w, PathKind::Real, k, 4096, n, 17, workers));
    let forms = eigen_quadratic_forms(&eig.values, n, 18);
    let d = ks_statistic(&paths, &forms);
    let p = ks_p_value(d, n, n);
    c.record(p > 0.01, format!("KL paths vs eigenvalue forms: KS D = {d:.4}, p = {p:.3} (> 0.01)"));
    c
}

pub const PROPERTY_CASES: usize = 100;

fn homogeneity(rng: &mut ChaCha8Rng, c: &mut Check) {
    let mut worst = 0.0f64;
    for _ in 0..PROPERTY_CASES {
        let r = rng.random_range(1.2..4.0);
        let scale = rng.random_range(0.05..20.0);
        let tail = TailDescriptor::symmetric(r, rng.random_range(0.01..2.0)).expect("valid tail");
        let (k1, k2) = if rng.random_bool(0.5) {
            let w = Weight::exponential(rng.random_range(-0.5..0.5), TAU).expect("valid weight");
            (
                constant_periodic_real(&tail, &w).map(|p| (p.coefficient, p.exponent)),
                constant_periodic_real(&tail, &w.scaled(scale).expect("valid scale")).map(|p| p.coefficient),
            )
        } else {
            let a = rng.random_range(-3.0..3.0);
            let w = Weight::indicator(a, a + rng.random_range(0.1..4.0), WeightDomain::RealLine).expect("valid weight");
            (
                constant_continuous_real(&tail, &w).map(|p| (p.coefficient, p.exponent)),
                constant_continuous_real(&tail, &w.scaled(scale).expect("valid scale")).map(|p| p.coefficient),
            )
        };
        match (k1, k2) {
            (Ok((k, gamma)), Ok(ks)) => worst = worst.max((ks / (k * scale.powf(gamma / 2.0)) - 1.0).abs()),
            (Err(e), _) | (_, Err(e)) => return c.fail("homogeneity", e),
        }
    }
    c.record(worst < 1e-10, format!("K(cq) = c^(γ/2) K(q): {PROPERTY_CASES} cases, worst rel {worst:.2e}"));
}

fn chernoff_monotone(rng: &mut ChaCha8Rng, c: &mut Check) {
    let mut bad = 0;
    for _ in 0..PROPERTY_CASES {
        let len = rng.random_range(1..60);
        let base: Vec<f64> = (0..len).map(|_| rng.random_range(0.01..2.0)).collect();
        let bigger: Vec<f64> = base.iter().map(|v| v + rng.random_range(0.0..0.5)).collect();
        let e1 = rng.random_range(0.05..1.0);
        let e2 = e1 * rng.random_range(1.01..3.0);
        let a = EigenSequence::from_values(base, "base");
        let b = EigenSequence::from_values(bigger, "bigger");
        let (Ok(l1), Ok(l2), Ok(lb)) = (chernoff_logprob(&a, None, e1), chernoff_logprob(&a, None, e2), chernoff_logprob(&b, None, e1)) else {
            bad += 1;
            continue;
        };
        let slack = 1e-9 * l1.log_prob.abs().max(1.0);
        if l1.log_prob > l2.log_prob + slack || lb.log_prob > l1.log_prob + slack {
            bad += 1;
        }
    }
    c.record(bad == 0, format!("Chernoff bound monotone in ε and in λ: {PROPERTY_CASES} cases, {bad} violations"));
}

fn eigen_properties(rng: &mut ChaCha8Rng, c: &mut Check) {
    let mut negative = 0;
    let mut worst = 0.0f64;
    for _ in 0..PROPERTY_CASES {
        let spec = bogoliubov_spectrum(rng.random_range(0.2..5.0)).expect("valid spectrum");
        let w = Weight::exponential(rng.random_range(-0.5..0.5), TAU).expect("valid weight");
        let k = rng.random_range(3..20);
        let mat = match assemble_periodic(&spec, &w, k) {
            Ok(m) => m,
            Err(e) => return c.fail("assemble", e),
        };
        let eig = match eigenvalues(&mat) {
            Ok(e) => e,
            Err(e) => return c.fail("eigenvalues", e),
        };
        if eig.values.iter().any(|v| *v < 0.0) {
            negative += 1;
        }
        let Entries::Real(m) = mat.entries() else {
            return c.fail("permutation", "expected a real matrix for an even spectrum");
        };
        let n = mat.size();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let permuted = Mat::from_fn(n, n, |i, j| m[(perm[i], perm[j])]);
        let pm = match OperatorMatrix::from_real(permuted, mat.setting(), mat.measure(), mat.meta().clone()) {
            Ok(p) => p,
            Err(e) => return c.fail("permutation", e),
        };
        let pe = match eigenvalues(&pm) {
            Ok(e) => e,
            Err(e) => return c.fail("eigenvalues", e),
        };
        let top = eig.values[0];
        for (a, b) in eig.values.iter().zip(&pe.values) {
            worst = worst.max((a - b).abs() / top);
        }
    }
    c.record(negative == 0, format!("eigenvalues non-negative: {PROPERTY_CASES} cases, {negative} violations"));
    c.record(worst < 1e-12, format!("permutation invariance: {PROPERTY_CASES} cases, worst rel {worst:.2e}"));
}

fn cli_reproducibility(rng: &mut ChaCha8Rng, c: &mut Check, workers: usize) {
    let dir = std::env::temp_dir().join(format!("smallball-verify-{}", std::process::id()));
    if let Err(e) = std::fs::create_dir_all(&dir) {
        return c.fail("temp dir", e);
    }
    let model = dir.join("model.json");
    let weight = dir.join("weight.json");
    let written = std::fs::write(&model, r#"{"kind": "bogoliubov", "omega": 1.0}"#)
        .and_then(|_| std::fs::write(&weight, r#"{"kind": "exponential", "a": 0.1, "period": "2pi"}"#));
    if let Err(e) = written {
        return c.fail("temp files", e);
    }
    let (m, w) = (model.display().to_string(), weight.display().to_string());
    let mut mismatches = 0;
    for case in 0..PROPERTY_CASES {
        let seed = rng.random::<u32>().to_string();
        let workers = workers.to_string();
        let argv: Vec<&str> = match case % 4 {
            0 => vec!["mc", "--lambda", "1,0.5,0.25", "--eps", "0.5", "--samples", "2000", "--seed", &seed, "--tilt", "chernoff"],
            1 => vec!["sample", "--model", &m, "--k", "8", "--grid", "32", "--seed", &seed],
            2 => vec!["sample", "--model", &m, "--weight", &w, "--k", "8", "--grid", "32", "--paths", "20", "--seed", &seed],
            _ => vec!["smallball", "--power", "2", "--terms", "50", "--eps", "0.5,0.3", "--mc-samples", "1000", "--seed", &seed],
        };
        let run = |extra: &[&str]| {
            let mut full = vec!["smallball", "--workers", &workers];
            full.extend_from_slice(extra);
            crate::run_args(full)
        };
        match (run(&argv), run(&argv)) {
            (Ok(a), Ok(b)) if a == b => {}
            _ => mismatches += 1,
        }
    }
    let _ = std::fs::remove_dir_all(&dir);
    c.record(
        mismatches == 0,
        format!("fixed-seed CLI outputs byte-identical: {PROPERTY_CASES} cases, {mismatches} mismatches"),
    );
}

pub fn property_suites(workers: usize) -> Check {
    let mut c = Check::new();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    homogeneity(&mut rng, &mut c);
    chernoff_monotone(&mut rng, &mut c);
    eigen_properties(&mut rng, &mut c);
    cli_reproducibility(&mut rng, &mut c, workers);
    c
}

pub fn run_criterion(id: &str, workers: usize) -> Option<Check> {
    Some(match id {
        "golden-constants" => golden_constants(),
        "lemma-eigenvalues" => lemma_eigenvalues(),
        "sequence-crosscheck" => sequence_crosscheck(),
        "proper-doubling" => proper_doubling_check(),
        "oracle-convergence" => oracle_convergence(),
        "mc-coherence" => mc_coherence(workers),
        "property-suites" => property_suites(workers),
        _ => return None,
    })
}

pub fn cmd_verify(only: &[String], workers: usize) -> CliResult<Output> {
    let ids: Vec<&str> = if only.is_empty() {
        CRITERIA.to_vec()
    } else {
        for id in only {
            if !CRITERIA.contains(&id.as_str()) {
                return Err(crate::commands::CliError::input(format!(
                    "unknown criterion `{id}`; known: {}",
                    CRITERIA.join(", ")
                )));
            }
        }
        only.iter().map(String::as_str).collect()
    };
    let mut text = String::new();
    let mut failed = 0;
    for id in &ids {
        let check = run_criterion(id, workers).expect("ids are validated above");
        let _ = writeln!(text, "{} {id}", if check.passed { "PASS" } else { "FAIL" });
        for line in &check.lines {
            let _ = writeln!(text, "    {line}");
        }
        failed += usize::from(!check.passed);
    }
    let _ = writeln!(text, "{} of {} criteria passed (workers = {workers})", ids.len() - failed, ids.len());
    Ok(Output {
        text,
        exit_code: u8::from(failed > 0),
    })
}
