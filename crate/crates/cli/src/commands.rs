use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};
use smallball_core::config::{parse_model, parse_weight, SpectralModel};
use smallball_core::eigensolve::{delta_theta, eigenvalues, fit_power_law, proper_doubling, EigenSequence, Window};
use smallball_core::operator::{assemble_nystrom, assemble_periodic, assemble_sequence, power_weights, CoefficientSequence, ContinuousKernel};
use smallball_core::simulate::{batch_norms, sample_proper_periodic, sample_real_periodic, write_norms_csv, OperatorSampler, PathKind};
use smallball_core::smallball::{
    chernoff_logprob, constant_continuous_proper, constant_continuous_real, constant_fou, constant_periodic_proper, constant_periodic_real,
    constant_sequence, lemma_constant_continuous, lemma_constant_periodic, lemma_constant_sequence, logprob_from_fit, mc_smallball,
    prediction_from_fit, rescale_epsilon, AnalyticTail, Tilt,
};
use smallball_core::weights::{Weight, WeightDomain};
use smallball_core::Error;

use crate::args::*;

/// Bounds below this are out of reach for tilted Monte Carlo at practical sample sizes.
pub const MC_REACH: f64 = -20.0;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Divergent(_)
            | Error::NonFinite(_)
            | Error::NoConvergence { .. }
            | Error::Indefinite { .. }
            | Error::Eigensolver(_) => 1,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Text for stdout and the process exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub text: String,
    pub exit_code: u8,
}

impl Output {
    fn ok(text: String) -> Self {
        Self { text, exit_code: 0 }
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: smallball_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| {
        let mut err = CliError::from(e);
        err.message = format!("{}: {}", path.display(), err.message);
        err
    })
}

fn load_model(args: &ModelArgs) -> CliResult<Option<SpectralModel>> {
    args.model.as_ref().map(|p| with_path(p, parse_model(&read(p)?))).transpose()
}

fn load_weight(args: &ModelArgs) -> CliResult<Option<Weight<f64>>> {
    let Some(path) = &args.weight else { return Ok(None) };
    let w = with_path(path, parse_weight(&read(path)?))?;
    if args.map_period {
        if w.period().is_none() {
            return Err(CliError::input("--map-period needs a periodic weight"));
        }
        return Ok(Some(w.reparametrize_period(std::f64::consts::TAU)?));
    }
    Ok(Some(w))
}

fn require<T>(v: Option<T>, what: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::input(format!("missing {what}")))
}

fn coefficients(arg: &CoefficientArg) -> CliResult<CoefficientSequence> {
    match arg {
        CoefficientArg::Delta0 => Ok(CoefficientSequence::finite(0, vec![1.0])?),
        CoefficientArg::File(path) => {
            let text = read(path)?;
            let doc: Value = with_path(path, serde_json::from_str(&text).map_err(Error::from))?;
            let offset = doc.get("offset").and_then(Value::as_i64).unwrap_or(0);
            let values = doc
                .get("values")
                .and_then(Value::as_array)
                .ok_or_else(|| CliError::input(format!("{}: expected {{\"offset\": i, \"values\": [...]}}", path.display())))?
                .iter()
                .map(|v| v.as_f64().ok_or_else(|| CliError::input(format!("{}: non-numeric coefficient", path.display()))))
                .collect::<CliResult<Vec<f64>>>()?;
            Ok(CoefficientSequence::finite(offset, values)?)
        }
    }
}

struct SequenceSetup {
    p: f64,
    d_minus: f64,
    d_plus: f64,
    a: CoefficientSequence,
}

fn sequence_setup(args: &SequenceArgs) -> CliResult<Option<SequenceSetup>> {
    let Some(a) = &args.a else { return Ok(None) };
    let p = require(args.p, "--p")?;
    let (d_minus, d_plus) = match (args.d_sym, args.d_minus, args.d_plus) {
        (Some(d), _, _) => (d, d),
        (None, Some(m), Some(p)) => (m, p),
        _ => return Err(CliError::input("missing --d-sym or --d-minus/--d-plus")),
    };
    Ok(Some(SequenceSetup {
        p,
        d_minus,
        d_plus,
        a: coefficients(a)?,
    }))
}

fn attach(value: &mut Value, key: &str, v: Value) {
    if let Value::Object(map) = value {
        map.insert(key.to_string(), v);
    }
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

pub fn cmd_constant(args: &ConstantArgs, workers: usize) -> CliResult<Output> {
    let pred = match args.theorem {
        Theorem::Sequence => {
            let s = require(sequence_setup(&args.sequence)?, "--a")?;
            constant_sequence(s.p, s.d_minus, s.d_plus, &s.a)?
        }
        Theorem::Fou => {
            let h = require(args.h, "--h")?;
            constant_fou(h, &require(load_weight(&args.model)?, "--weight")?)?
        }
        theorem => {
            let model = require(load_model(&args.model)?, "--model")?;
            let w = require(load_weight(&args.model)?, "--weight")?;
            match (theorem, &model) {
                (Theorem::PeriodicReal, SpectralModel::Discrete(s)) => {
                    if !s.is_even() {
                        return Err(CliError::input("periodic-real needs an even spectrum; use periodic-proper"));
                    }
                    constant_periodic_real(&s.tail(), &w)?
                }
                (Theorem::PeriodicProper, SpectralModel::Discrete(s)) => constant_periodic_proper(&s.tail(), &w)?,
                (Theorem::ContinuousReal, SpectralModel::Continuous(s)) => {
                    if !s.is_even() {
                        return Err(CliError::input("continuous-real needs an even spectrum; use continuous-proper"));
                    }
                    constant_continuous_real(&s.tail(), &w)?
                }
                (Theorem::ContinuousProper, SpectralModel::Continuous(s)) => constant_continuous_proper(&s.tail(), &w)?,
                (Theorem::PeriodicReal | Theorem::PeriodicProper, _) => {
                    return Err(CliError::input("periodic theorems need a discrete spectral model"))
                }
                _ => return Err(CliError::input("continuous theorems need a spectral density model on the line")),
            }
        }
    };
    let pred = match args.rescale {
        Some(Scale(c)) => rescale_epsilon(&pred, c)?,
        None => pred,
    };
    let mut v = serde_json::to_value(&pred).map_err(Error::from)?;
    attach(&mut v, "workers", json!(workers));
    Ok(Output::ok(pretty(&v)))
}

/// Eigenvalues plus, when known, the predicted law `λ_n ∼ C n^{−r}`.
pub struct Resolved {
    pub eig: EigenSequence<f64>,
    pub law: Option<(f64, f64)>,
    pub description: String,
}

fn read_eigs_csv(path: &Path) -> CliResult<EigenSequence<f64>> {
    let text = read(path)?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('n') {
            continue;
        }
        let field = line
            .split(',')
            .nth(1)
            .ok_or_else(|| CliError::input(format!("{}:{}: expected n,lambda_n", path.display(), i + 1)))?;
        let v: f64 = field
            .trim()
            .parse()
            .map_err(|e| CliError::input(format!("{}:{}: {e}", path.display(), i + 1)))?;
        values.push(v);
    }
    if values.is_empty() {
        return Err(CliError::input(format!("{}: no eigenvalues", path.display())));
    }
    Ok(EigenSequence::from_values(values, path.display().to_string()))
}

pub fn resolve(src: &SourceArgs) -> CliResult<Resolved> {
    if let Some(values) = &src.lambda {
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(CliError::input("--lambda values must be finite and non-negative"));
        }
        return Ok(Resolved {
            eig: EigenSequence::from_values(values.clone(), "explicit"),
            law: None,
            description: "explicit eigenvalues".into(),
        });
    }
    if let Some(r) = src.power {
        if !(r > 1.0) || !(src.prefactor > 0.0) || src.terms == 0 {
            return Err(CliError::input("synthetic law needs r > 1, C > 0 and at least one term"));
        }
        let values = (1..=src.terms).map(|n| src.prefactor * (n as f64).powf(-r)).collect();
        return Ok(Resolved {
            eig: EigenSequence::from_values(values, "synthetic"),
            law: Some((src.prefactor, r)),
            description: format!("λ_n = {} n^-{r}, n ≤ {}", src.prefactor, src.terms),
        });
    }
    if let Some(path) = &src.eigs_csv {
        return Ok(Resolved {
            eig: read_eigs_csv(path)?,
            law: None,
            description: format!("eigenvalues from {}", path.display()),
        });
    }
    if let Some(s) = sequence_setup(&src.sequence)? {
        let d = power_weights(s.p, s.d_minus, s.d_plus, src.k);
        let eig = eigenvalues(&assemble_sequence(&s.a, &d, src.k)?)?;
        let c = lemma_constant_sequence(s.p, s.d_minus, s.d_plus, &s.a)?;
        return Ok(Resolved {
            eig,
            law: Some((c, 2.0 * s.p)),
            description: format!("weighted sequence covariance, |k| ≤ {}", src.k),
        });
    }
    let model = require(load_model(&src.model)?, "an eigenvalue source (--model, --lambda, --power, --eigs-csv or --a)")?;
    let w = require(load_weight(&src.model)?, "--weight")?;
    match model {
        SpectralModel::Discrete(spec) => {
            let eig = eigenvalues(&assemble_periodic(&spec, &w, src.k)?)?;
            let c = lemma_constant_periodic(&spec.tail(), &w)?;
            Ok(Resolved {
                eig,
                law: Some((c, spec.tail().r)),
                description: format!("periodic Galerkin, |k| ≤ {}", src.k),
            })
        }
        SpectralModel::Continuous(spec) => {
            let kernel = ContinuousKernel::new(&spec)?;
            let eig = eigenvalues(&assemble_nystrom(&kernel, &w, src.n)?)?;
            let law = match w.domain() {
                WeightDomain::Periodic { .. } => None,
                _ => Some((lemma_constant_continuous(&spec.tail(), &w)?, spec.tail().r)),
            };
            Ok(Resolved {
                eig,
                law,
                description: format!("Nyström, {} nodes", src.n),
            })
        }
    }
}

fn window_for(eig: &EigenSequence<f64>, arg: Option<WindowArg>) -> CliResult<Window> {
    Ok(match arg {
        Some(WindowArg(a, b)) => Window::new(a, b)?,
        None => Window::default_for(eig.trusted_size)?,
    })
}

fn eigen_csv(eig: &EigenSequence<f64>, r: f64) -> CliResult<String> {
    let mut buf = Vec::new();
    eig.write_csv(r, &mut buf)?;
    Ok(String::from_utf8(buf).expect("CSV output is UTF-8"))
}

pub fn cmd_eigs(args: &EigsArgs, workers: usize) -> CliResult<Output> {
    let mut res = resolve(&args.source)?;
    if args.proper {
        res.eig = proper_doubling(&res.eig);
        res.law = res.law.map(|(c, r)| (c * 2f64.powf(r - 1.0), r));
    }
    let window = window_for(&res.eig, args.window)?;
    let fit = fit_power_law(&res.eig, window)?;
    let r_csv = res.law.map_or(fit.r_hat, |l| l.1);
    let csv = eigen_csv(&res.eig, r_csv)?;
    if let Some(path) = &args.csv_out {
        std::fs::write(path, &csv).map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    }
    if args.format == Format::Csv {
        return Ok(Output::ok(csv));
    }
    let theta = args.theta.unwrap_or(1.0 / fit.r_hat);
    let delta = delta_theta(&res.eig, theta, window)?;
    let pred = prediction_from_fit(fit.c_hat, fit.r_hat, "eigenvalue norm")?;
    let mut v = json!({
        "source": res.description,
        "size": res.eig.trusted_size,
        "fit": fit,
        "delta_theta": {"theta": theta, "median": delta.median, "spread": delta.spread},
        "prediction_from_fit": {"coefficient": pred.coefficient, "exponent": pred.exponent},
        "workers": workers,
    });
    if let Some((c, r)) = res.law {
        attach(&mut v, "predicted_law", json!({"c": c, "r": r, "relative_deviation": fit.c_hat / c - 1.0}));
    }
    Ok(Output::ok(pretty(&v)))
}

fn law_or_fit(res: &Resolved) -> CliResult<(f64, f64, &'static str)> {
    if let Some((c, r)) = res.law {
        return Ok((c, r, "predicted"));
    }
    let fit = fit_power_law(&res.eig, Window::default_for(res.eig.trusted_size)?)?;
    Ok((fit.c_hat, fit.r_hat, "fit"))
}

fn csv_num(x: f64) -> String {
    format!("{x:e}")
}

pub fn cmd_smallball(args: &SmallballArgs, workers: usize) -> CliResult<Output> {
    if args.eps.iter().any(|e| !(*e > 0.0)) {
        return Err(CliError::input("--eps values must be positive"));
    }
    let res = resolve(&args.source)?;
    let (c, r, law_source) = law_or_fit(&res)?;
    let tail = (!args.no_tail).then_some(AnalyticTail { c, r });
    let mut rows = Vec::with_capacity(args.eps.len());
    for &eps in &args.eps {
        let theorem = logprob_from_fit(c, r, eps)?;
        let ch = chernoff_logprob(&res.eig, tail, eps)?;
        let mc = if args.mc_samples > 0 && ch.log_prob >= MC_REACH {
            Some(mc_smallball(&res.eig, eps, args.mc_samples, args.seed, Tilt::Chernoff, workers)?)
        } else {
            None
        };
        rows.push((eps, theorem, ch, mc));
    }
    let text = match args.format {
        Format::Csv => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "# {}; law {law_source} C={c} r={r}; tail={}; seed={}; workers={workers}",
                res.description,
                tail.is_some(),
                args.seed
            );
            s.push_str("eps,theorem_logprob,chernoff_logprob,ratio,s_star,mc_probability,mc_std_error,mc_low_ess\n");
            for (eps, theorem, ch, mc) in &rows {
                let mc_cells = mc.as_ref().map_or(",,".to_string(), |m| {
                    format!("{},{},{}", csv_num(m.probability), csv_num(m.std_error), m.low_ess)
                });
                let _ = writeln!(
                    s,
                    "{},{},{},{},{},{mc_cells}",
                    csv_num(*eps),
                    csv_num(*theorem),
                    csv_num(ch.log_prob),
                    csv_num(ch.log_prob / theorem),
                    csv_num(ch.s_star)
                );
            }
            s
        }
        Format::Json => {
            let rows: Vec<Value> = rows
                .iter()
                .map(|(eps, theorem, ch, mc)| {
                    json!({
                        "eps": eps,
                        "theorem_logprob": theorem,
                        "chernoff": ch,
                        "ratio": ch.log_prob / theorem,
                        "mc": mc,
                    })
                })
                .collect();
            pretty(&json!({
                "source": res.description,
                "law": {"c": c, "r": r, "source": law_source},
                "tail_attached": tail.is_some(),
                "seed": args.seed,
                "workers": workers,
                "rows": rows,
            }))
        }
    };
    Ok(Output::ok(text))
}

pub fn cmd_mc(args: &McArgs, workers: usize) -> CliResult<Output> {
    let res = resolve(&args.source)?;
    let tilt = match args.tilt {
        TiltArg::None => Tilt::None,
        TiltArg::Chernoff => Tilt::Chernoff,
        TiltArg::Fixed(s) => Tilt::Fixed(s),
    };
    let est = mc_smallball(&res.eig, args.eps, args.samples, args.seed, tilt, workers)?;
    let bound = chernoff_logprob(&res.eig, None, args.eps)?;
    let mut v = serde_json::to_value(&est).map_err(Error::from)?;
    attach(&mut v, "eps", json!(args.eps));
    attach(&mut v, "source", json!(res.description));
    attach(&mut v, "chernoff_logprob", json!(bound.log_prob));
    Ok(Output::ok(pretty(&v)))
}

pub fn cmd_sample(args: &SampleArgs, workers: usize) -> CliResult<Output> {
    let model = require(load_model(&args.model)?, "--model")?;
    let mut out = Vec::new();
    match model {
        SpectralModel::Discrete(spec) => {
            let kind = if args.proper { PathKind::Proper } else { PathKind::Real };
            if let Some(n) = args.paths {
                let w = require(load_weight(&args.model)?, "--weight")?;
                let norms = batch_norms(&spec, &w, kind, args.k, args.grid, n, args.seed, workers)?;
                write_header(&mut out, args, workers);
                write_norms_csv(&norms, &mut out)?;
            } else {
                let path = match kind {
                    PathKind::Real => sample_real_periodic(&spec, args.k, args.grid, args.seed, args.stream)?,
                    PathKind::Proper => sample_proper_periodic(&spec, args.k, args.grid, args.seed, args.stream)?,
                };
                write_header(&mut out, args, workers);
                path.write_csv(&mut out)?;
            }
        }
        SpectralModel::Continuous(spec) => {
            if args.proper {
                return Err(CliError::input("proper sampling is only available for periodic models"));
            }
            let w = require(load_weight(&args.model)?, "--weight")?;
            let kernel = ContinuousKernel::new(&spec)?;
            let sampler = OperatorSampler::new(&assemble_nystrom(&kernel, &w, args.n)?, &w)?;
            write_header(&mut out, args, workers);
            if let Some(n) = args.paths {
                let norms: Vec<f64> = (0..n).map(|i| sampler.sample(args.seed, i as u64).1).collect();
                write_norms_csv(&norms, &mut out)?;
            } else {
                sampler.sample(args.seed, args.stream).0.write_csv(&mut out)?;
            }
        }
    }
    Ok(Output::ok(String::from_utf8(out).expect("CSV output is UTF-8")))
}

fn write_header(out: &mut Vec<u8>, args: &SampleArgs, workers: usize) {
    let line = format!(
        "# seed={} stream={} workers={workers} generator=ChaCha20\n",
        args.seed,
        if args.paths.is_some() { "path index".to_string() } else { args.stream.to_string() }
    );
    out.extend_from_slice(line.as_bytes());
}
