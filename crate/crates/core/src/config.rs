//! JSON documents for spectral models and weights.
//!
//! ```json
//! {"kind": "bogoliubov", "omega": 1.0}
//! {"kind": "discrete_table", "masses": [[0, 1.0], [1, 0.5], [-1, 0.5]], "tail": {"r": 2, "m": 0.5}}
//! {"kind": "exponential", "a": 0.5, "period": "2pi"}
//! ```

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::spectrum::{
    bogoliubov_spectrum, fou_spectrum, integrated_bridge_spectrum, ContinuousSpectrum, DiscreteSpectrum, TailDescriptor,
};
use crate::weights::{log_pullback_weight, Weight, WeightDomain};

/// A number, or one of `"2pi"`, `"tau"`, `"pi"`.
#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
enum Length {
    Number(f64),
    Named(Named),
}

#[derive(Debug, Clone, Copy, Deserialize)]
enum Named {
    #[serde(rename = "2pi", alias = "tau")]
    Tau,
    #[serde(rename = "pi")]
    Pi,
}

impl Length {
    fn value(self) -> f64 {
        match self {
            Length::Number(v) => v,
            Length::Named(Named::Tau) => std::f64::consts::TAU,
            Length::Named(Named::Pi) => std::f64::consts::PI,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TailDoc {
    r: f64,
    m: Option<f64>,
    m_minus: Option<f64>,
    m_plus: Option<f64>,
}

impl TailDoc {
    fn build(&self) -> Result<TailDescriptor<f64>> {
        match (self.m, self.m_minus, self.m_plus) {
            (Some(m), None, None) => TailDescriptor::symmetric(self.r, m),
            (None, Some(a), Some(b)) => TailDescriptor::new(self.r, a, b),
            _ => Err(Error::Config("tail needs either `m` or both `m_minus` and `m_plus`".into())),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum ModelDoc {
    Bogoliubov {
        omega: f64,
        truncation: Option<u64>,
    },
    IntegratedBridge {
        m: u32,
        truncation: Option<u64>,
    },
    Fou {
        h: f64,
    },
    DiscreteTable {
        masses: Vec<(i64, f64)>,
        tail: TailDoc,
        truncation: Option<u64>,
    },
    DensityTable {
        points: Vec<(f64, f64)>,
        tail: TailDoc,
    },
    TailOnly {
        tail: TailDoc,
    },
}

/// A parsed spectral model.
#[derive(Debug, Clone, PartialEq)]
pub enum SpectralModel {
    Discrete(DiscreteSpectrum<f64>),
    Continuous(ContinuousSpectrum<f64>),
}

impl SpectralModel {
    pub fn tail(&self) -> TailDescriptor<f64> {
        match self {
            SpectralModel::Discrete(s) => s.tail(),
            SpectralModel::Continuous(s) => s.tail(),
        }
    }

    pub fn is_even(&self) -> bool {
        match self {
            SpectralModel::Discrete(s) => s.is_even(),
            SpectralModel::Continuous(s) => s.is_even(),
        }
    }
}

fn truncate(spec: DiscreteSpectrum<f64>, t: Option<u64>) -> Result<DiscreteSpectrum<f64>> {
    match t {
        Some(k) => spec.with_truncation(k),
        None => Ok(spec),
    }
}

/// Parses a model document. JSON syntax errors report line and column.
pub fn parse_model(text: &str) -> Result<SpectralModel> {
    let doc: ModelDoc = serde_json::from_str(text)?;
    Ok(match doc {
        ModelDoc::Bogoliubov { omega, truncation } => SpectralModel::Discrete(truncate(bogoliubov_spectrum(omega)?, truncation)?),
        ModelDoc::IntegratedBridge { m, truncation } => {
            SpectralModel::Discrete(truncate(integrated_bridge_spectrum(m)?, truncation)?)
        }
        ModelDoc::Fou { h } => SpectralModel::Continuous(fou_spectrum(h)?),
        ModelDoc::DiscreteTable { masses, tail, truncation } => {
            SpectralModel::Discrete(truncate(DiscreteSpectrum::from_table(&masses, tail.build()?)?, truncation)?)
        }
        ModelDoc::DensityTable { points, tail } => SpectralModel::Continuous(ContinuousSpectrum::from_table(points, tail.build()?)?),
        ModelDoc::TailOnly { tail } => SpectralModel::Continuous(ContinuousSpectrum::tail_only(tail.build()?)),
    })
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum DomainName {
    Periodic,
    RealLine,
    HalfLine,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum WeightDoc {
    Constant {
        value: f64,
        domain: Option<DomainName>,
        period: Option<Length>,
    },
    Exponential {
        a: f64,
        period: Option<Length>,
    },
    Indicator {
        start: f64,
        end: f64,
        domain: Option<DomainName>,
        period: Option<Length>,
    },
    Tabulated {
        points: Vec<(f64, f64)>,
        domain: Option<DomainName>,
        period: Option<Length>,
    },
    LogPullback {
        h: f64,
        base: Box<WeightDoc>,
    },
    TwoSidedExponential {
        rate: f64,
    },
    PowerDecay {
        power: f64,
    },
    Scaled {
        factor: f64,
        base: Box<WeightDoc>,
    },
    Sum {
        parts: Vec<WeightDoc>,
    },
}

fn domain(name: Option<DomainName>, period: Option<Length>) -> Result<WeightDomain<f64>> {
    match (name, period) {
        (None | Some(DomainName::Periodic), Some(p)) => Ok(WeightDomain::Periodic { period: p.value() }),
        (Some(DomainName::Periodic), None) => Ok(WeightDomain::Periodic {
            period: std::f64::consts::TAU,
        }),
        (None | Some(DomainName::RealLine), None) => Ok(WeightDomain::RealLine),
        (Some(DomainName::HalfLine), None) => Ok(WeightDomain::PositiveHalfLine),
        (Some(_), Some(_)) => Err(Error::Config("`period` is only allowed for periodic weights".into())),
    }
}

impl WeightDoc {
    fn build(self) -> Result<Weight<f64>> {
        match self {
            WeightDoc::Constant { value, domain: d, period } => Weight::constant(value, domain(d, period)?),
            WeightDoc::Exponential { a, period } => {
                Weight::exponential(a, period.map_or(std::f64::consts::TAU, Length::value))
            }
            WeightDoc::Indicator {
                start,
                end,
                domain: d,
                period,
            } => Weight::indicator(start, end, domain(d, period)?),
            WeightDoc::Tabulated { points, domain: d, period } => Weight::tabulated(points, domain(d, period)?),
            WeightDoc::LogPullback { h, base } => log_pullback_weight(&base.build()?, h),
            WeightDoc::TwoSidedExponential { rate } => Weight::two_sided_exponential(rate),
            WeightDoc::PowerDecay { power } => Weight::power_decay(power),
            WeightDoc::Scaled { factor, base } => base.build()?.scaled(factor),
            WeightDoc::Sum { parts } => Weight::sum(parts.into_iter().map(WeightDoc::build).collect::<Result<_>>()?),
        }
    }
}

/// Parses a weight document. Without `period` or `domain` a weight lives on
/// the real line, except `exponential`, which defaults to period `2π`.
pub fn parse_weight(text: &str) -> Result<Weight<f64>> {
    let doc: WeightDoc = serde_json::from_str(text)?;
    doc.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::WeightKind;
    use std::f64::consts::TAU;

    #[test]
    fn models() {
        let SpectralModel::Discrete(b) = parse_model(r#"{"kind": "bogoliubov", "omega": 1}"#).unwrap() else {
            panic!()
        };
        assert_eq!(b, bogoliubov_spectrum(1.0).unwrap());
        let m = parse_model(r#"{"kind":"discrete_table","masses":[[0,1.0],[1,0.25],[-1,0.25]],"tail":{"r":2,"m":0.25}}"#).unwrap();
        assert!(m.is_even());
        let m = parse_model(r#"{"kind":"tail_only","tail":{"r":2.4,"m_minus":1,"m_plus":2}}"#).unwrap();
        assert!(!m.is_even());
        assert_eq!(m.tail().m_plus, 2.0);
        assert!(matches!(parse_model(r#"{"kind":"fou","h":0.5}"#).unwrap(), SpectralModel::Continuous(_)));
        assert!(parse_model(r#"{"kind":"density_table","points":[[-1,0.5],[0,1],[1,0.5]],"tail":{"r":2,"m":1}}"#).is_ok());
        assert!(parse_model(r#"{"kind":"integrated_bridge","m":2,"truncation":1000}"#).is_ok());
    }

    #[test]
    fn weights() {
        let w = parse_weight(r#"{"kind":"constant","value":1,"period":"2pi"}"#).unwrap();
        assert_eq!(w.period(), Some(TAU));
        let w = parse_weight(r#"{"kind":"exponential","a":0.5}"#).unwrap();
        assert_eq!(w.kind(), &WeightKind::Exponential { a: 0.5 });
        let w = parse_weight(r#"{"kind":"indicator","start":0,"end":1}"#).unwrap();
        assert_eq!(w.domain(), WeightDomain::RealLine);
        let w = parse_weight(r#"{"kind":"log_pullback","h":0.5,"base":{"kind":"indicator","start":0,"end":1}}"#).unwrap();
        assert_eq!(w.domain(), WeightDomain::PositiveHalfLine);
        let w = parse_weight(r#"{"kind":"sum","parts":[{"kind":"power_decay","power":1},{"kind":"two_sided_exponential","rate":1}]}"#);
        assert!(w.is_ok());
        assert!(parse_weight(r#"{"kind":"tabulated","points":[[0,1],[1,2]],"period":1}"#).is_ok());
    }

    #[test]
    fn errors_carry_location() {
        let err = parse_model("{\n  \"kind\": \"bogoliubov\",\n  \"omega\": 1,,\n}").unwrap_err();
        let Error::Json(e) = &err else { panic!("{err}") };
        assert_eq!(e.line(), 3);
        assert!(err.to_string().contains("line 3"));
        assert!(parse_model(r#"{"kind":"nope"}"#).is_err());
        assert!(parse_model(r#"{"kind":"bogoliubov","omega":-1}"#).is_err());
        assert!(parse_weight(r#"{"kind":"constant","value":1,"domain":"real_line","period":1}"#).is_err());
        assert!(parse_weight(r#"{"kind":"tabulated","points":[[1,1],[0,2]]}"#).is_err());
    }
}
