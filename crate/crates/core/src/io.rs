//! JSON file formats for distributions and mechanisms.
//!
//! Distributions are either explicit (`{"probs": [...], "labels": [...],
//! "mode": "exact"|"float"}`) or generated (`{"type": "uniform", "m": N}`,
//! `{"type": "zipf", "m": N, "s": X}`). Mechanisms are either explicit
//! (`{"inputs": [...], "outputs": [...], "kernel": [[...], ...]}`) or
//! generated (`{"type": "krr", "k": K, "e_eps": "3"}`, `{"type":
//! "laplace", "eps": 1.0, "bins": 201}`).
//!
//! Probabilities are decimal strings (or "num/den" rationals); exact mode
//! parses them without rounding and serializes them back as exact
//! rationals, so emitted files reproduce the original values bit for bit.

use serde_json::{json, Value};

use crate::dist::DiscreteDistribution;
use crate::mechanism::{discretized_laplace, krr, Mechanism};
use crate::numeric::{Float, NumericMode, Scalar};
use crate::{Error, Result};

/// A distribution file, parsed but not yet bound to a numeric mode.
#[derive(Clone, Debug, PartialEq)]
pub enum DistributionSpec {
    Explicit {
        labels: Option<Vec<String>>,
        probs: Vec<String>,
        mode: Option<String>,
    },
    Uniform {
        m: usize,
    },
    Zipf {
        m: usize,
        s: f64,
    },
}

impl DistributionSpec {
    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("distribution file must be a JSON object".into()))?;
        if let Some(kind) = obj.get("type") {
            let kind = kind
                .as_str()
                .ok_or_else(|| Error::Parse("\"type\" must be a string".into()))?;
            return match kind {
                "uniform" => Ok(DistributionSpec::Uniform {
                    m: get_usize(obj, "m")?,
                }),
                "zipf" => Ok(DistributionSpec::Zipf {
                    m: get_usize(obj, "m")?,
                    s: get_f64(obj, "s")?,
                }),
                other => Err(Error::Parse(format!("unknown distribution type '{other}'"))),
            };
        }
        let probs = obj
            .get("probs")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("missing \"probs\" array".into()))?
            .iter()
            .map(value_to_number_string)
            .collect::<Result<Vec<_>>>()?;
        let labels = match obj.get("labels") {
            None | Some(Value::Null) => None,
            Some(Value::Array(items)) => Some(
                items
                    .iter()
                    .map(|v| match v {
                        Value::String(s) => Ok(s.clone()),
                        Value::Number(n) => Ok(n.to_string()),
                        _ => Err(Error::Parse("labels must be strings".into())),
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            Some(_) => return Err(Error::Parse("\"labels\" must be an array".into())),
        };
        let mode = obj
            .get("mode")
            .map(|v| {
                v.as_str()
                    .map(str::to_owned)
                    .ok_or_else(|| Error::Parse("\"mode\" must be a string".into()))
            })
            .transpose()?;
        Ok(DistributionSpec::Explicit { labels, probs, mode })
    }

    /// Mode requested by the file itself, if any.
    pub fn declared_mode(&self) -> Option<&str> {
        match self {
            DistributionSpec::Explicit { mode, .. } => mode.as_deref(),
            _ => None,
        }
    }

    /// Zipf exponent when this spec is a Zipf family (for range warnings).
    pub fn zipf_exponent(&self) -> Option<f64> {
        match self {
            DistributionSpec::Zipf { s, .. } => Some(*s),
            _ => None,
        }
    }

    /// Binds the spec to a numeric mode and builds the distribution.
    pub fn realize<M: NumericMode>(&self, mode: M) -> Result<DiscreteDistribution<M>> {
        match self {
            DistributionSpec::Explicit { labels, probs, .. } => {
                let values = probs
                    .iter()
                    .map(|s| {
                        M::Value::parse(s)
                            .ok_or_else(|| Error::Parse(format!("bad probability '{s}'")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                match labels {
                    Some(labels) => DiscreteDistribution::new(labels.clone(), values, mode),
                    None => DiscreteDistribution::from_probs(values, mode),
                }
            }
            DistributionSpec::Uniform { m } => DiscreteDistribution::uniform(*m, mode),
            DistributionSpec::Zipf { m, s } => DiscreteDistribution::zipf(*m, *s, mode),
        }
    }
}

pub fn parse_distribution_str(text: &str) -> Result<DistributionSpec> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid JSON: {e}")))?;
    DistributionSpec::from_json(&value)
}

pub fn distribution_to_json<M: NumericMode>(dist: &DiscreteDistribution<M>) -> Value {
    json!({
        "labels": dist.labels(),
        "probs": dist.probs().iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "mode": dist.mode().name(),
    })
}

/// A mechanism file, parsed but not yet bound to a numeric mode.
#[derive(Clone, Debug, PartialEq)]
pub enum MechanismSpec {
    Explicit {
        inputs: Vec<String>,
        outputs: Vec<String>,
        kernel: Vec<Vec<String>>,
    },
    Krr {
        k: usize,
        e_eps: String,
    },
    Laplace {
        eps: f64,
        bins: usize,
    },
}

impl MechanismSpec {
    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Parse("mechanism file must be a JSON object".into()))?;
        if let Some(kind) = obj.get("type") {
            let kind = kind
                .as_str()
                .ok_or_else(|| Error::Parse("\"type\" must be a string".into()))?;
            return match kind {
                "krr" => Ok(MechanismSpec::Krr {
                    k: get_usize(obj, "k")?,
                    e_eps: obj
                        .get("e_eps")
                        .map(value_to_number_string)
                        .transpose()?
                        .ok_or_else(|| Error::Parse("krr needs \"e_eps\"".into()))?,
                }),
                "laplace" => Ok(MechanismSpec::Laplace {
                    eps: get_f64(obj, "eps")?,
                    bins: get_usize(obj, "bins")?,
                }),
                other => Err(Error::Parse(format!("unknown mechanism type '{other}'"))),
            };
        }
        let strings = |key: &str| -> Result<Vec<String>> {
            obj.get(key)
                .and_then(Value::as_array)
                .ok_or_else(|| Error::Parse(format!("missing \"{key}\" array")))?
                .iter()
                .map(|v| match v {
                    Value::String(s) => Ok(s.clone()),
                    Value::Number(n) => Ok(n.to_string()),
                    _ => Err(Error::Parse(format!("\"{key}\" entries must be strings"))),
                })
                .collect()
        };
        let kernel = obj
            .get("kernel")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("missing \"kernel\" matrix".into()))?
            .iter()
            .map(|row| {
                row.as_array()
                    .ok_or_else(|| Error::Parse("kernel rows must be arrays".into()))?
                    .iter()
                    .map(value_to_number_string)
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MechanismSpec::Explicit {
            inputs: strings("inputs")?,
            outputs: strings("outputs")?,
            kernel,
        })
    }

    /// Laplace kernels are built from exponentials, so they are only
    /// available in float mode.
    pub fn requires_float(&self) -> bool {
        matches!(self, MechanismSpec::Laplace { .. })
    }

    pub fn realize<M: NumericMode>(&self, mode: M) -> Result<Mechanism<M>> {
        match self {
            MechanismSpec::Explicit {
                inputs,
                outputs,
                kernel,
            } => {
                let values = kernel
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|s| {
                                M::Value::parse(s).ok_or_else(|| {
                                    Error::Parse(format!("bad kernel entry '{s}'"))
                                })
                            })
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                Mechanism::new(inputs.clone(), outputs.clone(), values, mode)
            }
            MechanismSpec::Krr { k, e_eps } => {
                let e_eps = M::Value::parse(e_eps)
                    .ok_or_else(|| Error::Parse(format!("bad e_eps '{e_eps}'")))?;
                krr(*k, e_eps, mode)
            }
            MechanismSpec::Laplace { .. } => Err(Error::Parse(
                "laplace mechanisms are float-only; realize via realize_float".into(),
            )),
        }
    }

    pub fn realize_float(&self, mode: Float) -> Result<Mechanism<Float>> {
        match self {
            MechanismSpec::Laplace { eps, bins } => discretized_laplace(*eps, *bins),
            other => other.realize(mode),
        }
    }
}

pub fn parse_mechanism_str(text: &str) -> Result<MechanismSpec> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid JSON: {e}")))?;
    MechanismSpec::from_json(&value)
}

pub fn mechanism_to_json<M: NumericMode>(mechanism: &Mechanism<M>) -> Value {
    json!({
        "inputs": mechanism.input_labels(),
        "outputs": mechanism.output_labels(),
        "kernel": mechanism
            .kernel()
            .iter()
            .map(|row| row.iter().map(|v| v.to_string()).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
    })
}

fn value_to_number_string(v: &Value) -> Result<String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        // serde_json renders numbers with the shortest round-trip decimal,
        // which exact mode then parses without loss
        Value::Number(n) => Ok(n.to_string()),
        _ => Err(Error::Parse(format!("expected a number or string, got {v}"))),
    }
}

fn get_usize(obj: &serde_json::Map<String, Value>, key: &str) -> Result<usize> {
    obj.get(key)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| Error::Parse(format!("missing or invalid \"{key}\"")))
}

fn get_f64(obj: &serde_json::Map<String, Value>, key: &str) -> Result<f64> {
    obj.get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| Error::Parse(format!("missing or invalid \"{key}\"")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::Exact;
    use num::rational::BigRational;

    fn r(num: i64, den: u64) -> BigRational {
        BigRational::from_ratio(num, den)
    }

    #[test]
    fn parses_explicit_distribution_exactly() {
        let spec = parse_distribution_str(
            r#"{"probs": ["0.25", "3/4"], "labels": ["a", "b"], "mode": "exact"}"#,
        )
        .unwrap();
        assert_eq!(spec.declared_mode(), Some("exact"));
        let d = spec.realize(Exact).unwrap();
        assert_eq!(d.probs(), &[r(1, 4), r(3, 4)]);
    }

    #[test]
    fn parses_generated_forms() {
        let spec = parse_distribution_str(r#"{"type": "uniform", "m": 4}"#).unwrap();
        let d = spec.realize(Exact).unwrap();
        assert_eq!(d.probs()[0], r(1, 4));
        let spec = parse_distribution_str(r#"{"type": "zipf", "m": 2, "s": 1.0}"#).unwrap();
        let d = spec.realize(Exact).unwrap();
        assert_eq!(d.probs(), &[r(2, 3), r(1, 3)]);
        assert_eq!(spec.zipf_exponent(), Some(1.0));
    }

    #[test]
    fn exact_round_trip_through_json() {
        let d = DiscreteDistribution::new(
            vec!["x".into(), "y".into(), "z".into()],
            vec![r(1, 3), r(1, 6), r(1, 2)],
            Exact,
        )
        .unwrap();
        let text = distribution_to_json(&d).to_string();
        let spec = parse_distribution_str(&text).unwrap();
        let back = spec.realize(Exact).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn float_round_trip_through_json() {
        let mode = Float::default();
        let d = DiscreteDistribution::new(
            vec!["x".into(), "y".into()],
            vec![0.1, 0.9],
            mode,
        )
        .unwrap();
        let text = distribution_to_json(&d).to_string();
        let back = parse_distribution_str(&text).unwrap().realize(mode).unwrap();
        assert_eq!(back.probs(), d.probs()); // shortest round-trip is exact
    }

    #[test]
    fn accepts_json_numbers_as_probabilities() {
        let spec = parse_distribution_str(r#"{"probs": [0.5, 0.5]}"#).unwrap();
        let d = spec.realize(Exact).unwrap();
        assert_eq!(d.probs(), &[r(1, 2), r(1, 2)]);
    }

    #[test]
    fn rejects_malformed_files() {
        assert!(parse_distribution_str("[1,2]").is_err());
        assert!(parse_distribution_str(r#"{"type": "nope"}"#).is_err());
        assert!(parse_distribution_str(r#"{"probs": "x"}"#).is_err());
        assert!(parse_distribution_str(r#"{"probs": ["abc"]}"#)
            .unwrap()
            .realize(Exact)
            .is_err());
    }

    #[test]
    fn parses_mechanism_forms() {
        let spec =
            parse_mechanism_str(r#"{"type": "krr", "k": 2, "e_eps": "3"}"#).unwrap();
        let m = spec.realize(Exact).unwrap();
        assert_eq!(m.kernel()[0], vec![r(3, 4), r(1, 4)]);

        let spec = parse_mechanism_str(
            r#"{"inputs": ["1"], "outputs": ["a", "b"], "kernel": [["1/3", "2/3"]]}"#,
        )
        .unwrap();
        let m = spec.realize(Exact).unwrap();
        assert_eq!(m.kernel()[0], vec![r(1, 3), r(2, 3)]);

        let spec =
            parse_mechanism_str(r#"{"type": "laplace", "eps": 1.0, "bins": 11}"#).unwrap();
        assert!(spec.requires_float());
        let m = spec.realize_float(Float::default()).unwrap();
        assert_eq!(m.num_inputs(), 11);
        assert!(spec.realize(Exact).is_err());
    }

    #[test]
    fn mechanism_round_trip() {
        let m = krr::<Exact>(3, r(2, 1), Exact).unwrap();
        let text = mechanism_to_json(&m).to_string();
        let back = parse_mechanism_str(&text).unwrap().realize(Exact).unwrap();
        assert_eq!(back.kernel(), m.kernel());
    }
}
