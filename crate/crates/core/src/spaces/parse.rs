//! Space specs as JSON (`{"family": ..., "params": {...}}`) and as the
//! flag mini-language (`lp:2`, `lorentz:geometric:0.5:p=1`, `sargent_m:sqrt`).

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use super::{Growth, OrliczFunction, SpaceSpec, TailRule, Weights};
use crate::error::{Error, Result};

pub(super) fn orlicz_label(m: &OrliczFunction) -> String {
    match m {
        OrliczFunction::Power { p } => format!("power:{p}"),
        OrliczFunction::PowerLog { p } => format!("power_log:{p}"),
        OrliczFunction::Tabulated { breakpoints } => format!("tabulated[{}]", breakpoints.len()),
    }
}

fn growth_of(family: &str) -> Growth {
    if family.starts_with("sargent") {
        Growth::Grow
    } else {
        Growth::Decay
    }
}

fn number(token: &str, what: &str) -> Result<f64> {
    match token {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => token
            .parse::<f64>()
            .map_err(|_| Error::InvalidSpec(format!("bad {what} `{token}`"))),
    }
}

impl SpaceSpec {
    /// Parses the flag mini-language. The result is validated.
    pub fn parse_dsl(text: &str) -> Result<SpaceSpec> {
        let mut tokens = text.trim().split(':');
        let family = tokens.next().unwrap_or_default();
        let rest: Vec<&str> = tokens.collect();
        let bad = || Error::InvalidSpec(format!("cannot parse space `{text}`"));

        let mut p = None;
        let mut rule = Vec::new();
        for tok in &rest {
            match tok.strip_prefix("p=") {
                Some(v) => p = Some(number(v, "exponent")?),
                None => rule.push(*tok),
            }
        }
        let weights = |rule: &[&str]| -> Result<Weights> {
            if rule.is_empty() {
                return Err(bad());
            }
            Ok(Weights::from_tail(
                TailRule::parse(&rule.join(":"))?,
                growth_of(family),
            ))
        };

        let spec = match family {
            "lp" | "l" => match rest.as_slice() {
                [v] => SpaceSpec::Lp {
                    p: number(v, "exponent")?,
                },
                _ => return Err(bad()),
            },
            "c0" if rest.is_empty() => SpaceSpec::C0,
            "orlicz" => match rest.as_slice() {
                ["power", v] => SpaceSpec::Orlicz(OrliczFunction::Power {
                    p: number(v, "exponent")?,
                }),
                ["power_log", v] => SpaceSpec::Orlicz(OrliczFunction::PowerLog {
                    p: number(v, "exponent")?,
                }),
                _ => return Err(bad()),
            },
            "lorentz" => SpaceSpec::Lorentz {
                weights: weights(&rule)?,
                p: p.unwrap_or(1.0),
            },
            "garling_mu" => SpaceSpec::GarlingMu {
                weights: weights(&rule)?,
                p: p.ok_or_else(bad)?,
            },
            "garling_nu" => SpaceSpec::GarlingNu {
                weights: weights(&rule)?,
                p: p.ok_or_else(bad)?,
            },
            "sargent_m" if p.is_none() => SpaceSpec::SargentM {
                phi: weights(&rule)?,
            },
            "sargent_n" if p.is_none() => SpaceSpec::SargentN {
                phi: weights(&rule)?,
            },
            _ => return Err(bad()),
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Parses the JSON schema. The result is validated.
    pub fn from_json_str(text: &str) -> Result<SpaceSpec> {
        let spec: SpaceSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Either form: JSON when the text starts with `{`, the mini-language otherwise.
    pub fn parse_any(text: &str) -> Result<SpaceSpec> {
        if text.trim_start().starts_with('{') {
            Self::from_json_str(text)
        } else {
            Self::parse_dsl(text)
        }
    }

    fn params(&self) -> Value {
        let p_value = |p: f64| {
            if p.is_infinite() {
                json!("inf")
            } else {
                json!(p)
            }
        };
        match self {
            SpaceSpec::Lp { p } => json!({ "p": p_value(*p) }),
            SpaceSpec::Orlicz(m) => json!({ "function": m }),
            SpaceSpec::Modular(ms) => json!({ "functions": ms }),
            SpaceSpec::Lorentz { weights, p }
            | SpaceSpec::GarlingMu { weights, p }
            | SpaceSpec::GarlingNu { weights, p } => json!({ "weights": weights, "p": p }),
            SpaceSpec::SargentM { phi } | SpaceSpec::SargentN { phi } => json!({ "phi": phi }),
            SpaceSpec::C0 => json!({}),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Repr {
    family: String,
    #[serde(default)]
    params: Value,
}

impl Serialize for SpaceSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        Repr {
            family: self.family().to_string(),
            params: self.params(),
        }
        .serialize(s)
    }
}

fn field<T: serde::de::DeserializeOwned>(
    params: &Value,
    key: &str,
) -> std::result::Result<T, String> {
    let v = params
        .get(key)
        .ok_or_else(|| format!("missing params.{key}"))?;
    serde_json::from_value(v.clone()).map_err(|e| format!("params.{key}: {e}"))
}

fn exponent(params: &Value) -> std::result::Result<f64, String> {
    match params.get("p") {
        Some(Value::String(s)) if s == "inf" => Ok(f64::INFINITY),
        Some(Value::Number(n)) => n.as_f64().ok_or_else(|| "params.p".to_string()),
        _ => Err("params.p must be a number or \"inf\"".into()),
    }
}

impl<'de> Deserialize<'de> for SpaceSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = Repr::deserialize(d)?;
        let params = &repr.params;
        let growth = growth_of(&repr.family);
        let weights = |key: &str| field::<Weights>(params, key).map(|w| w.with_growth(growth));
        let spec = match repr.family.as_str() {
            "lp" => exponent(params).map(|p| SpaceSpec::Lp { p }),
            "c0" => Ok(SpaceSpec::C0),
            "orlicz" if params.get("functions").is_some() => {
                field(params, "functions").map(SpaceSpec::Modular)
            }
            "orlicz" => field(params, "function").map(SpaceSpec::Orlicz),
            "lorentz" => weights("weights").and_then(|weights| {
                Ok(SpaceSpec::Lorentz {
                    weights,
                    p: exponent(params)?,
                })
            }),
            "garling_mu" => weights("weights").and_then(|weights| {
                Ok(SpaceSpec::GarlingMu {
                    weights,
                    p: exponent(params)?,
                })
            }),
            "garling_nu" => weights("weights").and_then(|weights| {
                Ok(SpaceSpec::GarlingNu {
                    weights,
                    p: exponent(params)?,
                })
            }),
            "sargent_m" => weights("phi").map(|phi| SpaceSpec::SargentM { phi }),
            "sargent_n" => weights("phi").map(|phi| SpaceSpec::SargentN { phi }),
            other => Err(format!("unknown family `{other}`")),
        };
        spec.map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dsl_examples() {
        assert_eq!(
            SpaceSpec::parse_dsl("lp:2").unwrap(),
            SpaceSpec::Lp { p: 2.0 }
        );
        assert_eq!(
            SpaceSpec::parse_dsl("lp:inf").unwrap(),
            SpaceSpec::Lp { p: f64::INFINITY }
        );
        assert_eq!(SpaceSpec::parse_dsl("c0").unwrap(), SpaceSpec::C0);
        match SpaceSpec::parse_dsl("lorentz:geometric:0.5:p=1").unwrap() {
            SpaceSpec::Lorentz { weights, p } => {
                assert_eq!(p, 1.0);
                assert_eq!(weights.take(3), vec![1.0, 0.5, 0.25]);
            }
            other => panic!("{other:?}"),
        }
        match SpaceSpec::parse_dsl("sargent_m:sqrt").unwrap() {
            SpaceSpec::SargentM { phi } => assert_eq!(phi.get(9), 3.0),
            other => panic!("{other:?}"),
        }
        match SpaceSpec::parse_dsl("garling_mu:power:0.5:p=2").unwrap() {
            SpaceSpec::GarlingMu { weights, p } => {
                assert_eq!(p, 2.0);
                assert_eq!(weights.get(4), 0.5);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn dsl_rejects_bad_input() {
        for text in [
            "lorentz:bad",
            "lp",
            "lp:x",
            "lp:0.5",
            "garling_mu:sqrt",
            "sargent_m:power:1.2",
            "nope:1",
            "c0:1",
        ] {
            assert!(
                matches!(SpaceSpec::parse_dsl(text), Err(Error::InvalidSpec(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn json_schema() {
        let spec = SpaceSpec::from_json_str(
            r#"{"family": "sargent_n", "params": {"phi": {"prefix": [1.0, 1.4], "tail": "sqrt"}}}"#,
        )
        .unwrap();
        match &spec {
            SpaceSpec::SargentN { phi } => {
                assert_eq!(phi.growth, Growth::Grow);
                assert_eq!(phi.get(2), 1.4);
                assert_eq!(phi.get(4), 2.0);
            }
            other => panic!("{other:?}"),
        }
        let back: SpaceSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);

        let lp: SpaceSpec =
            serde_json::from_str(r#"{"family":"lp","params":{"p":"inf"}}"#).unwrap();
        assert_eq!(lp, SpaceSpec::Lp { p: f64::INFINITY });
        let orlicz = SpaceSpec::from_json_str(
            r#"{"family":"orlicz","params":{"function":{"kind":"tabulated","breakpoints":[[1,1],[2,4]]}}}"#,
        )
        .unwrap();
        assert!(matches!(
            orlicz,
            SpaceSpec::Orlicz(OrliczFunction::Tabulated { .. })
        ));
        let modular = SpaceSpec::from_json_str(
            r#"{"family":"orlicz","params":{"functions":[{"kind":"power","p":2},{"kind":"power","p":3}]}}"#,
        )
        .unwrap();
        assert!(matches!(modular, SpaceSpec::Modular(ref v) if v.len() == 2));
    }

    #[test]
    fn json_errors() {
        assert!(matches!(
            SpaceSpec::from_json_str("{"),
            Err(Error::Malformed(_))
        ));
        assert!(matches!(
            SpaceSpec::from_json_str(r#"{"family":"lorentz","params":{}}"#),
            Err(Error::Malformed(_))
        ));
        assert!(matches!(
            SpaceSpec::from_json_str(r#"{"family":"lp","params":{"p":0.2}}"#),
            Err(Error::InvalidSpec(_))
        ));
    }
}
