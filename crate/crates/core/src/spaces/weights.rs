//! Weight sequences: an explicit prefix continued by a named tail rule.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of leading terms checked when a weight sequence is validated.
pub const VALIDATION_HORIZON: usize = 1024;

/// Whether a tail rule produces decaying (Lorentz/Garling) or growing
/// (Sargent) weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Growth {
    Decay,
    Grow,
}

/// Closed-form continuation of a weight sequence, indexed from `j = 1`.
///
/// * `Geometric(r)`: `r^(j-1)`.
/// * `Power(s)`: `j^(-s)` for decaying weights, `j^s` for growing ones.
/// * `Sqrt`: `Power(0.5)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TailRule {
    Geometric(f64),
    Power(f64),
    Sqrt,
}

impl TailRule {
    fn value(self, j: usize, growth: Growth) -> f64 {
        let j = j as f64;
        let exponent = |s: f64| match growth {
            Growth::Decay => j.powf(-s),
            Growth::Grow => j.powf(s),
        };
        match self {
            TailRule::Geometric(r) => r.powf(j - 1.0),
            TailRule::Power(s) => exponent(s),
            TailRule::Sqrt => exponent(0.5),
        }
    }

    /// Parses `geometric:r`, `power:s` or `sqrt`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut parts = text.split(':');
        let head = parts.next().unwrap_or_default();
        let arg = parts.next();
        if parts.next().is_some() {
            return Err(Error::InvalidSpec(format!("bad tail rule `{text}`")));
        }
        let number = |arg: Option<&str>| -> Result<f64> {
            arg.and_then(|a| a.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::InvalidSpec(format!("bad tail rule `{text}`")))
        };
        match head {
            "geometric" => Ok(TailRule::Geometric(number(arg)?)),
            "power" => Ok(TailRule::Power(number(arg)?)),
            "sqrt" if arg.is_none() => Ok(TailRule::Sqrt),
            _ => Err(Error::InvalidSpec(format!("unknown tail rule `{text}`"))),
        }
    }
}

impl fmt::Display for TailRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailRule::Geometric(r) => write!(f, "geometric:{r}"),
            TailRule::Power(s) => write!(f, "power:{s}"),
            TailRule::Sqrt => f.write_str("sqrt"),
        }
    }
}

impl Serialize for TailRule {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for TailRule {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        TailRule::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// A positive weight sequence `w_1, w_2, ...`.
///
/// Indices past the prefix come from the tail rule; without a tail rule the
/// last prefix value is held.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    #[serde(default)]
    pub prefix: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail: Option<TailRule>,
    #[serde(skip, default = "default_growth")]
    pub growth: Growth,
}

fn default_growth() -> Growth {
    Growth::Decay
}

impl Weights {
    pub fn new(prefix: Vec<f64>, tail: Option<TailRule>, growth: Growth) -> Self {
        Self {
            prefix,
            tail,
            growth,
        }
    }

    pub fn from_tail(tail: TailRule, growth: Growth) -> Self {
        Self::new(Vec::new(), Some(tail), growth)
    }

    pub fn with_growth(mut self, growth: Growth) -> Self {
        self.growth = growth;
        self
    }

    /// The weight at 1-based index `j`.
    pub fn get(&self, j: usize) -> f64 {
        debug_assert!(j >= 1);
        if j <= self.prefix.len() {
            return self.prefix[j - 1];
        }
        match self.tail {
            Some(rule) => rule.value(j, self.growth),
            None => *self.prefix.last().expect("validated weights are nonempty"),
        }
    }

    /// First `n` weights.
    pub fn take(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|j| self.get(j)).collect()
    }

    pub(crate) fn check_present(&self) -> Result<()> {
        if self.prefix.is_empty() && self.tail.is_none() {
            return Err(Error::InvalidSpec(
                "weight sequence needs a prefix or a tail rule".into(),
            ));
        }
        if let Some(bad) = self.prefix.iter().find(|w| !w.is_finite()) {
            return Err(Error::InvalidSpec(format!("non-finite weight {bad}")));
        }
        Ok(())
    }

    pub(crate) fn horizon(&self) -> usize {
        self.prefix.len().max(VALIDATION_HORIZON)
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.prefix.is_empty() {
            write!(f, "{:?}", self.prefix)?;
            if self.tail.is_some() {
                f.write_str("+")?;
            }
        }
        if let Some(rule) = self.tail {
            write!(f, "{rule}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_rules_by_growth() {
        let w = Weights::from_tail(TailRule::Sqrt, Growth::Grow);
        assert_eq!(w.get(4), 2.0);
        let w = Weights::from_tail(TailRule::Sqrt, Growth::Decay);
        assert_eq!(w.get(4), 0.5);
        let w = Weights::from_tail(TailRule::Geometric(0.5), Growth::Decay);
        assert_eq!(w.take(3), vec![1.0, 0.5, 0.25]);
    }

    #[test]
    fn prefix_then_tail_or_hold() {
        let w = Weights::new(vec![1.0, 0.9], Some(TailRule::Power(1.0)), Growth::Decay);
        assert_eq!(w.get(2), 0.9);
        assert_eq!(w.get(4), 0.25);
        let held = Weights::new(vec![1.0, 0.7], None, Growth::Decay);
        assert_eq!(held.get(10), 0.7);
    }

    #[test]
    fn parse_rules() {
        assert_eq!(
            TailRule::parse("geometric:0.5").unwrap(),
            TailRule::Geometric(0.5)
        );
        assert_eq!(TailRule::parse("power:1.5").unwrap(), TailRule::Power(1.5));
        assert_eq!(TailRule::parse("sqrt").unwrap(), TailRule::Sqrt);
        assert!(TailRule::parse("bad").is_err());
        assert!(TailRule::parse("power:x").is_err());
        assert!(TailRule::parse("sqrt:2").is_err());
    }
}
