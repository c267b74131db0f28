//! Orlicz functions and the Luxemburg gauge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A convex, nondecreasing `M: [0, ∞) → [0, ∞)` with `M(0) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OrliczFunction {
    /// `t^p`.
    Power { p: f64 },
    /// `t^p · ln(1 + t)`.
    PowerLog { p: f64 },
    /// Piecewise-linear interpolation through `(t, M(t))` breakpoints, with
    /// an implicit `(0, 0)` and linear extrapolation past the last point.
    Tabulated { breakpoints: Vec<(f64, f64)> },
}

impl OrliczFunction {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            OrliczFunction::Power { p } => t.powf(*p),
            OrliczFunction::PowerLog { p } => t.powf(*p) * t.ln_1p(),
            OrliczFunction::Tabulated { breakpoints } => interpolate(breakpoints, t),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            OrliczFunction::Power { p } | OrliczFunction::PowerLog { p } => {
                if !(p.is_finite() && *p >= 1.0) {
                    return Err(Error::InvalidSpec(format!(
                        "Orlicz exponent must be finite and >= 1, got {p}"
                    )));
                }
                Ok(())
            }
            OrliczFunction::Tabulated { breakpoints } => validate_table(breakpoints),
        }
    }
}

fn knots(breakpoints: &[(f64, f64)]) -> impl Iterator<Item = (f64, f64)> + '_ {
    let origin = match breakpoints.first() {
        Some(&(0.0, _)) => None,
        _ => Some((0.0, 0.0)),
    };
    origin.into_iter().chain(breakpoints.iter().copied())
}

fn interpolate(breakpoints: &[(f64, f64)], t: f64) -> f64 {
    let mut prev = (0.0, 0.0);
    let mut slope = 0.0;
    for (tk, mk) in knots(breakpoints) {
        if tk > prev.0 {
            slope = (mk - prev.1) / (tk - prev.0);
        }
        if t <= tk {
            return prev.1 + slope * (t - prev.0);
        }
        prev = (tk, mk);
    }
    prev.1 + slope * (t - prev.0)
}

fn validate_table(breakpoints: &[(f64, f64)]) -> Result<()> {
    if breakpoints.is_empty() {
        return Err(Error::InvalidSpec(
            "tabulated Orlicz function is empty".into(),
        ));
    }
    if let Some(&(t, m)) = breakpoints.first() {
        if t == 0.0 && m != 0.0 {
            return Err(Error::InvalidSpec(
                "tabulated Orlicz function needs M(0) = 0".into(),
            ));
        }
    }
    let mut prev = (0.0, 0.0);
    let mut prev_slope: Option<f64> = None;
    for (t, m) in knots(breakpoints) {
        if !(t.is_finite() && m.is_finite()) {
            return Err(Error::InvalidSpec("non-finite Orlicz breakpoint".into()));
        }
        if t == 0.0 {
            continue;
        }
        if t <= prev.0 {
            return Err(Error::InvalidSpec(
                "Orlicz breakpoints must be strictly increasing in t".into(),
            ));
        }
        let slope = (m - prev.1) / (t - prev.0);
        match prev_slope {
            None if slope <= 0.0 => {
                return Err(Error::InvalidSpec(
                    "tabulated Orlicz function must be positive for t > 0".into(),
                ))
            }
            Some(s) if slope < s * (1.0 - 1e-12) => {
                return Err(Error::InvalidSpec(format!(
                    "tabulated Orlicz function is not convex near t = {t}"
                )))
            }
            _ => {}
        }
        prev_slope = Some(slope);
        prev = (t, m);
    }
    Ok(())
}

/// Luxemburg gauge `inf{k > 0 : Σ M_j(|α_j| / k) ≤ 1}`, with `M_j` given per
/// coordinate by `function_at(j)`.
///
/// Bisection on `k` after bracketing geometrically from `max |α_j|`; runs
/// until the bracket stops shrinking in floating point and returns the
/// feasible endpoint.
pub(crate) fn luxemburg<'a>(
    coeffs: &[f64],
    function_at: impl Fn(usize) -> &'a OrliczFunction,
) -> f64 {
    let peak = coeffs.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    let modular = |k: f64| -> f64 {
        coeffs
            .iter()
            .enumerate()
            .filter(|(_, a)| **a != 0.0)
            .map(|(j, a)| function_at(j).eval(a.abs() / k))
            .sum()
    };

    let (mut lo, mut hi) = (peak, peak);
    if modular(peak) > 1.0 {
        while modular(hi) > 1.0 {
            lo = hi;
            hi *= 2.0;
        }
    } else {
        while modular(lo) <= 1.0 {
            hi = lo;
            lo *= 0.5;
        }
    }
    // modular(lo) > 1 >= modular(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if modular(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(points: &[(f64, f64)]) -> OrliczFunction {
        OrliczFunction::Tabulated {
            breakpoints: points.to_vec(),
        }
    }

    #[test]
    fn tabulated_interpolates_and_extrapolates() {
        let m = table(&[(1.0, 1.0), (2.0, 4.0)]);
        m.validate().unwrap();
        assert_eq!(m.eval(0.0), 0.0);
        assert_eq!(m.eval(0.5), 0.5);
        assert_eq!(m.eval(1.5), 2.5);
        assert_eq!(m.eval(3.0), 7.0);
    }

    #[test]
    fn tabulated_rejects_nonconvex_tables() {
        assert!(table(&[(1.0, 2.0), (2.0, 3.0)]).validate().is_err());
        assert!(table(&[(1.0, 0.0)]).validate().is_err());
        assert!(table(&[(2.0, 1.0), (1.0, 3.0)]).validate().is_err());
        assert!(table(&[(0.0, 1.0), (1.0, 3.0)]).validate().is_err());
        assert!(table(&[]).validate().is_err());
    }

    #[test]
    fn rejects_small_exponent() {
        assert!(OrliczFunction::Power { p: 0.5 }.validate().is_err());
        assert!(OrliczFunction::PowerLog { p: f64::NAN }.validate().is_err());
    }

    #[test]
    fn luxemburg_of_square_is_euclidean() {
        let m = OrliczFunction::Power { p: 2.0 };
        let k = luxemburg(&[3.0, -4.0], |_| &m);
        assert!((k - 5.0).abs() < 1e-13);
        assert_eq!(luxemburg(&[0.0, 0.0], |_| &m), 0.0);
    }

    #[test]
    fn luxemburg_satisfies_its_constraint() {
        let m = OrliczFunction::PowerLog { p: 1.5 };
        let coeffs = [0.3, 2.0, -1.1, 0.0, 5.0];
        let k = luxemburg(&coeffs, |_| &m);
        let s: f64 = coeffs.iter().map(|a| m.eval(a.abs() / k)).sum();
        assert!(s <= 1.0 && s > 1.0 - 1e-12, "{s}");
    }
}
