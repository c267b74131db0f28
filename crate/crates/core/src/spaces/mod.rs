//! Scalar sequence spaces over finitely supported sequences.
//!
//! Every family here is normal and (except for modular spaces with distinct
//! coordinate functions) symmetric, so norms only see the moduli and, for the
//! rearrangement-invariant families, only their decreasing rearrangement.
//! All formulas are exact on finite supports; the only iterative pieces are
//! the Luxemburg bisection and the numerical Köthe dual of families without
//! a closed-form dual.

mod orlicz;
mod parse;
mod weights;

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{maximize_over_ball, BallSpec, OptBudget, Witnessed};

pub use orlicz::OrliczFunction;
pub use weights::{Growth, TailRule, Weights, VALIDATION_HORIZON};

/// Description of a scalar sequence space: a family plus its parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum SpaceSpec {
    /// `ℓ_p`, `1 ≤ p ≤ ∞` (`p = f64::INFINITY` for the sup norm).
    Lp { p: f64 },
    /// Orlicz space `ℓ_M` with the Luxemburg norm.
    Orlicz(OrliczFunction),
    /// Modular space `ℓ_{M_j}`; coordinates past the list reuse the last function.
    Modular(Vec<OrliczFunction>),
    /// Lorentz space `d(x, p)`.
    Lorentz { weights: Weights, p: f64 },
    /// Garling's `μ_{a,p}`.
    GarlingMu { weights: Weights, p: f64 },
    /// Garling's `ν_{a,p}`.
    GarlingNu { weights: Weights, p: f64 },
    /// Sargent's `m(φ)`.
    SargentM { phi: Weights },
    /// Sargent's `n(φ)`.
    SargentN { phi: Weights },
    /// `c_0` with the sup norm.
    C0,
}

impl SpaceSpec {
    pub fn lp(p: f64) -> Self {
        SpaceSpec::Lp { p }
    }

    pub fn family(&self) -> &'static str {
        match self {
            SpaceSpec::Lp { .. } => "lp",
            SpaceSpec::Orlicz(_) | SpaceSpec::Modular(_) => "orlicz",
            SpaceSpec::Lorentz { .. } => "lorentz",
            SpaceSpec::GarlingMu { .. } => "garling_mu",
            SpaceSpec::GarlingNu { .. } => "garling_nu",
            SpaceSpec::SargentM { .. } => "sargent_m",
            SpaceSpec::SargentN { .. } => "sargent_n",
            SpaceSpec::C0 => "c0",
        }
    }

    /// Checks the family invariants.
    pub fn validate(&self) -> Result<()> {
        match self {
            SpaceSpec::Lp { p } => {
                if !(*p >= 1.0) {
                    return Err(Error::InvalidSpec(format!(
                        "lp exponent must be >= 1, got {p}"
                    )));
                }
                Ok(())
            }
            SpaceSpec::Orlicz(m) => m.validate(),
            SpaceSpec::Modular(ms) => {
                if ms.is_empty() {
                    return Err(Error::InvalidSpec(
                        "modular space needs at least one function".into(),
                    ));
                }
                ms.iter().try_for_each(OrliczFunction::validate)
            }
            SpaceSpec::Lorentz { weights, p } | SpaceSpec::GarlingMu { weights, p } => {
                check_exponent(*p, 1.0, true)?;
                check_decreasing_normalized(weights)
            }
            SpaceSpec::GarlingNu { weights, p } => {
                check_exponent(*p, 1.0, false)?;
                check_decreasing_normalized(weights)
            }
            SpaceSpec::SargentM { phi } | SpaceSpec::SargentN { phi } => check_sargent(phi),
            SpaceSpec::C0 => Ok(()),
        }
    }
}

fn check_exponent(p: f64, min: f64, inclusive: bool) -> Result<()> {
    let ok = p.is_finite() && if inclusive { p >= min } else { p > min };
    if ok {
        Ok(())
    } else {
        let op = if inclusive { ">=" } else { ">" };
        Err(Error::InvalidSpec(format!(
            "exponent must be finite and {op} {min}, got {p}"
        )))
    }
}

fn check_decreasing_normalized(w: &Weights) -> Result<()> {
    w.check_present()?;
    let first = w.get(1);
    if (first - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidSpec(format!(
            "first weight must be 1, got {first}"
        )));
    }
    let mut prev = first;
    for j in 2..=w.horizon() {
        let cur = w.get(j);
        if !(cur > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "weight {j} must be positive, got {cur}"
            )));
        }
        if cur > prev * (1.0 + 1e-12) {
            return Err(Error::InvalidSpec(format!(
                "weights must be nonincreasing (index {j})"
            )));
        }
        prev = cur;
    }
    Ok(())
}

fn check_sargent(phi: &Weights) -> Result<()> {
    phi.check_present()?;
    let mut prev = phi.get(1);
    if !(prev > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "phi_1 must be positive, got {prev}"
        )));
    }
    let mut prev_step = prev;
    for j in 1..phi.horizon() {
        let next = phi.get(j + 1);
        let tol = 1e-12 * next.abs().max(1.0);
        if next < prev - tol {
            return Err(Error::InvalidSpec(format!(
                "phi must be nondecreasing (index {})",
                j + 1
            )));
        }
        let jf = j as f64;
        if (jf + 1.0) * prev <= jf * next {
            return Err(Error::InvalidSpec(format!(
                "phi must satisfy (j+1) phi_j > j phi_(j+1) (index {j})"
            )));
        }
        let step = next - prev;
        if step > prev_step + tol {
            return Err(Error::InvalidSpec(format!(
                "phi increments must be nonincreasing (index {})",
                j + 1
            )));
        }
        prev_step = step;
        prev = next;
    }
    Ok(())
}

/// Finitely supported scalar sequence; the tail is implicitly zero.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FiniteSequence(pub Vec<f64>);

impl FiniteSequence {
    pub fn new(coeffs: Vec<f64>) -> Self {
        Self(coeffs)
    }

    /// Drops trailing zeros.
    pub fn trimmed(&self) -> FiniteSequence {
        let end = self.0.iter().rposition(|c| *c != 0.0).map_or(0, |i| i + 1);
        FiniteSequence(self.0[..end].to_vec())
    }

    pub fn unit(n: usize) -> Self {
        let mut v = vec![0.0; n];
        v[n - 1] = 1.0;
        Self(v)
    }
}

impl Deref for FiniteSequence {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for FiniteSequence {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Finite double sequence `(α_j^n)`: row `n` is the sequence `(α_j^n)_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DoubleArray(Vec<Vec<f64>>);

impl DoubleArray {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if let Some(first) = rows.first() {
            if let Some(bad) = rows.iter().find(|r| r.len() != first.len()) {
                return Err(Error::DimensionMismatch {
                    expected: first.len(),
                    found: bad.len(),
                });
            }
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Malformed(
                "double array has non-finite entries".into(),
            ));
        }
        Ok(Self(rows))
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        let width = self.0.first().map_or(0, Vec::len);
        (0..width)
            .map(|j| self.0.iter().map(|row| row[j]).collect())
            .collect()
    }
}

/// `ℓ_p` norm with max-scaling; `p = ∞` gives the sup norm.
pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    let peak = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak == 0.0 || p.is_infinite() {
        return peak;
    }
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    if p == 2.0 {
        return peak * x.iter().map(|v| (v / peak).powi(2)).sum::<f64>().sqrt();
    }
    peak * x
        .iter()
        .map(|v| (v.abs() / peak).powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Conjugate exponent `q` with `1/p + 1/q = 1`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

/// Moduli sorted nonincreasing; ties keep their original order.
pub fn decreasing_rearrangement(seq: &[f64]) -> Vec<f64> {
    let mut moduli: Vec<f64> = seq.iter().map(|v| v.abs()).collect();
    // stable sort: equal moduli stay in index order
    moduli.sort_by(|a, b| b.total_cmp(a));
    moduli
}

/// A validated [`SpaceSpec`], ready for evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct Space {
    spec: SpaceSpec,
}

impl Space {
    pub fn new(spec: SpaceSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self { spec })
    }

    pub fn lp(p: f64) -> Result<Self> {
        Self::new(SpaceSpec::lp(p))
    }

    pub fn spec(&self) -> &SpaceSpec {
        &self.spec
    }

    /// Exponent when this is an `ℓ_p` (or the sup-normed `c_0`).
    pub fn lp_exponent(&self) -> Option<f64> {
        match self.spec {
            SpaceSpec::Lp { p } => Some(p),
            SpaceSpec::C0 => Some(f64::INFINITY),
            SpaceSpec::Orlicz(OrliczFunction::Power { p }) => Some(p),
            _ => None,
        }
    }

    /// `‖seq‖_λ`.
    pub fn norm(&self, seq: &[f64]) -> f64 {
        match &self.spec {
            SpaceSpec::Lp { p } => lp_norm(seq, *p),
            SpaceSpec::C0 => lp_norm(seq, f64::INFINITY),
            SpaceSpec::Orlicz(m) => orlicz::luxemburg(seq, |_| m),
            SpaceSpec::Modular(ms) => orlicz::luxemburg(seq, |j| &ms[j.min(ms.len() - 1)]),
            SpaceSpec::Lorentz { weights, p } | SpaceSpec::GarlingMu { weights, p } => {
                weighted_power_norm(seq, weights, *p)
            }
            SpaceSpec::GarlingNu { weights, p } => garling_nu(seq, weights, *p).value,
            SpaceSpec::SargentM { phi } => sargent_m(seq, phi),
            SpaceSpec::SargentN { phi } => {
                let r = decreasing_rearrangement(seq);
                let mut prev = 0.0;
                let mut total = 0.0;
                for (j, a) in r.iter().enumerate() {
                    let cur = phi.get(j + 1);
                    total += a * (cur - prev);
                    prev = cur;
                }
                total
            }
        }
    }

    /// Perfect families (`λ = λ^××`); only `c_0` is not.
    pub fn is_perfect(&self) -> bool {
        !matches!(self.spec, SpaceSpec::C0)
    }

    /// Whether permuting coordinates leaves every norm unchanged.
    pub fn is_symmetric(&self) -> bool {
        match &self.spec {
            SpaceSpec::Modular(ms) => ms.windows(2).all(|w| w[0] == w[1]),
            _ => true,
        }
    }

    /// The analytic Köthe dual, when one is known.
    pub fn dual(&self) -> Option<Space> {
        kothe_dual_spec(&self.spec).map(|spec| Space { spec })
    }

    /// `‖e_n‖_λ` for 1-based `n`.
    pub fn unit_vector_norm(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::Malformed("unit vectors are indexed from 1".into()));
        }
        Ok(self.norm(&FiniteSequence::unit(n)))
    }

    /// Errors unless `‖e_n‖_λ = 1` for `n ≤ upto`.
    pub fn require_unit_basis(&self, upto: usize) -> Result<()> {
        for n in 1..=upto.max(1) {
            let e = self.unit_vector_norm(n)?;
            if (e - 1.0).abs() > 1e-12 {
                return Err(Error::Precondition(format!(
                    "needs ||e_{n}|| = 1 in {}, found {e}",
                    self.spec
                )));
            }
        }
        Ok(())
    }
}

fn weighted_power_norm(seq: &[f64], weights: &Weights, p: f64) -> f64 {
    let r = decreasing_rearrangement(seq);
    let peak = r.first().copied().unwrap_or(0.0);
    if peak == 0.0 {
        return 0.0;
    }
    let sum: f64 = r
        .iter()
        .take_while(|a| **a > 0.0)
        .enumerate()
        .map(|(j, a)| weights.get(j + 1) * (a / peak).powf(p))
        .sum();
    peak * sum.powf(1.0 / p)
}

fn sargent_m(seq: &[f64], phi: &Weights) -> f64 {
    let r = decreasing_rearrangement(seq);
    let mut partial = 0.0;
    let mut best = 0.0_f64;
    for (s, a) in r.iter().take_while(|a| **a > 0.0).enumerate() {
        partial += a;
        best = best.max(partial / phi.get(s + 1));
    }
    best
}

/// Exact value of Garling's `ν_{a,p}` norm together with its optimal
/// `k ∈ M_q`.
#[derive(Clone, Debug, PartialEq)]
pub struct GarlingNuSolution {
    pub value: f64,
    /// Nonincreasing, nonnegative, `‖k‖_q = 1` (empty for the zero sequence).
    pub k: Vec<f64>,
}

/// `inf_{k ∈ M_q} sup_n Σ_{j≤n} β̂_j / Σ_{j≤n} k_j b_j` in closed form.
///
/// With `W_n = Σ_{j≤n} a_j` and `B_n = Σ_{j≤n} β̂_j`, let `t_j` be the slope
/// on `[W_{j-1}, W_j]` of the least concave majorant of the points
/// `(W_n, B_n)`. Then `k_j ∝ t_j a_j^{1/q}` is optimal and the infimum is
/// `(Σ a_j t_j^q)^{1/q}`.
pub fn garling_nu(seq: &[f64], weights: &Weights, p: f64) -> GarlingNuSolution {
    let r = decreasing_rearrangement(seq);
    let support = r.iter().take_while(|a| **a > 0.0).count();
    if support == 0 {
        return GarlingNuSolution {
            value: 0.0,
            k: Vec::new(),
        };
    }
    let peak = r[0];
    let q = conjugate(p);
    let a = weights.take(support);

    let mut xs = Vec::with_capacity(support + 1);
    let mut ys = Vec::with_capacity(support + 1);
    xs.push(0.0);
    ys.push(0.0);
    for j in 0..support {
        xs.push(xs[j] + a[j]);
        ys.push(ys[j] + r[j] / peak);
    }

    // upper hull, left to right
    let mut hull: Vec<usize> = Vec::with_capacity(support + 1);
    for i in 0..=support {
        while hull.len() >= 2 {
            let o = hull[hull.len() - 2];
            let m = hull[hull.len() - 1];
            let lhs = (ys[m] - ys[o]) * (xs[i] - xs[o]);
            let rhs = (ys[i] - ys[o]) * (xs[m] - xs[o]);
            if lhs <= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }

    let mut slopes = vec![0.0; support];
    for seg in hull.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        let slope = (ys[hi] - ys[lo]) / (xs[hi] - xs[lo]);
        slopes[lo..hi].iter_mut().for_each(|s| *s = slope);
    }

    let norm_q = lp_weighted(&slopes, &a, q);
    let k: Vec<f64> = slopes
        .iter()
        .zip(&a)
        .map(|(t, aj)| t * aj.powf(1.0 / q) / norm_q)
        .collect();
    GarlingNuSolution {
        value: peak * norm_q,
        k,
    }
}

/// `(Σ a_j t_j^q)^{1/q}` with `q = ∞` meaning `max t_j`.
fn lp_weighted(t: &[f64], a: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        return t.iter().fold(0.0_f64, |m, v| m.max(*v));
    }
    t.iter()
        .zip(a)
        .map(|(t, a)| a * t.powf(q))
        .sum::<f64>()
        .powf(1.0 / q)
}

/// `sup_n Σ_{j≤n} β̂_j / Σ_{j≤n} k_j b_j` for a given `k`, `b_j = a_j^{1/p}`.
///
/// Infinite when some partial denominator vanishes while the numerator
/// does not.
pub fn garling_nu_ratio(seq: &[f64], weights: &Weights, p: f64, k: &[f64]) -> f64 {
    let r = decreasing_rearrangement(seq);
    let mut num = 0.0;
    let mut den = 0.0;
    let mut best = 0.0_f64;
    let horizon = r.len().max(k.len());
    for j in 0..horizon {
        num += r.get(j).copied().unwrap_or(0.0);
        den += k.get(j).copied().unwrap_or(0.0) * weights.get(j + 1).powf(1.0 / p);
        if num > 0.0 {
            best = best.max(if den > 0.0 { num / den } else { f64::INFINITY });
        }
    }
    best
}

/// `‖seq‖_λ` for a spec (validates the spec first).
pub fn evaluate_norm(spec: &SpaceSpec, seq: &[f64]) -> Result<f64> {
    if seq.iter().any(|v| !v.is_finite()) {
        return Err(Error::Malformed("sequence has non-finite entries".into()));
    }
    Ok(Space::new(spec.clone())?.norm(seq))
}

/// Analytic Köthe dual, or `None` where only the numerical dual is available.
pub fn kothe_dual_spec(spec: &SpaceSpec) -> Option<SpaceSpec> {
    match spec {
        SpaceSpec::Lp { p } => Some(SpaceSpec::Lp { p: conjugate(*p) }),
        SpaceSpec::Orlicz(OrliczFunction::Power { p }) => Some(SpaceSpec::Lp { p: conjugate(*p) }),
        SpaceSpec::C0 => Some(SpaceSpec::Lp { p: 1.0 }),
        SpaceSpec::GarlingMu { weights, p } => Some(SpaceSpec::GarlingNu {
            weights: weights.clone(),
            p: *p,
        }),
        SpaceSpec::GarlingNu { weights, p } => Some(SpaceSpec::GarlingMu {
            weights: weights.clone(),
            p: *p,
        }),
        SpaceSpec::SargentM { phi } => Some(SpaceSpec::SargentN { phi: phi.clone() }),
        SpaceSpec::SargentN { phi } => Some(SpaceSpec::SargentM { phi: phi.clone() }),
        SpaceSpec::Orlicz(_) | SpaceSpec::Modular(_) | SpaceSpec::Lorentz { .. } => None,
    }
}

/// `‖seq‖_{λ^×} = sup_{α ∈ B_λ} Σ |α_n β_n|`.
///
/// Exact when the analytic dual is known; otherwise a lower bound with the
/// maximising `α` as witness.
pub fn dual_norm(spec: &SpaceSpec, seq: &[f64], budget: &OptBudget) -> Result<Witnessed> {
    let space = Space::new(spec.clone())?;
    if let Some(dual) = space.dual() {
        return Ok(Witnessed::exact(dual.norm(seq)));
    }
    numerical_dual_norm(&space, seq, budget)
}

/// Numerical route of [`dual_norm`], usable for any space.
pub fn numerical_dual_norm(space: &Space, seq: &[f64], budget: &OptBudget) -> Result<Witnessed> {
    let len = seq.len();
    if len == 0 || seq.iter().all(|v| *v == 0.0) {
        return Ok(Witnessed::exact(0.0));
    }
    let ball = BallSpec::SpaceBall {
        space: space.clone(),
        len,
    };
    let pairing =
        |alpha: &[f64]| -> f64 { alpha.iter().zip(seq).map(|(a, b)| (a * b).abs()).sum() };

    let mut seeds = Vec::new();
    let moduli: Vec<f64> = seq.iter().map(|v| v.abs()).collect();
    let scale = space.norm(&moduli);
    seeds.push(moduli.iter().map(|v| v / scale).collect::<Vec<_>>());
    for n in 1..=len {
        let e = FiniteSequence::unit(n);
        let mut e = e.0;
        e.resize(len, 0.0);
        let s = space.norm(&e);
        seeds.push(e.iter().map(|v| v / s).collect());
    }
    maximize_over_ball(&pairing, &ball, budget, &seeds)
}

/// `‖e_n‖_λ`.
pub fn unit_vector_norm(spec: &SpaceSpec, n: usize) -> Result<f64> {
    Space::new(spec.clone())?.unit_vector_norm(n)
}

/// Outcome of comparing both iterated norms of a double array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NipReport {
    /// `‖(‖row_n‖_λ)_n‖_λ`.
    pub row_value: f64,
    /// `‖(‖col_j‖_λ)_j‖_λ`.
    pub col_value: f64,
    pub gap: f64,
    /// Whether the space is perfect, i.e. the gap is contractually zero.
    pub binding: bool,
}

impl NipReport {
    pub fn holds(&self, tol: f64) -> bool {
        !self.binding || self.gap <= tol
    }
}

/// Iterated norms of a double array in both orders.
pub fn nip_check(spec: &SpaceSpec, arr: &DoubleArray) -> Result<NipReport> {
    let space = Space::new(spec.clone())?;
    Ok(nip_check_space(&space, arr))
}

pub fn nip_check_space(space: &Space, arr: &DoubleArray) -> NipReport {
    let iterated = |lines: &[Vec<f64>]| {
        let inner: Vec<f64> = lines.iter().map(|l| space.norm(l)).collect();
        space.norm(&inner)
    };
    let row_value = iterated(arr.rows());
    let col_value = iterated(&arr.columns());
    NipReport {
        row_value,
        col_value,
        gap: (row_value - col_value).abs(),
        binding: space.is_perfect(),
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceSpec::Lp { p } if p.is_infinite() => f.write_str("lp:inf"),
            SpaceSpec::Lp { p } => write!(f, "lp:{p}"),
            SpaceSpec::Orlicz(m) => write!(f, "orlicz:{}", parse::orlicz_label(m)),
            SpaceSpec::Modular(ms) => write!(f, "orlicz:modular[{}]", ms.len()),
            SpaceSpec::Lorentz { weights, p } => write!(f, "lorentz:{weights}:p={p}"),
            SpaceSpec::GarlingMu { weights, p } => write!(f, "garling_mu:{weights}:p={p}"),
            SpaceSpec::GarlingNu { weights, p } => write!(f, "garling_nu:{weights}:p={p}"),
            SpaceSpec::SargentM { phi } => write!(f, "sargent_m:{phi}"),
            SpaceSpec::SargentN { phi } => write!(f, "sargent_n:{phi}"),
            SpaceSpec::C0 => f.write_str("c0"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt_phi() -> Weights {
        Weights::from_tail(TailRule::Sqrt, Growth::Grow)
    }

    fn geometric_half() -> Weights {
        Weights::from_tail(TailRule::Geometric(0.5), Growth::Decay)
    }

    #[test]
    fn documented_values() {
        let norm = |spec: SpaceSpec, seq: &[f64]| evaluate_norm(&spec, seq).unwrap();
        assert!((norm(SpaceSpec::lp(2.0), &[3.0, 4.0]) - 5.0).abs() < 1e-15);
        let sq = SpaceSpec::Orlicz(OrliczFunction::Power { p: 2.0 });
        assert!((norm(sq, &[3.0, 4.0]) - 5.0).abs() < 1e-12);
        let lorentz = SpaceSpec::Lorentz {
            weights: geometric_half(),
            p: 1.0,
        };
        assert_eq!(norm(lorentz, &[1.0, 2.0]), 2.5);
        let m = SpaceSpec::SargentM { phi: sqrt_phi() };
        assert!((norm(m, &[1.0, 1.0]) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn rearrangement_examples() {
        assert_eq!(
            decreasing_rearrangement(&[1.0, -3.0, 2.0]),
            vec![3.0, 2.0, 1.0]
        );
        assert_eq!(decreasing_rearrangement(&[0.0, 0.0]), vec![0.0, 0.0]);
        let once = decreasing_rearrangement(&[0.5, -2.0, 2.0, 0.0]);
        assert_eq!(decreasing_rearrangement(&once), once);
    }

    #[test]
    fn empty_sequence_has_zero_norm() {
        for spec in [
            SpaceSpec::lp(3.0),
            SpaceSpec::SargentN { phi: sqrt_phi() },
            SpaceSpec::GarlingNu {
                weights: Weights::from_tail(TailRule::Sqrt, Growth::Decay),
                p: 2.0,
            },
        ] {
            assert_eq!(evaluate_norm(&spec, &[]).unwrap(), 0.0);
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let increasing = Weights::new(vec![1.0, 2.0], None, Growth::Decay);
        let bad = [
            SpaceSpec::lp(0.5),
            SpaceSpec::lp(f64::NAN),
            SpaceSpec::Lorentz {
                weights: increasing.clone(),
                p: 1.0,
            },
            SpaceSpec::GarlingMu {
                weights: Weights::new(vec![0.5, 0.25], None, Growth::Decay),
                p: 2.0,
            },
            SpaceSpec::GarlingNu {
                weights: geometric_half(),
                p: 1.0,
            },
            SpaceSpec::Lorentz {
                weights: Weights::new(vec![1.0, 0.0], None, Growth::Decay),
                p: 1.0,
            },
            SpaceSpec::SargentM {
                phi: Weights::from_tail(TailRule::Power(1.0), Growth::Grow),
            },
            SpaceSpec::SargentN {
                phi: Weights::new(vec![1.0, 1.1, 1.9], None, Growth::Grow),
            },
            SpaceSpec::Modular(vec![]),
        ];
        for spec in bad {
            assert!(
                matches!(spec.validate(), Err(Error::InvalidSpec(_))),
                "{spec:?}"
            );
        }
    }

    #[test]
    fn dual_pairs() {
        assert_eq!(
            kothe_dual_spec(&SpaceSpec::lp(2.0)),
            Some(SpaceSpec::lp(2.0))
        );
        assert_eq!(
            kothe_dual_spec(&SpaceSpec::lp(1.0)),
            Some(SpaceSpec::lp(f64::INFINITY))
        );
        assert_eq!(kothe_dual_spec(&SpaceSpec::C0), Some(SpaceSpec::lp(1.0)));
        let w = Weights::from_tail(TailRule::Sqrt, Growth::Decay);
        assert_eq!(
            kothe_dual_spec(&SpaceSpec::GarlingMu {
                weights: w.clone(),
                p: 2.0
            }),
            Some(SpaceSpec::GarlingNu { weights: w, p: 2.0 })
        );
        assert_eq!(
            kothe_dual_spec(&SpaceSpec::SargentM { phi: sqrt_phi() }),
            Some(SpaceSpec::SargentN { phi: sqrt_phi() })
        );
        let tab = SpaceSpec::Orlicz(OrliczFunction::Tabulated {
            breakpoints: vec![(1.0, 1.0), (2.0, 4.0)],
        });
        assert_eq!(kothe_dual_spec(&tab), None);
    }

    #[test]
    fn exact_dual_norms() {
        let b = OptBudget::default();
        let v = dual_norm(&SpaceSpec::lp(2.0), &[3.0, 4.0], &b).unwrap();
        assert!((v.value - 5.0).abs() < 1e-15);
        let v = dual_norm(&SpaceSpec::lp(1.0), &[1.0, -2.0, 3.0], &b).unwrap();
        assert_eq!(v.value, 3.0);
    }

    #[test]
    fn unit_vectors() {
        assert_eq!(unit_vector_norm(&SpaceSpec::lp(3.0), 7).unwrap(), 1.0);
        let mu = SpaceSpec::GarlingMu {
            weights: Weights::from_tail(TailRule::Power(0.5), Growth::Decay),
            p: 2.0,
        };
        assert_eq!(unit_vector_norm(&mu, 1).unwrap(), 1.0);
        let phi = Weights::new(vec![2.0], Some(TailRule::Sqrt), Growth::Grow);
        // phi = (2, √2, ...) is not monotone, so use a valid prefix instead
        assert!(Space::new(SpaceSpec::SargentM { phi }).is_err());
        let phi = Weights::new(vec![2.0, 3.0, 3.5], None, Growth::Grow);
        let m = SpaceSpec::SargentM { phi };
        assert_eq!(unit_vector_norm(&m, 1).unwrap(), 0.5);
        assert!(unit_vector_norm(&m, 0).is_err());
    }

    #[test]
    fn nip_identity_is_symmetric() {
        let arr = DoubleArray::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = nip_check(&SpaceSpec::lp(2.0), &arr).unwrap();
        assert!((r.row_value - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(r.gap, 0.0);
        assert!(r.binding);
        let r = nip_check(&SpaceSpec::C0, &arr).unwrap();
        assert!(!r.binding && r.holds(0.0));
    }

    #[test]
    fn ragged_double_array_is_rejected() {
        assert!(DoubleArray::new(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn garling_nu_certificate_reproduces_value() {
        let w = Weights::from_tail(TailRule::Power(0.5), Growth::Decay);
        let seq = [0.3, -2.0, 1.0, 0.7, 0.0, 1.9];
        let sol = garling_nu(&seq, &w, 2.0);
        let k_norm = lp_norm(&sol.k, 2.0);
        assert!((k_norm - 1.0).abs() < 1e-12);
        assert!(sol.k.windows(2).all(|p| p[0] >= p[1] - 1e-15));
        let ratio = garling_nu_ratio(&seq, &w, 2.0, &sol.k);
        assert!((ratio - sol.value).abs() < 1e-12 * sol.value);
    }

    #[test]
    fn trimming_keeps_norms() {
        let s = FiniteSequence::new(vec![1.0, -2.0, 0.0, 0.0]);
        assert_eq!(s.trimmed().0, vec![1.0, -2.0]);
        let spec = Space::new(SpaceSpec::SargentN { phi: sqrt_phi() }).unwrap();
        assert_eq!(spec.norm(&s), spec.norm(&s.trimmed()));
    }
}
