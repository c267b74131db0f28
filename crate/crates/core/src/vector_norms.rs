//! Strong, weak, weak-star and mid norms of finite vector sequences.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::opnorm::{self, OpNorm};
use crate::optim::{
    maximize_over_ball, mix, radial, Ball, BallSpec, OptBudget, Witnessed, FEASIBILITY_TOL,
};
use crate::spaces::{conjugate, lp_norm, Space};

/// `ℓ_p^d`, with its dual `ℓ_q^d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormOracle {
    dim: usize,
    p: f64,
}

impl NormOracle {
    pub fn new(dim: usize, p: f64) -> Result<Self> {
        if !(p >= 1.0) || dim == 0 {
            return Err(Error::InvalidSpec(format!("bad oracle l{p}:{dim}")));
        }
        Ok(Self { dim, p })
    }

    /// Panics on an invalid exponent or zero dimension.
    pub fn lp(dim: usize, p: f64) -> Self {
        Self::new(dim, p).expect("valid oracle")
    }

    /// Parses `l2:3`, `l1:2`, `linf:4` or `l3.5:2`.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = || Error::InvalidSpec(format!("bad oracle `{text}`"));
        let (head, dim) = text.trim().split_once(':').ok_or_else(bad)?;
        let p = match head.strip_prefix('l').ok_or_else(bad)? {
            "inf" => f64::INFINITY,
            v => v.parse::<f64>().map_err(|_| bad())?,
        };
        let dim = dim.parse::<usize>().map_err(|_| bad())?;
        Self::new(dim, p)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        lp_norm(x, self.p)
    }

    pub fn dual_norm(&self, f: &[f64]) -> f64 {
        lp_norm(f, conjugate(self.p))
    }

    pub fn dual(&self) -> NormOracle {
        Self {
            dim: self.dim,
            p: conjugate(self.p),
        }
    }

    /// A unit vector `x` with `⟨f, x⟩ = ‖f‖_*`.
    pub fn norming(&self, f: &[f64]) -> Vec<f64> {
        let q = conjugate(self.p);
        let peak = f.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if peak == 0.0 {
            let mut x = vec![0.0; f.len()];
            if let Some(first) = x.first_mut() {
                *first = 1.0;
            }
            return x;
        }
        let x: Vec<f64> = if q.is_infinite() {
            let k = f.iter().position(|v| v.abs() == peak).expect("peak exists");
            let mut x = vec![0.0; f.len()];
            x[k] = f[k].signum();
            return x;
        } else if q == 1.0 {
            f.iter()
                .map(|v| if *v == 0.0 { 0.0 } else { v.signum() })
                .collect()
        } else {
            f.iter()
                .map(|v| v.signum() * (v.abs() / peak).powf(q - 1.0))
                .collect()
        };
        self.normalized(&x)
    }

    /// `x / ‖x‖` (unchanged when `x = 0`).
    pub fn normalized(&self, x: &[f64]) -> Vec<f64> {
        let n = self.norm(x);
        if n == 0.0 {
            x.to_vec()
        } else {
            x.iter().map(|v| v / n).collect()
        }
    }
}

impl fmt::Display for NormOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.p.is_infinite() {
            write!(f, "linf:{}", self.dim)
        } else {
            write!(f, "l{}:{}", self.p, self.dim)
        }
    }
}

impl FromStr for NormOracle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl Serialize for NormOracle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for NormOracle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Self::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Finitely many vectors of one normed space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VectorSequence {
    pub oracle: NormOracle,
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawSequence {
    oracle: NormOracle,
    vectors: Vec<Vec<f64>>,
}

impl<'de> Deserialize<'de> for VectorSequence {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawSequence::deserialize(d)?;
        VectorSequence::new(raw.oracle, raw.vectors).map_err(serde::de::Error::custom)
    }
}

impl VectorSequence {
    pub fn new(oracle: NormOracle, vectors: Vec<Vec<f64>>) -> Result<Self> {
        for v in &vectors {
            if v.len() != oracle.dim() {
                return Err(Error::DimensionMismatch {
                    expected: oracle.dim(),
                    found: v.len(),
                });
            }
        }
        if vectors.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Malformed(
                "vector sequence has non-finite entries".into(),
            ));
        }
        Ok(Self { oracle, vectors })
    }

    /// Splits a row-major buffer of `len × dim` entries.
    pub fn from_flat(oracle: NormOracle, flat: &[f64]) -> Self {
        Self {
            oracle,
            vectors: flat.chunks(oracle.dim()).map(<[f64]>::to_vec).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn flat(&self) -> Vec<f64> {
        self.vectors.concat()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.vectors.iter().map(|x| self.oracle.norm(x)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.vectors.iter().flatten().all(|v| *v == 0.0)
    }

    /// The `len × dim` matrix with the vectors as rows.
    pub fn matrix(&self) -> DMatrix<f64> {
        opnorm::rows_to_matrix(&self.vectors, self.oracle.dim())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            oracle: self.oracle,
            vectors: self
                .vectors
                .iter()
                .map(|x| x.iter().map(|v| v * c).collect())
                .collect(),
        }
    }
}

/// `‖(x_n)‖^s_λ = ‖(‖x_n‖)_n‖_λ`.
pub fn strong_norm(space: &Space, xs: &VectorSequence) -> f64 {
    space.norm(&xs.norms())
}

/// Both bounds of `sup_{f ∈ B_{X*}} ‖(f(x_n))_n‖_λ`; `argmax` is `f`.
pub fn weak_norm_bounds(space: &Space, xs: &VectorSequence) -> OpNorm {
    opnorm::operator_norm(&xs.matrix(), &xs.oracle.dual(), space)
}

fn pairings(xs: &[Vec<f64>], f: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|x| x.iter().zip(f).map(|(a, b)| a * b).sum())
        .collect()
}

fn converged(bounds: &OpNorm) -> bool {
    bounds.gap() <= 1e-9 * bounds.upper.max(1e-300)
}

/// `‖(x_n)‖^w_λ`, with the dual functional as witness.
pub fn weak_norm(space: &Space, xs: &VectorSequence) -> Witnessed {
    if xs.is_empty() {
        return Witnessed::exact(0.0);
    }
    let bounds = weak_norm_bounds(space, xs);
    let f = bounds.argmax.clone();
    let value = space.norm(&pairings(&xs.vectors, &f));
    Witnessed::lower(value, f, converged(&bounds))
}

/// `‖(f_n)‖^{w*}_λ = sup_{x ∈ B_X} ‖(f_n(x))_n‖_λ` for functionals `f_n`
/// on the space of `oracle`; `fs.oracle` is the dual oracle. Witness `x`.
pub fn weak_star_norm(space: &Space, fs: &VectorSequence, budget: &OptBudget) -> Result<Witnessed> {
    if fs.is_empty() || fs.is_zero() {
        return Ok(Witnessed::exact(0.0));
    }
    let primal = fs.oracle.dual();
    let ball = BallSpec::DualBall(fs.oracle);
    let objective = |x: &[f64]| space.norm(&pairings(&fs.vectors, x));
    let seeds: Vec<Vec<f64>> = fs
        .vectors
        .iter()
        .filter(|f| f.iter().any(|v| *v != 0.0))
        .map(|f| primal.norming(f))
        .collect();
    maximize_over_ball(&objective, &ball, budget, &seeds)
}

/// `T ↦ ‖(‖T x_n‖_λ)_n‖_λ` for a row-major `m × dim` matrix `T`.
pub fn mid_objective(space: &Space, xs: &VectorSequence, rows: usize, t: &[f64]) -> f64 {
    let d = xs.oracle.dim();
    let mut images = Vec::with_capacity(xs.len());
    let mut y = vec![0.0; rows];
    for x in &xs.vectors {
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = t[i * d..(i + 1) * d]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum();
        }
        images.push(space.norm(&y));
    }
    space.norm(&images)
}

/// Places `f` in row `row` of an otherwise zero `m × dim` matrix.
pub fn functional_in_row(f: &[f64], rows: usize, row: usize) -> Vec<f64> {
    let d = f.len();
    let mut t = vec![0.0; rows * d];
    t[row * d..(row + 1) * d].copy_from_slice(f);
    t
}

/// Rescales a matrix into the operator ball, using the certified bound.
pub fn into_operator_ball(ball: &BallSpec, t: &[f64]) -> Option<Vec<f64>> {
    let g = ball.gauge(t);
    if g == 0.0 {
        return Some(t.to_vec());
    }
    if g <= 1.0 {
        return Some(t.to_vec());
    }
    radial(t, g)
}

/// `‖(x_n)‖^mid_λ` as the supremum over `T ∈ B_{L(X, λ_m)}`; witness `T`
/// (row-major, `m × dim`).
pub fn mid_norm(
    space: &Space,
    xs: &VectorSequence,
    m: usize,
    budget: &OptBudget,
) -> Result<Witnessed> {
    mid_norm_seeded(space, xs, m, budget, &[])
}

/// [`mid_norm`] with extra seeds. Seeds may lie outside the operator ball;
/// each is scaled into it first.
pub fn mid_norm_seeded(
    space: &Space,
    xs: &VectorSequence,
    m: usize,
    budget: &OptBudget,
    extra: &[Vec<f64>],
) -> Result<Witnessed> {
    if m == 0 {
        return Err(Error::Precondition("mid norm needs m >= 1".into()));
    }
    let d = xs.oracle.dim();
    if xs.is_empty() || xs.is_zero() {
        return Ok(Witnessed::lower(0.0, vec![0.0; m * d], true));
    }
    let ball = BallSpec::OperatorBall {
        domain: xs.oracle,
        codomain: space.clone(),
        rows: m,
    };
    let mut seeds = Vec::new();
    let e1 = space.unit_vector_norm(1)?;
    let weak = weak_norm(space, xs);
    if let Some(f) = &weak.witness {
        seeds.push(functional_in_row(
            &f.iter().map(|v| v / e1).collect::<Vec<_>>(),
            m,
            0,
        ));
    }
    let svd = xs.matrix().svd(false, true);
    if let Some(v_t) = &svd.v_t {
        let mut t = vec![0.0; m * d];
        for k in 0..v_t.nrows().min(m) {
            if svd.singular_values[k] > 0.0 {
                t[k * d..(k + 1) * d]
                    .copy_from_slice(&v_t.row(k).iter().copied().collect::<Vec<_>>());
            }
        }
        seeds.push(t);
    }
    for t in extra {
        if t.len() != m * d {
            return Err(Error::DimensionMismatch {
                expected: m * d,
                found: t.len(),
            });
        }
        seeds.push(t.clone());
    }
    let seeds: Vec<Vec<f64>> = seeds
        .iter()
        .filter_map(|t| into_operator_ball(&ball, t))
        .filter(|t| ball.gauge(t) <= 1.0 + FEASIBILITY_TOL)
        .collect();
    let objective = |t: &[f64]| mid_objective(space, xs, m, t);
    maximize_over_ball(&objective, &ball, budget, &seeds)
}

/// Unit ball of `λ^{w*}_m(X*)`: `m` functionals stacked row-major.
struct WeakStarBall {
    domain: NormOracle,
    codomain: Space,
    rows: usize,
}

impl Ball for WeakStarBall {
    fn dim(&self) -> usize {
        self.rows * self.domain.dim()
    }

    fn gauge(&self, fs: &[f64]) -> f64 {
        let a = opnorm::matrix_from_rows(fs, self.rows, self.domain.dim());
        opnorm::operator_norm(&a, &self.domain, &self.codomain).upper
    }

    fn gauge_estimate(&self, fs: &[f64]) -> f64 {
        let a = opnorm::matrix_from_rows(fs, self.rows, self.domain.dim());
        opnorm::operator_norm_estimate(&a, &self.domain, &self.codomain)
    }
}

/// The functional form `sup ‖((f_k(x_n))_k)_n‖^s_λ` over `(f_k)_{k ≤ m}` in
/// the unit ball of `λ^{w*}(X*)`. Searched independently of [`mid_norm`]
/// (different RNG streams) from the same seeds.
pub fn mid_norm_functional_form(
    space: &Space,
    xs: &VectorSequence,
    m: usize,
    budget: &OptBudget,
) -> Result<Witnessed> {
    let d = xs.oracle.dim();
    if xs.is_empty() || xs.is_zero() {
        return Ok(Witnessed::lower(0.0, vec![0.0; m * d], true));
    }
    let ball = WeakStarBall {
        domain: xs.oracle,
        codomain: space.clone(),
        rows: m,
    };
    let weak = weak_norm(space, xs);
    let e1 = space.unit_vector_norm(1)?;
    let mut seeds = Vec::new();
    if let Some(f) = weak.witness {
        let t = functional_in_row(&f.iter().map(|v| v / e1).collect::<Vec<_>>(), m, 0);
        let g = ball.gauge(&t);
        if g > 0.0 {
            seeds.push(t.iter().map(|v| v / g.max(1.0)).collect());
        }
    }
    let objective = |fs: &[f64]| -> f64 {
        let values: Vec<f64> = xs
            .vectors
            .iter()
            .map(|x| {
                let column: Vec<f64> = fs
                    .chunks(d)
                    .map(|f| f.iter().zip(x).map(|(a, b)| a * b).sum())
                    .collect();
                space.norm(&column)
            })
            .collect();
        space.norm(&values)
    };
    let budget = budget.clone().with_seed(mix(budget.seed, 0xf0_f0));
    maximize_over_ball(&objective, &ball, &budget, &seeds)
}

/// The three norms of one instance and any ordering violations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainReport {
    pub weak: Witnessed,
    pub mid: Witnessed,
    pub strong: f64,
    pub violations: Vec<String>,
}

/// `weak ≤ mid ≤ strong`, with the mid search seeded from the weak witness.
pub fn chain_check(
    space: &Space,
    xs: &VectorSequence,
    m: usize,
    budget: &OptBudget,
) -> Result<ChainReport> {
    space.require_unit_basis(1)?;
    let weak = weak_norm(space, xs);
    let mid = mid_norm(space, xs, m, budget)?;
    let strong = strong_norm(space, xs);
    let mut violations = Vec::new();
    if weak.value > mid.value + 1e-9 {
        violations.push(format!("weak {} > mid {}", weak.value, mid.value));
    }
    if mid.value > strong + 1e-9 {
        violations.push(format!("mid {} > strong {strong}", mid.value));
    }
    Ok(ChainReport {
        weak,
        mid,
        strong,
        violations,
    })
}

/// `β_j = ‖(f_j(x_n))_n‖_λ`.
pub fn limited_bound_profile(
    space: &Space,
    xs: &VectorSequence,
    fs: &VectorSequence,
) -> Result<Vec<f64>> {
    if !space.is_perfect() {
        return Err(Error::Precondition(format!(
            "{} is not perfect",
            space.spec()
        )));
    }
    if fs.oracle.dim() != xs.oracle.dim() {
        return Err(Error::DimensionMismatch {
            expected: xs.oracle.dim(),
            found: fs.oracle.dim(),
        });
    }
    Ok(fs
        .vectors
        .iter()
        .map(|f| space.norm(&pairings(&xs.vectors, f)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{Growth, SpaceSpec, TailRule, Weights};

    fn l2(d: usize) -> NormOracle {
        NormOracle::lp(d, 2.0)
    }

    fn seq(d: usize, vectors: &[&[f64]]) -> VectorSequence {
        VectorSequence::new(l2(d), vectors.iter().map(|v| v.to_vec()).collect()).unwrap()
    }

    #[test]
    fn oracle_parsing_and_duality() {
        let o = NormOracle::parse("linf:3").unwrap();
        assert_eq!(o.dim(), 3);
        assert_eq!(o.dual().p(), 1.0);
        assert_eq!(NormOracle::parse("l2:2").unwrap().to_string(), "l2:2");
        assert!(NormOracle::parse("l0.5:2").is_err());
        assert!(NormOracle::parse("x2:2").is_err());
        for p in [1.0, 1.5, 2.0, 3.0, f64::INFINITY] {
            let o = NormOracle::lp(3, p);
            let f = [0.4, -1.3, 0.2];
            let x = o.norming(&f);
            assert!((o.norm(&x) - 1.0).abs() < 1e-12, "p={p}");
            let pairing: f64 = f.iter().zip(&x).map(|(a, b)| a * b).sum();
            assert!((pairing - o.dual_norm(&f)).abs() < 1e-12, "p={p}");
        }
    }

    #[test]
    fn strong_examples() {
        let l1 = Space::lp(1.0).unwrap();
        assert_eq!(strong_norm(&l1, &seq(2, &[&[3.0, 4.0], &[0.0, 1.0]])), 6.0);
        let lorentz = Space::new(SpaceSpec::Lorentz {
            weights: Weights::from_tail(TailRule::Geometric(0.5), Growth::Decay),
            p: 1.0,
        })
        .unwrap();
        assert_eq!(
            strong_norm(&lorentz, &seq(2, &[&[1.0, 0.0], &[2.0, 0.0]])),
            2.5
        );
    }

    #[test]
    fn weak_examples() {
        let l2s = Space::lp(2.0).unwrap();
        let w = weak_norm(&l2s, &seq(2, &[&[1.0, 0.0], &[0.0, 1.0]]));
        assert!((w.value - 1.0).abs() < 1e-12);
        let l1 = Space::lp(1.0).unwrap();
        let w = weak_norm(&l1, &seq(1, &[&[1.0], &[-2.0], &[3.0]]));
        assert!((w.value - 6.0).abs() < 1e-12);
    }

    #[test]
    fn weak_star_of_single_functional_is_dual_norm() {
        let l2s = Space::lp(2.0).unwrap();
        let fs = VectorSequence::new(NormOracle::lp(2, 1.0), vec![vec![3.0, -4.0]]).unwrap();
        // functionals on ℓ_∞^2, measured in ℓ_1
        let w = weak_star_norm(&l2s, &fs, &OptBudget::default()).unwrap();
        assert!((w.value - 7.0).abs() < 1e-9, "{}", w.value);
    }

    #[test]
    fn mid_of_singleton_is_norm() {
        let budget = OptBudget::default().with_restarts(4).with_iterations(100);
        for p in [1.0, 2.0, 3.0] {
            let space = Space::lp(p).unwrap();
            let xs = seq(3, &[&[0.3, -1.0, 2.0]]);
            let mid = mid_norm(&space, &xs, 4, &budget).unwrap();
            let x = l2(3).norm(&xs.vectors[0]);
            assert!((mid.value - x).abs() < 1e-9, "p={p}: {} vs {x}", mid.value);
        }
    }

    #[test]
    fn mid_brackets_basis() {
        let space = Space::lp(2.0).unwrap();
        let xs = seq(2, &[&[1.0, 0.0], &[0.0, 1.0]]);
        let budget = OptBudget::default().with_restarts(4).with_iterations(100);
        let r = chain_check(&space, &xs, 2, &budget).unwrap();
        assert!(r.violations.is_empty(), "{:?}", r.violations);
        assert!(r.mid.value >= 1.0 - 1e-12 && r.mid.value <= 2f64.sqrt() + 1e-9);
        let zero = seq(2, &[&[0.0, 0.0]]);
        assert_eq!(mid_norm(&space, &zero, 2, &budget).unwrap().value, 0.0);
    }

    #[test]
    fn profile() {
        let space = Space::lp(2.0).unwrap();
        let xs = seq(2, &[&[1.0, 2.0], &[3.0, 0.0]]);
        let fs = seq(2, &[&[1.0, 0.0], &[0.0, 0.0]]);
        let beta = limited_bound_profile(&space, &xs, &fs).unwrap();
        assert!((beta[0] - 10f64.sqrt()).abs() < 1e-12);
        assert_eq!(beta[1], 0.0);
        let c0 = Space::new(SpaceSpec::C0).unwrap();
        assert!(limited_bound_profile(&c0, &xs, &fs).is_err());
    }

    #[test]
    fn json_form() {
        let xs: VectorSequence =
            serde_json::from_str(r#"{"oracle":"l2:2","vectors":[[3,4],[0,1]]}"#).unwrap();
        assert_eq!(xs.len(), 2);
        assert!(
            serde_json::from_str::<VectorSequence>(r#"{"oracle":"l2:2","vectors":[[3]]}"#).is_err()
        );
    }
}
