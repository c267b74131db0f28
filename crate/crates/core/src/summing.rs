//! Summing norms of finite matrices: `π_λ`, `π_λ^mid` and `w_λ^mid`.
//!
//! All three are suprema and come back as lower bounds with witnesses.
//! Constraint norms are divided out using an over-estimate (the certified
//! weak bound, or the strong norm in place of the mid norm), so every
//! witness is feasible.

use nalgebra::DMatrix;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::opnorm::{self, OpNorm};
use crate::optim::{
    gaussian_vec, maximize_over_ball, optimize, radial, Ball, BallSpec, OptBudget, SearchDomain,
    Sense, Witnessed, FEASIBILITY_TOL,
};
use crate::spaces::Space;
use crate::vector_norms::{
    functional_in_row, mid_norm, mid_norm_seeded, strong_norm, weak_norm_bounds, NormOracle,
    VectorSequence,
};
use crate::verify::Inequality;

/// `T: X → Y` between two `ℓ_p` oracles, stored as `dim Y` rows.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorMatrix {
    pub domain: NormOracle,
    pub codomain: NormOracle,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawOperator {
    domain: NormOracle,
    codomain: NormOracle,
    rows: Vec<Vec<f64>>,
}

impl<'de> Deserialize<'de> for OperatorMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawOperator::deserialize(d)?;
        OperatorMatrix::new(raw.domain, raw.codomain, raw.rows).map_err(serde::de::Error::custom)
    }
}

impl OperatorMatrix {
    pub fn new(domain: NormOracle, codomain: NormOracle, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != codomain.dim() {
            return Err(Error::DimensionMismatch {
                expected: codomain.dim(),
                found: rows.len(),
            });
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != domain.dim()) {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                found: bad.len(),
            });
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Malformed("operator has non-finite entries".into()));
        }
        Ok(Self {
            domain,
            codomain,
            rows,
        })
    }

    pub fn identity(oracle: NormOracle) -> Self {
        let d = oracle.dim();
        let rows = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self {
            domain: oracle,
            codomain: oracle,
            rows,
        }
    }

    pub fn from_matrix(domain: NormOracle, codomain: NormOracle, a: &DMatrix<f64>) -> Result<Self> {
        let rows = (0..a.nrows())
            .map(|i| a.row(i).iter().copied().collect())
            .collect();
        Self::new(domain, codomain, rows)
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        opnorm::rows_to_matrix(&self.rows, self.domain.dim())
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|v| v * c).collect())
                .collect(),
            ..self.clone()
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &OperatorMatrix) -> Result<OperatorMatrix> {
        if inner.codomain.dim() != self.domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dim(),
                found: inner.codomain.dim(),
            });
        }
        let product = self.matrix() * inner.matrix();
        Self::from_matrix(inner.domain, self.codomain, &product)
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().flatten().all(|v| *v == 0.0)
    }

    /// `‖T‖_{X → Y}`.
    pub fn norm(&self) -> OpNorm {
        let target = Space::lp(self.codomain.p()).expect("oracle exponents are valid");
        opnorm::operator_norm(&self.matrix(), &self.domain, &target)
    }

    pub fn hilbert_schmidt(&self) -> f64 {
        self.matrix().norm()
    }

    /// `Σ_k ‖e_k‖_Y ‖row_k‖_{X*}`, an upper bound of every summing norm of
    /// `T` when `‖e_1‖_λ = 1`.
    pub fn decomposition_constant(&self) -> f64 {
        let e = self.codomain.dim();
        self.rows
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let mut unit = vec![0.0; e];
                unit[k] = 1.0;
                self.codomain.norm(&unit) * self.domain.dual_norm(r)
            })
            .sum()
    }

    fn images(&self, xs: &[f64]) -> Vec<f64> {
        xs.chunks(self.domain.dim())
            .map(|x| self.codomain.norm(&self.apply(x)))
            .collect()
    }
}

/// `‖(T x_i)‖^s_λ` for a flat `n × dim X` buffer.
pub fn image_strong_norm(space: &Space, t: &OperatorMatrix, xs: &[f64]) -> f64 {
    space.norm(&t.images(xs))
}

/// Unit ball of `λ^w_n(X)`: flat `n × dim X` buffers.
struct WeakBall<'a> {
    space: &'a Space,
    oracle: NormOracle,
    len: usize,
}

impl WeakBall<'_> {
    fn sequence(&self, flat: &[f64]) -> VectorSequence {
        VectorSequence::from_flat(self.oracle, flat)
    }
}

impl Ball for WeakBall<'_> {
    fn dim(&self) -> usize {
        self.len * self.oracle.dim()
    }

    fn gauge(&self, flat: &[f64]) -> f64 {
        weak_norm_bounds(self.space, &self.sequence(flat)).upper
    }

    fn gauge_estimate_hinted(&self, flat: &[f64], hint: &mut Vec<f64>) -> f64 {
        let m = self.sequence(flat).matrix();
        opnorm::operator_norm_estimate_warm(&m, &self.oracle.dual(), self.space, hint)
    }

    fn gauge_estimate(&self, flat: &[f64]) -> f64 {
        self.gauge_estimate_hinted(flat, &mut Vec::new())
    }
}

/// Unit ball of `λ^s_n(X)`.
struct StrongBall<'a> {
    space: &'a Space,
    oracle: NormOracle,
    len: usize,
}

impl Ball for StrongBall<'_> {
    fn dim(&self) -> usize {
        self.len * self.oracle.dim()
    }

    fn gauge(&self, flat: &[f64]) -> f64 {
        strong_norm(self.space, &VectorSequence::from_flat(self.oracle, flat))
    }
}

/// Starting sequences of length `n`: right singular vectors of `T`, the
/// unit basis, and the top singular vector alone.
fn sequence_seeds(t: &OperatorMatrix, n: usize) -> Vec<Vec<f64>> {
    let d = t.domain.dim();
    let mut seeds = Vec::new();
    let svd = t.matrix().svd(false, true);
    if let Some(v_t) = &svd.v_t {
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let mut all = vec![0.0; n * d];
        for (slot, &k) in order.iter().take(n).enumerate() {
            all[slot * d..(slot + 1) * d].copy_from_slice(v_t.row(k).transpose().as_slice());
        }
        seeds.push(all);
        if let Some(&k) = order.first() {
            let mut top = vec![0.0; n * d];
            top[..d].copy_from_slice(v_t.row(k).transpose().as_slice());
            seeds.push(top);
        }
    }
    let mut basis = vec![0.0; n * d];
    for i in 0..n.min(d) {
        basis[i * d + i] = 1.0;
    }
    seeds.push(basis);
    seeds
}

fn scaled_into(ball: &dyn Ball, seeds: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    seeds
        .into_iter()
        .filter_map(|s| radial(&s, ball.gauge(&s)))
        .filter(|s| ball.contains(s))
        .collect()
}

/// `π_λ(T) = sup { ‖(T x_i)‖^s_λ : ‖(x_i)_{i ≤ n}‖^w_λ ≤ 1 }`; witness `(x_i)`
/// as a flat `n × dim X` buffer.
pub fn pi_lambda(
    space: &Space,
    t: &OperatorMatrix,
    n: usize,
    budget: &OptBudget,
) -> Result<Witnessed> {
    pi_lambda_seeded(space, t, n, budget, &[])
}

/// [`pi_lambda`] with extra (unnormalised) starting sequences.
pub fn pi_lambda_seeded(
    space: &Space,
    t: &OperatorMatrix,
    n: usize,
    budget: &OptBudget,
    extra: &[Vec<f64>],
) -> Result<Witnessed> {
    if n == 0 {
        return Err(Error::Precondition("sequence length must be >= 1".into()));
    }
    let d = t.domain.dim();
    if t.is_zero() {
        return Ok(Witnessed::lower(0.0, vec![0.0; n * d], true));
    }
    let ball = WeakBall {
        space,
        oracle: t.domain,
        len: n,
    };
    let mut seeds = sequence_seeds(t, n);
    seeds.extend(extra.iter().cloned());
    let seeds = scaled_into(&ball, seeds);
    let objective = |xs: &[f64]| image_strong_norm(space, t, xs);
    maximize_over_ball(&objective, &ball, budget, &seeds)
}

/// `π_λ^mid(T)` with the mid norm of candidates replaced by the strong norm,
/// which dominates it; witness `(x_i)` as a flat buffer.
pub fn pi_lambda_mid(
    space: &Space,
    t: &OperatorMatrix,
    n: usize,
    budget: &OptBudget,
) -> Result<Witnessed> {
    space.require_unit_basis(1)?;
    if n == 0 {
        return Err(Error::Precondition("sequence length must be >= 1".into()));
    }
    let d = t.domain.dim();
    if t.is_zero() {
        return Ok(Witnessed::lower(0.0, vec![0.0; n * d], true));
    }
    let ball = StrongBall {
        space,
        oracle: t.domain,
        len: n,
    };
    let seeds = scaled_into(&ball, sequence_seeds(t, n));
    let objective = |xs: &[f64]| image_strong_norm(space, t, xs);
    maximize_over_ball(&objective, &ball, budget, &seeds)
}

/// Lower bound of `‖(x_i)‖^mid_λ` seeded with every normalised row of `T`
/// placed in the first row of the probing operator.
pub fn mid_norm_row_seeded(
    space: &Space,
    t: &OperatorMatrix,
    xs: &VectorSequence,
    m: usize,
    budget: &OptBudget,
) -> Result<Witnessed> {
    let seeds: Vec<Vec<f64>> = t
        .rows
        .iter()
        .filter(|r| r.iter().any(|v| *v != 0.0))
        .map(|r| {
            let scale = t.domain.dual_norm(r);
            functional_in_row(&r.iter().map(|v| v / scale).collect::<Vec<_>>(), m, 0)
        })
        .collect();
    mid_norm_seeded(space, xs, m, budget, &seeds)
}

/// Finite-set bound `‖(T x_i)‖^s_λ ≤ C ‖(x_i)‖^mid_λ` for one sequence, with
/// `C` the decomposition constant of `T` and the mid norm a seeded lower
/// bound.
pub fn finite_mid_check(
    space: &Space,
    t: &OperatorMatrix,
    xs: &VectorSequence,
    m: usize,
    budget: &OptBudget,
) -> Result<Inequality> {
    let lhs = image_strong_norm(space, t, &xs.flat());
    let mid = mid_norm_row_seeded(space, t, xs, m, budget)?;
    Ok(Inequality::new(lhs, t.decomposition_constant() * mid.value))
}

/// `(S, (x_i))` pairs: `S` in the unit ball of `L(Y, λ_m)`, `(x_i)` in the
/// unit ball of `λ^w_n(X)`.
struct JointDomain<'a> {
    operators: BallSpec,
    sequences: WeakBall<'a>,
    split: usize,
}

impl JointDomain<'_> {
    fn rescale(&self, z: &[f64], gs: f64, gx: f64) -> Option<Vec<f64>> {
        let mut out = radial(&z[..self.split], gs)?;
        out.extend(radial(&z[self.split..], gx)?);
        Some(out)
    }
}

impl SearchDomain for JointDomain<'_> {
    fn dim(&self) -> usize {
        self.split + self.sequences.dim()
    }

    fn candidate(&self, z: &[f64], hint: &mut Vec<f64>) -> Option<Vec<f64>> {
        let gs = self.operators.gauge_estimate_hinted(&z[..self.split], hint);
        let gx = self.sequences.gauge_estimate(&z[self.split..]);
        self.rescale(z, gs, gx)
    }

    fn certify(&self, z: &[f64]) -> Option<Vec<f64>> {
        let gs = self.operators.gauge(&z[..self.split]);
        let gx = self.sequences.gauge(&z[self.split..]);
        self.rescale(z, gs, gx)
    }

    fn contains(&self, p: &[f64]) -> bool {
        self.operators.contains(&p[..self.split]) && self.sequences.contains(&p[self.split..])
    }

    fn excess(&self, p: &[f64]) -> f64 {
        self.operators
            .gauge(&p[..self.split])
            .max(self.sequences.gauge(&p[self.split..]))
    }

    fn normalize(&self, z: Vec<f64>, hint: &mut Vec<f64>) -> Vec<f64> {
        hint.clear();
        self.candidate(&z, hint).unwrap_or(z)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        gaussian_vec(rng, self.dim())
    }
}

/// `‖(S T x_i)‖^s_λ` for a joint point `(S, (x_i))`.
pub fn joint_objective(space: &Space, t: &OperatorMatrix, m: usize, point: &[f64]) -> f64 {
    let e = t.codomain.dim();
    let (s, xs) = point.split_at(m * e);
    let images: Vec<f64> = xs
        .chunks(t.domain.dim())
        .map(|x| {
            let tx = t.apply(x);
            let stx: Vec<f64> = s
                .chunks(e)
                .map(|row| row.iter().zip(&tx).map(|(a, b)| a * b).sum())
                .collect();
            space.norm(&stx)
        })
        .collect();
    space.norm(&images)
}

/// `w_λ^mid(T) = sup_{S ∈ B_{L(Y, λ_m)}} π_λ(S T)`, searched jointly over `S`
/// and length-`n` sequences. Witness: `S` (row-major `m × dim Y`) followed
/// by the flat sequence.
pub fn w_lambda_mid(
    space: &Space,
    t: &OperatorMatrix,
    n: usize,
    m: usize,
    budget: &OptBudget,
) -> Result<Witnessed> {
    w_lambda_mid_seeded(space, t, n, m, budget, &[])
}

/// [`w_lambda_mid`] with extra starting points `(S, xs)`, scaled into the
/// feasible set first.
pub fn w_lambda_mid_seeded(
    space: &Space,
    t: &OperatorMatrix,
    n: usize,
    m: usize,
    budget: &OptBudget,
    extra: &[(Vec<f64>, Vec<f64>)],
) -> Result<Witnessed> {
    space.require_unit_basis(m)?;
    if n == 0 || m == 0 {
        return Err(Error::Precondition("n and m must be >= 1".into()));
    }
    let (d, e) = (t.domain.dim(), t.codomain.dim());
    if t.is_zero() {
        return Ok(Witnessed::lower(0.0, vec![0.0; m * e + n * d], true));
    }
    let domain = JointDomain {
        operators: BallSpec::OperatorBall {
            domain: t.codomain,
            codomain: space.clone(),
            rows: m,
        },
        sequences: WeakBall {
            space,
            oracle: t.domain,
            len: n,
        },
        split: m * e,
    };

    let mut starts: Vec<(Vec<f64>, Vec<f64>)> = Vec::new();
    let svd = t.matrix().svd(true, true);
    if let (Some(u), Some(v_t)) = (&svd.u, &svd.v_t) {
        let k = svd.singular_values.len();
        let mut s = vec![0.0; m * e];
        let mut xs = vec![0.0; n * d];
        for c in 0..k.min(m).min(n) {
            s[c * e..(c + 1) * e].copy_from_slice(u.column(c).as_slice());
            xs[c * d..(c + 1) * d].copy_from_slice(v_t.row(c).transpose().as_slice());
        }
        starts.push((s, xs));
        let top = (0..k)
            .max_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
            .unwrap_or(0);
        let v: Vec<f64> = v_t.row(top).iter().copied().collect();
        let f = t.codomain.dual().norming(&t.apply(&v));
        let mut xs = vec![0.0; n * d];
        xs[..d].copy_from_slice(&v);
        starts.push((functional_in_row(&f, m, 0), xs));
    }
    starts.extend(extra.iter().cloned());
    let seeds: Vec<Vec<f64>> = starts
        .into_iter()
        .filter_map(|(s, xs)| {
            let mut z = s;
            z.extend(xs);
            domain.certify(&z)
        })
        .filter(|p| domain.contains(p))
        .collect();
    let objective = |p: &[f64]| joint_objective(space, t, m, p);
    optimize(&objective, &domain, budget, &seeds, Sense::Max)
}

/// Finite-set form of the weak-to-mid bound for one witness `(S, (x_i))` of
/// [`w_lambda_mid`]: `‖(S T x_i)‖^s_λ ≤ value · ‖(x_i)‖^w_λ`, with the
/// certified weak bound.
pub fn weak_mid_check(
    space: &Space,
    t: &OperatorMatrix,
    m: usize,
    w: &Witnessed,
) -> Result<Inequality> {
    let point = w
        .witness
        .as_ref()
        .ok_or_else(|| Error::Precondition("result has no witness".into()))?;
    let split = m * t.codomain.dim();
    let xs = VectorSequence::from_flat(t.domain, &point[split..]);
    let lhs = joint_objective(space, t, m, point);
    Ok(Inequality::new(
        lhs,
        w.value * weak_norm_bounds(space, &xs).upper,
    ))
}

/// The two halves of the ideal inequality, checked on one witness.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IdealReport {
    /// `‖(R T S x_i)‖^s ≤ ‖R‖ ‖(T S x_i)‖^s`.
    pub outer: Inequality,
    /// `‖(S x_i)‖^mid ≤ ‖S‖ ‖(x_i)‖^mid`.
    pub inner: Inequality,
    pub witness: Vec<f64>,
}

/// Runs [`pi_lambda_mid`] on `R T S` and checks both factor inequalities on
/// its witness.
#[allow(clippy::too_many_arguments)]
pub fn ideal_witness_check(
    space: &Space,
    r: &OperatorMatrix,
    t: &OperatorMatrix,
    s: &OperatorMatrix,
    n: usize,
    m: usize,
    budget: &OptBudget,
) -> Result<IdealReport> {
    let ts = t.compose(s)?;
    let rts = r.compose(&ts)?;
    let found = pi_lambda_mid(space, &rts, n, budget)?;
    let flat = found
        .witness
        .unwrap_or_else(|| vec![0.0; n * s.domain.dim()]);

    let outer = Inequality::new(
        image_strong_norm(space, &rts, &flat),
        r.norm().upper * image_strong_norm(space, &ts, &flat),
    );

    let xs = VectorSequence::from_flat(s.domain, &flat);
    let sx = VectorSequence::new(s.codomain, xs.vectors.iter().map(|x| s.apply(x)).collect())?;
    let mid_sx = mid_norm(space, &sx, m, budget)?;
    let s_norm = s.norm().upper;
    let mut seeds = Vec::new();
    if let (Some(probe), true) = (&mid_sx.witness, s_norm > 0.0) {
        let probe = opnorm::matrix_from_rows(probe, m, s.codomain.dim());
        let pulled = probe * s.matrix() / s_norm;
        seeds.push(
            (0..m)
                .flat_map(|i| pulled.row(i).iter().copied().collect::<Vec<_>>())
                .collect(),
        );
    }
    let mid_x = mid_norm_seeded(space, &xs, m, budget, &seeds)?;
    let inner = Inequality::new(mid_sx.value, s_norm * mid_x.value);
    Ok(IdealReport {
        outer,
        inner,
        witness: flat,
    })
}

/// Whether a flat sequence lies in the weak unit ball (certified).
pub fn in_weak_ball(space: &Space, oracle: NormOracle, flat: &[f64]) -> bool {
    weak_norm_bounds(space, &VectorSequence::from_flat(oracle, flat)).upper <= 1.0 + FEASIBILITY_TOL
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l2(d: usize) -> NormOracle {
        NormOracle::lp(d, 2.0)
    }

    fn quick() -> OptBudget {
        OptBudget::default().with_restarts(4).with_iterations(120)
    }

    #[test]
    fn scalar_identity() {
        let t = OperatorMatrix::identity(l2(1));
        let l1 = Space::lp(1.0).unwrap();
        for n in [1, 3] {
            let pi = pi_lambda(&l1, &t, n, &quick()).unwrap();
            assert!((pi.value - 1.0).abs() < 1e-9, "{}", pi.value);
        }
        let mid = pi_lambda_mid(&l1, &t, 3, &quick()).unwrap();
        assert!((mid.value - 1.0).abs() < 1e-9);
        let w = w_lambda_mid(&l1, &t, 2, 1, &quick()).unwrap();
        assert!((w.value - 1.0).abs() < 1e-9, "{}", w.value);
    }

    #[test]
    fn pi_two_is_hilbert_schmidt_for_diagonal() {
        let t = OperatorMatrix::new(
            l2(3),
            l2(3),
            vec![
                vec![2.0, 0.0, 0.0],
                vec![0.0, -1.0, 0.0],
                vec![0.0, 0.0, 0.5],
            ],
        )
        .unwrap();
        let l2s = Space::lp(2.0).unwrap();
        let pi = pi_lambda(&l2s, &t, 8, &quick()).unwrap();
        let hs = t.hilbert_schmidt();
        assert!(
            pi.value <= hs + 1e-9 && pi.value >= 0.9 * hs,
            "{} vs {hs}",
            pi.value
        );
        assert!(in_weak_ball(&l2s, t.domain, pi.witness.as_ref().unwrap()));
    }

    #[test]
    fn zero_operator() {
        let t = OperatorMatrix::new(l2(2), l2(2), vec![vec![0.0; 2]; 2]).unwrap();
        let l2s = Space::lp(2.0).unwrap();
        assert_eq!(pi_lambda(&l2s, &t, 3, &quick()).unwrap().value, 0.0);
        assert_eq!(w_lambda_mid(&l2s, &t, 3, 2, &quick()).unwrap().value, 0.0);
    }

    #[test]
    fn witness_inequalities_hold() {
        let t = OperatorMatrix::new(l2(2), l2(2), vec![vec![1.0, 0.5], vec![-0.3, 2.0]]).unwrap();
        let l2s = Space::lp(2.0).unwrap();
        let mid = pi_lambda_mid(&l2s, &t, 3, &quick()).unwrap();
        let xs = VectorSequence::from_flat(t.domain, mid.witness.as_ref().unwrap());
        let check = finite_mid_check(&l2s, &t, &xs, 2, &quick()).unwrap();
        assert!(check.holds(1e-9), "{check:?}");
        let w = w_lambda_mid(&l2s, &t, 3, 2, &quick()).unwrap();
        assert!(weak_mid_check(&l2s, &t, 2, &w).unwrap().holds(1e-9));
    }

    #[test]
    fn ideal_with_identities_is_tight() {
        let t = OperatorMatrix::new(l2(2), l2(2), vec![vec![1.0, 0.5], vec![-0.3, 2.0]]).unwrap();
        let id = OperatorMatrix::identity(l2(2));
        let l2s = Space::lp(2.0).unwrap();
        let r = ideal_witness_check(&l2s, &id, &t, &id, 2, 2, &quick()).unwrap();
        assert!(r.outer.holds(1e-9) && r.inner.holds(1e-9));
        assert!((r.outer.lhs - r.outer.rhs).abs() < 1e-12);
        assert!((r.inner.lhs - r.inner.rhs).abs() < 1e-12);
        let r2 = ideal_witness_check(&l2s, &id.scaled(2.0), &t, &id, 2, 2, &quick()).unwrap();
        let ts = image_strong_norm(&l2s, &t, &r2.witness);
        assert!((r2.outer.lhs - 2.0 * ts).abs() < 1e-12);
    }

    #[test]
    fn composition_and_json() {
        let t: OperatorMatrix = serde_json::from_str(
            r#"{"domain":"l2:2","codomain":"l1:3","rows":[[1,0],[0,1],[1,1]]}"#,
        )
        .unwrap();
        assert_eq!(t.apply(&[2.0, 3.0]), vec![2.0, 3.0, 5.0]);
        let id = OperatorMatrix::identity(l2(2));
        assert_eq!(t.compose(&id).unwrap().rows, t.rows);
        assert!(id.compose(&t).is_err());
        assert!(serde_json::from_str::<OperatorMatrix>(
            r#"{"domain":"l2:2","codomain":"l2:1","rows":[[1]]}"#
        )
        .is_err());
    }
}
