//! Norms of matrices `A: ℓ_p^d → λ_m`.
//!
//! `sup_{‖x‖ ≤ 1} ‖Ax‖_λ` maximises a convex function, so it is attained at
//! extreme points. Several pairs have exact formulas; the rest get a lower
//! bound from an ascent and a certified upper bound from a branch-and-bound
//! over the surface of the cube `[-1, 1]^d`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::spaces::{conjugate, Space};
use crate::vector_norms::NormOracle;

/// Largest domain dimension handled by the branch-and-bound.
pub const BNB_MAX_DIM: usize = 4;

/// Relative gap at which the branch-and-bound stops.
pub const BNB_REL_TOL: f64 = 1e-10;

/// Work cap of the branch-and-bound, in codomain norm evaluations.
pub const BNB_MAX_EVALS: usize = 40_000;

/// Safety factor on the ascent value when no certificate is available.
pub const UNCERTIFIED_MARGIN: f64 = 1.05;

const SIGN_ENUM_MAX: usize = 16;
const ROUNDING: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    /// Branch-and-bound; `upper` is a proven bound.
    Certified,
    /// `upper` is the ascent value times [`UNCERTIFIED_MARGIN`].
    Uncertified,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpNorm {
    /// `‖A x‖_λ` at `argmax`.
    pub lower: f64,
    pub upper: f64,
    /// A unit vector of the domain.
    pub argmax: Vec<f64>,
    pub method: Method,
}

impl OpNorm {
    fn exact(value: f64, argmax: Vec<f64>) -> Self {
        Self {
            lower: value,
            upper: value,
            argmax,
            method: Method::Exact,
        }
    }

    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

pub fn matrix_from_rows(entries: &[f64], rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, entries)
}

pub fn rows_to_matrix(rows: &[Vec<f64>], cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j])
}

pub(crate) fn apply(a: &DMatrix<f64>, x: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.resize(a.nrows(), 0.0);
    for (j, xj) in x.iter().enumerate() {
        if *xj != 0.0 {
            for (o, aij) in out.iter_mut().zip(a.column(j).iter()) {
                *o += aij * xj;
            }
        }
    }
}

fn apply_transpose(a: &DMatrix<f64>, y: &[f64]) -> Vec<f64> {
    (0..a.ncols())
        .map(|j| a.column(j).iter().zip(y).map(|(aij, yi)| aij * yi).sum())
        .collect()
}

fn row(a: &DMatrix<f64>, i: usize) -> Vec<f64> {
    a.row(i).iter().copied().collect()
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

/// Sign vectors with a leading `+1`.
fn sign_vectors(n: usize) -> impl Iterator<Item = Vec<f64>> {
    let count = if n == 0 { 0 } else { 1usize << (n - 1) };
    (0..count).map(move |mask| {
        (0..n)
            .map(|i| {
                if i > 0 && mask & (1 << (i - 1)) != 0 {
                    -1.0
                } else {
                    1.0
                }
            })
            .collect()
    })
}

/// Closed-form norm where one applies.
fn exact_route(a: &DMatrix<f64>, domain: &NormOracle, codomain: &Space) -> Option<OpNorm> {
    let (m, d) = a.shape();
    let p = domain.p();
    let q = conjugate(p);
    let g = |x: &[f64]| {
        let mut y = Vec::new();
        apply(a, x, &mut y);
        codomain.norm(&y)
    };
    let best = |candidates: &mut dyn Iterator<Item = Vec<f64>>| -> OpNorm {
        let mut out = OpNorm::exact(0.0, unit(d, 0));
        for x in candidates {
            let v = g(&x) / domain.norm(&x);
            if v > out.lower {
                let scale = domain.norm(&x);
                out = OpNorm::exact(v, x.iter().map(|c| c / scale).collect());
            }
        }
        out
    };

    if d == 0 || m == 0 || a.iter().all(|v| *v == 0.0) {
        return Some(OpNorm::exact(
            0.0,
            if d == 0 { Vec::new() } else { unit(d, 0) },
        ));
    }
    if p == 1.0 || d == 1 {
        return Some(best(&mut (0..d).map(|j| unit(d, j))));
    }
    if p.is_infinite() && d <= SIGN_ENUM_MAX {
        return Some(best(&mut sign_vectors(d)));
    }
    let nonzero_rows: Vec<usize> = (0..m)
        .filter(|&i| a.row(i).iter().any(|v| *v != 0.0))
        .collect();
    let target = codomain.lp_exponent();
    if target.is_some_and(f64::is_infinite) || nonzero_rows.len() == 1 {
        // max_i ‖e_i‖_λ ‖row_i‖_*: exact for the sup norm and for a single row
        let mut out = OpNorm::exact(0.0, unit(d, 0));
        for &i in &nonzero_rows {
            let r = row(a, i);
            let e = codomain.norm(&unit(m, i));
            let v = e * NormOracle::lp(d, q).norm(&r);
            if v > out.lower {
                out = OpNorm::exact(v, domain.norming(&r));
            }
        }
        let check = g(&out.argmax);
        out.lower = check.min(out.lower).max(0.0);
        out.upper = out.upper.max(check);
        return Some(out);
    }
    if target == Some(1.0) && m <= SIGN_ENUM_MAX {
        let mut out = OpNorm::exact(0.0, unit(d, 0));
        for s in sign_vectors(m) {
            let f = apply_transpose(a, &s);
            let v = domain.dual_norm(&f);
            if v > out.upper {
                out = OpNorm::exact(v, domain.norming(&f));
            }
        }
        out.lower = g(&out.argmax).min(out.upper);
        return Some(out);
    }
    if p == 2.0 && target == Some(2.0) {
        let svd = a.clone().svd(false, true);
        let v_t = svd.v_t.as_ref()?;
        let (k, sigma) = svd
            .singular_values
            .iter()
            .copied()
            .enumerate()
            .fold((0, 0.0), |acc, (k, s)| if s > acc.1 { (k, s) } else { acc });
        let x: Vec<f64> = v_t.row(k).iter().copied().collect();
        let scale = domain.norm(&x);
        let x: Vec<f64> = x.iter().map(|c| c / scale).collect();
        return Some(OpNorm {
            lower: g(&x).min(sigma),
            upper: sigma * (1.0 + ROUNDING),
            argmax: x,
            method: Method::Exact,
        });
    }
    None
}

/// Nonlinear power iteration for `ℓ_p → ℓ_r`, returning `(‖Ax‖, x)`.
fn power_iteration(
    a: &DMatrix<f64>,
    domain: &NormOracle,
    r: f64,
    start: Vec<f64>,
) -> (f64, Vec<f64>) {
    let m = a.nrows();
    let target = NormOracle::lp(m, r);
    let target_dual = target.dual();
    let mut x = domain.normalized(&start);
    let mut y = Vec::new();
    apply(a, &x, &mut y);
    let mut value = target.norm(&y);
    for _ in 0..60 {
        if value == 0.0 {
            break;
        }
        let s = target_dual.norming(&y);
        let z = apply_transpose(a, &s);
        let next = domain.norming(&z);
        apply(a, &next, &mut y);
        let next_value = target.norm(&y);
        if next_value <= value * (1.0 + 1e-15) {
            if next_value > value {
                x = next;
            }
            break;
        }
        x = next;
        value = next_value;
    }
    apply(a, &x, &mut y);
    (target.norm(&y), x)
}

fn best_column(a: &DMatrix<f64>, codomain: &Space) -> Vec<f64> {
    let d = a.ncols();
    let norms = (0..d).map(|j| codomain.norm(a.column(j).as_slice()));
    let j = norms
        .enumerate()
        .fold((0, -1.0), |acc, c| if c.1 > acc.1 { c } else { acc })
        .0;
    unit(d, j)
}

fn ascent(a: &DMatrix<f64>, domain: &NormOracle, codomain: &Space) -> (f64, Vec<f64>) {
    let (m, d) = a.shape();
    let g = |x: &[f64]| {
        let mut y = Vec::new();
        apply(a, x, &mut y);
        codomain.norm(&y)
    };
    let mut starts = vec![best_column(a, codomain)];
    let svd = a.clone().svd(false, true);
    if let Some(v_t) = &svd.v_t {
        for k in 0..svd.singular_values.len().min(2) {
            starts.push(v_t.row(k).iter().copied().collect());
        }
    }
    for i in 0..m {
        let r = row(a, i);
        if r.iter().any(|v| *v != 0.0) {
            starts.push(domain.norming(&r));
        }
    }

    let mut best = (-1.0, unit(d, 0));
    for start in starts {
        let (v, x) = match codomain.lp_exponent() {
            Some(r) if r > 1.0 && r.is_finite() => power_iteration(a, domain, r, start),
            _ => {
                let x = domain.normalized(&start);
                (g(&x), x)
            }
        };
        if v > best.0 {
            best = (v, x);
        }
    }
    best
}

#[derive(Debug)]
struct Patch {
    face: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    bound: f64,
}

impl PartialEq for Patch {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound
    }
}
impl Eq for Patch {}
impl PartialOrd for Patch {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Patch {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound)
    }
}

struct Bnb<'a> {
    a: &'a DMatrix<f64>,
    domain: &'a NormOracle,
    codomain: &'a Space,
    evals: usize,
    lower: f64,
    argmax: Vec<f64>,
    buf: Vec<f64>,
}

impl Bnb<'_> {
    fn point(&self, face: usize, free: &[f64]) -> Vec<f64> {
        let mut c = Vec::with_capacity(free.len() + 1);
        c.extend_from_slice(&free[..face]);
        c.push(1.0);
        c.extend_from_slice(&free[face..]);
        c
    }

    fn g(&mut self, c: &[f64]) -> f64 {
        self.evals += 1;
        apply(self.a, c, &mut self.buf);
        self.codomain.norm(&self.buf)
    }

    fn observe(&mut self, c: &[f64], gc: f64) {
        let n = self.domain.norm(c);
        let v = gc / n;
        if v > self.lower {
            self.lower = v;
            self.argmax = c.iter().map(|x| x / n).collect();
        }
    }

    /// Upper bound of `g(c) / ‖c‖` over a patch of the face `c_face = 1`.
    fn bound(&mut self, face: usize, lo: &[f64], hi: &[f64]) -> f64 {
        let k = lo.len();
        let center: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 0.5 * (l + h)).collect();
        let c0 = self.point(face, &center);
        let g0 = self.g(&c0);
        self.observe(&c0, g0);
        let s0 = self.domain.dual().norming(&c0);

        let mut max_g = 0.0_f64;
        let mut max_ratio = 0.0_f64;
        let mut supported = true;
        for mask in 0..(1usize << k) {
            let free: Vec<f64> = (0..k)
                .map(|i| if mask & (1 << i) != 0 { hi[i] } else { lo[i] })
                .collect();
            let v = self.point(face, &free);
            let gv = self.g(&v);
            self.observe(&v, gv);
            max_g = max_g.max(gv);
            let sv: f64 = s0.iter().zip(&v).map(|(s, x)| s * x).sum();
            if sv > 0.0 {
                max_ratio = max_ratio.max(gv / sv);
            } else {
                supported = false;
            }
        }
        // every point of the face has ‖c‖ ≥ |c_face| = 1
        let bound = if supported {
            max_ratio.min(max_g)
        } else {
            max_g
        };
        bound * (1.0 + ROUNDING)
    }

    fn run(mut self, max_evals: usize) -> OpNorm {
        let d = self.a.ncols();
        let mut heap = BinaryHeap::new();
        for face in 0..d {
            let lo = vec![-1.0; d - 1];
            let hi = vec![1.0; d - 1];
            let bound = self.bound(face, &lo, &hi);
            heap.push(Patch {
                face,
                lo,
                hi,
                bound,
            });
        }
        while let Some(top) = heap.peek() {
            if top.bound <= self.lower * (1.0 + BNB_REL_TOL) || self.evals >= max_evals {
                break;
            }
            let patch = heap.pop().expect("peeked");
            let axis = (0..d - 1)
                .max_by(|&i, &j| {
                    (patch.hi[i] - patch.lo[i]).total_cmp(&(patch.hi[j] - patch.lo[j]))
                })
                .expect("d >= 2");
            let mid = 0.5 * (patch.lo[axis] + patch.hi[axis]);
            let mut left_hi = patch.hi.clone();
            left_hi[axis] = mid;
            let mut right_lo = patch.lo.clone();
            right_lo[axis] = mid;
            for (lo, hi) in [(patch.lo.clone(), left_hi), (right_lo, patch.hi.clone())] {
                let bound = self.bound(patch.face, &lo, &hi);
                heap.push(Patch {
                    face: patch.face,
                    lo,
                    hi,
                    bound,
                });
            }
        }
        let upper = heap.peek().map_or(self.lower, |p| p.bound).max(self.lower);
        OpNorm {
            lower: self.lower,
            upper,
            argmax: self.argmax,
            method: Method::Certified,
        }
    }
}

fn branch_and_bound(
    a: &DMatrix<f64>,
    domain: &NormOracle,
    codomain: &Space,
    start: (f64, Vec<f64>),
    max_evals: usize,
) -> OpNorm {
    Bnb {
        a,
        domain,
        codomain,
        evals: 0,
        lower: start.0,
        argmax: start.1,
        buf: Vec::new(),
    }
    .run(max_evals)
}

/// `‖A‖_{ℓ_p^d → λ_m}` with a lower bound attained at `argmax` and a sound
/// upper bound (unless `method` is [`Method::Uncertified`]).
pub fn operator_norm(a: &DMatrix<f64>, domain: &NormOracle, codomain: &Space) -> OpNorm {
    debug_assert_eq!(a.ncols(), domain.dim());
    if let Some(exact) = exact_route(a, domain, codomain) {
        return exact;
    }
    let start = ascent(a, domain, codomain);
    if a.ncols() <= BNB_MAX_DIM {
        return branch_and_bound(a, domain, codomain, start, BNB_MAX_EVALS);
    }
    OpNorm {
        lower: start.0,
        upper: start.0 * UNCERTIFIED_MARGIN,
        argmax: start.1,
        method: Method::Uncertified,
    }
}

/// [`operator_norm_estimate`] warm-started from `hint`, which is updated to
/// the new maximiser. An empty or mis-sized hint triggers a cold start.
pub fn operator_norm_estimate_warm(
    a: &DMatrix<f64>,
    domain: &NormOracle,
    codomain: &Space,
    hint: &mut Vec<f64>,
) -> f64 {
    if let Some(exact) = exact_route(a, domain, codomain) {
        return exact.upper;
    }
    match codomain.lp_exponent() {
        Some(r) if r > 1.0 && r.is_finite() => {
            let (value, x) = if hint.len() == a.ncols() && hint.iter().any(|v| *v != 0.0) {
                let warm = power_iteration(a, domain, r, hint.clone());
                let column = power_iteration(a, domain, r, best_column(a, codomain));
                if column.0 > warm.0 {
                    column
                } else {
                    warm
                }
            } else {
                ascent(a, domain, codomain)
            };
            *hint = x;
            value
        }
        _ => operator_norm_estimate(a, domain, codomain),
    }
}

/// Fast estimate of the same quantity, without a certificate.
pub fn operator_norm_estimate(a: &DMatrix<f64>, domain: &NormOracle, codomain: &Space) -> f64 {
    if let Some(exact) = exact_route(a, domain, codomain) {
        return exact.upper;
    }
    let start = ascent(a, domain, codomain);
    match codomain.lp_exponent() {
        Some(r) if r > 1.0 && r.is_finite() => start.0,
        _ if a.ncols() <= BNB_MAX_DIM => branch_and_bound(a, domain, codomain, start, 200).lower,
        _ => start.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{Growth, SpaceSpec, TailRule, Weights};

    fn grid_norm(a: &DMatrix<f64>, domain: &NormOracle, codomain: &Space) -> f64 {
        // dense angular sampling of the 3-d unit sphere of the domain
        let mut best = 0.0_f64;
        let steps = 200;
        for i in 0..=steps {
            let theta = std::f64::consts::PI * i as f64 / steps as f64;
            for j in 0..(2 * steps) {
                let phi = std::f64::consts::PI * j as f64 / steps as f64;
                let x = [
                    theta.sin() * phi.cos(),
                    theta.sin() * phi.sin(),
                    theta.cos(),
                ];
                let mut y = Vec::new();
                apply(a, &x, &mut y);
                best = best.max(codomain.norm(&y) / domain.norm(&x));
            }
        }
        best
    }

    fn sample() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            3,
            &[
                0.3, -1.2, 0.5, //
                1.1, 0.4, -0.7, //
                -0.2, 0.9, 0.8, //
                0.6, 0.1, -0.3,
            ],
        )
    }

    #[test]
    fn spectral_norm_of_identity() {
        let a = DMatrix::<f64>::identity(2, 2);
        let r = operator_norm(&a, &NormOracle::lp(2, 2.0), &Space::lp(2.0).unwrap());
        assert!((r.lower - 1.0).abs() < 1e-15 && r.upper >= 1.0);
    }

    #[test]
    fn exact_routes_agree_with_definitions() {
        let a = sample();
        let l1 = operator_norm(&a, &NormOracle::lp(3, 1.0), &Space::lp(2.0).unwrap());
        let best_col = (0..3).map(|j| a.column(j).norm()).fold(0.0_f64, f64::max);
        assert!((l1.lower - best_col).abs() < 1e-14);
        let linf = operator_norm(
            &a,
            &NormOracle::lp(3, 2.0),
            &Space::lp(f64::INFINITY).unwrap(),
        );
        let best_row = (0..4).map(|i| a.row(i).norm()).fold(0.0_f64, f64::max);
        assert!((linf.upper - best_row).abs() < 1e-14);
        assert!((linf.lower - best_row).abs() < 1e-12);
    }

    #[test]
    fn branch_and_bound_brackets_grid() {
        let a = sample();
        let domain = NormOracle::lp(3, 2.0);
        for codomain in [
            Space::lp(3.0).unwrap(),
            Space::new(SpaceSpec::SargentM {
                phi: Weights::from_tail(TailRule::Sqrt, Growth::Grow),
            })
            .unwrap(),
        ] {
            let r = operator_norm(&a, &domain, &codomain);
            assert_eq!(r.method, Method::Certified);
            let grid = grid_norm(&a, &domain, &codomain);
            assert!(r.lower >= grid - 1e-9, "{} < {grid}", r.lower);
            assert!(r.upper >= r.lower);
            assert!(r.gap() <= 1e-8 * r.upper, "gap {}", r.gap());
            assert!((r.lower - grid).abs() < 1e-3);
            let mut y = Vec::new();
            apply(&a, &r.argmax, &mut y);
            assert!((codomain.norm(&y) - r.lower).abs() < 1e-12);
            assert!((domain.norm(&r.argmax) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn estimate_is_close_for_lp_targets() {
        let a = sample();
        let domain = NormOracle::lp(3, 2.0);
        let codomain = Space::lp(3.0).unwrap();
        let certified = operator_norm(&a, &domain, &codomain);
        let est = operator_norm_estimate(&a, &domain, &codomain);
        assert!(est <= certified.upper && est >= 0.999 * certified.lower);
    }

    #[test]
    fn zero_matrix() {
        let a = DMatrix::<f64>::zeros(2, 3);
        let r = operator_norm(&a, &NormOracle::lp(3, 2.0), &Space::lp(3.0).unwrap());
        assert_eq!((r.lower, r.upper), (0.0, 0.0));
    }
}
