//! Tensor norms `γ_λ`, `γ^c_λ` on `X ⊗ Y`, the injective reference norm and
//! trace duality against operators `Y → X*`.
//!
//! Both `γ` norms are infima over representations and come back as upper
//! bounds. The certified cost replaces the mid factor by the strong norm,
//! which dominates it; the mid lower bound gives a sharper, uncertified
//! estimate reported next to it.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::opnorm;
use crate::optim::{gaussian_vec, optimize, OptBudget, SearchDomain, Sense, Witnessed};
use crate::spaces::Space;
use crate::summing::OperatorMatrix;
use crate::vector_norms::{mid_norm, NormOracle, VectorSequence};
use crate::verify::Inequality;

/// `u ∈ X ⊗ Y` as a `dim X × dim Y` matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Tensor {
    pub domain: NormOracle,
    pub codomain: NormOracle,
    pub entries: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct RawTensor {
    domain: NormOracle,
    codomain: NormOracle,
    entries: Vec<Vec<f64>>,
}

impl<'de> Deserialize<'de> for Tensor {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawTensor::deserialize(d)?;
        Tensor::new(raw.domain, raw.codomain, raw.entries).map_err(serde::de::Error::custom)
    }
}

impl Tensor {
    pub fn new(domain: NormOracle, codomain: NormOracle, entries: Vec<Vec<f64>>) -> Result<Self> {
        if entries.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                found: entries.len(),
            });
        }
        if let Some(bad) = entries.iter().find(|r| r.len() != codomain.dim()) {
            return Err(Error::DimensionMismatch {
                expected: codomain.dim(),
                found: bad.len(),
            });
        }
        if entries.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Malformed("tensor has non-finite entries".into()));
        }
        Ok(Self {
            domain,
            codomain,
            entries,
        })
    }

    /// `x ⊗ y`.
    pub fn elementary(
        domain: NormOracle,
        codomain: NormOracle,
        x: &[f64],
        y: &[f64],
    ) -> Result<Self> {
        let entries = x
            .iter()
            .map(|a| y.iter().map(|b| a * b).collect())
            .collect();
        Self::new(domain, codomain, entries)
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        opnorm::rows_to_matrix(&self.entries, self.codomain.dim())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|r| r.iter().map(|v| v * c).collect())
                .collect(),
            ..self.clone()
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().flatten().all(|v| *v == 0.0)
    }

    fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest reconstruction error accepted for a representation of `self`.
    pub fn tolerance(&self) -> f64 {
        1e-9 * self.max_abs().max(1.0)
    }
}

/// One block `(x_j)_j, (y_j)_j` of equal length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<Vec<f64>>,
}

/// `u = Σ_i Σ_j x_ij ⊗ y_ij`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Representation {
    pub blocks: Vec<Block>,
}

impl Representation {
    pub fn reconstruct(&self, d: usize, e: usize) -> DMatrix<f64> {
        let mut u = DMatrix::zeros(d, e);
        for block in &self.blocks {
            for (x, y) in block.xs.iter().zip(&block.ys) {
                for (i, a) in x.iter().enumerate() {
                    for (j, b) in y.iter().enumerate() {
                        u[(i, j)] += a * b;
                    }
                }
            }
        }
        u
    }

    /// Largest entrywise reconstruction error against `u`.
    pub fn residual(&self, u: &Tensor) -> f64 {
        let diff = self.reconstruct(u.domain.dim(), u.codomain.dim()) - u.matrix();
        diff.amax()
    }

    /// `Σ_i ‖(x_ij)_j‖^s_λ ‖(y_ij)_j‖^s_{λ^×}`, plus the cost of writing
    /// the reconstruction error as `Σ_k e_k ⊗ E_k`. The total bounds
    /// `γ^c_λ(u)` from above even when the representation is off by rounding.
    pub fn cost(&self, space: &Space, dual: &Space, u: &Tensor) -> f64 {
        let blocks: f64 = self
            .blocks
            .iter()
            .map(|b| block_cost(space, dual, u.domain, u.codomain, &b.xs, &b.ys))
            .sum();
        let error = u.matrix() - self.reconstruct(u.domain.dim(), u.codomain.dim());
        blocks + residual_cost(space, dual, u, &error)
    }
}

/// Cost of `E = Σ_k e_k ⊗ E_k` with one block per row of `E`.
fn residual_cost(space: &Space, dual: &Space, u: &Tensor, error: &DMatrix<f64>) -> f64 {
    if error.iter().all(|v| *v == 0.0) {
        return 0.0;
    }
    let unit = space.unit_vector_norm(1).unwrap_or(f64::INFINITY)
        * dual.unit_vector_norm(1).unwrap_or(f64::INFINITY);
    let d = u.domain.dim();
    let rows: f64 = (0..d)
        .map(|k| {
            let mut e_k = vec![0.0; d];
            e_k[k] = 1.0;
            let row: Vec<f64> = error.row(k).iter().copied().collect();
            u.domain.norm(&e_k) * u.codomain.norm(&row)
        })
        .sum();
    unit * rows
}

fn block_cost<V: AsRef<[f64]>>(
    space: &Space,
    dual: &Space,
    x_oracle: NormOracle,
    y_oracle: NormOracle,
    xs: &[V],
    ys: &[V],
) -> f64 {
    let xn: Vec<f64> = xs.iter().map(|x| x_oracle.norm(x.as_ref())).collect();
    let yn: Vec<f64> = ys.iter().map(|y| y_oracle.norm(y.as_ref())).collect();
    space.norm(&xn) * dual.norm(&yn)
}

/// Representations with `blocks` blocks of length `rank`, flattened as
/// `[x_1 .. x_r, y_1 .. y_r]` per block. The last block is solved for from
/// the others so every candidate reconstructs `u`.
struct Factorizations<'a> {
    u: &'a Tensor,
    target: DMatrix<f64>,
    space: &'a Space,
    dual: &'a Space,
    rank: usize,
    blocks: usize,
}

impl Factorizations<'_> {
    fn d(&self) -> usize {
        self.u.domain.dim()
    }

    fn e(&self) -> usize {
        self.u.codomain.dim()
    }

    fn block_len(&self) -> usize {
        self.rank * (self.d() + self.e())
    }

    /// `(x-part, y-part)` of block `b` as row-major `rank × dim` matrices.
    fn parts<'p>(&self, p: &'p [f64], b: usize) -> (&'p [f64], &'p [f64]) {
        let start = b * self.block_len();
        let split = start + self.rank * self.d();
        (&p[start..split], &p[split..start + self.block_len()])
    }

    fn residual_target(&self, p: &[f64]) -> DMatrix<f64> {
        let (r, d, e) = (self.rank, self.d(), self.e());
        let mut rest = self.target.clone();
        for b in 0..self.blocks - 1 {
            let (xs, ys) = self.parts(p, b);
            let xm = DMatrix::from_row_slice(r, d, xs);
            let ym = DMatrix::from_row_slice(r, e, ys);
            rest -= xm.transpose() * ym;
        }
        rest
    }

    /// Rewrites the last block so the representation reconstructs `u`.
    fn close(&self, z: &[f64]) -> Option<Vec<f64>> {
        let (r, d, e) = (self.rank, self.d(), self.e());
        let rest = self.residual_target(z);
        let (xs, ys) = self.parts(z, self.blocks - 1);
        let x_rows = DMatrix::from_row_slice(r, d, xs);
        let y_rows = DMatrix::from_row_slice(r, e, ys);
        // rest = x_rowsᵀ · y_rows
        let (x_rows, y_rows) = if r >= d || r < e {
            let xt = x_rows.transpose();
            let pinv = xt.clone().pseudo_inverse(1e-13).ok()?;
            let free = DMatrix::identity(r, r) - &pinv * &xt;
            let y = if r >= d {
                &pinv * &rest + free * y_rows
            } else {
                &pinv * &rest
            };
            (x_rows, y)
        } else {
            let yt = y_rows.transpose();
            let pinv = yt.clone().pseudo_inverse(1e-13).ok()?;
            let free = DMatrix::identity(r, r) - &pinv * &yt;
            let x = &pinv * rest.transpose() + free * x_rows;
            (x, y_rows)
        };
        let mut out = z.to_vec();
        let start = (self.blocks - 1) * self.block_len();
        let split = start + r * d;
        for i in 0..r {
            for j in 0..d {
                out[start + i * d + j] = x_rows[(i, j)];
            }
            for j in 0..e {
                out[split + i * e + j] = y_rows[(i, j)];
            }
        }
        (out.iter().all(|v| v.is_finite()) && self.residual(&out) <= self.u.tolerance())
            .then_some(out)
    }

    fn error(&self, p: &[f64]) -> DMatrix<f64> {
        let (xs, ys) = self.parts(p, self.blocks - 1);
        let xm = DMatrix::from_row_slice(self.rank, self.d(), xs);
        let ym = DMatrix::from_row_slice(self.rank, self.e(), ys);
        self.residual_target(p) - xm.transpose() * ym
    }

    fn residual(&self, p: &[f64]) -> f64 {
        self.error(p).amax()
    }

    fn cost(&self, p: &[f64]) -> f64 {
        let blocks: f64 = (0..self.blocks)
            .map(|b| {
                let (xs, ys) = self.parts(p, b);
                let xs: Vec<&[f64]> = xs.chunks(self.d()).collect();
                let ys: Vec<&[f64]> = ys.chunks(self.e()).collect();
                block_cost(
                    self.space,
                    self.dual,
                    self.u.domain,
                    self.u.codomain,
                    &xs,
                    &ys,
                )
            })
            .sum();
        blocks + residual_cost(self.space, self.dual, self.u, &self.error(p))
    }

    /// Equalises the two factor norms inside each block.
    fn balance(&self, mut p: Vec<f64>) -> Vec<f64> {
        for b in 0..self.blocks {
            let (xs, ys) = self.parts(&p, b);
            let xn: Vec<f64> = xs.chunks(self.d()).map(|x| self.u.domain.norm(x)).collect();
            let yn: Vec<f64> = ys
                .chunks(self.e())
                .map(|y| self.u.codomain.norm(y))
                .collect();
            let (cx, cy) = (self.space.norm(&xn), self.dual.norm(&yn));
            if cx > 0.0 && cy > 0.0 {
                let c = (cy / cx).sqrt();
                let start = b * self.block_len();
                let split = start + self.rank * self.d();
                p[start..split].iter_mut().for_each(|v| *v *= c);
                p[split..start + self.block_len()]
                    .iter_mut()
                    .for_each(|v| *v /= c);
            }
        }
        p
    }

    fn representation(&self, p: &[f64]) -> Representation {
        let blocks = (0..self.blocks)
            .map(|b| {
                let (xs, ys) = self.parts(p, b);
                Block {
                    xs: xs.chunks(self.d()).map(<[f64]>::to_vec).collect(),
                    ys: ys.chunks(self.e()).map(<[f64]>::to_vec).collect(),
                }
            })
            .collect();
        Representation { blocks }
    }

    /// Flattens a representation whose blocks fit in the last `reps.len()`
    /// slots; missing vectors are zero.
    fn point(&self, rep: &Representation) -> Vec<f64> {
        let (d, e) = (self.d(), self.e());
        let mut p = vec![0.0; self.blocks * self.block_len()];
        let offset = self.blocks.saturating_sub(rep.blocks.len());
        for (k, block) in rep.blocks.iter().enumerate().take(self.blocks) {
            let start = (offset + k) * self.block_len();
            let split = start + self.rank * d;
            for (i, x) in block.xs.iter().take(self.rank).enumerate() {
                p[start + i * d..start + (i + 1) * d].copy_from_slice(x);
            }
            for (i, y) in block.ys.iter().take(self.rank).enumerate() {
                p[split + i * e..split + (i + 1) * e].copy_from_slice(y);
            }
        }
        p
    }
}

impl SearchDomain for Factorizations<'_> {
    fn dim(&self) -> usize {
        self.blocks * self.block_len()
    }

    fn candidate(&self, z: &[f64], _hint: &mut Vec<f64>) -> Option<Vec<f64>> {
        self.close(z)
    }

    fn certify(&self, z: &[f64]) -> Option<Vec<f64>> {
        self.close(z)
    }

    fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim() && self.residual(p) <= self.u.tolerance()
    }

    fn excess(&self, p: &[f64]) -> f64 {
        self.residual(p)
    }

    fn normalize(&self, z: Vec<f64>, _hint: &mut Vec<f64>) -> Vec<f64> {
        self.balance(z)
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        gaussian_vec(rng, self.dim())
    }
}

/// Single-block representations of rank `≤ rank` built from the SVD and the
/// rows or columns of `u`.
fn elementary_representations(u: &Tensor, rank: usize) -> Vec<Representation> {
    let (d, e) = (u.domain.dim(), u.codomain.dim());
    let single = |xs: Vec<Vec<f64>>, ys: Vec<Vec<f64>>| Representation {
        blocks: vec![Block { xs, ys }],
    };
    let mut reps = Vec::new();
    let svd = u.matrix().svd(true, true);
    if let (Some(left), Some(v_t)) = (&svd.u, &svd.v_t) {
        let (xs, ys) = (0..svd.singular_values.len().min(rank))
            .map(|k| {
                let s = svd.singular_values[k].sqrt();
                (
                    left.column(k).iter().map(|v| v * s).collect(),
                    v_t.row(k).iter().map(|v| v * s).collect(),
                )
            })
            .unzip();
        reps.push(single(xs, ys));
    }
    if rank >= d {
        let xs = (0..d)
            .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        reps.push(single(xs, u.entries.clone()));
    }
    if rank >= e {
        let xs = (0..e)
            .map(|j| u.entries.iter().map(|r| r[j]).collect())
            .collect();
        let ys = (0..e)
            .map(|i| (0..e).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        reps.push(single(xs, ys));
    }
    reps
}

fn dual_of(space: &Space) -> Result<Space> {
    space
        .dual()
        .ok_or_else(|| Error::UnknownDual(space.spec().to_string()))
}

fn search(
    space: &Space,
    u: &Tensor,
    rank: usize,
    blocks: usize,
    budget: &OptBudget,
    seeds: &[Representation],
) -> Result<Witnessed<Representation>> {
    if rank == 0 || blocks == 0 {
        return Err(Error::Precondition(
            "rank and block budgets must be >= 1".into(),
        ));
    }
    let dual = dual_of(space)?;
    if u.is_zero() {
        return Ok(Witnessed::upper(
            0.0,
            Representation { blocks: Vec::new() },
            true,
        ));
    }
    let domain = Factorizations {
        u,
        target: u.matrix(),
        space,
        dual: &dual,
        rank,
        blocks,
    };
    let points: Vec<Vec<f64>> = seeds
        .iter()
        .filter(|s| s.residual(u) <= u.tolerance())
        .map(|s| domain.point(s))
        .filter(|p| domain.contains(p))
        .collect();
    let objective = |p: &[f64]| domain.cost(p);
    let found =
        optimize(&objective, &domain, budget, &points, Sense::Min).map_err(|err| match err {
            Error::NonFiniteObjective if points.is_empty() => Error::Precondition(format!(
                "no representation of rank {rank} reconstructs the tensor"
            )),
            other => other,
        })?;
    Ok(found.map_witness(|p| domain.representation(&p)))
}

/// `Σ_i ‖(x_ij)_j‖^s_λ ‖(y_ij)_j‖^mid_{λ^×}` with the mid factors replaced
/// by seeded lower bounds: an estimate of a representation's cost, not a
/// certified bound.
pub fn sharp_estimate(
    space: &Space,
    u: &Tensor,
    rep: &Representation,
    m: usize,
    budget: &OptBudget,
) -> Result<f64> {
    let dual = dual_of(space)?;
    let mut total = 0.0;
    for block in &rep.blocks {
        let xn: Vec<f64> = block.xs.iter().map(|x| u.domain.norm(x)).collect();
        let ys = VectorSequence::new(u.codomain, block.ys.clone())?;
        total += space.norm(&xn) * mid_norm(&dual, &ys, m, budget)?.value;
    }
    Ok(total)
}

/// `γ_λ(u)` over single-block representations of length `≤ rank`, with the
/// certified cost.
pub fn gamma_lambda(
    space: &Space,
    u: &Tensor,
    rank: usize,
    budget: &OptBudget,
) -> Result<Witnessed<Representation>> {
    search(
        space,
        u,
        rank,
        1,
        budget,
        &elementary_representations(u, rank),
    )
}

/// `γ^c_λ(u)` over `blocks` blocks of length `≤ rank`, seeded with `seed`
/// placed in the last block.
pub fn gamma_lambda_c_seeded(
    space: &Space,
    u: &Tensor,
    blocks: usize,
    rank: usize,
    budget: &OptBudget,
    seed: &Representation,
) -> Result<Witnessed<Representation>> {
    let mut seeds = vec![seed.clone()];
    seeds.extend(elementary_representations(u, rank));
    search(space, u, rank, blocks, budget, &seeds)
}

/// `γ^c_λ(u)`, seeded with the witness of [`gamma_lambda`].
pub fn gamma_lambda_c(
    space: &Space,
    u: &Tensor,
    blocks: usize,
    rank: usize,
    budget: &OptBudget,
) -> Result<Witnessed<Representation>> {
    let gamma = gamma_lambda(space, u, rank, budget)?;
    let seed = gamma
        .witness
        .unwrap_or(Representation { blocks: Vec::new() });
    gamma_lambda_c_seeded(space, u, blocks, rank, budget, &seed)
}

/// `sup { |⟨f ⊗ g, u⟩| : f ∈ B_{X*}, g ∈ B_{Y*} }`; witness `f` followed by `g`.
pub fn injective_norm(u: &Tensor) -> Witnessed {
    let (d, e) = (u.domain.dim(), u.codomain.dim());
    if u.is_zero() {
        return Witnessed::lower(0.0, vec![0.0; d + e], true);
    }
    let a = u.matrix();
    let target = Space::lp(u.domain.p()).expect("oracle exponents are valid");
    let bounds = opnorm::operator_norm(&a, &u.codomain.dual(), &target);
    let g = u.codomain.dual().normalized(&bounds.argmax);
    let ug = &a * DVector::from_column_slice(&g);
    let f = u.domain.dual().norming(ug.as_slice());
    let value = DVector::from_column_slice(&f).dot(&ug).abs();
    let mut witness = f;
    witness.extend(g);
    Witnessed::lower(value, witness, bounds.gap() <= 1e-9 * bounds.upper.max(1.0))
}

/// Trace duality of `T: Y → X*` against one representation of `u`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceReport {
    /// `Φ_T(u) = Σ Σ ⟨x_ij, T y_ij⟩`.
    pub phi: f64,
    /// `|Φ_T(u)| ≤ Σ_i ‖(T y_ij)_j‖^s_{λ^×} ‖(x_ij)_j‖^s_λ`.
    pub chain: Inequality,
    /// `|Φ_T(u)|` over the certified cost of the representation, against
    /// the decomposition constant of `T`.
    pub ratio: Inequality,
}

pub fn trace_duality_check(
    space: &Space,
    t: &OperatorMatrix,
    u: &Tensor,
    rep: &Representation,
) -> Result<TraceReport> {
    if t.domain.dim() != u.codomain.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.codomain.dim(),
            found: t.domain.dim(),
        });
    }
    if t.codomain.dim() != u.domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: u.domain.dim(),
            found: t.codomain.dim(),
        });
    }
    let residual = rep.residual(u);
    if residual > u.tolerance() {
        return Err(Error::Reconstruction { residual });
    }
    let dual = dual_of(space)?;
    let mut phi = 0.0;
    let mut chain = 0.0;
    for block in &rep.blocks {
        let images: Vec<Vec<f64>> = block.ys.iter().map(|y| t.apply(y)).collect();
        phi += block
            .xs
            .iter()
            .zip(&images)
            .map(|(x, ty)| x.iter().zip(ty).map(|(a, b)| a * b).sum::<f64>())
            .sum::<f64>();
        let tn: Vec<f64> = images.iter().map(|ty| t.codomain.norm(ty)).collect();
        let xn: Vec<f64> = block.xs.iter().map(|x| u.domain.norm(x)).collect();
        chain += dual.norm(&tn) * space.norm(&xn);
    }
    let cost = rep.cost(space, &dual, u);
    let ratio = if cost > 0.0 { phi.abs() / cost } else { 0.0 };
    Ok(TraceReport {
        phi,
        chain: Inequality::new(phi.abs(), chain),
        ratio: Inequality::new(ratio, t.decomposition_constant()),
    })
}
