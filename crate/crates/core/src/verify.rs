//! Randomised invariant suites. Each suite returns one row per invariant
//! with the number of trials, the number of violations and the largest
//! excess `lhs - rhs` seen.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{gaussian_vec, mix, rng_for, OptBudget};
use crate::spaces::{
    evaluate_norm, kothe_dual_spec, nip_check_space, DoubleArray, Space, SpaceSpec,
};
use crate::summing::{
    finite_mid_check, ideal_witness_check, image_strong_norm, pi_lambda, pi_lambda_mid,
    w_lambda_mid, w_lambda_mid_seeded, weak_mid_check, OperatorMatrix,
};
use crate::tensor::{
    gamma_lambda, gamma_lambda_c_seeded, injective_norm, trace_duality_check, Representation,
    Tensor,
};
use crate::vector_norms::{
    chain_check, mid_norm_seeded, weak_norm, weak_norm_bounds, NormOracle, VectorSequence,
};

/// `lhs ≤ rhs`, up to a tolerance chosen by the caller.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inequality {
    pub lhs: f64,
    pub rhs: f64,
}

impl Inequality {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self { lhs, rhs }
    }

    pub fn excess(&self) -> f64 {
        self.lhs - self.rhs
    }

    pub fn holds(&self, tol: f64) -> bool {
        self.excess() <= tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Chain,
    Iteration,
    Holder,
    Summing,
    Tensor,
    All,
}

impl Suite {
    pub fn members(self) -> Vec<Suite> {
        match self {
            Suite::All => vec![
                Suite::Holder,
                Suite::Iteration,
                Suite::Chain,
                Suite::Summing,
                Suite::Tensor,
            ],
            one => vec![one],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Suite::Chain => "chain",
            Suite::Iteration => "iteration",
            Suite::Holder => "holder",
            Suite::Summing => "summing",
            Suite::Tensor => "tensor",
            Suite::All => "all",
        };
        f.write_str(name)
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "chain" => Ok(Suite::Chain),
            "iteration" => Ok(Suite::Iteration),
            "holder" => Ok(Suite::Holder),
            "summing" => Ok(Suite::Summing),
            "tensor" => Ok(Suite::Tensor),
            "all" => Ok(Suite::All),
            other => Err(Error::Malformed(format!("unknown suite `{other}`"))),
        }
    }
}

/// Outcome of one invariant over all its trials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantResult {
    pub name: String,
    pub trials: usize,
    pub violations: usize,
    /// Largest `lhs - rhs` over all trials.
    pub worst_excess: f64,
    pub tolerance: f64,
    pub elapsed_ms: u64,
}

impl InvariantResult {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

struct Tally {
    name: String,
    tolerance: f64,
    trials: usize,
    violations: usize,
    worst: f64,
}

impl Tally {
    fn new(name: impl Into<String>, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            tolerance,
            trials: 0,
            violations: 0,
            worst: f64::NEG_INFINITY,
        }
    }

    fn record(&mut self, check: Inequality) {
        self.trials += 1;
        let excess = check.excess();
        if !check.holds(self.tolerance) || excess.is_nan() {
            self.violations += 1;
        }
        if excess > self.worst || excess.is_nan() {
            self.worst = excess;
        }
    }

    fn finish(self, started: Instant) -> InvariantResult {
        InvariantResult {
            name: self.name,
            trials: self.trials,
            violations: self.violations,
            worst_excess: if self.trials == 0 { 0.0 } else { self.worst },
            tolerance: self.tolerance,
            elapsed_ms: started.elapsed().as_millis() as u64,
        }
    }
}

/// Suite settings. `trials` overrides every invariant's default count.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub trials: Option<usize>,
    pub seed: u64,
    pub budget: OptBudget,
}

impl SuiteConfig {
    pub fn new(seed: u64, budget: OptBudget) -> Self {
        Self {
            trials: None,
            seed,
            budget,
        }
    }

    fn trials(&self, default: usize) -> usize {
        self.trials.unwrap_or(default)
    }

    fn rng(&self, suite: u64, trial: usize) -> ChaCha8Rng {
        rng_for(mix(self.seed, suite), trial as u64)
    }

    /// Per-trial budget, capped for the nested searches of the summing and
    /// tensor suites.
    fn trial_budget(&self, suite: u64, trial: usize, cap: Option<(usize, usize)>) -> OptBudget {
        let mut b = self
            .budget
            .clone()
            .with_seed(mix(mix(self.budget.seed, suite), trial as u64));
        if let Some((restarts, iterations)) = cap {
            b.restarts = b.restarts.min(restarts);
            b.iterations = b.iterations.min(iterations);
        }
        b
    }
}

pub fn run_suite(suite: Suite, config: &SuiteConfig) -> Result<Vec<InvariantResult>> {
    config.budget.validate()?;
    let mut rows = Vec::new();
    for member in suite.members() {
        rows.extend(match member {
            Suite::Holder => holder_suite(config)?,
            Suite::Iteration => iteration_suite(config)?,
            Suite::Chain => chain_suite(config)?,
            Suite::Summing => summing_suite(config)?,
            Suite::Tensor => tensor_suite(config)?,
            Suite::All => unreachable!(),
        });
    }
    Ok(rows)
}

fn random_seq(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<f64> {
    let len = rng.random_range(1..=max_len);
    gaussian_vec(rng, len)
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| gaussian_vec(rng, cols)).collect()
}

fn parse(spec: &str) -> SpaceSpec {
    SpaceSpec::parse_dsl(spec).expect("built-in spec parses")
}

/// Σ|αβ| ≤ ‖α‖‖β‖_× over the analytic dual pairs.
pub fn holder_suite(config: &SuiteConfig) -> Result<Vec<InvariantResult>> {
    let groups: [(&str, Vec<SpaceSpec>); 4] = [
        (
            "holder/lp",
            [1.0, 1.5, 2.0, 3.0, f64::INFINITY]
                .iter()
                .map(|&p| SpaceSpec::Lp { p })
                .collect(),
        ),
        (
            "holder/garling",
            [
                "garling_mu:power:0.5:p=2",
                "garling_mu:geometric:0.7:p=1.5",
                "garling_nu:power:0.5:p=2",
                "garling_nu:sqrt:p=3",
            ]
            .map(parse)
            .to_vec(),
        ),
        (
            "holder/sargent",
            [
                "sargent_m:sqrt",
                "sargent_m:power:0.3",
                "sargent_n:sqrt",
                "sargent_n:power:0.7",
            ]
            .map(parse)
            .to_vec(),
        ),
        ("holder/c0", vec![SpaceSpec::C0]),
    ];
    let trials = config.trials(1000);
    let started = Instant::now();
    let mut tallies: Vec<Tally> = groups
        .iter()
        .map(|(name, _)| Tally::new(*name, 1e-9))
        .collect();
    for trial in 0..trials {
        let mut rng = config.rng(1, trial);
        let g = trial % groups.len();
        let specs = &groups[g].1;
        let spec = &specs[rng.random_range(0..specs.len())];
        let dual = kothe_dual_spec(spec).ok_or_else(|| Error::UnknownDual(spec.to_string()))?;
        let alpha = random_seq(&mut rng, 8);
        let beta: Vec<f64> = gaussian_vec(&mut rng, alpha.len());
        let pairing: f64 = alpha.iter().zip(&beta).map(|(a, b)| (a * b).abs()).sum();
        let bound = evaluate_norm(spec, &alpha)? * evaluate_norm(&dual, &beta)?;
        tallies[g].record(Inequality::new(pairing, bound));
    }
    Ok(tallies.into_iter().map(|t| t.finish(started)).collect())
}

/// Norm-iteration gap `|‖(‖row_n‖)‖ − ‖(‖col_j‖)‖|` on random arrays up to 5×5.
pub fn iteration_suite(config: &SuiteConfig) -> Result<Vec<InvariantResult>> {
    let specs = [
        "lp:1",
        "lp:2.5",
        "sargent_m:sqrt",
        "garling_mu:power:0.5:p=2",
    ];
    let spaces: Vec<Space> = specs
        .iter()
        .map(|s| Space::new(parse(s)))
        .collect::<Result<_>>()?;
    let trials = config.trials(500);
    let started = Instant::now();
    let mut tallies: Vec<Tally> = specs
        .iter()
        .map(|s| Tally::new(format!("nip/{s}"), 1e-9))
        .collect();
    for trial in 0..trials {
        let mut rng = config.rng(2, trial);
        let k = trial % spaces.len();
        let (rows, cols) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let arr = DoubleArray::new(random_matrix(&mut rng, rows, cols))?;
        let report = nip_check_space(&spaces[k], &arr);
        tallies[k].record(Inequality::new(report.gap, 0.0));
    }
    Ok(tallies.into_iter().map(|t| t.finish(started)).collect())
}

/// Top singular value of the matrix with rows `xs`.
fn spectral_norm(xs: &VectorSequence) -> f64 {
    xs.matrix().singular_values().max()
}

/// `ŵ ≤ m̂ ≤ ŝ` over `λ ∈ {ℓ1, ℓ2, ℓ3}`, `X = ℓ2^d`.
pub fn chain_suite(config: &SuiteConfig) -> Result<Vec<InvariantResult>> {
    let trials = config.trials(200);
    let started = Instant::now();
    let mut weak_mid = Tally::new("chain/weak<=mid", 1e-9);
    let mut mid_strong = Tally::new("chain/mid<=strong", 1e-9);
    let mut spectral = Tally::new("chain/weak=spectral", 1e-6);
    for trial in 0..trials {
        let mut rng = config.rng(3, trial);
        let p = [1.0, 2.0, 3.0][trial % 3];
        let space = Space::lp(p)?;
        let d = rng.random_range(1..=3);
        let n = rng.random_range(1..=5);
        let xs = VectorSequence::new(NormOracle::lp(d, 2.0), random_matrix(&mut rng, n, d))?;
        let report = chain_check(&space, &xs, 4, &config.trial_budget(3, trial, None))?;
        weak_mid.record(Inequality::new(report.weak.value, report.mid.value));
        mid_strong.record(Inequality::new(report.mid.value, report.strong));
        if p == 2.0 {
            let sigma = spectral_norm(&xs);
            let rel = (weak_norm(&space, &xs).value - sigma).abs() / sigma.max(1e-300);
            spectral.record(Inequality::new(rel, 0.0));
        }
    }
    Ok([weak_mid, mid_strong, spectral]
        .into_iter()
        .map(|t| t.finish(started))
        .collect())
}

const SUMMING_CAP: (usize, usize) = (4, 150);
const TENSOR_CAP: (usize, usize) = (4, 150);

fn l2(d: usize) -> NormOracle {
    NormOracle::lp(d, 2.0)
}

fn random_operator(
    rng: &mut ChaCha8Rng,
    domain: NormOracle,
    codomain: NormOracle,
) -> OperatorMatrix {
    OperatorMatrix::new(
        domain,
        codomain,
        random_matrix(rng, codomain.dim(), domain.dim()),
    )
    .expect("shapes match")
}

/// Summing norms on small random operators between Euclidean spaces.
pub fn summing_suite(config: &SuiteConfig) -> Result<Vec<InvariantResult>> {
    let started = Instant::now();
    let mut hs_upper = Tally::new("summing/pi2<=hilbert-schmidt", 1e-9);
    let mut hs_lower = Tally::new("summing/pi2>=0.9*hilbert-schmidt", 0.0);
    let l2s = Space::lp(2.0)?;
    for trial in 0..config.trials(50) {
        let mut rng = config.rng(4, trial);
        let (d, e) = (rng.random_range(1..=3), rng.random_range(1..=3));
        let t = random_operator(&mut rng, l2(d), l2(e));
        let pi = pi_lambda(
            &l2s,
            &t,
            8,
            &config.trial_budget(4, trial, Some(SUMMING_CAP)),
        )?;
        let hs = t.hilbert_schmidt();
        hs_upper.record(Inequality::new(pi.value, hs));
        hs_lower.record(Inequality::new(0.9 * hs, pi.value));
    }

    let mut rank_pi = Tally::new("summing/rank-one-pi", 1e-9);
    let mut rank_mid = Tally::new("summing/rank-one-pi-mid", 1e-9);
    let mut rank_w = Tally::new("summing/rank-one-w-mid", 1e-9);
    let mut finite_mid = Tally::new("summing/finite-mid-witness", 1e-9);
    let mut weak_mid = Tally::new("summing/weak-mid-witness", 1e-9);
    let mut seeded = Tally::new("summing/w-mid-seed-domination", 1e-12);
    let mut ideal_outer = Tally::new("summing/ideal-outer", 1e-9);
    let mut ideal_inner = Tally::new("summing/ideal-inner", 1e-9);
    let (n, m) = (3, 2);
    for trial in 0..config.trials(100) {
        let mut rng = config.rng(5, trial);
        let budget = config.trial_budget(5, trial, Some(SUMMING_CAP));
        let space = Space::lp([1.0, 2.0][trial % 2])?;
        let lp = space.lp_exponent().expect("lp space");
        let (d, e) = (rng.random_range(1..=3), rng.random_range(1..=3));

        let f = gaussian_vec(&mut rng, d);
        let y = gaussian_vec(&mut rng, e);
        let rows = y
            .iter()
            .map(|yk| f.iter().map(|fj| yk * fj).collect())
            .collect();
        let rank_one = OperatorMatrix::new(l2(d), l2(e), rows)?;
        let scale = l2(d).dual_norm(&f) * l2(e).norm(&y);
        let pi = pi_lambda(&space, &rank_one, n, &budget)?;
        let xs = pi.witness.clone().unwrap_or_default();
        let weak = weak_norm_bounds(&space, &VectorSequence::from_flat(l2(d), &xs)).upper;
        rank_pi.record(Inequality::new(
            image_strong_norm(&space, &rank_one, &xs),
            scale * weak,
        ));

        let pm = pi_lambda_mid(&space, &rank_one, n, &budget)?;
        let xs = VectorSequence::from_flat(l2(d), pm.witness.as_deref().unwrap_or_default());
        let unit_f: Vec<f64> = f.iter().map(|v| v / l2(d).dual_norm(&f)).collect();
        let mid = mid_norm_seeded(
            &space,
            &xs,
            m,
            &budget,
            &[crate::vector_norms::functional_in_row(&unit_f, m, 0)],
        )?;
        rank_mid.record(Inequality::new(
            image_strong_norm(&space, &rank_one, &xs.flat()),
            scale * mid.value,
        ));

        let w = w_lambda_mid(&space, &rank_one, n, m, &budget)?;
        let point = w.witness.clone().unwrap_or_default();
        let (s, xs) = point.split_at(m * e);
        let s_op = OperatorMatrix::new(
            l2(e),
            NormOracle::lp(m, lp),
            s.chunks(e).map(<[f64]>::to_vec).collect(),
        )?;
        let st = s_op.compose(&rank_one)?;
        let weak = weak_norm_bounds(&space, &VectorSequence::from_flat(l2(d), xs)).upper;
        rank_w.record(Inequality::new(
            image_strong_norm(&space, &st, xs),
            scale * s_op.norm().upper * weak,
        ));

        let t = random_operator(&mut rng, l2(d), l2(e));
        let pm = pi_lambda_mid(&space, &t, n, &budget)?;
        let xs = VectorSequence::from_flat(l2(d), pm.witness.as_deref().unwrap_or_default());
        finite_mid.record(finite_mid_check(&space, &t, &xs, m, &budget)?);

        let w = w_lambda_mid(&space, &t, n, m, &budget)?;
        weak_mid.record(weak_mid_check(&space, &t, m, &w)?);
        let point = w.witness.clone().unwrap_or_default();
        let s0 = point[..m * e].to_vec();
        let s_op = OperatorMatrix::new(
            l2(e),
            NormOracle::lp(m, lp),
            s0.chunks(e).map(<[f64]>::to_vec).collect(),
        )?;
        let inner = pi_lambda(
            &space,
            &s_op.compose(&t)?,
            n,
            &budget.inner(0x5e, budget.restarts, budget.iterations),
        )?;
        let again = w_lambda_mid_seeded(
            &space,
            &t,
            n,
            m,
            &budget,
            &[(s0, inner.witness.clone().unwrap_or_default())],
        )?;
        seeded.record(Inequality::new(inner.value, again.value));

        let k = rng.random_range(1..=3);
        let outer = rng.random_range(1..=3);
        let r = random_operator(&mut rng, l2(e), l2(outer));
        let s = random_operator(&mut rng, l2(k), l2(d));
        let ideal = ideal_witness_check(&space, &r, &t, &s, n, m, &budget)?;
        ideal_outer.record(ideal.outer);
        ideal_inner.record(ideal.inner);
    }
    Ok([
        hs_upper,
        hs_lower,
        rank_pi,
        rank_mid,
        rank_w,
        finite_mid,
        weak_mid,
        seeded,
        ideal_outer,
        ideal_inner,
    ]
    .into_iter()
    .map(|t| t.finish(started))
    .collect())
}

/// `γ` and `γ^c` on random 2×2 tensors.
pub fn tensor_suite(config: &SuiteConfig) -> Result<Vec<InvariantResult>> {
    let started = Instant::now();
    let mut convex = Tally::new("tensor/gamma-c<=gamma", 1e-12);
    let mut elem_upper = Tally::new("tensor/elementary<=product", 1e-9);
    let mut elem_lower = Tally::new("tensor/injective<=elementary", 1e-6);
    let mut sandwich = Tally::new("tensor/injective<=gamma-c", 1e-6);
    let mut chain = Tally::new("tensor/trace-chain", 1e-9);
    let mut ratio = Tally::new("tensor/trace-ratio<=decomposition", 1e-9);
    let (rank, blocks) = (2, 3);
    for trial in 0..config.trials(100) {
        let mut rng = config.rng(6, trial);
        let budget = config.trial_budget(6, trial, Some(TENSOR_CAP));
        let space = Space::lp([2.0, 1.0, 3.0][trial % 3])?;
        let (px, py) = (
            [2.0, 1.0, f64::INFINITY][rng.random_range(0..3)],
            [2.0, 1.0, f64::INFINITY][rng.random_range(0..3)],
        );
        let (x_oracle, y_oracle) = (NormOracle::lp(2, px), NormOracle::lp(2, py));

        let u = Tensor::new(x_oracle, y_oracle, random_matrix(&mut rng, 2, 2))?;
        let gamma = gamma_lambda(&space, &u, rank, &budget)?;
        let seed = gamma
            .witness
            .clone()
            .unwrap_or(Representation { blocks: Vec::new() });
        let gamma_c = gamma_lambda_c_seeded(&space, &u, blocks, rank, &budget, &seed)?;
        convex.record(Inequality::new(gamma_c.value, gamma.value));
        sandwich.record(Inequality::new(injective_norm(&u).value, gamma_c.value));

        let t = random_operator(&mut rng, y_oracle, x_oracle.dual());
        if let Some(rep) = &gamma_c.witness {
            let report = trace_duality_check(&space, &t, &u, rep)?;
            chain.record(report.chain);
            ratio.record(report.ratio);
        }

        let (x, y) = (gaussian_vec(&mut rng, 2), gaussian_vec(&mut rng, 2));
        let elementary = Tensor::elementary(x_oracle, y_oracle, &x, &y)?;
        let g = gamma_lambda(&space, &elementary, rank, &budget)?;
        let seed = g
            .witness
            .clone()
            .unwrap_or(Representation { blocks: Vec::new() });
        let gc = gamma_lambda_c_seeded(&space, &elementary, blocks, rank, &budget, &seed)?;
        elem_upper.record(Inequality::new(
            gc.value,
            x_oracle.norm(&x) * y_oracle.norm(&y),
        ));
        elem_lower.record(Inequality::new(injective_norm(&elementary).value, gc.value));
    }
    Ok([convex, elem_upper, elem_lower, sandwich, chain, ratio]
        .into_iter()
        .map(|t| t.finish(started))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in ["chain", "iteration", "holder", "summing", "tensor", "all"] {
            assert_eq!(s.parse::<Suite>().unwrap().to_string(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
        assert_eq!(Suite::All.members().len(), 5);
    }

    #[test]
    fn inequality_tolerance() {
        assert!(Inequality::new(1.0, 1.0 - 1e-10).holds(1e-9));
        assert!(!Inequality::new(1.0, 0.9).holds(1e-9));
    }

    #[test]
    fn small_holder_run() {
        let mut config = SuiteConfig::new(7, OptBudget::default());
        config.trials = Some(40);
        let rows = run_suite(Suite::Holder, &config).unwrap();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(InvariantResult::passed), "{rows:?}");
        assert_eq!(rows.iter().map(|r| r.trials).sum::<usize>(), 40);
    }
}
