//! Witness-certified optimisation.
//!
//! Every supremum in the library is reported as a lower bound attained at a
//! feasible witness, every infimum as an upper bound attained at a feasible
//! witness. The engine is a multi-start compass search with a few random
//! directions per poll; it needs no gradients, which matters because many
//! objectives here (max-of-ratios, rearrangement norms) are not smooth.
//!
//! Restarts are independent. Restart `r` draws from its own ChaCha stream
//! seeded by `(seed, r)`, and results are merged in restart order, so a
//! budget with a fixed seed always produces bit-identical output whether or
//! not restarts run in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opnorm;
use crate::spaces::Space;
use crate::vector_norms::NormOracle;

/// Slack allowed in membership tests.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundDirection {
    /// The value is attained at the witness and bounds a supremum from below.
    LowerOfSup,
    /// The value is attained at the witness and bounds an infimum from above.
    UpperOfInf,
    /// Computed in closed form.
    Exact,
    /// Aggregate of a randomised invariant check; the value is the largest
    /// excess `lhs - rhs` observed.
    Invariant,
}

/// Result of an optimisation-defined quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witnessed<W = Vec<f64>> {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<W>,
    pub bound_direction: BoundDirection,
    pub converged: bool,
}

impl<W> Witnessed<W> {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            witness: None,
            bound_direction: BoundDirection::Exact,
            converged: true,
        }
    }

    pub fn lower(value: f64, witness: W, converged: bool) -> Self {
        Self {
            value,
            witness: Some(witness),
            bound_direction: BoundDirection::LowerOfSup,
            converged,
        }
    }

    pub fn upper(value: f64, witness: W, converged: bool) -> Self {
        Self {
            value,
            witness: Some(witness),
            bound_direction: BoundDirection::UpperOfInf,
            converged,
        }
    }

    pub fn map_witness<V>(self, f: impl FnOnce(W) -> V) -> Witnessed<V> {
        Witnessed {
            value: self.value,
            witness: self.witness.map(f),
            bound_direction: self.bound_direction,
            converged: self.converged,
        }
    }
}

/// Search effort and randomness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptBudget {
    pub restarts: usize,
    /// Polls per restart.
    pub iterations: usize,
    /// First step, relative to the starting point's scale.
    pub initial_step: f64,
    /// Step multiplier after an unsuccessful poll, in `(0, 1)`.
    pub step_decay: f64,
    /// Relative step below which a restart counts as converged.
    pub min_step: f64,
    /// Random directions tried per poll in addition to the coordinate axes.
    pub random_directions: usize,
    pub seed: u64,
    /// Run restarts on the rayon pool.
    pub parallel: bool,
}

impl Default for OptBudget {
    fn default() -> Self {
        Self {
            restarts: 32,
            iterations: 400,
            initial_step: 0.5,
            step_decay: 0.5,
            min_step: 1e-10,
            random_directions: 2,
            seed: 0x5eed,
            parallel: true,
        }
    }
}

impl OptBudget {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn sequential(mut self) -> Self {
        self.parallel = false;
        self
    }

    /// Budget for a nested optimisation: derived seed, no inner parallelism.
    pub fn inner(&self, salt: u64, restarts: usize, iterations: usize) -> Self {
        Self {
            restarts: restarts.max(1),
            iterations: iterations.max(1),
            seed: mix(self.seed, salt),
            parallel: false,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.iterations == 0 {
            return Err(Error::InvalidBudget(
                "restarts and iterations must be >= 1".into(),
            ));
        }
        if !(self.step_decay > 0.0 && self.step_decay < 1.0) {
            return Err(Error::InvalidBudget("step_decay must lie in (0, 1)".into()));
        }
        if !(self.initial_step > 0.0 && self.min_step > 0.0) {
            return Err(Error::InvalidBudget("steps must be positive".into()));
        }
        Ok(())
    }
}

/// SplitMix64 finaliser of `(seed, salt)`.
pub fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, stream))
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

/// A closed, balanced, absorbing set described by its gauge.
pub trait Ball: Sync {
    fn dim(&self) -> usize;

    /// Gauge of `x`, or an over-estimate of it. Dividing by this value always
    /// lands inside the ball.
    fn gauge(&self, x: &[f64]) -> f64;

    /// Cheaper gauge used while searching; may be inexact either way.
    fn gauge_estimate(&self, x: &[f64]) -> f64 {
        self.gauge(x)
    }

    /// [`Ball::gauge_estimate`] with a warm-start buffer that the caller
    /// keeps between nearby evaluations.
    fn gauge_estimate_hinted(&self, x: &[f64], _hint: &mut Vec<f64>) -> f64 {
        self.gauge_estimate(x)
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.gauge(x) <= 1.0 + FEASIBILITY_TOL
    }
}

/// The balls the library optimises over.
#[derive(Clone, Debug)]
pub enum BallSpec {
    /// Unit ball of the dual of a normed space.
    DualBall(NormOracle),
    /// Unit ball of a sequence space truncated to `len` coordinates.
    SpaceBall { space: Space, len: usize },
    /// Unit ball of `L(X, λ_m)`; points are row-major `m × dim X` matrices.
    OperatorBall {
        domain: NormOracle,
        codomain: Space,
        rows: usize,
    },
}

impl Ball for BallSpec {
    fn dim(&self) -> usize {
        match self {
            BallSpec::DualBall(o) => o.dim(),
            BallSpec::SpaceBall { len, .. } => *len,
            BallSpec::OperatorBall { domain, rows, .. } => rows * domain.dim(),
        }
    }

    fn gauge(&self, x: &[f64]) -> f64 {
        match self {
            BallSpec::DualBall(o) => o.dual_norm(x),
            BallSpec::SpaceBall { space, .. } => space.norm(x),
            BallSpec::OperatorBall {
                domain,
                codomain,
                rows,
            } => {
                let a = opnorm::matrix_from_rows(x, *rows, domain.dim());
                opnorm::operator_norm(&a, domain, codomain).upper
            }
        }
    }

    fn gauge_estimate(&self, x: &[f64]) -> f64 {
        self.gauge_estimate_hinted(x, &mut Vec::new())
    }

    fn gauge_estimate_hinted(&self, x: &[f64], hint: &mut Vec<f64>) -> f64 {
        match self {
            BallSpec::OperatorBall {
                domain,
                codomain,
                rows,
            } => {
                let a = opnorm::matrix_from_rows(x, *rows, domain.dim());
                opnorm::operator_norm_estimate_warm(&a, domain, codomain, hint)
            }
            _ => self.gauge(x),
        }
    }
}

/// A parametrised feasible set for infimum problems.
pub trait Family: Sync {
    fn dim(&self) -> usize;

    /// Maps any parameter vector to a feasible point.
    fn project(&self, z: &[f64]) -> Vec<f64>;

    fn contains(&self, x: &[f64]) -> bool;
}

/// How search coordinates are turned into candidate points.
pub trait SearchDomain: Sync {
    fn dim(&self) -> usize;

    /// Candidate used while searching. `hint` is private to one restart.
    fn candidate(&self, z: &[f64], hint: &mut Vec<f64>) -> Option<Vec<f64>>;

    /// Feasible point reported at the end; must satisfy `contains`.
    fn certify(&self, z: &[f64]) -> Option<Vec<f64>>;

    fn contains(&self, x: &[f64]) -> bool;

    /// Excess over the feasibility limit, for error reporting.
    fn excess(&self, _x: &[f64]) -> f64 {
        f64::NAN
    }

    /// Puts `z` back on a canonical scale after an accepted move.
    fn normalize(&self, z: Vec<f64>, _hint: &mut Vec<f64>) -> Vec<f64> {
        z
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        gaussian_vec(rng, self.dim())
    }
}

/// Radial projection onto the boundary of a ball.
struct Boundary<'a, B: Ball + ?Sized>(&'a B);

impl<B: Ball + ?Sized> SearchDomain for Boundary<'_, B> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn candidate(&self, z: &[f64], hint: &mut Vec<f64>) -> Option<Vec<f64>> {
        radial(z, self.0.gauge_estimate_hinted(z, hint))
    }

    fn certify(&self, z: &[f64]) -> Option<Vec<f64>> {
        radial(z, self.0.gauge(z))
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.0.contains(x)
    }

    fn excess(&self, x: &[f64]) -> f64 {
        self.0.gauge(x)
    }

    fn normalize(&self, z: Vec<f64>, hint: &mut Vec<f64>) -> Vec<f64> {
        hint.clear();
        radial(&z, self.0.gauge_estimate_hinted(&z, hint)).unwrap_or(z)
    }
}

/// Points inside the ball stay put; points outside are pulled to the boundary.
struct Interior<'a, B: Ball + ?Sized>(&'a B);

impl<B: Ball + ?Sized> SearchDomain for Interior<'_, B> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn candidate(&self, z: &[f64], hint: &mut Vec<f64>) -> Option<Vec<f64>> {
        shrink(z, self.0.gauge_estimate_hinted(z, hint))
    }

    fn certify(&self, z: &[f64]) -> Option<Vec<f64>> {
        shrink(z, self.0.gauge(z))
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.0.contains(x)
    }

    fn excess(&self, x: &[f64]) -> f64 {
        self.0.gauge(x)
    }
}

struct Projected<'a, F: Family + ?Sized>(&'a F);

impl<F: Family + ?Sized> SearchDomain for Projected<'_, F> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn candidate(&self, z: &[f64], _hint: &mut Vec<f64>) -> Option<Vec<f64>> {
        Some(self.0.project(z))
    }

    fn certify(&self, z: &[f64]) -> Option<Vec<f64>> {
        Some(self.0.project(z))
    }

    fn contains(&self, x: &[f64]) -> bool {
        self.0.contains(x)
    }
}

pub(crate) fn radial(z: &[f64], gauge: f64) -> Option<Vec<f64>> {
    (gauge.is_finite() && gauge > 0.0).then(|| z.iter().map(|v| v / gauge).collect())
}

fn shrink(z: &[f64], gauge: f64) -> Option<Vec<f64>> {
    if !gauge.is_finite() {
        return None;
    }
    Some(if gauge > 1.0 {
        z.iter().map(|v| v / gauge).collect()
    } else {
        z.to_vec()
    })
}

/// What happens to a sup objective on the ball.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scaling {
    /// Candidates are rescaled onto the boundary (absolutely homogeneous
    /// objectives, where the boundary always wins).
    Boundary,
    /// Candidates inside the ball are used as they are.
    Interior,
}

/// `sup_{x ∈ ball} objective(x)` as a lower bound with a feasible witness.
///
/// Never returns less than `objective(s)` for a provided seed `s`.
pub fn maximize_over_ball(
    objective: &(dyn Fn(&[f64]) -> f64 + Sync),
    ball: &dyn Ball,
    budget: &OptBudget,
    seeds: &[Vec<f64>],
) -> Result<Witnessed> {
    maximize_with_scaling(objective, ball, budget, seeds, Scaling::Boundary)
}

pub fn maximize_with_scaling(
    objective: &(dyn Fn(&[f64]) -> f64 + Sync),
    ball: &dyn Ball,
    budget: &OptBudget,
    seeds: &[Vec<f64>],
    scaling: Scaling,
) -> Result<Witnessed> {
    match scaling {
        Scaling::Boundary => optimize(objective, &Boundary(ball), budget, seeds, Sense::Max),
        Scaling::Interior => optimize(objective, &Interior(ball), budget, seeds, Sense::Max),
    }
}

/// `inf` of `objective` over a projected family, as an upper bound with a
/// feasible witness; never more than `objective(s)` for a provided seed `s`.
pub fn minimize_over_family(
    objective: &(dyn Fn(&[f64]) -> f64 + Sync),
    family: &dyn Family,
    budget: &OptBudget,
    seeds: &[Vec<f64>],
) -> Result<Witnessed> {
    optimize(objective, &Projected(family), budget, seeds, Sense::Min)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Max,
    Min,
}

impl Sense {
    fn better(self, a: f64, b: f64) -> bool {
        match self {
            Sense::Max => a > b,
            Sense::Min => a < b,
        }
    }

    fn worst(self) -> f64 {
        match self {
            Sense::Max => f64::NEG_INFINITY,
            Sense::Min => f64::INFINITY,
        }
    }
}

struct Outcome {
    value: f64,
    point: Option<Vec<f64>>,
    converged: bool,
}

/// Multi-start search over an arbitrary [`SearchDomain`].
///
/// Seeds are feasible points (checked with `contains`); each is scored as
/// given and also starts a restart. Remaining restarts start from
/// `domain.sample`.
pub fn optimize(
    objective: &(dyn Fn(&[f64]) -> f64 + Sync),
    domain: &dyn SearchDomain,
    budget: &OptBudget,
    seeds: &[Vec<f64>],
    sense: Sense,
) -> Result<Witnessed> {
    budget.validate()?;
    for (index, s) in seeds.iter().enumerate() {
        if s.len() != domain.dim() {
            return Err(Error::DimensionMismatch {
                expected: domain.dim(),
                found: s.len(),
            });
        }
        if !domain.contains(s) {
            return Err(Error::InfeasibleSeed {
                index,
                gauge: domain.excess(s),
            });
        }
    }

    let score = |x: &[f64]| -> Result<f64> {
        let v = objective(x);
        if v.is_nan() {
            Err(Error::NonFiniteObjective)
        } else {
            Ok(v)
        }
    };

    let mut best = Outcome {
        value: sense.worst(),
        point: None,
        converged: false,
    };
    for s in seeds {
        let v = score(s)?;
        if best.point.is_none() || sense.better(v, best.value) {
            best = Outcome {
                value: v,
                point: Some(s.clone()),
                converged: true,
            };
        }
    }

    let run = |r: usize| -> Result<Outcome> {
        let mut rng = rng_for(budget.seed, r as u64);
        let start = match seeds.get(r) {
            Some(s) => s.clone(),
            None => domain.sample(&mut rng),
        };
        let (z, converged) = pattern_search(objective, domain, budget, &mut rng, start, sense);
        let point = domain.certify(&z).filter(|x| domain.contains(x));
        let value = match &point {
            Some(x) => score(x)?,
            None => sense.worst(),
        };
        Ok(Outcome {
            value,
            point,
            converged,
        })
    };
    let outcomes: Vec<Result<Outcome>> = if budget.parallel {
        (0..budget.restarts).into_par_iter().map(run).collect()
    } else {
        (0..budget.restarts).map(run).collect()
    };
    for outcome in outcomes {
        let outcome = outcome?;
        if outcome.point.is_some()
            && (best.point.is_none() || sense.better(outcome.value, best.value))
        {
            best = outcome;
        }
    }

    let point = best.point.ok_or(Error::NonFiniteObjective)?;
    Ok(match sense {
        Sense::Max => Witnessed::lower(best.value, point, best.converged),
        Sense::Min => Witnessed::upper(best.value, point, best.converged),
    })
}

/// One compass-search restart. Returns the final search coordinates and
/// whether the step size collapsed before the iteration budget ran out.
fn pattern_search(
    objective: &(dyn Fn(&[f64]) -> f64 + Sync),
    domain: &dyn SearchDomain,
    budget: &OptBudget,
    rng: &mut ChaCha8Rng,
    start: Vec<f64>,
    sense: Sense,
) -> (Vec<f64>, bool) {
    let n = domain.dim();
    let mut hint = Vec::new();
    let eval = |z: &[f64], hint: &mut Vec<f64>| -> f64 {
        match domain.candidate(z, hint) {
            Some(x) => {
                let v = objective(&x);
                if v.is_nan() {
                    sense.worst()
                } else {
                    v
                }
            }
            None => sense.worst(),
        }
    };

    let mut z = domain.normalize(start, &mut hint);
    let mut fz = eval(&z, &mut hint);
    let scale = {
        let rms = (z.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64).sqrt();
        if rms > 0.0 && rms.is_finite() {
            rms
        } else {
            1.0
        }
    };
    let mut step = budget.initial_step * scale;
    let floor = budget.min_step * scale;
    let ceiling = 4.0 * budget.initial_step * scale;

    for _ in 0..budget.iterations {
        let mut improved = false;
        for i in 0..n {
            for dir in [1.0, -1.0] {
                let mut trial = z.clone();
                trial[i] += dir * step;
                let ft = eval(&trial, &mut hint);
                if sense.better(ft, fz) {
                    z = trial;
                    fz = ft;
                    improved = true;
                    break;
                }
            }
        }
        for _ in 0..budget.random_directions {
            let d = gaussian_vec(rng, n);
            let len = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if len == 0.0 {
                continue;
            }
            for dir in [1.0, -1.0] {
                let trial: Vec<f64> = z
                    .iter()
                    .zip(&d)
                    .map(|(a, b)| a + dir * step * b / len)
                    .collect();
                let ft = eval(&trial, &mut hint);
                if sense.better(ft, fz) {
                    z = trial;
                    fz = ft;
                    improved = true;
                    break;
                }
            }
        }
        if improved {
            z = domain.normalize(z, &mut hint);
            step = (step * 1.5).min(ceiling);
        } else {
            step *= budget.step_decay;
            if step < floor {
                return (z, true);
            }
        }
    }
    (z, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::SpaceSpec;

    fn l2(dim: usize) -> NormOracle {
        NormOracle::lp(dim, 2.0)
    }

    #[test]
    fn linear_functional_over_euclidean_ball() {
        let ball = BallSpec::DualBall(l2(2));
        let f = |x: &[f64]| (3.0 * x[0] + 4.0 * x[1]).abs();
        let w = maximize_over_ball(&f, &ball, &OptBudget::default(), &[]).unwrap();
        assert!((w.value - 5.0).abs() < 1e-9, "{}", w.value);
        let x = w.witness.unwrap();
        let sign = x[0].signum();
        assert!((sign * x[0] - 0.6).abs() < 1e-6 && (sign * x[1] - 0.8).abs() < 1e-6);
        assert_eq!(w.bound_direction, BoundDirection::LowerOfSup);
    }

    #[test]
    fn pairing_over_l2_space_ball() {
        let ball = BallSpec::SpaceBall {
            space: Space::lp(2.0).unwrap(),
            len: 2,
        };
        let beta = [3.0, 4.0];
        let f = |a: &[f64]| a.iter().zip(&beta).map(|(x, y)| (x * y).abs()).sum::<f64>();
        let w = maximize_over_ball(&f, &ball, &OptBudget::default(), &[]).unwrap();
        assert!((w.value - 5.0).abs() < 1e-9);
        assert!(ball.contains(w.witness.as_ref().unwrap()));
    }

    #[test]
    fn seeds_dominate_and_infeasible_seeds_fail() {
        let ball = BallSpec::SpaceBall {
            space: Space::lp(1.0).unwrap(),
            len: 3,
        };
        let f = |a: &[f64]| a[0] - a[1].abs();
        let budget = OptBudget::default().with_restarts(1).with_iterations(1);
        let seed = vec![1.0, 0.0, 0.0];
        let w = maximize_with_scaling(&f, &ball, &budget, &[seed], Scaling::Interior).unwrap();
        assert!(w.value >= 1.0 - 1e-12);
        let err = maximize_over_ball(&f, &ball, &budget, &[vec![2.0, 0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::InfeasibleSeed { index: 0, .. }));
        let err = maximize_over_ball(&f, &ball, &budget, &[vec![0.0]]).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn nan_objective_is_an_error() {
        let ball = BallSpec::DualBall(l2(2));
        let f = |_: &[f64]| f64::NAN;
        let err =
            maximize_over_ball(&f, &ball, &OptBudget::default(), &[vec![1.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteObjective));
    }

    #[test]
    fn deterministic_in_seed_and_parallelism() {
        let ball = BallSpec::SpaceBall {
            space: Space::new(SpaceSpec::lp(3.0)).unwrap(),
            len: 3,
        };
        let f = |a: &[f64]| (a[0] - 2.0 * a[1]).abs() + 0.3 * a[2].abs();
        let b = OptBudget::default().with_seed(11);
        let w1 = maximize_over_ball(&f, &ball, &b, &[]).unwrap();
        let w2 = maximize_over_ball(&f, &ball, &b.clone().sequential(), &[]).unwrap();
        assert_eq!(w1, w2);
    }

    #[test]
    fn budget_validation() {
        assert!(OptBudget::default().with_restarts(0).validate().is_err());
        let mut b = OptBudget::default();
        b.step_decay = 1.0;
        assert!(b.validate().is_err());
    }

    struct Halfline;

    impl Family for Halfline {
        fn dim(&self) -> usize {
            1
        }
        fn project(&self, z: &[f64]) -> Vec<f64> {
            vec![z[0].abs() + 1.0]
        }
        fn contains(&self, x: &[f64]) -> bool {
            x[0] >= 1.0
        }
    }

    #[test]
    fn minimizes_with_seed_domination() {
        let f = |x: &[f64]| (x[0] - 3.0).powi(2);
        let w = minimize_over_family(&f, &Halfline, &OptBudget::default(), &[vec![2.5]]).unwrap();
        assert!(w.value <= 0.25);
        assert!(w.value < 1e-12);
        assert_eq!(w.bound_direction, BoundDirection::UpperOfInf);
        let err =
            minimize_over_family(&f, &Halfline, &OptBudget::default(), &[vec![0.5]]).unwrap_err();
        assert!(matches!(err, Error::InfeasibleSeed { .. }));
    }
}
