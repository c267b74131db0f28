use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqnorm::summing::{
    finite_mid_check, ideal_witness_check, pi_lambda, pi_lambda_mid, pi_lambda_seeded,
    w_lambda_mid, weak_mid_check, OperatorMatrix,
};
use seqnorm::{NormOracle, OptBudget, Space, VectorSequence};

fn budget() -> OptBudget {
    OptBudget::default().with_restarts(6).with_iterations(200)
}

fn diagonal(entries: &[f64]) -> OperatorMatrix {
    let d = entries.len();
    let rows = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| if i == j { entries[i] } else { 0.0 })
                .collect()
        })
        .collect();
    OperatorMatrix::new(NormOracle::lp(d, 2.0), NormOracle::lp(d, 2.0), rows).unwrap()
}

fn rank_one(x_oracle: NormOracle, y_oracle: NormOracle, f: &[f64], y: &[f64]) -> OperatorMatrix {
    let rows = y
        .iter()
        .map(|yi| f.iter().map(|fj| yi * fj).collect())
        .collect();
    OperatorMatrix::new(x_oracle, y_oracle, rows).unwrap()
}

#[test]
fn two_summing_norm_of_diagonals_is_hilbert_schmidt() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let l2 = Space::lp(2.0).unwrap();
    for _ in 0..20 {
        let d = rng.random_range(1..=3);
        let entries: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let hs = entries.iter().map(|v| v * v).sum::<f64>().sqrt();
        let found = pi_lambda(&l2, &diagonal(&entries), 8, &budget()).unwrap();
        assert!(found.value <= hs + 1e-9);
        assert!(found.value >= 0.9 * hs, "{} vs {hs}", found.value);
    }
}

#[test]
fn longer_sequences_never_lower_the_estimate() {
    let l2 = Space::lp(2.0).unwrap();
    let t = diagonal(&[1.0, 0.5, -0.25]);
    let short = pi_lambda(&l2, &t, 2, &budget()).unwrap();
    let mut padded = short.witness.clone().unwrap();
    padded.resize(4 * 3, 0.0);
    let long = pi_lambda_seeded(&l2, &t, 4, &budget(), &[padded]).unwrap();
    assert!(long.value >= short.value - 1e-12);
}

#[test]
fn rank_one_operators_cost_their_factors() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for (lambda, p, r) in [
        (1.0, 2.0, 2.0),
        (2.0, 1.0, f64::INFINITY),
        (3.0, f64::INFINITY, 1.0),
    ] {
        let space = Space::lp(lambda).unwrap();
        let x_oracle = NormOracle::lp(2, p);
        let y_oracle = NormOracle::lp(3, r);
        let f: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let t = rank_one(x_oracle, y_oracle, &f, &y);
        let exact = x_oracle.dual_norm(&f) * y_oracle.norm(&y);
        let pi = pi_lambda(&space, &t, 3, &budget()).unwrap().value;
        assert!(pi <= exact * (1.0 + 1e-9) + 1e-12);
        assert!(pi >= 0.99 * exact, "pi {pi} vs {exact}");
        let pi_mid = pi_lambda_mid(&space, &t, 3, &budget()).unwrap().value;
        assert!(pi_mid <= exact * (1.0 + 1e-9) + 1e-12);
        assert!(pi_mid >= 0.99 * exact, "pi_mid {pi_mid} vs {exact}");
    }
}

#[test]
fn witness_inequalities_hold() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let oracle = NormOracle::lp(2, 2.0);
    for lambda in [1.0, 2.0] {
        let space = Space::lp(lambda).unwrap();
        let a = nalgebra::DMatrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
        let t = OperatorMatrix::from_matrix(oracle, oracle, &a).unwrap();
        let xs = VectorSequence::new(
            oracle,
            vec![vec![1.0, 0.5], vec![-0.3, 0.8], vec![0.2, 0.0]],
        )
        .unwrap();
        let check = finite_mid_check(&space, &t, &xs, 2, &budget()).unwrap();
        assert!(check.holds(1e-9), "{check:?}");
        let w = w_lambda_mid(&space, &t, 3, 2, &budget()).unwrap();
        assert!(weak_mid_check(&space, &t, 2, &w).unwrap().holds(1e-9));
        let s = OperatorMatrix::identity(oracle).scaled(0.5);
        let r = OperatorMatrix::identity(oracle).scaled(3.0);
        let ideal = ideal_witness_check(&space, &r, &t, &s, 3, 2, &budget()).unwrap();
        assert!(ideal.outer.holds(1e-9) && ideal.inner.holds(1e-9));
    }
}

#[test]
fn scaling_the_operator_scales_the_estimate() {
    let l2 = Space::lp(2.0).unwrap();
    let t = diagonal(&[1.0, 0.5]);
    let one = pi_lambda(&l2, &t, 4, &budget()).unwrap().value;
    let three = pi_lambda(&l2, &t.scaled(3.0), 4, &budget()).unwrap().value;
    assert!((three - 3.0 * one).abs() <= 1e-2 * three);
}
