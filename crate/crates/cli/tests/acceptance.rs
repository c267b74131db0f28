//! The seven acceptance criteria, one line each. Exits nonzero if any fails.

use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqnorm::spaces::{evaluate_norm, lp_norm, nip_check, DoubleArray, OrliczFunction};
use seqnorm::verify::{run_suite, InvariantResult, Suite, SuiteConfig};
use seqnorm::{OptBudget, Space, SpaceSpec};
use seqnorm_cli::report::{without_timing, Report};

struct Outcome {
    passed: bool,
    detail: String,
}

fn within(limit: Duration, elapsed: Duration) -> bool {
    elapsed <= limit
}

fn random_seq(rng: &mut ChaCha8Rng, max_len: usize) -> Vec<f64> {
    let len = rng.random_range(1..=max_len);
    (0..len)
        .map(|_| {
            if rng.random_bool(0.15) {
                0.0
            } else {
                rng.random_range(-4.0..4.0)
            }
        })
        .collect()
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for slot in 0..=p.len() {
            let mut q = p.clone();
            q.insert(slot, n - 1);
            out.push(q);
        }
    }
    out
}

/// `max_σ Σ_j c_j |α_σ(j)|^p` over every permutation.
fn best_pairing(seq: &[f64], coeffs: &[f64], p: f64) -> f64 {
    permutations(seq.len())
        .iter()
        .map(|sigma| {
            sigma
                .iter()
                .enumerate()
                .map(|(j, &s)| coeffs[j] * seq[s].abs().powf(p))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

fn scalar_oracles() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    for trial in 0..200 {
        let seq = random_seq(&mut rng, 6);
        let n = seq.len();
        let (lorentz, lp) = if trial % 2 == 0 {
            ("lorentz:geometric:0.5:p=1", 1.0)
        } else {
            ("lorentz:sqrt:p=2", 2.0)
        };
        let spec = SpaceSpec::parse_dsl(lorentz).unwrap();
        let weights: Vec<f64> = (1..=n)
            .map(|j| {
                if lp == 1.0 {
                    0.5f64.powi(j as i32 - 1)
                } else {
                    (j as f64).powf(-0.5)
                }
            })
            .collect();
        let brute = best_pairing(&seq, &weights, lp).powf(1.0 / lp);
        worst = worst.max((evaluate_norm(&spec, &seq).unwrap() - brute).abs());

        let spec = SpaceSpec::parse_dsl("sargent_n:sqrt").unwrap();
        let steps: Vec<f64> = (1..=n)
            .map(|j| (j as f64).sqrt() - (j as f64 - 1.0).sqrt())
            .collect();
        let brute = best_pairing(&seq, &steps, 1.0);
        worst = worst.max((evaluate_norm(&spec, &seq).unwrap() - brute).abs());
    }
    let mut orlicz_worst = 0.0_f64;
    let quadratic = SpaceSpec::Orlicz(OrliczFunction::Power { p: 2.0 });
    for _ in 0..200 {
        let seq = random_seq(&mut rng, 10);
        orlicz_worst =
            orlicz_worst.max((evaluate_norm(&quadratic, &seq).unwrap() - lp_norm(&seq, 2.0)).abs());
    }
    let elapsed = started.elapsed();
    Outcome {
        passed: worst <= 1e-12 && orlicz_worst <= 1e-10 && within(Duration::from_secs(10), elapsed),
        detail: format!(
            "permutation error {worst:.2e}, orlicz error {orlicz_worst:.2e}, {elapsed:.2?}"
        ),
    }
}

fn holder() -> Outcome {
    let started = Instant::now();
    let pairs = [
        "lp:1",
        "lp:1.5",
        "lp:2",
        "lp:4",
        "garling_mu:power:0.5:p=2",
        "garling_mu:geometric:0.7:p=3",
        "sargent_m:sqrt",
        "sargent_m:power:0.7",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0;
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..1000 {
        let space = Space::new(SpaceSpec::parse_dsl(pairs[trial % pairs.len()]).unwrap()).unwrap();
        let dual = space.dual().unwrap();
        let len = rng.random_range(1..=8);
        let alpha: Vec<f64> = (0..len).map(|_| rng.random_range(-3.0..3.0)).collect();
        let beta: Vec<f64> = (0..len).map(|_| rng.random_range(-3.0..3.0)).collect();
        let pairing: f64 = alpha.iter().zip(&beta).map(|(a, b)| (a * b).abs()).sum();
        let excess = pairing - space.norm(&alpha) * dual.norm(&beta);
        worst = worst.max(excess);
        if excess > 1e-9 {
            violations += 1;
        }
    }
    let elapsed = started.elapsed();
    Outcome {
        passed: violations == 0 && within(Duration::from_secs(30), elapsed),
        detail: format!(
            "1000 pairs, {violations} violations, worst excess {worst:.2e}, {elapsed:.2?}"
        ),
    }
}

fn norm_iteration() -> Outcome {
    let started = Instant::now();
    let spaces = [
        "lp:1",
        "lp:2.5",
        "sargent_m:sqrt",
        "garling_mu:power:0.5:p=2",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut violations = [0usize; 4];
    let mut worst = [0.0_f64; 4];
    for trial in 0..500 {
        let which = trial % spaces.len();
        let spec = SpaceSpec::parse_dsl(spaces[which]).unwrap();
        let (rows, cols) = (rng.random_range(1..=5), rng.random_range(1..=5));
        let arr: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..cols).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let report = nip_check(&spec, &DoubleArray::new(arr).unwrap()).unwrap();
        worst[which] = worst[which].max(report.gap);
        if report.gap > 1e-9 {
            violations[which] += 1;
        }
    }
    let elapsed = started.elapsed();
    let per_space: Vec<String> = spaces
        .iter()
        .zip(violations.iter().zip(&worst))
        .map(|(s, (v, w))| format!("{s}: {v} violations, worst gap {w:.2e}"))
        .collect();
    Outcome {
        passed: violations.iter().all(|v| *v == 0) && within(Duration::from_secs(20), elapsed),
        detail: format!("{}; {elapsed:.2?}", per_space.join("; ")),
    }
}

fn suite_outcome(suite: Suite, limit: Duration) -> Outcome {
    let started = Instant::now();
    let config = SuiteConfig::new(7, OptBudget::default().with_seed(7));
    let rows = match run_suite(suite, &config) {
        Ok(rows) => rows,
        Err(e) => {
            return Outcome {
                passed: false,
                detail: format!("suite error: {e}"),
            }
        }
    };
    let elapsed = started.elapsed();
    let describe = |r: &InvariantResult| format!("{} {}/{}", r.name, r.violations, r.trials);
    Outcome {
        passed: rows.iter().all(InvariantResult::passed) && within(limit, elapsed),
        detail: format!(
            "{}; {elapsed:.2?}",
            rows.iter().map(describe).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn verify_all() -> Result<Report, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_seqnorm"))
        .args(["verify", "--suite", "all", "--seed", "7", "--out", "-"])
        .env_remove("SEQNORM_BUDGET")
        .output()
        .map_err(|e| e.to_string())?;
    serde_json::from_slice(&out.stdout).map_err(|e| format!("exit {:?}: {e}", out.status.code()))
}

fn determinism() -> Outcome {
    let started = Instant::now();
    match (verify_all(), verify_all()) {
        (Ok(a), Ok(b)) => {
            let same = without_timing(&a) == without_timing(&b);
            Outcome {
                passed: same,
                detail: format!(
                    "{} rows, identical: {same}, {:.2?}",
                    a.results.len(),
                    started.elapsed()
                ),
            }
        }
        (Err(e), _) | (_, Err(e)) => Outcome {
            passed: false,
            detail: e,
        },
    }
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("1 scalar-norm oracles", scalar_oracles),
        ("2 holder/duality", holder),
        ("3 norm iteration", norm_iteration),
        ("4 chain", || {
            suite_outcome(Suite::Chain, Duration::from_secs(300))
        }),
        ("5 summing", || {
            suite_outcome(Suite::Summing, Duration::from_secs(600))
        }),
        ("6 tensor", || {
            suite_outcome(Suite::Tensor, Duration::from_secs(600))
        }),
        ("7 determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = check();
        let verdict = if outcome.passed { "PASS" } else { "FAIL" };
        println!("{verdict} criterion {name}: {}", outcome.detail);
        if !outcome.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} passed, {failed} failed", 7 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
