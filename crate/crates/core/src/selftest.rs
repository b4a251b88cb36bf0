//! Fast invariant suites shared by the CLI and tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::envs::build_cooperative_random;
use crate::eval::evaluate;
use crate::game::{JointPolicy, PlayerPolicy};
use crate::oracles::{decomposition_residual, performance_difference_residual};
use crate::sample::collect_batch;
use crate::simplex::project_simplex;

/// Simplex projection under test.
pub type Projector = fn(&[f64]) -> Vec<f64>;

pub fn default_projector(v: &[f64]) -> Vec<f64> {
    project_simplex(v).expect("finite input").into_vec()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub const SUITES: [&str; 4] = ["performance_difference", "decomposition", "projection", "unbiasedness"];

fn random_player(s: usize, a: usize, rng: &mut impl Rng) -> PlayerPolicy {
    let rows: Vec<Vec<f64>> = (0..s)
        .map(|_| {
            let raw: Vec<f64> = (0..a).map(|_| rng.random::<f64>() + 1e-3).collect();
            let t: f64 = raw.iter().sum();
            raw.iter().map(|x| x / t).collect()
        })
        .collect();
    PlayerPolicy::from_rows(&rows).expect("normalized rows")
}

fn performance_difference(rng: &mut ChaCha8Rng) -> SuiteResult {
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let (s, n, a) = (rng.random_range(1..=3), rng.random_range(1..=3), rng.random_range(1..=3));
        let gamma = if rng.random::<bool>() { 0.5 } else { 0.9 };
        let game = build_cooperative_random(s, n, a, gamma, rng).expect("valid sizes");
        let others = JointPolicy::new((0..n).map(|_| random_player(s, a, rng)).collect()).expect("shapes");
        let player = rng.random_range(0..n);
        let hat = random_player(s, a, rng);
        let bar = random_player(s, a, rng);
        let mu = random_player(1, s, rng).row(0).to_vec();
        match performance_difference_residual(&game, player, &hat, &bar, &others, &mu) {
            Ok(r) => worst = worst.max(r),
            Err(e) => return SuiteResult { name: "performance_difference", passed: false, detail: e.to_string() },
        }
    }
    SuiteResult { name: "performance_difference", passed: worst <= 1e-8, detail: format!("max residual {worst:.3e}") }
}

fn decomposition(rng: &mut ChaCha8Rng) -> SuiteResult {
    let mut worst: f64 = 0.0;
    for n in 2..=4 {
        for _ in 0..10 {
            let psi: Vec<f64> = (0..1usize << n).map(|_| rng.random_range(-1.0..1.0)).collect();
            worst = worst.max(decomposition_residual(&psi, n).unwrap_or(f64::INFINITY));
        }
    }
    SuiteResult { name: "decomposition", passed: worst <= 1e-12, detail: format!("max residual {worst:.3e}") }
}

/// KKT check: output on the simplex, and a common threshold `tau` with
/// `out = max(v - tau, 0)`.
fn kkt_violation(v: &[f64], out: &[f64]) -> f64 {
    if out.len() != v.len() {
        return f64::INFINITY;
    }
    let sum_err = (out.iter().sum::<f64>() - 1.0).abs();
    let neg = out.iter().fold(0.0f64, |m, p| m.max(-p));
    let support: Vec<usize> = (0..v.len()).filter(|&k| out[k] > 1e-12).collect();
    if support.is_empty() {
        return f64::INFINITY;
    }
    let tau = support.iter().map(|&k| v[k] - out[k]).sum::<f64>() / support.len() as f64;
    let mut viol = sum_err.max(neg);
    for k in 0..v.len() {
        let expected = (v[k] - tau).max(0.0);
        viol = viol.max((out[k] - expected).abs());
    }
    viol
}

fn projection(rng: &mut ChaCha8Rng, projector: Projector) -> SuiteResult {
    let mut worst: f64 = 0.0;
    for _ in 0..200 {
        let a = rng.random_range(1..=6);
        let v: Vec<f64> = (0..a).map(|_| rng.random_range(-2.0..2.0)).collect();
        worst = worst.max(kkt_violation(&v, &projector(&v)));
    }
    SuiteResult { name: "projection", passed: worst <= 1e-10, detail: format!("max KKT violation {worst:.3e}") }
}

fn unbiasedness(rng: &mut ChaCha8Rng) -> SuiteResult {
    let game = build_cooperative_random(2, 2, 2, 0.5, rng).expect("valid sizes");
    let policy = JointPolicy::uniform(&game);
    let exact = match evaluate(&game, &policy) {
        Ok(p) => p,
        Err(e) => return SuiteResult { name: "unbiasedness", passed: false, detail: e.to_string() },
    };
    let batch = match collect_batch(&game, &policy, 40_000, rng) {
        Ok(b) => b,
        Err(e) => return SuiteResult { name: "unbiasedness", passed: false, detail: e.to_string() },
    };
    let mut worst_z: f64 = 0.0;
    for (i, tuples) in batch.iter().enumerate() {
        for s in 0..2 {
            for a in 0..2 {
                let r: Vec<f64> = tuples.iter().filter(|t| t.state == s && t.action == a).map(|t| t.ret).collect();
                if r.len() < 100 {
                    continue;
                }
                let n = r.len() as f64;
                let mean = r.iter().sum::<f64>() / n;
                let var = r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
                let z = (mean - exact.averaged_q(i, s, a)).abs() / (var / n).sqrt().max(1e-12);
                worst_z = worst_z.max(z);
            }
        }
    }
    SuiteResult { name: "unbiasedness", passed: worst_z <= 5.0, detail: format!("max |z| {worst_z:.2}") }
}

/// Runs every suite with a fixed seed.
pub fn run_selftest(projector: Projector) -> Vec<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f_7e57);
    vec![performance_difference(&mut rng), decomposition(&mut rng), projection(&mut rng, projector), unbiasedness(&mut rng)]
}
