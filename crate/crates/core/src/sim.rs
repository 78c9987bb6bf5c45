//! Seeded Monte Carlo simulation of the re-identification games.
//!
//! Every trial derives its own random stream from (seed, trial index), so
//! an estimate is a pure function of the arguments no matter how many
//! worker threads run the trials, and reruns are bit-identical. Trials are
//! aggregated as win counts, which makes the parallel reduction exact.

use std::collections::HashMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::decomposition::MixtureDecomposition;
use crate::dist::{union_aligned, DiscreteDistribution};
use crate::mechanism::{lift, InputPrior, Mechanism};
use crate::numeric::{NumericMode, Scalar};
use crate::profile::rank_by_ratio;
use crate::{Error, Result};

/// Largest n for which the exact-posterior adversary is allowed; its
/// permanents cost 2^n per position.
const MAX_PERMANENT_ADVERSARY_USERS: usize = 12;

/// Empirical success estimate with its sampling error.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationReport {
    pub estimate: f64,
    pub wins: u64,
    pub trials: u64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub seed: u64,
    pub wall_clock_ms: u64,
}

impl SimulationReport {
    fn from_wins(wins: u64, trials: u64, seed: u64, started: Instant) -> Self {
        let estimate = wins as f64 / trials as f64;
        let stderr = (estimate * (1.0 - estimate) / trials as f64).sqrt();
        let ci95 = (
            (estimate - 1.96 * stderr).max(0.0),
            (estimate + 1.96 * stderr).min(1.0),
        );
        SimulationReport {
            estimate,
            wins,
            trials,
            stderr,
            ci95,
            seed,
            wall_clock_ms: started.elapsed().as_millis() as u64,
        }
    }

    /// Whether `target` lies within `sigmas` standard errors.
    pub fn within(&self, target: f64, sigmas: f64) -> bool {
        (self.estimate - target).abs() <= sigmas * self.stderr.max(f64::MIN_POSITIVE)
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial + 1);
    rng
}

/// Inverse-CDF sampler over arbitrary index sets.
struct CumTable {
    cum: Vec<f64>,
    idx: Vec<usize>,
}

impl CumTable {
    fn new(weights: impl Iterator<Item = (usize, f64)>) -> Self {
        let mut cum = Vec::new();
        let mut idx = Vec::new();
        let mut acc = 0.0;
        for (i, w) in weights {
            if w > 0.0 {
                acc += w;
                cum.push(acc);
                idx.push(i);
            }
        }
        CumTable { cum, idx }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let u: f64 = rng.gen::<f64>() * self.cum.last().copied().unwrap_or(1.0);
        let pos = self.cum.partition_point(|&c| c <= u);
        self.idx[pos.min(self.idx.len() - 1)]
    }
}

/// Ranks positions by (rank, tiebreak) and reports whether the target sits
/// among the top k. Tiebreak values come from the trial stream, one per
/// position, which realizes the uniform tie rule.
fn ratio_adversary_wins(
    items: &[(usize, bool)], // (rank, is_target), already shuffled
    k: u64,
    rng: &mut ChaCha8Rng,
) -> bool {
    let mut keyed: Vec<(usize, u64, bool)> = items
        .iter()
        .map(|&(rank, is_target)| (rank, rng.gen::<u64>(), is_target))
        .collect();
    keyed.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)));
    keyed.iter().take(k as usize).any(|&(_, _, t)| t)
}

/// Simulates the basic game: one draw from P among n - 1 draws from Q,
/// shuffled; the adversary ranks by likelihood ratio and guesses k times.
pub fn mc_guess_game<M: NumericMode>(
    p: &DiscreteDistribution<M>,
    q: &DiscreteDistribution<M>,
    n: u64,
    k: u64,
    trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    if n == 0 {
        return Err(Error::ZeroUsers);
    }
    if k < 1 || k > n {
        return Err(Error::BadGuessCount { k, n });
    }
    let started = Instant::now();
    let mode = p.mode().merge(q.mode());
    let rows = union_aligned(p, q);
    let ranks = rank_by_ratio(&rows, &mode);
    let p_table = CumTable::new(rows.iter().enumerate().map(|(i, r)| (i, r.1.to_f64())));
    let q_table = CumTable::new(rows.iter().enumerate().map(|(i, r)| (i, r.2.to_f64())));

    let wins: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let mut items: Vec<(usize, bool)> = Vec::with_capacity(n as usize);
            items.push((ranks[p_table.sample(&mut rng)], true));
            for _ in 1..n {
                items.push((ranks[q_table.sample(&mut rng)], false));
            }
            items.shuffle(&mut rng);
            ratio_adversary_wins(&items, k, &mut rng) as u64
        })
        .sum();
    Ok(SimulationReport::from_wins(wins, trials, seed, started))
}

/// A user in the shuffle-DP game: a fixed input label or a prior over the
/// mechanism's input space.
#[derive(Clone, Debug)]
pub enum UserInput<M: NumericMode> {
    Fixed(String),
    Prior(DiscreteDistribution<M>),
}

/// Strategy for the simulated shuffle-DP adversary.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShuffleAdversary {
    /// Exact Bayes posterior over positions via matrix permanents.
    ExactPermanent,
    /// Heuristic: rank positions by P_target(z) / Q_blanket(z).
    RatioVsBlanket,
}

/// Flat Ryser permanent for the trial loop.
fn permanent_f64(a: &[f64], n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut total = 0.0;
    for subset in 1u32..(1 << n) {
        let mut product = 1.0;
        for i in 0..n {
            let row = &a[i * n..(i + 1) * n];
            let mut sum = 0.0;
            let mut bits = subset;
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                sum += row[j];
                bits &= bits - 1;
            }
            product *= sum;
        }
        if (n - subset.count_ones() as usize) % 2 == 0 {
            total += product;
        } else {
            total -= product;
        }
    }
    total
}

/// Posterior numerators for every position given the observed tuple `z`:
/// rows[target](z_g) times the permanent of the remaining assignment
/// matrix.
fn posterior_numerators(lifted: &[Vec<f64>], target: usize, z: &[u16]) -> Vec<f64> {
    let n = z.len();
    let mut minor = vec![0.0; (n - 1) * (n - 1)];
    let mut out = Vec::with_capacity(n);
    for g in 0..n {
        let mut r = 0;
        for (i, row) in lifted.iter().enumerate() {
            if i == target {
                continue;
            }
            let mut c = 0;
            for (j, &y) in z.iter().enumerate() {
                if j == g {
                    continue;
                }
                minor[r * (n - 1) + c] = row[y as usize];
                c += 1;
            }
            r += 1;
        }
        out.push(lifted[target][z[g] as usize] * permanent_f64(&minor, n - 1));
    }
    out
}

fn argmax_with_uniform_ties(values: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let tol = 1e-9 * best.abs().max(f64::MIN_POSITIVE);
    let tied: Vec<usize> = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| best - v <= tol)
        .map(|(i, _)| i)
        .collect();
    tied[rng.gen_range(0..tied.len())]
}

/// Simulates the shuffle-DP game: user i draws x_i (fixed or from a
/// prior), applies R, everything is shuffled, and the adversary guesses
/// the target's position.
pub fn mc_shuffle_game<M: NumericMode>(
    mechanism: &Mechanism<M>,
    inputs: &[UserInput<M>],
    target: usize,
    trials: u64,
    seed: u64,
    adversary: ShuffleAdversary,
) -> Result<SimulationReport> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let n = inputs.len();
    if n == 0 {
        return Err(Error::ZeroUsers);
    }
    if target >= n {
        return Err(Error::SpaceMismatch(format!(
            "target index {target} out of range for {n} users"
        )));
    }
    if adversary == ShuffleAdversary::ExactPermanent && n > MAX_PERMANENT_ADVERSARY_USERS {
        return Err(Error::InstanceTooLarge(format!(
            "exact-posterior adversary capped at n = {MAX_PERMANENT_ADVERSARY_USERS}, got {n}"
        )));
    }
    let started = Instant::now();

    // per-user sampling plan and lifted output distribution (the adversary
    // knows the priors, hence ranks against R*(V_i))
    struct UserPlan {
        prior_table: Option<CumTable>,
        fixed_input: usize,
        lifted: Vec<f64>,
    }
    let mut plans = Vec::with_capacity(n);
    for input in inputs {
        let plan = match input {
            UserInput::Fixed(label) => {
                let idx = mechanism.input_index(label).ok_or_else(|| {
                    Error::SpaceMismatch(format!("unknown input label '{label}'"))
                })?;
                UserPlan {
                    prior_table: None,
                    fixed_input: idx,
                    lifted: mechanism.kernel()[idx].iter().map(|v| v.to_f64()).collect(),
                }
            }
            UserInput::Prior(dist) => {
                let prior = InputPrior::new(dist.clone(), mechanism)?;
                let lifted = lift(mechanism, &prior)?.probs_f64();
                UserPlan {
                    prior_table: Some(CumTable::new(
                        dist.probs().iter().enumerate().map(|(i, w)| (i, w.to_f64())),
                    )),
                    fixed_input: 0,
                    lifted,
                }
            }
        };
        plans.push(plan);
    }
    let row_tables: Vec<CumTable> = mechanism
        .kernel()
        .iter()
        .map(|row| CumTable::new(row.iter().enumerate().map(|(j, v)| (j, v.to_f64()))))
        .collect();
    let lifted: Vec<Vec<f64>> = plans.iter().map(|p| p.lifted.clone()).collect();

    // blanket scores for the heuristic adversary
    let blanket_scores: Option<Vec<f64>> = match adversary {
        ShuffleAdversary::RatioVsBlanket => {
            let minima: Vec<f64> = mechanism
                .column_minima()
                .iter()
                .map(|v| v.to_f64())
                .collect();
            let alpha: f64 = minima.iter().sum();
            let target_row = &lifted[target];
            Some(
                target_row
                    .iter()
                    .zip(&minima)
                    .map(|(&p1, &m)| {
                        if m > 0.0 {
                            p1 / (m / alpha.max(f64::MIN_POSITIVE))
                        } else if p1 > 0.0 {
                            f64::INFINITY
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            )
        }
        ShuffleAdversary::ExactPermanent => None,
    };

    let wins: u64 = (0..trials)
        .into_par_iter()
        .map_init(
            || HashMap::<Vec<u16>, Vec<f64>>::new(),
            |cache, trial| {
                let mut rng = trial_rng(seed, trial);
                let mut messages: Vec<(u16, bool)> = Vec::with_capacity(n);
                for (i, plan) in plans.iter().enumerate() {
                    let x = match &plan.prior_table {
                        Some(table) => table.sample(&mut rng),
                        None => plan.fixed_input,
                    };
                    let y = row_tables[x].sample(&mut rng) as u16;
                    messages.push((y, i == target));
                }
                messages.shuffle(&mut rng);
                let z: Vec<u16> = messages.iter().map(|&(y, _)| y).collect();
                let guess = match adversary {
                    ShuffleAdversary::ExactPermanent => {
                        if !cache.contains_key(&z) {
                            if cache.len() >= 1 << 20 {
                                cache.clear();
                            }
                            cache.insert(z.clone(), posterior_numerators(&lifted, target, &z));
                        }
                        let numerators = &cache[&z];
                        argmax_with_uniform_ties(numerators, &mut rng)
                    }
                    ShuffleAdversary::RatioVsBlanket => {
                        let scores = blanket_scores.as_ref().expect("precomputed");
                        let values: Vec<f64> =
                            z.iter().map(|&y| scores[y as usize]).collect();
                        argmax_with_uniform_ties(&values, &mut rng)
                    }
                };
                messages[guess].1 as u64
            },
        )
        .sum();
    Ok(SimulationReport::from_wins(wins, trials, seed, started))
}

/// Simulates the reduced game: y_1 from P1, then 1 + Bin(n-1, gamma)
/// total players whose decoys come from Q_com, shuffled; the adversary
/// ranks by the P1 / Q_com likelihood ratio.
pub fn mc_reduced_game<M: NumericMode>(
    decomposition: &MixtureDecomposition<M>,
    p1: &DiscreteDistribution<M>,
    n: u64,
    trials: u64,
    seed: u64,
) -> Result<SimulationReport> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    if n == 0 {
        return Err(Error::ZeroUsers);
    }
    if p1.labels() != decomposition.q_com().labels() {
        return Err(Error::SpaceMismatch(
            "P1 must live on the decomposition output space".into(),
        ));
    }
    let started = Instant::now();
    let mode = p1.mode().merge(decomposition.q_com().mode());
    let rows = union_aligned(p1, decomposition.q_com());
    let ranks = rank_by_ratio(&rows, &mode);
    let p_table = CumTable::new(rows.iter().enumerate().map(|(i, r)| (i, r.1.to_f64())));
    let q_table = CumTable::new(rows.iter().enumerate().map(|(i, r)| (i, r.2.to_f64())));
    let gamma = decomposition.gamma().to_f64();

    let wins: u64 = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = trial_rng(seed, trial);
            let mut items: Vec<(usize, bool)> = Vec::with_capacity(n as usize);
            items.push((ranks[p_table.sample(&mut rng)], true));
            for _ in 1..n {
                if rng.gen::<f64>() < gamma {
                    items.push((ranks[q_table.sample(&mut rng)], false));
                }
            }
            items.shuffle(&mut rng);
            ratio_adversary_wins(&items, 1, &mut rng) as u64
        })
        .sum();
    Ok(SimulationReport::from_wins(wins, trials, seed, started))
}
