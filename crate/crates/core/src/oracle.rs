//! Enumeration oracles: exact ground truth for the closed forms.
//!
//! `brute_force_beta` replays the basic guessing game by enumerating the
//! target value and the decoy multiset; it never touches the profile
//! telescoping used by the analytic path. `brute_force_beta_het` computes
//! the Bayes-optimal success probability for arbitrary heterogeneous users
//! from the posterior, whose normalizer is a matrix permanent.

use num::{One, Zero};

use crate::dist::{union_aligned, DiscreteDistribution};
use crate::numeric::{NumericMode, Scalar};
use crate::{Error, Result};

const MAX_PERMANENT_DIM: usize = 12;
const MAX_BASIC_SUPPORT: usize = 12;
const MAX_BASIC_USERS: u64 = 8;
const MAX_HET_USERS: usize = 7;
const MAX_HET_OUTPUTS: usize = 6;

/// Matrix permanent by inclusion-exclusion (Ryser), O(2^n * n^2).
pub fn permanent<V: Scalar>(matrix: &[Vec<V>]) -> Result<V> {
    let n = matrix.len();
    if matrix.iter().any(|row| row.len() != n) {
        return Err(Error::NotSquare);
    }
    if n > MAX_PERMANENT_DIM {
        return Err(Error::InstanceTooLarge(format!(
            "permanent dimension {n} exceeds {MAX_PERMANENT_DIM}"
        )));
    }
    if n == 0 {
        return Ok(V::one());
    }
    let mut total = V::zero();
    for subset in 1u32..(1 << n) {
        let mut product = V::one();
        for row in matrix {
            let mut row_sum = V::zero();
            for (j, value) in row.iter().enumerate() {
                if subset & (1 << j) != 0 {
                    row_sum = row_sum + value.clone();
                }
            }
            product = product * row_sum;
        }
        if (n - subset.count_ones() as usize) % 2 == 0 {
            total = total + product;
        } else {
            total = total - product;
        }
    }
    Ok(total)
}

/// Exact success probability of the ratio-ranking adversary with k guesses
/// in the basic game, by enumerating the target draw and the decoy
/// multiset over Q's support.
pub fn brute_force_beta<M: NumericMode>(
    p: &DiscreteDistribution<M>,
    q: &DiscreteDistribution<M>,
    n: u64,
    k: u64,
) -> Result<M::Value> {
    if n == 0 {
        return Err(Error::ZeroUsers);
    }
    if k < 1 || k > n {
        return Err(Error::BadGuessCount { k, n });
    }
    let mode = p.mode().merge(q.mode());
    let rows = union_aligned(p, q);
    if rows.len() > MAX_BASIC_SUPPORT {
        return Err(Error::InstanceTooLarge(format!(
            "union support {} exceeds {MAX_BASIC_SUPPORT}",
            rows.len()
        )));
    }
    if n > MAX_BASIC_USERS {
        return Err(Error::InstanceTooLarge(format!(
            "n = {n} exceeds {MAX_BASIC_USERS}"
        )));
    }

    let zero = M::Value::zero();
    let supp_q: Vec<(M::Value, M::Value)> = rows
        .iter()
        .filter(|(_, _, qv)| *qv > zero)
        .map(|(_, pv, qv)| (pv.clone(), qv.clone()))
        .collect();
    let decoys = (n - 1) as usize;
    let factorials = factorial_table::<M::Value>(decoys);

    // ratio comparison by cross-multiplication: p1/q1 vs p2/q2, valid when
    // at most the first pair has a zero denominator (the target may sit in
    // the certainty region, decoys never do)
    let cross = |a: &(M::Value, M::Value), b: &(M::Value, M::Value)| {
        (a.0.clone() * b.1.clone(), b.0.clone() * a.1.clone())
    };

    let mut beta = M::Value::zero();
    for (_, p_target, q_target) in rows.iter().filter(|(_, pv, _)| *pv > zero) {
        let target = (p_target.clone(), q_target.clone());
        let mut conditional = M::Value::zero();
        for_each_composition(decoys, supp_q.len().max(1), &mut |counts| {
            let mut weight = factorials[decoys].clone();
            let mut above = 0u64;
            let mut tied = 0u64;
            for (idx, &count) in counts.iter().enumerate() {
                if count == 0 || supp_q.is_empty() {
                    continue;
                }
                let (pv, qv) = &supp_q[idx];
                weight = weight * qv.pow_u(count as u64) / factorials[count].clone();
                let (lhs, rhs) = cross(&(pv.clone(), qv.clone()), &target);
                if mode.tie_eq(&lhs, &rhs) {
                    tied += count as u64;
                } else if lhs > rhs {
                    above += count as u64;
                }
            }
            if above < k {
                let slots = (k - above).min(tied + 1);
                let win = M::Value::from_ratio(slots as i64, tied + 1);
                conditional = conditional.clone() + weight * win;
            }
        });
        beta = beta + p_target.clone() * conditional;
    }
    Ok(beta)
}

/// Exact Bayes-optimal success probability with heterogeneous users.
///
/// Users draw y_i from arbitrary per-user distributions over a common
/// output space; the posterior of "position g holds the target" given the
/// shuffled tuple z is proportional to rows[target](z_g) times the
/// permanent of the remaining (n-1) x (n-1) assignment matrix. Success is
/// the expected tie-weighted top-k posterior mass.
pub fn brute_force_beta_het<M: NumericMode>(
    rows: &[DiscreteDistribution<M>],
    target: usize,
    k: u64,
) -> Result<M::Value> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::ZeroUsers);
    }
    if target >= n {
        return Err(Error::SpaceMismatch(format!(
            "target index {target} out of range for {n} users"
        )));
    }
    if k < 1 || k > n as u64 {
        return Err(Error::BadGuessCount { k, n: n as u64 });
    }
    if n > MAX_HET_USERS {
        return Err(Error::InstanceTooLarge(format!(
            "n = {n} exceeds {MAX_HET_USERS}"
        )));
    }
    let labels = rows[0].labels();
    for row in &rows[1..] {
        if row.labels() != labels {
            return Err(Error::SpaceMismatch(
                "all user rows must share one output space".into(),
            ));
        }
    }
    let outputs = labels.len();
    if outputs > MAX_HET_OUTPUTS {
        return Err(Error::InstanceTooLarge(format!(
            "output space {outputs} exceeds {MAX_HET_OUTPUTS}"
        )));
    }
    let mode = rows
        .iter()
        .skip(1)
        .fold(rows[0].mode().clone(), |m, r| m.merge(r.mode()));

    let factorials = factorial_table::<M::Value>(n);
    let mut beta = M::Value::zero();
    let mut total_probability = M::Value::zero();
    let mut failure: Option<Error> = None;

    for_each_composition(n, outputs, &mut |counts| {
        if failure.is_some() {
            return;
        }
        // representative shuffled tuple: counts expanded in label order
        let mut z: Vec<usize> = Vec::with_capacity(n);
        for (label_idx, &count) in counts.iter().enumerate() {
            for _ in 0..count {
                z.push(label_idx);
            }
        }
        // posterior numerator per position; positions holding the same
        // label share one value, so compute per distinct label
        let mut numerators: Vec<(M::Value, usize)> = Vec::new(); // (value, multiplicity)
        let mut pos = 0;
        for (label_idx, &count) in counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let minor: Vec<Vec<M::Value>> = (0..n)
                .filter(|&i| i != target)
                .map(|i| {
                    z.iter()
                        .enumerate()
                        .filter(|&(j, _)| j != pos)
                        .map(|(_, &y)| rows[i].probs()[y].clone())
                        .collect()
                })
                .collect();
            match permanent(&minor) {
                Ok(perm) => {
                    let value = rows[target].probs()[label_idx].clone() * perm;
                    numerators.push((value, count));
                }
                Err(e) => failure = Some(e),
            }
            pos += count;
        }
        if failure.is_some() {
            return;
        }

        // merge equal numerator values across labels, then take the
        // tie-weighted top-k mass
        numerators.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("comparable"));
        let mut merged: Vec<(M::Value, usize)> = Vec::new();
        for (value, mult) in numerators {
            match merged.last_mut() {
                Some((v, m)) if mode.tie_eq(v, &value) => *m += mult,
                _ => merged.push((value, mult)),
            }
        }
        let mut remaining = k;
        let mut mass = M::Value::zero();
        let mut tuple_weight = M::Value::zero(); // sum of numerators = perm(A)
        for (value, mult) in &merged {
            tuple_weight = tuple_weight + value.clone() * M::Value::from_u64(*mult as u64);
            if remaining == 0 {
                continue;
            }
            let take = remaining.min(*mult as u64);
            mass = mass + value.clone() * M::Value::from_u64(take);
            remaining -= take;
        }

        let mut count_norm = M::Value::one();
        for &count in counts {
            count_norm = count_norm * factorials[count].clone();
        }
        beta = beta.clone() + mass / count_norm.clone();
        total_probability = total_probability.clone() + tuple_weight / count_norm;
    });

    if let Some(e) = failure {
        return Err(e);
    }
    assert!(
        mode.eq_with_slack(&total_probability, &M::Value::one()),
        "posterior enumeration does not cover probability 1: {total_probability}"
    );
    Ok(beta)
}

fn factorial_table<V: Scalar>(up_to: usize) -> Vec<V> {
    let mut table = Vec::with_capacity(up_to + 1);
    table.push(V::one());
    for i in 1..=up_to {
        let next = table[i - 1].clone() * V::from_u64(i as u64);
        table.push(next);
    }
    table
}

/// Calls `f` for every way of writing `total` as an ordered sum of
/// `parts` nonnegative counts.
fn for_each_composition(total: usize, parts: usize, f: &mut impl FnMut(&[usize])) {
    let mut counts = vec![0usize; parts];
    fn recurse(
        counts: &mut Vec<usize>,
        part: usize,
        remaining: usize,
        f: &mut impl FnMut(&[usize]),
    ) {
        if part + 1 == counts.len() {
            counts[part] = remaining;
            f(counts);
            return;
        }
        for take in 0..=remaining {
            counts[part] = take;
            recurse(counts, part + 1, remaining - take, f);
        }
    }
    recurse(&mut counts, 0, total, f);
}
