//! Clone and blanket decompositions of a local randomizer, the reduced-game
//! success probability psi, and the shuffle-DP bounds built on them.
//!
//! A decomposition writes every row as R(x) = gamma * Q_com + (1 - gamma) *
//! LO(x). The clone takes gamma = e^{-eps} and Q_com = R(x1); the blanket
//! takes the normalized pointwise row minimum, which carries the largest
//! possible gamma and is optimal among all decompositions.

use num::{One, Zero};

use crate::bayes::beta_n;
use crate::dist::DiscreteDistribution;
use crate::mechanism::Mechanism;
use crate::numeric::{Extended, NumericMode, Scalar};
use crate::profile::{ratio_profile, RatioProfile};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecompositionKind {
    Clone,
    Blanket,
    Custom,
}

impl std::fmt::Display for DecompositionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DecompositionKind::Clone => write!(f, "clone"),
            DecompositionKind::Blanket => write!(f, "blanket"),
            DecompositionKind::Custom => write!(f, "custom"),
        }
    }
}

/// A witnessed mixture R(x) = gamma * Q_com + (1 - gamma) * LO(x).
///
/// Leftover rows are stored raw (one vector per input over the output
/// space); they are absent when gamma = 1 and the leftover weight is zero.
#[derive(Clone, Debug)]
pub struct MixtureDecomposition<M: NumericMode> {
    gamma: M::Value,
    q_com: DiscreteDistribution<M>,
    leftover: Option<Vec<Vec<M::Value>>>,
    kind: DecompositionKind,
}

impl<M: NumericMode> MixtureDecomposition<M> {
    pub fn gamma(&self) -> &M::Value {
        &self.gamma
    }

    pub fn q_com(&self) -> &DiscreteDistribution<M> {
        &self.q_com
    }

    pub fn kind(&self) -> DecompositionKind {
        self.kind
    }

    /// Raw leftover rows, input-major; `None` when gamma = 1.
    pub fn leftover_rows(&self) -> Option<&[Vec<M::Value>]> {
        self.leftover.as_deref()
    }

    /// LO(x) as a standalone distribution (labels shared with Q_com).
    pub fn leftover(&self, input: usize) -> Option<Result<DiscreteDistribution<M>>> {
        self.leftover.as_ref().map(|rows| {
            let row = rows.get(input).ok_or_else(|| {
                Error::SpaceMismatch(format!("leftover input index {input} out of range"))
            })?;
            DiscreteDistribution::new(
                self.q_com.labels().to_vec(),
                row.clone(),
                self.q_com.mode().clone(),
            )
        })
    }

    /// Solves LO pointwise for a caller-chosen (gamma, Q_com) pair and
    /// validates the mixture; the generic constructor behind clone,
    /// blanket, and custom decompositions.
    pub fn custom(
        mechanism: &Mechanism<M>,
        gamma: M::Value,
        q_com: DiscreteDistribution<M>,
        kind: DecompositionKind,
    ) -> Result<Self> {
        let mode = mechanism.mode().clone();
        if q_com.labels() != mechanism.output_labels() {
            return Err(Error::SpaceMismatch(
                "Q_com must live on the mechanism output space".into(),
            ));
        }
        if gamma <= M::Value::zero() || gamma > M::Value::one() {
            return Err(Error::InvalidDecomposition(format!(
                "gamma = {gamma} outside (0, 1]"
            )));
        }
        let one = M::Value::one();
        if gamma == one {
            // leftover weight is zero; rows must all equal Q_com
            for (i, row) in mechanism.kernel().iter().enumerate() {
                for (j, value) in row.iter().enumerate() {
                    if !mode.eq_with_slack(value, &q_com.probs()[j]) {
                        return Err(Error::InvalidDecomposition(format!(
                            "gamma = 1 but kernel[{i}][{j}] differs from Q_com"
                        )));
                    }
                }
            }
            return Ok(MixtureDecomposition {
                gamma,
                q_com,
                leftover: None,
                kind,
            });
        }
        let residual_weight = one - gamma.clone();
        let mut leftover = Vec::with_capacity(mechanism.num_inputs());
        for (i, row) in mechanism.kernel().iter().enumerate() {
            let mut lo_row = Vec::with_capacity(row.len());
            for (j, value) in row.iter().enumerate() {
                let residual =
                    value.clone() - gamma.clone() * q_com.probs()[j].clone();
                if residual < M::Value::zero() {
                    // tolerate only float-rounding dust
                    if mode.is_exact() || residual.to_f64() < -1e-12 {
                        return Err(Error::InvalidDecomposition(format!(
                            "gamma * Q_com exceeds kernel[{i}][{j}] by {}",
                            -residual.to_f64()
                        )));
                    }
                    lo_row.push(M::Value::zero());
                } else {
                    lo_row.push(residual / residual_weight.clone());
                }
            }
            crate::dist::validate_probs(&mode, &lo_row).map_err(|e| {
                Error::InvalidDecomposition(format!("leftover row {i} invalid: {e}"))
            })?;
            leftover.push(lo_row);
        }
        let decomposition = MixtureDecomposition {
            gamma,
            q_com,
            leftover: Some(leftover),
            kind,
        };
        decomposition.verify_against(mechanism)?;
        Ok(decomposition)
    }

    /// Re-derives every kernel entry from the mixture and compares.
    pub fn verify_against(&self, mechanism: &Mechanism<M>) -> Result<()> {
        let mode = mechanism.mode();
        let one = M::Value::one();
        for (i, row) in mechanism.kernel().iter().enumerate() {
            for (j, expected) in row.iter().enumerate() {
                let common = self.gamma.clone() * self.q_com.probs()[j].clone();
                let rebuilt = match &self.leftover {
                    Some(rows) => {
                        common + (one.clone() - self.gamma.clone()) * rows[i][j].clone()
                    }
                    None => common,
                };
                if !mode.eq_with_slack(&rebuilt, expected) {
                    return Err(Error::InvalidDecomposition(format!(
                        "reconstruction mismatch at [{i}][{j}]: {rebuilt} vs {expected}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Clone decomposition: gamma = e^{-eps(R)} (the reciprocal of the max row
/// ratio), Q_com = R(x1). Exists for every finite-eps mechanism.
pub fn clone_decompose<M: NumericMode>(
    mechanism: &Mechanism<M>,
    x1: &str,
) -> Result<MixtureDecomposition<M>> {
    let input = mechanism
        .input_index(x1)
        .ok_or_else(|| Error::SpaceMismatch(format!("unknown input label '{x1}'")))?;
    let ratio = match mechanism.dp_max_ratio() {
        Extended::Finite(r) => r,
        Extended::Infinite => return Err(Error::InfiniteEpsilon),
    };
    let gamma = M::Value::one() / ratio;
    let q_com = mechanism.row_distribution(input)?;
    MixtureDecomposition::custom(mechanism, gamma, q_com, DecompositionKind::Clone)
}

/// Blanket mass alpha = sum_y inf_x Pr[R(x) = y], without materializing
/// leftover rows; cheap even for very fine kernels.
pub fn blanket_mass<M: NumericMode>(mechanism: &Mechanism<M>) -> M::Value {
    let minima = mechanism.column_minima();
    crate::dist::stable_sum(mechanism.mode(), &minima)
}

/// Blanket decomposition: Q^B(y) = inf_x kernel[x][y] / alpha.
pub fn blanket_decompose<M: NumericMode>(
    mechanism: &Mechanism<M>,
) -> Result<MixtureDecomposition<M>> {
    let minima = mechanism.column_minima();
    let alpha = crate::dist::stable_sum(mechanism.mode(), &minima);
    if alpha.is_zero() {
        return Err(Error::ZeroBlanket);
    }
    let q_b: Vec<M::Value> = minima.into_iter().map(|v| v / alpha.clone()).collect();
    let q_com = DiscreteDistribution::new(
        mechanism.output_labels().to_vec(),
        q_b,
        mechanism.mode().clone(),
    )?;
    MixtureDecomposition::custom(mechanism, alpha, q_com, DecompositionKind::Blanket)
}

/// Theorem bound for eps-DP shuffling: beta_n(R) <= e^eps / n, capped at 1.
pub fn clone_bound<V: Scalar>(e_eps: &V, n: u64) -> Result<V> {
    if n == 0 {
        return Err(Error::ZeroUsers);
    }
    if *e_eps < V::one() {
        return Err(Error::NonpositiveEpsilon);
    }
    let bound = e_eps.clone() / V::from_u64(n);
    Ok(if bound > V::one() { V::one() } else { bound })
}

/// M = sup_y P1(y) / inf_x kernel[x][y]: the asymptotic multiplicative
/// advantage of a target with output distribution P1.
pub fn blanket_m<M: NumericMode>(
    mechanism: &Mechanism<M>,
    p1: &DiscreteDistribution<M>,
) -> Result<Extended<M::Value>> {
    if p1.labels() != mechanism.output_labels() {
        return Err(Error::SpaceMismatch(
            "P1 must live on the mechanism output space".into(),
        ));
    }
    let minima = mechanism.column_minima();
    let zero = M::Value::zero();
    let mut worst: Option<M::Value> = None;
    for (value, min) in p1.probs().iter().zip(&minima) {
        if *value == zero {
            continue;
        }
        if *min == zero {
            return Ok(Extended::Infinite);
        }
        let ratio = value.clone() / min.clone();
        worst = Some(match worst {
            Some(w) if w >= ratio => w,
            _ => ratio,
        });
    }
    Ok(match worst {
        Some(w) => Extended::Finite(w),
        None => Extended::Finite(M::Value::one()),
    })
}

/// Binomial mixture weights C(n-1, m) gamma^m (1-gamma)^{n-1-m} for
/// m = 0..n-1. Exact mode uses running rational products; float mode works
/// in log space so extreme (gamma, n) pairs cannot underflow the start of
/// the recurrence.
fn binomial_weights<M: NumericMode>(mode: &M, n: u64, gamma: &M::Value) -> Vec<M::Value> {
    let trials = n - 1;
    let one = M::Value::one();
    if trials == 0 {
        return vec![one];
    }
    if *gamma == one {
        let mut weights = vec![M::Value::zero(); trials as usize + 1];
        weights[trials as usize] = one;
        return weights;
    }
    if mode.is_exact() {
        let complement = one.clone() - gamma.clone();
        let mut weights = Vec::with_capacity(trials as usize + 1);
        let mut w = complement.pow_u(trials);
        weights.push(w.clone());
        for m in 0..trials {
            // w_{m+1} = w_m * gamma (trials - m) / ((1 - gamma)(m + 1))
            w = w * gamma.clone() * M::Value::from_u64(trials - m)
                / (complement.clone() * M::Value::from_u64(m + 1));
            weights.push(w.clone());
        }
        weights
    } else {
        let g = gamma.to_f64();
        if g >= 1.0 {
            let mut weights = vec![M::Value::zero(); trials as usize + 1];
            weights[trials as usize] = one;
            return weights;
        }
        let (ln_g, ln_c) = (g.ln(), (1.0 - g).ln());
        let mut weights = Vec::with_capacity(trials as usize + 1);
        let mut ln_binom = 0.0f64;
        for m in 0..=trials {
            let ln_w = ln_binom + m as f64 * ln_g + (trials - m) as f64 * ln_c;
            weights.push(M::Value::from_f64(ln_w.exp()));
            if m < trials {
                ln_binom += ((trials - m) as f64).ln() - ((m + 1) as f64).ln();
            }
        }
        weights
    }
}

/// beta_1..beta_max for one profile, sharing the cumulative G powers.
fn beta_curve<M: NumericMode>(profile: &RatioProfile<M>, max_n: u64) -> Vec<M::Value> {
    let atoms = profile.atoms();
    let mut g_cur = Vec::with_capacity(atoms.len());
    let mut g_prev_bases = Vec::with_capacity(atoms.len());
    let mut acc = M::Value::zero();
    for atom in atoms {
        let g = acc.clone() + atom.g_mass.clone();
        g_prev_bases.push(acc.clone());
        g_cur.push(g.clone());
        acc = g;
    }
    let mut cur_pow = g_cur.clone();
    let mut prev_pow = g_prev_bases.clone();
    let mut betas = Vec::with_capacity(max_n as usize);
    for n in 1..=max_n {
        let mut sum = M::Value::zero();
        for (i, atom) in atoms.iter().enumerate() {
            sum = sum + atom.t.clone() * (cur_pow[i].clone() - prev_pow[i].clone());
            cur_pow[i] = cur_pow[i].clone() * g_cur[i].clone();
            prev_pow[i] = prev_pow[i].clone() * g_prev_bases[i].clone();
        }
        betas.push(profile.f_inf().clone() + sum / M::Value::from_u64(n));
    }
    betas
}

/// Reduced-game success probability:
/// psi = sum_m C(n-1, m) gamma^m (1-gamma)^{n-1-m} beta_{m+1}(P1, Q_com).
pub fn psi<M: NumericMode>(
    decomposition: &MixtureDecomposition<M>,
    p1: &DiscreteDistribution<M>,
    n: u64,
) -> Result<M::Value> {
    Ok(psi_sweep(decomposition, p1, &[n])?.pop().expect("one value"))
}

/// psi over several n values with one shared beta table.
pub fn psi_sweep<M: NumericMode>(
    decomposition: &MixtureDecomposition<M>,
    p1: &DiscreteDistribution<M>,
    n_values: &[u64],
) -> Result<Vec<M::Value>> {
    if n_values.iter().any(|&n| n == 0) {
        return Err(Error::ZeroUsers);
    }
    if p1.labels() != decomposition.q_com().labels() {
        return Err(Error::SpaceMismatch(
            "P1 must live on the decomposition output space".into(),
        ));
    }
    let mode = p1.mode().merge(decomposition.q_com().mode());
    let max_n = *n_values.iter().max().expect("nonempty n list");
    let profile = ratio_profile(p1, decomposition.q_com());
    let betas = beta_curve(&profile, max_n);
    debug_assert_eq!(betas[0], beta_n(&profile, 1).expect("n = 1"));

    let mut out = Vec::with_capacity(n_values.len());
    for &n in n_values {
        let weights = binomial_weights(&mode, n, decomposition.gamma());
        let mut value = M::Value::zero();
        for (m, weight) in weights.into_iter().enumerate() {
            value = value + weight * betas[m].clone();
        }
        out.push(value);
    }
    Ok(out)
}

/// One row of a decomposition comparison.
#[derive(Clone, Debug)]
pub struct ComparisonEntry<V> {
    pub name: String,
    pub kind: DecompositionKind,
    pub gamma: V,
    pub psi: V,
}

/// psi per candidate decomposition, ordered best (smallest) first.
#[derive(Clone, Debug)]
pub struct ComparisonReport<V> {
    pub n: u64,
    pub entries: Vec<ComparisonEntry<V>>,
}

/// Evaluates psi for each candidate decomposition of one mechanism and
/// asserts blanket minimality among them. A blanket entry beaten by any
/// other candidate contradicts the optimality theorem, so that aborts
/// with diagnostics rather than returning.
pub fn compare_decompositions<M: NumericMode>(
    candidates: &[(String, MixtureDecomposition<M>)],
    p1: &DiscreteDistribution<M>,
    n: u64,
) -> Result<ComparisonReport<M::Value>> {
    let mode = p1.mode();
    let mut entries = Vec::with_capacity(candidates.len());
    for (name, decomposition) in candidates {
        let value = psi(decomposition, p1, n)?;
        entries.push(ComparisonEntry {
            name: name.clone(),
            kind: decomposition.kind(),
            gamma: decomposition.gamma().clone(),
            psi: value,
        });
    }
    for blanket in entries
        .iter()
        .filter(|e| e.kind == DecompositionKind::Blanket)
    {
        for other in &entries {
            assert!(
                mode.le_with_slack(&blanket.psi, &other.psi),
                "blanket decomposition is not minimal: psi[{}] = {} > psi[{}] = {} at n = {n}",
                blanket.name,
                blanket.psi,
                other.name,
                other.psi
            );
        }
    }
    entries.sort_by(|a, b| a.psi.partial_cmp(&b.psi).expect("comparable"));
    Ok(ComparisonReport { n, entries })
}
