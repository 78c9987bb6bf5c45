//! Closed-form Bayesian success probabilities and advantages.
//!
//! `beta_n` evaluates the discrete tie-aware success probability of the
//! Bayes-optimal single-guess adversary from a ratio profile; `beta_nk`
//! generalizes to k guesses with uniform tie-breaking. `advantage` attaches
//! the total-variation sandwich, `asymptotics` exposes the f_inf + M/n
//! characterization, and `beta_n_example1` reproduces the linear-density
//! case study by discretization.

use num::{One, Zero};

use crate::dist::DiscreteDistribution;
use crate::numeric::{NumericMode, Scalar};
use crate::profile::{ratio_profile, RatioProfile};
use crate::{Error, Result};

/// Success probability of the single-guess Bayes-optimal adversary:
/// beta_n = f_inf + (1/n) * sum_t t * [G^n(t) - G^n(t-)].
pub fn beta_n<M: NumericMode>(profile: &RatioProfile<M>, n: u64) -> Result<M::Value> {
    if n == 0 {
        return Err(Error::ZeroUsers);
    }
    let mut acc = M::Value::zero();
    let mut g_prev = M::Value::zero();
    for atom in profile.atoms() {
        let g_cur = g_prev.clone() + atom.g_mass.clone();
        acc = acc + atom.t.clone() * (g_cur.pow_u(n) - g_prev.pow_u(n));
        g_prev = g_cur;
    }
    Ok(profile.f_inf().clone() + acc / M::Value::from_u64(n))
}

/// Success probability of the Bayes-optimal adversary with k guesses.
///
/// The adversary ranks positions by likelihood ratio, breaking ties
/// uniformly. Conditioned on the target's ratio class t, with b decoys
/// strictly above t and e decoys tied at t, the win probability is
/// min(k - b, e + 1) / (e + 1) when b < k and 0 otherwise; (b, e) follow a
/// trinomial over the n - 1 decoys with cell probabilities 1 - G(t),
/// g(t), G(t-). Reduces to `beta_n` at k = 1 (checked against the
/// enumeration oracle) and to 1 at k = n.
pub fn beta_nk<M: NumericMode>(profile: &RatioProfile<M>, n: u64, k: u64) -> Result<M::Value> {
    if n == 0 {
        return Err(Error::ZeroUsers);
    }
    if k < 1 || k > n {
        return Err(Error::BadGuessCount { k, n });
    }
    let decoys = (n - 1) as usize;
    let one = M::Value::one();
    let mut acc = profile.f_inf().clone();
    let mut g_prev = M::Value::zero();
    for atom in profile.atoms() {
        let g_cur = g_prev.clone() + atom.g_mass.clone();
        let p_above = one.clone() - g_cur.clone();
        let p_tie = atom.g_mass.clone();
        let p_below = g_prev.clone();

        let pow_above = power_table(&p_above, decoys);
        let pow_tie = power_table(&p_tie, decoys);
        let pow_below = power_table(&p_below, decoys);

        let mut inner = M::Value::zero();
        let mut binom_b = one.clone(); // C(n-1, b)
        for b in 0..=decoys.min(k as usize - 1) {
            let rem = decoys - b;
            let mut binom_e = one.clone(); // C(rem, e)
            for e in 0..=rem {
                let slots = (k - b as u64).min(e as u64 + 1);
                let win = M::Value::from_ratio(slots as i64, e as u64 + 1);
                let term = binom_b.clone()
                    * binom_e.clone()
                    * pow_above[b].clone()
                    * pow_tie[e].clone()
                    * pow_below[rem - e].clone();
                inner = inner + term * win;
                if e < rem {
                    binom_e = binom_e * M::Value::from_u64((rem - e) as u64)
                        / M::Value::from_u64(e as u64 + 1);
                }
            }
            if b < decoys {
                binom_b = binom_b * M::Value::from_u64((decoys - b) as u64)
                    / M::Value::from_u64(b as u64 + 1);
            }
        }
        acc = acc + atom.f_mass.clone() * inner;
        g_prev = g_cur;
    }
    Ok(acc)
}

fn power_table<V: Scalar>(base: &V, up_to: usize) -> Vec<V> {
    let mut table = Vec::with_capacity(up_to + 1);
    table.push(V::one());
    for i in 0..up_to {
        let next = table[i].clone() * base.clone();
        table.push(next);
    }
    table
}

/// Success probability, advantages, and the total-variation sandwich.
#[derive(Clone, Debug)]
pub struct AdvantageReport<V> {
    pub n: u64,
    pub beta: V,
    pub adv_plus: V,
    pub adv_times: V,
    pub tv_lower: V,
    pub tv_upper: V,
}

/// Computes beta_n with the additive/multiplicative advantages and checks
/// the sandwich tv/n <= adv_plus <= tv.
///
/// A sandwich violation is an implementation bug, not a user error, so it
/// panics with diagnostics. The lower bound is only asserted for n >= 2:
/// at n = 1 the adversary always wins, the additive advantage is zero, and
/// the tv/n lower bound does not apply.
pub fn advantage<M: NumericMode>(
    p: &DiscreteDistribution<M>,
    q: &DiscreteDistribution<M>,
    n: u64,
) -> Result<AdvantageReport<M::Value>> {
    if n == 0 {
        return Err(Error::ZeroUsers);
    }
    let mode = p.mode().merge(q.mode());
    let profile = ratio_profile(p, q);
    let beta = beta_n(&profile, n)?;
    let n_val = M::Value::from_u64(n);
    let adv_plus = beta.clone() - M::Value::one() / n_val.clone();
    let adv_times = n_val.clone() * beta.clone();
    let tv = crate::dist::total_variation(p, q);
    let tv_lower = tv.clone() / n_val;
    if n >= 2 {
        assert!(
            mode.le_with_slack(&tv_lower, &adv_plus),
            "sandwich lower bound violated: tv/n = {tv_lower} > adv_plus = {adv_plus} (n = {n})"
        );
    }
    assert!(
        mode.le_with_slack(&adv_plus, &tv),
        "sandwich upper bound violated: adv_plus = {adv_plus} > tv = {tv} (n = {n})"
    );
    Ok(AdvantageReport {
        n,
        beta,
        adv_plus,
        adv_times,
        tv_lower,
        tv_upper: tv,
    })
}

/// The f_inf + M/n - l(n) characterization of beta_n.
#[derive(Clone, Debug)]
pub struct AsymptoticsReport<M: NumericMode> {
    f_inf: M::Value,
    max_ratio: M::Value,
    profile: RatioProfile<M>,
}

impl<M: NumericMode> AsymptoticsReport<M> {
    pub fn f_inf(&self) -> &M::Value {
        &self.f_inf
    }

    pub fn max_ratio(&self) -> &M::Value {
        &self.max_ratio
    }

    /// l(n) = f_inf + M/n - beta_n; nonnegative and o(1/n).
    pub fn remainder(&self, n: u64) -> Result<M::Value> {
        let beta = beta_n(&self.profile, n)?;
        Ok(self.f_inf.clone() + self.max_ratio.clone() / M::Value::from_u64(n) - beta)
    }
}

pub fn asymptotics<M: NumericMode>(
    p: &DiscreteDistribution<M>,
    q: &DiscreteDistribution<M>,
) -> AsymptoticsReport<M> {
    let profile = ratio_profile(p, q);
    AsymptoticsReport {
        f_inf: profile.f_inf().clone(),
        max_ratio: profile.max_ratio().clone(),
        profile,
    }
}

/// beta_n for the density P(x) = x + 0.5 vs uniform Q on [0, 1],
/// discretized into m equal-width bins with exact bin masses.
///
/// Converges to 1.5/n - 1/(n(n+1)) as m grows; the bin mass of the linear
/// density is ((lo + hi)/2 + 0.5) * width, which makes the scheme
/// second-order accurate.
pub fn beta_n_example1<M: NumericMode>(n: u64, m: usize, mode: M) -> Result<M::Value> {
    if n == 0 {
        return Err(Error::ZeroUsers);
    }
    if m < 2 {
        return Err(Error::TooFewBins(m));
    }
    let m_u = m as u64;
    let two_m_sq = 2 * m_u * m_u;
    let probs: Vec<M::Value> = (0..m_u)
        .map(|i| M::Value::from_ratio((2 * i + 1 + m_u) as i64, two_m_sq))
        .collect();
    let p = DiscreteDistribution::from_probs(probs, mode.clone())?;
    let q = DiscreteDistribution::uniform(m, mode)?;
    beta_n(&ratio_profile(&p, &q), n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{Exact, Float, Scalar};
    use num::rational::BigRational;
    use num::One;

    fn r(num: i64, den: u64) -> BigRational {
        BigRational::from_ratio(num, den)
    }

    fn dist(probs: Vec<BigRational>) -> DiscreteDistribution<Exact> {
        DiscreteDistribution::from_probs(probs, Exact).unwrap()
    }

    #[test]
    fn identical_distributions_give_one_over_n() {
        let u = DiscreteDistribution::<Exact>::uniform(4, Exact).unwrap();
        let prof = ratio_profile(&u, &u);
        assert_eq!(beta_n(&prof, 5).unwrap(), r(1, 5));
        assert_eq!(beta_n(&prof, 1).unwrap(), r(1, 1));
    }

    #[test]
    fn half_overlap_tightness_family() {
        // beta_n((p,1-p),(0,1)) = p + (1-p)/n at p = 1/2, n = 4
        let p = dist(vec![r(1, 2), r(1, 2)]);
        let q = dist(vec![r(0, 1), r(1, 1)]);
        let prof = ratio_profile(&p, &q);
        assert_eq!(beta_n(&prof, 4).unwrap(), r(5, 8));
    }

    #[test]
    fn beta_nk_boundaries() {
        let p = dist(vec![r(3, 4), r(1, 4)]);
        let q = dist(vec![r(1, 4), r(3, 4)]);
        let prof = ratio_profile(&p, &q);
        for n in 1..=6u64 {
            assert_eq!(beta_nk(&prof, n, n).unwrap(), BigRational::one());
            assert_eq!(beta_nk(&prof, n, 1).unwrap(), beta_n(&prof, n).unwrap());
        }
        assert!(matches!(
            beta_nk(&prof, 3, 0),
            Err(Error::BadGuessCount { .. })
        ));
        assert!(matches!(
            beta_nk(&prof, 3, 4),
            Err(Error::BadGuessCount { .. })
        ));
        assert!(matches!(beta_nk(&prof, 0, 1), Err(Error::ZeroUsers)));
    }

    #[test]
    fn beta_nk_nondecreasing_in_k() {
        let p = dist(vec![r(1, 6), r(1, 3), r(1, 2)]);
        let q = dist(vec![r(1, 2), r(1, 3), r(1, 6)]);
        let prof = ratio_profile(&p, &q);
        let n = 6;
        let mut prev = r(0, 1);
        for k in 1..=n {
            let b = beta_nk(&prof, n, k).unwrap();
            assert!(b >= prev);
            prev = b;
        }
    }

    #[test]
    fn beta_n_nonincreasing_in_n() {
        let p = dist(vec![r(1, 6), r(1, 3), r(1, 2)]);
        let q = dist(vec![r(1, 2), r(1, 3), r(1, 6)]);
        let prof = ratio_profile(&p, &q);
        let mut prev = r(2, 1);
        for n in 1..=12 {
            let b = beta_n(&prof, n).unwrap();
            assert!(b <= prev);
            prev = b;
        }
    }

    #[test]
    fn advantage_identity_case() {
        let u = DiscreteDistribution::<Exact>::uniform(3, Exact).unwrap();
        let rep = advantage(&u, &u, 7).unwrap();
        assert_eq!(rep.adv_plus, r(0, 1));
        assert_eq!(rep.adv_times, r(1, 1));
    }

    #[test]
    fn advantage_lower_tightness_family() {
        // P=(0,1), Q=(p,1-p), p=1/10, n=3:
        // adv_plus = (p - p^n)/((1-p) n) = (0.1 - 0.001)/(0.9 * 3) = 11/300
        let p = dist(vec![r(0, 1), r(1, 1)]);
        let q = dist(vec![r(1, 10), r(9, 10)]);
        let rep = advantage(&p, &q, 3).unwrap();
        assert_eq!(rep.adv_plus, r(11, 300));
    }

    #[test]
    fn advantage_upper_tightness_family() {
        // P=(p,1-p), Q=(0,1), n=10, p=3/10: adv_plus = (1 - 1/n) p = 27/100
        let p = dist(vec![r(3, 10), r(7, 10)]);
        let q = dist(vec![r(0, 1), r(1, 1)]);
        let rep = advantage(&p, &q, 10).unwrap();
        assert_eq!(rep.adv_plus, r(27, 100));
        assert_eq!(rep.beta, r(37, 100));
    }

    #[test]
    fn advantage_allows_n_equal_one() {
        let p = dist(vec![r(1, 2), r(1, 2)]);
        let q = dist(vec![r(0, 1), r(1, 1)]);
        let rep = advantage(&p, &q, 1).unwrap();
        assert_eq!(rep.beta, r(1, 1));
        assert_eq!(rep.adv_plus, r(0, 1));
    }

    #[test]
    fn asymptotics_reads_profile_quantities() {
        let p = dist(vec![r(3, 4), r(1, 4)]);
        let q = dist(vec![r(1, 4), r(3, 4)]);
        let rep = asymptotics(&p, &q);
        assert_eq!(*rep.f_inf(), r(0, 1));
        assert_eq!(*rep.max_ratio(), r(3, 1));

        let p = dist(vec![r(1, 2), r(1, 2)]);
        let q = dist(vec![r(0, 1), r(1, 1)]);
        let rep = asymptotics(&p, &q);
        assert_eq!(*rep.f_inf(), r(1, 2));
        assert_eq!(*rep.max_ratio(), r(1, 2));
    }

    #[test]
    fn asymptotics_remainder_zero_for_identical() {
        let u = DiscreteDistribution::<Exact>::uniform(4, Exact).unwrap();
        let rep = asymptotics(&u, &u);
        for n in [1u64, 2, 5, 20] {
            assert_eq!(rep.remainder(n).unwrap(), r(0, 1));
        }
    }

    #[test]
    fn example1_single_user_is_certain() {
        for m in [2usize, 17, 100] {
            assert_eq!(
                beta_n_example1::<Exact>(1, m, Exact).unwrap(),
                BigRational::one()
            );
        }
    }

    #[test]
    fn example1_converges_to_closed_form() {
        let target = |n: f64| 1.5 / n - 1.0 / (n * (n + 1.0));
        let b = beta_n_example1::<Float>(10, 2000, Float::default()).unwrap();
        assert!((b - target(10.0)).abs() <= 1e-3);
        let b = beta_n_example1::<Float>(20, 2000, Float::default()).unwrap();
        assert!((b - target(20.0)).abs() <= 1e-3);
    }

    #[test]
    fn example1_rejects_bad_arguments() {
        assert!(matches!(
            beta_n_example1::<Exact>(0, 10, Exact),
            Err(Error::ZeroUsers)
        ));
        assert!(matches!(
            beta_n_example1::<Exact>(3, 1, Exact),
            Err(Error::TooFewBins(1))
        ));
    }
}
