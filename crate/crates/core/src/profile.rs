//! Likelihood-ratio profiles: the distribution of P(y)/Q(y) under P and Q.
//!
//! Grouping the support of a pair (P, Q) by the value of the likelihood
//! ratio is the single transformation behind every success-probability
//! formula here. An atom records one ratio value t together with the P-mass
//! and Q-mass of its ratio class; P-mass on labels where Q vanishes is kept
//! separately as `f_inf` (the certainty region of the attack).

use num::{One, Zero};

use crate::dist::{union_aligned, DiscreteDistribution};
use crate::numeric::NumericMode;

/// One ratio class: all labels with P(y)/Q(y) equal to `t` (up to the
/// mode's tie rule). `f_mass = t * g_mass` holds per construction.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioAtom<V> {
    pub t: V,
    pub f_mass: V,
    pub g_mass: V,
}

/// Grouped likelihood-ratio atoms plus the P-mass where Q is zero.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioProfile<M: NumericMode> {
    atoms: Vec<RatioAtom<M::Value>>,
    f_inf: M::Value,
    max_ratio: M::Value,
    mode: M,
}

impl<M: NumericMode> RatioProfile<M> {
    /// Atoms in strictly increasing ratio order.
    pub fn atoms(&self) -> &[RatioAtom<M::Value>] {
        &self.atoms
    }

    /// P-mass on labels with Q(y) = 0.
    pub fn f_inf(&self) -> &M::Value {
        &self.f_inf
    }

    /// Largest finite ratio (0 when there is no atom above t = 0).
    pub fn max_ratio(&self) -> &M::Value {
        &self.max_ratio
    }

    pub fn mode(&self) -> &M {
        &self.mode
    }

    /// G(t) = Pr_{y~Q}[ratio <= t]; a right-continuous step function.
    pub fn cdf_g(&self, t: &M::Value) -> M::Value {
        let mut acc = M::Value::zero();
        for atom in &self.atoms {
            if &atom.t <= t || self.mode.tie_eq(&atom.t, t) {
                acc = acc + atom.g_mass.clone();
            } else {
                break;
            }
        }
        acc
    }

    /// Left-hand limit G(t-) = Pr_{y~Q}[ratio < t].
    pub fn cdf_g_left(&self, t: &M::Value) -> M::Value {
        let mut acc = M::Value::zero();
        for atom in &self.atoms {
            if &atom.t < t && !self.mode.tie_eq(&atom.t, t) {
                acc = acc + atom.g_mass.clone();
            } else {
                break;
            }
        }
        acc
    }

    /// Exact area under the step function G over [a, b].
    pub fn integral_g(&self, a: &M::Value, b: &M::Value) -> M::Value {
        assert!(
            *a >= M::Value::zero() && b >= a,
            "integration bounds must satisfy 0 <= a <= b"
        );
        let mut total = M::Value::zero();
        let mut g_acc = M::Value::zero();
        let mut cursor = a.clone();
        for atom in &self.atoms {
            if atom.t <= *a {
                g_acc = g_acc + atom.g_mass.clone();
                continue;
            }
            if atom.t >= *b {
                break;
            }
            // G is constant (= g_acc) on [cursor, atom.t)
            total = total + g_acc.clone() * (atom.t.clone() - cursor.clone());
            cursor = atom.t.clone();
            g_acc = g_acc + atom.g_mass.clone();
        }
        total + g_acc * (b.clone() - cursor)
    }

    /// Asserts mass conservation and Property 1 (f = t * g per atom).
    fn check_invariants(&self) {
        let mut f_total = self.f_inf.clone();
        let mut g_total = M::Value::zero();
        for atom in &self.atoms {
            assert!(
                self.mode
                    .eq_with_slack(&atom.f_mass, &(atom.t.clone() * atom.g_mass.clone())),
                "ratio atom violates f = t * g: t={} f={} g={}",
                atom.t,
                atom.f_mass,
                atom.g_mass
            );
            f_total = f_total + atom.f_mass.clone();
            g_total = g_total + atom.g_mass.clone();
        }
        let one = M::Value::one();
        assert!(
            self.mode.eq_with_slack(&f_total, &one),
            "profile P-mass does not sum to 1: {f_total}"
        );
        assert!(
            self.mode.eq_with_slack(&g_total, &one),
            "profile Q-mass does not sum to 1: {g_total}"
        );
    }
}

/// Groups the union support of (P, Q) into ratio atoms.
///
/// Labels with Q = 0 and P > 0 feed `f_inf`; labels with P = 0 and Q > 0
/// form the atom at t = 0. Ratios equal under the mode's tie rule merge
/// into one atom whose t is re-derived as f_mass / g_mass, which keeps
/// Property 1 exact even after a tolerant merge.
pub fn ratio_profile<M: NumericMode>(
    p: &DiscreteDistribution<M>,
    q: &DiscreteDistribution<M>,
) -> RatioProfile<M> {
    let mode = p.mode().merge(q.mode());
    let zero = M::Value::zero();
    let mut f_inf = M::Value::zero();
    let mut pairs: Vec<(M::Value, M::Value, M::Value)> = Vec::new(); // (t, p, q)
    for (_, pv, qv) in union_aligned(p, q) {
        if qv == zero {
            if pv > zero {
                f_inf = f_inf + pv;
            }
            continue;
        }
        let t = pv.clone() / qv.clone();
        pairs.push((t, pv, qv));
    }
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("ratios are comparable"));

    let mut atoms: Vec<RatioAtom<M::Value>> = Vec::new();
    let mut idx = 0;
    while idx < pairs.len() {
        let rep = pairs[idx].0.clone();
        let mut f_mass = M::Value::zero();
        let mut g_mass = M::Value::zero();
        while idx < pairs.len() && mode.tie_eq(&rep, &pairs[idx].0) {
            f_mass = f_mass + pairs[idx].1.clone();
            g_mass = g_mass + pairs[idx].2.clone();
            idx += 1;
        }
        // mass-weighted ratio of the merged class
        let t = f_mass.clone() / g_mass.clone();
        atoms.push(RatioAtom { t, f_mass, g_mass });
    }

    let max_ratio = atoms
        .last()
        .map(|a| a.t.clone())
        .unwrap_or_else(M::Value::zero);
    let profile = RatioProfile {
        atoms,
        f_inf,
        max_ratio,
        mode,
    };
    profile.check_invariants();
    profile
}

/// Ranks union-support rows `(label, p, q)` by likelihood ratio with the
/// same grouping rule `ratio_profile` uses. Rows in the same atom share a
/// rank; rows with q = 0 and p > 0 get `usize::MAX` (the certainty class
/// above every finite ratio). Simulated adversaries rank by this value so
/// the estimator targets exactly the analytic tie-aware quantity.
pub fn rank_by_ratio<M: NumericMode>(
    rows: &[(String, M::Value, M::Value)],
    mode: &M,
) -> Vec<usize> {
    let zero = M::Value::zero();
    let mut ranks = vec![usize::MAX; rows.len()];
    let mut finite: Vec<(M::Value, usize)> = Vec::new();
    for (i, (_, pv, qv)) in rows.iter().enumerate() {
        if *qv > zero {
            finite.push((pv.clone() / qv.clone(), i));
        }
    }
    finite.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("ratios are comparable"));
    let mut rank = 0;
    let mut pos = 0;
    while pos < finite.len() {
        let rep = finite[pos].0.clone();
        while pos < finite.len() && mode.tie_eq(&rep, &finite[pos].0) {
            ranks[finite[pos].1] = rank;
            pos += 1;
        }
        rank += 1;
    }
    ranks
}
