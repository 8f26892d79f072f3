//! Exact exponent algebra for kinetic-transport Strichartz triplets.
//!
//! All exponents are stored as reciprocals, so `0` encodes an infinite
//! exponent and every relation in play becomes affine. Everything here is
//! exact rational arithmetic; no floating point.
//!
//! The module covers: KT-admissibility and endpoints, the one-parameter
//! solvable family that closes the small-data fixed point, its conjugate
//! triplet, the companion pair used to control the loss term, the local
//! wellposedness family, the weighted scaling relations for gain/loss
//! estimates, and the velocity weight exponent.

use crate::rational::Rational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Spatial dimension; only 2 and 3 are meaningful here.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceDim {
    Two,
    Three,
}

impl SpaceDim {
    pub fn n(self) -> i64 {
        match self {
            SpaceDim::Two => 2,
            SpaceDim::Three => 3,
        }
    }

    fn n_rat(self) -> Rational {
        Rational::from_integer(self.n())
    }
}

/// Reciprocal exponent triplet `(1/q, 1/r, 1/p)` for the mixed norm
/// `L^q_t L^r_x L^p_v`. Components lie in `[0, 1]`; `0` encodes `∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub q_inv: Rational,
    pub r_inv: Rational,
    pub p_inv: Rational,
}

/// Velocity weight data: the exponent `ℓ`, the kinetic exponent `γ` and the
/// small `ε` standing in for the `+` in `ℓ_γ = (1+γ)⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub ell: Rational,
    pub gamma: Rational,
    pub eps: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExponentError {
    #[error("reciprocal exponent {0} outside [0, 1]")]
    OutOfRange(Rational),
    #[error("1/p = {0} outside the open solvable interval (1/N, (N+1)/N^2)")]
    NotInSolvableInterval(Rational),
    #[error("triplet is not a solvable triplet")]
    NotSolvable,
    #[error("gamma = {0} outside the admissible range")]
    GammaOutOfRange(Rational),
    #[error("alpha = {0} outside the open interval (1/2, (N+1)/(2N))")]
    AlphaOutOfRange(Rational),
    #[error("eps = {0} must be positive")]
    NonPositiveEps(Rational),
    #[error("weight exponent {0} violates the bound ell < 3/2")]
    WeightTooLarge(Rational),
}

impl Triplet {
    /// Builds a triplet, rejecting reciprocals outside `[0, 1]`.
    pub fn new(q_inv: Rational, r_inv: Rational, p_inv: Rational) -> Result<Self, ExponentError> {
        for c in [q_inv, r_inv, p_inv] {
            if c.is_negative() || c > Rational::one() {
                return Err(ExponentError::OutOfRange(c));
            }
        }
        Ok(Triplet {
            q_inv,
            r_inv,
            p_inv,
        })
    }

    /// Hölder-dual triplet: each reciprocal `x` is replaced by `1 - x`.
    pub fn dual(&self) -> Triplet {
        Triplet {
            q_inv: Rational::one() - self.q_inv,
            r_inv: Rational::one() - self.r_inv,
            p_inv: Rational::one() - self.p_inv,
        }
    }
}

/// Reciprocal of the harmonic mean `a = HM(p, r)`, i.e. `(1/p + 1/r) / 2`.
pub fn harmonic_mean(t: &Triplet) -> Rational {
    (t.p_inv + t.r_inv) / Rational::from_integer(2)
}

/// Reciprocals of the exact window bounds `p*(a)` and `r*(a)`, split at
/// `a = (N+1)/N`. Takes and returns reciprocals; `a_inv = 0` encodes `a = ∞`.
fn window_bounds(a_inv: Rational, d: SpaceDim) -> (Rational, Rational) {
    let n = d.n_rat();
    let split = n / (n + Rational::one());
    if a_inv <= split {
        // a >= (N+1)/N: p* = Na/(N+1), r* = Na/(N-1)
        let p_star_inv = (n + Rational::one()) / n * a_inv;
        let r_star_inv = (n - Rational::one()) / n * a_inv;
        (p_star_inv, r_star_inv)
    } else {
        // 1 <= a <= (N+1)/N: p* = 1, r* = a/(2-a)
        let r_star_inv = Rational::from_integer(2) * a_inv - Rational::one();
        (Rational::one(), r_star_inv)
    }
}

/// KT-admissibility: `1/q = (N/2)(1/p - 1/r)` together with the window
/// `p*(a) <= p <= a <= r <= r*(a)` around the harmonic mean `a = HM(p, r)`.
///
/// The `N = 1` exceptional triplet is unreachable for `N ∈ {2, 3}`.
pub fn is_kt_admissible(t: &Triplet, d: SpaceDim) -> bool {
    let half_n = d.n_rat() / Rational::from_integer(2);
    if t.q_inv != half_n * (t.p_inv - t.r_inv) {
        return false;
    }
    let a_inv = harmonic_mean(t);
    let (p_star_inv, r_star_inv) = window_bounds(a_inv, d);
    // In reciprocals the window reads 1/p* >= 1/p >= 1/a >= 1/r >= 1/r*.
    p_star_inv >= t.p_inv && t.p_inv >= a_inv && a_inv >= t.r_inv && t.r_inv >= r_star_inv
}

/// Whether `(q, r, p) = (a, r*(a), p*(a))` for some `(N+1)/N <= a < ∞`.
/// These triplets sit exactly where the Strichartz estimate fails.
pub fn is_endpoint(t: &Triplet, d: SpaceDim) -> bool {
    let a_inv = harmonic_mean(t);
    if a_inv.is_zero() {
        return false; // a = ∞ excluded
    }
    let n = d.n_rat();
    if a_inv > n / (n + Rational::one()) {
        return false; // a < (N+1)/N
    }
    let (p_star_inv, r_star_inv) = window_bounds(a_inv, d);
    t.q_inv == a_inv && t.r_inv == r_star_inv && t.p_inv == p_star_inv
}

/// The solvable family: for `1/N < 1/p < (N+1)/N²` returns the triplet with
/// `1/q = N/p - 1` and `1/r = 2/N - 1/p`. The output is KT-admissible and
/// never an endpoint.
pub fn solvable_triplet(p_inv: Rational, d: SpaceDim) -> Result<Triplet, ExponentError> {
    let n = d.n_rat();
    let lo = Rational::one() / n;
    let hi = (n + Rational::one()) / (n * n);
    if p_inv <= lo || p_inv >= hi {
        return Err(ExponentError::NotInSolvableInterval(p_inv));
    }
    let q_inv = n * p_inv - Rational::one();
    let r_inv = Rational::from_integer(2) / n - p_inv;
    Triplet::new(q_inv, r_inv, p_inv)
}

fn is_solvable(t: &Triplet, d: SpaceDim) -> bool {
    matches!(solvable_triplet(t.p_inv, d), Ok(s) if s == *t)
}

/// Conjugate triplet `(1/q̃', 1/r̃', 1/p̃')` of a solvable triplet, for the
/// scaling-critical kernel `γ = 2 - N`:
/// `1/q̃' = 2/q`, `1/r̃' = 2/r`, `1/p̃' = 2/p - 1 - γ/N`.
///
/// Preserves the harmonic mean exactly and its dual is KT-admissible.
pub fn conjugate_triplet(t: &Triplet, d: SpaceDim) -> Result<Triplet, ExponentError> {
    if !is_solvable(t, d) {
        return Err(ExponentError::NotSolvable);
    }
    let n = d.n_rat();
    let gamma = Rational::from_integer(2) - n;
    let two = Rational::from_integer(2);
    let q_inv = two * t.q_inv;
    let r_inv = two * t.r_inv;
    let p_inv = two * t.p_inv - Rational::one() - gamma / n;
    Triplet::new(q_inv, r_inv, p_inv)
}

/// Companion triplets for closing the loss term, `N = 3` only.
///
/// Returns `((q₂, r₂, p₂), (q̃'₂, r̃'₂, p̃'₂))` with
/// `1/r₂ = (12+γ)/30`, `1/p₂ = (20-γ)/30`, `1/q₂ = (3/2)(1/p₂ - 1/r₂)`
/// and `1/p̃'₂ = 1/p + 1/p₂ - 2/3`, `1/r̃'₂ = 1/r + 1/r₂`,
/// `1/q̃'₂ = 1/q + 1/q₂`. Both harmonic means equal `15/8` and the strict
/// ordering `1/p < 1/p̃'₂ < 1/p₂` holds.
pub fn companion_triplets(
    gamma: Rational,
    t: &Triplet,
) -> Result<(Triplet, Triplet), ExponentError> {
    if gamma < -Rational::one() || !gamma.is_negative() {
        return Err(ExponentError::GammaOutOfRange(gamma));
    }
    if !is_solvable(t, SpaceDim::Three) {
        return Err(ExponentError::NotSolvable);
    }
    let thirty = Rational::from_integer(30);
    let r2_inv = (Rational::from_integer(12) + gamma) / thirty;
    let p2_inv = (Rational::from_integer(20) - gamma) / thirty;
    // The admissibility relation pins 1/q2; it reduces to 1/2 at gamma = -1.
    let q2_inv = Rational::ratio(3, 2) * (p2_inv - r2_inv);
    let companion = Triplet::new(q2_inv, r2_inv, p2_inv)?;
    let tilde = Triplet::new(
        t.q_inv + q2_inv,
        t.r_inv + r2_inv,
        t.p_inv + p2_inv - Rational::ratio(2, 3),
    )?;
    Ok((companion, tilde))
}

/// Local wellposedness family: for `1/2 < α < (N+1)/(2N)` and
/// `-N < γ < 2-N`, returns the triplet with reciprocals
/// `((2α-1)(γ+N)/2, (1-α)(γ+N)/N, α(γ+N)/N)` and the contraction gain
/// `β = ((2-N) - γ)/2 > 0`.
pub fn local_triplet(
    alpha: Rational,
    gamma: Rational,
    d: SpaceDim,
) -> Result<(Triplet, Rational), ExponentError> {
    let n = d.n_rat();
    let two = Rational::from_integer(2);
    if alpha <= Rational::ratio(1, 2) || alpha >= (n + Rational::one()) / (two * n) {
        return Err(ExponentError::AlphaOutOfRange(alpha));
    }
    if gamma <= -n || gamma >= two - n {
        return Err(ExponentError::GammaOutOfRange(gamma));
    }
    let shifted = gamma + n;
    let q_inv = (two * alpha - Rational::one()) * shifted / two;
    let r_inv = (Rational::one() - alpha) * shifted / n;
    let p_inv = alpha * shifted / n;
    let beta = (two - n - gamma) / two;
    Ok((Triplet::new(q_inv, r_inv, p_inv)?, beta))
}

/// Checks the weighted scaling relation
/// `1/p_m + 1/q_m + 1/m = 1 + γ/N + 1/r_m` together with the size
/// conditions: for the gain variant `1/p_m + 1/m < 1` and
/// `1/q_m + 1/m < 1`; for the loss variant `1/p_m < 1/r_m` (equivalently
/// `1/p_m + 1/r_m' < 1`) and `1/q_m + 1/m < 1`.
///
/// Reciprocals outside `(0, 1)` fail the check.
#[allow(clippy::too_many_arguments)]
pub fn check_weighted_scaling(
    p_m_inv: Rational,
    q_m_inv: Rational,
    m_inv: Rational,
    r_m_inv: Rational,
    gamma: Rational,
    d: SpaceDim,
    loss_variant: bool,
) -> bool {
    let one = Rational::one();
    for c in [p_m_inv, q_m_inv, m_inv, r_m_inv] {
        if !(Rational::zero() < c && c < one) {
            return false;
        }
    }
    let n = d.n_rat();
    if p_m_inv + q_m_inv + m_inv != one + gamma / n + r_m_inv {
        return false;
    }
    if loss_variant {
        p_m_inv < r_m_inv && q_m_inv + m_inv < one
    } else {
        p_m_inv + m_inv < one && q_m_inv + m_inv < one
    }
}

/// The velocity weight exponent `ℓ_γ`: `0` at `γ = -1`, otherwise
/// `(1 + γ) + ε`, required to stay below `3/2`.
pub fn weight_exponent(gamma: Rational, eps: Rational) -> Result<Rational, ExponentError> {
    if gamma < -Rational::one() || !gamma.is_negative() {
        return Err(ExponentError::GammaOutOfRange(gamma));
    }
    if !(eps > Rational::zero()) {
        return Err(ExponentError::NonPositiveEps(eps));
    }
    if gamma == -Rational::one() {
        return Ok(Rational::zero());
    }
    let ell = Rational::one() + gamma + eps;
    if ell >= Rational::ratio(3, 2) {
        return Err(ExponentError::WeightTooLarge(ell));
    }
    Ok(ell)
}

impl WeightSpec {
    /// Builds the weight spec with `ell = ℓ_γ(γ, ε)`.
    pub fn for_gamma(gamma: Rational, eps: Rational) -> Result<Self, ExponentError> {
        Ok(WeightSpec {
            ell: weight_exponent(gamma, eps)?,
            gamma,
            eps,
        })
    }

    /// The unweighted spec used for `γ = -1`.
    pub fn unweighted() -> Self {
        WeightSpec {
            ell: Rational::zero(),
            gamma: -Rational::one(),
            eps: Rational::ratio(1, 100),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn triplet(q: Rational, rr: Rational, p: Rational) -> Triplet {
        Triplet::new(q, rr, p).unwrap()
    }

    #[test]
    fn harmonic_mean_examples() {
        // Companion triplet of the loss-closing argument: a2 = 15/8.
        let t = triplet(r(1, 2), r(11, 30), r(21, 30));
        assert_eq!(harmonic_mean(&t), r(16, 30));
        // Equal exponents.
        let t = triplet(r(0, 1), r(1, 3), r(1, 3));
        assert_eq!(harmonic_mean(&t), r(1, 3));
        // One exponent infinite.
        let t = triplet(r(1, 2), r(0, 1), r(1, 2));
        assert_eq!(harmonic_mean(&t), r(1, 4));
    }

    #[test]
    fn kt_admissibility_examples() {
        let d = SpaceDim::Three;
        // (q, r, p) = (2, 30/11, 30/21)
        assert!(is_kt_admissible(&triplet(r(1, 2), r(11, 30), r(21, 30)), d));
        // (∞, a, a) for a few a >= 1
        for a_inv in [r(0, 1), r(1, 5), r(1, 2), r(1, 1)] {
            assert!(is_kt_admissible(&triplet(r(0, 1), a_inv, a_inv), d));
        }
        // order reversal r < p fails
        assert!(!is_kt_admissible(
            &triplet(r(1, 2), r(21, 30), r(11, 30)),
            d
        ));
    }

    #[test]
    fn endpoint_examples() {
        let d = SpaceDim::Three;
        // a = 2: (q, r, p) = (2, 3, 3/2) via r* = 3a/2, p* = 3a/4
        let ep = triplet(r(1, 2), r(1, 3), r(2, 3));
        assert!(is_endpoint(&ep, d));
        assert!(is_kt_admissible(&ep, d));
        // solvable-family member is not an endpoint
        assert!(!is_endpoint(&triplet(r(1, 2), r(11, 30), r(21, 30)), d));
        // q must be finite and equal to a
        assert!(!is_endpoint(&triplet(r(0, 1), r(1, 3), r(1, 3)), d));
    }

    #[test]
    fn solvable_family_examples() {
        let d = SpaceDim::Three;
        let t = solvable_triplet(r(2, 5), d).unwrap();
        assert_eq!(t, triplet(r(1, 5), r(4, 15), r(2, 5)));
        assert!(is_kt_admissible(&t, d));
        assert!(!is_endpoint(&t, d));

        // boundaries of the open interval rejected
        assert!(solvable_triplet(r(1, 3), d).is_err());
        assert!(solvable_triplet(r(4, 9), d).is_err());

        let t = solvable_triplet(r(13, 30), d).unwrap();
        assert_eq!(t, triplet(r(3, 10), r(7, 30), r(13, 30)));
        assert!(is_kt_admissible(&t, d));
    }

    #[test]
    fn solvable_grid_invariants() {
        // 100 rationals in (1/3, 4/9): p_inv = 1/3 + k/(101*9), k = 1..=100
        let d = SpaceDim::Three;
        for k in 1..=100 {
            let p_inv = r(1, 3) + r(k, 101 * 9);
            let t = solvable_triplet(p_inv, d).unwrap();
            assert!(is_kt_admissible(&t, d), "inadmissible at {p_inv}");
            assert!(!is_endpoint(&t, d), "endpoint at {p_inv}");
            assert!(t.q_inv < r(1, 2), "q bound violated at {p_inv}");
            let c = conjugate_triplet(&t, d).unwrap();
            assert_eq!(harmonic_mean(&c), harmonic_mean(&t));
        }
    }

    #[test]
    fn conjugate_examples() {
        let d = SpaceDim::Three;
        let t = solvable_triplet(r(2, 5), d).unwrap();
        let c = conjugate_triplet(&t, d).unwrap();
        assert_eq!(c, triplet(r(2, 5), r(8, 15), r(2, 15)));
        // harmonic mean preserved: 2/15 + 8/15 = 2/5 + 4/15 = 2/3
        assert_eq!(c.p_inv + c.r_inv, r(2, 3));
        // the dual triplet satisfies the admissibility relation (2.23)
        let dual = c.dual();
        assert_eq!(dual.q_inv, r(3, 5));
        assert!(is_kt_admissible(&dual, d));
        // non-solvable input rejected
        let bad = triplet(r(1, 2), r(11, 30), r(21, 30));
        assert_eq!(conjugate_triplet(&bad, d), Err(ExponentError::NotSolvable));
    }

    #[test]
    fn companion_examples() {
        let t = solvable_triplet(r(2, 5), SpaceDim::Three).unwrap();
        let (c2, tilde) = companion_triplets(-Rational::one(), &t).unwrap();
        assert_eq!(c2, triplet(r(1, 2), r(11, 30), r(21, 30)));
        // 1/q̃'₂ = 1/q + 1/q₂ = 1/5 + 1/2 = 7/10; the v and x components
        // are 1/p + 1/30 and 1/r + 11/30.
        assert_eq!(tilde, triplet(r(7, 10), r(19, 30), r(13, 30)));
        // strict ordering of the v-exponents
        assert!(t.p_inv < tilde.p_inv && tilde.p_inv < c2.p_inv);

        // gamma = -1/2 companion; q2 follows from the admissibility relation
        let (c2, _) = companion_triplets(r(-1, 2), &t).unwrap();
        assert_eq!((c2.r_inv, c2.p_inv), (r(23, 60), r(41, 60)));
        assert_eq!(c2.q_inv, r(9, 20));
        assert!(is_kt_admissible(&c2, SpaceDim::Three));

        assert!(companion_triplets(r(1, 2), &t).is_err());
        assert!(companion_triplets(r(-3, 2), &t).is_err());
    }

    #[test]
    fn companion_harmonic_mean_invariant() {
        let d = SpaceDim::Three;
        for k in 1..=20 {
            let p_inv = r(1, 3) + r(k, 21 * 9);
            let t = solvable_triplet(p_inv, d).unwrap();
            for g in [r(-1, 1), r(-1, 2), r(-1, 10), r(-99, 100)] {
                let (c2, tilde) = companion_triplets(g, &t).unwrap();
                assert_eq!(c2.p_inv + c2.r_inv, r(16, 15));
                assert_eq!(tilde.p_inv + tilde.r_inv, r(16, 15));
                assert!(is_kt_admissible(&c2, d));
                assert!(t.p_inv < tilde.p_inv && tilde.p_inv < c2.p_inv);
                // the dual of the tilde triplet is admissible away from the
                // lower edge of the solvable interval
                if t.p_inv >= (r(34, 1) + r(3, 1) * g) / r(90, 1) {
                    assert!(is_kt_admissible(&tilde.dual(), d));
                }
            }
        }
    }

    #[test]
    fn local_triplet_examples() {
        let (t, beta) = local_triplet(r(5, 8), r(-3, 2), SpaceDim::Three).unwrap();
        assert_eq!(t, triplet(r(3, 16), r(3, 16), r(5, 16)));
        assert_eq!(beta, r(1, 4));
        assert!(is_kt_admissible(&t, SpaceDim::Three));

        // gamma must satisfy gamma < 2 - N strictly
        assert!(local_triplet(r(5, 8), r(-1, 1), SpaceDim::Three).is_err());

        let (t, beta) = local_triplet(r(9, 16), r(-1, 1), SpaceDim::Two).unwrap();
        assert_eq!(t, triplet(r(1, 16), r(7, 32), r(9, 32)));
        assert_eq!(beta, r(1, 2));
        assert!(is_kt_admissible(&t, SpaceDim::Two));
    }

    #[test]
    fn local_triplet_relation_invariant() {
        for d in [SpaceDim::Three, SpaceDim::Two] {
            let n = d.n();
            for j in 1..=10 {
                // alpha in (1/2, (N+1)/(2N)), gamma in (-N, 2-N), both interior
                let alpha = r(1, 2) + (r(n + 1, 2 * n) - r(1, 2)) * r(j, 11);
                for k in 1..=10 {
                    let gamma = r(2 - n, 1) - r(k, 11) * Rational::from_integer(2);
                    let (t, beta) = local_triplet(alpha, gamma, d).unwrap();
                    assert_eq!(t.q_inv, d.n_rat() / r(2, 1) * (t.p_inv - t.r_inv));
                    assert!(beta > Rational::zero());
                    assert!(is_kt_admissible(&t, d));
                }
            }
        }
    }

    #[test]
    fn weighted_scaling_examples() {
        let d = SpaceDim::Three;
        let g = r(-1, 2);
        assert!(!check_weighted_scaling(
            r(2, 5),
            r(2, 5),
            r(1, 6),
            r(1, 10),
            g,
            d,
            false
        ));
        assert!(check_weighted_scaling(
            r(2, 5),
            r(2, 5),
            r(1, 6),
            r(2, 15),
            g,
            d,
            false
        ));
        // loss variant requires 1/p < 1/r
        assert!(!check_weighted_scaling(
            r(2, 5),
            r(2, 5),
            r(1, 6),
            r(2, 15),
            g,
            d,
            true
        ));
    }

    #[test]
    fn weight_exponent_examples() {
        assert_eq!(
            weight_exponent(-Rational::one(), r(1, 100)).unwrap(),
            Rational::zero()
        );
        assert_eq!(weight_exponent(r(-1, 2), r(1, 100)).unwrap(), r(51, 100));
        // 99/100 + 51/100 = 3/2 breaks the ell < 3/2 bound
        assert!(matches!(
            weight_exponent(r(-1, 100), r(51, 100)),
            Err(ExponentError::WeightTooLarge(_))
        ));
        // just under the bound is accepted: 99/100 + 1/2 = 149/100 < 3/2
        assert_eq!(weight_exponent(r(-1, 100), r(1, 2)).unwrap(), r(149, 100));
        assert!(weight_exponent(r(-1, 2), Rational::zero()).is_err());
    }
}
