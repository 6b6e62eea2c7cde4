//! Truth values: finite unions of closed subintervals of [0,1].
//!
//! A fuzzy derivation does not have to settle on one number; its truth value
//! is a Borel set over the unit interval, kept here in canonical form
//! (sorted, pairwise disjoint, non-touching intervals). The lattice
//! operations on these sets are the ground layer for aggregation, the
//! solver and the fixpoint semantics.

use std::fmt;
use thiserror::Error;

/// Tolerance used when merging adjacent intervals and in approximate
/// comparisons. Two endpoints closer than this are treated as equal.
pub const EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TruthError {
    #[error("invalid truth interval [{lo},{hi}]: need 0 <= lo <= hi <= 1")]
    BadInterval { lo: f64, hi: f64 },
}

/// A closed subinterval of the unit interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Interval, TruthError> {
        if lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi && hi <= 1.0 {
            Ok(Interval { lo, hi })
        } else {
            Err(TruthError::BadInterval { lo, hi })
        }
    }

    pub fn point(x: f64) -> Result<Interval, TruthError> {
        Interval::new(x, x)
    }

    /// Constructor for endpoints already known to be valid.
    pub(crate) fn raw(lo: f64, hi: f64) -> Interval {
        debug_assert!(0.0 <= lo && lo <= hi && hi <= 1.0, "raw({lo},{hi})");
        Interval { lo, hi }
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn is_point(self) -> bool {
        self.lo == self.hi
    }

    /// Interval inclusion: `self` lies inside `outer`, tolerant at endpoints.
    pub fn included_in(self, outer: Interval) -> bool {
        outer.lo <= self.lo + EPS && self.hi <= outer.hi + EPS
    }

    /// Closed-interval membership, tolerant at endpoints.
    pub fn contains(self, x: f64) -> bool {
        self.lo - EPS <= x && x <= self.hi + EPS
    }

    pub fn approx_eq(self, other: Interval, eps: f64) -> bool {
        (self.lo - other.lo).abs() <= eps && (self.hi - other.hi).abs() <= eps
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_point() {
            write!(f, "{}", self.lo)
        } else {
            write!(f, "[{},{}]", self.lo, self.hi)
        }
    }
}

/// A finite union of closed subintervals of [0,1], in canonical form.
///
/// Canonical means the intervals are sorted, pairwise disjoint and separated
/// by more than [`EPS`]; touching or overlapping inputs are merged on
/// construction. The empty set is allowed and stands for a failed
/// derivation (an unsolvable truth constraint).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BorelSet {
    parts: Vec<Interval>,
}

impl BorelSet {
    pub fn empty() -> BorelSet {
        BorelSet { parts: Vec::new() }
    }

    /// The whole unit interval [0,1].
    pub fn full() -> BorelSet {
        BorelSet {
            parts: vec![Interval::raw(0.0, 1.0)],
        }
    }

    pub fn point(x: f64) -> Result<BorelSet, TruthError> {
        Ok(BorelSet {
            parts: vec![Interval::point(x)?],
        })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<BorelSet, TruthError> {
        Ok(BorelSet {
            parts: vec![Interval::new(lo, hi)?],
        })
    }

    /// Canonicalizing constructor: sorts the intervals and merges any that
    /// overlap or touch (gap <= [`EPS`]).
    pub fn from_intervals<I: IntoIterator<Item = Interval>>(parts: I) -> BorelSet {
        let mut parts: Vec<Interval> = parts.into_iter().collect();
        parts.sort_by(|a, b| {
            a.lo.partial_cmp(&b.lo)
                .unwrap()
                .then(a.hi.partial_cmp(&b.hi).unwrap())
        });
        let mut merged: Vec<Interval> = Vec::with_capacity(parts.len());
        for iv in parts {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi + EPS => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => merged.push(iv),
            }
        }
        BorelSet { parts: merged }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Smallest element of the set, if any.
    pub fn inf(&self) -> Option<f64> {
        self.parts.first().map(|iv| iv.lo)
    }

    /// Largest element of the set, if any.
    pub fn sup(&self) -> Option<f64> {
        self.parts.last().map(|iv| iv.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.parts.iter().any(|iv| iv.contains(x))
    }

    pub fn union(&self, other: &BorelSet) -> BorelSet {
        BorelSet::from_intervals(self.parts.iter().chain(&other.parts).copied())
    }

    pub fn intersect(&self, other: &BorelSet) -> BorelSet {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.parts.len() && j < other.parts.len() {
            let a = self.parts[i];
            let b = other.parts[j];
            let lo = a.lo.max(b.lo);
            let hi = a.hi.min(b.hi);
            if lo <= hi + EPS {
                // Overlaps within tolerance; a sliver with lo slightly above
                // hi collapses to a degenerate interval.
                out.push(Interval::raw(lo.min(hi), hi.max(lo)));
            }
            if a.hi <= b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        BorelSet::from_intervals(out)
    }

    /// Borel inclusion: every interval of `self` lies inside a single
    /// interval of `other`. On canonical forms this coincides with
    /// pointwise set containment.
    pub fn included_in(&self, other: &BorelSet) -> bool {
        self.parts
            .iter()
            .all(|a| other.parts.iter().any(|b| a.included_in(*b)))
    }

    /// Structural equality with endpoint tolerance `eps`.
    pub fn approx_eq(&self, other: &BorelSet, eps: f64) -> bool {
        self.parts.len() == other.parts.len()
            && self
                .parts
                .iter()
                .zip(&other.parts)
                .all(|(a, b)| a.approx_eq(*b, eps))
    }

    /// Largest endpoint discrepancy against `other`; 1.0 when the interval
    /// counts differ (the sets are structurally incomparable).
    pub fn discrepancy(&self, other: &BorelSet) -> f64 {
        if self.parts.len() != other.parts.len() {
            return 1.0;
        }
        self.parts
            .iter()
            .zip(&other.parts)
            .map(|(a, b)| (a.lo - b.lo).abs().max((a.hi - b.hi).abs()))
            .fold(0.0, f64::max)
    }
}

impl fmt::Display for BorelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "empty");
        }
        for (k, iv) in self.parts.iter().enumerate() {
            if k > 0 {
                write!(f, "v")?;
            }
            write!(f, "{iv}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bs(parts: &[(f64, f64)]) -> BorelSet {
        BorelSet::from_intervals(parts.iter().map(|&(lo, hi)| Interval::new(lo, hi).unwrap()))
    }

    /// Membership in a raw interval list, independent of canonicalization.
    fn raw_member(parts: &[(f64, f64)], x: f64) -> bool {
        parts.iter().any(|&(lo, hi)| lo - EPS <= x && x <= hi + EPS)
    }

    fn grid() -> impl Iterator<Item = f64> {
        (0..=1000).map(|k| k as f64 / 1000.0)
    }

    fn assert_canonical(s: &BorelSet) {
        for iv in s.intervals() {
            assert!(0.0 <= iv.lo() && iv.lo() <= iv.hi() && iv.hi() <= 1.0);
        }
        for w in s.intervals().windows(2) {
            assert!(
                w[0].hi() + EPS < w[1].lo(),
                "intervals {} and {} touch or overlap",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn canonicalize_merges_overlapping() {
        let raw = [(0.4, 0.9), (0.2, 0.5)];
        let s = bs(&raw);
        assert_canonical(&s);
        assert_eq!(s.intervals().len(), 1);
        assert_eq!(s.intervals()[0].lo(), 0.2);
        assert_eq!(s.intervals()[0].hi(), 0.9);
        // Canonicalization must not change the point set.
        for x in grid() {
            assert_eq!(s.contains(x), raw_member(&raw, x), "at x={x}");
        }
    }

    #[test]
    fn canonicalize_merges_touching() {
        let s = bs(&[(0.0, 0.5), (0.5, 1.0)]);
        assert_eq!(s, BorelSet::full());
    }

    #[test]
    fn canonicalize_keeps_separated_intervals() {
        let raw = [(0.8, 1.0), (0.2, 0.5)];
        let s = bs(&raw);
        assert_canonical(&s);
        assert_eq!(s.intervals().len(), 2);
        assert_eq!(s.to_string(), "[0.2,0.5]v[0.8,1]");
        for x in grid() {
            assert_eq!(s.contains(x), raw_member(&raw, x), "at x={x}");
        }
    }

    #[test]
    fn union_merges_across_arguments() {
        let u = bs(&[(0.2, 0.5)]).union(&bs(&[(0.4, 0.9)]));
        assert_eq!(u, bs(&[(0.2, 0.9)]));
        assert_eq!(bs(&[(0.2, 0.5)]).union(&BorelSet::empty()), bs(&[(0.2, 0.5)]));
    }

    #[test]
    fn intersect_example() {
        let a = bs(&[(0.2, 0.5), (0.8, 1.0)]);
        let b = bs(&[(0.4, 0.9)]);
        let c = a.intersect(&b);
        assert_eq!(c, bs(&[(0.4, 0.5), (0.8, 0.9)]));
        // Pointwise oracle: x in a and x in b iff x in c.
        for x in grid() {
            assert_eq!(c.contains(x), a.contains(x) && b.contains(x), "at x={x}");
        }
    }

    #[test]
    fn intersect_disjoint_is_empty() {
        let c = bs(&[(0.0, 0.3)]).intersect(&bs(&[(0.6, 1.0)]));
        assert!(c.is_empty());
        assert_eq!(c.to_string(), "empty");
    }

    #[test]
    fn intersect_at_single_point() {
        let c = bs(&[(0.0, 0.3)]).intersect(&bs(&[(0.3, 1.0)]));
        assert_eq!(c, BorelSet::point(0.3).unwrap());
    }

    #[test]
    fn inclusion_examples() {
        assert!(bs(&[(0.2, 0.5)]).included_in(&bs(&[(0.1, 0.6)])));
        assert!(!bs(&[(0.2, 0.5), (0.8, 1.0)]).included_in(&bs(&[(0.1, 0.6)])));
        assert!(BorelSet::empty().included_in(&bs(&[(0.2, 0.3)])));
        // [0.3,0.7] fits inside the merge of [0,0.5] and [0.5,1].
        assert!(bs(&[(0.3, 0.7)]).included_in(&bs(&[(0.0, 0.5), (0.5, 1.0)])));
        // But not inside the same intervals kept apart.
        assert!(!bs(&[(0.3, 0.7)]).included_in(&bs(&[(0.0, 0.4), (0.6, 1.0)])));
    }

    #[test]
    fn inclusion_matches_pointwise_containment() {
        let pairs = [
            (bs(&[(0.2, 0.5)]), bs(&[(0.1, 0.6)])),
            (bs(&[(0.2, 0.5), (0.8, 1.0)]), bs(&[(0.1, 0.6)])),
            (bs(&[(0.3, 0.7)]), bs(&[(0.0, 0.5), (0.5, 1.0)])),
            (bs(&[(0.0, 0.1), (0.5, 0.6)]), bs(&[(0.0, 0.2), (0.4, 0.7)])),
            (bs(&[(0.0, 0.1), (0.5, 0.6)]), bs(&[(0.0, 0.2), (0.55, 0.7)])),
        ];
        for (u, v) in &pairs {
            let sampled = grid().all(|x| !u.contains(x) || v.contains(x));
            assert_eq!(u.included_in(v), sampled, "u={u} v={v}");
        }
    }

    #[test]
    fn constructor_rejects_bad_endpoints() {
        assert!(Interval::new(0.5, 0.2).is_err());
        assert!(Interval::new(-0.1, 0.2).is_err());
        assert!(Interval::new(0.5, 1.2).is_err());
        assert!(Interval::point(1.5).is_err());
        assert!(BorelSet::interval(0.9, 0.1).is_err());
        assert!(Interval::new(f64::NAN, 0.5).is_err());
    }

    #[test]
    fn rendering() {
        assert_eq!(BorelSet::point(0.7).unwrap().to_string(), "0.7");
        assert_eq!(bs(&[(0.2, 0.5)]).to_string(), "[0.2,0.5]");
        assert_eq!(bs(&[(0.2, 0.5), (0.8, 1.0)]).to_string(), "[0.2,0.5]v[0.8,1]");
        assert_eq!(BorelSet::empty().to_string(), "empty");
        assert_eq!(BorelSet::point(0.0).unwrap().to_string(), "0");
        assert_eq!(BorelSet::full().to_string(), "[0,1]");
    }

    #[test]
    fn approx_eq_tolerance() {
        let a = bs(&[(0.2, 0.5)]);
        let b = bs(&[(0.2 + 1e-10, 0.5)]);
        let c = bs(&[(0.2 + 1e-6, 0.5)]);
        assert!(a.approx_eq(&b, EPS));
        assert!(!a.approx_eq(&c, EPS));
        assert!(!a.approx_eq(&BorelSet::empty(), EPS));
    }

    #[test]
    fn extrema() {
        let s = bs(&[(0.2, 0.5), (0.8, 1.0)]);
        assert_eq!(s.inf(), Some(0.2));
        assert_eq!(s.sup(), Some(1.0));
        assert_eq!(BorelSet::empty().inf(), None);
    }
}
