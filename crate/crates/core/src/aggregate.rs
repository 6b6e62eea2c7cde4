//! Aggregation operators and their lifting to intervals and Borel sets.
//!
//! An aggregator is an n-ary function on [0,1] that fixes the boundary
//! tuples (all-zeros to 0, all-ones to 1) and is monotone in each argument.
//! It aggregates intervals endpoint-wise and Borel sets by aggregating
//! every combination of component intervals and taking the union.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::truth::{BorelSet, Interval};

/// Arities exercised by the registration-time checks.
const CHECKED_ARITIES: std::ops::RangeInclusive<usize> = 1..=4;
/// Random monotonicity probes per checked arity.
const MONOTONE_PROBES: usize = 64;
/// Tolerance for the registration checks.
const CHECK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregateError {
    #[error("aggregator `{0}` is already registered")]
    Duplicate(String),
    #[error("aggregator `{name}` breaks the boundary axiom at arity {arity}: f{input:?} = {got}, expected {expected}")]
    Boundary {
        name: String,
        arity: usize,
        input: Vec<f64>,
        got: f64,
        expected: f64,
    },
    #[error("aggregator `{name}` is not monotone at arity {arity}: f{lo:?} = {f_lo} but f{hi:?} = {f_hi}")]
    NotMonotone {
        name: String,
        arity: usize,
        lo: Vec<f64>,
        hi: Vec<f64>,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("aggregator `{name}` leaves [0,1] at arity {arity}: f{input:?} = {got}")]
    OutOfRange {
        name: String,
        arity: usize,
        input: Vec<f64>,
        got: f64,
    },
    #[error("aggregation needs at least one argument")]
    NoArguments,
}

/// A named aggregation operator.
pub struct Aggregator {
    name: String,
    point_fn: Box<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl std::fmt::Debug for Aggregator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Aggregator").field("name", &self.name).finish()
    }
}

impl Aggregator {
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Apply the underlying point function, clamped to [0,1].
    pub fn apply_points(&self, xs: &[f64]) -> Result<f64, AggregateError> {
        if xs.is_empty() {
            return Err(AggregateError::NoArguments);
        }
        Ok((self.point_fn)(xs).clamp(0.0, 1.0))
    }

    /// Endpoint-wise interval aggregation: lower ends in, lower end out.
    pub fn apply_intervals(&self, parts: &[Interval]) -> Result<Interval, AggregateError> {
        let los: Vec<f64> = parts.iter().map(|iv| iv.lo()).collect();
        let his: Vec<f64> = parts.iter().map(|iv| iv.hi()).collect();
        let lo = self.apply_points(&los)?;
        let hi = self.apply_points(&his)?;
        // Monotonicity gives lo <= hi; guard against float noise anyway.
        Ok(Interval::raw(lo.min(hi), hi.max(lo)))
    }

    /// Union aggregation: aggregate every combination of one component
    /// interval per argument set and canonicalize the union. Any empty
    /// argument makes the result empty.
    pub fn apply_sets(&self, sets: &[BorelSet]) -> Result<BorelSet, AggregateError> {
        if sets.is_empty() {
            return Err(AggregateError::NoArguments);
        }
        if sets.iter().any(|s| s.is_empty()) {
            return Ok(BorelSet::empty());
        }
        let mut out = Vec::new();
        let mut idx = vec![0usize; sets.len()];
        loop {
            let combo: Vec<Interval> = idx
                .iter()
                .zip(sets)
                .map(|(&k, s)| s.intervals()[k])
                .collect();
            out.push(self.apply_intervals(&combo)?);
            // Advance the mixed-radix index vector.
            let mut pos = sets.len();
            loop {
                if pos == 0 {
                    return Ok(BorelSet::from_intervals(out));
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < sets[pos].intervals().len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
}

/// A registry of aggregation operators, keyed by name.
///
/// Registration runs probabilistic sanity checks (boundary values and
/// monotonicity on random tuples of arity 1..=4) so that malformed
/// operators are rejected up front rather than corrupting derivations.
#[derive(Debug)]
pub struct Registry {
    ops: BTreeMap<String, Arc<Aggregator>>,
}

impl Registry {
    /// Registry with the built-in operators min, max, prod, luka and mean.
    pub fn with_builtins() -> Registry {
        let mut reg = Registry { ops: BTreeMap::new() };
        reg.register("min", |xs| xs.iter().copied().fold(f64::INFINITY, f64::min))
            .unwrap();
        reg.register("max", |xs| xs.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .unwrap();
        reg.register("prod", |xs| xs.iter().product()).unwrap();
        // Lukasiewicz t-norm, n-ary form; coincides with the binary left fold.
        reg.register("luka", |xs| {
            (xs.iter().sum::<f64>() - (xs.len() as f64 - 1.0)).max(0.0)
        })
        .unwrap();
        reg.register("mean", |xs| xs.iter().sum::<f64>() / xs.len() as f64)
            .unwrap();
        reg
    }

    pub fn register<F>(&mut self, name: &str, f: F) -> Result<(), AggregateError>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        if self.ops.contains_key(name) {
            return Err(AggregateError::Duplicate(name.to_string()));
        }
        check_axioms(name, &f)?;
        self.ops.insert(
            name.to_string(),
            Arc::new(Aggregator {
                name: name.to_string(),
                point_fn: Box::new(f),
            }),
        );
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<Arc<Aggregator>> {
        self.ops.get(name).cloned()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.ops.contains_key(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.ops.keys().map(|s| s.as_str())
    }
}

fn check_axioms<F: Fn(&[f64]) -> f64>(name: &str, f: &F) -> Result<(), AggregateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x46504c5f41474752); // stable probes
    for arity in CHECKED_ARITIES {
        for (input, expected) in [(vec![0.0; arity], 0.0), (vec![1.0; arity], 1.0)] {
            let got = f(&input);
            if (got - expected).abs() > CHECK_TOL {
                return Err(AggregateError::Boundary {
                    name: name.to_string(),
                    arity,
                    input,
                    got,
                    expected,
                });
            }
        }
        for _ in 0..MONOTONE_PROBES {
            let lo: Vec<f64> = (0..arity).map(|_| rng.gen::<f64>()).collect();
            let hi: Vec<f64> = lo
                .iter()
                .map(|&x| (x + rng.gen::<f64>() * (1.0 - x)).min(1.0))
                .collect();
            let (f_lo, f_hi) = (f(&lo), f(&hi));
            for (probe, val) in [(&lo, f_lo), (&hi, f_hi)] {
                if !(-CHECK_TOL..=1.0 + CHECK_TOL).contains(&val) {
                    return Err(AggregateError::OutOfRange {
                        name: name.to_string(),
                        arity,
                        input: probe.clone(),
                        got: val,
                    });
                }
            }
            if f_lo > f_hi + CHECK_TOL {
                return Err(AggregateError::NotMonotone {
                    name: name.to_string(),
                    arity,
                    lo,
                    hi,
                    f_lo,
                    f_hi,
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::truth::EPS;

    fn bs(parts: &[(f64, f64)]) -> BorelSet {
        BorelSet::from_intervals(parts.iter().map(|&(lo, hi)| Interval::new(lo, hi).unwrap()))
    }

    fn op(name: &str) -> Arc<Aggregator> {
        Registry::with_builtins().get(name).unwrap()
    }

    #[test]
    fn builtin_point_values() {
        // Direct-formula oracle values.
        assert!((op("min").apply_points(&[0.7, 0.6]).unwrap() - 0.6).abs() < 1e-12);
        assert!((op("max").apply_points(&[0.7, 0.6]).unwrap() - 0.7).abs() < 1e-12);
        assert!((op("prod").apply_points(&[0.5, 0.6]).unwrap() - 0.3).abs() < 1e-12);
        assert!((op("luka").apply_points(&[0.7, 0.6]).unwrap() - 0.3).abs() < 1e-12);
        assert!((op("luka").apply_points(&[0.3, 0.4]).unwrap()).abs() < 1e-12);
        assert!((op("mean").apply_points(&[0.4, 1.0]).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn unary_application_is_identity() {
        for name in ["min", "max", "prod", "luka", "mean"] {
            for x in [0.0, 0.3, 0.7, 1.0] {
                assert!(
                    (op(name).apply_points(&[x]).unwrap() - x).abs() < 1e-12,
                    "{name}({x})"
                );
            }
        }
    }

    #[test]
    fn nary_equals_binary_fold_for_tnorms() {
        let xs = [0.9, 0.8, 0.7, 0.6];
        for name in ["min", "prod", "luka"] {
            let f = op(name);
            let direct = f.apply_points(&xs).unwrap();
            let folded = xs[1..].iter().fold(xs[0], |acc, &x| {
                f.apply_points(&[acc, x]).unwrap()
            });
            assert!((direct - folded).abs() < 1e-12, "{name}: {direct} vs {folded}");
        }
    }

    #[test]
    fn interval_aggregation_is_endpoint_wise() {
        let got = op("min")
            .apply_intervals(&[Interval::new(0.7, 0.7).unwrap(), Interval::new(0.6, 0.8).unwrap()])
            .unwrap();
        assert_eq!((got.lo(), got.hi()), (0.6, 0.7));
    }

    #[test]
    fn union_aggregation_min_example() {
        let got = op("min")
            .apply_sets(&[bs(&[(0.2, 0.5), (0.8, 1.0)]), bs(&[(0.4, 0.9)])])
            .unwrap();
        // Components [0.2,0.5] and [0.4,0.9] merge into one interval.
        assert!(got.approx_eq(&bs(&[(0.2, 0.9)]), EPS), "got {got}");
    }

    #[test]
    fn union_aggregation_prod_example() {
        let got = op("prod")
            .apply_sets(&[bs(&[(0.5, 0.6)]), bs(&[(0.5, 0.5)])])
            .unwrap();
        assert!(got.approx_eq(&bs(&[(0.25, 0.3)]), EPS), "got {got}");
    }

    #[test]
    fn union_aggregation_boundary_and_empty() {
        let zero = BorelSet::point(0.0).unwrap();
        let got = op("mean").apply_sets(&[zero.clone(), zero.clone()]).unwrap();
        assert_eq!(got, zero);
        let got = op("min")
            .apply_sets(&[bs(&[(0.2, 0.5)]), BorelSet::empty()])
            .unwrap();
        assert!(got.is_empty());
    }

    #[test]
    fn union_aggregation_covers_sampled_combinations() {
        // Oracle: f applied to any pair of member points must land in the
        // aggregated set; the set's endpoints must come from endpoint combos.
        let a = bs(&[(0.1, 0.3), (0.6, 0.7)]);
        let b = bs(&[(0.2, 0.4), (0.9, 1.0)]);
        for name in ["min", "max", "prod", "luka", "mean"] {
            let f = op(name);
            let agg = f.apply_sets(&[a.clone(), b.clone()]).unwrap();
            for ia in a.intervals() {
                for ib in b.intervals() {
                    for s in 0..=10 {
                        for t in 0..=10 {
                            let x = ia.lo() + (ia.hi() - ia.lo()) * s as f64 / 10.0;
                            let y = ib.lo() + (ib.hi() - ib.lo()) * t as f64 / 10.0;
                            let v = f.apply_points(&[x, y]).unwrap();
                            assert!(agg.contains(v), "{name}({x},{y})={v} outside {agg}");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn registration_rejects_bad_operators() {
        let mut reg = Registry::with_builtins();
        assert!(matches!(
            reg.register("min", |xs| xs[0]),
            Err(AggregateError::Duplicate(_))
        ));
        assert!(matches!(
            reg.register("half", |_| 0.5),
            Err(AggregateError::Boundary { .. })
        ));
        // Fixes both boundaries but dips between means 0.5 and 0.9.
        assert!(matches!(
            reg.register("tent", |xs| {
                let m = xs.iter().sum::<f64>() / xs.len() as f64;
                if m <= 0.5 {
                    1.8 * m
                } else if m <= 0.9 {
                    0.9 - (m - 0.5)
                } else {
                    0.5 + 5.0 * (m - 0.9)
                }
            }),
            Err(AggregateError::NotMonotone { .. })
        ));
        // Correct boundaries, but spikes above 1 in the middle.
        assert!(matches!(
            reg.register("spike", |xs| {
                if xs[0] > 0.4 && xs[0] < 0.6 {
                    1.5
                } else {
                    xs[0]
                }
            }),
            Err(AggregateError::OutOfRange { .. })
        ));
    }

    #[test]
    fn registration_accepts_a_custom_operator() {
        let mut reg = Registry::with_builtins();
        // Geometric mean is monotone and fixes both boundaries.
        reg.register("geo", |xs| {
            xs.iter().product::<f64>().powf(1.0 / xs.len() as f64)
        })
        .unwrap();
        assert!(reg.contains("geo"));
        let v = reg.get("geo").unwrap().apply_points(&[0.4, 0.9]).unwrap();
        assert!((v - 0.6).abs() < 1e-12);
    }

    #[test]
    fn empty_argument_list_is_an_error() {
        assert!(matches!(
            op("min").apply_points(&[]),
            Err(AggregateError::NoArguments)
        ));
        assert!(matches!(
            op("min").apply_sets(&[]),
            Err(AggregateError::NoArguments)
        ));
    }
}
