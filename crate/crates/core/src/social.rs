//! Trust-set aggregation.
//!
//! Both aggregates are weighted averages over the query user's trustees,
//! with each trustee weighted by its similarity to the trustor:
//!
//! * `tsim` averages the trustees' similarity with a scorer.
//! * `tdif` averages the trustees' signed rating difference with a scorer.
//!
//! A trustee is skipped when its weight or its term cannot be computed,
//! and — by default — when it *is* the scorer: the scorer's own influence
//! already enters the prediction through the direct term, and a
//! self-similarity contribution is not meaningful there. The skip is
//! configurable for sensitivity runs.

use crate::dataset::UserIdx;
use crate::similarity::{dif_fast, sim_fast, MaybeScore, Profiles, Unavailable, RATING_SPAN};

/// Result of aggregating a trust set against one scorer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrustAggregate {
    pub value: MaybeScore,
    /// Trustees that contributed a usable (weight, term) pair.
    pub n_contributing: usize,
    /// Trustees skipped: scorer identity, missing weight, or missing term.
    pub n_skipped: usize,
}

impl TrustAggregate {
    fn unavailable(reason: Unavailable, n_skipped: usize) -> TrustAggregate {
        TrustAggregate {
            value: MaybeScore::Unavailable(reason),
            n_contributing: 0,
            n_skipped,
        }
    }
}

/// Weighted average with explicit availability; `None` entries are
/// skipped rather than treated as zero.
fn weighted_average(
    pairs: impl Iterator<Item = Option<(f64, f64)>>,
    clamp: (f64, f64),
) -> TrustAggregate {
    let mut num = 0.0;
    let mut den = 0.0;
    let mut n_contributing = 0usize;
    let mut n_skipped = 0usize;
    for pair in pairs {
        match pair {
            Some((weight, term)) => {
                num += weight * term;
                den += weight;
                n_contributing += 1;
            }
            None => n_skipped += 1,
        }
    }
    if n_contributing == 0 {
        return TrustAggregate::unavailable(Unavailable::NoRatings, n_skipped);
    }
    if den == 0.0 {
        return TrustAggregate {
            value: MaybeScore::Unavailable(Unavailable::ZeroWeight),
            n_contributing,
            n_skipped,
        };
    }
    TrustAggregate {
        value: MaybeScore::Value((num / den).clamp(clamp.0, clamp.1)),
        n_contributing,
        n_skipped,
    }
}

/// Reusable aggregator for one query user: the trustee weights (their
/// similarity to the trustor) are computed once and shared by every
/// scorer the prediction loop visits.
pub struct TrustScorer<'a> {
    profiles: &'a Profiles,
    /// Trustees with an available weight, paired with that weight.
    weighted: Vec<(UserIdx, f64)>,
    /// Trustees dropped up front for lacking a weight.
    n_unweighted: usize,
    include_scorer: bool,
}

impl<'a> TrustScorer<'a> {
    pub fn new(
        q: UserIdx,
        trustees: &[UserIdx],
        profiles: &'a Profiles,
        include_scorer: bool,
    ) -> TrustScorer<'a> {
        let pq = profiles.get(q);
        let mut weighted = Vec::with_capacity(trustees.len());
        let mut n_unweighted = 0usize;
        for &x in trustees {
            match sim_fast(profiles.get(x), pq) {
                MaybeScore::Value(w) => weighted.push((x, w)),
                MaybeScore::Unavailable(_) => n_unweighted += 1,
            }
        }
        TrustScorer {
            profiles,
            weighted,
            n_unweighted,
            include_scorer,
        }
    }

    pub fn has_trustees(&self) -> bool {
        !self.weighted.is_empty()
    }

    fn aggregate(
        &self,
        scorer: UserIdx,
        term: impl Fn(&crate::similarity::UserProfile) -> MaybeScore,
        clamp: (f64, f64),
    ) -> TrustAggregate {
        let mut agg = weighted_average(
            self.weighted.iter().map(|&(x, w)| {
                if x == scorer && !self.include_scorer {
                    return None;
                }
                term(self.profiles.get(x)).value().map(|t| (w, t))
            }),
            clamp,
        );
        agg.n_skipped += self.n_unweighted;
        agg
    }

    /// Trust-set similarity with `scorer`.
    pub fn tsim(&self, scorer: UserIdx) -> TrustAggregate {
        let ps = self.profiles.get(scorer);
        self.aggregate(scorer, |px| sim_fast(px, ps), (0.0, 1.0))
    }

    /// Trust-set signed rating difference with `scorer`.
    pub fn tdif(&self, scorer: UserIdx) -> TrustAggregate {
        let ps = self.profiles.get(scorer);
        self.aggregate(scorer, |px| dif_fast(px, ps), (-RATING_SPAN, RATING_SPAN))
    }
}

/// One-shot trust-set similarity between `q`'s trustees and scorer `t`.
pub fn tsim(q: UserIdx, trustees: &[UserIdx], t: UserIdx, profiles: &Profiles) -> TrustAggregate {
    TrustScorer::new(q, trustees, profiles, false).tsim(t)
}

/// One-shot trust-set difference between `q`'s trustees and scorer `t`.
pub fn tdif(q: UserIdx, trustees: &[UserIdx], t: UserIdx, profiles: &Profiles) -> TrustAggregate {
    TrustScorer::new(q, trustees, profiles, false).tdif(t)
}
