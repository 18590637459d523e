//! Rate prediction, methods A and B, social and non-social.
//!
//! Both methods look at the scorers of the target item — the training
//! users who rated it — and differ in how a scorer's rate enters the
//! estimate:
//!
//! * **Method A** weights each scorer's rate by a similarity: the average
//!   of the direct user similarity and the trust-set similarity (social),
//!   or the direct similarity alone (non-social). Scorers without a
//!   computable weight drop out, so an item can fail to get a prediction
//!   even when it has scorers.
//! * **Method B** shifts each scorer's rate by a signed difference — the
//!   average of the direct difference and the trust-set difference — and
//!   takes the plain mean over *all* scorers. A missing difference falls
//!   back to 0 (the scorer's own rate is used), so Method B covers every
//!   item that has at least one scorer.

use serde::{Deserialize, Serialize};

use crate::dataset::{ItemIdx, TrainView, TrustIndex, UserIdx};
use crate::error::{Error, Result};
use crate::similarity::{
    dif_fast, sim_fast, MaybeScore, Profiles, RATING_MAX, RATING_MIN,
};
use crate::social::TrustScorer;

/// Which prediction rule to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    A,
    B,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::A => write!(f, "A"),
            Method::B => write!(f, "B"),
        }
    }
}

/// Full predictor configuration; `variant_label` names the four
/// method/social combinations in reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictorConfig {
    pub method: Method,
    pub social: bool,
    pub r_min: u8,
    pub r_max: u8,
    /// When false, consumers should read the raw value; the rounded one
    /// is still produced (the report carries both).
    pub rounding: bool,
    /// Sensitivity switch: let a trustee who is also the scorer stay in
    /// the trust aggregate instead of being skipped.
    pub include_scorer_as_trustee: bool,
}

impl Default for PredictorConfig {
    fn default() -> Self {
        PredictorConfig {
            method: Method::B,
            social: true,
            r_min: RATING_MIN,
            r_max: RATING_MAX,
            rounding: true,
            include_scorer_as_trustee: false,
        }
    }
}

impl PredictorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r_min >= self.r_max {
            return Err(Error::InvalidArgument(format!(
                "rating scale [{}, {}] is empty",
                self.r_min, self.r_max
            )));
        }
        Ok(())
    }

    pub fn variant_label(&self) -> String {
        format!(
            "Method {} {} version",
            self.method,
            if self.social { "social" } else { "non-social" }
        )
    }

    fn finalize(&self, raw: f64) -> PredictionOutcome {
        // round half away from zero, then pull into the valid scale
        let rounded = raw.round().clamp(self.r_min as f64, self.r_max as f64) as u8;
        PredictionOutcome::Predicted { raw, rounded }
    }
}

/// Why a test record got no prediction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NotCoveredReason {
    /// Nobody rated the item in training.
    ItemUnseen,
    /// Scorers exist but none has a usable weight (Method A only).
    NoUsableScorers,
}

impl std::fmt::Display for NotCoveredReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NotCoveredReason::ItemUnseen => write!(f, "item-unseen"),
            NotCoveredReason::NoUsableScorers => write!(f, "no-usable-scorers"),
        }
    }
}

/// A prediction or a typed reason there is none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PredictionOutcome {
    Predicted { raw: f64, rounded: u8 },
    NotCovered(NotCoveredReason),
}

impl PredictionOutcome {
    pub fn is_covered(&self) -> bool {
        matches!(self, PredictionOutcome::Predicted { .. })
    }
}

/// What to do when both halves of the average are unavailable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MissingBothPolicy {
    /// Propagate unavailability (Method A: the scorer is skipped).
    Unavailable,
    /// Substitute 0 (Method B: the scorer's own rate is used).
    Zero,
}

/// Mean of two scores with one-sided fallback: if only one side is
/// available that side is used alone; if neither is, the policy decides.
pub fn avg_or_fallback(a: MaybeScore, b: MaybeScore, missing_both: MissingBothPolicy) -> MaybeScore {
    match (a.value(), b.value()) {
        (Some(a), Some(b)) => MaybeScore::Value((a + b) / 2.0),
        (Some(a), None) => MaybeScore::Value(a),
        (None, Some(b)) => MaybeScore::Value(b),
        (None, None) => match missing_both {
            MissingBothPolicy::Unavailable => a,
            MissingBothPolicy::Zero => MaybeScore::Value(0.0),
        },
    }
}

/// Similarity-weighted average of scorer rates (Method A).
pub fn predict_method_a(
    q: UserIdx,
    t: ItemIdx,
    train: &TrainView,
    profiles: &Profiles,
    trust: &TrustIndex,
    cfg: &PredictorConfig,
) -> PredictionOutcome {
    let scorers = train.scorers_of(t);
    // q should never be a scorer under held-out evaluation; drop it if it is
    let mut any_scorer = false;
    let trust_scorer = cfg.social.then(|| {
        TrustScorer::new(
            q,
            trust.trustees_of(q),
            profiles,
            cfg.include_scorer_as_trustee,
        )
    });
    let pq = profiles.get(q);
    let mut num = 0.0;
    let mut den = 0.0;
    for &(y, rate) in scorers {
        if y == q {
            continue;
        }
        any_scorer = true;
        let direct = sim_fast(pq, profiles.get(y));
        let weight = match &trust_scorer {
            Some(ts) => avg_or_fallback(direct, ts.tsim(y).value, MissingBothPolicy::Unavailable),
            None => direct,
        };
        if let MaybeScore::Value(w) = weight {
            num += w * rate as f64;
            den += w;
        }
    }
    if !any_scorer {
        return PredictionOutcome::NotCovered(NotCoveredReason::ItemUnseen);
    }
    if den == 0.0 {
        return PredictionOutcome::NotCovered(NotCoveredReason::NoUsableScorers);
    }
    // a convex combination of valid rates; the clamp only absorbs rounding
    cfg.finalize((num / den).clamp(cfg.r_min as f64, cfg.r_max as f64))
}

/// Difference-shifted mean of scorer rates (Method B).
pub fn predict_method_b(
    q: UserIdx,
    t: ItemIdx,
    train: &TrainView,
    profiles: &Profiles,
    trust: &TrustIndex,
    cfg: &PredictorConfig,
) -> PredictionOutcome {
    let scorers = train.scorers_of(t);
    let trust_scorer = cfg.social.then(|| {
        TrustScorer::new(
            q,
            trust.trustees_of(q),
            profiles,
            cfg.include_scorer_as_trustee,
        )
    });
    let pq = profiles.get(q);
    let mut total = 0.0;
    let mut count = 0usize;
    for &(y, rate) in scorers {
        if y == q {
            continue;
        }
        let direct = dif_fast(pq, profiles.get(y));
        let shift = match &trust_scorer {
            Some(ts) => avg_or_fallback(direct, ts.tdif(y).value, MissingBothPolicy::Zero),
            None => MaybeScore::Value(direct.value().unwrap_or(0.0)),
        };
        // every scorer counts, even when the shift fell back to 0
        total += rate as f64 + shift.value().expect("zero policy always yields a value");
        count += 1;
    }
    if count == 0 {
        return PredictionOutcome::NotCovered(NotCoveredReason::ItemUnseen);
    }
    cfg.finalize(total / count as f64)
}

/// Bundles the immutable prediction inputs for one training view.
pub struct Predictor<'a> {
    pub train: &'a TrainView,
    pub profiles: &'a Profiles,
    pub trust: &'a TrustIndex,
    pub cfg: PredictorConfig,
}

impl<'a> Predictor<'a> {
    pub fn predict(&self, q: UserIdx, t: ItemIdx) -> PredictionOutcome {
        match self.cfg.method {
            Method::A => predict_method_a(q, t, self.train, self.profiles, self.trust, &self.cfg),
            Method::B => predict_method_b(q, t, self.train, self.profiles, self.trust, &self.cfg),
        }
    }
}
