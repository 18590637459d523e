//! Histogram similarity kernels.
//!
//! Every item gets a 5-bin rating histogram from the training data and a
//! *signature*: the elementwise square root of its empirical rating
//! density. The Bhattacharyya coefficient between two items is then just
//! the dot product of their signatures, which is what makes the fast
//! user-level kernels below possible.
//!
//! Two user-level scores are defined over **all** item pairs drawn from
//! the two users' rated sets (co-rated or not):
//!
//! * `sim` — BC-weighted average of rate similarity `RSP`, in `[0, 1]`.
//! * `dif` — BC-weighted average of the signed rate difference
//!   `r_q - r_x`, in `[-4, 4]`; positive means the first user rates
//!   higher.
//!
//! Both exist in a naive form (`sim_naive`, `dif_naive`) that walks the
//! defining double sum, and a fast form (`sim_fast`, `dif_fast`) over
//! precomputed [`UserProfile`]s. The naive forms are the permanent test
//! oracles for the fast ones.
//!
//! The factorization: group a user's items by the rating value the user
//! gave them and pre-sum their signatures into one 5-vector per rating
//! value. Because BC is bilinear in the signatures and the RSP (or
//! difference) weight depends only on the two rating values, the double
//! sum over item pairs collapses to a 5x5 grid of signature-vector dot
//! products:
//!
//! ```text
//!   sum_{i,j} BC(i,j) w(r_i, r_j)  =  sum_{a,b} w(a,b) dot(v_q[a], v_x[b])
//!   sum_{i,j} BC(i,j)              =  dot(V_q, V_x),   V = sum_a v[a]
//! ```
//!
//! which is 25 dot products of length 5 regardless of how many items the
//! two users rated.

use std::io::{BufRead, Write};

use crate::dataset::{IdMap, ItemIdx, TrainView, UserIdx};
use crate::error::{Error, Result};

/// Number of histogram bins; one per integer rating value.
pub const BIN_COUNT: usize = 5;
/// Smallest valid rating.
pub const RATING_MIN: u8 = 1;
/// Largest valid rating.
pub const RATING_MAX: u8 = 5;
/// How much RSP decreases per unit of rating difference, derived from the
/// scale so the maximum difference maps to zero similarity.
pub const RSP_UNIT_PENALTY: f64 = 1.0 / (RATING_MAX as f64 - RATING_MIN as f64);
/// Widest possible signed rating difference.
pub const RATING_SPAN: f64 = RATING_MAX as f64 - RATING_MIN as f64;

#[inline]
fn bin(rating: u8) -> usize {
    debug_assert!((RATING_MIN..=RATING_MAX).contains(&rating));
    (rating - RATING_MIN) as usize
}

#[inline]
fn dot(a: &[f64; BIN_COUNT], b: &[f64; BIN_COUNT]) -> f64 {
    let mut acc = 0.0;
    for h in 0..BIN_COUNT {
        acc += a[h] * b[h];
    }
    acc
}

/// Per-item rating counts. `total` is the number of users who rated the
/// item; the empirical density of bin `h` is `counts[h] / total`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ItemHistogram {
    pub counts: [u32; BIN_COUNT],
    pub total: u32,
}

impl ItemHistogram {
    pub fn density(&self, rating: u8) -> f64 {
        self.counts[bin(rating)] as f64 / self.total as f64
    }
}

/// Square-root-density 5-vector of an item; unit L2 norm by construction.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ItemSignature(pub [f64; BIN_COUNT]);

impl ItemSignature {
    fn from_histogram(h: &ItemHistogram) -> ItemSignature {
        let total = h.total as f64;
        let mut s = [0.0; BIN_COUNT];
        for (out, &c) in s.iter_mut().zip(&h.counts) {
            *out = (c as f64 / total).sqrt();
        }
        ItemSignature(s)
    }
}

/// Histograms and signatures for every item with at least one training
/// rating, dense-indexed by item.
#[derive(Debug, Clone)]
pub struct ItemStats {
    histograms: Vec<ItemHistogram>,
    signatures: Vec<ItemSignature>,
}

impl ItemStats {
    pub fn histogram(&self, item: ItemIdx) -> Option<&ItemHistogram> {
        self.histograms.get(item.index()).filter(|h| h.total > 0)
    }

    pub fn signature(&self, item: ItemIdx) -> Option<&ItemSignature> {
        let present = self.histograms.get(item.index())?.total > 0;
        present.then(|| &self.signatures[item.index()])
    }

    pub fn n_rated_items(&self) -> usize {
        self.histograms.iter().filter(|h| h.total > 0).count()
    }
}

/// Builds per-item histograms and signatures from the training view only;
/// held-out ratings never reach the densities.
pub fn build_histograms(train: &TrainView) -> ItemStats {
    let n_items = train.n_items();
    let mut histograms = vec![ItemHistogram::default(); n_items];
    for u in 0..train.n_users() {
        for &(item, rating) in train.items_of(UserIdx(u as u32)) {
            let h = &mut histograms[item.index()];
            h.counts[bin(rating)] += 1;
            h.total += 1;
        }
    }
    let signatures = histograms
        .iter()
        .map(|h| {
            if h.total == 0 {
                ItemSignature::default()
            } else {
                ItemSignature::from_histogram(h)
            }
        })
        .collect();
    ItemStats {
        histograms,
        signatures,
    }
}

/// Bhattacharyya coefficient between two item signatures: the dot product
/// of their square-root densities. Symmetric, and in `[0, 1]` (clamped
/// against last-ulp rounding when the densities coincide).
pub fn bc_items(a: &ItemSignature, b: &ItemSignature) -> f64 {
    dot(&a.0, &b.0).clamp(0.0, 1.0)
}

/// Rate similarity of two rating values: 1 for equal rates, decreasing by
/// [`RSP_UNIT_PENALTY`] per unit of difference down to 0 at the widest gap.
pub fn rsp(a: u8, b: u8) -> f64 {
    1.0 - (a as f64 - b as f64).abs() * RSP_UNIT_PENALTY
}

#[inline]
fn rsp_bins(a: usize, b: usize) -> f64 {
    1.0 - (a as f64 - b as f64).abs() * RSP_UNIT_PENALTY
}

/// A score that may be impossible to compute. Unavailability is explicit
/// so every consumer has to branch; it never collapses to a sentinel 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaybeScore {
    Value(f64),
    Unavailable(Unavailable),
}

/// Why a score could not be computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Unavailable {
    /// One of the two sides has no usable ratings (or trustees).
    NoRatings,
    /// Every pairwise weight came out zero, leaving nothing to average.
    ZeroWeight,
}

impl MaybeScore {
    pub fn value(self) -> Option<f64> {
        match self {
            MaybeScore::Value(v) => Some(v),
            MaybeScore::Unavailable(_) => None,
        }
    }

    pub fn is_available(self) -> bool {
        matches!(self, MaybeScore::Value(_))
    }
}

/// Reference implementation of the user similarity: iterates every pair
/// `(i, j)` of items from the two users' rated sets, including `i == j`
/// and non-co-rated pairs, weighting RSP by the items' BC.
pub fn sim_naive(q: UserIdx, x: UserIdx, train: &TrainView, stats: &ItemStats) -> MaybeScore {
    let items_q = train.items_of(q);
    let items_x = train.items_of(x);
    if items_q.is_empty() || items_x.is_empty() {
        return MaybeScore::Unavailable(Unavailable::NoRatings);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for &(i, ri) in items_q {
        let si = stats.signature(i).expect("training item has a signature");
        for &(j, rj) in items_x {
            let sj = stats.signature(j).expect("training item has a signature");
            let w = bc_items(si, sj);
            num += w * rsp(ri, rj);
            den += w;
        }
    }
    if den == 0.0 {
        return MaybeScore::Unavailable(Unavailable::ZeroWeight);
    }
    MaybeScore::Value((num / den).clamp(0.0, 1.0))
}

/// Reference implementation of the signed rating difference: same double
/// sum as [`sim_naive`] with the weight applied to `r_q - r_x`.
pub fn dif_naive(q: UserIdx, x: UserIdx, train: &TrainView, stats: &ItemStats) -> MaybeScore {
    let items_q = train.items_of(q);
    let items_x = train.items_of(x);
    if items_q.is_empty() || items_x.is_empty() {
        return MaybeScore::Unavailable(Unavailable::NoRatings);
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for &(i, ri) in items_q {
        let si = stats.signature(i).expect("training item has a signature");
        for &(j, rj) in items_x {
            let sj = stats.signature(j).expect("training item has a signature");
            let w = bc_items(si, sj);
            num += w * (ri as f64 - rj as f64);
            den += w;
        }
    }
    if den == 0.0 {
        return MaybeScore::Unavailable(Unavailable::ZeroWeight);
    }
    MaybeScore::Value((num / den).clamp(-RATING_SPAN, RATING_SPAN))
}

/// Aggregated signature mass of one user's training ratings.
///
/// `by_rating[a]` sums the signatures of the items the user rated with
/// value `a`; `sum` is the elementwise total of the five vectors.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UserProfile {
    pub by_rating: [[f64; BIN_COUNT]; BIN_COUNT],
    pub sum: [f64; BIN_COUNT],
    pub n_items: u32,
}

/// Per-user profiles, dense-indexed by user.
#[derive(Debug, Clone)]
pub struct Profiles {
    profiles: Vec<UserProfile>,
}

impl Profiles {
    pub fn get(&self, user: UserIdx) -> &UserProfile {
        &self.profiles[user.index()]
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

/// Folds every user's item signatures into a [`UserProfile`].
pub fn build_user_profiles(train: &TrainView, stats: &ItemStats) -> Profiles {
    let mut profiles = vec![UserProfile::default(); train.n_users()];
    for (u, profile) in profiles.iter_mut().enumerate() {
        for &(item, rating) in train.items_of(UserIdx(u as u32)) {
            let sig = stats.signature(item).expect("training item has a signature");
            let row = &mut profile.by_rating[bin(rating)];
            for (dst, src) in row.iter_mut().zip(&sig.0) {
                *dst += src;
            }
            profile.n_items += 1;
        }
        for a in 0..BIN_COUNT {
            for h in 0..BIN_COUNT {
                profile.sum[h] += profile.by_rating[a][h];
            }
        }
    }
    Profiles { profiles }
}

/// Factorized user similarity; equal to [`sim_naive`] on the same
/// training view to within 1e-9, in O(1) once profiles are built.
pub fn sim_fast(pq: &UserProfile, px: &UserProfile) -> MaybeScore {
    if pq.n_items == 0 || px.n_items == 0 {
        return MaybeScore::Unavailable(Unavailable::NoRatings);
    }
    let den = dot(&pq.sum, &px.sum);
    if den == 0.0 {
        return MaybeScore::Unavailable(Unavailable::ZeroWeight);
    }
    let mut num = 0.0;
    for a in 0..BIN_COUNT {
        for b in 0..BIN_COUNT {
            num += rsp_bins(a, b) * dot(&pq.by_rating[a], &px.by_rating[b]);
        }
    }
    MaybeScore::Value((num / den).clamp(0.0, 1.0))
}

/// Factorized signed rating difference; oracle is [`dif_naive`].
/// Antisymmetric: `dif_fast(p, q) = -dif_fast(q, p)`.
pub fn dif_fast(pq: &UserProfile, px: &UserProfile) -> MaybeScore {
    if pq.n_items == 0 || px.n_items == 0 {
        return MaybeScore::Unavailable(Unavailable::NoRatings);
    }
    let den = dot(&pq.sum, &px.sum);
    if den == 0.0 {
        return MaybeScore::Unavailable(Unavailable::ZeroWeight);
    }
    let mut num = 0.0;
    for a in 0..BIN_COUNT {
        for b in 0..BIN_COUNT {
            num += (a as f64 - b as f64) * dot(&pq.by_rating[a], &px.by_rating[b]);
        }
    }
    MaybeScore::Value((num / den).clamp(-RATING_SPAN, RATING_SPAN))
}

/// Writes a profile snapshot: one line per user with ratings, holding the
/// external id, the rating count, the five `by_rating` vectors, and the
/// summed vector, as decimal text. Rust's shortest round-trip float
/// formatting keeps the values bit-exact across export and import.
pub fn export_profiles<W: Write>(profiles: &Profiles, users: &IdMap, mut out: W) -> Result<()> {
    writeln!(out, "#profiles v1 users={}", profiles.len())?;
    for (u, p) in profiles.profiles.iter().enumerate() {
        if p.n_items == 0 {
            continue;
        }
        write!(out, "{} {}", users.external(u as u32), p.n_items)?;
        for row in &p.by_rating {
            for v in row {
                write!(out, " {v}")?;
            }
        }
        for v in &p.sum {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads a snapshot produced by [`export_profiles`]. Users absent from
/// the snapshot keep an empty profile.
pub fn import_profiles<R: BufRead>(reader: R, users: &IdMap) -> Result<Profiles> {
    let mut profiles = vec![UserProfile::default(); users.len()];
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let external: u64 = fields
            .next()
            .ok_or_else(|| Error::parse(lineno, "missing user id"))?
            .parse()
            .map_err(|_| Error::parse(lineno, "bad user id"))?;
        let idx = users
            .resolve(external)
            .ok_or_else(|| Error::parse(lineno, format!("unknown user id {external}")))?;
        let profile = &mut profiles[idx as usize];
        profile.n_items = fields
            .next()
            .ok_or_else(|| Error::parse(lineno, "missing rating count"))?
            .parse()
            .map_err(|_| Error::parse(lineno, "bad rating count"))?;
        let mut values = fields.map(|f| {
            f.parse::<f64>()
                .map_err(|_| Error::parse(lineno, format!("bad float {f:?}")))
        });
        for a in 0..BIN_COUNT {
            for h in 0..BIN_COUNT {
                profile.by_rating[a][h] = values
                    .next()
                    .ok_or_else(|| Error::parse(lineno, "truncated profile line"))??;
            }
        }
        for h in 0..BIN_COUNT {
            profile.sum[h] = values
                .next()
                .ok_or_else(|| Error::parse(lineno, "truncated profile line"))??;
        }
        if values.next().is_some() {
            return Err(Error::parse(lineno, "trailing fields in profile line"));
        }
    }
    Ok(Profiles { profiles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_ratings;
    use proptest::prelude::*;
    use std::io::Cursor;

    const TOL: f64 = 1e-12;

    fn view(text: &str) -> (TrainView, crate::dataset::RatingsTable) {
        let table = parse_ratings(Cursor::new(text)).unwrap();
        (TrainView::full(&table), table)
    }

    fn user(table: &crate::dataset::RatingsTable, ext: u64) -> UserIdx {
        UserIdx(table.users().resolve(ext).unwrap())
    }

    fn item(table: &crate::dataset::RatingsTable, ext: u64) -> ItemIdx {
        ItemIdx(table.items().resolve(ext).unwrap())
    }

    /// Three users over three items; golden values from tools/oracle.py
    /// (kept verbatim, hence the lint allows).
    const FIXTURE: &str = "1 101 5\n1 102 3\n2 102 4\n2 103 2\n3 101 2\n3 102 5\n3 103 3\n";
    #[allow(clippy::excessive_precision)]
    const FIXTURE_SIM_1_2: f64 = 0.642_078_407_514_904_08;
    #[allow(clippy::excessive_precision)]
    const FIXTURE_SIM_1_3: f64 = 0.569_886_763_273_151_35;
    #[allow(clippy::excessive_precision)]
    const FIXTURE_DIF_1_2: f64 = 0.568_313_630_059_616_44;
    #[allow(clippy::excessive_precision)]
    const FIXTURE_BC_101_102: f64 = 0.408_248_290_463_863_02;

    #[test]
    fn histogram_density_matches_count_ratio() {
        // 20 raters, 5 of them at score 3
        let mut text = String::new();
        for u in 0..5 {
            text.push_str(&format!("{u} 50 3\n"));
        }
        for u in 5..20 {
            text.push_str(&format!("{u} 50 {}\n", 1 + u % 2 * 4));
        }
        let (train, table) = view(&text);
        let stats = build_histograms(&train);
        let h = stats.histogram(item(&table, 50)).unwrap();
        assert_eq!(h.total, 20);
        assert!((h.density(3) - 0.25).abs() < TOL);
    }

    #[test]
    fn single_rating_gives_unit_signature() {
        let (train, table) = view("1 10 4\n");
        let stats = build_histograms(&train);
        let s = stats.signature(item(&table, 10)).unwrap();
        assert_eq!(s.0, [0.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn split_support_signature() {
        let (train, table) = view("1 10 1\n2 10 5\n");
        let stats = build_histograms(&train);
        let s = stats.signature(item(&table, 10)).unwrap();
        let half = (0.5f64).sqrt();
        assert!((s.0[0] - half).abs() < TOL);
        assert!((s.0[4] - half).abs() < TOL);
        assert_eq!(&s.0[1..4], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn only_rated_items_have_histograms() {
        let text = "1 10 4\n1 11 2\n2 10 1\n";
        let (train, table) = view(text);
        let stats = build_histograms(&train);
        for i in 0..table.n_items() {
            let idx = ItemIdx(i as u32);
            assert_eq!(
                stats.histogram(idx).is_some(),
                !train.scorers_of(idx).is_empty()
            );
        }
        assert_eq!(stats.n_rated_items(), 2);
    }

    #[test]
    fn bc_identical_histograms_is_one() {
        let (train, table) = view("1 10 2\n2 10 5\n1 11 2\n2 11 5\n");
        let stats = build_histograms(&train);
        let a = stats.signature(item(&table, 10)).unwrap();
        let b = stats.signature(item(&table, 11)).unwrap();
        assert!((bc_items(a, b) - 1.0).abs() < TOL);
        assert!((bc_items(a, a) - 1.0).abs() < TOL);
    }

    #[test]
    fn bc_disjoint_supports_is_zero() {
        let (train, table) = view("1 10 1\n2 11 5\n");
        let stats = build_histograms(&train);
        let a = stats.signature(item(&table, 10)).unwrap();
        let b = stats.signature(item(&table, 11)).unwrap();
        assert_eq!(bc_items(a, b), 0.0);
    }

    #[test]
    fn bc_partial_overlap_golden() {
        // item 10 rated {1} only, item 11 rated {1,5}
        let (train, table) = view("1 10 1\n2 11 1\n3 11 5\n");
        let stats = build_histograms(&train);
        let a = stats.signature(item(&table, 10)).unwrap();
        let b = stats.signature(item(&table, 11)).unwrap();
        assert!((bc_items(a, b) - 0.5f64.sqrt()).abs() < TOL);
    }

    #[test]
    fn rsp_worked_values() {
        assert_eq!(rsp(3, 2), 0.75);
        assert_eq!(rsp(2, 3), 0.75);
        assert_eq!(rsp(4, 4), 1.0);
        assert_eq!(rsp(1, 5), 0.0);
    }

    #[test]
    fn sim_single_shared_item_same_rating_is_one() {
        let (train, table) = view("1 10 4\n2 10 4\n");
        let stats = build_histograms(&train);
        let s = sim_naive(user(&table, 1), user(&table, 2), &train, &stats);
        assert_eq!(s, MaybeScore::Value(1.0));
        let profiles = build_user_profiles(&train, &stats);
        let f = sim_fast(profiles.get(user(&table, 1)), profiles.get(user(&table, 2)));
        assert_eq!(f, MaybeScore::Value(1.0));
    }

    #[test]
    fn sim_without_ratings_is_unavailable() {
        // user 2 appears only via an out-of-range rating, so it never
        // enters the table; craft instead a user with no *training* rows
        let table = parse_ratings(Cursor::new("1 10 4\n2 11 3\n")).unwrap();
        let split = crate::dataset::split_folds(&table, 2, 0).unwrap();
        let folds: std::collections::BTreeSet<usize> = [1].into_iter().collect();
        let (train, test) = crate::dataset::train_test_views(&table, &split, 0, &folds).unwrap();
        assert_eq!(test.len(), 1);
        let held_out = test[0].user;
        let stats = build_histograms(&train);
        let other = test[0]; // the held-out user has no training ratings
        let s = sim_naive(held_out, other.user, &train, &stats);
        assert_eq!(s, MaybeScore::Unavailable(Unavailable::NoRatings));
        let profiles = build_user_profiles(&train, &stats);
        assert_eq!(
            sim_fast(profiles.get(held_out), profiles.get(held_out)),
            MaybeScore::Unavailable(Unavailable::NoRatings)
        );
    }

    #[test]
    fn fixture_goldens_naive() {
        let (train, table) = view(FIXTURE);
        let stats = build_histograms(&train);
        let (u1, u2, u3) = (user(&table, 1), user(&table, 2), user(&table, 3));

        let b = bc_items(
            stats.signature(item(&table, 101)).unwrap(),
            stats.signature(item(&table, 102)).unwrap(),
        );
        assert!((b - FIXTURE_BC_101_102).abs() < 1e-14);

        let s12 = sim_naive(u1, u2, &train, &stats).value().unwrap();
        assert!((s12 - FIXTURE_SIM_1_2).abs() < 1e-14);
        let s13 = sim_naive(u1, u3, &train, &stats).value().unwrap();
        assert!((s13 - FIXTURE_SIM_1_3).abs() < 1e-14);
        let d12 = dif_naive(u1, u2, &train, &stats).value().unwrap();
        assert!((d12 - FIXTURE_DIF_1_2).abs() < 1e-14);

        // symmetry / antisymmetry on the same fixture
        let s21 = sim_naive(u2, u1, &train, &stats).value().unwrap();
        assert!((s12 - s21).abs() < TOL);
        let d21 = dif_naive(u2, u1, &train, &stats).value().unwrap();
        assert!((d12 + d21).abs() < TOL);
    }

    #[test]
    fn fixture_goldens_fast() {
        let (train, table) = view(FIXTURE);
        let stats = build_histograms(&train);
        let profiles = build_user_profiles(&train, &stats);
        let (p1, p2) = (profiles.get(user(&table, 1)), profiles.get(user(&table, 2)));
        let s = sim_fast(p1, p2).value().unwrap();
        assert!((s - FIXTURE_SIM_1_2).abs() < 1e-9);
        let d = dif_fast(p1, p2).value().unwrap();
        assert!((d - FIXTURE_DIF_1_2).abs() < 1e-9);
        let d_rev = dif_fast(p2, p1).value().unwrap();
        assert!((d + d_rev).abs() < TOL);
    }

    #[test]
    fn profile_of_single_rating_user_is_the_item_signature() {
        let (train, table) = view("1 10 3\n2 10 5\n2 11 3\n");
        let stats = build_histograms(&train);
        let profiles = build_user_profiles(&train, &stats);
        let p = profiles.get(user(&table, 1));
        let sig = stats.signature(item(&table, 10)).unwrap();
        assert_eq!(p.n_items, 1);
        assert_eq!(&p.by_rating[2], &sig.0); // rated 3 -> bin 2
        assert_eq!(&p.sum, &sig.0);
        for (a, row) in p.by_rating.iter().enumerate() {
            if a != 2 {
                assert_eq!(row, &[0.0; BIN_COUNT]);
            }
        }
    }

    #[test]
    fn fixture_profile_matches_hand_sum() {
        let (train, table) = view(FIXTURE);
        let stats = build_histograms(&train);
        let profiles = build_user_profiles(&train, &stats);
        let p = profiles.get(user(&table, 1)); // rated 101=5, 102=3
        let s101 = stats.signature(item(&table, 101)).unwrap();
        let s102 = stats.signature(item(&table, 102)).unwrap();
        assert_eq!(p.n_items, 2);
        assert_eq!(&p.by_rating[4], &s101.0);
        assert_eq!(&p.by_rating[2], &s102.0);
        for h in 0..BIN_COUNT {
            assert!((p.sum[h] - (s101.0[h] + s102.0[h])).abs() < TOL);
        }
    }

    #[test]
    fn constant_raters_hit_the_dif_extreme() {
        // user 1 rates everything 5, user 2 rates everything 1
        let (train, table) = view("1 10 5\n1 11 5\n2 12 1\n2 13 1\n3 10 1\n3 12 5\n");
        let stats = build_histograms(&train);
        let profiles = build_user_profiles(&train, &stats);
        let d = dif_fast(profiles.get(user(&table, 1)), profiles.get(user(&table, 2)));
        match d {
            MaybeScore::Value(v) => assert!((v - 4.0).abs() < TOL),
            other => panic!("expected value, got {other:?}"),
        }
    }

    #[test]
    fn profile_snapshot_round_trips_exactly() {
        let (train, table) = view(FIXTURE);
        let stats = build_histograms(&train);
        let profiles = build_user_profiles(&train, &stats);
        let mut buf = Vec::new();
        export_profiles(&profiles, table.users(), &mut buf).unwrap();
        let back = import_profiles(Cursor::new(&buf), table.users()).unwrap();
        for u in 0..profiles.len() {
            let idx = UserIdx(u as u32);
            assert_eq!(profiles.get(idx), back.get(idx));
        }
    }

    /// Random micro-dataset as rating lines plus the parsed handles.
    fn random_lines(seed: u64, n_users: u64, n_items: u64, n_ratings: usize) -> String {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        (0..n_ratings)
            .map(|_| {
                format!(
                    "{} {} {}\n",
                    rng.gen_range(0..n_users),
                    rng.gen_range(0..n_items),
                    rng.gen_range(1..=5)
                )
            })
            .collect()
    }

    proptest! {
        #[test]
        fn bc_symmetric_and_in_range(seed in 0u64..500) {
            let text = random_lines(seed, 6, 6, 18);
            let (train, table) = view(&text);
            let stats = build_histograms(&train);
            for i in 0..table.n_items() {
                for j in 0..table.n_items() {
                    let (a, b) = (ItemIdx(i as u32), ItemIdx(j as u32));
                    let (Some(sa), Some(sb)) = (stats.signature(a), stats.signature(b)) else {
                        continue;
                    };
                    let ab = bc_items(sa, sb);
                    prop_assert_eq!(ab, bc_items(sb, sa));
                    prop_assert!((0.0..=1.0).contains(&ab));
                }
            }
        }

        #[test]
        fn signatures_have_unit_norm(seed in 0u64..500) {
            let text = random_lines(seed, 6, 6, 18);
            let (train, table) = view(&text);
            let stats = build_histograms(&train);
            for i in 0..table.n_items() {
                if let Some(s) = stats.signature(ItemIdx(i as u32)) {
                    let norm: f64 = s.0.iter().map(|v| v * v).sum();
                    prop_assert!((norm - 1.0).abs() < TOL);
                }
            }
        }

        #[test]
        fn rsp_symmetric_in_unit_range(a in 1u8..=5, b in 1u8..=5) {
            let v = rsp(a, b);
            prop_assert_eq!(v, rsp(b, a));
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(rsp(a, a), 1.0);
        }

        #[test]
        fn fast_kernels_match_naive(seed in 0u64..300) {
            let text = random_lines(seed, 8, 8, 24);
            let (train, table) = view(&text);
            let stats = build_histograms(&train);
            let profiles = build_user_profiles(&train, &stats);
            for qi in 0..table.n_users() {
                for xi in 0..table.n_users() {
                    let (q, x) = (UserIdx(qi as u32), UserIdx(xi as u32));
                    let naive = sim_naive(q, x, &train, &stats);
                    let fast = sim_fast(profiles.get(q), profiles.get(x));
                    match (naive, fast) {
                        (MaybeScore::Value(a), MaybeScore::Value(b)) => {
                            prop_assert!((a - b).abs() <= 1e-9)
                        }
                        (a, b) => prop_assert_eq!(a, b),
                    }
                    let naive = dif_naive(q, x, &train, &stats);
                    let fast = dif_fast(profiles.get(q), profiles.get(x));
                    match (naive, fast) {
                        (MaybeScore::Value(a), MaybeScore::Value(b)) => {
                            prop_assert!((a - b).abs() <= 1e-9)
                        }
                        (a, b) => prop_assert_eq!(a, b),
                    }
                }
            }
        }
    }
}
