//! Ratings and trust ingestion, fold splitting, and train/test views.
//!
//! External ids are opaque non-negative integers taken from the input
//! files. At ingestion they are remapped to dense indices ([`UserIdx`],
//! [`ItemIdx`]) so that every downstream structure can be array-backed;
//! the original ids are kept in an [`IdMap`] side table for reporting.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::similarity::{RATING_MAX, RATING_MIN};

/// Dense index of a user inside a [`RatingsTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UserIdx(pub u32);

/// Dense index of an item inside a [`RatingsTable`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ItemIdx(pub u32);

impl UserIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl ItemIdx {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// One deduplicated `(user, item, rating)` triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RatingRecord {
    pub user: UserIdx,
    pub item: ItemIdx,
    pub rating: u8,
}

/// Bidirectional map between external ids and dense indices.
///
/// Indices are assigned in order of first appearance, so a given input
/// file always produces the same mapping.
#[derive(Debug, Clone, Default)]
pub struct IdMap {
    forward: HashMap<u64, u32>,
    backward: Vec<u64>,
}

impl IdMap {
    fn intern(&mut self, external: u64) -> u32 {
        match self.forward.get(&external) {
            Some(&idx) => idx,
            None => {
                let idx = self.backward.len() as u32;
                self.forward.insert(external, idx);
                self.backward.push(external);
                idx
            }
        }
    }

    pub fn resolve(&self, external: u64) -> Option<u32> {
        self.forward.get(&external).copied()
    }

    pub fn external(&self, idx: u32) -> u64 {
        self.backward[idx as usize]
    }

    pub fn len(&self) -> usize {
        self.backward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.backward.is_empty()
    }
}

/// Dual-indexed sparse rating store.
///
/// `by_user` and `by_item` hold exactly the same triples; both lists are
/// sorted by the secondary index so lookups can binary-search.
#[derive(Debug, Clone)]
pub struct RatingsTable {
    records: Vec<RatingRecord>,
    by_user: Vec<Vec<(ItemIdx, u8)>>,
    by_item: Vec<Vec<(UserIdx, u8)>>,
    users: IdMap,
    items: IdMap,
    /// Lines whose rating fell outside the valid scale; skipped, not fatal.
    pub n_rejected: usize,
    /// Duplicate `(user, item)` lines resolved by keeping the last value.
    pub n_duplicates: usize,
}

impl RatingsTable {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_ratings(&self) -> usize {
        self.records.len()
    }

    pub fn records(&self) -> &[RatingRecord] {
        &self.records
    }

    pub fn by_user(&self, user: UserIdx) -> &[(ItemIdx, u8)] {
        &self.by_user[user.index()]
    }

    pub fn by_item(&self, item: ItemIdx) -> &[(UserIdx, u8)] {
        &self.by_item[item.index()]
    }

    pub fn users(&self) -> &IdMap {
        &self.users
    }

    pub fn items(&self) -> &IdMap {
        &self.items
    }

    /// `1 - n_ratings / (n_users * n_items)`.
    pub fn sparsity(&self) -> f64 {
        let cells = self.n_users() as f64 * self.n_items() as f64;
        if cells == 0.0 {
            return 0.0;
        }
        1.0 - self.n_ratings() as f64 / cells
    }

    /// Writes the table back in the `user item rating` line format.
    pub fn write_lines<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.records {
            writeln!(
                out,
                "{} {} {}",
                self.users.external(r.user.0),
                self.items.external(r.item.0),
                r.rating
            )?;
        }
        Ok(())
    }
}

/// Parses `user item rating` lines into a [`RatingsTable`].
///
/// Duplicate `(user, item)` pairs keep the last occurrence. Ratings
/// outside the valid scale are counted in `n_rejected` and skipped so a
/// single bad line cannot abort a large ingest; structurally malformed
/// lines are an error carrying the 1-based line number.
pub fn parse_ratings<R: BufRead>(reader: R) -> Result<RatingsTable> {
    let mut users = IdMap::default();
    let mut items = IdMap::default();
    let mut records: Vec<RatingRecord> = Vec::new();
    let mut seen: HashMap<(u32, u32), usize> = HashMap::new();
    let mut n_rejected = 0usize;
    let mut n_duplicates = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let mut fields = line.split_whitespace();
        let (user, item, rating) = match (fields.next(), fields.next(), fields.next()) {
            (None, _, _) => continue, // blank line
            (Some(u), Some(i), Some(r)) => (u, i, r),
            _ => return Err(Error::parse(lineno, format!("expected `user item rating`, got {line:?}"))),
        };
        if fields.next().is_some() {
            return Err(Error::parse(lineno, format!("trailing fields in {line:?}")));
        }
        let user: u64 = user
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad user id {user:?}")))?;
        let item: u64 = item
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad item id {item:?}")))?;
        let rating: i64 = rating
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad rating {rating:?}")))?;

        // ids register even when the rating is rejected: the line still
        // names a user and an item that exist in the dataset universe
        let u = users.intern(user);
        let i = items.intern(item);
        if rating < RATING_MIN as i64 || rating > RATING_MAX as i64 {
            n_rejected += 1;
            continue;
        }
        let record = RatingRecord {
            user: UserIdx(u),
            item: ItemIdx(i),
            rating: rating as u8,
        };
        match seen.get(&(u, i)) {
            Some(&pos) => {
                records[pos] = record;
                n_duplicates += 1;
            }
            None => {
                seen.insert((u, i), records.len());
                records.push(record);
            }
        }
    }

    let mut by_user: Vec<Vec<(ItemIdx, u8)>> = vec![Vec::new(); users.len()];
    let mut by_item: Vec<Vec<(UserIdx, u8)>> = vec![Vec::new(); items.len()];
    for r in &records {
        by_user[r.user.index()].push((r.item, r.rating));
        by_item[r.item.index()].push((r.user, r.rating));
    }
    for list in &mut by_user {
        list.sort_unstable_by_key(|(item, _)| *item);
    }
    for list in &mut by_item {
        list.sort_unstable_by_key(|(user, _)| *user);
    }

    Ok(RatingsTable {
        records,
        by_user,
        by_item,
        users,
        items,
        n_rejected,
        n_duplicates,
    })
}

/// Directed trust graph over external user ids.
///
/// Self-edges are dropped and duplicate edges collapsed at ingestion;
/// the raw line count is kept so both figures can be reported.
#[derive(Debug, Clone, Default)]
pub struct TrustGraph {
    out_edges: BTreeMap<u64, BTreeSet<u64>>,
    /// Valid edge lines before self-edge and duplicate removal.
    pub n_raw_edges: usize,
    pub n_self_edges: usize,
    pub n_duplicate_edges: usize,
    /// Distinct non-self edges.
    pub n_edges: usize,
}

impl TrustGraph {
    pub fn trustees(&self, user: u64) -> Option<&BTreeSet<u64>> {
        self.out_edges.get(&user)
    }

    pub fn n_trustors(&self) -> usize {
        self.out_edges.len()
    }

    /// Maps the graph onto a table's dense user indices.
    ///
    /// Trustors or trustees absent from the ratings data cannot be indexed
    /// and are dropped; they are counted for diagnostics since such users
    /// could never contribute a similarity term anyway.
    pub fn resolve(&self, users: &IdMap) -> TrustIndex {
        let mut trustees_of = vec![Vec::new(); users.len()];
        let mut n_unknown_trustees = 0usize;
        let mut n_unknown_trustors = 0usize;
        for (&trustor, trustees) in &self.out_edges {
            let Some(t) = users.resolve(trustor) else {
                n_unknown_trustors += 1;
                continue;
            };
            let mut resolved: Vec<UserIdx> = Vec::with_capacity(trustees.len());
            for &trustee in trustees {
                match users.resolve(trustee) {
                    Some(idx) => resolved.push(UserIdx(idx)),
                    None => n_unknown_trustees += 1,
                }
            }
            resolved.sort_unstable();
            trustees_of[t as usize] = resolved;
        }
        TrustIndex {
            trustees_of,
            n_unknown_trustees,
            n_unknown_trustors,
        }
    }
}

/// Trust adjacency in dense index space, ready for prediction.
#[derive(Debug, Clone)]
pub struct TrustIndex {
    trustees_of: Vec<Vec<UserIdx>>,
    pub n_unknown_trustees: usize,
    pub n_unknown_trustors: usize,
}

impl TrustIndex {
    /// Index with no edges at all, for trust-less runs.
    pub fn empty(n_users: usize) -> Self {
        TrustIndex {
            trustees_of: vec![Vec::new(); n_users],
            n_unknown_trustees: 0,
            n_unknown_trustors: 0,
        }
    }

    pub fn trustees_of(&self, user: UserIdx) -> &[UserIdx] {
        &self.trustees_of[user.index()]
    }
}

/// Parses `truster trustee [weight]` lines. The weight column, when
/// present, is ignored (the dataset uses constant 1).
pub fn parse_trust<R: BufRead>(reader: R) -> Result<TrustGraph> {
    let mut graph = TrustGraph::default();
    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line?;
        let mut fields = line.split_whitespace();
        let (trustor, trustee) = match (fields.next(), fields.next()) {
            (None, _) => continue,
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::parse(lineno, format!("expected `truster trustee`, got {line:?}"))),
        };
        // at most one extra (weight) field
        if fields.next().is_some() && fields.next().is_some() {
            return Err(Error::parse(lineno, format!("trailing fields in {line:?}")));
        }
        let trustor: u64 = trustor
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad truster id {trustor:?}")))?;
        let trustee: u64 = trustee
            .parse()
            .map_err(|_| Error::parse(lineno, format!("bad trustee id {trustee:?}")))?;

        graph.n_raw_edges += 1;
        if trustor == trustee {
            graph.n_self_edges += 1;
            continue;
        }
        if graph.out_edges.entry(trustor).or_default().insert(trustee) {
            graph.n_edges += 1;
        } else {
            graph.n_duplicate_edges += 1;
        }
    }
    Ok(graph)
}

/// Assignment of every rating record to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    fold_of: Vec<u32>,
    pub k: usize,
    pub seed: u64,
}

impl FoldSplit {
    pub fn fold_of(&self, record_index: usize) -> usize {
        self.fold_of[record_index] as usize
    }

    pub fn n_records(&self) -> usize {
        self.fold_of.len()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &f in &self.fold_of {
            sizes[f as usize] += 1;
        }
        sizes
    }

    /// Writes one `record_index fold_id` line per record.
    pub fn write_lines<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (idx, &fold) in self.fold_of.iter().enumerate() {
            writeln!(out, "{idx} {fold}")?;
        }
        Ok(())
    }

    pub fn read_lines<R: BufRead>(reader: R, k: usize, seed: u64) -> Result<FoldSplit> {
        let mut fold_of = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line?;
            let mut fields = line.split_whitespace();
            let (Some(idx), Some(fold)) = (fields.next(), fields.next()) else {
                continue;
            };
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad record index {idx:?}")))?;
            let fold: u32 = fold
                .parse()
                .map_err(|_| Error::parse(lineno, format!("bad fold id {fold:?}")))?;
            if idx != fold_of.len() {
                return Err(Error::parse(lineno, "record indices must be consecutive from 0"));
            }
            if fold as usize >= k {
                return Err(Error::parse(lineno, format!("fold id {fold} out of range for k={k}")));
            }
            fold_of.push(fold);
        }
        Ok(FoldSplit { fold_of, k, seed })
    }
}

/// Randomly partitions record indices into `k` near-equal folds.
///
/// A seeded permutation is chunked so fold sizes differ by at most one;
/// the same `(table, k, seed)` always yields the same assignment.
pub fn split_folds(table: &RatingsTable, k: usize, seed: u64) -> Result<FoldSplit> {
    let n = table.n_ratings();
    if k < 2 {
        return Err(Error::InvalidArgument(format!("fold count must be at least 2, got {k}")));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "fold count {k} exceeds number of ratings {n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let base = n / k;
    let extra = n % k;
    let mut fold_of = vec![0u32; n];
    let mut pos = 0usize;
    for fold in 0..k {
        let size = base + usize::from(fold < extra);
        for &record in &order[pos..pos + size] {
            fold_of[record] = fold as u32;
        }
        pos += size;
    }
    Ok(FoldSplit {
        fold_of,
        k,
        seed,
    })
}

/// Training ratings re-indexed both ways over the full id universe of the
/// parent table. Users or items whose every rating fell outside the
/// training folds simply have empty lists.
#[derive(Debug, Clone)]
pub struct TrainView {
    by_user: Vec<Vec<(ItemIdx, u8)>>,
    by_item: Vec<Vec<(UserIdx, u8)>>,
    n_ratings: usize,
}

impl TrainView {
    fn from_records<'a>(
        n_users: usize,
        n_items: usize,
        records: impl Iterator<Item = &'a RatingRecord>,
    ) -> TrainView {
        let mut by_user: Vec<Vec<(ItemIdx, u8)>> = vec![Vec::new(); n_users];
        let mut by_item: Vec<Vec<(UserIdx, u8)>> = vec![Vec::new(); n_items];
        let mut n_ratings = 0usize;
        for r in records {
            by_user[r.user.index()].push((r.item, r.rating));
            by_item[r.item.index()].push((r.user, r.rating));
            n_ratings += 1;
        }
        for list in &mut by_user {
            list.sort_unstable_by_key(|(item, _)| *item);
        }
        for list in &mut by_item {
            list.sort_unstable_by_key(|(user, _)| *user);
        }
        TrainView {
            by_user,
            by_item,
            n_ratings,
        }
    }

    /// View over every rating in the table (no held-out fold).
    pub fn full(table: &RatingsTable) -> TrainView {
        TrainView::from_records(table.n_users(), table.n_items(), table.records().iter())
    }

    pub fn n_users(&self) -> usize {
        self.by_user.len()
    }

    pub fn n_items(&self) -> usize {
        self.by_item.len()
    }

    pub fn n_ratings(&self) -> usize {
        self.n_ratings
    }

    /// Items rated by `user` in training, with rates (sorted by item).
    pub fn items_of(&self, user: UserIdx) -> &[(ItemIdx, u8)] {
        &self.by_user[user.index()]
    }

    /// Users who rated `item` in training, with rates (sorted by user).
    pub fn scorers_of(&self, item: ItemIdx) -> &[(UserIdx, u8)] {
        &self.by_item[item.index()]
    }

    pub fn contains(&self, user: UserIdx, item: ItemIdx) -> bool {
        self.by_user[user.index()]
            .binary_search_by_key(&item, |(i, _)| *i)
            .is_ok()
    }
}

/// Builds the training view over `train_folds` and the held-out test set
/// of `test_fold`. Folds in neither set are dropped, which is how the
/// reduced-training replication mode is expressed.
pub fn train_test_views(
    table: &RatingsTable,
    split: &FoldSplit,
    test_fold: usize,
    train_folds: &BTreeSet<usize>,
) -> Result<(TrainView, Vec<RatingRecord>)> {
    if split.n_records() != table.n_ratings() {
        return Err(Error::InvalidArgument(
            "fold split does not match table size".into(),
        ));
    }
    if test_fold >= split.k {
        return Err(Error::InvalidArgument(format!(
            "test fold {test_fold} out of range for k={}",
            split.k
        )));
    }
    if let Some(&bad) = train_folds.iter().find(|&&f| f >= split.k) {
        return Err(Error::InvalidArgument(format!(
            "train fold {bad} out of range for k={}",
            split.k
        )));
    }
    if train_folds.contains(&test_fold) {
        return Err(Error::InvalidArgument(format!(
            "test fold {test_fold} overlaps the training folds"
        )));
    }

    let mut test = Vec::new();
    let train_records = table.records().iter().enumerate().filter_map(|(idx, r)| {
        let fold = split.fold_of(idx);
        if fold == test_fold {
            test.push(*r);
            None
        } else if train_folds.contains(&fold) {
            Some(r)
        } else {
            None
        }
    });
    // collect so `test` is fully populated by the time the view is built
    let train_records: Vec<&RatingRecord> = train_records.collect();
    let view = TrainView::from_records(table.n_users(), table.n_items(), train_records.into_iter());
    Ok((view, test))
}

/// All folds except `test_fold`; the standard k-fold training rule.
pub fn all_but(k: usize, test_fold: usize) -> BTreeSet<usize> {
    (0..k).filter(|&f| f != test_fold).collect()
}
