//! Shared fixtures for the integration suites.
#![allow(dead_code)] // each test binary uses a different subset

use std::io::Cursor;
use std::path::PathBuf;

use bcrec::dataset::{parse_ratings, parse_trust, RatingsTable, TrustGraph};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random micro-dataset: at most 10 users, 10 items, 40 ratings, and 10
/// trust edges, fully determined by the seed.
pub fn micro_dataset(seed: u64) -> (RatingsTable, TrustGraph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_users = rng.gen_range(1..=10u64);
    let n_items = rng.gen_range(1..=10u64);
    let n_ratings = rng.gen_range(0..=40usize);
    let n_trust = rng.gen_range(0..=10usize);

    let ratings: String = (0..n_ratings)
        .map(|_| {
            format!(
                "{} {} {}\n",
                rng.gen_range(0..n_users),
                rng.gen_range(0..n_items),
                rng.gen_range(1..=5)
            )
        })
        .collect();
    let trust: String = (0..n_trust)
        .map(|_| {
            format!(
                "{} {} 1\n",
                rng.gen_range(0..n_users),
                rng.gen_range(0..n_users)
            )
        })
        .collect();

    (
        parse_ratings(Cursor::new(ratings)).unwrap(),
        parse_trust(Cursor::new(trust)).unwrap(),
    )
}

/// Synthetic dataset with skewed item popularity and a top-heavy rating
/// distribution, shaped like a small review site.
pub fn synthetic_dataset(
    seed: u64,
    n_users: u64,
    n_items: u64,
    n_ratings: usize,
    n_trust: usize,
) -> (RatingsTable, TrustGraph) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick_rating = |rng: &mut ChaCha8Rng| -> u8 {
        let roll: f64 = rng.gen();
        match roll {
            r if r < 0.05 => 1,
            r if r < 0.15 => 2,
            r if r < 0.30 => 3,
            r if r < 0.60 => 4,
            _ => 5,
        }
    };
    let ratings: String = (0..n_ratings)
        .map(|_| {
            let user = (n_users as f64 * rng.gen::<f64>().powf(1.5)) as u64 % n_users;
            let item = (n_items as f64 * rng.gen::<f64>().powf(3.0)) as u64 % n_items;
            let rating = pick_rating(&mut rng);
            format!("{user} {item} {rating}\n")
        })
        .collect();
    let trust: String = (0..n_trust)
        .map(|_| {
            let a = (n_users as f64 * rng.gen::<f64>().powf(1.5)) as u64 % n_users;
            let b = rng.gen_range(0..n_users);
            format!("{a} {b} 1\n")
        })
        .collect();
    (
        parse_ratings(Cursor::new(ratings)).unwrap(),
        parse_trust(Cursor::new(trust)).unwrap(),
    )
}

/// Location of the real dataset files, when present: the `data/`
/// directory at the repository root (override with `BCREC_EPINIONS_DIR`),
/// holding `ratings_data.txt` and `trust_data.txt`.
pub fn epinions_paths() -> Option<(PathBuf, PathBuf)> {
    let dir = std::env::var_os("BCREC_EPINIONS_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| {
            PathBuf::from(env!("CARGO_MANIFEST_DIR"))
                .join("..")
                .join("..")
                .join("data")
        });
    let ratings = dir.join("ratings_data.txt");
    let trust = dir.join("trust_data.txt");
    (ratings.is_file() && trust.is_file()).then_some((ratings, trust))
}

/// Seeded uniform subsample of a table's records, re-serialized through
/// the line format so it behaves exactly like a smaller input file.
pub fn subsample_table(table: &RatingsTable, fraction: f64, seed: u64) -> RatingsTable {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..table.n_ratings()).collect();
    indices.shuffle(&mut rng);
    let keep = ((table.n_ratings() as f64) * fraction).round() as usize;
    indices.truncate(keep);
    indices.sort_unstable();
    let lines: String = indices
        .iter()
        .map(|&i| {
            let r = table.records()[i];
            format!(
                "{} {} {}\n",
                table.users().external(r.user.0),
                table.items().external(r.item.0),
                r.rating
            )
        })
        .collect();
    parse_ratings(Cursor::new(lines)).unwrap()
}
