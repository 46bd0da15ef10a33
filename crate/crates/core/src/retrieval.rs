//! Cross-view retrieval scoring: signed feature hashing of token streams, projection of
//! held-out rows into the latent space, and rank-based accuracy (AROC, nearest-neighbour
//! frequency) over every ordered pair of views.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{DenseMat, SparseView};

pub const DEFAULT_HASH_BITS: u32 = 19;
pub const MAX_HASH_BITS: u32 = 30;

/// Version of the pinned hash functions below. Bump on any change, since hashed corpora are
/// expected to be reproducible byte-for-byte.
pub const HASH_VERSION: u32 = 1;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;
const SLOT_SALT: u64 = 0x736c_6f74_5f68_6173;
const SIGN_SALT: u64 = 0x7369_676e_5f68_6173;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded FNV-1a over the token bytes, finished with a splitmix64 avalanche.
fn token_hash(seed: u64, salt: u64, token: &[u8]) -> u64 {
    let mut h = FNV_OFFSET ^ splitmix64(seed ^ salt);
    for &b in token {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    splitmix64(h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HashSpec {
    pub bits: u32,
    pub seed: u64,
}

impl Default for HashSpec {
    fn default() -> Self {
        HashSpec {
            bits: DEFAULT_HASH_BITS,
            seed: 0,
        }
    }
}

impl HashSpec {
    pub fn new(bits: u32, seed: u64) -> Result<Self> {
        let spec = HashSpec { bits, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_HASH_BITS).contains(&self.bits) {
            return Err(Error::InvalidArgument(format!(
                "hash bit width {} outside 1..={MAX_HASH_BITS}",
                self.bits
            )));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        1usize << self.bits
    }

    /// Slot and sign of one token.
    pub fn bucket(&self, token: &str) -> (usize, f64) {
        let slot = token_hash(self.seed, SLOT_SALT, token.as_bytes()) & (self.dim() as u64 - 1);
        let sign = if token_hash(self.seed, SIGN_SALT, token.as_bytes()) >> 63 == 0 {
            1.0
        } else {
            -1.0
        };
        (slot as usize, sign)
    }
}

/// A hashed document: sorted slots with their nonzero accumulated values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HashedRow {
    pub dim: usize,
    pub entries: Vec<(usize, f64)>,
}

impl HashedRow {
    fn from_map(dim: usize, map: BTreeMap<usize, f64>) -> Self {
        HashedRow {
            dim,
            entries: map.into_iter().filter(|&(_, v)| v != 0.0).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dot(&self, other: &HashedRow) -> f64 {
        let (mut a, mut b) = (
            self.entries.iter().peekable(),
            other.entries.iter().peekable(),
        );
        let mut acc = 0.0;
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    acc += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        acc
    }

    pub fn add(&self, other: &HashedRow) -> HashedRow {
        let mut map: BTreeMap<usize, f64> = self.entries.iter().copied().collect();
        for &(s, v) in &other.entries {
            *map.entry(s).or_insert(0.0) += v;
        }
        HashedRow::from_map(self.dim.max(other.dim), map)
    }
}

/// Signed hashing: every occurrence of a token adds its sign at its slot.
pub fn hash_featurize<S: AsRef<str>>(tokens: &[S], spec: &HashSpec) -> HashedRow {
    let mut map = BTreeMap::new();
    for t in tokens {
        let (slot, sign) = spec.bucket(t.as_ref());
        *map.entry(slot).or_insert(0.0) += sign;
    }
    HashedRow::from_map(spec.dim(), map)
}

/// One document per line, whitespace-separated tokens, hashed into an `L x 2^b` view.
pub fn hash_documents(text: &str, spec: &HashSpec) -> Result<SparseView> {
    spec.validate()?;
    let rows: Vec<HashedRow> = text
        .lines()
        .map(|line| hash_featurize(&line.split_whitespace().collect::<Vec<_>>(), spec))
        .collect();
    rows_to_view(&rows, spec.dim())
}

pub fn rows_to_view(rows: &[HashedRow], dim: usize) -> Result<SparseView> {
    let trip = rows
        .iter()
        .enumerate()
        .flat_map(|(r, row)| row.entries.iter().map(move |&(c, v)| (r, c, v)));
    SparseView::from_triplets(rows.len(), dim, trip)
}

/// Latent coordinates `X̂·Q` of held-out rows.
pub fn project(xhat: &SparseView, q: &DenseMat) -> Result<DenseMat> {
    xhat.spmm_right(q)
}

/// `D[l][m] = ‖P_i(l,:) − P_j(m,:)‖₂`, with queries from view `i` along the rows.
pub fn cross_distances(p_i: &DenseMat, p_j: &DenseMat) -> Result<DenseMat> {
    if p_i.cols() != p_j.cols() {
        return Err(Error::dim("cross_distances", p_i.cols(), p_j.cols()));
    }
    let (t_i, t_j) = (p_i.rows(), p_j.rows());
    let data: Vec<f64> = (0..t_i)
        .into_par_iter()
        .flat_map_iter(|l| {
            let a = p_i.row(l);
            (0..t_j).map(move |m| {
                a.iter()
                    .zip(p_j.row(m))
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            })
        })
        .collect();
    DenseMat::from_vec(t_i, t_j, data)
}

fn check_square(dist: &DenseMat) -> Result<usize> {
    if dist.rows() != dist.cols() {
        return Err(Error::dim("distance matrix", dist.rows(), dist.cols()));
    }
    Ok(dist.rows())
}

/// 1-based rank of the true match `l` in row `l`. Ties go to the true match.
pub fn true_match_rank(dist: &DenseMat, l: usize) -> usize {
    let row = dist.row(l);
    let own = row[l];
    1 + row.iter().filter(|&&d| d < own).count()
}

/// `(1 − (p − 1)/(|T| − 1)) · 100`.
pub fn aroc_from_rank(rank: usize, t: usize) -> Result<f64> {
    if t < 2 {
        return Err(Error::InvalidArgument(format!(
            "AROC needs at least 2 test rows, got {t}"
        )));
    }
    if rank == 0 || rank > t {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} outside 1..={t}"
        )));
    }
    Ok((1.0 - (rank - 1) as f64 / (t - 1) as f64) * 100.0)
}

/// AROC for query `l`.
pub fn aroc(dist: &DenseMat, l: usize) -> Result<f64> {
    let t = check_square(dist)?;
    if l >= t {
        return Err(Error::InvalidArgument(format!("query {l} outside 0..{t}")));
    }
    aroc_from_rank(true_match_rank(dist, l), t)
}

/// Mean AROC over all queries.
pub fn mean_aroc(dist: &DenseMat) -> Result<f64> {
    let t = check_square(dist)?;
    let per: Vec<f64> = (0..t)
        .into_par_iter()
        .map(|l| aroc_from_rank(true_match_rank(dist, l), t))
        .collect::<Result<_>>()?;
    Ok(per.iter().sum::<f64>() / t as f64)
}

/// Percentage of queries whose true match ranks first.
pub fn nn_freq(dist: &DenseMat) -> Result<f64> {
    let t = check_square(dist)?;
    if t == 0 {
        return Err(Error::InvalidArgument(
            "nn_freq needs at least 1 test row".into(),
        ));
    }
    let hits = (0..t).filter(|&l| true_match_rank(dist, l) == 1).count();
    Ok(100.0 * hits as f64 / t as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairScore {
    /// Query view.
    pub i: usize,
    /// Target view.
    pub j: usize,
    pub aroc: f64,
    pub nn_freq: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RetrievalResult {
    /// Ordered pairs `(i, j)`, `i ≠ j`, in lexicographic order.
    pub pairs: Vec<PairScore>,
    /// Per view: mean `(aroc, nn_freq)` over the pairs where that view issues the queries.
    pub per_view: Vec<(f64, f64)>,
    pub mean_aroc: f64,
    pub mean_nn_freq: f64,
}

pub fn evaluate_pairs(test_views: &[SparseView], qs: &[DenseMat]) -> Result<RetrievalResult> {
    if test_views.len() != qs.len() {
        return Err(Error::dim("evaluate_pairs", test_views.len(), qs.len()));
    }
    if test_views.len() < 2 {
        return Err(Error::InvalidArgument(
            "retrieval needs at least two views".into(),
        ));
    }
    let t = test_views[0].rows();
    if let Some((i, x)) = test_views.iter().enumerate().find(|(_, x)| x.rows() != t) {
        return Err(Error::dim(
            "evaluate_pairs",
            format!("{t} aligned rows"),
            format!("{} rows in view {i}", x.rows()),
        ));
    }
    let projected = test_views
        .par_iter()
        .zip(qs)
        .map(|(x, q)| project(x, q))
        .collect::<Result<Vec<_>>>()?;
    let n = projected.len();
    let ordered: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
        .collect();
    let pairs = ordered
        .par_iter()
        .map(|&(i, j)| {
            let dist = cross_distances(&projected[i], &projected[j])?;
            Ok(PairScore {
                i,
                j,
                aroc: mean_aroc(&dist)?,
                nn_freq: nn_freq(&dist)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let per_view = (0..n)
        .map(|v| {
            let mine: Vec<&PairScore> = pairs.iter().filter(|p| p.i == v).collect();
            let m = mine.len() as f64;
            (
                mine.iter().map(|p| p.aroc).sum::<f64>() / m,
                mine.iter().map(|p| p.nn_freq).sum::<f64>() / m,
            )
        })
        .collect();
    let m = pairs.len() as f64;
    Ok(RetrievalResult {
        mean_aroc: pairs.iter().map(|p| p.aroc).sum::<f64>() / m,
        mean_nn_freq: pairs.iter().map(|p| p.nn_freq).sum::<f64>() / m,
        pairs,
        per_view,
    })
}

/// Row indices split 70/20/10 into train / validation / test after a seeded shuffle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowSplit {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn split_rows(n: usize, seed: u64) -> RowSplit {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = n * 7 / 10;
    let n_val = n * 2 / 10;
    let test = idx.split_off(n_train + n_val);
    let validation = idx.split_off(n_train);
    RowSplit {
        train: idx,
        validation,
        test,
    }
}
