//! Co-cited pair generation, global deduplication and co-citation counting.

mod count;
mod dedup;
mod files;

pub use count::{
    citation_series, count_pair, count_parallel, count_total, count_yearly, CitingIndex,
    PairCount, PairFrequency,
};
pub use dedup::{dedup_pairs, DedupStats, SortedPairs};
pub use files::{
    read_frequencies_csv, read_kinetics_long, read_pairs_csv, write_frequencies_csv, write_kinetics_long,
    write_kinetics_wide, write_pairs_csv, KineticsFormat, KineticsWriter, FREQUENCIES_HEADER, KINETICS_LONG_HEADER, PAIRS_HEADER,
};

use crate::error::{Error, Result};
use crate::ingest::{Catalog, NodeIx};

/// Canonically ordered pair of distinct publications, `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairKey {
    pub a: NodeIx,
    pub b: NodeIx,
}

impl PairKey {
    /// Orders `x` and `y`; `None` if they are the same publication.
    pub fn new(x: NodeIx, y: NodeIx) -> Option<Self> {
        match x.cmp(&y) {
            std::cmp::Ordering::Less => Some(PairKey { a: x, b: y }),
            std::cmp::Ordering::Greater => Some(PairKey { a: y, b: x }),
            std::cmp::Ordering::Equal => None,
        }
    }

    pub(crate) fn to_bytes(self) -> [u8; 8] {
        let mut out = [0u8; 8];
        out[..4].copy_from_slice(&self.a.to_le_bytes());
        out[4..].copy_from_slice(&self.b.to_le_bytes());
        out
    }

    pub(crate) fn from_bytes(bytes: [u8; 8]) -> Self {
        PairKey {
            a: NodeIx::from_le_bytes(bytes[..4].try_into().unwrap()),
            b: NodeIx::from_le_bytes(bytes[4..].try_into().unwrap()),
        }
    }
}

/// A co-cited pair together with the first year in which a co-citation is
/// possible: the later of the two publication years.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CoCitedPair {
    pub key: PairKey,
    pub first_possible_year: i32,
}

impl CoCitedPair {
    pub fn new(x: NodeIx, y: NodeIx, catalog: &Catalog) -> Result<Self> {
        let key = PairKey::new(x, y).ok_or_else(|| {
            Error::Contract(format!("pair of {} with itself", catalog.id(x)))
        })?;
        Self::from_key(key, catalog)
    }

    pub fn from_key(key: PairKey, catalog: &Catalog) -> Result<Self> {
        let year = |ix| {
            catalog.year(ix).ok_or_else(|| {
                Error::Contract(format!("pair member {} has no year", catalog.id(ix)))
            })
        };
        Ok(CoCitedPair {
            key,
            first_possible_year: year(key.a)?.max(year(key.b)?),
        })
    }

    pub fn ids<'c>(&self, catalog: &'c Catalog) -> (&'c str, &'c str) {
        (catalog.id(self.key.a), catalog.id(self.key.b))
    }
}

/// All `n(n-1)/2` canonical pairs of a reference set, in ascending order.
pub fn enumerate_pairs(refs: &[NodeIx], catalog: &Catalog) -> Result<PairEnumerator> {
    let mut refs = refs.to_vec();
    refs.sort_unstable();
    refs.dedup();
    if refs.len() < 2 {
        return Err(Error::Contract(format!(
            "need at least 2 distinct references, got {}",
            refs.len()
        )));
    }
    let years = refs
        .iter()
        .map(|&r| {
            catalog.year(r).ok_or_else(|| {
                Error::Contract(format!("reference {} has no year", catalog.id(r)))
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PairEnumerator {
        refs,
        years,
        i: 0,
        j: 1,
    })
}

#[derive(Debug, Clone)]
pub struct PairEnumerator {
    refs: Vec<NodeIx>,
    years: Vec<i32>,
    i: usize,
    j: usize,
}

impl Iterator for PairEnumerator {
    type Item = CoCitedPair;

    fn next(&mut self) -> Option<CoCitedPair> {
        if self.j >= self.refs.len() {
            self.i += 1;
            self.j = self.i + 1;
            if self.j >= self.refs.len() {
                return None;
            }
        }
        let (i, j) = (self.i, self.j);
        self.j += 1;
        Some(CoCitedPair {
            key: PairKey {
                a: self.refs[i],
                b: self.refs[j],
            },
            first_possible_year: self.years[i].max(self.years[j]),
        })
    }
}

/// Pair keys of a sorted, duplicate-free reference list, without year
/// lookups. Used on the hot path feeding deduplication.
pub fn enumerate_keys(refs: &[NodeIx]) -> impl Iterator<Item = PairKey> + '_ {
    debug_assert!(refs.windows(2).all(|w| w[0] < w[1]));
    refs.iter().enumerate().flat_map(move |(i, &a)| {
        refs[i + 1..].iter().map(move |&b| PairKey { a, b })
    })
}
