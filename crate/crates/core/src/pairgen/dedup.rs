//! Global pair deduplication under a fixed memory budget.
//!
//! Keys are buffered until `budget` records are held, then sorted, made
//! unique and spilled to an anonymous file as fixed 8-byte little-endian
//! records. The spilled runs are combined with a k-way heap merge that drops
//! repeats across runs. If nothing was spilled the buffer is returned
//! directly.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use log::debug;

use super::PairKey;
use crate::error::{Error, Result};

const RECORD: usize = 8;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DedupStats {
    pub input_records: u64,
    pub spilled_runs: usize,
}

struct Run {
    reader: BufReader<File>,
}

impl Run {
    fn next_key(&mut self) -> io::Result<Option<PairKey>> {
        let mut buf = [0u8; RECORD];
        match self.reader.read_exact(&mut buf) {
            Ok(()) => Ok(Some(PairKey::from_bytes(buf))),
            Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => Ok(None),
            Err(e) => Err(e),
        }
    }
}

enum Source {
    Memory(std::vec::IntoIter<PairKey>),
    Merge {
        runs: Vec<Run>,
        heap: BinaryHeap<Reverse<(PairKey, usize)>>,
        last: Option<PairKey>,
    },
}

/// Sorted, duplicate-free pair keys produced by [`dedup_pairs`].
pub struct SortedPairs {
    source: Source,
    stats: DedupStats,
}

impl SortedPairs {
    pub fn stats(&self) -> DedupStats {
        self.stats
    }

    fn next_merged(&mut self) -> Result<Option<PairKey>> {
        let Source::Merge { runs, heap, last } = &mut self.source else {
            unreachable!()
        };
        while let Some(Reverse((key, run))) = heap.pop() {
            if let Some(next) = runs[run]
                .next_key()
                .map_err(|e| Error::resource("reading spill run", e))?
            {
                heap.push(Reverse((next, run)));
            }
            if *last != Some(key) {
                *last = Some(key);
                return Ok(Some(key));
            }
        }
        Ok(None)
    }
}

impl Iterator for SortedPairs {
    type Item = Result<PairKey>;

    fn next(&mut self) -> Option<Self::Item> {
        match &mut self.source {
            Source::Memory(it) => it.next().map(Ok),
            Source::Merge { .. } => self.next_merged().transpose(),
        }
    }
}

fn spill(buffer: &mut Vec<PairKey>, dir: &Path) -> Result<Run> {
    buffer.sort_unstable();
    buffer.dedup();
    let file = tempfile::tempfile_in(dir)
        .map_err(|e| Error::resource(format!("creating spill run in {}", dir.display()), e))?;
    let mut writer = BufWriter::with_capacity(1 << 16, file);
    for key in buffer.drain(..) {
        writer
            .write_all(&key.to_bytes())
            .map_err(|e| Error::resource("writing spill run", e))?;
    }
    let mut file = writer
        .into_inner()
        .map_err(|e| Error::resource("writing spill run", e.into_error()))?;
    file.seek(SeekFrom::Start(0))
        .map_err(|e| Error::resource("rewinding spill run", e))?;
    Ok(Run {
        reader: BufReader::with_capacity(1 << 16, file),
    })
}

/// Sorts and deduplicates `pairs`, holding at most `budget` keys in memory
/// at a time. Runs are spilled under `spill_dir`, which is created if
/// needed. The output does not depend on input order or on `budget`.
pub fn dedup_pairs<I>(pairs: I, budget: usize, spill_dir: &Path) -> Result<SortedPairs>
where
    I: IntoIterator<Item = PairKey>,
{
    if budget == 0 {
        return Err(Error::Config("memory budget must be > 0".into()));
    }
    let mut stats = DedupStats::default();
    let mut buffer = Vec::with_capacity(budget.min(1 << 22));
    let mut runs = Vec::new();
    for key in pairs {
        stats.input_records += 1;
        buffer.push(key);
        if buffer.len() >= budget {
            if runs.is_empty() {
                fs::create_dir_all(spill_dir).map_err(|e| {
                    Error::resource(format!("creating {}", spill_dir.display()), e)
                })?;
            }
            runs.push(spill(&mut buffer, spill_dir)?);
        }
    }

    if runs.is_empty() {
        buffer.sort_unstable();
        buffer.dedup();
        return Ok(SortedPairs {
            source: Source::Memory(buffer.into_iter()),
            stats,
        });
    }
    if !buffer.is_empty() {
        runs.push(spill(&mut buffer, spill_dir)?);
    }
    stats.spilled_runs = runs.len();
    debug!(
        "dedup: {} records spilled into {} runs",
        stats.input_records, stats.spilled_runs
    );

    let mut heap = BinaryHeap::with_capacity(runs.len());
    for (i, run) in runs.iter_mut().enumerate() {
        if let Some(key) = run
            .next_key()
            .map_err(|e| Error::resource("reading spill run", e))?
        {
            heap.push(Reverse((key, i)));
        }
    }
    Ok(SortedPairs {
        source: Source::Merge {
            runs,
            heap,
            last: None,
        },
        stats,
    })
}
