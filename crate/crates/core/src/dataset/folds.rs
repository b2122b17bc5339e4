use std::collections::{BTreeMap, BTreeSet};

use super::stream::SplitMix64;
use super::DatasetManifest;
use crate::error::{Error, Result};

/// Stratified, seeded k-fold assignment.
///
/// 1. Entries are sorted by tile id, so insertion order never matters.
/// 2. They are grouped by their `classes_present` set; groups are visited in
///    ascending order of that set.
/// 3. One SplitMix64 stream seeded with `seed` shuffles each group in turn
///    (Fisher-Yates, see [`SplitMix64::shuffle`]).
/// 4. Shuffled entries are dealt round-robin to folds 0..k, the dealer
///    position carrying over from one group to the next.
///
/// Within a group fold sizes differ by at most one, and the carry-over keeps
/// overall fold sizes within one of each other as well.
pub fn assign_folds(manifest: &DatasetManifest, k: usize, seed: u64) -> Result<DatasetManifest> {
    if k < 2 {
        return Err(Error::InvalidParam(format!("k must be at least 2, got {k}")));
    }
    if manifest.entries.len() < k {
        return Err(Error::Dataset(format!(
            "cannot split {} entries into {k} folds",
            manifest.entries.len()
        )));
    }
    let mut out = manifest.clone();
    out.entries.sort_by(|a, b| a.tile_id.cmp(&b.tile_id));

    let mut strata: BTreeMap<&BTreeSet<u8>, Vec<usize>> = BTreeMap::new();
    for (i, e) in out.entries.iter().enumerate() {
        strata.entry(&e.classes_present).or_default().push(i);
    }
    let mut rng = SplitMix64::new(seed);
    let mut folds = vec![0usize; out.entries.len()];
    let mut dealer = 0usize;
    for members in strata.into_values() {
        let mut members = members;
        rng.shuffle(&mut members);
        for idx in members {
            folds[idx] = dealer % k;
            dealer += 1;
        }
    }
    for (e, f) in out.entries.iter_mut().zip(folds) {
        e.fold = Some(f);
    }
    out.k = Some(k);
    out.seed = Some(seed);
    Ok(out)
}
