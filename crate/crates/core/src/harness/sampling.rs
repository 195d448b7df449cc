use std::collections::BTreeMap;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernel::{ClassId, LabelVector};

/// Per-class quotas for `count` labels spread as evenly as possible; the
/// remainder goes one each to the largest classes (ties to the lower class id).
pub fn class_quotas(sizes: &BTreeMap<ClassId, usize>, count: usize) -> Result<BTreeMap<ClassId, usize>> {
    let k = sizes.len();
    if k == 0 || count < k {
        return Err(Error::input(format!(
            "need at least one label per class: {count} labels for {k} classes"
        )));
    }
    let base = count / k;
    let mut by_size: Vec<(ClassId, usize)> = sizes.iter().map(|(&c, &n)| (c, n)).collect();
    by_size.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut quotas: BTreeMap<ClassId, usize> = sizes.keys().map(|&c| (c, base)).collect();
    for &(c, _) in by_size.iter().take(count % k) {
        *quotas.get_mut(&c).unwrap() += 1;
    }
    for (c, &q) in &quotas {
        if sizes[c] < q {
            return Err(Error::input(format!(
                "class {c} has {} samples but needs {q} labels",
                sizes[c]
            )));
        }
    }
    Ok(quotas)
}

/// Balanced labeled subset, uniform without replacement within each class.
/// Indices come back sorted.
pub fn sample_labeled(ds: &Dataset, count: usize, seed: u64) -> Result<LabelVector> {
    let mut members: BTreeMap<ClassId, Vec<usize>> = BTreeMap::new();
    for (i, &c) in ds.y.iter().enumerate() {
        members.entry(c).or_default().push(i);
    }
    let sizes = members.iter().map(|(&c, v)| (c, v.len())).collect();
    let quotas = class_quotas(&sizes, count)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked: Vec<(usize, ClassId)> = Vec::with_capacity(count);
    for (c, idx) in &members {
        for k in index::sample(&mut rng, idx.len(), quotas[c]) {
            picked.push((idx[k], *c));
        }
    }
    picked.sort_unstable();
    LabelVector::new(
        picked.iter().map(|p| p.0).collect(),
        picked.iter().map(|p| p.1).collect(),
    )
}
