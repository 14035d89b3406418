use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ClassifyError, LabeledExample, SplitConfig};
use crate::math;

/// Deterministic train/test partition.
///
/// The train part gets `round(train_fraction * N)` examples. When stratified,
/// quotas are apportioned per class by largest remainder, and every class
/// with at least two examples lands in both parts. Both parts keep the input
/// order.
pub fn split(
    examples: &[LabeledExample],
    config: &SplitConfig,
) -> Result<(Vec<LabeledExample>, Vec<LabeledExample>), ClassifyError> {
    let n = examples.len();
    if n < 2 {
        return Err(ClassifyError::TooFewExamples(n));
    }
    if !(config.train_fraction > 0.0 && config.train_fraction < 1.0) {
        return Err(ClassifyError::InvalidConfig("train_fraction must be in (0, 1)"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let target = (math::round(config.train_fraction * n as f64) as usize).clamp(1, n - 1);

    let mut in_train = alloc::vec![false; n];
    if config.stratified {
        let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, ex) in examples.iter().enumerate() {
            groups.entry(ex.label.as_str()).or_default().push(i);
        }
        let groups: Vec<Vec<usize>> = groups.into_values().collect();
        let quotas = apportion(&groups.iter().map(Vec::len).collect::<Vec<_>>(), target, config.train_fraction);
        for (mut members, quota) in groups.into_iter().zip(quotas) {
            members.shuffle(&mut rng);
            for &i in &members[..quota] {
                in_train[i] = true;
            }
        }
    } else {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        for &i in &order[..target] {
            in_train[i] = true;
        }
    }

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (ex, t) in examples.iter().zip(in_train) {
        if t {
            train.push(ex.clone());
        } else {
            test.push(ex.clone());
        }
    }
    if train.is_empty() || test.is_empty() {
        return Err(ClassifyError::TooFewExamples(n));
    }
    Ok((train, test))
}

// Per-class train counts summing to `target` where the bounds allow it.
// Classes of size >= 2 get between 1 and size-1; singletons may go either way.
fn apportion(sizes: &[usize], target: usize, fraction: f64) -> Vec<usize> {
    let bounds: Vec<(usize, usize)> = sizes.iter().map(|&s| if s >= 2 { (1, s - 1) } else { (0, s) }).collect();
    let mut quotas = Vec::with_capacity(sizes.len());
    let mut remainders = Vec::with_capacity(sizes.len());
    for (c, (&s, &(lo, hi))) in sizes.iter().zip(&bounds).enumerate() {
        let exact = fraction * s as f64;
        let q = (math::floor(exact) as usize).clamp(lo, hi);
        quotas.push(q);
        remainders.push((exact - math::floor(exact), c));
    }
    // largest fractional part first, ties by class order
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut total: usize = quotas.iter().sum();
    let mut progressed = true;
    while total < target && progressed {
        progressed = false;
        for &(_, c) in &remainders {
            if total >= target {
                break;
            }
            if quotas[c] < bounds[c].1 {
                quotas[c] += 1;
                total += 1;
                progressed = true;
            }
        }
    }
    progressed = true;
    while total > target && progressed {
        progressed = false;
        for &(_, c) in remainders.iter().rev() {
            if total <= target {
                break;
            }
            if quotas[c] > bounds[c].0 {
                quotas[c] -= 1;
                total -= 1;
                progressed = true;
            }
        }
    }
    quotas
}
