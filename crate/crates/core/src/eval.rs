//! Accuracy, the majority baseline, and the seeded m-sets-of-size-n
//! protocol.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::label::BinaryLabel;
use crate::sampling::sample_indices;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub n: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Label names in canonical order.
    pub labels: [String; 2],
    /// `confusion[gold][predicted]`, indexed by canonical label order.
    pub confusion: [[usize; 2]; 2],
}

/// Scores `(predicted, gold)` pairs.
pub fn accuracy<L: BinaryLabel>(pairs: impl IntoIterator<Item = (L, L)>) -> Result<EvalReport> {
    let mut confusion = [[0usize; 2]; 2];
    for (predicted, gold) in pairs {
        confusion[gold.index()][predicted.index()] += 1;
    }
    let n: usize = confusion.iter().flatten().sum();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let correct = confusion[0][0] + confusion[1][1];
    Ok(EvalReport {
        n,
        correct,
        accuracy: correct as f64 / n as f64,
        labels: L::ALL.map(|l| l.name().to_string()),
        confusion,
    })
}

/// Accuracy of always answering the most frequent gold label; on a tie the
/// first label in canonical order is used.
pub fn majority_baseline<L: BinaryLabel>(golds: &[L]) -> Result<EvalReport> {
    let mut counts = [0usize; 2];
    for g in golds {
        counts[g.index()] += 1;
    }
    let majority = if counts[0] >= counts[1] {
        L::ALL[0]
    } else {
        L::ALL[1]
    };
    accuracy(golds.iter().map(|&g| (majority, g)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledEvalReport {
    pub sets: usize,
    pub set_size: usize,
    pub seed: u64,
    pub per_set: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation (divides by the number of sets).
    pub std: f64,
}

/// `(mean, population std)` of a non-empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
    (mean, libm::sqrt(var))
}

/// Draws `sets` samples of `set_size` predictions without replacement (set
/// `i` seeded with `seed + i`, see [`crate::sampling`]) and reports the
/// per-set accuracies with their mean and population std.
pub fn sampled_accuracy<L: BinaryLabel>(
    pairs: &[(L, L)],
    sets: usize,
    set_size: usize,
    seed: u64,
) -> Result<SampledEvalReport> {
    if pairs.is_empty() || sets == 0 || set_size == 0 {
        return Err(Error::EmptyInput);
    }
    let per_set = (0..sets)
        .map(|i| {
            let picks = sample_indices(pairs.len(), set_size, seed.wrapping_add(i as u64))?;
            let correct = picks.iter().filter(|&&j| pairs[j].0 == pairs[j].1).count();
            Ok(correct as f64 / set_size as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    let (mean, std) = mean_std(&per_set);
    Ok(SampledEvalReport {
        sets,
        set_size,
        seed,
        per_set,
        mean,
        std,
    })
}
