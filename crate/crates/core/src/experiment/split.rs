//! Random weak-supervision / train / test partitions.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

pub const DEFAULT_SEEDS: [u64; 10] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Fractions for (weak supervision, train, test).
    pub fractions: [f64; 3],
    pub seed: u64,
    /// Split each class separately so all parts keep the class balance.
    pub stratified: bool,
}

impl SplitSpec {
    pub fn new(seed: u64) -> Self {
        Self {
            fractions: [0.3, 0.4, 0.3],
            seed,
            stratified: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.fractions.iter().sum();
        if self.fractions.iter().any(|f| !(0.0..=1.0).contains(f)) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions {:?} must be in [0, 1] and sum to 1",
                self.fractions
            )));
        }
        Ok(())
    }
}

/// Row indices of each part, in shuffled order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SplitIndices {
    pub weak: Vec<usize>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Sizes of the first two parts; the test part takes the remainder.
fn part_sizes(n: usize, fractions: &[f64; 3]) -> (usize, usize) {
    let weak = ((n as f64) * fractions[0]).round() as usize;
    let train = (((n as f64) * fractions[1]).round() as usize).min(n - weak.min(n));
    (weak.min(n), train)
}

fn cut(rows: &[usize], fractions: &[f64; 3], out: &mut SplitIndices) {
    let (w, t) = part_sizes(rows.len(), fractions);
    out.weak.extend_from_slice(&rows[..w]);
    out.train.extend_from_slice(&rows[w..w + t]);
    out.test.extend_from_slice(&rows[w + t..]);
}

pub fn split_indices(data: &Dataset, spec: &SplitSpec) -> Result<SplitIndices> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = SplitIndices {
        weak: vec![],
        train: vec![],
        test: vec![],
    };
    if spec.stratified {
        let labels = data.labels()?;
        for class in [0.0, 1.0] {
            let mut rows: Vec<usize> = (0..data.n()).filter(|&j| labels[j] == class).collect();
            rows.shuffle(&mut rng);
            cut(&rows, &spec.fractions, &mut out);
        }
    } else {
        let mut rows: Vec<usize> = (0..data.n()).collect();
        rows.shuffle(&mut rng);
        cut(&rows, &spec.fractions, &mut out);
    }
    Ok(out)
}

/// The three parts of one split, each still carrying its true labels.
#[derive(Clone, Debug)]
pub struct Split {
    pub weak: Dataset,
    pub train: Dataset,
    pub test: Dataset,
}

pub fn split(data: &Dataset, spec: &SplitSpec) -> Result<Split> {
    let idx = split_indices(data, spec)?;
    Ok(Split {
        weak: data.select_rows(&idx.weak),
        train: data.select_rows(&idx.train),
        test: data.select_rows(&idx.test),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(n: usize) -> Dataset {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let labels = (0..n).map(|i| if i % 4 == 0 { 1.0 } else { 0.0 }).collect();
        Dataset::from_rows(&rows, Some(labels)).unwrap()
    }

    fn covers(idx: &SplitIndices, n: usize) -> bool {
        let mut all: Vec<usize> = idx.weak.iter().chain(&idx.train).chain(&idx.test).copied().collect();
        all.sort_unstable();
        all == (0..n).collect::<Vec<_>>()
    }

    #[test]
    fn parts_are_disjoint_cover_and_sized() {
        let d = data(569);
        let idx = split_indices(&d, &SplitSpec::new(3)).unwrap();
        assert!(covers(&idx, 569));
        assert_eq!((idx.weak.len(), idx.train.len(), idx.test.len()), (171, 228, 170));
    }

    #[test]
    fn seeds_determine_splits() {
        let d = data(100);
        let a = split_indices(&d, &SplitSpec::new(5)).unwrap();
        assert_eq!(a, split_indices(&d, &SplitSpec::new(5)).unwrap());
        assert_ne!(a, split_indices(&d, &SplitSpec::new(6)).unwrap());
    }

    #[test]
    fn stratified_keeps_class_balance() {
        let d = data(400);
        let spec = SplitSpec {
            stratified: true,
            ..SplitSpec::new(1)
        };
        let idx = split_indices(&d, &spec).unwrap();
        assert!(covers(&idx, 400));
        let pos = |rows: &[usize]| rows.iter().filter(|&&r| r % 4 == 0).count();
        assert_eq!((pos(&idx.weak), pos(&idx.train), pos(&idx.test)), (30, 40, 30));
    }

    #[test]
    fn bad_fractions_are_rejected() {
        let spec = SplitSpec {
            fractions: [0.5, 0.5, 0.5],
            ..SplitSpec::new(0)
        };
        assert!(split_indices(&data(10), &spec).is_err());
    }

    #[test]
    fn tiny_datasets_still_partition() {
        for n in 0..6 {
            let idx = split_indices(&data(n), &SplitSpec::new(0)).unwrap();
            assert!(covers(&idx, n));
        }
    }
}
