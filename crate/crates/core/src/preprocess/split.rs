use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::seeded;
use crate::types::{SplitSet, WindowedDataset};

pub(crate) fn check_fractions((a, b, c): (f64, f64, f64)) -> Result<()> {
    let ok = [a, b, c].iter().all(|f| (0.0..=1.0).contains(f)) && (a + b + c - 1.0).abs() < 1e-9;
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "split fractions ({a}, {b}, {c}) must lie in [0, 1] and sum to 1"
        )))
    }
}

/// (train, test, val) sizes: floor for train and test, remainder to val.
pub fn split_sizes(m: usize, fractions: (f64, f64, f64)) -> (usize, usize, usize) {
    // the small epsilon absorbs products like 0.85 * 100 landing just under 85
    let floor = |f: f64| ((f * m as f64) + 1e-9).floor() as usize;
    let train = floor(fractions.0).min(m);
    let test = floor(fractions.1).min(m - train);
    (train, test, m - train - test)
}

/// Seeded Fisher–Yates shuffle followed by contiguous train/test/val slices.
pub fn shuffle_split(
    ds: &WindowedDataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<SplitSet> {
    check_fractions(fractions)?;
    let m = ds.len();
    if m < 3 {
        return Err(Error::invalid(format!("cannot split {m} windows (need >= 3)")));
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut seeded(seed));
    let (train, test, _) = split_sizes(m, fractions);
    Ok(SplitSet {
        train: ds.select(&order[..train]),
        test: ds.select(&order[train..train + test]),
        val: ds.select(&order[train + test..]),
        fractions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PAPER: (f64, f64, f64) = (0.85, 0.10, 0.05);

    fn dataset(m: usize) -> WindowedDataset {
        WindowedDataset::new(
            (0..m * 2).map(|v| v as f64).collect(),
            (0..m).map(|v| v as f64).collect(),
            2,
            1,
            Some(0),
        )
        .unwrap()
    }

    #[test]
    fn sizes() {
        assert_eq!(split_sizes(100, PAPER), (85, 10, 5));
        assert_eq!(split_sizes(3, PAPER), (2, 0, 1));
        let s = shuffle_split(&dataset(100), PAPER, 1).unwrap();
        assert_eq!((s.train.len(), s.test.len(), s.val.len()), (85, 10, 5));
    }

    #[test]
    fn deterministic() {
        let a = shuffle_split(&dataset(50), PAPER, 9).unwrap();
        let b = shuffle_split(&dataset(50), PAPER, 9).unwrap();
        assert_eq!(a, b);
        let c = shuffle_split(&dataset(50), PAPER, 10).unwrap();
        assert_ne!(a.train, c.train);
    }

    #[test]
    fn errors() {
        assert!(shuffle_split(&dataset(2), PAPER, 0).is_err());
        assert!(shuffle_split(&dataset(10), (0.5, 0.5, 0.5), 0).is_err());
    }

    proptest! {
        #[test]
        fn partition_law(m in 3usize..400, seed in any::<u64>()) {
            let ds = dataset(m);
            let s = shuffle_split(&ds, PAPER, seed).unwrap();
            let mut all: Vec<f64> = s.train.targets().iter()
                .chain(s.test.targets())
                .chain(s.val.targets())
                .copied()
                .collect();
            all.sort_by(f64::total_cmp);
            prop_assert_eq!(all, ds.targets().to_vec());
            for (part, f) in [(&s.train, 0.85), (&s.test, 0.10), (&s.val, 0.05)] {
                let frac = part.len() as f64 / m as f64;
                prop_assert!((frac - f).abs() <= 2.0 / m as f64 + 1e-12);
            }
            // windows travel with their targets
            for i in 0..s.train.len() {
                prop_assert_eq!(s.train.window(i)[0], 2.0 * s.train.target(i));
            }
        }
    }
}
