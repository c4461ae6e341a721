use rand::seq::SliceRandom;

use crate::seed::RngSeed;

/// Random fold label for each of `n` rows; fold sizes differ by at most one.
pub fn fold_assignment(n: usize, k: usize, seed: RngSeed) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed.rng());
    let mut fold = vec![0; n];
    for (pos, &row) in order.iter().enumerate() {
        fold[row] = pos % k;
    }
    fold
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_rows_five_folds() {
        let f = fold_assignment(10, 5, RngSeed(3));
        for k in 0..5 {
            assert_eq!(f.iter().filter(|&&v| v == k).count(), 2);
        }
    }

    #[test]
    fn sizes_balanced() {
        for n in 5..40 {
            let f = fold_assignment(n, 5, RngSeed(n as u64));
            let sizes: Vec<usize> = (0..5).map(|k| f.iter().filter(|&&v| v == k).count()).collect();
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            assert_eq!(sizes.iter().sum::<usize>(), n);
        }
    }
}
