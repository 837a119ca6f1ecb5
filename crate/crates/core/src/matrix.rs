//! Pairwise matrices built from partial rankings, and their accumulation.
//!
//! Entry `(i, j)` of a unit matrix is the share of compatible completions in
//! which `i` beats `j`:
//!
//! * both observed: 1 or 0 from the observed order;
//! * both unobserved: 1/2;
//! * `i` unobserved, `j` observed with `r` observed systems above it:
//!   `p(N, k, r)`, and `1 - p` for the transposed entry.
//!
//! The diagonal is stored as 1/2 and ignored by every downstream sum.

use num_rational::BigRational;

use crate::combinatorics::{self, enumerate_compatible};
use crate::error::{validation, Error, Result};
use crate::model::PartialRanking;
use crate::scalar::Scalar;

/// Largest universe accepted by [`matrix_from_partial_oracle`].
pub const ORACLE_LIMIT: usize = 8;

/// `N x N` matrix of pairwise win probabilities, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseMatrix<S> {
    n: usize,
    entries: Vec<S>,
}

impl<S: Scalar> PairwiseMatrix<S> {
    /// The no-information matrix: every entry 1/2.
    pub fn uniform(n: usize) -> Self {
        Self { n, entries: vec![S::half(); n * n] }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.entries[i * self.n + j]
    }

    pub fn map<T, F: FnMut(&S) -> T>(&self, f: F) -> PairwiseMatrix<T> {
        PairwiseMatrix { n: self.n, entries: self.entries.iter().map(f).collect() }
    }

    /// Largest deviation from `M[i][j] + M[j][i] = 1` over off-diagonal pairs.
    pub fn complementarity_error(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                let s = self.get(i, j).clone() + self.get(j, i).clone();
                worst = worst.max((s.to_f64() - 1.0).abs());
            }
        }
        worst
    }
}

/// Per-unit `p` and `1 - p` for each observed rank, shared by every pair.
fn imputation_row<S: Scalar>(n: usize, k: usize) -> Vec<(S, S)> {
    if k == 0 || k == n {
        return Vec::new();
    }
    (0..k)
        .map(|r| {
            let p: S =
                combinatorics::p_unobserved_beats_observed(n as u64, k as u64, r as u64).expect("1 <= k < n and r < k");
            let q = S::one() - p.clone();
            (p, q)
        })
        .collect()
}

/// The pairwise matrix of a single partial ranking.
pub fn matrix_from_partial<S: Scalar>(pr: &PartialRanking) -> PairwiseMatrix<S> {
    let n = pr.universe_size();
    let mut m = PairwiseMatrix::uniform(n);
    let pos = pr.positions();
    let imputed = imputation_row::<S>(n, pr.len());
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let value = match (pos[i], pos[j]) {
                (Some(a), Some(b)) => {
                    if a < b {
                        S::one()
                    } else {
                        S::zero()
                    }
                }
                (None, None) => continue,
                (None, Some(r)) => imputed[r].0.clone(),
                (Some(r), None) => imputed[r].1.clone(),
            };
            m.entries[i * n + j] = value;
        }
    }
    m
}

/// Exact pairwise proportions by enumerating every compatible completion.
pub fn matrix_from_partial_oracle(pr: &PartialRanking) -> Result<PairwiseMatrix<BigRational>> {
    let n = pr.universe_size();
    if n > ORACLE_LIMIT {
        return Err(Error::EnumerationGuard { size: n, limit: ORACLE_LIMIT });
    }
    let completions = enumerate_compatible(pr)?;
    let mut wins = vec![0u64; n * n];
    for ranking in &completions {
        let ranks = ranking.ranks();
        for i in 0..n {
            for j in 0..n {
                if i != j && ranks[i] < ranks[j] {
                    wins[i * n + j] += 1;
                }
            }
        }
    }
    let total = completions.len() as u64;
    let mut m = PairwiseMatrix::<BigRational>::uniform(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                m.entries[i * n + j] = BigRational::from_ratio(wins[i * n + j], total);
            }
        }
    }
    Ok(m)
}

/// Sum of unit matrices together with direct-comparison statistics.
///
/// `direct[i][j]` counts units in which both systems were observed;
/// `wins[i][j]` counts those in which `i` was ranked above `j`. Imputed
/// entries never touch either count.
#[derive(Clone, Debug, PartialEq)]
pub struct AccumulatedMatrix<S> {
    n: usize,
    sums: Vec<S>,
    units: u64,
    direct: Vec<u64>,
    wins: Vec<u64>,
}

impl<S: Scalar> AccumulatedMatrix<S> {
    pub fn new(n: usize) -> Self {
        Self { n, sums: vec![S::zero(); n * n], units: 0, direct: vec![0; n * n], wins: vec![0; n * n] }
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn units(&self) -> u64 {
        self.units
    }

    #[inline]
    pub fn sum(&self, i: usize, j: usize) -> &S {
        &self.sums[i * self.n + j]
    }

    /// `z[i][j]`: units in which both systems were observed.
    #[inline]
    pub fn direct_count(&self, i: usize, j: usize) -> u64 {
        self.direct[i * self.n + j]
    }

    /// Units in which both were observed and `i` ranked above `j`.
    #[inline]
    pub fn direct_wins(&self, i: usize, j: usize) -> u64 {
        self.wins[i * self.n + j]
    }

    /// Adds the unit matrix of `pr` without materialising it.
    pub fn add_partial(&mut self, pr: &PartialRanking) -> Result<()> {
        let n = self.n;
        if pr.universe_size() != n {
            return Err(validation(format!(
                "partial ranking over {} systems added to a {n}-system accumulation",
                pr.universe_size()
            )));
        }
        let pos = pr.positions();
        let imputed = imputation_row::<S>(n, pr.len());
        let half = S::half();
        let one = S::one();
        for i in 0..n {
            let row = &mut self.sums[i * n..(i + 1) * n];
            match pos[i] {
                Some(a) => {
                    for (j, cell) in row.iter_mut().enumerate() {
                        match pos[j] {
                            Some(b) if a < b => *cell += &one,
                            Some(_) => {}
                            None => *cell += &imputed[a].1,
                        }
                    }
                }
                None => {
                    for (j, cell) in row.iter_mut().enumerate() {
                        if j == i {
                            continue;
                        }
                        match pos[j] {
                            Some(b) => *cell += &imputed[b].0,
                            None => *cell += &half,
                        }
                    }
                }
            }
        }
        let observed = pr.ordered();
        for (a, hi) in observed.iter().enumerate() {
            for lo in &observed[a + 1..] {
                let (h, l) = (hi.index(), lo.index());
                self.direct[h * n + l] += 1;
                self.direct[l * n + h] += 1;
                self.wins[h * n + l] += 1;
            }
        }
        self.units += 1;
        Ok(())
    }

    /// Combines two accumulations over the same universe.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if other.n != self.n {
            return Err(validation("cannot merge accumulations of different sizes"));
        }
        for (a, b) in self.sums.iter_mut().zip(&other.sums) {
            *a += b;
        }
        for (a, b) in self.direct.iter_mut().zip(&other.direct) {
            *a += b;
        }
        for (a, b) in self.wins.iter_mut().zip(&other.wins) {
            *a += b;
        }
        self.units += other.units;
        Ok(())
    }

    /// Row sums `b_i = sum_{j != i} sums[i][j]`: accumulated wins of each system.
    pub fn borda_scores(&self) -> Vec<S> {
        (0..self.n)
            .map(|i| {
                let mut acc = S::zero();
                for (j, v) in self.sums[i * self.n..(i + 1) * self.n].iter().enumerate() {
                    if j != i {
                        acc += v;
                    }
                }
                acc
            })
            .collect()
    }

    /// `sums / units` as a pairwise matrix; `None` before any unit was added.
    pub fn normalized(&self) -> Option<PairwiseMatrix<S>> {
        if self.units == 0 {
            return None;
        }
        let units = S::from_count(self.units);
        let mut m = PairwiseMatrix::uniform(self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    m.entries[i * self.n + j] = self.sum(i, j).clone() / units.clone();
                }
            }
        }
        Some(m)
    }

    /// Largest deviation from `sums[i][j] + sums[j][i] = units`.
    pub fn complementarity_error(&self) -> f64 {
        let units = self.units as f64;
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in i + 1..self.n {
                let s = self.sum(i, j).clone() + self.sum(j, i).clone();
                worst = worst.max((s.to_f64() - units).abs());
            }
        }
        worst
    }
}

/// Sums the unit matrices of `partials`.
pub fn accumulate<'a, S, I>(n: usize, partials: I) -> Result<AccumulatedMatrix<S>>
where
    S: Scalar,
    I: IntoIterator<Item = &'a PartialRanking>,
{
    let mut acc = AccumulatedMatrix::new(n);
    for pr in partials {
        acc.add_partial(pr)?;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SystemId;
    use proptest::prelude::*;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    fn chain(n: usize, ids: &[usize]) -> PartialRanking {
        PartialRanking::new(n, ids.iter().copied().map(SystemId).collect()).unwrap()
    }

    #[test]
    fn empty_partial_is_all_half() {
        let m = matrix_from_partial::<f64>(&PartialRanking::empty(2));
        assert_eq!(*m.get(0, 1), 0.5);
        assert_eq!(*m.get(1, 0), 0.5);
    }

    #[test]
    fn complete_partial_is_zero_one() {
        let m = matrix_from_partial::<f64>(&chain(3, &[0, 1, 2]));
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert_eq!(*m.get(i, j), 1.0);
            assert_eq!(*m.get(j, i), 0.0);
        }
    }

    #[test]
    fn one_unobserved_system() {
        let m = matrix_from_partial::<BigRational>(&chain(3, &[0, 1]));
        assert_eq!(*m.get(2, 0), q(1, 3));
        assert_eq!(*m.get(2, 1), q(2, 3));
        assert_eq!(*m.get(0, 1), q(1, 1));
        assert_eq!(*m.get(0, 2), q(2, 3));
        assert_eq!(m, matrix_from_partial_oracle(&chain(3, &[0, 1])).unwrap());
    }

    #[test]
    fn oracle_edge_cases() {
        let m = matrix_from_partial_oracle(&PartialRanking::empty(4)).unwrap();
        assert!(m.entries.iter().all(|v| *v == q(1, 2)));
        let m = matrix_from_partial_oracle(&chain(3, &[2, 0, 1])).unwrap();
        assert_eq!(*m.get(2, 0), q(1, 1));
        assert_eq!(*m.get(1, 2), q(0, 1));
        assert!(matrix_from_partial_oracle(&PartialRanking::empty(9)).is_err());
    }

    #[test]
    fn accumulate_examples() {
        let acc = accumulate::<f64, _>(3, [&chain(3, &[2, 0])]).unwrap();
        assert_eq!(acc.units(), 1);
        assert_eq!(Some(matrix_from_partial::<f64>(&chain(3, &[2, 0]))), acc.normalized());

        let c = chain(2, &[0, 1]);
        let acc = accumulate::<f64, _>(2, [&c, &c]).unwrap();
        assert_eq!(*acc.sum(0, 1), 2.0);
        assert_eq!(acc.direct_count(0, 1), 2);
        assert_eq!(acc.direct_wins(0, 1), 2);

        let a = chain(3, &[0, 1]);
        let e = PartialRanking::empty(3);
        let acc = accumulate::<BigRational, _>(3, [&a, &e]).unwrap();
        assert_eq!(*acc.sum(2, 0), q(5, 6));
        assert_eq!(acc.direct_count(2, 0), 0);
        assert_eq!(acc.direct_count(0, 1), 1);
    }

    #[test]
    fn accumulate_rejects_mismatched_sizes() {
        assert!(accumulate::<f64, _>(3, [&chain(2, &[0])]).is_err());
    }

    #[test]
    fn merge_equals_sequential() {
        let ps = [chain(4, &[1, 3]), chain(4, &[0, 2, 1]), PartialRanking::empty(4), chain(4, &[3])];
        let whole = accumulate::<BigRational, _>(4, &ps).unwrap();
        let mut left = accumulate::<BigRational, _>(4, &ps[..2]).unwrap();
        left.merge(&accumulate(4, &ps[2..]).unwrap()).unwrap();
        assert_eq!(whole, left);
    }

    fn arb_partial_of(n: usize) -> impl Strategy<Value = PartialRanking> {
        (Just((0..n).collect::<Vec<_>>()).prop_shuffle(), 0..=n).prop_map(move |(perm, k)| {
            PartialRanking::new(n, perm[..k].iter().copied().map(SystemId).collect()).unwrap()
        })
    }

    fn arb_partial(max_n: usize) -> impl Strategy<Value = PartialRanking> {
        (1..=max_n).prop_flat_map(arb_partial_of)
    }

    proptest! {
        #[test]
        fn matches_oracle_exactly(pr in arb_partial(7)) {
            let fast = matrix_from_partial::<BigRational>(&pr);
            prop_assert_eq!(&fast, &matrix_from_partial_oracle(&pr).unwrap());
            prop_assert_eq!(fast.complementarity_error(), 0.0);
        }

        #[test]
        fn relabel_equivariance(pr in arb_partial(8), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let n = pr.universe_size();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let base = matrix_from_partial::<BigRational>(&pr);
            let moved = matrix_from_partial::<BigRational>(&pr.relabel(&perm).unwrap());
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(base.get(i, j), moved.get(perm[i], perm[j]));
                }
            }
        }

        #[test]
        fn accumulation_is_order_independent(
            parts in prop::collection::vec(arb_partial_of(6), 1..8),
        ) {
            let forward = accumulate::<BigRational, _>(6, &parts).unwrap();
            let backward = accumulate::<BigRational, _>(6, parts.iter().rev()).unwrap();
            prop_assert_eq!(&forward, &backward);
            prop_assert_eq!(forward.complementarity_error(), 0.0);
            for i in 0..6 {
                for j in 0..6 {
                    prop_assert_eq!(forward.direct_count(i, j), forward.direct_count(j, i));
                    prop_assert!(forward.direct_count(i, j) <= forward.units());
                }
            }
        }

        #[test]
        fn float_and_exact_accumulations_agree(
            parts in prop::collection::vec(arb_partial_of(8), 1..10),
        ) {
            let exact = accumulate::<BigRational, _>(8, &parts).unwrap();
            let float = accumulate::<f64, _>(8, &parts).unwrap();
            for i in 0..8 {
                for j in 0..8 {
                    prop_assert!((exact.sum(i, j).to_f64() - float.sum(i, j)).abs() < 1e-12);
                }
            }
        }
    }
}
