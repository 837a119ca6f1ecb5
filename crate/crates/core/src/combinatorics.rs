//! Counting compatible permutations.
//!
//! A partial ranking of `k` observed systems among `n` is completed by
//! interleaving the observed chain with a permutation of the `n - k`
//! unobserved systems. The quantity of interest is `p(n, k, r)`: the share of
//! those completions in which a given unobserved system beats the observed
//! system that has `r` observed systems strictly above it.
//!
//! Three routes to `p` live here:
//!
//! * [`p_closed_form`] / [`p_closed_form_f64`]: a sum over the number of
//!   unobserved systems placed ahead of the observed one, built from shuffle
//!   and variation counts;
//! * [`p_unobserved_beats_observed`]: the gap-uniformity identity
//!   `(r + 1) / (k + 1)`, used on the hot path;
//! * [`enumerate_compatible`]: exhaustive enumeration for small universes.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::factorial::ln_factorial;

use crate::error::{validation, Error, Result};
use crate::model::{PartialRanking, Ranking, SystemId};
use crate::scalar::Scalar;

/// Largest universe [`enumerate_compatible`] accepts.
pub const ENUMERATION_LIMIT: usize = 10;

/// Default largest `n` for which [`PTable`] stores exact rationals.
pub const DEFAULT_EXACT_LIMIT: usize = 64;

pub fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// `C(n, k)` by the multiplicative formula; every partial product is integral.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Number of order-preserving interleavings of two lists of lengths `a` and `b`.
pub fn shuffle_count(a: u64, b: u64) -> BigUint {
    binomial(a + b, a)
}

/// Ordered selections of `a` items out of `b`: `b! / (b - a)!`.
pub fn variation_count(a: u64, b: u64) -> Result<BigUint> {
    if a > b {
        return Err(validation(format!("cannot select {a} items out of {b}")));
    }
    Ok((b - a + 1..=b).fold(BigUint::one(), |acc, i| acc * i))
}

/// Completions of a `k`-item chain to a ranking of `n` items: `n! / k!`.
pub fn total_compatible(n: u64, k: u64) -> Result<BigUint> {
    if k > n {
        return Err(validation(format!("chain of {k} items does not fit in {n}")));
    }
    Ok(factorial(n - k) * shuffle_count(k, n - k))
}

fn check_nkr(n: u64, k: u64, r: u64) -> Result<()> {
    if k == 0 || k >= n {
        return Err(validation(format!("need 1 <= k <= n - 1, got n = {n}, k = {k}")));
    }
    if r >= k {
        return Err(validation(format!("rank r = {r} out of range for k = {k} observed")));
    }
    Ok(())
}

/// `p(n, k, r)` from the summation over `s`, the number of unobserved systems
/// other than `i` placed ahead of the observed one.
///
/// Each term counts: the ordered head (`V(s, n-k-1)`), the slot of `i` within
/// it (`s + 1`), its interleaving with the `r` observed systems above
/// (`S(r, s+1)`), the remaining unobserved permutation, and its interleaving
/// with the `k - r - 1` observed systems below.
pub fn p_closed_form(n: u64, k: u64, r: u64) -> Result<BigRational> {
    check_nkr(n, k, r)?;
    let free = n - k - 1;
    let below = k - r - 1;
    let mut favourable = BigUint::zero();
    for s in 0..=free {
        let tail = free - s;
        favourable += variation_count(s, free)?
            * (s + 1)
            * shuffle_count(r, s + 1)
            * factorial(tail)
            * shuffle_count(tail, below);
    }
    Ok(BigRational::new(BigInt::from(favourable), BigInt::from(total_compatible(n, k)?)))
}

fn ln_shuffle(a: u64, b: u64) -> f64 {
    ln_factorial(a + b) - ln_factorial(a) - ln_factorial(b)
}

/// Floating evaluation of [`p_closed_form`] in log space.
pub fn p_closed_form_f64(n: u64, k: u64, r: u64) -> Result<f64> {
    check_nkr(n, k, r)?;
    let free = n - k - 1;
    let below = k - r - 1;
    let ln_total = ln_factorial(n) - ln_factorial(k);
    let mut sum = 0.0;
    for s in 0..=free {
        let tail = free - s;
        let ln_term = ln_factorial(free) - ln_factorial(tail)
            + ((s + 1) as f64).ln()
            + ln_shuffle(r, s + 1)
            + ln_factorial(tail)
            + ln_shuffle(tail, below);
        sum += (ln_term - ln_total).exp();
    }
    Ok(sum)
}

/// `p(n, k, r) = (r + 1) / (k + 1)`.
///
/// An unobserved system lands in each of the `k + 1` gaps of the observed
/// chain equally often, and beats the observed system at rank `r` exactly when
/// it lands in one of the first `r + 1` gaps. The value does not depend on `n`.
pub fn p_unobserved_beats_observed<S: Scalar>(n: u64, k: u64, r: u64) -> Result<S> {
    check_nkr(n, k, r)?;
    Ok(S::from_ratio(r + 1, k + 1))
}

/// One entry of a [`PTable`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PValue<'a> {
    Exact(&'a BigRational),
    Float(f64),
}

impl PValue<'_> {
    pub fn to_f64(self) -> f64 {
        match self {
            PValue::Exact(q) => Scalar::to_f64(q),
            PValue::Float(x) => x,
        }
    }
}

/// Precomputed `p(n, k, r)` for every `2 <= n <= n_max`, `1 <= k < n`, `0 <= r < k`.
///
/// Entries with `n <= exact_limit` are exact rationals; larger ones are `f64`.
#[derive(Clone, Debug)]
pub struct PTable {
    n_max: usize,
    exact_limit: usize,
    exact: Vec<BigRational>,
    float: Vec<f64>,
}

/// Entries stored for all `n' < n`.
fn entries_below(n: usize) -> usize {
    // sum_{m=2}^{n-1} m(m-1)/2 = C(n, 3)
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

impl PTable {
    pub fn build(n_max: usize) -> Result<Self> {
        Self::with_exact_limit(n_max, DEFAULT_EXACT_LIMIT)
    }

    pub fn with_exact_limit(n_max: usize, exact_limit: usize) -> Result<Self> {
        if n_max < 2 {
            return Err(validation("p-table needs n_max >= 2"));
        }
        let exact_top = exact_limit.min(n_max);
        let mut exact = Vec::with_capacity(entries_below(exact_top + 1));
        let mut float = Vec::with_capacity(entries_below(n_max + 1) - entries_below(exact_top + 1));
        for n in 2..=n_max {
            for k in 1..n {
                for r in 0..k {
                    let (n, k, r) = (n as u64, k as u64, r as u64);
                    if n as usize <= exact_top {
                        exact.push(p_unobserved_beats_observed::<BigRational>(n, k, r)?);
                    } else {
                        float.push(p_unobserved_beats_observed::<f64>(n, k, r)?);
                    }
                }
            }
        }
        Ok(Self { n_max, exact_limit: exact_top, exact, float })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn exact_limit(&self) -> usize {
        self.exact_limit
    }

    pub fn len(&self) -> usize {
        self.exact.len() + self.float.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, n: usize, k: usize, r: usize) -> Option<PValue<'_>> {
        if n < 2 || n > self.n_max || k == 0 || k >= n || r >= k {
            return None;
        }
        let idx = entries_below(n) + k * (k - 1) / 2 + r;
        if n <= self.exact_limit {
            self.exact.get(idx).map(PValue::Exact)
        } else {
            self.float.get(idx - entries_below(self.exact_limit + 1)).copied().map(PValue::Float)
        }
    }

    /// All `(n, k, r, value)` in storage order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, PValue<'_>)> + '_ {
        (2..=self.n_max).flat_map(move |n| {
            (1..n).flat_map(move |k| (0..k).map(move |r| (n, k, r, self.get(n, k, r).expect("index in range"))))
        })
    }
}

/// Every complete ranking compatible with `pr`, for universes of at most
/// [`ENUMERATION_LIMIT`] systems.
pub fn enumerate_compatible(pr: &PartialRanking) -> Result<Vec<Ranking>> {
    let n = pr.universe_size();
    if n > ENUMERATION_LIMIT {
        return Err(Error::EnumerationGuard { size: n, limit: ENUMERATION_LIMIT });
    }
    let mut out = Vec::new();
    let mut free: Vec<bool> = pr.positions().iter().map(Option::is_none).collect();
    let mut prefix = Vec::with_capacity(n);
    extend(pr.ordered(), 0, &mut free, &mut prefix, &mut out);
    Ok(out)
}

/// Visits every linear extension in place; at each step either the next
/// observed system or any unplaced unobserved one may come next.
fn extend(
    chain: &[SystemId],
    next_in_chain: usize,
    free: &mut [bool],
    prefix: &mut Vec<usize>,
    out: &mut Vec<Ranking>,
) {
    if prefix.len() == free.len() {
        out.push(Ranking::from_ordering(prefix.iter().copied()).expect("extension is a permutation"));
        return;
    }
    if let Some(id) = chain.get(next_in_chain) {
        prefix.push(id.index());
        extend(chain, next_in_chain + 1, free, prefix, out);
        prefix.pop();
    }
    for id in 0..free.len() {
        if free[id] {
            free[id] = false;
            prefix.push(id);
            extend(chain, next_in_chain, free, prefix, out);
            prefix.pop();
            free[id] = true;
        }
    }
}

/// Uniform order-preserving interleaving of `a` and `b`.
///
/// The next item comes from `a` with probability `|a_left| / (|a_left| + |b_left|)`,
/// which makes all `C(|a| + |b|, |a|)` interleavings equally likely.
pub fn shuffle_lists<T: Copy, R: Rng + ?Sized>(a: &[T], b: &[T], rng: &mut R) -> Vec<T> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let left_a = a.len() - i;
        let left_b = b.len() - j;
        if rng.random_range(0..left_a + left_b) < left_a {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out
}

/// A uniformly random complete ranking compatible with `pr`.
pub fn sample_compatible<R: Rng + ?Sized>(pr: &PartialRanking, rng: &mut R) -> Ranking {
    let mut unobserved: Vec<usize> = pr.unobserved().into_iter().map(SystemId::index).collect();
    unobserved.shuffle(rng);
    let observed: Vec<usize> = pr.ordered().iter().map(|id| id.index()).collect();
    Ranking::from_ordering(shuffle_lists(&observed, &unobserved, rng))
        .expect("interleaving of disjoint lists covering the universe")
}

pub fn sample_compatible_seeded(pr: &PartialRanking, seed: u64) -> Ranking {
    sample_compatible(pr, &mut ChaCha8Rng::seed_from_u64(seed))
}
