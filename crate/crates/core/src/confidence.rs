//! Hoeffding confidence intervals on direct pairwise win rates.

use serde::Serialize;

use crate::error::{validation, Error, Result};
use crate::matrix::AccumulatedMatrix;
use crate::model::Ranking;
use crate::scalar::Scalar;

/// Constant inside the logarithm of the half-width.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    /// `sqrt(-ln(delta) / 2z)`.
    #[default]
    OneSided,
    /// `sqrt(ln(2 / delta) / 2z)`, the textbook two-sided bound.
    TwoSided,
}

/// Half-width `c` of the interval around a win rate estimated from `z`
/// direct comparisons, with failure probability `delta`.
pub fn hoeffding_halfwidth(z: u64, delta: f64) -> Result<f64> {
    hoeffding_halfwidth_with(z, delta, Sidedness::OneSided)
}

pub fn hoeffding_halfwidth_with(z: u64, delta: f64, sides: Sidedness) -> Result<f64> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(validation(format!("delta must lie in (0, 1], got {delta}")));
    }
    if z == 0 {
        return Err(Error::NoComparison(0, 0));
    }
    let log_term = match sides {
        Sidedness::OneSided => -delta.ln(),
        Sidedness::TwoSided => (2.0 / delta).ln(),
    };
    // -ln(1) is -0.0; clamp so the result is a clean zero.
    Ok((log_term.max(0.0) / (2.0 * z as f64)).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    /// The lower system id wins.
    IWins,
    JWins,
    Undecided,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::IWins => "i-wins",
            Verdict::JWins => "j-wins",
            Verdict::Undecided => "undecided",
        }
    }
}

/// Interval for one unordered pair `i < j`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairConfidence {
    pub i: usize,
    pub j: usize,
    /// Direct win rate of `i` over `j`; `None` when never compared.
    pub m_hat: Option<f64>,
    pub z: u64,
    pub c: Option<f64>,
    pub verdict: Verdict,
}

impl PairConfidence {
    /// Signed distance from 1/2 to the nearer interval end; zero when undecided.
    ///
    /// Positive when `i` wins, negative when `j` wins.
    pub fn margin(&self) -> f64 {
        match (self.verdict, self.m_hat, self.c) {
            (Verdict::IWins, Some(m), Some(c)) => (m - c) - 0.5,
            (Verdict::JWins, Some(m), Some(c)) => (m + c) - 0.5,
            _ => 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConfidenceReport {
    pub n: usize,
    pub delta: f64,
    pub sides: Sidedness,
    /// Pairs in `(i, j)` lexicographic order, `i < j`.
    pub pairs: Vec<PairConfidence>,
}

impl ConfidenceReport {
    pub fn pair(&self, i: usize, j: usize) -> Option<&PairConfidence> {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if b >= self.n || a == b {
            return None;
        }
        // Row a of the strict upper triangle starts after sum_{x<a} (n-1-x) pairs.
        let idx = a * (2 * self.n - a - 1) / 2 + (b - a - 1);
        self.pairs.get(idx)
    }

    pub fn decided(&self) -> usize {
        self.pairs.iter().filter(|p| p.verdict != Verdict::Undecided).count()
    }

    /// Signed margin of `row` over `col`; antisymmetric by construction.
    pub fn signed_margin(&self, row: usize, col: usize) -> f64 {
        match self.pair(row, col) {
            Some(p) if row < col => p.margin(),
            // Undecided pairs stay +0 so exports never print "-0".
            Some(p) => 0.0 - p.margin(),
            None => 0.0,
        }
    }
}

/// Builds intervals for every pair from the direct comparisons in `acc`.
pub fn confidence_report<S: Scalar>(
    acc: &AccumulatedMatrix<S>,
    delta: f64,
    sides: Sidedness,
) -> Result<ConfidenceReport> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(validation(format!("delta must lie in (0, 1], got {delta}")));
    }
    let n = acc.size();
    let mut pairs = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let z = acc.direct_count(i, j);
            let entry = if z == 0 {
                PairConfidence { i, j, m_hat: None, z, c: None, verdict: Verdict::Undecided }
            } else {
                let m = acc.direct_wins(i, j) as f64 / z as f64;
                let c = hoeffding_halfwidth_with(z, delta, sides)?;
                let verdict = if m - c > 0.5 {
                    Verdict::IWins
                } else if m + c < 0.5 {
                    Verdict::JWins
                } else {
                    Verdict::Undecided
                };
                PairConfidence { i, j, m_hat: Some(m), z, c: Some(c), verdict }
            };
            pairs.push(entry);
        }
    }
    Ok(ConfidenceReport { n, delta, sides, pairs })
}

/// Signed margins with rows and columns listed best to worst by `order`.
pub fn significance_heatmap(report: &ConfidenceReport, order: &Ranking) -> Result<Vec<Vec<f64>>> {
    if order.len() != report.n {
        return Err(validation("heatmap order does not cover the report's systems"));
    }
    let ids = order.ordering_indices();
    Ok(ids.iter().map(|&row| ids.iter().map(|&col| report.signed_margin(row, col)).collect()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::accumulate;
    use crate::model::{PartialRanking, SystemId};

    fn chain(n: usize, v: &[usize]) -> PartialRanking {
        PartialRanking::new(n, v.iter().copied().map(SystemId).collect()).unwrap()
    }

    #[test]
    fn halfwidth_values() {
        for z in [1, 7, 500, 10_000] {
            assert_eq!(hoeffding_halfwidth(z, 1.0).unwrap(), 0.0);
        }
        // sqrt(ln(100) / 1000)
        let c500 = hoeffding_halfwidth(500, 0.01).unwrap();
        assert!((c500 - 0.067_860).abs() < 1e-4, "{c500}");
        let c1000 = hoeffding_halfwidth(1000, 0.01).unwrap();
        assert!((c1000 - 0.047_985).abs() < 1e-4, "{c1000}");
        assert!((c1000 * 2f64.sqrt() - c500).abs() < 1e-12);
    }

    #[test]
    fn halfwidth_errors_and_monotonicity() {
        assert!(matches!(hoeffding_halfwidth(0, 0.1), Err(Error::NoComparison(..))));
        assert!(hoeffding_halfwidth(5, 0.0).is_err());
        assert!(hoeffding_halfwidth(5, 1.5).is_err());
        let mut last = f64::INFINITY;
        for z in 1..50 {
            let c = hoeffding_halfwidth(z, 0.05).unwrap();
            assert!(c < last);
            last = c;
        }
        assert!(hoeffding_halfwidth(10, 0.01).unwrap() > hoeffding_halfwidth(10, 0.1).unwrap());
        assert!(
            hoeffding_halfwidth_with(10, 0.05, Sidedness::TwoSided).unwrap() > hoeffding_halfwidth(10, 0.05).unwrap()
        );
    }

    #[test]
    fn unanimous_pair() {
        let c = chain(2, &[0, 1]);
        let acc = accumulate::<f64, _>(2, std::iter::repeat_n(&c, 100)).unwrap();
        let report = confidence_report(&acc, 0.1, Sidedness::OneSided).unwrap();
        let p = report.pair(0, 1).unwrap();
        assert_eq!(p.m_hat, Some(1.0));
        assert!((p.c.unwrap() - (10f64.ln() / 200.0).sqrt()).abs() < 1e-12);
        assert!((p.c.unwrap() - 0.1073).abs() < 1e-4);
        assert_eq!(p.verdict, Verdict::IWins);
    }

    #[test]
    fn never_compared_is_undecided() {
        let acc = accumulate::<f64, _>(3, [&chain(3, &[0, 2]), &chain(3, &[1, 2])]).unwrap();
        let report = confidence_report(&acc, 0.05, Sidedness::OneSided).unwrap();
        let p = report.pair(0, 1).unwrap();
        assert_eq!((p.z, p.m_hat, p.verdict), (0, None, Verdict::Undecided));
        assert_eq!(p.margin(), 0.0);
    }

    #[test]
    fn even_split_is_undecided() {
        let a = chain(2, &[0, 1]);
        let b = chain(2, &[1, 0]);
        let acc = accumulate::<f64, _>(2, [&a, &b, &a, &b]).unwrap();
        for delta in [0.01, 0.5, 0.99] {
            let report = confidence_report(&acc, delta, Sidedness::OneSided).unwrap();
            assert_eq!(report.pair(1, 0).unwrap().verdict, Verdict::Undecided);
        }
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn margins_and_heatmap() {
        let p = PairConfidence { i: 0, j: 1, m_hat: Some(1.0), z: 9, c: Some(0.1), verdict: Verdict::IWins };
        assert!((p.margin() - 0.4).abs() < 1e-12);

        let a = chain(3, &[2, 0, 1]);
        let acc = accumulate::<f64, _>(3, std::iter::repeat_n(&a, 50)).unwrap();
        let report = confidence_report(&acc, 0.01, Sidedness::OneSided).unwrap();
        assert_eq!(report.pair(0, 2).unwrap().verdict, Verdict::JWins);
        let order = Ranking::from_ordering([2usize, 0, 1]).unwrap();
        let heat = significance_heatmap(&report, &order).unwrap();
        for r in 0..3 {
            assert_eq!(heat[r][r], 0.0);
            for c in 0..3 {
                assert_eq!(heat[r][c], -heat[c][r]);
                if r < c {
                    assert!(heat[r][c] > 0.0, "best-to-worst rows win above the diagonal");
                }
            }
        }
    }

    #[test]
    fn verdicts_exclude_one_half() {
        let parts = [chain(4, &[0, 1, 2, 3]), chain(4, &[1, 0, 3]), chain(4, &[2, 3]), chain(4, &[0, 3, 1])];
        let acc = accumulate::<f64, _>(4, parts.iter().cycle().take(60)).unwrap();
        let report = confidence_report(&acc, 0.05, Sidedness::OneSided).unwrap();
        for p in &report.pairs {
            if p.verdict != Verdict::Undecided {
                let (m, c) = (p.m_hat.unwrap(), p.c.unwrap());
                assert!(!(m - c..=m + c).contains(&0.5));
                assert!(c >= 0.0);
            }
        }
        assert!(report.decided() > 0);
    }
}
