//! Domain types: system ids, partial and complete rankings, score containers.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};

/// Dense index of a system within a universe of `N` systems.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SystemId(pub usize);

impl SystemId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for SystemId {
    fn from(id: usize) -> Self {
        SystemId(id)
    }
}

impl fmt::Display for SystemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Checks that `perm` is a permutation of `0..n` and returns its inverse.
pub(crate) fn invert_permutation(perm: &[usize]) -> Result<Vec<usize>> {
    let n = perm.len();
    let mut inverse = vec![usize::MAX; n];
    for (pos, &id) in perm.iter().enumerate() {
        if id >= n {
            return Err(validation(format!("id {id} out of range for {n} systems")));
        }
        if inverse[id] != usize::MAX {
            return Err(validation(format!("duplicate id {id}")));
        }
        inverse[id] = pos;
    }
    Ok(inverse)
}

/// A strict order over a subset of the systems, best first.
///
/// Systems that do not appear are unobserved. The empty ranking is legal and
/// carries no information.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PartialRanking {
    universe: usize,
    ordered: Vec<SystemId>,
}

impl PartialRanking {
    pub fn new(universe: usize, ordered: Vec<SystemId>) -> Result<Self> {
        let mut seen = vec![false; universe];
        for id in &ordered {
            let slot = seen
                .get_mut(id.index())
                .ok_or_else(|| validation(format!("id {id} out of range for {universe} systems")))?;
            if *slot {
                return Err(validation(format!("duplicate id {id} in partial ranking")));
            }
            *slot = true;
        }
        Ok(Self { universe, ordered })
    }

    pub fn empty(universe: usize) -> Self {
        Self { universe, ordered: Vec::new() }
    }

    /// Builds the partial ranking induced by one column of scores.
    ///
    /// Higher is better; `None` marks an unobserved system. Exact ties are
    /// broken by ascending id so the result is always a strict chain.
    pub fn from_scores(scores: &[Option<f64>]) -> Result<Self> {
        let mut observed: Vec<(usize, f64)> = Vec::with_capacity(scores.len());
        for (id, score) in scores.iter().enumerate() {
            if let Some(s) = *score {
                if s.is_nan() {
                    return Err(validation(format!("NaN score for system {id}")));
                }
                observed.push((id, s));
            }
        }
        // Stable sort: equal scores keep ascending id order.
        observed.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal));
        Ok(Self { universe: scores.len(), ordered: observed.into_iter().map(|(id, _)| SystemId(id)).collect() })
    }

    #[inline]
    pub fn universe_size(&self) -> usize {
        self.universe
    }

    #[inline]
    pub fn ordered(&self) -> &[SystemId] {
        &self.ordered
    }

    /// Number of observed systems.
    #[inline]
    pub fn len(&self) -> usize {
        self.ordered.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.ordered.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.ordered.len() == self.universe
    }

    /// Position of every system among the observed ones (`None` if unobserved).
    pub fn positions(&self) -> Vec<Option<usize>> {
        let mut pos = vec![None; self.universe];
        for (p, id) in self.ordered.iter().enumerate() {
            pos[id.index()] = Some(p);
        }
        pos
    }

    pub fn unobserved(&self) -> Vec<SystemId> {
        self.positions().iter().enumerate().filter(|(_, p)| p.is_none()).map(|(id, _)| SystemId(id)).collect()
    }

    /// Renames every system `i` to `relabel[i]`.
    pub fn relabel(&self, relabel: &[usize]) -> Result<Self> {
        if relabel.len() != self.universe {
            return Err(validation("relabeling has the wrong length"));
        }
        invert_permutation(relabel)?;
        Ok(Self {
            universe: self.universe,
            ordered: self.ordered.iter().map(|id| SystemId(relabel[id.index()])).collect(),
        })
    }
}

/// A total order of all `N` systems, best first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Ranking {
    ordering: Vec<SystemId>,
    rank_of: Vec<usize>,
}

impl Ranking {
    pub fn from_ordering<I>(ordering: I) -> Result<Self>
    where
        I: IntoIterator,
        I::Item: Into<SystemId>,
    {
        let ordering: Vec<SystemId> = ordering.into_iter().map(Into::into).collect();
        let raw: Vec<usize> = ordering.iter().map(|id| id.index()).collect();
        let rank_of = invert_permutation(&raw)?;
        Ok(Self { ordering, rank_of })
    }

    pub fn identity(n: usize) -> Self {
        Self { ordering: (0..n).map(SystemId).collect(), rank_of: (0..n).collect() }
    }

    /// Sorts systems by `cmp` (Less = better), breaking ties by ascending id.
    pub(crate) fn sorted_by<F>(n: usize, mut cmp: F) -> Self
    where
        F: FnMut(usize, usize) -> Ordering,
    {
        let mut ids: Vec<usize> = (0..n).collect();
        ids.sort_by(|&a, &b| cmp(a, b).then(a.cmp(&b)));
        let mut rank_of = vec![0; n];
        for (p, &id) in ids.iter().enumerate() {
            rank_of[id] = p;
        }
        Self { ordering: ids.into_iter().map(SystemId).collect(), rank_of }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.ordering.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.ordering.is_empty()
    }

    #[inline]
    pub fn ordering(&self) -> &[SystemId] {
        &self.ordering
    }

    /// Position of `id` (0 = best).
    #[inline]
    pub fn rank_of(&self, id: SystemId) -> usize {
        self.rank_of[id.index()]
    }

    #[inline]
    pub fn ranks(&self) -> &[usize] {
        &self.rank_of
    }

    pub fn ordering_indices(&self) -> Vec<usize> {
        self.ordering.iter().map(|id| id.index()).collect()
    }

    pub fn reversed(&self) -> Self {
        let n = self.len();
        Self {
            ordering: self.ordering.iter().rev().copied().collect(),
            rank_of: self.rank_of.iter().map(|&r| n - 1 - r).collect(),
        }
    }

    /// Renames every system `i` to `relabel[i]`.
    pub fn relabel(&self, relabel: &[usize]) -> Result<Self> {
        if relabel.len() != self.len() {
            return Err(validation("relabeling has the wrong length"));
        }
        Self::from_ordering(self.ordering.iter().map(|id| relabel[id.index()]))
    }

    /// Restates the ranking as a partial ranking that observes every system.
    pub fn to_partial(&self) -> PartialRanking {
        PartialRanking { universe: self.len(), ordered: self.ordering.clone() }
    }
}

/// Task-level scores `s[n, t]` with explicit missingness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreTable {
    n_systems: usize,
    n_tasks: usize,
    /// Row-major by system.
    cells: Vec<Option<f64>>,
}

impl ScoreTable {
    /// A table with every cell absent.
    pub fn new(n_systems: usize, n_tasks: usize) -> Self {
        Self { n_systems, n_tasks, cells: vec![None; n_systems * n_tasks] }
    }

    /// Builds a table from one row of task scores per system.
    pub fn from_rows(rows: Vec<Vec<Option<f64>>>) -> Result<Self> {
        let n_tasks = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_tasks) {
            return Err(validation("rows have differing task counts"));
        }
        let n_systems = rows.len();
        Ok(Self { n_systems, n_tasks, cells: rows.into_iter().flatten().collect() })
    }

    /// Complete table from plain values.
    pub fn from_complete(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_rows(rows.iter().map(|r| r.iter().copied().map(Some).collect()).collect())
    }

    #[inline]
    pub fn n_systems(&self) -> usize {
        self.n_systems
    }

    #[inline]
    pub fn n_tasks(&self) -> usize {
        self.n_tasks
    }

    #[inline]
    pub fn get(&self, system: usize, task: usize) -> Option<f64> {
        self.cells[system * self.n_tasks + task]
    }

    #[inline]
    pub fn set(&mut self, system: usize, task: usize, value: Option<f64>) {
        self.cells[system * self.n_tasks + task] = value;
    }

    pub fn task_scores(&self, task: usize) -> Vec<Option<f64>> {
        (0..self.n_systems).map(|n| self.get(n, task)).collect()
    }

    pub fn system_scores(&self, system: usize) -> &[Option<f64>] {
        &self.cells[system * self.n_tasks..(system + 1) * self.n_tasks]
    }

    /// `N_t`: number of systems with a score on `task`.
    pub fn observed_on_task(&self, task: usize) -> usize {
        (0..self.n_systems).filter(|&n| self.get(n, task).is_some()).count()
    }

    pub fn present_cells(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    pub fn is_complete(&self) -> bool {
        self.cells.iter().all(Option::is_some)
    }

    pub fn task_partial(&self, task: usize) -> Result<PartialRanking> {
        PartialRanking::from_scores(&self.task_scores(task))
    }

    /// Applies `f` to every present score of `task`.
    pub fn map_task<F: FnMut(f64) -> f64>(&mut self, task: usize, mut f: F) {
        for n in 0..self.n_systems {
            if let Some(v) = self.get(n, task) {
                self.set(n, task, Some(f(v)));
            }
        }
    }

    /// Moves system `i` to row `relabel[i]`.
    pub fn relabel_systems(&self, relabel: &[usize]) -> Result<Self> {
        if relabel.len() != self.n_systems {
            return Err(validation("relabeling has the wrong length"));
        }
        invert_permutation(relabel)?;
        let mut out = Self::new(self.n_systems, self.n_tasks);
        for (n, &to) in relabel.iter().enumerate() {
            for t in 0..self.n_tasks {
                out.set(to, t, self.get(n, t));
            }
        }
        Ok(out)
    }
}

/// Instance-level scores `s[n, t, k]` with `K_t` instances on task `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreTensor {
    n_systems: usize,
    instance_counts: Vec<usize>,
    /// Per task, instance-major: `cells[t][k * N + n]`.
    cells: Vec<Vec<Option<f64>>>,
}

impl ScoreTensor {
    pub fn new(n_systems: usize, instance_counts: Vec<usize>) -> Self {
        let cells = instance_counts.iter().map(|&k| vec![None; k * n_systems]).collect();
        Self { n_systems, instance_counts, cells }
    }

    /// One instance per task carrying the table's score.
    pub fn from_table(table: &ScoreTable) -> Self {
        let mut out = Self::new(table.n_systems(), vec![1; table.n_tasks()]);
        for t in 0..table.n_tasks() {
            for n in 0..table.n_systems() {
                out.set(n, t, 0, table.get(n, t));
            }
        }
        out
    }

    #[inline]
    pub fn n_systems(&self) -> usize {
        self.n_systems
    }

    #[inline]
    pub fn n_tasks(&self) -> usize {
        self.instance_counts.len()
    }

    #[inline]
    pub fn instance_counts(&self) -> &[usize] {
        &self.instance_counts
    }

    #[inline]
    pub fn instances(&self, task: usize) -> usize {
        self.instance_counts[task]
    }

    pub fn total_instances(&self) -> usize {
        self.instance_counts.iter().sum()
    }

    #[inline]
    pub fn get(&self, system: usize, task: usize, instance: usize) -> Option<f64> {
        debug_assert!(instance < self.instance_counts[task]);
        self.cells[task][instance * self.n_systems + system]
    }

    #[inline]
    pub fn set(&mut self, system: usize, task: usize, instance: usize, value: Option<f64>) {
        assert!(instance < self.instance_counts[task], "instance index out of range");
        self.cells[task][instance * self.n_systems + system] = value;
    }

    /// Scores of every system on one `(task, instance)` unit.
    #[inline]
    pub fn instance_scores(&self, task: usize, instance: usize) -> &[Option<f64>] {
        let n = self.n_systems;
        &self.cells[task][instance * n..(instance + 1) * n]
    }

    pub fn instance_partial(&self, task: usize, instance: usize) -> Result<PartialRanking> {
        PartialRanking::from_scores(self.instance_scores(task, instance))
    }

    /// True if `system` has at least one present score on `task`.
    pub fn pair_observed(&self, system: usize, task: usize) -> bool {
        (0..self.instances(task)).any(|k| self.get(system, task, k).is_some())
    }

    /// Marks every instance of `(system, task)` absent.
    pub fn remove_pair(&mut self, system: usize, task: usize) {
        for k in 0..self.instances(task) {
            self.set(system, task, k, None);
        }
    }

    pub fn present_cells(&self) -> usize {
        self.cells.iter().flatten().filter(|c| c.is_some()).count()
    }

    pub fn map_task<F: FnMut(f64) -> f64>(&mut self, task: usize, mut f: F) {
        for v in self.cells[task].iter_mut().flatten() {
            *v = f(*v);
        }
    }

    pub fn relabel_systems(&self, relabel: &[usize]) -> Result<Self> {
        if relabel.len() != self.n_systems {
            return Err(validation("relabeling has the wrong length"));
        }
        invert_permutation(relabel)?;
        let mut out = Self::new(self.n_systems, self.instance_counts.clone());
        for t in 0..self.n_tasks() {
            for k in 0..self.instances(t) {
                for (n, &to) in relabel.iter().enumerate() {
                    out.set(to, t, k, self.get(n, t, k));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Task,
    Instance,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Task => "task",
            Level::Instance => "instance",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Either granularity of benchmark data.
#[derive(Clone, Debug, PartialEq)]
pub enum Dataset {
    Task(ScoreTable),
    Instance(ScoreTensor),
}

impl Dataset {
    pub fn level(&self) -> Level {
        match self {
            Dataset::Task(_) => Level::Task,
            Dataset::Instance(_) => Level::Instance,
        }
    }

    pub fn n_systems(&self) -> usize {
        match self {
            Dataset::Task(t) => t.n_systems(),
            Dataset::Instance(t) => t.n_systems(),
        }
    }

    pub fn n_tasks(&self) -> usize {
        match self {
            Dataset::Task(t) => t.n_tasks(),
            Dataset::Instance(t) => t.n_tasks(),
        }
    }

    pub fn relabel_systems(&self, relabel: &[usize]) -> Result<Self> {
        Ok(match self {
            Dataset::Task(t) => Dataset::Task(t.relabel_systems(relabel)?),
            Dataset::Instance(t) => Dataset::Instance(t.relabel_systems(relabel)?),
        })
    }

    pub fn map_task<F: FnMut(f64) -> f64>(&mut self, task: usize, f: F) {
        match self {
            Dataset::Task(t) => t.map_task(task, f),
            Dataset::Instance(t) => t.map_task(task, f),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ids(v: &[usize]) -> Vec<SystemId> {
        v.iter().copied().map(SystemId).collect()
    }

    #[test]
    fn ranking_inverse_view() {
        let r = Ranking::from_ordering([2usize, 0, 1]).unwrap();
        assert_eq!(r.ranks(), &[1, 2, 0]);
        assert_eq!(r.rank_of(SystemId(2)), 0);
        assert_eq!(Ranking::from_ordering([0usize, 1, 2]).unwrap().ranks(), &[0, 1, 2]);
        assert_eq!(Ranking::from_ordering([1usize, 0]).unwrap().ranks(), &[1, 0]);
    }

    #[test]
    fn ranking_rejects_bad_orderings() {
        assert!(Ranking::from_ordering([0usize, 0, 1]).is_err());
        assert!(Ranking::from_ordering([0usize, 3, 1]).is_err());
    }

    #[test]
    fn partial_rejects_duplicates_and_range() {
        assert!(PartialRanking::new(3, ids(&[0, 0])).is_err());
        assert!(PartialRanking::new(3, ids(&[3])).is_err());
        assert!(PartialRanking::new(3, vec![]).unwrap().is_empty());
    }

    #[test]
    fn partial_from_scores_examples() {
        let p = PartialRanking::from_scores(&[Some(0.9), None, Some(0.5)]).unwrap();
        assert_eq!(p.ordered(), ids(&[0, 2]).as_slice());
        assert_eq!(p.universe_size(), 3);

        assert!(PartialRanking::from_scores(&[None, None]).unwrap().is_empty());

        let p = PartialRanking::from_scores(&[Some(0.5), Some(0.5), Some(0.1)]).unwrap();
        assert_eq!(p.ordered(), ids(&[0, 1, 2]).as_slice());

        assert!(PartialRanking::from_scores(&[Some(f64::NAN), Some(1.0)]).is_err());
    }

    #[test]
    fn zero_is_a_real_score() {
        let p = PartialRanking::from_scores(&[Some(0.0), None, Some(-1.0)]).unwrap();
        assert_eq!(p.ordered(), ids(&[0, 2]).as_slice());
    }

    #[test]
    fn tensor_layout() {
        let mut t = ScoreTensor::new(3, vec![2, 1]);
        t.set(1, 0, 1, Some(4.0));
        assert_eq!(t.instance_scores(0, 1), &[None, Some(4.0), None]);
        assert!(t.pair_observed(1, 0));
        t.remove_pair(1, 0);
        assert!(!t.pair_observed(1, 0));
        assert_eq!(t.total_instances(), 3);
    }

    fn arb_scores() -> impl Strategy<Value = Vec<Option<f64>>> {
        prop::collection::vec(prop::option::of(-100.0f64..100.0), 0..12)
    }

    proptest! {
        #[test]
        fn ordering_round_trips(perm in Just((0..9usize).collect::<Vec<_>>()).prop_shuffle()) {
            let r = Ranking::from_ordering(perm.clone()).unwrap();
            prop_assert_eq!(r.ordering_indices(), perm);
        }

        #[test]
        fn partial_invariant_under_increasing_maps(scores in arb_scores()) {
            let base = PartialRanking::from_scores(&scores).unwrap();
            let mapped: Vec<_> = scores.iter().map(|s| s.map(|v| (v / 50.0).exp() * 3.0 + 1.0)).collect();
            // exp can merge nearby values into ties; only compare when it stays injective.
            let distinct = |v: &[Option<f64>]| {
                let mut xs: Vec<f64> = v.iter().flatten().copied().collect();
                xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
                xs.windows(2).filter(|w| w[0] == w[1]).count()
            };
            prop_assume!(distinct(&scores) == distinct(&mapped));
            prop_assert_eq!(PartialRanking::from_scores(&mapped).unwrap(), base);
        }

        #[test]
        fn partial_relabel_equivariance(
            (scores, perm) in (1usize..10).prop_flat_map(|n| (
                prop::collection::vec(prop::option::of(-5i32..5), n),
                Just((0..n).collect::<Vec<_>>()).prop_shuffle(),
            ))
        ) {
            // Distinct values keep tie-breaking out of the picture.
            let scores: Vec<Option<f64>> = scores.iter().enumerate()
                .map(|(i, s)| s.map(|v| v as f64 + i as f64 * 1e-3)).collect();
            let mut moved = vec![None; scores.len()];
            for (i, s) in scores.iter().enumerate() {
                moved[perm[i]] = *s;
            }
            let direct = PartialRanking::from_scores(&moved).unwrap();
            let relabeled = PartialRanking::from_scores(&scores).unwrap().relabel(&perm).unwrap();
            prop_assert_eq!(direct, relabeled);
        }
    }
}
