//! File formats.
//!
//! Long CSV, one score per row:
//!
//! ```text
//! system,task,score                 (task level)
//! system,task,instance,score        (instance level)
//! ```
//!
//! Missing cells are absent rows; an empty `score` field is also read as
//! missing and still registers its labels. Labels are interned to dense ids
//! in order of first appearance (instances per task).
//!
//! Wide CSV: a header of task names after one leading label column, then one
//! row per system. `X` (any case) or an empty cell marks a missing score.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::aggregation::{Aggregate, Scores};
use crate::confidence::ConfidenceReport;
use crate::error::{validation, Error, Result};
use crate::evaluation::{Agreement, RobustnessCurve};
use crate::model::{Dataset, Level, ScoreTable, ScoreTensor};

const TASK_HEADER: [&str; 3] = ["system", "task", "score"];
const INSTANCE_HEADER: [&str; 4] = ["system", "task", "instance", "score"];

/// A dataset together with the labels its ids stand for.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    pub systems: Vec<String>,
    pub tasks: Vec<String>,
    /// Instance labels per task; empty for task-level data.
    pub instances: Vec<Vec<String>>,
    pub data: Dataset,
}

impl LabeledDataset {
    /// Labels `s0.., t0.., 0..` for generated data.
    pub fn with_default_labels(data: Dataset) -> Self {
        let systems = (0..data.n_systems()).map(|n| format!("s{n}")).collect();
        let tasks = (0..data.n_tasks()).map(|t| format!("t{t}")).collect();
        let instances = match &data {
            Dataset::Task(_) => Vec::new(),
            Dataset::Instance(t) => {
                t.instance_counts().iter().map(|&k| (0..k).map(|i| i.to_string()).collect()).collect()
            }
        };
        Self { systems, tasks, instances, data }
    }

    pub fn level(&self) -> Level {
        self.data.level()
    }

    /// Multiplies the scores of the named tasks by -1 (lower-is-better metrics).
    pub fn negate_tasks<S: AsRef<str>>(&mut self, names: &[S]) -> Result<()> {
        for name in names {
            let name = name.as_ref();
            let t = self
                .tasks
                .iter()
                .position(|x| x == name)
                .ok_or_else(|| validation(format!("unknown task {name:?}")))?;
            self.data.map_task(t, |v| -v);
        }
        Ok(())
    }

    /// Promotes task-level data to one instance per task.
    pub fn into_instance_level(self) -> Self {
        match self.data {
            Dataset::Task(table) => {
                let instances = vec![vec!["0".to_string()]; table.n_tasks()];
                Self { data: Dataset::Instance(ScoreTensor::from_table(&table)), instances, ..self }
            }
            Dataset::Instance(_) => self,
        }
    }
}

#[derive(Default)]
struct Interner {
    ids: HashMap<String, usize>,
    labels: Vec<String>,
}

impl Interner {
    fn intern(&mut self, label: &str) -> usize {
        if let Some(&id) = self.ids.get(label) {
            return id;
        }
        let id = self.labels.len();
        self.ids.insert(label.to_string(), id);
        self.labels.push(label.to_string());
        id
    }
}

fn parse_score(field: &str, line: usize) -> Result<Option<f64>> {
    let field = field.trim();
    if field.is_empty() {
        return Ok(None);
    }
    let value: f64 =
        field.parse().map_err(|_| Error::Parse { line, message: format!("non-numeric score {field:?}") })?;
    if !value.is_finite() {
        return Err(Error::Parse { line, message: format!("non-finite score {field:?}") });
    }
    Ok(Some(value))
}

fn header_matches(record: &csv::StringRecord, expected: &[&str]) -> bool {
    record.len() == expected.len()
        && record.iter().zip(expected).all(|(got, want)| got.trim().eq_ignore_ascii_case(want))
}

fn reader_for<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input)
}

fn line_of(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

/// Reads a long-format CSV at the given granularity.
pub fn parse_long_csv<R: Read>(input: R, level: Level) -> Result<LabeledDataset> {
    let expected: &[&str] = match level {
        Level::Task => &TASK_HEADER,
        Level::Instance => &INSTANCE_HEADER,
    };
    let mut records = reader_for(input).into_records();
    let header = records.next().ok_or(Error::Parse { line: 1, message: "empty input".into() })??;
    if !header_matches(&header, expected) {
        return Err(Error::Parse { line: 1, message: format!("expected header {}", expected.join(",")) });
    }

    let mut systems = Interner::default();
    let mut tasks = Interner::default();
    let mut instances: Vec<Interner> = Vec::new();
    let mut seen = HashSet::new();
    let mut rows = Vec::new();
    for record in records {
        let record = record?;
        let line = line_of(&record);
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != expected.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", expected.len(), record.len()),
            });
        }
        let n = systems.intern(record[0].trim());
        let t = tasks.intern(record[1].trim());
        if instances.len() <= t {
            instances.resize_with(t + 1, Interner::default);
        }
        let k = match level {
            Level::Task => instances[t].intern("0"),
            Level::Instance => instances[t].intern(record[2].trim()),
        };
        let score = parse_score(&record[expected.len() - 1], line)?;
        if !seen.insert((n, t, k)) {
            return Err(Error::Parse { line, message: "duplicate cell".into() });
        }
        rows.push((n, t, k, score));
    }

    let n_systems = systems.labels.len();
    let data = match level {
        Level::Task => {
            let mut table = ScoreTable::new(n_systems, tasks.labels.len());
            for (n, t, _, s) in rows {
                table.set(n, t, s);
            }
            Dataset::Task(table)
        }
        Level::Instance => {
            let counts = instances.iter().map(|i| i.labels.len()).collect();
            let mut tensor = ScoreTensor::new(n_systems, counts);
            for (n, t, k, s) in rows {
                tensor.set(n, t, k, s);
            }
            Dataset::Instance(tensor)
        }
    };
    Ok(LabeledDataset {
        systems: systems.labels,
        tasks: tasks.labels,
        instances: match level {
            Level::Task => Vec::new(),
            Level::Instance => instances.into_iter().map(|i| i.labels).collect(),
        },
        data,
    })
}

fn is_missing_marker(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f.eq_ignore_ascii_case("x")
}

/// Reads a wide system-by-task matrix.
pub fn parse_wide_matrix<R: Read>(input: R) -> Result<LabeledDataset> {
    let mut records = reader_for(input).into_records();
    let header = records.next().ok_or(Error::Parse { line: 1, message: "empty input".into() })??;
    if header.len() < 2 {
        return Err(Error::Parse { line: 1, message: "header needs a label column and at least one task".into() });
    }
    let tasks: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut systems = Vec::new();
    let mut rows = Vec::new();
    for record in records {
        let record = record?;
        let line = line_of(&record);
        if record.len() == 1 && record[0].trim().is_empty() {
            continue;
        }
        if record.len() != tasks.len() + 1 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", tasks.len() + 1, record.len()),
            });
        }
        let name = record[0].trim().to_string();
        if systems.contains(&name) {
            return Err(Error::Parse { line, message: format!("duplicate system {name:?}") });
        }
        let row = record
            .iter()
            .skip(1)
            .map(|f| if is_missing_marker(f) { Ok(None) } else { parse_score(f, line) })
            .collect::<Result<Vec<_>>>()?;
        systems.push(name);
        rows.push(row);
    }
    let table = if rows.is_empty() { ScoreTable::new(0, tasks.len()) } else { ScoreTable::from_rows(rows)? };
    Ok(LabeledDataset { systems, tasks, instances: Vec::new(), data: Dataset::Task(table) })
}

/// Reads either format, telling them apart by the header.
///
/// Task-level files are promoted to one instance per task when `level` is
/// `Instance`.
pub fn parse_dataset<R: BufRead>(mut input: R, level: Level) -> Result<LabeledDataset> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let first = text.lines().next().unwrap_or("");
    let cols: Vec<String> = first.split(',').map(|c| c.trim().to_ascii_lowercase()).collect();
    let is = |h: &[&str]| cols.len() == h.len() && cols.iter().zip(h).all(|(a, b)| a == b);
    let parsed = if is(&INSTANCE_HEADER) {
        if level == Level::Task {
            return Err(validation("instance-level file given with --level task"));
        }
        parse_long_csv(text.as_bytes(), Level::Instance)?
    } else if is(&TASK_HEADER) {
        parse_long_csv(text.as_bytes(), Level::Task)?
    } else {
        parse_wide_matrix(text.as_bytes())?
    };
    Ok(match level {
        Level::Task => parsed,
        Level::Instance => parsed.into_instance_level(),
    })
}

pub fn read_dataset(path: impl AsRef<Path>, level: Level) -> Result<LabeledDataset> {
    parse_dataset(BufReader::new(File::open(path)?), level)
}

fn fmt_score(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes long CSV: every cell, task-major, empty score where missing.
///
/// Listing every cell keeps first-appearance order equal to id order, so
/// reading the output back reproduces the same dataset.
pub fn write_long_csv<W: Write>(out: W, data: &LabeledDataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match &data.data {
        Dataset::Task(table) => {
            w.write_record(TASK_HEADER)?;
            for t in 0..table.n_tasks() {
                for n in 0..table.n_systems() {
                    w.write_record([&data.systems[n], &data.tasks[t], &fmt_score(table.get(n, t))])?;
                }
            }
        }
        Dataset::Instance(tensor) => {
            w.write_record(INSTANCE_HEADER)?;
            for t in 0..tensor.n_tasks() {
                for k in 0..tensor.instances(t) {
                    for n in 0..tensor.n_systems() {
                        w.write_record([
                            &data.systems[n],
                            &data.tasks[t],
                            &data.instances[t][k],
                            &fmt_score(tensor.get(n, t, k)),
                        ])?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes a task-level table in wide format with `X` for missing cells.
pub fn write_wide_matrix<W: Write>(out: W, data: &LabeledDataset) -> Result<()> {
    let Dataset::Task(table) = &data.data else {
        return Err(validation("wide format holds task-level data only"));
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(std::iter::once("system").chain(data.tasks.iter().map(String::as_str)))?;
    for n in 0..table.n_systems() {
        let cells = (0..table.n_tasks()).map(|t| table.get(n, t).map_or_else(|| "X".to_string(), |v| v.to_string()));
        w.write_record(std::iter::once(data.systems[n].clone()).chain(cells))?;
    }
    w.flush()?;
    Ok(())
}

/// JSON view of a dataset: `scores[task][instance][system]`, one instance
/// per task at task level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DatasetDocument {
    pub level: String,
    pub systems: Vec<String>,
    pub tasks: Vec<String>,
    pub instances: Vec<Vec<String>>,
    pub scores: Vec<Vec<Vec<Option<f64>>>>,
}

impl DatasetDocument {
    pub fn new(data: &LabeledDataset) -> Self {
        let scores = match &data.data {
            Dataset::Task(table) => (0..table.n_tasks()).map(|t| vec![table.task_scores(t)]).collect(),
            Dataset::Instance(tensor) => (0..tensor.n_tasks())
                .map(|t| (0..tensor.instances(t)).map(|k| tensor.instance_scores(t, k).to_vec()).collect())
                .collect(),
        };
        Self {
            level: data.level().to_string(),
            systems: data.systems.clone(),
            tasks: data.tasks.clone(),
            instances: data.instances.clone(),
            scores,
        }
    }
}

/// Self-describing aggregation result.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankingDocument {
    pub method: String,
    pub level: String,
    pub ordering: Vec<usize>,
    pub system_names: Vec<String>,
    pub borda_scores: Option<Vec<f64>>,
    pub unobserved_systems: Vec<usize>,
}

impl RankingDocument {
    pub fn new(agg: &Aggregate, level: Level, system_names: &[String]) -> Self {
        Self {
            method: agg.method.to_string(),
            level: level.to_string(),
            ordering: agg.ranking.ordering_indices(),
            system_names: system_names.to_vec(),
            borda_scores: match &agg.scores {
                Scores::Borda(b) => Some(b.clone()),
                Scores::RankSums(s) => Some(s.iter().map(|&x| x as f64).collect()),
                Scores::Means(_) => None,
            },
            unobserved_systems: agg.unobserved.iter().map(|id| id.index()).collect(),
        }
    }
}

pub fn write_json<W: Write, T: Serialize>(mut out: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// `position,system,name,score`, best first.
pub fn write_ranking_csv<W: Write>(out: W, agg: &Aggregate, system_names: &[String]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["position", "system", "name", "score"])?;
    for (pos, id) in agg.ranking.ordering().iter().enumerate() {
        let n = id.index();
        let score = match &agg.scores {
            Scores::Borda(b) => Some(b[n]),
            Scores::RankSums(s) => Some(s[n] as f64),
            Scores::Means(m) => m[n],
        };
        w.write_record([pos.to_string(), n.to_string(), system_names[n].clone(), fmt_score(score)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_robustness_csv<W: Write>(out: W, curve: &RobustnessCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eta", "repeat", "method", "tau"])?;
    for s in &curve.samples {
        w.write_record([s.eta.to_string(), s.repeat.to_string(), s.method.to_string(), s.tau.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_agreement_csv<W: Write>(out: W, agreement: &Agreement) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["eta", "repeat", "method_a", "method_b", "tau", "top1_same", "top3_same"])?;
    for r in &agreement.rows {
        w.write_record([
            r.eta.to_string(),
            r.repeat.to_string(),
            r.method_a.to_string(),
            r.method_b.to_string(),
            r.tau.to_string(),
            r.top1_same.to_string(),
            r.top3_same.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_confidence_csv<W: Write>(out: W, report: &ConfidenceReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "m_hat", "z", "c", "verdict", "margin"])?;
    for p in &report.pairs {
        w.write_record([
            p.i.to_string(),
            p.j.to_string(),
            fmt_score(p.m_hat),
            p.z.to_string(),
            fmt_score(p.c),
            p.verdict.as_str().to_string(),
            p.margin().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Heatmap rows and columns labelled with the names of `order`.
pub fn write_heatmap_csv<W: Write>(
    out: W,
    heatmap: &[Vec<f64>],
    order: &[usize],
    system_names: &[String],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(std::iter::once("system").chain(order.iter().map(|&n| system_names[n].as_str())))?;
    for (row, &n) in heatmap.iter().zip(order) {
        w.write_record(std::iter::once(system_names[n].clone()).chain(row.iter().map(f64::to_string)))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const XTREM: &str = "\
Model,Classification,Structured Prediction,Question Answering,Sentence Retrieval
M0,90.3,X,76.3,93.7
M1,90.1,X,75.0,X
M2,89.3,75.5,75.2,92.4
M3,89.0,76.7,73.4,93.3
M4,88.3,X,X,X
M5,X,X,X,X
M6,87.9,75.6,X,91.9
M7,X,X,X,92.6
M8,X,75.4,X,X
M9,88.2,74.6,X,89.0
";

    #[test]
    fn long_task_level() {
        let csv = "system,task,score\na,t1,0.5\nb,t1,0.7\na,t2,1\nb,t2,0\n";
        let d = parse_long_csv(csv.as_bytes(), Level::Task).unwrap();
        assert_eq!(d.systems, vec!["a", "b"]);
        let Dataset::Task(t) = &d.data else { panic!() };
        assert!(t.is_complete());
        assert_eq!(t.get(1, 1), Some(0.0));

        let d = parse_long_csv("system,task,score\na,t1,0.5\nb,t1,0.7\na,t2,1\n".as_bytes(), Level::Task).unwrap();
        let Dataset::Task(t) = &d.data else { panic!() };
        assert_eq!(t.observed_on_task(1), 1);
        assert_eq!(t.get(1, 1), None);
    }

    #[test]
    fn long_errors_name_the_line() {
        let dup = "system,task,score\na,t1,0.5\nb,t1,0.7\na,t1,0.9\n";
        match parse_long_csv(dup.as_bytes(), Level::Task) {
            Err(Error::Parse { line: 4, message }) => assert!(message.contains("duplicate")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_long_csv("system,task,score\na,t1,high\n".as_bytes(), Level::Task),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_long_csv("system,task,score\na,t1\n".as_bytes(), Level::Task),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_long_csv("sys,task,score\n".as_bytes(), Level::Task),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(parse_long_csv("system,task,score\na,t,NaN\n".as_bytes(), Level::Task).is_err());
    }

    #[test]
    fn long_instance_level() {
        let csv = "system,task,instance,score\na,t,q1,1\nb,t,q1,2\na,t,q2,3\nb,u,q1,4\n";
        let d = parse_long_csv(csv.as_bytes(), Level::Instance).unwrap();
        let Dataset::Instance(t) = &d.data else { panic!() };
        assert_eq!(t.instance_counts(), &[2, 1]);
        assert_eq!(t.get(0, 0, 1), Some(3.0));
        assert_eq!(t.get(1, 0, 1), None);
        assert_eq!(d.instances, vec![vec!["q1", "q2"], vec!["q1"]]);
    }

    #[test]
    fn wide_xtrem() {
        let d = parse_wide_matrix(XTREM.as_bytes()).unwrap();
        let Dataset::Task(t) = &d.data else { panic!() };
        assert_eq!((t.n_systems(), t.n_tasks()), (10, 4));
        assert_eq!(40 - t.present_cells(), 18);
        assert!(t.system_scores(5).iter().all(Option::is_none));
        assert_eq!(d.tasks[1], "Structured Prediction");
    }

    #[test]
    fn wide_edge_cases() {
        let d = parse_wide_matrix("m,a,b\nx,1,2\ny,3,\nz,x,X\n".as_bytes()).unwrap();
        let Dataset::Task(t) = &d.data else { panic!() };
        assert_eq!(t.present_cells(), 3);
        assert!(matches!(parse_wide_matrix("m,a\nx,oops\n".as_bytes()), Err(Error::Parse { line: 2, .. })));
        let d = parse_wide_matrix("m,a,b\nx,1,2\ny,3,4\n".as_bytes()).unwrap();
        let Dataset::Task(t) = &d.data else { panic!() };
        assert!(t.is_complete());
    }

    #[test]
    fn format_detection() {
        let d = parse_dataset(XTREM.as_bytes(), Level::Task).unwrap();
        assert_eq!(d.level(), Level::Task);
        let d = parse_dataset("system,task,score\na,t,1\n".as_bytes(), Level::Instance).unwrap();
        assert_eq!(d.level(), Level::Instance);
        assert!(parse_dataset("system,task,instance,score\na,t,1,1\n".as_bytes(), Level::Task).is_err());
    }

    #[test]
    fn negation() {
        let mut d = parse_dataset(XTREM.as_bytes(), Level::Task).unwrap();
        d.negate_tasks(&["Classification"]).unwrap();
        let Dataset::Task(t) = &d.data else { panic!() };
        assert_eq!(t.get(0, 0), Some(-90.3));
        assert!(d.negate_tasks(&["BLEU"]).is_err());
    }

    #[test]
    fn wide_round_trip() {
        let d = parse_wide_matrix(XTREM.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_wide_matrix(&mut buf, &d).unwrap();
        let back = parse_wide_matrix(buf.as_slice()).unwrap();
        assert_eq!(back.data, d.data);
        assert_eq!(back.systems, d.systems);
    }

    fn arb_long_file(level: Level) -> impl Strategy<Value = String> {
        let rows = prop::collection::vec((0u8..5, 0u8..4, 0u8..3, prop::option::weighted(0.9, -1e6f64..1e6)), 1..40);
        rows.prop_map(move |rows| {
            let mut seen = HashSet::new();
            let mut out = match level {
                Level::Task => "system,task,score\n".to_string(),
                Level::Instance => "system,task,instance,score\n".to_string(),
            };
            for (s, t, k, v) in rows {
                let k = if level == Level::Task { 0 } else { k };
                if seen.insert((s, t, k)) {
                    let v = v.map(|x| x.to_string()).unwrap_or_default();
                    match level {
                        Level::Task => out.push_str(&format!("sys{s},task{t},{v}\n")),
                        Level::Instance => out.push_str(&format!("sys{s},task{t},i{k},{v}\n")),
                    }
                }
            }
            out
        })
    }

    proptest! {
        #[test]
        fn long_task_round_trip(file in arb_long_file(Level::Task)) {
            let first = parse_long_csv(file.as_bytes(), Level::Task).unwrap();
            let mut buf = Vec::new();
            write_long_csv(&mut buf, &first).unwrap();
            prop_assert_eq!(parse_long_csv(buf.as_slice(), Level::Task).unwrap(), first);
        }

        #[test]
        fn long_instance_round_trip(file in arb_long_file(Level::Instance)) {
            let first = parse_long_csv(file.as_bytes(), Level::Instance).unwrap();
            let mut buf = Vec::new();
            write_long_csv(&mut buf, &first).unwrap();
            prop_assert_eq!(parse_long_csv(buf.as_slice(), Level::Instance).unwrap(), first);
        }
    }
}
