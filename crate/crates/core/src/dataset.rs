//! Graph-level datasets: TUDataset text loader, JSON fixtures and synthetic
//! generators.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, NodeFeatures};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    Regression,
    Classification { num_classes: usize },
}

impl Task {
    pub fn output_dim(&self) -> usize {
        match self {
            Task::Regression => 1,
            Task::Classification { num_classes } => *num_classes,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Splits {
    /// Shuffles `0..len` with `seed` and cuts it into train/val/test by the
    /// given fractions; the test split takes the remainder.
    pub fn random(len: usize, train_frac: f64, val_frac: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&train_frac)
            || !(0.0..=1.0).contains(&val_frac)
            || train_frac + val_frac > 1.0 + 1e-12
        {
            return Err(Error::Config(format!(
                "split fractions {train_frac} / {val_frac} are not a partition"
            )));
        }
        let mut idx: Vec<usize> = (0..len).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let n_train = ((len as f64) * train_frac).round() as usize;
        let n_val = (((len as f64) * val_frac).round() as usize).min(len - n_train);
        let mut splits = Splits {
            train: idx[..n_train].to_vec(),
            val: idx[n_train..n_train + n_val].to_vec(),
            test: idx[n_train + n_val..].to_vec(),
        };
        splits.sort();
        Ok(splits)
    }

    /// Fold `fold` of a seeded `k`-fold partition is the test split, the next
    /// fold is validation, and the rest is training.
    pub fn kfold(len: usize, k: usize, fold: usize, seed: u64) -> Result<Self> {
        if k < 3 || fold >= k || len < k {
            return Err(Error::Config(format!(
                "k-fold needs 3 <= k <= {len} and fold < k (k = {k}, fold = {fold})"
            )));
        }
        let mut idx: Vec<usize> = (0..len).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let val_fold = (fold + 1) % k;
        let mut splits = Splits::default();
        for (pos, &i) in idx.iter().enumerate() {
            match pos % k {
                f if f == fold => splits.test.push(i),
                f if f == val_fold => splits.val.push(i),
                _ => splits.train.push(i),
            }
        }
        splits.sort();
        Ok(splits)
    }

    fn sort(&mut self) {
        self.train.sort_unstable();
        self.val.sort_unstable();
        self.test.sort_unstable();
    }

    fn validate(&self, len: usize) -> Result<()> {
        let mut seen = BTreeSet::new();
        for &i in self.train.iter().chain(&self.val).chain(&self.test) {
            if i >= len {
                return Err(Error::Structure(format!(
                    "split index {i} out of range for {len} graphs"
                )));
            }
            if !seen.insert(i) {
                return Err(Error::Structure(format!("graph {i} appears in two splits")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    graphs: Vec<Graph>,
    targets: Vec<f64>,
    task: Task,
    splits: Splits,
}

impl Dataset {
    pub fn new(graphs: Vec<Graph>, targets: Vec<f64>, task: Task, splits: Splits) -> Result<Self> {
        if graphs.len() != targets.len() {
            return Err(Error::Structure(format!(
                "{} graphs but {} targets",
                graphs.len(),
                targets.len()
            )));
        }
        if let Task::Classification { num_classes } = task {
            if num_classes == 0 {
                return Err(Error::Structure("classification needs at least one class".into()));
            }
            for &t in &targets {
                if t < 0.0 || t.fract() != 0.0 || t as usize >= num_classes {
                    return Err(Error::Structure(format!(
                        "target {t} is not a class id below {num_classes}"
                    )));
                }
            }
        }
        if targets.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("dataset targets".into()));
        }
        splits.validate(graphs.len())?;
        Ok(Self {
            graphs,
            targets,
            task,
            splits,
        })
    }

    pub fn graphs(&self) -> &[Graph] {
        &self.graphs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn splits(&self) -> &Splits {
        &self.splits
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn with_splits(mut self, splits: Splits) -> Result<Self> {
        splits.validate(self.graphs.len())?;
        self.splits = splits;
        Ok(self)
    }

    /// Number of categorical node labels (max id + 1), if every graph carries
    /// label features.
    pub fn num_node_labels(&self) -> Option<usize> {
        let mut max = None;
        for g in &self.graphs {
            match g.features() {
                NodeFeatures::Labels(l) => {
                    let m = l.iter().copied().max().unwrap_or(0);
                    max = Some(max.map_or(m, |x: usize| x.max(m)));
                }
                NodeFeatures::Dense(_) => return None,
            }
        }
        max.map(|m| m + 1)
    }

    /// Width of the dense node features, if every graph carries them.
    pub fn feature_dim(&self) -> Option<usize> {
        let mut dim = None;
        for g in &self.graphs {
            match g.features() {
                NodeFeatures::Dense(x) => match dim {
                    None => dim = Some(x.ncols()),
                    Some(d) if d != x.ncols() => return None,
                    _ => {}
                },
                NodeFeatures::Labels(_) => return None,
            }
        }
        dim
    }
}

// ---------------------------------------------------------------------------
// TUDataset

fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse {
        file: path.to_path_buf(),
        line: 0,
        message: e.to_string(),
    })?;
    Ok(text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim().to_string()))
        .filter(|(_, l)| !l.is_empty())
        .collect())
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        file: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn parse_int_column(path: &Path) -> Result<Vec<i64>> {
    read_lines(path)?
        .into_iter()
        .map(|(line, text)| {
            text.parse::<i64>()
                .map_err(|e| parse_err(path, line, format!("expected an integer, got {text:?} ({e})")))
        })
        .collect()
}

/// Loads `{dir}/{name}_A.txt`, `_graph_indicator.txt`, `_graph_labels.txt`
/// and, when present, `_node_labels.txt`.
///
/// Class labels are remapped to contiguous ids by ascending raw value. The
/// returned dataset has empty splits.
pub fn load_tudataset(dir: impl AsRef<Path>, name: &str) -> Result<Dataset> {
    let dir = dir.as_ref();
    let file = |suffix: &str| -> PathBuf { dir.join(format!("{name}_{suffix}.txt")) };

    let indicator_path = file("graph_indicator");
    let indicator = parse_int_column(&indicator_path)?;
    if indicator.is_empty() {
        return Err(Error::Structure("graph indicator lists no nodes".into()));
    }
    let labels_path = file("graph_labels");
    let raw_labels = parse_int_column(&labels_path)?;

    // graph id -> global node ids (1-indexed, in file order)
    let mut members: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    let mut local = vec![(0usize, 0usize); indicator.len()];
    for (node, &gid) in indicator.iter().enumerate() {
        members.entry(gid).or_default().push(node);
    }
    for (gpos, nodes) in members.values().enumerate() {
        for (li, &node) in nodes.iter().enumerate() {
            local[node] = (gpos, li);
        }
    }
    if raw_labels.len() != members.len() {
        return Err(Error::Structure(format!(
            "{} graphs in indicator but {} graph labels",
            members.len(),
            raw_labels.len()
        )));
    }

    let node_labels_path = file("node_labels");
    let node_labels = if node_labels_path.exists() {
        let labels = parse_int_column(&node_labels_path)?;
        if labels.len() != indicator.len() {
            return Err(Error::Structure(format!(
                "{} nodes in indicator but {} node labels",
                indicator.len(),
                labels.len()
            )));
        }
        if let Some(pos) = labels.iter().position(|&l| l < 0) {
            return Err(parse_err(&node_labels_path, pos + 1, "negative node label"));
        }
        labels.into_iter().map(|l| l as usize).collect()
    } else {
        vec![0; indicator.len()]
    };

    let a_path = file("A");
    let mut edge_sets: Vec<BTreeSet<(usize, usize)>> = vec![BTreeSet::new(); members.len()];
    for (line, text) in read_lines(&a_path)? {
        let mut parts = text.split(',').map(str::trim);
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(parse_err(&a_path, line, format!("expected \"u, v\", got {text:?}")));
        };
        let parse = |s: &str| -> Result<usize> {
            let v: usize = s
                .parse()
                .map_err(|e| parse_err(&a_path, line, format!("bad node id {s:?} ({e})")))?;
            if v == 0 || v > indicator.len() {
                return Err(parse_err(&a_path, line, format!("node id {v} out of range")));
            }
            Ok(v - 1)
        };
        let (u, v) = (parse(a)?, parse(b)?);
        let ((gu, lu), (gv, lv)) = (local[u], local[v]);
        if gu != gv {
            return Err(parse_err(&a_path, line, "edge joins two different graphs"));
        }
        if lu != lv {
            edge_sets[gu].insert((lu.min(lv), lu.max(lv)));
        }
    }

    let distinct: BTreeSet<i64> = raw_labels.iter().copied().collect();
    let class_of: BTreeMap<i64, usize> = distinct.iter().enumerate().map(|(i, &l)| (l, i)).collect();

    let mut graphs = Vec::with_capacity(members.len());
    for ((gid, nodes), edges) in members.iter().zip(edge_sets) {
        let edges = edges
            .into_iter()
            .map(|(u, v)| Edge { u, v, weight: 1.0 })
            .collect();
        let features = NodeFeatures::Labels(nodes.iter().map(|&g| node_labels[g]).collect());
        graphs.push(Graph::new(nodes.len(), edges, features)?.with_name(format!("{name}#{gid}")));
    }
    let targets = raw_labels.iter().map(|l| class_of[l] as f64).collect();
    Dataset::new(
        graphs,
        targets,
        Task::Classification {
            num_classes: distinct.len(),
        },
        Splits::default(),
    )
}

// ---------------------------------------------------------------------------
// JSON fixtures

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FixtureGraph {
    n: usize,
    #[serde(default)]
    edges: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    node_labels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    node_features: Option<Vec<Vec<f64>>>,
    target: f64,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    name: String,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum FixtureTask {
    Regression,
    Classification,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Fixture {
    task: FixtureTask,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    num_classes: Option<usize>,
    graphs: Vec<FixtureGraph>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    splits: Option<Splits>,
}

fn fixture_graph(index: usize, fg: FixtureGraph) -> Result<Graph> {
    let bad = |msg: String| Error::Structure(format!("graph {index}: {msg}"));
    let mut edges = Vec::with_capacity(fg.edges.len());
    for e in &fg.edges {
        let (u, v, w) = match e.as_slice() {
            [u, v] => (*u, *v, 1.0),
            [u, v, w] => (*u, *v, *w),
            _ => return Err(bad(format!("edge {e:?} is not [u, v] or [u, v, w]"))),
        };
        if u < 0.0 || v < 0.0 || u.fract() != 0.0 || v.fract() != 0.0 {
            return Err(bad(format!("edge endpoints {u}, {v} are not node ids")));
        }
        edges.push(Edge {
            u: u as usize,
            v: v as usize,
            weight: w,
        });
    }
    let features = match (fg.node_labels, fg.node_features) {
        (Some(_), Some(_)) => {
            return Err(bad("both node_labels and node_features given".into()));
        }
        (Some(l), None) => NodeFeatures::Labels(l),
        (None, Some(rows)) => {
            let width = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != width) {
                return Err(bad("ragged node_features".into()));
            }
            let flat: Vec<f64> = rows.into_iter().flatten().collect();
            let x = Array2::from_shape_vec((flat.len() / width.max(1), width), flat)
                .map_err(|e| bad(e.to_string()))?;
            NodeFeatures::Dense(x)
        }
        (None, None) => NodeFeatures::Labels(vec![0; fg.n]),
    };
    Ok(Graph::new(fg.n, edges, features)?.with_name(fg.name))
}

pub fn dataset_from_json(text: &str) -> Result<Dataset> {
    let fx: Fixture = serde_json::from_str(text)?;
    let task = match fx.task {
        FixtureTask::Regression => Task::Regression,
        FixtureTask::Classification => {
            let num_classes = match fx.num_classes {
                Some(k) => k,
                None => fx.graphs.iter().map(|g| g.target as usize + 1).max().unwrap_or(1),
            };
            Task::Classification { num_classes }
        }
    };
    let targets = fx.graphs.iter().map(|g| g.target).collect();
    let graphs = fx
        .graphs
        .into_iter()
        .enumerate()
        .map(|(i, g)| fixture_graph(i, g))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(graphs, targets, task, fx.splits.unwrap_or_default())
}

pub fn load_json(path: impl AsRef<Path>) -> Result<Dataset> {
    dataset_from_json(&fs::read_to_string(path)?)
}

pub fn dataset_to_json(ds: &Dataset) -> String {
    let (task, num_classes) = match ds.task {
        Task::Regression => (FixtureTask::Regression, None),
        Task::Classification { num_classes } => (FixtureTask::Classification, Some(num_classes)),
    };
    let graphs = ds
        .graphs
        .iter()
        .zip(&ds.targets)
        .map(|(g, &target)| {
            let (node_labels, node_features) = match g.features() {
                NodeFeatures::Labels(l) => (Some(l.clone()), None),
                NodeFeatures::Dense(x) => (
                    None,
                    Some(x.rows().into_iter().map(|r| r.to_vec()).collect()),
                ),
            };
            FixtureGraph {
                n: g.n(),
                edges: g
                    .edges()
                    .iter()
                    .map(|e| vec![e.u as f64, e.v as f64, e.weight])
                    .collect(),
                node_labels,
                node_features,
                target,
                name: g.name().to_string(),
            }
        })
        .collect();
    let splits = (ds.splits != Splits::default()).then(|| ds.splits.clone());
    let fx = Fixture {
        task,
        num_classes,
        graphs,
        splits,
    };
    serde_json::to_string(&fx).expect("fixture serialization cannot fail")
}

pub fn save_json(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, dataset_to_json(ds))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Synthetic datasets

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SynthKind {
    /// Binary classification: cycles are class 1, paths class 0.
    CycleVsPath,
    /// Random graphs labelled with their mean degree.
    DegreeRegression,
}

impl std::str::FromStr for SynthKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cycle_vs_path" => Ok(SynthKind::CycleVsPath),
            "degree_regression" => Ok(SynthKind::DegreeRegression),
            other => Err(Error::Unknown {
                what: "synthetic dataset kind",
                name: other.to_string(),
            }),
        }
    }
}

/// Default train/val fractions for synthetic datasets; test takes the rest.
pub const SYNTH_SPLIT: (f64, f64) = (0.6, 0.2);

/// Mean degree `2|E| / n`.
pub fn mean_degree(g: &Graph) -> f64 {
    2.0 * g.edges().len() as f64 / g.n() as f64
}

/// Deterministic synthetic dataset. Node ids are shuffled per graph and every
/// node carries label 0, so only topology is informative.
pub fn synth_dataset(
    kind: SynthKind,
    n_graphs: usize,
    n_range: (usize, usize),
    seed: u64,
) -> Result<Dataset> {
    let (lo, hi) = n_range;
    if n_graphs == 0 {
        return Err(Error::Config("n_graphs must be at least 1".into()));
    }
    if lo == 0 || lo > hi {
        return Err(Error::Config(format!("invalid node range ({lo}, {hi})")));
    }
    if kind == SynthKind::CycleVsPath && lo < 3 {
        return Err(Error::Config("cycle_vs_path needs at least 3 nodes per graph".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(n_graphs);
    let mut targets = Vec::with_capacity(n_graphs);
    for i in 0..n_graphs {
        let n = rng.random_range(lo..=hi);
        let (g, target) = match kind {
            SynthKind::CycleVsPath => {
                if i % 2 == 0 {
                    (Graph::cycle(n), 1.0)
                } else {
                    (Graph::path(n), 0.0)
                }
            }
            SynthKind::DegreeRegression => {
                let p = rng.random_range(0.2..0.6);
                let mut pairs = Vec::new();
                for u in 0..n {
                    for v in (u + 1)..n {
                        if rng.random_bool(p) {
                            pairs.push((u, v));
                        }
                    }
                }
                let g = Graph::unweighted(n, &pairs)?;
                let t = mean_degree(&g);
                (g, t)
            }
        };
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        graphs.push(g.permute(&perm)?.with_name(format!("synth#{i}")));
        targets.push(target);
    }
    let task = match kind {
        SynthKind::CycleVsPath => Task::Classification { num_classes: 2 },
        SynthKind::DegreeRegression => Task::Regression,
    };
    let splits = Splits::random(n_graphs, SYNTH_SPLIT.0, SYNTH_SPLIT.1, seed ^ 0x5eed)?;
    Dataset::new(graphs, targets, task, splits)
}
