//! Random forest of CART trees: Gini splits at midpoints, bootstrap rows,
//! per-node feature subsampling and majority voting.
//!
//! All ties are broken deterministically: splits prefer the lower feature
//! index and then the lower threshold, leaf majorities and votes prefer the
//! smallest label.

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::seed;
use crate::textfmt::Lines;

pub type Label = u32;

const FORMAT_TAG: &str = "texscore-forest";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Array2<f64>,
    labels: Vec<Label>,
    /// Sorted distinct labels.
    classes: Vec<Label>,
}

impl LabeledDataset {
    pub fn new(features: Array2<f64>, labels: Vec<Label>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(invalid(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(invalid("features must be finite"));
        }
        let mut classes = labels.clone();
        classes.sort_unstable();
        classes.dedup();
        Ok(Self {
            features,
            labels,
            classes,
        })
    }

    pub fn features(&self) -> ArrayView2<'_, f64> {
        self.features.view()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn classes(&self) -> &[Label] {
        &self.classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    /// Rows `idx` in the given order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let features = self.features.select(Axis(0), idx);
        let labels = idx.iter().map(|&i| self.labels[i]).collect();
        Self::new(features, labels)
    }

    fn class_indices(&self) -> Vec<usize> {
        self.labels
            .iter()
            .map(|l| self.classes.binary_search(l).expect("label in class list"))
            .collect()
    }
}

pub fn gini_impurity(counts: &[usize]) -> Result<f64> {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return Err(invalid("Gini impurity of an empty node"));
    }
    let n = n as f64;
    Ok(1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
}

/// Exact split quality `S_L/n_L + S_R/n_R` with `S = sum_c n_c^2`, kept as a
/// fraction so comparisons (and therefore tie-breaks) are exact. Maximizing it
/// maximizes the weighted Gini decrease.
#[derive(Debug, Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn new(sl: u128, nl: u128, sr: u128, nr: u128) -> Self {
        Self {
            num: sl * nr + sr * nl,
            den: nl * nr,
        }
    }

    fn gt(&self, other: &Score) -> bool {
        self.num * other.den > other.num * self.den
    }
}

fn midpoint(lo: f64, hi: f64) -> f64 {
    let m = lo + (hi - lo) / 2.0;
    if m >= hi {
        lo
    } else {
        m
    }
}

/// Exhaustive search over `features` x midpoints between consecutive distinct
/// values. Rows go left when `x[feature] <= threshold`. Returns `None` when no
/// candidate strictly lowers the weighted impurity or every candidate leaves
/// fewer than `min_leaf` rows on a side.
pub fn best_split(
    data: ArrayView2<f64>,
    rows: &[usize],
    class_of: &[usize],
    n_classes: usize,
    features: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let min_leaf = min_leaf.max(1);
    let mut parent = vec![0u128; n_classes];
    for &r in rows {
        parent[class_of[r]] += 1;
    }
    let parent_s: u128 = parent.iter().map(|c| c * c).sum();
    // Baseline S/n; a split must beat it strictly.
    let baseline = Score {
        num: parent_s,
        den: n as u128,
    };

    let mut order: Vec<usize> = rows.to_vec();
    let mut feats = features.to_vec();
    feats.sort_unstable();
    feats.dedup();

    let mut best: Option<(Score, Split)> = None;
    let mut left = vec![0u128; n_classes];
    for &f in &feats {
        let col = data.column(f);
        order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
        left.iter_mut().for_each(|c| *c = 0);
        let mut sl: u128 = 0;
        let mut sr: u128 = parent_s;
        for i in 0..n - 1 {
            let c = class_of[order[i]];
            let right_c = parent[c] - left[c];
            sl += 2 * left[c] + 1;
            sr -= 2 * right_c - 1;
            left[c] += 1;

            let (v, next) = (col[order[i]], col[order[i + 1]]);
            let nl = i + 1;
            let nr = n - nl;
            if v == next || nl < min_leaf || nr < min_leaf {
                continue;
            }
            let score = Score::new(sl, nl as u128, sr, nr as u128);
            if !score.gt(&baseline) {
                continue;
            }
            if best.as_ref().is_none_or(|(b, _)| score.gt(b)) {
                best = Some((
                    score,
                    Split {
                        feature: f,
                        threshold: midpoint(v, next),
                    },
                ));
            }
        }
    }
    best.map(|(_, s)| s)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        label: Label,
    },
}

/// Arena-allocated tree; `nodes[0]` is the root and the arena is in preorder.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict(&self, x: ArrayView1<f64>) -> Label {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { label } => return label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    fn write_text(&self, out: &mut String) {
        out.push_str(&format!("tree {}\n", self.nodes.len()));
        fn go(nodes: &[Node], i: usize, out: &mut String) {
            match nodes[i] {
                Node::Leaf { label } => out.push_str(&format!("L {label}\n")),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    out.push_str(&format!("S {feature} {threshold:.16e}\n"));
                    go(nodes, left, out);
                    go(nodes, right, out);
                }
            }
        }
        go(&self.nodes, 0, out);
    }

    fn read_text(lines: &mut Lines<'_>, n_features: usize) -> Result<Self> {
        let head = lines.tagged("tree")?;
        if head.len() != 1 {
            return Err(lines.err("expected: tree <node count>"));
        }
        let count: usize = lines.parse(head[0], "node count")?;
        let mut nodes = Vec::with_capacity(count);
        fn go(
            lines: &mut Lines<'_>,
            nodes: &mut Vec<Node>,
            budget: usize,
            p: usize,
        ) -> Result<usize> {
            if nodes.len() >= budget {
                return Err(lines.err("tree has more nodes than declared"));
            }
            let line = lines.next_line()?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            let me = nodes.len();
            match toks.as_slice() {
                ["L", label] => {
                    let label = lines.parse(label, "label")?;
                    nodes.push(Node::Leaf { label });
                }
                ["S", feature, threshold] => {
                    let feature: usize = lines.parse(feature, "feature index")?;
                    if feature >= p {
                        return Err(lines.err(format!("feature {feature} out of range")));
                    }
                    let threshold: f64 = lines.parse(threshold, "threshold")?;
                    nodes.push(Node::Leaf { label: 0 });
                    let left = go(lines, nodes, budget, p)?;
                    let right = go(lines, nodes, budget, p)?;
                    nodes[me] = Node::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    };
                }
                _ => return Err(lines.err(format!("bad node line '{line}'"))),
            }
            Ok(me)
        }
        go(lines, &mut nodes, count, n_features)?;
        if nodes.len() != count {
            return Err(lines.err("tree has fewer nodes than declared"));
        }
        Ok(Self { nodes })
    }
}

/// Smallest-index argmax; class indices are ordered by label so ties go to
/// the smallest label.
fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct TreeBuilder<'a, R> {
    data: ArrayView2<'a, f64>,
    class_of: &'a [usize],
    classes: &'a [Label],
    mtry: usize,
    min_leaf: usize,
    rng: &'a mut R,
    nodes: Vec<Node>,
}

impl<R: Rng> TreeBuilder<'_, R> {
    fn build(&mut self, rows: &[usize]) -> usize {
        let me = self.nodes.len();
        let mut counts = vec![0usize; self.classes.len()];
        for &r in rows {
            counts[self.class_of[r]] += 1;
        }
        let leaf = Node::Leaf {
            label: self.classes[majority(&counts)],
        };
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || rows.len() < 2 * self.min_leaf {
            self.nodes.push(leaf);
            return me;
        }
        let p = self.data.ncols();
        let feats = sample(self.rng, p, self.mtry).into_vec();
        let Some(split) = best_split(
            self.data,
            rows,
            self.class_of,
            self.classes.len(),
            &feats,
            self.min_leaf,
        ) else {
            self.nodes.push(leaf);
            return me;
        };
        let col = self.data.column(split.feature);
        let (l, r): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| col[i] <= split.threshold);
        self.nodes.push(leaf);
        let left = self.build(&l);
        let right = self.build(&r);
        self.nodes[me] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        me
    }
}

/// Grows one CART tree on the rows `rows` of `dataset` (duplicates allowed,
/// as produced by bootstrapping).
pub fn train_tree_on_rows<R: Rng>(
    dataset: &LabeledDataset,
    rows: &[usize],
    mtry: usize,
    min_leaf: usize,
    rng: &mut R,
) -> Result<DecisionTree> {
    if rows.is_empty() {
        return Err(invalid("cannot grow a tree on an empty dataset"));
    }
    let p = dataset.n_features();
    if mtry == 0 || mtry > p {
        return Err(invalid(format!("mtry {mtry} outside [1, {p}]")));
    }
    let class_of = dataset.class_indices();
    let mut builder = TreeBuilder {
        data: dataset.features(),
        class_of: &class_of,
        classes: dataset.classes(),
        mtry,
        min_leaf: min_leaf.max(1),
        rng,
        nodes: Vec::new(),
    };
    builder.build(rows);
    Ok(DecisionTree {
        nodes: builder.nodes,
    })
}

pub fn train_tree<R: Rng>(
    dataset: &LabeledDataset,
    mtry: usize,
    min_leaf: usize,
    rng: &mut R,
) -> Result<DecisionTree> {
    let rows: Vec<usize> = (0..dataset.len()).collect();
    train_tree_on_rows(dataset, &rows, mtry, min_leaf, rng)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` means `floor(sqrt(p))`, at least 1.
    pub mtry: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
    pub bootstrap: bool,
    pub parallel: bool,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 500,
            mtry: None,
            min_leaf: 1,
            seed: 0,
            bootstrap: true,
            parallel: true,
        }
    }
}

impl ForestConfig {
    /// Single tree on the full sample, every feature considered at each node.
    pub fn single_exhaustive_tree() -> Self {
        Self {
            n_trees: 1,
            mtry: Some(usize::MAX),
            bootstrap: false,
            ..Self::default()
        }
    }

    /// Effective `mtry` for `p` features. `Some(usize::MAX)` is clamped to `p`.
    pub fn resolve_mtry(&self, p: usize) -> Result<usize> {
        match self.mtry {
            None => Ok(((p as f64).sqrt().floor() as usize).max(1).min(p.max(1))),
            Some(usize::MAX) => Ok(p),
            Some(m) if m >= 1 && m <= p => Ok(m),
            Some(m) => Err(invalid(format!("mtry {m} outside [1, {p}]"))),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(invalid("a forest needs at least one tree"));
        }
        if self.min_leaf == 0 {
            return Err(invalid("min_leaf must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForestModel {
    trees: Vec<DecisionTree>,
    classes: Vec<Label>,
    n_features: usize,
    mtry: usize,
    config: ForestConfig,
}

pub fn train_forest(dataset: &LabeledDataset, config: &ForestConfig) -> Result<ForestModel> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(invalid("cannot train a forest on an empty dataset"));
    }
    let p = dataset.n_features();
    let mtry = config.resolve_mtry(p)?;
    let n = dataset.len();
    let grow = |t: usize| -> Result<DecisionTree> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(config.seed, t as u64));
        let rows: Vec<usize> = if config.bootstrap {
            (0..n).map(|_| rng.random_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        train_tree_on_rows(dataset, &rows, mtry, config.min_leaf, &mut rng)
    };
    let trees = if config.parallel {
        (0..config.n_trees)
            .into_par_iter()
            .map(grow)
            .collect::<Result<Vec<_>>>()?
    } else {
        (0..config.n_trees).map(grow).collect::<Result<Vec<_>>>()?
    };
    Ok(ForestModel {
        trees,
        classes: dataset.classes().to_vec(),
        n_features: p,
        mtry,
        config: config.clone(),
    })
}

impl ForestModel {
    pub fn from_trees(
        trees: Vec<DecisionTree>,
        classes: Vec<Label>,
        n_features: usize,
    ) -> Result<Self> {
        if trees.is_empty() {
            return Err(invalid("a forest needs at least one tree"));
        }
        let mut classes = classes;
        classes.sort_unstable();
        classes.dedup();
        Ok(Self {
            trees,
            classes,
            n_features,
            mtry: n_features,
            config: ForestConfig::default(),
        })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    pub fn classes(&self) -> &[Label] {
        &self.classes
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn predict(&self, x: ArrayView1<f64>) -> Result<Label> {
        if x.len() != self.n_features {
            return Err(invalid(format!(
                "expected {} features, got {}",
                self.n_features,
                x.len()
            )));
        }
        let mut votes = vec![0usize; self.classes.len()];
        for t in &self.trees {
            let l = t.predict(x);
            let idx = self
                .classes
                .binary_search(&l)
                .map_err(|_| invalid("tree emitted unknown label"))?;
            votes[idx] += 1;
        }
        Ok(self.classes[majority(&votes)])
    }

    pub fn predict_rows(&self, data: ArrayView2<f64>) -> Result<Vec<Label>> {
        data.rows().into_iter().map(|r| self.predict(r)).collect()
    }

    pub fn error_rate(&self, testset: &LabeledDataset) -> Result<f64> {
        let pred = self.predict_rows(testset.features())?;
        error_rate(&pred, testset.labels())
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut out = format!("{FORMAT_TAG} {FORMAT_VERSION}\n");
        out.push_str(&format!(
            "config {} {} {} {} {}\n",
            self.trees.len(),
            self.mtry,
            c.min_leaf,
            c.seed,
            u8::from(c.bootstrap)
        ));
        out.push_str(&format!("features {}\n", self.n_features));
        out.push_str("classes");
        for l in &self.classes {
            out.push_str(&format!(" {l}"));
        }
        out.push('\n');
        for t in &self.trees {
            t.write_text(&mut out);
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let head = lines.tagged(FORMAT_TAG)?;
        let version: u32 = lines.parse(head.first().copied().unwrap_or(""), "version")?;
        if version != FORMAT_VERSION {
            return Err(lines.err(format!("unsupported version {version}")));
        }
        let cfg = lines.tagged("config")?;
        if cfg.len() != 5 {
            return Err(lines.err("expected: config <trees> <mtry> <min_leaf> <seed> <bootstrap>"));
        }
        let n_trees: usize = lines.parse(cfg[0], "tree count")?;
        let mtry: usize = lines.parse(cfg[1], "mtry")?;
        let min_leaf: usize = lines.parse(cfg[2], "min_leaf")?;
        let seed: u64 = lines.parse(cfg[3], "seed")?;
        let bootstrap = match cfg[4] {
            "0" => false,
            "1" => true,
            other => return Err(lines.err(format!("bad bootstrap flag '{other}'"))),
        };
        let feats = lines.tagged("features")?;
        let n_features: usize =
            lines.parse(feats.first().copied().unwrap_or(""), "feature count")?;
        let classes = lines
            .tagged("classes")?
            .iter()
            .map(|t| lines.parse::<Label>(t, "label"))
            .collect::<Result<Vec<_>>>()?;
        if n_trees == 0 {
            return Err(lines.err("a forest needs at least one tree"));
        }
        let mut trees = Vec::with_capacity(n_trees);
        for _ in 0..n_trees {
            let tree = DecisionTree::read_text(&mut lines, n_features)?;
            for node in &tree.nodes {
                if let Node::Leaf { label } = node {
                    if classes.binary_search(label).is_err() {
                        return Err(lines.err(format!("leaf label {label} not in class list")));
                    }
                }
            }
            trees.push(tree);
        }
        if let Some(extra) = lines.try_next_line() {
            return Err(lines.err(format!("trailing content '{extra}'")));
        }
        Ok(Self {
            trees,
            classes,
            n_features,
            mtry,
            config: ForestConfig {
                n_trees,
                mtry: Some(mtry),
                min_leaf,
                seed,
                bootstrap,
                parallel: true,
            },
        })
    }
}

/// Fraction of positions where `predicted` and `truth` disagree.
pub fn error_rate(predicted: &[Label], truth: &[Label]) -> Result<f64> {
    if truth.is_empty() {
        return Err(invalid("error rate of an empty test set"));
    }
    if predicted.len() != truth.len() {
        return Err(invalid("prediction and truth lengths differ"));
    }
    let wrong = predicted.iter().zip(truth).filter(|(a, b)| a != b).count();
    Ok(wrong as f64 / truth.len() as f64)
}
