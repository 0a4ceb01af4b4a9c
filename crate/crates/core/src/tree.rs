//! Smoothed decision trees over binary inputs.
//!
//! Every feature is split on at most once in the whole tree, so flipping an
//! input coordinate only changes the routing at a single node. That makes the
//! smoothed prediction a simple recursion and the worst case over `l0`
//! perturbations an exact dynamic program.
//!
//! A split node sends its input right when the split feature is `1`.

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::noise::NoiseParams;
use crate::scalar::{parse_rational, Rational, Scalar};

pub const TREE_FORMAT_VERSION: &str = "1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Node {
    Split {
        feature: usize,
        left: usize,
        right: usize,
    },
    Leaf {
        value: Rational,
    },
}

/// A feature-once decision tree. Node 0 is the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Tree {
    nodes: Vec<Node>,
    max_depth: usize,
    params: NoiseParams,
}

/// Worst-case smoothed prediction per node and budget: `values[i][r]` is the
/// minimum of the node's prediction when at most `r` features are flipped.
#[derive(Clone, Debug, PartialEq)]
pub struct AdvTable<T> {
    pub values: Vec<Vec<T>>,
}

impl<T> AdvTable<T> {
    pub fn root(&self) -> &[T] {
        &self.values[0]
    }
}

impl Tree {
    pub fn new(nodes: Vec<Node>, max_depth: usize, params: NoiseParams) -> Result<Self> {
        let tree = Self {
            nodes,
            max_depth,
            params,
        };
        tree.validate()?;
        Ok(tree)
    }

    /// A single leaf.
    pub fn leaf(value: Rational, params: NoiseParams) -> Result<Self> {
        Self::new(vec![Node::Leaf { value }], 0, params)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn params(&self) -> &NoiseParams {
        &self.params
    }

    /// Features split on anywhere in the tree, in node order.
    pub fn used_features(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.params.k() != 1 {
            return Err(Error::Validation("smoothed trees need binary inputs (K = 1)".into()));
        }
        if self.nodes.is_empty() {
            return Err(Error::Validation("tree has no nodes".into()));
        }
        let d = self.params.d();
        let mut feature_seen = vec![false; d];
        let mut visited = vec![false; self.nodes.len()];
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            if id >= self.nodes.len() {
                return Err(Error::Validation(format!("child id {id} out of range")));
            }
            if std::mem::replace(&mut visited[id], true) {
                return Err(Error::Validation(format!("node {id} is reachable twice")));
            }
            if depth > self.max_depth {
                return Err(Error::Validation(format!(
                    "node {id} lies at depth {depth}, beyond max_depth {}",
                    self.max_depth
                )));
            }
            match &self.nodes[id] {
                Node::Split {
                    feature,
                    left,
                    right,
                } => {
                    if *feature >= d {
                        return Err(Error::Validation(format!(
                            "node {id} splits on feature {feature}, but d = {d}"
                        )));
                    }
                    if std::mem::replace(&mut feature_seen[*feature], true) {
                        return Err(Error::Validation(format!(
                            "feature {feature} is used by more than one node"
                        )));
                    }
                    stack.push((*left, depth + 1));
                    stack.push((*right, depth + 1));
                }
                Node::Leaf { value } => {
                    if *value < Rational::zero() || *value > Rational::one() {
                        return Err(Error::Validation(format!(
                            "leaf {id} has value {value} outside [0, 1]"
                        )));
                    }
                }
            }
        }
        if let Some(orphan) = visited.iter().position(|v| !v) {
            return Err(Error::Validation(format!("node {orphan} is unreachable")));
        }
        Ok(())
    }

    fn check_input(&self, x: &[u8]) -> Result<()> {
        if x.len() != self.params.d() {
            return Err(Error::DimensionMismatch {
                expected: self.params.d(),
                got: x.len(),
            });
        }
        if let Some(i) = x.iter().position(|&v| v > 1) {
            return Err(Error::InputDomain(format!("feature {i} is not binary")));
        }
        Ok(())
    }

    /// Branch weights `(right, left)` at a split on a feature with value `bit`.
    fn weights<T: Scalar>(&self, bit: u8) -> (T, T) {
        let alpha = T::ratio(u64::from(self.params.alpha_pct()), 100);
        let beta = T::ratio(u64::from(100 - self.params.alpha_pct()), 100);
        if bit == 1 {
            (alpha, beta)
        } else {
            (beta, alpha)
        }
    }

    /// Leaf value reached by `z` without any noise.
    pub fn output(&self, z: &[u8]) -> Result<&Rational> {
        self.check_input(z)?;
        let mut id = 0;
        loop {
            match &self.nodes[id] {
                Node::Leaf { value } => return Ok(value),
                Node::Split {
                    feature,
                    left,
                    right,
                } => id = if z[*feature] == 1 { *right } else { *left },
            }
        }
    }

    /// Exact probability that the tree outputs 1 on the randomized input.
    pub fn predict_prob<T: Scalar>(&self, x: &[u8]) -> Result<T> {
        self.check_input(x)?;
        Ok(self.predict_node(0, x))
    }

    fn predict_node<T: Scalar>(&self, id: usize, x: &[u8]) -> T {
        match &self.nodes[id] {
            Node::Leaf { value } => T::from_rational(value),
            Node::Split {
                feature,
                left,
                right,
            } => {
                let (rw, lw) = self.weights::<T>(x[*feature]);
                rw * self.predict_node(*right, x) + lw * self.predict_node(*left, x)
            }
        }
    }

    /// Minimum of [`predict_prob`](Self::predict_prob) over all inputs within
    /// Hamming distance `r` of `x`, for every `r` in `0..=r_max` and every
    /// node.
    pub fn dp_adversary<T: Scalar>(&self, x: &[u8], r_max: usize) -> Result<AdvTable<T>> {
        self.check_input(x)?;
        let mut values = vec![Vec::new(); self.nodes.len()];
        self.dp_node(0, x, r_max, &mut values);
        Ok(AdvTable { values })
    }

    fn dp_node<T: Scalar>(&self, id: usize, x: &[u8], r_max: usize, adv: &mut [Vec<T>]) {
        match &self.nodes[id] {
            Node::Leaf { value } => adv[id] = vec![T::from_rational(value); r_max + 1],
            Node::Split {
                feature,
                left,
                right,
            } => {
                self.dp_node(*right, x, r_max, adv);
                self.dp_node(*left, x, r_max, adv);
                let (rw, lw) = self.weights::<T>(x[*feature]);
                let (ra, la) = (&adv[*right], &adv[*left]);
                let mut row = Vec::with_capacity(r_max + 1);
                for r in 0..=r_max {
                    // the split feature keeps its value
                    let mut best = (0..=r)
                        .map(|s| rw.clone() * ra[s].clone() + lw.clone() * la[r - s].clone())
                        .reduce(|a, b| if b < a { b } else { a })
                        .expect("non-empty budget split");
                    // the split feature is flipped, swapping the branch weights
                    for s in 0..r {
                        let flipped =
                            lw.clone() * ra[s].clone() + rw.clone() * la[r - 1 - s].clone();
                        if flipped < best {
                            best = flipped;
                        }
                    }
                    row.push(best);
                }
                adv[id] = row;
            }
        }
    }

    /// The same tree with every leaf value `v` replaced by `1 - v`; its
    /// prediction is the probability of class 0.
    pub fn complement(&self) -> Tree {
        let nodes = self
            .nodes
            .iter()
            .map(|n| match n {
                Node::Leaf { value } => Node::Leaf {
                    value: Rational::one() - value,
                },
                split => split.clone(),
            })
            .collect();
        Tree {
            nodes,
            max_depth: self.max_depth,
            params: self.params,
        }
    }

    /// Largest probability of class 1 within Hamming distance `r` of `x`,
    /// for each `r` in `0..=r_max`.
    pub fn max_prob<T: Scalar>(&self, x: &[u8], r_max: usize) -> Result<Vec<T>> {
        let adv = self.complement().dp_adversary::<T>(x, r_max)?;
        Ok(adv.root().iter().map(|v| T::one() - v.clone()).collect())
    }

    /// Worst-case probability of `label` within Hamming distance `r` of `x`,
    /// for each `r` in `0..=r_max`.
    pub fn worst_label_prob<T: Scalar>(&self, x: &[u8], label: u8, r_max: usize) -> Result<Vec<T>> {
        let tree = if label == 1 {
            self.clone()
        } else {
            self.complement()
        };
        Ok(tree.dp_adversary::<T>(x, r_max)?.values.swap_remove(0))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "# d={} K={} alpha_pct={} max_depth={} version={}\n",
            self.params.d(),
            self.params.k(),
            self.params.alpha_pct(),
            self.max_depth,
            TREE_FORMAT_VERSION
        );
        for (id, node) in self.nodes.iter().enumerate() {
            match node {
                Node::Split {
                    feature,
                    left,
                    right,
                } => out.push_str(&format!("{id} {feature} {left} {right} -\n")),
                Node::Leaf { value } => out.push_str(&format!("{id} - - - {value}\n")),
            }
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "empty tree file"))?;
        let body = header
            .strip_prefix('#')
            .ok_or_else(|| Error::parse(path, 1, "missing `# d=...` header"))?;
        let (mut d, mut k, mut a, mut depth, mut version) = (None, None, None, None, None);
        for field in body.split_whitespace() {
            let (key, value) = field
                .split_once('=')
                .ok_or_else(|| Error::parse(path, 1, format!("bad header field {field:?}")))?;
            let num = || {
                value
                    .parse::<usize>()
                    .map_err(|_| Error::parse(path, 1, format!("bad value for {key}: {value:?}")))
            };
            match key {
                "d" => d = Some(num()?),
                "K" => k = Some(num()? as u32),
                "alpha_pct" => a = Some(num()? as u32),
                "max_depth" => depth = Some(num()?),
                "version" => version = Some(value),
                _ => return Err(Error::parse(path, 1, format!("unknown header field {key:?}"))),
            }
        }
        let missing = |name| Error::parse(path, 1, format!("header is missing {name}"));
        let version = version.ok_or_else(|| missing("version"))?;
        if version != TREE_FORMAT_VERSION {
            return Err(Error::HeaderMismatch(format!(
                "tree file version {version}, this build reads version {TREE_FORMAT_VERSION}"
            )));
        }
        let params = NoiseParams::new(
            d.ok_or_else(|| missing("d"))?,
            k.ok_or_else(|| missing("K"))?,
            a.ok_or_else(|| missing("alpha_pct"))?,
        )?;
        let max_depth = depth.ok_or_else(|| missing("max_depth"))?;

        let mut nodes = Vec::new();
        for (idx, line) in lines {
            let lineno = idx + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(Error::parse(path, lineno, "expected `id idx left right leaf_value`"));
            }
            let id: usize = fields[0]
                .parse()
                .map_err(|_| Error::parse(path, lineno, "bad node id"))?;
            if id != nodes.len() {
                return Err(Error::parse(
                    path,
                    lineno,
                    format!("expected node id {}, found {id}", nodes.len()),
                ));
            }
            let field = |i: usize| -> Result<usize> {
                fields[i]
                    .parse()
                    .map_err(|_| Error::parse(path, lineno, format!("bad field {:?}", fields[i])))
            };
            let node = if fields[1] == "-" {
                if fields[2] != "-" || fields[3] != "-" {
                    return Err(Error::parse(path, lineno, "leaf nodes have no children"));
                }
                let value = parse_rational(fields[4])
                    .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
                Node::Leaf { value }
            } else {
                if fields[4] != "-" {
                    return Err(Error::parse(path, lineno, "split nodes carry no leaf value"));
                }
                Node::Split {
                    feature: field(1)?,
                    left: field(2)?,
                    right: field(3)?,
                }
            };
            nodes.push(node);
        }
        Tree::new(nodes, max_depth, params)
    }
}

pub fn save_tree(tree: &Tree, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, tree.to_text())?;
    Ok(())
}

pub fn load_tree(path: impl AsRef<Path>) -> Result<Tree> {
    let path = path.as_ref();
    Tree::parse(&fs::read_to_string(path)?, path)
}

/// Binary training data: one row of features and a label per sample.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub features: Vec<Vec<u8>>,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<u8>>, labels: Vec<u8>) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::Validation(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let Some(first) = features.first() else {
            return Err(Error::Validation("dataset is empty".into()));
        };
        let d = first.len();
        for (i, row) in features.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            if row.iter().any(|&v| v > 1) || labels[i] > 1 {
                return Err(Error::InputDomain(format!("sample {i} is not binary")));
            }
        }
        Ok(Self { features, labels })
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// CSV rows `label,f0,f1,...`; blank lines and `#` comments are skipped.
    pub fn parse_csv(text: &str, path: &Path) -> Result<Self> {
        let mut features = Vec::new();
        let mut labels = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut values = line.split(',').map(|v| match v.trim() {
                "0" => Ok(0u8),
                "1" => Ok(1u8),
                other => Err(Error::parse(path, idx + 1, format!("expected 0 or 1, found {other:?}"))),
            });
            labels.push(values.next().expect("split yields at least one field")?);
            features.push(values.collect::<Result<Vec<_>>>()?);
        }
        Dataset::new(features, labels).map_err(|e| match e {
            Error::DimensionMismatch { expected, got } => Error::parse(
                path,
                0,
                format!("rows have differing widths ({expected} vs {got})"),
            ),
            other => other,
        })
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::parse_csv(&fs::read_to_string(path)?, path)
    }
}

#[derive(Clone, Debug, Default)]
pub struct TrainOptions {
    /// Store the weighted class-1 share at each leaf instead of rounding it
    /// to the majority class.
    pub soft_leaves: bool,
    /// Keep only this fraction of the available features at each node,
    /// chosen with `seed`.
    pub feature_fraction: Option<f64>,
    pub seed: u64,
}

/// Node impurity weighted by mass: `W * gini = 2 W1 W0 / W`.
fn weighted_gini<T: Scalar>(w1: &T, w0: &T) -> T {
    let total = w1.clone() + w0.clone();
    if total.is_zero() {
        return T::zero();
    }
    T::ratio(2, 1) * w1.clone() * w0.clone() / total
}

/// Greedy breadth-first training with the arriving probability of each
/// sample tracked through the noise, scored by weighted Gini impurity.
/// Ties go to the lowest feature index.
pub fn train<T: Scalar>(
    data: &Dataset,
    alpha_pct: u32,
    max_depth: usize,
    options: &TrainOptions,
) -> Result<Tree> {
    let params = NoiseParams::new(data.dim(), 1, alpha_pct)?;
    let alpha = T::ratio(u64::from(alpha_pct), 100);
    let beta = T::ratio(u64::from(100 - alpha_pct), 100);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);

    let mut nodes: Vec<Option<Node>> = vec![None];
    let mut used = vec![false; data.dim()];
    let mut queue = VecDeque::from([(0usize, 0usize, vec![T::one(); data.len()])]);
    while let Some((id, depth, probs)) = queue.pop_front() {
        let (mut w1, mut w0) = (T::zero(), T::zero());
        for (p, &y) in probs.iter().zip(&data.labels) {
            if y == 1 {
                w1 = w1 + p.clone();
            } else {
                w0 = w0 + p.clone();
            }
        }
        let mut available: Vec<usize> = (0..data.dim()).filter(|&f| !used[f]).collect();
        if let Some(fraction) = options.feature_fraction {
            let keep = ((available.len() as f64 * fraction).ceil() as usize).clamp(1, available.len().max(1));
            available.shuffle(&mut rng);
            available.truncate(keep);
            available.sort_unstable();
        }
        if depth >= max_depth || w1.is_zero() || w0.is_zero() || available.is_empty() {
            nodes[id] = Some(Node::Leaf {
                value: leaf_value(&w1, &w0, options.soft_leaves),
            });
            continue;
        }

        let mut best: Option<(usize, T)> = None;
        for &f in &available {
            // mass by (label, feature value)
            let mut mass = [[T::zero(), T::zero()], [T::zero(), T::zero()]];
            for ((p, row), &y) in probs.iter().zip(&data.features).zip(&data.labels) {
                let cell = &mut mass[y as usize][row[f] as usize];
                *cell = cell.clone() + p.clone();
            }
            // left keeps x_f = 0 with prob alpha; right keeps x_f = 1
            let branch = |keep0: &T, keep1: &T, y: usize| {
                keep0.clone() * mass[y][0].clone() + keep1.clone() * mass[y][1].clone()
            };
            let left = weighted_gini(&branch(&alpha, &beta, 1), &branch(&alpha, &beta, 0));
            let right = weighted_gini(&branch(&beta, &alpha, 1), &branch(&beta, &alpha, 0));
            let score = left + right;
            if best.as_ref().is_none_or(|(_, s)| score < *s) {
                best = Some((f, score));
            }
        }
        let (feature, _) = best.expect("at least one available feature");
        used[feature] = true;

        let mut left_probs = probs.clone();
        let mut right_probs = probs;
        for ((lp, rp), row) in left_probs.iter_mut().zip(right_probs.iter_mut()).zip(&data.features) {
            if row[feature] == 1 {
                *lp = lp.clone() * beta.clone();
                *rp = rp.clone() * alpha.clone();
            } else {
                *lp = lp.clone() * alpha.clone();
                *rp = rp.clone() * beta.clone();
            }
        }
        let left = nodes.len();
        let right = left + 1;
        nodes.push(None);
        nodes.push(None);
        nodes[id] = Some(Node::Split {
            feature,
            left,
            right,
        });
        queue.push_back((left, depth + 1, left_probs));
        queue.push_back((right, depth + 1, right_probs));
    }
    let nodes = nodes
        .into_iter()
        .map(|n| n.expect("every queued node is assigned"))
        .collect();
    Tree::new(nodes, max_depth, params)
}

fn leaf_value<T: Scalar>(w1: &T, w0: &T, soft: bool) -> Rational {
    if soft {
        let share = w1.clone() / (w1.clone() + w0.clone());
        share.to_rational().unwrap_or_else(Rational::zero)
    } else if w1 > w0 {
        Rational::one()
    } else {
        Rational::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: u64, d: u64) -> Rational {
        Rational::ratio(n, d)
    }

    fn stump(alpha_pct: u32) -> Tree {
        let params = NoiseParams::new(3, 1, alpha_pct).unwrap();
        Tree::new(
            vec![
                Node::Split {
                    feature: 1,
                    left: 1,
                    right: 2,
                },
                Node::Leaf { value: q(0, 1) },
                Node::Leaf { value: q(1, 1) },
            ],
            1,
            params,
        )
        .unwrap()
    }

    #[test]
    fn leaf_tree_is_constant() {
        let params = NoiseParams::new(2, 1, 70).unwrap();
        let t = Tree::leaf(q(1, 1), params).unwrap();
        for x in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            assert_eq!(t.predict_prob::<Rational>(&x).unwrap(), q(1, 1));
        }
    }

    #[test]
    fn stump_prediction_and_attack() {
        let t = stump(80);
        assert_eq!(t.predict_prob::<Rational>(&[0, 1, 0]).unwrap(), q(4, 5));
        assert_eq!(t.predict_prob::<Rational>(&[0, 0, 0]).unwrap(), q(1, 5));
        let adv = t.dp_adversary::<Rational>(&[0, 1, 0], 2).unwrap();
        assert_eq!(adv.root(), &[q(4, 5), q(1, 5), q(1, 5)]);
        assert_eq!(t.max_prob::<Rational>(&[0, 0, 0], 1).unwrap(), vec![q(1, 5), q(4, 5)]);
        assert_eq!(
            t.worst_label_prob::<Rational>(&[0, 0, 0], 0, 1).unwrap(),
            vec![q(4, 5), q(1, 5)]
        );
        let f = t.predict_prob::<f64>(&[0, 1, 0]).unwrap();
        assert!((f - 0.8).abs() < 1e-12);
    }

    #[test]
    fn input_checks() {
        let t = stump(80);
        assert!(matches!(
            t.predict_prob::<Rational>(&[0, 1]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(t.predict_prob::<Rational>(&[0, 2, 0]), Err(Error::InputDomain(_))));
    }

    #[test]
    fn validation_rejects_reuse_and_cycles() {
        let params = NoiseParams::new(3, 1, 80).unwrap();
        let reuse = vec![
            Node::Split { feature: 0, left: 1, right: 2 },
            Node::Split { feature: 0, left: 3, right: 4 },
            Node::Leaf { value: q(1, 1) },
            Node::Leaf { value: q(0, 1) },
            Node::Leaf { value: q(1, 1) },
        ];
        assert!(Tree::new(reuse, 2, params).is_err());
        let cycle = vec![
            Node::Split { feature: 0, left: 0, right: 1 },
            Node::Leaf { value: q(1, 1) },
        ];
        assert!(Tree::new(cycle, 5, params).is_err());
        let too_deep = stump(80).nodes().to_vec();
        assert!(Tree::new(too_deep, 0, params).is_err());
        assert!(Tree::leaf(q(3, 2), params).is_err());
        assert!(Tree::leaf(q(1, 2), NoiseParams::new(3, 2, 80).unwrap()).is_err());
    }

    #[test]
    fn text_round_trip_and_errors() {
        let t = stump(80);
        let text = t.to_text();
        assert_eq!(
            text,
            "# d=3 K=1 alpha_pct=80 max_depth=1 version=1\n0 1 1 2 -\n1 - - - 0\n2 - - - 1\n"
        );
        assert_eq!(Tree::parse(&text, Path::new("t")).unwrap(), t);

        let dup = "# d=3 K=1 alpha_pct=80 max_depth=2 version=1\n\
                   0 1 1 2 -\n1 1 3 4 -\n2 - - - 1\n3 - - - 0\n4 - - - 1\n";
        assert!(matches!(Tree::parse(dup, Path::new("t")), Err(Error::Validation(_))));
        let old = text.replace("version=1", "version=0");
        assert!(matches!(Tree::parse(&old, Path::new("t")), Err(Error::HeaderMismatch(_))));
        let bad = text.replace("1 - - - 0", "1 - - - zero");
        assert!(matches!(Tree::parse(&bad, Path::new("t")), Err(Error::Parse { .. })));
    }

    #[test]
    fn single_separating_feature() {
        // feature 2 separates the labels; feature 0 and 1 are noise
        let features = vec![
            vec![0, 1, 0],
            vec![1, 0, 0],
            vec![1, 1, 0],
            vec![0, 1, 1],
            vec![1, 0, 1],
            vec![0, 0, 1],
        ];
        let labels = vec![0, 0, 0, 1, 1, 1];
        let data = Dataset::new(features, labels).unwrap();
        let tree = train::<Rational>(&data, 80, 1, &TrainOptions::default()).unwrap();
        assert_eq!(
            tree.nodes(),
            &[
                Node::Split { feature: 2, left: 1, right: 2 },
                Node::Leaf { value: q(0, 1) },
                Node::Leaf { value: q(1, 1) },
            ]
        );
        let soft = TrainOptions {
            soft_leaves: true,
            ..TrainOptions::default()
        };
        let tree = train::<Rational>(&data, 80, 1, &soft).unwrap();
        assert_eq!(tree.nodes()[1], Node::Leaf { value: q(1, 5) });
    }

    #[test]
    fn pure_labels_give_a_leaf() {
        let data = Dataset::new(vec![vec![0, 1], vec![1, 1], vec![1, 0]], vec![1, 1, 1]).unwrap();
        let tree = train::<Rational>(&data, 80, 3, &TrainOptions::default()).unwrap();
        assert_eq!(tree.nodes(), &[Node::Leaf { value: q(1, 1) }]);
    }

    #[test]
    fn depth_beyond_features_stops_early() {
        let data = Dataset::new(
            vec![vec![0, 1], vec![1, 1], vec![1, 0], vec![0, 0]],
            vec![1, 0, 1, 0],
        )
        .unwrap();
        let tree = train::<Rational>(&data, 75, 5, &TrainOptions::default()).unwrap();
        assert_eq!(tree.used_features().len(), 2);
        assert_eq!(tree.max_depth(), 5);
    }

    #[test]
    fn feature_fraction_is_seeded() {
        let features: Vec<Vec<u8>> = (0..32u32)
            .map(|i| (0..6).map(|b| ((i >> b) & 1) as u8).collect())
            .collect();
        let labels: Vec<u8> = (0..32u32).map(|i| ((i ^ (i >> 3)) & 1) as u8).collect();
        let data = Dataset::new(features, labels).unwrap();
        let opts = TrainOptions {
            feature_fraction: Some(0.5),
            seed: 11,
            ..TrainOptions::default()
        };
        let a = train::<f64>(&data, 80, 2, &opts).unwrap();
        let b = train::<f64>(&data, 80, 2, &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dataset_csv() {
        let d = Dataset::parse_csv("# label,f0,f1\n1,0,1\n0,1,1\n", Path::new("x")).unwrap();
        assert_eq!(d.labels, vec![1, 0]);
        assert_eq!(d.features, vec![vec![0, 1], vec![1, 1]]);
        assert!(Dataset::parse_csv("1,0,2\n", Path::new("x")).is_err());
        assert!(Dataset::parse_csv("1,0\n0,1,1\n", Path::new("x")).is_err());
        assert!(Dataset::parse_csv("", Path::new("x")).is_err());
    }
}
