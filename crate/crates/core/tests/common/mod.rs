#![allow(dead_code)]

use l0cert::tree::Node;
use l0cert::{NoiseParams, Rational, Tree};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// Random feature-once tree over `d` binary features. Leaves are mostly hard
/// 0/1 with occasional soft values.
pub fn random_tree<R: Rng>(rng: &mut R, d: usize, max_depth: usize, alpha_pct: u32) -> Tree {
    let mut features: Vec<usize> = (0..d).collect();
    features.shuffle(rng);
    let mut nodes = Vec::new();
    grow(rng, &mut nodes, &mut features, 0, max_depth);
    Tree::new(nodes, max_depth, NoiseParams::new(d, 1, alpha_pct).unwrap()).unwrap()
}

fn grow<R: Rng>(rng: &mut R, nodes: &mut Vec<Node>, features: &mut Vec<usize>, depth: usize, max_depth: usize) -> usize {
    let id = nodes.len();
    let split = depth < max_depth && !features.is_empty() && (depth == 0 || rng.gen_bool(0.75));
    if !split {
        let value = match rng.gen_range(0..5) {
            0 => q(rng.gen_range(0..=7), 7),
            1 | 2 => q(0, 1),
            _ => q(1, 1),
        };
        nodes.push(Node::Leaf { value });
        return id;
    }
    let feature = features.pop().unwrap();
    nodes.push(Node::Leaf { value: q(0, 1) });
    let left = grow(rng, nodes, features, depth + 1, max_depth);
    let right = grow(rng, nodes, features, depth + 1, max_depth);
    nodes[id] = Node::Split { feature, left, right };
    id
}

pub fn random_input<R: Rng>(rng: &mut R, d: usize) -> Vec<u8> {
    (0..d).map(|_| rng.gen_range(0..=1)).collect()
}
