//! Graph 2-coloring with a continuous fraction-of-edges reward.
//!
//! Generation is answer-first: sample a balanced 2-coloring of `n` nodes,
//! then draw edges from the bichromatic cut, so the graph is always properly
//! 2-colorable. The reward for an answer is `satisfied / total` over the edge
//! list, where an edge counts as satisfied iff both endpoints received colors
//! and they differ.
//!
//! Answer decoding is deliberately forgiving: the tagged span is filtered to
//! color tokens (digits 0/1) and colors are assigned to nodes in order; extra
//! colors beyond the node count are ignored. Reward 1 still requires a
//! complete, proper coloring.

use rand::seq::SliceRandom;

use rand_chacha::ChaCha8Rng;

use super::{digit, node, VerifierPayload, F_COLOR};
#[cfg(test)]
use super::DIGIT_BASE;
use crate::policy::TokenId;

pub(super) fn generate(nodes: u8, rng: &mut ChaCha8Rng) -> (Vec<TokenId>, VerifierPayload) {
    let n = nodes as usize;
    // Balanced color classes: floor(n/2) nodes get color 0, at random.
    let mut order: Vec<u8> = (0..nodes).collect();
    order.shuffle(rng);
    let mut colors = vec![1u8; n];
    for &i in order.iter().take(n / 2) {
        colors[i as usize] = 0;
    }
    let mut cut: Vec<(u8, u8)> = Vec::new();
    for a in 0..nodes {
        for b in (a + 1)..nodes {
            if colors[a as usize] != colors[b as usize] {
                cut.push((a, b));
            }
        }
    }
    cut.shuffle(rng);
    let edge_count = (n + 1).min(cut.len()).max(1);
    let mut edges: Vec<(u8, u8)> = cut.into_iter().take(edge_count).collect();
    edges.sort_unstable();
    let mut prompt = Vec::with_capacity(2 + 2 * edges.len());
    prompt.push(F_COLOR);
    prompt.push(node(nodes - 1));
    for &(a, b) in &edges {
        prompt.push(node(a));
        prompt.push(node(b));
    }
    (
        prompt,
        VerifierPayload::Coloring {
            nodes,
            edges,
            colors,
        },
    )
}

/// Fraction of edges whose endpoints got distinct colors from the answer
/// span. Color tokens are digits 0/1; anything else in the span is skipped.
pub(super) fn score(nodes: u8, edges: &[(u8, u8)], span: &[TokenId]) -> f64 {
    let colors: Vec<u8> = span
        .iter()
        .filter_map(|&t| match t {
            t if t == digit(0) => Some(0u8),
            t if t == digit(1) => Some(1u8),
            _ => None,
        })
        .take(nodes as usize)
        .collect();
    if edges.is_empty() {
        return 0.0;
    }
    let satisfied = edges
        .iter()
        .filter(|&&(a, b)| {
            let (a, b) = (a as usize, b as usize);
            a < colors.len() && b < colors.len() && colors[a] != colors[b]
        })
        .count();
    satisfied as f64 / edges.len() as f64
}
