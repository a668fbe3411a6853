//! Balanced-parenthesis completion.
//!
//! The generator builds a balanced string of `pairs` pairs, then splits it at
//! a point of positive depth; the prompt carries the prefix and any balanced
//! completion earns the (binary) reward, not just the generator's suffix.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{VerifierPayload, F_PAREN, LPAREN, RPAREN};
use crate::policy::TokenId;

pub(super) fn generate(pairs: u8, rng: &mut ChaCha8Rng) -> (Vec<TokenId>, VerifierPayload) {
    let mut toks = Vec::with_capacity(2 * pairs as usize);
    let mut opens_left = pairs as i32;
    let mut depth = 0i32;
    while opens_left > 0 || depth > 0 {
        let can_open = opens_left > 0;
        let can_close = depth > 0;
        let open = if can_open && can_close {
            rng.gen_bool(0.5)
        } else {
            can_open
        };
        if open {
            toks.push(LPAREN);
            opens_left -= 1;
            depth += 1;
        } else {
            toks.push(RPAREN);
            depth -= 1;
        }
    }
    // Split points with positive prefix depth (index 1 always qualifies).
    let mut candidates = Vec::new();
    let mut d = 0i32;
    for (i, &t) in toks.iter().enumerate() {
        d += if t == LPAREN { 1 } else { -1 };
        if d > 0 && i + 1 < toks.len() {
            candidates.push(i + 1);
        }
    }
    let split = candidates[rng.gen_range(0..candidates.len())];
    let completion = toks.split_off(split);
    let mut prompt = Vec::with_capacity(1 + toks.len());
    prompt.push(F_PAREN);
    prompt.extend(&toks);
    (
        prompt,
        VerifierPayload::Parens {
            prefix: toks,
            completion,
        },
    )
}

/// 1.0 iff `answer` consists only of parentheses and `prefix ++ answer` is
/// balanced (depth never dips below zero, ends at zero).
pub(super) fn score(prefix: &[TokenId], answer: &[TokenId]) -> f64 {
    if answer.iter().any(|&t| t != LPAREN && t != RPAREN) {
        return 0.0;
    }
    let mut depth = 0i64;
    for &t in prefix.iter().chain(answer) {
        depth += if t == LPAREN { 1 } else { -1 };
        if depth < 0 {
            return 0.0;
        }
    }
    f64::from(depth == 0)
}
