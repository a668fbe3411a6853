//! String reversal over an 8-symbol alphabet. Binary reward.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{symbol, VerifierPayload, F_REV, SYMBOL_COUNT};
use crate::policy::TokenId;

pub(super) fn generate(length: u8, rng: &mut ChaCha8Rng) -> (Vec<TokenId>, VerifierPayload) {
    let symbols: Vec<TokenId> = (0..length)
        .map(|_| symbol(rng.gen_range(0..SYMBOL_COUNT) as u8))
        .collect();
    let mut prompt = Vec::with_capacity(1 + length as usize);
    prompt.push(F_REV);
    prompt.extend(&symbols);
    let reversed = symbols.into_iter().rev().collect();
    (prompt, VerifierPayload::Reversal { reversed })
}
