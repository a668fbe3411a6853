//! Modular arithmetic chains: compute `(a_1 + .. + a_k) mod m`.
//!
//! Operands are sampled in `[0, m)`. Binary reward: the answer is the single
//! digit of the sum mod m.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{digit, VerifierPayload, F_ARITH};
use crate::policy::TokenId;

pub(super) fn generate(
    operands: u8,
    modulus: u8,
    rng: &mut ChaCha8Rng,
) -> (Vec<TokenId>, VerifierPayload) {
    let values: Vec<u8> = (0..operands).map(|_| rng.gen_range(0..modulus)).collect();
    let answer = values.iter().map(|&v| v as u32).sum::<u32>() % modulus as u32;
    let mut prompt = Vec::with_capacity(2 + operands as usize);
    prompt.push(F_ARITH);
    prompt.push(digit(modulus));
    prompt.extend(values.iter().map(|&v| digit(v)));
    (
        prompt,
        VerifierPayload::Arithmetic {
            answer: answer as u8,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::super::{generate, Difficulty, Family, VerifierPayload, DIGIT_BASE};

    #[test]
    fn answer_is_sum_mod_m() {
        for seed in 0..300 {
            let inst = generate(
                Family::Arithmetic,
                Difficulty::Arithmetic {
                    operands: 3,
                    modulus: 7,
                },
                seed,
            )
            .unwrap();
            let operands: Vec<u32> = inst.prompt[2..]
                .iter()
                .map(|&t| t - DIGIT_BASE)
                .collect();
            let expect = operands.iter().sum::<u32>() % 7;
            match inst.payload {
                VerifierPayload::Arithmetic { answer } => {
                    assert_eq!(answer as u32, expect)
                }
                _ => panic!("wrong payload"),
            }
        }
    }
}
