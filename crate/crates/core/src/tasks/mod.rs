//! Procedurally generated, exactly verifiable token tasks.
//!
//! Four families ship by default:
//!
//! | family       | reward     | size knob     | answer                         |
//! |--------------|------------|---------------|--------------------------------|
//! | `arithmetic` | binary     | operand count | sum of operands mod m, 1 digit |
//! | `reversal`   | binary     | string length | the input symbols reversed     |
//! | `parens`     | binary     | pair count    | any balanced completion        |
//! | `coloring`   | continuous | node count    | one color token per node       |
//!
//! Generation is answer-first (sample a solution, then build the problem
//! around it), so every instance is solvable by construction, and fully
//! deterministic in `(family, difficulty, seed)`.
//!
//! # Token encoding
//!
//! On top of the reserved ids (`PAD`, `EOS`, `ANSWER_OPEN`, `ANSWER_CLOSE`)
//! the standard vocabulary lays out:
//!
//! ```text
//! 4..=7   family markers F_ARITH, F_REV, F_PAREN, F_COLOR
//! 8..=17  digits 0-9
//! 18, 19  '(' and ')'
//! 20..=27 reversal symbols a-h
//! 28..=39 node labels n0-n11
//! ```
//!
//! Canonical prompts:
//!
//! - arithmetic: `[F_ARITH, digit(m), digit(a_1), .., digit(a_k)]` — modulus
//!   first so that a small context window still sees it next to the operands.
//! - reversal: `[F_REV, sym(s_1), .., sym(s_L)]`
//! - parens: `[F_PAREN, <unbalanced prefix>]`
//! - coloring: `[F_COLOR, node(n-1), node(a_1), node(b_1), ..]` — the second
//!   token names the highest node, then the edge list as flat pairs.
//!
//! A correct response wraps its answer tokens in
//! `ANSWER_OPEN .. ANSWER_CLOSE`. Parsing takes the span between the first
//! open tag and the next close tag; missing or malformed tags parse to
//! nothing, which verifies to reward 0. Verification is total: any token
//! sequence yields a verdict.

mod arithmetic;
mod coloring;
mod parens;
mod reversal;

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

use crate::policy::{TokenId, Vocabulary, ANSWER_CLOSE, ANSWER_OPEN, EOS};
use crate::rng::{self, domain};

pub const F_ARITH: TokenId = 4;
pub const F_REV: TokenId = 5;
pub const F_PAREN: TokenId = 6;
pub const F_COLOR: TokenId = 7;
pub const DIGIT_BASE: TokenId = 8;
pub const LPAREN: TokenId = 18;
pub const RPAREN: TokenId = 19;
pub const SYMBOL_BASE: TokenId = 20;
pub const SYMBOL_COUNT: u32 = 8;
pub const NODE_BASE: TokenId = 28;
pub const NODE_COUNT: u32 = 12;
pub const VOCAB_SIZE: u32 = NODE_BASE + NODE_COUNT; // 40

pub fn digit(v: u8) -> TokenId {
    debug_assert!(v < 10);
    DIGIT_BASE + v as TokenId
}

pub fn symbol(i: u8) -> TokenId {
    debug_assert!((i as u32) < SYMBOL_COUNT);
    SYMBOL_BASE + i as TokenId
}

pub fn node(i: u8) -> TokenId {
    debug_assert!((i as u32) < NODE_COUNT);
    NODE_BASE + i as TokenId
}

/// The vocabulary every shipped task family shares.
pub fn standard_vocabulary() -> Vocabulary {
    Vocabulary::new(VOCAB_SIZE).expect("standard vocabulary within bounds")
}

#[derive(Debug, Error, PartialEq)]
pub enum TaskError {
    #[error("difficulty out of range for {family}: {detail}")]
    InvalidDifficulty { family: Family, detail: String },
    #[error("not enough distinct instances for the requested split sizes")]
    CapacityExhausted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Arithmetic,
    Reversal,
    Parens,
    Coloring,
}

impl Family {
    pub fn all() -> [Family; 4] {
        [
            Family::Arithmetic,
            Family::Reversal,
            Family::Parens,
            Family::Coloring,
        ]
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Arithmetic => "arithmetic",
            Family::Reversal => "reversal",
            Family::Parens => "parens",
            Family::Coloring => "coloring",
        }
    }

    pub fn parse(s: &str) -> Option<Family> {
        Family::all().into_iter().find(|f| f.name() == s)
    }

    /// True if rewards are 0/1 only.
    pub fn is_binary(&self) -> bool {
        !matches!(self, Family::Coloring)
    }

    fn id(&self) -> u64 {
        match self {
            Family::Arithmetic => 1,
            Family::Reversal => 2,
            Family::Parens => 3,
            Family::Coloring => 4,
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Family-specific size parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum Difficulty {
    Arithmetic { operands: u8, modulus: u8 },
    Reversal { length: u8 },
    Parens { pairs: u8 },
    Coloring { nodes: u8 },
}

impl Difficulty {
    pub fn family(&self) -> Family {
        match self {
            Difficulty::Arithmetic { .. } => Family::Arithmetic,
            Difficulty::Reversal { .. } => Family::Reversal,
            Difficulty::Parens { .. } => Family::Parens,
            Difficulty::Coloring { .. } => Family::Coloring,
        }
    }

    /// The primary size knob, used by difficulty sweeps.
    pub fn size(&self) -> u8 {
        match *self {
            Difficulty::Arithmetic { operands, .. } => operands,
            Difficulty::Reversal { length } => length,
            Difficulty::Parens { pairs } => pairs,
            Difficulty::Coloring { nodes } => nodes,
        }
    }

    /// Family default with the size knob set to `size`.
    pub fn for_size(family: Family, size: u8) -> Difficulty {
        match family {
            Family::Arithmetic => Difficulty::Arithmetic {
                operands: size,
                modulus: 7,
            },
            Family::Reversal => Difficulty::Reversal { length: size },
            Family::Parens => Difficulty::Parens { pairs: size },
            Family::Coloring => Difficulty::Coloring { nodes: size },
        }
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        let bad = |detail: String| TaskError::InvalidDifficulty {
            family: self.family(),
            detail,
        };
        match *self {
            Difficulty::Arithmetic { operands, modulus } => {
                if !(1..=8).contains(&operands) {
                    return Err(bad(format!("operands {operands} not in 1..=8")));
                }
                if !(2..=9).contains(&modulus) {
                    return Err(bad(format!("modulus {modulus} not in 2..=9")));
                }
            }
            Difficulty::Reversal { length } => {
                if !(1..=8).contains(&length) {
                    return Err(bad(format!("length {length} not in 1..=8")));
                }
            }
            Difficulty::Parens { pairs } => {
                if !(1..=8).contains(&pairs) {
                    return Err(bad(format!("pairs {pairs} not in 1..=8")));
                }
            }
            Difficulty::Coloring { nodes } => {
                if !(2..=12).contains(&nodes) {
                    return Err(bad(format!("nodes {nodes} not in 2..=12")));
                }
            }
        }
        Ok(())
    }

    fn key(&self) -> u64 {
        match *self {
            Difficulty::Arithmetic { operands, modulus } => {
                (operands as u64) | ((modulus as u64) << 8)
            }
            Difficulty::Reversal { length } => length as u64,
            Difficulty::Parens { pairs } => pairs as u64,
            Difficulty::Coloring { nodes } => nodes as u64,
        }
    }
}

/// Checkable structure the verifier scores against.
#[derive(Clone, Debug, PartialEq)]
pub enum VerifierPayload {
    /// The single correct answer digit.
    Arithmetic { answer: u8 },
    /// The reversed symbol tokens.
    Reversal { reversed: Vec<TokenId> },
    /// The unbalanced prefix (for checking completions) and the canonical
    /// completion the generator split off (one of possibly many solutions).
    Parens {
        prefix: Vec<TokenId>,
        completion: Vec<TokenId>,
    },
    /// Edge list plus the proper coloring the graph was built from.
    Coloring {
        nodes: u8,
        edges: Vec<(u8, u8)>,
        colors: Vec<u8>,
    },
}

/// One generated problem.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskInstance {
    pub family: Family,
    pub difficulty: Difficulty,
    pub seed: u64,
    pub prompt: Vec<TokenId>,
    pub payload: VerifierPayload,
}

impl TaskInstance {
    /// The canonical correct answer tokens (without tags). For families with
    /// multiple correct answers this is the generator's own solution.
    pub fn ground_truth(&self) -> Vec<TokenId> {
        match &self.payload {
            VerifierPayload::Arithmetic { answer } => vec![digit(*answer)],
            VerifierPayload::Reversal { reversed } => reversed.clone(),
            VerifierPayload::Parens { completion, .. } => completion.clone(),
            VerifierPayload::Coloring { colors, .. } => {
                colors.iter().map(|&c| digit(c)).collect()
            }
        }
    }

    /// Ground truth wrapped in answer tags and terminated, i.e. an ideal
    /// response.
    pub fn encode_ground_truth(&self) -> Vec<TokenId> {
        let mut out = vec![ANSWER_OPEN];
        out.extend(self.ground_truth());
        out.push(ANSWER_CLOSE);
        out.push(EOS);
        out
    }
}

/// Verifier verdict. `correct` iff the reward is exactly 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Verdict {
    pub reward: f64,
    pub correct: bool,
    pub parse_ok: bool,
}

impl Verdict {
    fn failed() -> Self {
        Verdict {
            reward: 0.0,
            correct: false,
            parse_ok: false,
        }
    }

    fn scored(reward: f64) -> Self {
        Verdict {
            reward,
            correct: reward == 1.0,
            parse_ok: true,
        }
    }
}

/// Generate an instance. Deterministic in its arguments; independent of any
/// run-level seed.
pub fn generate(family: Family, difficulty: Difficulty, seed: u64) -> Result<TaskInstance, TaskError> {
    if difficulty.family() != family {
        return Err(TaskError::InvalidDifficulty {
            family,
            detail: format!("difficulty is for {}", difficulty.family()),
        });
    }
    difficulty.validate()?;
    let mut rng = rng::derive_rng(seed, domain::TASK_GEN, family.id(), difficulty.key());
    let (prompt, payload) = match difficulty {
        Difficulty::Arithmetic { operands, modulus } => {
            arithmetic::generate(operands, modulus, &mut rng)
        }
        Difficulty::Reversal { length } => reversal::generate(length, &mut rng),
        Difficulty::Parens { pairs } => parens::generate(pairs, &mut rng),
        Difficulty::Coloring { nodes } => coloring::generate(nodes, &mut rng),
    };
    Ok(TaskInstance {
        family,
        difficulty,
        seed,
        prompt,
        payload,
    })
}

/// Extract the token span between the first `ANSWER_OPEN` and the next
/// `ANSWER_CLOSE`. The response is cut at its first `EOS`; absent or
/// malformed tags give `None`.
pub fn parse_answer(response: &[TokenId]) -> Option<Vec<TokenId>> {
    let end = response
        .iter()
        .position(|&t| t == EOS)
        .unwrap_or(response.len());
    let live = &response[..end];
    let open = live.iter().position(|&t| t == ANSWER_OPEN)?;
    let close = live[open + 1..]
        .iter()
        .position(|&t| t == ANSWER_CLOSE)?
        + open
        + 1;
    Some(live[open + 1..close].to_vec())
}

/// Score a response. Total: every token sequence yields a verdict.
pub fn verify(instance: &TaskInstance, response: &[TokenId]) -> Verdict {
    let span = match parse_answer(response) {
        Some(s) => s,
        None => return Verdict::failed(),
    };
    let reward = match &instance.payload {
        VerifierPayload::Arithmetic { answer } => {
            f64::from(span == [digit(*answer)])
        }
        VerifierPayload::Reversal { reversed } => f64::from(span == *reversed),
        VerifierPayload::Parens { prefix, .. } => parens::score(prefix, &span),
        VerifierPayload::Coloring { nodes, edges, .. } => {
            coloring::score(*nodes, edges, &span)
        }
    };
    Verdict::scored(reward)
}

/// Train/validation/test splits with pairwise-disjoint canonical prompts and
/// disjoint, ascending seed ranges.
#[derive(Clone, Debug)]
pub struct Splits {
    pub train: Vec<TaskInstance>,
    pub validation: Vec<TaskInstance>,
    pub test: Vec<TaskInstance>,
}

/// Build splits by scanning seeds `master_seed, master_seed+1, ..` and
/// skipping any instance whose prompt already appeared. Fails if the family
/// cannot supply enough distinct instances.
pub fn make_splits(
    family: Family,
    difficulty: Difficulty,
    counts: (usize, usize, usize),
    master_seed: u64,
) -> Result<Splits, TaskError> {
    let total = counts.0 + counts.1 + counts.2;
    let mut seen: HashSet<Vec<TokenId>> = HashSet::new();
    let mut picked = Vec::with_capacity(total);
    let budget = (total as u64) * 10_000;
    let mut offset = 0u64;
    while picked.len() < total {
        if offset >= budget {
            return Err(TaskError::CapacityExhausted);
        }
        let inst = generate(family, difficulty, master_seed.wrapping_add(offset))?;
        offset += 1;
        if seen.insert(inst.prompt.clone()) {
            picked.push(inst);
        }
    }
    let test = picked.split_off(counts.0 + counts.1);
    let validation = picked.split_off(counts.0);
    Ok(Splits {
        train: picked,
        validation,
        test,
    })
}

/// Distinct held-out instances (top-bit-clear seeds; training rollouts force
/// the top bit set, so the seed spaces never meet).
pub fn held_out_set(
    family: Family,
    difficulty: Difficulty,
    count: usize,
    salt: u64,
) -> Result<Vec<TaskInstance>, TaskError> {
    let mut seen: HashSet<Vec<TokenId>> = HashSet::new();
    let mut out = Vec::with_capacity(count);
    let budget = (count as u64) * 10_000;
    let mut offset = 0u64;
    while out.len() < count {
        if offset >= budget {
            return Err(TaskError::CapacityExhausted);
        }
        let seed = (salt.wrapping_add(offset)) & !(1u64 << 63);
        offset += 1;
        let inst = generate(family, difficulty, seed)?;
        if seen.insert(inst.prompt.clone()) {
            out.push(inst);
        }
    }
    Ok(out)
}

/// Line-delimited dump record for audit and cross-implementation testing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    pub family: Family,
    pub difficulty: Difficulty,
    pub seed: u64,
    pub prompt: Vec<TokenId>,
    pub ground_truth: Vec<TokenId>,
}

impl TaskRecord {
    pub fn from_instance(inst: &TaskInstance) -> Self {
        TaskRecord {
            family: inst.family,
            difficulty: inst.difficulty,
            seed: inst.seed,
            prompt: inst.prompt.clone(),
            ground_truth: inst.ground_truth(),
        }
    }
}

pub fn write_task_records<W: std::io::Write>(
    mut w: W,
    instances: &[TaskInstance],
) -> std::io::Result<()> {
    for inst in instances {
        let record = TaskRecord::from_instance(inst);
        serde_json::to_writer(&mut w, &record)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_task_records<R: std::io::BufRead>(r: R) -> std::io::Result<Vec<TaskRecord>> {
    let mut out = Vec::new();
    for line in r.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
