//! grpolab: a desk-scale laboratory for prolonged group-relative policy
//! optimization (GRPO) on procedurally generated, exactly verifiable token
//! tasks.
//!
//! The pieces:
//!
//! - [`policy`] — a tiny fixed-window autoregressive token model with exact
//!   log-probabilities, temperature sampling, and hand-written reverse-mode
//!   gradients of weighted log-probability objectives.
//! - [`grpo`] — the pure math of the surrogate objective: group-standardized
//!   advantages, token-level importance ratios, the decoupled-clip surrogate,
//!   the k3 KL estimator, and loss assembly.
//! - [`tasks`] — procedural generators and exact verifiers for four task
//!   families with binary and continuous rewards.
//! - [`trainer`] — the training engine: rollouts, dynamic group filtering,
//!   reward shaping, minibatched AdamW updates, reference-policy hard resets,
//!   staged schedules, and JSONL metrics.
//! - [`eval`] — pass@k estimation (unbiased hypergeometric form), pass@k
//!   upper bounds, histograms, and difficulty sweeps.
//! - [`config`] — the TOML run-configuration schema shared by the CLI.
//!
//! Everything is deterministic given a master seed: all randomness flows
//! through counter-derived ChaCha streams, and parallel reductions happen in
//! a fixed order, so runs are bitwise reproducible regardless of thread
//! count (and with the `parallel` feature disabled).

pub mod ablation;
pub mod checkpoint;
pub mod config;
pub mod eval;
pub mod grpo;
pub mod metrics;
mod parallel;
pub mod policy;
pub mod rng;
pub mod tasks;
pub mod trainer;

pub use policy::{ObjectiveGradient, PolicyParams, PolicyShape, TokenId, TokenSequence};

