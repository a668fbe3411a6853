//! A tiny fixed-window autoregressive token model.
//!
//! The architecture is deliberately minimal: to predict the next token the
//! model embeds the last `window` tokens of the running sequence (left-padded
//! with `PAD`), concatenates the embeddings, applies one tanh hidden layer,
//! and projects to vocabulary logits:
//!
//! ```text
//! x = concat(E[t_{-w}], .., E[t_{-1}])          (w*d)
//! u = x W1 + b1,   a = tanh(u)                  (h)
//! z = a W2 + b2                                 (V)
//! log p(v) = z_v - logsumexp(z)
//! ```
//!
//! All parameters live in one flat `f64` buffer (embedding, W1, b1, W2, b2 in
//! that order, matrices row-major), which keeps the optimizer, checkpointing,
//! and finite-difference probing trivial. Gradients are computed by
//! hand-written reverse mode in [`PolicyParams::grad_weighted_logprob`].
//!
//! Sampling tempers the logits (`softmax(z / T)`) for exploration but always
//! reports temperature-1 log-probabilities, which are the quantities the
//! importance ratios need.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::parallel::ordered_map;

pub type TokenId = u32;

/// Reserved token ids, fixed across every run.
pub const PAD: TokenId = 0;
pub const EOS: TokenId = 1;
pub const ANSWER_OPEN: TokenId = 2;
pub const ANSWER_CLOSE: TokenId = 3;
/// First id available to task symbols.
pub const RESERVED: u32 = 4;

pub const MIN_VOCAB: u32 = 8;
pub const MAX_VOCAB: u32 = 64;
pub const MAX_PARAMS: usize = 100_000;

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("token id {id} out of range for vocabulary of size {vocab}")]
    InvalidToken { id: TokenId, vocab: u32 },
    #[error("weight/token length mismatch: {expected} response tokens, {got} weights")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid vocabulary size {0} (must be in {MIN_VOCAB}..={MAX_VOCAB})")]
    InvalidVocab(u32),
    #[error("parameter count {0} exceeds the {MAX_PARAMS} desk-scale cap")]
    TooManyParams(usize),
}

/// Vocabulary descriptor: just a size plus the reserved-id convention above.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub size: u32,
}

impl Vocabulary {
    pub fn new(size: u32) -> Result<Self, PolicyError> {
        if !(MIN_VOCAB..=MAX_VOCAB).contains(&size) {
            return Err(PolicyError::InvalidVocab(size));
        }
        Ok(Self { size })
    }
}

/// Architecture dimensions. `window` is the number of context tokens fed to
/// the hidden layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyShape {
    pub vocab: u32,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub window: usize,
}

impl PolicyShape {
    pub fn new(
        vocab: Vocabulary,
        embed_dim: usize,
        hidden_dim: usize,
        window: usize,
    ) -> Result<Self, PolicyError> {
        let shape = Self {
            vocab: vocab.size,
            embed_dim,
            hidden_dim,
            window,
        };
        if shape.param_count() > MAX_PARAMS {
            return Err(PolicyError::TooManyParams(shape.param_count()));
        }
        Ok(shape)
    }

    /// Default desk-scale architecture.
    pub fn default_for(vocab: Vocabulary) -> Self {
        Self {
            vocab: vocab.size,
            embed_dim: 16,
            hidden_dim: 32,
            window: 4,
        }
    }

    pub fn param_count(&self) -> usize {
        let (v, d, h, w) = self.dims();
        v * d + w * d * h + h + h * v + v
    }

    fn dims(&self) -> (usize, usize, usize, usize) {
        (
            self.vocab as usize,
            self.embed_dim,
            self.hidden_dim,
            self.window,
        )
    }

    // Flat-buffer offsets: embed | w1 | b1 | w2 | b2.
    fn off_w1(&self) -> usize {
        self.vocab as usize * self.embed_dim
    }
    fn off_b1(&self) -> usize {
        self.off_w1() + self.window * self.embed_dim * self.hidden_dim
    }
    fn off_w2(&self) -> usize {
        self.off_b1() + self.hidden_dim
    }
    fn off_b2(&self) -> usize {
        self.off_w2() + self.hidden_dim * self.vocab as usize
    }
}

/// One prompt/response pair. `terminated` is true iff the response ended with
/// an explicit `EOS` inside the length cap; length-capped sequences are kept
/// with `terminated = false` so reward shaping can penalize them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenSequence {
    pub prompt: Vec<TokenId>,
    pub response: Vec<TokenId>,
    pub terminated: bool,
}

impl TokenSequence {
    pub fn new(prompt: Vec<TokenId>, response: Vec<TokenId>, terminated: bool) -> Self {
        debug_assert!(!terminated || response.last() == Some(&EOS));
        Self {
            prompt,
            response,
            terminated,
        }
    }
}

/// Gradient of a scalar objective with respect to every parameter, in the
/// same flat layout as [`PolicyParams`]. Additive over disjoint batches.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveGradient {
    shape: PolicyShape,
    data: Vec<f64>,
}

impl ObjectiveGradient {
    pub fn zeros(shape: PolicyShape) -> Self {
        Self {
            data: vec![0.0; shape.param_count()],
            shape,
        }
    }

    pub fn shape(&self) -> PolicyShape {
        self.shape
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn add_assign(&mut self, other: &ObjectiveGradient) {
        debug_assert_eq!(self.shape, other.shape);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }
}

/// All model weights in one flat buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyParams {
    shape: PolicyShape,
    data: Vec<f64>,
}

impl PolicyParams {
    pub fn zeros(shape: PolicyShape) -> Self {
        Self {
            data: vec![0.0; shape.param_count()],
            shape,
        }
    }

    /// Seeded Gaussian initialization, std 0.1.
    pub fn init(shape: PolicyShape, seed: u64) -> Self {
        let mut rng = crate::rng::derive_rng(seed, crate::rng::domain::INIT, 0, 0);
        let normal = Normal::new(0.0, 0.1).expect("valid std");
        let data = (0..shape.param_count())
            .map(|_| normal.sample(&mut rng))
            .collect();
        Self { shape, data }
    }

    pub fn from_flat(shape: PolicyShape, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), shape.param_count());
        Self { shape, data }
    }

    pub fn shape(&self) -> PolicyShape {
        self.shape
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn embed(&self, t: TokenId) -> &[f64] {
        let d = self.shape.embed_dim;
        let start = t as usize * d;
        &self.data[start..start + d]
    }

    fn check_tokens(&self, tokens: &[TokenId]) -> Result<(), PolicyError> {
        for &t in tokens {
            if t >= self.shape.vocab {
                return Err(PolicyError::InvalidToken {
                    id: t,
                    vocab: self.shape.vocab,
                });
            }
        }
        Ok(())
    }

    /// Context window ending just before response position `t` (0-based),
    /// left-padded with `PAD`.
    fn context(&self, prompt: &[TokenId], response: &[TokenId], t: usize) -> Vec<TokenId> {
        let w = self.shape.window;
        let mut ctx = vec![PAD; w];
        let total = prompt.len() + t;
        for k in 0..w {
            // position total - w + k in the full sequence
            let pos = (total + k) as isize - w as isize;
            if pos >= 0 {
                let pos = pos as usize;
                ctx[k] = if pos < prompt.len() {
                    prompt[pos]
                } else {
                    response[pos - prompt.len()]
                };
            }
        }
        ctx
    }

    /// Forward pass for one context window. Returns (x, a, z).
    fn forward(&self, ctx: &[TokenId]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let (v, d, h, w) = self.shape.dims();
        let mut x = Vec::with_capacity(w * d);
        for &t in ctx {
            x.extend_from_slice(self.embed(t));
        }
        let w1 = &self.data[self.shape.off_w1()..self.shape.off_b1()];
        let b1 = &self.data[self.shape.off_b1()..self.shape.off_w2()];
        let mut a = b1.to_vec();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                let row = &w1[i * h..(i + 1) * h];
                for (aj, &wij) in a.iter_mut().zip(row) {
                    *aj += xi * wij;
                }
            }
        }
        for aj in a.iter_mut() {
            *aj = aj.tanh();
        }
        let w2 = &self.data[self.shape.off_w2()..self.shape.off_b2()];
        let b2 = &self.data[self.shape.off_b2()..];
        let mut z = b2.to_vec();
        for (j, &aj) in a.iter().enumerate() {
            let row = &w2[j * v..(j + 1) * v];
            for (zv, &wjv) in z.iter_mut().zip(row) {
                *zv += aj * wjv;
            }
        }
        (x, a, z)
    }

    /// Temperature-1 next-token distribution after `context` (any length; the
    /// trailing `window` tokens are used).
    pub fn token_distribution(&self, context: &[TokenId]) -> Result<Vec<f64>, PolicyError> {
        self.check_tokens(context)?;
        let ctx = self.context(context, &[], 0);
        let (_, _, z) = self.forward(&ctx);
        Ok(softmax(&z))
    }

    /// Exact per-token log-probabilities of `seq.response` given its prompt.
    pub fn logprobs(&self, seq: &TokenSequence) -> Result<Vec<f64>, PolicyError> {
        self.check_tokens(&seq.prompt)?;
        self.check_tokens(&seq.response)?;
        let mut out = Vec::with_capacity(seq.response.len());
        for t in 0..seq.response.len() {
            let ctx = self.context(&seq.prompt, &seq.response, t);
            let (_, _, z) = self.forward(&ctx);
            let lse = log_sum_exp(&z);
            out.push(z[seq.response[t] as usize] - lse);
        }
        Ok(out)
    }

    /// Sample a response. Tokens are drawn from `softmax(z / temperature)`;
    /// generation stops at `EOS` or `max_len`. The returned log-probs are
    /// temperature-1 (the true policy), and `entropy_sum` accumulates the
    /// temperature-1 distribution entropy at each emitted position.
    pub fn sample(
        &self,
        prompt: &[TokenId],
        temperature: f64,
        max_len: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<SampleOutput, PolicyError> {
        assert!(temperature > 0.0, "temperature must be positive");
        assert!(max_len >= 1, "max_len must be at least 1");
        self.check_tokens(prompt)?;
        let mut response: Vec<TokenId> = Vec::new();
        let mut logp = Vec::new();
        let mut entropy_sum = 0.0;
        let mut terminated = false;
        while response.len() < max_len {
            let ctx = self.context(prompt, &response, response.len());
            let (_, _, z) = self.forward(&ctx);
            let lse = log_sum_exp(&z);
            // temperature-1 probabilities for entropy + stored log-probs
            let mut p1 = vec![0.0; z.len()];
            for (pv, &zv) in p1.iter_mut().zip(&z) {
                *pv = (zv - lse).exp();
            }
            entropy_sum += entropy_of(&p1);
            let tok = if (temperature - 1.0).abs() < 1e-12 {
                draw(&p1, rng)
            } else {
                let zt: Vec<f64> = z.iter().map(|&zv| zv / temperature).collect();
                draw(&softmax(&zt), rng)
            };
            logp.push(z[tok as usize] - lse);
            response.push(tok);
            if tok == EOS {
                terminated = true;
                break;
            }
        }
        Ok(SampleOutput {
            seq: TokenSequence {
                prompt: prompt.to_vec(),
                response,
                terminated,
            },
            logp,
            entropy_sum,
        })
    }

    /// Average next-token entropy over every response position in `seqs`,
    /// under this parameter set. In [0, ln(vocab)].
    pub fn mean_token_entropy(&self, seqs: &[TokenSequence]) -> Result<f64, PolicyError> {
        if seqs.is_empty() || seqs.iter().all(|s| s.response.is_empty()) {
            return Err(PolicyError::EmptyBatch);
        }
        let per_seq = ordered_map(seqs.iter().collect::<Vec<_>>(), |seq| {
            let mut sum = 0.0;
            for t in 0..seq.response.len() {
                let ctx = self.context(&seq.prompt, &seq.response, t);
                let (_, _, z) = self.forward(&ctx);
                sum += entropy_of(&softmax(&z));
            }
            (sum, seq.response.len())
        });
        let mut total = 0.0;
        let mut count = 0usize;
        for (s, n) in per_seq {
            total += s;
            count += n;
        }
        Ok(total / count as f64)
    }

    /// Reverse-mode gradient of `sum_t weight_t * log p(response_t)` over the
    /// batch. Exact, and linear in the weights. Per-item contributions are
    /// computed independently and reduced in batch order, so the result does
    /// not depend on thread scheduling.
    pub fn grad_weighted_logprob(
        &self,
        batch: &[(&TokenSequence, &[f64])],
    ) -> Result<ObjectiveGradient, PolicyError> {
        for (seq, weights) in batch {
            if seq.response.len() != weights.len() {
                return Err(PolicyError::ShapeMismatch {
                    expected: seq.response.len(),
                    got: weights.len(),
                });
            }
            self.check_tokens(&seq.prompt)?;
            self.check_tokens(&seq.response)?;
            if weights.iter().any(|w| !w.is_finite()) {
                return Err(PolicyError::ShapeMismatch {
                    expected: seq.response.len(),
                    got: weights.len(),
                });
            }
        }
        let items: Vec<(&TokenSequence, &[f64])> = batch.to_vec();
        let grads = ordered_map(items, |(seq, weights)| self.grad_one(seq, weights));
        let mut acc = ObjectiveGradient::zeros(self.shape);
        for g in &grads {
            acc.add_assign(g);
        }
        Ok(acc)
    }

    fn grad_one(&self, seq: &TokenSequence, weights: &[f64]) -> ObjectiveGradient {
        let (v, d, h, _w) = self.shape.dims();
        let mut grad = ObjectiveGradient::zeros(self.shape);
        let w1 = &self.data[self.shape.off_w1()..self.shape.off_b1()];
        let w2 = &self.data[self.shape.off_w2()..self.shape.off_b2()];
        let (off_w1, off_b1, off_w2, off_b2) = (
            self.shape.off_w1(),
            self.shape.off_b1(),
            self.shape.off_w2(),
            self.shape.off_b2(),
        );
        for (t, &wt) in weights.iter().enumerate() {
            if wt == 0.0 {
                continue;
            }
            let ctx = self.context(&seq.prompt, &seq.response, t);
            let (x, a, z) = self.forward(&ctx);
            let p = softmax(&z);
            let tok = seq.response[t] as usize;
            // d(wt * logp_tok)/dz_v = wt * (1[v==tok] - p_v)
            let mut gz: Vec<f64> = p.iter().map(|&pv| -wt * pv).collect();
            gz[tok] += wt;
            // output layer
            for (gv, &gzv) in grad.data[off_b2..].iter_mut().zip(&gz) {
                *gv += gzv;
            }
            let mut da = vec![0.0; h];
            for j in 0..h {
                let row = &w2[j * v..(j + 1) * v];
                let grow = &mut grad.data[off_w2 + j * v..off_w2 + (j + 1) * v];
                let aj = a[j];
                let mut acc = 0.0;
                for ((gw, &wjv), &gzv) in grow.iter_mut().zip(row).zip(&gz) {
                    *gw += aj * gzv;
                    acc += wjv * gzv;
                }
                da[j] = acc;
            }
            // through tanh
            let du: Vec<f64> = da
                .iter()
                .zip(&a)
                .map(|(&daj, &aj)| daj * (1.0 - aj * aj))
                .collect();
            for (gb, &duj) in grad.data[off_b1..off_w2].iter_mut().zip(&du) {
                *gb += duj;
            }
            // hidden layer + embeddings
            for (i, &xi) in x.iter().enumerate() {
                let row = &w1[i * h..(i + 1) * h];
                let grow = &mut grad.data[off_w1 + i * h..off_w1 + (i + 1) * h];
                let mut dxi = 0.0;
                for ((gw, &wij), &duj) in grow.iter_mut().zip(row).zip(&du) {
                    *gw += xi * duj;
                    dxi += wij * duj;
                }
                let tok_i = ctx[i / d] as usize;
                grad.data[tok_i * d + i % d] += dxi;
            }
        }
        grad
    }
}

/// Result of one sampling call.
#[derive(Clone, Debug)]
pub struct SampleOutput {
    pub seq: TokenSequence,
    /// Temperature-1 log-probability of each emitted token.
    pub logp: Vec<f64>,
    /// Sum over emitted positions of the temperature-1 distribution entropy.
    pub entropy_sum: f64,
}

fn log_sum_exp(z: &[f64]) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|&zv| (zv - m).exp()).sum::<f64>().ln()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(z);
    z.iter().map(|&zv| (zv - lse).exp()).collect()
}

fn entropy_of(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&pv| pv > 0.0)
        .map(|&pv| pv * pv.ln())
        .sum::<f64>()
}

fn draw(p: &[f64], rng: &mut ChaCha8Rng) -> TokenId {
    let u: f64 = rng.gen();
    let mut cum = 0.0;
    for (v, &pv) in p.iter().enumerate() {
        cum += pv;
        if u < cum {
            return v as TokenId;
        }
    }
    (p.len() - 1) as TokenId
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{derive_rng, domain};

    fn tiny_shape(vocab: u32) -> PolicyShape {
        PolicyShape::new(Vocabulary::new(vocab.max(MIN_VOCAB)).unwrap(), 4, 4, 2).unwrap()
    }

    fn seq(prompt: &[TokenId], response: &[TokenId]) -> TokenSequence {
        TokenSequence {
            prompt: prompt.to_vec(),
            response: response.to_vec(),
            terminated: false,
        }
    }

    /// Independent scalar re-evaluation of the log-softmax chain, written as
    /// a direct normalization (no max-shift) so it shares no code with the
    /// production path.
    fn reference_logprob(params: &PolicyParams, prompt: &[TokenId], resp: &[TokenId]) -> Vec<f64> {
        let (v, d, h, w) = params.shape().dims();
        let flat = params.as_slice();
        let full: Vec<TokenId> = prompt.iter().chain(resp.iter()).cloned().collect();
        let mut out = Vec::new();
        for t in 0..resp.len() {
            let end = prompt.len() + t;
            let mut ctx = vec![PAD; w];
            for k in 0..w {
                let idx = end as isize - w as isize + k as isize;
                if idx >= 0 {
                    ctx[k] = full[idx as usize];
                }
            }
            let mut x = vec![0.0; w * d];
            for (k, &tok) in ctx.iter().enumerate() {
                for c in 0..d {
                    x[k * d + c] = flat[tok as usize * d + c];
                }
            }
            let off_w1 = v * d;
            let off_b1 = off_w1 + w * d * h;
            let off_w2 = off_b1 + h;
            let off_b2 = off_w2 + h * v;
            let mut a = vec![0.0; h];
            for j in 0..h {
                let mut u = flat[off_b1 + j];
                for (i, &xi) in x.iter().enumerate() {
                    u += xi * flat[off_w1 + i * h + j];
                }
                a[j] = u.tanh();
            }
            let mut z = vec![0.0; v];
            for (vv, zv) in z.iter_mut().enumerate() {
                let mut acc = flat[off_b2 + vv];
                for (j, &aj) in a.iter().enumerate() {
                    acc += aj * flat[off_w2 + j * v + vv];
                }
                *zv = acc;
            }
            let total: f64 = z.iter().map(|&zv| zv.exp()).sum();
            out.push((z[resp[t] as usize].exp() / total).ln());
        }
        out
    }

    #[test]
    fn zero_weights_give_uniform_logprobs() {
        let shape = tiny_shape(10);
        let params = PolicyParams::zeros(shape);
        let s = seq(&[4, 5], &[6, 7, 8]);
        let lp = params.logprobs(&s).unwrap();
        for &l in &lp {
            assert!((l - (-(10f64).ln())).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_response_gives_empty_logprobs() {
        let params = PolicyParams::zeros(tiny_shape(10));
        let lp = params.logprobs(&seq(&[4], &[])).unwrap();
        assert!(lp.is_empty());
    }

    #[test]
    fn logprobs_match_independent_reference() {
        let shape = tiny_shape(10);
        let params = PolicyParams::init(shape, 7);
        let s = seq(&[4, 9], &[6, 2, 8]);
        let lp = params.logprobs(&s).unwrap();
        let oracle = reference_logprob(&params, &s.prompt, &s.response);
        for (a, b) in lp.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn logprob_rows_normalize() {
        let shape = tiny_shape(12);
        let params = PolicyParams::init(shape, 3);
        for ctx in [vec![], vec![5, 6, 7], vec![1, 2, 3, 4, 5, 6]] {
            let p = params.token_distribution(&ctx).unwrap();
            let total: f64 = p.iter().sum();
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn out_of_range_token_rejected() {
        let params = PolicyParams::zeros(tiny_shape(10));
        let err = params.logprobs(&seq(&[4], &[10])).unwrap_err();
        assert_eq!(err, PolicyError::InvalidToken { id: 10, vocab: 10 });
    }

    #[test]
    fn sampling_is_deterministic_given_seed() {
        let params = PolicyParams::init(tiny_shape(10), 11);
        let mut r1 = derive_rng(5, domain::ROLLOUT, 0, 0);
        let mut r2 = derive_rng(5, domain::ROLLOUT, 0, 0);
        let a = params.sample(&[4, 5], 1.2, 16, &mut r1).unwrap();
        let b = params.sample(&[4, 5], 1.2, 16, &mut r2).unwrap();
        assert_eq!(a.seq, b.seq);
        assert_eq!(a.logp, b.logp);
    }

    #[test]
    fn uniform_policy_sampling_frequencies_within_3_sigma() {
        let vocab = 10u32;
        let params = PolicyParams::zeros(tiny_shape(vocab));
        let mut rng = derive_rng(123, domain::ROLLOUT, 0, 0);
        let n = 100_000usize;
        let mut counts = vec![0usize; vocab as usize];
        for _ in 0..n {
            let out = params.sample(&[4], 1.0, 1, &mut rng).unwrap();
            counts[out.seq.response[0] as usize] += 1;
        }
        let p = 1.0 / vocab as f64;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for &c in &counts {
            assert!((c as f64 - n as f64 * p).abs() <= 3.0 * sigma, "count {c}");
        }
    }

    #[test]
    fn huge_temperature_flattens_distribution() {
        // The tempered per-step distribution itself must be within 1e-4 total
        // variation of uniform at temperature 1e6 (empirical counts over any
        // finite sample are far noisier than that, so compare the computed
        // distribution).
        let shape = tiny_shape(10);
        let params = PolicyParams::init(shape, 9);
        let (_, _, z) = params.forward(&params.context(&[4, 5], &[], 0));
        let zt: Vec<f64> = z.iter().map(|&v| v / 1e6).collect();
        let p = softmax(&zt);
        let tv: f64 = p.iter().map(|&pv| (pv - 0.1).abs()).sum::<f64>() / 2.0;
        assert!(tv <= 1e-4, "tv = {tv}");
    }

    #[test]
    fn sampled_logprobs_are_temperature_one() {
        let params = PolicyParams::init(tiny_shape(10), 21);
        let mut rng = derive_rng(8, domain::ROLLOUT, 1, 0);
        let out = params.sample(&[4, 6], 1.2, 8, &mut rng).unwrap();
        let lp = params.logprobs(&out.seq).unwrap();
        assert_eq!(out.logp, lp);
    }

    #[test]
    fn eos_terminates_and_is_kept() {
        let shape = tiny_shape(10);
        // Bias the output layer hard toward EOS.
        let mut params = PolicyParams::zeros(shape);
        let off_b2 = shape.off_b2();
        params.as_mut_slice()[off_b2 + EOS as usize] = 1e6;
        let mut rng = derive_rng(1, domain::ROLLOUT, 0, 0);
        let out = params.sample(&[4], 1.0, 8, &mut rng).unwrap();
        assert!(out.seq.terminated);
        assert_eq!(out.seq.response, vec![EOS]);
    }

    #[test]
    fn entropy_uniform_is_ln_vocab() {
        let vocab = 10u32;
        let params = PolicyParams::zeros(tiny_shape(vocab));
        let s = seq(&[4, 5], &[6, 7]);
        let e = params.mean_token_entropy(&[s]).unwrap();
        assert!((e - (vocab as f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn entropy_one_hot_is_zero() {
        let shape = tiny_shape(10);
        let mut params = PolicyParams::zeros(shape);
        params.as_mut_slice()[shape.off_b2() + 5] = 1e6;
        let s = seq(&[4], &[5, 5]);
        let e = params.mean_token_entropy(&[s]).unwrap();
        assert!(e <= 1e-6);
    }

    #[test]
    fn entropy_of_half_half_is_ln2() {
        // Direct evaluation of -sum p ln p on the hand-set distribution.
        let p = [0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        assert!((entropy_of(&p) - 2f64.ln()).abs() < 1e-15);
        // And through the model: two logits far above the rest.
        let shape = tiny_shape(8);
        let mut params = PolicyParams::zeros(shape);
        params.as_mut_slice()[shape.off_b2()] = 40.0;
        params.as_mut_slice()[shape.off_b2() + 1] = 40.0;
        let e = params.mean_token_entropy(&[seq(&[4], &[5])]).unwrap();
        assert!((e - 2f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn empty_batch_entropy_is_error() {
        let params = PolicyParams::zeros(tiny_shape(10));
        assert_eq!(
            params.mean_token_entropy(&[]).unwrap_err(),
            PolicyError::EmptyBatch
        );
    }

    #[test]
    fn zero_weights_zero_gradient() {
        let params = PolicyParams::init(tiny_shape(10), 2);
        let s = seq(&[4, 5], &[6, 7]);
        let g = params
            .grad_weighted_logprob(&[(&s, &[0.0, 0.0])])
            .unwrap();
        assert!(g.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn gradient_is_linear_in_weights() {
        let params = PolicyParams::init(tiny_shape(10), 4);
        let s = seq(&[4, 5], &[6, 7, 8]);
        let w1 = [0.3, -1.1, 0.7];
        let w2: Vec<f64> = w1.iter().map(|x| x * 2.0).collect();
        let g1 = params.grad_weighted_logprob(&[(&s, &w1)]).unwrap();
        let g2 = params.grad_weighted_logprob(&[(&s, &w2)]).unwrap();
        for (a, b) in g1.as_slice().iter().zip(g2.as_slice()) {
            assert!((b - 2.0 * a).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn weight_length_mismatch_rejected() {
        let params = PolicyParams::init(tiny_shape(10), 4);
        let s = seq(&[4], &[6, 7]);
        let err = params.grad_weighted_logprob(&[(&s, &[1.0])]).unwrap_err();
        assert_eq!(
            err,
            PolicyError::ShapeMismatch {
                expected: 2,
                got: 1
            }
        );
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        // vocab 10, d=h=4, w=2, one 4-token response, random weights.
        let shape = tiny_shape(10);
        let params = PolicyParams::init(shape, 11);
        let s = seq(&[4, 9], &[6, 2, 8, 1]);
        let mut wrng = derive_rng(11, domain::INIT, 1, 0);
        let weights: Vec<f64> = (0..4).map(|_| wrng.gen::<f64>() * 2.0 - 1.0).collect();
        let analytic = params.grad_weighted_logprob(&[(&s, &weights)]).unwrap();
        let objective = |p: &PolicyParams| -> f64 {
            let lp = p.logprobs(&s).unwrap();
            lp.iter().zip(&weights).map(|(l, w)| l * w).sum()
        };
        let step = 1e-5;
        for i in 0..shape.param_count() {
            let mut plus = params.clone();
            plus.as_mut_slice()[i] += step;
            let mut minus = params.clone();
            minus.as_mut_slice()[i] -= step;
            let fd = (objective(&plus) - objective(&minus)) / (2.0 * step);
            let a = analytic.as_slice()[i];
            let tol = 1e-4 * a.abs().max(fd.abs()).max(1e-4);
            assert!(
                (a - fd).abs() <= tol.max(1e-8),
                "param {i}: analytic {a} vs fd {fd}"
            );
        }
    }

    #[test]
    fn gradient_additive_over_batches() {
        let params = PolicyParams::init(tiny_shape(10), 13);
        let s1 = seq(&[4], &[6, 7]);
        let s2 = seq(&[5], &[8, 9, 2]);
        let w1 = [0.5, -0.25];
        let w2 = [1.5, 0.75, -2.0];
        let joint = params
            .grad_weighted_logprob(&[(&s1, &w1[..]), (&s2, &w2[..])])
            .unwrap();
        let a = params.grad_weighted_logprob(&[(&s1, &w1[..])]).unwrap();
        let b = params.grad_weighted_logprob(&[(&s2, &w2[..])]).unwrap();
        for ((j, x), y) in joint.as_slice().iter().zip(a.as_slice()).zip(b.as_slice()) {
            assert!((j - (x + y)).abs() <= 1e-15);
        }
    }

    #[test]
    fn vocab_bounds_enforced() {
        assert!(Vocabulary::new(7).is_err());
        assert!(Vocabulary::new(65).is_err());
        assert!(Vocabulary::new(8).is_ok());
        assert!(Vocabulary::new(64).is_ok());
    }
}
