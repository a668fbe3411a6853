//! Per-step training metrics and the JSONL sink.
//!
//! One record per step, serialized with a fixed field order so identical runs
//! produce byte-identical logs.

use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: u64,
    pub stage: u64,
    pub loss: f64,
    pub entropy: f64,
    pub kl: f64,
    pub mean_ratio: f64,
    pub filter_rate: f64,
    pub mean_len: f64,
    pub mean_reward: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_pass1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub val_pass16: Option<f64>,
    pub reset_flag: bool,
    /// True when the whole batch was filtered out and the step was a no-op.
    pub skipped: bool,
}

/// Accepts records from the single producer, in step order.
pub trait MetricsSink {
    fn record(&mut self, metrics: &StepMetrics) -> std::io::Result<()>;
}

/// Line-delimited JSON, flushed per record so partial logs survive aborts.
pub struct JsonlSink<W: Write> {
    writer: W,
}

impl<W: Write> JsonlSink<W> {
    pub fn new(writer: W) -> Self {
        Self { writer }
    }
}

impl<W: Write> MetricsSink for JsonlSink<W> {
    fn record(&mut self, metrics: &StepMetrics) -> std::io::Result<()> {
        serde_json::to_writer(&mut self.writer, metrics)?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()
    }
}

/// In-memory sink for tests and ablation summaries.
#[derive(Default)]
pub struct VecSink {
    pub records: Vec<StepMetrics>,
}

impl MetricsSink for VecSink {
    fn record(&mut self, metrics: &StepMetrics) -> std::io::Result<()> {
        self.records.push(metrics.clone());
        Ok(())
    }
}

impl<A: MetricsSink, B: MetricsSink> MetricsSink for (A, B) {
    fn record(&mut self, metrics: &StepMetrics) -> std::io::Result<()> {
        self.0.record(metrics)?;
        self.1.record(metrics)
    }
}

pub fn read_metrics<R: std::io::BufRead>(r: R) -> std::io::Result<Vec<StepMetrics>> {
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
