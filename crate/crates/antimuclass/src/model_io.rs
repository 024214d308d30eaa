//! Text serialization of trained models.
//!
//! ```text
//! antimuclass-model 1
//! classes <K>
//! inputs <D>
//! hidden <H>
//! bands <B>
//! reject_threshold <θ>
//! centers            # H lines of D numbers
//! widths             # one line of H numbers
//! weights            # K lines of H numbers
//! biases             # one line of K numbers
//! config <n>         # n lines of `key = value`
//! training_pixels <N> # N lines `x y class`
//! ridge_rate <r>
//! final_rate <r>
//! api_evaluations <n>
//! confusion          # K lines of K+1 counts, last column = unknown
//! end
//! ```
//!
//! Numbers are written in shortest round-trip decimal form, so reading a
//! written model reproduces it exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use antimuclass_core::pipeline::TrainingMetrics;
use antimuclass_core::{ConfusionMatrix, RbfModel, RunConfig, TrainedModel};

use crate::config;
use crate::error::{io_err, Error, Result};

const MAGIC: &str = "antimuclass-model 1";

fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

pub fn model_to_string(tm: &TrainedModel) -> String {
    let m = &tm.model;
    let (k, h) = (m.class_count(), m.hidden_count());
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "classes {k}\ninputs {}\nhidden {h}\nbands {}", m.input_dim(), tm.bands);
    let _ = writeln!(s, "reject_threshold {}", m.reject_threshold());
    let _ = writeln!(s, "centers");
    for c in m.centers() {
        let _ = writeln!(s, "{}", join(c));
    }
    let _ = writeln!(s, "widths\n{}", join(m.widths()));
    let _ = writeln!(s, "weights");
    for row in m.weights().unwrap_or(&[]).chunks(h.max(1)) {
        let _ = writeln!(s, "{}", join(row));
    }
    let _ = writeln!(s, "biases\n{}", join(m.biases().unwrap_or(&[])));
    let cfg = config::format_config(&tm.config);
    let _ = write!(s, "config {}\n{cfg}", cfg.lines().count());
    let _ = writeln!(s, "training_pixels {}", tm.training_pixels.len());
    for (x, y, l) in &tm.training_pixels {
        let _ = writeln!(s, "{x} {y} {l}");
    }
    let mt = &tm.metrics;
    let _ = writeln!(s, "ridge_rate {}\nfinal_rate {}\napi_evaluations {}", mt.ridge_rate, mt.final_rate, mt.api_evaluations);
    let _ = writeln!(s, "confusion");
    for row in mt.confusion.counts().chunks(k + 1) {
        let _ = writeln!(s, "{}", join(row));
    }
    let _ = writeln!(s, "end");
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Model { line: self.line, msg: msg.into() }
    }

    fn next(&mut self) -> Result<&'a str> {
        let (i, l) = self.inner.next().ok_or_else(|| Error::Model { line: self.line + 1, msg: "unexpected end of file".into() })?;
        self.line = i + 1;
        Ok(l)
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let l = self.next()?;
        if l.trim() != word {
            return Err(self.err(format!("expected {word:?}, found {l:?}")));
        }
        Ok(())
    }

    /// Value of a `name value` line.
    fn field<T: std::str::FromStr>(&mut self, name: &str) -> Result<T> {
        let l = self.next()?;
        match l.split_once(' ') {
            Some((n, v)) if n == name => v.trim().parse().map_err(|_| self.err(format!("invalid {name}: {v:?}"))),
            _ => Err(self.err(format!("expected {name}, found {l:?}"))),
        }
    }

    fn numbers<T: std::str::FromStr>(&mut self, count: usize) -> Result<Vec<T>> {
        let l = self.next()?;
        let v = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| self.err(format!("not a number: {t:?}"))))
            .collect::<Result<Vec<T>>>()?;
        if v.len() != count {
            return Err(self.err(format!("expected {count} values, found {}", v.len())));
        }
        Ok(v)
    }
}

pub fn model_from_str(text: &str) -> Result<TrainedModel> {
    let mut lines = Lines { inner: text.lines().enumerate(), line: 0 };
    lines.expect(MAGIC)?;
    let k: usize = lines.field("classes")?;
    let d: usize = lines.field("inputs")?;
    let h: usize = lines.field("hidden")?;
    let bands: usize = lines.field("bands")?;
    let theta: f64 = lines.field("reject_threshold")?;
    lines.expect("centers")?;
    let centers = (0..h).map(|_| lines.numbers(d)).collect::<Result<Vec<Vec<f64>>>>()?;
    lines.expect("widths")?;
    let widths = lines.numbers(h)?;
    lines.expect("weights")?;
    let mut weights = Vec::with_capacity(k * h);
    for _ in 0..k {
        weights.extend(lines.numbers::<f64>(h)?);
    }
    lines.expect("biases")?;
    let biases = lines.numbers(k)?;
    let model = RbfModel::new(centers, widths, k, theta)?.with_output(weights, biases)?;

    let n: usize = lines.field("config")?;
    let start = lines.line + 1;
    let mut cfg_text = String::new();
    for _ in 0..n {
        cfg_text.push_str(lines.next()?);
        cfg_text.push('\n');
    }
    let config = config::parse_config(&cfg_text, RunConfig::default()).map_err(|e| match e {
        Error::Config { line, msg } => Error::Model { line: start + line - 1, msg },
        e => e,
    })?;

    let n: usize = lines.field("training_pixels")?;
    let mut training_pixels = Vec::with_capacity(n);
    for _ in 0..n {
        let v = lines.numbers::<usize>(3)?;
        let label = u16::try_from(v[2]).map_err(|_| lines.err("class label out of range"))?;
        training_pixels.push((v[0], v[1], label));
    }
    let ridge_rate = lines.field("ridge_rate")?;
    let final_rate = lines.field("final_rate")?;
    let api_evaluations = lines.field("api_evaluations")?;
    lines.expect("confusion")?;
    let mut counts = Vec::with_capacity(k * (k + 1));
    for _ in 0..k {
        counts.extend(lines.numbers::<u64>(k + 1)?);
    }
    let confusion = ConfusionMatrix::from_counts(k, counts)?;
    lines.expect("end")?;
    Ok(TrainedModel {
        model,
        config,
        bands,
        training_pixels,
        metrics: TrainingMetrics { ridge_rate, final_rate, confusion, api_evaluations },
    })
}

pub fn save_model(path: &Path, tm: &TrainedModel) -> Result<()> {
    fs::write(path, model_to_string(tm)).map_err(io_err(path))
}

pub fn load_model(path: &Path) -> Result<TrainedModel> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    model_from_str(&text)
}
