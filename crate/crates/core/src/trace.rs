use std::fmt::Write as _;
use std::io::{self, Write};

/// Values observed at iterate `x_k` and the sub-steps taken from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub f0: f64,
    pub f1: f64,
    /// `‖x_k − x_{k+1/3}‖`
    pub step0_norm: f64,
    /// `‖x_k − x_{k+2/3}‖`
    pub step1_norm: f64,
    pub lambda: f64,
    pub mu: f64,
    /// `f0(x_{k+1/3})`, when the solver evaluates it.
    pub f0_mid: Option<f64>,
}

/// Per-iteration history plus running best-so-far values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolverTrace {
    records: Vec<IterationRecord>,
    best_f0: Vec<f64>,
}

pub const CSV_HEADER: &str = "k,f0,f1,step0_norm,step1_norm,lambda,mu";

impl SolverTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, record: IterationRecord) {
        let best = match self.best_f0.last() {
            Some(&b) if b <= record.f0 => b,
            _ => record.f0,
        };
        self.best_f0.push(best);
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn last(&self) -> Option<&IterationRecord> {
        self.records.last()
    }

    /// `φ₀ᵏ = min_{i ≤ k} f0(x_i)`
    pub fn best_f0(&self, k: usize) -> f64 {
        self.best_f0[k]
    }

    /// `φ₁^{k0,k} = min_{k0 ≤ i ≤ k} f1(x_i)`
    pub fn best_f1(&self, k0: usize, k: usize) -> f64 {
        self.records[k0..=k].iter().map(|r| r.f1).fold(f64::INFINITY, f64::min)
    }

    pub fn f0_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.f0).collect()
    }

    pub fn f1_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.f1).collect()
    }

    /// CSV with 17 significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.records.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.k,
                fmt17(r.f0),
                fmt17(r.f1),
                fmt17(r.step0_norm),
                fmt17(r.step1_norm),
                fmt17(r.lambda),
                fmt17(r.mu)
            );
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }
}

/// Scientific notation with 17 significant digits.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
