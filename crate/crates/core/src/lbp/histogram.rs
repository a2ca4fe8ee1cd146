use std::fmt::Write;

use serde::Serialize;

use super::mapping::{LbpMapping, MappingKind};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Bin counts of a mapped code image.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub kind: MappingKind,
    pub points: usize,
    pub normalized: bool,
    pub counts: Vec<u64>,
    pub frequencies: Vec<f64>,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Frequencies when normalized, raw counts otherwise.
    pub fn values(&self) -> Vec<f64> {
        if self.normalized {
            self.frequencies.clone()
        } else {
            self.counts.iter().map(|&c| c as f64).collect()
        }
    }

    /// `bin,count,frequency` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin,count,frequency\n");
        for (b, (c, f)) in self.counts.iter().zip(&self.frequencies).enumerate() {
            let _ = writeln!(s, "{b},{c},{f}");
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("histogram serializes")
    }
}

/// Counts the (already mapped) codes of `codes` into `mapping.bins()` bins.
pub fn histogram(codes: &Tensor<u32>, mapping: &LbpMapping, normalize: bool) -> Result<Histogram> {
    let bins = mapping.bins();
    let mut counts = vec![0u64; bins];
    for &c in codes.data() {
        let slot = counts.get_mut(c as usize).ok_or_else(|| {
            Error::Internal(format!("code {c} outside the {bins} bins of the mapping"))
        })?;
        *slot += 1;
    }
    let total = codes.len() as f64;
    let frequencies = counts.iter().map(|&c| c as f64 / total).collect();
    Ok(Histogram {
        kind: mapping.kind(),
        points: mapping.points(),
        normalized: normalize,
        counts,
        frequencies,
    })
}
