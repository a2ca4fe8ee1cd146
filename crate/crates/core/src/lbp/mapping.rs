use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MappingKind {
    Raw,
    /// Rotation invariant.
    Ri,
    /// Uniform patterns.
    U2,
    /// Rotation-invariant uniform patterns.
    Riu2,
}

impl FromStr for MappingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Self::Raw),
            "ri" => Ok(Self::Ri),
            "u2" => Ok(Self::U2),
            "riu2" => Ok(Self::Riu2),
            other => Err(invalid!("unknown mapping kind {other:?}")),
        }
    }
}

impl fmt::Display for MappingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Raw => "raw",
            Self::Ri => "ri",
            Self::U2 => "u2",
            Self::Riu2 => "riu2",
        })
    }
}

/// Smallest value among the `p` circular bit rotations of `code`.
pub fn min_rotation(code: u32, p: usize) -> u32 {
    let mask = (1u32 << p) - 1;
    (0..p)
        .map(|k| ((code >> k) | (code << (p - k))) & mask)
        .min()
        .unwrap_or(code)
}

/// Number of circular 0/1 transitions in a `p`-bit code.
pub fn transitions(code: u32, p: usize) -> u32 {
    let mask = (1u32 << p) - 1;
    let rotated = ((code >> 1) | (code << (p - 1))) & mask;
    (code ^ rotated).count_ones()
}

/// Lookup table from raw `p`-bit codes to histogram bins.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LbpMapping {
    kind: MappingKind,
    points: usize,
    table: Vec<u32>,
    /// Smallest raw code falling into each bin.
    representatives: Vec<u32>,
}

impl LbpMapping {
    pub fn build(kind: MappingKind, points: usize) -> Result<Self> {
        ensure!(
            (1..=16).contains(&points),
            "mappings support 1..=16 points, got {points}"
        );
        let n = 1u32 << points;
        let table: Vec<u32> = match kind {
            MappingKind::Raw => (0..n).collect(),
            MappingKind::Ri => {
                let mut minima: Vec<u32> = (0..n).map(|c| min_rotation(c, points)).collect();
                let canon = minima.clone();
                minima.sort_unstable();
                minima.dedup();
                let bin: HashMap<u32, u32> = minima
                    .iter()
                    .enumerate()
                    .map(|(i, &m)| (m, i as u32))
                    .collect();
                canon.iter().map(|m| bin[m]).collect()
            }
            MappingKind::U2 => {
                let mut next = 0;
                let mut t: Vec<Option<u32>> = (0..n)
                    .map(|c| {
                        (transitions(c, points) <= 2).then(|| {
                            next += 1;
                            next - 1
                        })
                    })
                    .collect();
                let non_uniform = next;
                t.iter_mut().map(|b| b.unwrap_or(non_uniform)).collect()
            }
            MappingKind::Riu2 => (0..n)
                .map(|c| {
                    if transitions(c, points) <= 2 {
                        c.count_ones()
                    } else {
                        points as u32 + 1
                    }
                })
                .collect(),
        };
        let bins = match kind {
            MappingKind::Riu2 => points + 2,
            _ => table.iter().max().map_or(0, |&m| m as usize + 1),
        };
        let mut representatives = vec![u32::MAX; bins];
        for (code, &b) in table.iter().enumerate() {
            let r = &mut representatives[b as usize];
            *r = (*r).min(code as u32);
        }
        Ok(Self {
            kind,
            points,
            table,
            representatives,
        })
    }

    /// Shared, lazily built mapping for `(kind, points)`.
    pub fn cached(kind: MappingKind, points: usize) -> Result<Arc<Self>> {
        type Cache = Mutex<HashMap<(MappingKind, usize), Arc<LbpMapping>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(m) = cache
            .lock()
            .expect("mapping cache poisoned")
            .get(&(kind, points))
        {
            return Ok(Arc::clone(m));
        }
        let m = Arc::new(Self::build(kind, points)?);
        cache
            .lock()
            .expect("mapping cache poisoned")
            .insert((kind, points), Arc::clone(&m));
        Ok(m)
    }

    pub fn kind(&self) -> MappingKind {
        self.kind
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn bins(&self) -> usize {
        self.representatives.len()
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    #[inline]
    pub fn map(&self, code: u32) -> u32 {
        self.table[code as usize]
    }

    /// Smallest raw code that maps into `bin`.
    pub fn representative(&self, bin: u32) -> u32 {
        self.representatives[bin as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_is_identity() {
        let m = LbpMapping::build(MappingKind::Raw, 8).unwrap();
        assert_eq!(m.bins(), 256);
        assert!(m.table().iter().enumerate().all(|(i, &b)| b == i as u32));
    }

    #[test]
    fn rotation_minimum() {
        assert_eq!(min_rotation(0b0000_0110, 8), 0b0000_0011);
        assert_eq!(min_rotation(0, 8), 0);
        assert_eq!(min_rotation(255, 8), 255);
        let m = LbpMapping::build(MappingKind::Ri, 8).unwrap();
        assert_eq!(m.bins(), 36);
        assert_eq!(m.representative(m.map(0b0000_0110)), 3);
        assert_eq!(m.representative(m.map(0)), 0);
        assert_eq!(m.representative(m.map(255)), 255);
    }

    #[test]
    fn transition_counts() {
        assert_eq!(transitions(0b1111_0000, 8), 2);
        assert_eq!(transitions(0, 8), 0);
        assert_eq!(transitions(0b1001_1001, 8), 4);
    }

    #[test]
    fn uniform_bins_non_uniform_last() {
        let m = LbpMapping::build(MappingKind::U2, 8).unwrap();
        assert_eq!(m.bins(), 59);
        assert_eq!(m.map(0b0101_0101), 58);
        let r = LbpMapping::build(MappingKind::Riu2, 8).unwrap();
        assert_eq!(r.bins(), 10);
        assert_eq!(r.map(0b0001_1100), 3);
        assert_eq!(r.map(0b0101_0101), 9);
    }

    #[test]
    fn parse_kind() {
        assert_eq!("riu2".parse::<MappingKind>().unwrap(), MappingKind::Riu2);
        assert!(matches!(
            "lbp".parse::<MappingKind>(),
            Err(Error::InvalidArgument(_))
        ));
        assert!(LbpMapping::build(MappingKind::Raw, 17).is_err());
    }

    #[test]
    fn cache_returns_same_table() {
        let a = LbpMapping::cached(MappingKind::U2, 8).unwrap();
        let b = LbpMapping::cached(MappingKind::U2, 8).unwrap();
        assert!(Arc::ptr_eq(&a, &b));
    }
}
