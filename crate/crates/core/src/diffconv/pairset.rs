use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure, invalid, Error, Result};
use crate::rng::SeededRng;

/// `(row, col)` offset from the window center.
pub type Offset = (i32, i32);

/// The unit 8-ring, anticlockwise from east: E, NE, N, NW, W, SW, S, SE.
pub const RING8: [Offset; 8] = [
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
];

/// One `minuend - subtrahend` difference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pair {
    pub minuend: Offset,
    pub subtrahend: Offset,
}

impl Pair {
    pub const fn new(minuend: Offset, subtrahend: Offset) -> Self {
        Self {
            minuend,
            subtrahend,
        }
    }
}

/// Built-in pair-set topologies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairSetKind {
    /// Each 8-neighbor minus the center.
    Central,
    /// Each 8-neighbor minus its clockwise predecessor on the ring.
    Angular,
    /// Each radius-2 ring pixel minus the co-directional radius-1 pixel (5x5).
    Radial,
    /// E, N, W, S minus the center.
    CrossHv,
    /// NE, NW, SW, SE minus the center.
    CrossDg,
    /// `pairs` distinct ordered pairs drawn from a `window x window` grid.
    Random {
        window: usize,
        pairs: usize,
        seed: u64,
    },
}

impl FromStr for PairSetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "central" | "cpdc" => Ok(Self::Central),
            "angular" | "apdc" => Ok(Self::Angular),
            "radial" | "rpdc" => Ok(Self::Radial),
            "cross_hv" | "cross-hv" => Ok(Self::CrossHv),
            "cross_dg" | "cross-dg" => Ok(Self::CrossDg),
            other => Err(invalid!("unknown pair set {other:?}")),
        }
    }
}

impl fmt::Display for PairSetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Central => f.write_str("central"),
            Self::Angular => f.write_str("angular"),
            Self::Radial => f.write_str("radial"),
            Self::CrossHv => f.write_str("cross_hv"),
            Self::CrossDg => f.write_str("cross_dg"),
            Self::Random {
                window,
                pairs,
                seed,
            } => write!(f, "random_k{window}_m{pairs}_s{seed}"),
        }
    }
}

/// Ordered list of pixel pairs inside an odd `window x window` region.
/// Pair `i` is weighted by weight `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PairSetJson", into = "PairSetJson")]
pub struct PairSet {
    window: usize,
    pairs: Vec<Pair>,
}

#[derive(Serialize, Deserialize)]
struct PairSetJson {
    window: usize,
    pairs: Vec<[i32; 4]>,
}

impl TryFrom<PairSetJson> for PairSet {
    type Error = Error;

    fn try_from(j: PairSetJson) -> Result<Self> {
        let pairs = j
            .pairs
            .into_iter()
            .map(|[a, b, c, d]| Pair::new((a, b), (c, d)))
            .collect();
        PairSet::new(j.window, pairs)
    }
}

impl From<PairSet> for PairSetJson {
    fn from(p: PairSet) -> Self {
        Self {
            window: p.window,
            pairs: p
                .pairs
                .iter()
                .map(|q| [q.minuend.0, q.minuend.1, q.subtrahend.0, q.subtrahend.1])
                .collect(),
        }
    }
}

fn window_offsets(window: usize) -> impl Iterator<Item = Offset> {
    let h = (window / 2) as i32;
    (-h..=h).flat_map(move |du| (-h..=h).map(move |dv| (du, dv)))
}

impl PairSet {
    pub fn new(window: usize, pairs: Vec<Pair>) -> Result<Self> {
        ensure!(window % 2 == 1, "window must be odd, got {window}");
        ensure!(!pairs.is_empty(), "a pair set needs at least one pair");
        let h = (window / 2) as i32;
        let inside = |(du, dv): Offset| du.abs() <= h && dv.abs() <= h;
        for p in &pairs {
            ensure!(
                inside(p.minuend) && inside(p.subtrahend),
                "pair {p:?} leaves the {window}x{window} window"
            );
        }
        Ok(Self { window, pairs })
    }

    pub fn build(kind: PairSetKind) -> Result<Self> {
        let around_center = |idx: &[usize]| {
            idx.iter()
                .map(|&i| Pair::new(RING8[i], (0, 0)))
                .collect::<Vec<_>>()
        };
        match kind {
            PairSetKind::Central => Self::new(3, around_center(&[0, 1, 2, 3, 4, 5, 6, 7])),
            PairSetKind::CrossHv => Self::new(3, around_center(&[0, 2, 4, 6])),
            PairSetKind::CrossDg => Self::new(3, around_center(&[1, 3, 5, 7])),
            PairSetKind::Angular => Self::new(
                3,
                (0..8)
                    .map(|i| Pair::new(RING8[(i + 1) % 8], RING8[i]))
                    .collect(),
            ),
            PairSetKind::Radial => Self::new(
                5,
                RING8
                    .iter()
                    .map(|&(du, dv)| Pair::new((2 * du, 2 * dv), (du, dv)))
                    .collect(),
            ),
            PairSetKind::Random {
                window,
                pairs,
                seed,
            } => Self::random(window, pairs, seed),
        }
    }

    /// `m` distinct ordered pairs with `minuend != subtrahend`, drawn
    /// without replacement by a partial Fisher-Yates pass over all
    /// candidates in row-major order.
    pub fn random(window: usize, m: usize, seed: u64) -> Result<Self> {
        ensure!(window % 2 == 1, "window must be odd, got {window}");
        let offsets: Vec<Offset> = window_offsets(window).collect();
        let mut candidates: Vec<Pair> = offsets
            .iter()
            .flat_map(|&a| {
                offsets
                    .iter()
                    .filter(move |&&b| b != a)
                    .map(move |&b| Pair::new(a, b))
            })
            .collect();
        ensure!(
            m >= 1 && m <= candidates.len(),
            "cannot draw {m} distinct pairs from a {window}x{window} window ({} available)",
            candidates.len()
        );
        let mut rng = SeededRng::new(seed);
        for i in 0..m {
            let j = i + rng.below((candidates.len() - i) as u64) as usize;
            candidates.swap(i, j);
        }
        candidates.truncate(m);
        Self::new(window, candidates)
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    /// Row-major tap index of an offset inside the window.
    pub fn tap(&self, (du, dv): Offset) -> usize {
        let h = (self.window / 2) as i32;
        ((du + h) * self.window as i32 + dv + h) as usize
    }

    /// `(minuend tap, subtrahend tap)` for each pair.
    pub fn taps(&self) -> Vec<(usize, usize)> {
        self.pairs
            .iter()
            .map(|p| (self.tap(p.minuend), self.tap(p.subtrahend)))
            .collect()
    }

    /// True when every pair subtracts the window center.
    pub fn is_centered(&self) -> bool {
        self.pairs.iter().all(|p| p.subtrahend == (0, 0))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("pair set serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| invalid!("bad pair-set JSON: {e}"))
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;

    #[test]
    fn central_subtracts_center() {
        let c = PairSet::build(PairSetKind::Central).unwrap();
        assert_eq!(c.len(), 8);
        assert!(c.is_centered());
        assert!(c.pairs().iter().all(|p| p.subtrahend == (0, 0)));
    }

    #[test]
    fn crosses_partition_central() {
        let hv = PairSet::build(PairSetKind::CrossHv).unwrap();
        let dg = PairSet::build(PairSetKind::CrossDg).unwrap();
        let c = PairSet::build(PairSetKind::Central).unwrap();
        let union: HashSet<Pair> = hv.pairs().iter().chain(dg.pairs()).copied().collect();
        let all: HashSet<Pair> = c.pairs().iter().copied().collect();
        assert_eq!(hv.len() + dg.len(), 8);
        assert_eq!(union, all);
    }

    #[test]
    fn angular_and_radial_geometry() {
        let a = PairSet::build(PairSetKind::Angular).unwrap();
        assert_eq!(a.pairs()[0], Pair::new((-1, 1), (0, 1)));
        assert_eq!(a.pairs()[7], Pair::new((0, 1), (1, 1)));
        let r = PairSet::build(PairSetKind::Radial).unwrap();
        assert_eq!(r.window(), 5);
        assert!(r.pairs().contains(&Pair::new((0, 2), (0, 1))));
        assert!(r.pairs().contains(&Pair::new((-2, 2), (-1, 1))));
    }

    #[test]
    fn random_is_seeded_and_distinct() {
        let a = PairSet::random(3, 8, 42).unwrap();
        assert_eq!(a, PairSet::random(3, 8, 42).unwrap());
        assert_ne!(a, PairSet::random(3, 8, 43).unwrap());
        let set: HashSet<Pair> = a.pairs().iter().copied().collect();
        assert_eq!(set.len(), 8);
        assert!(a.pairs().iter().all(|p| p.minuend != p.subtrahend));
        assert!(PairSet::random(3, 72, 0).is_ok());
        assert!(PairSet::random(3, 73, 0).is_err());
    }

    #[test]
    fn json_round_trip_and_validation() {
        let a = PairSet::build(PairSetKind::Angular).unwrap();
        let s = a.to_json();
        assert!(s.starts_with(r#"{"window":3,"pairs":[[-1,1,0,1],"#));
        assert_eq!(PairSet::from_json(&s).unwrap(), a);
        assert!(PairSet::from_json(r#"{"window":3,"pairs":[[2,0,0,0]]}"#).is_err());
        assert!(PairSet::from_json(r#"{"window":4,"pairs":[[1,0,0,0]]}"#).is_err());
        assert!(PairSet::from_json(r#"{"window":3,"pairs":[]}"#).is_err());
    }
}
