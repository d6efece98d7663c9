//! Spike rasters: finite binary windows with an explicit convention for the
//! infinite past, spike-time extraction, last-reset lookup, cylinder-pair
//! enumeration, and a line-oriented text file format.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Convention for spiking states at times before the stored window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Past {
    /// No neuron ever fired before the window.
    Empty,
    /// Every neuron fired at every step before the window.
    AllOnes,
    /// The given block (`block[neuron][col]`) tiles the past periodically,
    /// its last column abutting the window start.
    Repeat(Vec<Vec<u8>>),
}

/// Last-reset lookup result.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResetTime {
    Time(i64),
    MinusInfinity,
}

impl ResetTime {
    pub fn as_time(&self) -> Option<i64> {
        match self {
            ResetTime::Time(t) => Some(*t),
            ResetTime::MinusInfinity => None,
        }
    }
}

/// Ordered spike times of one neuron within a queried horizon.
pub type SpikeTimeList = Vec<i64>;

/// A dense binary spike block over an inclusive integer window, together
/// with the past convention. Immutable values in practice: consumers clone
/// or build fresh rasters rather than mutate shared ones.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    n_neurons: usize,
    n0: i64,
    n1: i64,
    /// Row-major bits, `bits[k * len + (n - n0)]`.
    bits: Vec<u8>,
    past: Past,
}

impl Raster {
    /// All-zero window on `[n0, n1]` with the given past.
    pub fn new(n_neurons: usize, n0: i64, n1: i64, past: Past) -> Self {
        assert!(n_neurons > 0, "raster needs at least one neuron");
        assert!(n1 >= n0, "raster window must be non-empty");
        let len = (n1 - n0 + 1) as usize;
        Raster { n_neurons, n0, n1, bits: vec![0; n_neurons * len], past }
    }

    /// The raster where no neuron ever fires.
    pub fn omega0(n_neurons: usize, n0: i64, n1: i64) -> Self {
        Raster::new(n_neurons, n0, n1, Past::Empty)
    }

    /// The raster where every neuron fires at every step.
    pub fn omega1(n_neurons: usize, n0: i64, n1: i64) -> Self {
        let mut r = Raster::new(n_neurons, n0, n1, Past::AllOnes);
        r.bits.fill(1);
        r
    }

    pub fn n_neurons(&self) -> usize {
        self.n_neurons
    }

    /// Inclusive window `(n0, n1)`.
    pub fn window(&self) -> (i64, i64) {
        (self.n0, self.n1)
    }

    pub fn len(&self) -> usize {
        (self.n1 - self.n0 + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn past(&self) -> &Past {
        &self.past
    }

    fn idx(&self, k: usize, n: i64) -> usize {
        k * self.len() + (n - self.n0) as usize
    }

    /// Spiking state of neuron `k` at integer time `n <= n1`. Times before
    /// the window are resolved through the past convention.
    pub fn bit(&self, k: usize, n: i64) -> u8 {
        debug_assert!(k < self.n_neurons);
        debug_assert!(n <= self.n1, "query beyond the stored window");
        if n >= self.n0 {
            self.bits[self.idx(k, n)]
        } else {
            match &self.past {
                Past::Empty => 0,
                Past::AllOnes => 1,
                Past::Repeat(block) => {
                    let period = block[k].len() as i64;
                    let col = (n - self.n0).rem_euclid(period);
                    block[k][col as usize]
                }
            }
        }
    }

    pub fn set_bit(&mut self, k: usize, n: i64, value: u8) {
        debug_assert!(value <= 1);
        let i = self.idx(k, n);
        self.bits[i] = value;
    }

    /// Overwrite the column at time `n` with a spiking pattern.
    pub fn set_column(&mut self, n: i64, pattern: &[u8]) {
        assert_eq!(pattern.len(), self.n_neurons);
        for (k, &bit) in pattern.iter().enumerate() {
            self.set_bit(k, n, bit);
        }
    }

    pub fn column(&self, n: i64) -> Vec<u8> {
        (0..self.n_neurons).map(|k| self.bit(k, n)).collect()
    }

    /// Spike times of neuron `j` strictly before `t`, expanded no deeper
    /// than `floor(t) - horizon`.
    pub fn spike_times(&self, j: usize, t: f64, horizon: u32) -> SpikeTimeList {
        let top = t.floor() as i64;
        let lo = top - horizon as i64;
        let mut out = Vec::new();
        for n in lo..=self.n1.min(top) {
            if (n as f64) < t && self.bit(j, n) == 1 {
                out.push(n);
            }
        }
        out
    }

    /// Most recent time `m <= n` at which neuron `k` fired. A periodic past
    /// is resolved in closed form over a single period, so the answer is
    /// always exact. Times above the stored window count as silent.
    pub fn last_reset(&self, k: usize, n: i64) -> ResetTime {
        let mut m = n.min(self.n1);
        while m >= self.n0 {
            if m <= n && self.bits[self.idx(k, m)] == 1 {
                return ResetTime::Time(m);
            }
            m -= 1;
        }
        let top = n.min(self.n0 - 1);
        match &self.past {
            Past::Empty => ResetTime::MinusInfinity,
            Past::AllOnes => ResetTime::Time(top),
            Past::Repeat(block) => {
                let period = block[k].len() as i64;
                for step in 0..period {
                    let t = top - step;
                    let col = (t - self.n0).rem_euclid(period);
                    if block[k][col as usize] == 1 {
                        return ResetTime::Time(t);
                    }
                }
                ResetTime::MinusInfinity
            }
        }
    }

    /// Serialize in the `GIFRASTER 1` text format.
    pub fn write(&self, path: &Path) -> Result<()> {
        let past = match &self.past {
            Past::Empty => "empty",
            Past::AllOnes => "allones",
            Past::Repeat(_) => return Err(Error::UnsupportedPast),
        };
        let mut out = String::new();
        let _ = writeln!(out, "GIFRASTER 1");
        let _ = writeln!(out, "neurons {}", self.n_neurons);
        let _ = writeln!(out, "window {} {}", self.n0, self.n1);
        let _ = writeln!(out, "past {past}");
        for n in self.n0..=self.n1 {
            for k in 0..self.n_neurons {
                out.push(if self.bit(k, n) == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Parse the `GIFRASTER 1` text format.
    pub fn read(path: &Path) -> Result<Raster> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        let magic = lines.next().ok_or_else(|| Error::MalformedHeader("empty file".into()))?;
        if magic.trim() != "GIFRASTER 1" {
            return Err(Error::MalformedHeader(format!("bad magic line {magic:?}")));
        }
        let neurons_line =
            lines.next().ok_or_else(|| Error::MalformedHeader("missing neurons line".into()))?;
        let n_neurons: usize = neurons_line
            .strip_prefix("neurons ")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("bad neurons line {neurons_line:?}")))?;
        if n_neurons == 0 {
            return Err(Error::MalformedHeader("neurons must be positive".into()));
        }
        let window_line =
            lines.next().ok_or_else(|| Error::MalformedHeader("missing window line".into()))?;
        let body = window_line
            .strip_prefix("window ")
            .ok_or_else(|| Error::MalformedHeader(format!("bad window line {window_line:?}")))?;
        let mut parts = body.split_whitespace();
        let n0: i64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader("window start unreadable".into()))?;
        let n1: i64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader("window end unreadable".into()))?;
        if n1 < n0 {
            return Err(Error::MalformedHeader(format!("empty window {n0}..{n1}")));
        }
        let past_line =
            lines.next().ok_or_else(|| Error::MalformedHeader("missing past line".into()))?;
        let past = match past_line.strip_prefix("past ").map(str::trim) {
            Some("empty") => Past::Empty,
            Some("allones") => Past::AllOnes,
            _ => return Err(Error::MalformedHeader(format!("bad past line {past_line:?}"))),
        };

        let mut raster = Raster::new(n_neurons, n0, n1, past);
        let expected = raster.len();
        let mut rows = 0usize;
        for (row, line) in lines.enumerate() {
            if line.is_empty() && rows == expected {
                break;
            }
            if rows == expected {
                return Err(Error::WindowMismatch { expected, got: rows + 1 });
            }
            if line.len() != n_neurons {
                return Err(Error::BadBitChar { line: row + 5, col: line.len().min(n_neurons) + 1 });
            }
            for (col, ch) in line.chars().enumerate() {
                let bit = match ch {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(Error::BadBitChar { line: row + 5, col: col + 1 }),
                };
                raster.set_bit(col, n0 + rows as i64, bit);
            }
            rows += 1;
        }
        if rows != expected {
            return Err(Error::WindowMismatch { expected, got: rows });
        }
        Ok(raster)
    }
}

/// Read a raster file.
pub fn read_raster(path: impl AsRef<Path>) -> Result<Raster> {
    Raster::read(path.as_ref())
}

/// Write a raster file.
pub fn write_raster(raster: &Raster, path: impl AsRef<Path>) -> Result<()> {
    raster.write(path.as_ref())
}

/// One agreement block of the cylinder enumeration: the distinct rasters
/// sharing that block, and the ordered index pairs to compare.
#[derive(Clone, Debug)]
pub struct CylinderBlock {
    pub rasters: Vec<Raster>,
    pub pairs: Vec<(usize, usize)>,
}

/// Hard limit on the number of distinct raster configurations an enumeration
/// may materialize.
pub const CYLINDER_GUARD: u128 = 1 << 24;

/// Enumerate raster pairs that agree on times `{n-m, ..., n}` and vary over
/// the `tail_horizon` steps below.
///
/// Agreement blocks are the `2^N` constant patterns repeated across the
/// agreement window. Within each block the tails run over all explicit bit
/// combinations (empty past below them), plus the two extremal prefixes:
/// the never-fired tail and the always-fired tail. For `tail_horizon = 0`
/// only the extremal prefix pairs remain.
pub fn cylinder_blocks(
    n_neurons: usize,
    n: i64,
    m: u32,
    tail_horizon: u32,
) -> Result<Vec<CylinderBlock>> {
    let tail_bits = (n_neurons as u32) * tail_horizon;
    if tail_bits >= 64 {
        return Err(Error::EnumerationTooLarge { count: u128::MAX, guard: CYLINDER_GUARD });
    }
    let tails: u64 = 1u64 << tail_bits;
    let count = (1u128 << n_neurons) * (tails as u128 + 1);
    if count > CYLINDER_GUARD {
        return Err(Error::EnumerationTooLarge { count, guard: CYLINDER_GUARD });
    }

    let window_lo = n - m as i64 - tail_horizon as i64;
    let agree_lo = n - m as i64;
    let mut blocks = Vec::with_capacity(1 << n_neurons);
    for pattern in 0u32..(1u32 << n_neurons) {
        let base = |past: Past| -> Raster {
            let mut r = Raster::new(n_neurons, window_lo, n, past);
            for t in agree_lo..=n {
                for k in 0..n_neurons {
                    r.set_bit(k, t, ((pattern >> k) & 1) as u8);
                }
            }
            r
        };

        let mut rasters = Vec::with_capacity(tails as usize + 1);
        if tail_horizon > 0 {
            for tail in 0..tails {
                let mut r = base(Past::Empty);
                let mut bit = 0u32;
                for t in window_lo..agree_lo {
                    for k in 0..n_neurons {
                        r.set_bit(k, t, ((tail >> bit) & 1) as u8);
                        bit += 1;
                    }
                }
                rasters.push(r);
            }
        } else {
            rasters.push(base(Past::Empty));
        }
        // extremal prefixes: quiet forever vs saturated forever
        let omega0_idx = 0usize;
        let mut saturated = base(Past::AllOnes);
        for t in window_lo..agree_lo {
            for k in 0..n_neurons {
                saturated.set_bit(k, t, 1);
            }
        }
        rasters.push(saturated);
        let omega1_idx = rasters.len() - 1;

        let mut pairs = Vec::new();
        if tail_horizon > 0 {
            for a in 0..tails as usize {
                for b in 0..tails as usize {
                    pairs.push((a, b));
                }
            }
        }
        pairs.push((omega0_idx, omega1_idx));
        pairs.push((omega1_idx, omega0_idx));

        blocks.push(CylinderBlock { rasters, pairs });
    }
    Ok(blocks)
}

/// Flattened view of [`cylinder_blocks`]: the ordered `(raster, raster)`
/// pairs themselves.
pub fn cylinder_pairs(
    n_neurons: usize,
    n: i64,
    m: u32,
    tail_horizon: u32,
) -> Result<impl Iterator<Item = (Raster, Raster)>> {
    let blocks = cylinder_blocks(n_neurons, n, m, tail_horizon)?;
    Ok(blocks.into_iter().flat_map(|block| {
        block
            .pairs
            .into_iter()
            .map(move |(a, b)| (block.rasters[a].clone(), block.rasters[b].clone()))
            .collect::<Vec<_>>()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn spike_times_on_extremal_rasters() {
        let quiet = Raster::omega0(2, 0, 5);
        assert!(quiet.spike_times(0, 3.0, 10).is_empty());

        let saturated = Raster::omega1(1, 0, 5);
        assert_eq!(saturated.spike_times(0, 2.5, 4), vec![-2, -1, 0, 1, 2]);
    }

    #[test]
    fn spike_times_reads_window_bits() {
        let mut r = Raster::omega0(2, 0, 5);
        r.set_bit(1, 1, 1);
        r.set_bit(1, 4, 1);
        assert_eq!(r.spike_times(1, 5.0, 10), vec![1, 4]);
        // strict inequality: a spike exactly at integer t is excluded
        r.set_bit(1, 5, 1);
        assert_eq!(r.spike_times(1, 5.0, 10), vec![1, 4]);
    }

    #[test]
    fn last_reset_basics() {
        let mut r = Raster::omega0(1, 0, 3);
        r.set_bit(0, 1, 1);
        assert_eq!(r.last_reset(0, 3), ResetTime::Time(1));
        assert_eq!(r.last_reset(0, 0), ResetTime::MinusInfinity);

        let quiet = Raster::omega0(3, 0, 4);
        assert_eq!(quiet.last_reset(2, 4), ResetTime::MinusInfinity);

        let mut at_query = Raster::omega0(1, 0, 3);
        at_query.set_bit(0, 3, 1);
        assert_eq!(at_query.last_reset(0, 3), ResetTime::Time(3));

        let saturated = Raster::omega1(2, 0, 4);
        for n in 0..=4 {
            assert_eq!(saturated.last_reset(1, n), ResetTime::Time(n));
        }
    }

    #[test]
    fn last_reset_resolves_periodic_past() {
        let block = vec![vec![0, 1, 0], vec![0, 0, 0]];
        let r = Raster::new(2, 0, 2, Past::Repeat(block));
        // last column of the block abuts the window: times -1, -2, -3 map to
        // columns 2, 1, 0, so neuron 0 last fired at -2.
        assert_eq!(r.last_reset(0, 2), ResetTime::Time(-2));
        assert_eq!(r.last_reset(1, 2), ResetTime::MinusInfinity);
    }

    #[test]
    fn last_reset_monotone_in_query_time() {
        let mut r = Raster::omega0(1, 0, 7);
        for n in [2, 5] {
            r.set_bit(0, n, 1);
        }
        let mut prev = i64::MIN;
        for n in 0..=7 {
            if let ResetTime::Time(t) = r.last_reset(0, n) {
                assert!(t >= prev);
                prev = t;
            }
        }
    }

    #[test]
    fn cylinder_counts_match_formulas() {
        // constant agreement patterns x (explicit tail combinations + 2 extremal)
        let blocks = cylinder_blocks(1, 0, 1, 1).unwrap();
        assert_eq!(blocks.len(), 2);
        let pairs: usize = blocks.iter().map(|b| b.pairs.len()).sum();
        assert_eq!(pairs, 2 * (4 + 2));

        let blocks = cylinder_blocks(2, 0, 0, 1).unwrap();
        assert_eq!(blocks.len(), 4);
        for b in &blocks {
            assert_eq!(b.pairs.len(), 16 + 2);
        }

        // tail_horizon = 0: only the extremal prefix pairs
        let blocks = cylinder_blocks(2, 0, 3, 0).unwrap();
        for b in &blocks {
            assert_eq!(b.pairs.len(), 2);
            assert_eq!(b.rasters.len(), 2);
        }
    }

    #[test]
    fn cylinder_pairs_agree_on_the_window() {
        for (raster, other) in cylinder_pairs(2, 0, 1, 2).unwrap() {
            for t in -1..=0 {
                for k in 0..2 {
                    assert_eq!(raster.bit(k, t), other.bit(k, t));
                }
            }
        }
    }

    #[test]
    fn cylinder_guard_fires() {
        assert!(matches!(
            cylinder_blocks(4, 0, 0, 7),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn read_rejects_bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");

        std::fs::write(&path, "GIFRASTER 1\nneurons 2\nwindow 0 1\npast empty\n101\n01\n").unwrap();
        assert!(matches!(Raster::read(&path), Err(Error::BadBitChar { line: 5, .. })));

        std::fs::write(&path, "GIFRASTER 1\nneurons 2\nwindow 3 1\npast empty\n").unwrap();
        assert!(matches!(Raster::read(&path), Err(Error::MalformedHeader(_))));

        std::fs::write(&path, "GIFRASTER 1\nneurons 2\nwindow 0 2\npast empty\n01\n10\n").unwrap();
        assert!(matches!(Raster::read(&path), Err(Error::WindowMismatch { expected: 3, got: 2 })));
    }

    proptest! {
        #[test]
        fn write_read_round_trip(
            n_neurons in 1usize..5,
            n0 in -8i64..8,
            len in 1i64..12,
            allones in any::<bool>(),
            seed in any::<u64>(),
        ) {
            let past = if allones { Past::AllOnes } else { Past::Empty };
            let mut r = Raster::new(n_neurons, n0, n0 + len - 1, past);
            let mut state = seed | 1;
            for n in n0..=(n0 + len - 1) {
                for k in 0..n_neurons {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    r.set_bit(k, n, ((state >> 62) & 1) as u8);
                }
            }
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("r.txt");
            r.write(&path).unwrap();
            let back = Raster::read(&path).unwrap();
            prop_assert_eq!(r, back);
        }
    }
}
