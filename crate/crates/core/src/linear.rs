//! Turnstile linear sketches: Count-Min and Count-Median.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SketchError};
use crate::spacesaving::{tolerant_ceil, validate_epsilon};
use crate::ItemId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinearKind {
    CountMin,
    CountMedian,
}

impl LinearKind {
    pub fn short_name(self) -> &'static str {
        match self {
            LinearKind::CountMin => "cm",
            LinearKind::CountMedian => "cmedian",
        }
    }
}

impl fmt::Display for LinearKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinearKind::CountMin => "CountMin",
            LinearKind::CountMedian => "CountMedian",
        })
    }
}

/// Multiply-add-shift hash: `((a * x + b) mod 2^128) >> 64`, which is
/// pairwise independent over 64-bit keys for uniformly random `a`, `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MultiplyShift {
    a: u128,
    b: u128,
}

impl MultiplyShift {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        Self { a: rng.random(), b: rng.random() }
    }

    #[inline]
    pub fn hash(&self, x: ItemId) -> u64 {
        (self.a.wrapping_mul(x as u128).wrapping_add(self.b) >> 64) as u64
    }

    /// Maps `x` into `[0, range)` by multiply-high range reduction.
    #[inline]
    pub fn bucket(&self, x: ItemId, range: usize) -> usize {
        ((self.hash(x) as u128 * range as u128) >> 64) as usize
    }

    /// `+1` or `-1` from the top bit.
    #[inline]
    pub fn sign(&self, x: ItemId) -> i64 {
        if self.hash(x) >> 63 == 0 {
            1
        } else {
            -1
        }
    }
}

/// Table shape for the given accuracy target.
///
/// Count-Min uses width `ceil(e / epsilon)` and depth `ceil(ln(1/delta))`;
/// Count-Median uses width `ceil(3 / epsilon)` and the smallest odd depth
/// `>= ceil(log2(1/delta))`.
pub fn dimensions(kind: LinearKind, epsilon: f64, delta: f64) -> Result<(usize, usize)> {
    validate_epsilon(epsilon)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must be in (0, 1), got {delta}")));
    }
    let (width, depth) = match kind {
        LinearKind::CountMin => (
            tolerant_ceil(std::f64::consts::E / epsilon),
            tolerant_ceil((1.0 / delta).ln()),
        ),
        LinearKind::CountMedian => {
            let d = tolerant_ceil((1.0 / delta).log2()).max(1.0);
            (tolerant_ceil(3.0 / epsilon), if d % 2.0 == 0.0 { d + 1.0 } else { d })
        }
    };
    Ok(((width as usize).max(1), (depth as usize).max(1)))
}

/// A `depth x width` table of signed counters with seeded row hashes.
#[derive(Debug, Clone)]
pub struct LinearSketch {
    kind: LinearKind,
    depth: usize,
    width: usize,
    table: Vec<i64>,
    rows: Vec<MultiplyShift>,
    signs: Vec<MultiplyShift>,
    seed: u64,
}

impl LinearSketch {
    pub fn new(kind: LinearKind, epsilon: f64, delta: f64, seed: u64) -> Result<Self> {
        let (width, depth) = dimensions(kind, epsilon, delta)?;
        Self::with_dimensions(kind, depth, width, seed)
    }

    pub fn with_dimensions(kind: LinearKind, depth: usize, width: usize, seed: u64) -> Result<Self> {
        if depth == 0 || width == 0 {
            return Err(invalid("linear sketch needs at least one row and one column"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..depth).map(|_| MultiplyShift::random(&mut rng)).collect();
        let signs = match kind {
            LinearKind::CountMin => Vec::new(),
            LinearKind::CountMedian => (0..depth).map(|_| MultiplyShift::random(&mut rng)).collect(),
        };
        Ok(Self { kind, depth, width, table: vec![0; depth * width], rows, signs, seed })
    }

    pub fn kind(&self) -> LinearKind {
        self.kind
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn cells(&self) -> usize {
        self.depth * self.width
    }

    pub fn space_bits(&self) -> u64 {
        self.cells() as u64 * 64
    }

    pub fn table(&self) -> &[i64] {
        &self.table
    }

    /// Column that `item` hashes to in `row`.
    pub fn row_bucket(&self, row: usize, item: ItemId) -> usize {
        self.rows[row].bucket(item, self.width)
    }

    #[inline]
    fn cell(&self, row: usize, item: ItemId) -> usize {
        row * self.width + self.rows[row].bucket(item, self.width)
    }

    pub fn update(&mut self, item: ItemId, weight: i64) -> Result<()> {
        if weight != 1 && weight != -1 {
            return Err(SketchError::InvalidWeight(weight));
        }
        for row in 0..self.depth {
            let idx = self.cell(row, item);
            let delta = match self.kind {
                LinearKind::CountMin => weight,
                LinearKind::CountMedian => weight * self.signs[row].sign(item),
            };
            self.table[idx] += delta;
        }
        Ok(())
    }

    /// Count-Min: row minimum clamped at zero. Count-Median: median of the
    /// sign-corrected row cells.
    pub fn query(&self, item: ItemId) -> i64 {
        match self.kind {
            LinearKind::CountMin => (0..self.depth)
                .map(|row| self.table[self.cell(row, item)])
                .min()
                .unwrap_or(0)
                .max(0),
            LinearKind::CountMedian => {
                let mut values: Vec<i64> = (0..self.depth)
                    .map(|row| self.signs[row].sign(item) * self.table[self.cell(row, item)])
                    .collect();
                let mid = values.len() / 2;
                let (_, median, _) = values.select_nth_unstable(mid);
                *median
            }
        }
    }
}
