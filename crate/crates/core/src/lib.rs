//! Frequency, frequent-item and quantile sketches for streams with bounded
//! deletions.
//!
//! A stream is a sequence of `+1`/`-1` updates over a universe `[0, 2^L)`.
//! With `I` insertions and `D` deletions it is alpha-bounded when
//! `D <= (1 - 1/alpha) I`. The counter-based sketches here
//! ([`SpaceSavingSketch`] under three policies) keep `O(alpha / epsilon)`
//! counters and estimate every frequency within `epsilon (I - D)`.
//! [`LinearSketch`] provides the Count-Min and Count-Median baselines, and
//! [`dyadic`] stacks either family into a rank and quantile sketch.
//!
//! ```
//! use bounded_sketch::{SketchConfig, SketchPolicy, SpaceSavingSketch};
//!
//! let config = SketchConfig::guaranteed(0.1, 2.0, SketchPolicy::ActiveDelete).unwrap();
//! let mut sketch = SpaceSavingSketch::new(config).unwrap();
//! for x in [7, 7, 7, 3] {
//!     sketch.insert(x);
//! }
//! sketch.delete(3).unwrap();
//! assert_eq!(sketch.query(7), 3);
//! assert_eq!(sketch.query(3), 0);
//! ```

pub mod dyadic;
pub mod error;
pub mod eval;
pub mod heap;
pub mod linear;
pub mod oracle;
pub mod par;
pub mod rng;
pub mod spacesaving;
pub mod stream;

/// Universe element.
pub type ItemId = u64;

pub use dyadic::{DcsSketch, DssSketch, DyadicSketch, FrequencyEstimator};
pub use error::{Result, SketchError};
pub use heap::{CounterEntry, DualHeapIndex};
pub use linear::{LinearKind, LinearSketch};
pub use oracle::ExactCounter;
pub use par::Execution;
pub use spacesaving::{capacity_for, SketchConfig, SketchPolicy, SpaceSavingSketch, ViolationMode};
pub use stream::{OpKind, Stream, StreamOp};
