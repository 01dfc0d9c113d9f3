use std::time::Instant;

use super::sketch::SketchSpec;
use crate::error::{invalid, Result};
use crate::stream::Stream;

const BATCHES: usize = 5;

/// Median over five fresh sketches of wall-clock nanoseconds per update,
/// feeding `stream` one op at a time.
pub fn bench_update(spec: &SketchSpec, stream: &Stream, seed: u64) -> Result<f64> {
    if stream.is_empty() {
        return Err(invalid("cannot time an empty stream"));
    }
    let mut samples = Vec::with_capacity(BATCHES);
    for _ in 0..BATCHES {
        let mut sketch = spec.build(stream.universe_bits, stream.alpha, seed)?;
        let start = Instant::now();
        for &op in &stream.ops {
            sketch.update(op)?;
        }
        let elapsed = start.elapsed().as_nanos() as f64;
        std::hint::black_box(&sketch);
        samples.push(elapsed / stream.len() as f64);
    }
    samples.sort_by(f64::total_cmp);
    Ok(samples[BATCHES / 2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::SketchKind;
    use crate::stream::StreamOp;

    #[test]
    fn positive_and_finite() {
        let ops = (0..10_000).map(|i| StreamOp::insert(i % 97)).collect();
        let stream = Stream::new(8, 1.0, 0, ops);
        for kind in [SketchKind::Ss, SketchKind::Ssp, SketchKind::Cm, SketchKind::Dss] {
            let ns = bench_update(&SketchSpec::new(kind, 0.05), &stream, 1).unwrap();
            assert!(ns.is_finite() && ns > 0.0, "{kind}: {ns}");
        }
        assert!(bench_update(&SketchSpec::new(SketchKind::Ss, 0.1), &Stream::new(8, 1.0, 0, vec![]), 1).is_err());
    }
}
