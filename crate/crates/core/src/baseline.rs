//! Metal-trace linear interpolation, the comparison method for stage 1.

use ndarray::{Array3, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sinogram::Sinogram;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TraceReport {
    /// Samples flagged as metal trace.
    pub trace_samples: usize,
    /// Detector rows left untouched because the trace covered them entirely.
    pub skipped_rows: usize,
}

/// Replaces every sample above `threshold` by linear interpolation in `u`
/// between the nearest untouched measured samples of the same row and view.
///
/// Only measured columns take part. A trace run touching the end of the
/// measured block is filled with the nearest untouched value.
pub fn interpolate_metal_trace(sino: &Sinogram, threshold: f64) -> Result<(Sinogram, TraceReport)> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "metal threshold must be positive, got {threshold}"
        )));
    }
    let trace = sino.data.mapv(|v| v > threshold);
    interpolate_trace(sino, &trace)
}

/// Linear interpolation across an arbitrary trace mask shaped like the
/// sinogram data `(view, v, u)`.
pub fn interpolate_trace(sino: &Sinogram, trace: &Array3<bool>) -> Result<(Sinogram, TraceReport)> {
    if trace.dim() != sino.data.dim() {
        return Err(Error::Shape(
            "trace mask does not match the sinogram".into(),
        ));
    }
    sino.check_finite()?;
    let cols: Vec<usize> = (0..sino.grid.n_u).filter(|&j| sino.measured[j]).collect();
    let mut out = sino.clone();
    let counts: Vec<(usize, usize)> = out
        .data
        .axis_iter_mut(Axis(0))
        .into_par_iter()
        .zip(trace.axis_iter(Axis(0)).into_par_iter())
        .map(|(mut view, mask)| {
            let (mut trace, mut skipped) = (0, 0);
            for (mut row, mrow) in view.axis_iter_mut(Axis(0)).zip(mask.axis_iter(Axis(0))) {
                let hit: Vec<bool> = cols.iter().map(|&j| mrow[j]).collect();
                let n_hit = hit.iter().filter(|&&h| h).count();
                if n_hit == 0 {
                    continue;
                }
                if n_hit == cols.len() {
                    skipped += 1;
                    continue;
                }
                trace += n_hit;
                let mut a = 0;
                while a < cols.len() {
                    if !hit[a] {
                        a += 1;
                        continue;
                    }
                    let mut b = a;
                    while b < cols.len() && hit[b] {
                        b += 1;
                    }
                    // run of trace samples at positions a..b
                    let left = a.checked_sub(1).map(|i| (cols[i], row[cols[i]]));
                    let right = (b < cols.len()).then(|| (cols[b], row[cols[b]]));
                    for &j in &cols[a..b] {
                        row[j] = match (left, right) {
                            (Some((j0, v0)), Some((j1, v1))) => {
                                let t = (j - j0) as f64 / (j1 - j0) as f64;
                                v0 + t * (v1 - v0)
                            }
                            (Some((_, v)), None) | (None, Some((_, v))) => v,
                            (None, None) => unreachable!("row has untouched samples"),
                        };
                    }
                    a = b;
                }
            }
            (trace, skipped)
        })
        .collect();
    let report = counts
        .iter()
        .fold(TraceReport::default(), |r, &(t, s)| TraceReport {
            trace_samples: r.trace_samples + t,
            skipped_rows: r.skipped_rows + s,
        });
    if report.skipped_rows > 0 {
        log::warn!(
            "{} detector rows lie entirely inside the metal trace; left uninterpolated",
            report.skipped_rows
        );
    }
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ScanGeometry;
    use crate::sinogram::subsample_offset;

    fn small() -> ScanGeometry {
        ScanGeometry {
            n_views: 6,
            n_v: 2,
            ..ScanGeometry::desk()
        }
    }

    #[test]
    fn nothing_above_threshold_is_identity() {
        let g = small();
        let s = Sinogram::from_fn(g, |b, u, _| 1.0 + 0.1 * b + 0.01 * u);
        let (out, rep) = interpolate_metal_trace(&s, 100.0).unwrap();
        assert_eq!(out, s);
        assert_eq!(rep, TraceReport::default());
    }

    #[test]
    fn rectangular_trace_on_a_ramp_is_restored() {
        let g = small();
        let ramp = Sinogram::from_fn(g, |b, u, v| 2.0 + 0.01 * u + 0.3 * b + v);
        let mut s = subsample_offset(&ramp, &g).unwrap();
        for i in 1..4 {
            for j in 150..170 {
                for k in 0..2 {
                    s.data[[i, k, j]] = 50.0;
                }
            }
        }
        let (out, rep) = interpolate_metal_trace(&s, 10.0).unwrap();
        assert_eq!(rep.trace_samples, 3 * 20 * 2);
        let expected = subsample_offset(&ramp, &g).unwrap();
        for (a, b) in out.data.iter().zip(expected.data.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fully_covered_row_is_skipped() {
        let g = small();
        let mut s = Sinogram::from_fn(g, |_, _, _| 1.0);
        s.data.index_axis_mut(Axis(0), 2).fill(9.0);
        let (out, rep) = interpolate_metal_trace(&s, 5.0).unwrap();
        assert_eq!(rep.skipped_rows, 2);
        assert_eq!(out, s);
        assert!(interpolate_metal_trace(&s, 0.0).is_err());
    }

    #[test]
    fn trace_at_the_block_edge_takes_the_nearest_value() {
        let g = small();
        let mut s = Sinogram::from_fn(g, |_, _, _| 1.0);
        let last = g.n_u - 1;
        s.data[[0, 0, last]] = 7.0;
        s.data[[0, 0, last - 1]] = 7.0;
        let (out, _) = interpolate_metal_trace(&s, 5.0).unwrap();
        assert_eq!(out.data[[0, 0, last]], 1.0);
    }
}
