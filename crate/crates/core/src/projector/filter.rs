use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RampKind {
    #[default]
    RamLak,
    /// Ram-Lak with a cosine roll-off to zero at Nyquist.
    Cosine,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    pub kind: RampKind,
    /// Zero-padding factor applied to each detector row; at least 2.
    pub padding: usize,
}

impl Default for FilterSpec {
    fn default() -> Self {
        FilterSpec {
            kind: RampKind::RamLak,
            padding: 2,
        }
    }
}

/// Band-limited ramp filter applied by FFT to zero-padded rows.
///
/// The transfer function is the DFT of the sampled spatial kernel
/// (`1/(4Δ²)` at 0, `−1/(n²π²Δ²)` at odd `n`), which keeps the DC response
/// exact instead of sampling `|ω|` directly.
pub struct RampFilter {
    n: usize,
    n_pad: usize,
    transfer: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl RampFilter {
    pub fn new(n: usize, du: f64, spec: FilterSpec) -> Result<Self> {
        if spec.padding < 2 {
            return Err(Error::InvalidInput(
                "filter padding factor must be >= 2".into(),
            ));
        }
        if n == 0 || !(du > 0.0) {
            return Err(Error::InvalidInput("empty detector row".into()));
        }
        let n_pad = (spec.padding * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n_pad);
        let inverse = planner.plan_fft_inverse(n_pad);

        let mut kernel: Vec<Complex<f64>> = (0..n_pad)
            .map(|k| {
                let m = if k <= n_pad / 2 {
                    k as i64
                } else {
                    k as i64 - n_pad as i64
                };
                Complex::new(du * ramp_tap(m, du), 0.0)
            })
            .collect();
        forward.process(&mut kernel);
        let transfer = kernel
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let window = match spec.kind {
                    RampKind::RamLak => 1.0,
                    RampKind::Cosine => {
                        let f = k.min(n_pad - k) as f64 / n_pad as f64;
                        (PI * f).cos()
                    }
                };
                c.re * window / n_pad as f64
            })
            .collect();
        Ok(RampFilter {
            n,
            n_pad,
            transfer,
            forward,
            inverse,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Filters one row in place. `scratch` is resized as needed.
    pub fn apply(&self, row: &mut [f64], scratch: &mut Vec<Complex<f64>>) {
        debug_assert_eq!(row.len(), self.n);
        scratch.clear();
        scratch.extend(row.iter().map(|&v| Complex::new(v, 0.0)));
        scratch.resize(self.n_pad, Complex::new(0.0, 0.0));
        self.forward.process(scratch);
        for (c, h) in scratch.iter_mut().zip(&self.transfer) {
            *c *= *h;
        }
        self.inverse.process(scratch);
        for (r, c) in row.iter_mut().zip(scratch.iter()) {
            *r = c.re;
        }
    }
}

/// Spatial Ram-Lak kernel at integer offset `m` (samples).
pub fn ramp_tap(m: i64, du: f64) -> f64 {
    if m == 0 {
        1.0 / (4.0 * du * du)
    } else if m % 2 != 0 {
        -1.0 / ((m * m) as f64 * PI * PI * du * du)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // direct linear convolution with the spatial kernel
    fn direct(row: &[f64], du: f64) -> Vec<f64> {
        (0..row.len())
            .map(|i| {
                (0..row.len())
                    .map(|j| du * ramp_tap(i as i64 - j as i64, du) * row[j])
                    .sum()
            })
            .collect()
    }

    #[test]
    fn fft_filter_matches_direct_convolution() {
        let n = 37;
        let du = 0.7;
        let row: Vec<f64> = (0..n).map(|i| ((i as f64) * 0.37).sin() + 1.0).collect();
        let f = RampFilter::new(n, du, FilterSpec::default()).unwrap();
        let mut out = row.clone();
        f.apply(&mut out, &mut Vec::new());
        let want = direct(&row, du);
        for (a, b) in out.iter().zip(&want) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn shift_equivariance_in_the_interior() {
        let n = 64;
        let du = 0.5;
        let bump = |c: f64| -> Vec<f64> {
            (0..n)
                .map(|i| (-((i as f64 - c) / 3.0).powi(2)).exp())
                .collect()
        };
        let f = RampFilter::new(n, du, FilterSpec::default()).unwrap();
        let mut a = bump(30.0);
        let mut b = bump(35.0);
        let mut s = Vec::new();
        f.apply(&mut a, &mut s);
        f.apply(&mut b, &mut s);
        for i in 10..50 {
            assert!((a[i] - b[i + 5]).abs() < 1e-12);
        }
    }

    #[test]
    fn padding_below_two_rejected() {
        assert!(RampFilter::new(
            8,
            1.0,
            FilterSpec {
                kind: RampKind::RamLak,
                padding: 1
            }
        )
        .is_err());
    }

    #[test]
    fn cosine_window_damps_high_frequencies() {
        let n = 32;
        let row: Vec<f64> = (0..n)
            .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let ram = RampFilter::new(n, 1.0, FilterSpec::default()).unwrap();
        let cos = RampFilter::new(
            n,
            1.0,
            FilterSpec {
                kind: RampKind::Cosine,
                padding: 2,
            },
        )
        .unwrap();
        let (mut a, mut b) = (row.clone(), row);
        ram.apply(&mut a, &mut Vec::new());
        cos.apply(&mut b, &mut Vec::new());
        let e = |v: &[f64]| v[8..24].iter().map(|x| x * x).sum::<f64>();
        assert!(e(&b) < 0.1 * e(&a));
    }
}
