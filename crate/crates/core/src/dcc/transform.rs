//! Moment transform of the mid-plane fan-beam sinogram along a line that
//! misses the object, and the consistency cost built on it.
//!
//! For a line `L = {y = y0}` outside the object, every point `(x, y0)` is
//! seen by the source arc `β ∈ [β_l, β_r]`, `β_l = acos(y0/R)`,
//! `β_r = 2π − β_l`. The transform
//!
//! ```text
//! T_k(x) = ∫ p(β, u_β)·R²·(R sinβ + x)^k / (√(R² + u_β²)·(R cosβ − y0)^{k+1}) dβ
//! ```
//!
//! with `u_β` the detector coordinate of `(x, y0)` is a polynomial of
//! degree `k` in `x` when `p` is a consistent set of line integrals.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::corrector::CorrectorParams;
use crate::error::{Error, Result};
use crate::geometry::{DetectorGrid, ScanGeometry};
use crate::sinogram::Sinogram;

fn default_n_x() -> usize {
    64
}

fn default_support_fraction() -> f64 {
    0.01
}

fn default_quantile() -> f64 {
    0.5
}

fn default_margin() -> usize {
    2
}

fn default_substeps() -> usize {
    8
}

fn default_smoothing() -> Option<usize> {
    Some(8)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyConfig {
    /// Height of the line; chosen automatically when absent.
    #[serde(default)]
    pub y0: Option<f64>,
    /// Highest order whose derivative enters the cost.
    #[serde(default)]
    pub k_max: u32,
    #[serde(default = "default_n_x")]
    pub n_x: usize,
    /// Half-width of the x-grid; the widest range the detector admits
    /// when absent.
    #[serde(default)]
    pub x_half_width: Option<f64>,
    /// Corrector threshold Λ; a quantile of the object rays when absent.
    #[serde(default)]
    pub threshold: Option<f64>,
    /// Quantile of the above-support mid-plane values used for Λ.
    #[serde(default = "default_quantile")]
    pub threshold_quantile: f64,
    /// Fraction of the sinogram maximum below which a ray counts as empty.
    #[serde(default = "default_support_fraction")]
    pub support_fraction: f64,
    /// Extra detector samples between the object and the line.
    #[serde(default = "default_margin")]
    pub margin_samples: usize,
    /// Quadrature points per view interval in the β integral.
    #[serde(default = "default_substeps")]
    pub beta_substeps: usize,
    /// Degree of the polynomial `T` is projected on before the cost is
    /// taken; no smoothing when absent.
    #[serde(default = "default_smoothing")]
    pub smoothing_degree: Option<usize>,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        ConsistencyConfig {
            y0: None,
            k_max: 0,
            n_x: default_n_x(),
            x_half_width: None,
            threshold: None,
            threshold_quantile: default_quantile(),
            support_fraction: default_support_fraction(),
            margin_samples: default_margin(),
            beta_substeps: default_substeps(),
            smoothing_degree: default_smoothing(),
        }
    }
}

impl ConsistencyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_x < 3 {
            return Err(Error::Config(
                "consistency x-grid needs at least 3 samples".into(),
            ));
        }
        if !(self.support_fraction > 0.0 && self.support_fraction < 1.0) {
            return Err(Error::Config("support_fraction must lie in (0, 1)".into()));
        }
        if !(self.threshold_quantile > 0.0 && self.threshold_quantile < 1.0) {
            return Err(Error::Config(
                "threshold_quantile must lie in (0, 1)".into(),
            ));
        }
        if self.beta_substeps == 0 {
            return Err(Error::Config("beta_substeps must be at least 1".into()));
        }
        if self.k_max > 3 {
            return Err(Error::Config("k_max above 3 is not supported".into()));
        }
        if let Some(t) = self.threshold {
            if !(t > 0.0) {
                return Err(Error::Config("threshold must be positive".into()));
            }
        }
        Ok(())
    }
}

/// One detector row over all views, with its geometry.
#[derive(Debug, Clone)]
pub struct MidPlane {
    pub data: Array2<f64>,
    pub geometry: ScanGeometry,
    pub grid: DetectorGrid,
    pub measured: Vec<bool>,
}

impl MidPlane {
    /// The `v = 0` slice of a sinogram.
    pub fn from_sinogram(sino: &Sinogram) -> Self {
        MidPlane {
            data: sino.mid_plane(),
            geometry: sino.geometry,
            grid: sino.grid,
            measured: sino.measured.clone(),
        }
    }

    /// Detector row `k` of a sinogram.
    pub fn from_row(sino: &Sinogram, k: usize) -> Result<Self> {
        if k >= sino.grid.n_v {
            return Err(Error::InvalidInput(format!("row {k} out of range")));
        }
        Ok(MidPlane {
            data: sino.row_slice(k).to_owned(),
            geometry: sino.geometry,
            grid: sino.grid,
            measured: sino.measured.clone(),
        })
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }

    /// Linear interpolation in both β (wrapping) and u; zero off the
    /// measured columns.
    fn sample(&self, beta: f64, u: f64) -> f64 {
        let n = self.data.nrows();
        let f = beta / self.geometry.delta_beta();
        let i0 = f.floor();
        let wb = f - i0;
        let i0 = (i0 as isize).rem_euclid(n as isize) as usize;
        let i1 = (i0 + 1) % n;
        let fu = self.grid.u_index(u);
        let j0 = fu.floor();
        let wu = fu - j0;
        let j0 = j0 as isize;
        let mut acc = 0.0;
        for (j, w) in [(j0, 1.0 - wu), (j0 + 1, wu)] {
            if j < 0 || j as usize >= self.grid.n_u || !self.measured[j as usize] {
                continue;
            }
            let j = j as usize;
            acc += w * ((1.0 - wb) * self.data[[i0, j]] + wb * self.data[[i1, j]]);
        }
        acc
    }

    /// Line integral along `y = y`, read from the two views whose source
    /// lies on the line.
    pub fn line_value(&self, y: f64) -> f64 {
        let g = &self.geometry;
        let r = g.source_radius;
        let beta_l = (y / r).acos();
        [beta_l, std::f64::consts::TAU - beta_l]
            .iter()
            .map(|&b| {
                let (u, _, _) = g.project(b, 0.0, y, 0.0);
                self.sample(b, u).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// A resolved line and x-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyLine {
    pub y0: f64,
    pub xs: Vec<f64>,
}

impl ConsistencyLine {
    pub fn beta_range(&self, geometry: &ScanGeometry) -> (f64, f64) {
        let beta_l = (self.y0 / geometry.source_radius).acos();
        (beta_l, std::f64::consts::TAU - beta_l)
    }

    pub fn dx(&self) -> f64 {
        self.xs[1] - self.xs[0]
    }
}

/// Chooses `y0` and the x-grid for a mid-plane sinogram.
///
/// Without an explicit `y0` the candidate heights are scanned outward from
/// the center, alternating sides, until a line's integral drops below
/// `support_fraction` of the sinogram maximum; the line is then pushed
/// `margin_samples` detector samples further out.
pub fn resolve_line(mid: &MidPlane, cfg: &ConsistencyConfig) -> Result<ConsistencyLine> {
    cfg.validate()?;
    let g = &mid.geometry;
    let roi = g.roi_radius();
    let limit = 0.9 * roi;
    let level = cfg.support_fraction * mid.max_value();
    let du = mid.grid.du;
    let y0 = match cfg.y0 {
        Some(y0) => {
            if !(y0.abs() < limit) {
                return Err(Error::Config(format!(
                    "y0 = {y0} must lie inside the ROI (|y0| < {limit:.2})"
                )));
            }
            let v = mid.line_value(y0);
            if v > level {
                return Err(Error::InvalidInput(format!(
                    "line y0 = {y0} intersects the object (line integral {v:.4})"
                )));
            }
            y0
        }
        None => {
            let steps = (limit / du) as usize;
            let found = (0..=steps)
                .flat_map(|k| [k as f64 * du, -(k as f64) * du])
                .find(|&y| mid.line_value(y) <= level)
                .ok_or_else(|| {
                    Error::InvalidInput("no line inside the ROI clears the object".into())
                })?;
            let sign = if found < 0.0 { -1.0 } else { 1.0 };
            let y0 = found + sign * cfg.margin_samples as f64 * du;
            if y0.abs() >= limit {
                return Err(Error::InvalidInput(format!(
                    "object leaves no clear line inside the ROI (first clear at y = {found:.2})"
                )));
            }
            y0
        }
    };
    let admitted = ((0.98 * roi).powi(2) - y0 * y0).sqrt();
    let half = cfg.x_half_width.unwrap_or(admitted);
    if !(half > 0.0) {
        return Err(Error::Config("x-grid half-width must be positive".into()));
    }
    let n = cfg.n_x;
    let xs = (0..n)
        .map(|i| -half + 2.0 * half * i as f64 / (n - 1) as f64)
        .collect();
    Ok(ConsistencyLine { y0, xs })
}

#[derive(Debug, Clone, Copy)]
struct Tap {
    i0: usize,
    i1: usize,
    wb: f64,
    j0: usize,
    wu: f64,
    coef: f64,
}

/// Quadrature taps of `T_k` on a fixed line, reusable across corrector
/// evaluations.
///
/// The β integral uses the midpoint rule on `substeps` points per view
/// interval, reading the sinogram bilinearly in `(β, u)`.
#[derive(Debug, Clone)]
pub struct ConsistencyOperator {
    pub k: u32,
    pub line: ConsistencyLine,
    taps: Vec<Vec<Tap>>,
    /// Orthonormal polynomial basis on the x-grid used to smooth `T`.
    basis: Option<Vec<Vec<f64>>>,
}

impl ConsistencyOperator {
    pub fn new(mid: &MidPlane, line: &ConsistencyLine, k: u32, substeps: usize) -> Result<Self> {
        let g = &mid.geometry;
        let grid = &mid.grid;
        let r = g.source_radius;
        if !(line.y0.abs() < r) {
            return Err(Error::Config("|y0| must be smaller than R".into()));
        }
        if substeps == 0 {
            return Err(Error::Config("beta substeps must be at least 1".into()));
        }
        if mid.data.dim() != (g.n_views, grid.n_u) {
            return Err(Error::Shape("mid-plane does not match its geometry".into()));
        }
        let (beta_l, beta_r) = line.beta_range(g);
        let db = g.delta_beta();
        let m = (((beta_r - beta_l) / db) * substeps as f64).ceil() as usize;
        let h = (beta_r - beta_l) / m as f64;
        let n_views = g.n_views;
        let mut taps = Vec::with_capacity(line.xs.len());
        for &x in &line.xs {
            let mut row = Vec::with_capacity(m);
            for n in 0..m {
                let b = beta_l + (n as f64 + 0.5) * h;
                let (s, c) = b.sin_cos();
                let u = -r * (x * c + line.y0 * s) / (r + x * s - line.y0 * c);
                let fu = grid.u_index(u);
                let j0 = fu.floor();
                let wu = fu - j0;
                let j0 = j0 as isize;
                let inside =
                    |j: isize| j >= 0 && (j as usize) < grid.n_u && mid.measured[j as usize];
                if u.abs() > g.ell || !inside(j0) || (wu > 0.0 && !inside(j0 + 1)) {
                    return Err(Error::XGridTooWide { x, u });
                }
                let fb = b / db;
                let i0 = fb.floor();
                let wb = fb - i0;
                let i0 = (i0 as isize).rem_euclid(n_views as isize) as usize;
                let kernel = r * r * (r * s + x).powi(k as i32)
                    / ((r * r + u * u).sqrt() * (r * c - line.y0).powi(k as i32 + 1));
                row.push(Tap {
                    i0,
                    i1: (i0 + 1) % n_views,
                    wb,
                    j0: j0 as usize,
                    wu,
                    coef: h * kernel,
                });
            }
            taps.push(row);
        }
        Ok(ConsistencyOperator {
            k,
            line: line.clone(),
            taps,
            basis: None,
        })
    }

    /// Projects `T` onto polynomials of degree `≤ degree` in x before
    /// differentiating.
    pub fn with_smoothing(mut self, degree: Option<usize>) -> Result<Self> {
        self.basis = match degree {
            None => None,
            Some(d) if d + 1 >= self.line.xs.len() => {
                return Err(Error::Config(format!(
                    "smoothing degree {d} needs more than {} x samples",
                    d + 1
                )))
            }
            Some(d) => Some(orthonormal_polynomials(&self.line.xs, d)),
        };
        Ok(self)
    }

    /// `T_k`, smoothed when a basis is set.
    pub fn transform(&self, p: ArrayView2<'_, f64>) -> Vec<f64> {
        let t = self.apply(p);
        match &self.basis {
            None => t,
            Some(basis) => {
                let mut out = vec![0.0; t.len()];
                for q in basis {
                    let c: f64 = q.iter().zip(&t).map(|(a, b)| a * b).sum();
                    for (o, qi) in out.iter_mut().zip(q) {
                        *o += c * qi;
                    }
                }
                out
            }
        }
    }

    /// Sinogram samples the operator reads, as `(view, u_index)` pairs.
    pub fn footprint(&self) -> Vec<(usize, usize)> {
        let mut v: Vec<(usize, usize)> = self
            .taps
            .iter()
            .flatten()
            .flat_map(|t| {
                [
                    (t.i0, t.j0),
                    (t.i1, t.j0),
                    (t.i0, t.j0 + 1),
                    (t.i1, t.j0 + 1),
                ]
            })
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// `T_k` of a `(view, u)` array on the x-grid.
    pub fn apply(&self, p: ArrayView2<'_, f64>) -> Vec<f64> {
        self.taps
            .iter()
            .map(|row| {
                row.iter()
                    .map(|t| {
                        let a = (1.0 - t.wb) * p[[t.i0, t.j0]] + t.wb * p[[t.i1, t.j0]];
                        let b = if t.wu > 0.0 {
                            (1.0 - t.wb) * p[[t.i0, t.j0 + 1]] + t.wb * p[[t.i1, t.j0 + 1]]
                        } else {
                            0.0
                        };
                        t.coef * ((1.0 - t.wu) * a + t.wu * b)
                    })
                    .sum()
            })
            .collect()
    }

    /// `∫ |∂^{k+1}/∂x^{k+1} T_k[p]|² dx`.
    pub fn cost(&self, p: ArrayView2<'_, f64>) -> f64 {
        let dx = self.line.dx();
        let mut d = self.transform(p);
        for _ in 0..=self.k {
            d = gradient(&d, dx);
        }
        trapezoid_sq(&d, dx)
    }
}

/// Legendre polynomials on `xs`, orthonormalized by modified Gram–Schmidt.
fn orthonormal_polynomials(xs: &[f64], degree: usize) -> Vec<Vec<f64>> {
    let (lo, hi) = (xs[0], xs[xs.len() - 1]);
    let t: Vec<f64> = xs.iter().map(|x| (2.0 * x - lo - hi) / (hi - lo)).collect();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(degree + 1);
    let mut prev = vec![1.0; xs.len()];
    let mut cur = t.clone();
    for n in 0..=degree {
        let mut v = match n {
            0 => prev.clone(),
            1 => cur.clone(),
            _ => {
                let next: Vec<f64> = t
                    .iter()
                    .zip(prev.iter().zip(&cur))
                    .map(|(x, (p, c))| ((2 * n - 1) as f64 * x * c - (n - 1) as f64 * p) / n as f64)
                    .collect();
                prev = std::mem::replace(&mut cur, next.clone());
                next
            }
        };
        for q in &basis {
            let c: f64 = q.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= c * qi;
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        basis.push(v.into_iter().map(|a| a / norm).collect());
    }
    basis
}

/// Central differences inside, one-sided at the ends.
pub(crate) fn gradient(f: &[f64], dx: f64) -> Vec<f64> {
    let n = f.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (f[1] - f[0]) / dx
            } else if i + 1 == n {
                (f[n - 1] - f[n - 2]) / dx
            } else {
                (f[i + 1] - f[i - 1]) / (2.0 * dx)
            }
        })
        .collect()
}

fn trapezoid_sq(f: &[f64], dx: f64) -> f64 {
    let n = f.len();
    f.iter()
        .enumerate()
        .map(|(i, v)| {
            if i == 0 || i + 1 == n {
                0.5 * v * v
            } else {
                v * v
            }
        })
        .sum::<f64>()
        * dx
}

/// `T_k` of a mid-plane sinogram sampled on the line's x-grid.
pub fn consistency_transform(
    mid: &MidPlane,
    k: u32,
    line: &ConsistencyLine,
    cfg: &ConsistencyConfig,
) -> Result<Vec<f64>> {
    Ok(ConsistencyOperator::new(mid, line, k, cfg.beta_substeps)?.apply(mid.data.view()))
}

/// Consistency cost of the corrected mid-plane: the zero-order condition
/// plus any higher orders up to `k_max`.
pub fn consistency_cost(
    params: Option<&CorrectorParams>,
    mid: &MidPlane,
    line: &ConsistencyLine,
    cfg: &ConsistencyConfig,
) -> Result<f64> {
    let data = match params {
        Some(c) => {
            c.validate()?;
            let mut out = mid.data.clone();
            for v in out.iter_mut() {
                *v = c.apply(*v)?;
            }
            out
        }
        None => mid.data.clone(),
    };
    (0..=cfg.k_max).try_fold(0.0, |acc, k| {
        Ok(acc
            + ConsistencyOperator::new(mid, line, k, cfg.beta_substeps)?
                .with_smoothing(cfg.smoothing_degree)?
                .cost(data.view()))
    })
}

/// Corrector threshold: the `quantile` of the mid-plane values above
/// `support_fraction` of the maximum.
pub fn auto_threshold(mid: &MidPlane, support_fraction: f64, quantile: f64) -> Result<f64> {
    let max = mid.max_value();
    let mut values: Vec<f64> = mid
        .data
        .iter()
        .copied()
        .filter(|&v| v > support_fraction * max)
        .collect();
    if values.len() < 20 {
        return Err(Error::InvalidInput(
            "sinogram has too little support for a threshold".into(),
        ));
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let idx = ((values.len() - 1) as f64 * quantile.clamp(0.0, 1.0)).round() as usize;
    Ok(values[idx])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_of_affine_is_constant() {
        let f: Vec<f64> = (0..10).map(|i| 3.0 * i as f64 * 0.5 + 1.0).collect();
        assert!(gradient(&f, 0.5).iter().all(|g| (g - 3.0).abs() < 1e-12));
    }

    #[test]
    fn polynomial_basis_is_orthonormal_and_reproduces_cubics() {
        let xs: Vec<f64> = (0..40).map(|i| -3.0 + 0.2 * i as f64).collect();
        let b = orthonormal_polynomials(&xs, 5);
        for i in 0..6 {
            for j in 0..6 {
                let d: f64 = b[i].iter().zip(&b[j]).map(|(a, c)| a * c).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
        let f: Vec<f64> = xs.iter().map(|x| 1.0 - x + 0.3 * x * x * x).collect();
        let mut proj = vec![0.0; xs.len()];
        for q in &b {
            let c: f64 = q.iter().zip(&f).map(|(a, v)| a * v).sum();
            proj.iter_mut().zip(q).for_each(|(p, qi)| *p += c * qi);
        }
        assert!(proj.iter().zip(&f).all(|(p, v)| (p - v).abs() < 1e-9));
    }

    #[test]
    fn trapezoid_of_constant() {
        assert!((trapezoid_sq(&[2.0; 11], 0.1) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_is_the_quantile_of_supported_values() {
        let g = ScanGeometry {
            n_views: 10,
            n_v: 1,
            ..ScanGeometry::desk()
        };
        // half the columns empty, the rest 1..=128 in every view
        let s = Sinogram::from_fn(g, |_, u, _| if u > 0.0 { (u / 0.5).round() } else { 0.0 });
        let mid = MidPlane::from_sinogram(&s);
        let t = auto_threshold(&mid, 0.01, 0.5).unwrap();
        assert!((t - 64.0).abs() <= 1.0, "{t}");
        assert_eq!(auto_threshold(&mid, 0.01, 1.0).unwrap(), mid.max_value());
        let empty = MidPlane::from_sinogram(&Sinogram::zeros(g));
        assert!(auto_threshold(&empty, 0.01, 0.5).is_err());
    }

    #[test]
    fn config_defaults_from_empty_json() {
        let c: ConsistencyConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(c, ConsistencyConfig::default());
        assert!(ConsistencyConfig { n_x: 2, ..c }.validate().is_err());
    }
}
