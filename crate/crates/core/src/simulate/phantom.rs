//! Geometric phantoms: primitives painted in order onto a label grid.
//!
//! Later primitives overwrite earlier ones, both when rasterizing and when
//! computing exact chord lengths along a ray.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::materials::MAX_MATERIALS;
use crate::volume::{LabelVolume, VolumeGrid};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Shape {
    Ellipsoid {
        center: [f64; 3],
        semi_axes: [f64; 3],
        #[serde(default)]
        angle_deg: f64,
    },
    /// Elliptic cylinder along z.
    Cylinder {
        center: [f64; 2],
        semi_axes: [f64; 2],
        #[serde(default)]
        angle_deg: f64,
        z_range: [f64; 2],
    },
    Box {
        center: [f64; 3],
        half_size: [f64; 3],
        #[serde(default)]
        angle_deg: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Primitive {
    #[serde(flatten)]
    pub shape: Shape,
    pub material: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub name: String,
    pub grid: VolumeGrid,
    /// Radius (mm) every primitive must stay within; defaults to the circle
    /// inscribed in the grid.
    #[serde(default)]
    pub support_radius: Option<f64>,
    pub primitives: Vec<Primitive>,
}

impl Shape {
    fn center_xy(&self) -> [f64; 2] {
        match *self {
            Shape::Ellipsoid { center, .. } | Shape::Box { center, .. } => [center[0], center[1]],
            Shape::Cylinder { center, .. } => center,
        }
    }

    fn angle(&self) -> f64 {
        match *self {
            Shape::Ellipsoid { angle_deg, .. }
            | Shape::Cylinder { angle_deg, .. }
            | Shape::Box { angle_deg, .. } => angle_deg.to_radians(),
        }
    }

    fn z_center(&self) -> f64 {
        match *self {
            Shape::Ellipsoid { center, .. } | Shape::Box { center, .. } => center[2],
            Shape::Cylinder { .. } => 0.0,
        }
    }

    /// Point in the primitive's local, axis-aligned frame.
    fn to_local(&self, p: [f64; 3]) -> [f64; 3] {
        let c = self.center_xy();
        let (s, co) = self.angle().sin_cos();
        let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
        [co * dx + s * dy, -s * dx + co * dy, p[2] - self.z_center()]
    }

    fn dir_to_local(&self, d: [f64; 3]) -> [f64; 3] {
        let (s, co) = self.angle().sin_cos();
        [co * d[0] + s * d[1], -s * d[0] + co * d[1], d[2]]
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let q = self.to_local(p);
        match *self {
            Shape::Ellipsoid { semi_axes: a, .. } => {
                (q[0] / a[0]).powi(2) + (q[1] / a[1]).powi(2) + (q[2] / a[2]).powi(2) <= 1.0
            }
            Shape::Cylinder {
                semi_axes: a,
                z_range,
                ..
            } => {
                (q[0] / a[0]).powi(2) + (q[1] / a[1]).powi(2) <= 1.0
                    && p[2] >= z_range[0]
                    && p[2] <= z_range[1]
            }
            Shape::Box { half_size: h, .. } => {
                q[0].abs() <= h[0] && q[1].abs() <= h[1] && q[2].abs() <= h[2]
            }
        }
    }

    /// Parameter interval `[t0, t1]` where `origin + t·dir` is inside.
    pub fn intersect(&self, origin: [f64; 3], dir: [f64; 3]) -> Option<(f64, f64)> {
        let o = self.to_local(origin);
        let d = self.dir_to_local(dir);
        match *self {
            Shape::Ellipsoid { semi_axes: a, .. } => {
                let os = [o[0] / a[0], o[1] / a[1], o[2] / a[2]];
                let ds = [d[0] / a[0], d[1] / a[1], d[2] / a[2]];
                quadratic_interval(dot(ds, ds), 2.0 * dot(os, ds), dot(os, os) - 1.0)
            }
            Shape::Cylinder {
                semi_axes: a,
                z_range,
                ..
            } => {
                let os = [o[0] / a[0], o[1] / a[1]];
                let ds = [d[0] / a[0], d[1] / a[1]];
                let qa = ds[0] * ds[0] + ds[1] * ds[1];
                let (mut t0, mut t1) = if qa == 0.0 {
                    if os[0] * os[0] + os[1] * os[1] <= 1.0 {
                        (f64::NEG_INFINITY, f64::INFINITY)
                    } else {
                        return None;
                    }
                } else {
                    quadratic_interval(
                        qa,
                        2.0 * (os[0] * ds[0] + os[1] * ds[1]),
                        os[0] * os[0] + os[1] * os[1] - 1.0,
                    )?
                };
                let (z0, z1) = slab(origin[2], dir[2], z_range[0], z_range[1])?;
                t0 = t0.max(z0);
                t1 = t1.min(z1);
                (t1 > t0).then_some((t0, t1))
            }
            Shape::Box { half_size: h, .. } => {
                let mut t0 = f64::NEG_INFINITY;
                let mut t1 = f64::INFINITY;
                for ax in 0..3 {
                    let (a, b) = slab(o[ax], d[ax], -h[ax], h[ax])?;
                    t0 = t0.max(a);
                    t1 = t1.min(b);
                }
                (t1 > t0).then_some((t0, t1))
            }
        }
    }

    /// Largest distance from the z axis reached by the footprint.
    pub fn max_radius(&self) -> f64 {
        let c = self.center_xy();
        let (s, co) = self.angle().sin_cos();
        let world = |lx: f64, ly: f64| {
            let x = c[0] + co * lx - s * ly;
            let y = c[1] + s * lx + co * ly;
            (x * x + y * y).sqrt()
        };
        match *self {
            Shape::Ellipsoid { semi_axes: a, .. } => ellipse_max_radius(a[0], a[1], &world),
            Shape::Cylinder { semi_axes: a, .. } => ellipse_max_radius(a[0], a[1], &world),
            Shape::Box { half_size: h, .. } => [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)]
                .iter()
                .map(|&(sx, sy)| world(sx * h[0], sy * h[1]))
                .fold(0.0, f64::max),
        }
    }
}

fn ellipse_max_radius(a: f64, b: f64, world: &dyn Fn(f64, f64) -> f64) -> f64 {
    (0..3600)
        .map(|i| {
            let t = i as f64 * std::f64::consts::TAU / 3600.0;
            world(a * t.cos(), b * t.sin())
        })
        .fold(0.0, f64::max)
        // chord sagitta between boundary samples
        + a.max(b) * (1.0 - (std::f64::consts::PI / 3600.0).cos())
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn quadratic_interval(a: f64, b: f64, c: f64) -> Option<(f64, f64)> {
    let disc = b * b - 4.0 * a * c;
    if disc <= 0.0 || a == 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // numerically stable roots
    let q = -0.5 * (b + b.signum() * sq);
    let (r0, r1) = if q == 0.0 {
        (-sq / (2.0 * a), sq / (2.0 * a))
    } else {
        (q / a, c / q)
    };
    Some((r0.min(r1), r0.max(r1)))
}

fn slab(o: f64, d: f64, lo: f64, hi: f64) -> Option<(f64, f64)> {
    if d == 0.0 {
        return (o >= lo && o <= hi).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let a = (lo - o) / d;
    let b = (hi - o) / d;
    Some((a.min(b), a.max(b)))
}

impl PhantomSpec {
    pub fn support(&self) -> f64 {
        self.support_radius
            .unwrap_or_else(|| 0.5 * (self.grid.nx.min(self.grid.ny) as f64) * self.grid.pitch)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let support = self.support();
        for (n, p) in self.primitives.iter().enumerate() {
            if p.material as usize >= MAX_MATERIALS {
                return Err(Error::InvalidInput(format!(
                    "primitive {n}: material id {} out of range",
                    p.material
                )));
            }
            let r = p.shape.max_radius();
            if r > support {
                return Err(Error::InvalidInput(format!(
                    "primitive {n} reaches radius {r:.2} mm, outside the support {support:.2} mm"
                )));
            }
        }
        Ok(())
    }

    /// Material at a point, painter's order.
    pub fn material_at(&self, p: [f64; 3]) -> u8 {
        self.primitives
            .iter()
            .rev()
            .find(|prim| prim.shape.contains(p))
            .map_or(0, |prim| prim.material)
    }

    /// Exact path length per material along the full line
    /// `origin + t·dir` (`dir` need not be normalized).
    pub fn chord_lengths(&self, origin: [f64; 3], dir: [f64; 3]) -> [f64; MAX_MATERIALS] {
        let mut out = [0.0; MAX_MATERIALS];
        let norm = dot(dir, dir).sqrt();
        let unit = [dir[0] / norm, dir[1] / norm, dir[2] / norm];
        let hits: Vec<(usize, f64, f64)> = self
            .primitives
            .iter()
            .enumerate()
            .filter_map(|(n, p)| p.shape.intersect(origin, unit).map(|(a, b)| (n, a, b)))
            .collect();
        if hits.is_empty() {
            return out;
        }
        let mut cuts: Vec<f64> = hits.iter().flat_map(|&(_, a, b)| [a, b]).collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if b <= a {
                continue;
            }
            let mid = 0.5 * (a + b);
            if let Some(&(n, _, _)) = hits.iter().rev().find(|&&(_, t0, t1)| mid > t0 && mid < t1) {
                out[self.primitives[n].material as usize] += b - a;
            }
        }
        out
    }
}

/// Point-samples the phantom at voxel centers.
pub fn rasterize_phantom(spec: &PhantomSpec) -> Result<LabelVolume> {
    spec.validate()?;
    let g = spec.grid;
    let labels = ndarray::Array3::from_shape_fn(g.shape(), |(k, j, i)| {
        spec.material_at([g.x(i), g.y(j), g.z(k)])
    });
    Ok(LabelVolume { grid: g, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid() -> VolumeGrid {
        VolumeGrid::centered(64, 64, 64, 1.0)
    }

    fn sphere(r: f64, material: u8) -> Primitive {
        Primitive {
            shape: Shape::Ellipsoid {
                center: [0.0; 3],
                semi_axes: [r; 3],
                angle_deg: 0.0,
            },
            material,
        }
    }

    #[test]
    fn empty_spec_is_all_air() {
        let spec = PhantomSpec {
            name: "empty".into(),
            grid: grid(),
            support_radius: None,
            primitives: vec![],
        };
        let v = rasterize_phantom(&spec).unwrap();
        assert_eq!(v.count(0), grid().len());
    }

    #[test]
    fn sphere_volume_within_one_percent() {
        let r = 20.0;
        let spec = PhantomSpec {
            name: "ball".into(),
            grid: grid(),
            support_radius: None,
            primitives: vec![sphere(r, 2)],
        };
        let v = rasterize_phantom(&spec).unwrap();
        let expected = 4.0 / 3.0 * PI * r * r * r;
        let got = v.count(2) as f64;
        assert!(
            (got - expected).abs() / expected < 0.01,
            "{got} vs {expected}"
        );
    }

    #[test]
    fn inner_sphere_wins() {
        let spec = PhantomSpec {
            name: "nested".into(),
            grid: grid(),
            support_radius: None,
            primitives: vec![sphere(20.0, 1), sphere(8.0, 4)],
        };
        let v = rasterize_phantom(&spec).unwrap();
        assert_eq!(spec.material_at([0.0, 0.0, 0.0]), 4);
        assert_eq!(spec.material_at([12.0, 0.0, 0.0]), 1);
        assert_eq!(v.labels[[32, 32, 32]], 4);
        // chords follow the same painter's order
        let l = spec.chord_lengths([-100.0, 0.0, 0.0], [1.0, 0.0, 0.0]);
        assert!((l[4] - 16.0).abs() < 1e-9);
        assert!((l[1] - 24.0).abs() < 1e-9);
    }

    #[test]
    fn primitive_outside_support_rejected() {
        let spec = PhantomSpec {
            name: "big".into(),
            grid: grid(),
            support_radius: None,
            primitives: vec![sphere(40.0, 1)],
        };
        assert!(rasterize_phantom(&spec).is_err());
    }

    #[test]
    fn rotated_box_and_cylinder_chords() {
        let b = Shape::Box {
            center: [5.0, 5.0, 0.0],
            half_size: [2.0, 1.0, 10.0],
            angle_deg: 90.0,
        };
        // rotated by 90°: extends 1 in x and 2 in y
        let (t0, t1) = b.intersect([0.0, 5.0, 0.0], [1.0, 0.0, 0.0]).unwrap();
        assert!((t1 - t0 - 2.0).abs() < 1e-9);
        let c = Shape::Cylinder {
            center: [0.0, 0.0],
            semi_axes: [3.0, 3.0],
            angle_deg: 0.0,
            z_range: [-1.0, 1.0],
        };
        let (t0, t1) = c.intersect([-10.0, 1.0, 0.0], [1.0, 0.0, 0.0]).unwrap();
        assert!((t1 - t0 - 2.0 * 8f64.sqrt()).abs() < 1e-9);
        assert!(c.intersect([-10.0, 1.0, 2.0], [1.0, 0.0, 0.0]).is_none());
        assert!((c.max_radius() - 3.0).abs() < 1e-5);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec = PhantomSpec {
            name: "nested".into(),
            grid: grid(),
            support_radius: Some(30.0),
            primitives: vec![sphere(20.0, 1)],
        };
        let text = serde_json::to_string(&spec).unwrap();
        assert!(text.contains("\"type\":\"ellipsoid\""));
        let back: PhantomSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(back, spec);
    }
}
