//! Built-in jaw phantoms.

use std::f64::consts::PI;

use crate::simulate::materials::{BONE, SOFT_TISSUE, TITANIUM, TOOTH};
use crate::simulate::phantom::{PhantomSpec, Primitive, Shape};
use crate::volume::VolumeGrid;

const Z: [f64; 2] = [-20.0, 20.0];
const ARCH_CENTER: [f64; 2] = [0.0, -14.0];
const ARCH_AXES: [f64; 2] = [40.0, 26.0];

/// Grid the bundled phantoms are rasterized on: 256² × 13 at 0.5 mm.
pub fn phantom_grid() -> VolumeGrid {
    VolumeGrid::centered(256, 256, 13, 0.5)
}

fn cylinder(center: [f64; 2], semi_axes: [f64; 2], angle_deg: f64, material: u8) -> Primitive {
    Primitive {
        shape: Shape::Cylinder {
            center,
            semi_axes,
            angle_deg,
            z_range: Z,
        },
        material,
    }
}

/// Point on the dental arch at `deg` degrees and the arch normal angle there.
fn arch(deg: f64) -> ([f64; 2], f64) {
    let t = deg.to_radians();
    let p = [
        ARCH_CENTER[0] + ARCH_AXES[0] * t.cos(),
        ARCH_CENTER[1] + ARCH_AXES[1] * t.sin(),
    ];
    let normal = (ARCH_AXES[0] * t.sin()).atan2(ARCH_AXES[1] * t.cos());
    (p, normal * 180.0 / PI)
}

/// Jaw without metal: soft tissue, mandibular bone and ten teeth.
pub fn metal_free() -> PhantomSpec {
    let mut primitives = vec![
        cylinder([0.0, -18.0], [56.0, 40.0], 0.0, SOFT_TISSUE),
        cylinder([0.0, -14.0], [44.0, 30.0], 0.0, BONE),
        cylinder([0.0, -16.0], [36.0, 22.0], 0.0, SOFT_TISSUE),
    ];
    for n in 0..10 {
        let deg = 20.0 + n as f64 * 140.0 / 9.0;
        let (c, normal) = arch(deg);
        primitives.push(cylinder(c, [3.5, 3.0], normal, TOOTH));
    }
    PhantomSpec {
        name: "metal_free".into(),
        grid: phantom_grid(),
        support_radius: None,
        primitives,
    }
}

/// Jaw with two titanium implants.
pub fn model1() -> PhantomSpec {
    let mut spec = metal_free();
    spec.name = "model1".into();
    for deg in [50.0, 130.0] {
        let (c, _) = arch(deg);
        spec.primitives.push(cylinder(c, [2.5, 2.5], 0.0, TITANIUM));
    }
    spec
}

/// Model 1 plus bracket-like titanium boxes on the anterior teeth.
pub fn model2() -> PhantomSpec {
    let mut spec = model1();
    spec.name = "model2".into();
    for deg in [70.0, 90.0, 110.0] {
        let (c, normal) = arch(deg);
        let r = normal.to_radians();
        // seat the bracket on the labial face of the tooth
        let center = [c[0] + 3.6 * r.cos(), c[1] + 3.6 * r.sin(), 0.0];
        spec.primitives.push(Primitive {
            shape: Shape::Box {
                center,
                half_size: [0.6, 1.5, 20.0],
                angle_deg: normal,
            },
            material: TITANIUM,
        });
    }
    spec
}

/// Looks up a bundled phantom by name.
pub fn by_name(name: &str) -> Option<PhantomSpec> {
    match name {
        "model1" => Some(model1()),
        "model2" => Some(model2()),
        "metal_free" => Some(metal_free()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ScanGeometry;

    #[test]
    fn bundled_specs_fit_the_support() {
        let support = ScanGeometry::desk().support_radius();
        for spec in [metal_free(), model1(), model2()] {
            spec.validate().unwrap();
            for p in &spec.primitives {
                assert!(p.shape.max_radius() < support, "{}", spec.name);
            }
        }
    }

    #[test]
    fn model2_extends_model1() {
        let (a, b) = (model1(), model2());
        assert_eq!(&b.primitives[..a.primitives.len()], &a.primitives[..]);
        assert_eq!(b.primitives.len(), a.primitives.len() + 3);
    }

    #[test]
    fn metal_sits_on_the_arch() {
        let spec = model1();
        let (c, _) = arch(50.0);
        assert_eq!(spec.material_at([c[0], c[1], 0.0]), TITANIUM);
        assert_eq!(spec.material_at([0.0, 40.0, 0.0]), 0);
        assert_eq!(spec.material_at([0.0, -16.0, 0.0]), SOFT_TISSUE);
    }
}
