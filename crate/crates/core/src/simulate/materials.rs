//! Energy-dependent linear attenuation of the phantom materials.
//!
//! Mass attenuation coefficients (cm²/g, coherent scattering included) are
//! tabulated at a few energies from the NIST XCOM tables and interpolated
//! log-log. A repeated energy marks an absorption edge: the first entry is
//! the value just below the edge, the second just above.

use crate::error::{Error, Result};

pub const AIR: u8 = 0;
pub const SOFT_TISSUE: u8 = 1;
pub const BONE: u8 = 2;
pub const TOOTH: u8 = 3;
pub const TITANIUM: u8 = 4;
pub const AMALGAM: u8 = 5;
pub const IODINE_SOLUTION: u8 = 6;
pub const ACRYLIC: u8 = 7;
pub const WATER: u8 = 8;

/// Upper bound on label ids handled by the projectors.
pub const MAX_MATERIALS: usize = 16;

type Knots = &'static [(f64, f64)];

const WATER_MU: Knots = &[
    (20.0, 0.8096),
    (30.0, 0.3756),
    (40.0, 0.2683),
    (50.0, 0.2269),
    (60.0, 0.2059),
    (80.0, 0.1837),
    (100.0, 0.1707),
    (150.0, 0.1505),
];
const SOFT_TISSUE_MU: Knots = &[
    (20.0, 0.8205),
    (30.0, 0.3790),
    (40.0, 0.2688),
    (50.0, 0.2264),
    (60.0, 0.2048),
    (80.0, 0.1823),
    (100.0, 0.1693),
    (150.0, 0.1492),
];
const BONE_MU: Knots = &[
    (20.0, 4.001),
    (30.0, 1.331),
    (40.0, 0.6655),
    (50.0, 0.4242),
    (60.0, 0.3148),
    (80.0, 0.2229),
    (100.0, 0.1855),
    (150.0, 0.1480),
];
const ENAMEL_MU: Knots = &[
    (20.0, 5.60),
    (30.0, 1.80),
    (40.0, 0.870),
    (50.0, 0.530),
    (60.0, 0.380),
    (80.0, 0.250),
    (100.0, 0.200),
    (150.0, 0.155),
];
const TITANIUM_MU: Knots = &[
    (20.0, 15.85),
    (30.0, 4.972),
    (40.0, 2.214),
    (50.0, 1.213),
    (60.0, 0.7661),
    (80.0, 0.4052),
    (100.0, 0.2721),
    (150.0, 0.1649),
];
const PMMA_MU: Knots = &[
    (20.0, 0.5714),
    (30.0, 0.3032),
    (40.0, 0.2350),
    (50.0, 0.2074),
    (60.0, 0.1924),
    (80.0, 0.1751),
    (100.0, 0.1641),
    (150.0, 0.1456),
];
const IODINE_MU: Knots = &[
    (20.0, 25.4),
    (30.0, 8.51),
    (33.169, 6.55),
    (33.169, 35.8),
    (40.0, 22.1),
    (50.0, 12.3),
    (60.0, 7.61),
    (80.0, 3.51),
    (100.0, 1.94),
    (150.0, 0.69),
];
const SILVER_MU: Knots = &[
    (20.0, 17.0),
    (25.514, 9.5),
    (25.514, 56.0),
    (30.0, 36.0),
    (40.0, 16.9),
    (50.0, 9.3),
    (60.0, 5.7),
    (80.0, 2.6),
    (100.0, 1.47),
    (150.0, 0.54),
];
const MERCURY_MU: Knots = &[
    (20.0, 65.0),
    (30.0, 23.0),
    (40.0, 11.0),
    (50.0, 6.1),
    (60.0, 3.8),
    (80.0, 1.82),
    (83.1, 1.65),
    (83.1, 7.6),
    (100.0, 5.0),
    (150.0, 1.9),
];

fn mass_attenuation(knots: Knots, energy: f64) -> f64 {
    // last knot at or below `energy`; ties resolve to the above-edge entry
    let i = knots
        .iter()
        .rposition(|&(e, _)| e <= energy)
        .unwrap_or_default();
    let (a, b) = if i + 1 < knots.len() && knots[i + 1].0 > knots[i].0 {
        (knots[i], knots[i + 1])
    } else if i > 0 && knots[i].0 > knots[i - 1].0 {
        (knots[i - 1], knots[i])
    } else {
        // edge pair at the table end; use the segment that starts at i
        (knots[i], knots[(i + 1).min(knots.len() - 1)])
    };
    if a.0 == b.0 {
        return b.1;
    }
    let slope = (b.1.ln() - a.1.ln()) / (b.0.ln() - a.0.ln());
    (a.1.ln() + slope * (energy.ln() - a.0.ln())).exp()
}

/// A material as a mixture of tabulated components.
#[derive(Debug, Clone)]
pub struct Material {
    pub id: u8,
    pub name: &'static str,
    /// (partial density g/cm³, mass attenuation table)
    components: Vec<(f64, Knots)>,
}

impl Material {
    fn single(id: u8, name: &'static str, density: f64, knots: Knots) -> Self {
        Material {
            id,
            name,
            components: vec![(density, knots)],
        }
    }

    /// Linear attenuation at `energy` keV, in 1/mm.
    pub fn mu(&self, energy: f64) -> f64 {
        self.components
            .iter()
            .map(|&(rho, k)| rho * mass_attenuation(k, energy))
            .sum::<f64>()
            / 10.0
    }

    /// Absorption edges (keV) of all components.
    pub fn edges(&self) -> Vec<f64> {
        let mut edges: Vec<f64> = self
            .components
            .iter()
            .flat_map(|&(_, k)| k.windows(2).filter(|w| w[0].0 == w[1].0).map(|w| w[0].0))
            .collect();
        edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
        edges.dedup();
        edges
    }
}

/// Every material the simulator knows, indexed by label id.
pub fn standard_materials() -> Vec<Material> {
    vec![
        Material {
            id: AIR,
            name: "air",
            components: vec![],
        },
        Material::single(SOFT_TISSUE, "soft_tissue", 1.06, SOFT_TISSUE_MU),
        Material::single(BONE, "bone", 1.92, BONE_MU),
        Material::single(TOOTH, "tooth", 2.90, ENAMEL_MU),
        Material::single(TITANIUM, "titanium", 4.506, TITANIUM_MU),
        Material {
            id: AMALGAM,
            name: "amalgam",
            components: vec![(5.8, SILVER_MU), (5.8, MERCURY_MU)],
        },
        Material {
            id: IODINE_SOLUTION,
            name: "iodine_solution",
            components: vec![(1.0, WATER_MU), (0.37, IODINE_MU)],
        },
        Material::single(ACRYLIC, "acrylic", 1.19, PMMA_MU),
        Material::single(WATER, "water", 1.0, WATER_MU),
    ]
}

/// Attenuation curves sampled on the energies of a spectrum.
#[derive(Debug, Clone)]
pub struct MaterialTable {
    pub energies: Vec<f64>,
    pub names: Vec<String>,
    /// `mu[material][energy]`, 1/mm.
    pub mu: Vec<Vec<f64>>,
    /// Absorption edges per material (keV).
    pub edges: Vec<Vec<f64>>,
    materials: Vec<Material>,
}

impl MaterialTable {
    pub fn sample(materials: &[Material], energies: &[f64]) -> Result<Self> {
        for (i, m) in materials.iter().enumerate() {
            if m.id as usize != i {
                return Err(Error::InvalidInput(format!(
                    "material {} has id {} at position {i}",
                    m.name, m.id
                )));
            }
        }
        if materials.len() > MAX_MATERIALS {
            return Err(Error::InvalidInput("too many materials".into()));
        }
        let table = MaterialTable {
            energies: energies.to_vec(),
            names: materials.iter().map(|m| m.name.to_string()).collect(),
            mu: materials
                .iter()
                .map(|m| energies.iter().map(|&e| m.mu(e)).collect())
                .collect(),
            edges: materials.iter().map(Material::edges).collect(),
            materials: materials.to_vec(),
        };
        table.check()?;
        Ok(table)
    }

    pub fn standard(energies: &[f64]) -> Result<Self> {
        Self::sample(&standard_materials(), energies)
    }

    /// Attenuation of `label` at an arbitrary energy (1/mm), off the
    /// sampled grid.
    pub fn mu_at(&self, label: usize, energy: f64) -> Result<f64> {
        let m = self
            .materials
            .get(label)
            .ok_or_else(|| Error::InvalidInput(format!("label {label} has no material")))?;
        Ok(m.mu(energy))
    }

    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }

    /// Non-negativity, and monotone decrease between absorption edges.
    pub fn check(&self) -> Result<()> {
        for (m, curve) in self.mu.iter().enumerate() {
            if curve.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{}: negative attenuation",
                    self.names[m]
                )));
            }
            for (i, w) in curve.windows(2).enumerate() {
                let (e0, e1) = (self.energies[i], self.energies[i + 1]);
                let crosses_edge = self.edges[m].iter().any(|&edge| e0 < edge && edge <= e1);
                if !crosses_edge && w[1] > w[0] * (1.0 + 1e-12) {
                    return Err(Error::InvalidInput(format!(
                        "{}: attenuation increases from {e0} to {e1} keV without an edge",
                        self.names[m]
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn knots_are_reproduced() {
        assert!((mass_attenuation(WATER_MU, 60.0) - 0.2059).abs() < 1e-12);
        assert!((mass_attenuation(TITANIUM_MU, 20.0) - 15.85).abs() < 1e-12);
        // edge: below and above values
        assert!((mass_attenuation(IODINE_MU, 33.16) - 6.55).abs() < 0.05);
        assert!((mass_attenuation(IODINE_MU, 33.169) - 35.8).abs() < 1e-12);
        // log-log midpoint
        let mid = mass_attenuation(WATER_MU, (40.0f64 * 50.0).sqrt());
        assert!((mid - (0.2683f64 * 0.2269).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn standard_table_is_monotone_between_edges() {
        let energies: Vec<f64> = (20..=90).map(f64::from).collect();
        let t = MaterialTable::standard(&energies).unwrap();
        assert_eq!(t.len(), 9);
        assert!(t.mu[AIR as usize].iter().all(|&v| v == 0.0));
        assert_eq!(t.edges[IODINE_SOLUTION as usize], vec![33.169]);
        assert_eq!(t.edges[AMALGAM as usize], vec![25.514, 83.1]);
        // titanium is an order of magnitude above water at 40 keV
        assert!(t.mu[TITANIUM as usize][20] > 8.0 * t.mu[WATER as usize][20]);
    }

    #[test]
    fn increasing_curve_without_edge_is_flagged() {
        let t = MaterialTable {
            energies: vec![40.0, 50.0],
            names: vec!["x".into()],
            mu: vec![vec![0.1, 0.2]],
            edges: vec![vec![]],
            materials: vec![],
        };
        assert!(t.check().is_err());
        let t = MaterialTable {
            edges: vec![vec![45.0]],
            ..t
        };
        assert!(t.check().is_ok());
    }
}
