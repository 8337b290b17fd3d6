use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUNDLED_W90_CU05: &str = include_str!("../../data/spectrum_w90_cu05_v1.csv");

/// Discrete X-ray spectrum: photon fraction per energy bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySpectrum {
    /// keV, strictly increasing.
    pub energies: Vec<f64>,
    /// Normalized photon weights `η(E)`.
    pub weights: Vec<f64>,
}

impl EnergySpectrum {
    pub fn new(energies: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if energies.len() != weights.len() || energies.is_empty() {
            return Err(Error::InvalidInput(
                "spectrum needs matching, nonempty energy and weight lists".into(),
            ));
        }
        if energies.iter().any(|&e| !(e > 0.0 && e <= 150.0)) {
            return Err(Error::InvalidInput(
                "spectrum energies must lie in (0, 150] keV".into(),
            ));
        }
        if energies.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "spectrum energies must increase strictly".into(),
            ));
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput(
                "spectrum weights must be non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidInput("spectrum has zero total weight".into()));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(EnergySpectrum { energies, weights })
    }

    /// Monochromatic spectrum at `energy`.
    pub fn delta(energy: f64) -> Result<Self> {
        Self::new(vec![energy], vec![1.0])
    }

    /// The bundled 90 kVp tungsten spectrum behind 0.5 mm Cu, 1 keV bins.
    pub fn bundled_w90_cu05() -> Self {
        Self::parse_csv(BUNDLED_W90_CU05.as_bytes(), Path::new("<bundled spectrum>"))
            .expect("bundled spectrum is valid")
    }

    /// Reads a two-column `keV,weight` CSV. Lines starting with `#` and a
    /// non-numeric header row are skipped.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&bytes, path)
    }

    fn parse_csv(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(bytes);
        let mut energies = Vec::new();
        let mut weights = Vec::new();
        for (n, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Csv {
                path: path.into(),
                msg: e.to_string(),
            })?;
            let parsed = (
                record.get(0).and_then(|s| s.parse::<f64>().ok()),
                record.get(1).and_then(|s| s.parse::<f64>().ok()),
            );
            match parsed {
                (Some(e), Some(w)) => {
                    energies.push(e);
                    weights.push(w);
                }
                _ if n == 0 => continue, // header
                _ => {
                    return Err(Error::Csv {
                        path: path.into(),
                        msg: format!("row {}: expected two numbers", n + 1),
                    })
                }
            }
        }
        Self::new(energies, weights)
    }

    pub fn mean_energy(&self) -> f64 {
        self.energies
            .iter()
            .zip(&self.weights)
            .map(|(e, w)| e * w)
            .sum()
    }

    pub fn min_energy(&self) -> f64 {
        self.energies[0]
    }

    pub fn max_energy(&self) -> f64 {
        *self.energies.last().unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_spectrum_is_normalized() {
        let s = EnergySpectrum::bundled_w90_cu05();
        assert_eq!(s.energies.len(), 71);
        assert_eq!(s.min_energy(), 20.0);
        assert_eq!(s.max_energy(), 90.0);
        assert!((s.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mean = s.mean_energy();
        assert!(mean > 55.0 && mean < 65.0, "mean energy {mean}");
    }

    #[test]
    fn invalid_spectra_rejected() {
        assert!(EnergySpectrum::new(vec![50.0, 40.0], vec![0.5, 0.5]).is_err());
        assert!(EnergySpectrum::new(vec![50.0, 200.0], vec![0.5, 0.5]).is_err());
        assert!(EnergySpectrum::new(vec![50.0], vec![-1.0]).is_err());
        assert!(EnergySpectrum::new(vec![50.0], vec![0.0]).is_err());
    }

    #[test]
    fn csv_with_header_and_comments() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        std::fs::write(&p, "# test\nkev,weight\n40,1\n60,3\n").unwrap();
        let s = EnergySpectrum::from_csv(&p).unwrap();
        assert_eq!(s.energies, vec![40.0, 60.0]);
        assert_eq!(s.weights, vec![0.25, 0.75]);
        std::fs::write(&p, "kev,weight\n40,1\nx,2\n").unwrap();
        assert!(EnergySpectrum::from_csv(&p).is_err());
    }
}
