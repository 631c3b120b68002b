use std::path::Path;

use serde::{Deserialize, Serialize};

use super::BeamformerPair;
use crate::error::{Error, Result};
use crate::linalg::ComplexVector;

/// One filter pair per frequency bin, exportable as JSON with complex
/// entries written as `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterBank {
    pub sample_rate: f64,
    pub block_length: usize,
    pub label: String,
    pub bins: Vec<FilterBin>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterBin {
    pub bin: usize,
    pub frequency_hz: f64,
    pub left: ComplexVector,
    pub right: ComplexVector,
}

impl FilterBank {
    pub fn new(
        sample_rate: f64,
        block_length: usize,
        label: impl Into<String>,
        pairs: &[BeamformerPair],
    ) -> Self {
        let bins = pairs
            .iter()
            .enumerate()
            .map(|(k, w)| FilterBin {
                bin: k,
                frequency_hz: k as f64 * sample_rate / block_length as f64,
                left: w.left().clone(),
                right: w.right().clone(),
            })
            .collect();
        Self {
            sample_rate,
            block_length,
            label: label.into(),
            bins,
        }
    }

    /// Filters ordered by bin, ready for `wola::apply_filter`.
    pub fn pairs(&self) -> Result<Vec<BeamformerPair>> {
        let mut bins: Vec<&FilterBin> = self.bins.iter().collect();
        bins.sort_by_key(|b| b.bin);
        for (k, b) in bins.iter().enumerate() {
            if b.bin != k {
                return Err(Error::SchemaMismatch(format!("missing filter for bin {k}")));
            }
        }
        bins.into_iter()
            .map(|b| BeamformerPair::new(b.left.clone(), b.right.clone()))
            .collect()
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    #[test]
    fn json_layout_and_replay() {
        let w = BeamformerPair::new(
            ComplexVector::new(vec![C64::new(0.5, -0.25), C64::new(0.0, 1.0)]).unwrap(),
            ComplexVector::new(vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)]).unwrap(),
        )
        .unwrap();
        let bank = FilterBank::new(16000.0, 2, "test", &[w.clone(), w.clone()]);
        let json = serde_json::to_string(&bank).unwrap();
        assert!(json.contains("\"left\":[[0.5,-0.25],[0.0,1.0]]"));
        let back: FilterBank = serde_json::from_str(&json).unwrap();
        assert_eq!(back.pairs().unwrap(), vec![w.clone(), w]);
        assert_eq!(back.bins[1].frequency_hz, 8000.0);
    }
}
