//! The system descriptor: one TOML document with sections for zones,
//! lines, thermal, vre, storage, reserves, and penalties.

use super::IoError;
use crate::system::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct Descriptor {
    system: SystemSection,
    perturbation: PerturbationConfig,
    #[serde(default)]
    zones: Vec<Zone>,
    #[serde(default)]
    lines: Vec<Line>,
    #[serde(default)]
    thermal: Vec<ThermalUnit>,
    #[serde(default)]
    vre: Vec<VreUnit>,
    #[serde(default)]
    storage: Vec<StorageUnit>,
    #[serde(default)]
    reserves: Vec<ReserveProduct>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SystemSection {
    penalty_dropped_load: f64,
}

fn to_descriptor(spec: &SystemSpec) -> Descriptor {
    Descriptor {
        system: SystemSection {
            penalty_dropped_load: spec.penalty_dropped_load,
        },
        perturbation: spec.perturbation,
        zones: spec.zones.clone(),
        lines: spec.lines.clone(),
        thermal: spec.thermal_units.clone(),
        vre: spec.vre_units.clone(),
        storage: spec.storage_units.clone(),
        reserves: spec.reserve_products.clone(),
    }
}

fn from_descriptor(d: Descriptor) -> SystemSpec {
    SystemSpec {
        zones: d.zones,
        lines: d.lines,
        thermal_units: d.thermal,
        vre_units: d.vre,
        storage_units: d.storage,
        reserve_products: d.reserves,
        penalty_dropped_load: d.system.penalty_dropped_load,
        perturbation: d.perturbation,
    }
}

/// Canonical TOML form of a system; also the digest input.
pub fn system_to_toml(spec: &SystemSpec) -> String {
    toml::to_string(&to_descriptor(spec)).expect("system serializes")
}

pub fn write_system(spec: &SystemSpec, path: &Path) -> Result<(), IoError> {
    std::fs::write(path, system_to_toml(spec)).map_err(|e| IoError::file(path, e))
}

pub fn read_system(path: &Path) -> Result<SystemSpec, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    let d: Descriptor = toml::from_str(&text).map_err(|e| IoError::Descriptor(e.to_string()))?;
    Ok(from_descriptor(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_system, SynthParams};

    #[test]
    fn descriptor_roundtrip() {
        let (spec, _) = synth_system(&SynthParams::default_with(3, 24), 5).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("system.toml");
        write_system(&spec, &path).unwrap();
        let back = read_system(&path).unwrap();
        assert_eq!(spec, back);
    }

    #[test]
    fn descriptor_text_is_stable() {
        let (spec, _) = synth_system(&SynthParams::default_with(2, 24), 1).unwrap();
        assert_eq!(system_to_toml(&spec), system_to_toml(&spec));
        assert!(system_to_toml(&spec).contains("[[thermal]]"));
    }
}
