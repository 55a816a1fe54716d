//! Deterministic synthetic test systems.
//!
//! Stands in for a real dataset: a ring-connected set of zones with a
//! thermal cost ladder, diurnal solar, smooth seeded wind, and storage
//! built with the study-default parameters. Bit-deterministic in
//! `(params, seed)`.

use crate::calendar::Timestamp;
use crate::rng::keyed_rng;
use crate::series::TimeSeriesFrame;
use crate::system::*;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("zones must be >= 1, got {0}")]
    NoZones(usize),
    #[error("hours must be >= 24 and a multiple of 24, got {0}")]
    BadHours(usize),
}

#[derive(Debug, Clone)]
pub struct SynthParams {
    pub zones: usize,
    pub thermal_per_zone: usize,
    pub solar_per_zone: usize,
    pub wind_per_zone: usize,
    /// Fleet-wide counts, placed round-robin over zones.
    pub sdes_units: usize,
    pub ldes_units: usize,
    pub hours: usize,
    /// Fraction of hourly total load required as raise reserve.
    pub reserve_fraction: f64,
    /// Calendar start of the series.
    pub start: Timestamp,
}

impl SynthParams {
    pub fn default_with(zones: usize, hours: usize) -> Self {
        SynthParams {
            zones,
            thermal_per_zone: 2,
            solar_per_zone: 1,
            wind_per_zone: 1,
            sdes_units: 1,
            ldes_units: 1,
            hours,
            reserve_fraction: 0.03,
            start: Timestamp::from_ymdh(2050, 1, 1, 0).unwrap(),
        }
    }
}

/// Peak zonal load the generator sizes everything against, MW.
const ZONE_PEAK: f64 = 1000.0;

pub fn synth_system(
    params: &SynthParams,
    seed: u64,
) -> Result<(SystemSpec, TimeSeriesFrame), SynthError> {
    if params.zones == 0 {
        return Err(SynthError::NoZones(params.zones));
    }
    if params.hours < 24 || !params.hours.is_multiple_of(24) {
        return Err(SynthError::BadHours(params.hours));
    }

    let mut spec = SystemSpec::empty();
    spec.perturbation = PerturbationConfig { pct: 0.10, seed };

    let product_id = "raise".to_string();
    spec.reserve_products.push(ReserveProduct {
        id: product_id.clone(),
        direction: ReserveDirection::Raise,
        requirement_series_key: product_id.clone(),
    });

    for zi in 0..params.zones {
        spec.zones.push(Zone::new(format!("z{}", zi + 1)));
    }
    // Ring topology; 2 zones get a single tie.
    if params.zones >= 2 {
        let n = params.zones;
        let pairs = if n == 2 { 1 } else { n };
        for li in 0..pairs {
            let from = format!("z{}", li + 1);
            let to = format!("z{}", (li + 1) % n + 1);
            let cap = 0.5 * ZONE_PEAK;
            spec.lines.push(Line {
                id: format!("l{}", li + 1),
                from_zone: from,
                to_zone: to,
                susceptance: 500.0,
                flow_min: -cap,
                flow_max: cap,
            });
        }
    }

    for zi in 0..params.zones {
        let zone = format!("z{}", zi + 1);
        for k in 0..params.thermal_per_zone {
            // Cost ladder: cheap baseload first, then mid-merit / peakers.
            // Startup costs are kept small relative to fuel so desk-scale
            // windows stay near LP-tight and close the 1e-4 gap quickly.
            let p_max = ZONE_PEAK * (0.9 - 0.3 * k as f64 / params.thermal_per_zone.max(1) as f64);
            let fuel = 18.0 + 26.0 * k as f64;
            spec.thermal_units.push(ThermalUnit {
                id: format!("t{}-{}", zi + 1, k + 1),
                zone: zone.clone(),
                p_min: 0.15 * p_max,
                p_max,
                fuel_cost: fuel,
                startup_cost: 0.5 * p_max.sqrt(),
                shutdown_cost: 0.05 * p_max.sqrt(),
                ramp_up: p_max,
                ramp_down: p_max,
                reserve_eligible: vec![product_id.clone()],
            });
        }
        for k in 0..params.solar_per_zone {
            let id = format!("pv{}-{}", zi + 1, k + 1);
            spec.vre_units.push(VreUnit {
                id: id.clone(),
                zone: zone.clone(),
                technology: VreTechnology::Solar,
                capacity: 0.8 * ZONE_PEAK,
                availability_series_key: id,
                reserve_eligible: Vec::new(),
            });
        }
        for k in 0..params.wind_per_zone {
            let id = format!("w{}-{}", zi + 1, k + 1);
            spec.vre_units.push(VreUnit {
                id: id.clone(),
                zone: zone.clone(),
                technology: VreTechnology::Wind,
                capacity: 0.6 * ZONE_PEAK,
                availability_series_key: id,
                reserve_eligible: Vec::new(),
            });
        }
    }

    for k in 0..params.sdes_units {
        let zone = format!("z{}", k % params.zones + 1);
        let mut unit = StorageUnit::with_defaults(
            format!("sd{}", k + 1),
            zone,
            StorageTechnology::Sdes,
            0.15 * ZONE_PEAK,
        );
        unit.reserve_eligible = vec![product_id.clone()];
        spec.storage_units.push(unit);
    }
    for k in 0..params.ldes_units {
        let zone = format!("z{}", (params.sdes_units + k) % params.zones + 1);
        let mut unit = StorageUnit::with_defaults(
            format!("ld{}", k + 1),
            zone,
            StorageTechnology::Ldes,
            0.10 * ZONE_PEAK,
        );
        unit.reserve_eligible = vec![product_id.clone()];
        spec.storage_units.push(unit);
    }

    let mut series = TimeSeriesFrame::new(params.start, params.hours);
    let hours = params.hours;

    let mut total_load = vec![0.0; hours];
    for (zi, zone) in spec.zones.iter().enumerate() {
        let mut rng = keyed_rng(seed, &format!("load/{}", zone.id));
        let base = ZONE_PEAK * (0.62 + 0.06 * rng.next_f64());
        let mut col = Vec::with_capacity(hours);
        for t in 0..hours {
            let day = (t / 24) as f64;
            let hod = (t % 24) as f64;
            let diurnal = 0.22 * (2.0 * PI * (hod - 9.0) / 24.0).sin();
            let seasonal = 0.08 * (2.0 * PI * (day - 30.0 * zi as f64) / 365.0).cos();
            let noise = 0.03 * (2.0 * rng.next_f64() - 1.0);
            let v = (base * (1.0 + diurnal + seasonal + noise)).max(0.0);
            col.push(v);
            total_load[t] += v;
        }
        series.load.set_column(&zone.id, col);
    }

    for v in &spec.vre_units {
        let mut rng = keyed_rng(seed, &format!("vre/{}", v.id));
        let mut col = Vec::with_capacity(hours);
        match v.technology {
            VreTechnology::Solar => {
                for t in 0..hours {
                    let hod = (t % 24) as f64;
                    let day = (t / 24) as f64;
                    let shape = (PI * (hod - 6.0) / 12.0).sin().max(0.0);
                    let seasonal = 1.0 - 0.25 * (2.0 * PI * day / 365.0).cos();
                    let cloud = 0.85 + 0.15 * rng.next_f64();
                    col.push((v.capacity * shape * seasonal * cloud).clamp(0.0, v.capacity));
                }
            }
            VreTechnology::Wind => {
                let p1 = rng.next_f64() * 2.0 * PI;
                let p2 = rng.next_f64() * 2.0 * PI;
                let p3 = rng.next_f64() * 2.0 * PI;
                for t in 0..hours {
                    let x = t as f64;
                    let s = 0.45
                        + 0.25 * (2.0 * PI * x / 37.0 + p1).sin()
                        + 0.18 * (2.0 * PI * x / 101.0 + p2).sin()
                        + 0.12 * (2.0 * PI * x / 13.0 + p3).sin()
                        + 0.06 * (2.0 * rng.next_f64() - 1.0);
                    col.push((v.capacity * s).clamp(0.0, v.capacity));
                }
            }
        }
        series.availability.set_column(&v.availability_series_key, col);
    }

    let req: Vec<f64> = total_load
        .iter()
        .map(|&l| params.reserve_fraction * l)
        .collect();
    series.reserve_requirements.set_column("raise", req);

    Ok((spec, series))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::validate_system;

    #[test]
    fn seven_zone_year_validates() {
        let (spec, series) = synth_system(&SynthParams::default_with(7, 8760), 1).unwrap();
        assert_eq!(spec.zones.len(), 7);
        assert_eq!(spec.lines.len(), 7);
        assert!(validate_system(&spec, &series).is_ok());
    }

    #[test]
    fn same_seed_identical_twice() {
        let p = SynthParams::default_with(3, 72);
        let (s1, f1) = synth_system(&p, 9).unwrap();
        let (s2, f2) = synth_system(&p, 9).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(f1, f2);
    }

    #[test]
    fn different_seed_differs() {
        let p = SynthParams::default_with(2, 48);
        let (_, f1) = synth_system(&p, 1).unwrap();
        let (_, f2) = synth_system(&p, 2).unwrap();
        assert_ne!(f1, f2);
    }

    #[test]
    fn rejects_bad_params() {
        assert_eq!(
            synth_system(&SynthParams::default_with(0, 24), 1),
            Err(SynthError::NoZones(0))
        );
        assert_eq!(
            synth_system(&SynthParams::default_with(1, 36), 1),
            Err(SynthError::BadHours(36))
        );
    }
}
