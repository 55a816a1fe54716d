//! Static grid description: zones, lines, units, reserve products.
//!
//! All types are immutable after construction and safe to share across
//! threads. `validate_system` is the gate every downstream operation
//! assumes has passed.

use crate::series::TimeSeriesFrame;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::f64::consts::FRAC_PI_2;
use std::fmt;

/// Default bus-angle bounds when a descriptor does not provide them.
pub const DEFAULT_ANGLE_BOUND: f64 = FRAC_PI_2;
/// Default dropped-load penalty, $/MWh.
pub const DEFAULT_DROP_PENALTY: f64 = 10_000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: String,
    pub name: String,
    pub angle_min: f64,
    pub angle_max: f64,
}

impl Zone {
    pub fn new(id: impl Into<String>) -> Self {
        let id = id.into();
        Zone {
            name: id.clone(),
            id,
            angle_min: -DEFAULT_ANGLE_BOUND,
            angle_max: DEFAULT_ANGLE_BOUND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub id: String,
    pub from_zone: String,
    pub to_zone: String,
    /// Susceptance in MW per radian of angle difference.
    pub susceptance: f64,
    pub flow_min: f64,
    pub flow_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalUnit {
    pub id: String,
    pub zone: String,
    pub p_min: f64,
    pub p_max: f64,
    /// $/MWh
    pub fuel_cost: f64,
    /// $ per start
    pub startup_cost: f64,
    /// $ per stop
    pub shutdown_cost: f64,
    /// MW/h
    pub ramp_up: f64,
    /// MW/h
    pub ramp_down: f64,
    /// Reserve products this unit may provide.
    pub reserve_eligible: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VreTechnology {
    Solar,
    Wind,
}

impl fmt::Display for VreTechnology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VreTechnology::Solar => write!(f, "solar"),
            VreTechnology::Wind => write!(f, "wind"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VreUnit {
    pub id: String,
    pub zone: String,
    pub technology: VreTechnology,
    pub capacity: f64,
    /// Column key in the availability series file.
    pub availability_series_key: String,
    pub reserve_eligible: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StorageTechnology {
    Sdes,
    Ldes,
}

impl StorageTechnology {
    /// Study defaults: charge efficiency, duration, nominal op cost.
    pub fn default_eta_charge(self) -> f64 {
        match self {
            StorageTechnology::Sdes => 0.85,
            StorageTechnology::Ldes => 0.65,
        }
    }
    pub fn default_duration_hours(self) -> f64 {
        match self {
            StorageTechnology::Sdes => 4.0,
            StorageTechnology::Ldes => 10.0,
        }
    }
    pub fn default_op_cost(self) -> f64 {
        match self {
            StorageTechnology::Sdes => 0.001,
            StorageTechnology::Ldes => 0.005,
        }
    }
}

impl fmt::Display for StorageTechnology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StorageTechnology::Sdes => write!(f, "sdes"),
            StorageTechnology::Ldes => write!(f, "ldes"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageUnit {
    pub id: String,
    pub zone: String,
    pub technology: StorageTechnology,
    /// Maximum charging power, MW.
    pub charge_max: f64,
    /// Maximum discharging power, MW.
    pub discharge_max: f64,
    pub duration_hours: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub eta_charge: f64,
    pub eta_discharge: f64,
    /// Nominal operating cost on charge and discharge, $/MWh.
    pub op_cost_nominal: f64,
    pub reserve_eligible: Vec<String>,
}

impl StorageUnit {
    /// Build a unit with the study-default duration, efficiency, minimum
    /// level (10% of capacity) and nominal op cost for its technology.
    pub fn with_defaults(
        id: impl Into<String>,
        zone: impl Into<String>,
        technology: StorageTechnology,
        discharge_max: f64,
    ) -> Self {
        let duration = technology.default_duration_hours();
        let soc_max = duration * discharge_max;
        StorageUnit {
            id: id.into(),
            zone: zone.into(),
            technology,
            charge_max: discharge_max,
            discharge_max,
            duration_hours: duration,
            soc_min: 0.1 * soc_max,
            soc_max,
            eta_charge: technology.default_eta_charge(),
            eta_discharge: 1.0,
            op_cost_nominal: technology.default_op_cost(),
            reserve_eligible: Vec::new(),
        }
    }

    /// Installed energy capacity, MWh (equal to `soc_max`).
    pub fn energy_capacity(&self) -> f64 {
        self.soc_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReserveDirection {
    Raise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReserveProduct {
    pub id: String,
    pub direction: ReserveDirection,
    /// Column key in the reserve-requirement series file.
    pub requirement_series_key: String,
}

/// Storage-cost perturbation configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationConfig {
    /// Fractional spread: each device cost becomes nominal * (1 + u),
    /// u ~ U[-pct, +pct].
    pub pct: f64,
    pub seed: u64,
}

impl Default for PerturbationConfig {
    fn default() -> Self {
        PerturbationConfig { pct: 0.10, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub zones: Vec<Zone>,
    pub lines: Vec<Line>,
    pub thermal_units: Vec<ThermalUnit>,
    pub vre_units: Vec<VreUnit>,
    pub storage_units: Vec<StorageUnit>,
    pub reserve_products: Vec<ReserveProduct>,
    /// $/MWh penalty on dropped load.
    pub penalty_dropped_load: f64,
    pub perturbation: PerturbationConfig,
}

impl SystemSpec {
    pub fn empty() -> Self {
        SystemSpec {
            zones: Vec::new(),
            lines: Vec::new(),
            thermal_units: Vec::new(),
            vre_units: Vec::new(),
            storage_units: Vec::new(),
            reserve_products: Vec::new(),
            penalty_dropped_load: DEFAULT_DROP_PENALTY,
            perturbation: PerturbationConfig::default(),
        }
    }

    pub fn zone_index(&self, id: &str) -> Option<usize> {
        self.zones.iter().position(|z| z.id == id)
    }
}

/// One validation finding: entity, field, violated rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub entity: String,
    pub field: String,
    pub rule: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}: {}", self.entity, self.field, self.rule)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, entity: &str, field: &str, rule: impl Into<String>) {
        self.violations.push(Violation {
            entity: entity.to_string(),
            field: field.to_string(),
            rule: rule.into(),
        });
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty()
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

fn finite_nonneg(v: f64) -> bool {
    v.is_finite() && v >= 0.0
}

/// Check every structural invariant of the system and the alignment of the
/// time-series frame. Violations are data, not failures: the function
/// always returns a report.
///
/// Negated comparisons are deliberate: they treat NaN as a violation.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn validate_system(spec: &SystemSpec, series: &TimeSeriesFrame) -> ValidationReport {
    let mut rep = ValidationReport::default();

    let mut ids: HashSet<String> = HashSet::new();
    let mut check_id = |rep: &mut ValidationReport, entity: &str, id: &str| {
        if !valid_id(id) {
            rep.push(entity, "id", "ids must be non-empty [A-Za-z0-9_.-]");
        }
        if !ids.insert(id.to_string()) {
            rep.push(entity, "id", format!("duplicate id `{id}`"));
        }
    };

    for z in &spec.zones {
        check_id(&mut rep, &z.id, &z.id);
        if !(z.angle_min < z.angle_max) {
            rep.push(&z.id, "angle_min", "angle_min < angle_max");
        }
    }
    let zone_ids: HashSet<&str> = spec.zones.iter().map(|z| z.id.as_str()).collect();
    let product_ids: HashSet<&str> = spec
        .reserve_products
        .iter()
        .map(|p| p.id.as_str())
        .collect();

    let check_zone_ref = |rep: &mut ValidationReport, entity: &str, zone: &str| {
        if !zone_ids.contains(zone) {
            rep.push(entity, "zone", format!("references unknown zone `{zone}`"));
        }
    };
    let check_products = |rep: &mut ValidationReport, entity: &str, eligible: &[String]| {
        for p in eligible {
            if !product_ids.contains(p.as_str()) {
                rep.push(
                    entity,
                    "reserve_eligible",
                    format!("references unknown reserve product `{p}`"),
                );
            }
        }
    };

    for l in &spec.lines {
        check_id(&mut rep, &l.id, &l.id);
        if !zone_ids.contains(l.from_zone.as_str()) {
            rep.push(&l.id, "from_zone", "references unknown zone");
        }
        if !zone_ids.contains(l.to_zone.as_str()) {
            rep.push(&l.id, "to_zone", "references unknown zone");
        }
        if l.from_zone == l.to_zone {
            rep.push(&l.id, "to_zone", "from_zone != to_zone");
        }
        if !(l.susceptance > 0.0) || !l.susceptance.is_finite() {
            rep.push(&l.id, "susceptance", "susceptance > 0");
        }
        if !(l.flow_min <= 0.0 && 0.0 <= l.flow_max) {
            rep.push(&l.id, "flow_min", "flow_min <= 0 <= flow_max");
        }
    }

    let mut max_fuel: f64 = 0.0;
    for t in &spec.thermal_units {
        check_id(&mut rep, &t.id, &t.id);
        check_zone_ref(&mut rep, &t.id, &t.zone);
        check_products(&mut rep, &t.id, &t.reserve_eligible);
        if !(0.0 <= t.p_min && t.p_min <= t.p_max) || !t.p_max.is_finite() {
            rep.push(&t.id, "p_min", "0 <= p_min <= p_max");
        }
        if !finite_nonneg(t.fuel_cost)
            || !finite_nonneg(t.startup_cost)
            || !finite_nonneg(t.shutdown_cost)
        {
            rep.push(&t.id, "fuel_cost", "costs >= 0");
        }
        if !(t.ramp_up > 0.0) || !(t.ramp_down > 0.0) {
            rep.push(&t.id, "ramp_up", "ramp_up > 0 and ramp_down > 0");
        }
        max_fuel = max_fuel.max(t.fuel_cost);
    }

    for v in &spec.vre_units {
        check_id(&mut rep, &v.id, &v.id);
        check_zone_ref(&mut rep, &v.id, &v.zone);
        check_products(&mut rep, &v.id, &v.reserve_eligible);
        if !(v.capacity > 0.0) || !v.capacity.is_finite() {
            rep.push(&v.id, "capacity", "capacity > 0");
        }
        match series.availability.column(&v.availability_series_key) {
            None => rep.push(
                &v.id,
                "availability_series_key",
                format!("unresolved series key `{}`", v.availability_series_key),
            ),
            Some(col) => {
                if col.iter().any(|&a| a < 0.0 || a > v.capacity + 1e-9) {
                    rep.push(
                        &v.id,
                        "availability_series_key",
                        "availability values must lie in [0, capacity]",
                    );
                }
            }
        }
    }

    for s in &spec.storage_units {
        check_id(&mut rep, &s.id, &s.id);
        check_zone_ref(&mut rep, &s.id, &s.zone);
        check_products(&mut rep, &s.id, &s.reserve_eligible);
        if !(s.soc_min > 0.0 && s.soc_min < s.soc_max) {
            rep.push(&s.id, "soc_min", "0 < soc_min < soc_max");
        }
        if !(s.charge_max > 0.0) || !(s.discharge_max > 0.0) {
            rep.push(&s.id, "charge_max", "charge_max > 0 and discharge_max > 0");
        }
        if (s.soc_max - s.duration_hours * s.discharge_max).abs() > 1e-6 * s.soc_max.max(1.0) {
            rep.push(
                &s.id,
                "soc_max",
                "soc_max = duration_hours * discharge_max",
            );
        }
        if !(s.eta_charge > 0.0 && s.eta_charge <= 1.0) {
            rep.push(&s.id, "eta_charge", "0 < eta_charge <= 1");
        }
        if !(s.eta_discharge > 0.0 && s.eta_discharge <= 1.0) {
            rep.push(&s.id, "eta_discharge", "0 < eta_discharge <= 1");
        }
        if !finite_nonneg(s.op_cost_nominal) {
            rep.push(&s.id, "op_cost_nominal", "op_cost_nominal >= 0");
        }
    }

    for p in &spec.reserve_products {
        check_id(&mut rep, &p.id, &p.id);
        match series.reserve_requirements.column(&p.requirement_series_key) {
            None => rep.push(
                &p.id,
                "requirement_series_key",
                format!("unresolved series key `{}`", p.requirement_series_key),
            ),
            Some(col) => {
                if col.iter().any(|&r| r < 0.0) {
                    rep.push(&p.id, "requirement_series_key", "requirement values >= 0");
                }
            }
        }
    }

    if !(spec.penalty_dropped_load > max_fuel) {
        rep.push(
            "system",
            "penalty_dropped_load",
            "penalty must exceed the maximum fuel cost",
        );
    }
    if !(0.0..1.0).contains(&spec.perturbation.pct) {
        rep.push("system", "perturbation.pct", "0 <= pct < 1");
    }

    // Frame-level checks: one load column per zone, aligned lengths,
    // no negative values, no missing hours (by construction of the frame).
    for z in &spec.zones {
        if series.load.column(&z.id).is_none() {
            rep.push(&z.id, "load", format!("missing load series for zone `{}`", z.id));
        }
    }
    for (name, col) in series.load.iter() {
        if col.len() != series.hours {
            rep.push(
                name,
                "load",
                format!("series length mismatch: {} != {}", col.len(), series.hours),
            );
        }
        if col.iter().any(|&v| v < 0.0) {
            rep.push(name, "load", "load values >= 0");
        }
    }
    for table in [&series.availability, &series.reserve_requirements] {
        for (name, col) in table.iter() {
            if col.len() != series.hours {
                rep.push(
                    name,
                    "series",
                    format!("series length mismatch: {} != {}", col.len(), series.hours),
                );
            }
        }
    }

    rep
}

/// System-wide net load: total demand minus total VRE availability,
/// per hour over `range`.
pub fn net_load(
    spec: &SystemSpec,
    series: &TimeSeriesFrame,
    range: std::ops::Range<usize>,
) -> Result<Vec<f64>, String> {
    if range.end > series.hours || range.start > range.end {
        return Err(format!(
            "hour range {}..{} out of bounds for {}-hour series",
            range.start, range.end, series.hours
        ));
    }
    let mut out = vec![0.0; range.len()];
    for z in &spec.zones {
        let col = series
            .load
            .column(&z.id)
            .ok_or_else(|| format!("missing load series for zone `{}`", z.id))?;
        for (i, t) in range.clone().enumerate() {
            out[i] += col[t];
        }
    }
    for v in &spec.vre_units {
        let col = series
            .availability
            .column(&v.availability_series_key)
            .ok_or_else(|| format!("unresolved series key `{}`", v.availability_series_key))?;
        for (i, t) in range.clone().enumerate() {
            out[i] -= col[t];
        }
    }
    Ok(out)
}
