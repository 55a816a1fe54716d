//! Translation of one optimization window into a sparse MILP.
//!
//! One window covers `hours` consecutive hours. Per hour the variable
//! blocks are laid out in a fixed order (the catalog's declared ordering
//! policy), hour-major:
//!
//! 1. thermal dispatch `p`, commitment `x`, startup `x_su`, shutdown `x_sd`
//! 2. VRE dispatch
//! 3. storage charge `p_c`, discharge `p_d`, mode binary `x_c`, `soc`
//! 4. reserve provision per (product, provider)
//! 5. line flow, bus angle (only on networked systems)
//! 6. dropped load per zone
//!
//! Rows per hour follow: nodal balance, thermal max/min with reserves,
//! ramping (range row), commitment logic, VRE availability (for
//! reserve-eligible units), reserve adequacy, storage charge/discharge
//! caps, SOC recursion, storage reserve headroom, and DC flow definition.

use crate::problem::ProblemError;
use crate::rng::keyed_rng;
use crate::series::TimeSeriesFrame;
use crate::system::SystemSpec;
use crate::MilpProblem;
use serde::{Deserialize, Serialize};
use std::ops::Range;
use thiserror::Error;

const INF: f64 = f64::INFINITY;

#[derive(Debug, Error, PartialEq)]
pub enum FormulationError {
    #[error("window {start}..{end} out of bounds for {hours}-hour series")]
    BadWindow {
        start: usize,
        end: usize,
        hours: usize,
    },
    #[error("initial SOC {value} outside [{lo}, {hi}] for storage `{unit}`")]
    InitSocOutOfBounds {
        unit: String,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("initial generation {value} outside [0, {p_max}] for thermal `{unit}`")]
    InitPowerOutOfBounds {
        unit: String,
        value: f64,
        p_max: f64,
    },
    #[error("initial generation {value} on offline thermal `{unit}`")]
    InitPowerWhileOff { unit: String, value: f64 },
    #[error("missing series `{0}`")]
    MissingSeries(String),
    #[error("cost config covers {got} storage units, spec has {want}")]
    CostConfigMismatch { got: usize, want: usize },
    #[error("initial-condition vectors do not match the fleet")]
    InitShapeMismatch,
}

/// How Eq-10-style SOC bookkeeping applies the efficiencies.
///
/// `Physical` charges at `eta_c` and discharges at `1/eta_d` (round trip
/// `eta_c * eta_d`); `AsPrinted` is the textbook-literal form
/// (`+ p_c/eta_c - eta_d * p_d`), which rewards cycling when
/// `eta_c < 1` and exists for reproduction studies only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EfficiencyConvention {
    Physical,
    AsPrinted,
}

impl std::str::FromStr for EfficiencyConvention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "physical" => Ok(EfficiencyConvention::Physical),
            "as-printed" | "as_printed" => Ok(EfficiencyConvention::AsPrinted),
            other => Err(format!("unknown efficiency convention `{other}`")),
        }
    }
}

impl std::fmt::Display for EfficiencyConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EfficiencyConvention::Physical => write!(f, "physical"),
            EfficiencyConvention::AsPrinted => write!(f, "as_printed"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormulationOptions {
    pub efficiency: EfficiencyConvention,
    /// Relax startup/shutdown indicators to continuous [0,1].
    pub relax_startup_binaries: bool,
}

impl Default for FormulationOptions {
    fn default() -> Self {
        FormulationOptions {
            efficiency: EfficiencyConvention::Physical,
            relax_startup_binaries: false,
        }
    }
}

/// Per-run storage operating costs after perturbation, plus the penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostConfig {
    pub storage_op_cost: Vec<StorageCost>,
    pub drop_penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageCost {
    pub unit: String,
    pub op_cost: f64,
}

/// Draw each device's operating cost as `nominal * (1 + u)` with
/// `u ~ U[-pct, +pct]` keyed on `(seed, device id)`, so the draw is stable
/// under device reordering.
pub fn perturb_storage_costs(spec: &SystemSpec, pct: f64, seed: u64) -> CostConfig {
    assert!((0.0..1.0).contains(&pct), "pct must be in [0, 1)");
    let storage_op_cost = spec
        .storage_units
        .iter()
        .map(|s| {
            let u = if pct == 0.0 {
                0.0
            } else {
                keyed_rng(seed, &format!("perturb/{}", s.id)).uniform(-pct, pct)
            };
            StorageCost {
                unit: s.id.clone(),
                op_cost: s.op_cost_nominal * (1.0 + u),
            }
        })
        .collect();
    CostConfig {
        storage_op_cost,
        drop_penalty: spec.penalty_dropped_load,
    }
}

/// Who provides a reserve product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provider {
    Thermal(usize),
    Vre(usize),
    Storage(usize),
}

/// Decoded identity of one column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    ThermalP(usize),
    ThermalOn(usize),
    ThermalStart(usize),
    ThermalStop(usize),
    VreP(usize),
    StorageCharge(usize),
    StorageDischarge(usize),
    StorageMode(usize),
    StorageSoc(usize),
    Reserve { product: usize, slot: usize },
    LineFlow(usize),
    Angle(usize),
    DropLoad(usize),
}

/// Bijective map between (kind, entity, hour) and column index under the
/// hour-major ordering policy.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableCatalog {
    pub hours: usize,
    per_hour: usize,
    n_thermal: usize,
    n_vre: usize,
    n_storage: usize,
    n_lines: usize,
    n_zones: usize,
    network: bool,
    /// Providers per reserve product, in declaration order.
    providers: Vec<Vec<Provider>>,
    /// Per-hour offset of each reserve product's provider block.
    reserve_offsets: Vec<usize>,
    off_vre: usize,
    off_storage: usize,
    off_reserve: usize,
    off_flow: usize,
    off_angle: usize,
    off_drop: usize,
    /// (product, slot) pairs per thermal/vre/storage unit.
    thermal_slots: Vec<Vec<(usize, usize)>>,
    vre_slots: Vec<Vec<(usize, usize)>>,
    storage_slots: Vec<Vec<(usize, usize)>>,
}

impl VariableCatalog {
    pub fn build(spec: &SystemSpec, hours: usize) -> Self {
        let n_thermal = spec.thermal_units.len();
        let n_vre = spec.vre_units.len();
        let n_storage = spec.storage_units.len();
        let network = !spec.lines.is_empty();
        let n_lines = if network { spec.lines.len() } else { 0 };
        let n_zones = spec.zones.len();

        let mut providers: Vec<Vec<Provider>> = Vec::new();
        let mut thermal_slots = vec![Vec::new(); n_thermal];
        let mut vre_slots = vec![Vec::new(); n_vre];
        let mut storage_slots = vec![Vec::new(); n_storage];
        for (pi, product) in spec.reserve_products.iter().enumerate() {
            let mut list = Vec::new();
            for (i, u) in spec.thermal_units.iter().enumerate() {
                if u.reserve_eligible.contains(&product.id) {
                    thermal_slots[i].push((pi, list.len()));
                    list.push(Provider::Thermal(i));
                }
            }
            for (i, u) in spec.vre_units.iter().enumerate() {
                if u.reserve_eligible.contains(&product.id) {
                    vre_slots[i].push((pi, list.len()));
                    list.push(Provider::Vre(i));
                }
            }
            for (i, u) in spec.storage_units.iter().enumerate() {
                if u.reserve_eligible.contains(&product.id) {
                    storage_slots[i].push((pi, list.len()));
                    list.push(Provider::Storage(i));
                }
            }
            providers.push(list);
        }

        let off_vre = 4 * n_thermal;
        let off_storage = off_vre + n_vre;
        let off_reserve = off_storage + 4 * n_storage;
        let mut reserve_offsets = Vec::with_capacity(providers.len());
        let mut cursor = off_reserve;
        for list in &providers {
            reserve_offsets.push(cursor);
            cursor += list.len();
        }
        let off_flow = cursor;
        let off_angle = off_flow + n_lines;
        let off_drop = off_angle + if network { n_zones } else { 0 };
        let per_hour = off_drop + n_zones;

        VariableCatalog {
            hours,
            per_hour,
            n_thermal,
            n_vre,
            n_storage,
            n_lines,
            n_zones,
            network,
            providers,
            reserve_offsets,
            off_vre,
            off_storage,
            off_reserve,
            off_flow,
            off_angle,
            off_drop,
            thermal_slots,
            vre_slots,
            storage_slots,
        }
    }

    pub fn num_cols(&self) -> usize {
        self.hours * self.per_hour
    }

    pub fn has_network(&self) -> bool {
        self.network
    }

    pub fn n_thermal(&self) -> usize {
        self.n_thermal
    }

    pub fn n_storage(&self) -> usize {
        self.n_storage
    }

    fn base(&self, t: usize) -> usize {
        debug_assert!(t < self.hours);
        t * self.per_hour
    }

    pub fn thermal_p(&self, i: usize, t: usize) -> usize {
        self.base(t) + i
    }
    pub fn thermal_on(&self, i: usize, t: usize) -> usize {
        self.base(t) + self.n_thermal + i
    }
    pub fn thermal_start(&self, i: usize, t: usize) -> usize {
        self.base(t) + 2 * self.n_thermal + i
    }
    pub fn thermal_stop(&self, i: usize, t: usize) -> usize {
        self.base(t) + 3 * self.n_thermal + i
    }
    pub fn vre_p(&self, i: usize, t: usize) -> usize {
        self.base(t) + self.off_vre + i
    }
    pub fn storage_charge(&self, i: usize, t: usize) -> usize {
        self.base(t) + self.off_storage + i
    }
    pub fn storage_discharge(&self, i: usize, t: usize) -> usize {
        self.base(t) + self.off_storage + self.n_storage + i
    }
    pub fn storage_mode(&self, i: usize, t: usize) -> usize {
        self.base(t) + self.off_storage + 2 * self.n_storage + i
    }
    pub fn storage_soc(&self, i: usize, t: usize) -> usize {
        self.base(t) + self.off_storage + 3 * self.n_storage + i
    }
    pub fn reserve(&self, product: usize, slot: usize, t: usize) -> usize {
        self.base(t) + self.reserve_offsets[product] + slot
    }
    pub fn line_flow(&self, l: usize, t: usize) -> usize {
        debug_assert!(self.network);
        self.base(t) + self.off_flow + l
    }
    pub fn angle(&self, z: usize, t: usize) -> usize {
        debug_assert!(self.network);
        self.base(t) + self.off_angle + z
    }
    pub fn drop_load(&self, z: usize, t: usize) -> usize {
        self.base(t) + self.off_drop + z
    }

    pub fn providers(&self, product: usize) -> &[Provider] {
        &self.providers[product]
    }
    pub fn thermal_reserve_slots(&self, i: usize) -> &[(usize, usize)] {
        &self.thermal_slots[i]
    }
    pub fn vre_reserve_slots(&self, i: usize) -> &[(usize, usize)] {
        &self.vre_slots[i]
    }
    pub fn storage_reserve_slots(&self, i: usize) -> &[(usize, usize)] {
        &self.storage_slots[i]
    }

    /// Decode a column back to (kind, hour). Inverse of the index maps.
    pub fn kind_of(&self, col: usize) -> (VarKind, usize) {
        let t = col / self.per_hour;
        let mut o = col % self.per_hour;
        if o < self.n_thermal {
            return (VarKind::ThermalP(o), t);
        }
        o -= self.n_thermal;
        if o < self.n_thermal {
            return (VarKind::ThermalOn(o), t);
        }
        o -= self.n_thermal;
        if o < self.n_thermal {
            return (VarKind::ThermalStart(o), t);
        }
        o -= self.n_thermal;
        if o < self.n_thermal {
            return (VarKind::ThermalStop(o), t);
        }
        o -= self.n_thermal;
        if o < self.n_vre {
            return (VarKind::VreP(o), t);
        }
        o -= self.n_vre;
        if o < self.n_storage {
            return (VarKind::StorageCharge(o), t);
        }
        o -= self.n_storage;
        if o < self.n_storage {
            return (VarKind::StorageDischarge(o), t);
        }
        o -= self.n_storage;
        if o < self.n_storage {
            return (VarKind::StorageMode(o), t);
        }
        o -= self.n_storage;
        if o < self.n_storage {
            return (VarKind::StorageSoc(o), t);
        }
        o -= self.n_storage;
        let reserve_len: usize = self.providers.iter().map(|l| l.len()).sum();
        if o < reserve_len {
            let mut rest = o;
            for (pi, list) in self.providers.iter().enumerate() {
                if rest < list.len() {
                    return (
                        VarKind::Reserve {
                            product: pi,
                            slot: rest,
                        },
                        t,
                    );
                }
                rest -= list.len();
            }
            unreachable!();
        }
        o -= reserve_len;
        if self.network {
            if o < self.n_lines {
                return (VarKind::LineFlow(o), t);
            }
            o -= self.n_lines;
            if o < self.n_zones {
                return (VarKind::Angle(o), t);
            }
            o -= self.n_zones;
        }
        (VarKind::DropLoad(o), t)
    }

    /// Columns carrying continuous dispatch quantities: thermal and VRE
    /// generation, storage charge and discharge.
    pub fn dispatch_columns(&self) -> Vec<usize> {
        let mut cols = Vec::new();
        for t in 0..self.hours {
            for i in 0..self.n_thermal {
                cols.push(self.thermal_p(i, t));
            }
            for i in 0..self.n_vre {
                cols.push(self.vre_p(i, t));
            }
            for i in 0..self.n_storage {
                cols.push(self.storage_charge(i, t));
                cols.push(self.storage_discharge(i, t));
            }
        }
        cols
    }
}

/// Hour "-1" state coupling a window to its predecessor.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialConditions {
    pub thermal_on: Vec<bool>,
    pub thermal_power: Vec<f64>,
    pub soc: Vec<f64>,
}

impl InitialConditions {
    /// Neutral first-window state: all thermal units off with zero prior
    /// generation and every storage at 50% of capacity.
    pub fn cold_start(spec: &SystemSpec) -> Self {
        InitialConditions {
            thermal_on: vec![false; spec.thermal_units.len()],
            thermal_power: vec![0.0; spec.thermal_units.len()],
            soc: spec.storage_units.iter().map(|s| 0.5 * s.soc_max).collect(),
        }
    }

    pub fn validate(&self, spec: &SystemSpec) -> Result<(), FormulationError> {
        if self.thermal_on.len() != spec.thermal_units.len()
            || self.thermal_power.len() != spec.thermal_units.len()
            || self.soc.len() != spec.storage_units.len()
        {
            return Err(FormulationError::InitShapeMismatch);
        }
        for (i, u) in spec.thermal_units.iter().enumerate() {
            let p = self.thermal_power[i];
            if !(0.0..=u.p_max + 1e-6).contains(&p) {
                return Err(FormulationError::InitPowerOutOfBounds {
                    unit: u.id.clone(),
                    value: p,
                    p_max: u.p_max,
                });
            }
            if !self.thermal_on[i] && p > 1e-6 {
                return Err(FormulationError::InitPowerWhileOff {
                    unit: u.id.clone(),
                    value: p,
                });
            }
        }
        for (i, s) in spec.storage_units.iter().enumerate() {
            let v = self.soc[i];
            if v < s.soc_min - 1e-6 || v > s.soc_max + 1e-6 {
                return Err(FormulationError::InitSocOutOfBounds {
                    unit: s.id.clone(),
                    value: v,
                    lo: s.soc_min,
                    hi: s.soc_max,
                });
            }
        }
        Ok(())
    }
}

/// One window's MILP: the sparse instance, its catalog, and metadata.
#[derive(Debug, Clone)]
pub struct WindowMilp {
    pub problem: MilpProblem,
    pub catalog: VariableCatalog,
    pub start_hour: usize,
    pub hours: usize,
    /// Balance row index per (hour, zone), for dual extraction.
    pub balance_rows: Vec<Vec<usize>>,
    /// Thermal status at hour -1, for deriving startup indicators.
    pub init_on: Vec<bool>,
}

impl WindowMilp {
    /// Copy with every binary pinned at the incumbent and integrality
    /// cleared; the continuous feasible set is otherwise identical.
    pub fn fix_binaries(&self, incumbent: &[f64]) -> Result<WindowMilp, ProblemError> {
        Ok(WindowMilp {
            problem: self.problem.fix_integers_at(incumbent)?,
            catalog: self.catalog.clone(),
            start_hour: self.start_hour,
            hours: self.hours,
            balance_rows: self.balance_rows.clone(),
            init_on: self.init_on.clone(),
        })
    }

    /// Candidate integral assignments derived from an LP relaxation point:
    /// commitments rounded (conservatively up, and to nearest), startup and
    /// shutdown indicators derived from the commitment pattern, and storage
    /// modes taken from the charge/discharge split. Verified by the solver
    /// before acceptance, so a proposal may freely leave the node's subtree.
    pub fn propose_assignments(&self, x: &[f64]) -> Vec<Vec<(usize, f64)>> {
        let cat = &self.catalog;
        let mut out: Vec<Vec<(usize, f64)>> = Vec::new();
        for ceil_mode in [true, false] {
            let mut fixing = Vec::new();
            for i in 0..cat.n_thermal() {
                let mut prev = self.init_on[i] as i32 as f64;
                for t in 0..cat.hours {
                    let v = x[cat.thermal_on(i, t)];
                    let r = if ceil_mode {
                        if v > 1e-6 {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        v.round()
                    };
                    fixing.push((cat.thermal_on(i, t), r));
                    fixing.push((cat.thermal_start(i, t), (r - prev).max(0.0)));
                    fixing.push((cat.thermal_stop(i, t), (prev - r).max(0.0)));
                    prev = r;
                }
            }
            for sidx in 0..cat.n_storage() {
                for t in 0..cat.hours {
                    let pc = x[cat.storage_charge(sidx, t)];
                    let pd = x[cat.storage_discharge(sidx, t)];
                    let mode = if pc > pd.max(1e-9) { 1.0 } else { 0.0 };
                    fixing.push((cat.storage_mode(sidx, t), mode));
                }
            }
            if !out.contains(&fixing) {
                out.push(fixing);
            }
        }
        out
    }
}

/// Solve a window MILP under the repair heuristic every simulation,
/// pricing, and experiment path shares, so replays are bit-identical.
pub fn solve_window(
    window: &WindowMilp,
    settings: &crate::solver::SolveSettings,
) -> Result<crate::SolveResult, crate::solver::SolveError> {
    let propose = |x: &[f64]| window.propose_assignments(x);
    crate::solver::solve_milp_with(&window.problem, settings, Some(&propose))
}

/// Build the MILP for `window` (absolute hour indices into `series`).
pub fn build_window(
    spec: &SystemSpec,
    series: &TimeSeriesFrame,
    window: Range<usize>,
    init: &InitialConditions,
    costs: &CostConfig,
    options: &FormulationOptions,
) -> Result<WindowMilp, FormulationError> {
    if window.end > series.hours || window.start >= window.end {
        return Err(FormulationError::BadWindow {
            start: window.start,
            end: window.end,
            hours: series.hours,
        });
    }
    init.validate(spec)?;
    if costs.storage_op_cost.len() != spec.storage_units.len() {
        return Err(FormulationError::CostConfigMismatch {
            got: costs.storage_op_cost.len(),
            want: spec.storage_units.len(),
        });
    }

    let hours = window.len();
    let catalog = VariableCatalog::build(spec, hours);
    let mut p = MilpProblem::new();

    let load_cols: Vec<&[f64]> = spec
        .zones
        .iter()
        .map(|z| {
            series
                .load
                .column(&z.id)
                .ok_or_else(|| FormulationError::MissingSeries(z.id.clone()))
        })
        .collect::<Result<_, _>>()?;
    let avail_cols: Vec<&[f64]> = spec
        .vre_units
        .iter()
        .map(|v| {
            series
                .availability
                .column(&v.availability_series_key)
                .ok_or_else(|| FormulationError::MissingSeries(v.availability_series_key.clone()))
        })
        .collect::<Result<_, _>>()?;
    let req_cols: Vec<&[f64]> = spec
        .reserve_products
        .iter()
        .map(|r| {
            series
                .reserve_requirements
                .column(&r.requirement_series_key)
                .ok_or_else(|| FormulationError::MissingSeries(r.requirement_series_key.clone()))
        })
        .collect::<Result<_, _>>()?;

    // Columns, hour-major in catalog order.
    for t in 0..hours {
        let at = window.start + t;
        for u in &spec.thermal_units {
            p.add_col(format!("p[{},{t}]", u.id), u.fuel_cost, 0.0, u.p_max, false);
        }
        for u in &spec.thermal_units {
            p.add_col(format!("x[{},{t}]", u.id), 0.0, 0.0, 1.0, true);
        }
        let su_int = !options.relax_startup_binaries;
        for u in &spec.thermal_units {
            p.add_col(
                format!("xsu[{},{t}]", u.id),
                u.startup_cost,
                0.0,
                1.0,
                su_int,
            );
        }
        for u in &spec.thermal_units {
            p.add_col(
                format!("xsd[{},{t}]", u.id),
                u.shutdown_cost,
                0.0,
                1.0,
                su_int,
            );
        }
        for (i, u) in spec.vre_units.iter().enumerate() {
            p.add_col(
                format!("pv[{},{t}]", u.id),
                0.0,
                0.0,
                avail_cols[i][at].max(0.0),
                false,
            );
        }
        for (i, u) in spec.storage_units.iter().enumerate() {
            p.add_col(
                format!("pc[{},{t}]", u.id),
                costs.storage_op_cost[i].op_cost,
                0.0,
                u.charge_max,
                false,
            );
        }
        for (i, u) in spec.storage_units.iter().enumerate() {
            p.add_col(
                format!("pd[{},{t}]", u.id),
                costs.storage_op_cost[i].op_cost,
                0.0,
                u.discharge_max,
                false,
            );
        }
        for u in &spec.storage_units {
            p.add_col(format!("xc[{},{t}]", u.id), 0.0, 0.0, 1.0, true);
        }
        for u in &spec.storage_units {
            p.add_col(
                format!("soc[{},{t}]", u.id),
                0.0,
                u.soc_min,
                u.soc_max,
                false,
            );
        }
        for (pi, product) in spec.reserve_products.iter().enumerate() {
            for (slot, prov) in catalog.providers(pi).iter().enumerate() {
                let who = match prov {
                    Provider::Thermal(i) => &spec.thermal_units[*i].id,
                    Provider::Vre(i) => &spec.vre_units[*i].id,
                    Provider::Storage(i) => &spec.storage_units[*i].id,
                };
                let col = p.add_col(
                    format!("r[{},{},{t}]", product.id, who),
                    0.0,
                    0.0,
                    INF,
                    false,
                );
                debug_assert_eq!(col, catalog.reserve(pi, slot, t));
            }
        }
        if catalog.has_network() {
            for l in &spec.lines {
                p.add_col(
                    format!("f[{},{t}]", l.id),
                    0.0,
                    l.flow_min,
                    l.flow_max,
                    false,
                );
            }
            for z in &spec.zones {
                p.add_col(
                    format!("th[{},{t}]", z.id),
                    0.0,
                    z.angle_min,
                    z.angle_max,
                    false,
                );
            }
        }
        for z in &spec.zones {
            p.add_col(
                format!("drop[{},{t}]", z.id),
                costs.drop_penalty,
                0.0,
                INF,
                false,
            );
        }
    }
    debug_assert_eq!(p.num_cols(), catalog.num_cols());

    // Rows, hour-major.
    let mut balance_rows: Vec<Vec<usize>> = Vec::with_capacity(hours);
    let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(64);
    for t in 0..hours {
        let at = window.start + t;

        // Nodal balance with dropped-load slack:
        // thermal + vre + discharge + net line supply + drop = load + charge
        let mut hour_rows = Vec::with_capacity(spec.zones.len());
        for (zi, z) in spec.zones.iter().enumerate() {
            coeffs.clear();
            for (i, u) in spec.thermal_units.iter().enumerate() {
                if u.zone == z.id {
                    coeffs.push((catalog.thermal_p(i, t), 1.0));
                }
            }
            for (i, u) in spec.vre_units.iter().enumerate() {
                if u.zone == z.id {
                    coeffs.push((catalog.vre_p(i, t), 1.0));
                }
            }
            for (i, u) in spec.storage_units.iter().enumerate() {
                if u.zone == z.id {
                    coeffs.push((catalog.storage_discharge(i, t), 1.0));
                    coeffs.push((catalog.storage_charge(i, t), -1.0));
                }
            }
            if catalog.has_network() {
                for (li, l) in spec.lines.iter().enumerate() {
                    if l.from_zone == z.id {
                        coeffs.push((catalog.line_flow(li, t), 1.0));
                    } else if l.to_zone == z.id {
                        coeffs.push((catalog.line_flow(li, t), -1.0));
                    }
                }
            }
            coeffs.push((catalog.drop_load(zi, t), 1.0));
            let d = load_cols[zi][at];
            hour_rows.push(p.add_row(format!("bal[{},{t}]", z.id), d, d, &coeffs));
        }
        balance_rows.push(hour_rows);

        // Thermal limits; reserve provision tightens both sides.
        for (i, u) in spec.thermal_units.iter().enumerate() {
            coeffs.clear();
            coeffs.push((catalog.thermal_p(i, t), 1.0));
            for &(pi, slot) in catalog.thermal_reserve_slots(i) {
                coeffs.push((catalog.reserve(pi, slot, t), 1.0));
            }
            coeffs.push((catalog.thermal_on(i, t), -u.p_max));
            p.add_row(format!("tmax[{},{t}]", u.id), -INF, 0.0, &coeffs);

            coeffs.clear();
            coeffs.push((catalog.thermal_p(i, t), 1.0));
            for &(pi, slot) in catalog.thermal_reserve_slots(i) {
                coeffs.push((catalog.reserve(pi, slot, t), 1.0));
            }
            coeffs.push((catalog.thermal_on(i, t), -u.p_min));
            p.add_row(format!("tmin[{},{t}]", u.id), 0.0, INF, &coeffs);
        }

        // Ramping as a range row; hour 0 couples to the prior dispatch.
        for (i, u) in spec.thermal_units.iter().enumerate() {
            if t == 0 {
                let base = init.thermal_power[i];
                p.add_row(
                    format!("ramp[{},0]", u.id),
                    base - u.ramp_down,
                    base + u.ramp_up,
                    &[(catalog.thermal_p(i, 0), 1.0)],
                );
            } else {
                p.add_row(
                    format!("ramp[{},{t}]", u.id),
                    -u.ramp_down,
                    u.ramp_up,
                    &[
                        (catalog.thermal_p(i, t), 1.0),
                        (catalog.thermal_p(i, t - 1), -1.0),
                    ],
                );
            }
        }

        // Commitment logic; hour 0 couples to the prior status.
        for (i, u) in spec.thermal_units.iter().enumerate() {
            if t == 0 {
                let rhs = -(init.thermal_on[i] as i32 as f64);
                p.add_row(
                    format!("logic[{},0]", u.id),
                    rhs,
                    rhs,
                    &[
                        (catalog.thermal_on(i, 0), -1.0),
                        (catalog.thermal_start(i, 0), 1.0),
                        (catalog.thermal_stop(i, 0), -1.0),
                    ],
                );
            } else {
                p.add_row(
                    format!("logic[{},{t}]", u.id),
                    0.0,
                    0.0,
                    &[
                        (catalog.thermal_on(i, t - 1), 1.0),
                        (catalog.thermal_on(i, t), -1.0),
                        (catalog.thermal_start(i, t), 1.0),
                        (catalog.thermal_stop(i, t), -1.0),
                    ],
                );
            }
        }

        // VRE availability cap; a row only when the unit carries reserves
        // (the dispatch bound already caps pure-energy units).
        for (i, u) in spec.vre_units.iter().enumerate() {
            let slots = catalog.vre_reserve_slots(i);
            if slots.is_empty() {
                continue;
            }
            coeffs.clear();
            coeffs.push((catalog.vre_p(i, t), 1.0));
            for &(pi, slot) in slots {
                coeffs.push((catalog.reserve(pi, slot, t), 1.0));
            }
            p.add_row(
                format!("avb[{},{t}]", u.id),
                -INF,
                avail_cols[i][at].max(0.0),
                &coeffs,
            );
        }

        // Reserve adequacy per product.
        for (pi, product) in spec.reserve_products.iter().enumerate() {
            coeffs.clear();
            for slot in 0..catalog.providers(pi).len() {
                coeffs.push((catalog.reserve(pi, slot, t), 1.0));
            }
            p.add_row(
                format!("rr[{},{t}]", product.id),
                req_cols[pi][at],
                INF,
                &coeffs,
            );
        }

        // Storage charge/discharge caps tied to the mode binary.
        for (i, u) in spec.storage_units.iter().enumerate() {
            p.add_row(
                format!("chg[{},{t}]", u.id),
                -INF,
                0.0,
                &[
                    (catalog.storage_charge(i, t), 1.0),
                    (catalog.storage_mode(i, t), -u.charge_max),
                ],
            );
            p.add_row(
                format!("dch[{},{t}]", u.id),
                -INF,
                u.discharge_max,
                &[
                    (catalog.storage_discharge(i, t), 1.0),
                    (catalog.storage_mode(i, t), u.discharge_max),
                ],
            );
        }

        // SOC recursion under the configured efficiency convention.
        for (i, u) in spec.storage_units.iter().enumerate() {
            let (chg_coeff, dch_coeff) = match options.efficiency {
                EfficiencyConvention::Physical => (-u.eta_charge, 1.0 / u.eta_discharge),
                EfficiencyConvention::AsPrinted => (-1.0 / u.eta_charge, u.eta_discharge),
            };
            coeffs.clear();
            coeffs.push((catalog.storage_soc(i, t), 1.0));
            coeffs.push((catalog.storage_charge(i, t), chg_coeff));
            coeffs.push((catalog.storage_discharge(i, t), dch_coeff));
            let rhs = if t == 0 {
                init.soc[i]
            } else {
                coeffs.push((catalog.storage_soc(i, t - 1), -1.0));
                0.0
            };
            p.add_row(format!("soc[{},{t}]", u.id), rhs, rhs, &coeffs);
        }

        // Raise-reserve headroom: discharge plus reserves within PD + charge.
        for (i, u) in spec.storage_units.iter().enumerate() {
            coeffs.clear();
            coeffs.push((catalog.storage_discharge(i, t), 1.0));
            for &(pi, slot) in catalog.storage_reserve_slots(i) {
                coeffs.push((catalog.reserve(pi, slot, t), 1.0));
            }
            coeffs.push((catalog.storage_charge(i, t), -1.0));
            p.add_row(format!("sres[{},{t}]", u.id), -INF, u.discharge_max, &coeffs);
        }

        // DC flow definition.
        if catalog.has_network() {
            for (li, l) in spec.lines.iter().enumerate() {
                let from = spec.zone_index(&l.from_zone).expect("validated");
                let to = spec.zone_index(&l.to_zone).expect("validated");
                p.add_row(
                    format!("flow[{},{t}]", l.id),
                    0.0,
                    0.0,
                    &[
                        (catalog.line_flow(li, t), 1.0),
                        (catalog.angle(from, t), -l.susceptance),
                        (catalog.angle(to, t), l.susceptance),
                    ],
                );
            }
        }
    }

    Ok(WindowMilp {
        problem: p,
        catalog,
        start_hour: window.start,
        hours,
        balance_rows,
        init_on: init.thermal_on.clone(),
    })
}

/// Recompute the window objective from a primal vector and the cost
/// config, independent of the solver's reported value.
pub fn window_objective(
    spec: &SystemSpec,
    catalog: &VariableCatalog,
    costs: &CostConfig,
    x: &[f64],
) -> f64 {
    let mut total = 0.0;
    for t in 0..catalog.hours {
        for (i, u) in spec.thermal_units.iter().enumerate() {
            total += u.fuel_cost * x[catalog.thermal_p(i, t)]
                + u.startup_cost * x[catalog.thermal_start(i, t)]
                + u.shutdown_cost * x[catalog.thermal_stop(i, t)];
        }
        for (i, _) in spec.storage_units.iter().enumerate() {
            total += costs.storage_op_cost[i].op_cost
                * (x[catalog.storage_charge(i, t)] + x[catalog.storage_discharge(i, t)]);
        }
        for zi in 0..spec.zones.len() {
            total += costs.drop_penalty * x[catalog.drop_load(zi, t)];
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{solve_lp, solve_milp, SolveSettings, SolveStatus};
    use crate::synth::{synth_system, SynthParams};
    use crate::system::*;
    use crate::Timestamp;

    fn tiny_system() -> (SystemSpec, TimeSeriesFrame) {
        // 1 zone, 1 thermal, 1 storage, 1 VRE, no reserves.
        let mut spec = SystemSpec::empty();
        spec.perturbation = PerturbationConfig { pct: 0.0, seed: 0 };
        spec.zones.push(Zone::new("z1"));
        spec.thermal_units.push(ThermalUnit {
            id: "t1".into(),
            zone: "z1".into(),
            p_min: 0.0,
            p_max: 100.0,
            fuel_cost: 20.0,
            startup_cost: 0.0,
            shutdown_cost: 0.0,
            ramp_up: 100.0,
            ramp_down: 100.0,
            reserve_eligible: vec![],
        });
        spec.vre_units.push(VreUnit {
            id: "v1".into(),
            zone: "z1".into(),
            technology: VreTechnology::Solar,
            capacity: 50.0,
            availability_series_key: "v1".into(),
            reserve_eligible: vec![],
        });
        spec.storage_units
            .push(StorageUnit::with_defaults("s1", "z1", StorageTechnology::Sdes, 10.0));
        let mut series = TimeSeriesFrame::new(Timestamp::from_ymdh(2050, 1, 1, 0).unwrap(), 24);
        series.load.set_column("z1", vec![0.0; 24]);
        series.availability.set_column("v1", vec![0.0; 24]);
        (spec, series)
    }

    #[test]
    fn hand_counted_catalog_for_two_hours() {
        // 1 thermal + 1 storage + 1 VRE, single zone, no reserves, T=2:
        // 8 binary columns (x, xsu, xsd, xc per hour) and 12 continuous
        // (p, pc, pd, soc, drop, pv per hour); no flow or angle columns.
        let (spec, series) = tiny_system();
        let init = InitialConditions::cold_start(&spec);
        let costs = perturb_storage_costs(&spec, 0.0, 0);
        let w = build_window(&spec, &series, 0..2, &init, &costs, &Default::default()).unwrap();
        assert_eq!(w.problem.num_cols(), 20);
        assert_eq!(w.problem.num_integers(), 8);
        let continuous = w.problem.num_cols() - w.problem.num_integers();
        assert_eq!(continuous, 12);
        assert!(!w.catalog.has_network());
        w.problem.check().unwrap();
    }

    #[test]
    fn zero_window_solves_to_zero() {
        let (spec, series) = tiny_system();
        let init = InitialConditions::cold_start(&spec);
        let costs = perturb_storage_costs(&spec, 0.0, 0);
        let w = build_window(&spec, &series, 0..4, &init, &costs, &Default::default()).unwrap();
        let res = solve_milp(&w.problem, &SolveSettings::default()).unwrap();
        assert_eq!(res.status, SolveStatus::OptimalWithinGap);
        assert!(res.objective.abs() < 1e-9, "objective {}", res.objective);
        for t in 0..4 {
            assert!(res.primal[w.catalog.thermal_p(0, t)].abs() < 1e-9);
            assert!(res.primal[w.catalog.thermal_on(0, t)].abs() < 1e-6);
        }
    }

    #[test]
    fn shortage_prices_at_penalty_cost() {
        // Load exceeds total capability by 10 MW in one hour: drop >= 10
        // and the optimum pays exactly 10 * 10,000 on top of fuel.
        let (spec, mut series) = tiny_system();
        let mut load = vec![0.0; 24];
        load[0] = 110.0; // storage starts half full but its 10 MW max
                         // discharge is behind a binary; fuel covers 100.
        series.load.set_column("z1", load);
        let init = InitialConditions::cold_start(&spec);
        let costs = perturb_storage_costs(&spec, 0.0, 0);
        let w = build_window(&spec, &series, 0..1, &init, &costs, &Default::default()).unwrap();
        let res = solve_milp(&w.problem, &SolveSettings::default()).unwrap();
        assert_eq!(res.status, SolveStatus::OptimalWithinGap);
        let drop = res.primal[w.catalog.drop_load(0, 0)];
        // Discharge of the half-full storage shaves the shortage by up to
        // 10 MW, so the remaining drop is exactly zero... unless the mode
        // binary forbids it. It does not: discharging is free here.
        assert!(drop >= -1e-9);
        // Build the no-storage variant for the exact penalty arithmetic.
        let mut spec2 = spec.clone();
        spec2.storage_units.clear();
        let costs2 = perturb_storage_costs(&spec2, 0.0, 0);
        let init2 = InitialConditions::cold_start(&spec2);
        let w2 = build_window(&spec2, &series, 0..1, &init2, &costs2, &Default::default()).unwrap();
        let res2 = solve_milp(&w2.problem, &SolveSettings::default()).unwrap();
        let drop2 = res2.primal[w2.catalog.drop_load(0, 0)];
        assert!((drop2 - 10.0).abs() < 1e-6, "drop {drop2}");
        let expected = 100.0 * 20.0 + 10.0 * 10_000.0;
        assert!((res2.objective - expected).abs() < 1e-6);
    }

    #[test]
    fn perturbation_examples() {
        let (spec, _) = synth_system(&SynthParams::default_with(2, 24), 5).unwrap();
        // 10% spread stays within the band around nominal.
        let c = perturb_storage_costs(&spec, 0.10, 7);
        for (s, got) in spec.storage_units.iter().zip(&c.storage_op_cost) {
            assert!(got.op_cost >= s.op_cost_nominal * 0.9 - 1e-15);
            assert!(got.op_cost <= s.op_cost_nominal * 1.1 + 1e-15);
        }
        // pct = 0 is the identity.
        let c0 = perturb_storage_costs(&spec, 0.0, 7);
        for (s, got) in spec.storage_units.iter().zip(&c0.storage_op_cost) {
            assert_eq!(got.op_cost, s.op_cost_nominal);
        }
        // Same seed twice: identical. Different seeds: some cost differs.
        let c2 = perturb_storage_costs(&spec, 0.10, 7);
        assert_eq!(c, c2);
        let c3 = perturb_storage_costs(&spec, 0.10, 8);
        assert_ne!(c, c3);
    }

    #[test]
    fn efficiency_conventions_flip_soc_coefficients() {
        let (spec, series) = tiny_system();
        let init = InitialConditions::cold_start(&spec);
        let costs = perturb_storage_costs(&spec, 0.0, 0);
        let phys = build_window(&spec, &series, 0..1, &init, &costs, &Default::default()).unwrap();
        let printed = build_window(
            &spec,
            &series,
            0..1,
            &init,
            &costs,
            &FormulationOptions {
                efficiency: EfficiencyConvention::AsPrinted,
                relax_startup_binaries: false,
            },
        )
        .unwrap();
        let charge_col = phys.catalog.storage_charge(0, 0);
        let find = |w: &WindowMilp| -> f64 {
            for r in 0..w.problem.num_rows() {
                if w.problem.row_names[r].starts_with("soc[") {
                    for (c, v) in w.problem.row(r) {
                        if c == charge_col {
                            return v;
                        }
                    }
                }
            }
            panic!("soc row not found")
        };
        // eta_c = 0.85 SDES: physical charges at -0.85, printed at -1/0.85.
        assert!((find(&phys) + 0.85).abs() < 1e-12);
        assert!((find(&printed) + 1.0 / 0.85).abs() < 1e-12);
    }

    #[test]
    fn startup_binaries_can_be_relaxed() {
        let (spec, series) = tiny_system();
        let init = InitialConditions::cold_start(&spec);
        let costs = perturb_storage_costs(&spec, 0.0, 0);
        let strict = build_window(&spec, &series, 0..2, &init, &costs, &Default::default()).unwrap();
        let relaxed = build_window(
            &spec,
            &series,
            0..2,
            &init,
            &costs,
            &FormulationOptions {
                efficiency: EfficiencyConvention::Physical,
                relax_startup_binaries: true,
            },
        )
        .unwrap();
        // x and xc stay binary; xsu/xsd become continuous in [0,1].
        assert_eq!(strict.problem.num_integers(), 8);
        assert_eq!(relaxed.problem.num_integers(), 4);
        assert_eq!(relaxed.problem.num_cols(), strict.problem.num_cols());
    }

    #[test]
    fn init_soc_out_of_bounds_rejected() {
        let (spec, series) = tiny_system();
        let mut init = InitialConditions::cold_start(&spec);
        init.soc[0] = spec.storage_units[0].soc_max * 2.0;
        let costs = perturb_storage_costs(&spec, 0.0, 0);
        let err = build_window(&spec, &series, 0..2, &init, &costs, &Default::default());
        assert!(matches!(
            err,
            Err(FormulationError::InitSocOutOfBounds { .. })
        ));
    }

    #[test]
    fn catalog_roundtrips_every_column() {
        let (spec, _series) = synth_system(&SynthParams::default_with(3, 48), 2).unwrap();
        let catalog = VariableCatalog::build(&spec, 5);
        for col in 0..catalog.num_cols() {
            let (kind, t) = catalog.kind_of(col);
            let back = match kind {
                VarKind::ThermalP(i) => catalog.thermal_p(i, t),
                VarKind::ThermalOn(i) => catalog.thermal_on(i, t),
                VarKind::ThermalStart(i) => catalog.thermal_start(i, t),
                VarKind::ThermalStop(i) => catalog.thermal_stop(i, t),
                VarKind::VreP(i) => catalog.vre_p(i, t),
                VarKind::StorageCharge(i) => catalog.storage_charge(i, t),
                VarKind::StorageDischarge(i) => catalog.storage_discharge(i, t),
                VarKind::StorageMode(i) => catalog.storage_mode(i, t),
                VarKind::StorageSoc(i) => catalog.storage_soc(i, t),
                VarKind::Reserve { product, slot } => catalog.reserve(product, slot, t),
                VarKind::LineFlow(l) => catalog.line_flow(l, t),
                VarKind::Angle(z) => catalog.angle(z, t),
                VarKind::DropLoad(z) => catalog.drop_load(z, t),
            };
            assert_eq!(back, col);
        }
    }

    /// Every decision symbol in the formulation has exactly one catalog
    /// kind, and every constraint family emits its expected row count on
    /// a fully-featured system.
    #[test]
    fn constraint_families_all_present() {
        let (spec, series) = synth_system(&SynthParams::default_with(3, 48), 2).unwrap();
        let init = InitialConditions::cold_start(&spec);
        let costs = perturb_storage_costs(&spec, 0.10, 2);
        let t = 4usize;
        let w = build_window(&spec, &series, 0..t, &init, &costs, &Default::default()).unwrap();
        let count_prefix = |prefix: &str| {
            (0..w.problem.num_rows())
                .filter(|&r| w.problem.row_names[r].starts_with(prefix))
                .count()
        };
        let nz = spec.zones.len();
        let nt = spec.thermal_units.len();
        let ns = spec.storage_units.len();
        let nl = spec.lines.len();
        assert_eq!(count_prefix("bal["), nz * t);
        assert_eq!(count_prefix("tmax["), nt * t);
        assert_eq!(count_prefix("tmin["), nt * t);
        assert_eq!(count_prefix("ramp["), nt * t);
        assert_eq!(count_prefix("logic["), nt * t);
        assert_eq!(count_prefix("rr["), spec.reserve_products.len() * t);
        assert_eq!(count_prefix("chg["), ns * t);
        assert_eq!(count_prefix("dch["), ns * t);
        assert_eq!(count_prefix("soc["), ns * t);
        assert_eq!(count_prefix("sres["), ns * t);
        assert_eq!(count_prefix("flow["), nl * t);
        // Synth VRE units are not reserve-eligible: cap rows elided, the
        // availability cap lives on the dispatch bound.
        assert_eq!(count_prefix("avb["), 0);
        for (i, u) in spec.vre_units.iter().enumerate() {
            let col = series.availability.column(&u.availability_series_key).unwrap();
            for h in 0..t {
                assert_eq!(w.problem.col_upper[w.catalog.vre_p(i, h)], col[h].max(0.0));
            }
        }
    }

    #[test]
    fn solved_window_satisfies_physics() {
        let (spec, series) = synth_system(&SynthParams::default_with(2, 48), 4).unwrap();
        let init = InitialConditions::cold_start(&spec);
        let costs = perturb_storage_costs(&spec, 0.10, 4);
        let w = build_window(&spec, &series, 0..6, &init, &costs, &Default::default()).unwrap();
        let res = solve_milp(&w.problem, &SolveSettings::default()).unwrap();
        assert_eq!(res.status, SolveStatus::OptimalWithinGap);
        assert!(w.problem.max_violation(&res.primal) <= 1e-6);
        // Objective audit: recomputed equals reported within 1e-6 relative.
        let recomputed = window_objective(&spec, &w.catalog, &costs, &res.primal);
        let denom = 1.0f64.max(res.objective.abs());
        assert!(
            (recomputed - res.objective).abs() / denom <= 1e-6,
            "{recomputed} vs {}",
            res.objective
        );
        // No simultaneous charge/discharge in the integral solution.
        for (i, _) in spec.storage_units.iter().enumerate() {
            for t in 0..w.catalog.hours {
                let c = res.primal[w.catalog.storage_charge(i, t)];
                let d = res.primal[w.catalog.storage_discharge(i, t)];
                assert!(c.min(d) <= 1e-6, "simultaneous charge/discharge");
            }
        }
        // Fixing binaries at the incumbent preserves the optimum.
        let fixed = w.fix_binaries(&res.primal).unwrap();
        let lp = solve_lp(&fixed.problem, &SolveSettings::default()).unwrap();
        assert!((lp.objective - res.objective).abs() / denom <= 1e-9);
    }
}
