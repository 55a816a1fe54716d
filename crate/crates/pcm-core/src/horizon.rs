//! Rolling-horizon orchestration: sequential window solves, state
//! propagation, and assembly of the committed hourly ledger.

use crate::calendar::Timestamp;
use crate::formulation::{
    build_window, perturb_storage_costs, CostConfig, FormulationError, FormulationOptions,
    InitialConditions, VariableCatalog, WindowMilp,
};
use crate::series::TimeSeriesFrame;
use crate::formulation::solve_window;
use crate::solver::{SolveError, SolveSettings, SolveStatus};
use crate::system::{
    validate_system, StorageTechnology, SystemSpec, Violation, VreTechnology,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HorizonPolicy {
    pub window_hours: usize,
    pub advance_hours: usize,
}

impl HorizonPolicy {
    /// 48-hour window committed 24 hours at a time.
    pub fn traditional() -> Self {
        HorizonPolicy {
            window_hours: 48,
            advance_hours: 24,
        }
    }

    /// 192-hour window committed 24 hours at a time (7-day look-ahead).
    pub fn extended() -> Self {
        HorizonPolicy {
            window_hours: 192,
            advance_hours: 24,
        }
    }

    pub fn custom(window_hours: usize, advance_hours: usize) -> Self {
        HorizonPolicy {
            window_hours,
            advance_hours,
        }
    }

    pub fn name(&self) -> &'static str {
        if *self == Self::traditional() {
            "traditional"
        } else if *self == Self::extended() {
            "extended"
        } else {
            "custom"
        }
    }

    pub fn validate(&self, span: usize) -> Result<(), HorizonError> {
        if self.window_hours == 0 || self.advance_hours == 0 {
            return Err(HorizonError::BadPolicy(
                "window and advance must be positive".into(),
            ));
        }
        if self.advance_hours > self.window_hours {
            return Err(HorizonError::BadPolicy(format!(
                "advance {} exceeds window {}",
                self.advance_hours, self.window_hours
            )));
        }
        if span < self.window_hours {
            return Err(HorizonError::BadPolicy(format!(
                "series span {span} shorter than window {}",
                self.window_hours
            )));
        }
        if !span.is_multiple_of(self.advance_hours) {
            return Err(HorizonError::BadPolicy(format!(
                "advance {} does not divide span {span}",
                self.advance_hours
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum HorizonError {
    #[error("system validation failed with {} violation(s); first: {}", .0.len(), .0.first().map(|v| v.to_string()).unwrap_or_default())]
    Validation(Vec<Violation>),
    #[error("bad horizon policy: {0}")]
    BadPolicy(String),
    #[error("window {index} (hours {start}..{end}) {reason}")]
    Window {
        index: usize,
        start: usize,
        end: usize,
        reason: String,
    },
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

// --- committed-hour traces -------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThermalTrace {
    pub unit: String,
    pub zone: String,
    pub fuel_cost: f64,
    pub startup_cost: f64,
    pub shutdown_cost: f64,
    pub p: Vec<f64>,
    pub on: Vec<u8>,
    pub start: Vec<u8>,
    pub stop: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VreTrace {
    pub unit: String,
    pub zone: String,
    pub technology: VreTechnology,
    pub dispatch: Vec<f64>,
    pub available: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StorageTrace {
    pub unit: String,
    pub zone: String,
    pub technology: StorageTechnology,
    pub soc_min: f64,
    pub soc_max: f64,
    pub charge_max: f64,
    pub discharge_max: f64,
    pub eta_charge: f64,
    pub eta_discharge: f64,
    pub op_cost: f64,
    pub charge: Vec<f64>,
    pub discharge: Vec<f64>,
    pub soc: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReserveTrace {
    pub product: String,
    pub provider: String,
    pub mw: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub line: String,
    pub from_zone: String,
    pub to_zone: String,
    pub flow_min: f64,
    pub flow_max: f64,
    pub mw: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleTrace {
    pub zone: String,
    pub rad: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneTrace {
    pub zone: String,
    pub load: Vec<f64>,
    pub dropped: Vec<f64>,
}

/// Per-window solve record. `wall_time` is an in-memory diagnostic; it is
/// not part of the persisted record files so results stay byte-stable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub index: usize,
    pub start_hour: usize,
    pub window_hours: usize,
    pub committed_hours: usize,
    pub objective: f64,
    pub gap: f64,
    pub status: SolveStatus,
    pub node_count: u64,
    pub simplex_iterations: u64,
    #[serde(skip, default)]
    pub wall_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub engine_version: String,
    pub policy: HorizonPolicy,
    pub policy_name: String,
    pub settings: SolveSettings,
    pub perturb_pct: f64,
    pub perturb_seed: u64,
    pub options: FormulationOptions,
    pub cost_config: CostConfig,
    pub start: String,
    pub hours: usize,
    /// SHA-256 of the canonical system descriptor.
    pub input_digest_system: String,
    /// SHA-256 of the canonical series CSVs.
    pub input_digest_series: String,
}

/// Committed hourly results for a full run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationLedger {
    pub meta: RunMeta,
    pub windows: Vec<WindowRecord>,
    pub thermal: Vec<ThermalTrace>,
    pub vre: Vec<VreTrace>,
    pub storage: Vec<StorageTrace>,
    pub reserves: Vec<ReserveTrace>,
    pub flows: Vec<FlowTrace>,
    pub angles: Vec<AngleTrace>,
    pub zones: Vec<ZoneTrace>,
}

impl SimulationLedger {
    pub fn hours(&self) -> usize {
        self.meta.hours
    }

    pub fn start(&self) -> Timestamp {
        Timestamp::parse(&self.meta.start).expect("ledger start timestamp")
    }

    pub fn storage_by_tech(&self, tech: StorageTechnology) -> Vec<&StorageTrace> {
        self.storage.iter().filter(|s| s.technology == tech).collect()
    }

    /// Equality that ignores wall-clock diagnostics.
    pub fn same_results(&self, other: &Self) -> bool {
        let strip = |l: &Self| {
            let mut c = l.clone();
            for w in &mut c.windows {
                w.wall_time = 0.0;
            }
            c
        };
        strip(self) == strip(other)
    }

    /// Total production cost contribution of one committed hour.
    pub fn hour_cost(&self, h: usize) -> f64 {
        let mut cost = 0.0;
        for t in &self.thermal {
            cost += t.fuel_cost * t.p[h]
                + t.startup_cost * t.start[h] as f64
                + t.shutdown_cost * t.stop[h] as f64;
        }
        for s in &self.storage {
            cost += s.op_cost * (s.charge[h] + s.discharge[h]);
        }
        for z in &self.zones {
            cost += self.meta.cost_config.drop_penalty * z.dropped[h];
        }
        cost
    }
}

/// A solved window paired with its catalog, for splicing and propagation.
pub struct WindowSolution<'a> {
    pub catalog: &'a VariableCatalog,
    pub primal: &'a [f64],
}

/// Take unit status, generation, and SOC at local hour `advance - 1` as
/// the next window's hour "-1" state.
pub fn propagate_state(
    spec: &SystemSpec,
    sol: &WindowSolution<'_>,
    advance_hours: usize,
) -> Result<InitialConditions, FormulationError> {
    assert!(advance_hours >= 1 && advance_hours <= sol.catalog.hours);
    let t = advance_hours - 1;
    let mut thermal_on = Vec::with_capacity(spec.thermal_units.len());
    let mut thermal_power = Vec::with_capacity(spec.thermal_units.len());
    for (i, _u) in spec.thermal_units.iter().enumerate() {
        let on = sol.primal[sol.catalog.thermal_on(i, t)] > 0.5;
        let p = sol.primal[sol.catalog.thermal_p(i, t)];
        thermal_on.push(on);
        thermal_power.push(if on { p.max(0.0) } else { 0.0 });
    }
    let mut soc = Vec::with_capacity(spec.storage_units.len());
    for (i, s) in spec.storage_units.iter().enumerate() {
        let mut v = sol.primal[sol.catalog.storage_soc(i, t)];
        // Snap solver noise inside the box; anything larger is corruption
        // and fails validation below.
        if v > s.soc_max && v <= s.soc_max + 1e-6 {
            v = s.soc_max;
        }
        if v < s.soc_min && v >= s.soc_min - 1e-6 {
            v = s.soc_min;
        }
        soc.push(v);
    }
    let init = InitialConditions {
        thermal_on,
        thermal_power,
        soc,
    };
    init.validate(spec)?;
    Ok(init)
}

/// The first `advance_hours` of hourly records of a window solution,
/// appended onto the ledger traces. Idempotent per window.
pub fn splice_committed(
    spec: &SystemSpec,
    series: &TimeSeriesFrame,
    sol: &WindowSolution<'_>,
    start_hour: usize,
    advance_hours: usize,
    ledger: &mut SimulationLedger,
) {
    let cat = sol.catalog;
    let x = sol.primal;
    let commit = advance_hours.min(cat.hours);
    for t in 0..commit {
        let at = start_hour + t;
        for (i, tr) in ledger.thermal.iter_mut().enumerate() {
            tr.p.push(x[cat.thermal_p(i, t)].max(0.0));
            tr.on.push((x[cat.thermal_on(i, t)] > 0.5) as u8);
            tr.start.push((x[cat.thermal_start(i, t)] > 0.5) as u8);
            tr.stop.push((x[cat.thermal_stop(i, t)] > 0.5) as u8);
        }
        for (i, tr) in ledger.vre.iter_mut().enumerate() {
            let avail = series
                .availability
                .column(&spec.vre_units[i].availability_series_key)
                .map(|c| c[at])
                .unwrap_or(0.0);
            tr.dispatch.push(x[cat.vre_p(i, t)].max(0.0));
            tr.available.push(avail);
        }
        for (i, tr) in ledger.storage.iter_mut().enumerate() {
            tr.charge.push(x[cat.storage_charge(i, t)].max(0.0));
            tr.discharge.push(x[cat.storage_discharge(i, t)].max(0.0));
            tr.soc.push(x[cat.storage_soc(i, t)]);
        }
        let mut k = 0usize;
        for pi in 0..spec.reserve_products.len() {
            for slot in 0..cat.providers(pi).len() {
                ledger.reserves[k].mw.push(x[cat.reserve(pi, slot, t)].max(0.0));
                k += 1;
            }
        }
        if cat.has_network() {
            for (l, tr) in ledger.flows.iter_mut().enumerate() {
                tr.mw.push(x[cat.line_flow(l, t)]);
            }
            for (z, tr) in ledger.angles.iter_mut().enumerate() {
                tr.rad.push(x[cat.angle(z, t)]);
            }
        }
        for (z, tr) in ledger.zones.iter_mut().enumerate() {
            let load = series
                .load
                .column(&spec.zones[z].id)
                .map(|c| c[at])
                .unwrap_or(0.0);
            tr.load.push(load);
            tr.dropped.push(x[cat.drop_load(z, t)].max(0.0));
        }
    }
}

fn empty_ledger(
    spec: &SystemSpec,
    series: &TimeSeriesFrame,
    policy: HorizonPolicy,
    settings: &SolveSettings,
    options: &FormulationOptions,
    costs: &CostConfig,
) -> SimulationLedger {
    let cat = VariableCatalog::build(spec, 1);
    let mut reserves = Vec::new();
    for (pi, product) in spec.reserve_products.iter().enumerate() {
        for prov in cat.providers(pi) {
            let provider = match prov {
                crate::formulation::Provider::Thermal(i) => spec.thermal_units[*i].id.clone(),
                crate::formulation::Provider::Vre(i) => spec.vre_units[*i].id.clone(),
                crate::formulation::Provider::Storage(i) => spec.storage_units[*i].id.clone(),
            };
            reserves.push(ReserveTrace {
                product: product.id.clone(),
                provider,
                mw: Vec::new(),
            });
        }
    }
    SimulationLedger {
        meta: RunMeta {
            engine_version: ENGINE_VERSION.to_string(),
            policy,
            policy_name: policy.name().to_string(),
            settings: *settings,
            perturb_pct: spec.perturbation.pct,
            perturb_seed: spec.perturbation.seed,
            options: *options,
            cost_config: costs.clone(),
            start: series.start.to_string(),
            hours: series.hours,
            input_digest_system: crate::io::sha256_hex(
                crate::io::system_to_toml(spec).as_bytes(),
            ),
            input_digest_series: crate::io::series_digest(series),
        },
        windows: Vec::new(),
        thermal: spec
            .thermal_units
            .iter()
            .map(|u| ThermalTrace {
                unit: u.id.clone(),
                zone: u.zone.clone(),
                fuel_cost: u.fuel_cost,
                startup_cost: u.startup_cost,
                shutdown_cost: u.shutdown_cost,
                p: Vec::new(),
                on: Vec::new(),
                start: Vec::new(),
                stop: Vec::new(),
            })
            .collect(),
        vre: spec
            .vre_units
            .iter()
            .map(|u| VreTrace {
                unit: u.id.clone(),
                zone: u.zone.clone(),
                technology: u.technology,
                dispatch: Vec::new(),
                available: Vec::new(),
            })
            .collect(),
        storage: spec
            .storage_units
            .iter()
            .enumerate()
            .map(|(i, u)| StorageTrace {
                unit: u.id.clone(),
                zone: u.zone.clone(),
                technology: u.technology,
                soc_min: u.soc_min,
                soc_max: u.soc_max,
                charge_max: u.charge_max,
                discharge_max: u.discharge_max,
                eta_charge: u.eta_charge,
                eta_discharge: u.eta_discharge,
                op_cost: costs.storage_op_cost[i].op_cost,
                charge: Vec::new(),
                discharge: Vec::new(),
                soc: Vec::new(),
            })
            .collect(),
        reserves,
        flows: spec
            .lines
            .iter()
            .map(|l| FlowTrace {
                line: l.id.clone(),
                from_zone: l.from_zone.clone(),
                to_zone: l.to_zone.clone(),
                flow_min: l.flow_min,
                flow_max: l.flow_max,
                mw: Vec::new(),
            })
            .collect(),
        angles: if spec.lines.is_empty() {
            Vec::new()
        } else {
            spec.zones
                .iter()
                .map(|z| AngleTrace {
                    zone: z.id.clone(),
                    rad: Vec::new(),
                })
                .collect()
        },
        zones: spec
            .zones
            .iter()
            .map(|z| ZoneTrace {
                zone: z.id.clone(),
                load: Vec::new(),
                dropped: Vec::new(),
            })
            .collect(),
    }
}

/// Run the sequential simulation: `ceil(span/advance)` windows, each
/// committing its first `advance` hours, with state propagated between
/// consecutive windows and look-ahead truncated at the series end.
pub fn run_simulation(
    spec: &SystemSpec,
    series: &TimeSeriesFrame,
    policy: HorizonPolicy,
    settings: &SolveSettings,
    options: &FormulationOptions,
) -> Result<SimulationLedger, HorizonError> {
    let report = validate_system(spec, series);
    if !report.is_ok() {
        return Err(HorizonError::Validation(report.violations));
    }
    policy.validate(series.hours)?;

    let costs = perturb_storage_costs(spec, spec.perturbation.pct, spec.perturbation.seed);
    let mut ledger = empty_ledger(spec, series, policy, settings, options, &costs);
    let mut init = InitialConditions::cold_start(spec);

    let span = series.hours;
    let mut index = 0usize;
    let mut start = 0usize;
    while start < span {
        let end = (start + policy.window_hours).min(span);
        let commit = policy.advance_hours.min(span - start);
        let window = build_window(spec, series, start..end, &init, &costs, options)?;
        let t0 = std::time::Instant::now();
        let res = solve_window(&window, settings).map_err(|e| match e {
            SolveError::TimeLimitNoIncumbent => HorizonError::Window {
                index,
                start,
                end,
                reason: "time limit with no incumbent".into(),
            },
            other => HorizonError::Solve(other),
        })?;
        let wall_time = t0.elapsed().as_secs_f64();
        match res.status {
            SolveStatus::Infeasible => {
                let rows = res.infeasible_rows.join(", ");
                return Err(HorizonError::Window {
                    index,
                    start,
                    end,
                    reason: format!(
                        "infeasible ({} violated row(s): {})",
                        res.infeasible_rows.len(),
                        rows
                    ),
                });
            }
            SolveStatus::Unbounded => {
                return Err(HorizonError::Window {
                    index,
                    start,
                    end,
                    reason: "unbounded".into(),
                });
            }
            SolveStatus::OptimalWithinGap | SolveStatus::TimeLimitIncumbent => {}
        }

        let sol = WindowSolution {
            catalog: &window.catalog,
            primal: &res.primal,
        };
        splice_committed(spec, series, &sol, start, commit, &mut ledger);
        ledger.windows.push(WindowRecord {
            index,
            start_hour: start,
            window_hours: end - start,
            committed_hours: commit,
            objective: res.objective,
            gap: res.gap,
            status: res.status,
            node_count: res.node_count,
            simplex_iterations: res.simplex_iterations,
            wall_time,
        });

        start += commit;
        index += 1;
        if start < span {
            init = propagate_state(spec, &sol, commit)?;
        }
    }

    Ok(ledger)
}

/// Build one window's MILP exactly as `run_simulation` would, given the
/// committed state replayed from a ledger; used by the pricing pass.
pub fn rebuild_window(
    spec: &SystemSpec,
    series: &TimeSeriesFrame,
    costs: &CostConfig,
    options: &FormulationOptions,
    init: &InitialConditions,
    start: usize,
    end: usize,
) -> Result<WindowMilp, FormulationError> {
    build_window(spec, series, start..end, init, costs, options)
}

// --- conservation audit ----------------------------------------------------

/// Worst-case physics residuals over all committed hours of a ledger,
/// recomputed from the hourly records alone.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConservationReport {
    pub max_balance_residual: f64,
    pub max_soc_residual: f64,
    pub max_simultaneous_charge: f64,
    pub max_soc_bound_violation: f64,
    pub max_flow_violation: f64,
    pub hours_checked: usize,
}

pub fn audit_ledger(ledger: &SimulationLedger) -> ConservationReport {
    let hours = ledger
        .zones
        .first()
        .map(|z| z.load.len())
        .unwrap_or(0);
    let mut rep = ConservationReport {
        hours_checked: hours,
        ..Default::default()
    };
    let physical = matches!(
        ledger.meta.options.efficiency,
        crate::formulation::EfficiencyConvention::Physical
    );

    for h in 0..hours {
        for z in &ledger.zones {
            let mut supply = z.dropped[h] - z.load[h];
            for t in &ledger.thermal {
                if t.zone == z.zone {
                    supply += t.p[h];
                }
            }
            for v in &ledger.vre {
                if v.zone == z.zone {
                    supply += v.dispatch[h];
                }
            }
            for s in &ledger.storage {
                if s.zone == z.zone {
                    supply += s.discharge[h] - s.charge[h];
                }
            }
            for f in &ledger.flows {
                if f.from_zone == z.zone {
                    supply += f.mw[h];
                } else if f.to_zone == z.zone {
                    supply -= f.mw[h];
                }
            }
            rep.max_balance_residual = rep.max_balance_residual.max(supply.abs());
        }
        for s in &ledger.storage {
            let prev = if h == 0 { 0.5 * s.soc_max } else { s.soc[h - 1] };
            let delta = if physical {
                s.eta_charge * s.charge[h] - s.discharge[h] / s.eta_discharge
            } else {
                s.charge[h] / s.eta_charge - s.eta_discharge * s.discharge[h]
            };
            rep.max_soc_residual = rep.max_soc_residual.max((s.soc[h] - prev - delta).abs());
            rep.max_simultaneous_charge = rep
                .max_simultaneous_charge
                .max(s.charge[h].min(s.discharge[h]));
            rep.max_soc_bound_violation = rep
                .max_soc_bound_violation
                .max(s.soc_min - s.soc[h])
                .max(s.soc[h] - s.soc_max);
        }
        for f in &ledger.flows {
            rep.max_flow_violation = rep
                .max_flow_violation
                .max(f.flow_min - f.mw[h])
                .max(f.mw[h] - f.flow_max);
        }
    }
    rep
}
