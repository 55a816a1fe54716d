//! Results-directory layout.
//!
//! `manifest.toml` carries run provenance (policy, settings, seeds, cost
//! config, input digests) plus the static attributes of every traced
//! entity; the CSV files carry the hourly records in long form. Reading a
//! directory reproduces the in-memory ledger bit-exactly, except that
//! wall-clock diagnostics are not round-tripped — result files must stay
//! byte-identical across reruns, so timing lives only in the manifest's
//! volatile block.

use super::{fmt_f64, IoError};
use crate::formulation::{CostConfig, FormulationOptions};
use crate::horizon::*;
use crate::pricing::PriceSeries;
use crate::solver::{SolveSettings, SolveStatus};
use crate::system::{StorageTechnology, VreTechnology};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

pub const LEDGER_FILES: [&str; 9] = [
    "manifest.toml",
    "windows.csv",
    "thermal.csv",
    "vre.csv",
    "storage.csv",
    "reserves.csv",
    "flows.csv",
    "angles.csv",
    "zones.csv",
];

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    engine_version: String,
    /// Volatile provenance: excluded from byte-for-byte comparisons.
    created: String,
    total_wall_time_s: f64,
    start: String,
    hours: usize,
    policy_name: String,
    policy: HorizonPolicy,
    settings: SolveSettings,
    perturb_pct: f64,
    perturb_seed: u64,
    options: FormulationOptions,
    #[serde(default)]
    input_digest_system: String,
    #[serde(default)]
    input_digest_series: String,
    cost_config: CostConfig,
    units: UnitCatalog,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct UnitCatalog {
    #[serde(default)]
    thermal: Vec<ThermalMeta>,
    #[serde(default)]
    vre: Vec<VreMeta>,
    #[serde(default)]
    storage: Vec<StorageMeta>,
    #[serde(default)]
    reserves: Vec<ReserveMeta>,
    #[serde(default)]
    lines: Vec<LineMeta>,
    #[serde(default)]
    zones: Vec<String>,
    #[serde(default)]
    angle_zones: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ThermalMeta {
    unit: String,
    zone: String,
    fuel_cost: f64,
    startup_cost: f64,
    shutdown_cost: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct VreMeta {
    unit: String,
    zone: String,
    technology: VreTechnology,
}

#[derive(Debug, Serialize, Deserialize)]
struct StorageMeta {
    unit: String,
    zone: String,
    technology: StorageTechnology,
    soc_min: f64,
    soc_max: f64,
    charge_max: f64,
    discharge_max: f64,
    eta_charge: f64,
    eta_discharge: f64,
    op_cost: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ReserveMeta {
    product: String,
    provider: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct LineMeta {
    line: String,
    from_zone: String,
    to_zone: String,
    flow_min: f64,
    flow_max: f64,
}

fn csv_of<F: Fn(usize, &mut String)>(header: &str, rows: usize, emit: F) -> String {
    let mut out = String::with_capacity(rows * 32);
    out.push_str(header);
    out.push('\n');
    for r in 0..rows {
        emit(r, &mut out);
        out.push('\n');
    }
    out
}

/// Persist every record family plus the manifest. Rereading reproduces
/// the ledger except for wall-clock diagnostics.
pub fn write_ledger(ledger: &SimulationLedger, dir: &Path) -> Result<(), IoError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::file(dir, e))?;
    let hours = ledger.zones.first().map(|z| z.load.len()).unwrap_or(0);

    let manifest = Manifest {
        engine_version: ledger.meta.engine_version.clone(),
        created: now_utc_string(),
        total_wall_time_s: ledger.windows.iter().map(|w| w.wall_time).sum(),
        start: ledger.meta.start.clone(),
        hours: ledger.meta.hours,
        policy_name: ledger.meta.policy_name.clone(),
        policy: ledger.meta.policy,
        settings: ledger.meta.settings,
        perturb_pct: ledger.meta.perturb_pct,
        perturb_seed: ledger.meta.perturb_seed,
        options: ledger.meta.options,
        input_digest_system: ledger.meta.input_digest_system.clone(),
        input_digest_series: ledger.meta.input_digest_series.clone(),
        cost_config: ledger.meta.cost_config.clone(),
        units: UnitCatalog {
            thermal: ledger
                .thermal
                .iter()
                .map(|t| ThermalMeta {
                    unit: t.unit.clone(),
                    zone: t.zone.clone(),
                    fuel_cost: t.fuel_cost,
                    startup_cost: t.startup_cost,
                    shutdown_cost: t.shutdown_cost,
                })
                .collect(),
            vre: ledger
                .vre
                .iter()
                .map(|v| VreMeta {
                    unit: v.unit.clone(),
                    zone: v.zone.clone(),
                    technology: v.technology,
                })
                .collect(),
            storage: ledger
                .storage
                .iter()
                .map(|s| StorageMeta {
                    unit: s.unit.clone(),
                    zone: s.zone.clone(),
                    technology: s.technology,
                    soc_min: s.soc_min,
                    soc_max: s.soc_max,
                    charge_max: s.charge_max,
                    discharge_max: s.discharge_max,
                    eta_charge: s.eta_charge,
                    eta_discharge: s.eta_discharge,
                    op_cost: s.op_cost,
                })
                .collect(),
            reserves: ledger
                .reserves
                .iter()
                .map(|r| ReserveMeta {
                    product: r.product.clone(),
                    provider: r.provider.clone(),
                })
                .collect(),
            lines: ledger
                .flows
                .iter()
                .map(|f| LineMeta {
                    line: f.line.clone(),
                    from_zone: f.from_zone.clone(),
                    to_zone: f.to_zone.clone(),
                    flow_min: f.flow_min,
                    flow_max: f.flow_max,
                })
                .collect(),
            zones: ledger.zones.iter().map(|z| z.zone.clone()).collect(),
            angle_zones: ledger.angles.iter().map(|a| a.zone.clone()).collect(),
        },
    };
    let manifest_text =
        toml::to_string(&manifest).map_err(|e| IoError::Descriptor(e.to_string()))?;
    write_file(dir, "manifest.toml", manifest_text)?;

    write_file(
        dir,
        "windows.csv",
        csv_of(
            "index,start_hour,window_hours,committed_hours,objective,gap,status,node_count,simplex_iterations",
            ledger.windows.len(),
            |r, out| {
                let w = &ledger.windows[r];
                let _ = write!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    w.index,
                    w.start_hour,
                    w.window_hours,
                    w.committed_hours,
                    fmt_f64(w.objective),
                    fmt_f64(w.gap),
                    w.status,
                    w.node_count,
                    w.simplex_iterations
                );
            },
        ),
    )?;

    let n_thermal = ledger.thermal.len();
    write_file(
        dir,
        "thermal.csv",
        csv_of("hour,unit,p,on,start,stop", hours * n_thermal, |r, out| {
            let (h, u) = (r / n_thermal, r % n_thermal);
            let t = &ledger.thermal[u];
            let _ = write!(
                out,
                "{h},{},{},{},{},{}",
                t.unit,
                fmt_f64(t.p[h]),
                t.on[h],
                t.start[h],
                t.stop[h]
            );
        }),
    )?;

    let n_vre = ledger.vre.len();
    write_file(
        dir,
        "vre.csv",
        csv_of("hour,unit,dispatch,available", hours * n_vre, |r, out| {
            let (h, u) = (r / n_vre.max(1), r % n_vre.max(1));
            let v = &ledger.vre[u];
            let _ = write!(
                out,
                "{h},{},{},{}",
                v.unit,
                fmt_f64(v.dispatch[h]),
                fmt_f64(v.available[h])
            );
        }),
    )?;

    let n_storage = ledger.storage.len();
    write_file(
        dir,
        "storage.csv",
        csv_of(
            "hour,unit,charge,discharge,soc",
            hours * n_storage,
            |r, out| {
                let (h, u) = (r / n_storage.max(1), r % n_storage.max(1));
                let s = &ledger.storage[u];
                let _ = write!(
                    out,
                    "{h},{},{},{},{}",
                    s.unit,
                    fmt_f64(s.charge[h]),
                    fmt_f64(s.discharge[h]),
                    fmt_f64(s.soc[h])
                );
            },
        ),
    )?;

    let n_res = ledger.reserves.len();
    write_file(
        dir,
        "reserves.csv",
        csv_of("hour,product,provider,mw", hours * n_res, |r, out| {
            let (h, u) = (r / n_res.max(1), r % n_res.max(1));
            let t = &ledger.reserves[u];
            let _ = write!(out, "{h},{},{},{}", t.product, t.provider, fmt_f64(t.mw[h]));
        }),
    )?;

    let n_flows = ledger.flows.len();
    write_file(
        dir,
        "flows.csv",
        csv_of("hour,line,mw", hours * n_flows, |r, out| {
            let (h, u) = (r / n_flows.max(1), r % n_flows.max(1));
            let f = &ledger.flows[u];
            let _ = write!(out, "{h},{},{}", f.line, fmt_f64(f.mw[h]));
        }),
    )?;

    let n_angles = ledger.angles.len();
    write_file(
        dir,
        "angles.csv",
        csv_of("hour,zone,rad", hours * n_angles, |r, out| {
            let (h, u) = (r / n_angles.max(1), r % n_angles.max(1));
            let a = &ledger.angles[u];
            let _ = write!(out, "{h},{},{}", a.zone, fmt_f64(a.rad[h]));
        }),
    )?;

    let n_zones = ledger.zones.len();
    write_file(
        dir,
        "zones.csv",
        csv_of("hour,zone,load,dropped", hours * n_zones, |r, out| {
            let (h, u) = (r / n_zones.max(1), r % n_zones.max(1));
            let z = &ledger.zones[u];
            let _ = write!(
                out,
                "{h},{},{},{}",
                z.zone,
                fmt_f64(z.load[h]),
                fmt_f64(z.dropped[h])
            );
        }),
    )?;

    Ok(())
}

fn write_file(dir: &Path, name: &str, text: String) -> Result<(), IoError> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| IoError::file(&path, e))
}

fn now_utc_string() -> String {
    // Wall-clock seconds since the epoch; rendered through the calendar
    // code so the manifest stays dependency-free.
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let hours = (secs / 3600) as i64;
    format!(
        "{} (+{}s)",
        crate::calendar::Timestamp(hours),
        secs % 3600
    )
}

fn ledger_err(dir: &Path, reason: impl Into<String>) -> IoError {
    IoError::Ledger {
        dir: dir.display().to_string(),
        reason: reason.into(),
    }
}

fn parse_rows<'a>(
    dir: &Path,
    name: &str,
    text: &'a str,
    want_fields: usize,
) -> Result<Vec<Vec<&'a str>>, IoError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != want_fields {
            return Err(ledger_err(
                dir,
                format!("{name}:{}: expected {want_fields} fields", i + 1),
            ));
        }
        rows.push(fields);
    }
    Ok(rows)
}

fn parse_num<T: std::str::FromStr>(dir: &Path, name: &str, field: &str) -> Result<T, IoError> {
    field
        .parse::<T>()
        .map_err(|_| ledger_err(dir, format!("{name}: bad numeric field `{field}`")))
}

/// Reconstruct a ledger from a results directory. Window wall times are
/// not persisted and read back as zero.
pub fn read_ledger(dir: &Path) -> Result<SimulationLedger, IoError> {
    let read = |name: &str| -> Result<String, IoError> {
        let path = dir.join(name);
        std::fs::read_to_string(&path).map_err(|e| IoError::file(&path, e))
    };
    let manifest: Manifest = toml::from_str(&read("manifest.toml")?)
        .map_err(|e| ledger_err(dir, format!("manifest.toml: {e}")))?;
    let hours = manifest.hours;

    let mut ledger = SimulationLedger {
        meta: RunMeta {
            engine_version: manifest.engine_version,
            policy: manifest.policy,
            policy_name: manifest.policy_name,
            settings: manifest.settings,
            perturb_pct: manifest.perturb_pct,
            perturb_seed: manifest.perturb_seed,
            options: manifest.options,
            cost_config: manifest.cost_config,
            start: manifest.start,
            hours,
            input_digest_system: manifest.input_digest_system,
            input_digest_series: manifest.input_digest_series,
        },
        windows: Vec::new(),
        thermal: manifest
            .units
            .thermal
            .into_iter()
            .map(|m| ThermalTrace {
                unit: m.unit,
                zone: m.zone,
                fuel_cost: m.fuel_cost,
                startup_cost: m.startup_cost,
                shutdown_cost: m.shutdown_cost,
                p: Vec::with_capacity(hours),
                on: Vec::with_capacity(hours),
                start: Vec::with_capacity(hours),
                stop: Vec::with_capacity(hours),
            })
            .collect(),
        vre: manifest
            .units
            .vre
            .into_iter()
            .map(|m| VreTrace {
                unit: m.unit,
                zone: m.zone,
                technology: m.technology,
                dispatch: Vec::with_capacity(hours),
                available: Vec::with_capacity(hours),
            })
            .collect(),
        storage: manifest
            .units
            .storage
            .into_iter()
            .map(|m| StorageTrace {
                unit: m.unit,
                zone: m.zone,
                technology: m.technology,
                soc_min: m.soc_min,
                soc_max: m.soc_max,
                charge_max: m.charge_max,
                discharge_max: m.discharge_max,
                eta_charge: m.eta_charge,
                eta_discharge: m.eta_discharge,
                op_cost: m.op_cost,
                charge: Vec::with_capacity(hours),
                discharge: Vec::with_capacity(hours),
                soc: Vec::with_capacity(hours),
            })
            .collect(),
        reserves: manifest
            .units
            .reserves
            .into_iter()
            .map(|m| ReserveTrace {
                product: m.product,
                provider: m.provider,
                mw: Vec::with_capacity(hours),
            })
            .collect(),
        flows: manifest
            .units
            .lines
            .into_iter()
            .map(|m| FlowTrace {
                line: m.line,
                from_zone: m.from_zone,
                to_zone: m.to_zone,
                flow_min: m.flow_min,
                flow_max: m.flow_max,
                mw: Vec::with_capacity(hours),
            })
            .collect(),
        angles: manifest
            .units
            .angle_zones
            .into_iter()
            .map(|zone| AngleTrace {
                zone,
                rad: Vec::with_capacity(hours),
            })
            .collect(),
        zones: manifest
            .units
            .zones
            .into_iter()
            .map(|zone| ZoneTrace {
                zone,
                load: Vec::with_capacity(hours),
                dropped: Vec::with_capacity(hours),
            })
            .collect(),
    };

    for row in parse_rows(dir, "windows.csv", &read("windows.csv")?, 9)? {
        let status = match row[6] {
            "optimal_within_gap" => SolveStatus::OptimalWithinGap,
            "time_limit_incumbent" => SolveStatus::TimeLimitIncumbent,
            "infeasible" => SolveStatus::Infeasible,
            "unbounded" => SolveStatus::Unbounded,
            other => return Err(ledger_err(dir, format!("unknown window status `{other}`"))),
        };
        ledger.windows.push(WindowRecord {
            index: parse_num(dir, "windows.csv", row[0])?,
            start_hour: parse_num(dir, "windows.csv", row[1])?,
            window_hours: parse_num(dir, "windows.csv", row[2])?,
            committed_hours: parse_num(dir, "windows.csv", row[3])?,
            objective: parse_num(dir, "windows.csv", row[4])?,
            gap: parse_num(dir, "windows.csv", row[5])?,
            status,
            node_count: parse_num(dir, "windows.csv", row[7])?,
            simplex_iterations: parse_num(dir, "windows.csv", row[8])?,
            wall_time: 0.0,
        });
    }

    let index_of = |items: &[String], name: &str, file: &str| -> Result<usize, IoError> {
        items
            .iter()
            .position(|u| u == name)
            .ok_or_else(|| ledger_err(dir, format!("{file}: unknown entity `{name}`")))
    };

    let thermal_ids: Vec<String> = ledger.thermal.iter().map(|t| t.unit.clone()).collect();
    for row in parse_rows(dir, "thermal.csv", &read("thermal.csv")?, 6)? {
        let u = index_of(&thermal_ids, row[1], "thermal.csv")?;
        let t = &mut ledger.thermal[u];
        t.p.push(parse_num(dir, "thermal.csv", row[2])?);
        t.on.push(parse_num(dir, "thermal.csv", row[3])?);
        t.start.push(parse_num(dir, "thermal.csv", row[4])?);
        t.stop.push(parse_num(dir, "thermal.csv", row[5])?);
    }
    let vre_ids: Vec<String> = ledger.vre.iter().map(|t| t.unit.clone()).collect();
    for row in parse_rows(dir, "vre.csv", &read("vre.csv")?, 4)? {
        let u = index_of(&vre_ids, row[1], "vre.csv")?;
        let v = &mut ledger.vre[u];
        v.dispatch.push(parse_num(dir, "vre.csv", row[2])?);
        v.available.push(parse_num(dir, "vre.csv", row[3])?);
    }
    let storage_ids: Vec<String> = ledger.storage.iter().map(|t| t.unit.clone()).collect();
    for row in parse_rows(dir, "storage.csv", &read("storage.csv")?, 5)? {
        let u = index_of(&storage_ids, row[1], "storage.csv")?;
        let s = &mut ledger.storage[u];
        s.charge.push(parse_num(dir, "storage.csv", row[2])?);
        s.discharge.push(parse_num(dir, "storage.csv", row[3])?);
        s.soc.push(parse_num(dir, "storage.csv", row[4])?);
    }
    let res_ids: Vec<String> = ledger
        .reserves
        .iter()
        .map(|t| format!("{}/{}", t.product, t.provider))
        .collect();
    for row in parse_rows(dir, "reserves.csv", &read("reserves.csv")?, 4)? {
        let key = format!("{}/{}", row[1], row[2]);
        let u = index_of(&res_ids, &key, "reserves.csv")?;
        ledger.reserves[u]
            .mw
            .push(parse_num(dir, "reserves.csv", row[3])?);
    }
    let flow_ids: Vec<String> = ledger.flows.iter().map(|t| t.line.clone()).collect();
    for row in parse_rows(dir, "flows.csv", &read("flows.csv")?, 3)? {
        let u = index_of(&flow_ids, row[1], "flows.csv")?;
        ledger.flows[u].mw.push(parse_num(dir, "flows.csv", row[2])?);
    }
    let angle_ids: Vec<String> = ledger.angles.iter().map(|t| t.zone.clone()).collect();
    for row in parse_rows(dir, "angles.csv", &read("angles.csv")?, 3)? {
        let u = index_of(&angle_ids, row[1], "angles.csv")?;
        ledger.angles[u]
            .rad
            .push(parse_num(dir, "angles.csv", row[2])?);
    }
    let zone_ids: Vec<String> = ledger.zones.iter().map(|t| t.zone.clone()).collect();
    for row in parse_rows(dir, "zones.csv", &read("zones.csv")?, 4)? {
        let u = index_of(&zone_ids, row[1], "zones.csv")?;
        let z = &mut ledger.zones[u];
        z.load.push(parse_num(dir, "zones.csv", row[2])?);
        z.dropped.push(parse_num(dir, "zones.csv", row[3])?);
    }

    Ok(ledger)
}

/// Prices as an hour-by-zone matrix alongside the ledger.
pub fn write_prices(prices: &PriceSeries, dir: &Path) -> Result<(), IoError> {
    let mut out = String::from("hour");
    for z in &prices.zones {
        out.push(',');
        out.push_str(z);
    }
    out.push('\n');
    for h in 0..prices.hours() {
        let _ = write!(out, "{h}");
        for col in &prices.lmp {
            out.push(',');
            out.push_str(&fmt_f64(col[h]));
        }
        out.push('\n');
    }
    write_file(dir, "prices.csv", out)
}

pub fn read_prices(dir: &Path) -> Result<PriceSeries, IoError> {
    let path = dir.join("prices.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| IoError::file(&path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| ledger_err(dir, "prices.csv empty"))?;
    let zones: Vec<String> = header.split(',').skip(1).map(|s| s.to_string()).collect();
    let mut lmp: Vec<Vec<f64>> = vec![Vec::new(); zones.len()];
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        for (k, field) in line.split(',').skip(1).enumerate() {
            lmp[k].push(parse_num(dir, "prices.csv", field)?);
        }
    }
    Ok(PriceSeries {
        zones,
        lmp,
        window_status: Vec::new(),
    })
}
