//! Plot-ready exports: daily cost/net-load traces, SOC histograms split
//! by net-load sign, a weekly dispatch stack, and twin-comparison series.

use super::{fmt_f64, IoError};
use crate::degeneracy::ComparisonReport;
use crate::horizon::SimulationLedger;
use crate::metrics::MetricReport;
use crate::system::StorageTechnology;
use std::fmt::Write as _;
use std::path::Path;

fn write_file(dir: &Path, name: &str, text: String) -> Result<(), IoError> {
    std::fs::create_dir_all(dir).map_err(|e| IoError::file(dir, e))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| IoError::file(&path, e))
}

fn system_net_load(ledger: &SimulationLedger, h: usize) -> f64 {
    let load: f64 = ledger.zones.iter().map(|z| z.load[h]).sum();
    let avail: f64 = ledger.vre.iter().map(|v| v.available[h]).sum();
    load - avail
}

/// Single-run report: `summary.toml`, `daily.csv` (TPC + net load),
/// `soc_histogram.csv` (per-technology SOC occupancy split by net-load
/// sign), and `dispatch_week.csv` (hourly stack for one week).
pub fn write_report(
    ledger: &SimulationLedger,
    report: &MetricReport,
    week_start_day: usize,
    dir: &Path,
) -> Result<(), IoError> {
    let hours = ledger.zones.first().map(|z| z.load.len()).unwrap_or(0);

    let mut summary = String::new();
    let _ = writeln!(summary, "total_tpc = {}", fmt_f64(report.total_tpc));
    if let Some(c) = report.curtailment_pct {
        let _ = writeln!(summary, "curtailment_pct = {}", fmt_f64(c));
    }
    if let Some(c) = report.cycles_sdes {
        let _ = writeln!(summary, "sdes_equivalent_cycles = {}", fmt_f64(c));
    }
    if let Some(c) = report.cycles_ldes {
        let _ = writeln!(summary, "ldes_equivalent_cycles = {}", fmt_f64(c));
    }
    if let Some(r) = &report.revenue_sdes {
        let _ = writeln!(summary, "sdes_revenue_total = {}", fmt_f64(r.total));
        let _ = writeln!(summary, "sdes_revenue_per_mw = {}", fmt_f64(r.per_mw));
    }
    if let Some(r) = &report.revenue_ldes {
        let _ = writeln!(summary, "ldes_revenue_total = {}", fmt_f64(r.total));
        let _ = writeln!(summary, "ldes_revenue_per_mw = {}", fmt_f64(r.per_mw));
    }
    let t = &report.totals;
    let _ = writeln!(summary, "\n[generation_mwh]");
    let _ = writeln!(summary, "thermal = {}", fmt_f64(t.thermal_mwh));
    let _ = writeln!(summary, "solar = {}", fmt_f64(t.solar_mwh));
    let _ = writeln!(summary, "wind = {}", fmt_f64(t.wind_mwh));
    let _ = writeln!(summary, "sdes_discharge = {}", fmt_f64(t.sdes_discharge_mwh));
    let _ = writeln!(summary, "ldes_discharge = {}", fmt_f64(t.ldes_discharge_mwh));
    let _ = writeln!(summary, "sdes_charge = {}", fmt_f64(t.sdes_charge_mwh));
    let _ = writeln!(summary, "ldes_charge = {}", fmt_f64(t.ldes_charge_mwh));
    let _ = writeln!(summary, "dropped = {}", fmt_f64(t.dropped_mwh));
    write_file(dir, "summary.toml", summary)?;

    let mut daily = String::from("day,tpc,net_load_mwh\n");
    for (d, tpc) in report.daily_tpc.iter().enumerate() {
        let net: f64 = (d * 24..((d + 1) * 24).min(hours))
            .map(|h| system_net_load(ledger, h))
            .sum();
        let _ = writeln!(daily, "{d},{},{}", fmt_f64(*tpc), fmt_f64(net));
    }
    write_file(dir, "daily.csv", daily)?;

    // SOC occupancy histogram: 10 bins of percent-of-capacity, counted
    // separately over positive and negative net-load hours.
    let mut hist = String::from("technology,bin_low_pct,bin_high_pct,hours_positive_net_load,hours_negative_net_load\n");
    for tech in [StorageTechnology::Sdes, StorageTechnology::Ldes] {
        let fleet = ledger.storage_by_tech(tech);
        if fleet.is_empty() {
            continue;
        }
        let cap: f64 = fleet.iter().map(|s| s.soc_max).sum();
        let mut pos = [0u64; 10];
        let mut neg = [0u64; 10];
        for h in 0..hours {
            let soc: f64 = fleet.iter().map(|s| s.soc[h]).sum();
            let pct = 100.0 * soc / cap;
            let bin = ((pct / 10.0).floor() as usize).min(9);
            if system_net_load(ledger, h) >= 0.0 {
                pos[bin] += 1;
            } else {
                neg[bin] += 1;
            }
        }
        for b in 0..10 {
            let _ = writeln!(
                hist,
                "{tech},{},{},{},{}",
                b * 10,
                (b + 1) * 10,
                pos[b],
                neg[b]
            );
        }
    }
    write_file(dir, "soc_histogram.csv", hist)?;

    // One week of the hourly dispatch stack plus SOC traces.
    let w0 = (week_start_day * 24).min(hours);
    let w1 = (w0 + 168).min(hours);
    let mut week =
        String::from("hour,thermal_mw,vre_mw,storage_discharge_mw,storage_charge_mw,dropped_mw,sdes_soc_mwh,ldes_soc_mwh\n");
    for h in w0..w1 {
        let thermal: f64 = ledger.thermal.iter().map(|t| t.p[h]).sum();
        let vre: f64 = ledger.vre.iter().map(|v| v.dispatch[h]).sum();
        let dis: f64 = ledger.storage.iter().map(|s| s.discharge[h]).sum();
        let chg: f64 = ledger.storage.iter().map(|s| s.charge[h]).sum();
        let drop: f64 = ledger.zones.iter().map(|z| z.dropped[h]).sum();
        let sdes: f64 = ledger
            .storage_by_tech(StorageTechnology::Sdes)
            .iter()
            .map(|s| s.soc[h])
            .sum();
        let ldes: f64 = ledger
            .storage_by_tech(StorageTechnology::Ldes)
            .iter()
            .map(|s| s.soc[h])
            .sum();
        let _ = writeln!(
            week,
            "{h},{},{},{},{},{},{},{}",
            fmt_f64(thermal),
            fmt_f64(vre),
            fmt_f64(dis),
            fmt_f64(chg),
            fmt_f64(drop),
            fmt_f64(sdes),
            fmt_f64(ldes)
        );
    }
    write_file(dir, "dispatch_week.csv", week)?;
    Ok(())
}

/// Twin-comparison exports: `comparison.toml` plus `divergence.csv`
/// (daily TPCs, cumulative delta, net load, per-family dispatch L1) and
/// `soc_delta.csv` (hourly per-technology SOC deltas in percent).
pub fn write_comparison(
    report: &ComparisonReport,
    ledger_a: &SimulationLedger,
    dir: &Path,
) -> Result<(), IoError> {
    let mut top = String::new();
    let _ = writeln!(top, "run_a_manifest = \"run_a/manifest.toml\"");
    let _ = writeln!(top, "run_b_manifest = \"run_b/manifest.toml\"");
    let _ = writeln!(
        top,
        "divergence_onset_day = {}",
        report
            .divergence_onset_day
            .map(|d| d.to_string())
            .unwrap_or_else(|| "-1".into())
    );
    if let Some(g) = report.revenue_gap_sdes {
        let _ = writeln!(top, "revenue_gap_sdes = {}", fmt_f64(g));
    }
    if let Some(g) = report.revenue_gap_ldes {
        let _ = writeln!(top, "revenue_gap_ldes = {}", fmt_f64(g));
    }
    let max_rel = report
        .window_objective_rel_diff
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    let _ = writeln!(top, "max_window_objective_rel_diff = {}", fmt_f64(max_rel));
    let _ = writeln!(
        top,
        "final_cumulative_tpc_delta = {}",
        fmt_f64(*report.cumulative_tpc_delta.last().unwrap_or(&0.0))
    );
    write_file(dir, "comparison.toml", top)?;

    let hours = ledger_a.zones.first().map(|z| z.load.len()).unwrap_or(0);
    let mut div = String::from(
        "day,tpc_a,tpc_b,cumulative_delta,net_load_mwh,l1_thermal,l1_vre,l1_sdes,l1_ldes\n",
    );
    for d in 0..report.days {
        let net: f64 = (d * 24..((d + 1) * 24).min(hours))
            .map(|h| system_net_load(ledger_a, h))
            .sum();
        let _ = writeln!(
            div,
            "{d},{},{},{},{},{},{},{},{}",
            fmt_f64(report.daily_tpc_a[d]),
            fmt_f64(report.daily_tpc_b[d]),
            fmt_f64(report.cumulative_tpc_delta[d]),
            fmt_f64(net),
            fmt_f64(report.dispatch_l1.thermal[d]),
            fmt_f64(report.dispatch_l1.vre[d]),
            fmt_f64(report.dispatch_l1.sdes[d]),
            fmt_f64(report.dispatch_l1.ldes[d]),
        );
    }
    write_file(dir, "divergence.csv", div)?;

    let mut soc = String::from("hour,sdes_delta_pct,ldes_delta_pct\n");
    for h in 0..hours {
        let s = report
            .soc_delta_sdes
            .as_ref()
            .map(|v| fmt_f64(v[h]))
            .unwrap_or_else(|| "0".into());
        let l = report
            .soc_delta_ldes
            .as_ref()
            .map(|v| fmt_f64(v[h]))
            .unwrap_or_else(|| "0".into());
        let _ = writeln!(soc, "{h},{s},{l}");
    }
    write_file(dir, "soc_delta.csv", soc)?;
    Ok(())
}
