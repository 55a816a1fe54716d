//! Controlled experiments around equal-objective, divergent-dispatch
//! solutions and their amplification across sequential windows.

use crate::calendar::Timestamp;
use crate::formulation::{solve_window, FormulationOptions, WindowMilp};
use crate::horizon::{run_simulation, HorizonError, HorizonPolicy, SimulationLedger};
use crate::metrics::{
    cumulative_tpc_delta, storage_revenue, total_production_cost, MetricError,
};
use crate::pricing::{compute_lmps, PricingError};
use crate::series::TimeSeriesFrame;
use crate::solver::{SolveError, SolveSettings, TieBreak};
use crate::system::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TwinError {
    #[error("twin settings must differ only in tie_break and/or perturbation seed")]
    SettingsDiffer,
    #[error("run {label}: {source}")]
    Run {
        label: &'static str,
        #[source]
        source: HorizonError,
    },
    #[error("pricing {label}: {source}")]
    Pricing {
        label: &'static str,
        #[source]
        source: PricingError,
    },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// One side of a twin experiment: solver settings plus the storage-cost
/// perturbation applied to its run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwinConfig {
    pub settings: SolveSettings,
    pub perturbation: PerturbationConfig,
}

/// Per-day dispatch L1 distances between two runs, by unit family.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DispatchDistance {
    pub thermal: Vec<f64>,
    pub vre: Vec<f64>,
    pub sdes: Vec<f64>,
    pub ldes: Vec<f64>,
}

impl DispatchDistance {
    pub fn total_on_day(&self, d: usize) -> f64 {
        self.thermal[d] + self.vre[d] + self.sdes[d] + self.ldes[d]
    }
}

/// Twin-run divergence record.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub days: usize,
    pub daily_tpc_a: Vec<f64>,
    pub daily_tpc_b: Vec<f64>,
    pub cumulative_tpc_delta: Vec<f64>,
    pub soc_delta_sdes: Option<Vec<f64>>,
    pub soc_delta_ldes: Option<Vec<f64>>,
    pub dispatch_l1: DispatchDistance,
    /// `|obj_A - obj_B| / max(1, |obj_A|)` per window index.
    pub window_objective_rel_diff: Vec<f64>,
    pub revenue_gap_sdes: Option<f64>,
    pub revenue_gap_ldes: Option<f64>,
    /// First day with any nonzero dispatch distance.
    pub divergence_onset_day: Option<usize>,
}

fn family_l1(
    a: &SimulationLedger,
    b: &SimulationLedger,
    days: usize,
) -> DispatchDistance {
    let mut out = DispatchDistance {
        thermal: vec![0.0; days],
        vre: vec![0.0; days],
        sdes: vec![0.0; days],
        ldes: vec![0.0; days],
    };
    for (ta, tb) in a.thermal.iter().zip(&b.thermal) {
        for (h, (x, y)) in ta.p.iter().zip(&tb.p).enumerate() {
            out.thermal[h / 24] += (x - y).abs();
        }
    }
    for (va, vb) in a.vre.iter().zip(&b.vre) {
        for (h, (x, y)) in va.dispatch.iter().zip(&vb.dispatch).enumerate() {
            out.vre[h / 24] += (x - y).abs();
        }
    }
    for (sa, sb) in a.storage.iter().zip(&b.storage) {
        let bucket = match sa.technology {
            StorageTechnology::Sdes => &mut out.sdes,
            StorageTechnology::Ldes => &mut out.ldes,
        };
        for h in 0..sa.charge.len() {
            bucket[h / 24] +=
                (sa.charge[h] - sb.charge[h]).abs() + (sa.discharge[h] - sb.discharge[h]).abs();
        }
    }
    out
}

/// Run the same simulation twice under configs that differ only in
/// tie-break policy and/or perturbation seed, and compare everything.
/// `a` takes the minuend role in the cumulative TPC delta.
pub fn twin_run(
    spec: &SystemSpec,
    series: &TimeSeriesFrame,
    policy: HorizonPolicy,
    a: &TwinConfig,
    b: &TwinConfig,
    options: &FormulationOptions,
) -> Result<(ComparisonReport, SimulationLedger, SimulationLedger), TwinError> {
    let sa = a.settings;
    let sb = b.settings;
    if sa.rel_gap != sb.rel_gap
        || sa.time_limit != sb.time_limit
        || sa.pivot_rule != sb.pivot_rule
        || a.perturbation.pct != b.perturbation.pct
    {
        return Err(TwinError::SettingsDiffer);
    }

    let run = |cfg: &TwinConfig, label: &'static str| {
        let mut spec_run = spec.clone();
        spec_run.perturbation = cfg.perturbation;
        run_simulation(&spec_run, series, policy, &cfg.settings, options)
            .map(|l| (spec_run, l))
            .map_err(|source| TwinError::Run { label, source })
    };
    let (spec_a, ledger_a) = run(a, "A")?;
    let (spec_b, ledger_b) = run(b, "B")?;

    let report = compare_ledgers(&spec_a, &spec_b, series, &ledger_a, &ledger_b, &sa, &sb)?;
    Ok((report, ledger_a, ledger_b))
}

#[allow(clippy::too_many_arguments)]
fn compare_ledgers(
    spec_a: &SystemSpec,
    spec_b: &SystemSpec,
    series: &TimeSeriesFrame,
    a: &SimulationLedger,
    b: &SimulationLedger,
    settings_a: &SolveSettings,
    settings_b: &SolveSettings,
) -> Result<ComparisonReport, TwinError> {
    let (daily_a, _) = total_production_cost(a);
    let (daily_b, _) = total_production_cost(b);
    let days = daily_a.len();
    let cumulative = cumulative_tpc_delta(a, b)?;
    let dispatch_l1 = family_l1(a, b, days);
    let onset = (0..days).find(|&d| dispatch_l1.total_on_day(d) > 1e-6);

    let window_objective_rel_diff = a
        .windows
        .iter()
        .zip(&b.windows)
        .map(|(wa, wb)| (wa.objective - wb.objective).abs() / 1.0f64.max(wa.objective.abs()))
        .collect();

    let has_tech = |l: &SimulationLedger, t| !l.storage_by_tech(t).is_empty();
    let soc_delta_sdes = if has_tech(a, StorageTechnology::Sdes) {
        Some(crate::metrics::soc_delta(a, b, StorageTechnology::Sdes)?)
    } else {
        None
    };
    let soc_delta_ldes = if has_tech(a, StorageTechnology::Ldes) {
        Some(crate::metrics::soc_delta(a, b, StorageTechnology::Ldes)?)
    } else {
        None
    };

    let prices_a = compute_lmps(spec_a, series, a, settings_a)
        .map_err(|source| TwinError::Pricing { label: "A", source })?;
    let prices_b = compute_lmps(spec_b, series, b, settings_b)
        .map_err(|source| TwinError::Pricing { label: "B", source })?;
    let gap_of = |tech| -> Result<Option<f64>, TwinError> {
        if !has_tech(a, tech) {
            return Ok(None);
        }
        let ra = storage_revenue(a, &prices_a, tech)?;
        let rb = storage_revenue(b, &prices_b, tech)?;
        Ok(Some(ra.total - rb.total))
    };

    Ok(ComparisonReport {
        days,
        daily_tpc_a: daily_a,
        daily_tpc_b: daily_b,
        cumulative_tpc_delta: cumulative,
        soc_delta_sdes,
        soc_delta_ldes,
        dispatch_l1,
        window_objective_rel_diff,
        revenue_gap_sdes: gap_of(StorageTechnology::Sdes)?,
        revenue_gap_ldes: gap_of(StorageTechnology::Ldes)?,
        divergence_onset_day: onset,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternateOptima {
    pub equal_objective: bool,
    pub max_dispatch_distance: f64,
    pub objectives: Vec<f64>,
}

/// Solve one window under each tie-break policy: equal objectives within
/// `2 * rel_gap` and the maximum pairwise L1 distance over continuous
/// dispatch columns.
pub fn detect_alternate_optima(
    window: &WindowMilp,
    settings: &SolveSettings,
    policies: &[TieBreak],
) -> Result<AlternateOptima, SolveError> {
    assert!(policies.len() >= 2, "need at least two policies");
    let mut solutions = Vec::with_capacity(policies.len());
    for &tb in policies {
        let s = settings.with_tie_break(tb);
        let res = solve_window(window, &s)?;
        solutions.push(res);
    }
    let dispatch = window.catalog.dispatch_columns();
    let mut equal = true;
    let mut max_distance: f64 = 0.0;
    for i in 0..solutions.len() {
        for j in i + 1..solutions.len() {
            let oi = solutions[i].objective;
            let oj = solutions[j].objective;
            if (oi - oj).abs() / 1.0f64.max(oi.abs()) > 2.0 * settings.rel_gap {
                equal = false;
            }
            let l1: f64 = dispatch
                .iter()
                .map(|&c| (solutions[i].primal[c] - solutions[j].primal[c]).abs())
                .sum();
            max_distance = max_distance.max(l1);
        }
    }
    Ok(AlternateOptima {
        equal_objective: equal,
        max_dispatch_distance: max_distance,
        objectives: solutions.iter().map(|s| s.objective).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DegenerateKind {
    /// Two identical LDES twins in one zone whose charge/discharge splits
    /// are cost-equal inside a window but steer later spike coverage.
    TwinStorage,
    /// Two identical zero-cost VRE units with surplus availability: any
    /// curtailment split is optimal.
    VreSplit,
    /// A surplus day whose energy is only valuable beyond the traditional
    /// look-ahead: the 96/24 policy beats 48/24 by a certified premium.
    Myopia,
}

impl std::str::FromStr for DegenerateKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "twin_storage" => Ok(DegenerateKind::TwinStorage),
            "vre_split" => Ok(DegenerateKind::VreSplit),
            "myopia" => Ok(DegenerateKind::Myopia),
            other => Err(format!("unknown degenerate instance kind `{other}`")),
        }
    }
}

fn start_2050() -> Timestamp {
    Timestamp::from_ymdh(2050, 1, 1, 0).unwrap()
}

fn thermal(id: &str, zone: &str, p_min: f64, p_max: f64, fuel: f64) -> ThermalUnit {
    ThermalUnit {
        id: id.into(),
        zone: zone.into(),
        p_min,
        p_max,
        fuel_cost: fuel,
        startup_cost: 0.0,
        shutdown_cost: 0.0,
        ramp_up: p_max,
        ramp_down: p_max,
        reserve_eligible: vec![],
    }
}

/// Deterministic small instances exhibiting the named degeneracy or
/// myopia structure. The seed is recorded in the perturbation config and
/// otherwise leaves the construction untouched.
pub fn build_degenerate_instance(
    kind: DegenerateKind,
    seed: u64,
) -> (SystemSpec, TimeSeriesFrame) {
    match kind {
        DegenerateKind::TwinStorage => twin_storage_instance(seed),
        DegenerateKind::VreSplit => vre_split_instance(seed),
        DegenerateKind::Myopia => myopia_instance(seed),
    }
}

/// 14 days with an evening spike just beyond the baseload unit's rating
/// every day, coverable only by the twins' combined discharge power. How
/// the spike and the recharge split across the identical twins is
/// cost-equal inside every window, so the policies walk different SOC
/// trajectories from day 0 on, while the baseload fuel bill keeps window
/// objective differences far below the MIP gap.
///
/// Three day flavors shape the cost trace:
/// - day 0: availability equals load exactly, so the committed choices
///   reduce to the spike split alone (the clean single-window probe for
///   alternate-optima detection; its TPC delta is exactly zero);
/// - days 1-10: midday surplus plus fueled nights, which adds timing
///   freedom in storage-for-fuel substitution and locks in a real
///   cumulative TPC offset between the runs;
/// - days 11-13: renewables cover everything except the spike, freezing
///   the accumulated TPC difference while the twins keep cycling.
fn twin_storage_instance(seed: u64) -> (SystemSpec, TimeSeriesFrame) {
    const DAYS: usize = 14;
    const BASE_LOAD: f64 = 4000.0;
    const BASE_PMAX: f64 = 5000.0;
    const SPIKE_MW: f64 = 0.75; // beyond baseload capability
    const SURPLUS_MW: f64 = 4500.0; // above load: free curtailed energy
    const GREEN_MW: f64 = 4100.0;

    let mut spec = SystemSpec::empty();
    spec.perturbation = PerturbationConfig { pct: 0.0, seed };
    spec.zones.push(Zone::new("z1"));
    // Isolated anchor zone: a flat fueled load the storage cannot reach.
    // It dominates every window objective, which keeps the twin runs'
    // objective differences far below the MIP gap on all day flavors.
    spec.zones.push(Zone::new("z2"));
    spec.thermal_units
        .push(thermal("base", "z1", 0.0, BASE_PMAX, 20.0));
    spec.thermal_units
        .push(thermal("peaker", "z1", 0.0, 100.0, 200.0));
    spec.thermal_units
        .push(thermal("anchor", "z2", 0.0, 3000.0, 20.0));
    spec.vre_units.push(VreUnit {
        id: "v1".into(),
        zone: "z1".into(),
        technology: VreTechnology::Solar,
        capacity: SURPLUS_MW + 100.0,
        availability_series_key: "v1".into(),
        reserve_eligible: vec![],
    });
    for id in ["ldes-a", "ldes-b"] {
        spec.storage_units
            .push(StorageUnit::with_defaults(id, "z1", StorageTechnology::Ldes, 0.5));
    }

    let hours = DAYS * 24;
    let mut series = TimeSeriesFrame::new(start_2050(), hours);
    let mut load = vec![BASE_LOAD; hours];
    let mut avail = vec![0.0; hours];
    series.load.set_column("z2", vec![2000.0; hours]);
    for d in 0..DAYS {
        for h in 0..24 {
            avail[d * 24 + h] = match d {
                0 => BASE_LOAD,
                1..=10 => {
                    if (8..18).contains(&h) {
                        SURPLUS_MW
                    } else {
                        0.0
                    }
                }
                _ => GREEN_MW,
            };
        }
        for h in 18..21 {
            let at = d * 24 + h;
            if (1..=10).contains(&d) {
                // Fueled spike: load beyond the baseload rating, no VRE.
                load[at] = BASE_PMAX + SPIKE_MW;
                avail[at] = 0.0;
            } else {
                // Pure VRE shortfall: the baseload stays off, so the
                // twins' combined output is pinned at SPIKE_MW and only
                // the device split is free.
                avail[at] = BASE_LOAD - SPIKE_MW;
            }
        }
    }
    series.load.set_column("z1", load);
    series.availability.set_column("v1", avail);
    (spec, series)
}

/// One zone, two identical zero-cost VRE units whose combined availability
/// exceeds load every hour: the curtailment split is a free choice.
fn vre_split_instance(seed: u64) -> (SystemSpec, TimeSeriesFrame) {
    let mut spec = SystemSpec::empty();
    spec.perturbation = PerturbationConfig { pct: 0.0, seed };
    spec.zones.push(Zone::new("z1"));
    for id in ["vre-a", "vre-b"] {
        spec.vre_units.push(VreUnit {
            id: id.into(),
            zone: "z1".into(),
            technology: VreTechnology::Wind,
            capacity: 100.0,
            availability_series_key: id.into(),
            reserve_eligible: vec![],
        });
    }
    let hours = 48;
    let mut series = TimeSeriesFrame::new(start_2050(), hours);
    series.load.set_column("z1", vec![150.0; hours]);
    series.availability.set_column("vre-a", vec![100.0; hours]);
    series.availability.set_column("vre-b", vec![100.0; hours]);
    (spec, series)
}

const MYOPIA_DEFICIT_MWH: f64 = 900.0;
const MYOPIA_PEAKER_FUEL: f64 = 200.0;

/// 96 hours: surplus on day 0, flat day 1, a 9-hour 100 MW deficit on
/// day 2, flat day 3. The storage starts half full (400 MWh usable), so
/// the 48/24 policy burns the peaker for the remaining 500 MWh while the
/// 96/24 policy pre-charges from day-0 surplus.
fn myopia_instance(seed: u64) -> (SystemSpec, TimeSeriesFrame) {
    let mut spec = SystemSpec::empty();
    spec.perturbation = PerturbationConfig { pct: 0.0, seed };
    spec.zones.push(Zone::new("z1"));
    spec.thermal_units
        .push(thermal("peaker", "z1", 0.0, 150.0, MYOPIA_PEAKER_FUEL));
    spec.vre_units.push(VreUnit {
        id: "v1".into(),
        zone: "z1".into(),
        technology: VreTechnology::Wind,
        capacity: 250.0,
        availability_series_key: "v1".into(),
        reserve_eligible: vec![],
    });
    spec.storage_units
        .push(StorageUnit::with_defaults("ldes", "z1", StorageTechnology::Ldes, 100.0));

    let hours = 96;
    let mut series = TimeSeriesFrame::new(start_2050(), hours);
    let mut load = vec![100.0; hours];
    let mut avail = vec![100.0; hours];
    // Day-0 surplus: 150 MW beyond load for 12 hours.
    for h in 6..18 {
        avail[h] = 250.0;
    }
    // Day-2 deficit: 9 hours of 100 MW shortfall.
    for h in (48 + 8)..(48 + 17) {
        load[h] = 200.0;
    }
    series.load.set_column("z1", load);
    series.availability.set_column("v1", avail);
    (spec, series)
}

/// Analytic premium of the traditional 48/24 policy over the extended
/// 96/24 policy on the myopia instance, from its construction:
/// the peaker covers what half-full storage cannot, while the extended
/// policy pays storage op cost on the pre-charged cycle instead.
pub fn myopia_certified_gap(spec: &SystemSpec) -> f64 {
    let s = &spec.storage_units[0];
    let usable_init = 0.5 * s.soc_max - s.soc_min;
    let shortfall = MYOPIA_DEFICIT_MWH - usable_init;
    let op = s.op_cost_nominal;
    // Traditional: peaker on the shortfall plus op cost on the initial
    // usable energy discharged. Extended: op cost on the full deficit
    // discharge plus the charge leg for the shortfall.
    let trad = shortfall * MYOPIA_PEAKER_FUEL + usable_init * op;
    let ext = MYOPIA_DEFICIT_MWH * op + (shortfall / s.eta_charge) * op;
    trad - ext
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formulation::{build_window, perturb_storage_costs, InitialConditions};

    #[test]
    fn instances_validate() {
        for kind in [
            DegenerateKind::TwinStorage,
            DegenerateKind::VreSplit,
            DegenerateKind::Myopia,
        ] {
            let (spec, series) = build_degenerate_instance(kind, 1);
            let rep = validate_system(&spec, &series);
            assert!(rep.is_ok(), "{kind:?}: {:?}", rep.violations);
            // Deterministic per seed.
            let (s2, f2) = build_degenerate_instance(kind, 1);
            assert_eq!(spec, s2);
            assert_eq!(series, f2);
        }
    }

    #[test]
    fn twin_storage_has_twin_ldes_in_one_zone() {
        let (spec, _) = build_degenerate_instance(DegenerateKind::TwinStorage, 3);
        let ldes: Vec<_> = spec
            .storage_units
            .iter()
            .filter(|s| s.technology == StorageTechnology::Ldes)
            .collect();
        assert_eq!(ldes.len(), 2);
        assert_eq!(ldes[0].zone, ldes[1].zone);
        let (a, b) = (ldes[0], ldes[1]);
        assert_eq!(a.discharge_max, b.discharge_max);
        assert_eq!(a.soc_max, b.soc_max);
        assert_eq!(a.op_cost_nominal, b.op_cost_nominal);
    }

    #[test]
    fn vre_split_shows_curtailment_degeneracy() {
        let (spec, series) = build_degenerate_instance(DegenerateKind::VreSplit, 2);
        let costs = perturb_storage_costs(&spec, 0.0, 0);
        let init = InitialConditions::cold_start(&spec);
        let w = build_window(&spec, &series, 0..24, &init, &costs, &Default::default()).unwrap();
        let out = detect_alternate_optima(
            &w,
            &SolveSettings::default(),
            &[TieBreak::LexForward, TieBreak::LexReverse],
        )
        .unwrap();
        assert!(out.equal_objective, "objectives {:?}", out.objectives);
        assert!(
            out.max_dispatch_distance > 1.0,
            "distance {}",
            out.max_dispatch_distance
        );
    }

    #[test]
    fn unique_optimum_has_no_distance() {
        // Strictly different fuel costs make the dispatch unique.
        let mut spec = SystemSpec::empty();
        spec.perturbation = PerturbationConfig { pct: 0.0, seed: 0 };
        spec.zones.push(Zone::new("z1"));
        spec.thermal_units.push(thermal("cheap", "z1", 0.0, 100.0, 10.0));
        spec.thermal_units.push(thermal("dear", "z1", 0.0, 100.0, 30.0));
        let mut series = TimeSeriesFrame::new(start_2050(), 24);
        series.load.set_column("z1", vec![150.0; 24]);
        let costs = perturb_storage_costs(&spec, 0.0, 0);
        let init = InitialConditions::cold_start(&spec);
        let w = build_window(&spec, &series, 0..24, &init, &costs, &Default::default()).unwrap();
        let out = detect_alternate_optima(
            &w,
            &SolveSettings::default(),
            &[TieBreak::LexForward, TieBreak::LexReverse],
        )
        .unwrap();
        assert!(out.equal_objective);
        assert!(
            out.max_dispatch_distance < 1e-6,
            "distance {}",
            out.max_dispatch_distance
        );
    }

    #[test]
    fn myopia_certified_gap_is_positive() {
        let (spec, _) = build_degenerate_instance(DegenerateKind::Myopia, 0);
        let gap = myopia_certified_gap(&spec);
        // 500 MWh of peaker at 200 $/MWh dominates the op-cost legs.
        assert!(gap > 99_000.0 && gap < 101_000.0, "gap {gap}");
    }

    #[test]
    fn identical_twin_configs_produce_zero_deltas() {
        let (spec, series) = build_degenerate_instance(DegenerateKind::VreSplit, 2);
        let cfg = TwinConfig {
            settings: SolveSettings::default(),
            perturbation: PerturbationConfig { pct: 0.0, seed: 0 },
        };
        let (report, a, b) = twin_run(
            &spec,
            &series,
            HorizonPolicy::custom(24, 24),
            &cfg,
            &cfg,
            &FormulationOptions::default(),
        )
        .unwrap();
        assert!(a.same_results(&b));
        assert!(report.cumulative_tpc_delta.iter().all(|&v| v == 0.0));
        assert_eq!(report.divergence_onset_day, None);
        assert!(report
            .window_objective_rel_diff
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn twin_precondition_enforced() {
        let (spec, series) = build_degenerate_instance(DegenerateKind::VreSplit, 2);
        let a = TwinConfig {
            settings: SolveSettings::default(),
            perturbation: PerturbationConfig { pct: 0.0, seed: 0 },
        };
        let mut b = a;
        b.settings.rel_gap = 1e-6;
        let err = twin_run(
            &spec,
            &series,
            HorizonPolicy::custom(24, 24),
            &a,
            &b,
            &FormulationOptions::default(),
        );
        assert!(matches!(err, Err(TwinError::SettingsDiffer)));
    }
}
