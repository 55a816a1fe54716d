//! Acceptance gate: one test per criterion, each printing a PASS line
//! with the measured quantities. Run with:
//!
//!     cargo test -p pcm-core --test acceptance -- --nocapture

use pcm_core::degeneracy::*;
use pcm_core::formulation::*;
use pcm_core::horizon::*;
use pcm_core::io;
use pcm_core::metrics::*;
use pcm_core::pricing::*;
use pcm_core::solver::*;
use pcm_core::synth::{synth_system, SynthParams};
use pcm_core::system::*;
use pcm_core::{MilpProblem, TimeSeriesFrame, Timestamp, TwinConfig};

fn settings() -> SolveSettings {
    SolveSettings::default()
}

fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1.0f64.max(a.abs())
}

/// Criterion 1: on >= 20 randomized small windows with at most 12
/// binaries, branch-and-bound matches the exhaustive 0/1 oracle within
/// 1e-9 relative.
#[test]
fn criterion_1_oracle_equivalence() {
    let t0 = std::time::Instant::now();
    let mut tight = settings();
    tight.rel_gap = 1e-9;
    let mut checked = 0;
    let mut worst: f64 = 0.0;
    for seed in 0..24u64 {
        // 1 thermal + 1 storage over 3 hours: (3 + 1) * 3 = 12 binaries.
        let mut params = SynthParams::default_with(1, 24);
        params.thermal_per_zone = 1;
        params.solar_per_zone = 1;
        params.wind_per_zone = 0;
        params.sdes_units = 1;
        params.ldes_units = 0;
        let (spec, series) = synth_system(&params, 9000 + seed).unwrap();
        let costs = perturb_storage_costs(&spec, 0.10, seed);
        let init = InitialConditions::cold_start(&spec);
        let offset = (seed as usize * 3) % 21;
        let w = build_window(
            &spec,
            &series,
            offset..offset + 3,
            &init,
            &costs,
            &FormulationOptions::default(),
        )
        .unwrap();
        assert!(w.problem.num_integers() <= 12);
        let bb = solve_milp(&w.problem, &tight).unwrap();
        let oracle = enumerate_binaries_oracle(&w.problem, &tight, 12).unwrap();
        assert_eq!(bb.status, oracle.status, "seed {seed}");
        if bb.status == SolveStatus::OptimalWithinGap {
            let d = rel_diff(oracle.objective, bb.objective);
            assert!(
                d <= 1e-9,
                "seed {seed}: bb {} oracle {}",
                bb.objective,
                oracle.objective
            );
            worst = worst.max(d);
            checked += 1;
        }
    }
    assert!(checked >= 20, "only {checked} optimal instances");
    eprintln!(
        "PASS [1] oracle equivalence: {checked} windows, worst rel diff {worst:.2e}, {:?}",
        t0.elapsed()
    );
}

/// Criterion 2: a single 168 h window on the 3-zone synthetic system
/// solved under lex_forward and lex_reverse has objective rel diff
/// <= 1e-4; dispatch totals agree within 1e-6 relative when the optimum
/// is unique (only the objective bound binds on degenerate instances).
#[test]
fn criterion_2_parity_analog() {
    let t0 = std::time::Instant::now();
    let (spec, series) = synth_system(&SynthParams::default_with(3, 192), 1).unwrap();
    let costs = perturb_storage_costs(&spec, spec.perturbation.pct, spec.perturbation.seed);
    let init = InitialConditions::cold_start(&spec);
    let w = build_window(
        &spec,
        &series,
        0..168,
        &init,
        &costs,
        &FormulationOptions::default(),
    )
    .unwrap();
    let fwd = solve_window(&w, &settings().with_tie_break(TieBreak::LexForward)).unwrap();
    let rev = solve_window(&w, &settings().with_tie_break(TieBreak::LexReverse)).unwrap();
    let obj_diff = rel_diff(fwd.objective, rev.objective);
    assert!(obj_diff <= 1e-4, "objective rel diff {obj_diff:.3e}");

    let totals = |x: &[f64]| -> (f64, f64, f64) {
        let cat = &w.catalog;
        let mut vre = 0.0;
        let mut thermal = 0.0;
        let mut discharge = 0.0;
        for t in 0..cat.hours {
            for i in 0..spec.vre_units.len() {
                vre += x[cat.vre_p(i, t)];
            }
            for i in 0..spec.thermal_units.len() {
                thermal += x[cat.thermal_p(i, t)];
            }
            for i in 0..spec.storage_units.len() {
                discharge += x[cat.storage_discharge(i, t)];
            }
        }
        (vre, thermal, discharge)
    };
    let (va, ta, da) = totals(&fwd.primal);
    let (vb, tb, db) = totals(&rev.primal);
    let worst_total = rel_diff(va, vb).max(rel_diff(ta, tb)).max(rel_diff(da, db));
    if worst_total <= 1e-6 {
        eprintln!(
            "PASS [2] parity analog: objective rel diff {obj_diff:.2e}, dispatch totals agree \
             (worst {worst_total:.2e}), {:?}",
            t0.elapsed()
        );
    } else {
        // Degenerate instance: verify equal objectives across policies and
        // apply the objective bound only.
        let alt = detect_alternate_optima(
            &w,
            &settings(),
            &[TieBreak::LexForward, TieBreak::LexReverse],
        )
        .unwrap();
        assert!(alt.equal_objective);
        eprintln!(
            "PASS [2] parity analog (degenerate): objective rel diff {obj_diff:.2e}, \
             dispatch distance {:.3}, {:?}",
            alt.max_dispatch_distance,
            t0.elapsed()
        );
    }
}

/// Criterion 3: twin runs of the twin-storage instance over 14 days under
/// the traditional 48/24 policy keep every window's objective rel diff
/// <= 2e-4 while the twins' dispatch separates from the onset day on, and
/// the cumulative |dTPC| at day 14 is at least its onset value.
#[test]
fn criterion_3_degenerate_twin_divergence() {
    let t0 = std::time::Instant::now();
    let (spec, series) = build_degenerate_instance(DegenerateKind::TwinStorage, 0);
    let mk = |tb| TwinConfig {
        settings: settings().with_tie_break(tb),
        perturbation: PerturbationConfig { pct: 0.0, seed: 0 },
    };
    let (report, _a, _b) = twin_run(
        &spec,
        &series,
        HorizonPolicy::traditional(),
        &mk(TieBreak::LexForward),
        &mk(TieBreak::LexReverse),
        &FormulationOptions::default(),
    )
    .unwrap();

    let worst_window = report
        .window_objective_rel_diff
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    assert!(
        worst_window <= 2.0 * 1e-4,
        "window objective rel diff {worst_window:.3e}"
    );
    let onset = report.divergence_onset_day.expect("divergence onset");
    for d in onset..report.days {
        assert!(
            report.dispatch_l1.ldes[d] > 0.0,
            "day {d}: LDES dispatch L1 is zero after onset"
        );
    }
    let cum_onset = report.cumulative_tpc_delta[onset].abs();
    let cum_final = report.cumulative_tpc_delta[report.days - 1].abs();
    assert!(
        cum_final >= cum_onset,
        "cumulative |dTPC| shrank: onset {cum_onset} final {cum_final}"
    );
    let peak = report
        .cumulative_tpc_delta
        .iter()
        .map(|v| v.abs())
        .fold(0.0f64, f64::max);
    eprintln!(
        "PASS [3] degenerate twin: onset day {onset}, worst window rel diff {worst_window:.2e}, \
         |dTPC| onset {cum_onset:.3} final {cum_final:.3} peak {peak:.2}, {:?}",
        t0.elapsed()
    );
}

/// Criterion 4: the extended 96/24 policy beats the traditional 48/24
/// policy on the myopia instance by the instance's certified peaker
/// premium within 2e-4 relative.
#[test]
fn criterion_4_extended_horizon_benefit() {
    let t0 = std::time::Instant::now();
    let (spec, series) = build_degenerate_instance(DegenerateKind::Myopia, 0);
    let opts = FormulationOptions::default();
    let trad = run_simulation(
        &spec,
        &series,
        HorizonPolicy::custom(48, 24),
        &settings(),
        &opts,
    )
    .unwrap();
    let ext = run_simulation(
        &spec,
        &series,
        HorizonPolicy::custom(96, 24),
        &settings(),
        &opts,
    )
    .unwrap();
    let (_, tpc_trad) = total_production_cost(&trad);
    let (_, tpc_ext) = total_production_cost(&ext);
    assert!(
        tpc_ext < tpc_trad,
        "extended {tpc_ext} not below traditional {tpc_trad}"
    );
    let gap = tpc_trad - tpc_ext;
    let certified = myopia_certified_gap(&spec);
    let err = (gap - certified).abs() / certified.abs();
    assert!(
        err <= 2.0 * 1e-4,
        "gap {gap} vs certified {certified} (rel err {err:.3e})"
    );
    eprintln!(
        "PASS [4] extended horizon: traditional {tpc_trad:.2} extended {tpc_ext:.2}, \
         gap {gap:.3} == certified {certified:.3} (rel err {err:.1e}), {:?}",
        t0.elapsed()
    );
}

/// Criterion 5: the 10% storage-cost perturbation shrinks the alternate-
/// optima dispatch distance on the twin-storage instance by >= 90%.
#[test]
fn criterion_5_perturbation_efficacy() {
    let t0 = std::time::Instant::now();
    let (spec, series) = build_degenerate_instance(DegenerateKind::TwinStorage, 0);
    let init = InitialConditions::cold_start(&spec);
    let policies = [TieBreak::LexForward, TieBreak::LexReverse];

    let unperturbed = perturb_storage_costs(&spec, 0.0, 0);
    let w0 = build_window(
        &spec,
        &series,
        0..24,
        &init,
        &unperturbed,
        &FormulationOptions::default(),
    )
    .unwrap();
    let base = detect_alternate_optima(&w0, &settings(), &policies).unwrap();
    assert!(base.equal_objective);
    assert!(
        base.max_dispatch_distance > 1e-3,
        "no baseline degeneracy: distance {}",
        base.max_dispatch_distance
    );

    let perturbed = perturb_storage_costs(&spec, 0.10, 7);
    let w1 = build_window(
        &spec,
        &series,
        0..24,
        &init,
        &perturbed,
        &FormulationOptions::default(),
    )
    .unwrap();
    let pert = detect_alternate_optima(&w1, &settings(), &policies).unwrap();
    let reduction = 1.0 - pert.max_dispatch_distance / base.max_dispatch_distance;
    assert!(
        reduction >= 0.90,
        "reduction {:.1}% (base {}, perturbed {})",
        100.0 * reduction,
        base.max_dispatch_distance,
        pert.max_dispatch_distance
    );
    eprintln!(
        "PASS [5] perturbation efficacy: distance {:.4} -> {:.6} ({:.1}% reduction), {:?}",
        base.max_dispatch_distance,
        pert.max_dispatch_distance,
        100.0 * reduction,
        t0.elapsed()
    );
}

fn single_unit_system(fuel: f64, hours: usize) -> (SystemSpec, TimeSeriesFrame) {
    let mut spec = SystemSpec::empty();
    spec.perturbation = PerturbationConfig { pct: 0.0, seed: 0 };
    spec.zones.push(Zone::new("z1"));
    spec.thermal_units.push(ThermalUnit {
        id: "t1".into(),
        zone: "z1".into(),
        p_min: 0.0,
        p_max: 400.0,
        fuel_cost: fuel,
        startup_cost: 0.0,
        shutdown_cost: 0.0,
        ramp_up: 400.0,
        ramp_down: 400.0,
        reserve_eligible: vec![],
    });
    let mut series = TimeSeriesFrame::new(Timestamp::from_ymdh(2050, 1, 1, 0).unwrap(), hours);
    series.load.set_column("z1", vec![200.0; hours]);
    (spec, series)
}

/// Criterion 6: (a) dropped-load hours price at the penalty, (b) marginal
/// single-zone hours price at the marginal unit's fuel cost, (c) the
/// congested two-zone hand instance reproduces duals (10, 50).
#[test]
fn criterion_6_pricing_correctness() {
    let t0 = std::time::Instant::now();

    // (a) + (b): one unit at fuel 25, one hour with forced shortage.
    let (spec, mut series) = single_unit_system(25.0, 24);
    let mut load = vec![200.0; 24];
    load[7] = 500.0; // 100 MW beyond capability
    series.load.set_column("z1", load);
    let ledger = run_simulation(
        &spec,
        &series,
        HorizonPolicy::custom(24, 24),
        &settings(),
        &FormulationOptions::default(),
    )
    .unwrap();
    let prices = compute_lmps(&spec, &series, &ledger, &settings()).unwrap();
    assert!(ledger.zones[0].dropped[7] > 99.0);
    assert!(
        (prices.lmp[0][7] - 10_000.0).abs() <= 1e-3,
        "shortage hour priced {}",
        prices.lmp[0][7]
    );
    for h in 0..24 {
        if h != 7 {
            assert!(
                (prices.lmp[0][h] - 25.0).abs() <= 1e-6,
                "hour {h} priced {}",
                prices.lmp[0][h]
            );
        }
    }

    // (c): cheap zone 10, dear zone 50, line congested between them.
    let mut spec2 = SystemSpec::empty();
    spec2.perturbation = PerturbationConfig { pct: 0.0, seed: 0 };
    spec2.zones.push(Zone::new("z1"));
    spec2.zones.push(Zone::new("z2"));
    spec2.lines.push(Line {
        id: "l1".into(),
        from_zone: "z1".into(),
        to_zone: "z2".into(),
        susceptance: 500.0,
        flow_min: -100.0,
        flow_max: 100.0,
    });
    for (zone, fuel) in [("z1", 10.0), ("z2", 50.0)] {
        spec2.thermal_units.push(ThermalUnit {
            id: format!("t-{zone}"),
            zone: zone.into(),
            p_min: 0.0,
            p_max: 1000.0,
            fuel_cost: fuel,
            startup_cost: 0.0,
            shutdown_cost: 0.0,
            ramp_up: 1000.0,
            ramp_down: 1000.0,
            reserve_eligible: vec![],
        });
    }
    let mut series2 = TimeSeriesFrame::new(Timestamp::from_ymdh(2050, 1, 1, 0).unwrap(), 24);
    series2.load.set_column("z1", vec![300.0; 24]);
    series2.load.set_column("z2", vec![400.0; 24]);
    let ledger2 = run_simulation(
        &spec2,
        &series2,
        HorizonPolicy::custom(24, 24),
        &settings(),
        &FormulationOptions::default(),
    )
    .unwrap();
    let prices2 = compute_lmps(&spec2, &series2, &ledger2, &settings()).unwrap();
    for h in 0..24 {
        assert!((prices2.lmp[0][h] - 10.0).abs() <= 1e-6);
        assert!((prices2.lmp[1][h] - 50.0).abs() <= 1e-6);
    }
    eprintln!(
        "PASS [6] pricing: shortage at 10000, marginal fuel at 25, congested duals (10, 50), {:?}",
        t0.elapsed()
    );
}

/// Criterion 7: every committed hour of a year-long 3-zone run satisfies
/// nodal balance to 1e-6 MW, the SOC recursion to 1e-8 MWh, exclusive
/// charge/discharge, SOC bounds, and line limits.
#[test]
fn criterion_7_conservation_year() {
    let t0 = std::time::Instant::now();
    let (spec, series) = synth_system(&SynthParams::default_with(3, 8760), 1).unwrap();
    let ledger = run_simulation(
        &spec,
        &series,
        HorizonPolicy::traditional(),
        &settings(),
        &FormulationOptions::default(),
    )
    .unwrap();
    assert_eq!(ledger.windows.len(), 365);
    let audit = audit_ledger(&ledger);
    assert_eq!(audit.hours_checked, 8760);
    assert!(
        audit.max_balance_residual <= 1e-6,
        "balance residual {}",
        audit.max_balance_residual
    );
    assert!(
        audit.max_soc_residual <= 1e-8,
        "SOC residual {}",
        audit.max_soc_residual
    );
    assert!(
        audit.max_simultaneous_charge <= 1e-6,
        "simultaneous charge/discharge {}",
        audit.max_simultaneous_charge
    );
    assert!(
        audit.max_soc_bound_violation <= 1e-6,
        "SOC bound violation {}",
        audit.max_soc_bound_violation
    );
    assert!(
        audit.max_flow_violation <= 1e-6,
        "flow violation {}",
        audit.max_flow_violation
    );
    eprintln!(
        "PASS [7] conservation year: 365 windows, 8760 hours, residuals balance {:.1e} soc {:.1e} \
         simultaneous {:.1e} bounds {:.1e} flows {:.1e}, {:?}",
        audit.max_balance_residual,
        audit.max_soc_residual,
        audit.max_simultaneous_charge,
        audit.max_soc_bound_violation,
        audit.max_flow_violation,
        t0.elapsed()
    );
}

/// Criterion 8: metric identities — cumulative-delta telescoping, SOC
/// delta antisymmetry, zero-activity zero revenue, and the equivalent-
/// cycles ratio checks including 4,300 GWh / 58.19 GWh = 73.9.
#[test]
fn criterion_8_metric_identities() {
    let t0 = std::time::Instant::now();
    let (spec, series) = synth_system(&SynthParams::default_with(2, 96), 5).unwrap();
    let mut spec_b = spec.clone();
    spec_b.perturbation.seed = 99;
    let a = run_simulation(
        &spec,
        &series,
        HorizonPolicy::traditional(),
        &settings(),
        &FormulationOptions::default(),
    )
    .unwrap();
    let b = run_simulation(
        &spec_b,
        &series,
        HorizonPolicy::traditional(),
        &settings(),
        &FormulationOptions::default(),
    )
    .unwrap();

    // Telescoping: last cumulative element equals the total difference.
    let delta = cumulative_tpc_delta(&a, &b).unwrap();
    let (_, ta) = total_production_cost(&a);
    let (_, tb) = total_production_cost(&b);
    let tel_err = (delta.last().unwrap() - (ta - tb)).abs() / 1.0f64.max((ta - tb).abs());
    assert!(tel_err <= 1e-6, "telescoping error {tel_err:.2e}");

    // Antisymmetry, exactly.
    for tech in [StorageTechnology::Sdes, StorageTechnology::Ldes] {
        let ab = soc_delta(&a, &b, tech).unwrap();
        let ba = soc_delta(&b, &a, tech).unwrap();
        for (x, y) in ab.iter().zip(&ba) {
            assert_eq!(*x, -*y, "antisymmetry violated");
        }
    }

    // Zero-activity storage earns exactly zero.
    let mut idle = a.clone();
    for s in &mut idle.storage {
        let n = s.charge.len();
        s.charge = vec![0.0; n];
        s.discharge = vec![0.0; n];
    }
    let flat = PriceSeries {
        zones: spec.zones.iter().map(|z| z.id.clone()).collect(),
        lmp: vec![vec![42.0; 96]; spec.zones.len()],
        window_status: vec![],
    };
    let r = storage_revenue(&idle, &flat, StorageTechnology::Ldes).unwrap();
    assert_eq!(r.total, 0.0);

    // Cycles ratio on the run ledger: discharge / capacity, recomputed.
    for tech in [StorageTechnology::Sdes, StorageTechnology::Ldes] {
        let cycles = equivalent_cycles(&a, tech).unwrap();
        let fleet = a.storage_by_tech(tech);
        let discharge: f64 = fleet.iter().map(|s| s.discharge.iter().sum::<f64>()).sum();
        let cap: f64 = fleet.iter().map(|s| s.soc_max).sum();
        assert!((cycles - discharge / cap).abs() <= 1e-12);
    }

    // The published-scale consistency illustration.
    let mut big = a.clone();
    big.storage.truncate(1);
    let s = &mut big.storage[0];
    s.technology = StorageTechnology::Ldes;
    s.soc_max = 58_190.0;
    let n = s.charge.len();
    s.charge = vec![0.0; n];
    s.discharge = vec![0.0; n];
    s.discharge[0] = 4_300_000.0;
    let cycles = equivalent_cycles(&big, StorageTechnology::Ldes).unwrap();
    assert!((cycles - 4_300_000.0 / 58_190.0).abs() <= 1e-6);
    assert!((cycles - 73.9).abs() < 0.05, "cycles {cycles}");

    eprintln!(
        "PASS [8] metric identities: telescoping {tel_err:.1e}, antisymmetry exact, \
         zero-revenue exact, cycles ratio {cycles:.4} ~ 73.9, {:?}",
        t0.elapsed()
    );
}

/// Criterion 9: identical configs produce byte-identical result files,
/// manifest volatile keys (timestamp, wall time) excluded.
#[test]
fn criterion_9_determinism() {
    let t0 = std::time::Instant::now();
    let (spec, series) = synth_system(&SynthParams::default_with(3, 168), 1).unwrap();
    let run = || {
        run_simulation(
            &spec,
            &series,
            HorizonPolicy::traditional(),
            &settings(),
            &FormulationOptions::default(),
        )
        .unwrap()
    };
    let a = run();
    let b = run();
    assert!(a.same_results(&b), "in-memory ledgers differ");

    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    io::write_ledger(&a, d1.path()).unwrap();
    io::write_ledger(&b, d2.path()).unwrap();
    let mut compared = 0;
    for name in io::LEDGER_FILES {
        let fa = std::fs::read_to_string(d1.path().join(name)).unwrap();
        let fb = std::fs::read_to_string(d2.path().join(name)).unwrap();
        if name == "manifest.toml" {
            let strip = |s: &str| {
                s.lines()
                    .filter(|l| !l.starts_with("created") && !l.starts_with("total_wall_time_s"))
                    .collect::<Vec<_>>()
                    .join("\n")
            };
            assert_eq!(strip(&fa), strip(&fb), "{name} differs beyond volatile keys");
        } else {
            assert_eq!(fa, fb, "{name} differs");
        }
        compared += 1;
    }

    // The twin experiment is deterministic end to end as well.
    let (tspec, tseries) = build_degenerate_instance(DegenerateKind::TwinStorage, 0);
    let mk = |tb| TwinConfig {
        settings: settings().with_tie_break(tb),
        perturbation: PerturbationConfig { pct: 0.0, seed: 0 },
    };
    let win = HorizonPolicy::custom(48, 24);
    let (r1, _, _) = twin_run(
        &tspec,
        &tseries,
        win,
        &mk(TieBreak::LexForward),
        &mk(TieBreak::LexReverse),
        &FormulationOptions::default(),
    )
    .unwrap();
    let (r2, _, _) = twin_run(
        &tspec,
        &tseries,
        win,
        &mk(TieBreak::LexForward),
        &mk(TieBreak::LexReverse),
        &FormulationOptions::default(),
    )
    .unwrap();
    assert_eq!(r1, r2, "twin comparison reports differ");

    eprintln!(
        "PASS [9] determinism: {compared} files byte-identical (volatile manifest keys excluded), \
         twin reports identical, {:?}",
        t0.elapsed()
    );
}

// Guard: the MilpProblem alias stays exported for external cross-checks.
#[test]
fn mps_export_available_for_cross_checks() {
    let (spec, series) = synth_system(&SynthParams::default_with(1, 24), 2).unwrap();
    let costs = perturb_storage_costs(&spec, 0.10, 2);
    let init = InitialConditions::cold_start(&spec);
    let w = build_window(&spec, &series, 0..2, &init, &costs, &FormulationOptions::default())
        .unwrap();
    let mut buf = Vec::new();
    let problem: &MilpProblem = &w.problem;
    problem.write_mps("WINDOW", &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.starts_with("NAME"));
    assert!(text.trim_end().ends_with("ENDATA"));
}
