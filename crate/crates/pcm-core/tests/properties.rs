//! Property tests for the cross-cutting invariants.

use pcm_core::formulation::FormulationOptions;
use pcm_core::horizon::{run_simulation, HorizonPolicy};
use pcm_core::solver::{SolveSettings, TieBreak};
use pcm_core::synth::{synth_system, SynthParams};
use pcm_core::{net_load, Timestamp};
use proptest::prelude::*;

proptest! {
    /// Scaling every load and availability by a scales net load by a.
    #[test]
    fn net_load_is_linear(alpha in 0.1f64..5.0, seed in 0u64..50) {
        let (spec, series) = synth_system(&SynthParams::default_with(2, 48), seed).unwrap();
        let base = net_load(&spec, &series, 0..48).unwrap();
        let mut scaled = series.clone();
        for z in &spec.zones {
            let col: Vec<f64> = scaled.load.column(&z.id).unwrap().iter().map(|v| v * alpha).collect();
            scaled.load.set_column(&z.id, col);
        }
        for v in &spec.vre_units {
            let col: Vec<f64> = scaled
                .availability
                .column(&v.availability_series_key)
                .unwrap()
                .iter()
                .map(|v| v * alpha)
                .collect();
            scaled.availability.set_column(&v.availability_series_key, col);
        }
        let after = net_load(&spec, &scaled, 0..48).unwrap();
        for (b, a) in base.iter().zip(&after) {
            prop_assert!((b * alpha - a).abs() <= 1e-9 * (1.0 + b.abs() * alpha.abs()));
        }
    }

    /// Synthetic generation is bit-deterministic in (params, seed).
    #[test]
    fn synth_is_bit_deterministic(seed in 0u64..200, zones in 1usize..4) {
        let p = SynthParams::default_with(zones, 48);
        let (s1, f1) = synth_system(&p, seed).unwrap();
        let (s2, f2) = synth_system(&p, seed).unwrap();
        prop_assert_eq!(s1, s2);
        prop_assert_eq!(f1, f2);
    }

    /// Timestamps round-trip through their ISO-8601 rendering.
    #[test]
    fn timestamp_roundtrip(hours in -500_000i64..500_000) {
        let t = Timestamp(hours);
        prop_assert_eq!(Timestamp::parse(&t.to_string()).unwrap(), t);
    }

    /// Tie-break orders are permutations of the column range.
    #[test]
    fn tie_break_order_is_permutation(n in 0usize..500, seed in 0u64..1000) {
        for tb in [TieBreak::LexForward, TieBreak::LexReverse, TieBreak::SeededShuffle(seed)] {
            let order = tb.order(n);
            let mut sorted: Vec<u32> = order.clone();
            sorted.sort_unstable();
            let expect: Vec<u32> = (0..n as u32).collect();
            prop_assert_eq!(sorted, expect);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// Committed hours partition the simulated span for any valid policy
    /// whose advance divides the span.
    #[test]
    fn committed_hours_partition_any_policy(
        advance_steps in 1usize..4,
        window_extra in 0usize..3,
        seed in 0u64..20,
    ) {
        let span = 96;
        let advance = 24 * advance_steps; // divides span when <= 96
        prop_assume!(span % advance == 0);
        let window = (advance + 24 * window_extra).min(span);
        let mut params = SynthParams::default_with(1, span);
        params.thermal_per_zone = 1;
        params.wind_per_zone = 0;
        let (spec, series) = synth_system(&params, seed).unwrap();
        let ledger = run_simulation(
            &spec,
            &series,
            HorizonPolicy::custom(window, advance),
            &SolveSettings::default(),
            &FormulationOptions::default(),
        )
        .unwrap();
        let committed: usize = ledger.windows.iter().map(|w| w.committed_hours).sum();
        prop_assert_eq!(committed, span);
        for tr in &ledger.thermal {
            prop_assert_eq!(tr.p.len(), span);
        }
        // State continuity: committed SOC never jumps across windows.
        let audit = pcm_core::audit_ledger(&ledger);
        prop_assert!(audit.max_soc_residual <= 1e-8);
    }
}
