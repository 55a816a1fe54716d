//! Locational marginal prices from fixed-binary LP duals.
//!
//! Each window is replayed exactly as the simulation ran it (same costs,
//! settings, and initial state, hence the same solution by determinism),
//! the binaries are fixed at that solution, and the dual of each zone-hour
//! balance row prices the committed hours. The sign convention is the
//! objective increase per additional MW of load.

use crate::formulation::{solve_window, FormulationError, InitialConditions};
use crate::horizon::{HorizonError, SimulationLedger};
use crate::series::TimeSeriesFrame;
use crate::solver::{solve_lp, SolveError, SolveSettings, SolveStatus};
use crate::system::SystemSpec;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PricingError {
    #[error("ledger covers {ledger} hours but series has {series}")]
    SpanMismatch { ledger: usize, series: usize },
    #[error("window {index}: replayed objective {replayed} deviates from ledger objective {recorded}")]
    ReplayDiverged {
        index: usize,
        replayed: f64,
        recorded: f64,
    },
    #[error("window {index}: fixed-binary LP is {status}; ledger is corrupt")]
    FixedLpFailed { index: usize, status: SolveStatus },
    #[error("window {index}: {source}")]
    Window {
        index: usize,
        #[source]
        source: SolveError,
    },
    #[error(transparent)]
    Formulation(#[from] FormulationError),
    #[error(transparent)]
    Horizon(#[from] HorizonError),
}

/// Hourly LMP per zone over the committed span.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    pub zones: Vec<String>,
    /// `lmp[z][h]`, $/MWh.
    pub lmp: Vec<Vec<f64>>,
    /// Fixed-binary LP status per window.
    pub window_status: Vec<SolveStatus>,
}

impl PriceSeries {
    pub fn hours(&self) -> usize {
        self.lmp.first().map(|c| c.len()).unwrap_or(0)
    }

    pub fn zone_index(&self, zone: &str) -> Option<usize> {
        self.zones.iter().position(|z| z == zone)
    }

    pub fn iter_all(&self) -> impl Iterator<Item = f64> + '_ {
        self.lmp.iter().flat_map(|c| c.iter().copied())
    }
}

/// Rebuild every window with the ledger's cost config, fix binaries at the
/// committed solution, and read nodal-balance duals as LMPs.
pub fn compute_lmps(
    spec: &SystemSpec,
    series: &TimeSeriesFrame,
    ledger: &SimulationLedger,
    settings: &SolveSettings,
) -> Result<PriceSeries, PricingError> {
    if ledger.hours() != series.hours {
        return Err(PricingError::SpanMismatch {
            ledger: ledger.hours(),
            series: series.hours,
        });
    }
    let costs = &ledger.meta.cost_config;
    let options = &ledger.meta.options;
    let mut prices = PriceSeries {
        zones: spec.zones.iter().map(|z| z.id.clone()).collect(),
        lmp: vec![Vec::with_capacity(series.hours); spec.zones.len()],
        window_status: Vec::with_capacity(ledger.windows.len()),
    };

    let mut init = InitialConditions::cold_start(spec);
    for w in &ledger.windows {
        let start = w.start_hour;
        let end = start + w.window_hours;
        let window =
            crate::horizon::rebuild_window(spec, series, costs, options, &init, start, end)?;
        let milp = solve_window(&window, settings).map_err(|e| PricingError::Window {
            index: w.index,
            source: e,
        })?;
        let denom = 1.0f64.max(w.objective.abs());
        if (milp.objective - w.objective).abs() / denom > 1e-6 {
            return Err(PricingError::ReplayDiverged {
                index: w.index,
                replayed: milp.objective,
                recorded: w.objective,
            });
        }
        let fixed = window
            .fix_binaries(&milp.primal)
            .map_err(|e| PricingError::Window {
                index: w.index,
                source: SolveError::Malformed(e),
            })?;
        let lp = solve_lp(&fixed.problem, settings).map_err(|e| PricingError::Window {
            index: w.index,
            source: e,
        })?;
        if lp.status != SolveStatus::OptimalWithinGap {
            return Err(PricingError::FixedLpFailed {
                index: w.index,
                status: lp.status,
            });
        }
        let duals = lp.duals.as_ref().expect("LP duals");
        for t in 0..w.committed_hours {
            for (zi, col) in prices.lmp.iter_mut().enumerate() {
                col.push(duals[window.balance_rows[t][zi]]);
            }
        }
        prices.window_status.push(lp.status);

        if start + w.committed_hours < series.hours {
            let sol = crate::horizon::WindowSolution {
                catalog: &window.catalog,
                primal: &milp.primal,
            };
            init = crate::horizon::propagate_state(spec, &sol, w.committed_hours)?;
        }
    }
    Ok(prices)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceStats {
    pub mean: f64,
    pub stdev: f64,
}

/// Unweighted mean and population standard deviation over all zone-hours.
pub fn price_stats(prices: &PriceSeries) -> Result<PriceStats, &'static str> {
    let n = prices.lmp.iter().map(|c| c.len()).sum::<usize>();
    if n == 0 {
        return Err("empty price series");
    }
    let sum: f64 = prices.iter_all().sum();
    let mean = sum / n as f64;
    let var = prices.iter_all().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    Ok(PriceStats {
        mean,
        stdev: var.sqrt(),
    })
}

/// Load-weighted variant, available behind the stats flag.
pub fn price_stats_weighted(
    prices: &PriceSeries,
    ledger: &SimulationLedger,
) -> Result<PriceStats, &'static str> {
    let hours = prices.hours();
    if hours == 0 {
        return Err("empty price series");
    }
    let mut wsum = 0.0;
    let mut sum = 0.0;
    for (zi, zone) in prices.zones.iter().enumerate() {
        let load = ledger
            .zones
            .iter()
            .find(|z| &z.zone == zone)
            .ok_or("zone missing from ledger")?;
        for h in 0..hours {
            wsum += load.load[h];
            sum += load.load[h] * prices.lmp[zi][h];
        }
    }
    if wsum <= 0.0 {
        return Err("zero total load");
    }
    let mean = sum / wsum;
    let mut var = 0.0;
    for (zi, zone) in prices.zones.iter().enumerate() {
        let load = ledger.zones.iter().find(|z| &z.zone == zone).unwrap();
        for h in 0..hours {
            var += load.load[h] * (prices.lmp[zi][h] - mean).powi(2);
        }
    }
    Ok(PriceStats {
        mean,
        stdev: (var / wsum).sqrt(),
    })
}
