//! `pcm` — batch front end for the production cost model.
//!
//! Subcommands: `validate`, `synth`, `run`, `twin`, `lmp`, `report`.
//! Defaults mirror the study configuration (relative MIP gap 1e-4, time
//! limit 1000 s, 10% storage-cost perturbation). Exit code 0 on success;
//! failures print one machine-parsable `error: ...` line on stderr.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use pcm_core::formulation::{EfficiencyConvention, FormulationOptions};
use pcm_core::horizon::HorizonPolicy;
use pcm_core::io;
use pcm_core::solver::{SolveSettings, TieBreak};
use pcm_core::system::PerturbationConfig;
use pcm_core::{DegenerateKind, SystemSpec, TimeSeriesFrame, TwinConfig};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "pcm", version, about = "Rolling-horizon production cost model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct InputArgs {
    /// System descriptor (TOML).
    #[arg(long)]
    system: Option<PathBuf>,
    /// Directory holding load.csv / availability.csv / reserves.csv.
    #[arg(long)]
    series_dir: Option<PathBuf>,
    /// Built-in degenerate instance instead of files:
    /// twin_storage, vre_split, or myopia.
    #[arg(long)]
    instance: Option<String>,
    /// Seed for --instance construction.
    #[arg(long, default_value_t = 0)]
    instance_seed: u64,
}

impl InputArgs {
    fn load(&self) -> Result<(SystemSpec, TimeSeriesFrame)> {
        if let Some(kind) = &self.instance {
            let kind: DegenerateKind = kind
                .parse()
                .map_err(|e: String| anyhow!("{e}"))?;
            return Ok(pcm_core::build_degenerate_instance(kind, self.instance_seed));
        }
        let system = self
            .system
            .as_ref()
            .ok_or_else(|| anyhow!("missing --system (or --instance)"))?;
        let series_dir = self
            .series_dir
            .as_ref()
            .ok_or_else(|| anyhow!("missing --series-dir (or --instance)"))?;
        let spec = io::read_system(system)?;
        let series = io::read_series_dir(series_dir)?;
        let unknown = io::unknown_series_columns(&spec, &series);
        if !unknown.is_empty() {
            bail!("unknown entity column(s): {}", unknown.join(", "));
        }
        Ok((spec, series))
    }
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Relative MIP gap at which branch-and-bound stops.
    #[arg(long, default_value_t = 1e-4)]
    mip_gap: f64,
    /// Solver wall-clock limit per window, seconds.
    #[arg(long, default_value_t = 1000.0)]
    time_limit: f64,
    /// lex_forward | lex_reverse | seeded_shuffle:<seed>
    #[arg(long, default_value = "lex_forward")]
    tie_break: String,
    /// bland | dantzig_lexico
    #[arg(long, default_value = "dantzig_lexico")]
    pivot_rule: String,
}

impl SolverArgs {
    fn settings(&self) -> Result<SolveSettings> {
        Ok(SolveSettings {
            rel_gap: self.mip_gap,
            time_limit: self.time_limit,
            tie_break: self.tie_break.parse().map_err(|e: String| anyhow!("{e}"))?,
            pivot_rule: self.pivot_rule.parse().map_err(|e: String| anyhow!("{e}"))?,
            trace: false,
        })
    }
}

#[derive(Args, Clone)]
struct RunShapeArgs {
    /// Optimization window length, hours.
    #[arg(long, default_value_t = 48)]
    window_hours: usize,
    /// Hours committed per window (the roll-forward step).
    #[arg(long, default_value_t = 24)]
    advance_hours: usize,
    /// Storage-cost perturbation spread (fraction of nominal).
    #[arg(long, default_value_t = 0.10)]
    perturb_pct: f64,
    /// Perturbation seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// physical | as-printed
    #[arg(long, default_value = "physical")]
    efficiency_convention: String,
}

impl RunShapeArgs {
    fn policy(&self) -> Result<HorizonPolicy> {
        if self.advance_hours > self.window_hours {
            bail!(
                "usage: --advance-hours {} exceeds --window-hours {}",
                self.advance_hours,
                self.window_hours
            );
        }
        Ok(HorizonPolicy::custom(self.window_hours, self.advance_hours))
    }

    fn options(&self) -> Result<FormulationOptions> {
        let efficiency: EfficiencyConvention = self
            .efficiency_convention
            .parse()
            .map_err(|e: String| anyhow!("{e}"))?;
        Ok(FormulationOptions {
            efficiency,
            relax_startup_binaries: false,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a system and its series against every structural invariant.
    Validate {
        #[command(flatten)]
        input: InputArgs,
    },
    /// Generate a deterministic synthetic system and series.
    Synth {
        #[arg(long, default_value_t = 3)]
        zones: usize,
        #[arg(long, default_value_t = 2)]
        thermal_per_zone: usize,
        #[arg(long, default_value_t = 1)]
        solar_per_zone: usize,
        #[arg(long, default_value_t = 1)]
        wind_per_zone: usize,
        #[arg(long, default_value_t = 1)]
        sdes_units: usize,
        #[arg(long, default_value_t = 1)]
        ldes_units: usize,
        #[arg(long, default_value_t = 8760)]
        hours: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Output directory for system.toml and the series CSVs.
        #[arg(long)]
        out: PathBuf,
    },
    /// One rolling-horizon simulation; writes a results directory.
    Run {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        shape: RunShapeArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Two runs differing only in tie-break and/or perturbation seed,
    /// with a divergence comparison.
    Twin {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        shape: RunShapeArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long, default_value = "lex_forward")]
        tie_break_a: String,
        #[arg(long, default_value = "lex_reverse")]
        tie_break_b: String,
        #[arg(long)]
        seed_a: Option<u64>,
        #[arg(long)]
        seed_b: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Price committed hours of an existing run by fixed-binary LP duals.
    Lmp {
        #[command(flatten)]
        input: InputArgs,
        /// Results directory produced by `run`.
        #[arg(long)]
        ledger: PathBuf,
        /// Output directory (defaults to the ledger directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Metrics and plot-data exports for an existing run.
    Report {
        /// Results directory produced by `run`.
        #[arg(long)]
        ledger: PathBuf,
        /// Optional prices.csv directory (from `lmp`).
        #[arg(long)]
        prices: Option<PathBuf>,
        /// First day of the exported dispatch week.
        #[arg(long, default_value_t = 0)]
        week_start_day: usize,
        /// Load-weighted price statistics instead of unweighted.
        #[arg(long, default_value_t = false)]
        weighted_price_stats: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(2);
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { input } => {
            let (spec, series) = input.load()?;
            let report = pcm_core::validate_system(&spec, &series);
            if report.is_ok() {
                println!(
                    "ok: {} zones, {} lines, {} thermal, {} vre, {} storage, {} reserve products, {} hours",
                    spec.zones.len(),
                    spec.lines.len(),
                    spec.thermal_units.len(),
                    spec.vre_units.len(),
                    spec.storage_units.len(),
                    spec.reserve_products.len(),
                    series.hours
                );
                Ok(())
            } else {
                for v in &report.violations {
                    println!("violation: {v}");
                }
                bail!("validation failed with {} violation(s)", report.violations.len());
            }
        }
        Command::Synth {
            zones,
            thermal_per_zone,
            solar_per_zone,
            wind_per_zone,
            sdes_units,
            ldes_units,
            hours,
            seed,
            out,
        } => {
            let params = pcm_core::SynthParams {
                zones,
                thermal_per_zone,
                solar_per_zone,
                wind_per_zone,
                sdes_units,
                ldes_units,
                hours,
                reserve_fraction: 0.03,
                start: pcm_core::Timestamp::from_ymdh(2050, 1, 1, 0).unwrap(),
            };
            let (spec, series) = pcm_core::synth_system(&params, seed)?;
            std::fs::create_dir_all(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            io::write_system(&spec, &out.join("system.toml"))?;
            io::write_series_dir(&series, &out)?;
            println!("wrote system.toml and series files to {}", out.display());
            Ok(())
        }
        Command::Run {
            input,
            shape,
            solver,
            out,
        } => {
            let (mut spec, series) = input.load()?;
            spec.perturbation = PerturbationConfig {
                pct: shape.perturb_pct,
                seed: shape.seed,
            };
            let settings = solver.settings()?;
            let ledger = pcm_core::run_simulation(
                &spec,
                &series,
                shape.policy()?,
                &settings,
                &shape.options()?,
            )?;
            io::write_ledger(&ledger, &out)?;
            let (_, total) = pcm_core::total_production_cost(&ledger);
            println!(
                "run complete: {} windows, committed {} hours, total production cost {:.2}",
                ledger.windows.len(),
                ledger.hours(),
                total
            );
            println!("results in {}", out.display());
            Ok(())
        }
        Command::Twin {
            input,
            shape,
            solver,
            tie_break_a,
            tie_break_b,
            seed_a,
            seed_b,
            out,
        } => {
            let (spec, series) = input.load()?;
            let settings = solver.settings()?;
            let mk = |tb: &str, seed: Option<u64>| -> Result<TwinConfig> {
                let tie: TieBreak = tb.parse().map_err(|e: String| anyhow!("{e}"))?;
                Ok(TwinConfig {
                    settings: settings.with_tie_break(tie),
                    perturbation: PerturbationConfig {
                        pct: shape.perturb_pct,
                        seed: seed.unwrap_or(shape.seed),
                    },
                })
            };
            let a = mk(&tie_break_a, seed_a)?;
            let b = mk(&tie_break_b, seed_b)?;
            let (report, ledger_a, ledger_b) = pcm_core::twin_run(
                &spec,
                &series,
                shape.policy()?,
                &a,
                &b,
                &shape.options()?,
            )?;
            io::write_ledger(&ledger_a, &out.join("run_a"))?;
            io::write_ledger(&ledger_b, &out.join("run_b"))?;
            io::write_comparison(&report, &ledger_a, &out)?;
            println!(
                "twin complete: onset day {:?}, final cumulative TPC delta {:.4}",
                report.divergence_onset_day,
                report.cumulative_tpc_delta.last().unwrap_or(&0.0)
            );
            println!("comparison in {}", out.display());
            Ok(())
        }
        Command::Lmp { input, ledger, out } => {
            let (spec, series) = input.load()?;
            let led = io::read_ledger(&ledger)?;
            let prices = pcm_core::compute_lmps(&spec, &series, &led, &led.meta.settings)?;
            let out = out.unwrap_or(ledger);
            io::write_prices(&prices, &out)?;
            let stats = pcm_core::price_stats(&prices).map_err(|e| anyhow!(e))?;
            println!(
                "priced {} hours x {} zones: mean {:.2} $/MWh, stdev {:.2}",
                prices.hours(),
                prices.zones.len(),
                stats.mean,
                stats.stdev
            );
            Ok(())
        }
        Command::Report {
            ledger,
            prices,
            week_start_day,
            weighted_price_stats,
            out,
        } => {
            let led = io::read_ledger(&ledger)?;
            let price_series = match prices {
                Some(dir) => Some(io::read_prices(&dir)?),
                None => None,
            };
            let report = pcm_core::metric_report(&led, price_series.as_ref());
            io::write_report(&led, &report, week_start_day, &out)?;
            println!(
                "report: total TPC {:.2}, curtailment {}",
                report.total_tpc,
                report
                    .curtailment_pct
                    .map(|c| format!("{c:.2}%"))
                    .unwrap_or_else(|| "n/a".into())
            );
            if let Some(p) = &price_series {
                let stats = if weighted_price_stats {
                    pcm_core::price_stats_weighted(p, &led)
                } else {
                    pcm_core::price_stats(p)
                }
                .map_err(|e| anyhow!(e))?;
                println!("prices: mean {:.2} $/MWh, stdev {:.2}", stats.mean, stats.stdev);
            }
            println!("exports in {}", out.display());
            Ok(())
        }
    }
}
