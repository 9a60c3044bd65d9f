//! Batch front-end: reproducible scenario runs with CSV/JSON outputs.

mod config;
mod output;
mod presets;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::time::Instant;

use ioncrystal::constants;
use ioncrystal::cooling::doubling_schedule;
use ioncrystal::crystal::{calibrate_count, calibrate_length, solve_equilibrium, spacing_stats};
use ioncrystal::fitting::fit_power_law;
use ioncrystal::gate::{
    design_cell_coupling, evaluate_pulse, optimize_pulse, thermal_errors, GateSpec,
};
use ioncrystal::modes::{coupling_matrix, spectrum, tweezer_scan};
use ioncrystal::scenario::{
    baths_with_coolants, fit_observed, local_cell_scenario, periodic_coolants, run_axis,
    thermal_reference_profile, LocalCellSpec, ScenarioContext,
};
use ioncrystal::units::{derive_units, Axis, TrapConfig, TweezerLayout, UnitSystem};

use config::FileConfig;
use output::OutputDir;

#[derive(Parser)]
#[command(name = "ioncrystal", version, about = "Tweezer-pinned ion crystal simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Configuration file (TOML) merged over defaults and preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Bundled scenario preset (fig1c, fig2a, fig2b, fig3a, fig3b, fig3cd,
    /// fig4, fig5).
    #[arg(long)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override one configuration value, e.g. --set trap.n=318.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the crystal equilibrium and report uniformity statistics.
    Equilibrium(Common),
    /// Mode spectra and tweezer-pinning scans.
    Modes(Common),
    /// Segmented-pulse gate design and error budget.
    Gate(Common),
    /// Sympathetic-cooling dynamics of the pinned array.
    Cool(Common),
    /// Locally cooled cell bounded by tweezered walls.
    Localcool(Common),
}

fn main() {
    let cli = Cli::parse();
    let (name, common) = match &cli.command {
        Command::Equilibrium(c) => ("equilibrium", c),
        Command::Modes(c) => ("modes", c),
        Command::Gate(c) => ("gate", c),
        Command::Cool(c) => ("cool", c),
        Command::Localcool(c) => ("localcool", c),
    };
    std::process::exit(match run(name, common) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = e
                .downcast_ref::<ioncrystal::Error>()
                .map(|ie| ie.is_config())
                .unwrap_or_else(|| e.to_string().contains("configuration error"));
            if config_error {
                2
            } else {
                3
            }
        }
    });
}

fn run(name: &str, common: &Common) -> Result<()> {
    if let Some(p) = &common.preset {
        match presets::kind_of(p) {
            None => bail!("unknown preset {p:?} (configuration error)"),
            Some(kind) if kind != name => {
                bail!("preset {p:?} belongs to subcommand {kind:?} (configuration error)")
            }
            _ => {}
        }
    }
    let (cfg, canonical) = config::load(
        common.preset.as_deref(),
        common.config.as_deref(),
        &common.sets,
    )
    .context("configuration error")?;
    let started = Instant::now();
    let mut out = OutputDir::create(&common.out)?;
    match name {
        "equilibrium" => run_equilibrium(&cfg, &mut out)?,
        "modes" => run_modes(&cfg, &mut out)?,
        "gate" => run_gate(&cfg, &mut out)?,
        "cool" => run_cool(&cfg, &mut out)?,
        "localcool" => run_localcool(&cfg, &mut out)?,
        _ => unreachable!(),
    }
    out.manifest(name, common.preset.as_deref(), &canonical, started.elapsed().as_secs_f64())?;
    Ok(())
}

fn parse_axis(s: &str) -> Result<Axis> {
    match s {
        "x" => Ok(Axis::X),
        "y" => Ok(Axis::Y),
        "z" => Ok(Axis::Z),
        other => bail!("unknown axis {other:?} (configuration error)"),
    }
}

/// Trap + units with optional length calibration applied.
fn prepare_trap(cfg: &FileConfig) -> Result<(TrapConfig, UnitSystem)> {
    let mut trap = cfg.trap.to_trap().context("configuration error")?;
    trap.validate()?;
    let units = derive_units(&trap)?;
    if cfg.trap.calibrate_length {
        let l_d0 = calibrate_length(trap.n, &trap, &units)?;
        trap.l = l_d0 * trap.d0;
    }
    Ok((trap, units))
}

fn build_tweezers(cfg: &FileConfig, n: usize, units: &UnitSystem) -> Result<TweezerLayout> {
    let mut layout = match cfg.tweezers.period {
        Some(p) => {
            TweezerLayout::periodic_x(n, p, cfg.tweezers.phase, units.nu(cfg.tweezers.omega_ot_rad_s))
        }
        None => TweezerLayout::none(),
    };
    for extra in &cfg.tweezers.extra {
        let nu = units.nu(extra.omega_ot_rad_s);
        layout.pinned.push(ioncrystal::units::PinnedIon {
            ion: extra.ion,
            nu_ot_x: 0.0,
            nu_ot_y: nu,
            nu_ot_z: nu,
        });
    }
    layout.validate(n)?;
    Ok(layout)
}

fn coolant_sites(
    cfg: &FileConfig,
    n: usize,
    tweezers: &TweezerLayout,
    per_cell: usize,
) -> Result<Vec<usize>> {
    Ok(match cfg.bath.coolant_mode.as_str() {
        "per_cell" => {
            let period = cfg
                .tweezers
                .period
                .context("bath.coolant_mode = per_cell needs tweezers.period (configuration error)")?;
            periodic_coolants(n, period, cfg.tweezers.phase, per_cell)?
        }
        "all_free" => (0..n).filter(|&i| !tweezers.is_pinned(i)).collect(),
        "explicit" => cfg.bath.coolants.clone(),
        other => bail!("unknown bath.coolant_mode {other:?} (configuration error)"),
    })
}

fn run_equilibrium(cfg: &FileConfig, out: &mut OutputDir) -> Result<()> {
    let (trap, units) = prepare_trap(cfg)?;
    match cfg.equilibrium.mode.as_str() {
        "single" => {
            let crystal = solve_equilibrium(&trap, &units, None)?;
            let stats = spacing_stats(&crystal, cfg.equilibrium.middle_fraction)?;
            let rows: Vec<Vec<f64>> =
                crystal.u.iter().enumerate().map(|(i, &u)| vec![i as f64, u]).collect();
            out.csv("positions.csv", "index,u_d0", &rows)?;
            let hist: Vec<Vec<f64>> =
                stats.histogram.iter().map(|&(s, c)| vec![s, c as f64]).collect();
            out.csv("spacing_hist.csv", "spacing_d0,count", &hist)?;
            #[derive(serde::Serialize)]
            struct Stats<'a> {
                n: usize,
                l_d0: f64,
                grad_norm: f64,
                stats: &'a ioncrystal::crystal::SpacingStats,
            }
            out.json(
                "stats.json",
                &Stats { n: trap.n, l_d0: trap.l_d0(), grad_norm: crystal.grad_norm, stats: &stats },
            )?;
        }
        "uniformity" => {
            let mut rows = Vec::new();
            for &q in &cfg.equilibrium.q_list {
                let l_d0 = 100.0 * q as f64;
                let mut t = trap.clone();
                t.l = l_d0 * t.d0;
                let n = calibrate_count(l_d0, &t, &units)?;
                t.n = n;
                let crystal = solve_equilibrium(&t, &units, None)?;
                let stats = spacing_stats(&crystal, cfg.equilibrium.middle_fraction)?;
                rows.push(vec![
                    q as f64,
                    l_d0,
                    n as f64,
                    stats.mean_spacing,
                    stats.sigma_d,
                    stats.sigma_d / stats.mean_spacing,
                ]);
            }
            out.csv("uniformity.csv", "q,l_d0,n,mean_spacing,sigma_d,sigma_over_mean", &rows)?;
        }
        other => bail!("unknown equilibrium.mode {other:?} (configuration error)"),
    }
    Ok(())
}

fn run_modes(cfg: &FileConfig, out: &mut OutputDir) -> Result<()> {
    let (trap, units) = prepare_trap(cfg)?;
    let axis = parse_axis(&cfg.modes.axis)?;
    let crystal = solve_equilibrium(&trap, &units, None)?;
    let free = coupling_matrix(&crystal, axis, &trap, &units, &TweezerLayout::none())?;

    if cfg.modes.emit_spectrum {
        let sp = spectrum(&free)?;
        let rows: Vec<Vec<f64>> =
            sp.omega.iter().enumerate().map(|(k, &w)| vec![k as f64, w]).collect();
        out.csv("spectrum.csv", "k,omega", &rows)?;
    }

    let mut strengths: Vec<f64> = cfg
        .modes
        .strengths_khz
        .iter()
        .map(|khz| units.nu(2.0 * std::f64::consts::PI * khz * 1e3))
        .collect();
    if cfg.modes.include_pinned_limit {
        strengths.push(f64::INFINITY);
    }
    let scan = tweezer_scan(&free, &cfg.modes.periods, &strengths)?;
    let rows: Vec<Vec<f64>> = scan
        .rows
        .iter()
        .map(|r| vec![r.period as f64, r.strength_nu, r.lowest_omega, r.bulk_omega])
        .collect();
    out.csv("scan.csv", "period,strength_nu,omega_lowest,omega_bulk", &rows)?;
    out.json("scan_fit.json", &scan.pinned_fit)?;
    Ok(())
}

fn run_gate(cfg: &FileConfig, out: &mut OutputDir) -> Result<()> {
    let (trap, units) = prepare_trap(cfg)?;
    let axis = parse_axis(&cfg.gate.axis)?;
    if axis == Axis::Z {
        bail!("gates run on transverse modes (configuration error)");
    }
    let t_d_k = cfg.bath.doppler_kelvin()?;
    let temperature = cfg.gate.temperature_factor * units.temp(t_d_k);
    let delta_k = cfg.gate.delta_k.unwrap_or_else(constants::default_delta_k);

    let pinned: Vec<(usize, f64)> = cfg
        .gate
        .pinned_in_cell
        .iter()
        .map(|e| (e.ion, units.nu(e.omega_ot_rad_s)))
        .collect();
    let cell = design_cell_coupling(cfg.gate.cell_size, axis, &trap, &units, &pinned)?;
    let cell_modes = spectrum(&cell)?;

    let full_modes = if cfg.gate.full_crystal {
        let crystal = solve_equilibrium(&trap, &units, None)?;
        let coupling = coupling_matrix(&crystal, axis, &trap, &units, &TweezerLayout::none())?;
        Some(spectrum(&coupling)?)
    } else {
        None
    };

    let mut rows = Vec::new();
    let mut best: Option<(f64, ioncrystal::gate::PulseShape, ioncrystal::gate::GateErrorBudget)> =
        None;
    for &tg_us in &cfg.gate.t_g_us {
        let spec = GateSpec {
            ion_i: cfg.gate.ion_i,
            ion_j: cfg.gate.ion_j,
            t_g: units.time(tg_us * 1e-6),
            segments: cfg.gate.segments,
            axis,
            delta_k,
            mu_range: None,
            mu_points: cfg.gate.mu_points,
            temperature,
        };
        let (pulse, budget) = optimize_pulse(&spec, &cell_modes, &trap, &units)?;
        let df_full = match &full_modes {
            Some(m) => {
                let mut fspec = spec.clone();
                fspec.ion_i = cfg.gate.full_ion_i;
                fspec.ion_j = cfg.gate.full_ion_j;
                evaluate_pulse(&pulse, &fspec, m, &trap, &units)?
            }
            None => f64::NAN,
        };
        rows.push(vec![tg_us, spec.t_g, budget.df_c, budget.eta_omega_max, df_full]);
        if best.as_ref().map_or(true, |(b, _, _)| budget.df_c < *b) {
            best = Some((budget.df_c, pulse, budget));
        }
    }
    out.csv("gate_scan.csv", "t_g_us,t_g,df_c,eta_omega_max,df_c_full", &rows)?;

    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[1], r[3])).collect();
    if pts.len() >= 4 {
        out.json("power_fit.json", &fit_power_law(&pts)?)?;
    }

    if let Some((_, pulse, mut budget)) = best {
        // Longitudinal beam-sampling channel from a moderate crystal at the
        // cooled temperature.
        let mut small = trap.clone();
        small.n = trap.n.min(200);
        let l = calibrate_length(small.n, &small, &units)?;
        small.l = l * small.d0;
        let crystal_small = solve_equilibrium(&small, &units, None)?;
        let az = coupling_matrix(&crystal_small, Axis::Z, &small, &units, &TweezerLayout::none())?;
        let sz = spectrum(&az)?;
        let zerr =
            thermal_errors(&sz, units.temp(t_d_k), delta_k, Some(cfg.gate.waist_m), &trap, &units)?;
        budget.df_b = zerr.df_b;
        #[derive(serde::Serialize)]
        struct PulseReport<'a> {
            pulse: &'a ioncrystal::gate::PulseShape,
            budget: &'a ioncrystal::gate::GateErrorBudget,
        }
        out.json("pulse.json", &PulseReport { pulse: &pulse, budget: &budget })?;
    }
    Ok(())
}

fn axis_list(names: &[String]) -> Result<Vec<Axis>> {
    names.iter().map(|s| parse_axis(s)).collect()
}

fn axis_code(axis: Axis) -> f64 {
    match axis {
        Axis::X => 0.0,
        Axis::Y => 1.0,
        Axis::Z => 2.0,
    }
}

fn run_cool(cfg: &FileConfig, out: &mut OutputDir) -> Result<()> {
    let (trap, units) = prepare_trap(cfg)?;
    let ctx = ScenarioContext::from_crystal(
        trap.clone(),
        units,
        solve_equilibrium(&trap, &units, None)?,
    );
    let n = trap.n;
    let tweezers = build_tweezers(cfg, n, &units)?;
    let t_d = units.temp(cfg.bath.doppler_kelvin()?);
    let axes = axis_list(&cfg.cool.axes)?;
    let schedule = doubling_schedule(cfg.cool.dt0, cfg.cool.samples_per_stage, cfg.cool.stages);

    let observed: Vec<usize> = if cfg.cool.observe.is_empty() {
        let mid = n / 2;
        let pick = (0..n)
            .filter(|&i| !tweezers.is_pinned(i))
            .min_by_key(|&i| i.abs_diff(mid))
            .context("no free ion to observe")?;
        vec![pick]
    } else {
        cfg.cool.observe.clone()
    };

    let per_cell_scan: Vec<usize> = if cfg.cool.coolants_per_cell_scan.is_empty() {
        vec![cfg.bath.coolants_per_cell]
    } else {
        cfg.cool.coolants_per_cell_scan.clone()
    };

    let mut series_rows: Vec<Vec<f64>> = Vec::new();
    #[derive(serde::Serialize)]
    struct FitRow {
        axis: String,
        coolants_per_cell: usize,
        ion: usize,
        a: f64,
        tau: f64,
        x_s: f64,
        reference_pf: f64,
    }
    let mut fits = Vec::new();
    for &per_cell in &per_cell_scan {
        let coolants = coolant_sites(cfg, n, &tweezers, per_cell)?;
        let baths = baths_with_coolants(
            n,
            &coolants,
            cfg.bath.coolant_gamma,
            t_d,
            cfg.bath.background_gamma_t,
        );
        for &axis in &axes {
            let series = run_axis(
                &ctx,
                axis,
                &tweezers,
                &baths,
                cfg.cool.initial_temp_factor * t_d,
                &schedule,
                &observed,
            )?;
            let reference = thermal_reference_profile(&ctx, axis, &tweezers, t_d)?;
            for (slot, &ion) in observed.iter().enumerate() {
                for (k, &t) in series.times.iter().enumerate() {
                    series_rows.push(vec![
                        per_cell as f64,
                        axis_code(axis),
                        t,
                        ion as f64,
                        series.pf[slot][k],
                    ]);
                }
                let fit = fit_observed(&series, slot)?;
                fits.push(FitRow {
                    axis: axis.to_string(),
                    coolants_per_cell: per_cell,
                    ion,
                    a: fit.a,
                    tau: fit.tau,
                    x_s: fit.x_s,
                    reference_pf: reference[ion],
                });
            }
        }
    }
    out.csv("pf_series.csv", "coolants_per_cell,axis,t,ion,pf", &series_rows)?;
    out.json("fits.json", &fits)?;
    Ok(())
}

fn run_localcool(cfg: &FileConfig, out: &mut OutputDir) -> Result<()> {
    let (trap, units) = prepare_trap(cfg)?;
    let ctx = ScenarioContext::from_crystal(
        trap.clone(),
        units,
        solve_equilibrium(&trap, &units, None)?,
    );
    let t_d = units.temp(cfg.bath.doppler_kelvin()?);
    let axes = axis_list(&cfg.localcool.axes)?;

    let mut axis_schedules = Vec::new();
    for &axis in &axes {
        let schedule = match axis {
            Axis::Z => vec![(cfg.localcool.z_dt, cfg.localcool.z_steps)],
            _ => vec![(cfg.localcool.y_dt, cfg.localcool.y_steps)],
        };
        axis_schedules.push((axis, schedule));
    }

    let mut series_rows: Vec<Vec<f64>> = Vec::new();
    #[derive(serde::Serialize)]
    struct Report {
        wall_thickness: usize,
        axis: String,
        tau: f64,
        x_s: f64,
        amplitude: f64,
        center_reference: f64,
        outside_monotone: bool,
    }
    let mut reports = Vec::new();
    for &wall in &cfg.localcool.wall_thickness {
        let spec = LocalCellSpec {
            interior: (cfg.localcool.interior[0], cfg.localcool.interior[1]),
            wall_thickness: wall,
            coolants: cfg.localcool.coolants.clone(),
            nu_ot: units.nu(cfg.tweezers.omega_ot_rad_s),
            coolant_gamma: cfg.bath.coolant_gamma,
            coolant_temp: t_d,
            background_gamma_temp: cfg.bath.background_gamma_t,
            initial_temp: cfg.localcool.initial_temp_factor * t_d,
            outside: cfg.localcool.outside.clone(),
        };
        for axis_report in local_cell_scenario(&ctx, &spec, &axis_schedules)? {
            for (slot, &ion) in axis_report.series.observed.iter().enumerate() {
                for (k, &t) in axis_report.series.times.iter().enumerate() {
                    series_rows.push(vec![
                        wall as f64,
                        axis_code(axis_report.axis),
                        t,
                        ion as f64,
                        axis_report.series.pf[slot][k],
                    ]);
                }
            }
            reports.push(Report {
                wall_thickness: wall,
                axis: axis_report.axis.to_string(),
                tau: axis_report.center_fit.tau,
                x_s: axis_report.center_fit.x_s,
                amplitude: axis_report.center_fit.a,
                center_reference: axis_report.center_reference,
                outside_monotone: axis_report.outside_monotone,
            });
        }
    }
    out.csv("pf_series.csv", "wall_thickness,axis,t,ion,pf", &series_rows)?;
    out.json("report.json", &reports)?;
    Ok(())
}
