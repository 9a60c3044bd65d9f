//! Ready-made cooling scenarios: periodically pinned crystals with
//! per-cell sympathetic cooling, and a single locally cooled cell whose
//! walls are built from bundled tweezered ions.

use serde::{Deserialize, Serialize};

use crate::cooling::{
    drift_diffusion, evolve_observe, position_fluctuations, thermal_covariance, BathAssignment,
    Schedule,
};
use crate::crystal::{calibrate_length, solve_equilibrium, Crystal};
use crate::error::{Error, Result};
use crate::fitting::{fit_relaxation, RelaxationFit};
use crate::modes::{coupling_matrix, spectrum};
use crate::units::{derive_units, Axis, TrapConfig, TweezerLayout, UnitSystem};

/// A crystal calibrated so its interior spacing is d₀, plus the unit
/// system used throughout a scenario.
#[derive(Debug, Clone)]
pub struct ScenarioContext {
    pub config: TrapConfig,
    pub units: UnitSystem,
    pub crystal: Crystal,
}

impl ScenarioContext {
    /// Calibrate the trap length for `n` ions and solve the equilibrium.
    pub fn prepare(n: usize, base: &TrapConfig) -> Result<Self> {
        let mut config = base.clone();
        config.n = n;
        let units = derive_units(&config)?;
        let l_d0 = calibrate_length(n, &config, &units)?;
        config.l = l_d0 * config.d0;
        let crystal = solve_equilibrium(&config, &units, None)?;
        Ok(ScenarioContext { config, units, crystal })
    }

    /// Use an already-solved crystal.
    pub fn from_crystal(config: TrapConfig, units: UnitSystem, crystal: Crystal) -> Self {
        ScenarioContext { config, units, crystal }
    }
}

/// PF time series of a cooling run: the observed ions sampled at every
/// schedule step plus the full final profile.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoolingSeries {
    pub axis: Axis,
    pub times: Vec<f64>,
    pub observed: Vec<usize>,
    /// pf[slot][sample] for observed\[slot\].
    pub pf: Vec<Vec<f64>>,
    pub final_profile: Vec<f64>,
}

/// Doppler-cooled sites for a periodic pinning pattern: `beams_per_cell`
/// coolant ions placed symmetrically next to every tweezered site
/// (1 → the right neighbour, 2 → both neighbours, 4 → two on each side).
pub fn periodic_coolants(
    n: usize,
    period: usize,
    phase_1based: usize,
    beams_per_cell: usize,
) -> Result<Vec<usize>> {
    let offsets: &[i64] = match beams_per_cell {
        1 => &[1],
        2 => &[-1, 1],
        4 => &[-2, -1, 1, 2],
        other => {
            return Err(Error::InvalidConfig(format!(
                "unsupported beams_per_cell {other}; use 1, 2 or 4"
            )))
        }
    };
    let mut out = Vec::new();
    for site in 0..n {
        if (site + 1) % period == phase_1based % period {
            for &o in offsets {
                let c = site as i64 + o;
                if c >= 0 && (c as usize) < n {
                    out.push(c as usize);
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Bath assignment with Doppler coolants on the given sites and worst-case
/// background heating everywhere else.
pub fn baths_with_coolants(
    n: usize,
    coolants: &[usize],
    gamma: f64,
    coolant_temp: f64,
    background_gamma_temp: f64,
) -> BathAssignment {
    let mut baths = BathAssignment::background(n, background_gamma_temp);
    baths.set_coolant(coolants, gamma, coolant_temp);
    baths
}

/// Evolve one axis of a scenario from a thermal state at
/// `initial_temp`, recording the PF of the observed ions along the way.
pub fn run_axis(
    ctx: &ScenarioContext,
    axis: Axis,
    tweezers: &TweezerLayout,
    baths: &BathAssignment,
    initial_temp: f64,
    schedule: &Schedule,
    observed: &[usize],
) -> Result<CoolingSeries> {
    let coupling = coupling_matrix(&ctx.crystal, axis, &ctx.config, &ctx.units, tweezers)?;
    let modes = spectrum(&coupling)?;
    let (m, d) = drift_diffusion(&coupling, baths, &modes, ctx.units.eps)?;
    let sigma0 = thermal_covariance(&modes, initial_temp, ctx.units.eps)?;

    let mut times = Vec::new();
    let mut pf_series: Vec<Vec<f64>> = vec![Vec::new(); observed.len()];
    let initial_pf = position_fluctuations(&sigma0)?;
    times.push(0.0);
    for (s, &ion) in observed.iter().enumerate() {
        pf_series[s].push(initial_pf[ion]);
    }
    let mut final_profile = initial_pf;
    let final_state = evolve_observe(&sigma0, &m, &d, schedule, |t, state| {
        let pf = position_fluctuations(state).expect("variance turned negative");
        times.push(t);
        for (s, &ion) in observed.iter().enumerate() {
            pf_series[s].push(pf[ion]);
        }
        final_profile = pf;
    })?;
    let _ = final_state;

    Ok(CoolingSeries {
        axis,
        times,
        observed: observed.to_vec(),
        pf: pf_series,
        final_profile,
    })
}

/// Thermal PF profile at the given temperature for one axis; the red
/// reference curves of the cooling figures.
pub fn thermal_reference_profile(
    ctx: &ScenarioContext,
    axis: Axis,
    tweezers: &TweezerLayout,
    temp: f64,
) -> Result<Vec<f64>> {
    let coupling = coupling_matrix(&ctx.crystal, axis, &ctx.config, &ctx.units, tweezers)?;
    let modes = spectrum(&coupling)?;
    position_fluctuations(&thermal_covariance(&modes, temp, ctx.units.eps)?)
}

/// Exponential relaxation fit of one observed ion in a series.
pub fn fit_observed(series: &CoolingSeries, slot: usize) -> Result<RelaxationFit> {
    fit_relaxation(&series.times, &series.pf[slot])
}

/// Wall sites for a locally cooled cell: `thickness` tweezered ions packed
/// against both ends of the interior span (0-based, inclusive).
pub fn cell_wall_sites(
    n: usize,
    interior: (usize, usize),
    thickness: usize,
) -> Result<Vec<usize>> {
    let (lo, hi) = interior;
    if lo > hi || hi >= n {
        return Err(Error::InvalidConfig("cell interior span out of range".into()));
    }
    if thickness == 0 {
        return Err(Error::InvalidConfig("wall thickness must be >= 1".into()));
    }
    if lo < thickness || hi + thickness >= n {
        return Err(Error::InvalidConfig("cell walls fall outside the crystal".into()));
    }
    let mut sites = Vec::new();
    for k in 1..=thickness {
        sites.push(lo - k);
        sites.push(hi + k);
    }
    sites.sort_unstable();
    Ok(sites)
}

/// Parameters of the locally cooled cell scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalCellSpec {
    /// 0-based inclusive interior ion span.
    pub interior: (usize, usize),
    pub wall_thickness: usize,
    /// Doppler-cooled ions (0-based), normally the interior edge ions.
    pub coolants: Vec<usize>,
    /// Tweezer pinning frequency, units of ω₀.
    pub nu_ot: f64,
    pub coolant_gamma: f64,
    pub coolant_temp: f64,
    pub background_gamma_temp: f64,
    /// Initial temperature, units of ħω₀/k_B.
    pub initial_temp: f64,
    /// Reference ions observed away from the cell, e.g. ±30 sites.
    pub outside: Vec<usize>,
}

/// Per-axis outcome of the local-cell run.
#[derive(Debug, Clone)]
pub struct LocalCellAxisReport {
    pub axis: Axis,
    pub series: CoolingSeries,
    /// Relaxation fit of the cell-center ion.
    pub center_fit: RelaxationFit,
    /// Thermal reference PF of the center ion at the coolant temperature.
    pub center_reference: f64,
    /// Whether every outside reference ion heated monotonically.
    pub outside_monotone: bool,
}

/// Run the locally cooled cell on the requested axes. The center ion of
/// the interior span is fitted to an exponential relaxation; outside
/// reference ions are checked for monotone heating.
pub fn local_cell_scenario(
    ctx: &ScenarioContext,
    spec: &LocalCellSpec,
    axes: &[(Axis, Schedule)],
) -> Result<Vec<LocalCellAxisReport>> {
    let n = ctx.crystal.n();
    let walls = cell_wall_sites(n, spec.interior, spec.wall_thickness)?;
    for c in &spec.coolants {
        if walls.contains(c) {
            return Err(Error::InvalidConfig(format!(
                "ion {c} is both tweezered and Doppler cooled"
            )));
        }
    }
    let tweezers = TweezerLayout::x_incident(
        &walls.iter().map(|&s| (s, spec.nu_ot)).collect::<Vec<_>>(),
    );
    tweezers.validate(n)?;
    let baths = baths_with_coolants(
        n,
        &spec.coolants,
        spec.coolant_gamma,
        spec.coolant_temp,
        spec.background_gamma_temp,
    );
    let center = (spec.interior.0 + spec.interior.1) / 2;
    let mut observed = vec![center];
    observed.extend_from_slice(&spec.outside);

    let mut reports = Vec::new();
    for (axis, schedule) in axes {
        let series = run_axis(ctx, *axis, &tweezers, &baths, spec.initial_temp, schedule, &observed)?;
        let center_fit = fit_observed(&series, 0)?;
        let reference = thermal_reference_profile(ctx, *axis, &tweezers, spec.coolant_temp)?;
        let mut outside_monotone = true;
        for slot in 1..observed.len() {
            let pf = &series.pf[slot];
            // Allow sampling-level wiggle on top of the secular growth.
            let tol = 1e-3 * pf[0];
            if !pf.windows(2).all(|w| w[1] >= w[0] - tol) {
                outside_monotone = false;
            }
        }
        reports.push(LocalCellAxisReport {
            axis: *axis,
            series,
            center_fit,
            center_reference: reference[center],
            outside_monotone,
        });
    }
    Ok(reports)
}
