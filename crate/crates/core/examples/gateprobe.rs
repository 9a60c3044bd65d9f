// Scratch probe for development; not part of the library surface.
use ioncrystal::constants;
use ioncrystal::crystal::solve_equilibrium;
use ioncrystal::fitting::fit_power_law;
use ioncrystal::gate::{design_cell_coupling, evaluate_pulse, optimize_pulse, GateSpec};
use ioncrystal::modes::{coupling_matrix, spectrum};
use ioncrystal::units::{derive_units, doppler_temperature, Axis, TrapConfig, TweezerLayout};
use std::time::Instant;

fn main() {
    let cfg = TrapConfig::default();
    let units = derive_units(&cfg).unwrap();
    let t_d = units.temp(doppler_temperature(constants::YB_COOLING_LINEWIDTH).unwrap());
    let cell = design_cell_coupling(9, Axis::X, &cfg, &units, &[]).unwrap();
    let modes = spectrum(&cell).unwrap();

    let spec_for = |t_g_us: f64| GateSpec {
        ion_i: 2, ion_j: 5, t_g: units.time(t_g_us * 1e-6), segments: 7, axis: Axis::X,
        delta_k: constants::default_delta_k(), mu_range: None, mu_points: 2000,
        temperature: 10.0 * t_d,
    };

    let gate_times_us = [0.5, 0.8, 1.2, 1.8, 2.6, 3.8, 5.5, 8.0, 12.0, 18.0, 28.0];
    let mut rows = Vec::new();
    let t0 = Instant::now();
    for &tg in &gate_times_us {
        let spec = spec_for(tg);
        let (pulse, budget) = optimize_pulse(&spec, &modes, &cfg, &units).unwrap();
        println!(
            "t_g = {tg:5.1} us: dF_c = {:.3e}, etaOmega = {:.4} ({:.0} kHz), mu = {:.4}, phi = {:+.4}",
            budget.df_c, budget.eta_omega_max,
            budget.eta_omega_max * units.omega0 / (2.0 * std::f64::consts::PI) / 1e3,
            pulse.mu, pulse.phi
        );
        rows.push((spec.t_g, budget.eta_omega_max, budget.df_c, pulse));
    }
    println!("cell scan in {:.1?}", t0.elapsed());
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.0, r.1)).collect();
    let fit = fit_power_law(&pts).unwrap();
    println!("etaOmega ~ t_g^{:.3} (paper -1.53), r2 = {:.4}", fit.exponent, fit.r_squared);

    let t1 = Instant::now();
    let mut big = cfg.clone();
    big.n = 1795;
    big.l = 2000.0 * big.d0;
    let crystal = solve_equilibrium(&big, &units, None).unwrap();
    let ax = coupling_matrix(&crystal, Axis::X, &big, &units, &TweezerLayout::none()).unwrap();
    let full = spectrum(&ax).unwrap();
    println!("full crystal modes in {:.1?}", t1.elapsed());
    for &(idx, label) in &[(4usize, "2.6us"), (6, "5.5us"), (8, "12us")] {
        let (tg, _, df_cell, pulse) = &rows[idx];
        let mut spec = spec_for(1.0);
        spec.t_g = *tg;
        spec.ion_i = 627;
        spec.ion_j = 630;
        let df_full = evaluate_pulse(pulse, &spec, &full, &cfg, &units).unwrap();
        println!("{label}: cell dF = {df_cell:.3e}, full dF = {df_full:.3e}, ratio = {:.2}", df_full / df_cell);
    }

    let nu_ot = 0.2 * units.nu(cfg.omega_rf_x);
    let celly = design_cell_coupling(9, Axis::Y, &cfg, &units, &[(3, nu_ot)]).unwrap();
    let modes_y = spectrum(&celly).unwrap();
    for &tg in &[0.8, 1.2, 1.8, 2.6, 3.8, 5.5] {
        let mut spec = spec_for(tg);
        spec.axis = Axis::Y;
        let (_, by) = optimize_pulse(&spec, &modes_y, &cfg, &units).unwrap();
        let (_, bx) = optimize_pulse(&spec_for(tg), &modes, &cfg, &units).unwrap();
        println!("t_g = {tg:4.1} us: y-straddle dF = {:.3e}, x dF = {:.3e}, ratio = {:.1}", by.df_c, bx.df_c, by.df_c / bx.df_c);
    }
}
