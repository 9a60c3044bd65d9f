// Scratch probe for development; not part of the library surface.
use ioncrystal::constants;
use ioncrystal::fitting::fit_relaxation;
use ioncrystal::scenario::{local_cell_scenario, LocalCellSpec, ScenarioContext};
use ioncrystal::units::{derive_units, doppler_temperature, Axis, TrapConfig};

fn fit_prefix(times: &[f64], values: &[f64], t_max: f64) -> (f64, f64) {
    let k = times.iter().position(|&t| t > t_max).unwrap_or(times.len());
    let f = fit_relaxation(&times[..k], &values[..k]).unwrap();
    (f.tau, f.x_s)
}

fn main() {
    let base = TrapConfig::default();
    let units0 = derive_units(&base).unwrap();
    let t_d = units0.temp(doppler_temperature(constants::YB_COOLING_LINEWIDTH).unwrap());
    let ctx = ScenarioContext::prepare(1018, &base).unwrap();
    let nu_ot = ctx.units.nu(2.0 * std::f64::consts::PI * 1e6);
    let spec = |wall: usize| LocalCellSpec {
        interior: (215, 223),
        wall_thickness: wall,
        coolants: vec![215, 216, 222, 223],
        nu_ot,
        coolant_gamma: 0.01,
        coolant_temp: t_d,
        background_gamma_temp: 1e-4,
        initial_temp: 20.0 * t_d,
        outside: vec![189, 249],
    };
    let reports = local_cell_scenario(&ctx, &spec(2), &[(Axis::Z, vec![(4000.0, 250)])]).unwrap();
    let s = &reports[0].series;
    for w in [1.5e5, 3e5, 5e5, 1e6] {
        let (tau, xs) = fit_prefix(&s.times, &s.pf[0], w);
        println!("z w=2 window {w:.1e}: tau = {tau:.3e} (paper 2.4e4), x_s = {xs:.4} (paper 0.025)");
    }
    let reports = local_cell_scenario(&ctx, &spec(1), &[(Axis::Y, vec![(320.0, 150)])]).unwrap();
    let s = &reports[0].series;
    for w in [8e3, 1.6e4, 4.8e4] {
        let (tau, xs) = fit_prefix(&s.times, &s.pf[0], w);
        println!("y w=1 window {w:.1e}: tau = {tau:.3e} (paper 658), x_s = {xs:.4e} (paper 6.1e-4)");
    }
}
