//! Quadrature cross-checks of the closed-form oscillatory integrals and
//! the gate functionals built on them. The Gauss-Legendre oracle here is
//! deliberately independent of the closed forms it checks.

use ioncrystal::gate::{
    accumulated_phase, design_cell_coupling, displacement_alpha, GateSpec, PulseShape,
};
use ioncrystal::modes::spectrum;
use ioncrystal::oscint::{int_sin_exp, phase_kernel_cross, phase_kernel_diag};
use ioncrystal::units::{derive_units, Axis, TrapConfig};
use num_complex::Complex64;
use proptest::prelude::*;

/// Nodes and weights of n-point Gauss-Legendre on [-1, 1], by Newton
/// iteration on the Legendre recurrence.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// ∫_a^b f(t) dt with panels sized to resolve oscillation frequency `freq`.
fn integrate<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, freq: f64) -> Complex64 {
    let rule = gauss_legendre(24);
    let panels = (1.0 + (b - a) * freq.abs() / std::f64::consts::PI).ceil() as usize;
    let h = (b - a) / panels as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let mid = lo + 0.5 * h;
        for &(x, w) in &rule {
            sum += f(mid + 0.5 * h * x) * (w * 0.5 * h);
        }
    }
    sum
}

fn sin_exp(mu: f64, w: f64) -> impl Fn(f64) -> Complex64 {
    move |t| Complex64::from_polar(1.0, w * t) * (mu * t).sin()
}

/// Triangle integral oracle: ∫_{t1}^{t2} dt' ∫_{t1}^{t'} dt
/// sin(μt) sin(μt') sin(w(t'-t)).
fn triangle_oracle(mu: f64, w: f64, t1: f64, t2: f64) -> f64 {
    let freq = mu.abs() + w.abs();
    let outer = integrate(
        &|tp: f64| {
            let inner = integrate(
                &|t: f64| Complex64::new((mu * t).sin() * (w * (tp - t)).sin(), 0.0),
                t1,
                tp.max(t1),
                freq,
            );
            inner * (mu * tp).sin()
        },
        t1,
        t2,
        freq,
    );
    outer.re
}

fn rect_oracle(mu: f64, w: f64, late: (f64, f64), early: (f64, f64)) -> f64 {
    let freq = mu.abs() + w.abs();
    integrate(
        &|tp: f64| {
            let inner = integrate(
                &|t: f64| Complex64::new((mu * t).sin() * (w * (tp - t)).sin(), 0.0),
                early.0,
                early.1,
                freq,
            );
            inner * (mu * tp).sin()
        },
        late.0,
        late.1,
        freq,
    )
    .re
}

#[test]
fn segment_kernel_matches_quadrature() {
    for &(mu, w, t1, t2) in &[
        (34.8, 34.85, 0.0, 1.3),
        (5.0, 5.0, 0.4, 2.0),     // exact resonance
        (5.0, 5.0 + 1e-9, 0.4, 2.0), // removable-singularity branch
        (0.7, 12.0, 2.0, 7.5),
        (20.0, 0.05, 0.0, 3.0),
    ] {
        let closed = int_sin_exp(mu, w, t1, t2);
        let quad = integrate(&sin_exp(mu, w), t1, t2, mu + w);
        assert!(
            (closed - quad).norm() <= 1e-9 * quad.norm().max(1e-6),
            "mu={mu} w={w}: closed {closed} vs quad {quad}"
        );
    }
}

#[test]
fn phase_kernels_match_quadrature() {
    for &(mu, w, t1, t2) in &[
        (34.8, 34.85, 0.0, 1.3),
        (5.0, 5.0, 0.4, 2.0),
        (5.0, 5.000001, 0.4, 2.0),
        (0.7, 3.0, 0.0, 4.0),
        (12.0, 9.5, 1.5, 2.5),
    ] {
        let closed = phase_kernel_diag(mu, w, t1, t2);
        let oracle = triangle_oracle(mu, w, t1, t2);
        assert!(
            (closed - oracle).abs() <= 1e-8 * oracle.abs().max(1e-4),
            "diag mu={mu} w={w}: closed {closed} vs oracle {oracle}"
        );
        let late = (t2, t2 + 0.9);
        let early = (t1, t2);
        let closed_r = phase_kernel_cross(mu, w, late, early);
        let oracle_r = rect_oracle(mu, w, late, early);
        assert!(
            (closed_r - oracle_r).abs() <= 1e-8 * oracle_r.abs().max(1e-4),
            "rect mu={mu} w={w}: closed {closed_r} vs oracle {oracle_r}"
        );
    }
}

fn quadrature_alpha(
    pulse: &PulseShape,
    t_g: f64,
    segments: usize,
    eta_g: f64,
    w: f64,
) -> Complex64 {
    let dt = t_g / segments as f64;
    let mut total = Complex64::new(0.0, 0.0);
    for m in 0..segments {
        let f = sin_exp(pulse.mu, w);
        total += integrate(&f, m as f64 * dt, (m + 1) as f64 * dt, pulse.mu + w)
            * pulse.omega[m]
            * eta_g;
    }
    total
}

#[test]
fn gate_functionals_match_quadrature() {
    let cfg = TrapConfig::default();
    let units = derive_units(&cfg).unwrap();
    let cell = design_cell_coupling(5, Axis::X, &cfg, &units, &[]).unwrap();
    let modes = spectrum(&cell).unwrap();
    let spec = GateSpec {
        ion_i: 1,
        ion_j: 3,
        t_g: 4.4,
        segments: 3,
        axis: Axis::X,
        delta_k: ioncrystal::constants::default_delta_k(),
        mu_range: None,
        mu_points: 10,
        temperature: 683.0,
    };
    let pulse = PulseShape { omega: vec![0.8, -0.3, 0.55], mu: 34.55, phi: 0.0 };

    // alpha: component by component against segment quadrature.
    let alpha = displacement_alpha(&pulse, &spec, &modes, &cfg, &units, 1).unwrap();
    for k in 0..modes.n() {
        let eta =
            ioncrystal::gate::lamb_dicke(spec.delta_k, &cfg, &units, modes.omega[k]);
        let oracle = quadrature_alpha(&pulse, spec.t_g, 3, eta * modes.g[(1, k)], modes.omega[k]);
        assert!(
            (alpha[k] - oracle).norm() <= 1e-9 * oracle.norm().max(1e-9),
            "alpha mode {k}: {} vs {}",
            alpha[k],
            oracle
        );
    }

    // phi: full double integral over [0, t_g]^2 lower triangle.
    let phi = accumulated_phase(&pulse, &spec, &modes, &cfg, &units).unwrap();
    let drive = |t: f64| {
        let m = ((t / spec.t_g * 3.0).floor() as usize).min(2);
        pulse.omega[m] * (pulse.mu * t).sin()
    };
    let freq = pulse.mu + modes.omega[4];
    let mut oracle = 0.0;
    for k in 0..modes.n() {
        let eta = ioncrystal::gate::lamb_dicke(spec.delta_k, &cfg, &units, modes.omega[k]);
        let wk = modes.omega[k];
        let coeff = eta * eta * modes.g[(1, k)] * modes.g[(3, k)];
        let outer = integrate(
            &|tp: f64| {
                let inner = integrate(
                    &|t: f64| Complex64::new(drive(t) * (wk * (tp - t)).sin(), 0.0),
                    0.0,
                    tp,
                    freq,
                );
                inner * drive(tp)
            },
            0.0,
            spec.t_g,
            freq,
        );
        oracle += 2.0 * coeff * outer.re;
    }
    assert!(
        (phi - oracle).abs() <= 1e-8 * oracle.abs().max(1e-10),
        "phi closed {phi} vs quadrature {oracle}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn prop_segment_kernel(mu in 0.2f64..40.0, w in 0.0f64..40.0, t1 in 0.0f64..3.0, len in 0.05f64..4.0) {
        let t2 = t1 + len;
        let closed = int_sin_exp(mu, w, t1, t2);
        let quad = integrate(&sin_exp(mu, w), t1, t2, mu + w);
        prop_assert!((closed - quad).norm() <= 1e-8 * quad.norm().max(1e-5));
    }

    #[test]
    fn prop_diag_kernel(mu in 0.2f64..40.0, detune in -0.5f64..0.5, t1 in 0.0f64..3.0, len in 0.05f64..3.0) {
        let w = (mu + detune).abs().max(1e-3);
        let t2 = t1 + len;
        let closed = phase_kernel_diag(mu, w, t1, t2);
        let oracle = triangle_oracle(mu, w, t1, t2);
        prop_assert!((closed - oracle).abs() <= 1e-8 * oracle.abs().max(1e-4),
            "mu={} w={} t1={} t2={}: {} vs {}", mu, w, t1, t2, closed, oracle);
    }
}
