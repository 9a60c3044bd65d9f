//! Classical equilibrium of N ions in an axial well plus mutual Coulomb
//! repulsion, and uniformity statistics of the resulting lattice.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::{AxialPotential, AxialWell, Bookend};
use crate::units::{TrapConfig, UnitSystem};

/// Gradient max-norm required of a converged crystal.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;
const MAX_ITERATIONS: usize = 500;
/// Any spacing below this during iteration counts as an ion collision.
const MIN_SPACING: f64 = 0.01;

/// A solved ion crystal: longitudinal positions in units of d₀, ascending.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Crystal {
    pub u: Vec<f64>,
    /// Max-norm of the dimensionless force-balance residual.
    pub grad_norm: f64,
    /// The axial well the positions solve.
    pub well: AxialWell,
}

impl Crystal {
    pub fn n(&self) -> usize {
        self.u.len()
    }

    /// Consecutive spacings u[i+1] - u[i].
    pub fn spacings(&self) -> Vec<f64> {
        self.u.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Uniformity statistics over the interior of the crystal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpacingStats {
    pub mean_spacing: f64,
    pub sigma_d: f64,
    pub middle_fraction: f64,
    /// (bin center, count) histogram of the retained spacings.
    pub histogram: Vec<(f64, usize)>,
}

pub fn energy(well: &impl AxialPotential, u: &[f64]) -> f64 {
    let mut e: f64 = u.iter().map(|&z| well.value(z)).sum();
    for i in 0..u.len() {
        for j in (i + 1)..u.len() {
            e += 1.0 / (u[j] - u[i]).abs();
        }
    }
    e
}

pub fn gradient(well: &impl AxialPotential, u: &[f64]) -> DVector<f64> {
    let n = u.len();
    let mut g = DVector::from_fn(n, |i, _| well.derivative(u[i]));
    for i in 0..n {
        for j in (i + 1)..n {
            // j > i means u[j] > u[i] for ordered positions.
            let d = u[j] - u[i];
            let f = 1.0 / (d * d);
            g[i] += f;
            g[j] -= f;
        }
    }
    g
}

/// Exact Hessian of the total energy; identical to the longitudinal
/// coupling matrix without tweezer terms.
pub fn hessian(well: &impl AxialPotential, u: &[f64]) -> DMatrix<f64> {
    let n = u.len();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = well.curvature(u[i]);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (u[j] - u[i]).abs();
            let c = 2.0 / (d * d * d);
            h[(i, j)] = -c;
            h[(j, i)] = -c;
            h[(i, i)] += c;
            h[(j, j)] += c;
        }
    }
    h
}

fn ordered_with_min_spacing(u: &[f64], min_spacing: f64) -> bool {
    u.windows(2).all(|w| w[1] - w[0] >= min_spacing)
}

/// Uniformly spaced seed centered on the well, compressed to fit inside the
/// walls when the ion count exceeds the nominal capacity.
fn uniform_seed(n: usize, span_limit: Option<f64>) -> Vec<f64> {
    let mut spacing = 1.0f64;
    if let Some(limit) = span_limit {
        if n > 1 {
            spacing = spacing.min(0.92 * limit / (n as f64 - 1.0));
        }
    }
    let mid = 0.5 * (n as f64 - 1.0);
    (0..n).map(|i| (i as f64 - mid) * spacing).collect()
}

/// Damped Newton minimization of the total energy in an arbitrary axial
/// well. Falls back to a gradient step whenever the Hessian fails to
/// factorize; steps that destroy the ion ordering are rejected by
/// backtracking.
pub fn solve_in_well(well: AxialWell, n: usize, initial: Option<&[f64]>) -> Result<Crystal> {
    if n == 0 {
        return Err(Error::InvalidConfig("need at least one ion".into()));
    }
    let span_limit = match &well {
        AxialWell::Bookend(b) => Some(2.0 * b.half_l),
        AxialWell::Harmonic(_) => None,
    };
    let mut u: Vec<f64> = match initial {
        Some(seed) => {
            if seed.len() != n {
                return Err(Error::InvalidConfig("initial guess has wrong length".into()));
            }
            let mut s = seed.to_vec();
            s.sort_by(|a, b| a.total_cmp(b));
            s
        }
        None => uniform_seed(n, span_limit),
    };
    if !ordered_with_min_spacing(&u, MIN_SPACING) && n > 1 {
        return Err(Error::Instability(format!(
            "initial spacing below {MIN_SPACING} d0"
        )));
    }

    let mut e = energy(&well, &u);
    let mut grad = gradient(&well, &u);
    let mut grad_norm = grad.amax();

    for _iter in 0..MAX_ITERATIONS {
        if grad_norm <= DEFAULT_TOLERANCE {
            return Ok(Crystal { u, grad_norm, well });
        }

        let h = hessian(&well, &u);
        let step: DVector<f64> = match h.cholesky() {
            Some(chol) => chol.solve(&(-&grad)),
            None => -&grad * (1.0 / grad_norm.max(1.0)),
        };

        // Backtracking line search requiring a valid ordering plus either
        // an energy decrease or, once energy differences drown in roundoff,
        // a shrinking gradient.
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = u.iter().zip(step.iter()).map(|(&ui, &si)| ui + t * si).collect();
            if ordered_with_min_spacing(&trial, MIN_SPACING) || n == 1 {
                let e_trial = energy(&well, &trial);
                let improved = if e_trial < e {
                    true
                } else {
                    gradient(&well, &trial).amax() < 0.999 * grad_norm
                };
                if improved {
                    u = trial;
                    e = e_trial;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            // Gradient descent rescue with a conservative step.
            let scale = 0.01 / grad_norm.max(1.0);
            let trial: Vec<f64> = u.iter().zip(grad.iter()).map(|(&ui, &gi)| ui - scale * gi).collect();
            if !ordered_with_min_spacing(&trial, MIN_SPACING) && n > 1 {
                return Err(Error::Instability(
                    "ion collision during equilibrium iteration".into(),
                ));
            }
            let e_trial = energy(&well, &trial);
            if e_trial >= e {
                return Err(Error::NonConvergence { residual: grad_norm, iterations: MAX_ITERATIONS });
            }
            u = trial;
            e = e_trial;
        }

        grad = gradient(&well, &u);
        grad_norm = grad.amax();
    }

    Err(Error::NonConvergence { residual: grad_norm, iterations: MAX_ITERATIONS })
}

/// Solve the equilibrium positions for a bookend trap configuration.
///
/// Tweezers apply purely harmonic pinning centered on the equilibrium and
/// therefore exert no longitudinal force; they do not enter the solve.
pub fn solve_equilibrium(
    config: &TrapConfig,
    units: &UnitSystem,
    initial: Option<&[f64]>,
) -> Result<Crystal> {
    config.validate()?;
    let well = AxialWell::Bookend(Bookend::from_config(config, units));
    solve_in_well(well, config.n, initial)
}

/// Mean/σ of the spacings over the middle fraction of the ions.
pub fn spacing_stats(crystal: &Crystal, middle_fraction: f64) -> Result<SpacingStats> {
    if !(middle_fraction > 0.0 && middle_fraction <= 1.0) {
        return Err(Error::InvalidConfig("middle_fraction must be in (0, 1]".into()));
    }
    let n = crystal.n();
    let drop = ((1.0 - middle_fraction) * 0.5 * n as f64).floor() as usize;
    let kept = &crystal.u[drop..n - drop];
    if kept.len() < 3 {
        return Err(Error::TooFewIons(format!(
            "{} interior ions after trimming; need at least 3",
            kept.len()
        )));
    }
    let spacings: Vec<f64> = kept.windows(2).map(|w| w[1] - w[0]).collect();
    let m = spacings.len() as f64;
    let mean = spacings.iter().sum::<f64>() / m;
    let var = spacings.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / m;

    let lo = spacings.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = spacings.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let bins = 30usize;
    let width = ((hi - lo) / bins as f64).max(1e-12);
    let mut counts = vec![0usize; bins];
    for &s in &spacings {
        let k = (((s - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let histogram = counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (lo + (k as f64 + 0.5) * width, c))
        .collect();

    Ok(SpacingStats { mean_spacing: mean, sigma_d: var.sqrt(), middle_fraction, histogram })
}

fn middle_mean_spacing(config: &TrapConfig, units: &UnitSystem, n: usize) -> Result<f64> {
    let mut cfg = config.clone();
    cfg.n = n;
    let crystal = solve_equilibrium(&cfg, units, None)?;
    Ok(spacing_stats(&crystal, 0.8)?.mean_spacing)
}

/// Ion count whose solved middle-80% mean spacing is closest to d₀ for a
/// trap of length `l_d0`, found by bisection around L/d₀.
///
/// The search starts from a ±15% bracket and widens it geometrically when
/// the wall tails dominate (short traps hold far fewer ions than L/d₀).
pub fn calibrate_count(l_d0: f64, config: &TrapConfig, units: &UnitSystem) -> Result<usize> {
    if l_d0 < 100.0 {
        return Err(Error::InvalidConfig("calibration needs L >= 100 d0".into()));
    }
    let mut cfg = config.clone();
    cfg.l = l_d0 * cfg.d0;
    let mut lo = ((0.85 * l_d0).floor() as usize).max(3);
    let mut hi = (1.15 * l_d0).ceil() as usize;
    // Spacing decreases with N: push lo down until it is spacious and hi
    // up until it is crowded.
    for _ in 0..24 {
        if middle_mean_spacing(&cfg, units, lo)? >= 1.0 {
            break;
        }
        lo = (lo * 10 / 14).max(3);
        if lo == 3 {
            break;
        }
    }
    for _ in 0..24 {
        if middle_mean_spacing(&cfg, units, hi)? <= 1.0 {
            break;
        }
        hi = hi * 14 / 10;
        if hi > 20 * l_d0 as usize {
            return Err(Error::BracketExhausted(format!(
                "no crowded configuration found below N = {hi}"
            )));
        }
    }
    calibrate_count_bracketed(&cfg, units, lo, hi)
}

/// Bisection for the calibrated count inside an explicit bracket; mean
/// spacing decreases with N.
pub fn calibrate_count_bracketed(
    config: &TrapConfig,
    units: &UnitSystem,
    mut lo: usize,
    mut hi: usize,
) -> Result<usize> {
    let f_lo = middle_mean_spacing(config, units, lo)? - 1.0;
    let f_hi = middle_mean_spacing(config, units, hi)? - 1.0;
    if f_lo < 0.0 || f_hi > 0.0 {
        return Err(Error::BracketExhausted(format!(
            "mean spacing - d0 does not change sign over N in [{lo}, {hi}]"
        )));
    }
    let mut f_lo_val = f_lo;
    let mut f_hi_val = f_hi;
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        let f_mid = middle_mean_spacing(config, units, mid)? - 1.0;
        if f_mid >= 0.0 {
            lo = mid;
            f_lo_val = f_mid;
        } else {
            hi = mid;
            f_hi_val = f_mid;
        }
    }
    Ok(if f_lo_val.abs() <= f_hi_val.abs() { lo } else { hi })
}

/// Inverse calibration: wall separation (units of d₀) at which `n` ions sit
/// at middle-80% mean spacing d₀.
pub fn calibrate_length(n: usize, config: &TrapConfig, units: &UnitSystem) -> Result<f64> {
    if n < 10 {
        return Err(Error::InvalidConfig("length calibration needs N >= 10".into()));
    }
    let mut cfg = config.clone();
    cfg.n = n;
    let eval = |l_d0: f64, cfg: &TrapConfig| -> Result<f64> {
        let mut c = cfg.clone();
        c.l = l_d0 * c.d0;
        let crystal = solve_equilibrium(&c, units, None)?;
        Ok(spacing_stats(&crystal, 0.8)?.mean_spacing - 1.0)
    };
    let mut lo = 0.8 * n as f64;
    let mut hi = 1.6 * n as f64;
    // Mean spacing grows with L; widen until the bracket straddles d0.
    for _ in 0..24 {
        if eval(lo, &cfg)? <= 0.0 {
            break;
        }
        lo *= 0.7;
    }
    for _ in 0..24 {
        if eval(hi, &cfg)? >= 0.0 {
            break;
        }
        hi *= 1.4;
        if hi > 100.0 * n as f64 {
            return Err(Error::BracketExhausted("no spacious configuration found".into()));
        }
    }
    if eval(lo, &cfg)? > 0.0 || eval(hi, &cfg)? < 0.0 {
        return Err(Error::BracketExhausted("length bracket does not straddle d0".into()));
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if eval(mid, &cfg)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo) < 2e-4 * n as f64 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::Harmonic;
    use crate::units::derive_units;
    use approx::assert_relative_eq;

    fn reference(n: usize, l_d0: f64) -> (TrapConfig, UnitSystem) {
        let mut cfg = TrapConfig::default();
        cfg.n = n;
        cfg.l = l_d0 * cfg.d0;
        let units = derive_units(&cfg).unwrap();
        (cfg, units)
    }

    #[test]
    fn single_ion_sits_at_center() {
        let (cfg, units) = reference(1, 300.0);
        let c = solve_equilibrium(&cfg, &units, None).unwrap();
        assert!(c.u[0].abs() < 1e-9);
        assert!(c.grad_norm <= DEFAULT_TOLERANCE);
    }

    #[test]
    fn two_ions_balance_symmetrically() {
        let (cfg, units) = reference(2, 300.0);
        let c = solve_equilibrium(&cfg, &units, None).unwrap();
        assert!(c.grad_norm <= 1e-10);
        assert_relative_eq!(c.u[0], -c.u[1], epsilon = 1e-8);
        // Force balance at the solution: well pull equals Coulomb push.
        let s = c.u[1];
        let well = &c.well;
        let residual = well.derivative(s) - 1.0 / (2.0 * s).powi(2);
        assert!(residual.abs() < 1e-9);
    }

    #[test]
    fn mirror_symmetry_and_zero_mean() {
        let (cfg, units) = reference(40, 300.0);
        let c = solve_equilibrium(&cfg, &units, None).unwrap();
        let n = c.n();
        for i in 0..n {
            assert!((c.u[i] + c.u[n - 1 - i]).abs() < 1e-8);
        }
        let sum: f64 = c.u.iter().sum();
        assert!(sum.abs() < 1e-8 * n as f64);
    }

    #[test]
    fn energy_not_above_uniform_seed() {
        let (cfg, units) = reference(30, 300.0);
        let c = solve_equilibrium(&cfg, &units, None).unwrap();
        let seed = uniform_seed(30, Some(300.0));
        assert!(energy(&c.well, &c.u) <= energy(&c.well, &seed));
    }

    #[test]
    fn hessian_psd_at_solution() {
        let (cfg, units) = reference(25, 300.0);
        let c = solve_equilibrium(&cfg, &units, None).unwrap();
        let h = hessian(&c.well, &c.u);
        let eig = h.symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= -1e-9, "min Hessian eigenvalue {min}");
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let well = AxialWell::Harmonic(Harmonic { nu_sq: 0.7 });
        let u = [-2.0, -0.6, 0.9, 2.4];
        let g = gradient(&well, &u);
        let dz = 1e-6;
        for i in 0..u.len() {
            let mut up = u.to_vec();
            let mut dn = u.to_vec();
            up[i] += dz;
            dn[i] -= dz;
            let fd = (energy(&well, &up) - energy(&well, &dn)) / (2.0 * dz);
            assert_relative_eq!(g[i], fd, max_relative = 1e-6);
        }
    }

    #[test]
    fn three_ions_in_harmonic_well() {
        // Equilibrium of 3 ions in a unit harmonic well: +-(5/4)^(1/3), 0.
        let c = solve_in_well(AxialWell::Harmonic(Harmonic { nu_sq: 1.0 }), 3, None).unwrap();
        let s = (5.0f64 / 4.0).powf(1.0 / 3.0);
        assert_relative_eq!(c.u[2], s, max_relative = 1e-9);
        assert!(c.u[1].abs() < 1e-9);
    }

    #[test]
    fn stats_on_synthetic_uniform_chain() {
        let u: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let c = Crystal { u, grad_norm: 0.0, well: AxialWell::Harmonic(Harmonic { nu_sq: 1.0 }) };
        let s = spacing_stats(&c, 0.8).unwrap();
        assert_relative_eq!(s.mean_spacing, 1.0, max_relative = 1e-12);
        assert!(s.sigma_d < 1e-12);
    }

    #[test]
    fn stats_rejects_tiny_crystals() {
        // Trimming must leave at least three ions.
        let c = Crystal {
            u: (0..10).map(|i| i as f64).collect(),
            grad_norm: 0.0,
            well: AxialWell::Harmonic(Harmonic { nu_sq: 1.0 }),
        };
        assert!(spacing_stats(&c, 0.15).is_err());
        assert!(spacing_stats(&c, 0.8).is_ok());
    }

    #[test]
    fn small_trap_packs_fewer_ions_than_length() {
        // Edge-dominated crystal: mean interior spacing reaches d0 with
        // fewer than L/d0 ions.
        let (cfg, units) = reference(10, 100.0);
        let n = calibrate_count(100.0, &cfg, &units).unwrap();
        assert!(n < 100, "N = {n}");
        // Oracle: direct scan around the returned count.
        let mut best = (f64::INFINITY, 0usize);
        for cand in (n.saturating_sub(3))..=(n + 3) {
            let dev = (middle_mean_spacing(&cfg, &units, cand).unwrap() - 1.0).abs();
            if dev < best.0 {
                best = (dev, cand);
            }
        }
        assert_eq!(best.1, n);
    }

    #[test]
    fn calibrated_count_monotone_in_length() {
        let (cfg, units) = reference(10, 100.0);
        let n100 = calibrate_count(100.0, &cfg, &units).unwrap();
        let n150 = calibrate_count(150.0, &cfg, &units).unwrap();
        let n200 = calibrate_count(200.0, &cfg, &units).unwrap();
        assert!(n100 <= n150 && n150 <= n200, "{n100} {n150} {n200}");
    }

    #[test]
    fn length_calibration_round_trips() {
        let (cfg, units) = reference(10, 100.0);
        let l = calibrate_length(120, &cfg, &units).unwrap();
        let n = calibrate_count(l, &cfg, &units).unwrap();
        assert!((n as i64 - 120).abs() <= 2, "N = {n} for L = {l:.1}");
    }
}

