//! Shared fitting utilities: log-log power laws and exponential
//! relaxation profiles a·e^(−t/τ) + x_s.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub prefactor: f64,
    pub exponent: f64,
    pub r_squared: f64,
}

/// Least squares of log y against log x. Requires at least four strictly
/// positive points.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 4 {
        return Err(Error::InvalidConfig(format!(
            "power-law fit needs >= 4 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return Err(Error::NonPositiveData("power-law fit needs x, y > 0".into()));
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        let lx = x.ln();
        let ly = y.ln();
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return Err(Error::FitDegenerate("all x identical in power-law fit".into()));
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mean_ly = sy / n;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for &(x, y) in points {
        let pred = intercept + slope * x.ln();
        let ly = y.ln();
        ss_res += (ly - pred) * (ly - pred);
        ss_tot += (ly - mean_ly) * (ly - mean_ly);
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(PowerLawFit { prefactor: intercept.exp(), exponent: slope, r_squared })
}

/// Exponential relaxation fit result.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RelaxationFit {
    /// Decay amplitude.
    pub a: f64,
    /// Relaxation time, same units as the input times.
    pub tau: f64,
    /// Steady value.
    pub x_s: f64,
    pub rms_residual: f64,
}

/// Nonlinear least squares of y ≈ a·e^(−t/τ) + x_s by Levenberg-Marquardt.
///
/// Initial guess: x_s from the last sample, a from first − last, τ from a
/// log-linear fit of y − x_s. Requires ≥ 10 samples spanning at least two
/// e-foldings of decay.
pub fn fit_relaxation(times: &[f64], values: &[f64]) -> Result<RelaxationFit> {
    if times.len() != values.len() {
        return Err(Error::InvalidConfig("times/values length mismatch".into()));
    }
    let n = times.len();
    if n < 10 {
        return Err(Error::InvalidConfig(format!("relaxation fit needs >= 10 samples, got {n}")));
    }
    let first = values[0];
    let last = values[n - 1];
    let mut x_s = last;
    let a0 = first - last;
    if !(a0 > 0.0) {
        return Err(Error::FitDegenerate("series does not decay".into()));
    }

    // Log-linear initialization on the decaying part.
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..n {
        let d = values[i] - x_s;
        if d > 0.02 * a0 {
            let ly = d.ln();
            sx += times[i];
            sy += ly;
            sxx += times[i] * times[i];
            sxy += times[i] * ly;
            m += 1.0;
        }
    }
    if m < 3.0 {
        return Err(Error::FitDegenerate("too few decaying samples".into()));
    }
    let denom = m * sxx - sx * sx;
    let slope = (m * sxy - sx * sy) / denom;
    if !(slope < 0.0) {
        return Err(Error::FitDegenerate("series does not decay exponentially".into()));
    }
    let mut tau = -1.0 / slope;
    let span = times[n - 1] - times[0];
    if span < 2.0 * tau {
        return Err(Error::FitDegenerate(format!(
            "series spans {:.2} e-foldings; need >= 2",
            span / tau
        )));
    }
    let mut a = a0;

    // Levenberg-Marquardt on (a, tau, x_s).
    let residual_norm = |a: f64, tau: f64, x_s: f64| -> f64 {
        times
            .iter()
            .zip(values)
            .map(|(&t, &y)| {
                let r = a * (-t / tau).exp() + x_s - y;
                r * r
            })
            .sum()
    };
    let mut chi2 = residual_norm(a, tau, x_s);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        // Normal equations J^T J + lambda diag, J^T r.
        let mut jtj = [[0.0f64; 3]; 3];
        let mut jtr = [0.0f64; 3];
        for (&t, &y) in times.iter().zip(values) {
            let e = (-t / tau).exp();
            let r = a * e + x_s - y;
            let j = [e, a * e * t / (tau * tau), 1.0];
            for p in 0..3 {
                jtr[p] += j[p] * r;
                for q in 0..3 {
                    jtj[p][q] += j[p] * j[q];
                }
            }
        }
        let mut sys = [[0.0f64; 4]; 3];
        for p in 0..3 {
            for q in 0..3 {
                sys[p][q] = jtj[p][q];
            }
            sys[p][p] *= 1.0 + lambda;
            sys[p][3] = -jtr[p];
        }
        // Gaussian elimination on the 3x4 system.
        let mut ok = true;
        for col in 0..3 {
            let mut piv = col;
            for r in (col + 1)..3 {
                if sys[r][col].abs() > sys[piv][col].abs() {
                    piv = r;
                }
            }
            if sys[piv][col].abs() < 1e-300 {
                ok = false;
                break;
            }
            sys.swap(col, piv);
            for r in 0..3 {
                if r != col {
                    let f = sys[r][col] / sys[col][col];
                    for k in col..4 {
                        sys[r][k] -= f * sys[col][k];
                    }
                }
            }
        }
        if !ok {
            break;
        }
        let da = sys[0][3] / sys[0][0];
        let dtau = sys[1][3] / sys[1][1];
        let dxs = sys[2][3] / sys[2][2];
        let (na, ntau, nxs) = (a + da, (tau + dtau).max(1e-12 * span), x_s + dxs);
        let nchi = residual_norm(na, ntau, nxs);
        if nchi < chi2 {
            let rel_step =
                (da / a.abs().max(1e-300)).abs().max((dtau / tau).abs()).max((dxs).abs() / a.abs().max(1e-300));
            a = na;
            tau = ntau;
            x_s = nxs;
            chi2 = nchi;
            lambda = (lambda * 0.3).max(1e-12);
            if rel_step < 1e-13 {
                break;
            }
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                break;
            }
        }
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::FitDegenerate("relaxation time did not converge".into()));
    }
    if span < 2.0 * tau {
        return Err(Error::FitDegenerate(format!(
            "series spans {:.2} e-foldings of the fitted decay; need >= 2",
            span / tau
        )));
    }
    Ok(RelaxationFit { a, tau, x_s, rms_residual: (chi2 / n as f64).sqrt() })
}
