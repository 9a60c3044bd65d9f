//! Deterministic second-moment dynamics of the damped, thermally driven
//! crystal: per-ion Markov baths coupled through the Coulomb interaction.
//!
//! State is the symmetric 2N×2N covariance over (x̃, p̃) with x̃ in d₀ and
//! p̃ in mω₀d₀; it evolves under dΣ/dt = MΣ + ΣMᵀ + D which is propagated
//! exactly with a matrix-exponential discretization.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{discretize_lyapunov, lyapunov_solve, symmetrize};
use crate::modes::{CouplingMatrix, ModeSpectrum};
use crate::units::Axis;

/// Thermal bath attached to one ion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IonBath {
    /// Laser-cooled ion: damping γ (units of ω₀) against a bath at
    /// dimensionless temperature T̃.
    Coolant { gamma: f64, temp: f64 },
    /// Background-heated ion in the worst-case limit T̃ → ∞ at fixed
    /// γ·T̃; contributes pure momentum diffusion and no damping.
    Background { gamma_temp: f64 },
}

/// Per-ion bath assignment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BathAssignment {
    pub per_ion: Vec<IonBath>,
}

impl BathAssignment {
    /// Every ion heated at the background rate.
    pub fn background(n: usize, gamma_temp: f64) -> Self {
        BathAssignment { per_ion: vec![IonBath::Background { gamma_temp }; n] }
    }

    /// Every ion Doppler-cooled.
    pub fn uniform_coolant(n: usize, gamma: f64, temp: f64) -> Self {
        BathAssignment { per_ion: vec![IonBath::Coolant { gamma, temp }; n] }
    }

    pub fn set_coolant(&mut self, ions: &[usize], gamma: f64, temp: f64) {
        for &i in ions {
            self.per_ion[i] = IonBath::Coolant { gamma, temp };
        }
    }

    pub fn n(&self) -> usize {
        self.per_ion.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (i, b) in self.per_ion.iter().enumerate() {
            match *b {
                IonBath::Coolant { gamma, temp } => {
                    if gamma < 0.0 {
                        return Err(Error::InvalidConfig(format!("negative damping on ion {i}")));
                    }
                    if temp < 0.0 {
                        return Err(Error::InvalidConfig(format!("negative temperature on ion {i}")));
                    }
                }
                IonBath::Background { gamma_temp } => {
                    if gamma_temp < 0.0 {
                        return Err(Error::InvalidConfig(format!(
                            "negative heating product on ion {i}"
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Thermal occupancy n̄ + 1/2 = coth(ν/2T̃)/2, stable for ν ≪ T̃.
pub fn occupancy_plus_half(nu: f64, temp: f64) -> f64 {
    if temp <= 0.0 {
        return 0.5;
    }
    let x = nu / temp;
    if x > 40.0 {
        0.5
    } else if x < 1e-4 {
        1.0 / x + x / 12.0
    } else {
        0.5 / (x / 2.0).tanh()
    }
}

/// Bose-Einstein mean phonon number.
pub fn mean_phonons(nu: f64, temp: f64) -> f64 {
    occupancy_plus_half(nu, temp) - 0.5
}

/// Symmetric second-moment state of one axis.
#[derive(Debug, Clone)]
pub struct CovarianceState {
    pub axis: Axis,
    pub sigma: DMatrix<f64>,
    /// Time in units of 1/ω₀.
    pub time: f64,
    /// Original ion index of each row of the position block.
    pub ion_index: Vec<usize>,
}

impl CovarianceState {
    pub fn n(&self) -> usize {
        self.sigma.nrows() / 2
    }
}

/// Drift and diffusion matrices of the Heisenberg-Langevin model:
/// M = [[0, I], [−A, −Γ]] and a momentum-block diffusion with
/// D^{pp}_{ii} = 2γ_i·eps·Σ_k ν_k G²_{ik} (n̄_k(T̃_i) + 1/2) for coolant
/// ions and the exact high-temperature closure 2(γT̃)_i·eps for background
/// ions (Σ_k G²_{ik} = 1).
pub fn drift_diffusion(
    coupling: &CouplingMatrix,
    baths: &BathAssignment,
    modes: &ModeSpectrum,
    eps: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = coupling.n();
    if baths.n() != n || modes.n() != n {
        return Err(Error::InvalidConfig("coupling, baths and modes must agree in size".into()));
    }
    baths.validate()?;

    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        m[(i, n + i)] = 1.0;
    }
    m.view_mut((n, 0), (n, n)).copy_from(&(-&coupling.a));
    let mut d = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        match baths.per_ion[i] {
            IonBath::Coolant { gamma, temp } => {
                m[(n + i, n + i)] = -gamma;
                let weight: f64 = (0..n)
                    .map(|k| {
                        let g = modes.g[(i, k)];
                        modes.omega[k] * g * g * occupancy_plus_half(modes.omega[k], temp)
                    })
                    .sum();
                d[(n + i, n + i)] = 2.0 * gamma * eps * weight;
            }
            IonBath::Background { gamma_temp } => {
                d[(n + i, n + i)] = 2.0 * gamma_temp * eps;
            }
        }
    }
    Ok((m, d))
}

/// Thermal covariance of independent modes at temperature T̃, rotated to
/// ion coordinates: ⟨q̃²_k⟩ = eps(n̄_k+1/2)/ν_k, ⟨p̃²_k⟩ = eps·ν_k(n̄_k+1/2).
pub fn thermal_covariance(modes: &ModeSpectrum, temp: f64, eps: f64) -> Result<CovarianceState> {
    let n = modes.n();
    for (k, &nu) in modes.omega.iter().enumerate() {
        if nu <= 1e-9 {
            return Err(Error::DivergentVariance { mode: k, frequency: nu });
        }
    }
    let mut xq = DMatrix::zeros(n, n);
    let mut pq = DMatrix::zeros(n, n);
    for k in 0..n {
        let occ = occupancy_plus_half(modes.omega[k], temp);
        xq[(k, k)] = eps * occ / modes.omega[k];
        pq[(k, k)] = eps * occ * modes.omega[k];
    }
    let x = &modes.g * xq * modes.g.transpose();
    let p = &modes.g * pq * modes.g.transpose();
    let mut sigma = DMatrix::zeros(2 * n, 2 * n);
    sigma.view_mut((0, 0), (n, n)).copy_from(&x);
    sigma.view_mut((n, n), (n, n)).copy_from(&p);
    symmetrize(&mut sigma);
    Ok(CovarianceState { axis: modes.axis, sigma, time: 0.0, ion_index: modes.ion_index.clone() })
}

/// Per-ion position fluctuation δx_i = sqrt(⟨x̃_i²⟩). Means vanish in this
/// linear model, so the PF is the root of the position-block diagonal.
pub fn position_fluctuations(state: &CovarianceState) -> Result<Vec<f64>> {
    let n = state.n();
    (0..n)
        .map(|i| {
            let v = state.sigma[(i, i)];
            if v < -1e-12 {
                Err(Error::Numeric(format!("negative position variance {v:.3e} on ion {i}")))
            } else {
                Ok(v.max(0.0).sqrt())
            }
        })
        .collect()
}

/// A piecewise-uniform sampling schedule: `count` steps of length `dt`
/// per stage. Doubling stages resolve fast transients and long tails in
/// one run.
pub type Schedule = Vec<(f64, usize)>;

/// Geometric schedule: `per_stage` samples at dt0, then dt doubles each
/// stage; covers roughly dt0·per_stage·(2^stages − 1).
pub fn doubling_schedule(dt0: f64, per_stage: usize, stages: usize) -> Schedule {
    (0..stages).map(|s| (dt0 * (1u64 << s) as f64, per_stage)).collect()
}

/// Propagate dΣ/dt = MΣ + ΣMᵀ + D exactly over the schedule, invoking the
/// observer after every step. The per-stage propagator E = exp(M·dt) and
/// its accumulated noise are computed once per stage; stage doublings reuse
/// E² and E·D_step·Eᵀ + D_step instead of fresh exponentials.
pub fn evolve_observe<F>(
    sigma0: &CovarianceState,
    m: &DMatrix<f64>,
    d: &DMatrix<f64>,
    schedule: &Schedule,
    mut observer: F,
) -> Result<CovarianceState>
where
    F: FnMut(f64, &CovarianceState),
{
    let dim = sigma0.sigma.nrows();
    if m.nrows() != dim || d.nrows() != dim {
        return Err(Error::InvalidConfig("evolve dimensions inconsistent".into()));
    }
    let mut state = sigma0.clone();
    let mut e: Option<(f64, DMatrix<f64>, DMatrix<f64>)> = None;
    for &(dt, count) in schedule {
        if !(dt > 0.0) {
            return Err(Error::InvalidConfig("schedule step must be > 0".into()));
        }
        let (e_dt, d_dt) = match e.take() {
            Some((prev_dt, prev_e, prev_d)) if (dt - 2.0 * prev_dt).abs() < 1e-12 * dt => {
                let e2 = &prev_e * &prev_e;
                let mut d2 = &prev_e * &prev_d * prev_e.transpose() + &prev_d;
                symmetrize(&mut d2);
                (e2, d2)
            }
            _ => discretize_lyapunov(m, d, dt),
        };
        for _ in 0..count {
            state.sigma = &e_dt * &state.sigma * e_dt.transpose() + &d_dt;
            symmetrize(&mut state.sigma);
            state.time += dt;
            let max_var = (0..dim).map(|i| state.sigma[(i, i)]).fold(0.0f64, f64::max);
            if !max_var.is_finite() || max_var > 1e6 {
                return Err(Error::Integrator(format!(
                    "variance blew up to {max_var:.3e} at t = {:.3e}",
                    state.time
                )));
            }
            observer(state.time, &state);
        }
        e = Some((dt, e_dt, d_dt));
    }
    Ok(state)
}

/// Uniformly sampled covariance trajectory from t = 0 to `t_final` with
/// samples every `sample_dt`. For large systems prefer `evolve_observe`,
/// which does not retain every snapshot.
pub fn evolve(
    sigma0: &CovarianceState,
    m: &DMatrix<f64>,
    d: &DMatrix<f64>,
    t_final: f64,
    sample_dt: f64,
) -> Result<Vec<CovarianceState>> {
    if !(t_final > 0.0) || !(sample_dt > 0.0) {
        return Err(Error::InvalidConfig("t_final and sample_dt must be > 0".into()));
    }
    let steps = (t_final / sample_dt).round().max(1.0) as usize;
    let mut series = Vec::with_capacity(steps + 1);
    series.push(sigma0.clone());
    evolve_observe(sigma0, m, d, &vec![(sample_dt, steps)], |_, s| series.push(s.clone()))?;
    Ok(series)
}

/// Steady state of the drift-diffusion dynamics: the solution of
/// MΣ + ΣMᵀ + D = 0.
pub fn steady_state(
    m: &DMatrix<f64>,
    d: &DMatrix<f64>,
    axis: Axis,
    ion_index: &[usize],
) -> Result<CovarianceState> {
    let sigma = lyapunov_solve(m, d)?;
    Ok(CovarianceState { axis, sigma, time: f64::INFINITY, ion_index: ion_index.to_vec() })
}
