//! Harmonic coupling matrices of the ion crystal and their motional
//! spectra, with optical-tweezer pinning terms.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::crystal::Crystal;
use crate::error::{Error, Result};
use crate::fitting::{fit_power_law, PowerLawFit};
use crate::linalg::sym_eigen_ascending;
use crate::potential::AxialPotential;
use crate::units::{Axis, TrapConfig, TweezerLayout, UnitSystem};

/// Sign/strength constant of the Coulomb coupling per axis: off-diagonals
/// are −c_ξ/|u_i−u_j|³ with c_x = c_y = −1 and c_z = 2.
pub fn coulomb_constant(axis: Axis) -> f64 {
    match axis {
        Axis::X | Axis::Y => -1.0,
        Axis::Z => 2.0,
    }
}

/// Per-axis harmonic coupling matrix in units of ω₀².
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    pub axis: Axis,
    pub a: DMatrix<f64>,
    pub c_xi: f64,
    /// Equilibrium positions the matrix was built from (units of d₀).
    pub positions: Vec<f64>,
}

impl CouplingMatrix {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// Return a copy with ν_ot² added on the diagonal at the given ions.
    pub fn with_diagonal_pinning(&self, ions: &[usize], nu_ot_sq: f64) -> CouplingMatrix {
        let mut out = self.clone();
        for &i in ions {
            out.a[(i, i)] += nu_ot_sq;
        }
        out
    }
}

/// Low-level builder from positions, per-ion diagonal restoring terms
/// ν²_{ξ,i}, and per-ion tweezer terms ν^{ot2}_{ξ,i}.
pub fn coupling_from_parts(
    axis: Axis,
    positions: &[f64],
    nu_sq: &[f64],
    tweezer_sq: &[f64],
) -> Result<CouplingMatrix> {
    let n = positions.len();
    if nu_sq.len() != n || tweezer_sq.len() != n {
        return Err(Error::InvalidConfig("coupling_from_parts length mismatch".into()));
    }
    let c = coulomb_constant(axis);
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = nu_sq[i] + tweezer_sq[i];
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (positions[j] - positions[i]).abs();
            if d < 1e-9 {
                return Err(Error::SingularGeometry(format!(
                    "ions {i} and {j} coincide (spacing {d:.3e})"
                )));
            }
            let w = c / (d * d * d);
            a[(i, j)] = -w;
            a[(j, i)] = -w;
            a[(i, i)] += w;
            a[(j, j)] += w;
        }
    }
    Ok(CouplingMatrix { axis, a, c_xi: c, positions: positions.to_vec() })
}

/// Coupling matrix of a solved crystal along one axis. Transverse axes use
/// the uniform RF confinement; the longitudinal axis uses the local well
/// curvature. Tweezer terms enter only the diagonal.
pub fn coupling_matrix(
    crystal: &Crystal,
    axis: Axis,
    config: &TrapConfig,
    units: &UnitSystem,
    tweezers: &TweezerLayout,
) -> Result<CouplingMatrix> {
    let n = crystal.n();
    tweezers.validate(n)?;
    let nu_sq: Vec<f64> = match axis {
        Axis::X => {
            let nu = units.nu(config.omega_rf_x);
            vec![nu * nu; n]
        }
        Axis::Y => {
            let nu = units.nu(config.omega_rf_y);
            vec![nu * nu; n]
        }
        Axis::Z => crystal.u.iter().map(|&z| crystal.well.curvature(z)).collect(),
    };
    let tw: Vec<f64> = (0..n).map(|i| tweezers.nu_ot_sq(i, axis)).collect();
    coupling_from_parts(axis, &crystal.u, &nu_sq, &tw)
}

/// Eigenmodes of a coupling matrix: frequencies ascending (units of ω₀)
/// and the orthogonal transformation G with mode k in column k.
#[derive(Debug, Clone)]
pub struct ModeSpectrum {
    pub axis: Axis,
    pub omega: Vec<f64>,
    pub g: DMatrix<f64>,
    /// Original ion index of each matrix row (identity unless pinned ions
    /// were removed).
    pub ion_index: Vec<usize>,
}

impl ModeSpectrum {
    pub fn n(&self) -> usize {
        self.omega.len()
    }

    pub fn lowest(&self) -> f64 {
        self.omega[0]
    }

    /// Row of G for the ion with the given original index.
    pub fn row_of_ion(&self, ion: usize) -> Option<usize> {
        self.ion_index.iter().position(|&i| i == ion)
    }
}

/// Negative eigenvalues beyond this floor mean the configuration is not a
/// local minimum of the potential.
const INSTABILITY_FLOOR: f64 = -1e-9;

pub fn spectrum(coupling: &CouplingMatrix) -> Result<ModeSpectrum> {
    let (vals, vecs) = sym_eigen_ascending(&coupling.a);
    if let Some((k, &v)) = vals.iter().enumerate().find(|(_, &v)| v < INSTABILITY_FLOOR) {
        return Err(Error::Instability(format!(
            "negative eigenvalue {v:.3e} in mode {k} on axis {}",
            coupling.axis
        )));
    }
    let omega = vals.iter().map(|&v| v.max(0.0).sqrt()).collect();
    Ok(ModeSpectrum {
        axis: coupling.axis,
        omega,
        g: vecs,
        ion_index: (0..coupling.n()).collect(),
    })
}

/// Spectrum in the infinite-tweezer limit: pinned ions are frozen in place
/// and their rows/columns removed. The frozen ions still contribute to the
/// diagonal curvature of the remaining ones.
pub fn pinned_spectrum(coupling: &CouplingMatrix, pinned: &[usize]) -> Result<ModeSpectrum> {
    let n = coupling.n();
    let pinned_set: std::collections::HashSet<usize> = pinned.iter().copied().collect();
    for &p in pinned {
        if p >= n {
            return Err(Error::InvalidConfig(format!("pinned index {p} out of range")));
        }
    }
    let free: Vec<usize> = (0..n).filter(|i| !pinned_set.contains(i)).collect();
    if free.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    let sub = DMatrix::from_fn(free.len(), free.len(), |r, c| coupling.a[(free[r], free[c])]);
    let (vals, vecs) = sym_eigen_ascending(&sub);
    if let Some((k, &v)) = vals.iter().enumerate().find(|(_, &v)| v < INSTABILITY_FLOOR) {
        return Err(Error::Instability(format!(
            "negative eigenvalue {v:.3e} in pinned mode {k}"
        )));
    }
    Ok(ModeSpectrum {
        axis: coupling.axis,
        omega: vals.iter().map(|&v| v.max(0.0).sqrt()).collect(),
        g: vecs,
        ion_index: free,
    })
}

/// One row of a tweezer scan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanRow {
    pub period: usize,
    /// Pinning frequency in units of ω₀; infinite means the pinned limit.
    pub strength_nu: f64,
    pub lowest_omega: f64,
    /// Lowest mode with majority participation on the uniform interior of
    /// the crystal. Open boundaries host softer edge-cell modes that say
    /// nothing about the bulk cell structure; this column filters them out.
    pub bulk_omega: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TweezerScan {
    pub rows: Vec<ScanRow>,
    /// Power-law fit of the pinned-limit bulk frequency against the
    /// period, ω_L/ω₀ = c·P^k.
    pub pinned_fit: Option<PowerLawFit>,
}

/// Lowest mode whose squared amplitude inside the middle fraction of the
/// original crystal reaches at least `threshold`.
pub fn lowest_bulk_mode(
    spectrum: &ModeSpectrum,
    n_total: usize,
    middle_fraction: f64,
    threshold: f64,
) -> Option<f64> {
    let drop = ((1.0 - middle_fraction) * 0.5 * n_total as f64).floor() as usize;
    let (lo, hi) = (drop, n_total - drop);
    for k in 0..spectrum.n() {
        let w: f64 = spectrum
            .ion_index
            .iter()
            .enumerate()
            .filter(|(_, &ion)| ion >= lo && ion < hi)
            .map(|(r, _)| spectrum.g[(r, k)] * spectrum.g[(r, k)])
            .sum();
        if w >= threshold {
            return Some(spectrum.omega[k]);
        }
    }
    None
}

/// Sites pinned for period P: every P-th ion, phase chosen so the pattern
/// matches the 1-based {…, 2P+⌈P/2⌉, …} convention.
pub fn periodic_sites(n: usize, period: usize, phase_1based: usize) -> Vec<usize> {
    (0..n).filter(|i| (i + 1) % period == phase_1based % period).collect()
}

/// Scan the lowest mode frequency against tweezer period and strength on a
/// tweezer-free coupling matrix. `f64::INFINITY` in `strengths` selects the
/// pinned (frozen-ion) limit. The pinned-limit points are fitted to a
/// power law in P when at least four periods are given.
pub fn tweezer_scan(
    coupling_free: &CouplingMatrix,
    periods: &[usize],
    strengths: &[f64],
) -> Result<TweezerScan> {
    let n = coupling_free.n();
    let mut rows = Vec::new();
    let mut pinned_points = Vec::new();
    for &p in periods {
        if p < 2 {
            return Err(Error::InvalidConfig("tweezer period must be >= 2".into()));
        }
        let sites = periodic_sites(n, p, (p + 1) / 2);
        for &s in strengths {
            let sp = if s.is_infinite() {
                pinned_spectrum(coupling_free, &sites)?
            } else {
                spectrum(&coupling_free.with_diagonal_pinning(&sites, s * s))?
            };
            let bulk = lowest_bulk_mode(&sp, n, 0.8, 0.5).unwrap_or_else(|| sp.lowest());
            rows.push(ScanRow { period: p, strength_nu: s, lowest_omega: sp.lowest(), bulk_omega: bulk });
            if s.is_infinite() {
                pinned_points.push((p as f64, bulk));
            }
        }
    }
    let pinned_fit =
        if pinned_points.len() >= 4 { Some(fit_power_law(&pinned_points)?) } else { None };
    Ok(TweezerScan { rows, pinned_fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crystal::{solve_equilibrium, solve_in_well};
    use crate::potential::{AxialWell, Harmonic};
    use crate::units::derive_units;
    use approx::assert_relative_eq;

    fn small_reference(n: usize) -> (Crystal, TrapConfig, UnitSystem) {
        let mut cfg = TrapConfig::default();
        cfg.n = n;
        cfg.l = 300.0 * cfg.d0;
        let units = derive_units(&cfg).unwrap();
        let crystal = solve_equilibrium(&cfg, &units, None).unwrap();
        (crystal, cfg, units)
    }

    #[test]
    fn single_ion_matrix() {
        let (crystal, cfg, units) = small_reference(1);
        let az = coupling_matrix(&crystal, Axis::Z, &cfg, &units, &TweezerLayout::none()).unwrap();
        assert_relative_eq!(az.a[(0, 0)], crystal.well.curvature(crystal.u[0]), max_relative = 1e-12);
        let ax = coupling_matrix(&crystal, Axis::X, &cfg, &units, &TweezerLayout::none()).unwrap();
        let nu_x = units.nu(cfg.omega_rf_x);
        assert_relative_eq!(ax.a[(0, 0)], nu_x * nu_x, max_relative = 1e-12);
        // Spectrum of a single ion is the square root positioned diagonal.
        let s = spectrum(&ax).unwrap();
        assert_relative_eq!(s.omega[0], nu_x, max_relative = 1e-12);
    }

    #[test]
    fn transverse_diagonal_dominated_by_rf() {
        let (crystal, cfg, units) = small_reference(12);
        let ax = coupling_matrix(&crystal, Axis::X, &cfg, &units, &TweezerLayout::none()).unwrap();
        let nu_x = units.nu(cfg.omega_rf_x);
        assert!((nu_x - 35.0).abs() < 1.0, "nu_x = {nu_x}");
        for i in 0..12 {
            assert!((ax.a[(i, i)] - nu_x * nu_x).abs() < 0.05 * nu_x * nu_x);
        }
    }

    #[test]
    fn two_fixed_ions_tweezer_only_oracle() {
        // Hand-evaluated 2x2: unit spacing, no external restoring force,
        // longitudinal axis, both ions tweezered at nu_ot.
        let nu_ot_sq = 3.0;
        let a = coupling_from_parts(
            Axis::Z,
            &[0.0, 1.0],
            &[0.0, 0.0],
            &[nu_ot_sq, nu_ot_sq],
        )
        .unwrap();
        assert_relative_eq!(a.a[(0, 0)], nu_ot_sq + 2.0, max_relative = 1e-14);
        assert_relative_eq!(a.a[(0, 1)], -2.0, max_relative = 1e-14);
        let s = spectrum(&a).unwrap();
        assert_relative_eq!(s.omega[0] * s.omega[0], nu_ot_sq, max_relative = 1e-12);
        assert_relative_eq!(s.omega[1] * s.omega[1], nu_ot_sq + 4.0, max_relative = 1e-12);
    }

    #[test]
    fn row_identity_exact() {
        let (crystal, cfg, units) = small_reference(9);
        let tw = TweezerLayout::x_incident(&[(4, 2.0)]);
        let az = coupling_matrix(&crystal, Axis::Z, &cfg, &units, &tw).unwrap();
        for i in 0..9 {
            let coulomb: f64 = (0..9)
                .filter(|&l| l != i)
                .map(|l| 2.0 / (crystal.u[i] - crystal.u[l]).abs().powi(3))
                .sum();
            let nu_sq = crystal.well.curvature(crystal.u[i]);
            let ot = tw.nu_ot_sq(i, Axis::Z);
            assert_relative_eq!(az.a[(i, i)] - nu_sq - ot, coulomb, max_relative = 1e-12);
        }
    }

    #[test]
    fn three_ion_harmonic_mode_ratios() {
        // Brute-force oracle: the analytic 3-ion coupling matrix in a unit
        // harmonic well has eigenvalues 1, 3, 29/5.
        let c = solve_in_well(AxialWell::Harmonic(Harmonic { nu_sq: 1.0 }), 3, None).unwrap();
        let nu_sq: Vec<f64> = c.u.iter().map(|&z| c.well.curvature(z)).collect();
        let a = coupling_from_parts(Axis::Z, &c.u, &nu_sq, &[0.0; 3]).unwrap();
        let s = spectrum(&a).unwrap();
        assert_relative_eq!(s.omega[1] / s.omega[0], 3.0f64.sqrt(), max_relative = 1e-6);
        assert_relative_eq!(s.omega[2] / s.omega[0], (29.0f64 / 5.0).sqrt(), max_relative = 1e-6);
    }

    #[test]
    fn orthogonality_and_diagonalization() {
        let (crystal, cfg, units) = small_reference(14);
        let az = coupling_matrix(&crystal, Axis::Z, &cfg, &units, &TweezerLayout::none()).unwrap();
        let s = spectrum(&az).unwrap();
        let n = 14;
        let gtg = s.g.transpose() * &s.g;
        let dev = crate::linalg::frobenius(&(gtg - DMatrix::identity(n, n)));
        assert!(dev < 1e-10, "GtG deviation {dev}");
        // Row normalization.
        for i in 0..n {
            let sum: f64 = (0..n).map(|k| s.g[(i, k)] * s.g[(i, k)]).sum();
            assert_relative_eq!(sum, 1.0, max_relative = 1e-10);
        }
        let gag = s.g.transpose() * &az.a * &s.g;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    assert!(gag[(i, j)].abs() <= 1e-9 * gag[(i, i)].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn eigenvalue_monotonicity_under_pinning() {
        let (crystal, cfg, units) = small_reference(10);
        let free = coupling_matrix(&crystal, Axis::Z, &cfg, &units, &TweezerLayout::none()).unwrap();
        let s_free = spectrum(&free).unwrap();
        let pinned = free.with_diagonal_pinning(&[2, 7], 4.0);
        let s_pin = spectrum(&pinned).unwrap();
        for k in 0..10 {
            assert!(s_pin.omega[k] >= s_free.omega[k] - 1e-12);
        }
    }

    #[test]
    fn x_axis_untouched_by_x_incident_tweezers() {
        let (crystal, cfg, units) = small_reference(8);
        let none = TweezerLayout::none();
        let tw = TweezerLayout::x_incident(&[(3, 5.0)]);
        let a0 = coupling_matrix(&crystal, Axis::X, &cfg, &units, &none).unwrap();
        let a1 = coupling_matrix(&crystal, Axis::X, &cfg, &units, &tw).unwrap();
        assert_eq!(a0.a, a1.a);
        // y is shifted on the pinned site only.
        let b0 = coupling_matrix(&crystal, Axis::Y, &cfg, &units, &none).unwrap();
        let b1 = coupling_matrix(&crystal, Axis::Y, &cfg, &units, &tw).unwrap();
        assert_relative_eq!(b1.a[(3, 3)] - b0.a[(3, 3)], 25.0, max_relative = 1e-12);
        assert_eq!(b1.a[(0, 0)], b0.a[(0, 0)]);
    }

    #[test]
    fn pinning_all_but_one_leaves_diagonal_mode() {
        let (crystal, cfg, units) = small_reference(6);
        let a = coupling_matrix(&crystal, Axis::Z, &cfg, &units, &TweezerLayout::none()).unwrap();
        let s = pinned_spectrum(&a, &[0, 1, 2, 4, 5]).unwrap();
        assert_eq!(s.n(), 1);
        assert_eq!(s.ion_index, vec![3]);
        assert_relative_eq!(s.omega[0], a.a[(3, 3)].sqrt(), max_relative = 1e-12);
        assert!(matches!(
            pinned_spectrum(&a, &[0, 1, 2, 3, 4, 5]),
            Err(Error::EmptySpectrum)
        ));
    }

    #[test]
    fn zero_strength_scan_equals_free_spectrum() {
        let (crystal, cfg, units) = small_reference(20);
        let a = coupling_matrix(&crystal, Axis::Z, &cfg, &units, &TweezerLayout::none()).unwrap();
        let free_lowest = spectrum(&a).unwrap().lowest();
        let scan = tweezer_scan(&a, &[5], &[0.0]).unwrap();
        assert_relative_eq!(scan.rows[0].lowest_omega, free_lowest, max_relative = 1e-12);
        assert!(scan.rows[0].bulk_omega >= scan.rows[0].lowest_omega);
    }

    #[test]
    fn duplicate_positions_rejected() {
        let r = coupling_from_parts(Axis::Z, &[0.0, 0.0], &[1.0, 1.0], &[0.0, 0.0]);
        assert!(matches!(r, Err(Error::SingularGeometry(_))));
    }
}
