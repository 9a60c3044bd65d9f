//! Trap configuration and the dimensionless unit system.
//!
//! All simulation math runs in units of the adjacent-ion exchange frequency
//! ω₀ = sqrt(e²/(4πϵ₀ m d₀³)) and the target spacing d₀: lengths in d₀,
//! momenta in mω₀d₀, times in 1/ω₀, temperatures in ħω₀/k_B. The quantum
//! scale in these units is eps = ħ/(mω₀d₀²).

use serde::{Deserialize, Serialize};

use crate::constants;
use crate::error::{Error, Result};

/// Spatial axis. `Z` is longitudinal (along the crystal), `X`/`Y` transverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Axis::X => write!(f, "x"),
            Axis::Y => write!(f, "y"),
            Axis::Z => write!(f, "z"),
        }
    }
}

/// Trap geometry and drive parameters, all SI.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrapConfig {
    /// Ion mass, kg.
    pub ion_mass: f64,
    /// Ion charge, C.
    pub ion_charge: f64,
    /// Target ion spacing d₀, m.
    pub d0: f64,
    /// Ion height above the trap surface, m.
    pub h: f64,
    /// Voltage on the edge electrodes, V.
    pub v_dc: f64,
    /// Separation between the two end walls, m.
    pub l: f64,
    /// Number of ions.
    pub n: usize,
    /// Transverse RF confinement along x, rad/s (uniform over ions).
    pub omega_rf_x: f64,
    /// Transverse RF confinement along y, rad/s.
    pub omega_rf_y: f64,
}

impl Default for TrapConfig {
    /// The ¹⁷¹Yb⁺ reference system: d₀ = 10 μm, h = 30 μm, V_DC = 0.1 V,
    /// L = 2000 d₀, ω_x = ω_y = 2π×5 MHz.
    fn default() -> Self {
        TrapConfig {
            ion_mass: constants::YB171_MASS,
            ion_charge: constants::ELEMENTARY_CHARGE,
            d0: 10e-6,
            h: 30e-6,
            v_dc: 0.1,
            l: 0.02,
            n: 1795,
            omega_rf_x: 2.0 * std::f64::consts::PI * 5e6,
            omega_rf_y: 2.0 * std::f64::consts::PI * 5e6,
        }
    }
}

impl TrapConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ion_mass > 0.0) {
            return Err(Error::InvalidConfig("ion_mass must be > 0".into()));
        }
        if !(self.ion_charge > 0.0) {
            return Err(Error::InvalidConfig("ion_charge must be > 0".into()));
        }
        if !(self.d0 > 0.0) || !(self.h > 0.0) || !(self.l > 0.0) {
            return Err(Error::InvalidConfig("d0, h, L must be > 0".into()));
        }
        if self.n < 1 {
            return Err(Error::InvalidConfig("need at least one ion".into()));
        }
        if !(self.omega_rf_x > 0.0) || !(self.omega_rf_y > 0.0) {
            return Err(Error::InvalidConfig("RF frequencies must be > 0".into()));
        }
        Ok(())
    }

    /// Wall separation in units of d₀.
    pub fn l_d0(&self) -> f64 {
        self.l / self.d0
    }

    /// Ion height in units of d₀.
    pub fn h_d0(&self) -> f64 {
        self.h / self.d0
    }
}

/// Derived unit scales for a given trap.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct UnitSystem {
    /// Adjacent-ion exchange frequency ω₀, rad/s.
    pub omega0: f64,
    /// Dimensionless quantum scale ħ/(mω₀d₀²).
    pub eps: f64,
    /// Time unit 1/ω₀, s.
    pub t_unit: f64,
    /// Temperature unit ħω₀/k_B, K.
    pub temp_unit: f64,
}

impl UnitSystem {
    /// Dimensionless frequency ω/ω₀ from an SI angular frequency.
    pub fn nu(&self, omega_rad_s: f64) -> f64 {
        omega_rad_s / self.omega0
    }

    /// Dimensionless temperature k_B T/(ħω₀) from kelvin.
    pub fn temp(&self, t_kelvin: f64) -> f64 {
        t_kelvin / self.temp_unit
    }

    /// Dimensionless time from seconds.
    pub fn time(&self, t_seconds: f64) -> f64 {
        t_seconds / self.t_unit
    }
}

/// Derive ω₀, eps and the time/temperature units from a trap configuration.
pub fn derive_units(config: &TrapConfig) -> Result<UnitSystem> {
    config.validate()?;
    let omega0_sq = constants::COULOMB_CONSTANT * config.ion_charge * config.ion_charge
        / (config.ion_mass * config.d0.powi(3));
    let omega0 = omega0_sq.sqrt();
    Ok(UnitSystem {
        omega0,
        eps: constants::HBAR / (config.ion_mass * omega0 * config.d0 * config.d0),
        t_unit: 1.0 / omega0,
        temp_unit: constants::HBAR * omega0 / constants::KB,
    })
}

/// Doppler-limit temperature ħΓ/(2k_B) in kelvin for a transition of the
/// given natural linewidth (rad/s).
pub fn doppler_temperature(linewidth: f64) -> Result<f64> {
    if !(linewidth > 0.0) {
        return Err(Error::InvalidConfig("linewidth must be > 0".into()));
    }
    Ok(constants::HBAR * linewidth / (2.0 * constants::KB))
}

/// One tweezer-illuminated ion with its pinning frequencies in units of ω₀.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinnedIon {
    pub ion: usize,
    pub nu_ot_x: f64,
    pub nu_ot_y: f64,
    pub nu_ot_z: f64,
}

/// Layout of the optical tweezers over the crystal.
///
/// Beams incident along x pin y and z equally and leave x untouched.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TweezerLayout {
    pub pinned: Vec<PinnedIon>,
    pub incident_axis: Axis,
}

impl TweezerLayout {
    /// No tweezers anywhere.
    pub fn none() -> Self {
        TweezerLayout { pinned: Vec::new(), incident_axis: Axis::X }
    }

    /// x-incident tweezers with equal y/z pinning `nu_ot` on the given ions.
    pub fn x_incident(entries: &[(usize, f64)]) -> Self {
        TweezerLayout {
            pinned: entries
                .iter()
                .map(|&(ion, nu)| PinnedIon { ion, nu_ot_x: 0.0, nu_ot_y: nu, nu_ot_z: nu })
                .collect(),
            incident_axis: Axis::X,
        }
    }

    /// x-incident tweezers of strength `nu_ot` on every `period`-th site.
    ///
    /// `phase` is the 1-based site index of the first tweezered ion modulo
    /// the period, matching the usual {..., 205, 215, 225, ...} bookkeeping
    /// (period 10, phase 5).
    pub fn periodic_x(n: usize, period: usize, phase: usize, nu_ot: f64) -> Self {
        let sites: Vec<(usize, f64)> = (0..n)
            .filter(|i| (i + 1) % period == phase % period)
            .map(|i| (i, nu_ot))
            .collect();
        Self::x_incident(&sites)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for p in &self.pinned {
            if p.ion >= n {
                return Err(Error::InvalidConfig(format!(
                    "tweezered ion index {} out of range (N = {})",
                    p.ion, n
                )));
            }
            if !seen.insert(p.ion) {
                return Err(Error::InvalidConfig(format!("duplicate tweezered ion {}", p.ion)));
            }
            if p.nu_ot_x < 0.0 || p.nu_ot_y < 0.0 || p.nu_ot_z < 0.0 {
                return Err(Error::InvalidConfig("tweezer frequencies must be >= 0".into()));
            }
            if self.incident_axis == Axis::X {
                if p.nu_ot_x != 0.0 {
                    return Err(Error::InvalidConfig(
                        "x-incident tweezers must not pin the x axis".into(),
                    ));
                }
                if p.nu_ot_y != p.nu_ot_z {
                    return Err(Error::InvalidConfig(
                        "x-incident tweezers pin y and z equally".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Pinning frequency squared seen by `ion` along `axis`.
    pub fn nu_ot_sq(&self, ion: usize, axis: Axis) -> f64 {
        self.pinned
            .iter()
            .find(|p| p.ion == ion)
            .map(|p| {
                let nu = match axis {
                    Axis::X => p.nu_ot_x,
                    Axis::Y => p.nu_ot_y,
                    Axis::Z => p.nu_ot_z,
                };
                nu * nu
            })
            .unwrap_or(0.0)
    }

    pub fn pinned_indices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.pinned.iter().map(|p| p.ion).collect();
        v.sort_unstable();
        v
    }

    pub fn is_pinned(&self, ion: usize) -> bool {
        self.pinned.iter().any(|p| p.ion == ion)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn reference_system_frequency() {
        // 171Yb+ at d0 = 10 um sits at omega0 = 2pi x 143 kHz to within 1%.
        let units = derive_units(&TrapConfig::default()).unwrap();
        let f0 = units.omega0 / (2.0 * std::f64::consts::PI);
        assert_relative_eq!(f0, 143e3, max_relative = 0.01);
    }

    #[test]
    fn omega0_spacing_power_law() {
        let mut cfg = TrapConfig::default();
        let base = derive_units(&cfg).unwrap().omega0;
        cfg.d0 *= 2.0;
        let doubled = derive_units(&cfg).unwrap().omega0;
        assert_relative_eq!(doubled / base, 0.5f64.powf(1.5), max_relative = 1e-12);
    }

    #[test]
    fn scale_covariance() {
        // omega0 * d0^(3/2) * m^(1/2) is constant for fixed charge.
        let mut cfg = TrapConfig::default();
        let u1 = derive_units(&cfg).unwrap();
        let k1 = u1.omega0 * cfg.d0.powf(1.5) * cfg.ion_mass.sqrt();
        cfg.d0 = 23e-6;
        cfg.ion_mass *= 3.7;
        let u2 = derive_units(&cfg).unwrap();
        let k2 = u2.omega0 * cfg.d0.powf(1.5) * cfg.ion_mass.sqrt();
        assert_relative_eq!(k1, k2, max_relative = 1e-12);
    }

    #[test]
    fn eps_reference_value() {
        // Direct evaluation of hbar/(m omega0 d0^2) with CODATA constants.
        let cfg = TrapConfig::default();
        let units = derive_units(&cfg).unwrap();
        let expected = constants::HBAR / (cfg.ion_mass * units.omega0 * cfg.d0 * cfg.d0);
        assert_relative_eq!(units.eps, expected, max_relative = 1e-14);
        assert_relative_eq!(units.eps, 4.12e-6, max_relative = 5e-3);
    }

    #[test]
    fn round_trip_units() {
        let units = derive_units(&TrapConfig::default()).unwrap();
        let t = 1.234e-5;
        assert_relative_eq!(units.time(t) * units.t_unit, t, max_relative = 1e-13);
        let temp = 4.7e-4;
        assert_relative_eq!(units.temp(temp) * units.temp_unit, temp, max_relative = 1e-13);
    }

    #[test]
    fn doppler_limit_yb() {
        let td = doppler_temperature(constants::YB_COOLING_LINEWIDTH).unwrap();
        assert_relative_eq!(td, 0.47e-3, max_relative = 0.02);
        // Linearity.
        let td2 = doppler_temperature(2.0 * constants::YB_COOLING_LINEWIDTH).unwrap();
        assert_relative_eq!(td2, 2.0 * td, max_relative = 1e-14);
        // In trap temperature units for the reference system.
        let units = derive_units(&TrapConfig::default()).unwrap();
        let td_tilde = units.temp(td);
        assert!((td_tilde - 68.0).abs() < 2.0, "T_D = {td_tilde} trap units");
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = TrapConfig::default();
        cfg.d0 = -1.0;
        assert!(derive_units(&cfg).is_err());
        assert!(doppler_temperature(0.0).is_err());
    }

    #[test]
    fn periodic_layout_matches_site_convention() {
        let tw = TweezerLayout::periodic_x(1018, 10, 5, 3.0);
        // 1-based sites 5, 15, 25, ... => 0-based 4, 14, 24, ...
        assert!(tw.pinned.iter().any(|p| p.ion == 204));
        assert!(tw.pinned.iter().any(|p| p.ion == 214));
        assert!(!tw.is_pinned(205));
        tw.validate(1018).unwrap();
        assert_eq!(tw.nu_ot_sq(204, Axis::Y), 9.0);
        assert_eq!(tw.nu_ot_sq(204, Axis::X), 0.0);
    }

    #[test]
    fn layout_validation_catches_bad_entries() {
        let mut tw = TweezerLayout::x_incident(&[(3, 1.0)]);
        tw.pinned[0].nu_ot_x = 0.5;
        assert!(tw.validate(10).is_err());
        let tw = TweezerLayout::x_incident(&[(11, 1.0)]);
        assert!(tw.validate(10).is_err());
        let tw = TweezerLayout::x_incident(&[(2, 1.0), (2, 1.0)]);
        assert!(tw.validate(10).is_err());
    }
}
