//! Axial trapping potentials in dimensionless (ω₀, d₀) units.

use serde::{Deserialize, Serialize};

use crate::units::{TrapConfig, UnitSystem};

/// An axial (longitudinal) potential: energy in units of mω₀²d₀², position
/// in units of d₀.
pub trait AxialPotential {
    fn value(&self, z: f64) -> f64;
    fn derivative(&self, z: f64) -> f64;
    fn curvature(&self, z: f64) -> f64;
}

/// Flat-bottom trap with steep arctangent walls at ±L/2 built by a pair of
/// lifted edge electrodes at height h below the ion string.
///
/// The two arctan branches of the raw electrode expression are joined into
/// the single form amp·(π − atan((z+L/2)/h) + atan((z−L/2)/h)), which is
/// continuous through |z| = L/2 and analytic everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bookend {
    /// eV_DC/(π mω₀²d₀²).
    pub amp: f64,
    /// Electrode depth h in units of d₀.
    pub h: f64,
    /// Half the wall separation, units of d₀.
    pub half_l: f64,
}

impl Bookend {
    pub fn from_config(config: &TrapConfig, units: &UnitSystem) -> Self {
        let energy_unit = config.ion_mass * units.omega0 * units.omega0 * config.d0 * config.d0;
        Bookend {
            amp: config.ion_charge * config.v_dc / (std::f64::consts::PI * energy_unit),
            h: config.h_d0(),
            half_l: 0.5 * config.l_d0(),
        }
    }
}

impl AxialPotential for Bookend {
    fn value(&self, z: f64) -> f64 {
        let a = (z + self.half_l) / self.h;
        let b = (z - self.half_l) / self.h;
        self.amp * (std::f64::consts::PI - a.atan() + b.atan())
    }

    fn derivative(&self, z: f64) -> f64 {
        let h = self.h;
        let da = h * h + (z + self.half_l) * (z + self.half_l);
        let db = h * h + (z - self.half_l) * (z - self.half_l);
        self.amp * (h / db - h / da)
    }

    fn curvature(&self, z: f64) -> f64 {
        let h = self.h;
        let ra = z + self.half_l;
        let rb = z - self.half_l;
        let da = h * h + ra * ra;
        let db = h * h + rb * rb;
        self.amp * (2.0 * h * ra / (da * da) - 2.0 * h * rb / (db * db))
    }
}

/// Plain harmonic well ½ν²z²; used for small analytic reference crystals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    /// Squared axial frequency in units of ω₀².
    pub nu_sq: f64,
}

impl AxialPotential for Harmonic {
    fn value(&self, z: f64) -> f64 {
        0.5 * self.nu_sq * z * z
    }

    fn derivative(&self, z: f64) -> f64 {
        self.nu_sq * z
    }

    fn curvature(&self, _z: f64) -> f64 {
        self.nu_sq
    }
}

/// The axial well a crystal was solved in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AxialWell {
    Bookend(Bookend),
    Harmonic(Harmonic),
}

impl AxialPotential for AxialWell {
    fn value(&self, z: f64) -> f64 {
        match self {
            AxialWell::Bookend(b) => b.value(z),
            AxialWell::Harmonic(h) => h.value(z),
        }
    }

    fn derivative(&self, z: f64) -> f64 {
        match self {
            AxialWell::Bookend(b) => b.derivative(z),
            AxialWell::Harmonic(h) => h.derivative(z),
        }
    }

    fn curvature(&self, z: f64) -> f64 {
        match self {
            AxialWell::Bookend(b) => b.curvature(z),
            AxialWell::Harmonic(h) => h.curvature(z),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::derive_units;
    use approx::assert_relative_eq;

    fn reference_bookend() -> Bookend {
        let cfg = TrapConfig::default();
        let units = derive_units(&cfg).unwrap();
        Bookend::from_config(&cfg, &units)
    }

    /// The electrode model as literally written: two arctan(h/x) terms with
    /// a +π lift outside the walls.
    fn piecewise_form(b: &Bookend, z: f64) -> f64 {
        let t = (b.h / (z + b.half_l)).atan() - (b.h / (z - b.half_l)).atan();
        if z.abs() <= b.half_l {
            b.amp * t
        } else {
            b.amp * (t + std::f64::consts::PI)
        }
    }

    #[test]
    fn matches_piecewise_branches() {
        let b = reference_bookend();
        for &z in &[0.0, 123.4, -800.0, 999.9, 1000.1, 1500.0, -1200.0] {
            assert_relative_eq!(b.value(z), piecewise_form(&b, z), max_relative = 1e-12);
        }
    }

    #[test]
    fn continuous_across_wall() {
        // The raw two-branch expression jumps by amp*pi at |z| = L/2; the
        // joined form changes only by slope x step there.
        let b = reference_bookend();
        let eps = 1e-9;
        let inside = b.value(b.half_l - eps);
        let outside = b.value(b.half_l + eps);
        let slope_change = b.derivative(b.half_l).abs() * 2.0 * eps;
        assert!((inside - outside).abs() < 10.0 * slope_change + 1e-12);
        assert!((inside - outside).abs() < 1e-3 * b.amp * std::f64::consts::PI);
    }

    #[test]
    fn symmetry_and_flat_center() {
        let b = reference_bookend();
        for &z in &[10.0, 250.0, 900.0, 1100.0] {
            assert_relative_eq!(b.value(z), b.value(-z), max_relative = 1e-12);
        }
        assert!(b.derivative(0.0).abs() < 1e-18);
    }

    #[test]
    fn curvature_positive_and_steep_at_walls() {
        let b = reference_bookend();
        assert!(b.curvature(0.0) > 0.0);
        // Walls are orders of magnitude stiffer than the flat bottom.
        let wall = b.curvature(b.half_l - b.h / 3.0f64.sqrt());
        assert!(wall > 1e3 * b.curvature(0.0));
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let b = reference_bookend();
        let z = 0.4 * 2.0 * b.half_l;
        let dz = 1e-4;
        let fd = (b.value(z + dz) - b.value(z - dz)) / (2.0 * dz);
        assert_relative_eq!(b.derivative(z), fd, max_relative = 1e-6);
        let fd2 = (b.derivative(z + dz) - b.derivative(z - dz)) / (2.0 * dz);
        assert_relative_eq!(b.curvature(z), fd2, max_relative = 1e-6);
    }

    #[test]
    fn harmonic_well_basics() {
        let h = Harmonic { nu_sq: 2.0 };
        assert_relative_eq!(h.value(3.0), 9.0);
        assert_relative_eq!(h.derivative(3.0), 6.0);
        assert_relative_eq!(h.curvature(3.0), 2.0);
    }
}
