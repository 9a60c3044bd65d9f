//! Physical constants (SI, CODATA 2018) and reference values for ¹⁷¹Yb⁺.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant, J/K.
pub const KB: f64 = 1.380_649e-23;

/// Elementary charge, C.
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Coulomb constant 1/(4πϵ₀), N·m²/C².
pub const COULOMB_CONSTANT: f64 = 8.987_551_787_368_176e9;

/// Atomic mass unit, kg.
pub const ATOMIC_MASS: f64 = 1.660_539_068_92e-27;

/// Mass of ¹⁷¹Yb, kg (170.9363302 u).
pub const YB171_MASS: f64 = 170.936_330_2 * ATOMIC_MASS;

/// Natural linewidth of the Yb⁺ ²S₁/₂ → ²P₁/₂ cooling transition, rad/s.
pub const YB_COOLING_LINEWIDTH: f64 = 2.0 * std::f64::consts::PI * 19.6e6;

/// Wavelength of the Yb⁺ cooling/Raman light, m.
pub const YB_RAMAN_WAVELENGTH: f64 = 369.5e-9;

/// Default momentum-kick magnitude |Δk| for a counter-propagating Raman
/// pair at the Yb⁺ wavelength, 1/m.
pub fn default_delta_k() -> f64 {
    std::f64::consts::SQRT_2 * 2.0 * std::f64::consts::PI / YB_RAMAN_WAVELENGTH
}
