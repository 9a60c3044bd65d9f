//! Layered TOML configuration: built-in defaults, then a preset, then a
//! user file, then `--set key=value` overrides, merged in that order.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use ioncrystal::constants;
use ioncrystal::units::TrapConfig;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrapSection {
    pub ion_mass_kg: f64,
    pub ion_charge_c: f64,
    pub d0_m: f64,
    pub h_m: f64,
    pub v_dc_v: f64,
    /// Wall separation in meters; ignored when `l_d0` is set.
    pub l_m: Option<f64>,
    /// Wall separation in units of d₀.
    pub l_d0: Option<f64>,
    pub n: usize,
    pub omega_rf_x_rad_s: f64,
    pub omega_rf_y_rad_s: f64,
    /// Solve for the wall separation that yields interior spacing d₀.
    pub calibrate_length: bool,
}

impl Default for TrapSection {
    fn default() -> Self {
        let t = TrapConfig::default();
        TrapSection {
            ion_mass_kg: t.ion_mass,
            ion_charge_c: t.ion_charge,
            d0_m: t.d0,
            h_m: t.h,
            v_dc_v: t.v_dc,
            l_m: None,
            l_d0: None,
            n: t.n,
            omega_rf_x_rad_s: t.omega_rf_x,
            omega_rf_y_rad_s: t.omega_rf_y,
            calibrate_length: false,
        }
    }
}

impl TrapSection {
    pub fn to_trap(&self) -> Result<TrapConfig> {
        if self.l_m.is_some() && self.l_d0.is_some() {
            bail!("set either trap.l_m or trap.l_d0, not both");
        }
        let l = match (self.l_m, self.l_d0) {
            (Some(m), None) => m,
            (None, Some(d)) => d * self.d0_m,
            (None, None) => TrapConfig::default().l,
            _ => unreachable!(),
        };
        Ok(TrapConfig {
            ion_mass: self.ion_mass_kg,
            ion_charge: self.ion_charge_c,
            d0: self.d0_m,
            h: self.h_m,
            v_dc: self.v_dc_v,
            l,
            n: self.n,
            omega_rf_x: self.omega_rf_x_rad_s,
            omega_rf_y: self.omega_rf_y_rad_s,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TweezerSection {
    /// Repetition period of the tweezer array; absent means no periodic
    /// tweezers.
    pub period: Option<usize>,
    /// 1-based site phase of the pattern (5 puts pins on sites 5, 15, ...).
    pub phase: usize,
    pub omega_ot_rad_s: f64,
    /// Additional explicitly pinned ions (0-based index, rad/s).
    pub extra: Vec<ExtraTweezer>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtraTweezer {
    pub ion: usize,
    pub omega_ot_rad_s: f64,
}

impl Default for TweezerSection {
    fn default() -> Self {
        TweezerSection {
            period: None,
            phase: 5,
            omega_ot_rad_s: 2.0 * std::f64::consts::PI * 1e6,
            extra: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathSection {
    /// Coolant bath temperature in kelvin; defaults to the Yb⁺ Doppler
    /// limit.
    pub t_doppler_k: Option<f64>,
    pub coolant_gamma: f64,
    pub background_gamma_t: f64,
    /// "per_cell": coolants next to every tweezered site; "all_free":
    /// every non-tweezered ion; "explicit": the `coolants` list.
    pub coolant_mode: String,
    pub coolants_per_cell: usize,
    pub coolants: Vec<usize>,
}

impl Default for BathSection {
    fn default() -> Self {
        BathSection {
            t_doppler_k: None,
            coolant_gamma: 0.01,
            background_gamma_t: 1e-4,
            coolant_mode: "per_cell".into(),
            coolants_per_cell: 1,
            coolants: Vec::new(),
        }
    }
}

impl BathSection {
    pub fn doppler_kelvin(&self) -> Result<f64> {
        Ok(match self.t_doppler_k {
            Some(t) => t,
            None => ioncrystal::units::doppler_temperature(constants::YB_COOLING_LINEWIDTH)
                .map_err(|e| anyhow::anyhow!(e.to_string()))?,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquilibriumSection {
    /// "single" solves one crystal; "uniformity" scans L = 100q·d₀ with
    /// calibrated ion counts.
    pub mode: String,
    pub q_list: Vec<usize>,
    pub middle_fraction: f64,
}

impl Default for EquilibriumSection {
    fn default() -> Self {
        EquilibriumSection { mode: "single".into(), q_list: (1..=20).collect(), middle_fraction: 0.8 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModesSection {
    pub axis: String,
    pub periods: Vec<usize>,
    /// Finite scan strengths in kHz (tweezer frequency ω_ot/2π).
    pub strengths_khz: Vec<f64>,
    pub include_pinned_limit: bool,
    pub emit_spectrum: bool,
}

impl Default for ModesSection {
    fn default() -> Self {
        ModesSection {
            axis: "z".into(),
            periods: vec![10],
            strengths_khz: vec![0.0, 100.0, 200.0, 500.0, 1000.0, 5000.0],
            include_pinned_limit: true,
            emit_spectrum: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GateSection {
    pub cell_size: usize,
    /// Gate qubits inside the design cell, 0-based.
    pub ion_i: usize,
    pub ion_j: usize,
    pub axis: String,
    pub t_g_us: Vec<f64>,
    pub segments: usize,
    /// Motional temperature in units of the Doppler temperature.
    pub temperature_factor: f64,
    pub mu_points: usize,
    /// |Δk| in 1/m; defaults to a counter-propagating Raman pair at the
    /// Yb⁺ wavelength.
    pub delta_k: Option<f64>,
    /// Pin one in-cell ion, e.g. a tweezered wall ion between the qubits:
    /// [cell_index, omega_ot_rad_s].
    pub pinned_in_cell: Vec<ExtraTweezer>,
    /// Also evaluate each optimized pulse on the full crystal between
    /// `full_ion_i`/`full_ion_j` (0-based crystal indices).
    pub full_crystal: bool,
    pub full_ion_i: usize,
    pub full_ion_j: usize,
    /// Beam waist for the longitudinal error channel, meters.
    pub waist_m: f64,
}

impl Default for GateSection {
    fn default() -> Self {
        GateSection {
            cell_size: 9,
            ion_i: 2,
            ion_j: 5,
            axis: "x".into(),
            t_g_us: vec![0.5, 0.8, 1.2, 1.8, 2.6, 3.8, 5.5, 8.0, 12.0, 18.0, 28.0],
            segments: 7,
            temperature_factor: 10.0,
            mu_points: 2000,
            delta_k: None,
            pinned_in_cell: Vec::new(),
            full_crystal: false,
            full_ion_i: 627,
            full_ion_j: 630,
            waist_m: 5e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CoolSection {
    pub axes: Vec<String>,
    /// Start temperature in units of the Doppler temperature.
    pub initial_temp_factor: f64,
    /// First sampling step (units 1/ω₀) of the doubling schedule.
    pub dt0: f64,
    pub samples_per_stage: usize,
    pub stages: usize,
    /// Observed ions (0-based); empty means the middle in-cell ion.
    pub observe: Vec<usize>,
    /// Run one series per entry, varying the coolant count per cell.
    pub coolants_per_cell_scan: Vec<usize>,
}

impl Default for CoolSection {
    fn default() -> Self {
        CoolSection {
            axes: vec!["z".into()],
            initial_temp_factor: 20.0,
            dt0: 50.0,
            samples_per_stage: 16,
            stages: 6,
            observe: Vec::new(),
            coolants_per_cell_scan: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LocalCoolSection {
    /// 0-based inclusive interior span of the cell.
    pub interior: [usize; 2],
    pub wall_thickness: Vec<usize>,
    pub coolants: Vec<usize>,
    pub outside: Vec<usize>,
    pub initial_temp_factor: f64,
    /// Uniform observation windows per axis: (dt, steps).
    pub z_dt: f64,
    pub z_steps: usize,
    pub y_dt: f64,
    pub y_steps: usize,
    pub axes: Vec<String>,
}

impl Default for LocalCoolSection {
    fn default() -> Self {
        LocalCoolSection {
            interior: [215, 223],
            wall_thickness: vec![1, 2, 3],
            coolants: vec![215, 216, 222, 223],
            outside: vec![189, 249],
            initial_temp_factor: 20.0,
            z_dt: 4000.0,
            z_steps: 120,
            y_dt: 60.0,
            y_steps: 120,
            axes: vec!["z".into(), "y".into()],
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub trap: TrapSection,
    pub tweezers: TweezerSection,
    pub bath: BathSection,
    pub equilibrium: EquilibriumSection,
    pub modes: ModesSection,
    pub gate: GateSection,
    pub cool: CoolSection,
    pub localcool: LocalCoolSection,
}

/// Merge `patch` into `base` recursively (tables merge, scalars replace).
fn merge_value(base: &mut toml::Value, patch: toml::Value) {
    match (base, patch) {
        (toml::Value::Table(b), toml::Value::Table(p)) => {
            for (k, v) in p {
                match b.get_mut(&k) {
                    Some(slot) => merge_value(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

/// Apply one `--set path.to.key=value` override.
fn apply_set(root: &mut toml::Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .with_context(|| format!("--set needs key=value, got {spec:?}"))?;
    let parsed: toml::Value = format!("v = {raw}")
        .parse::<toml::Table>()
        .map(|t| t["v"].clone())
        .or_else(|_| format!("v = {raw:?}").parse::<toml::Table>().map(|t| t["v"].clone()))
        .with_context(|| format!("cannot parse override value {raw:?}"))?;
    let mut slot = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = slot
            .as_table_mut()
            .with_context(|| format!("override path {path:?} crosses a non-table"))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), parsed);
            break;
        }
        slot = table
            .entry(part.to_string())
            .or_insert(toml::Value::Table(Default::default()));
    }
    Ok(())
}

/// Build the effective configuration and its canonical serialized form.
pub fn load(
    preset: Option<&str>,
    config_path: Option<&std::path::Path>,
    sets: &[String],
) -> Result<(FileConfig, String)> {
    let defaults = toml::Value::try_from(FileConfig::default())?;
    let mut merged = defaults;
    if let Some(name) = preset {
        let text = crate::presets::lookup(name)
            .with_context(|| format!("unknown preset {name:?}"))?;
        let v: toml::Value = text.parse().context("preset parse failure")?;
        merge_value(&mut merged, v);
    }
    if let Some(path) = config_path {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let v: toml::Value = text
            .parse()
            .with_context(|| format!("config {} is not valid TOML", path.display()))?;
        merge_value(&mut merged, v);
    }
    for s in sets {
        apply_set(&mut merged, s)?;
    }
    let canonical = toml::to_string(&merged)?;
    let config: FileConfig = merged.try_into().context("configuration validation failed")?;
    Ok((config, canonical))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let (cfg, canonical) = load(None, None, &[]).unwrap();
        assert_eq!(cfg.trap.n, 1795);
        assert!(canonical.contains("[trap]"));
    }

    #[test]
    fn set_overrides_apply() {
        let (cfg, _) =
            load(None, None, &["trap.n=42".into(), "gate.axis=\"y\"".into()]).unwrap();
        assert_eq!(cfg.trap.n, 42);
        assert_eq!(cfg.gate.axis, "y");
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut path = std::env::temp_dir();
        path.push("ioncrystal_bad_cfg.toml");
        std::fs::write(&path, "[trap]\nbogus_key = 1\n").unwrap();
        assert!(load(None, Some(&path), &[]).is_err());
        let _ = std::fs::remove_file(&path);
    }
}
