//! Bundled scenario presets. Each preset is a TOML fragment merged over
//! the built-in defaults; `kind` names the subcommand it belongs to.

pub struct Preset {
    pub name: &'static str,
    pub kind: &'static str,
    pub toml: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "fig1c",
        kind: "equilibrium",
        toml: r#"
[equilibrium]
mode = "uniformity"
q_list = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20]
"#,
    },
    Preset {
        name: "fig2a",
        kind: "modes",
        toml: r#"
[trap]
n = 1018
calibrate_length = true

[modes]
axis = "z"
periods = [10]
strengths_khz = [0.0, 50.0, 100.0, 200.0, 350.0, 500.0, 1000.0, 2000.0, 5000.0]
include_pinned_limit = true
"#,
    },
    Preset {
        name: "fig2b",
        kind: "modes",
        toml: r#"
[trap]
n = 1018
calibrate_length = true

[modes]
axis = "z"
periods = [5, 10, 15, 20, 25, 30, 35, 40, 45, 50]
strengths_khz = []
include_pinned_limit = true
emit_spectrum = false
"#,
    },
    Preset {
        name: "fig3a",
        kind: "gate",
        toml: r#"
[trap]
n = 1795
l_d0 = 2000.0

[gate]
t_g_us = [0.5, 0.8, 1.2, 1.8, 2.6, 3.8, 5.5, 8.0, 12.0, 18.0, 28.0]
full_crystal = true
full_ion_i = 627
full_ion_j = 630
"#,
    },
    Preset {
        name: "fig3b",
        kind: "gate",
        toml: r#"
[gate]
t_g_us = [4.0, 5.7, 8.1, 11.5, 16.4, 23.4, 33.3, 41.0]
"#,
    },
    Preset {
        name: "fig3cd",
        kind: "cool",
        toml: r#"
# Longitudinal sympathetic cooling of the pinned array. The reference
# system is N = 1018; n = 318 is a faithful per-cell replica that runs in
# seconds (override with --set trap.n=1018 for the full run).
[trap]
n = 318
calibrate_length = true

[tweezers]
period = 10
phase = 5

[cool]
axes = ["z"]
dt0 = 50.0
samples_per_stage = 16
stages = 6
coolants_per_cell_scan = [1, 2, 4]
"#,
    },
    Preset {
        name: "fig4",
        kind: "cool",
        toml: r#"
# Transverse cooling under x-incident tweezers. Every non-tweezered ion is
# Doppler cooled; the x spectrum is untouched by the tweezers while y
# carries the pinning terms.
[trap]
n = 318
calibrate_length = true

[tweezers]
period = 10
phase = 5

[bath]
coolant_mode = "all_free"

[cool]
axes = ["x", "y"]
dt0 = 4.0
samples_per_stage = 16
stages = 7
"#,
    },
    Preset {
        name: "fig5",
        kind: "localcool",
        toml: r#"
[trap]
n = 1018
calibrate_length = true

[localcool]
interior = [215, 223]
wall_thickness = [1, 2, 3]
coolants = [215, 216, 222, 223]
outside = [189, 249]
axes = ["z", "y"]
z_dt = 4000.0
z_steps = 120
y_dt = 60.0
y_steps = 120
"#,
    },
];

pub fn lookup(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.name == name).map(|p| p.toml)
}

pub fn kind_of(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|p| p.name == name).map(|p| p.kind)
}
