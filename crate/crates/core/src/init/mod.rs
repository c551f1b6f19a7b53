//! Hydrostatic base states and initial perturbations.

pub mod cases;
pub mod profile;
pub mod solve;

pub use cases::{
    bryan_fritsch_state, gravity_wave_perturbation, rain_thermal_state, BubbleParams, BubbleShape, GravityWaveParams,
    MoistPerturbation, RainThermalParams,
};
pub use profile::{
    hydrostatic_no_cloud, hydrostatic_relative_humidity, hydrostatic_saturated_qw, hydrostatic_temperature_profile,
    saturated_theta_e_block, HydrostaticProfile, NodeState, TemperatureProfileParams, WaterContent, DZ_PROFILE,
};
pub use solve::bracketed_root;
