//! Physical-optics illumination, scattering-power maps and center extraction.

pub mod centers;
pub mod current;
pub mod power;
pub mod radar;
pub mod spatial;

pub use centers::{
    cluster_centers, default_phase_term, extract_centers, ScatteringCenter, ScatteringCenterSet, DEFAULT_THRESHOLD_DB,
};
pub use current::{facet_currents, incident_h, po_current, po_surface_current, CVec3};
pub use power::{
    eye_weight, scatter_power_map, scatter_power_map_from_currents, total_field, FacetField, Kernel, ScatterPowerMap,
    DEFAULT_A0_WAVELENGTHS,
};
pub use radar::{AntennaArray, ArrayLayout, Beamwidth, RadarConfig, SPEED_OF_LIGHT};
pub use spatial::SpatialGrid;
