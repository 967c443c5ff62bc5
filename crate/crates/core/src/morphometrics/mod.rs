//! Vascular morphology from binary vessel maps: vessel density and the
//! box-counting fractal dimension.

mod fractal;
mod mask;

pub use fractal::{
    box_count, box_sizes, fractal_dimension, vessel_density, BoxCount, BoxCountSeries,
    DEFAULT_MIN_BOX,
};
pub use mask::{
    encode_lavamask, load_vessel_map, parse_lavamask, parse_pgm, save_lavamask, MaskFormat,
    VesselMap, LAVAMASK_MAGIC,
};
