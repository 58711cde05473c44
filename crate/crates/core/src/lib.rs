pub mod algebra;
pub mod analysis;
pub mod detection;
pub mod error;
pub mod io;
pub mod optics;
pub mod registry;
pub mod rng;
pub mod special;
pub mod theory;
pub mod transmitter;
