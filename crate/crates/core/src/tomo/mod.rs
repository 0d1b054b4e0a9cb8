//! Parallel-beam tomography testbed.

mod geometry;
mod io;
mod noise;
mod phantom;
mod radon;

pub use geometry::{Geometry, Sinogram};
pub use io::{
    decode_image, decode_sinogram, encode_image, encode_pgm, encode_sinogram, read_image, read_sinogram, write_image,
    write_pgm, write_sinogram,
};
pub use noise::{simulate_poisson, simulate_poisson_counts, NoisyData};
pub use phantom::{shepp_logan, Ellipse, Phantom, SHEPP_LOGAN};
pub use radon::Radon;
