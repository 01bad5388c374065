//! Shared inputs for the benchmarks.

use xstune_core::pixel::{load_image, RasterImage};

/// A 256x256 photo from the core test fixtures.
pub fn sample_photo() -> RasterImage {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/data/photos/p01_astronaut.ppm");
    load_image(path).expect("photo fixture is present")
}
