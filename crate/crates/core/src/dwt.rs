//! Asymmetric multilevel 5/3 wavelet transform.
//!
//! Two full 2D levels followed by three horizontal-only levels on the running
//! low band. The ten resulting sub-bands are indexed deepest level first:
//!
//! ```text
//! 0 LL5,2  1 HL5,2  2 HL4,2  3 HL3,2  4 HL2,2  5 LH2,2  6 HH2,2  7 HL1,1  8 LH1,1  9 HH1,1
//! ```
//!
//! Coefficients are kept in a Mallat-style buffer while transforming and are
//! split into per-band arrays afterwards.

use std::ops::{Add, Sub};

use crate::error::{Error, Result};

pub const NUM_BANDS: usize = 10;
pub const HORIZONTAL_LEVELS: usize = 5;
pub const VERTICAL_LEVELS: usize = 2;
/// Plane widths must be a multiple of this.
pub const WIDTH_ALIGN: usize = 1 << HORIZONTAL_LEVELS;
/// Plane heights must be a multiple of this.
pub const HEIGHT_ALIGN: usize = 1 << VERTICAL_LEVELS;

pub const BAND_NAMES: [&str; NUM_BANDS] = [
    "LL5,2", "HL5,2", "HL4,2", "HL3,2", "HL2,2", "LH2,2", "HH2,2", "HL1,1", "LH1,1", "HH1,1",
];

/// A signed integer plane, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<i32>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<i32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "plane {width}x{height} needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Extends the plane to `width` x `height` by replicating the last column and row.
    pub fn pad_to(&self, width: usize, height: usize) -> Plane {
        debug_assert!(width >= self.width && height >= self.height);
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            let row = &self.data[y.min(self.height - 1) * self.width..][..self.width];
            data.extend_from_slice(row);
            let last = row[self.width - 1];
            data.extend(std::iter::repeat_n(last, width - self.width));
        }
        Plane {
            width,
            height,
            data,
        }
    }

    pub fn crop(&self, width: usize, height: usize) -> Plane {
        let mut data = Vec::with_capacity(width * height);
        for row in self.data.chunks_exact(self.width).take(height) {
            data.extend_from_slice(&row[..width]);
        }
        Plane {
            width,
            height,
            data,
        }
    }
}

/// Geometry of one sub-band inside the Mallat buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandInfo {
    pub id: usize,
    pub name: &'static str,
    pub horiz_level: usize,
    pub vert_level: usize,
    pub x0: usize,
    pub y0: usize,
    pub width: usize,
    pub height: usize,
}

impl BandInfo {
    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Band rows that belong to one precinct of `HEIGHT_ALIGN` image lines.
    pub fn rows_per_precinct(&self) -> usize {
        1 << (VERTICAL_LEVELS - self.vert_level)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubbandLayout {
    width: usize,
    height: usize,
    bands: [BandInfo; NUM_BANDS],
}

impl SubbandLayout {
    /// Layout for an aligned plane of `width` x `height`.
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width < WIDTH_ALIGN || height < HEIGHT_ALIGN {
            return Err(Error::InvalidImage(format!(
                "plane {width}x{height} is below the {WIDTH_ALIGN}x{HEIGHT_ALIGN} minimum"
            )));
        }
        if width % WIDTH_ALIGN != 0 || height % HEIGHT_ALIGN != 0 {
            return Err(Error::InvalidImage(format!(
                "plane {width}x{height} is not a multiple of {WIDTH_ALIGN}x{HEIGHT_ALIGN}"
            )));
        }
        let (w, h) = (width, height);
        let band = |id: usize, hl, vl, x0, y0, bw, bh| BandInfo {
            id,
            name: BAND_NAMES[id],
            horiz_level: hl,
            vert_level: vl,
            x0,
            y0,
            width: bw,
            height: bh,
        };
        let bands = [
            band(0, 5, 2, 0, 0, w / 32, h / 4),
            band(1, 5, 2, w / 32, 0, w / 32, h / 4),
            band(2, 4, 2, w / 16, 0, w / 16, h / 4),
            band(3, 3, 2, w / 8, 0, w / 8, h / 4),
            band(4, 2, 2, w / 4, 0, w / 4, h / 4),
            band(5, 2, 2, 0, h / 4, w / 4, h / 4),
            band(6, 2, 2, w / 4, h / 4, w / 4, h / 4),
            band(7, 1, 1, w / 2, 0, w / 2, h / 2),
            band(8, 1, 1, 0, h / 2, w / 2, h / 2),
            band(9, 1, 1, w / 2, h / 2, w / 2, h / 2),
        ];
        Ok(Self {
            width,
            height,
            bands,
        })
    }

    /// Layout for an arbitrary image size after padding to alignment.
    pub fn for_image(width: usize, height: usize) -> Result<Self> {
        let (pw, ph) = padded_size(width, height);
        Self::new(pw, ph)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bands(&self) -> &[BandInfo; NUM_BANDS] {
        &self.bands
    }

    pub fn band(&self, id: usize) -> &BandInfo {
        &self.bands[id]
    }

    pub fn num_precincts(&self) -> usize {
        self.height / HEIGHT_ALIGN
    }
}

pub fn padded_size(width: usize, height: usize) -> (usize, usize) {
    (
        width.max(1).div_ceil(WIDTH_ALIGN) * WIDTH_ALIGN,
        height.max(1).div_ceil(HEIGHT_ALIGN) * HEIGHT_ALIGN,
    )
}

/// Per-band coefficient arrays, each row-major with the band's own width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubbandSet {
    pub layout: SubbandLayout,
    pub coefficients: Vec<Vec<i32>>,
}

impl SubbandSet {
    pub fn zeros(layout: SubbandLayout) -> Self {
        let coefficients = layout.bands().iter().map(|b| vec![0; b.len()]).collect();
        Self {
            layout,
            coefficients,
        }
    }

    pub fn band(&self, id: usize) -> &[i32] {
        &self.coefficients[id]
    }

    pub fn band_mut(&mut self, id: usize) -> &mut [i32] {
        &mut self.coefficients[id]
    }

    /// Largest coefficient magnitude over all bands.
    pub fn max_magnitude(&self) -> u32 {
        self.coefficients
            .iter()
            .flatten()
            .map(|c| c.unsigned_abs())
            .max()
            .unwrap_or(0)
    }

    fn to_mallat(&self) -> Result<Vec<i32>> {
        let w = self.layout.width;
        let mut buf = vec![0; w * self.layout.height];
        for (band, coeffs) in self.layout.bands.iter().zip(&self.coefficients) {
            if coeffs.len() != band.len() {
                return Err(Error::InvalidImage(format!(
                    "band {} holds {} coefficients, layout needs {}",
                    band.name,
                    coeffs.len(),
                    band.len()
                )));
            }
            for (y, row) in coeffs.chunks_exact(band.width).enumerate() {
                let start = (band.y0 + y) * w + band.x0;
                buf[start..start + band.width].copy_from_slice(row);
            }
        }
        Ok(buf)
    }

    fn from_mallat(layout: SubbandLayout, buf: &[i32]) -> Self {
        let w = layout.width;
        let coefficients = layout
            .bands
            .iter()
            .map(|band| {
                let mut c = Vec::with_capacity(band.len());
                for y in 0..band.height {
                    let start = (band.y0 + y) * w + band.x0;
                    c.extend_from_slice(&buf[start..start + band.width]);
                }
                c
            })
            .collect();
        Self {
            layout,
            coefficients,
        }
    }
}

/// Sample type the lifting steps run on: floor-rounded integers for the codec,
/// exact reals for measuring synthesis energy.
pub(crate) trait Lift: Copy + Default + Add<Output = Self> + Sub<Output = Self> {
    /// Predict step: floor((a + b) / 2).
    fn predict(a: Self, b: Self) -> Self;
    /// Update step: floor((a + b + 2) / 4).
    fn update(a: Self, b: Self) -> Self;
}

impl Lift for i32 {
    #[inline]
    fn predict(a: i32, b: i32) -> i32 {
        (a + b) >> 1
    }

    #[inline]
    fn update(a: i32, b: i32) -> i32 {
        (a + b + 2) >> 2
    }
}

impl Lift for f64 {
    #[inline]
    fn predict(a: f64, b: f64) -> f64 {
        (a + b) * 0.5
    }

    #[inline]
    fn update(a: f64, b: f64) -> f64 {
        (a + b) * 0.25
    }
}

/// One 5/3 analysis step with whole-sample symmetric extension.
/// `low` receives ceil(n/2) samples, `high` floor(n/2).
pub(crate) fn lift_forward<T: Lift>(x: &[T], low: &mut [T], high: &mut [T]) {
    let n = x.len();
    let nh = n / 2;
    if n == 1 {
        low[0] = x[0];
        return;
    }
    for i in 0..nh {
        let right = if 2 * i + 2 < n { x[2 * i + 2] } else { x[2 * i] };
        high[i] = x[2 * i + 1] - T::predict(x[2 * i], right);
    }
    for i in 0..n.div_ceil(2) {
        let left = high[i.saturating_sub(1)];
        let right = high[i.min(nh - 1)];
        low[i] = x[2 * i] + T::update(left, right);
    }
}

pub(crate) fn lift_inverse<T: Lift>(low: &[T], high: &[T], x: &mut [T]) {
    let n = x.len();
    let nh = n / 2;
    if n == 1 {
        x[0] = low[0];
        return;
    }
    for i in 0..n.div_ceil(2) {
        let left = high[i.saturating_sub(1)];
        let right = high[i.min(nh - 1)];
        x[2 * i] = low[i] - T::update(left, right);
    }
    for i in 0..nh {
        let right = if 2 * i + 2 < n { x[2 * i + 2] } else { x[2 * i] };
        x[2 * i + 1] = high[i] + T::predict(x[2 * i], right);
    }
}

struct Scratch<T> {
    line: Vec<T>,
    out: Vec<T>,
}

impl<T: Lift> Scratch<T> {
    fn new(len: usize) -> Self {
        Self {
            line: vec![T::default(); len],
            out: vec![T::default(); len],
        }
    }

    fn rows_forward(&mut self, buf: &mut [T], stride: usize, w: usize, h: usize) {
        for y in 0..h {
            let row = &mut buf[y * stride..y * stride + w];
            let (lo, hi) = self.out[..w].split_at_mut(w.div_ceil(2));
            lift_forward(row, lo, hi);
            row.copy_from_slice(&self.out[..w]);
        }
    }

    fn rows_inverse(&mut self, buf: &mut [T], stride: usize, w: usize, h: usize) {
        for y in 0..h {
            let row = &mut buf[y * stride..y * stride + w];
            let (lo, hi) = row.split_at(w.div_ceil(2));
            lift_inverse(lo, hi, &mut self.out[..w]);
            row.copy_from_slice(&self.out[..w]);
        }
    }

    fn cols_forward(&mut self, buf: &mut [T], stride: usize, w: usize, h: usize) {
        for x in 0..w {
            for y in 0..h {
                self.line[y] = buf[y * stride + x];
            }
            let (lo, hi) = self.out[..h].split_at_mut(h.div_ceil(2));
            lift_forward(&self.line[..h], lo, hi);
            for y in 0..h {
                buf[y * stride + x] = self.out[y];
            }
        }
    }

    fn cols_inverse(&mut self, buf: &mut [T], stride: usize, w: usize, h: usize) {
        for x in 0..w {
            for y in 0..h {
                self.line[y] = buf[y * stride + x];
            }
            let (lo, hi) = self.line[..h].split_at(h.div_ceil(2));
            lift_inverse(lo, hi, &mut self.out[..h]);
            for y in 0..h {
                buf[y * stride + x] = self.out[y];
            }
        }
    }
}

/// (region width, region height, vertical pass?) for each decomposition level.
fn level_regions(width: usize, height: usize) -> Vec<(usize, usize, bool)> {
    let mut levels = Vec::with_capacity(HORIZONTAL_LEVELS);
    let (mut w, mut h) = (width, height);
    for level in 0..HORIZONTAL_LEVELS {
        let vertical = level < VERTICAL_LEVELS;
        levels.push((w, h, vertical));
        w /= 2;
        if vertical {
            h /= 2;
        }
    }
    levels
}

fn forward_mallat<T: Lift>(buf: &mut [T], width: usize, height: usize) {
    let mut scratch = Scratch::new(width.max(height));
    for (w, h, vertical) in level_regions(width, height) {
        scratch.rows_forward(buf, width, w, h);
        if vertical {
            scratch.cols_forward(buf, width, w, h);
        }
    }
}

pub(crate) fn inverse_mallat<T: Lift>(buf: &mut [T], width: usize, height: usize) {
    let mut scratch = Scratch::new(width.max(height));
    for (w, h, vertical) in level_regions(width, height).into_iter().rev() {
        if vertical {
            scratch.cols_inverse(buf, width, w, h);
        }
        scratch.rows_inverse(buf, width, w, h);
    }
}

/// Decomposes an aligned plane into the ten sub-bands.
pub fn forward_dwt(plane: &Plane) -> Result<SubbandSet> {
    let layout = SubbandLayout::new(plane.width, plane.height)?;
    let mut buf = plane.data.clone();
    forward_mallat(&mut buf, plane.width, plane.height);
    Ok(SubbandSet::from_mallat(layout, &buf))
}

pub fn inverse_dwt(bands: &SubbandSet) -> Result<Plane> {
    let mut buf = bands.to_mallat()?;
    let (w, h) = (bands.layout.width, bands.layout.height);
    inverse_mallat(&mut buf, w, h);
    Plane::new(w, h, buf)
}

const GAIN_PROBE_WIDTH: usize = 1024;
const GAIN_PROBE_HEIGHT: usize = 64;

/// Squared L2 norm of the synthesis basis function of `band_id`.
///
/// Measured by inverting a unit impulse at the middle of the band with the
/// exact (non-rounding) lifting steps on a plane large enough that the basis
/// function does not reach the borders.
pub fn synthesis_gain(band_id: usize) -> f64 {
    let layout = SubbandLayout::new(GAIN_PROBE_WIDTH, GAIN_PROBE_HEIGHT).expect("aligned probe");
    let band = layout.band(band_id);
    impulse_energy(&layout, band_id, band.width / 2, band.height / 2, 1.0)
}

/// Energy of the reconstruction of a single coefficient `amplitude` at band
/// position (`x`, `y`).
pub fn impulse_energy(
    layout: &SubbandLayout,
    band_id: usize,
    x: usize,
    y: usize,
    amplitude: f64,
) -> f64 {
    let band = layout.band(band_id);
    assert!(x < band.width && y < band.height, "impulse outside band");
    let (w, h) = (layout.width, layout.height);
    let mut buf = vec![0.0f64; w * h];
    buf[(band.y0 + y) * w + band.x0 + x] = amplitude;
    inverse_mallat(&mut buf, w, h);
    buf.iter().map(|v| v * v).sum()
}
