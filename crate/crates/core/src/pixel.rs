//! Raster images, binary PGM/PPM I/O and the reversible color transform.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// An 8-bit interleaved raster, rows top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, samples: Vec<u8>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!(
                "channels must be 1 or 3, got {channels}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage("empty image".into()));
        }
        if samples.len() != width * height * channels {
            return Err(Error::InvalidImage(format!(
                "expected {} samples for {width}x{height}x{channels}, got {}",
                width * height * channels,
                samples.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[u8] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [u8] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<u8> {
        self.samples
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let i = (y * self.width + x) * self.channels;
        &self.samples[i..i + self.channels]
    }

    /// Splits the interleaved samples into one `i32` plane per channel.
    pub fn to_planes(&self) -> Vec<Vec<i32>> {
        let n = self.width * self.height;
        let mut planes = vec![Vec::with_capacity(n); self.channels];
        for px in self.samples.chunks_exact(self.channels) {
            for (plane, &s) in planes.iter_mut().zip(px) {
                plane.push(s as i32);
            }
        }
        planes
    }
}

/// Three signed planes (Y, Cb, Cr) of equal size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanarImageI32 {
    pub width: usize,
    pub height: usize,
    pub planes: [Vec<i32>; 3],
}

/// Per-pixel class ids, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    labels: Vec<u8>,
    num_classes: usize,
}

impl LabelMap {
    /// Builds a map whose class count is `max label + 1`.
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "label map of {width}x{height} needs {} labels, got {}",
                width * height,
                labels.len()
            )));
        }
        let num_classes = labels.iter().copied().max().map_or(0, |m| m as usize + 1);
        Ok(Self {
            width,
            height,
            labels,
            num_classes,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }
}

/// Parses a binary PGM (P5) or PPM (P6) with maxval 255.
pub fn decode_pnm(data: &[u8]) -> Result<RasterImage> {
    let mut pos = 0;
    let magic = next_token(data, &mut pos)?;
    let channels = match magic {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(Error::ImageFormat(format!(
                "unsupported magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = parse_header_number(next_token(data, &mut pos)?, "width")?;
    let height = parse_header_number(next_token(data, &mut pos)?, "height")?;
    let maxval = parse_header_number(next_token(data, &mut pos)?, "maxval")?;
    if maxval != 255 {
        return Err(Error::ImageFormat(format!(
            "max value must be 255, got {maxval}"
        )));
    }
    if width == 0 || height == 0 {
        return Err(Error::ImageFormat("zero image dimension".into()));
    }
    // exactly one whitespace byte separates the header from the raster
    match data.get(pos) {
        Some(c) if c.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::ImageFormat("missing raster separator".into())),
    }
    let needed = width * height * channels;
    let payload = &data[pos..];
    if payload.len() < needed {
        return Err(Error::ImageFormat("truncated payload".into()));
    }
    RasterImage::new(width, height, channels, payload[..needed].to_vec())
}

pub fn encode_pnm(img: &RasterImage) -> Vec<u8> {
    let magic = if img.channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    out.extend_from_slice(&img.samples);
    out
}

fn next_token<'a>(data: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    loop {
        match data.get(*pos) {
            Some(b'#') => {
                while let Some(&c) = data.get(*pos) {
                    *pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            }
            Some(c) if c.is_ascii_whitespace() => *pos += 1,
            Some(_) => break,
            None => return Err(Error::ImageFormat("truncated header".into())),
        }
    }
    let start = *pos;
    while let Some(c) = data.get(*pos) {
        if c.is_ascii_whitespace() {
            break;
        }
        *pos += 1;
    }
    Ok(&data[start..*pos])
}

fn parse_header_number(token: &[u8], what: &str) -> Result<usize> {
    std::str::from_utf8(token)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| {
            Error::ImageFormat(format!(
                "bad {what} field {:?}",
                String::from_utf8_lossy(token)
            ))
        })
}

pub fn load_image(path: impl AsRef<Path>) -> Result<RasterImage> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pnm(&data)
}

pub fn store_image(img: &RasterImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode_pnm(img))
        .map_err(|e| Error::io(path, e))
}

/// Loads a P5 file whose gray values are class ids.
pub fn load_label_map(path: impl AsRef<Path>) -> Result<LabelMap> {
    let img = load_image(path)?;
    if img.channels != 1 {
        return Err(Error::ImageFormat(
            "label maps must be single-channel PGM".into(),
        ));
    }
    LabelMap::new(img.width, img.height, img.samples)
}

pub fn store_label_map(map: &LabelMap, path: impl AsRef<Path>) -> Result<()> {
    let img = RasterImage::new(map.width, map.height, 1, map.labels.clone())?;
    store_image(&img, path)
}

/// Forward reversible color transform: floor-mean luma, green-difference chroma.
#[inline]
pub fn rct_forward(r: i32, g: i32, b: i32) -> (i32, i32, i32) {
    ((r + 2 * g + b) >> 2, b - g, r - g)
}

#[inline]
pub fn rct_inverse(y: i32, cb: i32, cr: i32) -> (i32, i32, i32) {
    let g = y - ((cb + cr) >> 2);
    (cr + g, g, cb + g)
}

pub fn rgb_to_ycbcr_reversible(img: &RasterImage) -> Result<PlanarImageI32> {
    if img.channels != 3 {
        return Err(Error::InvalidImage(format!(
            "color transform needs 3 channels, got {}",
            img.channels
        )));
    }
    let n = img.width * img.height;
    let mut planes = [
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    ];
    for px in img.samples.chunks_exact(3) {
        let (y, cb, cr) = rct_forward(px[0] as i32, px[1] as i32, px[2] as i32);
        planes[0].push(y);
        planes[1].push(cb);
        planes[2].push(cr);
    }
    Ok(PlanarImageI32 {
        width: img.width,
        height: img.height,
        planes,
    })
}

pub fn ycbcr_to_rgb_reversible(planes: &PlanarImageI32) -> Result<RasterImage> {
    let n = planes.width * planes.height;
    if planes.planes.iter().any(|p| p.len() != n) {
        return Err(Error::InvalidImage("plane sizes differ".into()));
    }
    let mut samples = Vec::with_capacity(n * 3);
    for i in 0..n {
        let (r, g, b) = rct_inverse(planes.planes[0][i], planes.planes[1][i], planes.planes[2][i]);
        for v in [r, g, b] {
            if !(0..=255).contains(&v) {
                return Err(Error::InvalidImage(format!(
                    "reconstructed sample {v} at pixel {i} is outside [0, 255]"
                )));
            }
            samples.push(v as u8);
        }
    }
    RasterImage::new(planes.width, planes.height, 3, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_p6() {
        let mut data = b"P6\n2 1\n255\n".to_vec();
        data.extend_from_slice(&[255, 0, 0, 0, 0, 255]);
        let img = decode_pnm(&data).unwrap();
        assert_eq!(img.width(), 2);
        assert_eq!(img.height(), 1);
        assert_eq!(img.channels(), 3);
        assert_eq!(img.samples(), &[255, 0, 0, 0, 0, 255]);
    }

    #[test]
    fn parses_single_pixel_p5_with_comment() {
        let mut data = b"P5\n# made by hand\n1 1\n255\n".to_vec();
        data.push(0);
        let img = decode_pnm(&data).unwrap();
        assert_eq!((img.width(), img.height(), img.channels()), (1, 1, 1));
        assert_eq!(img.samples(), &[0]);
    }

    #[test]
    fn rejects_truncated_payload() {
        let mut data = b"P6 2 2 255\n".to_vec();
        data.extend_from_slice(&[0; 9]);
        let err = decode_pnm(&data).unwrap_err();
        assert!(err.to_string().contains("truncated payload"), "{err}");
    }

    #[test]
    fn rejects_other_maxval() {
        let data = b"P5 1 1 65535\n\0\0".to_vec();
        assert!(decode_pnm(&data).unwrap_err().to_string().contains("255"));
    }

    #[test]
    fn rejects_ascii_variants() {
        assert!(decode_pnm(b"P2 1 1 255\n0").is_err());
    }

    #[test]
    fn store_writes_p5_and_p6() {
        let dir = tempfile::tempdir().unwrap();
        let gray = RasterImage::filled(3, 2, 1, 7).unwrap();
        let color = RasterImage::filled(3, 2, 3, 9).unwrap();
        store_image(&gray, dir.path().join("g.pgm")).unwrap();
        store_image(&color, dir.path().join("c.ppm")).unwrap();
        assert!(fs::read(dir.path().join("g.pgm")).unwrap().starts_with(b"P5"));
        assert!(fs::read(dir.path().join("c.ppm")).unwrap().starts_with(b"P6"));
        assert_eq!(load_image(dir.path().join("g.pgm")).unwrap(), gray);
        assert_eq!(load_image(dir.path().join("c.ppm")).unwrap(), color);
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_image("/nonexistent/x.ppm"),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn label_map_class_count() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.pgm");
        store_image(&RasterImage::new(2, 2, 1, vec![0, 1, 1, 2]).unwrap(), &p).unwrap();
        assert_eq!(load_label_map(&p).unwrap().num_classes(), 3);
        store_image(&RasterImage::filled(2, 2, 1, 0).unwrap(), &p).unwrap();
        assert_eq!(load_label_map(&p).unwrap().num_classes(), 1);
    }

    #[test]
    fn rct_known_values() {
        assert_eq!(rct_forward(255, 0, 0), (63, 0, 255));
        assert_eq!(rct_forward(12, 200, 77), (122, -123, -188));
        assert_eq!(rct_inverse(63, 0, 255), (255, 0, 0));
        for v in [0, 1, 128, 255] {
            assert_eq!(rct_forward(v, v, v), (v, 0, 0));
            assert_eq!(rct_inverse(v, 0, 0), (v, v, v));
        }
    }

    #[test]
    fn inverse_rejects_foreign_planes() {
        let planes = PlanarImageI32 {
            width: 1,
            height: 1,
            planes: [vec![255], vec![255], vec![255]],
        };
        assert!(ycbcr_to_rgb_reversible(&planes).is_err());
    }

    #[test]
    fn gray_replicated_image_has_zero_chroma() {
        let samples: Vec<u8> = (0..64u8).flat_map(|v| [v * 4, v * 4, v * 4]).collect();
        let img = RasterImage::new(8, 8, 3, samples).unwrap();
        let planes = rgb_to_ycbcr_reversible(&img).unwrap();
        assert!(planes.planes[1].iter().all(|&c| c == 0));
        assert!(planes.planes[2].iter().all(|&c| c == 0));
    }

    #[test]
    fn rct_on_gray_input_errors() {
        let img = RasterImage::filled(2, 2, 1, 0).unwrap();
        assert!(rgb_to_ycbcr_reversible(&img).is_err());
    }

    proptest! {
        #[test]
        fn rct_roundtrip(r in 0..=255i32, g in 0..=255i32, b in 0..=255i32) {
            let (y, cb, cr) = rct_forward(r, g, b);
            prop_assert!((0..=255).contains(&y));
            prop_assert_eq!(rct_inverse(y, cb, cr), (r, g, b));
        }

        #[test]
        fn pnm_roundtrip(channels in prop::sample::select(vec![1usize, 3]),
                         seed in prop::collection::vec(any::<u8>(), 48)) {
            let img = RasterImage::new(4, 4, channels, seed[..16 * channels].to_vec()).unwrap();
            prop_assert_eq!(decode_pnm(&encode_pnm(&img)).unwrap(), img);
        }
    }
}
