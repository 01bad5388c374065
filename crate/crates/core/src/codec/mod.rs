//! Encoder, decoder and the bitstream container.
//!
//! Container layout (header fields little-endian, byte aligned):
//!
//! ```text
//! "XSTW"  version:u8  width:u16  height:u16  components:u8  precinct_height:u8
//! target_bpp:u16 (8.8 fixed point)
//! weight table: 30 x (gain:4 bits, priority:8 bits), bit packed (45 bytes)
//! precinct payloads, bit packed, back to back
//! ```

pub mod bits;
pub mod precinct;
pub mod quant;

pub use precinct::{allocate_rate, code_precinct, precinct_cost, Precinct};
pub use quant::{
    dequantize_band, quantize_band, truncation_position, PrecinctQuant, MAX_Q, MAX_R,
};

use bits::{BitReader, BitWriter};

use crate::dwt::{forward_dwt, inverse_dwt, Plane, SubbandLayout, SubbandSet, HEIGHT_ALIGN};
use crate::error::{Error, Result};
use crate::pixel::{rct_forward, rct_inverse, RasterImage};
use crate::weights::{WeightTable, NUM_ENTRIES};

pub const MAGIC: &[u8; 4] = b"XSTW";
pub const VERSION: u8 = 1;
const TABLE_BYTES: usize = NUM_ENTRIES * 12 / 8;
pub const HEADER_BYTES: usize = 4 + 1 + 2 + 2 + 1 + 1 + 2 + TABLE_BYTES;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub width: usize,
    pub height: usize,
    pub components: usize,
    pub precinct_height: usize,
    /// Target rate in 1/256 bpp.
    pub target_bpp_fixed: u16,
    pub table: WeightTable,
}

impl Header {
    pub fn target_bpp(&self) -> f64 {
        self.target_bpp_fixed as f64 / 256.0
    }

    fn write(&self, out: &mut Vec<u8>) {
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.extend_from_slice(&(self.width as u16).to_le_bytes());
        out.extend_from_slice(&(self.height as u16).to_le_bytes());
        out.push(self.components as u8);
        out.push(self.precinct_height as u8);
        out.extend_from_slice(&self.target_bpp_fixed.to_le_bytes());
        let mut table = BitWriter::new();
        for (&g, &p) in self.table.gains().iter().zip(self.table.priorities()) {
            table.put(g as u32, 4);
            table.put(p as u32, 8);
        }
        out.extend_from_slice(&table.into_bytes());
    }

    fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(Error::Bitstream("bad magic".into()));
        }
        if bytes.len() < HEADER_BYTES {
            return Err(Error::Bitstream("truncated header".into()));
        }
        if bytes[4] != VERSION {
            return Err(Error::Bitstream(format!("unsupported version {}", bytes[4])));
        }
        let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
        let width = u16_at(5) as usize;
        let height = u16_at(7) as usize;
        let components = bytes[9] as usize;
        let precinct_height = bytes[10] as usize;
        let target_bpp_fixed = u16_at(11);
        if width == 0 || height == 0 {
            return Err(Error::Bitstream("zero image dimension".into()));
        }
        if components != 1 && components != 3 {
            return Err(Error::Bitstream(format!("unsupported component count {components}")));
        }
        if precinct_height != HEIGHT_ALIGN {
            return Err(Error::Bitstream(format!(
                "unsupported precinct height {precinct_height}"
            )));
        }
        let mut reader = BitReader::new(&bytes[13..HEADER_BYTES]);
        let mut gains = [0u8; NUM_ENTRIES];
        let mut priorities = [0u8; NUM_ENTRIES];
        for (g, p) in gains.iter_mut().zip(priorities.iter_mut()) {
            *g = reader.get(4)? as u8;
            *p = reader.get(8)? as u8;
        }
        let table = WeightTable::new(gains, priorities)
            .map_err(|e| Error::Bitstream(format!("header weight table: {e}")))?;
        Ok(Self {
            width,
            height,
            components,
            precinct_height,
            target_bpp_fixed,
            table,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitstream {
    pub header: Header,
    pub payload: Vec<u8>,
    /// Exact number of payload bits; byte padding excluded.
    pub payload_bits: u64,
}

impl Bitstream {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_BYTES + self.payload.len());
        self.header.write(&mut out);
        out.extend_from_slice(&self.payload);
        out
    }

    /// Parses the header; the payload is validated by [`decode`].
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let header = Header::parse(bytes)?;
        let payload = bytes[HEADER_BYTES..].to_vec();
        let payload_bits = payload.len() as u64 * 8;
        Ok(Self {
            header,
            payload,
            payload_bits,
        })
    }

    /// Payload bits per pixel of the original image, header excluded.
    pub fn achieved_bpp(&self) -> f64 {
        self.payload_bits as f64 / (self.header.width * self.header.height) as f64
    }
}

/// Total payload budget for an image.
pub fn budget_bits(width: usize, height: usize, target_bpp: f64) -> u64 {
    ((width * height) as f64 * target_bpp).floor() as u64
}

fn target_bpp_fixed(target_bpp: f64) -> Result<u16> {
    if !(target_bpp.is_finite() && target_bpp > 0.0 && target_bpp < 256.0) {
        return Err(Error::InvalidImage(format!(
            "target bpp {target_bpp} must lie in (0, 256)"
        )));
    }
    Ok((target_bpp * 256.0).round().clamp(1.0, u16::MAX as f64) as u16)
}

/// An image after color transform, padding and wavelet analysis, cut into
/// precincts. Independent of the weight table, so one preparation serves
/// any number of encodes.
#[derive(Debug, Clone)]
pub struct PreparedImage {
    width: usize,
    height: usize,
    components: usize,
    layout: SubbandLayout,
    precincts: Vec<Precinct>,
}

pub fn prepare(img: &RasterImage) -> Result<PreparedImage> {
    let (width, height) = (img.width(), img.height());
    if width > u16::MAX as usize || height > u16::MAX as usize {
        return Err(Error::InvalidImage(format!(
            "{width}x{height} exceeds the 65535 pixel limit"
        )));
    }
    let layout = SubbandLayout::for_image(width, height)?;
    let planes: Vec<Vec<i32>> = if img.channels() == 3 {
        let mut planes = vec![Vec::with_capacity(width * height); 3];
        for px in img.samples().chunks_exact(3) {
            let (y, cb, cr) = rct_forward(px[0] as i32, px[1] as i32, px[2] as i32);
            planes[0].push(y);
            planes[1].push(cb);
            planes[2].push(cr);
        }
        planes
    } else {
        img.to_planes()
    };
    let sets = planes
        .into_iter()
        .map(|data| {
            let plane = Plane::new(width, height, data)?.pad_to(layout.width(), layout.height());
            forward_dwt(&plane)
        })
        .collect::<Result<Vec<SubbandSet>>>()?;
    let precincts = (0..layout.num_precincts())
        .map(|i| Precinct::from_subbands(i, &sets))
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedImage {
        width,
        height,
        components: img.channels(),
        layout,
        precincts,
    })
}

impl PreparedImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn layout(&self) -> &SubbandLayout {
        &self.layout
    }

    pub fn precincts(&self) -> &[Precinct] {
        &self.precincts
    }

    /// Per-precinct (Q, R) for a budget; bits a precinct leaves unused are
    /// handed on to the following ones.
    pub fn allocate(&self, w: &WeightTable, target_bpp: f64) -> Result<Vec<PrecinctQuant>> {
        target_bpp_fixed(target_bpp)?;
        let total = budget_bits(self.width, self.height, target_bpp) as u128;
        let n = self.precincts.len() as u128;
        let mut spent = 0u64;
        let mut quants = Vec::with_capacity(self.precincts.len());
        for (i, p) in self.precincts.iter().enumerate() {
            let share = (total * (i as u128 + 1) / n) as u64;
            let quant = allocate_rate(p, w, share.saturating_sub(spent))?;
            spent += precinct_cost(p, quant, w);
            quants.push(quant);
        }
        Ok(quants)
    }

    pub fn encode(&self, w: &WeightTable, target_bpp: f64) -> Result<Bitstream> {
        let quants = self.allocate(w, target_bpp)?;
        let mut out = BitWriter::new();
        for (p, &quant) in self.precincts.iter().zip(&quants) {
            code_precinct(p, quant, w, &mut out);
        }
        Ok(Bitstream {
            header: Header {
                width: self.width,
                height: self.height,
                components: self.components,
                precinct_height: HEIGHT_ALIGN,
                target_bpp_fixed: target_bpp_fixed(target_bpp)?,
                table: w.clone(),
            },
            payload_bits: out.bit_len(),
            payload: out.into_bytes(),
        })
    }
}

pub fn encode(img: &RasterImage, w: &WeightTable, target_bpp: f64) -> Result<Bitstream> {
    prepare(img)?.encode(w, target_bpp)
}

/// Reconstructs the image from the bitstream alone. Samples pushed outside
/// [0, 255] by quantization are clamped.
pub fn decode(bs: &Bitstream) -> Result<RasterImage> {
    let h = &bs.header;
    let layout = SubbandLayout::for_image(h.width, h.height)
        .map_err(|e| Error::Bitstream(e.to_string()))?;
    let mut sets = vec![SubbandSet::zeros(layout.clone()); h.components];
    let mut input = BitReader::new(&bs.payload);
    for i in 0..layout.num_precincts() {
        precinct::decode_precinct(&mut input, i, &h.table, &mut sets)?;
    }
    let planes = sets
        .iter()
        .map(|set| Ok(inverse_dwt(set)?.crop(h.width, h.height).data))
        .collect::<Result<Vec<_>>>()?;
    let n = h.width * h.height;
    let clamp = |v: i32| v.clamp(0, 255) as u8;
    let samples = if h.components == 3 {
        let mut samples = Vec::with_capacity(n * 3);
        for i in 0..n {
            let (r, g, b) = rct_inverse(planes[0][i], planes[1][i], planes[2][i]);
            samples.extend([clamp(r), clamp(g), clamp(b)]);
        }
        samples
    } else {
        planes[0].iter().map(|&v| clamp(v)).collect()
    };
    RasterImage::new(h.width, h.height, h.components, samples)
}

pub fn decode_bytes(bytes: &[u8]) -> Result<RasterImage> {
    decode(&Bitstream::from_bytes(bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::default_table;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noisy_gradient(w: usize, h: usize, channels: usize, seed: u64) -> RasterImage {
        gradient_with_noise(w, h, channels, seed, 20)
    }

    fn gradient_with_noise(w: usize, h: usize, channels: usize, seed: u64, noise: i32) -> RasterImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..w * h * channels)
            .map(|i| {
                let px = i / channels;
                let base = ((px % w) * 200 / w + (px / w) * 50 / h) as i32;
                (base + rng.random_range(-noise..=noise)).clamp(0, 255) as u8
            })
            .collect();
        RasterImage::new(w, h, channels, samples).unwrap()
    }

    #[test]
    fn lossless_at_generous_rate() {
        // padding inflates the coded area of small images, so they get more room
        for (w, h, c, bpp) in [(64, 32, 3, 16.0), (50, 13, 1, 32.0), (33, 7, 3, 64.0), (1, 1, 1, 255.0)] {
            let img = gradient_with_noise(w, h, c, 1, 3);
            let bs = encode(&img, &default_table(), bpp).unwrap();
            assert_eq!(decode(&bs).unwrap(), img, "{w}x{h}x{c}");
        }
    }

    #[test]
    fn bytes_roundtrip_and_header_table() {
        let img = noisy_gradient(64, 32, 3, 2);
        let table = crate::weights::vector_to_table(&crate::weights::WeightVector(
            (0..30).map(|i| (i as f64 * 0.37) % 7.0).collect(),
        ))
        .unwrap();
        let bs = encode(&img, &table, 2.0).unwrap();
        let parsed = Bitstream::from_bytes(&bs.to_bytes()).unwrap();
        assert_eq!(parsed.header, bs.header);
        assert_eq!(parsed.header.table, table);
        assert_eq!(parsed.header.target_bpp(), 2.0);
        assert_eq!(decode(&parsed).unwrap(), decode(&bs).unwrap());
    }

    #[test]
    fn payload_respects_budget() {
        let img = noisy_gradient(128, 64, 3, 3);
        for bpp in [0.5, 1.0, 3.0, 5.0] {
            let bs = encode(&img, &default_table(), bpp).unwrap();
            assert!(bs.payload_bits <= budget_bits(128, 64, bpp), "bpp {bpp}");
        }
    }

    #[test]
    fn bad_magic_and_truncation() {
        let img = noisy_gradient(64, 32, 3, 4);
        let mut bytes = encode(&img, &default_table(), 3.0).unwrap().to_bytes();
        let good = bytes.clone();
        bytes[0] ^= 0xFF;
        assert!(decode_bytes(&bytes).unwrap_err().to_string().contains("bad magic"));
        let cut = &good[..good.len() / 2];
        assert!(decode_bytes(cut).unwrap_err().to_string().contains("truncated"));
        assert!(decode_bytes(&good[..20]).is_err());
    }

    #[test]
    fn rejects_bad_rate() {
        let img = noisy_gradient(32, 4, 1, 5);
        assert!(encode(&img, &default_table(), 0.0).is_err());
        assert!(encode(&img, &default_table(), f64::NAN).is_err());
    }

    #[test]
    fn infeasible_rate_is_reported() {
        let img = noisy_gradient(64, 32, 3, 6);
        assert!(matches!(
            encode(&img, &default_table(), 0.01),
            Err(Error::BudgetInfeasible { .. })
        ));
    }
}
