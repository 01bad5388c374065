//! Precinct partitioning, coefficient coding and per-precinct rate allocation.
//!
//! A precinct covers four image lines: one row of every level-2 band and two
//! rows of every level-1 band, for each coded component. Its payload is
//!
//! ```text
//! Q (4 bits) R (5 bits)
//! for each component, for each band (layout order), for each band row:
//!   for each run of 8 groups of 4 coefficients:
//!     1 bit   run is significant
//!     if significant, for each group:
//!       unary(zigzag(m - m_prev))   retained bitplane count m = max(M - T, 0)
//!       m magnitude bits per coefficient, MSB first
//!       1 sign bit per coefficient with a nonzero retained magnitude
//! ```
//!
//! `M` is the bit length of the largest magnitude in the group and `T` the
//! band's truncation position. `m_prev` starts at 0 on every band row and
//! is 0 after an insignificant run.

use std::ops::Range;

use super::bits::{BitReader, BitWriter};
use super::quant::{
    bit_length, dequantize, truncation_position, PrecinctQuant, MAX_BITPLANES, MAX_Q, MAX_R,
};
use crate::dwt::{BandInfo, SubbandSet, HEIGHT_ALIGN, NUM_BANDS};
use crate::error::{Error, Result};
use crate::weights::WeightTable;

pub const GROUP_SIZE: usize = 4;
/// Groups covered by one significance flag.
pub const SIGNIFICANCE_RUN: usize = 8;
pub const PRECINCT_HEADER_BITS: u64 = 4 + 5;

const NUM_T: usize = MAX_BITPLANES as usize + 1;

#[inline]
fn zigzag(delta: i32) -> u32 {
    if delta >= 0 {
        (delta as u32) << 1
    } else {
        ((-delta) as u32) * 2 - 1
    }
}

#[inline]
fn unzigzag(z: u32) -> i32 {
    if z & 1 == 0 {
        (z >> 1) as i32
    } else {
        -(z.div_ceil(2) as i32)
    }
}

/// The rows of one band (of one component) that fall inside a precinct.
#[derive(Debug, Clone)]
pub struct PrecinctBand {
    width: usize,
    coeffs: Vec<i32>,
    /// Bitplane count per group, row by row.
    group_bits: Vec<u8>,
    /// Exact coded size at every truncation position.
    costs: [u64; NUM_T],
}

impl PrecinctBand {
    pub fn new(width: usize, coeffs: Vec<i32>) -> Result<Self> {
        debug_assert!(width > 0 && coeffs.len() % width == 0);
        let mut group_bits = Vec::with_capacity(coeffs.len().div_ceil(GROUP_SIZE));
        let mut hist = [0u64; 33];
        for row in coeffs.chunks_exact(width) {
            for group in row.chunks(GROUP_SIZE) {
                let mut m = 0;
                for &c in group {
                    let len = bit_length(c.unsigned_abs());
                    hist[len as usize] += 1;
                    m = m.max(len);
                }
                if m > MAX_BITPLANES {
                    return Err(Error::InvalidImage(format!(
                        "coefficient needs {m} bitplanes, at most {MAX_BITPLANES} can be coded"
                    )));
                }
                group_bits.push(m);
            }
        }
        let mut band = Self {
            width,
            coeffs,
            group_bits,
            costs: [0; NUM_T],
        };
        // sign bits at truncation t: coefficients whose bit length exceeds t
        let mut signs = [0u64; NUM_T];
        let mut above = 0;
        for t in (0..NUM_T).rev() {
            above += hist[t + 1];
            signs[t] = above;
        }
        for t in 0..NUM_T {
            band.costs[t] = band.count_and_magnitude_bits(t as u8) + signs[t];
        }
        Ok(band)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows(&self) -> usize {
        self.coeffs.len() / self.width
    }

    pub fn coefficients(&self) -> &[i32] {
        &self.coeffs
    }

    pub fn cost(&self, t: u8) -> u64 {
        self.costs[t as usize]
    }

    fn groups_per_row(&self) -> usize {
        self.width.div_ceil(GROUP_SIZE)
    }

    fn group_len(&self, g: usize) -> u64 {
        (self.width - g * GROUP_SIZE).min(GROUP_SIZE) as u64
    }

    fn count_and_magnitude_bits(&self, t: u8) -> u64 {
        let gpr = self.groups_per_row();
        let mut bits = 0u64;
        for row in self.group_bits.chunks_exact(gpr) {
            let mut prev = 0i32;
            for (run_idx, run) in row.chunks(SIGNIFICANCE_RUN).enumerate() {
                bits += 1;
                if run.iter().all(|&m| m <= t) {
                    prev = 0;
                    continue;
                }
                for (k, &mb) in run.iter().enumerate() {
                    let m = mb.saturating_sub(t) as i32;
                    bits += zigzag(m - prev) as u64 + 1;
                    bits += m as u64 * self.group_len(run_idx * SIGNIFICANCE_RUN + k);
                    prev = m;
                }
            }
        }
        bits
    }

    fn write(&self, t: u8, out: &mut BitWriter) {
        let gpr = self.groups_per_row();
        for (row_idx, row_bits) in self.group_bits.chunks_exact(gpr).enumerate() {
            let row = &self.coeffs[row_idx * self.width..][..self.width];
            let mut prev = 0i32;
            for (run_idx, run) in row_bits.chunks(SIGNIFICANCE_RUN).enumerate() {
                let significant = run.iter().any(|&m| m > t);
                out.put_bit(significant);
                if !significant {
                    prev = 0;
                    continue;
                }
                for (k, &mb) in run.iter().enumerate() {
                    let g = run_idx * SIGNIFICANCE_RUN + k;
                    let m = mb.saturating_sub(t);
                    out.put_unary(zigzag(m as i32 - prev));
                    prev = m as i32;
                    if m == 0 {
                        continue;
                    }
                    let group = &row[g * GROUP_SIZE..(g * GROUP_SIZE + GROUP_SIZE).min(self.width)];
                    for &c in group {
                        out.put(c.unsigned_abs() >> t, m as u32);
                    }
                    for &c in group {
                        if c.unsigned_abs() >> t != 0 {
                            out.put_bit(c < 0);
                        }
                    }
                }
            }
        }
    }
}

/// Reads one band's precinct rows, writing dequantized values into `dst`
/// (row-major with the band's width).
fn read_band(input: &mut BitReader, width: usize, t: u8, dst: &mut [i32]) -> Result<()> {
    let gpr = width.div_ceil(GROUP_SIZE);
    let mut mags = [0u32; GROUP_SIZE];
    for row in dst.chunks_exact_mut(width) {
        let mut prev = 0i32;
        for run_start in (0..gpr).step_by(SIGNIFICANCE_RUN) {
            let run_end = (run_start + SIGNIFICANCE_RUN).min(gpr);
            if !input.bit()? {
                prev = 0;
                for g in run_start..run_end {
                    row[g * GROUP_SIZE..(g * GROUP_SIZE + GROUP_SIZE).min(width)].fill(0);
                }
                continue;
            }
            for g in run_start..run_end {
                let m = prev + unzigzag(input.unary(2 * MAX_BITPLANES as u32)?);
                if !(0..=MAX_BITPLANES as i32 - t as i32).contains(&m) {
                    return Err(Error::Bitstream(format!(
                        "bitplane count {m} invalid at truncation {t}"
                    )));
                }
                prev = m;
                let group = &mut row[g * GROUP_SIZE..(g * GROUP_SIZE + GROUP_SIZE).min(width)];
                if m == 0 {
                    group.fill(0);
                    continue;
                }
                let n = group.len();
                for mag in mags.iter_mut().take(n) {
                    *mag = input.get(m as u32)?;
                }
                for (dst, &mag) in group.iter_mut().zip(&mags) {
                    let negative = mag != 0 && input.bit()?;
                    *dst = dequantize(mag, negative, t);
                }
            }
        }
    }
    Ok(())
}

/// All coefficients of one four-line strip, for every coded component.
#[derive(Debug, Clone)]
pub struct Precinct {
    pub index: usize,
    /// Image lines covered, in padded plane coordinates.
    pub lines: Range<usize>,
    components: usize,
    /// Component-major, `NUM_BANDS` entries per component.
    bands: Vec<PrecinctBand>,
}

impl Precinct {
    /// Cuts precinct `index` out of the per-component sub-band sets.
    pub fn from_subbands(index: usize, sets: &[SubbandSet]) -> Result<Self> {
        let mut bands = Vec::with_capacity(sets.len() * NUM_BANDS);
        for set in sets {
            for info in set.layout.bands() {
                let rows = band_rows(info, index);
                let coeffs = set.band(info.id)[rows.start * info.width..rows.end * info.width].to_vec();
                bands.push(PrecinctBand::new(info.width, coeffs)?);
            }
        }
        Ok(Self {
            index,
            lines: index * HEIGHT_ALIGN..(index + 1) * HEIGHT_ALIGN,
            components: sets.len(),
            bands,
        })
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn band(&self, component: usize, band: usize) -> &PrecinctBand {
        &self.bands[component * NUM_BANDS + band]
    }

    fn truncations(&self, quant: PrecinctQuant, w: &WeightTable) -> impl Iterator<Item = (&PrecinctBand, u8)> + '_ {
        let w = w.clone();
        self.bands.iter().enumerate().map(move |(i, band)| {
            let (c, b) = (i / NUM_BANDS, i % NUM_BANDS);
            let t = truncation_position(quant.q, w.gain(c, b), w.priority(c, b), quant.r);
            (band, t)
        })
    }
}

/// Rows of `band` that belong to precinct `index`.
pub fn band_rows(band: &BandInfo, index: usize) -> Range<usize> {
    let rpp = band.rows_per_precinct();
    index * rpp..(index + 1) * rpp
}

/// Exact payload size of [`code_precinct`] without producing it.
pub fn precinct_cost(p: &Precinct, quant: PrecinctQuant, w: &WeightTable) -> u64 {
    let mut bits = PRECINCT_HEADER_BITS;
    for (i, band) in p.bands.iter().enumerate() {
        let (c, b) = (i / NUM_BANDS, i % NUM_BANDS);
        bits += band.cost(truncation_position(quant.q, w.gain(c, b), w.priority(c, b), quant.r));
    }
    bits
}

pub fn code_precinct(p: &Precinct, quant: PrecinctQuant, w: &WeightTable, out: &mut BitWriter) {
    out.put(quant.q as u32, 4);
    out.put(quant.r as u32, 5);
    for (band, t) in p.truncations(quant, w) {
        band.write(t, out);
    }
}

/// Chooses the (Q, R) that keeps the most information within `budget_bits`:
/// the smallest Q for which some R fits, then the largest R that fits at it.
pub fn allocate_rate(p: &Precinct, w: &WeightTable, budget_bits: u64) -> Result<PrecinctQuant> {
    for q in 0..=MAX_Q {
        if precinct_cost(p, PrecinctQuant::new(q, 0), w) > budget_bits {
            continue;
        }
        let r = (0..=MAX_R)
            .rev()
            .find(|&r| precinct_cost(p, PrecinctQuant::new(q, r), w) <= budget_bits)
            .expect("r = 0 fits");
        return Ok(PrecinctQuant::new(q, r));
    }
    Err(Error::BudgetInfeasible {
        needed: precinct_cost(p, PrecinctQuant::new(MAX_Q, 0), w),
        available: budget_bits,
    })
}

/// Decodes one precinct into `sets` (one per component), returning its (Q, R).
pub fn decode_precinct(
    input: &mut BitReader,
    index: usize,
    w: &WeightTable,
    sets: &mut [SubbandSet],
) -> Result<PrecinctQuant> {
    let q = input.get(4)? as u8;
    let r = input.get(5)? as u8;
    if r > MAX_R {
        return Err(Error::Bitstream(format!("refinement threshold {r} out of range")));
    }
    for (c, set) in sets.iter_mut().enumerate() {
        for b in 0..NUM_BANDS {
            let info = *set.layout.band(b);
            let rows = band_rows(&info, index);
            let t = truncation_position(q, w.gain(c, b), w.priority(c, b), r);
            let dst = &mut set.band_mut(b)[rows.start * info.width..rows.end * info.width];
            read_band(input, info.width, t, dst)?;
        }
    }
    Ok(PrecinctQuant::new(q, r))
}
