//! Truncation quantization of sub-band coefficients.

/// Largest truncation position and bitplane count.
pub const MAX_BITPLANES: u8 = 15;
pub const MAX_Q: u8 = 15;
/// Refinement threshold range is `0..=MAX_R`; `MAX_R` refines every entry.
pub const MAX_R: u8 = 30;

/// Precinct quantization and refinement chosen by rate allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PrecinctQuant {
    pub q: u8,
    pub r: u8,
}

impl PrecinctQuant {
    pub fn new(q: u8, r: u8) -> Self {
        debug_assert!(q <= MAX_Q && r <= MAX_R);
        Self { q, r }
    }
}

/// Refinement term for a band: bands ranked ahead of the threshold keep one
/// extra bitplane, so `r` enters with a negative sign.
#[inline]
pub fn refinement(priority: u8, threshold: u8) -> i32 {
    if priority < threshold {
        -1
    } else {
        0
    }
}

/// Number of least significant magnitude bits discarded in a band:
/// `clamp(Q - G + r, 0, 15)`.
#[inline]
pub fn truncation_position(q: u8, gain: u8, priority: u8, r: u8) -> u8 {
    (q as i32 - gain as i32 + refinement(priority, r)).clamp(0, MAX_BITPLANES as i32) as u8
}

/// Bit length of a magnitude (0 for 0).
#[inline]
pub fn bit_length(m: u32) -> u8 {
    (32 - m.leading_zeros()) as u8
}

/// Retained magnitude after dropping `t` LSBs.
#[inline]
pub fn quantize(c: i32, t: u8) -> u32 {
    c.unsigned_abs() >> t
}

/// Reconstruct a signed coefficient at the middle of its truncation interval.
#[inline]
pub fn dequantize(q: u32, negative: bool, t: u8) -> i32 {
    if q == 0 {
        return 0;
    }
    let m = if t == 0 {
        q
    } else {
        (q << t) + (1 << (t - 1))
    };
    if negative {
        -(m as i32)
    } else {
        m as i32
    }
}

/// Truncated band in stored form: retained magnitudes, signs kept only
/// for nonzero magnitudes.
pub fn quantize_band(coeffs: &[i32], t: u8) -> Vec<i32> {
    coeffs
        .iter()
        .map(|&c| {
            let q = quantize(c, t) as i32;
            if c < 0 {
                -q
            } else {
                q
            }
        })
        .collect()
}

pub fn dequantize_band(truncated: &[i32], t: u8) -> Vec<i32> {
    truncated
        .iter()
        .map(|&v| dequantize(v.unsigned_abs(), v < 0, t))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_examples() {
        // refined band keeps one more bit than Q - G
        assert_eq!(truncation_position(8, 3, 2, 5), 4);
        assert_eq!(truncation_position(8, 3, 5, 5), 5);
        assert_eq!(truncation_position(2, 5, 9, 3), 0);
        assert_eq!(truncation_position(15, 0, 0, 0), 15);
        assert_eq!(truncation_position(0, 0, 0, 30), 0);
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(13, 2), 0b11);
        assert_eq!(quantize_band(&[13, -13, 3, -3], 2), vec![3, -3, 0, 0]);
        assert_eq!(quantize_band(&[13, -7], 0), vec![13, -7]);
        assert_eq!(dequantize(0b11, false, 2), 14);
        assert_eq!(dequantize(0, true, 7), 0);
        assert_eq!(dequantize_band(&[3, -3, 0], 2), vec![14, -14, 0]);
        assert_eq!(dequantize_band(&[5, -9], 0), vec![5, -9]);
    }

    #[test]
    fn dequantized_value_stays_inside_interval() {
        for t in 1..=MAX_BITPLANES {
            for m in [1u32 << t, (1 << t) + 3, (7 << t) - 1] {
                let q = quantize(m as i32, t);
                let back = dequantize(q, false, t) as u32;
                assert!(back >> t == q, "t={t} m={m}");
            }
        }
    }

    #[test]
    fn higher_gain_never_truncates_more() {
        for q in 0..=MAX_Q {
            for g in 0..MAX_BITPLANES {
                for p in 0..30 {
                    for r in 0..=MAX_R {
                        assert!(
                            truncation_position(q, g + 1, p, r) <= truncation_position(q, g, p, r)
                        );
                    }
                }
            }
        }
    }
}
