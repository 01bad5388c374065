//! Gain/priority tables and their real-vector encoding.
//!
//! Entries are ordered component-major: the ten bands of Y (deepest level
//! first), then Cb, then Cr. A table is the pair of arrays `gains[30]`,
//! `priorities[30]` indexed by `component * 10 + band`.

use std::fmt;

use crate::dwt::{synthesis_gain, NUM_BANDS};
use crate::error::{Error, Result};

pub const NUM_COMPONENTS: usize = 3;
pub const NUM_ENTRIES: usize = NUM_COMPONENTS * NUM_BANDS;
pub const MAX_GAIN: u8 = 15;

/// Largest real that still floors to `MAX_GAIN`.
const GAIN_CEILING: f64 = 16.0 - 16.0 * f64::EPSILON;

#[inline]
pub fn entry_index(component: usize, band: usize) -> usize {
    component * NUM_BANDS + band
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeightTable {
    gains: [u8; NUM_ENTRIES],
    priorities: [u8; NUM_ENTRIES],
}

impl WeightTable {
    pub fn new(gains: [u8; NUM_ENTRIES], priorities: [u8; NUM_ENTRIES]) -> Result<Self> {
        if let Some(g) = gains.iter().find(|&&g| g > MAX_GAIN) {
            return Err(Error::Weights(format!("gain {g} outside [0, {MAX_GAIN}]")));
        }
        let mut seen = [false; NUM_ENTRIES];
        for &p in &priorities {
            let slot = seen.get_mut(p as usize);
            match slot {
                Some(s) if !*s => *s = true,
                _ => {
                    return Err(Error::Weights(
                        "priorities must be a permutation of 0..29".into(),
                    ))
                }
            }
        }
        Ok(Self { gains, priorities })
    }

    pub fn gains(&self) -> &[u8; NUM_ENTRIES] {
        &self.gains
    }

    pub fn priorities(&self) -> &[u8; NUM_ENTRIES] {
        &self.priorities
    }

    pub fn gain(&self, component: usize, band: usize) -> u8 {
        self.gains[entry_index(component, band)]
    }

    pub fn priority(&self, component: usize, band: usize) -> u8 {
        self.priorities[entry_index(component, band)]
    }

    /// A real vector that maps back onto this exact table: integer part is
    /// the gain, fractional part decreases with the priority rank.
    pub fn to_vector(&self) -> WeightVector {
        let values = self
            .gains
            .iter()
            .zip(&self.priorities)
            .map(|(&g, &p)| g as f64 + 1.0 - (p as f64 + 1.0) / (NUM_ENTRIES as f64 + 1.0))
            .collect();
        WeightVector(values)
    }
}

impl fmt::Display for WeightTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&table_to_config(self))
    }
}

/// The optimizer's view of a table: one real per entry.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for WeightVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Ranks of the fractional parts in descending order; equal fractions keep
/// position order. Returns the rank of each position.
pub fn fraction_ranks(values: &[f64]) -> Vec<usize> {
    let fractions: Vec<f64> = values.iter().map(|v| v - v.floor()).collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| fractions[b].total_cmp(&fractions[a]).then(a.cmp(&b)));
    let mut ranks = vec![0; values.len()];
    for (rank, &pos) in order.iter().enumerate() {
        ranks[pos] = rank;
    }
    ranks
}

/// Truncated gain of a single real, after clamping to `[0, 16)`.
#[inline]
pub fn truncated_gain(v: f64) -> u8 {
    v.clamp(0.0, GAIN_CEILING).floor() as u8
}

pub fn vector_to_table(v: &WeightVector) -> Result<WeightTable> {
    if v.0.len() != NUM_ENTRIES {
        return Err(Error::Weights(format!(
            "expected {NUM_ENTRIES} values, got {}",
            v.0.len()
        )));
    }
    if let Some(bad) = v.0.iter().find(|x| !x.is_finite()) {
        return Err(Error::Weights(format!("non-finite value {bad}")));
    }
    let mut gains = [0u8; NUM_ENTRIES];
    let mut priorities = [0u8; NUM_ENTRIES];
    for (g, &x) in gains.iter_mut().zip(&v.0) {
        *g = truncated_gain(x);
    }
    for (p, r) in priorities.iter_mut().zip(fraction_ranks(&v.0)) {
        *p = r as u8;
    }
    WeightTable::new(gains, priorities)
}

/// Default gains from measured synthesis energy: a band whose basis function
/// carries four times the energy is given one more retained bitplane.
pub fn default_table() -> WeightTable {
    let energies: Vec<f64> = (0..NUM_BANDS).map(synthesis_gain).collect();
    let raw: Vec<i32> = energies
        .iter()
        .map(|e| e.sqrt().log2().round() as i32)
        .collect();
    let offset = raw.iter().copied().min().unwrap_or(0);

    let mut gains = [0u8; NUM_ENTRIES];
    for c in 0..NUM_COMPONENTS {
        for b in 0..NUM_BANDS {
            gains[entry_index(c, b)] = (raw[b] - offset).clamp(0, MAX_GAIN as i32) as u8;
        }
    }

    // descending energy, ties (and the three components of a band) in entry order
    let key = |pos: usize| (energies[pos % NUM_BANDS] * 1e9).round() as i64;
    let mut order: Vec<usize> = (0..NUM_ENTRIES).collect();
    order.sort_by(|&a, &b| key(b).cmp(&key(a)).then(a.cmp(&b)));
    let mut priorities = [0u8; NUM_ENTRIES];
    for (rank, &pos) in order.iter().enumerate() {
        priorities[pos] = rank as u8;
    }
    WeightTable::new(gains, priorities).expect("default table is valid")
}

pub fn table_to_config(t: &WeightTable) -> String {
    let join = |xs: &[u8]| {
        xs.iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    format!(
        "gains: {}\npriorities: {}\n",
        join(&t.gains),
        join(&t.priorities)
    )
}

pub fn parse_config(text: &str) -> Result<WeightTable> {
    let mut gains = None;
    let mut priorities = None;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| Error::Weights(format!("unrecognized line {line:?}")))?;
        let values = parse_values(rest, key.trim())?;
        match key.trim() {
            "gains" => gains = Some(values),
            "priorities" => priorities = Some(values),
            other => return Err(Error::Weights(format!("unknown key {other:?}"))),
        }
    }
    let gains = gains.ok_or_else(|| Error::Weights("missing gains line".into()))?;
    let priorities = priorities.ok_or_else(|| Error::Weights("missing priorities line".into()))?;
    WeightTable::new(gains, priorities)
}

fn parse_values(text: &str, what: &str) -> Result<[u8; NUM_ENTRIES]> {
    let values = text
        .split_whitespace()
        .map(|tok| {
            tok.parse::<u8>()
                .map_err(|_| Error::Weights(format!("bad {what} value {tok:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    values
        .try_into()
        .map_err(|_| Error::Weights(format!("expected {NUM_ENTRIES} {what}")))
}
