//! Fitness metrics: PSNR, MS-SSIM and mean intersection-over-union.

use crate::error::{Error, Result};
use crate::pixel::{LabelMap, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricScore {
    pub value: f64,
    pub higher_is_better: bool,
}

impl MetricScore {
    fn higher(value: f64) -> Self {
        Self {
            value,
            higher_is_better: true,
        }
    }
}

fn check_same_shape(a: &RasterImage, b: &RasterImage) -> Result<()> {
    if (a.width(), a.height(), a.channels()) != (b.width(), b.height(), b.channels()) {
        return Err(Error::Metric(format!(
            "image shapes differ: {}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    Ok(())
}

pub fn mse(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    check_same_shape(a, b)?;
    let sum: u64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| {
            let d = x as i64 - y as i64;
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / a.samples().len() as f64)
}

/// PSNR over every sample of every channel; identical images give +inf.
pub fn psnr(a: &RasterImage, b: &RasterImage) -> Result<MetricScore> {
    let mse = mse(a, b)?;
    let value = if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / mse).log10()
    };
    Ok(MetricScore::higher(value))
}

pub const MS_SSIM_WEIGHTS: [f64; 5] = [0.0448, 0.2856, 0.3001, 0.2363, 0.1333];
const WINDOW: usize = 11;
const WINDOW_SIGMA: f64 = 1.5;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const PEAK: f64 = 255.0;
/// Smallest side that still leaves a full window at the coarsest scale.
pub const MS_SSIM_MIN_SIZE: usize = WINDOW << (MS_SSIM_WEIGHTS.len() - 1);

/// BT.601 luma; gray images pass through.
pub fn luma(img: &RasterImage) -> Vec<f64> {
    if img.channels() == 1 {
        return img.samples().iter().map(|&s| s as f64).collect();
    }
    img.samples()
        .chunks_exact(3)
        .map(|p| 0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64)
        .collect()
}

fn gaussian_window() -> [f64; WINDOW] {
    let mut w = [0.0; WINDOW];
    let c = (WINDOW / 2) as f64;
    for (i, v) in w.iter_mut().enumerate() {
        let d = i as f64 - c;
        *v = (-d * d / (2.0 * WINDOW_SIGMA * WINDOW_SIGMA)).exp();
    }
    let sum: f64 = w.iter().sum();
    w.map(|v| v / sum)
}

/// Separable "valid" Gaussian filtering.
fn filter_valid(src: &[f64], width: usize, height: usize, win: &[f64; WINDOW]) -> Vec<f64> {
    let ow = width - WINDOW + 1;
    let oh = height - WINDOW + 1;
    let mut tmp = vec![0.0; ow * height];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..ow {
            tmp[y * ow + x] = row[x..x + WINDOW].iter().zip(win).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for (k, &wk) in win.iter().enumerate() {
            let src_row = &tmp[(y + k) * ow..(y + k + 1) * ow];
            for (o, &s) in out[y * ow..(y + 1) * ow].iter_mut().zip(src_row) {
                *o += wk * s;
            }
        }
    }
    out
}

fn downsample(src: &[f64], width: usize, height: usize) -> (Vec<f64>, usize, usize) {
    let (w, h) = (width / 2, height / 2);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let i = 2 * y * width + 2 * x;
            out.push((src[i] + src[i + 1] + src[i + width] + src[i + width + 1]) * 0.25);
        }
    }
    (out, w, h)
}

/// Mean SSIM and mean contrast-structure term of one scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleStats {
    pub ssim: f64,
    pub cs: f64,
}

fn scale_stats(x: &[f64], y: &[f64], width: usize, height: usize) -> ScaleStats {
    let win = gaussian_window();
    let c1 = (K1 * PEAK).powi(2);
    let c2 = (K2 * PEAK).powi(2);
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(a, b)| a * b).collect();
    let mu_x = filter_valid(x, width, height, &win);
    let mu_y = filter_valid(y, width, height, &win);
    let e_xx = filter_valid(&xx, width, height, &win);
    let e_yy = filter_valid(&yy, width, height, &win);
    let e_xy = filter_valid(&xy, width, height, &win);

    let mut ssim_sum = 0.0;
    let mut cs_sum = 0.0;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let var_x = e_xx[i] - mx * mx;
        let var_y = e_yy[i] - my * my;
        let cov = e_xy[i] - mx * my;
        let cs = (2.0 * cov + c2) / (var_x + var_y + c2);
        let l = (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
        ssim_sum += l * cs;
        cs_sum += cs;
    }
    let n = mu_x.len() as f64;
    ScaleStats {
        ssim: ssim_sum / n,
        cs: cs_sum / n,
    }
}

/// Per-scale statistics on luma, finest scale first.
pub fn ms_ssim_scales(a: &RasterImage, b: &RasterImage) -> Result<Vec<ScaleStats>> {
    check_same_shape(a, b)?;
    if a.width().min(a.height()) < MS_SSIM_MIN_SIZE {
        return Err(Error::Metric(format!(
            "image {}x{} too small for 5-scale MS-SSIM; minimum is {MS_SSIM_MIN_SIZE}x{MS_SSIM_MIN_SIZE}",
            a.width(),
            a.height()
        )));
    }
    let (mut x, mut y) = (luma(a), luma(b));
    let (mut w, mut h) = (a.width(), a.height());
    let mut stats = Vec::with_capacity(MS_SSIM_WEIGHTS.len());
    for scale in 0..MS_SSIM_WEIGHTS.len() {
        stats.push(scale_stats(&x, &y, w, h));
        if scale + 1 < MS_SSIM_WEIGHTS.len() {
            let (nx, nw, nh) = downsample(&x, w, h);
            let (ny, _, _) = downsample(&y, w, h);
            x = nx;
            y = ny;
            w = nw;
            h = nh;
        }
    }
    Ok(stats)
}

/// Five-scale MS-SSIM on luma. Negative contrast-structure terms are
/// clamped to zero before exponentiation.
pub fn ms_ssim(a: &RasterImage, b: &RasterImage) -> Result<MetricScore> {
    let stats = ms_ssim_scales(a, b)?;
    let last = stats.len() - 1;
    let mut value = 1.0;
    for (j, (s, w)) in stats.iter().zip(MS_SSIM_WEIGHTS).enumerate() {
        let term = if j == last { s.ssim } else { s.cs };
        value *= term.max(0.0).powf(w);
    }
    Ok(MetricScore::higher(value))
}

/// Mean per-class IoU. Classes absent from both maps are skipped.
pub fn iou(pred: &LabelMap, truth: &LabelMap, num_classes: usize) -> Result<MetricScore> {
    if (pred.width(), pred.height()) != (truth.width(), truth.height()) {
        return Err(Error::Metric(format!(
            "label maps differ in size: {}x{} vs {}x{}",
            pred.width(),
            pred.height(),
            truth.width(),
            truth.height()
        )));
    }
    let mut tp = vec![0u64; num_classes];
    let mut fp = vec![0u64; num_classes];
    let mut fn_ = vec![0u64; num_classes];
    for (&p, &t) in pred.labels().iter().zip(truth.labels()) {
        let (p, t) = (p as usize, t as usize);
        if p >= num_classes || t >= num_classes {
            return Err(Error::Metric(format!(
                "label {} exceeds class count {num_classes}",
                p.max(t)
            )));
        }
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let mut sum = 0.0;
    let mut counted = 0usize;
    for c in 0..num_classes {
        let denom = tp[c] + fp[c] + fn_[c];
        if denom > 0 {
            sum += tp[c] as f64 / denom as f64;
            counted += 1;
        }
    }
    let value = if counted == 0 { 1.0 } else { sum / counted as f64 };
    Ok(MetricScore::higher(value))
}
