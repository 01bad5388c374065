//! Deterministic screen-content images: gradients, windows, glyph rows and
//! plots. Used to build small desk-scale corpora without external data.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::pixel::RasterImage;

struct Canvas {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Canvas {
    fn set(&mut self, x: usize, y: usize, c: [u8; 3]) {
        if x < self.width && y < self.height {
            let i = 3 * (y * self.width + x);
            self.data[i..i + 3].copy_from_slice(&c);
        }
    }

    fn rect(&mut self, x0: usize, y0: usize, w: usize, h: usize, c: [u8; 3]) {
        for y in y0..(y0 + h).min(self.height) {
            for x in x0..(x0 + w).min(self.width) {
                self.set(x, y, c);
            }
        }
    }

    fn frame(&mut self, x0: usize, y0: usize, w: usize, h: usize, c: [u8; 3]) {
        self.rect(x0, y0, w, 1, c);
        self.rect(x0, y0 + h - 1, w, 1, c);
        self.rect(x0, y0, 1, h, c);
        self.rect(x0 + w - 1, y0, 1, h, c);
    }

    fn line(&mut self, (x0, y0): (f64, f64), (x1, y1): (f64, f64), c: [u8; 3]) {
        let steps = ((x1 - x0).abs().max((y1 - y0).abs()).ceil() as usize).max(1);
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            let (x, y) = (x0 + t * (x1 - x0), y0 + t * (y1 - y0));
            if x >= 0.0 && y >= 0.0 {
                self.set(x.round() as usize, y.round() as usize, c);
            }
        }
    }
}

fn random_color(rng: &mut ChaCha8Rng, lo: u8, hi: u8) -> [u8; 3] {
    [
        rng.random_range(lo..=hi),
        rng.random_range(lo..=hi),
        rng.random_range(lo..=hi),
    ]
}

/// Rows of 5x7 pseudo-glyphs with word gaps.
fn text_block(cv: &mut Canvas, rng: &mut ChaCha8Rng, x0: usize, y0: usize, w: usize, h: usize, ink: [u8; 3]) {
    let mut y = y0 + 2;
    while y + 7 <= y0 + h {
        let line_end = x0 + rng.random_range(w / 2..=w.max(w / 2 + 1));
        let mut x = x0 + 2;
        while x + 5 <= line_end.min(x0 + w) {
            if rng.random_bool(0.15) {
                x += 4;
                continue;
            }
            let glyph: u64 = rng.random();
            for gy in 0..7 {
                for gx in 0..5 {
                    if glyph >> (gy * 5 + gx) & 1 == 1 {
                        cv.set(x + gx, y + gy, ink);
                    }
                }
            }
            x += 6;
        }
        y += 10;
    }
}

fn plot(cv: &mut Canvas, rng: &mut ChaCha8Rng, x0: usize, y0: usize, w: usize, h: usize) {
    cv.frame(x0, y0, w, h, [90, 90, 90]);
    for k in 0..3 {
        let color = random_color(rng, 20, 220);
        let freq = rng.random_range(0.5..4.0);
        let phase = rng.random_range(0.0..6.28);
        let amp = rng.random_range(0.15..0.45) * h as f64;
        let mid = y0 as f64 + h as f64 * (0.3 + 0.2 * k as f64);
        let f = |i: usize| {
            let t = i as f64 / w as f64;
            (x0 as f64 + i as f64, mid + amp * (freq * 6.28 * t + phase).sin())
        };
        for i in 1..w - 1 {
            cv.line(f(i), f(i + 1), color);
        }
    }
}

/// A color screen-content image determined by `seed`.
pub fn desktop_image(width: usize, height: usize, seed: u64) -> RasterImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cv = Canvas {
        width,
        height,
        data: vec![0; width * height * 3],
    };
    let top = random_color(&mut rng, 0, 255);
    let bottom = random_color(&mut rng, 0, 255);
    for y in 0..height {
        let t = y as f64 / height.max(2) as f64;
        let c = [0, 1, 2].map(|i| (top[i] as f64 * (1.0 - t) + bottom[i] as f64 * t) as u8);
        cv.rect(0, y, width, 1, c);
    }
    for _ in 0..rng.random_range(4..10) {
        let (x, y) = (rng.random_range(0..width), rng.random_range(0..height));
        let c = random_color(&mut rng, 0, 255);
        cv.rect(x, y, 12, 12, c);
    }
    for _ in 0..rng.random_range(2..5) {
        let w = rng.random_range(width / 3..=width * 3 / 4);
        let h = rng.random_range(height / 4..=height * 2 / 3);
        let x0 = rng.random_range(0..=width - w);
        let y0 = rng.random_range(0..=height - h);
        let title = random_color(&mut rng, 30, 200);
        let body = random_color(&mut rng, 200, 255);
        cv.rect(x0, y0, w, h, body);
        cv.rect(x0, y0, w, 12, title);
        cv.frame(x0, y0, w, h, [40, 40, 40]);
        text_block(&mut cv, &mut rng, x0 + 3, y0 + 2, w / 2, 9, [255, 255, 255]);
        if rng.random_bool(0.5) && w > 40 && h > 50 {
            plot(&mut cv, &mut rng, x0 + 4, y0 + 16, w - 8, h - 20);
        } else {
            let ink = random_color(&mut rng, 0, 90);
            text_block(&mut cv, &mut rng, x0 + 3, y0 + 14, w - 6, h - 16, ink);
        }
    }
    RasterImage::new(width, height, 3, cv.data).expect("canvas matches its dimensions")
}

/// `count` named desktop images with seeds `seed, seed + 1, ...`.
pub fn desktop_corpus(count: usize, width: usize, height: usize, seed: u64) -> Vec<(String, RasterImage)> {
    (0..count as u64)
        .map(|i| {
            (
                format!("desk{:02}", seed + i),
                desktop_image(width, height, seed + i),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_seed_dependent() {
        let a = desktop_image(96, 64, 3);
        assert_eq!(a, desktop_image(96, 64, 3));
        assert_ne!(a, desktop_image(96, 64, 4));
        assert_eq!((a.width(), a.height(), a.channels()), (96, 64, 3));
    }

    #[test]
    fn has_screen_like_content() {
        let img = desktop_image(256, 256, 1);
        let mut seen = std::collections::HashSet::new();
        for p in img.samples().chunks(3) {
            seen.insert([p[0], p[1], p[2]]);
        }
        // few distinct colors compared with a photo, but more than a flat fill
        assert!(seen.len() > 20 && seen.len() < 5000, "{}", seen.len());
    }
}
