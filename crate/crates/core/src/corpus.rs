//! Deterministic synthetic grayscale hosts.
//!
//! Images mix multi-octave value noise, a linear gradient, a few flat shapes
//! with soft edges and a little pixel noise, giving a roughly natural
//! spectrum. Some pixels saturate at 0 or 255 on purpose.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::media::GrayImage;

fn smooth(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

fn value_noise(rng: &mut ChaCha8Rng, width: usize, height: usize, cell: usize) -> Vec<f64> {
    let gw = width / cell + 2;
    let gh = height / cell + 2;
    let lattice: Vec<f64> = (0..gw * gh).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut out = vec![0.0; width * height];
    for r in 0..height {
        let (gr, fr) = (r / cell, smooth((r % cell) as f64 / cell as f64));
        for c in 0..width {
            let (gc, fc) = (c / cell, smooth((c % cell) as f64 / cell as f64));
            let at = |i: usize, j: usize| lattice[i * gw + j];
            let top = at(gr, gc) * (1.0 - fc) + at(gr, gc + 1) * fc;
            let bottom = at(gr + 1, gc) * (1.0 - fc) + at(gr + 1, gc + 1) * fc;
            out[r * width + c] = top * (1.0 - fr) + bottom * fr;
        }
    }
    out
}

/// One synthetic host.
pub fn synthetic_image(width: usize, height: usize, seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_1234_abcd_0001);
    let mut field = vec![0.0; width * height];

    let mut amplitude = 70.0;
    let mut cell = 128usize.min(width.max(height) / 2).max(2);
    while cell >= 2 {
        let layer = value_noise(&mut rng, width, height, cell);
        for (f, v) in field.iter_mut().zip(layer) {
            *f += amplitude * v;
        }
        amplitude *= 0.6;
        cell /= 2;
    }

    let (gx, gy) = (rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0));
    for r in 0..height {
        for c in 0..width {
            let (u, v) = (c as f64 / width as f64 - 0.5, r as f64 / height as f64 - 0.5);
            field[r * width + c] += gx * u + gy * v;
        }
    }

    for _ in 0..rng.random_range(3..7) {
        let (cr, cc) = (
            rng.random_range(0.0..height as f64),
            rng.random_range(0.0..width as f64),
        );
        let (ar, ac) = (
            rng.random_range(0.05..0.25) * height as f64,
            rng.random_range(0.05..0.25) * width as f64,
        );
        let offset = rng.random_range(-70.0..70.0);
        for r in 0..height {
            for c in 0..width {
                let d = ((r as f64 - cr) / ar).powi(2) + ((c as f64 - cc) / ac).powi(2);
                // soft edge over a few pixels
                let edge = ((1.0 - d.sqrt()) * ar.min(ac) / 2.0).clamp(0.0, 1.0);
                field[r * width + c] += offset * edge;
            }
        }
    }

    let mean = rng.random_range(105.0..150.0);
    let gain = rng.random_range(0.9..1.3);
    let samples = field
        .iter()
        .map(|&v| {
            let noisy = mean + gain * v + rng.random_range(-3.0..3.0);
            noisy.round().clamp(0.0, 255.0) as u8
        })
        .collect();
    GrayImage::new(width, height, samples).expect("dimensions are positive")
}

/// `count` synthetic hosts; image `i` uses seed `seed + i`.
pub fn synthetic_corpus(count: usize, width: usize, height: usize, seed: u64) -> Vec<GrayImage> {
    (0..count as u64)
        .map(|i| synthetic_image(width, height, seed.wrapping_add(i)))
        .collect()
}
