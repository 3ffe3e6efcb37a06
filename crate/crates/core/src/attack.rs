//! Attacks on marked images, and fidelity metrics.
//!
//! Every attack keeps the image dimensions and the 8-bit range.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::media::{clamp_pixel, dct, dwt, GrayImage};

/// Baseline luminance quantization table, natural `(row, col)` order.
pub const LUMINANCE_TABLE: [u16; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, //
    12, 12, 14, 19, 26, 58, 60, 55, //
    14, 13, 16, 24, 40, 57, 69, 56, //
    14, 17, 22, 29, 51, 87, 80, 62, //
    18, 22, 37, 56, 68, 109, 103, 77, //
    24, 35, 55, 64, 81, 104, 113, 92, //
    49, 64, 78, 87, 103, 121, 120, 101, //
    72, 92, 95, 98, 112, 100, 103, 99,
];

/// Pixel value written into removed or out-of-frame areas.
pub const FILL: u8 = 128;

/// Levels of the wavelet quantization attack.
pub const WAVELET_ATTACK_LEVELS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AttackSpec {
    /// Percentage of the area replaced by a centred gray rectangle.
    Crop(f64),
    /// Block DCT quantization at a quality factor in `1..=100`.
    Jpeg(u32),
    /// Wavelet deadzone quantization with step `ratio` in every subband.
    WaveletQuant(f64),
    Contrast(f64),
    Sharpen(f64),
    /// Rotation by `+theta` then `-theta` degrees about the centre.
    Rotate(f64),
}

impl AttackSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        match *self {
            AttackSpec::Crop(p) if !(0.0..100.0).contains(&p) => {
                bad(format!("crop percentage must lie in [0, 100), got {p}"))
            }
            AttackSpec::Jpeg(q) if !(1..=100).contains(&q) => {
                bad(format!("quality must lie in 1..=100, got {q}"))
            }
            AttackSpec::WaveletQuant(r) if !(r >= 1.0 && r.is_finite()) => {
                bad(format!("ratio must be at least 1, got {r}"))
            }
            AttackSpec::Contrast(s) if !(s > 0.0 && s.is_finite()) => {
                bad(format!("contrast strength must be positive, got {s}"))
            }
            AttackSpec::Sharpen(s) if !(s >= 0.0 && s.is_finite()) => {
                bad(format!("sharpen strength must be nonnegative, got {s}"))
            }
            AttackSpec::Rotate(t) if !(0.0..=45.0).contains(&t) => {
                bad(format!("rotation angle must lie in [0, 45], got {t}"))
            }
            _ => Ok(()),
        }
    }

    /// Family name used in spec strings and curve file names.
    pub fn family(&self) -> &'static str {
        match self {
            AttackSpec::Crop(_) => "crop",
            AttackSpec::Jpeg(_) => "jpeg",
            AttackSpec::WaveletQuant(_) => "j2k",
            AttackSpec::Contrast(_) => "contrast",
            AttackSpec::Sharpen(_) => "sharpen",
            AttackSpec::Rotate(_) => "rot",
        }
    }

    pub fn parameter(&self) -> f64 {
        match *self {
            AttackSpec::Crop(v)
            | AttackSpec::WaveletQuant(v)
            | AttackSpec::Contrast(v)
            | AttackSpec::Sharpen(v)
            | AttackSpec::Rotate(v) => v,
            AttackSpec::Jpeg(q) => q as f64,
        }
    }

    /// Spec of family `family` at `value`.
    pub fn with_family(family: &str, value: f64) -> Result<Self> {
        format!("{family}:{value}").parse()
    }

    pub fn apply(&self, img: &GrayImage) -> Result<GrayImage> {
        self.validate()?;
        match *self {
            AttackSpec::Crop(p) => Ok(crop(img, p)),
            AttackSpec::Jpeg(q) => Ok(jpeg_like(img, q)),
            AttackSpec::WaveletQuant(r) => wavelet_quant(img, r),
            AttackSpec::Contrast(s) => Ok(contrast(img, s)),
            AttackSpec::Sharpen(s) => Ok(sharpen(img, s)),
            AttackSpec::Rotate(t) => Ok(rotate_pair(img, t)),
        }
    }
}

impl fmt::Display for AttackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.family(), self.parameter())
    }
}

impl FromStr for AttackSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, value) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| Error::InvalidParameter(format!("attack spec {s:?} lacks ':'")))?;
        let num = |v: &str| -> Result<f64> {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad attack parameter {v:?}")))
        };
        let spec = match name.trim().to_ascii_lowercase().as_str() {
            "crop" => AttackSpec::Crop(num(value)?),
            "jpeg" => {
                let q = num(value)?;
                if q.fract() != 0.0 || q < 0.0 {
                    return Err(Error::InvalidParameter(format!("quality {q} is not an integer")));
                }
                AttackSpec::Jpeg(q as u32)
            }
            "j2k" | "wavelet" => AttackSpec::WaveletQuant(num(value)?),
            "contrast" => AttackSpec::Contrast(num(value)?),
            "sharpen" => AttackSpec::Sharpen(num(value)?),
            "rot" | "rotate" => AttackSpec::Rotate(num(value)?),
            other => return Err(Error::InvalidParameter(format!("unknown attack {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Top-left corner and size `(row, col, rows, cols)` of the cropped area.
pub fn crop_rect(width: usize, height: usize, pct: f64) -> (usize, usize, usize, usize) {
    let side = (pct / 100.0).sqrt();
    let cols = (width as f64 * side).floor() as usize;
    let rows = (height as f64 * side).floor() as usize;
    ((height - rows) / 2, (width - cols) / 2, rows, cols)
}

pub fn crop(img: &GrayImage, pct: f64) -> GrayImage {
    let mut out = img.clone();
    let (r0, c0, rows, cols) = crop_rect(img.width(), img.height(), pct);
    let w = img.width();
    for r in r0..r0 + rows {
        out.samples_mut()[r * w + c0..r * w + c0 + cols].fill(FILL);
    }
    out
}

/// Quantization table at `quality`, natural order.
pub fn scaled_table(quality: u32) -> [f64; 64] {
    let q = quality.clamp(1, 100);
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    let mut out = [0.0; 64];
    for (o, &b) in out.iter_mut().zip(&LUMINANCE_TABLE) {
        *o = ((b as u32 * scale + 50) / 100).clamp(1, 255) as f64;
    }
    out
}

/// Blockwise DCT quantization; partial border blocks replicate edge pixels.
pub fn jpeg_like(img: &GrayImage, quality: u32) -> GrayImage {
    let table = scaled_table(quality);
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    let b = dct::BLOCK;
    for br in (0..h).step_by(b) {
        for bc in (0..w).step_by(b) {
            let mut block = [0.0; 64];
            for r in 0..b {
                for c in 0..b {
                    let (y, x) = ((br + r).min(h - 1), (bc + c).min(w - 1));
                    block[r * b + c] = img.get(y, x) as f64 - 128.0;
                }
            }
            let mut coeffs = dct::forward_block(&block);
            for (v, &q) in coeffs.iter_mut().zip(&table) {
                *v = (*v / q).round() * q;
            }
            let px = dct::inverse_block(&coeffs);
            for r in 0..b.min(h - br) {
                for c in 0..b.min(w - bc) {
                    out.samples_mut()[(br + r) * w + bc + c] = clamp_pixel(px[r * b + c] + 128.0);
                }
            }
        }
    }
    out
}

fn deadzone(v: f64, step: f64) -> f64 {
    let q = (v.abs() / step).floor();
    if q == 0.0 {
        0.0
    } else {
        v.signum() * (q + 0.5) * step
    }
}

/// Wavelet compression proxy: detail subbands are deadzone-quantized with
/// step `ratio`; the coarsest approximation band is kept.
pub fn wavelet_quant(img: &GrayImage, ratio: f64) -> Result<GrayImage> {
    let mut planes = dwt::forward(img, WAVELET_ATTACK_LEVELS)?;
    let (w, h) = (img.width(), img.height());
    let (ll_w, ll_h) = (w >> WAVELET_ATTACK_LEVELS, h >> WAVELET_ATTACK_LEVELS);
    for (i, v) in planes.data_mut().iter_mut().enumerate() {
        if i / w < ll_h && i % w < ll_w {
            continue;
        }
        *v = deadzone(*v, ratio);
    }
    Ok(dwt::inverse(&planes))
}

pub fn contrast(img: &GrayImage, strength: f64) -> GrayImage {
    let samples = img
        .samples()
        .iter()
        .map(|&v| clamp_pixel(128.0 + strength * (v as f64 - 128.0)))
        .collect();
    GrayImage::new(img.width(), img.height(), samples).expect("same dimensions")
}

/// Separable `[1 2 1] / 4` blur with replicated edges.
pub fn gauss3x3(img: &GrayImage) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let at = |r: usize, c: usize| img.get(r, c) as f64;
    let mut tmp = vec![0.0; w * h];
    for r in 0..h {
        for c in 0..w {
            let (l, rr) = (c.saturating_sub(1), (c + 1).min(w - 1));
            tmp[r * w + c] = (at(r, l) + 2.0 * at(r, c) + at(r, rr)) / 4.0;
        }
    }
    let mut out = vec![0.0; w * h];
    for r in 0..h {
        let (u, d) = (r.saturating_sub(1), (r + 1).min(h - 1));
        for c in 0..w {
            out[r * w + c] = (tmp[u * w + c] + 2.0 * tmp[r * w + c] + tmp[d * w + c]) / 4.0;
        }
    }
    out
}

/// Unsharp mask `v + strength * (v - blur(v))`.
pub fn sharpen(img: &GrayImage, strength: f64) -> GrayImage {
    if strength == 0.0 {
        return img.clone();
    }
    let blur = gauss3x3(img);
    let samples = img
        .samples()
        .iter()
        .zip(&blur)
        .map(|(&v, &b)| clamp_pixel(v as f64 + strength * (v as f64 - b)))
        .collect();
    GrayImage::new(img.width(), img.height(), samples).expect("same dimensions")
}

/// Bilinear rotation by `degrees` about `((W-1)/2, (H-1)/2)`.
pub fn rotate(img: &GrayImage, degrees: f64) -> GrayImage {
    if degrees == 0.0 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
    let (sin, cos) = degrees.to_radians().sin_cos();
    let mut out = vec![FILL; w * h];
    for r in 0..h {
        for c in 0..w {
            let (dx, dy) = (c as f64 - cx, r as f64 - cy);
            // inverse mapping: output pixel pulls from the point rotated back
            let sx = cos * dx + sin * dy + cx;
            let sy = -sin * dx + cos * dy + cy;
            if sx < 0.0 || sy < 0.0 || sx > (w - 1) as f64 || sy > (h - 1) as f64 {
                continue;
            }
            let (x0, y0) = (sx.floor() as usize, sy.floor() as usize);
            let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
            let (fx, fy) = (sx - x0 as f64, sy - y0 as f64);
            let p = |y: usize, x: usize| img.get(y, x) as f64;
            let top = p(y0, x0) * (1.0 - fx) + p(y0, x1) * fx;
            let bottom = p(y1, x0) * (1.0 - fx) + p(y1, x1) * fx;
            out[r * w + c] = clamp_pixel(top * (1.0 - fy) + bottom * fy);
        }
    }
    GrayImage::new(w, h, out).expect("same dimensions")
}

pub fn rotate_pair(img: &GrayImage, theta: f64) -> GrayImage {
    rotate(&rotate(img, theta), -theta)
}

pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    a.same_dims(b)?;
    let sum: f64 = a
        .samples()
        .iter()
        .zip(b.samples())
        .map(|(&x, &y)| (x as f64 - y as f64).powi(2))
        .sum();
    Ok(sum / a.samples().len() as f64)
}

/// Peak signal-to-noise ratio in dB; `+inf` for identical images.
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (255.0f64 * 255.0 / m).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synthetic_image;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};

    fn img(w: usize, h: usize, seed: u64) -> GrayImage {
        synthetic_image(w, h, seed)
    }

    #[test]
    fn parse_and_display() {
        for s in ["crop:36", "jpeg:70", "j2k:8", "contrast:0.8", "sharpen:0.5", "rot:10"] {
            let spec: AttackSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("crop:100".parse::<AttackSpec>().is_err());
        assert!("jpeg:0".parse::<AttackSpec>().is_err());
        assert!("jpeg:7.5".parse::<AttackSpec>().is_err());
        assert!("rot:50".parse::<AttackSpec>().is_err());
        assert!("blur:3".parse::<AttackSpec>().is_err());
        assert!("crop".parse::<AttackSpec>().is_err());
    }

    #[test]
    fn crop_geometry() {
        assert_eq!(crop_rect(512, 512, 36.0).2, 307);
        assert_eq!(crop_rect(512, 512, 81.0).2, 460);
        let x = img(64, 64, 1);
        assert_eq!(crop(&x, 0.0), x);
        let y = crop(&x, 25.0);
        let (r0, c0, rows, cols) = crop_rect(64, 64, 25.0);
        assert_eq!((r0, c0, rows, cols), (16, 16, 32, 32));
        for r in 0..64 {
            for c in 0..64 {
                let inside = (r0..r0 + rows).contains(&r) && (c0..c0 + cols).contains(&c);
                if inside {
                    assert_eq!(y.get(r, c), FILL);
                } else {
                    assert_eq!(y.get(r, c), x.get(r, c));
                }
            }
        }
    }

    #[test]
    fn quality_scaling() {
        assert_eq!(scaled_table(50)[0], 16.0);
        assert_eq!(scaled_table(100).iter().copied().fold(0.0, f64::max), 1.0);
        // quality 10 scales by 500%
        assert_eq!(scaled_table(10)[0], 80.0);
        assert_eq!(scaled_table(1)[63], 255.0);
        assert_eq!(scaled_table(75)[1], 6.0);
        assert_eq!(scaled_table(75)[63], 50.0);
    }

    #[test]
    fn jpeg_fidelity_and_monotonicity() {
        for seed in 0..3 {
            let x = img(128, 128, seed);
            assert!(psnr(&x, &jpeg_like(&x, 100)).unwrap() > 45.0);
            let values: Vec<f64> = [90, 70, 50, 30]
                .iter()
                .map(|&q| psnr(&x, &jpeg_like(&x, q)).unwrap())
                .collect();
            assert!(values.windows(2).all(|p| p[0] >= p[1]), "{values:?}");
        }
    }

    #[test]
    fn jpeg_keeps_constant_images() {
        for v in [0u8, 37, 128, 200, 255] {
            let x = GrayImage::filled(32, 24, v).unwrap();
            let y = jpeg_like(&x, 50);
            assert!(x.samples().iter().zip(y.samples()).all(|(a, b)| a.abs_diff(*b) <= 1));
        }
        // partial blocks are handled
        let odd = img(64, 64, 9);
        let odd = GrayImage::new(60, 50, odd.samples()[..3000].to_vec()).unwrap();
        assert_eq!(jpeg_like(&odd, 80).width(), 60);
    }

    #[test]
    fn wavelet_quant_behaviour() {
        let x = img(128, 128, 4);
        assert!(psnr(&x, &wavelet_quant(&x, 1.0).unwrap()).unwrap() > 50.0);
        let c = GrayImage::filled(64, 64, 99).unwrap();
        let y = wavelet_quant(&c, 20.0).unwrap();
        assert!(c.samples().iter().zip(y.samples()).all(|(a, b)| a.abs_diff(*b) <= 1));
        let p4 = psnr(&x, &wavelet_quant(&x, 4.0).unwrap()).unwrap();
        let p16 = psnr(&x, &wavelet_quant(&x, 16.0).unwrap()).unwrap();
        assert!(p4 > p16);
    }

    #[test]
    fn filters() {
        let x = img(64, 64, 5);
        assert_eq!(contrast(&x, 1.0), x);
        assert_eq!(sharpen(&x, 0.0), x);
        let flat = GrayImage::filled(16, 16, 90).unwrap();
        assert_eq!(sharpen(&flat, 2.0), flat);
        assert_eq!(contrast(&flat, 0.5).get(0, 0), 109);
        assert_eq!(contrast(&GrayImage::filled(2, 2, 250).unwrap(), 2.0).get(0, 0), 255);
    }

    #[test]
    fn rotation() {
        let x = img(64, 64, 6);
        assert_eq!(rotate_pair(&x, 0.0), x);
        // corners leave the frame and come back as fill
        assert_eq!(rotate_pair(&x, 30.0).get(0, 0), FILL);
        let p: Vec<f64> = [2.0, 5.0, 10.0, 20.0]
            .iter()
            .map(|&t| psnr(&x, &rotate_pair(&x, t)).unwrap())
            .collect();
        assert!(p.windows(2).all(|w| w[0] > w[1]), "{p:?}");
    }

    #[test]
    fn metrics() {
        let a = GrayImage::filled(4, 4, 0).unwrap();
        let b = GrayImage::filled(4, 4, 255).unwrap();
        assert_eq!(mse(&a, &b).unwrap(), 65025.0);
        assert_eq!(psnr(&a, &b).unwrap(), 0.0);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let c = GrayImage::new(2, 2, vec![10, 10, 10, 10]).unwrap();
        let d = GrayImage::new(2, 2, vec![10, 11, 10, 10]).unwrap();
        assert_eq!(mse(&c, &d).unwrap(), 0.25);
        assert!((psnr(&c, &d).unwrap() - 54.151).abs() < 1e-3);
        assert!(mse(&a, &c).is_err());
    }

    proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(24))]
        #[test]
        fn attacks_preserve_shape(seed in 0u64..1000, which in 0usize..6, p in 0.0f64..1.0) {
            let x = img(64, 64, seed);
            let spec = match which {
                0 => AttackSpec::Crop(p * 99.0),
                1 => AttackSpec::Jpeg(1 + (p * 99.0) as u32),
                2 => AttackSpec::WaveletQuant(1.0 + p * 30.0),
                3 => AttackSpec::Contrast(0.1 + p * 2.0),
                4 => AttackSpec::Sharpen(p * 3.0),
                _ => AttackSpec::Rotate(p * 45.0),
            };
            let y = spec.apply(&x).unwrap();
            prop_assert_eq!((y.width(), y.height()), (64, 64));
            prop_assert!(y.samples().len() == 64 * 64);
        }
    }
}
