//! Orthonormal Daubechies-4 wavelet transform with periodic extension.
//!
//! Coefficients live in a Mallat layout: after each level the low band of the
//! previous level is split in place into four quadrants,
//!
//! ```text
//! +----+----+
//! | LL | HL |
//! +----+----+
//! | LH | HH |
//! +----+----+
//! ```
//!
//! where `HL` is high-pass along rows (horizontal detail). The serialized
//! stream visits `LL_L`, then the details of level `L`, `L-1`, .., `1`, each
//! level in the order `LH, HL, HH` and each subband row-major.

use super::GrayImage;
use crate::error::{Error, Result};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// Low-pass analysis filter.
pub fn lowpass() -> [f64; 4] {
    let norm = 4.0 * std::f64::consts::SQRT_2;
    [
        (1.0 + SQRT3) / norm,
        (3.0 + SQRT3) / norm,
        (3.0 - SQRT3) / norm,
        (1.0 - SQRT3) / norm,
    ]
}

/// Quadrature mirror `g[k] = (-1)^k h[3 - k]`.
pub fn highpass() -> [f64; 4] {
    let h = lowpass();
    [h[3], -h[2], h[1], -h[0]]
}

/// One analysis level on a periodic signal of even length.
pub fn analyze_1d(x: &[f64], low: &mut [f64], high: &mut [f64]) {
    let n = x.len();
    let (h, g) = (lowpass(), highpass());
    for i in 0..n / 2 {
        let mut a = 0.0;
        let mut d = 0.0;
        for k in 0..4 {
            let v = x[(2 * i + k) % n];
            a += h[k] * v;
            d += g[k] * v;
        }
        low[i] = a;
        high[i] = d;
    }
}

/// Inverse of [`analyze_1d`] (its transpose, the filters being orthonormal).
pub fn synthesize_1d(low: &[f64], high: &[f64], x: &mut [f64]) {
    let n = x.len();
    let (h, g) = (lowpass(), highpass());
    x.iter_mut().for_each(|v| *v = 0.0);
    for i in 0..n / 2 {
        for k in 0..4 {
            x[(2 * i + k) % n] += h[k] * low[i] + g[k] * high[i];
        }
    }
}

/// Subband tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Band {
    LL,
    LH,
    HL,
    HH,
}

/// Coefficient planes in Mallat layout.
#[derive(Clone, Debug, PartialEq)]
pub struct DwtPlanes {
    width: usize,
    height: usize,
    levels: usize,
    data: Vec<f64>,
}

fn check_dims(width: usize, height: usize, levels: usize) -> Result<()> {
    let divisor = 1usize << levels;
    if levels == 0 || width % divisor != 0 || height % divisor != 0 || width < 2 * divisor || height < 2 * divisor {
        return Err(Error::Dimensions {
            width,
            height,
            divisor,
        });
    }
    Ok(())
}

impl DwtPlanes {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Row-major Mallat layout.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Top-left corner and size `(row, col, rows, cols)` of a subband.
    pub fn band_rect(&self, level: usize, band: Band) -> (usize, usize, usize, usize) {
        band_rect(self.width, self.height, level, band)
    }

    pub fn get(&self, level: usize, band: Band, r: usize, c: usize) -> f64 {
        let (r0, c0, _, _) = self.band_rect(level, band);
        self.data[(r0 + r) * self.width + c0 + c]
    }

    /// Subband contents, row-major.
    pub fn band(&self, level: usize, band: Band) -> Vec<f64> {
        let (r0, c0, rows, cols) = self.band_rect(level, band);
        let mut out = Vec::with_capacity(rows * cols);
        for r in r0..r0 + rows {
            out.extend_from_slice(&self.data[r * self.width + c0..r * self.width + c0 + cols]);
        }
        out
    }

    pub fn zeros(width: usize, height: usize, levels: usize) -> Result<Self> {
        check_dims(width, height, levels)?;
        Ok(Self {
            width,
            height,
            levels,
            data: vec![0.0; width * height],
        })
    }
}

fn band_rect(width: usize, height: usize, level: usize, band: Band) -> (usize, usize, usize, usize) {
    let (w, h) = (width >> level, height >> level);
    match band {
        Band::LL => (0, 0, h, w),
        Band::LH => (h, 0, h, w),
        Band::HL => (0, w, h, w),
        Band::HH => (h, w, h, w),
    }
}

/// Forward transform of an arbitrary real field.
pub fn forward_real(pixels: &[f64], width: usize, height: usize, levels: usize) -> Result<DwtPlanes> {
    check_dims(width, height, levels)?;
    if pixels.len() != width * height {
        return Err(Error::SizeMismatch {
            expected: width * height,
            actual: pixels.len(),
        });
    }
    let mut data = pixels.to_vec();
    let mut line = Vec::new();
    let mut low = Vec::new();
    let mut high = Vec::new();
    for level in 0..levels {
        let (w, h) = (width >> level, height >> level);
        // rows
        line.resize(w, 0.0);
        low.resize(w / 2, 0.0);
        high.resize(w / 2, 0.0);
        for r in 0..h {
            let row = &mut data[r * width..r * width + w];
            line.copy_from_slice(row);
            analyze_1d(&line, &mut low, &mut high);
            row[..w / 2].copy_from_slice(&low);
            row[w / 2..].copy_from_slice(&high);
        }
        // columns
        line.resize(h, 0.0);
        low.resize(h / 2, 0.0);
        high.resize(h / 2, 0.0);
        for c in 0..w {
            for r in 0..h {
                line[r] = data[r * width + c];
            }
            analyze_1d(&line, &mut low, &mut high);
            for r in 0..h / 2 {
                data[r * width + c] = low[r];
                data[(r + h / 2) * width + c] = high[r];
            }
        }
    }
    Ok(DwtPlanes {
        width,
        height,
        levels,
        data,
    })
}

pub fn forward(img: &GrayImage, levels: usize) -> Result<DwtPlanes> {
    forward_real(&img.to_f64(), img.width(), img.height(), levels)
}

/// Inverse transform to a real field.
pub fn inverse_real(planes: &DwtPlanes) -> Vec<f64> {
    let width = planes.width;
    let mut data = planes.data.clone();
    let mut line = Vec::new();
    let mut low = Vec::new();
    let mut high = Vec::new();
    for level in (0..planes.levels).rev() {
        let (w, h) = (width >> level, planes.height >> level);
        line.resize(h, 0.0);
        low.resize(h / 2, 0.0);
        high.resize(h / 2, 0.0);
        for c in 0..w {
            for r in 0..h / 2 {
                low[r] = data[r * width + c];
                high[r] = data[(r + h / 2) * width + c];
            }
            synthesize_1d(&low, &high, &mut line);
            for r in 0..h {
                data[r * width + c] = line[r];
            }
        }
        line.resize(w, 0.0);
        low.resize(w / 2, 0.0);
        high.resize(w / 2, 0.0);
        for r in 0..h {
            let row = &mut data[r * width..r * width + w];
            low.copy_from_slice(&row[..w / 2]);
            high.copy_from_slice(&row[w / 2..]);
            synthesize_1d(&low, &high, &mut line);
            row.copy_from_slice(&line);
        }
    }
    data
}

/// Inverse transform, rounded half away from zero and clamped to 0..=255.
pub fn inverse(planes: &DwtPlanes) -> GrayImage {
    GrayImage::from_f64_rounded(planes.width, planes.height, &inverse_real(planes))
}

/// One contiguous subband in the serialized stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Segment {
    pub level: usize,
    pub band: Band,
    pub rows: usize,
    pub cols: usize,
    /// Stream index of the first coefficient.
    pub start: usize,
}

/// Mapping between stream indices and Mallat positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StreamLayout {
    width: usize,
    height: usize,
    levels: usize,
    segments: Vec<Segment>,
}

impl StreamLayout {
    pub fn new(width: usize, height: usize, levels: usize) -> Result<Self> {
        check_dims(width, height, levels)?;
        let mut segments = Vec::with_capacity(3 * levels + 1);
        let mut start = 0;
        let mut push = |level: usize, band: Band| {
            let (_, _, rows, cols) = band_rect(width, height, level, band);
            segments.push(Segment {
                level,
                band,
                rows,
                cols,
                start,
            });
            start += rows * cols;
        };
        push(levels, Band::LL);
        for level in (1..=levels).rev() {
            for band in [Band::LH, Band::HL, Band::HH] {
                push(level, band);
            }
        }
        Ok(Self {
            width,
            height,
            levels,
            segments,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment_of(&self, index: usize) -> &Segment {
        let pos = self.segments.partition_point(|s| s.start <= index);
        &self.segments[pos - 1]
    }

    /// Offset into the Mallat data of stream coefficient `index`.
    pub fn plane_offset(&self, index: usize) -> usize {
        let s = self.segment_of(index);
        let off = index - s.start;
        let (r0, c0, _, _) = band_rect(self.width, self.height, s.level, s.band);
        (r0 + off / s.cols) * self.width + c0 + off % s.cols
    }

    pub fn serialize(&self, planes: &DwtPlanes) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for s in &self.segments {
            let (r0, c0, _, _) = band_rect(self.width, self.height, s.level, s.band);
            for r in 0..s.rows {
                let src = (r0 + r) * self.width + c0;
                let dst = s.start + r * s.cols;
                out[dst..dst + s.cols].copy_from_slice(&planes.data[src..src + s.cols]);
            }
        }
        out
    }

    pub fn deserialize(&self, stream: &[f64]) -> DwtPlanes {
        let mut data = vec![0.0; self.len()];
        for s in &self.segments {
            let (r0, c0, _, _) = band_rect(self.width, self.height, s.level, s.band);
            for r in 0..s.rows {
                let dst = (r0 + r) * self.width + c0;
                let src = s.start + r * s.cols;
                data[dst..dst + s.cols].copy_from_slice(&stream[src..src + s.cols]);
            }
        }
        DwtPlanes {
            width: self.width,
            height: self.height,
            levels: self.levels,
            data,
        }
    }
}

/// Pixel-domain atom of the coefficient at the origin of a subband, as
/// `(row offset, col offset, weight)` with offsets wrapped to be signed.
///
/// The atom of coefficient `(r, c)` is this one translated by
/// `(r, c) * 2^level` with periodic wrap.
pub fn atom_template(layout: &StreamLayout, segment: &Segment) -> Vec<(isize, isize, f64)> {
    let mut planes = DwtPlanes {
        width: layout.width,
        height: layout.height,
        levels: layout.levels,
        data: vec![0.0; layout.len()],
    };
    planes.data[layout.plane_offset(segment.start)] = 1.0;
    let field = inverse_real(&planes);
    let (w, h) = (layout.width as isize, layout.height as isize);
    let mut out = Vec::new();
    for (i, &v) in field.iter().enumerate() {
        if v.abs() > 1e-12 {
            let (mut r, mut c) = ((i / layout.width) as isize, (i % layout.width) as isize);
            if r > h / 2 {
                r -= h;
            }
            if c > w / 2 {
                c -= w;
            }
            out.push((r, c, v));
        }
    }
    out
}
