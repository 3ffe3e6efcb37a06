//! Host media: images, transforms, and the split of a host into most
//! significant, least significant and passive coefficient bits.
//!
//! Each domain serializes the host into a stream of integer words:
//!
//! * spatial: one 8-bit word per pixel, row-major;
//! * DWT: one 32-bit two's-complement word per quantized wavelet coefficient
//!   in subband-major order (see [`dwt`]);
//! * DCT: one 32-bit word per quantized block coefficient, block-major, each
//!   block in anti-diagonal order (see [`dct`]).
//!
//! Bit `k` of the stream is bit `k mod w` (MSB first) of word `k / w` for
//! word width `w`. A signification function weights every bit; bits with
//! weight `>= M` are MSCs, `<= m` LSCs, and the rest passive.

pub mod dct;
pub mod dwt;
pub mod pgm;
mod refine;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use refine::Footprint;

pub const DWT_LEVELS: usize = 3;
pub const DEFAULT_DWT_STEP: f64 = 2.0;
pub const DEFAULT_DCT_STEP: f64 = 6.5;
const REFINE_PASSES: usize = 12;

/// Decomposition domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Domain {
    Spatial,
    Dwt,
    Dct,
}

impl Domain {
    pub fn name(&self) -> &'static str {
        match self {
            Domain::Spatial => "spatial",
            Domain::Dwt => "dwt",
            Domain::Dct => "dct",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "spatial" => Ok(Domain::Spatial),
            "dwt" | "dwt2" => Ok(Domain::Dwt),
            "dct" | "dct8" => Ok(Domain::Dct),
            other => Err(Error::InvalidParameter(format!("unknown domain {other:?}"))),
        }
    }
}

/// 8-bit grayscale image, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    samples: Vec<u8>,
}

impl fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GrayImage({}x{})", self.width, self.height)
    }
}

impl GrayImage {
    pub fn new(width: usize, height: usize, samples: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Image(format!("empty image {width}x{height}")));
        }
        if samples.len() != width * height {
            return Err(Error::SizeMismatch {
                expected: width * height,
                actual: samples.len(),
            });
        }
        Ok(Self {
            width,
            height,
            samples,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
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

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.samples[row * self.width + col]
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.samples.iter().map(|&v| v as f64).collect()
    }

    /// Rounds half away from zero and clamps to `0..=255`.
    pub fn from_f64_rounded(width: usize, height: usize, field: &[f64]) -> Self {
        assert_eq!(field.len(), width * height);
        Self {
            width,
            height,
            samples: field.iter().map(|&v| clamp_pixel(v)).collect(),
        }
    }

    pub fn same_dims(&self, other: &GrayImage) -> Result<()> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::Image(format!(
                "dimension mismatch: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

pub fn clamp_pixel(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Coefficient quantizer: nearest multiple of `step`, ties away from zero.
pub fn quantize(value: f64, step: f64) -> i32 {
    (value / step).round().clamp(i32::MIN as f64, i32::MAX as f64) as i32
}

/// Strictly increasing set of bit indices, stored as disjoint runs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IndexSet {
    runs: Vec<(u64, u64)>,
    len: u64,
}

impl IndexSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends `index`, which must exceed every index already present.
    pub fn push(&mut self, index: u64) {
        match self.runs.last_mut() {
            Some((_, end)) if *end == index => *end += 1,
            Some((_, end)) => {
                assert!(index > *end, "indices must be strictly increasing");
                self.runs.push((index, index + 1));
            }
            None => self.runs.push((index, index + 1)),
        }
        self.len += 1;
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Half-open runs `[start, end)`.
    pub fn runs(&self) -> &[(u64, u64)] {
        &self.runs
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.runs.iter().flat_map(|&(s, e)| s..e)
    }

    pub fn contains(&self, index: u64) -> bool {
        let pos = self.runs.partition_point(|&(s, _)| s <= index);
        pos > 0 && index < self.runs[pos - 1].1
    }
}

/// Weight `u^k` of every bit of a serialized host.
#[derive(Clone, Debug, PartialEq)]
pub enum Signification {
    /// `u^k = 8 - (k mod 8)`.
    Spatial,
    /// Three lowest bits of level-2 details weigh -1, level-1 details 0,
    /// everything else 1.
    Dwt(dwt::StreamLayout),
    /// Re-indexed coefficients 1..=3 weigh 1; coefficients 4..=6 weigh -1 on
    /// their lowest bit and 1 elsewhere; the rest weighs 0.
    Dct,
}

pub fn spatial_signification() -> Signification {
    Signification::Spatial
}

pub fn dwt_signification(layout: dwt::StreamLayout) -> Result<Signification> {
    if layout.levels() != DWT_LEVELS {
        return Err(Error::Decomposition(format!(
            "wavelet signification needs a {DWT_LEVELS}-level layout, got {}",
            layout.levels()
        )));
    }
    Ok(Signification::Dwt(layout))
}

pub fn dct_signification() -> Signification {
    Signification::Dct
}

impl Signification {
    pub fn bits_per_word(&self) -> usize {
        match self {
            Signification::Spatial => 8,
            _ => 32,
        }
    }

    pub fn weight(&self, k: u64) -> f64 {
        let bpw = self.bits_per_word() as u64;
        let (word, bit) = ((k / bpw) as usize, (k % bpw) as usize);
        match self {
            Signification::Spatial => 8.0 - bit as f64,
            Signification::Dwt(layout) => {
                let seg = layout.segment_of(word);
                match (seg.level, seg.band) {
                    (_, dwt::Band::LL) => 1.0,
                    (1, _) => 0.0,
                    (2, _) if bit >= 29 => -1.0,
                    _ => 1.0,
                }
            }
            Signification::Dct => match word % 64 + 1 {
                1..=3 => 1.0,
                4..=6 if bit == 31 => -1.0,
                4..=6 => 1.0,
                _ => 0.0,
            },
        }
    }
}

/// Domain plus quantization step and significance thresholds `(m, M)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Codec {
    pub domain: Domain,
    pub step: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Codec {
    /// Defaults: spatial `(1.5, 7.5)` selects pixel LSBs; transform domains
    /// use `(-0.5, 0.5)`.
    pub fn new(domain: Domain) -> Self {
        match domain {
            Domain::Spatial => Self {
                domain,
                step: 1.0,
                lower: 1.5,
                upper: 7.5,
            },
            Domain::Dwt => Self {
                domain,
                step: DEFAULT_DWT_STEP,
                lower: -0.5,
                upper: 0.5,
            },
            Domain::Dct => Self {
                domain,
                step: DEFAULT_DCT_STEP,
                lower: -0.5,
                upper: 0.5,
            },
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn with_thresholds(mut self, lower: f64, upper: f64) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.lower < self.upper) {
            return Err(Error::InvalidParameter(format!(
                "significance thresholds need m < M, got ({}, {})",
                self.lower, self.upper
            )));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "quantization step must be positive, got {}",
                self.step
            )));
        }
        Ok(())
    }

    pub fn signification(&self, width: usize, height: usize) -> Result<Signification> {
        match self.domain {
            Domain::Spatial => Ok(spatial_signification()),
            Domain::Dwt => dwt_signification(dwt::StreamLayout::new(width, height, DWT_LEVELS)?),
            Domain::Dct => {
                dct::check_dims(width, height)?;
                Ok(dct_signification())
            }
        }
    }

    /// Real coefficients in stream order (pixels for the spatial domain).
    pub fn coefficients(&self, img: &GrayImage) -> Result<Vec<f64>> {
        match self.domain {
            Domain::Spatial => Ok(img.to_f64()),
            Domain::Dwt => {
                let layout = dwt::StreamLayout::new(img.width(), img.height(), DWT_LEVELS)?;
                Ok(layout.serialize(&dwt::forward(img, DWT_LEVELS)?))
            }
            Domain::Dct => Ok(dct::serialize(&dct::forward_blocks(img)?)),
        }
    }

    /// Integer word stream of `img`.
    pub fn words(&self, img: &GrayImage) -> Result<Vec<i32>> {
        self.validate()?;
        Ok(match self.domain {
            Domain::Spatial => img.samples().iter().map(|&v| v as i32).collect(),
            _ => self
                .coefficients(img)?
                .iter()
                .map(|&w| quantize(w, self.step))
                .collect(),
        })
    }

    /// Bit positions of the LSCs of a `width x height` host.
    pub fn lsc_layout(&self, width: usize, height: usize) -> Result<IndexSet> {
        self.validate()?;
        let sig = self.signification(width, height)?;
        let total = (width * height * sig.bits_per_word()) as u64;
        let mut lsc = IndexSet::new();
        for k in 0..total {
            if sig.weight(k) <= self.lower {
                lsc.push(k);
            }
        }
        if lsc.is_empty() {
            return Err(Error::EmptyLsc);
        }
        Ok(lsc)
    }
}

fn bit_of(words: &[i32], bpw: usize, k: u64) -> bool {
    let (word, bit) = ((k / bpw as u64) as usize, (k % bpw as u64) as usize);
    (words[word] as u32) >> (bpw - 1 - bit) & 1 == 1
}

fn gather(words: &[i32], bpw: usize, set: &IndexSet) -> Vec<bool> {
    set.iter().map(|k| bit_of(words, bpw, k)).collect()
}

/// `phi_m(img)`: the LSC bits of `img` in increasing index order.
pub fn extract_lscs(img: &GrayImage, codec: &Codec) -> Result<Vec<bool>> {
    let layout = codec.lsc_layout(img.width(), img.height())?;
    extract_with_layout(img, codec, &layout)
}

/// As [`extract_lscs`] with a precomputed [`Codec::lsc_layout`].
pub fn extract_with_layout(img: &GrayImage, codec: &Codec, layout: &IndexSet) -> Result<Vec<bool>> {
    let words = codec.words(img)?;
    let bpw = if codec.domain == Domain::Spatial { 8 } else { 32 };
    let total = (words.len() * bpw) as u64;
    if layout.runs().last().is_some_and(|&(_, e)| e > total) {
        return Err(Error::Decomposition(
            "LSC layout does not match the image size".into(),
        ));
    }
    Ok(gather(&words, bpw, layout))
}

#[derive(Clone, Debug, PartialEq)]
struct Sidecar {
    width: usize,
    height: usize,
    step: f64,
    // original real coefficients in stream order; empty for the spatial domain
    coefficients: Vec<f64>,
}

/// A host split into MSC, LSC and passive bit payloads.
#[derive(Clone, Debug, PartialEq)]
pub struct DecomposedMedia {
    domain: Domain,
    bits_per_word: usize,
    msc: IndexSet,
    lsc: IndexSet,
    passive: IndexSet,
    phi_msc: Vec<bool>,
    phi_lsc: Vec<bool>,
    phi_passive: Vec<bool>,
    sidecar: Sidecar,
}

impl DecomposedMedia {
    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn msc(&self) -> &IndexSet {
        &self.msc
    }

    pub fn lsc(&self) -> &IndexSet {
        &self.lsc
    }

    pub fn passive(&self) -> &IndexSet {
        &self.passive
    }

    pub fn phi_msc(&self) -> &[bool] {
        &self.phi_msc
    }

    pub fn phi_lsc(&self) -> &[bool] {
        &self.phi_lsc
    }

    pub fn phi_passive(&self) -> &[bool] {
        &self.phi_passive
    }

    pub fn total_bits(&self) -> usize {
        self.sidecar.width * self.sidecar.height * self.bits_per_word
    }

    /// Replaces the LSC payload.
    pub fn set_phi_lsc(&mut self, bits: Vec<bool>) -> Result<()> {
        if bits.len() != self.lsc.len() {
            return Err(Error::SizeMismatch {
                expected: self.lsc.len(),
                actual: bits.len(),
            });
        }
        self.phi_lsc = bits;
        Ok(())
    }

    fn check(&self) -> Result<()> {
        let pairs = [
            (&self.msc, self.phi_msc.len()),
            (&self.lsc, self.phi_lsc.len()),
            (&self.passive, self.phi_passive.len()),
        ];
        for (set, len) in pairs {
            if set.len() != len {
                return Err(Error::Decomposition(format!(
                    "index set of size {} carries {len} bits",
                    set.len()
                )));
            }
        }
        if self.msc.len() + self.lsc.len() + self.passive.len() != self.total_bits() {
            return Err(Error::Decomposition(
                "index sets do not cover the bit stream".into(),
            ));
        }
        Ok(())
    }

    /// Integer words obtained by scattering the three payloads back.
    pub fn words(&self) -> Result<Vec<i32>> {
        self.check()?;
        let bpw = self.bits_per_word;
        let mut words = vec![0u32; self.sidecar.width * self.sidecar.height];
        let mut covered = 0usize;
        for (set, phi) in [
            (&self.msc, &self.phi_msc),
            (&self.lsc, &self.phi_lsc),
            (&self.passive, &self.phi_passive),
        ] {
            for (k, &b) in set.iter().zip(phi.iter()) {
                let (word, bit) = ((k / bpw as u64) as usize, (k % bpw as u64) as usize);
                if word >= words.len() {
                    return Err(Error::Decomposition(format!("bit index {k} out of range")));
                }
                if b {
                    words[word] |= 1 << (bpw - 1 - bit);
                }
                covered += 1;
            }
        }
        debug_assert_eq!(covered, self.total_bits());
        Ok(words.into_iter().map(|w| w as i32).collect())
    }
}

/// Splits `img` according to `codec`.
pub fn decompose(img: &GrayImage, codec: &Codec) -> Result<DecomposedMedia> {
    codec.validate()?;
    let sig = codec.signification(img.width(), img.height())?;
    let bpw = sig.bits_per_word();
    let coefficients = match codec.domain {
        Domain::Spatial => Vec::new(),
        _ => codec.coefficients(img)?,
    };
    let words: Vec<i32> = match codec.domain {
        Domain::Spatial => img.samples().iter().map(|&v| v as i32).collect(),
        _ => coefficients.iter().map(|&w| quantize(w, codec.step)).collect(),
    };
    let mut d = DecomposedMedia {
        domain: codec.domain,
        bits_per_word: bpw,
        msc: IndexSet::new(),
        lsc: IndexSet::new(),
        passive: IndexSet::new(),
        phi_msc: Vec::new(),
        phi_lsc: Vec::new(),
        phi_passive: Vec::new(),
        sidecar: Sidecar {
            width: img.width(),
            height: img.height(),
            step: codec.step,
            coefficients,
        },
    };
    let total = (words.len() * bpw) as u64;
    for k in 0..total {
        let u = sig.weight(k);
        let b = bit_of(&words, bpw, k);
        if u >= codec.upper {
            d.msc.push(k);
            d.phi_msc.push(b);
        } else if u <= codec.lower {
            d.lsc.push(k);
            d.phi_lsc.push(b);
        } else {
            d.passive.push(k);
            d.phi_passive.push(b);
        }
    }
    if d.lsc.is_empty() {
        return Err(Error::EmptyLsc);
    }
    Ok(d)
}

/// Result of [`recompose_report`].
#[derive(Clone, Debug)]
pub struct Recomposition {
    pub image: GrayImage,
    /// Carrier coefficients whose quantized value could not be reached with
    /// 8-bit pixels; zero in practice.
    pub unresolved: usize,
}

pub fn recompose(d: &DecomposedMedia) -> Result<GrayImage> {
    Ok(recompose_report(d)?.image)
}

/// Scatters the payloads back, dequantizes and inverts the transform.
///
/// Coefficients whose quantized word is unchanged keep their original real
/// value; changed ones take the centre of their new bin. After rounding to
/// pixels, a refinement pass makes every LSC-carrying coefficient quantize to
/// its new word again.
pub fn recompose_report(d: &DecomposedMedia) -> Result<Recomposition> {
    let words = d.words()?;
    let sc = &d.sidecar;
    let (width, height, step) = (sc.width, sc.height, sc.step);
    if d.domain == Domain::Spatial {
        let samples = words.iter().map(|&w| w as u8).collect();
        return Ok(Recomposition {
            image: GrayImage::new(width, height, samples)?,
            unresolved: 0,
        });
    }
    let values: Vec<f64> = words
        .iter()
        .zip(&sc.coefficients)
        .map(|(&q, &orig)| {
            if quantize(orig, step) == q {
                orig
            } else {
                q as f64 * step
            }
        })
        .collect();
    let mut carriers: Vec<usize> = d
        .lsc
        .iter()
        .map(|k| (k / d.bits_per_word as u64) as usize)
        .collect();
    carriers.dedup();
    let targets: Vec<i32> = carriers.iter().map(|&c| words[c]).collect();

    let (samples, unresolved) = match d.domain {
        Domain::Dwt => {
            let layout = dwt::StreamLayout::new(width, height, DWT_LEVELS)?;
            let field = dwt::inverse_real(&layout.deserialize(&values));
            let fp = DwtFootprint::new(layout, carriers);
            refine::refine(&field, &fp, &targets, step, REFINE_PASSES)
        }
        Domain::Dct => {
            let field = dct::inverse_blocks_real(&dct::deserialize(&values), width, height)?;
            let fp = DctFootprint::new(width, carriers);
            refine::refine(&field, &fp, &targets, step, REFINE_PASSES)
        }
        Domain::Spatial => unreachable!(),
    };
    Ok(Recomposition {
        image: GrayImage::new(width, height, samples)?,
        unresolved,
    })
}

/// Little-endian dump of a word stream.
pub fn dump_words_le(words: &[i32]) -> Vec<u8> {
    words.iter().flat_map(|w| w.to_le_bytes()).collect()
}

struct DwtFootprint {
    layout: dwt::StreamLayout,
    carriers: Vec<usize>,
    plane_offsets: Vec<usize>,
    carrier_id: Vec<u32>,
    // (segment index, atom template) for every segment holding carriers
    templates: Vec<(usize, Vec<(isize, isize, f64)>)>,
}

impl DwtFootprint {
    fn new(layout: dwt::StreamLayout, carriers: Vec<usize>) -> Self {
        let mut carrier_id = vec![u32::MAX; layout.len()];
        for (i, &c) in carriers.iter().enumerate() {
            carrier_id[c] = i as u32;
        }
        let plane_offsets = carriers.iter().map(|&c| layout.plane_offset(c)).collect();
        let mut templates = Vec::new();
        for (si, seg) in layout.segments().iter().enumerate() {
            let end = seg.start + seg.rows * seg.cols;
            if carriers.iter().any(|&c| c >= seg.start && c < end) {
                templates.push((si, dwt::atom_template(&layout, seg)));
            }
        }
        Self {
            layout,
            carriers,
            plane_offsets,
            carrier_id,
            templates,
        }
    }
}

impl Footprint for DwtFootprint {
    fn carrier_count(&self) -> usize {
        self.carriers.len()
    }

    fn footprint(&self, carrier: usize, out: &mut Vec<(usize, f64)>) {
        let index = self.carriers[carrier];
        let segs = self.layout.segments();
        let seg = self.layout.segment_of(index);
        let si = segs.iter().position(|s| s == seg).expect("segment");
        let template = &self.templates.iter().find(|(s, _)| *s == si).expect("template").1;
        let stride = 1isize << seg.level;
        let off = index - seg.start;
        let (r, c) = ((off / seg.cols) as isize, (off % seg.cols) as isize);
        let (w, h) = (self.layout.width() as isize, self.layout.height() as isize);
        for &(dr, dc, weight) in template {
            let pr = (r * stride + dr).rem_euclid(h) as usize;
            let pc = (c * stride + dc).rem_euclid(w) as usize;
            out.push((pr * w as usize + pc, weight));
        }
    }

    fn carriers_at(&self, pixel: usize, out: &mut Vec<(usize, f64)>) {
        let (w, h) = (self.layout.width() as isize, self.layout.height() as isize);
        let (pr, pc) = ((pixel / w as usize) as isize, (pixel % w as usize) as isize);
        for (si, template) in &self.templates {
            let seg = &self.layout.segments()[*si];
            let stride = 1isize << seg.level;
            for &(dr, dc, weight) in template {
                let r = (pr - dr).rem_euclid(h);
                let c = (pc - dc).rem_euclid(w);
                if r % stride != 0 || c % stride != 0 {
                    continue;
                }
                let index = seg.start + (r / stride) as usize * seg.cols + (c / stride) as usize;
                let id = self.carrier_id[index];
                if id != u32::MAX {
                    out.push((id as usize, weight));
                }
            }
        }
    }

    fn measure(&self, pixels: &[f64]) -> Vec<f64> {
        let planes = dwt::forward_real(
            pixels,
            self.layout.width(),
            self.layout.height(),
            self.layout.levels(),
        )
        .expect("layout dimensions are valid");
        self.plane_offsets.iter().map(|&o| planes.data()[o]).collect()
    }
}

struct DctFootprint {
    width: usize,
    // (block row, block col, u, v) per carrier
    carriers: Vec<(usize, usize, usize, usize)>,
    // carrier id range per block
    block_ranges: Vec<(u32, u32)>,
}

impl DctFootprint {
    fn new(width: usize, stream_indices: Vec<usize>) -> Self {
        let bw = width / dct::BLOCK;
        let order = dct::diagonal_order();
        let blocks = stream_indices.last().map_or(0, |&i| i / 64 + 1);
        let mut block_ranges = vec![(0u32, 0u32); blocks];
        let mut carriers = Vec::with_capacity(stream_indices.len());
        for (id, &i) in stream_indices.iter().enumerate() {
            let b = i / 64;
            let (u, v) = order[i % 64];
            if block_ranges[b].1 == 0 {
                block_ranges[b] = (id as u32, id as u32 + 1);
            } else {
                block_ranges[b].1 = id as u32 + 1;
            }
            carriers.push((b / bw, b % bw, u, v));
        }
        Self {
            width,
            carriers,
            block_ranges,
        }
    }
}

impl Footprint for DctFootprint {
    fn carrier_count(&self) -> usize {
        self.carriers.len()
    }

    fn footprint(&self, carrier: usize, out: &mut Vec<(usize, f64)>) {
        let (br, bc, u, v) = self.carriers[carrier];
        let c = dct::basis();
        for r in 0..dct::BLOCK {
            for x in 0..dct::BLOCK {
                let p = (br * dct::BLOCK + r) * self.width + bc * dct::BLOCK + x;
                out.push((p, c[u][r] * c[v][x]));
            }
        }
    }

    fn carriers_at(&self, pixel: usize, out: &mut Vec<(usize, f64)>) {
        let (pr, pc) = (pixel / self.width, pixel % self.width);
        let b = (pr / dct::BLOCK) * (self.width / dct::BLOCK) + pc / dct::BLOCK;
        let Some(&(lo, hi)) = self.block_ranges.get(b) else {
            return;
        };
        let c = dct::basis();
        let (r, x) = (pr % dct::BLOCK, pc % dct::BLOCK);
        for id in lo..hi {
            let (_, _, u, v) = self.carriers[id as usize];
            out.push((id as usize, c[u][r] * c[v][x]));
        }
    }

    // same arithmetic as the full forward transform used for extraction
    fn measure(&self, pixels: &[f64]) -> Vec<f64> {
        let bw = self.width / dct::BLOCK;
        let mut out = vec![0.0; self.carriers.len()];
        for (b, &(lo, hi)) in self.block_ranges.iter().enumerate() {
            if lo == hi {
                continue;
            }
            let (br, bc) = (b / bw, b % bw);
            let mut block = [0.0; 64];
            for r in 0..dct::BLOCK {
                let src = (br * dct::BLOCK + r) * self.width + bc * dct::BLOCK;
                block[r * dct::BLOCK..(r + 1) * dct::BLOCK]
                    .copy_from_slice(&pixels[src..src + dct::BLOCK]);
            }
            let y = dct::forward_block(&block);
            for id in lo..hi {
                let (_, _, u, v) = self.carriers[id as usize];
                out[id as usize] = y[u * dct::BLOCK + v];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synthetic_image;

    #[test]
    fn spatial_weights() {
        let s = spatial_signification();
        assert_eq!(s.weight(0), 8.0);
        assert_eq!(s.weight(7), 1.0);
        assert_eq!(s.weight(8), 8.0);
    }

    #[test]
    fn quantize_rounds_half_away_from_zero() {
        assert_eq!(quantize(5.0, 2.0), 3);
        assert_eq!(quantize(-5.0, 2.0), -3);
        assert_eq!(quantize(4.9, 2.0), 2);
        assert_eq!(clamp_pixel(-3.2), 0);
        assert_eq!(clamp_pixel(255.6), 255);
    }

    #[test]
    fn index_set_merges_runs() {
        let mut s = IndexSet::new();
        for k in [1, 2, 3, 7, 8] {
            s.push(k);
        }
        assert_eq!(s.runs(), &[(1, 4), (7, 9)]);
        assert_eq!(s.len(), 5);
        assert!(s.contains(8) && !s.contains(4) && !s.contains(0));
        assert_eq!(s.iter().collect::<Vec<_>>(), [1, 2, 3, 7, 8]);
    }

    #[test]
    fn lsc_counts_for_512_hosts() {
        assert_eq!(Codec::new(Domain::Dwt).lsc_layout(512, 512).unwrap().len(), 147_456);
        assert_eq!(Codec::new(Domain::Dct).lsc_layout(512, 512).unwrap().len(), 12_288);
        assert_eq!(Codec::new(Domain::Spatial).lsc_layout(512, 512).unwrap().len(), 512 * 512);
    }

    #[test]
    fn wavelet_weights_by_band() {
        let layout = dwt::StreamLayout::new(64, 64, DWT_LEVELS).unwrap();
        let sig = dwt_signification(layout.clone()).unwrap();
        for seg in layout.segments() {
            let k = seg.start as u64 * 32;
            let w = |bit: u64| sig.weight(k + bit);
            match (seg.level, seg.band) {
                (_, dwt::Band::LL) => assert!((0..32).all(|b| w(b) == 1.0)),
                (1, _) => assert!((0..32).all(|b| w(b) == 0.0)),
                (2, _) => {
                    assert_eq!(w(28), 1.0);
                    assert!((29..32).all(|b| w(b) == -1.0));
                }
                _ => assert!((0..32).all(|b| w(b) == 1.0)),
            }
        }
        assert!(dwt_signification(dwt::StreamLayout::new(64, 64, 2).unwrap()).is_err());
    }

    #[test]
    fn partition_covers_every_bit_once() {
        let img = synthetic_image(64, 64, 8);
        for domain in [Domain::Spatial, Domain::Dwt, Domain::Dct] {
            let d = decompose(&img, &Codec::new(domain)).unwrap();
            assert_eq!(d.msc().len() + d.lsc().len() + d.passive().len(), d.total_bits());
            assert!(d.lsc().iter().all(|k| !d.msc().contains(k) && !d.passive().contains(k)));
            assert_eq!(d.phi_lsc(), extract_lscs(&img, &Codec::new(domain)).unwrap());
        }
    }

    #[test]
    fn unchanged_payload_recomposes_to_the_host() {
        let img = synthetic_image(64, 64, 9);
        for domain in [Domain::Spatial, Domain::Dwt, Domain::Dct] {
            let d = decompose(&img, &Codec::new(domain)).unwrap();
            assert_eq!(recompose(&d).unwrap(), img, "{domain}");
        }
    }

    #[test]
    fn flipped_lscs_read_back() {
        let img = synthetic_image(64, 64, 10);
        for domain in [Domain::Spatial, Domain::Dwt, Domain::Dct] {
            let codec = Codec::new(domain);
            let mut d = decompose(&img, &codec).unwrap();
            let flipped: Vec<bool> = d.phi_lsc().iter().map(|b| !b).collect();
            d.set_phi_lsc(flipped.clone()).unwrap();
            let r = recompose_report(&d).unwrap();
            assert_eq!(r.unresolved, 0, "{domain}");
            assert_eq!(extract_lscs(&r.image, &codec).unwrap(), flipped, "{domain}");
        }
    }

    #[test]
    fn wrong_payload_length_is_rejected() {
        let img = synthetic_image(32, 32, 11);
        let mut d = decompose(&img, &Codec::new(Domain::Spatial)).unwrap();
        assert!(d.set_phi_lsc(vec![true; 3]).is_err());
    }

    #[test]
    fn domains_parse() {
        for d in [Domain::Spatial, Domain::Dwt, Domain::Dct] {
            assert_eq!(d.name().parse::<Domain>().unwrap(), d);
        }
        assert!("fft".parse::<Domain>().is_err());
    }
}
