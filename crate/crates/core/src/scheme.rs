//! Embedding and non-blind detection.
//!
//! The LSC bits of the host form the initial configuration. A mode
//! instantiated at the number of LSCs `lm` is iterated `q = multiplier * lm`
//! times under the CIIS strategy derived from the key and message; the final
//! configuration is the expected mark and replaces the LSC bits.

use crate::bds::{iterate_gf, instantiate_mode, Configuration, ModeSpec, Strategy};
use crate::error::{Error, Result};
use crate::media::{self, Codec, Domain, GrayImage};
use crate::strategy::{ciis_strategy, CiisParams, KeyFile, PwlcmParams};

pub const DEFAULT_MULTIPLIER: usize = 4;
pub const DEFAULT_PRECISION: u32 = 64;

/// Everything the embedder and detector must share.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbedConfig {
    pub codec: Codec,
    pub mode: ModeSpec,
    pub key: f64,
    pub alpha: PwlcmParams,
    pub precision: u32,
    /// `q = multiplier * lm`; 0 leaves the LSCs untouched.
    pub multiplier: usize,
}

impl EmbedConfig {
    pub fn new(domain: Domain, mode: ModeSpec, key: f64, alpha: f64) -> Result<Self> {
        let cfg = Self {
            codec: Codec::new(domain),
            mode,
            key,
            alpha: PwlcmParams::new(alpha)?,
            precision: DEFAULT_PRECISION,
            multiplier: DEFAULT_MULTIPLIER,
        };
        // key and precision checks live with the strategy parameters
        cfg.ciis(vec![false], 1)?;
        Ok(cfg)
    }

    pub fn from_key_file(kf: &KeyFile) -> Result<Self> {
        let mut cfg = Self::new(kf.domain()?, kf.mode_spec()?, kf.key, kf.alpha)?;
        cfg.precision = kf.precision;
        cfg.ciis(vec![false], 1)?;
        Ok(cfg)
    }

    pub fn key_file(&self) -> Result<KeyFile> {
        KeyFile::new(
            self.key,
            self.alpha.alpha(),
            self.precision,
            &self.mode,
            self.codec.domain,
        )
    }

    pub fn with_key(mut self, key: f64) -> Result<Self> {
        self.key = key;
        self.ciis(vec![false], 1)?;
        Ok(self)
    }

    fn ciis(&self, message: Vec<bool>, bound: usize) -> Result<CiisParams> {
        CiisParams::with_bound(self.key, message, self.alpha, self.precision, bound)
    }

    /// Threshold used when none is given: 45 for DWT with the dedicated
    /// map, 46 for DWT with negation, 44 for DCT.
    pub fn default_threshold(&self) -> f64 {
        default_threshold(self.codec.domain, &self.mode)
    }
}

pub fn default_threshold(domain: Domain, mode: &ModeSpec) -> f64 {
    match (domain, mode) {
        (Domain::Dct, _) => 44.0,
        (_, ModeSpec::Negation) => 46.0,
        _ => 45.0,
    }
}

/// Runs the chaotic iterations from a given LSC vector.
pub fn mark_from_lscs(lscs: Vec<bool>, message: &[bool], cfg: &EmbedConfig) -> Result<Configuration> {
    let lm = lscs.len();
    let x0 = Configuration::new(lscs).map_err(|_| Error::EmptyLsc)?;
    let q = cfg.multiplier.checked_mul(lm).ok_or_else(|| {
        Error::InvalidParameter("iteration count overflows".into())
    })?;
    if q == 0 {
        return Ok(x0);
    }
    let f = instantiate_mode(&cfg.mode, lm)?;
    let strategy: Strategy = ciis_strategy(&cfg.ciis(message.to_vec(), q)?, lm, q)?;
    iterate_gf(&f, &strategy, &x0, q)
}

/// `phi_m(x)` as a configuration.
pub fn extract_lscs(z: &GrayImage, cfg: &EmbedConfig) -> Result<Configuration> {
    Configuration::new(media::extract_lscs(z, &cfg.codec)?).map_err(|_| Error::EmptyLsc)
}

/// The mark `y_hat` that embedding `message` into `x` writes.
pub fn expected_mark(x: &GrayImage, message: &[bool], cfg: &EmbedConfig) -> Result<Configuration> {
    if message.is_empty() {
        return Err(Error::InvalidParameter("message must not be empty".into()));
    }
    mark_from_lscs(media::extract_lscs(x, &cfg.codec)?, message, cfg)
}

/// Output of [`embed`].
#[derive(Clone, Debug)]
pub struct Embedding {
    pub image: GrayImage,
    pub mark: Configuration,
    pub lm: usize,
    pub q: usize,
    /// Carriers whose target could not be met in 8-bit pixels.
    pub unresolved: usize,
}

pub fn embed(x: &GrayImage, message: &[bool], cfg: &EmbedConfig) -> Result<Embedding> {
    if message.is_empty() {
        return Err(Error::InvalidParameter("message must not be empty".into()));
    }
    let mut d = media::decompose(x, &cfg.codec)?;
    let lm = d.lsc().len();
    let mark = mark_from_lscs(d.phi_lsc().to_vec(), message, cfg)?;
    d.set_phi_lsc(mark.bits().to_vec())?;
    let r = media::recompose_report(&d)?;
    Ok(Embedding {
        image: r.image,
        mark,
        lm,
        q: cfg.multiplier * lm,
        unresolved: r.unresolved,
    })
}

/// Outcome of [`detect`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectionResult {
    /// Percentage of LSC bits differing from the expected mark.
    pub difference_rate: f64,
    pub threshold: f64,
    pub watermarked: bool,
    pub lsc_count: usize,
}

/// `100 * hamming / len`.
pub fn difference_rate(expected: &Configuration, observed: &Configuration) -> Result<f64> {
    let d = expected.hamming(observed)?;
    Ok(100.0 * d as f64 / expected.len() as f64)
}

pub fn verdict(rate: f64, threshold: f64, lsc_count: usize) -> DetectionResult {
    DetectionResult {
        difference_rate: rate,
        threshold,
        watermarked: rate < threshold,
        lsc_count,
    }
}

/// Compares the LSCs of `z` against the mark expected for `(x, message)`.
pub fn detect(
    x: &GrayImage,
    message: &[bool],
    z: &GrayImage,
    cfg: &EmbedConfig,
    threshold: f64,
) -> Result<DetectionResult> {
    x.same_dims(z)?;
    let expected = expected_mark(x, message, cfg)?;
    let observed = extract_lscs(z, cfg)?;
    let rate = difference_rate(&expected, &observed)?;
    Ok(verdict(rate, threshold, expected.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bds::BooleanMap;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn textured(width: usize, height: usize, seed: u64) -> GrayImage {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let samples = (0..width * height)
            .map(|i| {
                let (r, c) = ((i / width) as f64, (i % width) as f64);
                let base = 128.0 + 60.0 * (r / 7.0).sin() * (c / 11.0).cos();
                (base + rng.random_range(-20.0..20.0)).clamp(0.0, 255.0) as u8
            })
            .collect();
        GrayImage::new(width, height, samples).unwrap()
    }

    fn cfg(domain: Domain, mode: ModeSpec) -> EmbedConfig {
        EmbedConfig::new(domain, mode, 0.317_2, 0.27).unwrap()
    }

    const MESSAGE: [bool; 5] = [true, false, false, true, true];

    #[test]
    fn alternating_negation_returns_home() {
        let f: BooleanMap = instantiate_mode(&ModeSpec::Negation, 2).unwrap();
        let s = Strategy::new(2, vec![1, 2, 1, 2, 1, 2, 1, 2]).unwrap();
        let x0: Configuration = "00".parse().unwrap();
        assert_eq!(iterate_gf(&f, &s, &x0, 8).unwrap(), x0);
    }

    #[test]
    fn zero_multiplier_keeps_lscs() {
        let x = textured(64, 64, 1);
        let mut c = cfg(Domain::Dwt, ModeSpec::Fqq);
        c.multiplier = 0;
        assert_eq!(expected_mark(&x, &MESSAGE, &c).unwrap(), extract_lscs(&x, &c).unwrap());
    }

    #[test]
    fn mark_is_deterministic() {
        let x = textured(64, 64, 2);
        let c = cfg(Domain::Dct, ModeSpec::Negation);
        assert_eq!(
            expected_mark(&x, &MESSAGE, &c).unwrap(),
            expected_mark(&x, &MESSAGE, &c).unwrap()
        );
    }

    #[test]
    fn round_trip_all_domains() {
        let x = textured(64, 64, 3);
        for domain in [Domain::Spatial, Domain::Dwt, Domain::Dct] {
            for mode in [ModeSpec::Negation, ModeSpec::Fqq] {
                let c = cfg(domain, mode.clone());
                let e = embed(&x, &MESSAGE, &c).unwrap();
                assert_eq!(e.unresolved, 0);
                assert_eq!(e.q, 4 * e.lm);
                let r = detect(&x, &MESSAGE, &e.image, &c, c.default_threshold()).unwrap();
                assert_eq!(r.difference_rate, 0.0, "{domain} {mode:?}");
                assert!(r.watermarked);
                assert_eq!(r.lsc_count, e.lm);
            }
        }
    }

    #[test]
    fn original_is_not_watermarked() {
        let x = textured(128, 128, 4);
        let c = cfg(Domain::Dwt, ModeSpec::Fqq);
        let r = detect(&x, &MESSAGE, &x, &c, 45.0).unwrap();
        assert!((r.difference_rate - 50.0).abs() < 5.0, "{}", r.difference_rate);
        assert!(!r.watermarked);
    }

    #[test]
    fn negation_embedding_twice_restores_lscs() {
        // the parity of visits per position is fixed, so a second pass undoes the first
        let x = textured(64, 64, 5);
        let c = cfg(Domain::Spatial, ModeSpec::Negation);
        let once = embed(&x, &MESSAGE, &c).unwrap();
        let twice = embed(&once.image, &MESSAGE, &c).unwrap();
        assert_eq!(twice.image, x);
    }

    #[test]
    fn spatial_embedding_touches_only_lsbs() {
        let x = textured(64, 64, 6);
        let c = cfg(Domain::Spatial, ModeSpec::Fqq);
        let z = embed(&x, &MESSAGE, &c).unwrap().image;
        assert!(x.samples().iter().zip(z.samples()).all(|(a, b)| a >> 1 == b >> 1));
    }

    #[test]
    fn threshold_is_strict() {
        assert!(!verdict(45.0, 45.0, 10).watermarked);
        assert!(verdict(44.999, 45.0, 10).watermarked);
        assert_eq!(default_threshold(Domain::Dwt, &ModeSpec::Fqq), 45.0);
        assert_eq!(default_threshold(Domain::Dwt, &ModeSpec::Negation), 46.0);
        assert_eq!(default_threshold(Domain::Dct, &ModeSpec::Fqq), 44.0);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let x = textured(64, 64, 7);
        let z = textured(64, 72, 7);
        let c = cfg(Domain::Spatial, ModeSpec::Fqq);
        assert!(detect(&x, &MESSAGE, &z, &c, 45.0).is_err());
    }

    #[test]
    fn key_file_recreates_config() {
        let c = cfg(Domain::Dct, ModeSpec::Fqq);
        let back = EmbedConfig::from_key_file(&KeyFile::from_toml(&c.key_file().unwrap().to_toml()).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
