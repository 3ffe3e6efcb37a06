//! Strategy adapters.
//!
//! CIIS draws its terms from a piecewise linear chaotic map seeded by a
//! secret key mixed with the message; it never sees the host. CIDS reads the
//! host configuration directly and exists only as a counterexample.

use serde::{Deserialize, Serialize};

use crate::bds::{ModeSpec, Strategy};
use crate::error::{Error, Result};
use crate::media::Domain;

/// Perturbation used when the chaotic orbit is absorbed at zero.
pub const ZERO_ESCAPE: f64 = 1.0 / 9_007_199_254_740_992.0; // 2^-53

/// Control parameter of the piecewise linear chaotic map.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PwlcmParams {
    alpha: f64,
}

impl PwlcmParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::InvalidParameter(format!(
                "alpha must lie in (0, 0.5), got {alpha}"
            )));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// One step of the piecewise linear chaotic map.
pub fn pwlcm_step(t: f64, p: PwlcmParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidParameter(format!(
            "map argument must lie in [0, 1], got {t}"
        )));
    }
    Ok(pwlcm_unchecked(t, p.alpha))
}

// The three branches are tested in this order; `1 - t` is exact on [1/2, 1].
#[inline]
fn pwlcm_unchecked(t: f64, alpha: f64) -> f64 {
    let t = if t > 0.5 { 1.0 - t } else { t };
    if t <= alpha {
        t / alpha
    } else {
        (t - alpha) / (0.5 - alpha)
    }
}

/// Parameters of the independent strategy adapter.
#[derive(Clone, Debug, PartialEq)]
pub struct CiisParams {
    key: f64,
    message: Vec<bool>,
    alpha: PwlcmParams,
    precision: u32,
    bound: usize,
}

impl CiisParams {
    /// Parameters with the bound left unlimited.
    pub fn new(key: f64, message: Vec<bool>, alpha: PwlcmParams, precision: u32) -> Result<Self> {
        Self::with_bound(key, message, alpha, precision, usize::MAX)
    }

    pub fn with_bound(
        key: f64,
        message: Vec<bool>,
        alpha: PwlcmParams,
        precision: u32,
        bound: usize,
    ) -> Result<Self> {
        check_key(key)?;
        check_precision(precision)?;
        if message.is_empty() {
            return Err(Error::InvalidParameter("message must not be empty".into()));
        }
        if bound == 0 {
            return Err(Error::InvalidParameter("bound must be at least 1".into()));
        }
        Ok(Self {
            key,
            message,
            alpha,
            precision,
            bound,
        })
    }

    pub fn key(&self) -> f64 {
        self.key
    }

    pub fn message(&self) -> &[bool] {
        &self.message
    }

    pub fn alpha(&self) -> PwlcmParams {
        self.alpha
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn bound(&self) -> usize {
        self.bound
    }
}

fn check_key(key: f64) -> Result<()> {
    if !(key > 0.0 && key < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "key must lie in (0, 1), got {key}"
        )));
    }
    Ok(())
}

fn check_precision(precision: u32) -> Result<()> {
    if !(32..=64).contains(&precision) {
        return Err(Error::InvalidParameter(format!(
            "precision must lie in 32..=64, got {precision}"
        )));
    }
    Ok(())
}

/// XOR of consecutive `precision`-bit chunks of `bits`, zero-padded.
///
/// The first bit of each chunk is the most significant one.
pub fn fold_bits(bits: &[bool], precision: u32) -> u64 {
    let p = precision as usize;
    let mut acc = 0u64;
    for chunk in bits.chunks(p) {
        let mut word = 0u64;
        for (j, &b) in chunk.iter().enumerate() {
            if b {
                word |= 1u64 << (p - 1 - j);
            }
        }
        acc ^= word;
    }
    acc
}

/// Initial value `K^0`: the first `precision` binary digits of `key` xored
/// with the folded message.
pub fn ciis_seed(key: f64, message: &[bool], precision: u32) -> Result<f64> {
    check_key(key)?;
    check_precision(precision)?;
    if message.is_empty() {
        return Err(Error::InvalidParameter("message must not be empty".into()));
    }
    let scale = 2f64.powi(precision as i32);
    // key < 1 so the product stays below 2^precision; exact for binary64
    let key_bits = (key * scale).floor() as u64;
    let mixed = key_bits ^ fold_bits(message, precision);
    Ok(truncate_to_f64(mixed) / scale)
}

// Drops low bits so the integer converts exactly (rounding up could reach 1).
fn truncate_to_f64(v: u64) -> f64 {
    let significant = 64 - v.leading_zeros();
    let shift = significant.saturating_sub(f64::MANTISSA_DIGITS);
    ((v >> shift) << shift) as f64
}

/// Chaotic orbit `K^0, .., K^{q-1}` together with the number of times the
/// zero escape was applied.
pub fn ciis_orbit(p: &CiisParams, q: usize) -> Result<(Vec<f64>, usize)> {
    let mut k = ciis_seed(p.key, &p.message, p.precision)?;
    let mut orbit = Vec::with_capacity(q);
    let mut escapes = 0;
    for t in 0..q {
        orbit.push(k);
        if t + 1 < q {
            k = pwlcm_unchecked(k, p.alpha.alpha);
            if k == 0.0 {
                k = ZERO_ESCAPE;
                escapes += 1;
            }
        }
    }
    Ok((orbit, escapes))
}

/// Terms `S^0 .. S^{q-1}` with `S^t = floor(n K^t) + 1`, clamped to `n`.
pub fn ciis_strategy(p: &CiisParams, n: usize, q: usize) -> Result<Strategy> {
    if n == 0 || n > u32::MAX as usize {
        return Err(Error::InvalidParameter(format!("invalid size {n}")));
    }
    if q == 0 {
        return Err(Error::InvalidParameter("q must be at least 1".into()));
    }
    // terms past the bound are undefined as indices
    if q - 1 > p.bound {
        return Err(Error::StrategyTooShort {
            available: p.bound.saturating_add(1),
            requested: q,
        });
    }
    let (orbit, _) = ciis_orbit(p, q)?;
    let nf = n as f64;
    let terms = orbit
        .into_iter()
        .map(|k| ((nf * k).floor() as u32).saturating_add(1).min(n as u32))
        .collect();
    Strategy::new(n, terms)
}

/// Parameters of the host-dependent adapter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CidsParams {
    bound: usize,
    x: Vec<bool>,
}

impl CidsParams {
    /// `x[t - 1]` holds `X^t` for `t = 1..=bound`.
    pub fn new(bound: usize, x: Vec<bool>) -> Result<Self> {
        if bound == 0 {
            return Err(Error::InvalidParameter("bound must be at least 1".into()));
        }
        if x.len() < bound {
            return Err(Error::SizeMismatch {
                expected: bound,
                actual: x.len(),
            });
        }
        Ok(Self { bound, x })
    }

    pub fn bound(&self) -> usize {
        self.bound
    }
}

/// Terms `S^0 .. S^l`: `S^t = t` where `X^t` is set, `1` elsewhere.
///
/// `S^0` is always 1.
pub fn cids_strategy(p: &CidsParams, n: usize) -> Result<Strategy> {
    if p.bound > n {
        return Err(Error::InvalidParameter(format!(
            "bound {} exceeds size {n}",
            p.bound
        )));
    }
    let mut terms = Vec::with_capacity(p.bound + 1);
    terms.push(1);
    for t in 1..=p.bound {
        terms.push(if p.x[t - 1] { t as u32 } else { 1 });
    }
    Strategy::new(n, terms)
}

/// Secrets shared by the embedding and detection sides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeyFile {
    #[serde(rename = "K")]
    pub key: f64,
    pub alpha: f64,
    pub precision: u32,
    pub mode: String,
    pub domain: String,
}

impl KeyFile {
    pub fn new(key: f64, alpha: f64, precision: u32, mode: &ModeSpec, domain: Domain) -> Result<Self> {
        if matches!(mode, ModeSpec::TruthTable(_)) {
            return Err(Error::InvalidParameter(
                "truth-table modes cannot be stored in a key file".into(),
            ));
        }
        let kf = Self {
            key,
            alpha,
            precision,
            mode: mode.name().to_string(),
            domain: domain.name().to_string(),
        };
        kf.validate()?;
        Ok(kf)
    }

    fn validate(&self) -> Result<()> {
        check_key(self.key)?;
        PwlcmParams::new(self.alpha)?;
        check_precision(self.precision)?;
        self.mode_spec()?;
        self.domain()?;
        Ok(())
    }

    pub fn mode_spec(&self) -> Result<ModeSpec> {
        self.mode.parse()
    }

    pub fn domain(&self) -> Result<Domain> {
        self.domain.parse()
    }

    pub fn pwlcm(&self) -> Result<PwlcmParams> {
        PwlcmParams::new(self.alpha)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("key file fields serialize")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let kf: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        kf.validate()?;
        Ok(kf)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_toml().as_bytes())
    }
}
