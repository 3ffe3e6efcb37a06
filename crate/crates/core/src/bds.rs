//! Boolean discrete dynamical systems.
//!
//! A [`Configuration`] is a point of `B^n`. A [`ModeSpec`] describes a family
//! of maps `f_n : B^n -> B^n`; instantiating it at a size yields a
//! [`BooleanMap`]. The asynchronous operator updates a single component per
//! step, following a [`Strategy`].
//!
//! Positions are 1-based at this API boundary: component `i` of an
//! `n`-bit configuration is addressed with `1 <= i <= n`.
//!
//! For small sizes a configuration also has an integer encoding ("state")
//! where component 1 is the most significant bit, so `(x_1, .., x_n)` reads
//! as the binary number `x_1 x_2 .. x_n`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest size for which modes may be given as explicit truth tables.
pub const MAX_TABLE_BITS: usize = 16;

/// A fixed-length bit vector.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    bits: Vec<bool>,
}

impl Configuration {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidParameter(
                "configuration must have at least one bit".into(),
            ));
        }
        Ok(Self { bits })
    }

    pub fn zeros(n: usize) -> Result<Self> {
        Self::new(vec![false; n])
    }

    /// Decodes an integer state (component 1 = most significant bit).
    pub fn from_state(state: u32, n: usize) -> Result<Self> {
        if n == 0 || n > 32 {
            return Err(Error::InvalidParameter(format!(
                "state encoding needs 1..=32 bits, got {n}"
            )));
        }
        let bits = (1..=n).map(|i| state >> (n - i) & 1 == 1).collect();
        Ok(Self { bits })
    }

    /// Integer state of this configuration, if it fits in 32 bits.
    pub fn to_state(&self) -> Option<u32> {
        if self.bits.len() > 32 {
            return None;
        }
        Some(self.bits.iter().fold(0u32, |acc, &b| acc << 1 | b as u32))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Component `i` (1-based).
    pub fn get(&self, i: usize) -> Result<bool> {
        self.check(i)?;
        Ok(self.bits[i - 1])
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }

    pub fn hamming(&self, other: &Configuration) -> Result<usize> {
        if self.len() != other.len() {
            return Err(Error::SizeMismatch {
                expected: self.len(),
                actual: other.len(),
            });
        }
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count())
    }

    /// Bitwise complement.
    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    fn check(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.bits.len() {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: self.bits.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.bits.len() <= 64 {
            write!(f, "Configuration({self})")
        } else {
            write!(f, "Configuration(<{} bits>)", self.bits.len())
        }
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidParameter(format!(
                    "unexpected character {other:?} in bit string"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bits)
    }
}

/// A size-indexed family of Boolean maps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModeSpec {
    /// Componentwise complement.
    Negation,
    /// Component `i` is `!x_i` for odd `i` and `x_i ^ x_{i-1}` for even `i`.
    Fqq,
    /// Explicit map given as `table[state] = image state` over `2^n` states.
    TruthTable(Vec<u32>),
}

impl ModeSpec {
    /// The identity map on `B^n`, as a truth table.
    pub fn identity(n: usize) -> Result<Self> {
        check_table_bits(n)?;
        Ok(Self::TruthTable((0..1u32 << n).collect()))
    }

    /// The constant map sending every state to `state`.
    pub fn constant(n: usize, state: u32) -> Result<Self> {
        check_table_bits(n)?;
        Ok(Self::TruthTable(vec![state; 1 << n]))
    }

    /// Tabulates an arbitrary map given on integer states.
    pub fn tabulate(n: usize, f: impl Fn(u32) -> u32) -> Result<Self> {
        check_table_bits(n)?;
        let mask = (1u32 << n) - 1;
        Ok(Self::TruthTable((0..1u32 << n).map(|s| f(s) & mask).collect()))
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModeSpec::Negation => "neg",
            ModeSpec::Fqq => "fqq",
            ModeSpec::TruthTable(_) => "table",
        }
    }
}

impl FromStr for ModeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "neg" | "negation" => Ok(ModeSpec::Negation),
            "fqq" | "fl" => Ok(ModeSpec::Fqq),
            other => Err(Error::InvalidParameter(format!("unknown mode {other:?}"))),
        }
    }
}

fn check_table_bits(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("mode size must be positive".into()));
    }
    if n > MAX_TABLE_BITS {
        return Err(Error::TooLarge {
            n,
            max: MAX_TABLE_BITS,
        });
    }
    Ok(())
}

/// A mode instantiated at a fixed size `n`.
#[derive(Clone, Debug)]
pub struct BooleanMap {
    n: usize,
    mode: ModeSpec,
}

/// Instantiates `mode` at size `n`.
pub fn instantiate_mode(mode: &ModeSpec, n: usize) -> Result<BooleanMap> {
    if n == 0 {
        return Err(Error::InvalidParameter("mode size must be positive".into()));
    }
    if let ModeSpec::TruthTable(table) = mode {
        check_table_bits(n)?;
        if table.len() != 1 << n {
            return Err(Error::SizeMismatch {
                expected: 1 << n,
                actual: table.len(),
            });
        }
        if let Some(&bad) = table.iter().find(|&&v| v >> n != 0) {
            return Err(Error::InvalidParameter(format!(
                "truth table entry {bad} is wider than {n} bits"
            )));
        }
    }
    Ok(BooleanMap {
        n,
        mode: mode.clone(),
    })
}

impl BooleanMap {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mode(&self) -> &ModeSpec {
        &self.mode
    }

    /// Component `f_i(x)` for 1-based `i`.
    pub fn component(&self, i: usize, x: &Configuration) -> Result<bool> {
        if x.len() != self.n {
            return Err(Error::SizeMismatch {
                expected: self.n,
                actual: x.len(),
            });
        }
        if i == 0 || i > self.n {
            return Err(Error::IndexOutOfRange { index: i, n: self.n });
        }
        Ok(self.component_unchecked(i - 1, x.bits()))
    }

    /// Full parallel image `f(x)`.
    pub fn apply(&self, x: &Configuration) -> Result<Configuration> {
        (1..=self.n)
            .map(|i| self.component(i, x))
            .collect::<Result<Vec<_>>>()
            .map(|bits| Configuration { bits })
    }

    // `idx` is 0-based here.
    fn component_unchecked(&self, idx: usize, bits: &[bool]) -> bool {
        match &self.mode {
            ModeSpec::Negation => !bits[idx],
            ModeSpec::Fqq => {
                if idx % 2 == 0 {
                    !bits[idx]
                } else {
                    bits[idx] ^ bits[idx - 1]
                }
            }
            ModeSpec::TruthTable(table) => {
                let state = bits.iter().fold(0u32, |acc, &b| acc << 1 | b as u32);
                table[state as usize] >> (self.n - 1 - idx) & 1 == 1
            }
        }
    }

    /// `F_f(k, state)` on the integer encoding; requires `n <= 32`.
    pub(crate) fn step_state(&self, k: usize, state: u32) -> u32 {
        let shift = self.n - k;
        let mask = 1u32 << shift;
        let current = state & mask != 0;
        let next = match &self.mode {
            ModeSpec::Negation => !current,
            ModeSpec::Fqq => {
                if k % 2 == 1 {
                    !current
                } else {
                    current ^ (state >> (shift + 1) & 1 == 1)
                }
            }
            ModeSpec::TruthTable(table) => table[state as usize] & mask != 0,
        };
        if next {
            state | mask
        } else {
            state & !mask
        }
    }
}

/// A finite chaotic strategy: a sequence of 1-based component indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Strategy {
    n: usize,
    terms: Vec<u32>,
}

impl Strategy {
    /// Builds a strategy for size `n`; every term must lie in `1..=n`.
    pub fn new(n: usize, terms: Vec<u32>) -> Result<Self> {
        if let Some(&bad) = terms.iter().find(|&&t| t == 0 || t as usize > n) {
            return Err(Error::IndexOutOfRange {
                index: bad as usize,
                n,
            });
        }
        Ok(Self { n, terms })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[u32] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The shifted strategy `sigma^count(s)`.
    pub fn drop_front(&self, count: usize) -> Self {
        Self {
            n: self.n,
            terms: self.terms[count.min(self.terms.len())..].to_vec(),
        }
    }
}

/// `F_f(i, x)`: replaces component `i` of `x` by `f_i(x)`.
pub fn async_step(f: &BooleanMap, i: usize, x: &Configuration) -> Result<Configuration> {
    let value = f.component(i, x)?;
    let mut bits = x.bits.clone();
    bits[i - 1] = value;
    Ok(Configuration { bits })
}

/// Configuration part of `G_f^q(s, x0)`.
pub fn iterate_gf(
    f: &BooleanMap,
    s: &Strategy,
    x0: &Configuration,
    q: usize,
) -> Result<Configuration> {
    if x0.len() != f.n {
        return Err(Error::SizeMismatch {
            expected: f.n,
            actual: x0.len(),
        });
    }
    if s.n != f.n {
        return Err(Error::SizeMismatch {
            expected: f.n,
            actual: s.n,
        });
    }
    if q > s.len() {
        return Err(Error::StrategyTooShort {
            available: s.len(),
            requested: q,
        });
    }
    let mut bits = x0.bits.clone();
    for &term in &s.terms[..q] {
        let idx = term as usize - 1;
        bits[idx] = f.component_unchecked(idx, &bits);
    }
    Ok(Configuration { bits })
}
