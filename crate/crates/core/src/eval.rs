//! ROC calibration and robustness curves.
//!
//! Every host is watermarked once per embedding variant (set `W`). Each
//! marked image is attacked with every spec of the plan (`WA`), and so is
//! every raw host (`A`). Detection against the host's expected mark gives one
//! difference rate per item; thresholds are swept over those rates.
//!
//! # Plan file
//!
//! ```toml
//! [corpus]
//! synthetic = 10          # generated hosts, or
//! paths = ["a.pgm"]       # PGM files, relative to the plan
//! width = 512
//! height = 512
//! seed = 1
//!
//! [embed]
//! variants = ["dwt:neg", "dwt:fqq", "dct:neg", "dct:fqq"]
//! message = "mark"        # UTF-8 bytes, MSB first
//! keys = "keys.toml"      # loaded if present, generated from key_seed otherwise
//! key_seed = 7
//!
//! [attacks]
//! specs = ["crop:25", "jpeg:70", "rot:5"]
//!
//! [roc]
//! min = 0
//! max = 55
//!
//! [curves]
//! crop = [1, 9, 25, 36]
//!
//! [output]
//! dir = "out"
//! ```
//!
//! # Outputs
//!
//! * `roc.csv`: `variant,threshold,tp,fp,tn,fn,tpr,fpr`
//! * `curve_<family>.csv`: `param` then one mean rate column per variant
//! * `manifest.txt`: one line per item,
//!   `set host variant key attack rate`, whitespace separated; `W` lines
//!   carry the PSNR in place of the attack and rate
//! * `keys.toml`: the per-host keys used

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{psnr, AttackSpec};
use crate::bds::{Configuration, ModeSpec};
use crate::corpus::synthetic_image;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::media::{self, pgm, Domain, GrayImage, IndexSet, DEFAULT_DCT_STEP, DEFAULT_DWT_STEP};
use crate::scheme::{self, EmbedConfig, DEFAULT_MULTIPLIER};

/// A (domain, mode) pair, labelled `dwt_neg`, `dct_fqq`, ...
#[derive(Clone, Debug, PartialEq)]
pub struct Variant {
    pub domain: Domain,
    pub mode: ModeSpec,
}

impl Variant {
    pub fn new(domain: Domain, mode: ModeSpec) -> Self {
        Self { domain, mode }
    }

    pub fn label(&self) -> String {
        format!("{}_{}", self.domain.name(), self.mode.name())
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (d, m) = s
            .split_once([':', '_'])
            .ok_or_else(|| Error::Config(format!("variant `{s}` is not domain:mode")))?;
        let mode: ModeSpec = m.parse()?;
        if matches!(mode, ModeSpec::TruthTable(_)) {
            return Err(Error::Config("truth-table variants are not supported".into()));
        }
        Ok(Self::new(d.parse()?, mode))
    }
}

/// DWT and DCT, each with negation and the dedicated map.
pub fn standard_variants() -> Vec<Variant> {
    let mut v = Vec::new();
    for d in [Domain::Dwt, Domain::Dct] {
        for m in [ModeSpec::Negation, ModeSpec::Fqq] {
            v.push(Variant::new(d, m));
        }
    }
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct Host {
    pub id: String,
    pub image: GrayImage,
}

#[derive(Clone, Debug, PartialEq)]
pub enum CorpusSpec {
    Synthetic {
        count: usize,
        width: usize,
        height: usize,
        seed: u64,
    },
    Files(Vec<PathBuf>),
}

impl CorpusSpec {
    pub fn load(&self) -> Result<Vec<Host>> {
        match self {
            CorpusSpec::Synthetic {
                count,
                width,
                height,
                seed,
            } => Ok((0..*count)
                .into_par_iter()
                .map(|i| Host {
                    id: format!("syn-{i:03}"),
                    image: synthetic_image(*width, *height, seed.wrapping_add(i as u64)),
                })
                .collect()),
            CorpusSpec::Files(paths) => paths
                .iter()
                .map(|p| {
                    let image = pgm::read_pgm(&std::fs::read(p)?)?;
                    let id = p
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| p.display().to_string());
                    Ok(Host { id, image })
                })
                .collect(),
        }
    }
}

/// Per-host secret.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HostKey {
    pub id: String,
    #[serde(rename = "K")]
    pub key: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
pub struct KeySet {
    #[serde(rename = "host", default)]
    pub hosts: Vec<HostKey>,
}

impl KeySet {
    /// Fresh `K` in (0, 1) and `alpha` in [0.1, 0.4) for each id.
    pub fn generate<S: AsRef<str>>(ids: &[S], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hosts = ids
            .iter()
            .map(|id| HostKey {
                id: id.as_ref().to_string(),
                key: rng.random_range(0.001..0.999),
                alpha: rng.random_range(0.1..0.4),
            })
            .collect();
        Self { hosts }
    }

    pub fn get(&self, id: &str) -> Option<&HostKey> {
        self.hosts.iter().find(|k| k.id == id)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("key set serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_toml().as_bytes())
    }
}

/// Where keys come from.
#[derive(Clone, Debug, PartialEq)]
pub enum KeySource {
    Seed(u64),
    /// Read if the file exists, otherwise generated from the seed and saved.
    File { path: PathBuf, seed: u64 },
    Given(KeySet),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentPlan {
    pub corpus: CorpusSpec,
    pub variants: Vec<Variant>,
    pub message: Vec<bool>,
    pub keys: KeySource,
    pub multiplier: usize,
    pub dwt_step: f64,
    pub dct_step: f64,
    pub attacks: Vec<AttackSpec>,
    pub thresholds: Vec<f64>,
    /// Family name and parameter grid.
    pub curves: Vec<(String, Vec<f64>)>,
    pub output: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlan {
    corpus: RawCorpus,
    #[serde(default)]
    embed: RawEmbed,
    attacks: RawAttacks,
    #[serde(default)]
    roc: RawRoc,
    #[serde(default)]
    curves: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCorpus {
    synthetic: Option<usize>,
    paths: Option<Vec<PathBuf>>,
    #[serde(default = "default_side")]
    width: usize,
    #[serde(default = "default_side")]
    height: usize,
    #[serde(default = "one")]
    seed: u64,
}

fn default_side() -> usize {
    512
}

fn one() -> u64 {
    1
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawEmbed {
    variants: Option<Vec<String>>,
    message: Option<String>,
    message_file: Option<PathBuf>,
    keys: Option<PathBuf>,
    key_seed: Option<u64>,
    multiplier: Option<usize>,
    dwt_step: Option<f64>,
    dct_step: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAttacks {
    specs: Vec<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRoc {
    #[serde(default)]
    min: u32,
    #[serde(default = "default_max")]
    max: u32,
}

impl Default for RawRoc {
    fn default() -> Self {
        Self { min: 0, max: 55 }
    }
}

fn default_max() -> u32 {
    55
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    #[serde(default = "default_out")]
    dir: PathBuf,
}

impl Default for RawOutput {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Bytes as bits, most significant first.
pub fn text_bits(text: &str) -> Vec<bool> {
    text.bytes()
        .flat_map(|b| (0..8).rev().map(move |i| (b >> i) & 1 == 1))
        .collect()
}

/// Integer thresholds `min..=max`.
pub fn threshold_range(min: u32, max: u32) -> Vec<f64> {
    (min..=max).map(f64::from).collect()
}

impl ExperimentPlan {
    /// A plan over `hosts` synthetic images with the standard variants and
    /// default steps; output goes to `output`.
    pub fn synthetic(count: usize, side: usize, seed: u64, attacks: Vec<AttackSpec>, output: PathBuf) -> Self {
        Self {
            corpus: CorpusSpec::Synthetic {
                count,
                width: side,
                height: side,
                seed,
            },
            variants: standard_variants(),
            message: text_bits("mark"),
            keys: KeySource::Seed(seed),
            multiplier: DEFAULT_MULTIPLIER,
            dwt_step: DEFAULT_DWT_STEP,
            dct_step: DEFAULT_DCT_STEP,
            attacks,
            thresholds: threshold_range(0, 55),
            curves: Vec::new(),
            output,
        }
    }

    /// Parses a plan; relative paths resolve against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let raw: RawPlan = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };

        let corpus = match (raw.corpus.synthetic, raw.corpus.paths) {
            (Some(count), None) => CorpusSpec::Synthetic {
                count,
                width: raw.corpus.width,
                height: raw.corpus.height,
                seed: raw.corpus.seed,
            },
            (None, Some(paths)) => CorpusSpec::Files(paths.into_iter().map(resolve).collect()),
            _ => {
                return Err(Error::Config(
                    "[corpus] needs exactly one of `synthetic` or `paths`".into(),
                ))
            }
        };

        let e = raw.embed;
        let variants = match e.variants {
            Some(v) => v.iter().map(|s| s.parse()).collect::<Result<Vec<Variant>>>()?,
            None => standard_variants(),
        };
        let message = match (e.message, e.message_file) {
            (Some(_), Some(_)) => {
                return Err(Error::Config("give `message` or `message_file`, not both".into()))
            }
            (Some(m), None) => text_bits(&m),
            (None, Some(path)) => pgm::read_message_bits(&std::fs::read(resolve(path))?)?,
            (None, None) => text_bits("mark"),
        };
        let seed = e.key_seed.unwrap_or(raw.corpus.seed);
        let keys = match e.keys {
            Some(path) => KeySource::File {
                path: resolve(path),
                seed,
            },
            None => KeySource::Seed(seed),
        };

        let attacks = raw
            .attacks
            .specs
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<AttackSpec>>>()?;
        if raw.roc.min > raw.roc.max {
            return Err(Error::Config("[roc] min exceeds max".into()));
        }
        for (family, grid) in &raw.curves {
            if let Some(&v) = grid.first() {
                AttackSpec::with_family(family, v)?;
            }
        }

        let plan = Self {
            corpus,
            variants,
            message,
            keys,
            multiplier: e.multiplier.unwrap_or(DEFAULT_MULTIPLIER),
            dwt_step: e.dwt_step.unwrap_or(DEFAULT_DWT_STEP),
            dct_step: e.dct_step.unwrap_or(DEFAULT_DCT_STEP),
            attacks,
            thresholds: threshold_range(raw.roc.min, raw.roc.max),
            curves: raw.curves.into_iter().collect(),
            output: resolve(raw.output.dir),
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn validate(&self) -> Result<()> {
        let empty = match &self.corpus {
            CorpusSpec::Synthetic { count, .. } => *count == 0,
            CorpusSpec::Files(p) => p.is_empty(),
        };
        if empty {
            return Err(Error::Config("corpus is empty".into()));
        }
        if self.attacks.is_empty() {
            return Err(Error::Config("attack list is empty".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::Config("no embedding variants".into()));
        }
        if self.message.is_empty() {
            return Err(Error::Config("message is empty".into()));
        }
        for a in &self.attacks {
            a.validate()?;
        }
        for (family, grid) in &self.curves {
            if grid.is_empty() {
                return Err(Error::Config(format!("curve `{family}` has an empty grid")));
            }
            for &v in grid {
                AttackSpec::with_family(family, v)?.validate()?;
            }
        }
        Ok(())
    }

    fn resolve_keys(&self, hosts: &[Host]) -> Result<KeySet> {
        let ids: Vec<&str> = hosts.iter().map(|h| h.id.as_str()).collect();
        let keys = match &self.keys {
            KeySource::Seed(seed) => KeySet::generate(&ids, *seed),
            KeySource::Given(k) => k.clone(),
            KeySource::File { path, seed } => {
                if path.exists() {
                    KeySet::load(path)?
                } else {
                    let k = KeySet::generate(&ids, *seed);
                    k.save(path)?;
                    k
                }
            }
        };
        for id in ids {
            if keys.get(id).is_none() {
                return Err(Error::Config(format!("no key for host `{id}`")));
            }
        }
        Ok(keys)
    }

    fn config(&self, variant: &Variant, key: &HostKey) -> Result<EmbedConfig> {
        let mut cfg = EmbedConfig::new(variant.domain, variant.mode.clone(), key.key, key.alpha)?;
        cfg.multiplier = self.multiplier;
        cfg.codec = match variant.domain {
            Domain::Dwt => cfg.codec.with_step(self.dwt_step),
            Domain::Dct => cfg.codec.with_step(self.dct_step),
            Domain::Spatial => cfg.codec,
        };
        Ok(cfg)
    }
}

/// A watermarked host.
#[derive(Clone, Debug)]
pub struct MarkedItem {
    pub host: usize,
    pub variant: usize,
    pub image: GrayImage,
    pub mark: Configuration,
    pub psnr: f64,
    cfg: EmbedConfig,
}

impl MarkedItem {
    pub fn config(&self) -> &EmbedConfig {
        &self.cfg
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SetKind {
    Attacked,
    WatermarkedAttacked,
}

/// One detection against an attacked image.
#[derive(Clone, Debug, PartialEq)]
pub struct AttackRecord {
    pub set: SetKind,
    pub host: usize,
    pub variant: usize,
    pub attack: AttackSpec,
    pub rate: f64,
}

/// The three evaluation sets and the context needed to extend them.
#[derive(Debug)]
pub struct Sets {
    pub hosts: Vec<Host>,
    pub variants: Vec<Variant>,
    pub keys: KeySet,
    pub w: Vec<MarkedItem>,
    pub wa: Vec<AttackRecord>,
    pub a: Vec<AttackRecord>,
    layouts: Vec<IndexSet>,
}

fn rate_of(z: &GrayImage, item: &MarkedItem, layout: &IndexSet) -> Result<f64> {
    let observed = Configuration::new(media::extract_with_layout(z, &item.cfg.codec, layout)?)
        .map_err(|_| Error::EmptyLsc)?;
    scheme::difference_rate(&item.mark, &observed)
}

pub fn build_sets(plan: &ExperimentPlan) -> Result<Sets> {
    plan.validate()?;
    let hosts = plan.corpus.load()?;
    let (w0, h0) = (hosts[0].image.width(), hosts[0].image.height());
    if hosts.iter().any(|h| h.image.width() != w0 || h.image.height() != h0) {
        return Err(Error::Config("corpus images must share one size".into()));
    }
    let keys = plan.resolve_keys(&hosts)?;

    let jobs: Vec<(usize, usize)> = (0..plan.variants.len())
        .flat_map(|v| (0..hosts.len()).map(move |h| (v, h)))
        .collect();
    let w = jobs
        .par_iter()
        .map(|&(v, h)| {
            let key = keys.get(&hosts[h].id).expect("checked above");
            let cfg = plan.config(&plan.variants[v], key)?;
            let e = scheme::embed(&hosts[h].image, &plan.message, &cfg)?;
            Ok(MarkedItem {
                host: h,
                variant: v,
                psnr: psnr(&hosts[h].image, &e.image)?,
                image: e.image,
                mark: e.mark,
                cfg,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let layouts = (0..plan.variants.len())
        .map(|v| w[v * hosts.len()].cfg.codec.lsc_layout(w0, h0))
        .collect::<Result<Vec<_>>>()?;

    let mut sets = Sets {
        hosts,
        variants: plan.variants.clone(),
        keys,
        w,
        wa: Vec::new(),
        a: Vec::new(),
        layouts,
    };
    sets.wa = sets.attack_marked(&plan.attacks)?;
    sets.a = sets.attack_hosts(&plan.attacks)?;
    Ok(sets)
}

impl Sets {
    fn item(&self, variant: usize, host: usize) -> &MarkedItem {
        &self.w[variant * self.hosts.len() + host]
    }

    fn attack_marked(&self, attacks: &[AttackSpec]) -> Result<Vec<AttackRecord>> {
        let jobs: Vec<(usize, usize)> = (0..self.w.len())
            .flat_map(|i| (0..attacks.len()).map(move |a| (i, a)))
            .collect();
        jobs.par_iter()
            .map(|&(i, a)| {
                let item = &self.w[i];
                let z = attacks[a].apply(&item.image)?;
                Ok(AttackRecord {
                    set: SetKind::WatermarkedAttacked,
                    host: item.host,
                    variant: item.variant,
                    attack: attacks[a],
                    rate: rate_of(&z, item, &self.layouts[item.variant])?,
                })
            })
            .collect()
    }

    fn attack_hosts(&self, attacks: &[AttackSpec]) -> Result<Vec<AttackRecord>> {
        let jobs: Vec<(usize, usize)> = (0..self.hosts.len())
            .flat_map(|h| (0..attacks.len()).map(move |a| (h, a)))
            .collect();
        let per_job = jobs
            .par_iter()
            .map(|&(h, a)| {
                let z = attacks[a].apply(&self.hosts[h].image)?;
                (0..self.variants.len())
                    .map(|v| {
                        let item = self.item(v, h);
                        Ok(AttackRecord {
                            set: SetKind::Attacked,
                            host: h,
                            variant: v,
                            attack: attacks[a],
                            rate: rate_of(&z, item, &self.layouts[v])?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut out: Vec<AttackRecord> = per_job.into_iter().flatten().collect();
        // variant-major, like WA
        out.sort_by_key(|r| r.variant);
        Ok(out)
    }

    pub fn variant_index(&self, label: &str) -> Option<usize> {
        self.variants.iter().position(|v| v.label() == label)
    }

    pub fn marked(&self, variant: usize) -> impl Iterator<Item = &MarkedItem> {
        self.w.iter().filter(move |i| i.variant == variant)
    }

    pub fn mean_psnr(&self, variant: usize) -> f64 {
        let v: Vec<f64> = self.marked(variant).map(|i| i.psnr).collect();
        v.iter().sum::<f64>() / v.len() as f64
    }

    /// Mean rate over hosts of each variant under one attack.
    pub fn mean_rates(&self, attack: &AttackSpec) -> Result<Vec<f64>> {
        let rates = self
            .w
            .par_iter()
            .map(|item| rate_of(&attack.apply(&item.image)?, item, &self.layouts[item.variant]))
            .collect::<Result<Vec<f64>>>()?;
        let n = self.hosts.len();
        Ok(rates.chunks(n).map(|c| c.iter().sum::<f64>() / n as f64).collect())
    }
}

/// Detection counts at one threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub tpr: f64,
    pub fpr: f64,
}

/// Classifies the WA and A items of one variant at each threshold.
pub fn roc_sweep(sets: &Sets, variant: usize, thresholds: &[f64]) -> Vec<RocPoint> {
    let wa: Vec<f64> = sets.wa.iter().filter(|r| r.variant == variant).map(|r| r.rate).collect();
    let a: Vec<f64> = sets.a.iter().filter(|r| r.variant == variant).map(|r| r.rate).collect();
    thresholds
        .iter()
        .map(|&t| {
            let positive = |r: &&f64| scheme::verdict(**r, t, 0).watermarked;
            let tp = wa.iter().filter(positive).count();
            let fp = a.iter().filter(positive).count();
            RocPoint {
                threshold: t,
                tp,
                fp,
                tn: a.len() - fp,
                fn_: wa.len() - tp,
                tpr: ratio(tp, wa.len()),
                fpr: ratio(fp, a.len()),
            }
        })
        .collect()
}

fn ratio(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        k as f64 / n as f64
    }
}

/// One row per parameter: the parameter and the mean rate of each variant.
#[derive(Clone, Debug, PartialEq)]
pub struct Curve {
    pub family: String,
    pub rows: Vec<(f64, Vec<f64>)>,
}

pub fn robustness_curve(sets: &Sets, family: &str, grid: &[f64]) -> Result<Curve> {
    if grid.is_empty() {
        return Err(Error::Config(format!("curve `{family}` has an empty grid")));
    }
    let rows = grid
        .iter()
        .map(|&p| Ok((p, sets.mean_rates(&AttackSpec::with_family(family, p)?)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Curve {
        family: family.to_string(),
        rows,
    })
}

/// Parameters print without a trailing `.0` when integral.
fn fmt_param(p: f64) -> String {
    if p.fract() == 0.0 && p.abs() < 1e15 {
        format!("{}", p as i64)
    } else {
        format!("{p}")
    }
}

pub fn roc_csv(sets: &Sets, sweeps: &[Vec<RocPoint>]) -> String {
    let mut s = String::from("variant,threshold,tp,fp,tn,fn,tpr,fpr\n");
    for (v, points) in sweeps.iter().enumerate() {
        for p in points {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{:.6},{:.6}",
                sets.variants[v],
                fmt_param(p.threshold),
                p.tp,
                p.fp,
                p.tn,
                p.fn_,
                p.tpr,
                p.fpr
            );
        }
    }
    s
}

pub fn curve_csv(sets: &Sets, curve: &Curve) -> String {
    let mut s = String::from("param");
    for v in &sets.variants {
        let _ = write!(s, ",{v}");
    }
    s.push('\n');
    for (p, rates) in &curve.rows {
        s.push_str(&fmt_param(*p));
        for r in rates {
            let _ = write!(s, ",{r:.6}");
        }
        s.push('\n');
    }
    s
}

pub fn manifest(sets: &Sets) -> String {
    let mut s = String::from("# set host variant key attack rate\n");
    for item in &sets.w {
        let host = &sets.hosts[item.host].id;
        let _ = writeln!(
            s,
            "W {host} {} {host} psnr={:.6} -",
            sets.variants[item.variant], item.psnr
        );
    }
    for r in sets.wa.iter().chain(&sets.a) {
        let tag = match r.set {
            SetKind::WatermarkedAttacked => "WA",
            SetKind::Attacked => "A",
        };
        let host = &sets.hosts[r.host].id;
        let _ = writeln!(
            s,
            "{tag} {host} {} {host} {} {:.6}",
            sets.variants[r.variant], r.attack, r.rate
        );
    }
    s
}

/// Everything a bench run produces.
#[derive(Debug)]
pub struct Report {
    pub sets: Sets,
    pub roc: Vec<Vec<RocPoint>>,
    pub curves: Vec<Curve>,
}

impl Report {
    /// File name and contents of each output, in a fixed order.
    pub fn files(&self) -> Vec<(String, String)> {
        let mut out = vec![("roc.csv".to_string(), roc_csv(&self.sets, &self.roc))];
        for c in &self.curves {
            out.push((format!("curve_{}.csv", c.family), curve_csv(&self.sets, c)));
        }
        out.push(("manifest.txt".to_string(), manifest(&self.sets)));
        out.push(("keys.toml".to_string(), self.sets.keys.to_toml()));
        out
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        self.files()
            .into_iter()
            .map(|(name, body)| {
                let path = dir.join(name);
                write_atomic(&path, body.as_bytes())?;
                Ok(path)
            })
            .collect()
    }
}

pub fn run_plan(plan: &ExperimentPlan) -> Result<Report> {
    let sets = build_sets(plan)?;
    let roc = (0..sets.variants.len())
        .map(|v| roc_sweep(&sets, v, &plan.thresholds))
        .collect();
    let curves = plan
        .curves
        .iter()
        .map(|(family, grid)| robustness_curve(&sets, family, grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(Report { sets, roc, curves })
}
