//! Structural checks on the asynchronous iteration of a Boolean map.
//!
//! The iteration graph has one vertex per state of `B^n` and, for every
//! state `x` and index `k`, an arc `x -> F_f(k, x)`. Choosing `k` uniformly
//! turns the graph into a Markov chain whose entries are `count / n`;
//! counts are kept as integers so row and column sums are exact.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bds::{iterate_gf, BooleanMap, Configuration, ModeSpec, Strategy};
use crate::error::{Error, Result};
use crate::strategy::{cids_strategy, ciis_strategy, CidsParams, CiisParams, PwlcmParams};

/// Largest size accepted by the exhaustive constructions.
pub const MAX_GRAPH_BITS: usize = 16;

/// Largest size accepted by [`empirical_uniformity`].
pub const MAX_HISTOGRAM_BITS: usize = 12;

fn check_graph_size(n: usize) -> Result<()> {
    if n > MAX_GRAPH_BITS {
        return Err(Error::TooLarge {
            n,
            max: MAX_GRAPH_BITS,
        });
    }
    Ok(())
}

/// Asynchronous iteration graph `Γ(f)`, arcs kept with multiplicity.
#[derive(Clone, Debug)]
pub struct IterationGraph {
    n: usize,
    // successor of state `x` through index `k` lives at `x * n + (k - 1)`
    succ: Vec<u32>,
}

impl IterationGraph {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vertex_count(&self) -> usize {
        1 << self.n
    }

    pub fn arc_count(&self) -> usize {
        self.succ.len()
    }

    /// Successors of `state`, one per index `k = 1..=n`.
    pub fn successors(&self, state: u32) -> &[u32] {
        let start = state as usize * self.n;
        &self.succ[start..start + self.n]
    }

    /// Graphviz rendering; vertices are labelled by their bit strings.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph iteration_graph {\n");
        for x in 0..self.vertex_count() as u32 {
            for (k, &y) in self.successors(x).iter().enumerate() {
                let _ = writeln!(
                    out,
                    "  \"{}\" -> \"{}\" [label=\"{}\"];",
                    label(x, self.n),
                    label(y, self.n),
                    k + 1
                );
            }
        }
        out.push_str("}\n");
        out
    }
}

fn label(state: u32, n: usize) -> String {
    (1..=n)
        .map(|i| if state >> (n - i) & 1 == 1 { '1' } else { '0' })
        .collect()
}

pub fn build_iteration_graph(f: &BooleanMap) -> Result<IterationGraph> {
    let n = f.n();
    check_graph_size(n)?;
    let mut succ = Vec::with_capacity(n << n);
    for x in 0..1u32 << n {
        for k in 1..=n {
            succ.push(f.step_state(k, x));
        }
    }
    Ok(IterationGraph { n, succ })
}

/// Strongly connected components by an iterative Tarjan traversal.
///
/// Returns the component id of every vertex; ids are assigned in the order
/// components are completed.
pub fn scc_components(g: &IterationGraph) -> Vec<u32> {
    const UNVISITED: u32 = u32::MAX;
    let count = g.vertex_count();
    let mut index = vec![UNVISITED; count];
    let mut low = vec![0u32; count];
    let mut on_stack = vec![false; count];
    let mut comp = vec![UNVISITED; count];
    let mut stack: Vec<u32> = Vec::new();
    // (vertex, next successor slot)
    let mut call: Vec<(u32, usize)> = Vec::new();
    let mut next_index = 0u32;
    let mut next_comp = 0u32;

    for root in 0..count as u32 {
        if index[root as usize] != UNVISITED {
            continue;
        }
        call.push((root, 0));
        index[root as usize] = next_index;
        low[root as usize] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root as usize] = true;

        while let Some(&mut (v, ref mut slot)) = call.last_mut() {
            let succ = g.successors(v);
            if *slot < succ.len() {
                let w = succ[*slot];
                *slot += 1;
                if index[w as usize] == UNVISITED {
                    index[w as usize] = next_index;
                    low[w as usize] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w as usize] = true;
                    call.push((w, 0));
                } else if on_stack[w as usize] {
                    low[v as usize] = low[v as usize].min(index[w as usize]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent as usize] = low[parent as usize].min(low[v as usize]);
            }
            if low[v as usize] == index[v as usize] {
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w as usize] = false;
                    comp[w as usize] = next_comp;
                    if w == v {
                        break;
                    }
                }
                next_comp += 1;
            }
        }
    }
    comp
}

pub fn is_strongly_connected(g: &IterationGraph) -> bool {
    scc_components(g).iter().all(|&c| c == 0)
}

/// Markov matrix of uniform-index asynchronous iteration.
///
/// Entry `(x, y)` equals `count(x, y) / n` where `count` is the number of
/// indices `k` with `F_f(k, x) = y`.
#[derive(Clone, Debug)]
pub struct MarkovMatrix {
    n: usize,
    rows: Vec<Vec<(u32, u32)>>,
}

impl MarkovMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn states(&self) -> usize {
        self.rows.len()
    }

    /// Denominator shared by every entry.
    pub fn denominator(&self) -> u32 {
        self.n as u32
    }

    /// Sparse row `x` as `(column, count)` pairs, columns increasing.
    pub fn row(&self, x: u32) -> &[(u32, u32)] {
        &self.rows[x as usize]
    }

    pub fn count(&self, x: u32, y: u32) -> u32 {
        self.rows[x as usize]
            .iter()
            .find(|&&(c, _)| c == y)
            .map_or(0, |&(_, v)| v)
    }

    pub fn entry(&self, x: u32, y: u32) -> f64 {
        self.count(x, y) as f64 / self.n as f64
    }

    /// Integer row sums; each equals the denominator.
    pub fn row_counts(&self) -> Vec<u32> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(_, c)| c).sum())
            .collect()
    }

    pub fn column_counts(&self) -> Vec<u32> {
        let mut cols = vec![0u32; self.rows.len()];
        for row in &self.rows {
            for &(c, v) in row {
                cols[c as usize] += v;
            }
        }
        cols
    }

    /// Dense CSV rendering, header row holds the state index of each column.
    pub fn to_csv(&self) -> String {
        let states = self.states();
        let mut out = String::from("state");
        for s in 0..states {
            let _ = write!(out, ",{s}");
        }
        out.push('\n');
        for x in 0..states as u32 {
            let _ = write!(out, "{x}");
            for y in 0..states as u32 {
                let _ = write!(out, ",{:.6}", self.entry(x, y));
            }
            out.push('\n');
        }
        out
    }

    /// One step `pi M` of the chain.
    pub fn propagate(&self, pi: &[f64]) -> Vec<f64> {
        let inv = 1.0 / self.n as f64;
        let mut next = vec![0.0; pi.len()];
        for (x, row) in self.rows.iter().enumerate() {
            let mass = pi[x];
            if mass == 0.0 {
                continue;
            }
            for &(y, c) in row {
                next[y as usize] += mass * c as f64 * inv;
            }
        }
        next
    }
}

pub fn markov_matrix(f: &BooleanMap) -> Result<MarkovMatrix> {
    let g = build_iteration_graph(f)?;
    Ok(markov_from_graph(&g))
}

pub fn markov_from_graph(g: &IterationGraph) -> MarkovMatrix {
    let rows = (0..g.vertex_count() as u32)
        .map(|x| {
            let mut succ = g.successors(x).to_vec();
            succ.sort_unstable();
            let mut row: Vec<(u32, u32)> = Vec::new();
            for y in succ {
                match row.last_mut() {
                    Some((c, v)) if *c == y => *v += 1,
                    _ => row.push((y, 1)),
                }
            }
            row
        })
        .collect();
    MarkovMatrix { n: g.n, rows }
}

/// Every column sums to one within `tol` (rows do by construction).
pub fn is_doubly_stochastic(m: &MarkovMatrix, tol: f64) -> bool {
    let n = m.n as u64;
    if tol == 0.0 {
        return m.column_counts().iter().all(|&c| c as u64 == n);
    }
    m.column_counts()
        .iter()
        .all(|&c| (c as f64 / n as f64 - 1.0).abs() <= tol)
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Period of an irreducible chain, from BFS levels.
///
/// Returns `None` when the graph is not strongly connected.
pub fn period(g: &IterationGraph) -> Option<u64> {
    if !is_strongly_connected(g) {
        return None;
    }
    let count = g.vertex_count();
    let mut level = vec![u64::MAX; count];
    let mut queue = std::collections::VecDeque::from([0u32]);
    level[0] = 0;
    while let Some(v) = queue.pop_front() {
        for &w in g.successors(v) {
            if level[w as usize] == u64::MAX {
                level[w as usize] = level[v as usize] + 1;
                queue.push_back(w);
            }
        }
    }
    let mut d = 0u64;
    for v in 0..count as u32 {
        for &w in g.successors(v) {
            let lv = level[v as usize] + 1;
            let lw = level[w as usize];
            d = gcd(d, lv.abs_diff(lw));
        }
    }
    Some(d)
}

/// Smallest `k <= cap` with every entry of `M^k` strictly positive.
///
/// Reducible or periodic chains have no such `k` and yield `None` without
/// iterating; primitive chains are bounded by Wielandt's `(N-1)^2 + 1`.
pub fn regularity_exponent(m: &MarkovMatrix, cap: u64) -> Option<u64> {
    if cap == 0 {
        return None;
    }
    let g = IterationGraph {
        n: m.n,
        succ: graph_succ_from_matrix(m),
    };
    if period(&g)? != 1 {
        return None;
    }
    let states = m.states();
    let words = states.div_ceil(64);
    let full_last = if states % 64 == 0 {
        u64::MAX
    } else {
        (1u64 << (states % 64)) - 1
    };
    let is_full = |row: &[u64]| {
        row[..words - 1].iter().all(|&w| w == u64::MAX) && row[words - 1] == full_last
    };

    // reach[x] = set of states reachable from x in exactly k steps
    let mut reach = vec![0u64; states * words];
    for x in 0..states {
        for &(y, _) in &m.rows[x] {
            reach[x * words + y as usize / 64] |= 1 << (y % 64);
        }
    }
    let wielandt = (states as u64 - 1).pow(2) + 1;
    let limit = cap.min(wielandt);
    let mut k = 1u64;
    loop {
        if reach.chunks(words).all(is_full) {
            return Some(k);
        }
        if k >= limit {
            return None;
        }
        let mut next = vec![0u64; states * words];
        for x in 0..states {
            let dst = &mut next[x * words..(x + 1) * words];
            for &(y, _) in &m.rows[x] {
                let src = &reach[y as usize * words..(y as usize + 1) * words];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d |= s;
                }
            }
        }
        reach = next;
        k += 1;
    }
}

fn graph_succ_from_matrix(m: &MarkovMatrix) -> Vec<u32> {
    let mut succ = Vec::with_capacity(m.states() * m.n);
    for row in &m.rows {
        for &(y, c) in row {
            succ.extend(std::iter::repeat_n(y, c as usize));
        }
    }
    succ
}

/// Default regularity cap, `4^n`.
pub fn default_regularity_cap(n: usize) -> u64 {
    4u64.saturating_pow(n as u32)
}

/// Probability vector over `B^n`, indexed by integer state.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionVector {
    probs: Vec<f64>,
}

impl DistributionVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() || !probs.len().is_power_of_two() {
            return Err(Error::InvalidParameter(
                "distribution length must be a power of two".into(),
            ));
        }
        if probs.iter().any(|&p| !(p >= 0.0)) {
            return Err(Error::InvalidParameter(
                "probabilities must be nonnegative".into(),
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        check_graph_size(n)?;
        let states = 1usize << n;
        Ok(Self {
            probs: vec![1.0 / states as f64; states],
        })
    }

    pub fn point_mass(state: u32, n: usize) -> Result<Self> {
        check_graph_size(n)?;
        let states = 1usize << n;
        if state as usize >= states {
            return Err(Error::IndexOutOfRange {
                index: state as usize,
                n: states - 1,
            });
        }
        let mut probs = vec![0.0; states];
        probs[state as usize] = 1.0;
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Max-norm distance to the uniform distribution.
    pub fn gap_to_uniform(&self) -> f64 {
        let u = 1.0 / self.probs.len() as f64;
        self.probs
            .iter()
            .fold(0.0, |acc: f64, &p| acc.max((p - u).abs()))
    }
}

/// Outcome of [`convergence_q`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Convergence {
    pub q: u64,
    pub gap: f64,
}

/// Smallest `q` in `1..=cap` with `max |pi^q - uniform| < eps`.
pub fn convergence_q(
    m: &MarkovMatrix,
    pi0: &DistributionVector,
    eps: f64,
    cap: u64,
) -> Result<Option<Convergence>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    if pi0.probs.len() != m.states() {
        return Err(Error::SizeMismatch {
            expected: m.states(),
            actual: pi0.probs.len(),
        });
    }
    let mut pi = pi0.probs.clone();
    let u = 1.0 / m.states() as f64;
    for q in 1..=cap {
        pi = m.propagate(&pi);
        let gap = pi.iter().fold(0.0, |acc: f64, &p| acc.max((p - u).abs()));
        if gap < eps {
            return Ok(Some(Convergence { q, gap }));
        }
    }
    Ok(None)
}

/// How strategies are drawn in [`empirical_uniformity`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StrategySource {
    /// Each term uniform on `1..=n`, independent of everything else.
    Uniform,
    /// CIIS with a fresh key and control parameter per trial.
    Ciis,
    /// CIDS driven by the trial's own initial configuration; bound `q - 1`.
    Cids,
}

/// Histogram of final states and its Pearson statistic against uniform.
#[derive(Clone, Debug)]
pub struct UniformityReport {
    pub histogram: Vec<u64>,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
}

impl UniformityReport {
    pub fn trials(&self) -> u64 {
        self.histogram.iter().sum()
    }

    /// Upper `p`-quantile of the reference chi-square distribution.
    pub fn critical_value(&self, p: f64) -> f64 {
        chi_square_quantile(self.degrees_of_freedom, p)
    }
}

pub fn chi_square_quantile(dof: usize, p: f64) -> f64 {
    ChiSquared::new(dof as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(p)
}

/// Iterates `q` steps from uniformly drawn initial configurations.
pub fn empirical_uniformity(
    f: &BooleanMap,
    source: StrategySource,
    q: usize,
    trials: usize,
    seed: u64,
) -> Result<UniformityReport> {
    let n = f.n();
    if n > MAX_HISTOGRAM_BITS {
        return Err(Error::TooLarge {
            n,
            max: MAX_HISTOGRAM_BITS,
        });
    }
    let cells = 1usize << n;
    let required = 100 * cells;
    if trials < required {
        return Err(Error::InsufficientTrials { trials, required });
    }
    if source == StrategySource::Cids && (q == 0 || q - 1 > n) {
        return Err(Error::InvalidParameter(format!(
            "CIDS yields bound + 1 terms with bound <= n; q = {q} is not reachable for n = {n}"
        )));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut histogram = vec![0u64; cells];
    let message = vec![true, false, true, true];
    for _ in 0..trials {
        let state = rng.random_range(0..cells as u32);
        let x0 = Configuration::from_state(state, n)?;
        let strategy = match source {
            StrategySource::Uniform => {
                let terms = (0..q).map(|_| rng.random_range(1..=n as u32)).collect();
                Strategy::new(n, terms)?
            }
            StrategySource::Ciis => {
                let key = open_unit(&mut rng);
                let alpha = PwlcmParams::new(open_unit(&mut rng) * 0.5)?;
                let params = CiisParams::new(key, message.clone(), alpha, 64)?;
                ciis_strategy(&params, n, q)?
            }
            StrategySource::Cids => {
                let params = CidsParams::new(q - 1, x0.bits().to_vec())?;
                cids_strategy(&params, n)?
            }
        };
        let xq = iterate_gf(f, &strategy, &x0, q)?;
        histogram[xq.to_state().expect("n <= 12") as usize] += 1;
    }
    let expected = trials as f64 / cells as f64;
    let chi_square = histogram
        .iter()
        .map(|&o| (o as f64 - expected).powi(2) / expected)
        .sum();
    Ok(UniformityReport {
        histogram,
        chi_square,
        degrees_of_freedom: cells - 1,
    })
}

// Uniform draw from the open interval (0, 1).
fn open_unit(rng: &mut impl Rng) -> f64 {
    loop {
        let v: f64 = rng.random();
        if v > 0.0 {
            return v;
        }
    }
}

/// The checklist reported by `verify-mode`.
#[derive(Clone, Debug)]
pub struct ModeReport {
    pub n: usize,
    pub strongly_connected: bool,
    pub doubly_stochastic: bool,
    pub regularity_exponent: Option<u64>,
    /// Worst case over all point-mass starting states.
    pub convergence: Option<Convergence>,
}

pub fn verify_mode(mode: &ModeSpec, n: usize, eps: f64, cap: u64) -> Result<ModeReport> {
    let f = crate::bds::instantiate_mode(mode, n)?;
    let g = build_iteration_graph(&f)?;
    let m = markov_from_graph(&g);
    let strongly_connected = is_strongly_connected(&g);
    let doubly_stochastic = is_doubly_stochastic(&m, 0.0);
    let regularity = regularity_exponent(&m, default_regularity_cap(n).min(cap.max(1)));
    let mut worst: Option<Convergence> = None;
    for s in 0..m.states() as u32 {
        let pi0 = DistributionVector::point_mass(s, n)?;
        match convergence_q(&m, &pi0, eps, cap)? {
            Some(c) => {
                if worst.is_none_or(|w| c.q > w.q) {
                    worst = Some(c);
                }
            }
            None => {
                worst = None;
                break;
            }
        }
    }
    Ok(ModeReport {
        n,
        strongly_connected,
        doubly_stochastic,
        regularity_exponent: regularity,
        convergence: worst,
    })
}
