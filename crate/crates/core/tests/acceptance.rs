//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails.

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use dhci::attack::AttackSpec;
use dhci::bds::{instantiate_mode, Configuration, ModeSpec};
use dhci::corpus::synthetic_image;
use dhci::eval::{self, ExperimentPlan, KeySource, Report};
use dhci::media::{self, Domain};
use dhci::scheme::{self, EmbedConfig};
use dhci::verify::{self, DistributionVector, StrategySource};

const FIXTURE_COUNT: usize = 10;
const FIXTURE_SIDE: usize = 512;
const FIXTURE_SEED: u64 = 2024;

const ROC_ATTACKS: [&str; 14] = [
    "crop:4",
    "crop:16",
    "crop:36",
    "jpeg:90",
    "jpeg:70",
    "jpeg:50",
    "j2k:1",
    "j2k:4",
    "contrast:0.76",
    "contrast:1.2",
    "sharpen:0.5",
    "rot:2",
    "rot:5",
    "rot:10",
];

struct Outcome {
    failures: usize,
}

impl Outcome {
    fn report(&mut self, id: &str, ok: bool, detail: String) {
        println!("{} {id}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            self.failures += 1;
        }
    }
}

fn fqq_structure(out: &mut Outcome) {
    let start = Instant::now();
    let mut bad = Vec::new();
    for l in 1..=10 {
        let f = instantiate_mode(&ModeSpec::Fqq, l).unwrap();
        let g = verify::build_iteration_graph(&f).unwrap();
        let m = verify::markov_from_graph(&g);
        if !verify::is_strongly_connected(&g) || !verify::is_doubly_stochastic(&m, 0.0) {
            bad.push(l);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    out.report(
        "1 fqq strongly connected and doubly stochastic, l=1..10",
        bad.is_empty() && secs <= 60.0,
        format!("failing l={bad:?}, {secs:.2}s"),
    );
}

fn convergence(out: &mut Outcome) {
    let start = Instant::now();
    let mut worst = Vec::new();
    let mut ok = true;
    for l in 2..=8 {
        let f = instantiate_mode(&ModeSpec::Fqq, l).unwrap();
        let m = verify::markov_matrix(&f).unwrap();
        let mut q_max = 0;
        for s in 0..1u32 << l {
            let pi0 = DistributionVector::point_mass(s, l).unwrap();
            match verify::convergence_q(&m, &pi0, 1e-4, 1_000_000).unwrap() {
                Some(c) if c.gap < 1e-4 => q_max = q_max.max(c.q),
                _ => ok = false,
            }
        }
        worst.push((l, q_max));
    }
    let secs = start.elapsed().as_secs_f64();
    out.report(
        "2 fqq converges to uniform from every point mass, l=2..8",
        ok && secs <= 120.0,
        format!("worst q per l {worst:?}, {secs:.2}s"),
    );
}

// Component images written straight from the definitions, bit 1 as the MSB.
fn reference_image(mode: &ModeSpec, n: usize, x: u32) -> u32 {
    let bit = |i: usize| (x >> (n - i)) & 1;
    match mode {
        ModeSpec::Negation => !x & ((1 << n) - 1),
        ModeSpec::Fqq => (1..=n).fold(0, |acc, i| {
            let v = if i % 2 == 1 { 1 - bit(i) } else { bit(i) ^ bit(i - 1) };
            acc | (v << (n - i))
        }),
        ModeSpec::TruthTable(t) => t[x as usize],
    }
}

fn oracle_equivalence(out: &mut Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut cases: Vec<(ModeSpec, usize)> = Vec::new();
    for n in 1..=8 {
        cases.push((ModeSpec::Negation, n));
        cases.push((ModeSpec::Fqq, n));
        cases.push((ModeSpec::identity(n).unwrap(), n));
    }
    for _ in 0..20 {
        let n = rng.random_range(1..=8usize);
        let table = (0..1u32 << n).map(|_| rng.random_range(0..1u32 << n)).collect();
        cases.push((ModeSpec::TruthTable(table), n));
    }
    let mut discrepancies = 0usize;
    for (mode, n) in &cases {
        let f = instantiate_mode(mode, *n).unwrap();
        let g = verify::build_iteration_graph(&f).unwrap();
        let m = verify::markov_matrix(&f).unwrap();
        for x in 0..1u32 << n {
            let image = reference_image(mode, *n, x);
            let mut counts = std::collections::BTreeMap::new();
            for k in 1..=*n {
                let mask = 1 << (n - k);
                let y = (x & !mask) | (image & mask);
                *counts.entry(y).or_insert(0u32) += 1;
                if g.successors(x)[k - 1] != y {
                    discrepancies += 1;
                }
            }
            let row: Vec<(u32, u32)> = counts.into_iter().collect();
            if m.row(x) != row.as_slice() {
                discrepancies += 1;
            }
        }
    }
    out.report(
        "3 graph and Markov matrix match brute force, n<=8",
        discrepancies == 0,
        format!("{} maps, {discrepancies} discrepancies", cases.len()),
    );
}

fn stego_security(out: &mut Outcome) {
    let f = instantiate_mode(&ModeSpec::Negation, 4).unwrap();
    let r = verify::empirical_uniformity(&f, StrategySource::Uniform, 64, 51_200, 99).unwrap();
    let critical = r.critical_value(0.999);
    let cids = verify::empirical_uniformity(&f, StrategySource::Cids, 5, 51_200, 99).unwrap();
    let all_ones = cids.histogram[15];
    out.report(
        "4 uniform strategy gives uniform states; CIDS never reaches all ones",
        r.chi_square < critical && all_ones == 0,
        format!(
            "chi2={:.3} < {critical:.3}, all-ones count under CIDS {all_ones}",
            r.chi_square
        ),
    );
}

fn round_trip(out: &mut Outcome, report: &Report) {
    let sets = &report.sets;
    let message = eval::text_bits("mark");
    let mut jobs = Vec::new();
    for h in 0..sets.hosts.len() {
        for d in [Domain::Spatial, Domain::Dwt, Domain::Dct] {
            for m in [ModeSpec::Negation, ModeSpec::Fqq] {
                jobs.push((h, d, m));
            }
        }
    }
    let rates: Vec<f64> = jobs
        .par_iter()
        .map(|(h, d, m)| {
            let host = &sets.hosts[*h];
            let key = sets.keys.get(&host.id).unwrap();
            let cfg = EmbedConfig::new(*d, m.clone(), key.key, key.alpha).unwrap();
            let e = scheme::embed(&host.image, &message, &cfg).unwrap();
            scheme::detect(&host.image, &message, &e.image, &cfg, cfg.default_threshold())
                .unwrap()
                .difference_rate
        })
        .collect();
    let nonzero = rates.iter().filter(|&&r| r != 0.0).count();
    out.report(
        "5 unattacked round trip gives rate 0",
        nonzero == 0,
        format!("{} embeddings, {nonzero} with nonzero rate", rates.len()),
    );
}

fn unrelated_images(out: &mut Outcome, report: &Report) {
    let sets = &report.sets;
    let others: Vec<_> = (0..50u64)
        .into_par_iter()
        .map(|i| synthetic_image(FIXTURE_SIDE, FIXTURE_SIDE, 50_000 + i))
        .collect();
    let mut means = Vec::new();
    for v in 0..sets.variants.len() {
        let item = sets.marked(v).next().unwrap();
        let rates: Vec<f64> = others
            .par_iter()
            .map(|z| {
                let obs = Configuration::new(media::extract_lscs(z, &item.config().codec).unwrap()).unwrap();
                scheme::difference_rate(&item.mark, &obs).unwrap()
            })
            .collect();
        means.push(rates.iter().sum::<f64>() / rates.len() as f64);
    }
    let ok = means.iter().all(|m| (45.0..=55.0).contains(m));
    out.report(
        "6 mean rate against 50 unrelated images lies in [45, 55]",
        ok,
        format!("{}", labelled(report, &means)),
    );
}

fn labelled(report: &Report, values: &[f64]) -> String {
    report
        .sets
        .variants
        .iter()
        .zip(values)
        .map(|(v, x)| format!("{v}={x:.2}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn fidelity(out: &mut Outcome, report: &Report) {
    let sets = &report.sets;
    let psnr: Vec<f64> = (0..sets.variants.len()).map(|v| sets.mean_psnr(v)).collect();
    let ok = sets.variants.iter().zip(&psnr).all(|(v, &p)| match v.domain {
        Domain::Dwt => p >= 38.0,
        Domain::Dct => p >= 47.0,
        Domain::Spatial => true,
    });
    out.report(
        "7 mean PSNR >= 38 dB (DWT) and >= 47 dB (DCT)",
        ok,
        labelled(report, &psnr),
    );
}

fn curve<'a>(report: &'a Report, family: &str) -> &'a eval::Curve {
    report.curves.iter().find(|c| c.family == family).unwrap()
}

// Pairs each DCT variant with the DWT variant of the same mode.
fn ordered(report: &Report, family: &str, dct_first: bool) -> (bool, String) {
    let sets = &report.sets;
    let mut ok = true;
    let mut detail = Vec::new();
    for (p, rates) in &curve(report, family).rows {
        for mode in ["neg", "fqq"] {
            let dwt = rates[sets.variant_index(&format!("dwt_{mode}")).unwrap()];
            let dct = rates[sets.variant_index(&format!("dct_{mode}")).unwrap()];
            let holds = if dct_first { dct <= dwt } else { dwt <= dct };
            ok &= holds;
            detail.push(format!(
                "{family}:{p} {mode} dwt={dwt:.2} dct={dct:.2}{}",
                if holds { "" } else { " (violated)" }
            ));
        }
    }
    (ok, detail.join("; "))
}

fn robustness(out: &mut Outcome, report: &Report, secs: f64) {
    let crop = curve(report, "crop");
    let worst = crop
        .rows
        .iter()
        .flat_map(|(_, r)| r.iter().copied())
        .fold(0.0, f64::max);
    out.report(
        "8a cropping up to 36% keeps every mean rate below 50",
        worst < 50.0 && secs <= 900.0,
        format!("worst mean rate {worst:.2}, corpus run {secs:.1}s"),
    );
    let (ok, detail) = ordered(report, "jpeg", true);
    out.report("8b JPEG quality 90/70/50: DCT <= DWT", ok && secs <= 900.0, detail);
    let (ok, detail) = ordered(report, "j2k", false);
    out.report("8c wavelet quantization: DWT <= DCT", ok && secs <= 900.0, detail);
    let (ok, detail) = ordered(report, "rot", true);
    out.report("8d rotation 2/5/10 degrees: DCT <= DWT", ok && secs <= 900.0, detail);
}

fn roc(out: &mut Outcome, report: &Report) {
    let sets = &report.sets;
    let mut ok = true;
    let mut detail = Vec::new();
    for (v, variant) in sets.variants.iter().enumerate() {
        let sweep = &report.roc[v];
        let monotone = sweep
            .windows(2)
            .all(|w| w[0].tpr <= w[1].tpr && w[0].fpr <= w[1].fpr);
        ok &= monotone;
        if variant.domain == Domain::Dwt {
            let best = sweep
                .iter()
                .filter(|p| (40.0..=50.0).contains(&p.threshold))
                .max_by(|a, b| (a.tpr - a.fpr).total_cmp(&(b.tpr - b.fpr)))
                .unwrap();
            ok &= best.tpr - best.fpr >= 0.5;
            detail.push(format!(
                "{variant} best t={} tpr={:.3} fpr={:.3}",
                best.threshold, best.tpr, best.fpr
            ));
        } else {
            detail.push(format!("{variant} monotone={monotone}"));
        }
    }
    out.report(
        &format!("9 ROC monotone, DWT reaches TPR-FPR >= 0.5 on t in [40,50] ({} attacks)", ROC_ATTACKS.len()),
        ok,
        detail.join("; "),
    );
}

fn determinism(out: &mut Outcome) {
    let dir = tempfile::tempdir().unwrap();
    let plan_text = "
[corpus]
synthetic = 3
width = 128
height = 128
seed = 5

[embed]
keys = \"keys.toml\"

[attacks]
specs = [\"crop:16\", \"jpeg:70\", \"rot:5\"]

[curves]
jpeg = [90, 50]
";
    let run = |sub: &str| -> Vec<(String, Vec<u8>)> {
        let mut plan = ExperimentPlan::from_toml(plan_text, dir.path()).unwrap();
        plan.output = dir.path().join(sub);
        eval::run_plan(&plan).unwrap().write(&plan.output).unwrap();
        let mut files: Vec<_> = std::fs::read_dir(&plan.output)
            .unwrap()
            .map(|e| {
                let p = e.unwrap().path();
                (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let first = run("a");
    let key_file_written = Path::new(&dir.path().join("keys.toml")).exists();
    let second = run("b");
    out.report(
        "10 two bench runs with one key file give identical outputs",
        key_file_written && first == second && first.len() >= 3,
        format!("{} files compared", first.len()),
    );
}

fn main() {
    let mut out = Outcome { failures: 0 };
    fqq_structure(&mut out);
    convergence(&mut out);
    oracle_equivalence(&mut out);
    stego_security(&mut out);

    let start = Instant::now();
    let attacks: Vec<AttackSpec> = ROC_ATTACKS.iter().map(|s| s.parse().unwrap()).collect();
    let mut plan = ExperimentPlan::synthetic(
        FIXTURE_COUNT,
        FIXTURE_SIDE,
        FIXTURE_SEED,
        attacks,
        std::env::temp_dir(),
    );
    plan.keys = KeySource::Seed(FIXTURE_SEED);
    plan.curves = vec![
        ("crop".into(), vec![1.0, 4.0, 9.0, 16.0, 25.0, 36.0]),
        ("jpeg".into(), vec![90.0, 70.0, 50.0]),
        ("j2k".into(), vec![1.0, 2.0, 4.0, 8.0, 16.0]),
        ("rot".into(), vec![2.0, 5.0, 10.0]),
    ];
    let report = eval::run_plan(&plan).unwrap();
    let secs = start.elapsed().as_secs_f64();

    round_trip(&mut out, &report);
    unrelated_images(&mut out, &report);
    fidelity(&mut out, &report);
    robustness(&mut out, &report, secs);
    roc(&mut out, &report);
    determinism(&mut out);

    println!(
        "acceptance: {} failing criteria",
        out.failures
    );
    if out.failures > 0 {
        std::process::exit(1);
    }
}
