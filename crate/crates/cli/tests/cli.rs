use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dhci(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dhci"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

struct Fixture {
    dir: tempfile::TempDir,
}

impl Fixture {
    fn new(domain: &str, mode: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let f = Self { dir };
        assert!(f.run(&["synth", "--count", "1", "--size", "128", "--seed", "3", "--dir", "."]).status.success());
        assert!(f
            .run(&["keygen", "--seed", "9", "--domain", domain, "--mode", mode, "--out", "key.toml"])
            .status
            .success());
        std::fs::write(f.path("msg.bin"), b"watermark").unwrap();
        f
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn run(&self, args: &[&str]) -> Output {
        dhci(args, self.dir.path())
    }

    fn scheme(&self, sub: &str, extra: &[&str]) -> Output {
        let mut args = vec![sub, "--host", "syn-000.pgm", "--message", "msg.bin", "--key", "key.toml"];
        args.extend_from_slice(extra);
        self.run(&args)
    }
}

#[test]
fn embed_then_detect_exits_zero_with_rate_zero() {
    for domain in ["spatial", "dwt", "dct"] {
        let f = Fixture::new(domain, "fqq");
        let e = f.scheme("embed", &["--out", "z.pgm"]);
        assert!(e.status.success(), "{}", String::from_utf8_lossy(&e.stderr));
        assert!(stdout(&e).starts_with("lm="));
        let d = f.scheme("detect", &["--suspect", "z.pgm"]);
        assert_eq!(d.status.code(), Some(0), "{domain}");
        assert!(stdout(&d).contains("rate=0.000000"), "{}", stdout(&d));
    }
}

#[test]
fn unmarked_suspect_exits_one() {
    let f = Fixture::new("dwt", "neg");
    let d = f.scheme("detect", &["--suspect", "syn-000.pgm"]);
    assert_eq!(d.status.code(), Some(1));
    assert!(stdout(&d).contains("verdict=not-watermarked"));
}

#[test]
fn embedding_is_byte_reproducible() {
    let f = Fixture::new("dct", "neg");
    f.scheme("embed", &["--out", "a.pgm"]);
    f.scheme("embed", &["--out", "b.pgm"]);
    assert_eq!(std::fs::read(f.path("a.pgm")).unwrap(), std::fs::read(f.path("b.pgm")).unwrap());
}

#[test]
fn errors_exit_two_without_output() {
    let f = Fixture::new("dwt", "fqq");
    let o = f.run(&["attack", "--in", "missing.pgm", "--spec", "crop:36", "--out", "x.pgm"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!f.path("x.pgm").exists());

    let o = f.run(&["attack", "--in", "syn-000.pgm", "--spec", "blur:1", "--out", "x.pgm"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!f.path("x.pgm").exists());

    let o = f.run(&["verify-mode", "--mode", "fqq", "--l", "40"]);
    assert_eq!(o.status.code(), Some(2));

    let o = f.run(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_mode_reports_the_checklist() {
    let dir = tempfile::tempdir().unwrap();
    let o = dhci(&["verify-mode", "--mode", "fqq", "--l", "8"], dir.path());
    let s = stdout(&o);
    assert!(s.contains("connected=true doubly_stochastic=true"), "{s}");
    assert!(s.contains("regular=true"));

    let s = stdout(&dhci(&["verify-mode", "--mode", "neg", "--l", "4"], dir.path()));
    assert!(s.contains("connected=true doubly_stochastic=true regular=false"), "{s}");
}

#[test]
fn strategy_test_prints_histogram_and_statistic() {
    let dir = tempfile::tempdir().unwrap();
    let s = stdout(&dhci(&["strategy-test", "--adapter", "cids", "--n", "4", "--q", "5"], dir.path()));
    assert!(s.lines().any(|l| l == "1111,0"), "{s}");
    assert!(s.contains("uniform=false"));
}

#[test]
fn attack_and_quality() {
    let f = Fixture::new("dwt", "fqq");
    assert!(f.run(&["attack", "--in", "syn-000.pgm", "--spec", "rot:5", "--out", "r.pgm"]).status.success());
    let s = stdout(&f.run(&["quality", "--a", "syn-000.pgm", "--b", "r.pgm"]));
    assert!(s.starts_with("mse=") && !s.contains("psnr=inf"), "{s}");
    let s = stdout(&f.run(&["quality", "--a", "r.pgm", "--b", "r.pgm"]));
    assert!(s.contains("mse=0.000000 psnr=inf"), "{s}");
}

#[test]
fn bench_writes_identical_csvs_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("plan.toml"),
        "[corpus]\nsynthetic = 2\nwidth = 64\nheight = 64\n\n[embed]\nkeys = \"keys.toml\"\n\n[attacks]\nspecs = [\"jpeg:70\", \"crop:25\"]\n\n[curves]\ncrop = [9, 36]\n",
    )
    .unwrap();
    let run = |out: &str| {
        let o = dhci(&["bench", "--plan", "plan.toml", "--jobs", "2", "--out", out], dir.path());
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        ["roc.csv", "curve_crop.csv", "manifest.txt"]
            .map(|n| std::fs::read(dir.path().join(out).join(n)).unwrap())
    };
    assert_eq!(run("a"), run("b"));
    assert!(dir.path().join("keys.toml").exists());
}
