use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nilcorr_cli::config::{
    parse_config, print_config, Config, CorrelationBlock, Delta, EquidistBlock, IndexRange, IntegrationKind,
    ObsBlock, PolyBlock, PolyLit, Positive,
};
use proptest::prelude::*;
use tempfile::TempDir;
use toml::Spanned;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

struct Run {
    dir: TempDir,
}

impl Run {
    fn new() -> Self {
        Run {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn out(&self) -> PathBuf {
        self.dir.path().join("out")
    }

    fn exec(&self, args: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_nilcorr"))
            .args(args)
            .arg("--out")
            .arg(self.out())
            .env("NILCORR_SIEVE_CACHE", self.dir.path().join("sieve"))
            .env_remove("NILCORR_THREADS")
            .output()
            .unwrap()
    }

    fn with_config(&self, source: &str, args: &[&str]) -> Output {
        let path = self.dir.path().join("config.toml");
        std::fs::write(&path, source).unwrap();
        let mut all = vec!["--config", path.to_str().unwrap()];
        all.extend_from_slice(args);
        self.exec(&all)
    }

    fn csv(&self, name: &str) -> String {
        std::fs::read_to_string(self.out().join(name)).unwrap()
    }
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SPEC: &str = r#"
[system.torus]
dim = 1
rank = 1
angles = [["1/2*sqrt(2)"]]

[obs.f0]
kind = "char"
freq = [1]

[obs.f1]
kind = "char"
freq = [-1]

[poly.q]
coords = ["sqrt(2)*x"]

[correlation]
functions = ["f0", "f1"]
polys = ["q"]
range = [0, 50]
"#;

#[test]
fn shipped_configs_round_trip() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let source = std::fs::read_to_string(&path).unwrap();
        let c = parse_config(&source).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(parse_config(&print_config(&c)).unwrap(), c, "{}", path.display());
    }
}

fn name() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,6}"
}

fn poly_text() -> impl Strategy<Value = String> {
    (-9i64..9, 1i64..9, -9i64..9, prop::sample::select(vec!["", "sqrt(2)*", "sqrt(5)*", "pi*"]))
        .prop_map(|(a, b, c, s)| {
            let sign = if c < 0 { '-' } else { '+' };
            format!("{a}/{b}*{s}x^2 {sign} {}", c.abs())
        })
}

fn config() -> impl Strategy<Value = Config> {
    (
        prop::collection::btree_map(name(), prop::collection::vec(-5i64..5, 1..3), 1..4),
        prop::collection::btree_map(name(), poly_text(), 1..4),
        prop::collection::vec(1u32..999, 1..4),
        (0i64..100, 1i64..100),
        prop::sample::select(vec![IntegrationKind::Auto, IntegrationKind::Exact, IntegrationKind::Quadrature]),
        1u32..10_000,
    )
        .prop_map(|(obs, polys, deltas, (start, len), integration, points)| {
            let mut deltas: Vec<f64> = deltas.into_iter().map(|d| f64::from(d) / 1000.0).collect();
            deltas.sort_by(|a, b| b.total_cmp(a));
            let first_poly = polys.keys().next().unwrap().clone();
            let first_obs = obs.keys().next().unwrap().clone();
            let spanned = |s: &str| Spanned::new(0..0, s.to_string());
            Config {
                obs: obs
                    .into_iter()
                    .map(|(k, freq)| (k, ObsBlock::Char { freq, amp: [1.0, -0.5] }))
                    .collect(),
                poly: polys
                    .into_iter()
                    .map(|(k, text)| {
                        let coords = PolyLit::try_from(vec![text]).unwrap();
                        (k, PolyBlock { coords })
                    })
                    .collect(),
                correlation: Some(CorrelationBlock {
                    functions: vec![spanned(&first_obs), spanned(&format!("{first_obs}*{first_obs}"))],
                    polys: vec![spanned(&first_poly)],
                    brackets: None,
                    integration,
                    quadrature_points: Positive(points),
                    range: Some(IndexRange { start, end: start + len }),
                }),
                equidist: Some(EquidistBlock {
                    poly: spanned(&first_poly),
                    deltas: deltas.into_iter().map(Delta).collect(),
                    range: Some(IndexRange { start, end: start + len }),
                    primes: None,
                    ap: None,
                }),
                ..Config::default()
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_configs_round_trip(c in config()) {
        let text = print_config(&c);
        let back = parse_config(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, c);
    }
}

#[test]
fn delta_outside_unit_interval_is_a_validation_error() {
    let run = Run::new();
    let o = run.with_config(
        "[poly.q]\ncoords = [\"x\"]\n\n[equidist]\npoly = \"q\"\ndeltas = [1.5]\nrange = [1, 10]\n",
        &["equidist"],
    );
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 6: delta outside (0,1)"), "{}", stderr(&o));
}

#[test]
fn duplicates_unknown_keys_and_dangling_references() {
    let run = Run::new();
    let dup = run.with_config("[poly.q]\ncoords = [\"x\"]\n[poly.q]\ncoords = [\"x\"]\n", &["equidist"]);
    assert_eq!(dup.status.code(), Some(1));
    assert!(stderr(&dup).contains("line 3: duplicate definition"), "{}", stderr(&dup));

    let unknown = run.with_config("[poly.q]\ncoords = [\"x\"]\nextra = 1\n", &["equidist"]);
    assert_eq!(unknown.status.code(), Some(1));
    assert!(stderr(&unknown).contains("unknown field `extra`"), "{}", stderr(&unknown));

    let dangling = run.with_config(&SPEC.replace("polys = [\"q\"]", "polys = [\"r\"]"), &["correlate"]);
    assert_eq!(dangling.status.code(), Some(1));
    assert!(
        stderr(&dangling).contains("line 20: unresolved reference to polynomial `r`"),
        "{}",
        stderr(&dangling)
    );

    let product = run.with_config(&SPEC.replace("\"f0\", \"f1\"", "\"f0\", \"f1*g\""), &["correlate"]);
    assert_eq!(product.status.code(), Some(1));
    assert!(stderr(&product).contains("observable `g`"), "{}", stderr(&product));
}

#[test]
fn dimension_mismatch_is_a_validation_error() {
    let run = Run::new();
    let o = run.with_config(&SPEC.replace("freq = [-1]", "freq = [-1, 2]"), &["correlate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 19: observable `f1` has 2 coordinates"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let run = Run::new();
    let blocker = run.dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let path = run.dir.path().join("config.toml");
    std::fs::write(&path, SPEC).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_nilcorr"))
        .args(["--config", path.to_str().unwrap(), "--out"])
        .arg(blocker.join("sub"))
        .arg("correlate")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn usage_errors_and_help() {
    let run = Run::new();
    assert_eq!(run.exec(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run.exec(&["--threads", "0", "correlate"]).status.code(), Some(1));
    assert_eq!(run.exec(&["--help"]).status.code(), Some(0));
}

#[test]
fn correlate_writes_full_precision_rows() {
    let run = Run::new();
    let o = run.with_config(SPEC, &["correlate"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = run.csv("correlate.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,re(alpha),im(alpha)"));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first, ["0", "1.0000000000000000e0", "0.0000000000000000e0"]);
    assert_eq!(csv.lines().count(), 51);
    let summary = std::fs::read_to_string(run.out().join("summary.txt")).unwrap();
    assert!(summary.contains("integration: exact"), "{summary}");
}

#[test]
fn rational_equidist_reports_exact_zero() {
    let run = Run::new();
    let o = run.exec(&["--config", configs().join("equidist_rational.toml").to_str().unwrap(), "equidist"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = run.csv("equidist.csv");
    assert!(csv.starts_with("delta,hits,total,density,verdict\n"));
    for row in csv.lines().skip(1) {
        assert!(row.ends_with(",0,100000,0.0000000000000000e0,exact-zero"), "{row}");
    }
}

#[test]
fn equidist_flags_override_the_config() {
    let run = Run::new();
    let o = run.exec(&["equidist", "--poly", "sqrt(2)*x", "--delta", "0.5", "--delta", "0.1", "--range", "1:1001"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = run.csv("equidist.csv");
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().all(|l| !l.ends_with("exact-zero")));

    // {(2p + 1)/4} is 3/4 for odd p and 1/4 for p = 2; π(1000) = 168.
    for (delta, tail) in [("0.2", ",0,168,0.0000000000000000e0,exact-zero"), ("0.3", ",167,168,")] {
        let o = run.exec(&["equidist", "--poly", "1/4*x", "--delta", delta, "--primes", "1000", "--ap", "2:1"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let row = run.csv("equidist.csv").lines().nth(1).unwrap().to_string();
        assert!(row.contains(tail), "{row}");
    }

    let ascending = run.exec(&["equidist", "--poly", "x", "--delta", "0.1", "--delta", "0.5", "--range", "1:10"]);
    assert_eq!(ascending.status.code(), Some(1));
}

#[test]
fn suspend_agrees_off_the_exceptional_set() {
    let run = Run::new();
    let o = run.exec(&["--config", configs().join("suspend.toml").to_str().unwrap(), "suspend"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = run.csv("suspend.csv");
    assert!(csv.starts_with("n,exceptional,re(alpha),re(alpha_tilde_scaled),abs_diff\n"));
    let mut regular = 0;
    for row in csv.lines().skip(1) {
        let cells: Vec<&str> = row.split(',').collect();
        let diff: f64 = cells[4].parse().unwrap();
        assert!(diff <= 2.0);
        if cells[1] == "false" {
            regular += 1;
            assert!(diff <= 1e-12, "{row}");
        }
    }
    assert!(regular > 7000);
}

#[test]
fn average_is_thread_count_independent_and_caches_the_sieve() {
    let run = Run::new();
    let path = configs().join("average.toml");
    let mut tables = Vec::new();
    for k in ["1", "3"] {
        let o = run.exec(&["--config", path.to_str().unwrap(), "--threads", k, "average"]);
        assert!(o.status.success(), "{}", stderr(&o));
        tables.push(run.csv("average.csv"));
    }
    assert_eq!(tables[0], tables[1]);
    assert!(tables[0].starts_with("scheme,value_re,value_im\ncesaro:1:100001,"));
    let cache = std::fs::read(run.dir.path().join("sieve")).unwrap();
    assert_eq!(&cache[..5], b"NCSV1");
    assert!(u64::from_le_bytes(cache[5..13].try_into().unwrap()) >= 100_000);

    let flags = run.exec(&["--config", path.to_str().unwrap(), "average", "--cesaro", "1:11"]);
    assert!(flags.status.success(), "{}", stderr(&flags));
    assert_eq!(run.csv("average.csv").lines().count(), 2);
}

#[test]
fn approx_error_labels_the_candidate() {
    let run = Run::new();
    let o = run.exec(&["--config", configs().join("approx.toml").to_str().unwrap(), "approx-error"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = run.csv("approx_error.csv");
    assert!(csv.starts_with("scheme,error\n"));
    for row in csv.lines().skip(1) {
        let err: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
        assert!(err <= 0.1, "{row}");
    }
    let summary = std::fs::read_to_string(run.out().join("summary.txt")).unwrap();
    assert!(summary.contains("constructive"), "{summary}");

    let unmollified = run.with_config(
        &std::fs::read_to_string(configs().join("approx.toml")).unwrap().replace("mollify = 0.025\n", ""),
        &["approx-error"],
    );
    assert!(unmollified.status.success(), "{}", stderr(&unmollified));
    let summary = std::fs::read_to_string(run.out().join("summary.txt")).unwrap();
    assert!(summary.contains("candidate verification only"), "{summary}");
}
