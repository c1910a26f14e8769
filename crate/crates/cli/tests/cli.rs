use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_dephasr");
const HEADER: &str = "t1,t2,method,pair,re,im";

#[derive(Debug, Clone, PartialEq)]
struct Row {
    t1: f64,
    t2: f64,
    method: String,
    pair: String,
    re: f64,
    im: f64,
}

fn dephasr(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn dephasr_ok(args: &[&str]) -> Output {
    let out = dephasr(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn parse_rows(text: &str) -> Vec<Row> {
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            assert_eq!(f.len(), 6, "{line}");
            let num = |s: &str| -> f64 {
                let x: f64 = s.parse().unwrap();
                assert!(x.is_finite(), "{line}");
                x
            };
            Row {
                t1: num(f[0]),
                t2: num(f[1]),
                method: f[2].to_string(),
                pair: f[3].to_string(),
                re: num(f[4]),
                im: num(f[5]),
            }
        })
        .collect()
}

fn groups(rows: &[Row]) -> BTreeMap<(String, String, String), Vec<Row>> {
    let mut out: BTreeMap<_, Vec<Row>> = BTreeMap::new();
    for r in rows {
        out.entry((r.method.clone(), r.pair.clone(), format!("{}", r.t2)))
            .or_default()
            .push(r.clone());
    }
    out
}

fn max_dev(a: &[Row], b: &[Row]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            assert_eq!(x.t1, y.t1);
            (x.re - y.re).hypot(x.im - y.im)
        })
        .fold(0.0, f64::max)
}

fn figure(id: &str, dir: &Path) -> Vec<Row> {
    dephasr_ok(&["figure", "--id", id, "--out-dir", dir.to_str().unwrap()]);
    parse_rows(&fs::read_to_string(dir.join(format!("fig{id}.csv"))).unwrap())
}

#[test]
fn figure_1_has_four_methods_on_one_grid() {
    let dir = tempfile::tempdir().unwrap();
    let rows = figure("1", dir.path());
    let g = groups(&rows);
    let methods: BTreeSet<_> = g.keys().map(|k| k.0.as_str()).collect();
    assert_eq!(methods, BTreeSet::from(["exact", "markovian", "nm-full", "nm-qrt"]));
    assert_eq!(g.len(), 4);
    let grids: Vec<Vec<f64>> = g.values().map(|v| v.iter().map(|r| r.t1).collect()).collect();
    assert!(grids.windows(2).all(|w| w[0] == w[1]));
    assert_eq!(grids[0].first(), Some(&0.2));
    assert_eq!(grids[0].last(), Some(&10.0));
    assert_eq!(grids[0].len(), 9801);
    assert!(rows.iter().all(|r| r.pair == "sx.sy" && r.t2 == 0.2));
    // equal-time value i<sz> = 0.5i for every mode
    for v in g.values() {
        assert!((v[0].re).abs() < 1e-15 && (v[0].im - 0.5).abs() < 1e-12, "{:?}", v[0]);
    }
}

#[test]
fn figure_2_has_six_curves_and_two_insets() {
    let dir = tempfile::tempdir().unwrap();
    let rows = figure("2", dir.path());
    let g = groups(&rows);
    let curves: Vec<_> = g.keys().filter(|k| k.1 == "sx.sy").collect();
    assert_eq!(curves.len(), 6);
    let insets: BTreeSet<_> = g.keys().filter(|k| k.1 != "sx.sy").map(|k| k.1.as_str()).collect();
    assert_eq!(insets, BTreeSet::from(["sx", "sy"]));
    for ((_, pair, _), v) in &g {
        let t2 = v[0].t2;
        let span = v.last().unwrap().t1 - v[0].t1;
        assert!((span - 10.0).abs() < 1e-9, "{pair} {t2}");
        if pair == "sx.sy" {
            assert_eq!(v[0].t1, t2);
        } else {
            assert_eq!(t2, 0.0);
        }
    }
}

#[test]
fn figure_3_nm_full_coincides_with_exact() {
    let dir = tempfile::tempdir().unwrap();
    let rows = figure("3", dir.path());
    let g = groups(&rows);
    let key = |m: &str| (m.to_string(), "sx.sy".to_string(), "10".to_string());
    assert_eq!(g.len(), 4);
    let dev = max_dev(&g[&key("nm-full")], &g[&key("exact")]);
    assert!(dev <= 1e-4, "{dev}");
    assert!(max_dev(&g[&key("nm-qrt")], &g[&key("nm-full")]) > 1e-2);
    assert_eq!(g[&key("exact")].last().unwrap().t1, 20.0);
}

#[test]
fn figure_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    dephasr_ok(&["figure", "--id", "3", "--out-dir", d, "--t2", "2", "--t_max", "3", "--output", "short.csv"]);
    let rows = parse_rows(&fs::read_to_string(dir.path().join("short.csv")).unwrap());
    assert!(rows.iter().all(|r| r.t2 == 2.0 && r.t1 >= 2.0 && r.t1 <= 3.0));
}

#[test]
fn output_is_deterministic_across_runs_and_pool_sizes() {
    let args = ["two-time", "--t2", "0,0.3,1", "--t_max", "2"];
    let runs: Vec<Vec<u8>> = ["1", "4", "4"]
        .iter()
        .map(|threads| {
            let out = Command::new(BIN)
                .args(args)
                .env("DEPHASR_THREADS", threads)
                .output()
                .unwrap();
            assert!(out.status.success());
            out.stdout
        })
        .collect();
    assert!(!runs[0].is_empty());
    assert!(runs.windows(2).all(|w| w[0] == w[1]));
    let rows = parse_rows(std::str::from_utf8(&runs[0]).unwrap());
    // ordered by t2, then mode as configured
    let order: Vec<(String, String)> = rows
        .iter()
        .map(|r| (format!("{}", r.t2), r.method.clone()))
        .fold(Vec::new(), |mut acc, k| {
            if acc.last() != Some(&k) {
                acc.push(k);
            }
            acc
        });
    let expected: Vec<(String, String)> = ["0", "0.3", "1"]
        .iter()
        .flat_map(|t2| {
            ["markovian", "nm-qrt", "nm-full", "exact"]
                .iter()
                .map(move |m| (t2.to_string(), m.to_string()))
        })
        .collect();
    assert_eq!(order, expected);
}

fn compare_rows(args: &[&str]) -> Vec<(String, String, f64)> {
    let out = dephasr_ok(args);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t2,mode_a,mode_b,max_re,max_im,rms_re,rms_im,max_abs"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("max |diff|"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].to_string(), f[2].to_string(), f[7].parse().unwrap())
        })
        .collect()
}

#[test]
fn compare_reports_the_expected_separations() {
    let fig1 = compare_rows(&["compare", "--modes", "nm-full,exact"]);
    assert_eq!(fig1.len(), 1);
    assert!(fig1[0].2 <= 1e-4, "{fig1:?}");

    let at_zero = compare_rows(&["compare", "--modes", "nm-qrt,nm-full", "--t2", "0", "--t_max", "5"]);
    assert!(at_zero[0].2 <= 1e-12, "{at_zero:?}");

    let qrt = compare_rows(&["compare", "--modes", "nm-qrt,nm-full"]);
    assert!(qrt[0].2 > 100.0 * 1e-4, "{qrt:?}");

    let all = compare_rows(&["compare", "--t_max", "1"]);
    assert_eq!(all.len(), 6);
}

#[test]
fn compare_needs_two_modes() {
    let out = dephasr(&["compare", "--modes", "exact"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn zero_temperature_kernels_match_closed_forms() {
    let out = dephasr_ok(&["kernels", "--params.temperature", "0", "--t2", "0.5,2", "--t_max", "4", "--step", "0.01"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,t2,d,gamma,re_dtilde,im_dtilde"));
    assert_eq!(lines.next(), Some("0,0,0,0,0,0"));
    let (g, l) = (0.1f64, 5.0f64);
    let big_g = |t: f64| {
        let denom = 1.0 + l * l * t * t;
        (g * l * l * t / denom, -g * l * l * l * t * t / denom)
    };
    let mut blocks = BTreeSet::new();
    for line in text.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|s| s.parse().unwrap()).collect();
        let (t, t2, d, gamma) = (v[0], v[1], v[2], v[3]);
        blocks.insert(format!("{t2}"));
        assert!(d >= 0.0);
        assert!((d - 4.0 * g * l * l * t / (1.0 + l * l * t * t)).abs() < 1e-7, "{line}");
        assert!((gamma - 2.0 * g * (1.0 + l * l * t * t).ln()).abs() < 1e-7, "{line}");
        let (a, b) = (big_g(t), big_g(t - t2));
        assert!((v[4] - 4.0 * (a.0 - b.0)).abs() < 1e-7, "{line}");
        assert!((v[5] - 4.0 * (a.1 - b.1)).abs() < 1e-7, "{line}");
    }
    assert_eq!(blocks, BTreeSet::from(["0".to_string(), "0.5".into(), "2".into()]));
    assert_eq!(text.lines().count(), 1 + 3 * 401);
}

#[test]
fn evolve_writes_single_time_series_and_states() {
    let out = dephasr_ok(&["evolve", "--t_max", "1", "--modes", "nm-full,exact"]);
    let rows = parse_rows(std::str::from_utf8(&out.stdout).unwrap());
    let g = groups(&rows);
    assert_eq!(g.len(), 6);
    let sz = &g[&("nm-full".to_string(), "sz".to_string(), "0".to_string())];
    assert!(sz.iter().all(|r| r.re == 0.5 && r.im == 0.0));
    let sx_nm = &g[&("nm-full".to_string(), "sx".to_string(), "0".to_string())];
    let sx_ex = &g[&("exact".to_string(), "sx".to_string(), "0".to_string())];
    assert!(max_dev(sx_nm, sx_ex) < 1e-8);

    let out = dephasr_ok(&["evolve", "--master", "--t_max", "1", "--modes", "markovian"]);
    let rows = parse_rows(std::str::from_utf8(&out.stdout).unwrap());
    let pairs: BTreeSet<_> = rows.iter().map(|r| r.pair.as_str()).collect();
    assert_eq!(pairs, BTreeSet::from(["rho00", "rho01", "rho10", "rho11"]));
    let last01 = rows.iter().rfind(|r| r.pair == "rho01").unwrap();
    let expected = 3f64.sqrt() / 4.0 * (-4.0 * std::f64::consts::PI * 0.01f64).exp();
    assert!(((last01.re.hypot(last01.im)) - expected).abs() < 1e-10);
}

#[test]
fn exact_cf_at_a_single_time() {
    let out = dephasr_ok(&["exact-cf", "--t1", "0.4", "--params.temperature", "0", "--t2", "0.2,0.6"]);
    let rows = parse_rows(std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(rows.len(), 1);
    assert!((rows[0].re + 0.0913220316232387).abs() < 1e-8, "{:?}", rows[0]);
    assert!((rows[0].im - 0.4511752150679058).abs() < 1e-8, "{:?}", rows[0]);
}

/// Closed-form zero-temperature `<sx(t1) sy(t2)>` for the default state.
fn zero_t_xy(t1: f64, t2: f64) -> (f64, f64) {
    let (g, l): (f64, f64) = (0.1, 5.0);
    let tau = t1 - t2;
    let re_exp = -2.0 * g * (1.0 + l * l * tau * tau).ln();
    let im_exp = -4.0 * g * ((l * tau).atan() + (l * t2).atan() - (l * t1).atan());
    // i rho00 e^{i tau} - i rho11 e^{-i tau}
    let (c, s) = (tau.cos(), tau.sin());
    let amp = (-0.75 * s - 0.25 * s, 0.75 * c - 0.25 * c);
    let m = re_exp.exp();
    let (ce, se) = (im_exp.cos(), im_exp.sin());
    (m * (amp.0 * ce - amp.1 * se), m * (amp.0 * se + amp.1 * ce))
}

#[test]
fn golden_two_time_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/zero_temperature.json");
    let out_path = dir.path().join("out.csv");
    dephasr_ok(&[
        "two-time",
        "--config",
        cfg.to_str().unwrap(),
        "--output",
        out_path.to_str().unwrap(),
    ]);
    let produced = fs::read_to_string(&out_path).unwrap();
    let golden =
        fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/zero_temperature.golden.csv"))
            .unwrap();
    assert_eq!(produced, golden);

    for r in parse_rows(&golden).iter().filter(|r| r.method == "exact") {
        let (re, im) = zero_t_xy(r.t1, r.t2);
        assert!((r.re - re).abs() < 1e-9 && (r.im - im).abs() < 1e-9, "{r:?}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();

    let out = dephasr(&["two-time", "--params.gama", "0.2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config error"));

    assert_eq!(dephasr(&["two-time", "--step", "0.3"]).status.code(), Some(2));
    assert_eq!(dephasr(&["two-time", "--operators.a", "sq"]).status.code(), Some(2));
    assert_eq!(dephasr(&["figure", "--id", "7"]).status.code(), Some(2));
    assert_eq!(dephasr(&["frobnicate"]).status.code(), Some(2));

    let bad_json = dir.path().join("bad.json");
    fs::write(&bad_json, "{ not json").unwrap();
    assert_eq!(dephasr(&["kernels", "--config", bad_json.to_str().unwrap()]).status.code(), Some(2));

    let missing = dir.path().join("missing.json");
    assert_eq!(dephasr(&["kernels", "--config", missing.to_str().unwrap()]).status.code(), Some(4));

    let unwritable = dir.path().join("no/such/dir/out.csv");
    let out = dephasr(&["kernels", "--t_max", "0.4", "--output", unwritable.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));

    let out = Command::new(BIN)
        .args(["kernels", "--t_max", "0.4"])
        .env("DEPHASR_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
