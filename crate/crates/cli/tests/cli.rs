use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn ddmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ddmd"))
        .args(args)
        .env_remove("DMD_NUM_THREADS")
        .output()
        .expect("binary runs")
}

fn fixtures(dir: &Path) -> PathBuf {
    let d = dir.join("fx");
    let out = ddmd(&["fixtures", "--dir", d.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    d
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn report(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn rrr_report_is_sorted_by_residual() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixtures(tmp.path());
    let out = tmp.path().join("r.json");
    let modes = tmp.path().join("modes.dmm1");
    let plot = tmp.path().join("plot.csv");
    let o = ddmd(&[
        "decompose",
        "--variant",
        "rrr",
        "--seq",
        s(&fx.join("seq_disc_200x40.dmm1")),
        "--out",
        s(&out),
        "--modes-out",
        s(&modes),
        "--plot-csv",
        s(&plot),
        "--dt",
        "0.1",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    let k = r["metadata"]["k"].as_u64().unwrap() as usize;
    let pairs = r["pairs"].as_array().unwrap();
    assert_eq!(pairs.len(), k);
    assert!(k > 0);
    let res: Vec<f64> = pairs.iter().map(|p| p["residual"].as_f64().unwrap()).collect();
    assert!(res.windows(2).all(|w| w[0] <= w[1]));
    assert!(pairs.iter().all(|p| p["koopman_re"].is_f64()));
    assert_eq!(r["metadata"]["dt"].as_f64(), Some(0.1));

    let m = ddmd::io::decode_dmm1(&std::fs::read(&modes).unwrap()).unwrap();
    assert_eq!((m.nrows(), m.ncols()), (200, k));
    assert_eq!(std::fs::read_to_string(&plot).unwrap().lines().count(), k + 1);
}

#[test]
fn report_round_trip_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixtures(tmp.path());
    let out = tmp.path().join("r.json");
    let o = ddmd(&["decompose", "--seq", s(&fx.join("seq_unit_100x30.dmm1")), "--out", s(&out)]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    let again = ddmd::report::SpectrumReport::from_json(&text).unwrap().to_json().unwrap();
    assert_eq!(again, text);
}

#[test]
fn fb_on_singular_backward_data_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixtures(tmp.path());
    let o = ddmd(&[
        "decompose",
        "--variant",
        "fb",
        "--x",
        s(&fx.join("fb_singular_X.dmm1")),
        "--y",
        s(&fx.join("fb_singular_Y.dmm1")),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("S_back"), "{err}");
}

#[test]
fn select_cap_partitions_pairs() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixtures(tmp.path());
    let out = tmp.path().join("r.json");
    let o = ddmd(&[
        "decompose",
        "--seq",
        s(&fx.join("seq_decay_300x60.dmm1")),
        "--select-cap",
        "5e-4",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&out);
    assert_eq!(r["metadata"]["select_cap"].as_f64(), Some(5e-4));
    let pairs = r["pairs"].as_array().unwrap();
    let mut seen = (0, 0);
    for p in pairs {
        let sel = p["selected"].as_bool().unwrap();
        assert_eq!(sel, p["residual"].as_f64().unwrap() <= 5e-4);
        if sel {
            seen.0 += 1;
        } else {
            seen.1 += 1;
        }
    }
    assert!(seen.0 > 0 && seen.1 > 0, "cap should split this fixture: {seen:?}");
}

#[test]
fn every_variant_runs_on_fixtures() {
    let tmp = tempfile::tempdir().unwrap();
    let fx = fixtures(tmp.path());
    let seq = fx.join("seq_disc_200x40.dmm1");
    let w = fx.join("weights_graded_200.dmm1");
    let wn = tmp.path().join("wn.csv");
    std::fs::write(&wn, (1..=40).map(|i| format!("{i}\n")).collect::<String>()).unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["--variant", "dmd", "--no-scale"],
        vec!["--variant", "rrr", "--refine", "cap=1e-6"],
        vec!["--variant", "rrr-compressed", "--rank", "20"],
        vec!["--variant", "exact", "--eps", "1e-12"],
        vec!["--variant", "fb"],
        vec!["--variant", "weighted", "--weight", s(&w)],
        vec!["--variant", "weighted", "--weight", s(&w), "--weight-inverse"],
        vec!["--variant", "weighted2", "--weight-n", s(&wn)],
    ];
    for extra in cases {
        let mut args = vec!["decompose", "--seq", s(&seq)];
        args.extend(extra.iter().copied());
        let o = ddmd(&args);
        assert!(o.status.success(), "{extra:?}: {}", String::from_utf8_lossy(&o.stderr));
        let r: Value = serde_json::from_slice(&o.stdout).unwrap();
        assert!(r["metadata"]["k"].as_u64().unwrap() > 0, "{extra:?}");
    }
}

#[test]
fn data_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "1,2\n3\n").unwrap();
    let o = ddmd(&["decompose", "--seq", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    let nan = tmp.path().join("nan.csv");
    std::fs::write(&nan, "1,NaN\n3,4\n").unwrap();
    assert_eq!(ddmd(&["decompose", "--seq", s(&nan)]).status.code(), Some(2));
    let o = ddmd(&["decompose", "--seq", s(&tmp.path().join("missing.dmm1"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn duplicate_snapshots_truncate_rank() {
    let tmp = tempfile::tempdir().unwrap();
    let f = tmp.path().join("dup.csv");
    std::fs::write(&f, "1,1,2\n0,0,1\n2,2,0\n").unwrap();
    let o = ddmd(&["decompose", "--variant", "exact", "--seq", s(&f)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["metadata"]["k"].as_u64(), Some(1));
}

#[test]
fn fixtures_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (fa, fb) = (fixtures(a.path()), fixtures(b.path()));
    let manifest = std::fs::read_to_string(fa.join("manifest.json")).unwrap();
    let parsed = ddmd::verify::FixtureManifest::from_json(&manifest).unwrap();
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    assert_eq!(std::fs::read_to_string(shipped.join("manifest.json")).unwrap(), manifest);
    for e in &parsed.fixtures {
        for f in &e.files {
            let bytes = std::fs::read(fa.join(f)).unwrap();
            assert_eq!(bytes, std::fs::read(fb.join(f)).unwrap(), "{f}");
            assert_eq!(bytes, std::fs::read(shipped.join(f)).unwrap(), "{f} differs from the shipped copy");
        }
    }
}

#[test]
fn verify_is_deterministic_across_runs_and_threads() {
    let run = |threads: &str| {
        let o = ddmd(&["verify", "--n", "300", "--m", "60", "--threads", threads]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
        o.stdout
    };
    let one = run("1");
    assert_eq!(one, run("1"));
    assert_eq!(one, run("4"));
    let text = String::from_utf8(one).unwrap();
    assert_eq!(text.lines().filter(|l| l.contains(" PASS ")).count(), 12, "{text}");
}
