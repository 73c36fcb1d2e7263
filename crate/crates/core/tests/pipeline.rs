use std::fs;
use std::path::Path;
use std::process::Command;

use nanofab::analyze::FabricationReport;
use nanofab::cli::{cmd_bench, cmd_run, load_spec, main_with_args, RunManifest, Seeds};
use nanofab::route::{check_design_rules, RoutedLayout};

const SEEDS: Seeds = Seeds { deposit: 1, defect: 2, vision: 3, shorts: 4 };
const ARTIFACTS: [&str; 6] =
    ["substrate.json", "observed.json", "assignment.json", "layout.json", "report.json", "layout.svg"];

fn bench_dir(name: &str, dir: &Path) -> RunManifest {
    let p = cmd_bench(name, dir, SEEDS).unwrap();
    RunManifest::load(&p).unwrap()
}

fn run(args: &[&str]) -> i32 {
    let mut v = vec!["nanofab"];
    v.extend_from_slice(args);
    main_with_args(v)
}

#[test]
fn stage_commands_match_the_manifest_run() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let m = bench_dir("diffpair", dir);
    cmd_run(&m).unwrap();

    let s = |p: &str| dir.join(p).to_str().unwrap().to_owned();
    let (spec, netlist, staged) = (s("spec.txt"), s("netlist.json"), s("staged"));
    let common = ["--spec", &spec, "--netlist", &netlist, "--out", &staged];
    let with = |cmd: &str, extra: &[&str]| {
        let mut a = vec![cmd];
        a.extend_from_slice(&common);
        a.extend_from_slice(extra);
        run(&a)
    };
    assert_eq!(with("deposit", &["--seed-deposit", "1", "--seed-defect", "2"]), 0);
    assert_eq!(with("observe", &["--seed-vision", "3"]), 0);
    assert_eq!(with("assign", &[]), 0);
    assert_eq!(with("route", &[]), 0);
    assert_eq!(with("report", &["--seed-shorts", "4"]), 0);
    let svg = s("staged/layout.svg");
    assert_eq!(run(&["render", &s("staged/layout.json"), "--out", &svg]), 0);

    for f in ARTIFACTS {
        let a = fs::read(dir.join("run").join(f)).unwrap();
        let b = fs::read(dir.join("staged").join(f)).unwrap();
        assert!(a == b, "{f} differs between staged and manifest runs");
    }
}

#[test]
fn runs_are_byte_identical_and_seed_sensitive() {
    let tmp = tempfile::tempdir().unwrap();
    let mut m = bench_dir("flipflop:1", tmp.path());
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    m.out = a.clone();
    cmd_run(&m).unwrap();
    m.out = b.clone();
    cmd_run(&m).unwrap();
    for f in ARTIFACTS {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }

    m.seeds.deposit += 1;
    m.out = tmp.path().join("c");
    cmd_run(&m).unwrap();
    let sub = |d: &Path| fs::read(d.join("substrate.json")).unwrap();
    assert_ne!(sub(&a), sub(&m.out));
}

#[test]
fn bench_layouts_are_design_rule_clean() {
    for name in ["diffpair", "flipflop:2", "555"] {
        let tmp = tempfile::tempdir().unwrap();
        let m = bench_dir(name, tmp.path());
        let o = cmd_run(&m).unwrap();
        assert_eq!(o.report.nets_routed, o.report.nets_total, "{name} left nets unrouted");
        let layout: RoutedLayout = serde_json::from_str(&fs::read_to_string(m.out.join("layout.json")).unwrap()).unwrap();
        let spec = load_spec(m.spec.as_deref(), &m.spec_overrides).unwrap();
        let v = check_design_rules(&layout, &spec);
        assert!(v.is_empty(), "{name}: {} violations, first {:?}", v.len(), v.first());
    }
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_nanofab");
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let manifest = cmd_bench("diffpair", dir, SEEDS).unwrap();

    let out = Command::new(exe).arg("run").arg(&manifest).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("routed fraction"), "{table}");

    let report = dir.join("run/report.json");
    let rep: FabricationReport = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let strict = dir.join("strict.json");
    fs::write(&strict, format!(r#"{{"print_time_s": {{"max": {}}}}}"#, rep.print_time_s / 2.0)).unwrap();
    let code = |args: &[&std::ffi::OsStr]| Command::new(exe).args(args).output().unwrap().status.code();
    assert_eq!(code(&["check".as_ref(), report.as_os_str(), "--thresholds".as_ref(), strict.as_os_str()]), Some(1));

    let loose = dir.join("loose.json");
    fs::write(&loose, format!(r#"{{"print_time_s": {{"max": {}}}}}"#, rep.print_time_s * 2.0)).unwrap();
    assert_eq!(code(&["check".as_ref(), report.as_os_str(), "--thresholds".as_ref(), loose.as_os_str()]), Some(0));

    let missing = dir.join("missing.json");
    assert_eq!(code(&["check".as_ref(), missing.as_os_str()]), Some(2));
    assert_eq!(code(&["bench".as_ref(), "no_such_bench".as_ref(), "--out".as_ref(), dir.as_os_str()]), Some(2));
    assert_eq!(code(&["frobnicate".as_ref()]), Some(2));
}

#[test]
fn stage_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    // observe without a prior deposit
    assert_eq!(run(&["observe", "--out", out, "--seed-vision", "1"]), 2);
    // assign needs a netlist
    assert_eq!(run(&["assign", "--out", out]), 2);
}
