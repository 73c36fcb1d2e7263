//! File-level pipeline driver, SVG export and the command-line interface.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::analyze::{check_thresholds, report, CheckRow, FabricationReport, Thresholds};
use crate::assign::{assign, Assignment, CostParams};
use crate::bench::{self, kind_mix};
use crate::deposition::{deposit, inject_defects, LayoutPolicy, Substrate};
use crate::geometry::{OrientedRect, Point};
use crate::model::{validate_netlist, KindLibrary, Netlist, ProcessSpec};
use crate::route::{build_routing_grid, route_all, RoutePolicy, RoutedLayout};
use crate::vision::{observe, ObservedField};
use crate::{Error, Result};

pub const SUBSTRATE_FILE: &str = "substrate.json";
pub const OBSERVED_FILE: &str = "observed.json";
pub const ASSIGNMENT_FILE: &str = "assignment.json";
pub const LAYOUT_FILE: &str = "layout.json";
pub const REPORT_FILE: &str = "report.json";
pub const SVG_FILE: &str = "layout.svg";

/// One seed per stochastic stage. All four are required.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub deposit: u64,
    pub defect: u64,
    pub vision: u64,
    pub shorts: u64,
}

fn default_accuracy() -> f64 {
    1.0
}

fn default_trials() -> u64 {
    10_000
}

fn default_scale() -> f64 {
    10.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    /// Process spec file; built-in defaults when absent.
    #[serde(default)]
    pub spec: Option<PathBuf>,
    #[serde(default)]
    pub spec_overrides: BTreeMap<String, String>,
    /// Netlist file, or a bench generator name (see [`bench::by_name`]).
    #[serde(default)]
    pub netlist: Option<PathBuf>,
    #[serde(default)]
    pub bench: Option<String>,
    /// Kind library file; the standard kinds when absent.
    #[serde(default)]
    pub kinds: Option<PathBuf>,
    pub seeds: Seeds,
    pub out: PathBuf,
    #[serde(default)]
    pub layout_policy: LayoutPolicy,
    #[serde(default = "default_accuracy")]
    pub defect_classification_accuracy: f64,
    #[serde(default)]
    pub keep_truth: bool,
    #[serde(default = "default_trials")]
    pub short_trials: u64,
    #[serde(default)]
    pub assign: CostParams,
    #[serde(default)]
    pub route: RoutePolicy,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// SVG pixels per μm.
    #[serde(default = "default_scale")]
    pub svg_scale: f64,
}

impl RunManifest {
    /// Parses a manifest; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut m: RunManifest = serde_json::from_str(text).map_err(|e| Error::Config(format!("manifest: {e}")))?;
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        m.spec.as_mut().map(fix);
        m.netlist.as_mut().map(fix);
        m.kinds.as_mut().map(fix);
        fix(&mut m.out);
        if m.netlist.is_some() == m.bench.is_some() {
            return Err(Error::Config("manifest needs exactly one of `netlist` and `bench`".into()));
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read(path)?;
        RunManifest::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.to_path_buf(), source })?;
    }
    fs::write(path, text).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

/// Pretty JSON with a trailing newline; field order follows the types.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write(path, &to_json(value)?)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&read(path)?).map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

pub fn load_spec(path: Option<&Path>, overrides: &BTreeMap<String, String>) -> Result<ProcessSpec> {
    let base = match path {
        Some(p) => ProcessSpec::parse(&read(p)?)?,
        None => ProcessSpec::default(),
    };
    if overrides.is_empty() {
        Ok(base)
    } else {
        base.with_overrides(overrides.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }
}

pub fn load_kinds(path: Option<&Path>) -> Result<KindLibrary> {
    match path {
        None => Ok(KindLibrary::standard()),
        Some(p) => {
            let lib: KindLibrary = read_json(p)?;
            KindLibrary::new(lib.iter().cloned())
        }
    }
}

pub fn load_netlist(path: &Path, kinds: &KindLibrary) -> Result<Netlist> {
    let nl: Netlist = read_json(path)?;
    let r = validate_netlist(&nl, kinds);
    if !r.ok {
        let msgs: Vec<String> = r.errors().map(|i| i.message.clone()).collect();
        return Err(Error::InvalidInput(format!("netlist is invalid: {}", msgs.join("; "))));
    }
    Ok(nl)
}

// ---------------------------------------------------------------------------
// stages

pub fn stage_deposit(
    spec: &ProcessSpec,
    netlist: &Netlist,
    kinds: &KindLibrary,
    policy: LayoutPolicy,
    seeds: &Seeds,
) -> Result<Substrate> {
    let mix = kind_mix(netlist)
        .into_iter()
        .map(|(k, f)| Ok((kinds.require(&k)?.clone(), f)))
        .collect::<Result<Vec<_>>>()?;
    let s = deposit(spec, &mix, policy, seeds.deposit)?;
    inject_defects(&s, spec.defect_rate, seeds.defect)
}

pub fn stage_observe(
    substrate: &Substrate,
    spec: &ProcessSpec,
    kinds: &KindLibrary,
    accuracy: f64,
    seed: u64,
    keep_truth: bool,
) -> Result<ObservedField> {
    let mut f = observe(substrate, spec, kinds, accuracy, seed)?;
    if !keep_truth {
        f.strip_truth();
    }
    Ok(f)
}

pub fn stage_route(
    field: &ObservedField,
    netlist: &Netlist,
    assignment: &Assignment,
    kinds: &KindLibrary,
    spec: &ProcessSpec,
    policy: &RoutePolicy,
) -> Result<RoutedLayout> {
    assignment.check(netlist, field)?;
    let mut grid = build_routing_grid(field, kinds, spec)?;
    route_all(&mut grid, netlist, assignment, spec, policy)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub report: FabricationReport,
    pub checks: Vec<CheckRow>,
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

/// Every stage in order, writing the six artifacts into `manifest.out`.
pub fn cmd_run(m: &RunManifest) -> Result<RunOutcome> {
    let kinds = load_kinds(m.kinds.as_deref()).map_err(|e| e.in_stage("setup"))?;
    let (spec, netlist) = match (&m.netlist, &m.bench) {
        (Some(p), None) => {
            let spec = load_spec(m.spec.as_deref(), &m.spec_overrides).map_err(|e| e.in_stage("setup"))?;
            (spec, load_netlist(p, &kinds).map_err(|e| e.in_stage("setup"))?)
        }
        (None, Some(name)) => {
            let sc = bench::by_name(name).map_err(|e| e.in_stage("setup"))?;
            let mut overrides = sc.spec_overrides.clone();
            overrides.extend(m.spec_overrides.clone());
            let spec = load_spec(m.spec.as_deref(), &overrides).map_err(|e| e.in_stage("setup"))?;
            (spec, sc.netlist)
        }
        _ => return Err(Error::Config("manifest needs exactly one of `netlist` and `bench`".into()).in_stage("setup")),
    };
    let out = &m.out;
    let mut files = Vec::new();
    let mut put = |name: &str, text: String| -> Result<()> {
        let p = out.join(name);
        write(&p, &text)?;
        files.push(p);
        Ok(())
    };

    let substrate = stage_deposit(&spec, &netlist, &kinds, m.layout_policy, &m.seeds).map_err(|e| e.in_stage("deposit"))?;
    put(SUBSTRATE_FILE, to_json(&substrate)?)?;
    let field = stage_observe(&substrate, &spec, &kinds, m.defect_classification_accuracy, m.seeds.vision, m.keep_truth)
        .map_err(|e| e.in_stage("observe"))?;
    put(OBSERVED_FILE, to_json(&field)?)?;
    let assignment = assign(&netlist, &field, &m.assign).map_err(|e| e.in_stage("assign"))?;
    put(ASSIGNMENT_FILE, to_json(&assignment)?)?;
    let layout = stage_route(&field, &netlist, &assignment, &kinds, &spec, &m.route).map_err(|e| e.in_stage("route"))?;
    put(LAYOUT_FILE, to_json(&layout)?)?;
    let rep = report(&netlist, &field, &assignment, &layout, &kinds, &spec, m.short_trials, m.seeds.shorts)
        .map_err(|e| e.in_stage("report"))?;
    put(REPORT_FILE, to_json(&rep)?)?;
    put(SVG_FILE, render_svg(&layout, m.svg_scale))?;

    let checks = check_thresholds(&rep, &m.thresholds).map_err(|e| e.in_stage("check"))?;
    let passed = checks.iter().all(|c| c.pass);
    Ok(RunOutcome { report: rep, checks, passed, files })
}

pub fn check_table(rows: &[CheckRow]) -> String {
    let mut s = String::new();
    let w = rows.iter().map(|r| r.metric.len()).max().unwrap_or(6).max(6);
    let _ = writeln!(s, "{:<w$}  {:>14}  {:>12}  {:>12}  result", "metric", "value", "min", "max");
    let num = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6e}"));
    for r in rows {
        let _ = writeln!(
            s,
            "{:<w$}  {:>14}  {:>12}  {:>12}  {}",
            r.metric,
            num(r.value),
            num(r.threshold.min),
            num(r.threshold.max),
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    s
}

/// Compares a saved report against a thresholds file.
pub fn cmd_check(report_path: &Path, thresholds_path: Option<&Path>) -> Result<(bool, String)> {
    let rep: FabricationReport = read_json(report_path)?;
    let thresholds: Thresholds = match thresholds_path {
        Some(p) => read_json(p)?,
        None => Thresholds::new(),
    };
    let rows = check_thresholds(&rep, &thresholds)?;
    Ok((rows.iter().all(|r| r.pass), check_table(&rows)))
}

// ---------------------------------------------------------------------------
// SVG

fn px(nm: f64, scale: f64) -> String {
    format!("{:.3}", nm * scale / 1000.0)
}

fn points_attr(pts: &[Point], scale: f64) -> String {
    pts.iter().map(|p| format!("{},{}", px(p.x as f64, scale), px(p.y as f64, scale))).collect::<Vec<_>>().join(" ")
}

/// SVG 1.1 drawing of a layout; `scale` is pixels per μm.
///
/// Bodies are polygons, pins circles, each constant-width run of a wire one
/// polyline whose stroke follows the wire width, and bridges are short
/// dashed segments over the crossing.
pub fn render_svg(layout: &RoutedLayout, scale: f64) -> String {
    let (w, h) = (layout.region.width_nm as f64, layout.region.height_nm as f64);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        px(w, scale),
        px(h, scale),
        px(w, scale),
        px(h, scale)
    );
    let _ = writeln!(
        s,
        r##"<rect class="region" x="0" y="0" width="{}" height="{}" fill="#ffffff" stroke="#000000"/>"##,
        px(w, scale),
        px(h, scale)
    );
    for c in &layout.components {
        let rect = OrientedRect::new(Point::new(c.x_nm, c.y_nm), c.body, c.theta_deg);
        let pts: Vec<String> =
            rect.corners().iter().map(|&(x, y)| format!("{},{}", px(x, scale), px(y, scale))).collect();
        let fill = if c.used { "#9ab8d8" } else { "#dddddd" };
        let _ = writeln!(s, r#"<polygon class="component" points="{}" fill="{fill}"/>"#, pts.join(" "));
        for p in &c.pins {
            let _ = writeln!(
                s,
                r##"<circle class="pin" cx="{}" cy="{}" r="{}" fill="#333333"/>"##,
                px(p.x_nm, scale),
                px(p.y_nm, scale),
                px(75.0, scale)
            );
        }
    }
    for path in &layout.paths {
        for b in &path.branches {
            let mut k = 0;
            while k < b.widths.len() {
                let mut e = k;
                while e + 1 < b.widths.len() && b.widths[e + 1] == b.widths[k] {
                    e += 1;
                }
                let _ = writeln!(
                    s,
                    r##"<polyline class="wire" points="{}" fill="none" stroke="#c04000" stroke-width="{}"/>"##,
                    points_attr(&b.points[k..=e + 1], scale),
                    px(b.widths[k] as f64, scale)
                );
                k = e + 1;
            }
        }
        for br in &path.bridges {
            let _ = writeln!(
                s,
                r##"<line class="bridge" x1="{}" y1="{}" x2="{}" y2="{}" stroke="#0060c0" stroke-dasharray="2,1"/>"##,
                px(br.start.x as f64, scale),
                px(br.start.y as f64, scale),
                px(br.end.x as f64, scale),
                px(br.end.y as f64, scale)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

pub fn cmd_render(layout_path: &Path, scale: f64, out: &Path) -> Result<()> {
    let layout: RoutedLayout = read_json(layout_path)?;
    write(out, &render_svg(&layout, scale))
}

/// Writes a bench scenario as a runnable directory: netlist, spec and a
/// manifest pointing at both.
pub fn cmd_bench(name: &str, out: &Path, seeds: Seeds) -> Result<PathBuf> {
    let sc = bench::by_name(name)?;
    let spec = sc.spec(&ProcessSpec::default())?;
    write_json(&out.join("netlist.json"), &sc.netlist)?;
    write(&out.join("spec.txt"), &spec.to_text())?;
    let m = RunManifest {
        spec: Some("spec.txt".into()),
        spec_overrides: BTreeMap::new(),
        netlist: Some("netlist.json".into()),
        bench: None,
        kinds: None,
        seeds,
        out: "run".into(),
        layout_policy: LayoutPolicy::Lattice,
        defect_classification_accuracy: 1.0,
        keep_truth: false,
        short_trials: default_trials(),
        assign: CostParams::default(),
        route: RoutePolicy::default(),
        thresholds: sc.thresholds,
        svg_scale: default_scale(),
    };
    let p = out.join("manifest.json");
    write_json(&p, &m)?;
    Ok(p)
}

// ---------------------------------------------------------------------------
// command line

#[derive(Debug, Parser)]
#[command(name = "nanofab", version, about = "Deposit, observe, assign, route and meter printed nanomodular circuits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct Common {
    /// Process spec file (`key = value` lines).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub netlist: Option<PathBuf>,
    /// Kind library JSON; the standard kinds by default.
    #[arg(long)]
    pub kinds: Option<PathBuf>,
    /// Artifact directory, read and written by the stage commands.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run every stage from a manifest.
    Run { manifest: PathBuf },
    Deposit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed_deposit: u64,
        #[arg(long)]
        seed_defect: u64,
        #[arg(long, default_value = "lattice")]
        policy: LayoutPolicy,
    },
    Observe {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed_vision: u64,
        #[arg(long, default_value_t = 1.0)]
        accuracy: f64,
        /// Keep the links back to ground truth in observed.json.
        #[arg(long)]
        keep_truth: bool,
    },
    Assign {
        #[command(flatten)]
        common: Common,
    },
    Route {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        interconnect_width: Option<i64>,
    },
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed_shorts: u64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
    },
    /// Compare a report against thresholds; exit 0 iff all pass.
    Check {
        report: PathBuf,
        #[arg(long)]
        thresholds: Option<PathBuf>,
    },
    Render {
        layout: PathBuf,
        /// Pixels per μm.
        #[arg(long, default_value_t = 10.0)]
        scale: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a generated scenario: `diffpair`, `flipflop:N`, `555`,
    /// `random_logic:N:FANOUT:SPACING_NM:SEED`.
    Bench {
        name: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed_deposit: u64,
        #[arg(long, default_value_t = 2)]
        seed_defect: u64,
        #[arg(long, default_value_t = 3)]
        seed_vision: u64,
        #[arg(long, default_value_t = 4)]
        seed_shorts: u64,
    },
}

struct Inputs {
    spec: ProcessSpec,
    kinds: KindLibrary,
    netlist: Option<Netlist>,
}

impl Common {
    fn load(&self, need_netlist: bool) -> Result<Inputs> {
        let spec = load_spec(self.spec.as_deref(), &BTreeMap::new())?;
        let kinds = load_kinds(self.kinds.as_deref())?;
        let netlist = match &self.netlist {
            Some(p) => Some(load_netlist(p, &kinds)?),
            None if need_netlist => return Err(Error::Config("--netlist is required".into())),
            None => None,
        };
        Ok(Inputs { spec, kinds, netlist })
    }
}

/// Exit status: 0 success or all thresholds pass, 1 a threshold fails,
/// 2 any error.
fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Run { manifest } => {
            let m = RunManifest::load(&manifest)?;
            let o = cmd_run(&m)?;
            print!("{}", o.report.to_table());
            if !o.checks.is_empty() {
                print!("\n{}", check_table(&o.checks));
            }
            Ok(if o.passed { 0 } else { 1 })
        }
        Command::Deposit { common, seed_deposit, seed_defect, policy } => {
            let i = common.load(true)?;
            let seeds = Seeds { deposit: seed_deposit, defect: seed_defect, vision: 0, shorts: 0 };
            let s = stage_deposit(&i.spec, i.netlist.as_ref().unwrap(), &i.kinds, policy, &seeds)
                .map_err(|e| e.in_stage("deposit"))?;
            write_json(&common.out.join(SUBSTRATE_FILE), &s)?;
            Ok(0)
        }
        Command::Observe { common, seed_vision, accuracy, keep_truth } => {
            let i = common.load(false)?;
            let s: Substrate = read_json(&common.out.join(SUBSTRATE_FILE))?;
            let f = stage_observe(&s, &i.spec, &i.kinds, accuracy, seed_vision, keep_truth)
                .map_err(|e| e.in_stage("observe"))?;
            write_json(&common.out.join(OBSERVED_FILE), &f)?;
            Ok(0)
        }
        Command::Assign { common } => {
            let i = common.load(true)?;
            let f: ObservedField = read_json(&common.out.join(OBSERVED_FILE))?;
            let a = assign(i.netlist.as_ref().unwrap(), &f, &CostParams::default()).map_err(|e| e.in_stage("assign"))?;
            write_json(&common.out.join(ASSIGNMENT_FILE), &a)?;
            Ok(0)
        }
        Command::Route { common, interconnect_width } => {
            let i = common.load(true)?;
            let f: ObservedField = read_json(&common.out.join(OBSERVED_FILE))?;
            let a: Assignment = read_json(&common.out.join(ASSIGNMENT_FILE))?;
            let policy = RoutePolicy { interconnect_width, ..Default::default() };
            let l = stage_route(&f, i.netlist.as_ref().unwrap(), &a, &i.kinds, &i.spec, &policy)
                .map_err(|e| e.in_stage("route"))?;
            write_json(&common.out.join(LAYOUT_FILE), &l)?;
            Ok(0)
        }
        Command::Report { common, seed_shorts, trials } => {
            let i = common.load(true)?;
            let f: ObservedField = read_json(&common.out.join(OBSERVED_FILE))?;
            let a: Assignment = read_json(&common.out.join(ASSIGNMENT_FILE))?;
            let l: RoutedLayout = read_json(&common.out.join(LAYOUT_FILE))?;
            let r = report(i.netlist.as_ref().unwrap(), &f, &a, &l, &i.kinds, &i.spec, trials, seed_shorts)
                .map_err(|e| e.in_stage("report"))?;
            write_json(&common.out.join(REPORT_FILE), &r)?;
            print!("{}", r.to_table());
            Ok(0)
        }
        Command::Check { report, thresholds } => {
            let (pass, table) = cmd_check(&report, thresholds.as_deref())?;
            print!("{table}");
            Ok(if pass { 0 } else { 1 })
        }
        Command::Render { layout, scale, out } => {
            cmd_render(&layout, scale, &out)?;
            Ok(0)
        }
        Command::Bench { name, out, seed_deposit, seed_defect, seed_vision, seed_shorts } => {
            let seeds = Seeds { deposit: seed_deposit, defect: seed_defect, vision: seed_vision, shorts: seed_shorts };
            let p = cmd_bench(&name, &out, seeds)?;
            println!("{}", p.display());
            Ok(0)
        }
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::route::{Path as NetPath, Polyline};

    fn empty_layout() -> RoutedLayout {
        RoutedLayout {
            region: crate::geometry::Region::new(10_000, 5_000),
            pitch: 50,
            grid: (200, 100),
            contact_wire_width: 150,
            interconnect_wire_width: 150,
            assignment: Assignment { mapping: BTreeMap::new(), unassigned_logical: vec![], unused_physical: vec![], cost: 0.0 },
            components: vec![],
            paths: vec![],
            failed_nets: vec![],
            total_wire_length_nm: 0,
            bridge_count: 0,
            footprint_mm2: 0.0,
        }
    }

    #[test]
    fn svg_structure() {
        let mut l = empty_layout();
        let empty = render_svg(&l, 10.0);
        assert!(empty.contains(r#"class="region""#));
        assert!(!empty.contains("<polyline") && !empty.contains("<polygon"));
        assert_eq!(empty, render_svg(&l, 10.0));
        l.paths.push(NetPath {
            net_id: "n".into(),
            terminals: vec![],
            branches: vec![Polyline {
                points: vec![Point::new(100, 100), Point::new(1000, 100), Point::new(1000, 900)],
                widths: vec![150, 150],
            }],
            bridges: vec![],
            length_nm: 1700,
        });
        let one = render_svg(&l, 10.0);
        assert_eq!(one.matches("<polyline").count(), 1);
        l.paths[0].branches[0].widths[1] = 400;
        assert_eq!(render_svg(&l, 10.0).matches("<polyline").count(), 2);
    }

    #[test]
    fn manifest_requires_every_seed() {
        let text = r#"{"bench": "diffpair", "seeds": {"deposit": 1, "defect": 2, "vision": 3}, "out": "o"}"#;
        let err = RunManifest::parse(text, Path::new("/tmp")).unwrap_err().to_string();
        assert!(err.contains("shorts"), "{err}");
        let ok = r#"{"bench": "diffpair", "seeds": {"deposit": 1, "defect": 2, "vision": 3, "shorts": 4}, "out": "o"}"#;
        let m = RunManifest::parse(ok, Path::new("/tmp")).unwrap();
        assert_eq!(m.out, PathBuf::from("/tmp/o"));
        let both = r#"{"bench": "diffpair", "netlist": "n.json", "seeds": {"deposit": 1, "defect": 2, "vision": 3, "shorts": 4}, "out": "o"}"#;
        assert!(RunManifest::parse(both, Path::new("/tmp")).is_err());
    }

    #[test]
    fn check_table_marks_failures() {
        let rows = vec![CheckRow {
            metric: "routed_fraction".into(),
            value: Some(0.4),
            threshold: crate::analyze::Threshold { min: Some(0.5), max: None },
            pass: false,
        }];
        assert!(check_table(&rows).contains("FAIL"));
    }
}
