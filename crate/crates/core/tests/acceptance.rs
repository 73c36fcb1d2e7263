//! Acceptance run: every milestone criterion in one sequential test.
//!
//! Each check returns a pass flag and a one-line summary. All lines are
//! printed before the final assertion so a failing run still shows the
//! whole picture. Runs without the test harness so the lines always show.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256StarStar;

use nanofab::analyze::{
    contact_resistance, diffusion_time_ratio, fingerprint_distance, segment_resistance, simulate_short_count,
    substrate_fingerprint, FabricationReport, FingerprintConfig, Threshold, Thresholds,
};
use nanofab::assign::{assign, assign_exhaustive, mst_length, Assignment, CostParams};
use nanofab::cli::{self, cmd_run, RunManifest, Seeds};
use nanofab::deposition::{deposit, LayoutPolicy};
use nanofab::geometry::{Angle, Point, Region};
use nanofab::model::{Endpoint, Instance, KindLibrary, Net, Netlist, ProcessSpec};
use nanofab::route::{route_net, RoutePolicy, RoutingGrid};
use nanofab::vision::{observe, ObservedComponent, ObservedField};

const SEEDS: Seeds = Seeds { deposit: 1, defect: 2, vision: 3, shorts: 4 };

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn manifest(bench: &str, out: &Path, thresholds: Thresholds) -> RunManifest {
    RunManifest {
        spec: None,
        spec_overrides: BTreeMap::new(),
        netlist: None,
        bench: Some(bench.into()),
        kinds: None,
        seeds: SEEDS,
        out: out.to_path_buf(),
        layout_policy: LayoutPolicy::Lattice,
        defect_classification_accuracy: 1.0,
        keep_truth: false,
        short_trials: 10_000,
        assign: CostParams::default(),
        route: RoutePolicy::default(),
        thresholds,
        svg_scale: 10.0,
    }
}

fn min(v: f64) -> Threshold {
    Threshold { min: Some(v), max: None }
}

fn max(v: f64) -> Threshold {
    Threshold { min: None, max: Some(v) }
}

/// Runs a bench scenario and returns its report and wall time in seconds.
fn timed_run(bench: &str, out: &Path, thresholds: Thresholds) -> (FabricationReport, bool, f64) {
    let t = Instant::now();
    let o = cmd_run(&manifest(bench, out, thresholds)).expect("pipeline run");
    (o.report, o.passed, t.elapsed().as_secs_f64())
}

// ---------------------------------------------------------------------------
// 1 and 2: random logic at 1,000 and 10,000 components

fn milestone_scaled(dir: &Path) -> Outcome {
    let t = Thresholds::from([("routed_fraction".to_string(), min(0.5))]);
    let (r, passed, secs) = timed_run("random_logic:1000:5:10000:7", &dir.join("rl1k"), t);
    let spec = &r.spec;
    let milestone_spec = spec.position_sigma == 2000.0 && spec.orientation_sigma == 20.0 && spec.defect_rate == 0.02;
    let pass = passed && milestone_spec && r.routed_fraction >= 0.5 && secs <= 60.0;
    outcome(
        pass,
        format!(
            "1,000 components: routed_fraction {:.4} (min 0.5), {} / {} nets, {secs:.1} s (max 60 s)",
            r.routed_fraction, r.nets_routed, r.nets_total
        ),
    )
}

fn milestone_full(dir: &Path) -> (Outcome, FabricationReport) {
    let t = Thresholds::from([("routed_fraction".to_string(), min(0.5)), ("print_time_s".to_string(), max(600.0))]);
    let (r, _, secs) = timed_run("random_logic:10000:5:10000:7", &dir.join("rl10k"), t);
    let pass = r.routed_fraction >= 0.5 && secs <= 15.0 * 60.0;
    let o = outcome(
        pass,
        format!("10,000 components: routed_fraction {:.4} (min 0.5), {secs:.0} s (max 900 s)", r.routed_fraction),
    );
    (o, r)
}

fn print_time_claim(r: &FabricationReport) -> Outcome {
    // print time must be length over rate in consistent units
    let mm = r.total_wire_length_nm as f64 * 1e-6;
    let consistent = (r.print_time_s * r.spec.print_rate - mm).abs() <= 1e-9 * mm.max(1.0);
    let pass = consistent && r.spec.print_rate == 1.0 && r.print_time_s <= 600.0;
    outcome(
        pass,
        format!(
            "10,000 components: {:.1} mm of wire at {} mm/s = {:.1} s (max 600 s, nominal 500 s)",
            mm, r.spec.print_rate, r.print_time_s
        ),
    )
}

// ---------------------------------------------------------------------------
// 3: vision error bound

fn vision_bound() -> Outcome {
    let kinds = KindLibrary::standard();
    let spec = ProcessSpec { deposition_area: Region::new(320_000, 320_000), ..ProcessSpec::default() };
    let mix: Vec<_> = [("nmos", 0.4), ("pmos", 0.4), ("res", 0.2)]
        .iter()
        .map(|&(k, f)| (kinds.get(k).unwrap().clone(), f))
        .collect();
    let (mut n, mut bad, mut worst_pos, mut worst_deg) = (0usize, 0usize, 0i64, 0.0f64);
    for seed in 0..100u64 {
        let s = deposit(&spec, &mix, LayoutPolicy::Lattice, 1000 + seed).unwrap();
        let f = observe(&s, &spec, &kinds, 1.0, 5000 + seed).unwrap();
        for o in &f.observations {
            let truth = &s.components[o.phys_id.unwrap() as usize];
            assert_eq!(truth.phys_id, o.phys_id.unwrap());
            let limit = kinds.get(&o.kind).unwrap().critical_dimension as f64 * 0.5;
            let pos = (o.x_nm - truth.x_nm).abs().max((o.y_nm - truth.y_nm).abs());
            let deg = o.theta_deg.arc_distance(truth.theta_deg) as f64 / 1e6;
            worst_pos = worst_pos.max(pos);
            worst_deg = worst_deg.max(deg);
            n += 1;
            if pos as f64 > limit || deg > 15.0 {
                bad += 1;
            }
        }
    }
    outcome(
        n >= 100_000 && bad == 0,
        format!("{n} observations over 100 seeds, {bad} out of bounds (worst {worst_pos} nm, {worst_deg:.3}°)"),
    )
}

// ---------------------------------------------------------------------------
// 4: router against breadth-first search

fn bfs(nx: usize, ny: usize, blocked: &[bool], a: (usize, usize), b: (usize, usize)) -> Option<u64> {
    let mut dist = vec![u64::MAX; nx * ny];
    let mut q = VecDeque::from([a]);
    dist[a.1 * nx + a.0] = 0;
    while let Some((i, j)) = q.pop_front() {
        let d = dist[j * nx + i];
        if (i, j) == b {
            return Some(d);
        }
        for (x, y) in [(i + 1, j), (i.wrapping_sub(1), j), (i, j + 1), (i, j.wrapping_sub(1))] {
            if x < nx && y < ny && !blocked[y * nx + x] && dist[y * nx + x] == u64::MAX {
                dist[y * nx + x] = d + 1;
                q.push_back((x, y));
            }
        }
    }
    None
}

fn router_oracle() -> Outcome {
    let mut rng = Xoshiro256StarStar::seed_from_u64(44);
    let (mut mismatches, mut unreachable) = (0, 0);
    for _ in 0..1000 {
        let (nx, ny) = (rng.random_range(2..=64), rng.random_range(2..=64));
        let a = (rng.random_range(0..nx), rng.random_range(0..ny));
        let b = (rng.random_range(0..nx), rng.random_range(0..ny));
        let density = rng.random_range(0.0..0.45);
        let mut blocked = vec![false; nx * ny];
        let mut g = RoutingGrid::new(nx, ny, 50).unwrap();
        g.set_halo_radius(0);
        for j in 0..ny {
            for i in 0..nx {
                if (i, j) != a && (i, j) != b && rng.random_bool(density) {
                    blocked[j * nx + i] = true;
                    g.set_blocked(i, j);
                }
            }
        }
        let want = bfs(nx, ny, &blocked, a, b);
        let got = route_net(&mut g, &[a, b], 0, &RoutePolicy::default()).ok().map(|p| p.length);
        if want.is_none() {
            unreachable += 1;
        }
        if want != got {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("1000 grids up to 64×64 ({unreachable} unroutable): {mismatches} mismatches"))
}

// ---------------------------------------------------------------------------
// 5: assignment against brute force

fn obs(id: u32, kind: &str, x: i64, y: i64) -> ObservedComponent {
    ObservedComponent {
        obs_id: id,
        phys_id: None,
        kind: kind.into(),
        x_nm: x,
        y_nm: y,
        theta_deg: Angle::ZERO,
        classified_defective: false,
    }
}

/// Sum over nets of the Euclidean spanning tree of the assigned positions.
fn wiring_cost(netlist: &Netlist, pos: &BTreeMap<&str, Point>) -> f64 {
    netlist
        .nets
        .iter()
        .map(|n| {
            let mut ids: Vec<&str> = n.pins.iter().map(|e| e.instance()).collect();
            ids.sort_unstable();
            ids.dedup();
            let pts: Vec<Point> = ids.iter().filter_map(|i| pos.get(i).copied()).collect();
            mst_length(&pts)
        })
        .sum()
}

fn brute_force(netlist: &Netlist, field: &ObservedField) -> f64 {
    fn go<'a>(
        k: usize,
        insts: &[&'a Instance],
        field: &ObservedField,
        used: &mut Vec<bool>,
        pos: &mut BTreeMap<&'a str, Point>,
        netlist: &Netlist,
        best: &mut f64,
    ) {
        if k == insts.len() {
            *best = best.min(wiring_cost(netlist, pos));
            return;
        }
        for (c, o) in field.observations.iter().enumerate() {
            if !used[c] && o.kind == insts[k].kind {
                used[c] = true;
                pos.insert(insts[k].id.as_str(), o.center());
                go(k + 1, insts, field, used, pos, netlist, best);
                pos.remove(insts[k].id.as_str());
                used[c] = false;
            }
        }
    }
    let insts: Vec<&Instance> = netlist.instances.iter().collect();
    let mut best = f64::INFINITY;
    go(0, &insts, field, &mut vec![false; field.observations.len()], &mut BTreeMap::new(), netlist, &mut best);
    best
}

fn random_instance(rng: &mut Xoshiro256StarStar) -> (Netlist, ObservedField) {
    let n = rng.random_range(1..=8);
    let kinds = ["res", "nmos"];
    let instances: Vec<Instance> = (0..n)
        .map(|i| Instance { id: format!("I{i}"), kind: kinds[rng.random_range(0..2)].into(), hint: None })
        .collect();
    let n_nets = rng.random_range(1..=n + 2);
    let nets = (0..n_nets)
        .map(|k| {
            let size = rng.random_range(2..=4).min(n.max(2));
            let pins = (0..size)
                .map(|_| {
                    let i = &instances[rng.random_range(0..n)];
                    Endpoint::new(i.id.clone(), if i.kind == "res" { "a" } else { "g" })
                })
                .collect();
            Net { id: format!("n{k}"), pins }
        })
        .collect();
    let mut observations = Vec::new();
    for kind in kinds {
        let need = instances.iter().filter(|i| i.kind == kind).count();
        // keep the search space small enough to enumerate
        let spare = if need >= 6 { 0 } else { rng.random_range(0..=2) };
        for _ in 0..need + spare {
            let id = observations.len() as u32;
            observations.push(obs(id, kind, rng.random_range(0..50_000), rng.random_range(0..50_000)));
        }
    }
    let field = ObservedField { region: Region::new(50_000, 50_000), observations, overlaps: vec![], missed: None };
    (Netlist { instances, nets, redundancy_groups: vec![] }, field)
}

fn structural_faults(a: &Assignment, netlist: &Netlist, field: &ObservedField) -> usize {
    let mut faults = 0;
    let mut seen = BTreeSet::new();
    for (inst, &o) in &a.mapping {
        let kind = &netlist.instance(inst).unwrap().kind;
        if field.get(o).is_none_or(|c| &c.kind != kind) {
            faults += 1;
        }
        if !seen.insert(o) {
            faults += 1;
        }
    }
    faults + a.unassigned_logical.len()
}

fn assignment_oracle() -> Outcome {
    let mut rng = Xoshiro256StarStar::seed_from_u64(55);
    let params = CostParams::default();
    let (mut worst, mut over, mut faults, mut exhaustive_off) = (1.0f64, 0, 0, 0);
    for _ in 0..1000 {
        let (nl, f) = random_instance(&mut rng);
        let best = brute_force(&nl, &f);
        let ex = assign_exhaustive(&nl, &f, &params).unwrap();
        let h = assign(&nl, &f, &params).unwrap();
        if (ex.cost - best).abs() > 1e-6 * best.max(1.0) {
            exhaustive_off += 1;
        }
        faults += structural_faults(&h, &nl, &f) + structural_faults(&ex, &nl, &f);
        let pos: BTreeMap<&str, Point> = h.mapping.iter().map(|(i, &o)| (i.as_str(), f.get(o).unwrap().center())).collect();
        let cost = wiring_cost(&nl, &pos);
        if (cost - h.cost).abs() > 1e-6 * cost.max(1.0) {
            faults += 1;
        }
        let ratio = if best > 0.0 { cost / best } else if cost > 0.0 { f64::INFINITY } else { 1.0 };
        worst = worst.max(ratio);
        if ratio > 1.5 {
            over += 1;
        }
    }
    outcome(
        over == 0 && faults == 0 && exhaustive_off == 0,
        format!(
            "1000 instances ≤ 8 components: worst cost ratio {worst:.4} (max 1.5), {over} over, \
             {faults} structural faults, exhaustive off brute force {exhaustive_off}"
        ),
    )
}

// ---------------------------------------------------------------------------
// 6: short yield

fn short_yield() -> Outcome {
    let exact = (1.0 - 1e-4f64).powi(10_000);
    let y = simulate_short_count(10_000, 1e-4, 10_000, 6).unwrap();
    outcome(
        y.ci_low <= exact && exact <= y.ci_high && y.trials == 10_000,
        format!("p_clean {:.4}, 95% CI [{:.4}, {:.4}] vs exact {exact:.4}", y.p_clean, y.ci_low, y.ci_high),
    )
}

// ---------------------------------------------------------------------------
// 7: physics spot values

fn physics() -> Outcome {
    let wire = segment_resistance(10_000.0, 1_000.0, 1e5).unwrap();
    let spec = ProcessSpec { contact_resistivity: 1.0, ..ProcessSpec::default() };
    let contact = contact_resistance(150.0 * 150.0, &spec).unwrap();
    let ratio = diffusion_time_ratio(10.0, 10_000.0).unwrap();
    outcome(
        (wire - 1.0).abs() <= 1e-9 && (contact - 4444.4).abs() <= 0.1 && ratio == 1e6,
        format!("wire {wire:.12} Ω, contact {contact:.3} Ω, diffusion ratio {ratio:e}"),
    )
}

// ---------------------------------------------------------------------------
// 8: small circuits

fn small_circuits(dir: &Path) -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (bench, footprint) in [("flipflop:2", true), ("diffpair", false)] {
        let out = dir.join(bench.replace(':', "_"));
        let mut t = Thresholds::from([("max_frequency_hz".to_string(), min(100e6))]);
        if footprint {
            t.insert("footprint_mm2".into(), max(0.05));
        }
        fs::create_dir_all(&out).unwrap();
        let tpath = out.join("thresholds.json");
        fs::write(&tpath, serde_json::to_string(&t).unwrap()).unwrap();
        let (r, _, _) = timed_run(bench, &out, t);
        let report = out.join(cli::REPORT_FILE);
        let code = cli::main_with_args(["nanofab", "check", report.to_str().unwrap(), "--thresholds", tpath.to_str().unwrap()]);
        let freq = r.max_frequency_hz.unwrap_or(0.0);
        let full = r.nets_routed == r.nets_total && r.routed_fraction == 1.0;
        pass &= full && code == 0 && freq >= 100e6 && (!footprint || r.footprint_mm2 <= 0.05);
        parts.push(format!(
            "{bench}: {}/{} nets, {:.3e} Hz, {:.5} mm², check exit {code}",
            r.nets_routed, r.nets_total, freq, r.footprint_mm2
        ));
    }
    outcome(pass, parts.join("; "))
}

// ---------------------------------------------------------------------------
// 9: fingerprints

fn fingerprints() -> Outcome {
    let kinds = KindLibrary::standard();
    let spec = ProcessSpec::default();
    let mix = vec![(kinds.get("nmos").unwrap().clone(), 1.0)];
    let cfg = FingerprintConfig::default();
    let prints: Vec<_> = (0..100u64)
        .map(|s| substrate_fingerprint(&deposit(&spec, &mix, LayoutPolicy::Lattice, 9000 + s).unwrap(), &cfg).unwrap())
        .collect();
    let distinct: BTreeSet<String> = prints.iter().map(|p| p.to_hex()).collect();
    let (mut sum, mut pairs) = (0u64, 0u64);
    for i in 0..prints.len() {
        for j in i + 1..prints.len() {
            sum += fingerprint_distance(&prints[i], &prints[j]) as u64;
            pairs += 1;
        }
    }
    let mean = sum as f64 / pairs as f64;
    outcome(
        distinct.len() >= 99 && (113.0..=143.0).contains(&mean),
        format!("{} distinct of 100, mean pairwise distance {mean:.2} bits (band 113-143)", distinct.len()),
    )
}

// ---------------------------------------------------------------------------
// 10: determinism

fn determinism(dir: &Path) -> Outcome {
    let (a, b) = (dir.join("det_a"), dir.join("det_b"));
    let oa = cmd_run(&manifest("555", &a, Thresholds::new())).unwrap();
    cmd_run(&manifest("555", &b, Thresholds::new())).unwrap();
    let mut differing = Vec::new();
    for f in &oa.files {
        let name = f.file_name().unwrap();
        if fs::read(f).unwrap() != fs::read(b.join(name)).unwrap() {
            differing.push(name.to_string_lossy().into_owned());
        }
    }
    outcome(
        differing.is_empty() && oa.files.len() == 6,
        format!("{} artifacts compared, differing: {:?}", oa.files.len(), differing),
    )
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut results: Vec<(&str, Outcome)> = vec![
        ("vision error bound", vision_bound()),
        ("router matches BFS", router_oracle()),
        ("assignment within 1.5x optimum", assignment_oracle()),
        ("short yield closed form", short_yield()),
        ("physics spot values", physics()),
        ("flip-flop and differential pair", small_circuits(d)),
        ("fingerprint uniqueness", fingerprints()),
        ("determinism", determinism(d)),
    ];
    results.insert(0, ("random logic milestone, 1,000 components", milestone_scaled(d)));
    let (full, big) = milestone_full(d);
    results[0].1.pass &= full.pass;
    results[0].1.detail = format!("{}; {}", results[0].1.detail, full.detail);
    results.insert(1, ("print time under 10 minutes", print_time_claim(&big)));

    println!();
    for (k, (name, o)) in results.iter().enumerate() {
        println!("criterion {:>2} {} {name}: {}", k + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, (_, o))| !o.pass).map(|(k, _)| k + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
