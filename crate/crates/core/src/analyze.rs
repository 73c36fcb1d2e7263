//! Physical and yield metrics for a routed layout.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::assign::Assignment;
use crate::deposition::Substrate;
use crate::geometry::Angle;
use crate::model::{KindLibrary, Netlist, ProcessSpec};
use crate::rng::{splitmix64, substream};
use crate::route::{Path, RoutedLayout};
use crate::vision::ObservedField;
use crate::{Error, Result};

pub const EPSILON_0: f64 = 8.854_187_8128e-12;
/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

pub fn print_time_s(total_wire_length_nm: i64, print_rate_mm_s: f64) -> Result<f64> {
    if !(print_rate_mm_s > 0.0) {
        return Err(Error::invariant("print_rate", "must be > 0"));
    }
    Ok(total_wire_length_nm as f64 * 1e-6 / print_rate_mm_s)
}

/// Seconds to print every wire of the layout; travel between wires is free.
pub fn print_time(layout: &RoutedLayout, spec: &ProcessSpec) -> Result<f64> {
    print_time_s(layout.total_wire_length_nm, spec.print_rate)
}

/// ρL/A for a square cross-section wire.
pub fn segment_resistance(length_nm: f64, width_nm: f64, conductivity: f64) -> Result<f64> {
    if !(width_nm > 0.0) {
        return Err(Error::InvalidInput(format!("wire segment of width {width_nm} nm")));
    }
    if !(conductivity > 0.0) {
        return Err(Error::invariant("conductivity", "must be > 0"));
    }
    // (Ω·cm)⁻¹ → Ω·m
    let rho = 0.01 / conductivity;
    let w = width_nm * 1e-9;
    Ok(rho * length_nm * 1e-9 / (w * w))
}

pub fn wire_resistance(path: &Path, spec: &ProcessSpec) -> Result<f64> {
    let mut r = 0.0;
    for b in &path.branches {
        for (k, w) in b.points.windows(2).enumerate() {
            let len = w[0].dist(w[1]);
            r += segment_resistance(len, b.widths[k] as f64, spec.conductivity)?;
        }
    }
    Ok(r)
}

/// Areal contact resistivity (μΩ·cm²) over the contact area.
pub fn contact_resistance(contact_area_nm2: f64, spec: &ProcessSpec) -> Result<f64> {
    if !(contact_area_nm2 > 0.0) {
        return Err(Error::InvalidInput(format!("contact area {contact_area_nm2} nm²")));
    }
    Ok(spec.contact_resistivity * 1e-6 / (contact_area_nm2 * 1e-14))
}

/// Wire capacitance per metre with insulator thickness equal to wire width.
pub fn wire_capacitance_per_m(spec: &ProcessSpec) -> f64 {
    EPSILON_0 * spec.insulator_kappa
}

/// Lumped single-stage delay terms, SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageLoad {
    pub wire_capacitance_f: f64,
    pub load_capacitance_f: f64,
    pub supply_v: f64,
    pub drive_current_a: f64,
    pub path_resistance_ohm: f64,
}

impl StageLoad {
    /// C·V/I plus the wire's own RC.
    pub fn delay_s(&self) -> f64 {
        let c = self.wire_capacitance_f + self.load_capacitance_f;
        c * self.supply_v / self.drive_current_a + self.path_resistance_ohm * self.wire_capacitance_f
    }
}

fn stage_load(path: &Path, netlist: &Netlist, kinds: &KindLibrary, spec: &ProcessSpec) -> Result<StageLoad> {
    let net = netlist
        .net(&path.net_id)
        .ok_or_else(|| Error::Integrity(format!("layout net {} is not in the netlist", path.net_id)))?;
    let driver = &net.pins[0];
    let kind_of = |inst: &str| -> Result<&crate::model::ComponentKind> {
        let i = netlist
            .instance(inst)
            .ok_or_else(|| Error::Integrity(format!("net {} names unknown instance {inst}", net.id)))?;
        kinds.require(&i.kind)
    };
    let dk = kind_of(driver.instance())?;
    let Some(e) = &dk.electrical else {
        return Err(Error::Unsupported(format!("net {}: driver {} has no electrical parameters", net.id, driver.instance())));
    };
    let drive_pin = dk
        .pin_index(driver.pin())
        .ok_or_else(|| Error::InvalidInput(format!("kind {} has no pin {}", dk.id, driver.pin())))?;
    let length_m = path.length_nm as f64 * 1e-9;
    let c_wire = wire_capacitance_per_m(spec) * length_m;
    let mut c_load = 0.0;
    for ep in &net.pins[1..] {
        let k = kind_of(ep.instance())?;
        if let (Some(re), Some(pi)) = (&k.electrical, k.pin_index(ep.pin())) {
            // fF/μm² × μm²
            c_load += re.c_junction * 1e-15 * k.pins[pi].contact_area_nm2 as f64 * 1e-6;
        }
    }
    let contact = contact_resistance(dk.pins[drive_pin].contact_area_nm2 as f64, spec)?;
    Ok(StageLoad {
        wire_capacitance_f: c_wire,
        load_capacitance_f: c_load,
        supply_v: e.supply_voltage,
        drive_current_a: e.i_dsat * 1e-3 * dk.channel_width_um(),
        path_resistance_ohm: wire_resistance(path, spec)? + 2.0 * contact,
    })
}

/// Delay of a routed net driven by its first endpoint.
pub fn net_delay(net_id: &str, layout: &RoutedLayout, netlist: &Netlist, kinds: &KindLibrary, spec: &ProcessSpec) -> Result<f64> {
    let path = layout
        .path(net_id)
        .ok_or_else(|| Error::InvalidInput(format!("net {net_id} is not routed")))?;
    Ok(stage_load(path, netlist, kinds, spec)?.delay_s())
}

/// Worst delay over routed nets with a transistor driver, and 1/(2·worst).
pub fn max_frequency(layout: &RoutedLayout, netlist: &Netlist, kinds: &KindLibrary, spec: &ProcessSpec) -> Result<(f64, f64)> {
    let mut worst: Option<f64> = None;
    for p in &layout.paths {
        match stage_load(p, netlist, kinds, spec) {
            Ok(s) => worst = Some(worst.map_or(s.delay_s(), |w: f64| w.max(s.delay_s()))),
            Err(Error::Unsupported(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let w = worst.ok_or_else(|| Error::Unsupported("no routed net has a transistor driver".into()))?;
    Ok((w, if w > 0.0 { 0.5 / w } else { f64::INFINITY }))
}

pub fn diffusion_time_ratio(d1_nm: f64, d2_nm: f64) -> Result<f64> {
    if !(d1_nm > 0.0 && d2_nm > 0.0) {
        return Err(Error::InvalidInput("diffusion distances must be > 0".into()));
    }
    let r = d2_nm / d1_nm;
    Ok(r * r)
}

// ---------------------------------------------------------------------------
// shorts

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YieldEstimate {
    pub trials: u64,
    pub failures: u64,
    /// Fraction of trials with no fatal short.
    pub p_clean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let (k, n) = (k as f64, n as f64);
    let p = k / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Wires whose short would break the circuit: branches of nets with at
/// least one endpoint outside every redundancy group.
pub fn fatal_wire_count(layout: &RoutedLayout, netlist: &Netlist) -> u64 {
    let redundant = netlist.redundant_instances();
    layout
        .paths
        .iter()
        .filter(|p| {
            netlist
                .net(&p.net_id)
                .is_none_or(|n| !n.pins.iter().all(|e| redundant.contains(e.instance())))
        })
        .map(|p| p.branches.len() as u64)
        .sum()
}

/// Monte Carlo short yield.
///
/// Each trial shorts every wire independently with probability
/// `short_rate`; the trial fails if a fatal wire is shorted. A trial only
/// needs the index of its first shorted wire, which is drawn directly as a
/// geometric variate on its own counter-keyed stream.
pub fn simulate_shorts(layout: &RoutedLayout, netlist: &Netlist, spec: &ProcessSpec, trials: u64, seed: u64) -> Result<YieldEstimate> {
    simulate_short_count(fatal_wire_count(layout, netlist), spec.short_rate, trials, seed)
}

pub fn simulate_short_count(fatal_wires: u64, short_rate: f64, trials: u64, seed: u64) -> Result<YieldEstimate> {
    if trials == 0 {
        return Err(Error::invariant("trials", "must be ≥ 1"));
    }
    if !(0.0..=1.0).contains(&short_rate) {
        return Err(Error::invariant("short_rate", "must lie in [0, 1]"));
    }
    let mut failures = 0;
    if fatal_wires > 0 && short_rate > 0.0 {
        let geo = (short_rate < 1.0).then(|| Geometric::new(short_rate).expect("rate in (0, 1)"));
        for t in 0..trials {
            let mut rng = substream(seed, t);
            let first = match &geo {
                Some(g) => g.sample(&mut rng),
                None => {
                    let _: u64 = rng.random();
                    0
                }
            };
            if first < fatal_wires {
                failures += 1;
            }
        }
    }
    let clean = trials - failures;
    let (ci_low, ci_high) = wilson_interval(clean, trials);
    Ok(YieldEstimate { trials, failures, p_clean: clean as f64 / trials as f64, ci_low, ci_high })
}

// ---------------------------------------------------------------------------
// fingerprints

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FingerprintConfig {
    /// Multiple of 64.
    pub bits: usize,
    pub position_bucket_nm: i64,
    pub orientation_bucket_deg: f64,
}

impl Default for FingerprintConfig {
    fn default() -> Self {
        FingerprintConfig { bits: 256, position_bucket_nm: 100, orientation_bucket_deg: 5.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fingerprint {
    pub words: Vec<u64>,
}

impl Fingerprint {
    pub fn bits(&self) -> usize {
        self.words.len() * 64
    }

    pub fn distance(&self, other: &Fingerprint) -> u32 {
        assert_eq!(self.words.len(), other.words.len(), "fingerprints of different lengths");
        self.words.iter().zip(&other.words).map(|(a, b)| (a ^ b).count_ones()).sum()
    }

    pub fn to_hex(&self) -> String {
        self.words.iter().map(|w| format!("{w:016x}")).collect()
    }
}

pub fn fingerprint_distance(a: &Fingerprint, b: &Fingerprint) -> u32 {
    a.distance(b)
}

/// Hashes quantized poses into a fixed-length bit vector.
///
/// Positions are bucketed relative to the smallest x and y present, so a
/// rigid translation leaves the fingerprint unchanged. The sorted bucket
/// list is folded into one splitmix64 chain per 64-bit word, each chain
/// keyed by its word index.
pub fn fingerprint_poses(poses: &[(i64, i64, Angle)], cfg: &FingerprintConfig) -> Result<Fingerprint> {
    if poses.is_empty() {
        return Err(Error::InvalidInput("fingerprint of an empty layout".into()));
    }
    if cfg.bits == 0 || cfg.bits % 64 != 0 {
        return Err(Error::Config(format!("fingerprint length {} is not a positive multiple of 64", cfg.bits)));
    }
    if cfg.position_bucket_nm <= 0 || !(cfg.orientation_bucket_deg > 0.0) {
        return Err(Error::Config("fingerprint buckets must be > 0".into()));
    }
    let x0 = poses.iter().map(|p| p.0).min().unwrap();
    let y0 = poses.iter().map(|p| p.1).min().unwrap();
    let per_turn = (360.0 / cfg.orientation_bucket_deg).ceil() as i64;
    let mut buckets: Vec<(i64, i64, i64)> = poses
        .iter()
        .map(|&(x, y, t)| {
            let tb = ((t.degrees() / cfg.orientation_bucket_deg).floor() as i64).rem_euclid(per_turn);
            ((x - x0).div_euclid(cfg.position_bucket_nm), (y - y0).div_euclid(cfg.position_bucket_nm), tb)
        })
        .collect();
    buckets.sort_unstable();
    let words = (0..cfg.bits / 64)
        .map(|lane| {
            let mut h = splitmix64(0x6E61_6E6F_6661_6221 ^ lane as u64);
            for &(bx, by, bt) in &buckets {
                h = splitmix64(h ^ bx as u64);
                h = splitmix64(h ^ by as u64);
                h = splitmix64(h ^ bt as u64);
            }
            splitmix64(h ^ buckets.len() as u64)
        })
        .collect();
    Ok(Fingerprint { words })
}

pub fn substrate_fingerprint(s: &Substrate, cfg: &FingerprintConfig) -> Result<Fingerprint> {
    let poses: Vec<_> = s.components.iter().map(|c| (c.x_nm, c.y_nm, c.theta_deg)).collect();
    fingerprint_poses(&poses, cfg)
}

pub fn layout_fingerprint(l: &RoutedLayout, cfg: &FingerprintConfig) -> Result<Fingerprint> {
    let poses: Vec<_> = l.components.iter().map(|c| (c.x_nm, c.y_nm, c.theta_deg)).collect();
    fingerprint_poses(&poses, cfg)
}

// ---------------------------------------------------------------------------
// report

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FabricationReport {
    pub components_total: usize,
    pub components_assigned: usize,
    pub components_routed: usize,
    pub routed_fraction: f64,
    pub nets_total: usize,
    pub nets_routed: usize,
    /// Failed nets over all nets.
    pub net_failure_fraction: f64,
    pub wire_count: usize,
    pub total_wire_length_nm: i64,
    pub print_time_s: f64,
    pub worst_net_delay_s: Option<f64>,
    pub max_frequency_hz: Option<f64>,
    pub expected_shorts: f64,
    pub yield_estimate: YieldEstimate,
    pub footprint_mm2: f64,
    pub bridge_count: usize,
    pub spec: ProcessSpec,
}

/// Rounds to 12 significant digits so serialized metrics do not carry
/// last-bit noise from platform maths.
fn fixed(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let mag = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(11 - mag);
    if scale.is_finite() && scale > 0.0 {
        (x * scale).round() / scale
    } else {
        x
    }
}

/// Aggregates every metric for one pipeline run.
pub fn report(
    netlist: &Netlist,
    field: &ObservedField,
    assignment: &Assignment,
    layout: &RoutedLayout,
    kinds: &KindLibrary,
    spec: &ProcessSpec,
    short_trials: u64,
    seed: u64,
) -> Result<FabricationReport> {
    assignment.check(netlist, field)?;
    if layout.assignment != *assignment {
        return Err(Error::Integrity("layout was routed from a different assignment".into()));
    }
    let ids: BTreeSet<u32> = field.observations.iter().map(|o| o.obs_id).collect();
    if layout.components.len() != ids.len() || layout.components.iter().any(|c| !ids.contains(&c.obs_id)) {
        return Err(Error::Integrity("layout components do not match the observed field".into()));
    }
    let known: BTreeSet<&str> = netlist.nets.iter().map(|n| n.id.as_str()).collect();
    if let Some(p) = layout.paths.iter().find(|p| !known.contains(p.net_id.as_str())) {
        return Err(Error::Integrity(format!("layout net {} is not in the netlist", p.net_id)));
    }

    let routed_nets: BTreeSet<&str> = layout.paths.iter().map(|p| p.net_id.as_str()).collect();
    let mut nets_of: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for n in &netlist.nets {
        for e in &n.pins {
            nets_of.entry(e.instance()).or_default().push(n.id.as_str());
        }
    }
    let components_total = netlist.instances.len();
    let components_assigned = assignment.mapping.len();
    let components_routed = netlist
        .instances
        .iter()
        .filter(|i| assignment.mapping.contains_key(&i.id))
        .filter(|i| nets_of.get(i.id.as_str()).is_none_or(|ns| ns.iter().all(|n| routed_nets.contains(n))))
        .count();
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };

    let wire_count = layout.wire_count();
    let (worst, freq) = match max_frequency(layout, netlist, kinds, spec) {
        Ok((w, f)) => (Some(fixed(w)), Some(fixed(f))),
        Err(Error::Unsupported(_)) => (None, None),
        Err(e) => return Err(e),
    };
    let mut y = simulate_shorts(layout, netlist, spec, short_trials, seed)?;
    y.p_clean = fixed(y.p_clean);
    y.ci_low = fixed(y.ci_low);
    y.ci_high = fixed(y.ci_high);

    Ok(FabricationReport {
        components_total,
        components_assigned,
        components_routed,
        routed_fraction: fixed(ratio(components_routed, components_total)),
        nets_total: netlist.nets.len(),
        nets_routed: layout.paths.len(),
        net_failure_fraction: fixed(ratio(layout.failed_nets.len(), netlist.nets.len())),
        wire_count,
        total_wire_length_nm: layout.total_wire_length_nm,
        print_time_s: fixed(print_time(layout, spec)?),
        worst_net_delay_s: worst,
        max_frequency_hz: freq,
        expected_shorts: fixed(wire_count as f64 * spec.short_rate),
        yield_estimate: y,
        footprint_mm2: fixed(layout.footprint_mm2),
        bridge_count: layout.bridge_count,
        spec: spec.clone(),
    })
}

impl FabricationReport {
    /// Metric value by threshold key.
    pub fn metric(&self, key: &str) -> Option<Option<f64>> {
        Some(match key {
            "routed_fraction" => Some(self.routed_fraction),
            "components_routed" => Some(self.components_routed as f64),
            "net_failure_fraction" => Some(self.net_failure_fraction),
            "print_time_s" => Some(self.print_time_s),
            "worst_net_delay_s" => self.worst_net_delay_s,
            "max_frequency_hz" => self.max_frequency_hz,
            "expected_shorts" => Some(self.expected_shorts),
            "yield" => Some(self.yield_estimate.p_clean),
            "footprint_mm2" => Some(self.footprint_mm2),
            "total_wire_length_nm" => Some(self.total_wire_length_nm as f64),
            "bridge_count" => Some(self.bridge_count as f64),
            _ => return None,
        })
    }

    pub fn to_table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4e}"));
        let y = &self.yield_estimate;
        let rows: Vec<(&str, String)> = vec![
            ("components", format!("{}", self.components_total)),
            ("assigned", format!("{}", self.components_assigned)),
            ("routed", format!("{}", self.components_routed)),
            ("routed fraction", format!("{:.4}", self.routed_fraction)),
            ("nets routed", format!("{} / {}", self.nets_routed, self.nets_total)),
            ("wires", format!("{}", self.wire_count)),
            ("wire length (mm)", format!("{:.6}", self.total_wire_length_nm as f64 * 1e-6)),
            ("print time (s)", format!("{:.3}", self.print_time_s)),
            ("worst net delay (s)", opt(self.worst_net_delay_s)),
            ("max frequency (Hz)", opt(self.max_frequency_hz)),
            ("expected shorts", format!("{:.4}", self.expected_shorts)),
            ("yield (95% CI)", format!("{:.4} [{:.4}, {:.4}]", y.p_clean, y.ci_low, y.ci_high)),
            ("footprint (mm²)", format!("{:.6}", self.footprint_mm2)),
            ("bridges", format!("{}", self.bridge_count)),
        ];
        let w = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0);
        rows.iter().map(|(k, v)| format!("{k:<w$}  {v}\n")).collect()
    }
}

// ---------------------------------------------------------------------------
// thresholds

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Threshold {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max: Option<f64>,
}

pub type Thresholds = BTreeMap<String, Threshold>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub metric: String,
    pub value: Option<f64>,
    pub threshold: Threshold,
    pub pass: bool,
}

/// Final-check limits for small demonstration circuits.
pub fn final_check_thresholds() -> Thresholds {
    let mut t = Thresholds::new();
    t.insert("max_frequency_hz".into(), Threshold { min: Some(100e6), max: None });
    t.insert("footprint_mm2".into(), Threshold { min: None, max: Some(0.05) });
    t.insert("print_time_s".into(), Threshold { min: None, max: Some(600.0) });
    t
}

/// Compares each thresholded metric; a metric the report lacks fails.
pub fn check_thresholds(report: &FabricationReport, thresholds: &Thresholds) -> Result<Vec<CheckRow>> {
    thresholds
        .iter()
        .map(|(k, t)| {
            let value = report.metric(k).ok_or_else(|| Error::Config(format!("unknown threshold key `{k}`")))?;
            let pass = value.is_some_and(|v| t.min.is_none_or(|m| v >= m) && t.max.is_none_or(|m| v <= m));
            Ok(CheckRow { metric: k.clone(), value, threshold: *t, pass })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point, Region};
    use crate::route::Polyline;

    fn straight(len_nm: i64, width: i64) -> Path {
        Path {
            net_id: "n".into(),
            terminals: vec![],
            branches: vec![Polyline { points: vec![Point::new(0, 0), Point::new(len_nm, 0)], widths: vec![width] }],
            bridges: vec![],
            length_nm: len_nm,
        }
    }

    fn layout_with(paths: Vec<Path>) -> RoutedLayout {
        let total = paths.iter().map(|p| p.length_nm).sum();
        RoutedLayout {
            region: Region::new(1000, 1000),
            pitch: 50,
            grid: (20, 20),
            contact_wire_width: 150,
            interconnect_wire_width: 150,
            assignment: Assignment { mapping: BTreeMap::new(), unassigned_logical: vec![], unused_physical: vec![], cost: 0.0 },
            components: vec![],
            paths,
            failed_nets: vec![],
            total_wire_length_nm: total,
            bridge_count: 0,
            footprint_mm2: 0.0,
        }
    }

    #[test]
    fn print_time_values() {
        // 10,000 components × 5 fan-out × 10 μm
        assert!((print_time_s(500_000_000, 1.0).unwrap() - 500.0).abs() < 1e-9);
        assert_eq!(print_time_s(0, 1.0).unwrap(), 0.0);
        assert_eq!(print_time_s(1_000_000, 2.0).unwrap(), 0.5);
        assert!(print_time_s(1, 0.0).is_err());
    }

    #[test]
    fn resistance_values() {
        let spec = ProcessSpec::default();
        assert!((wire_resistance(&straight(10_000, 1000), &spec).unwrap() - 1.0).abs() < 1e-9);
        let narrow = wire_resistance(&straight(10_000, 150), &spec).unwrap();
        assert!((narrow - 1.0 / (0.15f64 * 0.15)).abs() < 1e-6, "{narrow}");
        let r2 = wire_resistance(&straight(20_000, 1000), &spec).unwrap();
        assert!((r2 - 2.0).abs() < 1e-9);
        assert!(wire_resistance(&straight(10, 0), &spec).is_err());

        assert!((contact_resistance(22_500.0, &spec).unwrap() - 4444.444).abs() < 0.01);
        assert!((contact_resistance(1e14, &spec).unwrap() - 1e-6).abs() < 1e-18);
        let half = contact_resistance(45_000.0, &spec).unwrap();
        assert!((half * 2.0 - contact_resistance(22_500.0, &spec).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn delay_values() {
        let s = StageLoad {
            wire_capacitance_f: 0.0,
            load_capacitance_f: 1e-15,
            supply_v: 1.5,
            drive_current_a: 0.94e-3,
            path_resistance_ohm: 0.0,
        };
        assert!((s.delay_s() - 1.5957e-12).abs() < 1e-15);
        let zero = StageLoad { load_capacitance_f: 0.0, ..s };
        assert_eq!(zero.delay_s(), 0.0);
        // 34.5 aF/μm
        let c = wire_capacitance_per_m(&ProcessSpec::default()) * 1e-6;
        assert!((c - 34.53e-18).abs() < 0.01e-18, "{c}");
        assert!((0.5f64 / 5e-9 - 100e6).abs() < 1e-3);
        assert!((0.5 / s.delay_s() - 313.3e9).abs() < 0.1e9);
    }

    #[test]
    fn diffusion_values() {
        assert_eq!(diffusion_time_ratio(10.0, 10_000.0).unwrap(), 1e6);
        assert_eq!(diffusion_time_ratio(7.0, 7.0).unwrap(), 1.0);
        assert_eq!(diffusion_time_ratio(1.0, 3.0).unwrap(), 9.0);
        assert!(diffusion_time_ratio(0.0, 3.0).is_err());
    }

    #[test]
    fn short_extremes() {
        let y = simulate_short_count(100, 0.0, 50, 1).unwrap();
        assert_eq!((y.failures, y.p_clean), (0, 1.0));
        let y = simulate_short_count(1, 1.0, 50, 1).unwrap();
        assert_eq!(y.p_clean, 0.0);
        assert!(simulate_short_count(1, 0.5, 0, 1).is_err());
    }

    #[test]
    fn short_yield_matches_binomial() {
        let exact = (1.0 - 1e-4f64).powi(10_000);
        for trials in [100u64, 1000, 10_000] {
            let y = simulate_short_count(10_000, 1e-4, trials, 42).unwrap();
            let sigma = (exact * (1.0 - exact) / trials as f64).sqrt();
            assert!((y.p_clean - exact).abs() < 3.0 * sigma, "{trials}: {}", y.p_clean);
        }
    }

    #[test]
    fn per_wire_sampling_agrees_with_geometric_shortcut() {
        // brute force: each wire shorted independently
        let (wires, rate, trials) = (40u64, 0.02, 20_000u64);
        let mut rng = crate::rng::stream(9);
        let mut clean = 0;
        for _ in 0..trials {
            if (0..wires).all(|_| !rng.random_bool(rate)) {
                clean += 1;
            }
        }
        let brute = clean as f64 / trials as f64;
        let fast = simulate_short_count(wires, rate, trials, 9).unwrap().p_clean;
        let sigma = (brute * (1.0 - brute) / trials as f64).sqrt();
        assert!((brute - fast).abs() < 5.0 * sigma, "{brute} vs {fast}");
    }

    #[test]
    fn wilson_contains_point_estimate() {
        let (lo, hi) = wilson_interval(3679, 10_000);
        assert!(lo < 0.3679 && 0.3679 < hi);
        assert!((hi - lo - 2.0 * Z95 * (0.3679f64 * 0.6321 / 10_000.0).sqrt()).abs() < 1e-4);
        assert_eq!(wilson_interval(0, 10).0, 0.0);
    }

    #[test]
    fn redundant_nets_are_not_fatal() {
        let mut nl = Netlist::default();
        for id in ["A", "B", "C"] {
            nl.instances.push(crate::model::Instance { id: id.into(), kind: "res".into(), hint: None });
        }
        let ep = crate::model::Endpoint::new;
        nl.nets.push(crate::model::Net { id: "ab".into(), pins: vec![ep("A", "a"), ep("B", "a")] });
        nl.nets.push(crate::model::Net { id: "bc".into(), pins: vec![ep("B", "b"), ep("C", "b")] });
        nl.redundancy_groups = vec![vec!["A".into(), "B".into()]];
        let mut p1 = straight(100, 150);
        p1.net_id = "ab".into();
        let mut p2 = straight(100, 150);
        p2.net_id = "bc".into();
        let l = layout_with(vec![p1, p2]);
        assert_eq!(fatal_wire_count(&l, &nl), 1);
    }

    #[test]
    fn fingerprint_behaviour() {
        let cfg = FingerprintConfig::default();
        let poses: Vec<(i64, i64, Angle)> =
            (0..50).map(|k| (k * 997 % 10_000, k * 1_301 % 10_000, Angle::from_degrees(k as f64 * 7.3))).collect();
        let a = fingerprint_poses(&poses, &cfg).unwrap();
        assert_eq!(a.bits(), 256);
        assert_eq!(a.distance(&a), 0);
        let moved: Vec<_> = poses.iter().map(|&(x, y, t)| (x + 12_345, y - 40, t)).collect();
        assert_eq!(fingerprint_poses(&moved, &cfg).unwrap(), a);
        let mut shuffled = poses.clone();
        shuffled.reverse();
        assert_eq!(fingerprint_poses(&shuffled, &cfg).unwrap(), a);
        let mut nudged = poses.clone();
        nudged[3].0 += 5_000;
        let b = fingerprint_poses(&nudged, &cfg).unwrap();
        assert!(a.distance(&b) > 64);
        assert!(fingerprint_poses(&[], &cfg).is_err());
        assert!(fingerprint_poses(&poses, &FingerprintConfig { bits: 100, ..cfg }).is_err());
    }

    #[test]
    fn thresholds() {
        let l = layout_with(vec![]);
        let field = ObservedField { region: l.region, observations: vec![], overlaps: vec![], missed: None };
        let a = l.assignment.clone();
        let mut r = report(&Netlist::default(), &field, &a, &l, &KindLibrary::standard(), &ProcessSpec::default(), 100, 1).unwrap();
        assert_eq!((r.routed_fraction, r.yield_estimate.p_clean, r.print_time_s), (0.0, 1.0, 0.0));
        r.print_time_s = 500.0;
        r.routed_fraction = 0.4;
        let t: Thresholds = serde_json::from_str(r#"{"print_time_s": {"max": 600}, "routed_fraction": {"min": 0.5}}"#).unwrap();
        let rows = check_thresholds(&r, &t).unwrap();
        assert_eq!(rows.iter().map(|r| r.pass).collect::<Vec<_>>(), vec![true, false]);
        assert!(check_thresholds(&r, &Thresholds::new()).unwrap().is_empty());
        let bad: Thresholds = serde_json::from_str(r#"{"speed": {"min": 1}}"#).unwrap();
        assert!(check_thresholds(&r, &bad).is_err());
        // no transistor-driven net: frequency is missing and fails its check
        let f = check_thresholds(&r, &final_check_thresholds()).unwrap();
        assert!(!f.iter().find(|r| r.metric == "max_frequency_hz").unwrap().pass);
        assert!(r.to_table().contains("routed fraction"));
    }

    #[test]
    fn fixed_rounding() {
        assert_eq!(fixed(0.1 + 0.2), 0.3);
        assert_eq!(fixed(123_456_789.123_456_78), 123_456_789.123);
        assert_eq!(fixed(0.0), 0.0);
    }

    proptest::proptest! {
        #[test]
        fn distance_is_a_metric(a in proptest::collection::vec(proptest::num::u64::ANY, 4),
                                b in proptest::collection::vec(proptest::num::u64::ANY, 4),
                                c in proptest::collection::vec(proptest::num::u64::ANY, 4)) {
            let (a, b, c) = (Fingerprint { words: a }, Fingerprint { words: b }, Fingerprint { words: c });
            proptest::prop_assert_eq!(a.distance(&b), b.distance(&a));
            proptest::prop_assert_eq!(a.distance(&a), 0);
            proptest::prop_assert!(a.distance(&c) <= a.distance(&b) + b.distance(&c));
            proptest::prop_assert_eq!(a.distance(&b) == 0, a == b);
        }

        #[test]
        fn delay_is_monotone(c_wire in 0.0..1e-13f64, c_load in 0.0..1e-13f64, r in 0.0..1e5f64,
                             dc in 0.0..1e-14f64, dr in 0.0..1e4f64) {
            let base = StageLoad { wire_capacitance_f: c_wire, load_capacitance_f: c_load, supply_v: 1.5,
                                   drive_current_a: 3e-4, path_resistance_ohm: r };
            let d = base.delay_s();
            let bumped = StageLoad { wire_capacitance_f: c_wire + dc, ..base };
            proptest::prop_assert!(bumped.delay_s() >= d);
            let bumped = StageLoad { load_capacitance_f: c_load + dc, ..base };
            proptest::prop_assert!(bumped.delay_s() >= d);
            let bumped = StageLoad { path_resistance_ohm: r + dr, ..base };
            proptest::prop_assert!(bumped.delay_s() >= d);
        }

        #[test]
        fn print_time_is_unit_consistent(len in 0i64..1_000_000_000_000, rate in 0.01f64..100.0) {
            let t = print_time_s(len, rate).unwrap();
            let back = t * rate * 1e6;
            proptest::prop_assert!((back - len as f64).abs() <= 1e-9 * len as f64 + 1e-6);
        }
    }
}
