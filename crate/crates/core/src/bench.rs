//! Deterministic benchmark netlists.
//!
//! Every generator returns a [`BenchScenario`]: the netlist with a hint
//! position per instance on a square site lattice, the spec overrides that
//! size the deposition to that lattice, and the kind mix to deposit.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::analyze::{final_check_thresholds, Threshold, Thresholds};
use crate::geometry::{Point, Region};
use crate::model::{Endpoint, Instance, KindLibrary, Net, Netlist, ProcessSpec};
use crate::rng;
use crate::{Error, Result};

/// Site spacing of the fixed templates, nm.
pub const TEMPLATE_SPACING_NM: i64 = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchScenario {
    pub name: String,
    pub netlist: Netlist,
    /// `ProcessSpec` keys to override, in text form.
    pub spec_overrides: BTreeMap<String, String>,
    /// Deposition mix: kind id and fraction.
    pub kind_mix: Vec<(String, f64)>,
    pub seed: u64,
    pub thresholds: Thresholds,
}

impl BenchScenario {
    pub fn spec(&self, base: &ProcessSpec) -> Result<ProcessSpec> {
        base.with_overrides(self.spec_overrides.iter().map(|(k, v)| (k.as_str(), v.as_str())))
    }

    pub fn mix(&self, kinds: &KindLibrary) -> Result<Vec<(crate::model::ComponentKind, f64)>> {
        self.kind_mix.iter().map(|(k, f)| Ok((kinds.require(k)?.clone(), *f))).collect()
    }
}

/// Lattice for `n` instances: a little over `n` sites so a few defective or
/// overlapping components can be skipped.
pub fn site_lattice(n: usize, spacing_nm: i64) -> (usize, usize, Region) {
    let sites = ((n as f64 * 1.05).ceil() as usize).max(n + 4);
    let cols = (sites as f64).sqrt().ceil() as usize;
    let rows = sites.div_ceil(cols);
    (cols, rows, Region::new(cols as i64 * spacing_nm, rows as i64 * spacing_nm))
}

fn site_center(k: usize, cols: usize, spacing: i64) -> Point {
    Point::new((k % cols) as i64 * spacing + spacing / 2, (k / cols) as i64 * spacing + spacing / 2)
}

fn overrides(region: Region, spacing_nm: i64) -> BTreeMap<String, String> {
    let density = (1000.0 / spacing_nm as f64).powi(2);
    BTreeMap::from([
        ("deposition_area".to_string(), format!("{} x {}", region.width_nm, region.height_nm)),
        ("component_density_target".to_string(), density.to_string()),
    ])
}

/// Deposition fractions matching the netlist's kind counts.
pub fn kind_mix(netlist: &Netlist) -> Vec<(String, f64)> {
    let n = netlist.instances.len() as f64;
    netlist.kind_counts().into_iter().map(|(k, c)| (k.to_string(), c as f64 / n)).collect()
}

fn place(instances: &mut [Instance], spacing: i64) -> (usize, Region) {
    let (cols, _, region) = site_lattice(instances.len(), spacing);
    for (k, inst) in instances.iter_mut().enumerate() {
        inst.hint = Some(site_center(k, cols, spacing));
    }
    (cols, region)
}

/// Defect rate the random-logic milestone is judged at.
pub const MILESTONE_DEFECT_RATE: f64 = 0.02;

const GATES: [&str; 6] = ["g0", "g1", "g2", "g3", "g4", "g5"];

/// `n` multi-gate transistors, each driving `fanout` distinct others from its
/// drain.
///
/// Receivers are the nearest lattice neighbours that still have a free gate,
/// ties broken at random, so wiring stays local the way a placed design would.
pub fn gen_random_logic(n: usize, fanout: usize, avg_spacing_nm: i64, seed: u64) -> Result<BenchScenario> {
    if n < 2 {
        return Err(Error::invariant("n_components", "must be ≥ 2"));
    }
    if fanout < 1 {
        return Err(Error::invariant("fanout", "must be ≥ 1"));
    }
    if fanout >= n {
        return Err(Error::InvalidInput(format!("fanout {fanout} needs more than {n} components")));
    }
    if fanout > GATES.len() {
        return Err(Error::Limit(format!("fanout {fanout} exceeds the {} gates per component", GATES.len())));
    }
    if avg_spacing_nm <= 0 {
        return Err(Error::invariant("avg_spacing_nm", "must be > 0"));
    }
    let mut instances: Vec<Instance> =
        (0..n).map(|k| Instance { id: format!("T{k}"), kind: "nmos_mc".into(), hint: None }).collect();
    let (cols, region) = place(&mut instances, avg_spacing_nm);
    let rows = n.div_ceil(cols);
    let mut rng = rng::stream(seed);
    let mut free_gates = vec![GATES.len(); n];
    let mut nets = Vec::with_capacity(n);
    for d in 0..n {
        let (dc, dr) = ((d % cols) as i64, (d / cols) as i64);
        let mut chosen: Vec<usize> = Vec::with_capacity(fanout);
        let mut ring = 1i64;
        while chosen.len() < fanout {
            if ring > cols.max(rows) as i64 {
                return Err(Error::Limit(format!("no free gates left for driver T{d}")));
            }
            let mut cands: Vec<usize> = Vec::new();
            for r in dr - ring..=dr + ring {
                for c in dc - ring..=dc + ring {
                    if (r - dr).abs().max((c - dc).abs()) != ring || c < 0 || r < 0 || c >= cols as i64 {
                        continue;
                    }
                    let k = r as usize * cols + c as usize;
                    if k < n && free_gates[k] > 0 {
                        cands.push(k);
                    }
                }
            }
            // nearest first; ties in random order
            cands.shuffle(&mut rng);
            cands.sort_by_key(|&k| {
                let (c, r) = ((k % cols) as i64, (k / cols) as i64);
                (c - dc).pow(2) + (r - dr).pow(2)
            });
            chosen.extend(cands.into_iter().take(fanout - chosen.len()));
            ring += 1;
        }
        let mut pins = vec![Endpoint::new(format!("T{d}"), "d")];
        for r in chosen {
            let g = GATES[GATES.len() - free_gates[r]];
            free_gates[r] -= 1;
            pins.push(Endpoint::new(format!("T{r}"), g));
        }
        nets.push(Net { id: format!("N{d}"), pins });
    }
    let netlist = Netlist { instances, nets, redundancy_groups: vec![] };
    let mut thresholds = Thresholds::new();
    thresholds.insert("routed_fraction".into(), Threshold { min: Some(0.5), max: None });
    Ok(BenchScenario {
        name: format!("random_logic_{n}_f{fanout}"),
        kind_mix: kind_mix(&netlist),
        netlist,
        spec_overrides: {
            let mut o = overrides(region, avg_spacing_nm);
            o.insert("defect_rate".into(), MILESTONE_DEFECT_RATE.to_string());
            o
        },
        seed,
        thresholds,
    })
}

/// Netlist under construction from `(instance, pin)` lists.
#[derive(Default)]
struct Builder {
    instances: Vec<Instance>,
    nets: BTreeMap<String, Vec<Endpoint>>,
    order: Vec<String>,
}

impl Builder {
    fn inst(&mut self, id: &str, kind: &str) {
        self.instances.push(Instance { id: id.into(), kind: kind.into(), hint: None });
    }

    fn connect(&mut self, net: &str, pins: &[(&str, &str)]) {
        if !self.nets.contains_key(net) {
            self.order.push(net.to_string());
        }
        let e = self.nets.entry(net.to_string()).or_default();
        e.extend(pins.iter().map(|&(i, p)| Endpoint::new(i, p)));
    }

    fn finish(mut self, name: &str) -> BenchScenario {
        let (_, region) = place(&mut self.instances, TEMPLATE_SPACING_NM);
        let nets = self.order.iter().map(|id| Net { id: id.clone(), pins: self.nets[id].clone() }).collect();
        let netlist = Netlist { instances: self.instances, nets, redundancy_groups: vec![] };
        BenchScenario {
            name: name.into(),
            kind_mix: kind_mix(&netlist),
            netlist,
            spec_overrides: overrides(region, TEMPLATE_SPACING_NM),
            seed: 1,
            thresholds: final_check_thresholds(),
        }
    }
}

/// Master-slave D flip-flops in a chain, twelve transistors per stage:
///
/// | pair | role | in | out |
/// |---|---|---|---|
/// | P0/N0 | clock inverter | CLK | CLKB |
/// | P1/N1 | master pass gate | D | M |
/// | P2/N2 | master inverter | M | MB |
/// | P3/N3 | slave pass gate | MB | S |
/// | P4/N4 | output inverter | S | Q |
/// | P5/N5 | slave keeper | Q | S |
///
/// CLK, VDD and GND are shared by all stages; stage k's Q is stage k+1's D.
pub fn gen_flipflop_chain(stages: usize) -> Result<BenchScenario> {
    if stages == 0 {
        return Err(Error::invariant("stages", "must be ≥ 1"));
    }
    let mut b = Builder::default();
    for k in 0..stages {
        for p in 0..6 {
            b.inst(&format!("s{k}_P{p}"), "pmos");
            b.inst(&format!("s{k}_N{p}"), "nmos");
        }
    }
    for k in 0..stages {
        let t = |name: &str| format!("s{k}_{name}");
        let (p, n) = (|i: usize| format!("s{k}_P{i}"), |i: usize| format!("s{k}_N{i}"));
        let ids: Vec<(String, String)> = (0..6).map(|i| (p(i), n(i))).collect();
        let (p0, n0) = (&ids[0].0[..], &ids[0].1[..]);
        let (p1, n1) = (&ids[1].0[..], &ids[1].1[..]);
        let (p2, n2) = (&ids[2].0[..], &ids[2].1[..]);
        let (p3, n3) = (&ids[3].0[..], &ids[3].1[..]);
        let (p4, n4) = (&ids[4].0[..], &ids[4].1[..]);
        let (p5, n5) = (&ids[5].0[..], &ids[5].1[..]);
        b.connect("CLK", &[(p0, "g"), (n0, "g"), (p1, "g"), (n3, "g")]);
        b.connect("VDD", &[(p0, "s"), (p2, "s"), (p4, "s"), (p5, "s")]);
        b.connect("GND", &[(n0, "s"), (n2, "s"), (n4, "s"), (n5, "s")]);
        b.connect(&t("CLKB"), &[(p0, "d"), (n0, "d"), (n1, "g"), (p3, "g")]);
        let d_net = if k == 0 { "D".to_string() } else { format!("s{}_Q", k - 1) };
        b.connect(&d_net, &[(n1, "s"), (p1, "s")]);
        b.connect(&t("M"), &[(n1, "d"), (p1, "d"), (p2, "g"), (n2, "g")]);
        b.connect(&t("MB"), &[(p2, "d"), (n2, "d"), (n3, "s"), (p3, "s")]);
        b.connect(&t("S"), &[(p5, "d"), (n5, "d"), (n3, "d"), (p3, "d"), (p4, "g"), (n4, "g")]);
        b.connect(&t("Q"), &[(p4, "d"), (n4, "d"), (p5, "g"), (n5, "g")]);
    }
    Ok(b.finish(&format!("flipflop_chain_{stages}")))
}

/// Resistor-loaded nMOS differential pair with a tail resistor.
///
/// Nets: OUTN, OUTP (drain to load), TAIL (both sources and the tail
/// resistor), VDD (load tops) and INCM (both gates at the common-mode bias).
pub fn gen_differential_pair() -> BenchScenario {
    let mut b = Builder::default();
    for (id, kind) in [("M1", "nmos"), ("M2", "nmos"), ("RL1", "res"), ("RL2", "res"), ("RT", "res")] {
        b.inst(id, kind);
    }
    b.connect("OUTN", &[("M1", "d"), ("RL1", "b")]);
    b.connect("OUTP", &[("M2", "d"), ("RL2", "b")]);
    b.connect("TAIL", &[("M1", "s"), ("M2", "s"), ("RT", "a")]);
    b.connect("VDD", &[("RL1", "a"), ("RL2", "a")]);
    b.connect("INCM", &[("M1", "g"), ("M2", "g")]);
    b.finish("differential_pair")
}

/// A timer-shaped mixed netlist of 28 instances: resistor divider, two
/// five-transistor comparators, an SR latch with set and reset pull-downs,
/// a two-inverter output stage with load, a discharge transistor and the
/// timing resistors.
pub fn gen_555_like() -> BenchScenario {
    let mut b = Builder::default();
    for r in ["R1", "R2", "R3", "R4", "RA", "RB", "RL"] {
        b.inst(r, "res");
    }
    for c in ["A", "B"] {
        b.inst(&format!("N{c}1"), "nmos");
        b.inst(&format!("N{c}2"), "nmos");
        b.inst(&format!("P{c}1"), "pmos");
        b.inst(&format!("P{c}2"), "pmos");
        b.inst(&format!("N{c}3"), "nmos");
    }
    for (id, kind) in [
        ("PL1", "pmos"),
        ("NL1", "nmos"),
        ("PL2", "pmos"),
        ("NL2", "nmos"),
        ("NS", "nmos"),
        ("NR", "nmos"),
        ("PO1", "pmos"),
        ("NO1", "nmos"),
        ("PO2", "pmos"),
        ("NO2", "nmos"),
        ("ND", "nmos"),
    ] {
        b.inst(id, kind);
    }
    b.connect("VREF_HI", &[("R1", "b"), ("R2", "a"), ("NA2", "g")]);
    b.connect("VREF_LO", &[("R2", "b"), ("R3", "a"), ("NB2", "g")]);
    b.connect("BIAS", &[("R4", "b"), ("NA3", "g"), ("NB3", "g")]);
    b.connect("THR", &[("NA1", "g"), ("NB1", "g"), ("RB", "b")]);
    b.connect("DIS", &[("ND", "d"), ("RA", "b"), ("RB", "a")]);
    for (c, out_to) in [("A", "NR"), ("B", "NS")] {
        let (n1, n2, p1, p2, n3) = (format!("N{c}1"), format!("N{c}2"), format!("P{c}1"), format!("P{c}2"), format!("N{c}3"));
        b.connect(&format!("C{c}_X"), &[(&n1, "d"), (&p1, "d"), (&p1, "g"), (&p2, "g")]);
        b.connect(&format!("C{c}_OUT"), &[(&n2, "d"), (&p2, "d"), (out_to, "g")]);
        b.connect(&format!("C{c}_TAIL"), &[(&n3, "d"), (&n1, "s"), (&n2, "s")]);
    }
    b.connect("Q", &[("PL2", "d"), ("NL2", "d"), ("NR", "d"), ("PL1", "g"), ("NL1", "g"), ("PO1", "g"), ("NO1", "g")]);
    b.connect("QB", &[("PL1", "d"), ("NL1", "d"), ("NS", "d"), ("PL2", "g"), ("NL2", "g"), ("ND", "g")]);
    b.connect("OUTB", &[("PO1", "d"), ("NO1", "d"), ("PO2", "g"), ("NO2", "g")]);
    b.connect("OUT", &[("PO2", "d"), ("NO2", "d"), ("RL", "a")]);
    b.connect(
        "VDD",
        &[
            ("PA1", "s"),
            ("PA2", "s"),
            ("PB1", "s"),
            ("PB2", "s"),
            ("PL1", "s"),
            ("PL2", "s"),
            ("PO1", "s"),
            ("PO2", "s"),
            ("R1", "a"),
            ("R4", "a"),
            ("RA", "a"),
        ],
    );
    b.connect(
        "GND",
        &[
            ("NA3", "s"),
            ("NB3", "s"),
            ("NL1", "s"),
            ("NL2", "s"),
            ("NS", "s"),
            ("NR", "s"),
            ("NO1", "s"),
            ("NO2", "s"),
            ("ND", "s"),
            ("R3", "b"),
            ("RL", "b"),
        ],
    );
    b.finish("timer_555_like")
}

/// Looks a generator up by name: `random_logic:N:FANOUT:SPACING:SEED`,
/// `flipflop:STAGES`, `diffpair`, `555`.
pub fn by_name(spec: &str) -> Result<BenchScenario> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |i: usize| -> Result<u64> {
        parts
            .get(i)
            .ok_or_else(|| Error::InvalidInput(format!("bench `{spec}`: missing argument {i}")))?
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bench `{spec}`: argument {i} is not a number")))
    };
    match parts[0] {
        "random_logic" => gen_random_logic(num(1)? as usize, num(2)? as usize, num(3)? as i64, num(4)?),
        "flipflop" => gen_flipflop_chain(num(1)? as usize),
        "diffpair" => Ok(gen_differential_pair()),
        "555" => Ok(gen_555_like()),
        other => Err(Error::InvalidInput(format!("unknown bench generator `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_netlist;

    fn valid(s: &BenchScenario) {
        let r = validate_netlist(&s.netlist, &KindLibrary::standard());
        assert!(r.ok, "{}: {:?}", s.name, r.issues);
    }

    #[test]
    fn random_logic_structure() {
        let s = gen_random_logic(400, 5, 10_000, 3).unwrap();
        valid(&s);
        assert_eq!(s.netlist.nets.len(), 400);
        let mut driven = BTreeMap::new();
        for net in &s.netlist.nets {
            assert_eq!(net.pins.len(), 6);
            assert_eq!(net.pins[0].pin(), "d");
            let mut r: Vec<&str> = net.pins[1..].iter().map(|e| e.instance()).collect();
            r.sort_unstable();
            r.dedup();
            assert_eq!(r.len(), 5);
            assert!(!r.contains(&net.pins[0].instance()));
            *driven.entry(net.pins[0].instance()).or_insert(0) += 1;
        }
        assert!(driven.values().all(|&c| c == 1) && driven.len() == 400);
        assert_eq!(s, gen_random_logic(400, 5, 10_000, 3).unwrap());
        assert_ne!(s.netlist, gen_random_logic(400, 5, 10_000, 4).unwrap().netlist);
        let spec = s.spec(&ProcessSpec::default()).unwrap();
        assert_eq!(spec.lattice_pitch_nm(), 10_000);
    }

    #[test]
    fn random_logic_small_and_bad() {
        let s = gen_random_logic(2, 1, 10_000, 0).unwrap();
        assert_eq!(s.netlist.nets.len(), 2);
        assert_eq!(s.netlist.nets[0].pins, vec![Endpoint::new("T0", "d"), Endpoint::new("T1", "g0")]);
        assert!(gen_random_logic(5, 5, 10_000, 0).is_err());
        assert!(gen_random_logic(1, 1, 10_000, 0).is_err());
        assert!(gen_random_logic(10, 0, 10_000, 0).is_err());
    }

    #[test]
    fn lattice_has_slack() {
        for n in [1, 5, 24, 100, 1000, 10_000] {
            let (cols, rows, region) = site_lattice(n, 10_000);
            assert!(cols * rows >= n + 4 && cols * rows as usize >= (n as f64 * 1.05) as usize);
            assert_eq!(region.width_nm, cols as i64 * 10_000);
        }
    }

    #[test]
    fn flipflop_counts() {
        let one = gen_flipflop_chain(1).unwrap();
        assert_eq!(one.netlist.instances.len(), 12);
        valid(&one);
        let two = gen_flipflop_chain(2).unwrap();
        assert_eq!(two.netlist.instances.len(), 24);
        valid(&two);
        let q0 = two.netlist.net("s0_Q").unwrap();
        assert!(q0.pins.contains(&Endpoint::new("s1_N1", "s")));
        assert_eq!(two.netlist.nets.iter().filter(|n| n.id == "CLK").count(), 1);
        assert!(gen_flipflop_chain(0).is_err());
        for s in 1..5 {
            valid(&gen_flipflop_chain(s).unwrap());
        }
    }

    #[test]
    fn differential_pair() {
        let d = gen_differential_pair();
        assert_eq!((d.netlist.instances.len(), d.netlist.nets.len()), (5, 5));
        valid(&d);
        assert_eq!(d, gen_differential_pair());
    }

    #[test]
    fn timer() {
        let t = gen_555_like();
        valid(&t);
        assert_eq!(t.netlist.instances.len(), 28);
        assert!(t.netlist.kind_counts().len() >= 3);
        assert_eq!(t, gen_555_like());
        // each pin used once
        let mut all: Vec<&Endpoint> = t.netlist.nets.iter().flat_map(|n| &n.pins).collect();
        let n = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), n);
    }

    #[test]
    fn lookup() {
        assert_eq!(by_name("diffpair").unwrap(), gen_differential_pair());
        assert_eq!(by_name("flipflop:2").unwrap().netlist.instances.len(), 24);
        assert_eq!(by_name("random_logic:10:2:10000:5").unwrap().netlist.nets.len(), 10);
        assert!(by_name("random_logic:10").is_err());
        assert!(by_name("nope").is_err());
    }
}
