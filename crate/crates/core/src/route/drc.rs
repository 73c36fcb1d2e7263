//! Design-rule check of an exported layout, independent of the router's
//! grid state.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::grid::snap;
use super::smooth::interior_samples;
use super::{Path, RoutedLayout, CONTACT_ZONE_NM};
use crate::geometry::{OrientedRect, Point};
use crate::model::ProcessSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    Width,
    Spacing,
    Blocked,
    /// A terminal not touched by its net's wires.
    Open,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub nets: Vec<String>,
    pub at: Point,
    pub message: String,
}

struct Sample {
    net: usize,
    at: Point,
    width: i64,
}

/// Centerline points of a path at grid pitch, with the width of the segment
/// they sit on. Bridge spans are skipped: the crossing is insulated.
fn samples(path: &Path, pitch: i64, out: &mut Vec<(Point, i64)>) {
    let hops: BTreeSet<(Point, Point)> =
        path.bridges.iter().flat_map(|b| [(b.start, b.end), (b.end, b.start)]).collect();
    for b in &path.branches {
        for (k, w) in b.points.windows(2).enumerate() {
            let (a, c) = (w[0], w[1]);
            let width = b.widths[k];
            out.push((a, width));
            out.push((c, width));
            if hops.contains(&(a, c)) {
                continue;
            }
            out.extend(interior_samples(a, c, pitch).map(|p| (p, width)));
        }
    }
}

fn cell_center(x: f64, y: f64, pitch: i64) -> Point {
    Point::new(snap(x, pitch) * pitch + pitch / 2, snap(y, pitch) * pitch + pitch / 2)
}

/// Checks widths, spacing between nets, wires over bodies or foreign pins,
/// and terminal coverage.
pub fn check_design_rules(layout: &RoutedLayout, spec: &ProcessSpec) -> Vec<Violation> {
    let pitch = layout.pitch;
    let mut out = Vec::new();

    let mut all: Vec<Sample> = Vec::new();
    for (n, path) in layout.paths.iter().enumerate() {
        let pins: Vec<(f64, f64)> = path.terminals.iter().map(|t| (t.x_nm, t.y_nm)).collect();
        for b in &path.branches {
            for (k, &w) in b.widths.iter().enumerate() {
                let (a, c) = (b.points[k], b.points[k + 1]);
                let near =
                    |p: Point| pins.iter().any(|&(x, y)| (p.x as f64 - x).hypot(p.y as f64 - y) <= CONTACT_ZONE_NM);
                let bad = if near(a) || near(c) {
                    (w != spec.contact_wire_width).then(|| format!("contact wire is {w} nm, not {}", spec.contact_wire_width))
                } else {
                    (w < spec.contact_wire_width || w > spec.interconnect_wire_width_max).then(|| {
                        format!(
                            "wire is {w} nm, outside [{}, {}]",
                            spec.contact_wire_width, spec.interconnect_wire_width_max
                        )
                    })
                };
                if let Some(message) = bad {
                    out.push(Violation { kind: ViolationKind::Width, nets: vec![path.net_id.clone()], at: a, message });
                }
            }
        }
        let mut pts = Vec::new();
        samples(path, pitch, &mut pts);
        pts.sort_by_key(|&(p, w)| (p.x, p.y, std::cmp::Reverse(w)));
        pts.dedup_by_key(|&mut (p, _)| p);
        let on_path: BTreeSet<Point> = pts.iter().map(|&(p, _)| p).collect();
        for t in &path.terminals {
            let c = cell_center(t.x_nm, t.y_nm, pitch);
            if !on_path.contains(&c) {
                out.push(Violation {
                    kind: ViolationKind::Open,
                    nets: vec![path.net_id.clone()],
                    at: c,
                    message: format!("terminal {}.{} is not connected", t.instance, t.pin),
                });
            }
        }
        all.extend(pts.into_iter().map(|(at, width)| Sample { net: n, at, width }));
    }

    // spacing
    let w_max = all.iter().map(|s| s.width).max().unwrap_or(0);
    let reach = w_max + spec.min_wire_spacing;
    let bucket = reach.max(1);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (k, s) in all.iter().enumerate() {
        grid.entry((s.at.x.div_euclid(bucket), s.at.y.div_euclid(bucket))).or_default().push(k);
    }
    let mut reported = BTreeSet::new();
    for s in &all {
        let (bx, by) = (s.at.x.div_euclid(bucket), s.at.y.div_euclid(bucket));
        for dy in -1..=1 {
            for dx in -1..=1 {
                let Some(list) = grid.get(&(bx + dx, by + dy)) else { continue };
                for &m in list {
                    let o = &all[m];
                    if o.net <= s.net || reported.contains(&(s.net, o.net)) {
                        continue;
                    }
                    let need = (s.width + o.width) as f64 / 2.0 + spec.min_wire_spacing as f64;
                    let d = s.at.dist(o.at);
                    if d < need {
                        reported.insert((s.net, o.net));
                        out.push(Violation {
                            kind: ViolationKind::Spacing,
                            nets: vec![layout.paths[s.net].net_id.clone(), layout.paths[o.net].net_id.clone()],
                            at: s.at,
                            message: format!("edge gap {:.0} nm below {} nm", d - need + spec.min_wire_spacing as f64, spec.min_wire_spacing),
                        });
                    }
                }
            }
        }
    }

    // bodies and foreign pins
    let rects: Vec<OrientedRect> = layout
        .components
        .iter()
        .map(|c| OrientedRect::new(Point::new(c.x_nm, c.y_nm), c.body, c.theta_deg))
        .collect();
    let span = rects.iter().map(|r| 2.0 * r.radius()).fold(1.0, f64::max).ceil() as i64;
    let mut bodies: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (k, c) in layout.components.iter().enumerate() {
        bodies.entry((c.x_nm.div_euclid(span), c.y_nm.div_euclid(span))).or_default().push(k);
    }
    let mut pin_at: HashMap<Point, (u32, &str)> = HashMap::new();
    for c in &layout.components {
        for p in &c.pins {
            pin_at.insert(cell_center(p.x_nm, p.y_nm, pitch), (c.obs_id, p.id.as_str()));
        }
    }
    let mut blocked_seen = BTreeSet::new();
    for s in &all {
        let path = &layout.paths[s.net];
        let own_pin = |at: Point| path.terminals.iter().any(|t| cell_center(t.x_nm, t.y_nm, pitch) == at);
        if own_pin(s.at) {
            continue;
        }
        let mut hit = None;
        if let Some(&(obs, pin)) = pin_at.get(&s.at) {
            hit = Some(format!("wire over pin {pin} of component {obs}"));
        } else {
            let (bx, by) = (s.at.x.div_euclid(span), s.at.y.div_euclid(span));
            'find: for dy in -1..=1 {
                for dx in -1..=1 {
                    for &k in bodies.get(&(bx + dx, by + dy)).map(Vec::as_slice).unwrap_or(&[]) {
                        if rects[k].contains_strict(s.at.x as f64, s.at.y as f64) {
                            hit = Some(format!("wire over body of component {}", layout.components[k].obs_id));
                            break 'find;
                        }
                    }
                }
            }
        }
        if let Some(message) = hit {
            if blocked_seen.insert((s.net, message.clone())) {
                out.push(Violation { kind: ViolationKind::Blocked, nets: vec![path.net_id.clone()], at: s.at, message });
            }
        }
    }

    out.sort();
    out
}
