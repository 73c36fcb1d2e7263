//! Grid routing of printed wires.
//!
//! A single wiring layer on a uniform grid. Every wire cell carries a square
//! keep-out halo sized so that wires of distinct nets stay at least the
//! minimum spacing apart; another net's wire may only be crossed by a
//! straight insulated bridge. Multi-pin nets grow a tree one terminal at a
//! time, and each routed net is straightened into any-angle segments where
//! clearance allows. Nets that fail trigger batched rip-up and reroute.

mod drc;
mod grid;
mod search;
mod smooth;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

pub use drc::{check_design_rules, Violation, ViolationKind};
pub use grid::{build_routing_grid, halo_code, owner_of, snap, wire_code, ComponentSite, PinSite, RoutingGrid};
use grid::{BLOCKED, MULTI};
use search::{route_terminals, Branch, Scratch, SearchParams};
use smooth::Straightener;

use crate::assign::{mst_length, Assignment};
use crate::geometry::{Angle, Point, Region};
use crate::model::{Netlist, ProcessSpec};
use crate::{Error, Result};

/// Distance from a pin within which wires use the contact width, nm.
pub const CONTACT_ZONE_NM: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutePolicy {
    /// Extra cost, in cells, of crossing another wire on a bridge.
    pub bridge_penalty: u32,
    pub rip_up_rounds: usize,
    /// Nets ripped per failed net in each round.
    pub rip_up_nets: usize,
    /// Width of wires away from pins; defaults to the contact width.
    pub interconnect_width: Option<i64>,
    /// Replace grid staircases by straight segments after routing.
    #[serde(default = "yes")]
    pub any_angle: bool,
}

fn yes() -> bool {
    true
}

impl Default for RoutePolicy {
    fn default() -> Self {
        RoutePolicy { bridge_penalty: 20, rip_up_rounds: 3, rip_up_nets: 5, interconnect_width: None, any_angle: true }
    }
}

impl RoutePolicy {
    fn params(&self) -> SearchParams {
        SearchParams { bridge_penalty: self.bridge_penalty, relaxed: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridBridge {
    pub from: (usize, usize),
    pub to: (usize, usize),
    pub crossing: (usize, usize),
    pub crossed_net: u32,
}

/// A routed net in grid coordinates, as returned by [`route_net`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridPath {
    pub net: u32,
    /// One cell sequence per two-point connection, terminal first.
    pub branches: Vec<Vec<(usize, usize)>>,
    pub bridges: Vec<GridBridge>,
    /// Grid steps, counting cells passed over by bridges.
    pub length: u64,
}

impl GridPath {
    pub fn cells(&self) -> BTreeSet<(usize, usize)> {
        self.branches.iter().flatten().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("net {net}: terminal {terminal} at {cell:?} is unreachable")]
pub struct RouteFailure {
    pub net: u32,
    pub terminal: usize,
    pub cell: (usize, usize),
}

fn to_grid_path(grid: &RoutingGrid, net: u32, branches: &[Branch]) -> GridPath {
    GridPath {
        net,
        branches: branches.iter().map(|b| b.cells.iter().map(|&c| grid.coords(c)).collect()).collect(),
        bridges: branches
            .iter()
            .flat_map(|b| &b.hops)
            .map(|h| GridBridge {
                from: grid.coords(h.from),
                to: grid.coords(h.to),
                crossing: grid.coords(h.crossing),
                crossed_net: h.crossed,
            })
            .collect(),
        length: branches.iter().map(|b| b.steps(grid)).sum(),
    }
}

fn commit(grid: &mut RoutingGrid, net: u32, branches: &[Branch]) {
    for b in branches {
        grid.commit_cells(net, &b.cells);
    }
    // a straight segment runs up to half a cell off its cells' centers
    let wide = grid.halo_radius + 1;
    for b in branches.iter().filter(|b| !b.slanted.is_empty()) {
        grid.stamp_halo_radius(net, &b.slanted, wide);
    }
    for b in branches {
        let spans: Vec<u32> = b.spans(grid).collect();
        grid.bridged.extend(spans);
    }
}

/// Routes one net over the current occupancy and commits it.
///
/// Each two-point connection is a cost-minimal A* search (unit steps,
/// bridges at span + 1 + penalty) given the tree built so far.
pub fn route_net(
    grid: &mut RoutingGrid,
    terminals: &[(usize, usize)],
    net: u32,
    policy: &RoutePolicy,
) -> std::result::Result<GridPath, RouteFailure> {
    let cells: Vec<u32> = terminals.iter().map(|&(i, j)| grid.index(i, j)).collect();
    if cells.is_empty() {
        return Ok(GridPath { net, branches: vec![], bridges: vec![], length: 0 });
    }
    let mut scratch = Scratch::default();
    match route_terminals(grid, &mut scratch, net, &cells, policy.params()) {
        Ok(branches) => {
            let path = to_grid_path(grid, net, &branches);
            commit(grid, net, &branches);
            if branches.is_empty() {
                grid.commit_cells(net, &cells[..1]);
            }
            Ok(path)
        }
        Err(k) => Err(RouteFailure { net, terminal: k, cell: terminals[k] }),
    }
}

// ---------------------------------------------------------------------------
// Layout

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutPin {
    pub id: String,
    pub x_nm: f64,
    pub y_nm: f64,
    pub contact_area_nm2: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutComponent {
    pub obs_id: u32,
    pub kind: String,
    pub x_nm: i64,
    pub y_nm: i64,
    pub theta_deg: Angle,
    pub body: (i64, i64),
    pub pins: Vec<LayoutPin>,
    /// Assigned to a netlist instance.
    pub used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Terminal {
    pub instance: String,
    pub pin: String,
    pub obs_id: u32,
    pub x_nm: f64,
    pub y_nm: f64,
}

/// A polyline through grid cell centers; `widths[k]` is the width of the
/// segment from `points[k]` to `points[k + 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<Point>,
    pub widths: Vec<i64>,
}

impl Polyline {
    pub fn length_nm(&self) -> i64 {
        self.points.windows(2).map(|w| w[0].dist(w[1])).sum::<f64>().round() as i64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bridge {
    pub start: Point,
    pub end: Point,
    /// Center of the crossed wire cell.
    pub crossing: Point,
    pub crossed_net: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub net_id: String,
    pub terminals: Vec<Terminal>,
    /// One polyline per two-point connection (one printed wire each).
    pub branches: Vec<Polyline>,
    pub bridges: Vec<Bridge>,
    pub length_nm: i64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailedNet {
    pub net_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutedLayout {
    pub region: Region,
    pub pitch: i64,
    pub grid: (usize, usize),
    pub contact_wire_width: i64,
    pub interconnect_wire_width: i64,
    pub assignment: Assignment,
    pub components: Vec<LayoutComponent>,
    pub paths: Vec<Path>,
    pub failed_nets: Vec<FailedNet>,
    pub total_wire_length_nm: i64,
    pub bridge_count: usize,
    pub footprint_mm2: f64,
}

impl RoutedLayout {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn path(&self, net_id: &str) -> Option<&Path> {
        self.paths.iter().find(|p| p.net_id == net_id)
    }

    pub fn wire_count(&self) -> usize {
        self.paths.iter().map(|p| p.branches.len()).sum()
    }
}

// ---------------------------------------------------------------------------
// route_all

#[derive(Debug, Clone)]
struct TermInfo {
    instance: String,
    pin: String,
    obs_id: u32,
    cell: u32,
    pos: (f64, f64),
}

struct Router<'a> {
    grid: &'a mut RoutingGrid,
    policy: &'a RoutePolicy,
    terms: Vec<Vec<TermInfo>>,
    /// Reserved pin cell → net.
    pin_owner: BTreeMap<u32, u32>,
    scratch: Scratch,
    straightener: Option<Straightener>,
    /// Contact and interconnect widths differ, so the contact zone edge
    /// must stay a vertex.
    zoned: bool,
}

type State = Vec<Option<Vec<Branch>>>;

impl Router<'_> {
    fn cells_of(&self, net: usize) -> Vec<u32> {
        let mut seen = HashSet::new();
        self.terms[net].iter().map(|t| t.cell).filter(|c| seen.insert(*c)).collect()
    }

    /// Clean grid with every reserved pin and the nets in `state` committed.
    fn rebuild(&mut self, state: &State) {
        self.grid.reset_base();
        let blocked: Vec<u32> = self
            .grid
            .components
            .iter()
            .flat_map(|c| c.pins.iter().filter_map(|p| p.cell))
            .map(|(i, j)| self.grid.index(i as usize, j as usize))
            .filter(|c| !self.pin_owner.contains_key(c))
            .collect();
        for c in blocked {
            self.grid.cells[c as usize] = BLOCKED;
        }
        for (&c, &n) in &self.pin_owner {
            self.grid.cells[c as usize] = wire_code(n);
            self.grid.pin_cells.insert(c);
        }
        let pins: Vec<(u32, u32)> = self.pin_owner.iter().map(|(&c, &n)| (c, n)).collect();
        for &(c, n) in &pins {
            self.grid.stamp_halo(n, &[c]);
        }
        let access = 2 * self.grid.halo_radius + 1;
        if self.grid.halo_radius > 0 {
            for &(c, n) in &pins {
                self.grid.stamp_access(n, c, access);
            }
        }
        for (n, s) in state.iter().enumerate() {
            if let Some(branches) = s {
                commit(self.grid, n as u32, branches);
            }
        }
    }

    fn route_one(&mut self, net: usize, state: &mut State, reasons: &mut BTreeMap<usize, String>) {
        let cells = self.cells_of(net);
        match route_terminals(self.grid, &mut self.scratch, net as u32, &cells, self.policy.params()) {
            Ok(mut branches) => {
                if let Some(st) = &self.straightener {
                    let terms = &self.terms[net];
                    let mut keep: FxHashSet<u32> = terms.iter().map(|t| t.cell).collect();
                    for b in &branches {
                        keep.extend([b.cells[0], *b.cells.last().unwrap()]);
                    }
                    let pending: FxHashSet<u32> = branches.iter().flat_map(|b| b.spans(self.grid)).collect();
                    let near = |p: Point| {
                        terms.iter().any(|t| (p.x as f64 - t.pos.0).hypot(p.y as f64 - t.pos.1) <= CONTACT_ZONE_NM)
                    };
                    let zoned = self.zoned;
                    let split = |a: Point, c: Point| zoned && near(a) != near(c);
                    for b in &mut branches {
                        st.straighten(self.grid, net as u32, b, &keep, &split, &pending);
                    }
                }
                commit(self.grid, net as u32, &branches);
                state[net] = Some(branches);
                reasons.remove(&net);
            }
            Err(k) => {
                let t = self.terms[net].iter().find(|t| t.cell == cells[k]).expect("terminal");
                reasons.insert(net, format!("unreachable terminal {}.{}", t.instance, t.pin));
                state[net] = None;
            }
        }
    }

    /// Routed nets standing in the way of `net`, most obstructive first.
    fn obstacles(&mut self, net: usize) -> Vec<u32> {
        let cells = self.cells_of(net);
        let params = SearchParams { bridge_penalty: 0, relaxed: true };
        let Ok(branches) = route_terminals(self.grid, &mut self.scratch, net as u32, &cells, params) else {
            return Vec::new();
        };
        let r = self.grid.halo_radius as i64;
        let mut count: BTreeMap<u32, usize> = BTreeMap::new();
        let mut seen = HashSet::new();
        for &c in branches.iter().flat_map(|b| &b.cells) {
            if !seen.insert(c) || self.grid.enterable(c, net as u32) {
                continue;
            }
            let v = self.grid.owner(c);
            if let Some((m, _)) = owner_of(v) {
                *count.entry(m).or_default() += 1;
            } else if v == MULTI {
                let (ci, cj) = self.grid.coords(c);
                let mut near = BTreeSet::new();
                for y in (cj as i64 - r).max(0)..=(cj as i64 + r).min(self.grid.ny as i64 - 1) {
                    for x in (ci as i64 - r).max(0)..=(ci as i64 + r).min(self.grid.nx as i64 - 1) {
                        if let Some((m, true)) = owner_of(self.grid.owner(self.grid.index(x as usize, y as usize))) {
                            near.insert(m);
                        }
                    }
                }
                for m in near {
                    *count.entry(m).or_default() += 1;
                }
            }
        }
        let mut ranked: Vec<(usize, u32)> = count.into_iter().filter(|&(m, _)| m as usize != net).map(|(m, k)| (k, m)).collect();
        ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        ranked.into_iter().take(self.policy.rip_up_nets).map(|(_, m)| m).collect()
    }
}

fn score(grid: &RoutingGrid, state: &State) -> (usize, std::cmp::Reverse<u64>) {
    let routed = state.iter().filter(|s| s.is_some()).count();
    let len = state.iter().flatten().flat_map(|b| b.iter()).map(|b| b.steps(grid)).sum();
    (routed, std::cmp::Reverse(len))
}

/// Routes every net of `netlist` under `assignment` on `grid`.
///
/// Nets with an unassigned endpoint, a pin on a conflicted component, or a
/// pin crowding another net's pin fail up front. The rest are routed in
/// ascending order of spanning length; failures then get up to
/// `rip_up_rounds` rounds of batched rip-up and reroute, keeping the best
/// state seen.
pub fn route_all(
    grid: &mut RoutingGrid,
    netlist: &Netlist,
    assignment: &Assignment,
    spec: &ProcessSpec,
    policy: &RoutePolicy,
) -> Result<RoutedLayout> {
    let contact_w = spec.contact_wire_width;
    let inter_w = policy.interconnect_width.unwrap_or(contact_w);
    if inter_w <= 0 || inter_w > spec.interconnect_wire_width_max {
        return Err(Error::Config(format!(
            "interconnect width {inter_w} nm must lie in (0, {}]",
            spec.interconnect_wire_width_max
        )));
    }
    grid.halo_radius = RoutingGrid::halo_radius_for(contact_w.max(inter_w), spec.min_wire_spacing, grid.pitch);
    let r = grid.halo_radius as i64;

    let comp_at: HashMap<u32, usize> = grid.components.iter().enumerate().map(|(k, c)| (c.obs_id, k)).collect();
    let n_nets = netlist.nets.len();
    let mut reasons: BTreeMap<usize, String> = BTreeMap::new();
    let mut terms: Vec<Vec<TermInfo>> = vec![Vec::new(); n_nets];
    let kinds_of: HashMap<&str, &str> = netlist.instances.iter().map(|i| (i.id.as_str(), i.kind.as_str())).collect();

    for (k, net) in netlist.nets.iter().enumerate() {
        let mut seen = HashSet::new();
        for ep in &net.pins {
            if !seen.insert(ep) {
                continue;
            }
            let Some(&obs) = assignment.mapping.get(ep.instance()) else {
                reasons.entry(k).or_insert_with(|| format!("instance {} is unassigned", ep.instance()));
                continue;
            };
            let Some(&ci) = comp_at.get(&obs) else {
                return Err(Error::Integrity(format!("observation {obs} is not on the routing grid")));
            };
            let comp = &grid.components[ci];
            if kinds_of.get(ep.instance()) != Some(&comp.kind.as_str()) {
                return Err(Error::Integrity(format!("instance {} mapped to a {}", ep.instance(), comp.kind)));
            }
            if comp.pin_conflict {
                reasons.entry(k).or_insert_with(|| format!("pin conflict on component {obs}"));
                continue;
            }
            let Some(pin) = comp.pins.iter().find(|p| p.id == ep.pin()) else {
                return Err(Error::InvalidInput(format!("kind {} has no pin {}", comp.kind, ep.pin())));
            };
            let (i, j) = pin.cell.expect("conflict-free pins are on the grid");
            terms[k].push(TermInfo {
                instance: ep.instance().to_string(),
                pin: ep.pin().to_string(),
                obs_id: obs,
                cell: grid.index(i as usize, j as usize),
                pos: (pin.x_nm, pin.y_nm),
            });
        }
        if terms[k].is_empty() {
            reasons.entry(k).or_insert_with(|| "no endpoints".into());
        }
    }

    // pins claimed by two nets, or closer than the spacing rule allows
    let mut claims: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for (k, ts) in terms.iter().enumerate() {
        if reasons.contains_key(&k) {
            continue;
        }
        for t in ts {
            let owners = claims.entry(t.cell).or_default();
            if !owners.contains(&(k as u32)) {
                owners.push(k as u32);
            }
        }
    }
    let mut clash: BTreeMap<usize, String> = BTreeMap::new();
    for (&c, owners) in &claims {
        if owners.len() > 1 {
            for &o in owners {
                clash.entry(o as usize).or_insert_with(|| "pin shared with another net".into());
            }
            continue;
        }
        let (ci, cj) = grid.coords(c);
        for y in (cj as i64 - r).max(0)..=(cj as i64 + r).min(grid.ny as i64 - 1) {
            for x in (ci as i64 - r).max(0)..=(ci as i64 + r).min(grid.nx as i64 - 1) {
                let other = grid.index(x as usize, y as usize);
                if other == c {
                    continue;
                }
                if let Some(o) = claims.get(&other) {
                    if o.iter().any(|&m| m != owners[0]) {
                        clash.entry(owners[0] as usize).or_insert_with(|| {
                            format!("pin spacing conflict with net {}", netlist.nets[o[0] as usize].id)
                        });
                    }
                }
            }
        }
    }
    reasons.extend(clash);

    let active: Vec<usize> = (0..n_nets).filter(|k| !reasons.contains_key(k)).collect();
    let mut pin_owner = BTreeMap::new();
    for &k in &active {
        for t in &terms[k] {
            pin_owner.insert(t.cell, k as u32);
        }
    }
    let up_front = reasons.clone();

    let span = |k: usize| {
        let pts: Vec<Point> = terms[k].iter().map(|t| Point::new(t.pos.0.round() as i64, t.pos.1.round() as i64)).collect();
        mst_length(&pts)
    };
    let mut order = active.clone();
    let spans: HashMap<usize, f64> = order.iter().map(|&k| (k, span(k))).collect();
    order.sort_by(|a, b| spans[a].total_cmp(&spans[b]).then(a.cmp(b)));

    let straightener = policy.any_angle.then(|| Straightener::new(grid, contact_w.max(inter_w) + spec.min_wire_spacing));
    let zoned = contact_w != inter_w;
    let mut router = Router { grid, policy, terms, pin_owner, scratch: Scratch::default(), straightener, zoned };
    let mut state: State = vec![None; n_nets];
    router.rebuild(&state);
    let mut fail: BTreeMap<usize, String> = BTreeMap::new();
    for &k in &order {
        router.route_one(k, &mut state, &mut fail);
    }

    let mut best = state.clone();
    let mut best_fail = fail.clone();
    for _round in 0..policy.rip_up_rounds {
        if best_fail.is_empty() {
            break;
        }
        let failed: Vec<usize> = order.iter().copied().filter(|k| best_fail.contains_key(k)).collect();
        let mut victims = BTreeSet::new();
        for &f in &failed {
            victims.extend(router.obstacles(f));
        }
        // nets bridging over a victim lose their crossing too
        loop {
            let extra: Vec<u32> = state
                .iter()
                .enumerate()
                .filter(|(n, s)| s.is_some() && !victims.contains(&(*n as u32)))
                .filter(|(_, s)| s.as_ref().unwrap().iter().flat_map(|b| &b.hops).any(|h| victims.contains(&h.crossed)))
                .map(|(n, _)| n as u32)
                .collect();
            if extra.is_empty() {
                break;
            }
            victims.extend(extra);
        }
        if victims.is_empty() {
            break;
        }
        for &v in &victims {
            state[v as usize] = None;
        }
        router.rebuild(&state);
        for &f in &failed {
            router.route_one(f, &mut state, &mut fail);
        }
        for &k in &order {
            if victims.contains(&(k as u32)) {
                router.route_one(k, &mut state, &mut fail);
            }
        }
        if score(router.grid, &state) > score(router.grid, &best) {
            best = state.clone();
            best_fail = fail.clone();
        } else {
            state = best.clone();
            router.rebuild(&state);
            break;
        }
    }

    if state != best {
        router.rebuild(&best);
    }
    let mut reasons = up_front;
    reasons.extend(best_fail);
    let terms = std::mem::take(&mut router.terms);
    Ok(assemble(router.grid, netlist, assignment, &terms, &best, &reasons, contact_w, inter_w))
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    grid: &RoutingGrid,
    netlist: &Netlist,
    assignment: &Assignment,
    terms: &[Vec<TermInfo>],
    state: &State,
    reasons: &BTreeMap<usize, String>,
    contact_w: i64,
    inter_w: i64,
) -> RoutedLayout {
    let used: HashSet<u32> = assignment.mapping.values().copied().collect();
    let components: Vec<LayoutComponent> = grid
        .components
        .iter()
        .map(|c| LayoutComponent {
            obs_id: c.obs_id,
            kind: c.kind.clone(),
            x_nm: c.x_nm,
            y_nm: c.y_nm,
            theta_deg: c.theta_deg,
            body: c.body,
            pins: c
                .pins
                .iter()
                .map(|p| LayoutPin { id: p.id.clone(), x_nm: p.x_nm, y_nm: p.y_nm, contact_area_nm2: p.contact_area_nm2 })
                .collect(),
            used: used.contains(&c.obs_id),
        })
        .collect();

    let mut paths = Vec::new();
    let mut failed = Vec::new();
    for (k, net) in netlist.nets.iter().enumerate() {
        match &state[k] {
            Some(branches) => {
                let pins: Vec<(f64, f64)> = terms[k].iter().map(|t| t.pos).collect();
                let width_at = |a: Point, b: Point| {
                    let near = |p: Point| {
                        pins.iter().any(|&(x, y)| (p.x as f64 - x).hypot(p.y as f64 - y) <= CONTACT_ZONE_NM)
                    };
                    if near(a) || near(b) {
                        contact_w
                    } else {
                        inter_w
                    }
                };
                let polylines: Vec<Polyline> =
                    branches.iter().map(|b| polyline(grid, b, &width_at)).collect();
                let bridges = branches
                    .iter()
                    .flat_map(|b| &b.hops)
                    .map(|h| Bridge {
                        start: grid.center(h.from),
                        end: grid.center(h.to),
                        crossing: grid.center(h.crossing),
                        crossed_net: netlist.nets[h.crossed as usize].id.clone(),
                    })
                    .collect();
                let length_nm = polylines.iter().map(Polyline::length_nm).sum();
                let terminals = terms[k]
                    .iter()
                    .map(|t| Terminal {
                        instance: t.instance.clone(),
                        pin: t.pin.clone(),
                        obs_id: t.obs_id,
                        x_nm: t.pos.0,
                        y_nm: t.pos.1,
                    })
                    .collect();
                paths.push(Path { net_id: net.id.clone(), terminals, branches: polylines, bridges, length_nm });
            }
            None => failed.push(FailedNet {
                net_id: net.id.clone(),
                reason: reasons.get(&k).cloned().unwrap_or_else(|| "unrouted".into()),
            }),
        }
    }

    let total_wire_length_nm = paths.iter().map(|p| p.length_nm).sum();
    let bridge_count = paths.iter().map(|p| p.bridges.len()).sum();
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    let mut grow = |x: f64, y: f64| {
        lo_x = lo_x.min(x);
        lo_y = lo_y.min(y);
        hi_x = hi_x.max(x);
        hi_y = hi_y.max(y);
    };
    for c in grid.components.iter().filter(|c| used.contains(&c.obs_id)) {
        for (x, y) in c.outline().corners() {
            grow(x, y);
        }
    }
    for p in paths.iter().flat_map(|p| &p.branches).flat_map(|b| &b.points) {
        grow(p.x as f64, p.y as f64);
    }
    let footprint_mm2 = if hi_x >= lo_x { (hi_x - lo_x) * (hi_y - lo_y) * 1e-12 } else { 0.0 };

    RoutedLayout {
        region: grid.region,
        pitch: grid.pitch,
        grid: (grid.nx, grid.ny),
        contact_wire_width: contact_w,
        interconnect_wire_width: inter_w,
        assignment: assignment.clone(),
        components,
        paths,
        failed_nets: failed,
        total_wire_length_nm,
        bridge_count,
        footprint_mm2,
    }
}

/// Merges collinear vertices, splitting wherever the width changes and
/// around bridge hops.
fn polyline(grid: &RoutingGrid, branch: &Branch, width_at: &dyn Fn(Point, Point) -> i64) -> Polyline {
    let cells = &branch.cells;
    let all: Vec<usize>;
    let verts = if branch.verts.is_empty() {
        all = (0..cells.len()).collect();
        &all
    } else {
        &branch.verts
    };
    let mut points = vec![grid.center(cells[verts[0]])];
    let mut widths = Vec::new();
    let mut run: Option<((i64, i64), i64, bool)> = None;
    for w in verts.windows(2) {
        let (a, b) = (grid.center(cells[w[0]]), grid.center(cells[w[1]]));
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let g = gcd(dx.unsigned_abs(), dy.unsigned_abs()).max(1) as i64;
        let d = (dx / g, dy / g);
        let hop = w[1] == w[0] + 1 && dx.abs() + dy.abs() > grid.pitch;
        let width = width_at(a, b);
        match run {
            Some((rd, rw, false)) if !hop && rd == d && rw == width => {
                *points.last_mut().unwrap() = b;
            }
            _ => {
                points.push(b);
                widths.push(width);
            }
        }
        run = Some((d, width, hop));
    }
    Polyline { points, widths }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}
