//! Mapping logical instances onto observed components.
//!
//! Cost of a mapping is the sum over nets of the Euclidean minimum spanning
//! tree length of the assigned members' estimated centers, plus a fixed
//! penalty for every assigned component that overlaps another body. Each
//! kind assigns as many instances as it has usable components
//! (`min(demand, supply)`); the remainder is reported unassigned.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geometry::Point;
use crate::model::Netlist;
use crate::vision::ObservedField;
use crate::{Error, Result};

/// Largest instance count [`assign_exhaustive`] will enumerate.
pub const EXHAUSTIVE_LIMIT: usize = 8;

const EPS: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    /// Added once per assigned component involved in any overlap, nm.
    pub overlap_penalty_nm: f64,
    /// Candidates examined per instance in local search on large problems.
    pub neighbourhood: usize,
    /// Problems with at most this many instances use every candidate and
    /// restart from several seed orders.
    pub small_problem: usize,
}

impl Default for CostParams {
    fn default() -> Self {
        CostParams { overlap_penalty_nm: 10_000.0, neighbourhood: 10, small_problem: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub mapping: BTreeMap<String, u32>,
    pub unassigned_logical: Vec<String>,
    pub unused_physical: Vec<u32>,
    pub cost: f64,
}

impl Assignment {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Structural check against the netlist and field it claims to map.
    pub fn check(&self, netlist: &Netlist, field: &ObservedField) -> Result<()> {
        let mut used = BTreeSet::new();
        for (inst, &obs) in &self.mapping {
            let i = netlist
                .instance(inst)
                .ok_or_else(|| Error::Integrity(format!("mapped instance {inst} is not in the netlist")))?;
            let o = field
                .get(obs)
                .ok_or_else(|| Error::Integrity(format!("instance {inst} mapped to unknown observation {obs}")))?;
            if o.kind != i.kind {
                return Err(Error::Integrity(format!("instance {inst} ({}) mapped to a {}", i.kind, o.kind)));
            }
            if o.classified_defective {
                return Err(Error::Integrity(format!("instance {inst} mapped to defective observation {obs}")));
            }
            if !used.insert(obs) {
                return Err(Error::Integrity(format!("observation {obs} mapped twice")));
            }
        }
        let listed: BTreeSet<&str> =
            self.mapping.keys().map(String::as_str).chain(self.unassigned_logical.iter().map(String::as_str)).collect();
        let all: BTreeSet<&str> = netlist.instances.iter().map(|i| i.id.as_str()).collect();
        if listed != all || self.mapping.len() + self.unassigned_logical.len() != all.len() {
            return Err(Error::Integrity("assigned and unassigned instances do not partition the netlist".into()));
        }
        Ok(())
    }
}

/// Precomputed problem data; instances are indexed in id order, candidates
/// by position in `field.observations`.
struct Problem {
    inst_ids: Vec<String>,
    inst_kind: Vec<usize>,
    inst_hint: Vec<Option<Point>>,
    inst_nets: Vec<Vec<usize>>,
    nets: Vec<Vec<usize>>,
    obs_ids: Vec<u32>,
    obs_pos: Vec<Point>,
    obs_penalty: Vec<f64>,
    /// Per kind: eligible candidates sorted by obs_id.
    pools: Vec<Vec<usize>>,
    quota: Vec<usize>,
    n_obs: usize,
}

impl Problem {
    fn new(netlist: &Netlist, field: &ObservedField, params: &CostParams) -> Self {
        let mut order: Vec<usize> = (0..netlist.instances.len()).collect();
        order.sort_by(|&a, &b| netlist.instances[a].id.cmp(&netlist.instances[b].id));
        let pos_of: BTreeMap<&str, usize> =
            order.iter().enumerate().map(|(k, &i)| (netlist.instances[i].id.as_str(), k)).collect();

        let mut kind_ids: Vec<&str> = netlist.instances.iter().map(|i| i.kind.as_str()).collect();
        kind_ids.sort_unstable();
        kind_ids.dedup();
        let kind_of: BTreeMap<&str, usize> = kind_ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();

        let inst_ids: Vec<String> = order.iter().map(|&i| netlist.instances[i].id.clone()).collect();
        let inst_kind: Vec<usize> = order.iter().map(|&i| kind_of[netlist.instances[i].kind.as_str()]).collect();
        let inst_hint: Vec<Option<Point>> = order.iter().map(|&i| netlist.instances[i].hint).collect();

        let mut nets = Vec::new();
        let mut inst_nets = vec![Vec::new(); inst_ids.len()];
        for net in &netlist.nets {
            let mut members: Vec<usize> = net.pins.iter().filter_map(|ep| pos_of.get(ep.instance()).copied()).collect();
            members.sort_unstable();
            members.dedup();
            if members.len() < 2 {
                continue;
            }
            for &m in &members {
                inst_nets[m].push(nets.len());
            }
            nets.push(members);
        }

        let overlapping: BTreeSet<u32> = field.overlaps.iter().flat_map(|&(a, b)| [a, b]).collect();
        let obs_ids: Vec<u32> = field.observations.iter().map(|o| o.obs_id).collect();
        let obs_pos: Vec<Point> = field.observations.iter().map(|o| o.center()).collect();
        let obs_penalty: Vec<f64> = field
            .observations
            .iter()
            .map(|o| if overlapping.contains(&o.obs_id) { params.overlap_penalty_nm } else { 0.0 })
            .collect();

        let mut demand = vec![0usize; kind_ids.len()];
        for &k in &inst_kind {
            demand[k] += 1;
        }
        let mut pools = Vec::with_capacity(kind_ids.len());
        let mut quota = Vec::with_capacity(kind_ids.len());
        for (k, kid) in kind_ids.iter().enumerate() {
            let mut clean = Vec::new();
            let mut touching = Vec::new();
            for (idx, o) in field.observations.iter().enumerate() {
                if o.kind != *kid || o.classified_defective {
                    continue;
                }
                if overlapping.contains(&o.obs_id) {
                    touching.push(idx);
                } else {
                    clean.push(idx);
                }
            }
            if clean.len() < demand[k] {
                clean.extend(touching);
            }
            clean.sort_by_key(|&idx| obs_ids[idx]);
            quota.push(demand[k].min(clean.len()));
            pools.push(clean);
        }

        Problem {
            inst_ids,
            inst_kind,
            inst_hint,
            inst_nets,
            nets,
            n_obs: obs_ids.len(),
            obs_ids,
            obs_pos,
            obs_penalty,
            pools,
            quota,
        }
    }

    fn net_cost(&self, net: usize, map: &[Option<usize>]) -> f64 {
        let pts: Vec<Point> = self.nets[net].iter().filter_map(|&i| map[i].map(|c| self.obs_pos[c])).collect();
        mst_length(&pts)
    }

    fn total_cost(&self, map: &[Option<usize>]) -> f64 {
        let wires: f64 = (0..self.nets.len()).map(|n| self.net_cost(n, map)).sum();
        let penalty: f64 = map.iter().flatten().map(|&c| self.obs_penalty[c]).sum();
        wires + penalty
    }

    fn into_assignment(&self, map: &[Option<usize>]) -> Assignment {
        let mut mapping = BTreeMap::new();
        let mut unassigned = Vec::new();
        let mut used = vec![false; self.n_obs];
        for (i, m) in map.iter().enumerate() {
            match m {
                Some(c) => {
                    used[*c] = true;
                    mapping.insert(self.inst_ids[i].clone(), self.obs_ids[*c]);
                }
                None => unassigned.push(self.inst_ids[i].clone()),
            }
        }
        let mut unused: Vec<u32> = (0..self.n_obs).filter(|&c| !used[c]).map(|c| self.obs_ids[c]).collect();
        unused.sort_unstable();
        Assignment { mapping, unassigned_logical: unassigned, unused_physical: unused, cost: self.total_cost(map) }
    }

    fn key(&self, m: Option<usize>) -> (bool, u32) {
        match m {
            Some(c) => (false, self.obs_ids[c]),
            None => (true, 0),
        }
    }

    /// Lexicographic order on mappings in instance-id order, `None` last.
    fn lex_less(&self, a: &[Option<usize>], b: &[Option<usize>]) -> bool {
        for (x, y) in a.iter().zip(b) {
            let (kx, ky) = (self.key(*x), self.key(*y));
            if kx != ky {
                return kx < ky;
            }
        }
        false
    }
}

/// Euclidean minimum spanning tree length (Prim, O(k²)).
pub fn mst_length(pts: &[Point]) -> f64 {
    let n = pts.len();
    if n < 2 {
        return 0.0;
    }
    let mut in_tree = vec![false; n];
    let mut best = vec![i128::MAX; n];
    best[0] = 0;
    let mut total = 0.0;
    for _ in 0..n {
        let mut u = usize::MAX;
        for v in 0..n {
            if !in_tree[v] && (u == usize::MAX || best[v] < best[u]) {
                u = v;
            }
        }
        in_tree[u] = true;
        total += (best[u] as f64).sqrt();
        for v in 0..n {
            if !in_tree[v] {
                let d = pts[u].dist2(pts[v]);
                if d < best[v] {
                    best[v] = d;
                }
            }
        }
    }
    total
}

/// Uniform bucket grid over a fixed point set for nearest-neighbour queries.
struct PointIndex {
    min: Point,
    cell: i64,
    nx: i64,
    ny: i64,
    buckets: Vec<Vec<usize>>,
}

impl PointIndex {
    fn new(items: &[usize], pos: &[Point]) -> Self {
        let (mut lo, mut hi) = (Point::new(i64::MAX, i64::MAX), Point::new(i64::MIN, i64::MIN));
        for &i in items {
            let p = pos[i];
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        if items.is_empty() {
            lo = Point::new(0, 0);
            hi = Point::new(0, 0);
        }
        let (w, h) = ((hi.x - lo.x + 1) as f64, (hi.y - lo.y + 1) as f64);
        let cell = ((w * h / items.len().max(1) as f64).sqrt() * 1.5).ceil().max(1.0) as i64;
        let nx = (hi.x - lo.x) / cell + 1;
        let ny = (hi.y - lo.y) / cell + 1;
        let mut buckets = vec![Vec::new(); (nx * ny) as usize];
        for &i in items {
            let p = pos[i];
            buckets[(((p.y - lo.y) / cell) * nx + (p.x - lo.x) / cell) as usize].push(i);
        }
        PointIndex { min: lo, cell, nx, ny, buckets }
    }

    /// Up to `k` items nearest to `p` that pass `keep`, ordered by
    /// (distance, item index).
    fn nearest(&self, p: Point, k: usize, pos: &[Point], keep: impl Fn(usize) -> bool) -> Vec<usize> {
        let bx = ((p.x - self.min.x).div_euclid(self.cell)).clamp(0, self.nx - 1);
        let by = ((p.y - self.min.y).div_euclid(self.cell)).clamp(0, self.ny - 1);
        let mut found: Vec<(i128, usize)> = Vec::new();
        let max_r = self.nx.max(self.ny);
        let mut r = 0;
        while r <= max_r {
            for y in by - r..=by + r {
                if y < 0 || y >= self.ny {
                    continue;
                }
                let edge = y == by - r || y == by + r;
                let mut x = bx - r;
                while x <= bx + r {
                    if x >= 0 && x < self.nx {
                        for &i in &self.buckets[(y * self.nx + x) as usize] {
                            if keep(i) {
                                found.push((p.dist2(pos[i]), i));
                            }
                        }
                    }
                    x += if edge || r == 0 { 1 } else { 2 * r };
                }
            }
            // distance from p to the nearest bucket not yet scanned
            let c = self.cell as i128;
            let (px, py) = ((p.x - self.min.x) as i128, (p.y - self.min.y) as i128);
            let (bx, by, rr) = (bx as i128, by as i128, r as i128);
            let mut sides = Vec::with_capacity(4);
            if bx - rr > 0 {
                sides.push(px - (bx - rr) * c);
            }
            if bx + rr < self.nx as i128 - 1 {
                sides.push((bx + rr + 1) * c - px);
            }
            if by - rr > 0 {
                sides.push(py - (by - rr) * c);
            }
            if by + rr < self.ny as i128 - 1 {
                sides.push((by + rr + 1) * c - py);
            }
            let Some(reach) = sides.into_iter().min() else { break };
            if found.len() >= k {
                found.sort_unstable();
                let reach = reach.max(0);
                if found[k - 1].0 <= reach * reach {
                    break;
                }
            }
            r += 1;
        }
        found.sort_unstable();
        found.truncate(k);
        found.into_iter().map(|(_, i)| i).collect()
    }
}

struct Search<'a> {
    p: &'a Problem,
    params: &'a CostParams,
    map: Vec<Option<usize>>,
    owner: Vec<Option<usize>>,
    net_cost: Vec<f64>,
}

impl<'a> Search<'a> {
    fn new(p: &'a Problem, params: &'a CostParams, map: Vec<Option<usize>>) -> Self {
        let mut owner = vec![None; p.n_obs];
        for (i, m) in map.iter().enumerate() {
            if let Some(c) = m {
                owner[*c] = Some(i);
            }
        }
        let net_cost = (0..p.nets.len()).map(|n| p.net_cost(n, &map)).collect();
        Search { p, params, map, owner, net_cost }
    }

    fn centroid(&self, pts: impl Iterator<Item = Point>) -> Option<Point> {
        let (mut sx, mut sy, mut n) = (0i128, 0i128, 0i128);
        for q in pts {
            sx += q.x as i128;
            sy += q.y as i128;
            n += 1;
        }
        (n > 0).then(|| Point::new((sx / n) as i64, (sy / n) as i64))
    }

    /// Centroid of the assigned members of `i`'s nets, excluding `i`.
    fn ideal(&self, i: usize) -> Option<Point> {
        let p = self.p;
        self.centroid(
            p.inst_nets[i]
                .iter()
                .flat_map(|&n| p.nets[n].iter())
                .filter(|&&j| j != i)
                .filter_map(|&j| self.map[j].map(|c| p.obs_pos[c])),
        )
    }

    /// Applies `changes`, returning the cost delta; `commit = false` rolls back.
    fn try_move(&mut self, changes: &[(usize, Option<usize>)], commit: bool) -> f64 {
        let p = self.p;
        let mut nets: Vec<usize> = changes.iter().flat_map(|&(i, _)| p.inst_nets[i].iter().copied()).collect();
        nets.sort_unstable();
        nets.dedup();
        let old: Vec<Option<usize>> = changes.iter().map(|&(i, _)| self.map[i]).collect();
        let mut delta = 0.0;
        for (&(i, new), &prev) in changes.iter().zip(&old) {
            delta -= prev.map_or(0.0, |c| p.obs_penalty[c]);
            delta += new.map_or(0.0, |c| p.obs_penalty[c]);
            self.map[i] = new;
        }
        let fresh: Vec<f64> = nets.iter().map(|&n| p.net_cost(n, &self.map)).collect();
        for (&n, &c) in nets.iter().zip(&fresh) {
            delta += c - self.net_cost[n];
        }
        if commit {
            for (&(_, _), &prev) in changes.iter().zip(&old) {
                if let Some(c) = prev {
                    self.owner[c] = None;
                }
            }
            for &(i, new) in changes {
                if let Some(c) = new {
                    self.owner[c] = Some(i);
                }
            }
            for (&n, &c) in nets.iter().zip(&fresh) {
                self.net_cost[n] = c;
            }
        } else {
            for (&(i, _), &prev) in changes.iter().zip(&old) {
                self.map[i] = prev;
            }
        }
        delta
    }

    /// Whether the mapping after `changes` is lexicographically smaller.
    fn lex_improves(&self, changes: &[(usize, Option<usize>)]) -> bool {
        let first = changes.iter().min_by_key(|(i, _)| *i).unwrap();
        self.p.key(first.1) < self.p.key(self.map[first.0])
    }

    fn consider(&mut self, changes: &[(usize, Option<usize>)]) -> bool {
        let delta = self.try_move(changes, false);
        let accept = delta < -EPS || (delta.abs() <= EPS && self.lex_improves(changes));
        if accept {
            self.try_move(changes, true);
        }
        accept
    }

    fn candidates(&self, i: usize, indexes: &[PointIndex], exhaustive: bool) -> Vec<usize> {
        let p = self.p;
        let pool = &p.pools[p.inst_kind[i]];
        if exhaustive {
            return pool.clone();
        }
        let at = self.ideal(i).or_else(|| self.map[i].map(|c| p.obs_pos[c])).or(p.inst_hint[i]);
        match at {
            Some(pt) => indexes[p.inst_kind[i]].nearest(pt, self.params.neighbourhood, &p.obs_pos, |_| true),
            None => Vec::new(),
        }
    }

    fn improve(&mut self, indexes: &[PointIndex], exhaustive: bool) {
        const MAX_PASSES: usize = 200;
        let n = self.p.inst_ids.len();
        for _ in 0..MAX_PASSES {
            let mut changed = false;
            for i in 0..n {
                for c in self.candidates(i, indexes, exhaustive) {
                    if self.map[i] == Some(c) {
                        continue;
                    }
                    let moved = match (self.map[i], self.owner[c]) {
                        (Some(_), None) => self.consider(&[(i, Some(c))]),
                        (Some(ci), Some(j)) => self.consider(&[(i, Some(c)), (j, Some(ci))]),
                        (None, Some(j)) => self.consider(&[(i, Some(c)), (j, None)]),
                        (None, None) => false,
                    };
                    changed |= moved;
                }
            }
            if exhaustive {
                changed |= self.pair_moves();
            }
            if !changed {
                break;
            }
        }
    }

    /// Moves two instances that share a net at once, each to any candidate
    /// of its kind; displaced owners take the vacated positions. Escapes
    /// optima where neither end of a wire can move alone.
    fn pair_moves(&mut self) -> bool {
        let p = self.p;
        let mut pairs: Vec<(usize, usize)> = p
            .nets
            .iter()
            .flat_map(|m| m.iter().enumerate().flat_map(move |(a, &i)| m[a + 1..].iter().map(move |&j| (i, j))))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        let mut changed = false;
        for (i, j) in pairs {
            for &c in &p.pools[p.inst_kind[i]] {
                for &d in &p.pools[p.inst_kind[j]] {
                    if c == d || (self.map[i] == Some(c) && self.map[j] == Some(d)) {
                        continue;
                    }
                    let (vi, vj) = (self.map[i], self.map[j]);
                    if vi.is_none() || vj.is_none() {
                        continue;
                    }
                    // each displaced owner takes a vacated position of its kind
                    let mut vacated: Vec<(Option<usize>, usize)> = [(vi, p.inst_kind[i]), (vj, p.inst_kind[j])]
                        .into_iter()
                        .filter(|&(v, _)| v != Some(c) && v != Some(d))
                        .collect();
                    let mut changes = vec![(i, Some(c)), (j, Some(d))];
                    for t in [c, d] {
                        if let Some(k) = self.owner[t].filter(|&k| k != i && k != j) {
                            let at = vacated.iter().position(|&(_, kind)| kind == p.inst_kind[k]).unwrap();
                            changes.push((k, vacated.remove(at).0));
                        }
                    }
                    changed |= self.consider(&changes);
                }
            }
        }
        changed
    }
}

/// Greedy construction in `order`: each instance takes the free candidate
/// nearest to its hint, else to its assigned net neighbours, else to the
/// centroid of its pool.
fn construct(p: &Problem, params: &CostParams, order: &[usize], indexes: &[PointIndex]) -> Vec<Option<usize>> {
    let mut s = Search::new(p, params, vec![None; p.inst_ids.len()]);
    let mut taken = vec![0usize; p.pools.len()];
    let pool_centroid: Vec<Option<Point>> =
        p.pools.iter().map(|pool| s.centroid(pool.iter().map(|&c| p.obs_pos[c]))).collect();
    for &i in order {
        let k = p.inst_kind[i];
        if taken[k] == p.quota[k] {
            continue;
        }
        let Some(target) = p.inst_hint[i].or_else(|| s.ideal(i)).or(pool_centroid[k]) else { continue };
        let owner = &s.owner;
        let pick = indexes[k].nearest(target, 1, &p.obs_pos, |c| owner[c].is_none());
        if let Some(&c) = pick.first() {
            s.map[i] = Some(c);
            s.owner[c] = Some(i);
            taken[k] += 1;
        }
    }
    s.map
}

/// Constructive seeding followed by swap / relocate / exchange local search;
/// small problems also try joint moves of net-sharing pairs.
/// Deterministic: ties go to the lexicographically smaller mapping.
pub fn assign(netlist: &Netlist, field: &ObservedField, params: &CostParams) -> Result<Assignment> {
    let p = Problem::new(netlist, field, params);
    let n = p.inst_ids.len();
    if n == 0 {
        return Ok(p.into_assignment(&[]));
    }
    let indexes: Vec<PointIndex> = p.pools.iter().map(|pool| PointIndex::new(pool, &p.obs_pos)).collect();
    let small = n <= params.small_problem;
    let base: Vec<usize> = (0..n).collect();
    let starts = if small { n } else { 1 };

    let mut best: Option<(f64, Vec<Option<usize>>)> = None;
    for s in 0..starts {
        let mut order = base.clone();
        order.rotate_left(s);
        let seed = construct(&p, params, &order, &indexes);
        let mut search = Search::new(&p, params, seed);
        search.improve(&indexes, small);
        let cost = p.total_cost(&search.map);
        let better = match &best {
            None => true,
            Some((bc, bm)) => cost < bc - EPS || ((cost - bc).abs() <= EPS && p.lex_less(&search.map, bm)),
        };
        if better {
            best = Some((cost, search.map));
        }
    }
    let (_, map) = best.expect("at least one start");
    Ok(p.into_assignment(&map))
}

/// Globally optimal assignment by enumeration, for checking [`assign`].
///
/// Instances are visited in id order and candidates in obs_id order with
/// "unassigned" last; only strictly cheaper mappings replace the incumbent,
/// so ties resolve to the lexicographically smallest mapping.
pub fn assign_exhaustive(netlist: &Netlist, field: &ObservedField, params: &CostParams) -> Result<Assignment> {
    let n = netlist.instances.len();
    if n > EXHAUSTIVE_LIMIT {
        return Err(Error::Limit(format!(
            "exhaustive assignment is limited to {EXHAUSTIVE_LIMIT} instances, got {n}"
        )));
    }
    let p = Problem::new(netlist, field, params);
    let mut remaining = vec![0usize; p.pools.len()];
    for &k in &p.inst_kind {
        remaining[k] += 1;
    }

    struct Dfs<'a> {
        p: &'a Problem,
        map: Vec<Option<usize>>,
        used: Vec<bool>,
        taken: Vec<usize>,
        remaining: Vec<usize>,
        best: Option<(f64, Vec<Option<usize>>)>,
    }

    impl Dfs<'_> {
        fn go(&mut self, i: usize) {
            let p = self.p;
            if i == p.inst_ids.len() {
                let cost = p.total_cost(&self.map);
                if self.best.as_ref().is_none_or(|(b, _)| cost < b - EPS) {
                    self.best = Some((cost, self.map.clone()));
                }
                return;
            }
            let k = p.inst_kind[i];
            self.remaining[k] -= 1;
            if self.taken[k] < p.quota[k] {
                for &c in &p.pools[k] {
                    if self.used[c] {
                        continue;
                    }
                    self.used[c] = true;
                    self.taken[k] += 1;
                    self.map[i] = Some(c);
                    self.go(i + 1);
                    self.map[i] = None;
                    self.taken[k] -= 1;
                    self.used[c] = false;
                }
            }
            // leaving `i` out is allowed only if the quota can still be met
            if p.quota[k] - self.taken[k] <= self.remaining[k] {
                self.go(i + 1);
            }
            self.remaining[k] += 1;
        }
    }

    let mut dfs = Dfs {
        p: &p,
        map: vec![None; n],
        used: vec![false; p.n_obs],
        taken: vec![0; p.pools.len()],
        remaining,
        best: None,
    };
    dfs.go(0);
    let (_, map) = dfs.best.expect("the empty completion is always reachable");
    Ok(p.into_assignment(&map))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Angle, Region};
    use crate::model::{Endpoint, Instance, Net};
    use crate::vision::ObservedComponent;

    fn obs(id: u32, kind: &str, x: i64, y: i64, bad: bool) -> ObservedComponent {
        ObservedComponent {
            obs_id: id,
            phys_id: None,
            kind: kind.into(),
            x_nm: x,
            y_nm: y,
            theta_deg: Angle::ZERO,
            classified_defective: bad,
        }
    }

    fn field(o: Vec<ObservedComponent>) -> ObservedField {
        ObservedField { region: Region::new(200_000, 200_000), observations: o, overlaps: vec![], missed: None }
    }

    fn inst(id: &str, kind: &str) -> Instance {
        Instance { id: id.into(), kind: kind.into(), hint: None }
    }

    fn pair_netlist() -> Netlist {
        Netlist {
            instances: vec![inst("A", "res"), inst("B", "res")],
            nets: vec![Net { id: "n".into(), pins: vec![Endpoint::new("A", "b"), Endpoint::new("B", "a")] }],
            redundancy_groups: vec![],
        }
    }

    #[test]
    fn single_instance_maps_with_zero_cost() {
        let nl = Netlist { instances: vec![inst("R", "res")], ..Default::default() };
        let a = assign(&nl, &field(vec![obs(0, "res", 5, 5, false)]), &CostParams::default()).unwrap();
        assert_eq!(a.mapping.get("R"), Some(&0));
        assert_eq!(a.cost, 0.0);
    }

    #[test]
    fn defective_component_left_unconnected() {
        let nl = Netlist { instances: vec![inst("R", "res")], ..Default::default() };
        let f = field(vec![obs(0, "res", 5, 5, true)]);
        let a = assign(&nl, &f, &CostParams::default()).unwrap();
        assert!(a.mapping.is_empty());
        assert_eq!(a.unassigned_logical, vec!["R".to_string()]);
        a.check(&nl, &f).unwrap();
    }

    #[test]
    fn picks_the_close_pair() {
        let f = field(vec![obs(0, "res", 0, 0, false), obs(1, "res", 10_000, 0, false), obs(2, "res", 100_000, 0, false)]);
        let nl = pair_netlist();
        for a in [assign(&nl, &f, &CostParams::default()).unwrap(), assign_exhaustive(&nl, &f, &CostParams::default()).unwrap()] {
            assert_eq!(a.mapping.get("A"), Some(&0));
            assert_eq!(a.mapping.get("B"), Some(&1));
            assert_eq!(a.cost, 10_000.0);
            assert_eq!(a.unused_physical, vec![2]);
        }
    }

    #[test]
    fn exhaustive_empty_and_limit() {
        let a = assign_exhaustive(&Netlist::default(), &field(vec![]), &CostParams::default()).unwrap();
        assert!(a.mapping.is_empty());
        assert_eq!(a.cost, 0.0);
        let nl = Netlist { instances: (0..9).map(|i| inst(&format!("r{i}"), "res")).collect(), ..Default::default() };
        let err = assign_exhaustive(&nl, &field(vec![]), &CostParams::default()).unwrap_err();
        assert!(matches!(err, Error::Limit(_)));
    }

    #[test]
    fn square_is_optimal_over_all_permutations() {
        let pts = [(0, 0), (10_000, 0), (10_000, 10_000), (0, 10_000)];
        let f = field(pts.iter().enumerate().map(|(i, &(x, y))| obs(i as u32, "res", x, y, false)).collect());
        let nl = Netlist {
            instances: ["A", "B", "C", "D"].iter().map(|s| inst(s, "res")).collect(),
            nets: vec![
                Net { id: "ab".into(), pins: vec![Endpoint::new("A", "b"), Endpoint::new("B", "a")] },
                Net { id: "bc".into(), pins: vec![Endpoint::new("B", "b"), Endpoint::new("C", "a")] },
                Net { id: "cd".into(), pins: vec![Endpoint::new("C", "b"), Endpoint::new("D", "a")] },
                Net { id: "da".into(), pins: vec![Endpoint::new("D", "b"), Endpoint::new("A", "a")] },
            ],
            redundancy_groups: vec![],
        };
        let ex = assign_exhaustive(&nl, &f, &CostParams::default()).unwrap();
        let p = Problem::new(&nl, &f, &CostParams::default());
        let mut perm = vec![0usize, 1, 2, 3];
        let mut all = Vec::new();
        permute(&mut perm, 0, &mut all);
        assert_eq!(all.len(), 24);
        for perm in all {
            let map: Vec<Option<usize>> = perm.into_iter().map(Some).collect();
            assert!(ex.cost <= p.total_cost(&map) + 1e-9);
        }
        assert!((ex.cost - 40_000.0).abs() < 1e-9);
        // lexicographically first optimum
        assert_eq!(ex.mapping.values().copied().collect::<Vec<_>>(), vec![0, 1, 2, 3]);
        let h = assign(&nl, &f, &CostParams::default()).unwrap();
        assert!((h.cost - ex.cost).abs() < 1e-9);
    }

    fn permute(v: &mut Vec<usize>, k: usize, out: &mut Vec<Vec<usize>>) {
        if k == v.len() {
            out.push(v.clone());
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, out);
            v.swap(k, i);
        }
    }

    #[test]
    fn overlapping_component_avoided_when_possible() {
        let mut f = field(vec![obs(0, "res", 0, 0, false), obs(1, "res", 500, 0, false), obs(2, "res", 3000, 0, false)]);
        f.overlaps = vec![(0, 1)];
        let nl = Netlist { instances: vec![inst("R", "res")], ..Default::default() };
        let a = assign(&nl, &f, &CostParams::default()).unwrap();
        assert_eq!(a.mapping.get("R"), Some(&2));
        // with no clean spare the overlapping ones are used
        let nl2 = Netlist { instances: vec![inst("R", "res"), inst("S", "res"), inst("T", "res")], ..Default::default() };
        let a2 = assign(&nl2, &f, &CostParams::default()).unwrap();
        assert_eq!(a2.mapping.len(), 3);
        assert_eq!(a2.cost, 20_000.0);
    }

    #[test]
    fn shortage_leaves_instances_unassigned() {
        let f = field(vec![obs(0, "res", 0, 0, false), obs(1, "nmos", 10, 0, false)]);
        let nl = Netlist { instances: vec![inst("A", "res"), inst("B", "res"), inst("C", "pmos")], ..Default::default() };
        let a = assign(&nl, &f, &CostParams::default()).unwrap();
        assert_eq!(a.mapping.len(), 1);
        assert_eq!(a.unassigned_logical.len(), 2);
        assert_eq!(a.unused_physical, vec![1]);
        a.check(&nl, &f).unwrap();
    }

    #[test]
    fn hints_steer_the_seed() {
        let f = field((0..5).map(|i| obs(i, "res", i as i64 * 10_000, 0, false)).collect());
        let mut nl = pair_netlist();
        nl.instances[0].hint = Some(Point::new(30_500, 0));
        nl.instances[1].hint = Some(Point::new(39_000, 0));
        let a = assign(&nl, &f, &CostParams::default()).unwrap();
        assert_eq!(a.cost, 10_000.0);
        let placed: BTreeSet<u32> = a.mapping.values().copied().collect();
        assert_eq!(placed.len(), 2);
    }

    #[test]
    fn mst_of_unit_square() {
        let pts = [Point::new(0, 0), Point::new(3, 0), Point::new(3, 4), Point::new(0, 4)];
        assert_eq!(mst_length(&pts), 10.0);
        assert_eq!(mst_length(&pts[..1]), 0.0);
    }

    #[test]
    fn nearest_query_matches_scan() {
        let pos: Vec<Point> = (0..200).map(|i| Point::new((i * 7919) % 1000, (i * 104_729) % 1000)).collect();
        let items: Vec<usize> = (0..200).collect();
        let idx = PointIndex::new(&items, &pos);
        for q in [Point::new(0, 0), Point::new(500, 500), Point::new(-300, 2000), Point::new(999, 3)] {
            let got = idx.nearest(q, 7, &pos, |i| i % 3 != 0);
            let mut all: Vec<(i128, usize)> =
                items.iter().filter(|&&i| i % 3 != 0).map(|&i| (q.dist2(pos[i]), i)).collect();
            all.sort_unstable();
            let want: Vec<usize> = all.into_iter().take(7).map(|(_, i)| i).collect();
            assert_eq!(got, want, "{q:?}");
        }
    }

    proptest::proptest! {
        #[test]
        fn two_pin_net_is_solved_exactly(
            res in proptest::collection::vec((0i64..50_000, 0i64..50_000), 1..6),
            nmos in proptest::collection::vec((0i64..50_000, 0i64..50_000), 1..6),
        ) {
            let nl = Netlist {
                instances: vec![inst("M", "nmos"), inst("R", "res")],
                nets: vec![Net { id: "n".into(), pins: vec![Endpoint::new("M", "g"), Endpoint::new("R", "a")] }],
                redundancy_groups: vec![],
            };
            let o: Vec<ObservedComponent> = res
                .iter()
                .map(|&(x, y)| ("res", x, y))
                .chain(nmos.iter().map(|&(x, y)| ("nmos", x, y)))
                .enumerate()
                .map(|(k, (kind, x, y))| obs(k as u32, kind, x, y, false))
                .collect();
            let f = field(o);
            let params = CostParams::default();
            let h = assign(&nl, &f, &params).unwrap();
            let ex = assign_exhaustive(&nl, &f, &params).unwrap();
            proptest::prop_assert!((h.cost - ex.cost).abs() <= 1e-6 * ex.cost.max(1.0), "{} vs {}", h.cost, ex.cost);
        }
    }
}
