//! A* maze search on the routing grid, with straight insulated bridge hops
//! over foreign wires.

use rustc_hash::FxHashSet;

use super::grid::{owner_of, RoutingGrid, BLOCKED, FREE, MULTI};

/// Grids up to this many cells are always searched whole.
const FULL_GRID_CELLS: usize = 1 << 20;
/// Window margins (cells) tried in turn on larger grids.
const MARGINS: [usize; 3] = [40, 160, 640];
/// Extra step cost of a foreign cell in a relaxed (conflict-finding) search.
const RELAXED_PENALTY: u32 = 8;

/// Most wires one bridge hop may cross.
const MAX_CROSSINGS: usize = 3;

const UNSEEN: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Hop {
    pub from: u32,
    pub to: u32,
    pub crossing: u32,
    pub crossed: u32,
}

/// One two-point connection: cells from the terminal to the tree junction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct Branch {
    pub cells: Vec<u32>,
    pub hops: Vec<Hop>,
    /// Indices of polyline vertices in `cells` once straightened; empty
    /// means every corner of the unit-step path.
    pub verts: Vec<usize>,
    /// Cells under straightened segments, which get a wider halo.
    pub slanted: Vec<u32>,
}

impl Branch {
    /// Interior cells of every bridge hop.
    pub fn spans<'a>(&'a self, grid: &'a RoutingGrid) -> impl Iterator<Item = u32> + 'a {
        self.hops.iter().flat_map(move |h| span_cells(grid, h.from, h.to))
    }

    /// Grid steps including the cells jumped by bridges.
    pub fn steps(&self, grid: &RoutingGrid) -> u64 {
        self.cells
            .windows(2)
            .map(|w| {
                let (a, b) = (grid.coords(w[0]), grid.coords(w[1]));
                (a.0.abs_diff(b.0) + a.1.abs_diff(b.1)) as u64
            })
            .sum()
    }
}

pub(crate) fn span_cells(grid: &RoutingGrid, from: u32, to: u32) -> Vec<u32> {
    let (a, b) = (grid.coords(from), grid.coords(to));
    let (dx, dy) = ((b.0 as i64 - a.0 as i64).signum(), (b.1 as i64 - a.1 as i64).signum());
    let n = a.0.abs_diff(b.0) + a.1.abs_diff(b.1);
    (1..n as i64).map(|k| grid.index((a.0 as i64 + dx * k) as usize, (a.1 as i64 + dy * k) as usize)).collect()
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SearchParams {
    pub bridge_penalty: u32,
    /// Allow foreign cells at a penalty and never bridge; used to find which
    /// nets stand in a failed net's way.
    pub relaxed: bool,
}

#[derive(Debug, Clone, Copy)]
struct Window {
    x0: usize,
    y0: usize,
    w: usize,
    h: usize,
}

impl Window {
    #[inline]
    fn local(&self, i: usize, j: usize) -> Option<usize> {
        (i >= self.x0 && j >= self.y0 && i < self.x0 + self.w && j < self.y0 + self.h)
            .then(|| (j - self.y0) * self.w + (i - self.x0))
    }
}

/// Open list keyed by integer f; the most recent entry of the lowest
/// bucket comes out first, which favours deep nodes on f plateaus.
#[derive(Debug, Default)]
struct Buckets {
    base: u32,
    cursor: usize,
    buckets: Vec<Vec<(u32, u32)>>,
}

impl Buckets {
    fn clear(&mut self) {
        for b in &mut self.buckets {
            b.clear();
        }
        self.cursor = 0;
    }

    fn reset(&mut self, base: u32) {
        self.base = base;
    }

    #[inline]
    fn push(&mut self, f: u32, node: u32, h: u32) {
        let k = (f - self.base) as usize;
        if k >= self.buckets.len() {
            self.buckets.resize_with(k + 1, Vec::new);
        }
        self.buckets[k].push((node, h));
        self.cursor = self.cursor.min(k);
    }

    #[inline]
    fn pop(&mut self) -> Option<(u32, u32, u32)> {
        while self.cursor < self.buckets.len() {
            if let Some((node, h)) = self.buckets[self.cursor].pop() {
                return Some((self.base + self.cursor as u32, node, h));
            }
            self.cursor += 1;
        }
        None
    }
}

/// Reusable search buffers. Entries count only when their stamp matches the
/// current search, so nothing is cleared between searches.
#[derive(Debug, Default)]
pub(crate) struct Scratch {
    g: Vec<u32>,
    parent: Vec<u32>,
    seen: Vec<u32>,
    goal: Vec<u32>,
    epoch: u32,
    open: Buckets,
}

impl Scratch {
    fn begin(&mut self, size: usize) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.seen.fill(0);
            self.goal.fill(0);
            self.epoch = 1;
        }
        if self.seen.len() < size {
            self.g.resize(size, UNSEEN);
            self.parent.resize(size, UNSEEN);
            self.seen.resize(size, 0);
            self.goal.resize(size, 0);
        }
        self.open.clear();
    }

    #[inline]
    fn g(&self, l: usize) -> u32 {
        if self.seen[l] == self.epoch {
            self.g[l]
        } else {
            UNSEEN
        }
    }

    #[inline]
    fn set(&mut self, l: usize, g: u32, parent: u32) {
        self.seen[l] = self.epoch;
        self.g[l] = g;
        self.parent[l] = parent;
    }
}

#[derive(Debug, Clone, Copy)]
struct BBox {
    x0: usize,
    y0: usize,
    x1: usize,
    y1: usize,
}

impl BBox {
    fn of(grid: &RoutingGrid, cells: impl Iterator<Item = u32>) -> BBox {
        let mut b = BBox { x0: usize::MAX, y0: usize::MAX, x1: 0, y1: 0 };
        for c in cells {
            let (i, j) = grid.coords(c);
            b.x0 = b.x0.min(i);
            b.y0 = b.y0.min(j);
            b.x1 = b.x1.max(i);
            b.y1 = b.y1.max(j);
        }
        b
    }

    #[inline]
    fn dist(&self, i: usize, j: usize) -> u32 {
        let dx = if i < self.x0 { self.x0 - i } else { i.saturating_sub(self.x1) };
        let dy = if j < self.y0 { self.y0 - j } else { j.saturating_sub(self.y1) };
        (dx + dy) as u32
    }
}

struct Ctx<'a> {
    grid: &'a RoutingGrid,
    net: u32,
    params: SearchParams,
    pending_spans: &'a FxHashSet<u32>,
}

impl Ctx<'_> {
    #[inline]
    fn step_cost(&self, idx: u32) -> Option<u32> {
        if self.grid.enterable(idx, self.net) {
            Some(1)
        } else if self.params.relaxed && self.grid.owner(idx) != BLOCKED {
            Some(1 + RELAXED_PENALTY)
        } else {
            None
        }
    }

    fn foreign_wire_near(&self, x: i64, y: i64, crossed: &[u32]) -> bool {
        let grid = self.grid;
        let r = grid.halo_radius as i64;
        for j in (y - r).max(0)..=(y + r).min(grid.ny as i64 - 1) {
            for i in (x - r).max(0)..=(x + r).min(grid.nx as i64 - 1) {
                if let Some((n, true)) = owner_of(grid.owner(grid.index(i as usize, j as usize))) {
                    if n != self.net && !crossed.contains(&n) {
                        return true;
                    }
                }
            }
        }
        false
    }

    /// A straight hop from `(i, j)` in direction `(dx, dy)` over up to
    /// `MAX_CROSSINGS` foreign wires and their halos. Returns the landing
    /// cell, the number of cells jumped and the number of wires crossed.
    fn bridge(&self, i: usize, j: usize, dx: i64, dy: i64) -> Option<(usize, usize, u32, u32)> {
        let grid = self.grid;
        let r = grid.halo_radius as i64;
        let max_span = MAX_CROSSINGS as i64 * (2 * r + 2) + 1;
        let mut crossed: Vec<u32> = Vec::new();
        let mut halos: Vec<u32> = Vec::new();
        let mut shared: Vec<(i64, i64)> = Vec::new();
        let mut last_wire = i64::MIN;
        let (mut x, mut y) = (i as i64, j as i64);
        for k in 1..=max_span + 1 {
            x += dx;
            y += dy;
            if x < 0 || y < 0 || x >= grid.nx as i64 || y >= grid.ny as i64 {
                return None;
            }
            let idx = grid.index(x as usize, y as usize);
            if grid.enterable(idx, self.net) {
                if k == 1 || crossed.is_empty() {
                    return None;
                }
                if halos.iter().any(|h| !crossed.contains(h)) {
                    return None;
                }
                // overlapping halos are fine as long as they come only from
                // this net and the crossed ones
                if shared.iter().any(|&(sx, sy)| self.foreign_wire_near(sx, sy, &crossed)) {
                    return None;
                }
                return Some((x as usize, y as usize, (k - 1) as u32, crossed.len() as u32));
            }
            if k > max_span {
                return None;
            }
            let v = grid.owner(idx);
            if v == FREE || v == BLOCKED {
                return None;
            }
            if grid.bridged.contains(&idx) || self.pending_spans.contains(&idx) || grid.pin_cells.contains(&idx) {
                return None;
            }
            if v == MULTI {
                shared.push((x, y));
                continue;
            }
            let (n, is_wire) = owner_of(v)?;
            if !is_wire {
                if !halos.contains(&n) {
                    halos.push(n);
                }
                continue;
            }
            // each crossed wire runs straight across the hop
            if k == last_wire + 1 || crossed.len() == MAX_CROSSINGS {
                return None;
            }
            for s in [-1i64, 1] {
                let (qx, qy) = (x + s * dy, y + s * dx);
                if qx < 0 || qy < 0 || qx >= grid.nx as i64 || qy >= grid.ny as i64 {
                    return None;
                }
                if owner_of(grid.owner(grid.index(qx as usize, qy as usize))) != Some((n, true)) {
                    return None;
                }
            }
            last_wire = k;
            crossed.push(n);
        }
        None
    }
}

/// Cheapest connection from `source` to any cell of `tree` within `win`.
fn astar(ctx: &Ctx, scratch: &mut Scratch, source: u32, tree: &[u32], win: Window) -> Option<Branch> {
    let grid = ctx.grid;
    let size = win.w * win.h;
    scratch.begin(size);

    let mut any_goal = false;
    for &t in tree {
        let (i, j) = grid.coords(t);
        if let Some(l) = win.local(i, j) {
            if grid.enterable(t, ctx.net) || ctx.params.relaxed {
                scratch.goal[l] = scratch.epoch;
                any_goal = true;
            }
        }
    }
    if !any_goal {
        return None;
    }
    let bbox = BBox::of(grid, tree.iter().copied());
    let (si, sj) = grid.coords(source);
    let s = win.local(si, sj)?;
    scratch.set(s, 0, UNSEEN);
    let h0 = bbox.dist(si, sj);
    scratch.open.reset(h0);
    scratch.open.push(h0, s as u32, h0);

    const DIRS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
    while let Some((f, l, h)) = scratch.open.pop() {
        let l = l as usize;
        let g = scratch.g(l);
        if g + h != f {
            continue;
        }
        if scratch.goal[l] == scratch.epoch {
            return Some(reconstruct(ctx, scratch, win, l));
        }
        let (i, j) = (win.x0 + l % win.w, win.y0 + l / win.w);
        for (dx, dy) in DIRS {
            let (ni, nj) = (i as i64 + dx, j as i64 + dy);
            if ni < 0 || nj < 0 {
                continue;
            }
            let (ni, nj) = (ni as usize, nj as usize);
            let Some(nl) = win.local(ni, nj) else { continue };
            let idx = grid.index(ni, nj);
            let (target, tl, cost) = match ctx.step_cost(idx) {
                Some(c) => ((ni, nj), nl, c),
                None if !ctx.params.relaxed => match ctx.bridge(i, j, dx, dy) {
                    Some((bi, bj, span, wires)) => match win.local(bi, bj) {
                        Some(bl) => ((bi, bj), bl, span + 1 + wires * ctx.params.bridge_penalty),
                        None => continue,
                    },
                    None => continue,
                },
                None => continue,
            };
            let ng = g + cost;
            if ng < scratch.g(tl) {
                scratch.set(tl, ng, l as u32);
                let nh = bbox.dist(target.0, target.1);
                scratch.open.push(ng + nh, tl as u32, nh);
            }
        }
    }
    None
}

fn reconstruct(ctx: &Ctx, scratch: &Scratch, win: Window, end: usize) -> Branch {
    let grid = ctx.grid;
    let global = |l: usize| grid.index(win.x0 + l % win.w, win.y0 + l / win.w);
    let mut cells = vec![global(end)];
    let mut l = end;
    while scratch.parent[l] != UNSEEN {
        l = scratch.parent[l] as usize;
        cells.push(global(l));
    }
    cells.reverse();
    let mut hops = Vec::new();
    for w in cells.windows(2) {
        let (a, b) = (grid.coords(w[0]), grid.coords(w[1]));
        if a.0.abs_diff(b.0) + a.1.abs_diff(b.1) > 1 {
            for crossing in span_cells(grid, w[0], w[1]) {
                if let Some((crossed, true)) = owner_of(grid.owner(crossing)) {
                    hops.push(Hop { from: w[0], to: w[1], crossing, crossed });
                }
            }
        }
    }
    Branch { cells, hops, ..Default::default() }
}

fn windows(grid: &RoutingGrid, source: u32, tree: &[u32]) -> Vec<Window> {
    if grid.nx * grid.ny <= FULL_GRID_CELLS {
        return vec![Window { x0: 0, y0: 0, w: grid.nx, h: grid.ny }];
    }
    let b = BBox::of(grid, tree.iter().copied().chain(std::iter::once(source)));
    MARGINS
        .iter()
        .map(|&m| {
            let x0 = b.x0.saturating_sub(m);
            let y0 = b.y0.saturating_sub(m);
            let x1 = (b.x1 + m).min(grid.nx - 1);
            let y1 = (b.y1 + m).min(grid.ny - 1);
            Window { x0, y0, w: x1 - x0 + 1, h: y1 - y0 + 1 }
        })
        .collect()
}

/// Connects `source` to `tree` with the smallest window that succeeds.
pub(crate) fn connect(
    grid: &RoutingGrid,
    scratch: &mut Scratch,
    net: u32,
    source: u32,
    tree: &[u32],
    pending_spans: &FxHashSet<u32>,
    params: SearchParams,
) -> Option<Branch> {
    let ctx = Ctx { grid, net, params, pending_spans };
    if !(grid.enterable(source, net) || params.relaxed) {
        return None;
    }
    windows(grid, source, tree).into_iter().find_map(|w| astar(&ctx, scratch, source, tree, w))
}

/// Sequential nearest-terminal Steiner approximation. The first terminal
/// seeds the tree; each round connects the unconnected terminal closest (in
/// Manhattan distance) to the tree. On failure returns the index of the
/// terminal that could not be reached.
pub(crate) fn route_terminals(
    grid: &RoutingGrid,
    scratch: &mut Scratch,
    net: u32,
    terminals: &[u32],
    params: SearchParams,
) -> Result<Vec<Branch>, usize> {
    let mut tree: Vec<u32> = vec![terminals[0]];
    let mut in_tree: FxHashSet<u32> = tree.iter().copied().collect();
    let mut done: Vec<bool> = terminals.iter().map(|t| in_tree.contains(t)).collect();
    let mut pending = FxHashSet::default();
    let mut branches = Vec::new();
    loop {
        let mut pick: Option<(usize, usize)> = None;
        for (k, &t) in terminals.iter().enumerate() {
            if done[k] {
                continue;
            }
            let (ti, tj) = grid.coords(t);
            let d = tree
                .iter()
                .map(|&c| {
                    let (i, j) = grid.coords(c);
                    i.abs_diff(ti) + j.abs_diff(tj)
                })
                .min()
                .unwrap();
            if pick.is_none_or(|(bd, _)| d < bd) {
                pick = Some((d, k));
            }
        }
        let Some((_, k)) = pick else { break };
        let t = terminals[k];
        let branch = connect(grid, scratch, net, t, &tree, &pending, params).ok_or(k)?;
        for &c in &branch.cells {
            if in_tree.insert(c) {
                tree.push(c);
            }
        }
        if !params.relaxed {
            pending.extend(branch.spans(grid));
        }
        for (k2, t2) in terminals.iter().enumerate() {
            done[k2] |= in_tree.contains(t2);
        }
        branches.push(branch);
    }
    Ok(branches)
}
