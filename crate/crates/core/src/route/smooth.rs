//! Any-angle straightening of routed wires.
//!
//! The maze search moves in unit steps, so a diagonal connection comes out as
//! a staircase. A printer has no such restriction. As soon as a net is
//! routed, each branch's corners are joined by straight segments wherever
//! the segment keeps clear of bodies, bridges and other nets' wires. The
//! straight segment is kept on the grid as the chain of cells it passes
//! through, so later nets see it as an ordinary wire.

use rustc_hash::{FxHashMap, FxHashSet};

use super::grid::{owner_of, snap, RoutingGrid, BLOCKED};
use super::search::Branch;
use crate::geometry::{OrientedRect, Point};

/// Points strictly between `a` and `b`, at most one pitch apart. Segments
/// along a grid line yield the cell centers they pass.
pub(crate) fn interior_samples(a: Point, b: Point, pitch: i64) -> impl Iterator<Item = Point> {
    let (dx, dy) = ((b.x - a.x) as f64, (b.y - a.y) as f64);
    let m = (dx.hypot(dy) / pitch.max(1) as f64 - 1e-9).ceil().max(1.0) as i64;
    (1..m).map(move |k| {
        let t = k as f64 / m as f64;
        Point::new(a.x + (dx * t).round() as i64, a.y + (dy * t).round() as i64)
    })
}

/// Blocked corners skipped before settling for the farthest clear one.
const MAX_MISSES: usize = 3;

/// Longest stretch of a straight run without a shortcut candidate.
const STRIDE: usize = 6;

pub(crate) struct Straightener {
    rects: Vec<OrientedRect>,
    bodies: FxHashMap<(i64, i64), Vec<usize>>,
    bucket: i64,
    /// Required distance from a sample to the center of a foreign wire cell.
    reach_nm: f64,
}

impl Straightener {
    /// `clearance_nm` is the widest wire plus the minimum spacing.
    pub fn new(grid: &RoutingGrid, clearance_nm: i64) -> Self {
        let rects: Vec<OrientedRect> = grid.components.iter().map(|c| c.outline()).collect();
        let bucket = rects.iter().map(|r| 2.0 * r.radius()).fold(1.0, f64::max).ceil() as i64;
        let mut bodies: FxHashMap<(i64, i64), Vec<usize>> = FxHashMap::default();
        for (k, r) in rects.iter().enumerate() {
            let (x, y) = (r.center.0 as i64, r.center.1 as i64);
            bodies.entry((x.div_euclid(bucket), y.div_euclid(bucket))).or_default().push(k);
        }
        // a foreign sample may sit anywhere in its cell
        let reach_nm = clearance_nm as f64 + grid.pitch as f64 * std::f64::consts::FRAC_1_SQRT_2;
        Straightener { rects, bodies, bucket, reach_nm }
    }

    fn in_body(&self, p: Point) -> bool {
        let (bx, by) = (p.x.div_euclid(self.bucket), p.y.div_euclid(self.bucket));
        for dy in -1..=1 {
            for dx in -1..=1 {
                if let Some(list) = self.bodies.get(&(bx + dx, by + dy)) {
                    if list.iter().any(|&k| self.rects[k].contains_strict(p.x as f64, p.y as f64)) {
                        return true;
                    }
                }
            }
        }
        false
    }

    fn sample_ok(&self, grid: &RoutingGrid, p: Point, ci: i64, cj: i64) -> bool {
        if grid.owner(grid.index(ci as usize, cj as usize)) == BLOCKED {
            return false;
        }
        for y in (cj - 1).max(0)..=(cj + 1).min(grid.ny as i64 - 1) {
            for x in (ci - 1).max(0)..=(ci + 1).min(grid.nx as i64 - 1) {
                if grid.bridged.contains(&grid.index(x as usize, y as usize)) {
                    return false;
                }
            }
        }
        !self.in_body(p)
    }

    /// Whether every foreign wire cell center is at least the reach away
    /// from the segment `a`-`b`.
    fn band_clear(&self, grid: &RoutingGrid, net: u32, a: Point, b: Point) -> bool {
        let pitch = grid.pitch as f64;
        let reach = self.reach_nm;
        let (ax, ay, bx, by) = (a.x as f64, a.y as f64, b.x as f64, b.y as f64);
        let (dx, dy) = (bx - ax, by - ay);
        let len2 = (dx * dx + dy * dy).max(1e-9);
        let cell = |v: f64| (v / pitch).floor() as i64;
        let rows = (cell(ay.min(by) - reach).max(0), cell(ay.max(by) + reach).min(grid.ny as i64 - 1));
        for j in rows.0..=rows.1 {
            // x extent of the segment over this row's band, widened by the reach
            let (y0, y1) = (j as f64 * pitch - reach, (j + 1) as f64 * pitch + reach);
            let (mut x0, mut x1) = (ax.min(bx), ax.max(bx));
            if dy.abs() > 1e-9 {
                let t0 = ((y0 - ay) / dy).clamp(0.0, 1.0);
                let t1 = ((y1 - ay) / dy).clamp(0.0, 1.0);
                x0 = (ax + dx * t0).min(ax + dx * t1);
                x1 = (ax + dx * t0).max(ax + dx * t1);
            }
            let cols = (cell(x0 - reach).max(0), cell(x1 + reach).min(grid.nx as i64 - 1));
            for i in cols.0..=cols.1 {
                let idx = grid.index(i as usize, j as usize);
                if let Some((n, true)) = owner_of(grid.owner(idx)) {
                    if n != net {
                        let c = grid.center(idx);
                        let (cx, cy) = (c.x as f64, c.y as f64);
                        let t = (((cx - ax) * dx + (cy - ay) * dy) / len2).clamp(0.0, 1.0);
                        let (ex, ey) = (ax + dx * t - cx, ay + dy * t - cy);
                        if ex * ex + ey * ey < reach * reach {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Cells of the straight segment from cell `a` to cell `b` as a unit-step
    /// chain, excluding `a`. `None` when the segment is not clear.
    fn trace(&self, grid: &RoutingGrid, net: u32, a: u32, b: u32, pending: &FxHashSet<u32>) -> Option<Vec<u32>> {
        let (pa, pb) = (grid.center(a), grid.center(b));
        let (line_x, line_y) = ((pb.x - pa.x) as f64, (pb.y - pa.y) as f64);
        let off_line = |c: Point| (((c.x - pa.x) as f64) * line_y - ((c.y - pa.y) as f64) * line_x).abs();
        let usable = |idx: u32| grid.enterable(idx, net) && !grid.bridged.contains(&idx) && !pending.contains(&idx);
        let mut out = Vec::new();
        let mut inner: Option<(Point, Point)> = None;
        let (mut pi, mut pj) = grid.coords(a);
        for p in interior_samples(pa, pb, grid.pitch).chain(std::iter::once(pb)) {
            let (ci, cj) = (snap(p.x as f64, grid.pitch), snap(p.y as f64, grid.pitch));
            if ci < 0 || cj < 0 || ci as usize >= grid.nx || cj as usize >= grid.ny {
                return None;
            }
            if p != pb {
                if !self.sample_ok(grid, p, ci, cj) {
                    return None;
                }
                inner = Some((inner.map_or(p, |(first, _)| first), p));
            }
            let (ci, cj) = (ci as usize, cj as usize);
            let (di, dj) = (ci.abs_diff(pi), cj.abs_diff(pj));
            if di > 1 || dj > 1 {
                return None;
            }
            if di == 1 && dj == 1 {
                // step around the corner on the side nearer the line
                let (u, v) = (grid.index(ci, pj), grid.index(pi, cj));
                let mid = if off_line(grid.center(u)) <= off_line(grid.center(v)) { u } else { v };
                if !usable(mid) {
                    return None;
                }
                out.push(mid);
            }
            if di + dj > 0 {
                let idx = grid.index(ci, cj);
                if !usable(idx) {
                    return None;
                }
                out.push(idx);
                (pi, pj) = (ci, cj);
            }
        }
        if out.last() != Some(&b) {
            return None;
        }
        match inner {
            Some((first, last)) if !self.band_clear(grid, net, first, last) => None,
            _ => Some(out),
        }
    }

    /// Straightens `branch` in place. `keep` lists cells that must stay
    /// vertices (terminals and tree junctions); `split` reports whether the
    /// wire width changes between two neighbouring points.
    pub fn straighten(
        &self,
        grid: &RoutingGrid,
        net: u32,
        branch: &mut Branch,
        keep: &FxHashSet<u32>,
        split: &dyn Fn(Point, Point) -> bool,
        pending: &FxHashSet<u32>,
    ) {
        let cells = &branch.cells;
        let pitch = grid.pitch;
        let pts: Vec<Point> = cells.iter().map(|&c| grid.center(c)).collect();
        let unit = |k: usize| (pts[k + 1].x - pts[k].x).abs() + (pts[k + 1].y - pts[k].y).abs() == pitch;
        let n = pts.len();
        let mut new_cells: Vec<u32> = Vec::with_capacity(n);
        let mut verts: Vec<usize> = Vec::new();
        let mut slanted: Vec<u32> = Vec::new();
        let mut start = 0;
        while start < n {
            // a run of unit steps, ended by a hop or the branch end
            let mut end = start;
            while end + 1 < n && unit(end) {
                end += 1;
            }
            let fixed = |k: usize| {
                k == start
                    || k == end
                    || keep.contains(&cells[k])
                    || (k > start && split(pts[k - 1], pts[k]))
                    || (k < end && split(pts[k], pts[k + 1]))
            };
            let mut cand = vec![start];
            for k in start + 1..end {
                let d0 = (pts[k].x - pts[k - 1].x, pts[k].y - pts[k - 1].y);
                let d1 = (pts[k + 1].x - pts[k].x, pts[k + 1].y - pts[k].y);
                if d0 != d1 || fixed(k) || k - cand[cand.len() - 1] >= STRIDE {
                    cand.push(k);
                }
            }
            if end > start {
                cand.push(end);
            }
            verts.push(new_cells.len());
            new_cells.push(cells[start]);
            let mut c = 0;
            while c + 1 < cand.len() {
                // the next corner is always reachable along the grid path
                let mut best = (c + 1, None);
                if !fixed(cand[c + 1]) {
                    let mut misses = 0;
                    for t in c + 2..cand.len() {
                        match self.trace(grid, net, cells[cand[c]], cells[cand[t]], pending) {
                            Some(path) => best = (t, Some(path)),
                            None => {
                                misses += 1;
                                if misses > MAX_MISSES {
                                    break;
                                }
                            }
                        }
                        if fixed(cand[t]) {
                            break;
                        }
                    }
                }
                match best {
                    (t, Some(path)) => {
                        slanted.extend(&path[..path.len() - 1]);
                        new_cells.extend(path);
                        c = t;
                    }
                    (t, None) => {
                        new_cells.extend(&cells[cand[c] + 1..=cand[t]]);
                        c = t;
                    }
                }
                verts.push(new_cells.len() - 1);
            }
            start = end + 1;
        }
        verts.dedup();
        branch.cells = new_cells;
        branch.verts = verts;
        branch.slanted = slanted;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn straighten(g: &RoutingGrid, cells: Vec<u32>) -> Branch {
        let s = Straightener::new(g, 300);
        let mut b = Branch { cells, ..Default::default() };
        s.straighten(g, 0, &mut b, &FxHashSet::default(), &|_, _| false, &FxHashSet::default());
        b
    }

    #[test]
    fn axis_samples_are_cell_centers() {
        let s: Vec<Point> = interior_samples(Point::new(25, 25), Point::new(225, 25), 50).collect();
        assert_eq!(s, vec![Point::new(75, 25), Point::new(125, 25), Point::new(175, 25)]);
    }

    #[test]
    fn diagonal_samples_stay_within_a_pitch() {
        let (a, b) = (Point::new(0, 0), Point::new(300, 400));
        let mut prev = a;
        for p in interior_samples(a, b, 50).chain(std::iter::once(b)) {
            assert!(prev.dist(p) <= 50.0 + 1.0);
            prev = p;
        }
    }

    #[test]
    fn staircase_becomes_one_segment_on_open_grid() {
        let mut g = RoutingGrid::new(40, 40, 50).unwrap();
        g.set_halo_radius(5);
        let mut cells = Vec::new();
        for k in 0..10 {
            cells.push(g.index(5 + k, 5 + k));
            cells.push(g.index(6 + k, 5 + k));
        }
        let b = straighten(&g, cells.clone());
        assert_eq!(b.verts, vec![0, b.cells.len() - 1]);
        assert_eq!(b.cells.first(), cells.first());
        assert_eq!(b.cells.last(), cells.last());
        for w in b.cells.windows(2) {
            let (p, q) = (g.coords(w[0]), g.coords(w[1]));
            assert_eq!(p.0.abs_diff(q.0) + p.1.abs_diff(q.1), 1);
        }
    }

    #[test]
    fn foreign_wire_keeps_the_corner() {
        let mut g = RoutingGrid::new(40, 40, 50).unwrap();
        g.set_halo_radius(5);
        // L-shaped route; a foreign wire sits inside the bend
        let mut cells: Vec<u32> = (5..=30).map(|i| g.index(i, 5)).collect();
        cells.extend((6..=30).map(|j| g.index(30, j)));
        let foreign = g.index(22, 13);
        g.cells[foreign as usize] = super::super::grid::wire_code(1);
        let b = straighten(&g, cells.clone());
        assert_eq!((b.cells.first(), b.cells.last()), (cells.first(), cells.last()));
        assert!(b.verts.len() > 2, "the full diagonal passes too close to the foreign wire");
        let f = g.center(foreign);
        let reach = 300.0 + 50.0 * std::f64::consts::FRAC_1_SQRT_2;
        for w in b.verts.windows(2) {
            let (a, c) = (g.center(b.cells[w[0]]), g.center(b.cells[w[1]]));
            let (dx, dy) = ((c.x - a.x) as f64, (c.y - a.y) as f64);
            let t = (((f.x - a.x) as f64 * dx + (f.y - a.y) as f64 * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
            let d = ((a.x as f64 + t * dx - f.x as f64).powi(2) + (a.y as f64 + t * dy - f.y as f64).powi(2)).sqrt();
            assert!(d >= reach, "segment {a:?}-{c:?} passes {d:.0} nm from the foreign wire");
        }
    }
}
