//! Uniform routing grid with per-cell ownership.

use std::collections::HashSet;

use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};

use crate::geometry::{Angle, OrientedRect, Point, Region};
use crate::model::{KindLibrary, ProcessSpec};
use crate::vision::ObservedField;
use crate::{Error, Result};

// Cell ownership codes. Nets are numbered from 0; each net owns two codes,
// one for its wire cells and one for the keep-out halo around them.
pub const FREE: u32 = 0;
pub const BLOCKED: u32 = 1;
/// Halo of two or more nets: nobody may enter.
pub const MULTI: u32 = 2;

#[inline]
pub fn halo_code(net: u32) -> u32 {
    3 + 2 * net
}

#[inline]
pub fn wire_code(net: u32) -> u32 {
    4 + 2 * net
}

/// `(net, is_wire)` for a net-owned code.
#[inline]
pub fn owner_of(code: u32) -> Option<(u32, bool)> {
    (code >= 3).then(|| ((code - 3) / 2, code % 2 == 0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinSite {
    pub id: String,
    pub x_nm: f64,
    pub y_nm: f64,
    pub contact_area_nm2: i64,
    /// Landing cell as `[i, j]`, absent when the pin falls off the grid.
    pub cell: Option<(u32, u32)>,
}

/// An observed component as the router sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSite {
    pub obs_id: u32,
    pub kind: String,
    pub x_nm: i64,
    pub y_nm: i64,
    pub theta_deg: Angle,
    pub body: (i64, i64),
    pub pins: Vec<PinSite>,
    /// Two pins share a landing cell or a pin is off the grid.
    pub pin_conflict: bool,
}

impl ComponentSite {
    pub fn outline(&self) -> OrientedRect {
        OrientedRect::new(Point::new(self.x_nm, self.y_nm), self.body, self.theta_deg)
    }
}

/// Landing cell of a point: nearest cell center, ties toward the lower index.
pub fn snap(coord_nm: f64, pitch: i64) -> i64 {
    (coord_nm / pitch as f64).ceil() as i64 - 1
}

#[derive(Clone)]
pub struct RoutingGrid {
    pub pitch: i64,
    pub nx: usize,
    pub ny: usize,
    pub region: Region,
    pub(crate) cells: Vec<u32>,
    pub components: Vec<ComponentSite>,
    pub(crate) halo_radius: usize,
    /// Cells spanned by committed bridges.
    pub(crate) bridged: FxHashSet<u32>,
    /// Reserved pin landing cells; never bridged over.
    pub(crate) pin_cells: FxHashSet<u32>,
}

impl std::fmt::Debug for RoutingGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RoutingGrid")
            .field("pitch", &self.pitch)
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("components", &self.components.len())
            .finish()
    }
}

impl RoutingGrid {
    /// An empty `nx × ny` grid with no components.
    pub fn new(nx: usize, ny: usize, pitch: i64) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidInput(format!("routing grid must be at least 2×2 cells, got {nx}×{ny}")));
        }
        if (nx as u64) * (ny as u64) >= u32::MAX as u64 {
            return Err(Error::Limit(format!("routing grid of {nx}×{ny} cells is too large")));
        }
        Ok(RoutingGrid {
            pitch,
            nx,
            ny,
            region: Region::new(nx as i64 * pitch, ny as i64 * pitch),
            cells: vec![FREE; nx * ny],
            components: Vec::new(),
            halo_radius: 0,
            bridged: FxHashSet::default(),
            pin_cells: FxHashSet::default(),
        })
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> u32 {
        (j * self.nx + i) as u32
    }

    #[inline]
    pub fn coords(&self, idx: u32) -> (usize, usize) {
        (idx as usize % self.nx, idx as usize / self.nx)
    }

    /// Center of a cell in nm.
    pub fn center(&self, idx: u32) -> Point {
        let (i, j) = self.coords(idx);
        Point::new(i as i64 * self.pitch + self.pitch / 2, j as i64 * self.pitch + self.pitch / 2)
    }

    pub fn owner(&self, idx: u32) -> u32 {
        self.cells[idx as usize]
    }

    pub fn is_blocked(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.nx + i] == BLOCKED
    }

    pub fn blocked_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c == BLOCKED).count()
    }

    pub fn set_blocked(&mut self, i: usize, j: usize) {
        let idx = j * self.nx + i;
        self.cells[idx] = BLOCKED;
    }

    pub fn halo_radius(&self) -> usize {
        self.halo_radius
    }

    /// Keep-out radius in cells around every wire cell.
    pub fn set_halo_radius(&mut self, r: usize) {
        self.halo_radius = r;
    }

    /// Radius that keeps wires of width `w_max` at least `spacing` apart.
    pub fn halo_radius_for(w_max: i64, spacing: i64, pitch: i64) -> usize {
        let steps = (w_max + spacing + pitch - 1) / pitch;
        (steps - 1).max(0) as usize
    }

    /// Clears ownership back to bare bodies: every body cell is blocked except
    /// pin landing cells.
    pub(crate) fn reset_base(&mut self) {
        self.cells.fill(FREE);
        self.bridged.clear();
        self.pin_cells.clear();
        let p = self.pitch as f64;
        let comps = std::mem::take(&mut self.components);
        for c in &comps {
            let rect = c.outline();
            let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
            for (x, y) in rect.corners() {
                lo_x = lo_x.min(x);
                lo_y = lo_y.min(y);
                hi_x = hi_x.max(x);
                hi_y = hi_y.max(y);
            }
            let i0 = ((lo_x / p - 0.5).floor().max(0.0)) as usize;
            let j0 = ((lo_y / p - 0.5).floor().max(0.0)) as usize;
            let i1 = ((hi_x / p - 0.5).ceil().max(0.0) as usize).min(self.nx - 1);
            let j1 = ((hi_y / p - 0.5).ceil().max(0.0) as usize).min(self.ny - 1);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    let (cx, cy) = ((i as f64 + 0.5) * p, (j as f64 + 0.5) * p);
                    if rect.contains_strict(cx, cy) {
                        self.cells[j * self.nx + i] = BLOCKED;
                    }
                }
            }
        }
        for c in &comps {
            for pin in &c.pins {
                if let Some((i, j)) = pin.cell {
                    self.cells[j as usize * self.nx + i as usize] = FREE;
                }
            }
        }
        self.components = comps;
    }

    /// Marks cells as wire of `net` and stamps the halo around them.
    pub(crate) fn commit_cells(&mut self, net: u32, cells: &[u32]) {
        let w = wire_code(net);
        for &c in cells {
            self.cells[c as usize] = w;
        }
        self.stamp_halo(net, cells);
    }

    pub(crate) fn stamp_halo(&mut self, net: u32, cells: &[u32]) {
        self.stamp_halo_radius(net, cells, self.halo_radius);
    }

    pub(crate) fn stamp_halo_radius(&mut self, net: u32, cells: &[u32], radius: usize) {
        let r = radius as i64;
        if r == 0 {
            return;
        }
        let h = halo_code(net);
        let (nx, ny) = (self.nx as i64, self.ny as i64);
        let mut prev: Option<(i64, i64)> = None;
        for &c in cells {
            let (ci, cj) = self.coords(c);
            let (ci, cj) = (ci as i64, cj as i64);
            // a unit step only exposes one new row or column of the square
            let (xs, ys) = match prev {
                Some((pi, pj)) if (pi - ci).abs() + (pj - cj).abs() == 1 => {
                    if pi != ci {
                        let x = ci + r * (ci - pi);
                        ((x, x), (cj - r, cj + r))
                    } else {
                        let y = cj + r * (cj - pj);
                        ((ci - r, ci + r), (y, y))
                    }
                }
                _ => ((ci - r, ci + r), (cj - r, cj + r)),
            };
            prev = Some((ci, cj));
            for y in ys.0.max(0)..=ys.1.min(ny - 1) {
                let row = (y * nx) as usize;
                for x in xs.0.max(0)..=xs.1.min(nx - 1) {
                    let cell = &mut self.cells[row + x as usize];
                    *cell = match *cell {
                        FREE => h,
                        v if v == h => v,
                        v if owner_of(v).is_some_and(|(_, wire)| !wire) => MULTI,
                        v => v,
                    };
                }
            }
        }
    }

    /// Claims the free cells around a reserved pin out to `radius` as halo of
    /// its net, so that other nets leave room to reach the pin.
    pub(crate) fn stamp_access(&mut self, net: u32, cell: u32, radius: usize) {
        let h = halo_code(net);
        let (ci, cj) = self.coords(cell);
        let r = radius as i64;
        let (ci, cj) = (ci as i64, cj as i64);
        for y in (cj - r).max(0)..=(cj + r).min(self.ny as i64 - 1) {
            let row = (y * self.nx as i64) as usize;
            for x in (ci - r).max(0)..=(ci + r).min(self.nx as i64 - 1) {
                let c = &mut self.cells[row + x as usize];
                if *c == FREE {
                    *c = h;
                }
            }
        }
    }

    #[inline]
    pub(crate) fn enterable(&self, idx: u32, net: u32) -> bool {
        let v = self.cells[idx as usize];
        v == FREE || v == halo_code(net) || v == wire_code(net)
    }
}

/// Rasterizes the observed field: bodies block the cells whose centers lie
/// strictly inside them, pin landing cells stay open.
pub fn build_routing_grid(field: &ObservedField, kinds: &KindLibrary, spec: &ProcessSpec) -> Result<RoutingGrid> {
    let pitch = spec.grid_pitch;
    let nx = (field.region.width_nm / pitch).max(0) as usize;
    let ny = (field.region.height_nm / pitch).max(0) as usize;
    let mut grid = RoutingGrid::new(nx, ny, pitch)?;
    grid.region = field.region;
    let mut comps = Vec::with_capacity(field.observations.len());
    for o in &field.observations {
        let kind = kinds.require(&o.kind)?;
        let mut pins = Vec::with_capacity(kind.pins.len());
        let mut conflict = false;
        let mut seen = HashSet::new();
        for (pi, def) in kind.pins.iter().enumerate() {
            let (x, y) = kind.pin_position(pi, o.center(), o.theta_deg);
            let (i, j) = (snap(x, pitch), snap(y, pitch));
            let cell = (i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny).then_some((i as u32, j as u32));
            match cell {
                Some(c) => conflict |= !seen.insert(c),
                None => conflict = true,
            }
            pins.push(PinSite { id: def.id.clone(), x_nm: x, y_nm: y, contact_area_nm2: def.contact_area_nm2, cell });
        }
        comps.push(ComponentSite {
            obs_id: o.obs_id,
            kind: o.kind.clone(),
            x_nm: o.x_nm,
            y_nm: o.y_nm,
            theta_deg: o.theta_deg,
            body: kind.body,
            pins,
            pin_conflict: conflict,
        });
    }
    grid.components = comps;
    grid.halo_radius = RoutingGrid::halo_radius_for(spec.contact_wire_width, spec.min_wire_spacing, pitch);
    grid.reset_base();
    Ok(grid)
}
