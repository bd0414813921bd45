use std::collections::VecDeque;

use super::environment::Environment;
use super::primitives::Point2;
use super::GeomError;

/// Boolean occupancy raster over an environment's bounds. Row `iy` covers
/// `y in [origin.y + iy * res, origin.y + (iy + 1) * res)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OccupancyGrid {
    resolution_bits: u64,
    origin_bits: (u64, u64),
    pub width: usize,
    pub height: usize,
    cells: Vec<bool>,
}

impl OccupancyGrid {
    pub fn new_free(origin: Point2, resolution: f64, width: usize, height: usize) -> Self {
        Self {
            resolution_bits: resolution.to_bits(),
            origin_bits: (origin.x.to_bits(), origin.y.to_bits()),
            width,
            height,
            cells: vec![false; width * height],
        }
    }

    pub fn resolution(&self) -> f64 {
        f64::from_bits(self.resolution_bits)
    }

    pub fn origin(&self) -> Point2 {
        Point2::new(f64::from_bits(self.origin_bits.0), f64::from_bits(self.origin_bits.1))
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn get(&self, ix: usize, iy: usize) -> bool {
        self.cells[iy * self.width + ix]
    }

    pub fn set(&mut self, ix: usize, iy: usize, occupied: bool) {
        self.cells[iy * self.width + ix] = occupied;
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point2 {
        let r = self.resolution();
        let o = self.origin();
        Point2::new(o.x + (ix as f64 + 0.5) * r, o.y + (iy as f64 + 0.5) * r)
    }

    /// Cell containing `p`, or `None` when `p` is outside the grid.
    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        let r = self.resolution();
        let o = self.origin();
        let fx = ((p.x - o.x) / r).floor();
        let fy = ((p.y - o.y) / r).floor();
        if fx < 0.0 || fy < 0.0 || fx >= self.width as f64 || fy >= self.height as f64 {
            return None;
        }
        Some((fx as usize, fy as usize))
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }

    /// Occupancy grown by a disc of `cells` radius (Euclidean, in cell units).
    pub fn dilate(&self, cells: usize) -> OccupancyGrid {
        if cells == 0 {
            return self.clone();
        }
        let r = cells as i64;
        let offsets: Vec<(i64, i64)> = (-r..=r)
            .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
            .filter(|(dx, dy)| dx * dx + dy * dy <= r * r)
            .collect();
        let mut out = self.clone();
        let (w, h) = (self.width as i64, self.height as i64);
        for iy in 0..h {
            for ix in 0..w {
                if !self.cells[(iy * w + ix) as usize] {
                    continue;
                }
                for &(dx, dy) in &offsets {
                    let (x, y) = (ix + dx, iy + dy);
                    if x >= 0 && y >= 0 && x < w && y < h {
                        out.cells[(y * w + x) as usize] = true;
                    }
                }
            }
        }
        out
    }
}

/// Rasterizes `env`: a cell is occupied iff its center collides at zero inflation.
pub fn rasterize(env: &Environment, resolution: f64) -> Result<OccupancyGrid, GeomError> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(GeomError::BadResolution(resolution));
    }
    let (bw, bh) = (env.bounds.width(), env.bounds.height());
    if !(bw > 0.0 && bh > 0.0) {
        return Err(GeomError::DegenerateBounds);
    }
    // whole cells, tolerating float noise in the ratio
    let width = (bw / resolution - 1e-6).ceil().max(1.0) as usize;
    let height = (bh / resolution - 1e-6).ceil().max(1.0) as usize;
    let mut grid = OccupancyGrid::new_free(env.bounds.min, resolution, width, height);
    for o in &env.obstacles {
        let bb = o.aabb();
        let x0 = (((bb.min.x - env.bounds.min.x) / resolution).floor() as i64 - 1).max(0) as usize;
        let y0 = (((bb.min.y - env.bounds.min.y) / resolution).floor() as i64 - 1).max(0) as usize;
        let x1 = (((bb.max.x - env.bounds.min.x) / resolution).ceil() as i64 + 1).clamp(0, width as i64) as usize;
        let y1 = (((bb.max.y - env.bounds.min.y) / resolution).ceil() as i64 + 1).clamp(0, height as i64) as usize;
        for iy in y0..y1 {
            for ix in x0..x1 {
                if !grid.get(ix, iy) && o.distance_to_point(grid.cell_center(ix, iy)) <= 0.0 {
                    grid.set(ix, iy, true);
                }
            }
        }
    }
    // cells hanging past the bounds (rounding slack) count as the boundary wall
    for iy in 0..height {
        for ix in 0..width {
            let c = grid.cell_center(ix, iy);
            if !grid.get(ix, iy) && env.bounds.interior_clearance(c) <= 0.0 {
                grid.set(ix, iy, true);
            }
        }
    }
    Ok(grid)
}

/// 8-connected reachability from `start` to `goal` after dilating obstacles by
/// `ceil(inflate / resolution)` cells. Diagonal moves may not cut corners.
pub fn grid_path_exists(grid: &OccupancyGrid, start: Point2, goal: Point2, inflate: f64) -> bool {
    let (Some(s), Some(g)) = (grid.cell_of(start), grid.cell_of(goal)) else {
        return false;
    };
    let cells = (inflate / grid.resolution() - 1e-9).ceil().max(0.0) as usize;
    let blocked = grid.dilate(cells);
    if blocked.get(s.0, s.1) || blocked.get(g.0, g.1) {
        return false;
    }
    let (w, h) = (grid.width as i64, grid.height as i64);
    let free = |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h && !blocked.cells[(y * w + x) as usize];
    let mut visited = vec![false; grid.width * grid.height];
    let mut queue = VecDeque::new();
    visited[s.1 * grid.width + s.0] = true;
    queue.push_back((s.0 as i64, s.1 as i64));
    while let Some((x, y)) = queue.pop_front() {
        if (x as usize, y as usize) == g {
            return true;
        }
        for dy in -1..=1 {
            for dx in -1..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (nx, ny) = (x + dx, y + dy);
                if !free(nx, ny) {
                    continue;
                }
                if dx != 0 && dy != 0 && !(free(x + dx, y) && free(x, y + dy)) {
                    continue;
                }
                let idx = (ny * w + nx) as usize;
                if !visited[idx] {
                    visited[idx] = true;
                    queue.push_back((nx, ny));
                }
            }
        }
    }
    false
}
