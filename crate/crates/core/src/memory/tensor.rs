use super::MemoryError;
use crate::geom::{rasterize, Environment, OccupancyGrid};

pub const GRID_SIDE: usize = 64;

/// 64×64 binary occupancy image, one `u64` per row (bit `x` of row `y`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridTensor {
    rows: [u64; GRID_SIDE],
}

impl Default for GridTensor {
    fn default() -> Self {
        Self { rows: [0; GRID_SIDE] }
    }
}

impl GridTensor {
    pub fn get(&self, x: usize, y: usize) -> bool {
        (self.rows[y] >> x) & 1 == 1
    }

    pub fn set(&mut self, x: usize, y: usize, v: bool) {
        if v {
            self.rows[y] |= 1 << x;
        } else {
            self.rows[y] &= !(1 << x);
        }
    }

    pub fn rows(&self) -> &[u64; GRID_SIDE] {
        &self.rows
    }

    pub fn from_rows(rows: [u64; GRID_SIDE]) -> Self {
        Self { rows }
    }

    pub fn count_ones(&self) -> u32 {
        self.rows.iter().map(|r| r.count_ones()).sum()
    }

    pub fn hamming(&self, other: &GridTensor) -> u32 {
        self.rows.iter().zip(&other.rows).map(|(a, b)| (a ^ b).count_ones()).sum()
    }

    /// Copies a 64×64 occupancy grid.
    pub fn from_occupancy(g: &OccupancyGrid) -> Result<Self, MemoryError> {
        if g.width != GRID_SIDE || g.height != GRID_SIDE {
            return Err(MemoryError::Shape(g.width, g.height));
        }
        let mut t = Self::default();
        for y in 0..GRID_SIDE {
            for x in 0..GRID_SIDE {
                if g.get(x, y) {
                    t.set(x, y, true);
                }
            }
        }
        Ok(t)
    }

    /// Rasterizes `env` so that its longer side spans 64 cells. Cells past the
    /// shorter side count as occupied.
    pub fn from_env(env: &Environment) -> Result<Self, MemoryError> {
        let side = env.bounds.width().max(env.bounds.height());
        let g = rasterize(env, side / GRID_SIDE as f64)?;
        let mut t = Self::default();
        for y in 0..GRID_SIDE {
            for x in 0..GRID_SIDE {
                if x >= g.width || y >= g.height || g.get(x, y) {
                    t.set(x, y, true);
                }
            }
        }
        Ok(t)
    }

    /// Row-major 0/1 values.
    pub fn to_values<T: num_traits::Float>(&self, out: &mut [T]) {
        for y in 0..GRID_SIDE {
            for x in 0..GRID_SIDE {
                out[y * GRID_SIDE + x] = if self.get(x, y) { T::one() } else { T::zero() };
            }
        }
    }
}
