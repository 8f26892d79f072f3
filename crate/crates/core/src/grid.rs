//! Truncated phase-space and time grids.
//!
//! Velocity and space live on uniform cell-centered grids in `[-V, V]³` and
//! `[-X, X]³`; fields are identically zero outside the boxes. Cell-centered
//! nodes with an even velocity count keep every node away from the origin
//! and every distinct node pair at relative distance `>= h_v`, which tames
//! the `|v - v_*|^γ` singularity under the diagonal-skip policy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("velocity grid needs an even points_per_axis >= 4, got {0}")]
    BadVelocityCount(usize),
    #[error("spatial grid needs points_per_axis >= 1, got {0}")]
    BadSpatialCount(usize),
    #[error("half extent must be positive, got {0}")]
    BadExtent(f64),
    #[error("time grid needs at least 2 nodes and positive final time")]
    BadTimeGrid,
}

/// Uniform cell-centered velocity grid on `[-V, V]³`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityGrid {
    half_extent: f64,
    points_per_axis: usize,
}

/// Uniform cell-centered spatial grid on `[-X, X]³`; a single point per
/// axis selects the spatially homogeneous mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    half_extent: f64,
    points_per_axis: usize,
}

macro_rules! axis_impl {
    ($ty:ty) => {
        impl $ty {
            pub fn half_extent(&self) -> f64 {
                self.half_extent
            }

            pub fn points_per_axis(&self) -> usize {
                self.points_per_axis
            }

            /// Grid spacing along one axis.
            pub fn spacing(&self) -> f64 {
                2.0 * self.half_extent / self.points_per_axis as f64
            }

            /// Cell volume.
            pub fn cell_volume(&self) -> f64 {
                let h = self.spacing();
                h * h * h
            }

            /// Total number of nodes.
            pub fn len(&self) -> usize {
                self.points_per_axis.pow(3)
            }

            pub fn is_empty(&self) -> bool {
                false
            }

            /// Coordinate of the cell center with per-axis index `i`.
            pub fn coord(&self, i: usize) -> f64 {
                -self.half_extent + (i as f64 + 0.5) * self.spacing()
            }

            /// 3-D node position for a flattened index (x-fastest within the
            /// axis triple: `idx = (i * n + j) * n + k`).
            pub fn node(&self, idx: usize) -> [f64; 3] {
                let n = self.points_per_axis;
                let k = idx % n;
                let j = (idx / n) % n;
                let i = idx / (n * n);
                [self.coord(i), self.coord(j), self.coord(k)]
            }

            pub fn flat_index(&self, i: usize, j: usize, k: usize) -> usize {
                let n = self.points_per_axis;
                (i * n + j) * n + k
            }
        }
    };
}

axis_impl!(VelocityGrid);
axis_impl!(SpatialGrid);

impl VelocityGrid {
    pub fn new(half_extent: f64, points_per_axis: usize) -> Result<Self, GridError> {
        if !(half_extent > 0.0) {
            return Err(GridError::BadExtent(half_extent));
        }
        if points_per_axis < 4 || points_per_axis % 2 != 0 {
            return Err(GridError::BadVelocityCount(points_per_axis));
        }
        Ok(VelocityGrid {
            half_extent,
            points_per_axis,
        })
    }
}

impl SpatialGrid {
    pub fn new(half_extent: f64, points_per_axis: usize) -> Result<Self, GridError> {
        if !(half_extent > 0.0) {
            return Err(GridError::BadExtent(half_extent));
        }
        if points_per_axis < 1 {
            return Err(GridError::BadSpatialCount(points_per_axis));
        }
        Ok(SpatialGrid {
            half_extent,
            points_per_axis,
        })
    }

    /// Spatially homogeneous mode: one cell covering the whole box.
    pub fn homogeneous(half_extent: f64) -> Result<Self, GridError> {
        SpatialGrid::new(half_extent, 1)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.points_per_axis == 1
    }
}

/// Uniform time grid `t_k = k·Δt` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_final: f64,
    n_t: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, n_t: usize) -> Result<Self, GridError> {
        if n_t < 2 || !(t_final > 0.0) {
            return Err(GridError::BadTimeGrid);
        }
        Ok(TimeGrid { t_final, n_t })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn len(&self) -> usize {
        self.n_t
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dt(&self) -> f64 {
        self.t_final / (self.n_t - 1) as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    /// Trapezoid weight of node `k` for integration over `[0, t_upto]`,
    /// `upto` being a node index.
    pub fn trapezoid_weight(&self, k: usize, upto: usize) -> f64 {
        if k > upto || upto == 0 {
            return 0.0;
        }
        if k == 0 || k == upto {
            0.5 * self.dt()
        } else {
            self.dt()
        }
    }

    /// A grid with the same window and doubled resolution; node sets nest.
    pub fn refined(&self) -> TimeGrid {
        TimeGrid {
            t_final: self.t_final,
            n_t: 2 * self.n_t - 1,
        }
    }
}
