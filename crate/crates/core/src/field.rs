//! Phase-space fields `f(x, v)` sampled on truncated grids.
//!
//! Storage is row-per-velocity-node: `data[v_idx * n_x³ + x_idx]`, so that
//! the spatial dimension is contiguous. The collision kernels stream over
//! x-rows in their innermost loops and the transport operator translates
//! whole rows; both want exactly this layout. Logical indexing in the
//! public API stays `(x, v)`.
//!
//! Fields are immutable after construction. Parallel construction maps over
//! velocity rows; each row is filled sequentially, so results do not depend
//! on the thread count.

use crate::grid::{SpatialGrid, VelocityGrid};
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("grids do not match between operands")]
    GridMismatch,
    #[error("non-finite value {value} sampled at x={x:?}, v={v:?}")]
    NonFinite { value: f64, x: [f64; 3], v: [f64; 3] },
}

/// A sampled phase-space density with cached minimum for positivity
/// monitoring.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    data: Vec<f64>,
    sgrid: SpatialGrid,
    vgrid: VelocityGrid,
    min_value: f64,
}

impl PhaseField {
    /// The all-zero field.
    pub fn zeros(sgrid: SpatialGrid, vgrid: VelocityGrid) -> Self {
        PhaseField {
            data: vec![0.0; sgrid.len() * vgrid.len()],
            sgrid,
            vgrid,
            min_value: 0.0,
        }
    }

    /// Pointwise evaluation of a closed form at the cell centers.
    /// Fails on NaN/Inf values.
    pub fn sample<F>(sgrid: SpatialGrid, vgrid: VelocityGrid, f: F) -> Result<Self, FieldError>
    where
        F: Fn([f64; 3], [f64; 3]) -> f64 + Sync,
    {
        let nx3 = sgrid.len();
        let mut data = vec![0.0; nx3 * vgrid.len()];
        let bad = data
            .par_chunks_mut(nx3)
            .enumerate()
            .map(|(v_idx, row)| {
                let v = vgrid.node(v_idx);
                for (x_idx, slot) in row.iter_mut().enumerate() {
                    let x = sgrid.node(x_idx);
                    let val = f(x, v);
                    if !val.is_finite() {
                        return Some(FieldError::NonFinite { value: val, x, v });
                    }
                    *slot = val;
                }
                None
            })
            .find_map_first(|e| e);
        if let Some(e) = bad {
            return Err(e);
        }
        Ok(PhaseField::from_data(sgrid, vgrid, data))
    }

    /// Wraps raw data in v-major layout. Internal constructor for the
    /// operator kernels; recomputes the cached minimum.
    pub(crate) fn from_data(sgrid: SpatialGrid, vgrid: VelocityGrid, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), sgrid.len() * vgrid.len());
        let min_value = data
            .par_chunks(4096.max(sgrid.len()))
            .map(|c| c.iter().copied().fold(f64::INFINITY, f64::min))
            .reduce(|| f64::INFINITY, f64::min);
        PhaseField {
            data,
            sgrid,
            vgrid,
            min_value: if min_value.is_finite() { min_value } else { 0.0 },
        }
    }

    pub fn spatial_grid(&self) -> &SpatialGrid {
        &self.sgrid
    }

    pub fn velocity_grid(&self) -> &VelocityGrid {
        &self.vgrid
    }

    /// Cached minimum over all nodes.
    pub fn min_value(&self) -> f64 {
        self.min_value
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, x_idx: usize, v_idx: usize) -> f64 {
        self.data[v_idx * self.sgrid.len() + x_idx]
    }

    /// Contiguous spatial row for one velocity node.
    pub fn v_row(&self, v_idx: usize) -> &[f64] {
        let nx3 = self.sgrid.len();
        &self.data[v_idx * nx3..(v_idx + 1) * nx3]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn same_grids(&self, other: &PhaseField) -> Result<(), FieldError> {
        if self.sgrid != other.sgrid || self.vgrid != other.vgrid {
            return Err(FieldError::GridMismatch);
        }
        Ok(())
    }

    /// Builds a field by mapping over velocity rows in parallel; `fill`
    /// writes one spatial row for the given velocity index.
    pub(crate) fn build_rows<F>(sgrid: SpatialGrid, vgrid: VelocityGrid, fill: F) -> Self
    where
        F: Fn(usize, &mut [f64]) + Sync,
    {
        let nx3 = sgrid.len();
        let mut data = vec![0.0; nx3 * vgrid.len()];
        data.par_chunks_mut(nx3)
            .enumerate()
            .for_each(|(v_idx, row)| fill(v_idx, row));
        PhaseField::from_data(sgrid, vgrid, data)
    }

    /// Pointwise binary combination; grids must match.
    pub fn zip_with<F>(&self, other: &PhaseField, f: F) -> Result<PhaseField, FieldError>
    where
        F: Fn(f64, f64) -> f64 + Sync,
    {
        self.same_grids(other)?;
        let data: Vec<f64> = self
            .data
            .par_iter()
            .zip(other.data.par_iter())
            .map(|(a, b)| f(*a, *b))
            .collect();
        Ok(PhaseField::from_data(self.sgrid, self.vgrid, data))
    }

    pub fn map<F>(&self, f: F) -> PhaseField
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let data: Vec<f64> = self.data.par_iter().map(|a| f(*a)).collect();
        PhaseField::from_data(self.sgrid, self.vgrid, data)
    }

    pub fn add(&self, other: &PhaseField) -> Result<PhaseField, FieldError> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &PhaseField) -> Result<PhaseField, FieldError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul_pointwise(&self, other: &PhaseField) -> Result<PhaseField, FieldError> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: f64) -> PhaseField {
        self.map(|a| c * a)
    }

    /// Sup norm over all nodes.
    pub fn linf(&self) -> f64 {
        self.data
            .par_chunks(4096)
            .map(|c| c.iter().fold(0.0f64, |m, x| m.max(x.abs())))
            .reduce(|| 0.0, f64::max)
    }

    /// Largest violation of `self <= other` (positive when the bound
    /// fails somewhere); grids must match.
    pub fn max_excess_over(&self, other: &PhaseField) -> Result<f64, FieldError> {
        self.same_grids(other)?;
        Ok(self
            .data
            .par_chunks(4096)
            .zip(other.data.par_chunks(4096))
            .map(|(a, b)| {
                a.iter()
                    .zip(b)
                    .fold(f64::NEG_INFINITY, |m, (x, y)| m.max(x - y))
            })
            .reduce(|| f64::NEG_INFINITY, f64::max))
    }

    /// Flags fields whose per-cell jump is large relative to their sup
    /// norm — a sign the grid underresolves the profile.
    pub fn underresolved(&self, rel_jump_threshold: f64) -> bool {
        let scale = self.linf();
        if scale == 0.0 {
            return false;
        }
        let nv = self.vgrid.points_per_axis();
        let nx3 = self.sgrid.len();
        // scan v-adjacent node pairs along the fastest axis
        let mut max_jump = 0.0f64;
        for v_idx in 0..self.vgrid.len() {
            if v_idx % nv == nv - 1 {
                continue;
            }
            let a = self.data[v_idx * nx3];
            let b = self.data[(v_idx + 1) * nx3];
            max_jump = max_jump.max((a - b).abs());
        }
        max_jump / scale > rel_jump_threshold
    }
}

/// The unit-mass Maxwellian `M(v) = (2π)^{-3/2} exp(-|v|²/2)` scaled by
/// `amplitude`, constant in `x`.
pub fn maxwellian(amplitude: f64) -> impl Fn([f64; 3], [f64; 3]) -> f64 {
    move |_x, v| {
        let vsq = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        amplitude * (2.0 * std::f64::consts::PI).powf(-1.5) * (-0.5 * vsq).exp()
    }
}

/// An isotropic Gaussian bump `a·exp(-(|x|² + |v|²)/(2w²))` (the `x` part is
/// dropped in homogeneous mode, where the single cell sits at the origin).
pub fn gaussian_bump(amplitude: f64, width: f64) -> impl Fn([f64; 3], [f64; 3]) -> f64 {
    move |x, v| {
        let sq = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        amplitude * (-0.5 * sq / (width * width)).exp()
    }
}
