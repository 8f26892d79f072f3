//! Free kinetic transport and mild propagation.
//!
//! `U(t)f = f(x - vt, v)` is evaluated semi-Lagrangianly: velocity is a
//! parameter (never interpolated), and the spatial lookup uses trilinear
//! interpolation with zero extension outside the box. The Duhamel operator
//! `W(t)F = ∫_0^t U(t-s) F(s) ds` and the damped (integrating-factor)
//! propagator both integrate in time by composite trapezoid on the uniform
//! time grid.

use crate::field::{FieldError, PhaseField};
use crate::grid::TimeGrid;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransportError {
    #[error("time index {0} outside the grid")]
    TimeIndexOutOfRange(usize),
    #[error("trajectory needs one field per time node")]
    LengthMismatch,
    #[error("trajectories/fields live on different grids")]
    GridMismatch,
    #[error("damping must be non-negative (min value {0})")]
    NegativeDamping(f64),
}

impl From<FieldError> for TransportError {
    fn from(_: FieldError) -> Self {
        TransportError::GridMismatch
    }
}

/// A time-indexed sequence of phase fields on a shared grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    fields: Vec<PhaseField>,
    tg: TimeGrid,
    /// Monitored-norm history, filled in by the solvers that build the
    /// trajectory; empty otherwise.
    pub norm_history: Vec<f64>,
}

impl Trajectory {
    pub fn new(fields: Vec<PhaseField>, tg: TimeGrid) -> Result<Self, TransportError> {
        if fields.len() != tg.len() {
            return Err(TransportError::LengthMismatch);
        }
        for f in &fields[1..] {
            fields[0].same_grids(f)?;
        }
        Ok(Trajectory {
            fields,
            tg,
            norm_history: Vec::new(),
        })
    }

    /// The free-transport trajectory `t ↦ U(t) f0`.
    pub fn free_transport(f0: &PhaseField, tg: TimeGrid) -> Self {
        let fields = (0..tg.len()).map(|k| advect(f0, tg.node(k))).collect();
        Trajectory {
            fields,
            tg,
            norm_history: Vec::new(),
        }
    }

    /// A trajectory identically equal to one field.
    pub fn constant(f: &PhaseField, tg: TimeGrid) -> Self {
        Trajectory {
            fields: vec![f.clone(); tg.len()],
            tg,
            norm_history: Vec::new(),
        }
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.tg
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn field(&self, k: usize) -> &PhaseField {
        &self.fields[k]
    }

    pub fn fields(&self) -> &[PhaseField] {
        &self.fields
    }

    /// Minimum value over all nodes and times.
    pub fn min_value(&self) -> f64 {
        self.fields
            .iter()
            .map(PhaseField::min_value)
            .fold(f64::INFINITY, f64::min)
    }

    /// Pointwise difference `self - other` node by node.
    pub fn sub(&self, other: &Trajectory) -> Result<Trajectory, TransportError> {
        if self.len() != other.len() {
            return Err(TransportError::LengthMismatch);
        }
        let fields = self
            .fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| a.sub(b))
            .collect::<Result<_, _>>()?;
        Trajectory::new(fields, self.tg)
    }

    pub fn add(&self, other: &Trajectory) -> Result<Trajectory, TransportError> {
        if self.len() != other.len() {
            return Err(TransportError::LengthMismatch);
        }
        let fields = self
            .fields
            .iter()
            .zip(&other.fields)
            .map(|(a, b)| a.add(b))
            .collect::<Result<_, _>>()?;
        Trajectory::new(fields, self.tg)
    }

    pub fn scale(&self, c: f64) -> Trajectory {
        Trajectory {
            fields: self.fields.iter().map(|f| f.scale(c)).collect(),
            tg: self.tg,
            norm_history: Vec::new(),
        }
    }

    /// Largest violation of the pointwise bound `self <= other` over all
    /// times and nodes.
    pub fn max_excess_over(&self, other: &Trajectory) -> Result<f64, TransportError> {
        if self.len() != other.len() {
            return Err(TransportError::LengthMismatch);
        }
        let mut worst = f64::NEG_INFINITY;
        for (a, b) in self.fields.iter().zip(&other.fields) {
            worst = worst.max(a.max_excess_over(b)?);
        }
        Ok(worst)
    }
}

/// Free transport `U(t)f`: semi-Lagrangian evaluation
/// `out(x, v) = f(x - v t, v)` with trilinear interpolation in `x` and zero
/// extension outside the spatial box. Exact identity at `t = 0`; negative
/// `t` gives the inverse flow `U(-t)`.
pub fn advect(f: &PhaseField, t: f64) -> PhaseField {
    let sg = *f.spatial_grid();
    let vg = *f.velocity_grid();
    if sg.is_homogeneous() || t == 0.0 {
        return f.clone();
    }
    let n = sg.points_per_axis();
    let h = sg.spacing();

    PhaseField::build_rows(sg, vg, |v_idx, out_row| {
        let v = vg.node(v_idx);
        let src = f.v_row(v_idx);
        // displacement in index units; the fractional offset is shared by
        // every output node of the row
        let s = [v[0] * t / h, v[1] * t / h, v[2] * t / h];
        let mut base_off = [0isize; 3];
        let mut w = [[0f64; 2]; 3];
        for a in 0..3 {
            let b = (-s[a]).floor();
            base_off[a] = b as isize;
            let frac = -s[a] - b;
            w[a] = [1.0 - frac, frac];
        }
        let ni = n as isize;

        // precompute the 8 corner flat offsets and weights
        let mut offs = [0isize; 8];
        let mut cw = [0f64; 8];
        let mut idx = 0;
        for ci in 0..2isize {
            for cj in 0..2isize {
                for ck in 0..2isize {
                    offs[idx] = ((base_off[0] + ci) * ni + base_off[1] + cj) * ni
                        + base_off[2]
                        + ck;
                    cw[idx] = w[0][ci as usize] * w[1][cj as usize] * w[2][ck as usize];
                    idx += 1;
                }
            }
        }
        // interior: all corners in-bounds
        let ilo: [isize; 3] = std::array::from_fn(|a| 0.max(-base_off[a]));
        let ihi: [isize; 3] = std::array::from_fn(|a| (ni - 1).min(ni - 2 - base_off[a]));

        let checked = |i: isize, j: isize, k0: isize, k1: isize, out: &mut [f64]| {
            for k in k0..=k1 {
                let mut acc = 0.0;
                let mut idx = 0;
                for ci in 0..2isize {
                    let ii = i + base_off[0] + ci;
                    for cj in 0..2isize {
                        let jj = j + base_off[1] + cj;
                        for ck in 0..2isize {
                            let kk = k + base_off[2] + ck;
                            let wgt = cw[idx];
                            idx += 1;
                            if wgt == 0.0
                                || ii < 0
                                || ii >= ni
                                || jj < 0
                                || jj >= ni
                                || kk < 0
                                || kk >= ni
                            {
                                continue;
                            }
                            acc += wgt * src[((ii * ni + jj) * ni + kk) as usize];
                        }
                    }
                }
                out[((i * ni + j) * ni + k) as usize] = acc;
            }
        };

        for i in 0..ni {
            let i_int = i >= ilo[0] && i <= ihi[0];
            for j in 0..ni {
                let j_int = i_int && j >= ilo[1] && j <= ihi[1];
                if !j_int || ilo[2] > ihi[2] {
                    checked(i, j, 0, ni - 1, out_row);
                    continue;
                }
                if ilo[2] > 0 {
                    checked(i, j, 0, ilo[2] - 1, out_row);
                }
                let len = (ihi[2] - ilo[2] + 1) as usize;
                let start = (i * ni + j) * ni + ilo[2];
                let corners: [&[f64]; 8] =
                    std::array::from_fn(|c| &src[(start + offs[c]) as usize..][..len]);
                let out = &mut out_row[start as usize..][..len];
                for (t, o) in out.iter_mut().enumerate() {
                    *o = cw[0] * corners[0][t]
                        + cw[1] * corners[1][t]
                        + cw[2] * corners[2][t]
                        + cw[3] * corners[3][t]
                        + cw[4] * corners[4][t]
                        + cw[5] * corners[5][t]
                        + cw[6] * corners[6][t]
                        + cw[7] * corners[7][t];
                }
                if ihi[2] < ni - 1 {
                    checked(i, j, ihi[2] + 1, ni - 1, out_row);
                }
            }
        }
    })
}

/// Duhamel operator at a time node: `W(t_k)F = ∫_0^{t_k} U(t_k - s) F(s) ds`
/// by composite trapezoid over the trajectory's nodes.
pub fn duhamel(source: &Trajectory, t_index: usize) -> Result<PhaseField, TransportError> {
    let tg = source.time_grid();
    if t_index >= tg.len() {
        return Err(TransportError::TimeIndexOutOfRange(t_index));
    }
    let mut out = PhaseField::zeros(*source.field(0).spatial_grid(), *source.field(0).velocity_grid());
    if t_index == 0 {
        return Ok(out);
    }
    let t_k = tg.node(t_index);
    for s in 0..=t_index {
        let w = tg.trapezoid_weight(s, t_index);
        let term = advect(source.field(s), t_k - tg.node(s));
        out = out.add(&term.scale(w))?;
    }
    Ok(out)
}

/// Mild solution of `∂_t f + v·∇_x f + f·damping = source`, `f(0) = f0`,
/// along characteristics with integrating factor:
///
/// `out(t) = U(t)f0 · e^{-∫_0^t U(t-τ)damping(τ)dτ}
///          + ∫_0^t e^{-∫_s^t U(t-τ)damping(τ)dτ} U(t-s)source(s) ds`.
///
/// All time integrals are composite trapezoid; the inner integral is
/// accumulated cumulatively per output node, keeping the cost at `O(n_t)`
/// advections per node. Output is non-negative whenever `f0` and `source`
/// are.
pub fn damped_propagate(
    f0: &PhaseField,
    source: Option<&Trajectory>,
    damping: &Trajectory,
    tg: &TimeGrid,
) -> Result<Trajectory, TransportError> {
    if damping.len() != tg.len() {
        return Err(TransportError::LengthMismatch);
    }
    if let Some(src) = source {
        if src.len() != tg.len() {
            return Err(TransportError::LengthMismatch);
        }
        f0.same_grids(src.field(0))?;
    }
    f0.same_grids(damping.field(0))?;
    if damping.min_value() < -1e-12 {
        return Err(TransportError::NegativeDamping(damping.min_value()));
    }

    let dt = tg.dt();
    let mut fields = Vec::with_capacity(tg.len());
    fields.push(f0.clone());

    for k in 1..tg.len() {
        let t_k = tg.node(k);
        // prefix integrals P_j = ∫_0^{t_j} U(t_k - τ) damping(τ) dτ
        let mut prefixes: Vec<PhaseField> = Vec::with_capacity(k + 1);
        let mut d_prev = advect(damping.field(0), t_k);
        prefixes.push(PhaseField::zeros(
            *f0.spatial_grid(),
            *f0.velocity_grid(),
        ));
        for j in 1..=k {
            let d_next = advect(damping.field(j), t_k - tg.node(j));
            let step = d_prev.add(&d_next)?.scale(0.5 * dt);
            prefixes.push(prefixes[j - 1].add(&step)?);
            d_prev = d_next;
        }
        let p_k = prefixes[k].clone();

        // homogeneous part
        let mut out = advect(f0, t_k).zip_with(&p_k, |a, p| a * (-p).exp())?;

        if let Some(src) = source {
            for (s, p_s) in prefixes.iter().enumerate() {
                let w = tg.trapezoid_weight(s, k);
                let term = advect(src.field(s), t_k - tg.node(s));
                let decay = p_k.zip_with(p_s, |pk, ps| (-(pk - ps)).exp())?;
                out = out.add(&term.mul_pointwise(&decay)?.scale(w))?;
            }
        }
        fields.push(out);
    }
    Trajectory::new(fields, *tg)
}
