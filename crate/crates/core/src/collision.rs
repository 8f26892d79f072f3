//! Quadrature evaluation of the collision operator on phase fields: the
//! gain term `Q⁺(f, g)`, the loss rate `L(g)` with `Q⁻(f, g) = f·L(g)`, and
//! the full operator `Q = Q⁺ - Q⁻`.
//!
//! The gain term at an output node is
//!
//! `Q⁺(f,g)(x,v) = Σ_{v_*} Σ_ω f(x,v') g(x,v'_*) B(v-v_*, ω) w_ω h_v³`,
//!
//! with `f(·,v')`, `g(·,v'_*)` by trilinear interpolation in `v` (zero
//! outside the box). On the uniform cell-centered grid every node pair at
//! displacement `d = (v - v_*)/h` shares its collision geometry, so the
//! interpolation stencil is computed once per `(d, ω)` and streamed across
//! all output nodes and spatial cells. The rotated hemisphere quadrature is
//! built on the frame of `û`, matching the kernel support `cosθ >= 0`.
//!
//! Everything is deterministic: work parallelizes over fixed displacement
//! chunks with per-chunk accumulators reduced in index order.

use crate::field::PhaseField;
use crate::grid::VelocityGrid;
use crate::kinematics::{grad_constant, KernelSpec, KinematicsError};
use crate::quadrature::{HemiNode, SphereQuadrature};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CollisionError {
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("epsilon_shift regularization must satisfy 0 < eps < h_v, got {0}")]
    BadEpsilonShift(f64),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// Treatment of the singular diagonal `v_* = v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DiagonalPolicy {
    /// Omit the `v_* = v` node; the missing cell contributes
    /// `O(h^{3+γ})` for `γ > -3`.
    Skip,
    /// Include the diagonal with `|v - v_*|` replaced by the given
    /// regularization length (must stay below `h_v`).
    EpsilonShift(f64),
}

/// Configuration shared by the collision kernels. Interpolation is always
/// trilinear with zero extension.
#[derive(Debug, Clone)]
pub struct CollisionConfig {
    pub kernel: KernelSpec,
    pub squad: SphereQuadrature,
    pub diagonal: DiagonalPolicy,
}

impl CollisionConfig {
    pub fn new(kernel: KernelSpec, squad: SphereQuadrature) -> Self {
        CollisionConfig {
            kernel,
            squad,
            diagonal: DiagonalPolicy::Skip,
        }
    }

    pub fn with_diagonal(mut self, policy: DiagonalPolicy) -> Self {
        self.diagonal = policy;
        self
    }

    fn validate(&self, vg: &VelocityGrid) -> Result<(), CollisionError> {
        if let DiagonalPolicy::EpsilonShift(eps) = self.diagonal {
            if !(eps > 0.0 && eps < vg.spacing()) {
                return Err(CollisionError::BadEpsilonShift(eps));
            }
        }
        Ok(())
    }

    /// Kinetic factor for the diagonal `v_* = v`, or `None` when it is
    /// omitted. The diagonal is singular only for `γ < 0`; at `γ = 0` it is
    /// regular (`|u|^0 = 1`) and always included.
    fn diagonal_kinetic(&self) -> Option<f64> {
        match self.diagonal {
            DiagonalPolicy::Skip if self.kernel.gamma() == 0.0 => Some(1.0),
            DiagonalPolicy::Skip => None,
            DiagonalPolicy::EpsilonShift(eps) => Some(self.kernel.kinetic_factor(eps)),
        }
    }
}

/// Orthonormal frame completing the unit vector `e3`.
fn frame(e3: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    // pick the axis least aligned with e3
    let a = if e3[0].abs() <= e3[1].abs() && e3[0].abs() <= e3[2].abs() {
        [1.0, 0.0, 0.0]
    } else if e3[1].abs() <= e3[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let dot = a[0] * e3[0] + a[1] * e3[1] + a[2] * e3[2];
    let mut e1 = [a[0] - dot * e3[0], a[1] - dot * e3[1], a[2] - dot * e3[2]];
    let n = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1 = [e1[0] / n, e1[1] / n, e1[2] / n];
    let e2 = [
        e3[1] * e1[2] - e3[2] * e1[1],
        e3[2] * e1[0] - e3[0] * e1[2],
        e3[0] * e1[1] - e3[1] * e1[0],
    ];
    (e1, e2)
}

/// Interpolation stencil for one `(d, ω)` pair.
///
/// Corner positions are expressed as *flat* index offsets relative to the
/// output node `iv` (the `g` offsets fold in the `-d` shift), so interior
/// nodes gather with constant offsets and no bounds checks. The per-axis
/// data reconstructs corner coordinates on the boundary shell, where
/// zero-extension applies.
struct Stencil {
    /// Flat corner offsets and weights for `f(v')`, relative to `iv`.
    o1: [isize; 8],
    cw1: [f64; 8],
    /// Flat corner offsets and weights for `g(v'_*)`, relative to `iv`.
    o2: [isize; 8],
    cw2: [f64; 8],
    /// Per-axis corner base offsets (relative to `iv` resp. `iv - d`).
    off1: [isize; 3],
    off2: [isize; 3],
    /// Interior output box: all corners of both targets in-bounds.
    ilo: [isize; 3],
    ihi: [isize; 3],
    /// Outer (productive) box: both targets have at least one in-bounds
    /// corner; outside it the contribution is identically zero.
    olo: [isize; 3],
    ohi: [isize; 3],
    /// Kernel value × quadrature weight × cell volume.
    factor: f64,
}

fn split_floor(x: f64) -> (isize, f64) {
    let f = x.floor();
    (f as isize, x - f)
}

fn corner_table(off: [isize; 3], w: [[f64; 2]; 3], n: isize, shift: [isize; 3]) -> ([isize; 8], [f64; 8]) {
    let mut offs = [0isize; 8];
    let mut weights = [0f64; 8];
    let mut idx = 0;
    for (ci, wi) in w[0].iter().enumerate() {
        for (cj, wj) in w[1].iter().enumerate() {
            for (ck, wk) in w[2].iter().enumerate() {
                let i = off[0] + ci as isize + shift[0];
                let j = off[1] + cj as isize + shift[1];
                let k = off[2] + ck as isize + shift[2];
                offs[idx] = (i * n + j) * n + k;
                weights[idx] = wi * wj * wk;
                idx += 1;
            }
        }
    }
    (offs, weights)
}

/// Builds the stencils for one displacement `d` (in cells) across all
/// hemisphere nodes. `d` must be non-zero.
fn stencils_for(
    d: [i64; 3],
    n: isize,
    h: f64,
    kernel: &KernelSpec,
    hemi: &[HemiNode],
    out: &mut Vec<Stencil>,
) {
    out.clear();
    let df = [d[0] as f64, d[1] as f64, d[2] as f64];
    let dlen = (df[0] * df[0] + df[1] * df[1] + df[2] * df[2]).sqrt();
    let kinetic = kernel.kinetic_factor(h * dlen);
    let e3 = [df[0] / dlen, df[1] / dlen, df[2] / dlen];
    let (e1, e2) = frame(e3);
    let hv3 = h * h * h;
    let di = [d[0] as isize, d[1] as isize, d[2] as isize];
    for node in hemi {
        let omega = [
            node.cos_theta * e3[0] + node.sin_cos_phi * e1[0] + node.sin_sin_phi * e2[0],
            node.cos_theta * e3[1] + node.sin_cos_phi * e1[1] + node.sin_sin_phi * e2[1],
            node.cos_theta * e3[2] + node.sin_cos_phi * e1[2] + node.sin_sin_phi * e2[2],
        ];
        // ω·u = |u| cosθ by construction; displacement in index units
        let proj = dlen * node.cos_theta;
        let s = [proj * omega[0], proj * omega[1], proj * omega[2]];
        let mut off1 = [0isize; 3];
        let mut off2 = [0isize; 3];
        let mut w1 = [[0f64; 2]; 3];
        let mut w2 = [[0f64; 2]; 3];
        for a in 0..3 {
            let (k1, f1) = split_floor(-s[a]);
            let (k2, f2) = split_floor(s[a]);
            off1[a] = k1;
            off2[a] = k2;
            w1[a] = [1.0 - f1, f1];
            w2[a] = [1.0 - f2, f2];
        }
        // interior box: iv and iv-d on the grid, all corners in-bounds;
        // outer box: at least one corner per target in-bounds (outside it
        // zero extension kills the whole term)
        let mut ilo = [0isize; 3];
        let mut ihi = [0isize; 3];
        let mut olo = [0isize; 3];
        let mut ohi = [0isize; 3];
        for a in 0..3 {
            ilo[a] = 0.max(di[a]).max(-off1[a]).max(di[a] - off2[a]);
            ihi[a] = (n - 1)
                .min(n - 1 + di[a])
                .min(n - 2 - off1[a])
                .min(di[a] + n - 2 - off2[a]);
            olo[a] = 0.max(di[a]).max(-off1[a] - 1).max(di[a] - off2[a] - 1);
            ohi[a] = (n - 1)
                .min(n - 1 + di[a])
                .min(n - 1 - off1[a])
                .min(di[a] + n - 1 - off2[a]);
        }
        let (o1, cw1) = corner_table(off1, w1, n, [0, 0, 0]);
        let (o2, cw2) = corner_table(off2, w2, n, [-di[0], -di[1], -di[2]]);
        let b = kernel.angular().eval(node.cos_theta);
        out.push(Stencil {
            o1,
            cw1,
            o2,
            cw2,
            off1,
            off2,
            ilo,
            ihi,
            olo,
            ohi,
            factor: kinetic * b * node.weight * hv3,
        });
    }
}

/// Checked single-target interpolation for boundary-shell nodes: per-axis
/// corner coordinates with zero extension outside the box.
#[inline]
fn gather_checked(
    data: &[f64],
    base: [isize; 3],
    w: (&[f64; 8], [isize; 3]),
    n: isize,
    nx3: usize,
    x0: usize,
    x1: usize,
    out: &mut [f64],
) {
    let (weights, off) = w;
    out.iter_mut().for_each(|o| *o = 0.0);
    let mut idx = 0;
    for ci in 0..2isize {
        for cj in 0..2isize {
            for ck in 0..2isize {
                let wgt = weights[idx];
                idx += 1;
                if wgt == 0.0 {
                    continue;
                }
                let i = base[0] + off[0] + ci;
                let j = base[1] + off[1] + cj;
                let k = base[2] + off[2] + ck;
                if i < 0 || i >= n || j < 0 || j >= n || k < 0 || k >= n {
                    continue;
                }
                let row = ((i * n + j) * n + k) as usize;
                let src = &data[row * nx3 + x0..row * nx3 + x1];
                for (o, s) in out.iter_mut().zip(src) {
                    *o += wgt * s;
                }
            }
        }
    }
}

/// The bilinear gain term `Q⁺(f, g)` on matching grids. Non-negative
/// whenever `f` and `g` are (all quadrature and interpolation weights are
/// non-negative).
///
/// Work is parallel over output i-planes; every output element is owned by
/// exactly one worker and accumulated in a fixed displacement order, so
/// the result is bit-identical for any thread count.
pub fn gain(
    f: &PhaseField,
    g: &PhaseField,
    cfg: &CollisionConfig,
) -> Result<PhaseField, CollisionError> {
    f.same_grids(g).map_err(|_| CollisionError::GridMismatch)?;
    let vg = *f.velocity_grid();
    let sg = *f.spatial_grid();
    cfg.validate(&vg)?;
    let n = vg.points_per_axis() as isize;
    let nx3 = sg.len();
    let h = vg.spacing();
    let hemi = cfg.squad.hemisphere_nodes();

    // displacement list in fixed lexicographic order (diagonal handled last)
    let mut displacements: Vec<[i64; 3]> = Vec::new();
    let span = (1 - n as i64)..(n as i64);
    for di in span.clone() {
        for dj in span.clone() {
            for dk in span.clone() {
                if di == 0 && dj == 0 && dk == 0 {
                    continue;
                }
                displacements.push([di, dj, dk]);
            }
        }
    }

    // stencil tables are built per displacement block to bound memory
    let block_len = (32_000_000 / (hemi.len() * std::mem::size_of::<Stencil>()))
        .clamp(128, 16384);
    let mut data = vec![0.0f64; f.len()];
    let plane = (n * n) as usize * nx3;

    for block in displacements.chunks(block_len) {
        let mut table: Vec<Stencil> = Vec::with_capacity(block.len() * hemi.len());
        let mut per_d = Vec::with_capacity(hemi.len());
        for d in block {
            stencils_for(*d, n, h, &cfg.kernel, &hemi, &mut per_d);
            table.append(&mut per_d);
        }
        data.par_chunks_mut(plane).enumerate().for_each(|(i, out_plane)| {
            let i = i as isize;
            let mut fbuf = vec![0.0f64; nx3];
            let mut gbuf = vec![0.0f64; nx3];
            for (bi, d) in block.iter().enumerate() {
                let stencils = &table[bi * hemi.len()..(bi + 1) * hemi.len()];
                accumulate_plane(f, g, *d, stencils, n, nx3, i, out_plane, &mut fbuf, &mut gbuf);
            }
        });
    }

    // diagonal: u = 0 collapses both interpolation targets to v itself,
    // contributing f(x,v)g(x,v)·kinetic·C_b·h³ when included
    if let Some(kinetic) = cfg.diagonal_kinetic() {
        let c = kinetic * grad_constant(&cfg.kernel) * vg.cell_volume();
        for (slot, (a, b)) in data.iter_mut().zip(f.data().iter().zip(g.data())) {
            *slot += c * a * b;
        }
    }

    Ok(PhaseField::from_data(sg, vg, data))
}

/// Accumulates one displacement's contributions into one output i-plane.
#[allow(clippy::too_many_arguments)]
fn accumulate_plane(
    f: &PhaseField,
    g: &PhaseField,
    d: [i64; 3],
    stencils: &[Stencil],
    n: isize,
    nx3: usize,
    i: isize,
    out_plane: &mut [f64],
    fbuf: &mut [f64],
    gbuf: &mut [f64],
) {
    // output nodes where v_* = v - d stays on the grid
    let di = [d[0] as isize, d[1] as isize, d[2] as isize];
    let plo = [0.max(di[0]), 0.max(di[1]), 0.max(di[2])];
    let phi = [
        (n - 1).min(n - 1 + di[0]),
        (n - 1).min(n - 1 + di[1]),
        (n - 1).min(n - 1 + di[2]),
    ];
    if i < plo[0] || i > phi[0] {
        return;
    }
    let fd = f.data();
    let gd = g.data();
    let plane_base = i * n * n;

    for st in stencils {
        if i < st.olo[0] || i > st.ohi[0] {
            continue;
        }
        let interior_i = i >= st.ilo[0] && i <= st.ihi[0];
        let (jlo, jhi) = (st.ilo[1], st.ihi[1]);
        let (klo, khi) = (st.ilo[2], st.ihi[2]);
        let factor = st.factor;

        // interior: constant flat offsets; exact-length slice runs keep the
        // inner loops check-free and vectorizable
        if interior_i && jlo <= jhi && klo <= khi {
            let len = (khi - klo + 1) as usize;
            for j in jlo..=jhi {
                let start = plane_base + j * n + klo;
                if nx3 == 1 {
                    let out = &mut out_plane[(start - plane_base) as usize..][..len];
                    let fs: [&[f64]; 8] =
                        std::array::from_fn(|c| &fd[(start + st.o1[c]) as usize..][..len]);
                    let gs: [&[f64]; 8] =
                        std::array::from_fn(|c| &gd[(start + st.o2[c]) as usize..][..len]);
                    let w1 = &st.cw1;
                    let w2 = &st.cw2;
                    for t in 0..len {
                        let fv = w1[0] * fs[0][t]
                            + w1[1] * fs[1][t]
                            + w1[2] * fs[2][t]
                            + w1[3] * fs[3][t]
                            + w1[4] * fs[4][t]
                            + w1[5] * fs[5][t]
                            + w1[6] * fs[6][t]
                            + w1[7] * fs[7][t];
                        let gv = w2[0] * gs[0][t]
                            + w2[1] * gs[1][t]
                            + w2[2] * gs[2][t]
                            + w2[3] * gs[3][t]
                            + w2[4] * gs[4][t]
                            + w2[5] * gs[5][t]
                            + w2[6] * gs[6][t]
                            + w2[7] * gs[7][t];
                        out[t] += factor * fv * gv;
                    }
                } else {
                    for k in klo..=khi {
                        let base = start + (k - klo);
                        let out_off = (base - plane_base) as usize * nx3;
                        let out = &mut out_plane[out_off..][..nx3];
                        let fs: [&[f64]; 8] = std::array::from_fn(|c| {
                            &fd[(base + st.o1[c]) as usize * nx3..][..nx3]
                        });
                        let gs: [&[f64]; 8] = std::array::from_fn(|c| {
                            &gd[(base + st.o2[c]) as usize * nx3..][..nx3]
                        });
                        let w1 = &st.cw1;
                        let w2 = &st.cw2;
                        for (x, o) in out.iter_mut().enumerate() {
                            let fv = w1[0] * fs[0][x]
                                + w1[1] * fs[1][x]
                                + w1[2] * fs[2][x]
                                + w1[3] * fs[3][x]
                                + w1[4] * fs[4][x]
                                + w1[5] * fs[5][x]
                                + w1[6] * fs[6][x]
                                + w1[7] * fs[7][x];
                            let gv = w2[0] * gs[0][x]
                                + w2[1] * gs[1][x]
                                + w2[2] * gs[2][x]
                                + w2[3] * gs[3][x]
                                + w2[4] * gs[4][x]
                                + w2[5] * gs[5][x]
                                + w2[6] * gs[6][x]
                                + w2[7] * gs[7][x];
                            *o += factor * fv * gv;
                        }
                    }
                }
            }
        }

        // boundary shell: pair-box minus interior, checked gathers
        let mut shell =
            |j: isize, k0: isize, k1: isize, fbuf: &mut [f64], gbuf: &mut [f64]| {
                for k in k0..=k1 {
                    gather_checked(fd, [i, j, k], (&st.cw1, st.off1), n, nx3, 0, nx3, fbuf);
                    gather_checked(
                        gd,
                        [i - di[0], j - di[1], k - di[2]],
                        (&st.cw2, st.off2),
                        n,
                        nx3,
                        0,
                        nx3,
                        gbuf,
                    );
                    let off = (j * n + k) as usize * nx3;
                    let out = &mut out_plane[off..off + nx3];
                    for ((o, a), b) in out.iter_mut().zip(fbuf.iter()).zip(gbuf.iter()) {
                        *o += factor * a * b;
                    }
                }
            };

        // shell: outer box minus interior (a skin at most one cell thick)
        for j in st.olo[1]..=st.ohi[1] {
            let j_interior = interior_i && j >= jlo && j <= jhi;
            if !j_interior || klo > khi {
                shell(j, st.olo[2], st.ohi[2], fbuf, gbuf);
            } else {
                if st.olo[2] < klo {
                    shell(j, st.olo[2], klo - 1, fbuf, gbuf);
                }
                if khi < st.ohi[2] {
                    shell(j, khi + 1, st.ohi[2], fbuf, gbuf);
                }
            }
        }
    }
}

/// The loss rate `L(g)(x, v) = C_b · Σ_{v_*} g(x, v_*) |v - v_*|^γ h_v³`
/// with the diagonal handled by the configured policy. `Q⁻(f, g) = f·L(g)`.
pub fn loss_rate(g: &PhaseField, cfg: &CollisionConfig) -> Result<PhaseField, CollisionError> {
    let vg = *g.velocity_grid();
    let sg = *g.spatial_grid();
    cfg.validate(&vg)?;
    let n = vg.points_per_axis() as isize;
    let h = vg.spacing();
    let cb = grad_constant(&cfg.kernel);
    let hv3 = vg.cell_volume();
    let gamma = cfg.kernel.gamma();

    // |h·d|^γ lookup over displacement magnitudes: index by d²
    let max_dsq = (3 * (n as i64 - 1) * (n as i64 - 1)) as usize;
    let mut kin = vec![0.0f64; max_dsq + 1];
    for (dsq, slot) in kin.iter_mut().enumerate().skip(1) {
        *slot = (h * (dsq as f64).sqrt()).powf(gamma);
    }
    kin[0] = cfg.diagonal_kinetic().unwrap_or(0.0);

    let out = PhaseField::build_rows(sg, vg, |v_out, out_row| {
        let n64 = n as i64;
        let k_out = (v_out % n as usize) as i64;
        let j_out = ((v_out / n as usize) % n as usize) as i64;
        let i_out = (v_out / (n as usize * n as usize)) as i64;
        out_row.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n64 {
            let di = i_out - i;
            for j in 0..n64 {
                let dj = j_out - j;
                let base_dsq = di * di + dj * dj;
                for k in 0..n64 {
                    let dk = k_out - k;
                    let dsq = (base_dsq + dk * dk) as usize;
                    let w = kin[dsq];
                    if w == 0.0 {
                        continue;
                    }
                    let src = g.v_row(((i * n64 + j) * n64 + k) as usize);
                    for (dst, s) in out_row.iter_mut().zip(src) {
                        *dst += w * s;
                    }
                }
            }
        }
        let scale = cb * hv3;
        out_row.iter_mut().for_each(|x| *x *= scale);
    });
    Ok(out)
}

/// Evaluates the loss rate at an arbitrary velocity point (used by
/// closed-form oracles): `C_b Σ_j g(x, v_j)|v - v_j|^γ h³`, skipping nodes
/// within `1e-12` of `v`.
pub fn loss_rate_at(
    g: &PhaseField,
    cfg: &CollisionConfig,
    x_idx: usize,
    v: [f64; 3],
) -> Result<f64, CollisionError> {
    let vg = g.velocity_grid();
    cfg.validate(vg)?;
    let gamma = cfg.kernel.gamma();
    let mut acc = 0.0;
    for v_idx in 0..vg.len() {
        let vj = vg.node(v_idx);
        let du = [v[0] - vj[0], v[1] - vj[1], v[2] - vj[2]];
        let dist = (du[0] * du[0] + du[1] * du[1] + du[2] * du[2]).sqrt();
        if dist < 1e-12 {
            continue;
        }
        acc += g.get(x_idx, v_idx) * dist.powf(gamma);
    }
    Ok(acc * grad_constant(&cfg.kernel) * vg.cell_volume())
}

/// The full collision operator `Q(f, f) = Q⁺(f, f) - f·L(f)`.
pub fn collide(f: &PhaseField, cfg: &CollisionConfig) -> Result<PhaseField, CollisionError> {
    let gain_term = gain(f, f, cfg)?;
    let loss = loss_rate(f, cfg)?;
    let q = gain_term.sub(&f.mul_pointwise(&loss).expect("same grids"))
        .expect("same grids");
    Ok(q)
}

/// Weak-form velocity moments `∫ field·φ dv` at one spatial cell for the
/// collision invariants `φ ∈ {1, v₁, v₂, v₃, |v|²}`.
pub fn weak_moments(field: &PhaseField, x_idx: usize) -> [f64; 5] {
    let vg = field.velocity_grid();
    let hv3 = vg.cell_volume();
    let mut m = [0.0f64; 5];
    for v_idx in 0..vg.len() {
        let v = vg.node(v_idx);
        let val = field.get(x_idx, v_idx);
        m[0] += val;
        m[1] += val * v[0];
        m[2] += val * v[1];
        m[3] += val * v[2];
        m[4] += val * (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    }
    for mi in m.iter_mut() {
        *mi *= hv3;
    }
    m
}
