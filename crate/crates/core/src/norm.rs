//! Weighted mixed Lebesgue norms `‖⟨v⟩^ℓ f‖` in `L^q_t L^r_x L^p_v` on the
//! truncated grids.
//!
//! The nesting is innermost-to-outermost: a discrete weighted `L^p_v` norm
//! at every spatial cell, an `L^r_x` norm over cells with `h_x³` measure,
//! and an `L^q_t` norm over the time window by composite trapezoid.
//! Infinite exponents (reciprocal `0`) use max semantics throughout.

use crate::exponents::Triplet;
use crate::field::PhaseField;
use crate::rational::Rational;
use crate::transport::Trajectory;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormError {
    #[error("reciprocal exponent {0} outside [0, 1]")]
    BadExponent(f64),
    #[error("time window [{0}, {1}] does not land on trajectory nodes")]
    WindowMismatch(f64, f64),
}

/// A mixed-norm specification: exponent triplet, velocity weight and time
/// window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub triplet: Triplet,
    pub ell: f64,
    pub window: (f64, f64),
}

impl NormSpec {
    pub fn new(triplet: Triplet, ell: f64, window: (f64, f64)) -> Self {
        NormSpec {
            triplet,
            ell,
            window,
        }
    }
}

fn exponent_from_inv(inv: f64) -> Result<Option<f64>, NormError> {
    if !(0.0..=1.0).contains(&inv) {
        return Err(NormError::BadExponent(inv));
    }
    if inv == 0.0 {
        Ok(None) // infinity
    } else {
        Ok(Some(1.0 / inv))
    }
}

/// Per-spatial-cell weighted velocity norms
/// `x ↦ (Σ_j |⟨v_j⟩^ℓ f(x, v_j)|^p h_v³)^{1/p}` (max over `v` when `p = ∞`).
pub fn velocity_norms_per_cell(
    field: &PhaseField,
    p_inv: f64,
    ell: f64,
) -> Result<Vec<f64>, NormError> {
    let p = exponent_from_inv(p_inv)?;
    let vg = field.velocity_grid();
    let nx3 = field.spatial_grid().len();
    let hv3 = vg.cell_volume();
    let weights: Vec<f64> = (0..vg.len())
        .map(|v_idx| {
            let v = vg.node(v_idx);
            let vsq = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            (1.0 + vsq).powf(0.5 * ell)
        })
        .collect();

    // Accumulate over velocity rows; parallel over fixed x-chunks, each
    // chunk scanning the rows sequentially (deterministic).
    let chunk = 512usize;
    let n_chunks = nx3.div_ceil(chunk);
    let mut out = vec![0.0; nx3];
    out.par_chunks_mut(chunk)
        .enumerate()
        .for_each(|(ci, acc)| {
            let x0 = ci * chunk;
            debug_assert!(ci < n_chunks);
            match p {
                Some(p) => {
                    for (v_idx, w) in weights.iter().enumerate() {
                        let row = &field.v_row(v_idx)[x0..x0 + acc.len()];
                        for (a, f) in acc.iter_mut().zip(row) {
                            *a += (w * f.abs()).powf(p);
                        }
                    }
                    for a in acc.iter_mut() {
                        *a = (*a * hv3).powf(1.0 / p);
                    }
                }
                None => {
                    for (v_idx, w) in weights.iter().enumerate() {
                        let row = &field.v_row(v_idx)[x0..x0 + acc.len()];
                        for (a, f) in acc.iter_mut().zip(row) {
                            *a = a.max(w * f.abs());
                        }
                    }
                }
            }
        });
    Ok(out)
}

/// Weighted velocity norm of a single spatial cell's data (used for
/// homogeneous-mode fields and test oracles).
pub fn velocity_norm(
    field: &PhaseField,
    x_idx: usize,
    p_inv: &Rational,
    ell: f64,
) -> Result<f64, NormError> {
    let per_cell = velocity_norms_per_cell(field, p_inv.to_f64(), ell)?;
    Ok(per_cell[x_idx])
}

/// The inner two layers: `L^r_x` of the weighted `L^p_v` norms.
pub fn phase_norm(field: &PhaseField, r_inv: f64, p_inv: f64, ell: f64) -> Result<f64, NormError> {
    let r = exponent_from_inv(r_inv)?;
    let per_cell = velocity_norms_per_cell(field, p_inv, ell)?;
    let hx3 = field.spatial_grid().cell_volume();
    Ok(match r {
        Some(r) => {
            let s: f64 = per_cell.iter().map(|a| a.powf(r)).sum::<f64>() * hx3;
            s.powf(1.0 / r)
        }
        None => per_cell.iter().fold(0.0f64, |m, a| m.max(*a)),
    })
}

/// The unweighted-in-structure `L^a_{x,v}` norm (same exponent in x and v)
/// with velocity weight `⟨v⟩^ℓ`.
pub fn la_norm(field: &PhaseField, a_inv: f64, ell: f64) -> Result<f64, NormError> {
    phase_norm(field, a_inv, a_inv, ell)
}

/// The full mixed norm of a trajectory for a [`NormSpec`].
///
/// The window endpoints must coincide with time-grid nodes.
pub fn mixed_norm(traj: &Trajectory, spec: &NormSpec) -> Result<f64, NormError> {
    let tg = traj.time_grid();
    let (t0, t1) = spec.window;
    let locate = |t: f64| -> Result<usize, NormError> {
        let k = (t / tg.dt()).round() as isize;
        if k < 0 || k as usize >= tg.len() || (tg.node(k as usize) - t).abs() > 1e-9 * tg.dt().max(1.0)
        {
            return Err(NormError::WindowMismatch(t0, t1));
        }
        Ok(k as usize)
    };
    let k0 = locate(t0)?;
    let k1 = locate(t1)?;
    if k1 < k0 {
        return Err(NormError::WindowMismatch(t0, t1));
    }

    let r_inv = spec.triplet.r_inv.to_f64();
    let p_inv = spec.triplet.p_inv.to_f64();
    let snapshots: Vec<f64> = (k0..=k1)
        .map(|k| phase_norm(traj.field(k), r_inv, p_inv, spec.ell))
        .collect::<Result<_, _>>()?;

    match exponent_from_inv(spec.triplet.q_inv.to_f64())? {
        Some(q) => {
            if k1 == k0 {
                return Ok(0.0);
            }
            let dt = tg.dt();
            let mut acc = 0.0;
            for (i, a) in snapshots.iter().enumerate() {
                let w = if i == 0 || i == snapshots.len() - 1 {
                    0.5 * dt
                } else {
                    dt
                };
                acc += w * a.powf(q);
            }
            Ok(acc.powf(1.0 / q))
        }
        None => Ok(snapshots.iter().fold(0.0f64, |m, a| m.max(*a))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents;
    use crate::field::maxwellian;
    use crate::grid::{SpatialGrid, TimeGrid, VelocityGrid};
    use crate::rational::Rational;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn constant_field_l2_is_volume_sqrt() {
        // f ≡ 1 on [-1, 1]³, ℓ = 0, p = 2 → sqrt(8)
        let sg = SpatialGrid::homogeneous(1.0).unwrap();
        let vg = VelocityGrid::new(1.0, 16).unwrap();
        let f = PhaseField::sample(sg, vg, |_, _| 1.0).unwrap();
        let n = velocity_norm(&f, 0, &r(1, 2), 0.0).unwrap();
        assert_relative_eq!(n, 8.0f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn maxwellian_l1_mass() {
        let sg = SpatialGrid::homogeneous(4.0).unwrap();
        let vg = VelocityGrid::new(6.0, 24).unwrap();
        let f = PhaseField::sample(sg, vg, maxwellian(1.0)).unwrap();
        let n = velocity_norm(&f, 0, &r(1, 1), 0.0).unwrap();
        assert!((n - 1.0).abs() <= 2e-3, "L1 mass = {n}");
    }

    #[test]
    fn weight_cancellation_is_exact() {
        let sg = SpatialGrid::homogeneous(2.0).unwrap();
        let vg = VelocityGrid::new(3.0, 8).unwrap();
        let g = PhaseField::sample(sg, vg, |_, v| (v[0] + 0.3).cos() + 1.5).unwrap();
        let weighted_down = PhaseField::sample(sg, vg, |x, v| {
            let vsq = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            ((v[0] + 0.3).cos() + 1.5) / (1.0 + vsq).sqrt() + 0.0 * x[0]
        })
        .unwrap();
        let a = velocity_norm(&weighted_down, 0, &r(1, 2), 1.0).unwrap();
        let b = velocity_norm(&g, 0, &r(1, 2), 0.0).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-14);
    }

    #[test]
    fn weight_consistency_invariant() {
        let sg = SpatialGrid::homogeneous(2.0).unwrap();
        let vg = VelocityGrid::new(3.0, 8).unwrap();
        let ell = 0.51;
        let f = PhaseField::sample(sg, vg, |_, v| (v[1] * 0.7).sin() + 2.0).unwrap();
        let weighted = PhaseField::sample(sg, vg, |_, v| {
            let vsq = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
            ((v[1] * 0.7).sin() + 2.0) * (1.0 + vsq).powf(0.5 * ell)
        })
        .unwrap();
        for p_inv in [1.0, 0.5, 0.4, 0.0] {
            let a = velocity_norms_per_cell(&f, p_inv, ell).unwrap()[0];
            let b = velocity_norms_per_cell(&weighted, p_inv, 0.0).unwrap()[0];
            assert_relative_eq!(a, b, epsilon = 1e-13);
        }
    }

    fn small_trajectory(decay: f64) -> (Trajectory, PhaseField) {
        let sg = SpatialGrid::homogeneous(2.0).unwrap();
        let vg = VelocityGrid::new(2.0, 6).unwrap();
        let tg = TimeGrid::new(1.0, 65).unwrap();
        let f0 = PhaseField::sample(sg, vg, maxwellian(1.0)).unwrap();
        let fields = (0..tg.len())
            .map(|k| f0.scale((-decay * tg.node(k)).exp()))
            .collect();
        (Trajectory::new(fields, tg).unwrap(), f0)
    }

    #[test]
    fn mixed_norm_constant_in_time_with_q_inf() {
        let (traj, f0) = small_trajectory(0.0);
        let t = Triplet::new(r(0, 1), r(1, 3), r(1, 3)).unwrap();
        let spec = NormSpec::new(t, 0.0, (0.0, 1.0));
        let expect = phase_norm(&f0, 1.0 / 3.0, 1.0 / 3.0, 0.0).unwrap();
        assert_relative_eq!(mixed_norm(&traj, &spec).unwrap(), expect, epsilon = 1e-13);
    }

    #[test]
    fn mixed_norm_exponential_decay_q1() {
        // ‖e^{-t} f0‖ with q = 1 → (1 - e^{-T})·‖f0‖ up to trapezoid error
        let (traj, f0) = small_trajectory(1.0);
        let t = Triplet::new(r(1, 1), r(1, 2), r(1, 2)).unwrap();
        let spec = NormSpec::new(t, 0.0, (0.0, 1.0));
        let expect = (1.0 - (-1.0f64).exp()) * phase_norm(&f0, 0.5, 0.5, 0.0).unwrap();
        let got = mixed_norm(&traj, &spec).unwrap();
        assert_relative_eq!(got, expect, max_relative = 1e-4);
    }

    #[test]
    fn homogeneous_spatial_norm_is_measure_factor() {
        // n_x = 1: L^r_x collapses to (2X)^{3/r} times the velocity norm
        let sg = SpatialGrid::homogeneous(4.0).unwrap();
        let vg = VelocityGrid::new(2.0, 6).unwrap();
        let f = PhaseField::sample(sg, vg, maxwellian(1.0)).unwrap();
        let pn = phase_norm(&f, 0.5, 1.0, 0.0).unwrap();
        let vn = velocity_norm(&f, 0, &r(1, 1), 0.0).unwrap();
        assert_relative_eq!(pn, 8.0f64.powf(3.0 * 0.5) * vn, epsilon = 1e-12);
    }

    #[test]
    fn window_mismatch_rejected() {
        let (traj, _) = small_trajectory(0.0);
        let t = Triplet::new(r(1, 2), r(1, 2), r(1, 2)).unwrap();
        let spec = NormSpec::new(t, 0.0, (0.0, 0.73));
        assert!(matches!(
            mixed_norm(&traj, &spec),
            Err(NormError::WindowMismatch(_, _))
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn monotone_and_homogeneous(seed in 0u64..1000, c in 0.1f64..10.0) {
            use rand::{Rng, SeedableRng};
            let sg = SpatialGrid::new(1.0, 2).unwrap();
            let vg = VelocityGrid::new(1.0, 4).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut vals = vec![0.0; sg.len() * vg.len()];
            for v in vals.iter_mut() {
                *v = rng.gen_range(0.0..1.0);
            }
            let f = PhaseField::sample(sg, vg, {
                let vals = vals.clone();
                let nvals = vals.len();
                move |x, v| {
                    // deterministic lookup keyed by position hash
                    let ix = ((x[0] + 1.0) * 1.0) as usize % 2;
                    let iv = (((v[0] + 1.0) * 2.0) as usize).min(3);
                    vals[(ix * 7 + iv * 13) % nvals]
                }
            }).unwrap();
            let g = f.map(|a| a + 0.5); // pointwise dominates f
            for (r_inv, p_inv) in [(0.5, 0.4), (1.0, 1.0), (0.0, 0.5), (0.3, 0.0)] {
                let nf = phase_norm(&f, r_inv, p_inv, 0.25).unwrap();
                let ng = phase_norm(&g, r_inv, p_inv, 0.25).unwrap();
                prop_assert!(nf <= ng + 1e-12);
                // absolute homogeneity
                let nscaled = phase_norm(&f.scale(c), r_inv, p_inv, 0.25).unwrap();
                prop_assert!((nscaled - c * nf).abs() <= 1e-11 * (1.0 + nscaled));
            }
        }
    }
}
