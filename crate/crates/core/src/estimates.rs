//! Numerical stress-testing of the bilinear and Strichartz inequalities.
//!
//! Each probe samples a seeded family of non-negative velocity profiles,
//! evaluates both sides of an inequality by quadrature, and reports the
//! empirical ratio statistics. Exponent relations are validated through
//! the exact rational layer before any floating point runs. The reported
//! constants are observations, never compared against the (non-explicit)
//! constants of the estimates themselves; the testable contract is that
//! `max_ratio` stays finite and stable as the sample count grows.

use crate::collision::{gain, loss_rate, CollisionConfig, CollisionError};
use crate::exponents::{
    check_weighted_scaling, harmonic_mean, is_endpoint, is_kt_admissible, ExponentError, SpaceDim,
    Triplet,
};
use crate::field::PhaseField;
use crate::grid::{SpatialGrid, TimeGrid, VelocityGrid};
use crate::norm::{la_norm, mixed_norm, velocity_norms_per_cell, NormError, NormSpec};
use crate::rational::Rational;
use crate::transport::Trajectory;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("exponent relation violated: {0}")]
    ScalingViolated(String),
    #[error("triplet must be KT-admissible and non-endpoint for the Strichartz probe")]
    InadmissibleTriplet,
    #[error("loss probe requires 1/p < 1/r (pass explore=true to study the violation)")]
    LossConstraintViolated,
    #[error(transparent)]
    Exponent(#[from] ExponentError),
    #[error(transparent)]
    Collision(#[from] CollisionError),
    #[error(transparent)]
    Norm(#[from] NormError),
}

/// Families of sampled velocity profiles. All samples are non-negative
/// with centers in `[-V/2, V/2]³`, widths in `[0.3, 2]` and 1–4 components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FamilyKind {
    GaussianMixture,
    AnisotropicGaussian,
    PolynomialTimesGaussian,
}

#[derive(Debug, Clone)]
pub struct FunctionFamily {
    pub kind: FamilyKind,
    pub sample_count: usize,
    pub seed: u64,
}

impl FunctionFamily {
    pub fn new(kind: FamilyKind, sample_count: usize, seed: u64) -> Self {
        FunctionFamily {
            kind,
            sample_count,
            seed,
        }
    }

    /// Deterministically generates the `i`-th sample on the given grid.
    /// Each index derives its own stream, so samples are independent of
    /// the traversal order.
    pub fn sample(&self, index: usize, sg: SpatialGrid, vg: VelocityGrid) -> PhaseField {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ (0x9e37_79b9 + index as u64));
        let half = vg.half_extent() / 2.0;
        let n_comp = rng.gen_range(1..=4usize);
        let mut centers = Vec::new();
        let mut widths = Vec::new();
        let mut amps = Vec::new();
        let mut aniso = Vec::new();
        let mut degrees = Vec::new();
        for _ in 0..n_comp {
            centers.push([
                rng.gen_range(-half..half),
                rng.gen_range(-half..half),
                rng.gen_range(-half..half),
            ]);
            widths.push(rng.gen_range(0.3..2.0));
            amps.push(rng.gen_range(0.2..1.0));
            aniso.push([
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.5..2.0),
            ]);
            degrees.push(rng.gen_range(0..=2u32) * 2);
        }
        let kind = self.kind;
        PhaseField::sample(sg, vg, move |_x, v| {
            let mut acc = 0.0;
            for c in 0..n_comp {
                let dv = [
                    v[0] - centers[c][0],
                    v[1] - centers[c][1],
                    v[2] - centers[c][2],
                ];
                let w = widths[c];
                let value = match kind {
                    FamilyKind::GaussianMixture => {
                        let r2 = dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2];
                        (-0.5 * r2 / (w * w)).exp()
                    }
                    FamilyKind::AnisotropicGaussian => {
                        let r2 = (dv[0] * aniso[c][0]).powi(2)
                            + (dv[1] * aniso[c][1]).powi(2)
                            + (dv[2] * aniso[c][2]).powi(2);
                        (-0.5 * r2 / (w * w)).exp()
                    }
                    FamilyKind::PolynomialTimesGaussian => {
                        let r2 = dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2];
                        (1.0 + r2).powi(degrees[c] as i32 / 2) * (-0.5 * r2 / (w * w)).exp()
                    }
                };
                acc += amps[c] * value;
            }
            acc
        })
        .expect("family samples are finite")
    }
}

/// Empirical report for one estimate family.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub estimate_id: String,
    /// Reciprocal exponents used, as exact rational strings.
    pub exponents: Vec<(String, Rational)>,
    pub ell: f64,
    pub samples: usize,
    pub max_ratio: f64,
    pub median_ratio: f64,
    pub p95_ratio: f64,
    /// Samples excluded by the zero-denominator guard.
    pub excluded: usize,
    /// Precondition violations observed but tolerated (exploratory runs).
    pub violations_of_preconditions: usize,
    /// Grid metadata so constants are attributable to a resolution.
    pub resolution: ResolutionInfo,
    /// Extra context (explore-mode growth tables, window stability).
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolutionInfo {
    pub v_extent: f64,
    pub n_v: usize,
    pub x_extent: f64,
    pub n_x: usize,
    pub n_omega: usize,
}

fn resolution(sg: &SpatialGrid, vg: &VelocityGrid, cfg: Option<&CollisionConfig>) -> ResolutionInfo {
    ResolutionInfo {
        v_extent: vg.half_extent(),
        n_v: vg.points_per_axis(),
        x_extent: sg.half_extent(),
        n_x: sg.points_per_axis(),
        n_omega: cfg.map_or(0, |c| c.squad.len() / 2),
    }
}

const DENOM_GUARD: f64 = 1e-12;

fn summarize(
    estimate_id: &str,
    exponents: Vec<(String, Rational)>,
    ell: f64,
    ratios: &mut Vec<f64>,
    excluded: usize,
    violations: usize,
    resolution: ResolutionInfo,
    notes: Vec<String>,
) -> ProbeReport {
    ratios.sort_by(|a, b| a.total_cmp(b));
    let pick = |q: f64| -> f64 {
        if ratios.is_empty() {
            0.0
        } else {
            ratios[((ratios.len() - 1) as f64 * q).round() as usize]
        }
    };
    ProbeReport {
        estimate_id: estimate_id.to_owned(),
        exponents,
        ell,
        samples: ratios.len(),
        max_ratio: ratios.last().copied().unwrap_or(0.0),
        median_ratio: pick(0.5),
        p95_ratio: pick(0.95),
        excluded,
        violations_of_preconditions: violations,
        resolution,
        notes,
    }
}

/// Draws `2·sample_count` profiles and evaluates `ratio(f, g)` on
/// consecutive pairs, in parallel, with deterministic reduction.
fn pair_ratios<F>(
    family: &FunctionFamily,
    sg: SpatialGrid,
    vg: VelocityGrid,
    ratio: F,
) -> Result<(Vec<f64>, usize), ProbeError>
where
    F: Fn(&PhaseField, &PhaseField) -> Result<Option<f64>, ProbeError> + Sync,
{
    let results: Vec<Option<f64>> = (0..family.sample_count)
        .into_par_iter()
        .map(|i| {
            let f = family.sample(2 * i, sg, vg);
            let g = family.sample(2 * i + 1, sg, vg);
            ratio(&f, &g)
        })
        .collect::<Result<_, _>>()?;
    let excluded = results.iter().filter(|r| r.is_none()).count();
    Ok((results.into_iter().flatten().collect(), excluded))
}

/// Gain estimate probe: `‖Q⁺(f,g)‖_{L^r_v} <= C ‖f‖_{L^p_v} ‖g‖_{L^q_v}`
/// under the scaling `1/p + 1/q = 1 + γ/N + 1/r`, with optional `⟨v⟩^ℓ`
/// weight on all three norms (`ℓ >= 0`).
pub fn probe_gain(
    gamma: Rational,
    p_inv: Rational,
    q_inv: Rational,
    r_inv: Rational,
    ell: f64,
    family: &FunctionFamily,
    vg: VelocityGrid,
    ccfg: &CollisionConfig,
) -> Result<ProbeReport, ProbeError> {
    let n3 = Rational::from_integer(3);
    if p_inv + q_inv != Rational::one() + gamma / n3 + r_inv {
        return Err(ProbeError::ScalingViolated(format!(
            "1/p + 1/q = {} but 1 + gamma/3 + 1/r = {}",
            p_inv + q_inv,
            Rational::one() + gamma / n3 + r_inv
        )));
    }
    let sg = SpatialGrid::homogeneous(vg.half_extent()).unwrap();
    let (pf, qf, rf) = (p_inv.to_f64(), q_inv.to_f64(), r_inv.to_f64());
    let (mut ratios, excluded) = pair_ratios(family, sg, vg, |f, g| {
        let den = velocity_norms_per_cell(f, pf, ell)?[0] * velocity_norms_per_cell(g, qf, ell)?[0];
        if den < DENOM_GUARD {
            return Ok(None);
        }
        let q_plus = gain(f, g, ccfg)?;
        Ok(Some(velocity_norms_per_cell(&q_plus, rf, ell)?[0] / den))
    })?;
    Ok(summarize(
        "gain",
        vec![
            ("gamma".into(), gamma),
            ("p_inv".into(), p_inv),
            ("q_inv".into(), q_inv),
            ("r_inv".into(), r_inv),
        ],
        ell,
        &mut ratios,
        excluded,
        0,
        resolution(&sg, &vg, Some(ccfg)),
        Vec::new(),
    ))
}

/// Weighted gain probe with the `m`-shifted scaling
/// `1/p + 1/q + 1/m = 1 + γ/N + 1/r` and weight requirement `ℓ > N/m`.
/// Running with `ℓ <= N/m` is allowed for exploration; it is counted as a
/// precondition violation in the report.
#[allow(clippy::too_many_arguments)]
pub fn probe_gain_weighted(
    gamma: Rational,
    ell: f64,
    p_inv: Rational,
    q_inv: Rational,
    m_inv: Rational,
    r_inv: Rational,
    family: &FunctionFamily,
    vg: VelocityGrid,
    ccfg: &CollisionConfig,
) -> Result<ProbeReport, ProbeError> {
    if !check_weighted_scaling(p_inv, q_inv, m_inv, r_inv, gamma, SpaceDim::Three, false) {
        return Err(ProbeError::ScalingViolated(
            "weighted gain scaling (size or balance) fails".into(),
        ));
    }
    let mut violations = 0;
    let mut notes = Vec::new();
    let n_over_m = 3.0 * m_inv.to_f64();
    if ell <= n_over_m {
        violations = 1;
        notes.push(format!(
            "weight ell = {ell} <= N/m = {n_over_m}; estimate not guaranteed (exploratory run)"
        ));
    }
    let sg = SpatialGrid::homogeneous(vg.half_extent()).unwrap();
    let (pf, qf, rf) = (p_inv.to_f64(), q_inv.to_f64(), r_inv.to_f64());
    let (mut ratios, excluded) = pair_ratios(family, sg, vg, |f, g| {
        let den = velocity_norms_per_cell(f, pf, ell)?[0] * velocity_norms_per_cell(g, qf, ell)?[0];
        if den < DENOM_GUARD {
            return Ok(None);
        }
        let q_plus = gain(f, g, ccfg)?;
        Ok(Some(velocity_norms_per_cell(&q_plus, rf, ell)?[0] / den))
    })?;
    Ok(summarize(
        "gain-weighted",
        vec![
            ("gamma".into(), gamma),
            ("p_inv".into(), p_inv),
            ("q_inv".into(), q_inv),
            ("m_inv".into(), m_inv),
            ("r_inv".into(), r_inv),
        ],
        ell,
        &mut ratios,
        excluded,
        violations,
        resolution(&sg, &vg, Some(ccfg)),
        notes,
    ))
}

/// Loss estimate probe:
/// `‖⟨v⟩^ℓ f·L(g)‖_{L^r_v} <= C ‖⟨v⟩^ℓ f‖_{L^p_v} ‖⟨v⟩^ℓ g‖_{L^q_v}` under
/// the `m`-shifted scaling and the hard constraint `1/p < 1/r`.
///
/// In explore mode the constraint may be violated; the probe then reports
/// ratio growth across a widening-support (dilated) family instead of a
/// boundedness observation.
#[allow(clippy::too_many_arguments)]
pub fn probe_loss(
    gamma: Rational,
    ell: f64,
    p_inv: Rational,
    q_inv: Rational,
    m_inv: Rational,
    r_inv: Rational,
    family: &FunctionFamily,
    vg: VelocityGrid,
    ccfg: &CollisionConfig,
    explore: bool,
) -> Result<ProbeReport, ProbeError> {
    let constraint_ok =
        check_weighted_scaling(p_inv, q_inv, m_inv, r_inv, gamma, SpaceDim::Three, true);
    if !constraint_ok && !explore {
        if p_inv >= r_inv {
            return Err(ProbeError::LossConstraintViolated);
        }
        return Err(ProbeError::ScalingViolated(
            "weighted loss scaling (size or balance) fails".into(),
        ));
    }
    let mut notes = Vec::new();
    let violations = usize::from(!constraint_ok);
    let sg = SpatialGrid::homogeneous(vg.half_extent()).unwrap();
    let (pf, qf, rf) = (p_inv.to_f64(), q_inv.to_f64(), r_inv.to_f64());

    let run = |dilation: f64| -> Result<(Vec<f64>, usize), ProbeError> {
        pair_ratios(family, sg, vg, |f, g| {
            let fd = if dilation == 1.0 { f.clone() } else { dilate(f, dilation) };
            let gd = if dilation == 1.0 { g.clone() } else { dilate(g, dilation) };
            let den = velocity_norms_per_cell(&fd, pf, ell)?[0]
                * velocity_norms_per_cell(&gd, qf, ell)?[0];
            if den < DENOM_GUARD {
                return Ok(None);
            }
            let q_minus = fd
                .mul_pointwise(&loss_rate(&gd, ccfg)?)
                .expect("same grids");
            Ok(Some(velocity_norms_per_cell(&q_minus, rf, ell)?[0] / den))
        })
    };

    let (mut ratios, excluded) = run(1.0)?;
    if explore {
        for lambda in [2.0, 4.0] {
            let (r, _) = run(lambda)?;
            let max = r.iter().copied().fold(0.0f64, f64::max);
            notes.push(format!("dilation {lambda}: max_ratio {max:.6e}"));
        }
    }
    Ok(summarize(
        "loss",
        vec![
            ("gamma".into(), gamma),
            ("p_inv".into(), p_inv),
            ("q_inv".into(), q_inv),
            ("m_inv".into(), m_inv),
            ("r_inv".into(), r_inv),
        ],
        ell,
        &mut ratios,
        excluded,
        violations,
        resolution(&sg, &vg, Some(ccfg)),
        notes,
    ))
}

/// Spreads a velocity profile by the given factor (`f(v) ↦ f(v/λ)`),
/// widening its support.
fn dilate(f: &PhaseField, lambda: f64) -> PhaseField {
    let vg = *f.velocity_grid();
    let sg = *f.spatial_grid();
    let n = vg.points_per_axis();
    let h = vg.spacing();
    PhaseField::sample(sg, vg, |_, v| {
        // nearest-node lookup of f at v/lambda
        let idx = |c: f64| -> Option<usize> {
            let i = ((c / lambda + vg.half_extent()) / h - 0.5).round();
            (i >= 0.0 && i < n as f64).then_some(i as usize)
        };
        match (idx(v[0]), idx(v[1]), idx(v[2])) {
            (Some(i), Some(j), Some(k)) => f.get(0, vg.flat_index(i, j, k)),
            _ => 0.0,
        }
    })
    .expect("dilation preserves finiteness")
}

/// Hardy–Littlewood–Sobolev probe:
/// `|∬ f(x)|x-y|^γ g(y) dx dy| <= C ‖f‖_{a1} ‖g‖_{a2}` with
/// `1/a1 + 1/a2 = 2 + γ/N`. Runs on the 3-D velocity grid, reusing the
/// loss-rate convolution for the inner integral.
pub fn probe_hls(
    gamma: Rational,
    a1_inv: Rational,
    a2_inv: Rational,
    family: &FunctionFamily,
    vg: VelocityGrid,
    ccfg: &CollisionConfig,
) -> Result<ProbeReport, ProbeError> {
    let n3 = Rational::from_integer(3);
    if a1_inv + a2_inv != Rational::from_integer(2) + gamma / n3 {
        return Err(ProbeError::ScalingViolated(format!(
            "1/a1 + 1/a2 = {} but 2 + gamma/3 = {}",
            a1_inv + a2_inv,
            Rational::from_integer(2) + gamma / n3
        )));
    }
    let one = Rational::one();
    if !(Rational::zero() < a1_inv && a1_inv < one && Rational::zero() < a2_inv && a2_inv < one) {
        return Err(ProbeError::ScalingViolated(
            "HLS exponents must satisfy 1 < a1, a2 < inf".into(),
        ));
    }
    let sg = SpatialGrid::homogeneous(vg.half_extent()).unwrap();
    let (a1f, a2f) = (a1_inv.to_f64(), a2_inv.to_f64());
    let hv3 = vg.cell_volume();
    let cb = crate::kinematics::grad_constant(&ccfg.kernel);
    let (mut ratios, excluded) = pair_ratios(family, sg, vg, |f, g| {
        let den = velocity_norms_per_cell(f, a1f, 0.0)?[0] * velocity_norms_per_cell(g, a2f, 0.0)?[0];
        if den < DENOM_GUARD {
            return Ok(None);
        }
        // loss_rate(g) = C_b (g * |·|^γ); strip the cutoff constant
        let conv = loss_rate(g, ccfg)?;
        let pairing: f64 = f
            .data()
            .iter()
            .zip(conv.data())
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * hv3
            / cb;
        Ok(Some(pairing.abs() / den))
    })?;
    Ok(summarize(
        "hls",
        vec![
            ("gamma".into(), gamma),
            ("a1_inv".into(), a1_inv),
            ("a2_inv".into(), a2_inv),
        ],
        0.0,
        &mut ratios,
        excluded,
        0,
        resolution(&sg, &vg, Some(ccfg)),
        Vec::new(),
    ))
}

/// Homogeneous Strichartz probe:
/// `‖U(t)f0‖_{L^q_t L^r_x L^p_v} <= C ‖f0‖_{L^a_{x,v}}` for a
/// KT-admissible non-endpoint triplet with `a = HM(p, r)`. Full
/// phase-space samples; the report notes the window-doubling stability.
pub fn probe_strichartz(
    triplet: &Triplet,
    a_inv: Rational,
    family: &FunctionFamily,
    sg: SpatialGrid,
    vg: VelocityGrid,
    tg: &TimeGrid,
) -> Result<ProbeReport, ProbeError> {
    if !is_kt_admissible(triplet, SpaceDim::Three) || is_endpoint(triplet, SpaceDim::Three) {
        return Err(ProbeError::InadmissibleTriplet);
    }
    if harmonic_mean(triplet) != a_inv {
        return Err(ProbeError::ScalingViolated(format!(
            "a must be the harmonic mean of (p, r): expected {}, got {a_inv}",
            harmonic_mean(triplet)
        )));
    }
    let spec = NormSpec::new(*triplet, 0.0, (0.0, tg.t_final()));
    let tg2 = TimeGrid::new(2.0 * tg.t_final(), 2 * tg.len() - 1).unwrap();
    let spec2 = NormSpec::new(*triplet, 0.0, (0.0, tg2.t_final()));
    let af = a_inv.to_f64();

    let results: Vec<Option<(f64, f64)>> = (0..family.sample_count)
        .into_par_iter()
        .map(|i| -> Result<Option<(f64, f64)>, ProbeError> {
            let f0 = family.sample(i, sg, vg);
            let den = la_norm(&f0, af, 0.0)?;
            if den < DENOM_GUARD {
                return Ok(None);
            }
            let traj = Trajectory::free_transport(&f0, *tg);
            let ratio = mixed_norm(&traj, &spec)? / den;
            let traj2 = Trajectory::free_transport(&f0, tg2);
            let ratio2 = mixed_norm(&traj2, &spec2)? / den;
            Ok(Some((ratio, ratio2)))
        })
        .collect::<Result<_, _>>()?;
    let excluded = results.iter().filter(|r| r.is_none()).count();
    let pairs: Vec<(f64, f64)> = results.into_iter().flatten().collect();
    let mut ratios: Vec<f64> = pairs.iter().map(|(a, _)| *a).collect();
    let max1 = ratios.iter().copied().fold(0.0f64, f64::max);
    let max2 = pairs.iter().map(|(_, b)| *b).fold(0.0f64, f64::max);
    let notes = vec![format!(
        "window doubling T -> 2T: max_ratio {max1:.6e} -> {max2:.6e} ({:+.2}%)",
        100.0 * (max2 - max1) / max1.max(f64::MIN_POSITIVE)
    )];
    Ok(summarize(
        "strichartz",
        vec![
            ("q_inv".into(), triplet.q_inv),
            ("r_inv".into(), triplet.r_inv),
            ("p_inv".into(), triplet.p_inv),
            ("a_inv".into(), a_inv),
        ],
        0.0,
        &mut ratios,
        excluded,
        0,
        resolution(&sg, &vg, None),
        notes,
    ))
}
