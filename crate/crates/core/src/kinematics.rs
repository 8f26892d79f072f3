//! Collision geometry and kernel evaluation.
//!
//! Pre/post-collision velocity maps in both the ω- and σ-representations,
//! the soft-potential kernel `B(v - v_*, ω) = |v - v_*|^γ b(cosθ)` with
//! support `0 <= θ <= π/2`, and the Grad cutoff constant.

use crate::quadrature::SphereQuadrature;
use serde::{Deserialize, Serialize};
use std::str::FromStr;
use thiserror::Error;

/// A velocity in R³.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Velocity(pub [f64; 3]);

impl Velocity {
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dot(&self, other: &Velocity) -> f64 {
        self.0[0] * other.0[0] + self.0[1] * other.0[1] + self.0[2] * other.0[2]
    }

    pub fn sub(&self, other: &Velocity) -> Velocity {
        Velocity([
            self.0[0] - other.0[0],
            self.0[1] - other.0[1],
            self.0[2] - other.0[2],
        ])
    }

    pub fn add(&self, other: &Velocity) -> Velocity {
        Velocity([
            self.0[0] + other.0[0],
            self.0[1] + other.0[1],
            self.0[2] + other.0[2],
        ])
    }

    pub fn scale(&self, c: f64) -> Velocity {
        Velocity([c * self.0[0], c * self.0[1], c * self.0[2]])
    }
}

/// Angular part of the kernel as a function of `cosθ` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Angular {
    /// `b ≡ b0` (the default; hard-sphere-like angular part).
    Const(f64),
    /// `b(c) = coeff · c^exponent`.
    Power { coeff: f64, exponent: f64 },
}

impl Angular {
    pub fn eval(&self, cos_theta: f64) -> f64 {
        match self {
            Angular::Const(b0) => *b0,
            Angular::Power { coeff, exponent } => coeff * cos_theta.powf(*exponent),
        }
    }
}

impl FromStr for Angular {
    type Err = KinematicsError;

    /// Parses the config syntax `const:B0` or `power:COEFF,EXP`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || KinematicsError::BadAngularSpec(s.to_owned());
        let (kind, args) = s.split_once(':').ok_or_else(bad)?;
        match kind.trim() {
            "const" => Ok(Angular::Const(args.trim().parse().map_err(|_| bad())?)),
            "power" => {
                let (c, e) = args.split_once(',').ok_or_else(bad)?;
                Ok(Angular::Power {
                    coeff: c.trim().parse().map_err(|_| bad())?,
                    exponent: e.trim().parse().map_err(|_| bad())?,
                })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KinematicsError {
    #[error("direction vector has |w| = {0}, expected a unit vector")]
    NonUnitDirection(f64),
    #[error("kernel is singular at coincident velocities")]
    CoincidentVelocities,
    #[error("gamma = {0} outside (-3, 0]")]
    GammaOutOfRange(f64),
    #[error("angular integral does not converge (Grad cutoff violated): {0}")]
    DivergentCutoff(String),
    #[error("malformed angular spec {0:?} (expected \"const:B0\" or \"power:C,E\")")]
    BadAngularSpec(String),
}

/// Soft-potential collision kernel `|v - v_*|^γ b(cosθ)` under Grad cutoff.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelSpec {
    gamma: f64,
    angular: Angular,
    cutoff_constant: f64,
}

impl KernelSpec {
    /// Builds the kernel, computing the cutoff constant
    /// `∫ b(cosθ) dω` over the hemisphere by quadrature and rejecting
    /// angular functions whose integral does not settle under refinement.
    pub fn new(gamma: f64, angular: Angular) -> Result<Self, KinematicsError> {
        if !(-3.0 < gamma && gamma <= 0.0) {
            return Err(KinematicsError::GammaOutOfRange(gamma));
        }
        let coarse = SphereQuadrature::new(24, 4).integrate_hemisphere_axial(|c| angular.eval(c));
        let fine = SphereQuadrature::new(48, 4).integrate_hemisphere_axial(|c| angular.eval(c));
        let drift = (fine - coarse).abs();
        if !fine.is_finite() || !coarse.is_finite() || drift > 1e-6 * fine.abs().max(1.0) {
            return Err(KinematicsError::DivergentCutoff(format!(
                "hemisphere integral {coarse} -> {fine} under refinement"
            )));
        }
        if fine <= 0.0 {
            return Err(KinematicsError::DivergentCutoff(
                "cutoff constant must be positive".into(),
            ));
        }
        Ok(KernelSpec {
            gamma,
            angular,
            cutoff_constant: fine,
        })
    }

    /// The default kernel for a given exponent: `b ≡ 1`.
    pub fn with_unit_angular(gamma: f64) -> Result<Self, KinematicsError> {
        KernelSpec::new(gamma, Angular::Const(1.0))
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn angular(&self) -> &Angular {
        &self.angular
    }

    /// `|u|^γ` for the relative speed `u`.
    pub fn kinetic_factor(&self, rel_speed: f64) -> f64 {
        rel_speed.powf(self.gamma)
    }
}

fn check_unit(w: &Velocity) -> Result<(), KinematicsError> {
    let n = w.norm();
    if (n - 1.0).abs() > 1e-12 {
        return Err(KinematicsError::NonUnitDirection(n));
    }
    Ok(())
}

/// Post-collision velocities in the ω-representation:
/// `v' = v - [ω·(v - v_*)]ω`, `v'_* = v_* + [ω·(v - v_*)]ω`.
pub fn post_collision_omega(
    v: &Velocity,
    v_star: &Velocity,
    omega: &Velocity,
) -> Result<(Velocity, Velocity), KinematicsError> {
    check_unit(omega)?;
    let u = v.sub(v_star);
    let proj = omega.scale(omega.dot(&u));
    Ok((v.sub(&proj), v_star.add(&proj)))
}

/// Post-collision velocities in the σ-representation:
/// `v' = v - u⁻`, `v'_* = v_* + u⁻` with `u⁻ = (u - |u|σ)/2`.
pub fn post_collision_sigma(
    v: &Velocity,
    v_star: &Velocity,
    sigma: &Velocity,
) -> Result<(Velocity, Velocity), KinematicsError> {
    check_unit(sigma)?;
    let u = v.sub(v_star);
    let u_minus = u.sub(&sigma.scale(u.norm())).scale(0.5);
    Ok((v.sub(&u_minus), v_star.add(&u_minus)))
}

/// Kernel value `B(v - v_*, ω) = |u|^γ b(cosθ)` with
/// `cosθ = ⟨ω, u/|u|⟩`; zero outside the support `cosθ >= 0`.
///
/// Coincident velocities are a hard error: the quadrature layer owns the
/// regularization policy.
pub fn kernel_value(
    v: &Velocity,
    v_star: &Velocity,
    omega: &Velocity,
    kernel: &KernelSpec,
) -> Result<f64, KinematicsError> {
    check_unit(omega)?;
    let u = v.sub(v_star);
    let speed = u.norm();
    if speed == 0.0 {
        return Err(KinematicsError::CoincidentVelocities);
    }
    let cos_theta = omega.dot(&u) / speed;
    if cos_theta < 0.0 {
        return Ok(0.0);
    }
    Ok(kernel.kinetic_factor(speed) * kernel.angular.eval(cos_theta))
}

/// Grad cutoff constant `∫ b(cosθ) dω` over the hemisphere `0 <= θ <= π/2`.
pub fn grad_constant(kernel: &KernelSpec) -> f64 {
    kernel.cutoff_constant
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn head_on_exchange() {
        let v = Velocity([1.0, 0.0, 0.0]);
        let vs = Velocity([-1.0, 0.0, 0.0]);
        let w = Velocity([1.0, 0.0, 0.0]);
        let (vp, vps) = post_collision_omega(&v, &vs, &w).unwrap();
        assert_eq!(vp.0, [-1.0, 0.0, 0.0]);
        assert_eq!(vps.0, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn grazing_identity() {
        let v = Velocity([1.0, 0.0, 0.0]);
        let vs = Velocity([-1.0, 0.0, 0.0]);
        let w = Velocity([0.0, 1.0, 0.0]);
        let (vp, vps) = post_collision_omega(&v, &vs, &w).unwrap();
        assert_eq!(vp.0, v.0);
        assert_eq!(vps.0, vs.0);
    }

    #[test]
    fn omega_map_hand_example() {
        let v = Velocity([1.0, 1.0, 0.0]);
        let vs = Velocity([0.0, 0.0, 0.0]);
        let w = Velocity([1.0, 0.0, 0.0]);
        let (vp, vps) = post_collision_omega(&v, &vs, &w).unwrap();
        assert_eq!(vp.0, [0.0, 1.0, 0.0]);
        assert_eq!(vps.0, [1.0, 0.0, 0.0]);
    }

    #[test]
    fn non_unit_direction_rejected() {
        let v = Velocity([1.0, 0.0, 0.0]);
        let vs = Velocity([0.0, 0.0, 0.0]);
        let w = Velocity([1.0, 1.0, 0.0]);
        assert!(matches!(
            post_collision_omega(&v, &vs, &w),
            Err(KinematicsError::NonUnitDirection(_))
        ));
    }

    #[test]
    fn sigma_map_special_cases() {
        let v = Velocity([2.0, 1.0, -1.0]);
        let vs = Velocity([0.0, -1.0, 1.0]);
        let u = v.sub(&vs);
        let uhat = u.scale(1.0 / u.norm());
        let (vp, vps) = post_collision_sigma(&v, &vs, &uhat).unwrap();
        assert_relative_eq!(vp.0[0], v.0[0], epsilon = 1e-14);
        assert_relative_eq!(vps.0[2], vs.0[2], epsilon = 1e-14);
        let (vp, vps) = post_collision_sigma(&v, &vs, &uhat.scale(-1.0)).unwrap();
        for i in 0..3 {
            assert_relative_eq!(vp.0[i], vs.0[i], epsilon = 1e-13);
            assert_relative_eq!(vps.0[i], v.0[i], epsilon = 1e-13);
        }
    }

    /// Conservation for 1e5 random collisions, and agreement of the two
    /// representations through σ(ω) = û - 2(û·ω)ω on the kernel support.
    #[test]
    fn conservation_and_representation_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut max_rel = 0.0f64;
        for _ in 0..100_000 {
            let rand_v = |rng: &mut ChaCha8Rng| {
                Velocity([
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-3.0..3.0),
                    rng.gen_range(-3.0..3.0),
                ])
            };
            let v = rand_v(&mut rng);
            let vs = rand_v(&mut rng);
            let w = loop {
                let c = rand_v(&mut rng);
                let n = c.norm();
                if n > 1e-3 {
                    break c.scale(1.0 / n);
                }
            };
            let (vp, vps) = post_collision_omega(&v, &vs, &w).unwrap();
            let p_in = v.add(&vs);
            let p_out = vp.add(&vps);
            let e_in = v.norm_sq() + vs.norm_sq();
            let e_out = vp.norm_sq() + vps.norm_sq();
            let scale = e_in.max(1.0);
            max_rel = max_rel
                .max(p_in.sub(&p_out).norm() / scale.sqrt())
                .max((e_in - e_out).abs() / scale);

            let u = v.sub(&vs);
            if u.norm() > 1e-6 && w.dot(&u) > 0.0 {
                let uhat = u.scale(1.0 / u.norm());
                let sigma = uhat.sub(&w.scale(2.0 * uhat.dot(&w)));
                let (sp, sps) = post_collision_sigma(&v, &vs, &sigma).unwrap();
                for i in 0..3 {
                    max_rel = max_rel
                        .max((sp.0[i] - vp.0[i]).abs() / scale.sqrt())
                        .max((sps.0[i] - vps.0[i]).abs() / scale.sqrt());
                }
                // Pythagoras on the sigma decomposition
                let um = u.sub(&sigma.scale(u.norm())).scale(0.5);
                let up = u.sub(&um);
                max_rel = max_rel.max((up.norm_sq() + um.norm_sq() - u.norm_sq()).abs() / scale);
            }
        }
        assert!(max_rel <= 1e-12, "max relative defect {max_rel}");
    }

    #[test]
    fn kernel_values() {
        let k = KernelSpec::with_unit_angular(-1.0).unwrap();
        let v = Velocity([2.0, 0.0, 0.0]);
        let vs = Velocity([0.0, 0.0, 0.0]);
        let w = Velocity([1.0, 0.0, 0.0]);
        assert_relative_eq!(kernel_value(&v, &vs, &w, &k).unwrap(), 0.5);

        // outside the angular support
        let back = Velocity([-1.0, 0.0, 0.0]);
        assert_eq!(kernel_value(&v, &vs, &back, &k).unwrap(), 0.0);

        // Maxwell molecules: unit kernel on the support
        let k0 = KernelSpec::with_unit_angular(0.0).unwrap();
        assert_relative_eq!(kernel_value(&v, &vs, &w, &k0).unwrap(), 1.0);

        assert!(matches!(
            kernel_value(&v, &v, &w, &k),
            Err(KinematicsError::CoincidentVelocities)
        ));
    }

    #[test]
    fn kinetic_factor_exchange_invariance() {
        let k = KernelSpec::with_unit_angular(-0.5).unwrap();
        let v = Velocity([1.0, -2.0, 0.5]);
        let vs = Velocity([0.3, 0.4, -1.0]);
        assert_eq!(
            k.kinetic_factor(v.sub(&vs).norm()),
            k.kinetic_factor(vs.sub(&v).norm())
        );
    }

    #[test]
    fn grad_constant_values() {
        let k = KernelSpec::with_unit_angular(-1.0).unwrap();
        assert_relative_eq!(grad_constant(&k), 2.0 * PI, epsilon = 1e-10);

        let k = KernelSpec::new(
            -1.0,
            Angular::Power {
                coeff: 1.0,
                exponent: 1.0,
            },
        )
        .unwrap();
        assert_relative_eq!(grad_constant(&k), PI, epsilon = 1e-10);

        // non-cutoff angular function is rejected
        assert!(matches!(
            KernelSpec::new(
                -1.0,
                Angular::Power {
                    coeff: 1.0,
                    exponent: -2.0,
                }
            ),
            Err(KinematicsError::DivergentCutoff(_))
        ));
    }

    #[test]
    fn angular_parsing() {
        assert_eq!("const:1.0".parse::<Angular>().unwrap(), Angular::Const(1.0));
        assert_eq!(
            "power:2.0,-0.5".parse::<Angular>().unwrap(),
            Angular::Power {
                coeff: 2.0,
                exponent: -0.5
            }
        );
        assert!("gauss:1".parse::<Angular>().is_err());
    }
}
