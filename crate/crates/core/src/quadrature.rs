//! Deterministic spherical quadrature for the collision angular integral.
//!
//! The collision kernel is supported on the hemisphere `0 <= θ <= π/2`
//! around the relative velocity, so the native rule is a product of
//! Gauss–Legendre in `cosθ` on `[0, 1]` with a uniform (trapezoid on a
//! periodic interval) rule in azimuth. The full-sphere node set mirrors the
//! hemisphere through the origin, which makes constants integrate to `4π`
//! and odd harmonics to zero.

use serde::{Deserialize, Serialize};

/// One hemisphere node in a frame whose third axis is the reference
/// direction: `ω = cosθ·e3 + sinθ cosφ·e1 + sinθ sinφ·e2`.
#[derive(Debug, Clone, Copy)]
pub struct HemiNode {
    pub cos_theta: f64,
    pub sin_cos_phi: f64,
    pub sin_sin_phi: f64,
    pub weight: f64,
}

/// Product quadrature on the unit sphere: Gauss–Legendre × azimuth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SphereQuadrature {
    n_cos: usize,
    n_phi: usize,
    /// GL nodes for cosθ on [0, 1], ascending.
    cos_nodes: Vec<f64>,
    /// GL weights on [0, 1]; they sum to 1.
    cos_weights: Vec<f64>,
}

impl SphereQuadrature {
    /// Builds the rule with `n_cos` Gauss–Legendre nodes in `cosθ` and
    /// `n_phi` uniform azimuth nodes. The default used throughout is 8×16.
    pub fn new(n_cos: usize, n_phi: usize) -> Self {
        assert!(n_cos >= 1 && n_phi >= 1, "quadrature orders must be >= 1");
        let (nodes, weights) = gauss_legendre_unit(n_cos);
        SphereQuadrature {
            n_cos,
            n_phi,
            cos_nodes: nodes,
            cos_weights: weights,
        }
    }

    pub fn default_rule() -> Self {
        SphereQuadrature::new(8, 16)
    }

    pub fn n_cos(&self) -> usize {
        self.n_cos
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    /// Number of nodes on the full (mirrored) sphere.
    pub fn len(&self) -> usize {
        2 * self.n_cos * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Hemisphere nodes with their `4π`-normalized solid-angle weights
    /// (the hemisphere weights sum to `2π`).
    pub fn hemisphere_nodes(&self) -> Vec<HemiNode> {
        let dphi = std::f64::consts::TAU / self.n_phi as f64;
        let mut out = Vec::with_capacity(self.n_cos * self.n_phi);
        for (c, wc) in self.cos_nodes.iter().zip(&self.cos_weights) {
            let s = (1.0 - c * c).max(0.0).sqrt();
            for j in 0..self.n_phi {
                let phi = (j as f64 + 0.5) * dphi;
                out.push(HemiNode {
                    cos_theta: *c,
                    sin_cos_phi: s * phi.cos(),
                    sin_sin_phi: s * phi.sin(),
                    weight: wc * dphi,
                });
            }
        }
        out
    }

    /// Full-sphere nodes `(ω, w)` in the canonical frame (third axis = z),
    /// hemisphere nodes plus their mirror images.
    pub fn nodes(&self) -> Vec<([f64; 3], f64)> {
        let hemi = self.hemisphere_nodes();
        let mut out = Vec::with_capacity(2 * hemi.len());
        for n in &hemi {
            let omega = [n.sin_cos_phi, n.sin_sin_phi, n.cos_theta];
            out.push((omega, n.weight));
            out.push(([-omega[0], -omega[1], -omega[2]], n.weight));
        }
        out
    }

    /// Integrates a function of the unit vector over the full sphere.
    pub fn integrate<F: Fn([f64; 3]) -> f64>(&self, f: F) -> f64 {
        self.nodes().iter().map(|(w, wt)| wt * f(*w)).sum()
    }

    /// Integrates `b(cosθ)` over the hemisphere `0 <= θ <= π/2`
    /// (azimuth collapses to a factor `2π`).
    pub fn integrate_hemisphere_axial<F: Fn(f64) -> f64>(&self, b: F) -> f64 {
        std::f64::consts::TAU
            * self
                .cos_nodes
                .iter()
                .zip(&self.cos_weights)
                .map(|(c, w)| w * b(*c))
                .sum::<f64>()
    }
}

/// Gauss–Legendre nodes and weights on `[0, 1]`, by Newton iteration on the
/// Legendre polynomial with the usual asymptotic initial guesses.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        // initial guess on [-1, 1]
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes[n - 1 - k] = 0.5 * (x + 1.0);
        weights[n - 1 - k] = 0.5 * w;
    }
    (nodes, weights)
}

/// Legendre polynomial `P_n(x)` and its derivative via the three-term
/// recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}
