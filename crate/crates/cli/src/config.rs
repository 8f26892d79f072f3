//! Flat `key = value` experiment configuration.
//!
//! Rational-valued keys (`gamma`, `eps`, exponent reciprocals) keep exact
//! `"a/b"` syntax; everything numeric-but-approximate is a plain float.
//! Unknown keys and malformed lines are reported with their line number.

use anyhow::{anyhow, bail, Context, Result};
use kml_core::collision::DiagonalPolicy;
use kml_core::kinematics::Angular;
use kml_core::rational::Rational;
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

/// Initial-data families built into the driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DataFamily {
    /// Isotropic Gaussian bump in `(x, v)`.
    Gaussian,
    /// Two displaced velocity bumps under a spatial envelope.
    TwoBump,
    /// Spatially localized Maxwellian product.
    XMaxwellian,
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub gamma: Rational,
    pub eps: Rational,
    /// Velocity weight override; `None` means `ℓ_γ` ("auto").
    pub ell_override: Option<Rational>,
    pub n_x: usize,
    pub n_v: usize,
    pub n_t: usize,
    pub x_extent: f64,
    pub v_extent: f64,
    pub t_final: f64,
    pub family: DataFamily,
    pub amplitude: f64,
    pub width: f64,
    pub separation: f64,
    pub tol: f64,
    pub max_iterations: usize,
    pub series_terms: usize,
    pub monitored_p_inv: Rational,
    pub smallness_eta: Option<f64>,
    pub n_cos: usize,
    pub n_phi: usize,
    pub angular: String,
    pub diagonal: String,
    pub out_dir: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            gamma: Rational::ratio(-1, 1),
            eps: Rational::ratio(1, 100),
            ell_override: None,
            n_x: 1,
            n_v: 12,
            n_t: 17,
            x_extent: 4.0,
            v_extent: 6.0,
            t_final: 1.0,
            family: DataFamily::Gaussian,
            amplitude: 0.01,
            width: 1.0,
            separation: 1.0,
            tol: 1e-3,
            max_iterations: 40,
            series_terms: 3,
            monitored_p_inv: Rational::ratio(2, 5),
            smallness_eta: None,
            n_cos: 8,
            n_phi: 16,
            angular: "const:1.0".to_owned(),
            diagonal: "skip".to_owned(),
            out_dir: "runs/out".to_owned(),
        }
    }
}

impl ExperimentConfig {
    /// Parses the flat text format, overlaying the defaults.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg = ExperimentConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected `key = value`", path.display(), lineno + 1))?;
            cfg.set(key.trim(), value.trim())
                .with_context(|| format!("{}:{}", path.display(), lineno + 1))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn float(v: &str) -> Result<f64> {
            v.parse().map_err(|_| anyhow!("expected a float, got {v:?}"))
        }
        fn int(v: &str) -> Result<usize> {
            v.parse().map_err(|_| anyhow!("expected an integer, got {v:?}"))
        }
        fn rational(v: &str) -> Result<Rational> {
            v.parse().map_err(|e| anyhow!("expected a rational: {e}"))
        }
        match key {
            "gamma" => self.gamma = rational(value)?,
            "eps" => self.eps = rational(value)?,
            "ell" => {
                self.ell_override = if value == "auto" {
                    None
                } else {
                    Some(rational(value)?)
                }
            }
            "n_x" => self.n_x = int(value)?,
            "n_v" => self.n_v = int(value)?,
            "n_t" => self.n_t = int(value)?,
            "x_extent" => self.x_extent = float(value)?,
            "v_extent" => self.v_extent = float(value)?,
            "t_final" => self.t_final = float(value)?,
            "family" => {
                self.family = match value {
                    "gaussian" => DataFamily::Gaussian,
                    "two-bump" => DataFamily::TwoBump,
                    "x-maxwellian" => DataFamily::XMaxwellian,
                    other => bail!("unknown family {other:?}"),
                }
            }
            "amplitude" => self.amplitude = float(value)?,
            "width" => self.width = float(value)?,
            "separation" => self.separation = float(value)?,
            "tol" => self.tol = float(value)?,
            "max_iterations" => self.max_iterations = int(value)?,
            "series_terms" => self.series_terms = int(value)?,
            "monitored_p_inv" => self.monitored_p_inv = rational(value)?,
            "smallness_eta" => self.smallness_eta = Some(float(value)?),
            "n_cos" => self.n_cos = int(value)?,
            "n_phi" => self.n_phi = int(value)?,
            "angular" => self.angular = value.to_owned(),
            "diagonal" => self.diagonal = value.to_owned(),
            "out_dir" => self.out_dir = value.to_owned(),
            other => bail!("unknown key {other:?}"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0) {
            bail!("amplitude must be positive");
        }
        if self.n_v < 4 || self.n_v % 2 != 0 {
            bail!("n_v must be an even integer >= 4");
        }
        if self.n_x < 1 || self.n_t < 2 {
            bail!("n_x >= 1 and n_t >= 2 required");
        }
        self.angular.parse::<Angular>().map_err(|e| anyhow!("{e}"))?;
        self.diagonal_policy()?;
        Ok(())
    }

    pub fn angular_fn(&self) -> Result<Angular> {
        self.angular.parse::<Angular>().map_err(|e| anyhow!("{e}"))
    }

    pub fn diagonal_policy(&self) -> Result<DiagonalPolicy> {
        if self.diagonal == "skip" {
            return Ok(DiagonalPolicy::Skip);
        }
        if let Some(eps) = self.diagonal.strip_prefix("epsilon:") {
            let eps: f64 = eps
                .parse()
                .map_err(|_| anyhow!("bad epsilon in diagonal policy {:?}", self.diagonal))?;
            return Ok(DiagonalPolicy::EpsilonShift(eps));
        }
        bail!("diagonal must be \"skip\" or \"epsilon:VALUE\"");
    }

    /// Canonical text rendering (sorted keys) used for the manifest.
    pub fn resolved_map(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        m.insert("gamma".into(), self.gamma.to_string());
        m.insert("eps".into(), self.eps.to_string());
        m.insert(
            "ell".into(),
            self.ell_override
                .map_or_else(|| "auto".to_owned(), |e| e.to_string()),
        );
        m.insert("n_x".into(), self.n_x.to_string());
        m.insert("n_v".into(), self.n_v.to_string());
        m.insert("n_t".into(), self.n_t.to_string());
        m.insert("x_extent".into(), self.x_extent.to_string());
        m.insert("v_extent".into(), self.v_extent.to_string());
        m.insert("t_final".into(), self.t_final.to_string());
        m.insert("family".into(), format!("{:?}", self.family));
        m.insert("amplitude".into(), self.amplitude.to_string());
        m.insert("width".into(), self.width.to_string());
        m.insert("separation".into(), self.separation.to_string());
        m.insert("tol".into(), self.tol.to_string());
        m.insert("max_iterations".into(), self.max_iterations.to_string());
        m.insert("series_terms".into(), self.series_terms.to_string());
        m.insert("monitored_p_inv".into(), self.monitored_p_inv.to_string());
        m.insert(
            "smallness_eta".into(),
            self.smallness_eta.map_or_else(String::new, |e| e.to_string()),
        );
        m.insert("n_cos".into(), self.n_cos.to_string());
        m.insert("n_phi".into(), self.n_phi.to_string());
        m.insert("angular".into(), self.angular.clone());
        m.insert("diagonal".into(), self.diagonal.clone());
        m.insert("out_dir".into(), self.out_dir.clone());
        m
    }

    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.resolved_map() {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn parse_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.cfg");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "# demo\ngamma = -1/2\nn_v = 12\namplitude = 0.02").unwrap();
        writeln!(f, "angular = const:2.0\ndiagonal = epsilon:0.1").unwrap();
        drop(f);
        let cfg = ExperimentConfig::from_file(&path).unwrap();
        assert_eq!(cfg.gamma, Rational::ratio(-1, 2));
        assert_eq!(cfg.n_v, 12);
        assert!(matches!(
            cfg.diagonal_policy().unwrap(),
            DiagonalPolicy::EpsilonShift(_)
        ));

        std::fs::write(&path, "nonsense line\n").unwrap();
        let err = format!("{:#}", ExperimentConfig::from_file(&path).unwrap_err());
        assert!(err.contains(":1"), "error should carry the line number: {err}");

        std::fs::write(&path, "unknown_key = 3\n").unwrap();
        assert!(ExperimentConfig::from_file(&path).is_err());
    }
}
