//! Numerical parameters shared by the 1D and 2D solvers.

use serde::{Deserialize, Serialize};

use crate::eos::MaterialTable;
use crate::limiters::{Limiter, LimiterKind, ThetaPolicy, DEFAULT_MODIFIED_MINMOD_SCALE};
use crate::riemann::RiemannConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    First,
    #[default]
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Splitting2D {
    /// Both sweeps from the same data, coupled by transverse corrections.
    #[default]
    Unsplit,
    /// x-sweep followed by a y-sweep on the updated data.
    Dimensional,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SourceSplitting {
    #[default]
    Strang,
    Godunov,
}

/// Energy row of the transverse fluctuations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TransverseEnergy {
    /// Enthalpy of the receiving cell times the density component.
    #[default]
    Acoustic,
    /// Zero. Unsplit runs then need a Courant number of about 0.5 or less.
    Neglected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LimiterConfig {
    pub bulk: LimiterKind,
    /// Limiter for edges touching a stiff-material cell.
    pub stiff_material: LimiterKind,
    /// Names of the materials treated as stiff.
    pub stiff_materials: Vec<String>,
    pub theta_policy: ThetaPolicy,
    pub modified_minmod_scale: f64,
}

impl Default for LimiterConfig {
    fn default() -> Self {
        Self {
            bulk: LimiterKind::Minmod,
            stiff_material: LimiterKind::ModifiedMinmod,
            stiff_materials: vec!["water".to_string()],
            theta_policy: ThetaPolicy::TransmissionBased,
            modified_minmod_scale: DEFAULT_MODIFIED_MINMOD_SCALE,
        }
    }
}

impl LimiterConfig {
    /// Plain minmod everywhere with projection-based ratios.
    pub fn standard_minmod() -> Self {
        Self {
            stiff_material: LimiterKind::Minmod,
            theta_policy: ThetaPolicy::StandardProjection,
            ..Self::default()
        }
    }

    pub fn resolve(&self, table: &MaterialTable) -> LimiterSet {
        LimiterSet {
            bulk: Limiter {
                kind: self.bulk,
                scale: self.modified_minmod_scale,
            },
            stiff: Limiter {
                kind: self.stiff_material,
                scale: self.modified_minmod_scale,
            },
            stiff_flags: table
                .iter()
                .map(|m| self.stiff_materials.iter().any(|s| s == &m.name))
                .collect(),
            policy: self.theta_policy,
        }
    }
}

/// Limiter choice per edge, resolved against a material table.
#[derive(Debug, Clone, PartialEq)]
pub struct LimiterSet {
    pub bulk: Limiter,
    pub stiff: Limiter,
    pub stiff_flags: Vec<bool>,
    pub policy: ThetaPolicy,
}

impl LimiterSet {
    pub fn for_edge(&self, mat_l: usize, mat_r: usize) -> Limiter {
        let stiff = |m: usize| self.stiff_flags.get(m).copied().unwrap_or(false);
        if stiff(mat_l) || stiff(mat_r) {
            self.stiff
        } else {
            self.bulk
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericsConfig {
    pub cfl: f64,
    /// Steps whose observed Courant number exceeds this are rejected.
    pub cfl_max: f64,
    pub fixed_dt: Option<f64>,
    pub order: Order,
    pub riemann: RiemannConfig,
    pub limiter: LimiterConfig,
    pub splitting: Splitting2D,
    pub transverse: bool,
    pub transverse_energy: TransverseEnergy,
    pub axisymmetric: bool,
    pub source_splitting: SourceSplitting,
    pub max_steps: usize,
}

impl Default for NumericsConfig {
    fn default() -> Self {
        Self {
            cfl: 0.9,
            cfl_max: 1.0,
            fixed_dt: None,
            order: Order::Second,
            riemann: RiemannConfig::default(),
            limiter: LimiterConfig::default(),
            splitting: Splitting2D::Unsplit,
            transverse: true,
            transverse_energy: TransverseEnergy::Acoustic,
            axisymmetric: true,
            source_splitting: SourceSplitting::Strang,
            max_steps: 5_000_000,
        }
    }
}

impl NumericsConfig {
    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: String| Err(crate::Error::Config(m));
        if !(self.cfl > 0.0 && self.cfl <= self.cfl_max) {
            return bad(format!(
                "cfl = {} must lie in (0, cfl_max = {}]",
                self.cfl, self.cfl_max
            ));
        }
        if !(self.cfl_max > 0.0 && self.cfl_max <= 1.0) {
            return bad(format!("cfl_max = {} must lie in (0, 1]", self.cfl_max));
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("fixed_dt = {dt} must be positive"));
            }
        }
        let s = self.limiter.modified_minmod_scale;
        if !(s > 0.0 && s <= 1.0) {
            return bad(format!("modified_minmod_scale = {s} must lie in (0, 1]"));
        }
        Ok(())
    }
}
