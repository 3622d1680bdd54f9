//! Riemann solvers for the Euler-Tammann system and the wave/fluctuation
//! representation consumed by the wave-propagation update.

pub mod exact;
pub mod hllc;

use serde::{Deserialize, Serialize};

use crate::eos::TammannEos;
use crate::error::Result;
use crate::state::{Cons, Prim};

pub use exact::{RiemannFan, Side, WaveKind};
pub use hllc::HllcSolution;

/// Three waves with their speeds plus the left- and right-going fluctuations
/// of one edge.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Fluctuations {
    pub waves: [Cons; 3],
    pub speeds: [f64; 3],
    pub amdq: Cons,
    pub apdq: Cons,
}

impl Fluctuations {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Assembles `A-` and `A+` as sums of `s^- W` and `s^+ W`.
    pub fn from_waves(waves: [Cons; 3], speeds: [f64; 3]) -> Self {
        let mut amdq = Cons::ZERO;
        let mut apdq = Cons::ZERO;
        for (w, &s) in waves.iter().zip(speeds.iter()) {
            amdq += s.min(0.0) * *w;
            apdq += s.max(0.0) * *w;
        }
        Self {
            waves,
            speeds,
            amdq,
            apdq,
        }
    }

    /// Moves the frame of reference with the contact: every speed is reduced
    /// by `s_star` and the middle speed becomes exactly zero. The waves are
    /// unchanged and the fluctuations are reassembled from them.
    pub fn lagrangian(waves: [Cons; 3], speeds: [f64; 3]) -> Self {
        let s_star = speeds[1];
        Self::from_waves(waves, [speeds[0] - s_star, 0.0, speeds[2] - s_star])
    }

    pub fn max_speed(&self) -> f64 {
        self.speeds.iter().fold(0.0_f64, |m, s| m.max(s.abs()))
    }

    /// Rotates waves and fluctuations back from an edge-normal frame.
    pub fn rotate_from(self, n: [f64; 2]) -> Self {
        Self {
            waves: self.waves.map(|w| w.rotate_from(n)),
            speeds: self.speeds,
            amdq: self.amdq.rotate_from(n),
            apdq: self.apdq.rotate_from(n),
        }
    }

    /// Multiplies speeds and fluctuations by an edge-length ratio.
    pub fn scaled(self, ratio: f64) -> Self {
        Self {
            waves: self.waves,
            speeds: self.speeds.map(|s| s * ratio),
            amdq: ratio * self.amdq,
            apdq: ratio * self.apdq,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InteriorSolver {
    #[default]
    Hllc,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InterfaceSolver {
    #[default]
    ExactLagrangian,
    HllcLagrangian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpeedEstimate {
    #[default]
    Davis,
    Roe,
}

/// Solver selection for interior edges (same material on both sides) and
/// interface edges (material change).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RiemannConfig {
    pub interior: InteriorSolver,
    pub interface: InterfaceSolver,
    pub speeds: SpeedEstimate,
}

impl RiemannConfig {
    /// Solves the edge problem between `left` and `right` in the frame where
    /// `u` is the edge-normal velocity.
    pub fn solve(
        &self,
        left: &Prim,
        right: &Prim,
        eos_l: &TammannEos,
        eos_r: &TammannEos,
        interface: bool,
    ) -> Result<Fluctuations> {
        if !interface && left == right && eos_l == eos_r {
            return Ok(Fluctuations::zero());
        }
        if interface {
            match self.interface {
                InterfaceSolver::ExactLagrangian => exact::exact_fluctuations(left, right, eos_l, eos_r, true),
                InterfaceSolver::HllcLagrangian => {
                    hllc::hllc_fluctuations(left, right, eos_l, eos_r, true, self.speeds)
                }
            }
        } else {
            match self.interior {
                InteriorSolver::Hllc => hllc::hllc_fluctuations(left, right, eos_l, eos_r, false, self.speeds),
                InteriorSolver::Exact => exact::exact_fluctuations(left, right, eos_l, eos_r, false),
            }
        }
    }
}
