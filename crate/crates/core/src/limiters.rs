//! Wave limiters for the high-resolution correction terms.
//!
//! Waves are limited as `W~ = phi(theta) W`. The smoothness ratio `theta`
//! either comes from projecting the upwind wave of the same family onto the
//! local one, or, near a material interface, from the amplitude of the
//! acoustic wave that the interface transmits into the local cell.

use serde::{Deserialize, Serialize};

use crate::state::Cons;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LimiterKind {
    None,
    #[default]
    Minmod,
    /// `minmod(1, s theta)`, more dissipative than minmod for `s < 1`.
    ModifiedMinmod,
    Mc,
    #[serde(alias = "van_leer")]
    Vanleer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ThetaPolicy {
    StandardProjection,
    #[default]
    TransmissionBased,
}

pub const DEFAULT_MODIFIED_MINMOD_SCALE: f64 = 1.0 / 3.0;

/// A limiter kind together with the modified-minmod scale it uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limiter {
    pub kind: LimiterKind,
    pub scale: f64,
}

impl Limiter {
    pub fn new(kind: LimiterKind) -> Self {
        Self {
            kind,
            scale: DEFAULT_MODIFIED_MINMOD_SCALE,
        }
    }

    pub fn modified_minmod(scale: f64) -> Self {
        Self {
            kind: LimiterKind::ModifiedMinmod,
            scale,
        }
    }

    pub fn phi(&self, theta: f64) -> f64 {
        flux_limiter(theta, self.kind, self.scale)
    }
}

/// Flux-limiter function `phi(theta)`.
pub fn flux_limiter(theta: f64, kind: LimiterKind, scale: f64) -> f64 {
    if !theta.is_finite() {
        return if kind == LimiterKind::None { 1.0 } else { 0.0 };
    }
    match kind {
        LimiterKind::None => 1.0,
        LimiterKind::Minmod => theta.min(1.0).max(0.0),
        LimiterKind::ModifiedMinmod => (scale * theta).min(1.0).max(0.0),
        LimiterKind::Mc => (0.5 * (1.0 + theta)).min(2.0).min(2.0 * theta).max(0.0),
        LimiterKind::Vanleer => (theta + theta.abs()) / (1.0 + theta.abs()),
    }
}

/// `theta = (W_up . W_here) / (W_here . W_here)`, zero for a vanishing wave.
pub fn theta_standard(here: &Cons, upwind: &Cons) -> f64 {
    let den = here.dot(here);
    if den == 0.0 || !den.is_finite() {
        0.0
    } else {
        upwind.dot(here) / den
    }
}

/// Acoustic wave strengths of a wave in the density/normal-momentum system
/// at an edge whose left and right cells have sound speeds `c_left`,
/// `c_right`: coefficients of `[1, -c_left]` and `[1, c_right]`.
pub fn acoustic_alphas(rho: f64, m_normal: f64, c_left: f64, c_right: f64) -> [f64; 2] {
    let sum = c_left + c_right;
    [(c_right * rho - m_normal) / sum, (c_left * rho + m_normal) / sum]
}

/// Acoustic families seen by the transmission limiter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AcousticFamily {
    /// Left-going: the upwind wave sits at the next edge to the right.
    Left,
    /// Right-going: the upwind wave sits at the previous edge to the left.
    Right,
}

/// Transmission-based `theta` at edge `i-1/2`, with `c_minus = c_{i-1}` and
/// `c_plus = c_i` the sound speeds of the two adjacent cells.
pub fn theta_transmission(
    alpha_upwind: f64,
    alpha_here: f64,
    c_minus: f64,
    c_plus: f64,
    family: AcousticFamily,
) -> f64 {
    if alpha_here == 0.0 {
        return 0.0;
    }
    let t = match family {
        AcousticFamily::Left => 2.0 * c_plus / (c_minus + c_plus),
        AcousticFamily::Right => 2.0 * c_minus / (c_minus + c_plus),
    };
    alpha_upwind / alpha_here * t
}

/// Everything the limiter needs to know about one edge.
#[derive(Debug, Clone, Copy)]
pub struct EdgeWaves {
    pub waves: [Cons; 3],
    pub speeds: [f64; 3],
    pub c_left: f64,
    pub c_right: f64,
    /// Unit normal of the edge; waves are given in the physical frame.
    pub normal: [f64; 2],
    /// The two cells of this edge carry different materials.
    pub interface: bool,
}

impl EdgeWaves {
    fn alpha(&self, family: usize, which: usize) -> f64 {
        let w = self.waves[family].rotate_to(self.normal);
        acoustic_alphas(w.rho, w.mx, self.c_left, self.c_right)[which]
    }
}

/// Smoothness ratios of the three waves at `here`, given the neighbouring
/// edges `prev` (to the left) and `next` (to the right).
pub fn edge_thetas(prev: &EdgeWaves, here: &EdgeWaves, next: &EdgeWaves, policy: ThetaPolicy) -> [f64; 3] {
    let near_interface = prev.interface || here.interface || next.interface;
    if policy == ThetaPolicy::TransmissionBased && near_interface {
        let t1 = theta_transmission(
            next.alpha(0, 0),
            here.alpha(0, 0),
            here.c_left,
            here.c_right,
            AcousticFamily::Left,
        );
        let t3 = theta_transmission(
            prev.alpha(2, 1),
            here.alpha(2, 1),
            here.c_left,
            here.c_right,
            AcousticFamily::Right,
        );
        let t2 = if here.interface {
            0.0
        } else {
            contact_theta(prev, here, next)
        };
        [t1, t2, t3]
    } else {
        [
            theta_standard(&here.waves[0], &next.waves[0]),
            contact_theta(prev, here, next),
            theta_standard(&here.waves[2], &prev.waves[2]),
        ]
    }
}

fn contact_theta(prev: &EdgeWaves, here: &EdgeWaves, next: &EdgeWaves) -> f64 {
    let up = if here.speeds[1] >= 0.0 { prev } else { next };
    theta_standard(&here.waves[1], &up.waves[1])
}

pub fn limit_waves(waves: &[Cons; 3], thetas: &[f64; 3], limiter: Limiter) -> [Cons; 3] {
    let mut out = *waves;
    for (w, &t) in out.iter_mut().zip(thetas.iter()) {
        *w = limiter.phi(t) * *w;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const KINDS: [LimiterKind; 4] = [
        LimiterKind::Minmod,
        LimiterKind::ModifiedMinmod,
        LimiterKind::Mc,
        LimiterKind::Vanleer,
    ];

    #[test]
    fn pointwise_definitions() {
        let mm = |t| flux_limiter(t, LimiterKind::Minmod, 1.0 / 3.0);
        assert_eq!((mm(0.5), mm(2.0), mm(-1.0)), (0.5, 1.0, 0.0));
        let md = |t| flux_limiter(t, LimiterKind::ModifiedMinmod, 1.0 / 3.0);
        assert_eq!(md(3.0), 1.0);
        assert!((md(1.5) - 0.5).abs() < 1e-15);
        assert!((md(1.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(flux_limiter(1.0, LimiterKind::Mc, 0.0), 1.0);
        assert_eq!(flux_limiter(1.0, LimiterKind::Vanleer, 0.0), 1.0);
        assert_eq!(flux_limiter(3.0, LimiterKind::Mc, 0.0), 2.0);
        assert_eq!(flux_limiter(-4.0, LimiterKind::None, 0.0), 1.0);
    }

    #[test]
    fn tvd_region() {
        for k in 0..=4000 {
            let t = -5.0 + k as f64 * 0.0025;
            let bound = (2.0 * t).min(2.0).max(0.0);
            for kind in KINDS {
                let phi = flux_limiter(t, kind, DEFAULT_MODIFIED_MINMOD_SCALE);
                assert!((0.0..=bound + 1e-15).contains(&phi), "{kind:?} at {t}: {phi}");
            }
        }
    }

    #[test]
    fn unit_scale_is_minmod() {
        for k in -300..300 {
            let t = k as f64 * 0.013;
            assert_eq!(
                flux_limiter(t, LimiterKind::ModifiedMinmod, 1.0),
                flux_limiter(t, LimiterKind::Minmod, 1.0)
            );
        }
    }

    #[test]
    fn projection_ratio() {
        let w = Cons::new(1.0, -2.0, 0.5, 3.0);
        assert_eq!(theta_standard(&w, &w), 1.0);
        assert_eq!(theta_standard(&w, &Cons::ZERO), 0.0);
        assert_eq!(theta_standard(&w, &(2.0 * w)), 2.0);
        assert_eq!(theta_standard(&Cons::ZERO, &w), 0.0);
    }

    #[test]
    fn transmission_reductions() {
        assert_eq!(theta_transmission(0.3, 0.6, 2.0, 2.0, AcousticFamily::Left), 0.5);
        assert_eq!(theta_transmission(0.3, 0.6, 2.0, 2.0, AcousticFamily::Right), 0.5);
        assert_eq!(theta_transmission(1.0, 0.0, 1.0, 2.0, AcousticFamily::Left), 0.0);
        let t = theta_transmission(1.0, 1.0, 1.0, 1e12, AcousticFamily::Left);
        assert!((t - 2.0).abs() < 1e-11);
    }

    #[test]
    fn air_water_transmission_factor() {
        use crate::eos::Material;
        let ca = Material::air().ambient_sound_speed();
        let cw = Material::water().ambient_sound_speed();
        let t = theta_transmission(1.0, 1.0, ca, cw, AcousticFamily::Left);
        assert!((t - 1.620316334651835).abs() < 1e-13, "{t}");
    }

    #[test]
    fn alphas_reconstruct_the_wave() {
        let (cl, cr) = (343.0, 1465.0);
        let [a1, a2] = acoustic_alphas(0.7, -120.0, cl, cr);
        assert!((a1 + a2 - 0.7).abs() < 1e-14);
        assert!((-cl * a1 + cr * a2 + 120.0).abs() < 1e-11);
    }

    #[test]
    fn transmission_policy_matches_projection_for_equal_speeds() {
        // purely acoustic 1-waves [1, -c] in a uniform medium
        let c = 2.0;
        let edge = |a: f64| EdgeWaves {
            waves: [
                Cons::new(a, -c * a, 0.0, 0.0),
                Cons::ZERO,
                Cons::new(a, c * a, 0.0, 0.0),
            ],
            speeds: [-c, 0.0, c],
            c_left: c,
            c_right: c,
            normal: [1.0, 0.0],
            interface: false,
        };
        let (p, h, mut n) = (edge(0.2), edge(0.5), edge(0.9));
        let std = edge_thetas(&p, &h, &n, ThetaPolicy::StandardProjection);
        n.interface = true;
        let tr = edge_thetas(&p, &h, &n, ThetaPolicy::TransmissionBased);
        assert!((std[0] - tr[0]).abs() < 1e-14 && (std[2] - tr[2]).abs() < 1e-14);
        assert!((std[0] - 1.8).abs() < 1e-14 && (std[2] - 0.4).abs() < 1e-14);
    }

    #[test]
    fn limiting() {
        let w = [Cons::new(1.0, 2.0, 3.0, 4.0); 3];
        assert_eq!(limit_waves(&w, &[-1.0, 7.0, 0.2], Limiter::new(LimiterKind::None)), w);
        let z = limit_waves(&w, &[-1.0, -0.1, -3.0], Limiter::new(LimiterKind::Minmod));
        assert!(z.iter().all(|c| *c == Cons::ZERO));
        assert_eq!(limit_waves(&w, &[1.0; 3], Limiter::new(LimiterKind::Minmod)), w);
    }
}
