//! Exact Riemann solver for the Euler equations with a Tammann EOS whose
//! parameters jump across the contact.
//!
//! The star pressure is the root of `Phi(p) = phi_r(p) - phi_l(p)`, where each
//! `phi_k` connects the outer state to the star region through a shock
//! (Rankine-Hugoniot) when `p > p_k` or a rarefaction (Riemann invariants)
//! when `p < p_k`. `Phi` is monotone increasing, so a bracketed Newton
//! iteration with bisection fallback is used.

use crate::eos::TammannEos;
use crate::error::{Error, Result};
use crate::riemann::Fluctuations;
use crate::state::{Cons, Prim};

const MAX_ITERATIONS: usize = 100;
const PHI_TOLERANCE: f64 = 1e-10;
const DP_TOLERANCE: f64 = 1e-12;
/// Relative pressure gap below which an acoustic wave has zero strength.
const DEGENERATE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WaveKind {
    Shock,
    Rarefaction,
}

/// Extent of one acoustic wave in `x/t`. A shock has `head == tail`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcousticWave {
    pub kind: WaveKind,
    pub head: f64,
    pub tail: f64,
}

impl AcousticWave {
    /// Representative speed: the shock speed, or the mean of head and tail
    /// for a rarefaction.
    pub fn speed(&self) -> f64 {
        match self.kind {
            WaveKind::Shock => self.head,
            WaveKind::Rarefaction => 0.5 * (self.head + self.tail),
        }
    }

    pub fn leftmost(&self) -> f64 {
        self.head.min(self.tail)
    }

    pub fn rightmost(&self) -> f64 {
        self.head.max(self.tail)
    }
}

/// Complete similarity solution of one Riemann problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiemannFan {
    pub left: Prim,
    pub right: Prim,
    pub eos_l: TammannEos,
    pub eos_r: TammannEos,
    pub p_star: f64,
    pub u_star: f64,
    pub rho_star_l: f64,
    pub rho_star_r: f64,
    pub wave_l: AcousticWave,
    pub wave_r: AcousticWave,
    /// Number of root-finder iterations used.
    pub iterations: usize,
}

impl RiemannFan {
    pub fn s_l(&self) -> f64 {
        self.wave_l.speed()
    }

    pub fn s_star(&self) -> f64 {
        self.u_star
    }

    pub fn s_r(&self) -> f64 {
        self.wave_r.speed()
    }

    pub fn star_left(&self) -> Prim {
        Prim::new(self.rho_star_l, self.u_star, self.left.v, self.p_star)
    }

    pub fn star_right(&self) -> Prim {
        Prim::new(self.rho_star_r, self.u_star, self.right.v, self.p_star)
    }

    /// Primitive state on the ray `x/t = xi`.
    pub fn sample(&self, xi: f64) -> Prim {
        if xi <= self.u_star {
            let l = &self.left;
            match self.wave_l.kind {
                WaveKind::Shock => {
                    if xi < self.wave_l.head {
                        *l
                    } else {
                        self.star_left()
                    }
                }
                WaveKind::Rarefaction => {
                    if xi <= self.wave_l.head {
                        *l
                    } else if xi >= self.wave_l.tail {
                        self.star_left()
                    } else {
                        let g = self.eos_l.gamma;
                        let c = self.eos_l.sound_speed_unchecked(l.rho, l.p);
                        let u = (l.u * (g - 1.0) + 2.0 * (xi + c)) / (g + 1.0);
                        let ratio = (u - xi) / c;
                        Prim::new(
                            l.rho * ratio.powf(2.0 / (g - 1.0)),
                            u,
                            l.v,
                            (l.p + self.eos_l.p_inf) * ratio.powf(2.0 * g / (g - 1.0)) - self.eos_l.p_inf,
                        )
                    }
                }
            }
        } else {
            let r = &self.right;
            match self.wave_r.kind {
                WaveKind::Shock => {
                    if xi > self.wave_r.head {
                        *r
                    } else {
                        self.star_right()
                    }
                }
                WaveKind::Rarefaction => {
                    if xi >= self.wave_r.head {
                        *r
                    } else if xi <= self.wave_r.tail {
                        self.star_right()
                    } else {
                        let g = self.eos_r.gamma;
                        let c = self.eos_r.sound_speed_unchecked(r.rho, r.p);
                        let u = (r.u * (g - 1.0) + 2.0 * (xi - c)) / (g + 1.0);
                        let ratio = (xi - u) / c;
                        Prim::new(
                            r.rho * ratio.powf(2.0 / (g - 1.0)),
                            u,
                            r.v,
                            (r.p + self.eos_r.p_inf) * ratio.powf(2.0 * g / (g - 1.0)) - self.eos_r.p_inf,
                        )
                    }
                }
            }
        }
    }

    /// EOS governing the ray `x/t = xi`.
    pub fn eos_at(&self, xi: f64) -> &TammannEos {
        if xi <= self.u_star {
            &self.eos_l
        } else {
            &self.eos_r
        }
    }

    /// The four constant states `q_l, q*_l, q*_r, q_r` in conserved form.
    pub fn conserved_states(&self) -> [Cons; 4] {
        [
            cons(&self.eos_l, &self.left),
            cons(&self.eos_l, &self.star_left()),
            cons(&self.eos_r, &self.star_right()),
            cons(&self.eos_r, &self.right),
        ]
    }

    /// Waves `q*_l - q_l`, `q*_r - q*_l`, `q_r - q*_r` and their speeds.
    pub fn waves(&self) -> ([Cons; 3], [f64; 3]) {
        let [ql, qsl, qsr, qr] = self.conserved_states();
        ([qsl - ql, qsr - qsl, qr - qsr], [self.s_l(), self.u_star, self.s_r()])
    }
}

#[inline]
fn cons(eos: &TammannEos, p: &Prim) -> Cons {
    let energy = eos.total_energy(p);
    Cons::new(p.rho, p.rho * p.u, p.rho * p.v, energy)
}

fn validate(state: &Prim, eos: &TammannEos) -> Result<()> {
    eos.sound_speed(state).map(|_| ())
}

/// Velocity jump function `F_k(p)` and its derivative, choosing the shock or
/// rarefaction branch from `p` versus `p_k`.
fn jump_function(p: f64, state: &Prim, eos: &TammannEos) -> (f64, f64) {
    let g = eos.gamma;
    let pt = p + eos.p_inf;
    let pkt = state.p + eos.p_inf;
    if p >= state.p || (p - state.p).abs() <= DEGENERATE_TOLERANCE * pkt {
        let a = 2.0 / ((g + 1.0) * state.rho);
        let b = pkt * (g - 1.0) / (g + 1.0);
        let root = (a / (pt + b)).sqrt();
        let f = (p - state.p) * root;
        let df = root * (1.0 - 0.5 * (p - state.p) / (pt + b));
        (f, df)
    } else {
        let c = (g * pkt / state.rho).sqrt();
        let z = (g - 1.0) / (2.0 * g);
        let ratio = (pt / pkt).max(0.0);
        let f = 2.0 * c / (g - 1.0) * (ratio.powf(z) - 1.0);
        let df = if ratio > 0.0 {
            ratio.powf(-(g + 1.0) / (2.0 * g)) / (state.rho * c)
        } else {
            f64::INFINITY
        };
        (f, df)
    }
}

/// Mass flux through a shock connecting `state` to pressure `p_star`.
fn shock_mass_flux(p_star: f64, state: &Prim, eos: &TammannEos) -> Result<f64> {
    let g = eos.gamma;
    let radicand = (p_star + eos.p_inf) + (state.p + eos.p_inf) * (g - 1.0) / (g + 1.0);
    if !(radicand > 0.0) {
        return Err(Error::InvalidStarPressure {
            p_star,
            reason: format!("negative mass-flux radicand {radicand}"),
        });
    }
    Ok((state.rho * radicand * (g + 1.0) / 2.0).sqrt())
}

/// Star velocity implied by connecting `state` to `p_star` through a shock.
pub fn phi_shock(p_star: f64, state: &Prim, eos: &TammannEos, side: Side) -> Result<f64> {
    validate(state, eos)?;
    let q = shock_mass_flux(p_star, state, eos)?;
    Ok(state.u + side.sign() * (p_star - state.p) / q)
}

/// State behind a shock of pressure `p_post` running into `ahead`, which
/// sits on `side` of the shock, together with the shock speed.
pub fn post_shock_state(ahead: &Prim, eos: &TammannEos, p_post: f64, side: Side) -> Result<(Prim, f64)> {
    if !(p_post >= ahead.p) {
        return Err(Error::InvalidStarPressure {
            p_star: p_post,
            reason: format!("a shock needs p_post >= p_ahead = {}", ahead.p),
        });
    }
    let u = phi_shock(p_post, ahead, eos, side)?;
    let ratio = (p_post + eos.p_inf) / (ahead.p + eos.p_inf);
    let beta = (eos.gamma - 1.0) / (eos.gamma + 1.0);
    let rho = ahead.rho * (ratio + beta) / (ratio * beta + 1.0);
    let s = ahead.u + side.sign() * shock_mass_flux(p_post, ahead, eos)? / ahead.rho;
    Ok((Prim::new(rho, u, ahead.v, p_post), s))
}

/// Star velocity implied by connecting `state` to `p_star` through a rarefaction.
pub fn phi_rarefaction(p_star: f64, state: &Prim, eos: &TammannEos, side: Side) -> Result<f64> {
    validate(state, eos)?;
    let pt = p_star + eos.p_inf;
    if !(pt >= 0.0) {
        return Err(Error::InvalidStarPressure {
            p_star,
            reason: "p* + p_inf must be non-negative".into(),
        });
    }
    let g = eos.gamma;
    let c = eos.sound_speed_unchecked(state.rho, state.p);
    let ratio = pt / (state.p + eos.p_inf);
    Ok(state.u - side.sign() * 2.0 * c / (g - 1.0) * (1.0 - ratio.powf((g - 1.0) / (2.0 * g))))
}

/// `Phi(p) = phi_r(p) - phi_l(p)` with the branch of each side selected by `p`.
pub fn phi_residual(p: f64, left: &Prim, right: &Prim, eos_l: &TammannEos, eos_r: &TammannEos) -> f64 {
    let (fl, _) = jump_function(p, left, eos_l);
    let (fr, _) = jump_function(p, right, eos_r);
    right.u - left.u + fl + fr
}

fn initial_guess(left: &Prim, right: &Prim, eos_l: &TammannEos, eos_r: &TammannEos) -> f64 {
    let cl = eos_l.sound_speed_unchecked(left.rho, left.p);
    let cr = eos_r.sound_speed_unchecked(right.rho, right.p);
    if eos_l == eos_r {
        // two-rarefaction approximation, exact when both waves are rarefactions
        let g = eos_l.gamma;
        let z = (g - 1.0) / (2.0 * g);
        let pl = left.p + eos_l.p_inf;
        let pr = right.p + eos_l.p_inf;
        let num = cl + cr - 0.5 * (g - 1.0) * (right.u - left.u);
        let den = cl / pl.powf(z) + cr / pr.powf(z);
        if num > 0.0 {
            return (num / den).powf(1.0 / z) - eos_l.p_inf;
        }
        return -eos_l.p_inf;
    }
    // acoustic (impedance-weighted) estimate
    let zl = left.rho * cl;
    let zr = right.rho * cr;
    (zr * left.p + zl * right.p - zl * zr * (right.u - left.u)) / (zl + zr)
}

/// Solves the Riemann problem between `left` and `right`.
pub fn solve_star(left: &Prim, right: &Prim, eos_l: &TammannEos, eos_r: &TammannEos) -> Result<RiemannFan> {
    validate(left, eos_l)?;
    validate(right, eos_r)?;
    let cl = eos_l.sound_speed_unchecked(left.rho, left.p);
    let cr = eos_r.sound_speed_unchecked(right.rho, right.p);

    let (p_star, iterations) = if left.p == right.p && left.u == right.u {
        (left.p, 0)
    } else {
        find_star_pressure(left, right, eos_l, eos_r, cl, cr)?
    };

    let (fl, _) = jump_function(p_star, left, eos_l);
    let (fr, _) = jump_function(p_star, right, eos_r);
    let u_star = 0.5 * (left.u + right.u) + 0.5 * (fr - fl);

    let (rho_star_l, wave_l) = star_side(p_star, u_star, left, eos_l, cl, Side::Left)?;
    let (rho_star_r, wave_r) = star_side(p_star, u_star, right, eos_r, cr, Side::Right)?;

    Ok(RiemannFan {
        left: *left,
        right: *right,
        eos_l: *eos_l,
        eos_r: *eos_r,
        p_star,
        u_star,
        rho_star_l,
        rho_star_r,
        wave_l,
        wave_r,
        iterations,
    })
}

fn find_star_pressure(
    left: &Prim,
    right: &Prim,
    eos_l: &TammannEos,
    eos_r: &TammannEos,
    cl: f64,
    cr: f64,
) -> Result<(f64, usize)> {
    let phi = |p: f64| {
        let (fl, dfl) = jump_function(p, left, eos_l);
        let (fr, dfr) = jump_function(p, right, eos_r);
        (right.u - left.u + fl + fr, dfl + dfr)
    };
    let floor = -eos_l.p_inf.min(eos_r.p_inf);
    let (phi_floor, _) = phi(floor);
    if phi_floor >= 0.0 {
        return Err(Error::Vacuum(format!(
            "Phi(p_min = {floor}) = {phi_floor} >= 0, no star pressure above the cavitation limit"
        )));
    }

    let velocity_scale = cl.max(cr).max(left.u.abs()).max(right.u.abs());
    let phi_tol = PHI_TOLERANCE * velocity_scale;
    let pressure_scale = left.p.abs().max(right.p.abs());

    let mut lo = floor;
    let mut hi = left.p.max(right.p);
    let mut span = (hi - floor).max(pressure_scale).max(1e-300);
    let mut grow = 0;
    while phi(hi).0 <= 0.0 {
        lo = hi;
        span *= 2.0;
        hi = floor + span;
        grow += 1;
        if grow > 2000 || !hi.is_finite() {
            return Err(Error::NoConvergence {
                iterations: 0,
                p_star: hi,
                residual: phi(hi).0,
            });
        }
    }

    let mut p = initial_guess(left, right, eos_l, eos_r);
    if !(p > lo && p < hi) {
        p = 0.5 * (lo + hi);
    }
    let mut last = (p, f64::NAN);
    for it in 1..=MAX_ITERATIONS {
        let (f, df) = phi(p);
        last = (p, f);
        if f == 0.0 {
            return Ok((p, it));
        }
        if f < 0.0 {
            lo = p;
        } else {
            hi = p;
        }
        let mut next = p - f / df;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let dp = (next - p).abs();
        let dp_tol = DP_TOLERANCE * p.abs().max(pressure_scale);
        if (f.abs() <= phi_tol && dp <= dp_tol) || hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            let (fn_, _) = phi(next);
            return Ok(if fn_.abs() <= f.abs() { (next, it) } else { (p, it) });
        }
        p = next;
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        p_star: last.0,
        residual: last.1,
    })
}

fn star_side(
    p_star: f64,
    u_star: f64,
    state: &Prim,
    eos: &TammannEos,
    c: f64,
    side: Side,
) -> Result<(f64, AcousticWave)> {
    let g = eos.gamma;
    let pkt = state.p + eos.p_inf;
    let degenerate = (p_star - state.p).abs() <= DEGENERATE_TOLERANCE * pkt;
    if p_star > state.p || degenerate {
        let ratio = (p_star + eos.p_inf) / pkt;
        let beta = (g - 1.0) / (g + 1.0);
        let rho = state.rho * (ratio + beta) / (ratio * beta + 1.0);
        let q = shock_mass_flux(p_star, state, eos)?;
        let s = state.u + side.sign() * q / state.rho;
        Ok((
            rho,
            AcousticWave {
                kind: WaveKind::Shock,
                head: s,
                tail: s,
            },
        ))
    } else {
        let rho = eos.isentropic_density(state, p_star)?;
        let c_star = (g * (p_star + eos.p_inf) / rho).sqrt();
        Ok((
            rho,
            AcousticWave {
                kind: WaveKind::Rarefaction,
                head: state.u + side.sign() * c,
                tail: u_star + side.sign() * c_star,
            },
        ))
    }
}

/// Waves, speeds and fluctuations from the exact solution.
///
/// Without the shift the fluctuations are split by the Godunov flux on the
/// ray `x/t = 0`, so `A- + A+ = f(q_r) - f(q_l)`. With the shift the frame
/// follows the contact and `A-`, `A+` are summed from the shifted speeds.
pub fn exact_fluctuations(
    left: &Prim,
    right: &Prim,
    eos_l: &TammannEos,
    eos_r: &TammannEos,
    lagrangian_shift: bool,
) -> Result<Fluctuations> {
    let fan = solve_star(left, right, eos_l, eos_r)?;
    let (waves, speeds) = fan.waves();
    if lagrangian_shift {
        return Ok(Fluctuations::lagrangian(waves, speeds));
    }
    let q0 = fan.sample(0.0);
    let f0 = fan.eos_at(0.0).flux(&q0);
    Ok(Fluctuations {
        waves,
        speeds,
        amdq: f0 - eos_l.flux(left),
        apdq: eos_r.flux(right) - f0,
    })
}
