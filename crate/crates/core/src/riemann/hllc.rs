//! HLLC approximate Riemann solver with Davis or Roe-average speed bounds.

use crate::eos::TammannEos;
use crate::error::{Error, Result};
use crate::riemann::{Fluctuations, SpeedEstimate};
use crate::state::{Cons, Prim};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HllcSolution {
    pub s_l: f64,
    pub s_star: f64,
    pub s_r: f64,
    pub p_star: f64,
    pub q_l: Cons,
    pub q_star_l: Cons,
    pub q_star_r: Cons,
    pub q_r: Cons,
}

impl HllcSolution {
    pub fn waves(&self) -> [Cons; 3] {
        [
            self.q_star_l - self.q_l,
            self.q_star_r - self.q_star_l,
            self.q_r - self.q_star_r,
        ]
    }

    pub fn speeds(&self) -> [f64; 3] {
        [self.s_l, self.s_star, self.s_r]
    }
}

/// `S_l = min(u_l - c_l, u_r - c_r)`, `S_r = max(u_l + c_l, u_r + c_r)`.
pub fn davis_speeds(left: &Prim, right: &Prim, eos_l: &TammannEos, eos_r: &TammannEos) -> Result<(f64, f64)> {
    let cl = eos_l.sound_speed(left)?;
    let cr = eos_r.sound_speed(right)?;
    Ok(((left.u - cl).min(right.u - cr), (left.u + cl).max(right.u + cr)))
}

/// Einfeldt-type bounds built from square-root-density (Roe) averages.
///
/// With different EOS on the two sides the ratio of specific heats is
/// averaged with the same weights. Falls back to Davis bounds when the
/// averaged sound speed is not real.
pub fn roe_average_speeds(left: &Prim, right: &Prim, eos_l: &TammannEos, eos_r: &TammannEos) -> Result<(f64, f64)> {
    let cl = eos_l.sound_speed(left)?;
    let cr = eos_r.sound_speed(right)?;
    let wl = left.rho.sqrt();
    let wr = right.rho.sqrt();
    let avg = |a: f64, b: f64| (wl * a + wr * b) / (wl + wr);
    let enthalpy = |p: &Prim, eos: &TammannEos| (eos.total_energy(p) + p.p) / p.rho;
    let u = avg(left.u, right.u);
    let v = avg(left.v, right.v);
    let h = avg(enthalpy(left, eos_l), enthalpy(right, eos_r));
    let g = avg(eos_l.gamma, eos_r.gamma);
    let c2 = (g - 1.0) * (h - 0.5 * (u * u + v * v));
    if !(c2 > 0.0) {
        return davis_speeds(left, right, eos_l, eos_r);
    }
    let c = c2.sqrt();
    Ok(((left.u - cl).min(u - c), (u + c).max(right.u + cr)))
}

fn cons(eos: &TammannEos, p: &Prim) -> Cons {
    Cons::new(p.rho, p.rho * p.u, p.rho * p.v, eos.total_energy(p))
}

/// Contact speed and star states for given outer speed bounds.
pub fn hllc_star(
    left: &Prim,
    right: &Prim,
    eos_l: &TammannEos,
    eos_r: &TammannEos,
    s_l: f64,
    s_r: f64,
) -> Result<HllcSolution> {
    if !(s_l < s_r) {
        return Err(Error::DegenerateSpeeds(format!("S_l = {s_l} is not below S_r = {s_r}")));
    }
    let ml = left.rho * (s_l - left.u);
    let mr = right.rho * (s_r - right.u);
    let den = ml - mr;
    if den == 0.0 || !den.is_finite() {
        return Err(Error::DegenerateSpeeds(format!("contact speed denominator is {den}")));
    }
    let s_star = (right.p - left.p + left.u * ml - right.u * mr) / den;
    let p_star = left.p + ml * (s_star - left.u);

    let star = |prim: &Prim, eos: &TammannEos, s: f64| -> Cons {
        let q = cons(eos, prim);
        let factor = (s - prim.u) / (s - s_star);
        let rho = prim.rho * factor;
        Cons::new(
            rho,
            rho * s_star,
            rho * prim.v,
            factor * (q.energy + (s_star - prim.u) * (prim.rho * s_star + prim.p / (s - prim.u))),
        )
    };
    Ok(HllcSolution {
        s_l,
        s_star,
        s_r,
        p_star,
        q_l: cons(eos_l, left),
        q_star_l: star(left, eos_l, s_l),
        q_star_r: star(right, eos_r, s_r),
        q_r: cons(eos_r, right),
    })
}

pub fn hllc_solution(
    left: &Prim,
    right: &Prim,
    eos_l: &TammannEos,
    eos_r: &TammannEos,
    speeds: SpeedEstimate,
) -> Result<HllcSolution> {
    let (s_l, s_r) = match speeds {
        SpeedEstimate::Davis => davis_speeds(left, right, eos_l, eos_r)?,
        SpeedEstimate::Roe => roe_average_speeds(left, right, eos_l, eos_r)?,
    };
    hllc_star(left, right, eos_l, eos_r, s_l, s_r)
}

pub fn hllc_fluctuations(
    left: &Prim,
    right: &Prim,
    eos_l: &TammannEos,
    eos_r: &TammannEos,
    lagrangian_shift: bool,
    speeds: SpeedEstimate,
) -> Result<Fluctuations> {
    let sol = hllc_solution(left, right, eos_l, eos_r, speeds)?;
    if lagrangian_shift {
        Ok(Fluctuations::lagrangian(sol.waves(), sol.speeds()))
    } else {
        Ok(Fluctuations::from_waves(sol.waves(), sol.speeds()))
    }
}
