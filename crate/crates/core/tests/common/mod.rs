//! Independent reference computations shared by the integration tests.
//!
//! Nothing here calls into the solver's root finder: the star pressure is
//! bracketed and bisected directly from the shock and rarefaction relations.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tammann_fv::{Cons, Material, Prim, TammannEos, ATM};

/// `u_k -/+ F_k(p)` written out from the jump relations, no derivatives.
pub fn velocity_jump(p: f64, s: &Prim, eos: &TammannEos) -> f64 {
    let g = eos.gamma;
    let pt = p + eos.p_inf;
    let pk = s.p + eos.p_inf;
    if p > s.p {
        let rho_star = s.rho * (pt / pk + (g - 1.0) / (g + 1.0)) / ((g - 1.0) / (g + 1.0) * pt / pk + 1.0);
        // Q^2 = rho rho* (p* - p) / (rho* - rho), with the density jump
        // rho* - rho = rho (pt/pk - 1) (2/(g+1)) / ((g-1)/(g+1) pt/pk + 1)
        // divided out so weak shocks do not cancel
        let q = (rho_star * 0.5 * (g + 1.0) * ((g - 1.0) / (g + 1.0) * pt + pk)).sqrt();
        (p - s.p) / q
    } else {
        let c = (g * pk / s.rho).sqrt();
        2.0 * c / (g - 1.0) * ((pt / pk).powf((g - 1.0) / (2.0 * g)) - 1.0)
    }
}

pub fn bisect_star(l: &Prim, r: &Prim, el: &TammannEos, er: &TammannEos) -> (f64, f64) {
    let phi = |p: f64| r.u - l.u + velocity_jump(p, l, el) + velocity_jump(p, r, er);
    let mut lo = -el.p_inf.min(er.p_inf);
    let mut hi = l.p.max(r.p).max(1.0);
    while phi(hi) < 0.0 {
        hi = lo + 2.0 * (hi - lo);
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let p = 0.5 * (lo + hi);
    (p, l.u - velocity_jump(p, l, el))
}

pub fn cons(eos: &TammannEos, p: &Prim) -> Cons {
    Cons::new(p.rho, p.rho * p.u, p.rho * p.v, eos.total_energy(p))
}

pub fn flux(eos: &TammannEos, p: &Prim) -> Cons {
    let e = eos.total_energy(p);
    Cons::new(p.rho * p.u, p.rho * p.u * p.u + p.p, p.rho * p.u * p.v, p.u * (e + p.p))
}

pub fn materials() -> [Material; 3] {
    [Material::air(), Material::plastic(), Material::water()]
}

/// Random state of material `m`: density within a factor two of ambient,
/// pressure a few atmospheres around ambient, velocity a fraction of c.
pub fn random_state(rng: &mut ChaCha8Rng, m: &Material) -> Prim {
    let rho = m.rho_ref * rng.gen_range(0.5..2.0);
    let p = ATM * 10f64.powf(rng.gen_range(-0.7..1.5));
    let c = m.eos.sound_speed(&Prim::new_1d(rho, 0.0, p)).unwrap();
    let u = c * rng.gen_range(-0.15..0.15);
    Prim::new_1d(rho, u, p)
}

/// Sampled series difference in the L1 sense over a common uniform time grid.
pub fn resample(series: &[(f64, f64)], t: f64) -> f64 {
    match series.binary_search_by(|s| s.0.partial_cmp(&t).unwrap()) {
        Ok(i) => series[i].1,
        Err(0) => series[0].1,
        Err(i) if i >= series.len() => series[series.len() - 1].1,
        Err(i) => {
            let (t0, p0) = series[i - 1];
            let (t1, p1) = series[i];
            p0 + (p1 - p0) * (t - t0) / (t1 - t0)
        }
    }
}

/// Largest residuals of one exact solution, all relative.
#[derive(Debug, Default, Clone, Copy)]
pub struct ExactResiduals {
    /// `|Phi(p*)|` over the largest speed of the problem.
    pub phi: f64,
    /// Jump conditions across shocks.
    pub rankine_hugoniot: f64,
    /// Entropy and Riemann-invariant drift through rarefactions.
    pub invariants: f64,
    /// Star values after a uniform velocity shift.
    pub galilean: f64,
    /// Star values of the mirrored problem.
    pub mirror: f64,
}

impl ExactResiduals {
    pub fn max(&mut self, o: &ExactResiduals) {
        self.phi = self.phi.max(o.phi);
        self.rankine_hugoniot = self.rankine_hugoniot.max(o.rankine_hugoniot);
        self.invariants = self.invariants.max(o.invariants);
        self.galilean = self.galilean.max(o.galilean);
        self.mirror = self.mirror.max(o.mirror);
    }
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale
}

fn rh_residual(ahead: &Prim, behind: &Prim, eos: &TammannEos, s: f64) -> f64 {
    let (qa, qb) = (cons(eos, ahead), cons(eos, behind));
    let (fa, fb) = (flux(eos, ahead), flux(eos, behind));
    let a = [qa.rho, qa.mx, qa.energy];
    let b = [qb.rho, qb.mx, qb.energy];
    let f = [fa.rho, fa.mx, fa.energy];
    let g = [fb.rho, fb.mx, fb.energy];
    (0..3)
        .map(|k| {
            let res = (g[k] - f[k]) - s * (b[k] - a[k]);
            let scale = g[k].abs() + f[k].abs() + (s * b[k]).abs() + (s * a[k]).abs();
            res.abs() / scale.max(1e-300)
        })
        .fold(0.0, f64::max)
}

/// Entropy `(p + p_inf) / rho^gamma` and `u -/+ 2c/(gamma - 1)` at `s`,
/// relative to their values at `outer`.
fn invariant_drift(outer: &Prim, s: &Prim, eos: &TammannEos, sign: f64) -> f64 {
    let g = eos.gamma;
    let ent = |p: &Prim| (p.p + eos.p_inf) / p.rho.powf(g);
    let c = |p: &Prim| (g * (p.p + eos.p_inf) / p.rho).sqrt();
    let inv = |p: &Prim| p.u - sign * 2.0 * c(p) / (g - 1.0);
    let e0 = ent(outer);
    let i0 = inv(outer);
    let scale = outer.u.abs() + 2.0 * c(outer) / (g - 1.0);
    (rel(ent(s), e0, e0)).max(rel(inv(s), i0, scale))
}

/// Checks one exact solution against the oracles above.
pub fn exact_residuals(l: &Prim, r: &Prim, el: &TammannEos, er: &TammannEos) -> ExactResiduals {
    use tammann_fv::riemann::exact::solve_star;
    use tammann_fv::riemann::WaveKind;
    let fan = solve_star(l, r, el, er).expect("valid Riemann problem");
    let cl = el.sound_speed(l).unwrap();
    let cr = er.sound_speed(r).unwrap();
    let speed_scale = cl.max(cr).max(l.u.abs()).max(r.u.abs());
    let p_scale = fan.p_star.abs() + el.p_inf.max(er.p_inf) + l.p.abs().max(r.p.abs());
    let mut out = ExactResiduals::default();
    let phi = r.u - l.u + velocity_jump(fan.p_star, l, el) + velocity_jump(fan.p_star, r, er);
    out.phi = phi.abs() / speed_scale;

    for (outer, star, eos, wave, sign) in [
        (l, fan.star_left(), el, fan.wave_l, -1.0),
        (r, fan.star_right(), er, fan.wave_r, 1.0),
    ] {
        match wave.kind {
            WaveKind::Shock => {
                out.rankine_hugoniot = out.rankine_hugoniot.max(rh_residual(outer, &star, eos, wave.head));
            }
            WaveKind::Rarefaction => {
                let mid = fan.sample(0.5 * (wave.head + wave.tail));
                out.invariants = out
                    .invariants
                    .max(invariant_drift(outer, &star, eos, sign))
                    .max(invariant_drift(outer, &mid, eos, sign));
            }
        }
    }

    let shift = 0.37 * speed_scale;
    let moved = |p: &Prim, du: f64| Prim::new_1d(p.rho, p.u + du, p.p);
    let g = solve_star(&moved(l, shift), &moved(r, shift), el, er).unwrap();
    out.galilean = rel(g.p_star, fan.p_star, p_scale).max(rel(g.u_star - shift, fan.u_star, speed_scale));
    let flip = |p: &Prim| Prim::new_1d(p.rho, -p.u, p.p);
    let m = solve_star(&flip(r), &flip(l), er, el).unwrap();
    out.mirror = rel(m.p_star, fan.p_star, p_scale).max(rel(-m.u_star, fan.u_star, speed_scale));
    out
}
