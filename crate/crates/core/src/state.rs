//! Conserved and primitive cell states.
//!
//! States carry two velocity components. In one dimension (and in the
//! rotated frame of a Riemann problem) `u` is the normal velocity and `v` is
//! a passively advected transverse velocity, zero for purely 1D runs. In the
//! axisymmetric solver `x` is the axial coordinate `z` and `y` the radial
//! coordinate `r`, so `u = u_z` and `v = u_r`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

/// Conserved variables `[rho, rho u, rho v, E]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cons {
    pub rho: f64,
    pub mx: f64,
    pub my: f64,
    pub energy: f64,
}

/// Primitive variables `[rho, u, v, p]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Prim {
    pub rho: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
}

impl Prim {
    pub fn new(rho: f64, u: f64, v: f64, p: f64) -> Self {
        Self { rho, u, v, p }
    }

    /// One-dimensional state with zero transverse velocity.
    pub fn new_1d(rho: f64, u: f64, p: f64) -> Self {
        Self { rho, u, v: 0.0, p }
    }
}

impl Cons {
    pub const ZERO: Cons = Cons {
        rho: 0.0,
        mx: 0.0,
        my: 0.0,
        energy: 0.0,
    };

    pub fn new(rho: f64, mx: f64, my: f64, energy: f64) -> Self {
        Self { rho, mx, my, energy }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.rho, self.mx, self.my, self.energy]
    }

    pub fn dot(&self, other: &Cons) -> f64 {
        self.rho * other.rho + self.mx * other.mx + self.my * other.my + self.energy * other.energy
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.rho
            .abs()
            .max(self.mx.abs())
            .max(self.my.abs())
            .max(self.energy.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.mx.is_finite() && self.my.is_finite() && self.energy.is_finite()
    }

    /// Rotates the momentum into the frame whose first axis is `n`.
    pub fn rotate_to(self, n: [f64; 2]) -> Cons {
        Cons {
            mx: n[0] * self.mx + n[1] * self.my,
            my: -n[1] * self.mx + n[0] * self.my,
            ..self
        }
    }

    /// Inverse of [`Cons::rotate_to`].
    pub fn rotate_from(self, n: [f64; 2]) -> Cons {
        Cons {
            mx: n[0] * self.mx - n[1] * self.my,
            my: n[1] * self.mx + n[0] * self.my,
            ..self
        }
    }
}

impl Index<usize> for Cons {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        match i {
            0 => &self.rho,
            1 => &self.mx,
            2 => &self.my,
            3 => &self.energy,
            _ => panic!("conserved component {i} out of range"),
        }
    }
}

impl IndexMut<usize> for Cons {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        match i {
            0 => &mut self.rho,
            1 => &mut self.mx,
            2 => &mut self.my,
            3 => &mut self.energy,
            _ => panic!("conserved component {i} out of range"),
        }
    }
}

impl Add for Cons {
    type Output = Cons;
    fn add(self, o: Cons) -> Cons {
        Cons::new(self.rho + o.rho, self.mx + o.mx, self.my + o.my, self.energy + o.energy)
    }
}

impl Sub for Cons {
    type Output = Cons;
    fn sub(self, o: Cons) -> Cons {
        Cons::new(self.rho - o.rho, self.mx - o.mx, self.my - o.my, self.energy - o.energy)
    }
}

impl Neg for Cons {
    type Output = Cons;
    fn neg(self) -> Cons {
        Cons::new(-self.rho, -self.mx, -self.my, -self.energy)
    }
}

impl Mul<Cons> for f64 {
    type Output = Cons;
    fn mul(self, c: Cons) -> Cons {
        Cons::new(self * c.rho, self * c.mx, self * c.my, self * c.energy)
    }
}

impl AddAssign for Cons {
    fn add_assign(&mut self, o: Cons) {
        *self = *self + o;
    }
}

impl SubAssign for Cons {
    fn sub_assign(&mut self, o: Cons) {
        *self = *self - o;
    }
}
