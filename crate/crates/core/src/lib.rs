//! Finite volume wave-propagation solver for the compressible Euler
//! equations closed by the Tammann (stiffened gas) equation of state, for
//! shock waves crossing fixed interfaces between gases and nearly
//! incompressible materials.

pub mod acoustics;
pub mod eos;
pub mod error;
pub mod gauge;
pub mod grid;
pub mod limiters;
pub mod numerics;
pub mod riemann;
pub mod scenarios;
pub mod solver1d;
pub mod solver2d;
pub mod state;

pub use eos::{Material, MaterialTable, TammannEos, ATM};
pub use error::{Error, Result};
pub use state::{Cons, Prim};
