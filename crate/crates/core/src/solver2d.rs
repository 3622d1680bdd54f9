//! Two-dimensional wave-propagation solver on mapped grids.
//!
//! The grid's x direction is the symmetry axis `z` and y is the radius `r`,
//! so a cell holds `[rho, rho u_z, rho u_r, E]`. Normal Riemann problems are
//! solved in the frame of each edge normal, their waves rotated back and
//! scaled by the edge-length ratio, and the update is weighted by the cell
//! capacity. Normal fluctuations are split into up- and down-going parts
//! with an acoustic transverse solver; by default its energy row is filled
//! with `H drho`, the energy carried by an acoustic wave of the receiving
//! cell. The axisymmetric source is added by fractional steps.

use std::io::{self, Write};

use crate::eos::{MaterialTable, TammannEos};
use crate::error::{Error, Result};
use crate::gauge::Gauge;
use crate::grid::{MappedGrid2D, GHOST_WIDTH};
use crate::limiters::{edge_thetas, limit_waves, EdgeWaves};
use crate::numerics::{LimiterSet, NumericsConfig, Order, SourceSplitting, Splitting2D, TransverseEnergy};
use crate::riemann::Fluctuations;
use crate::solver1d::{fill_ghosts, solve_edge, BoundaryKind, CellInfo, Side};
use crate::state::{Cons, Prim};

const G: usize = GHOST_WIDTH;

/// Velocity of `p` expressed in the frame of the unit normal `n`.
pub fn rotate_prim(p: &Prim, n: [f64; 2]) -> Prim {
    Prim {
        rho: p.rho,
        u: n[0] * p.u + n[1] * p.v,
        v: -n[1] * p.u + n[0] * p.v,
        p: p.p,
    }
}

/// Mirror image of a state across a boundary with unit normal `n`.
fn reflect(c: Cons, n: [f64; 2]) -> Cons {
    let mn = c.mx * n[0] + c.my * n[1];
    Cons::new(c.rho, c.mx - 2.0 * mn * n[0], c.my - 2.0 * mn * n[1], c.energy)
}

fn reflect_vec(v: [f64; 2], n: [f64; 2]) -> [f64; 2] {
    let d = v[0] * n[0] + v[1] * n[1];
    [v[0] - 2.0 * d * n[0], v[1] - 2.0 * d * n[1]]
}

/// Up- and down-going parts of a normal fluctuation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TransverseFluctuations {
    pub up: Cons,
    pub down: Cons,
}

/// Acoustic transverse splitting of the fluctuation `a` (physical frame)
/// entering a cell with sound speed `c2`, whose neighbours below and above
/// have `c1` and `c3`. `n_lower`, `n_upper` are the unit normals of the two
/// transverse edges, pointing towards the upper neighbour. The energy
/// component is neglected.
pub fn transverse_fluctuations(
    a: &Cons,
    c1: f64,
    c2: f64,
    c3: f64,
    n_lower: [f64; 2],
    n_upper: [f64; 2],
) -> TransverseFluctuations {
    let [n2x, n2y] = n_lower;
    let [n3x, n3y] = n_upper;
    let beta_up = c3 * (c2 * a.rho + n3x * a.mx + n3y * a.my) / (c3 + c2);
    let beta_down = -c1 * (c2 * a.rho - n2x * a.mx - n2y * a.my) / (c1 + c2);
    TransverseFluctuations {
        up: Cons::new(beta_up, beta_up * n3x * c3, beta_up * n3y * c3, 0.0),
        down: Cons::new(beta_down, -beta_down * n2x * c1, -beta_down * n2y * c1, 0.0),
    }
}

/// Geometric source of the axisymmetric equations at radius `r`, with the
/// radial velocity in the second momentum slot.
pub fn axisymmetric_source(q: &Cons, eos: &TammannEos, r: f64) -> Result<Cons> {
    let p = eos.cons_to_prim(q)?;
    let v = p.v;
    Ok(-(1.0 / r) * Cons::new(q.my, q.mx * v, q.my * v, v * (q.energy + p.p)))
}

/// One explicit midpoint step of `dq/dt = f(q)`.
pub fn midpoint_step(q: &Cons, dt: f64, f: impl Fn(&Cons) -> Result<Cons>) -> Result<Cons> {
    let half = *q + (0.5 * dt) * f(q)?;
    Ok(*q + dt * f(&half)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    X,
    Y,
}

impl Dir {
    fn other(self) -> Dir {
        match self {
            Dir::X => Dir::Y,
            Dir::Y => Dir::X,
        }
    }
}

struct Sweep {
    fl: Vec<Fluctuations>,
    iface: Vec<bool>,
}

#[derive(Debug, Clone)]
pub struct Solver2D {
    pub grid: MappedGrid2D,
    pub eos: Vec<TammannEos>,
    /// Padded conserved states, `(mx + 2G) x (my + 2G)`, x fastest.
    pub q: Vec<Cons>,
    mat: Vec<usize>,
    pub t: f64,
    pub steps: usize,
    /// Boundaries at x_lo, x_hi, y_lo, y_hi.
    pub bc: [BoundaryKind; 4],
    pub numerics: NumericsConfig,
    limiters: LimiterSet,
    pub gauges: Vec<Gauge>,
    pub last_cfl: f64,
    pub rejected_steps: usize,
    nxp: usize,
    nyp: usize,
}

impl Solver2D {
    pub fn new(
        grid: MappedGrid2D,
        materials: &MaterialTable,
        initial: &[Prim],
        bc: [BoundaryKind; 4],
        numerics: NumericsConfig,
    ) -> Result<Self> {
        numerics.validate()?;
        let (mx, my) = (grid.mx, grid.my);
        if initial.len() != mx * my {
            return Err(Error::Config(format!(
                "{} initial states for {} cells",
                initial.len(),
                mx * my
            )));
        }
        for (a, b) in [(0, 1), (2, 3)] {
            if (bc[a] == BoundaryKind::Periodic) != (bc[b] == BoundaryKind::Periodic) {
                return Err(Error::Config("periodic boundaries must come in pairs".into()));
            }
        }
        if let Some(&m) = grid.material.iter().find(|&&m| m >= materials.len()) {
            return Err(Error::Config(format!("material index {m} not in the material table")));
        }
        if numerics.axisymmetric {
            if let Some(k) = grid.centroid.iter().position(|c| !(c[1] > 0.0)) {
                return Err(Error::Config(format!(
                    "axisymmetric runs need r > 0 at every cell center (cell {k} has r = {})",
                    grid.centroid[k][1]
                )));
            }
        }
        let eos = materials.eos_list();
        let (nxp, nyp) = (mx + 2 * G, my + 2 * G);
        let mut q = vec![Cons::ZERO; nxp * nyp];
        let mut mat = vec![0; nxp * nyp];
        for j in 0..my {
            for i in 0..mx {
                let k = grid.cell(i, j);
                let m = grid.material[k];
                let pc = (j + G) * nxp + i + G;
                q[pc] = eos[m].prim_to_cons(&initial[k])?;
                mat[pc] = m;
            }
        }
        let limiters = numerics.limiter.resolve(materials);
        let mut s = Self {
            grid,
            eos,
            q,
            mat,
            t: 0.0,
            steps: 0,
            bc,
            numerics,
            limiters,
            gauges: Vec::new(),
            last_cfl: 0.0,
            rejected_steps: 0,
            nxp,
            nyp,
        };
        s.apply_boundary();
        Ok(s)
    }

    fn pc(&self, ip: usize, jp: usize) -> usize {
        jp * self.nxp + ip
    }

    /// Padded cell of real cell `(i, j)`.
    fn real(&self, i: usize, j: usize) -> usize {
        self.pc(i + G, j + G)
    }

    pub fn prim(&self, i: usize, j: usize) -> Result<Prim> {
        let k = self.real(i, j);
        self.eos[self.mat[k]].cons_to_prim(&self.q[k])
    }

    pub fn cons(&self, i: usize, j: usize) -> Cons {
        self.q[self.real(i, j)]
    }

    pub fn material(&self, i: usize, j: usize) -> usize {
        self.mat[self.real(i, j)]
    }

    /// Capacity-weighted totals over the physical (planar) cell areas.
    pub fn totals(&self) -> Cons {
        let g = &self.grid;
        let mut s = Cons::ZERO;
        for j in 0..g.my {
            for i in 0..g.mx {
                s += (g.capacity[g.cell(i, j)] * g.dxc * g.dyc) * self.cons(i, j);
            }
        }
        s
    }

    fn x_boundary_normal(&self, i_edge: usize, j: usize) -> [f64; 2] {
        let g = &self.grid;
        g.x_normals[g.x_edge(i_edge, j.min(g.my - 1))]
    }

    fn y_boundary_normal(&self, i: usize, j_edge: usize) -> [f64; 2] {
        let g = &self.grid;
        g.y_normals[g.y_edge(i.min(g.mx - 1), j_edge)]
    }

    pub fn apply_boundary(&mut self) {
        let (mx, my, nxp) = (self.grid.mx, self.grid.my, self.nxp);
        for j in 0..my {
            let (nl, nh) = (self.x_boundary_normal(0, j), self.x_boundary_normal(mx, j));
            let row = (j + G) * nxp..(j + G + 1) * nxp;
            let (q, m) = (&mut self.q[row.clone()], &mut self.mat[row]);
            fill_ghosts(q, m, Side::Lower, self.bc[0], |c| reflect(c, nl));
            fill_ghosts(q, m, Side::Upper, self.bc[1], |c| reflect(c, nh));
        }
        let mut col_q = vec![Cons::ZERO; self.nyp];
        let mut col_m = vec![0usize; self.nyp];
        for ip in 0..nxp {
            for jp in 0..self.nyp {
                col_q[jp] = self.q[jp * nxp + ip];
                col_m[jp] = self.mat[jp * nxp + ip];
            }
            let i = ip.saturating_sub(G).min(mx - 1);
            let (nl, nh) = (self.y_boundary_normal(i, 0), self.y_boundary_normal(i, my));
            fill_ghosts(&mut col_q, &mut col_m, Side::Lower, self.bc[2], |c| reflect(c, nl));
            fill_ghosts(&mut col_q, &mut col_m, Side::Upper, self.bc[3], |c| reflect(c, nh));
            for jp in 0..self.nyp {
                self.q[jp * nxp + ip] = col_q[jp];
                self.mat[jp * nxp + ip] = col_m[jp];
            }
        }
    }

    pub fn add_gauge(&mut self, id: usize, at: [f64; 2]) -> Result<()> {
        let (i, j) = self.grid.locate(at)?;
        let mut g = Gauge::new(id, at, self.grid.cell(i, j));
        g.record(self.t, self.prim(i, j)?.p);
        self.gauges.push(g);
        Ok(())
    }

    fn record_gauges(&mut self) -> Result<()> {
        for k in 0..self.gauges.len() {
            let c = self.gauges[k].cell;
            let (i, j) = (c % self.grid.mx, c / self.grid.mx);
            let p = self.prim(i, j)?.p;
            self.gauges[k].record(self.t, p);
        }
        Ok(())
    }

    fn failure(&self, pc: usize, reason: String) -> Error {
        let (ip, jp) = (pc % self.nxp, pc / self.nxp);
        Error::StepFailure {
            time: self.t,
            cell: format!("({}, {})", ip as i64 - G as i64, jp as i64 - G as i64),
            reason,
        }
    }

    fn cells(&self) -> Result<Vec<CellInfo>> {
        self.q
            .iter()
            .zip(self.mat.iter())
            .enumerate()
            .map(|(k, (q, &m))| {
                let prim = self.eos[m]
                    .cons_to_prim(q)
                    .map_err(|e| self.failure(k, e.to_string()))?;
                let c = self.eos[m].sound_speed(&prim)?;
                Ok(CellInfo { prim, mat: m, c })
            })
            .collect()
    }

    // Sweep geometry. A sweep runs along `pos` within each `line`: for X
    // the line is the row `jp` and pos the column `ip`, for Y the reverse.

    fn n_lines(&self, d: Dir) -> usize {
        match d {
            Dir::X => self.nyp,
            Dir::Y => self.nxp,
        }
    }

    fn n_pos(&self, d: Dir) -> usize {
        match d {
            Dir::X => self.nxp,
            Dir::Y => self.nyp,
        }
    }

    fn ds(&self, d: Dir) -> f64 {
        match d {
            Dir::X => self.grid.dxc,
            Dir::Y => self.grid.dyc,
        }
    }

    fn cell_at(&self, d: Dir, line: usize, pos: usize) -> usize {
        match d {
            Dir::X => self.pc(pos, line),
            Dir::Y => self.pc(line, pos),
        }
    }

    fn n_edges(&self, d: Dir) -> usize {
        match d {
            Dir::X => (self.nxp + 1) * self.nyp,
            Dir::Y => self.nxp * (self.nyp + 1),
        }
    }

    /// Padded edge between `pos - 1` and `pos` on `line`.
    fn edge_at(&self, d: Dir, line: usize, pos: usize) -> usize {
        match d {
            Dir::X => line * (self.nxp + 1) + pos,
            Dir::Y => pos * self.nxp + line,
        }
    }

    /// Normal and length ratio of a padded edge. Edges outside the grid take
    /// the metrics of the nearest boundary edge, mirrored across walls.
    fn edge_geom(&self, d: Dir, line: usize, pos: usize) -> ([f64; 2], f64) {
        let g = &self.grid;
        let (n_pos_real, n_line_real) = match d {
            Dir::X => (g.mx, g.my),
            Dir::Y => (g.my, g.mx),
        };
        let p = (pos as i64 - G as i64).clamp(0, n_pos_real as i64) as usize;
        let l_raw = line as i64 - G as i64;
        let l = l_raw.clamp(0, n_line_real as i64 - 1) as usize;
        let (mut n, gamma) = match d {
            Dir::X => (g.x_normals[g.x_edge(p, l)], g.x_ratio[g.x_edge(p, l)]),
            Dir::Y => (g.y_normals[g.y_edge(l, p)], g.y_ratio[g.y_edge(l, p)]),
        };
        let outside = if l_raw < 0 {
            Some(0)
        } else if l_raw >= n_line_real as i64 {
            Some(1)
        } else {
            None
        };
        if let Some(side) = outside {
            let (kind, bn) = match d {
                Dir::X => (self.bc[2 + side], self.y_boundary_normal(p.min(g.mx - 1), side * g.my)),
                Dir::Y => (self.bc[side], self.x_boundary_normal(side * g.mx, p.min(g.my - 1))),
            };
            if kind == BoundaryKind::Wall {
                n = reflect_vec(n, bn);
            }
        }
        (n, gamma)
    }

    fn capacity(&self, pc: usize) -> f64 {
        let g = &self.grid;
        let (ip, jp) = (pc % self.nxp, pc / self.nxp);
        let i = (ip as i64 - G as i64).clamp(0, g.mx as i64 - 1) as usize;
        let j = (jp as i64 - G as i64).clamp(0, g.my as i64 - 1) as usize;
        g.capacity[g.cell(i, j)]
    }

    fn is_real(&self, pc: usize) -> bool {
        let (ip, jp) = (pc % self.nxp, pc / self.nxp);
        (G..G + self.grid.mx).contains(&ip) && (G..G + self.grid.my).contains(&jp)
    }

    fn solve_sweep(&self, d: Dir, cells: &[CellInfo]) -> Result<Sweep> {
        let mut fl = vec![Fluctuations::zero(); self.n_edges(d)];
        let mut iface = vec![false; self.n_edges(d)];
        for line in 0..self.n_lines(d) {
            for pos in 1..self.n_pos(d) {
                let (cl, cr) = (self.cell_at(d, line, pos - 1), self.cell_at(d, line, pos));
                let (n, gamma) = self.edge_geom(d, line, pos);
                let l = CellInfo {
                    prim: rotate_prim(&cells[cl].prim, n),
                    ..cells[cl]
                };
                let r = CellInfo {
                    prim: rotate_prim(&cells[cr].prim, n),
                    ..cells[cr]
                };
                let (f, is_iface) = solve_edge(&l, &r, &self.eos, &self.numerics)
                    .map_err(|e| self.failure(cr, format!("Riemann solve: {e}")))?;
                let e = self.edge_at(d, line, pos);
                fl[e] = f.rotate_from(n).scaled(gamma);
                iface[e] = is_iface;
            }
        }
        Ok(Sweep { fl, iface })
    }

    /// Largest `|s| dt / (ds kappa)` over edges touching real cells, per unit dt.
    fn courant_rate(&self, d: Dir, sw: &Sweep) -> f64 {
        let (real_lines, real_pos) = match d {
            Dir::X => (self.grid.my, self.grid.mx),
            Dir::Y => (self.grid.mx, self.grid.my),
        };
        let ds = self.ds(d);
        let mut rate = 0.0_f64;
        for line in G..G + real_lines {
            for pos in G..=G + real_pos {
                let e = self.edge_at(d, line, pos);
                let s = sw.fl[e].max_speed();
                if s > 0.0 {
                    let k = self
                        .capacity(self.cell_at(d, line, pos - 1))
                        .min(self.capacity(self.cell_at(d, line, pos)));
                    rate = rate.max(s / (ds * k));
                }
            }
        }
        rate
    }

    /// Adds the sweep's first-order increments to `dq` and its correction
    /// fluxes to `corr[d]`; transverse parts go to `corr[d.other()]`.
    #[allow(clippy::too_many_arguments)]
    fn apply_sweep(
        &self,
        d: Dir,
        sw: &Sweep,
        cells: &[CellInfo],
        dt: f64,
        dq: &mut [Cons],
        corr: &mut [Vec<Cons>; 2],
        transverse: bool,
    ) {
        let ds = self.ds(d);
        let (nl, np) = (self.n_lines(d), self.n_pos(d));
        let di = d as usize;
        let info = |line: usize, pos: usize| {
            let e = self.edge_at(d, line, pos);
            let (n, _) = self.edge_geom(d, line, pos);
            EdgeWaves {
                waves: sw.fl[e].waves,
                speeds: sw.fl[e].speeds,
                c_left: cells[self.cell_at(d, line, pos - 1)].c,
                c_right: cells[self.cell_at(d, line, pos)].c,
                normal: n,
                interface: sw.iface[e],
            }
        };
        for line in 1..nl - 1 {
            for pos in 2..=np - 2 {
                let e = self.edge_at(d, line, pos);
                let f = &sw.fl[e];
                let (cl, cr) = (self.cell_at(d, line, pos - 1), self.cell_at(d, line, pos));
                let dtdx_l = dt / (ds * self.capacity(cl));
                let dtdx_r = dt / (ds * self.capacity(cr));
                dq[cl] += dtdx_l * f.amdq;
                dq[cr] += dtdx_r * f.apdq;
                let mut ftil = Cons::ZERO;
                if self.numerics.order == Order::Second {
                    let here = info(line, pos);
                    let thetas = edge_thetas(&info(line, pos - 1), &here, &info(line, pos + 1), self.limiters.policy);
                    let limiter = self.limiters.for_edge(cells[cl].mat, cells[cr].mat);
                    let limited = limit_waves(&here.waves, &thetas, limiter);
                    let dtdx = 0.5 * (dtdx_l + dtdx_r);
                    for (w, &s) in limited.iter().zip(here.speeds.iter()) {
                        ftil += (0.5 * s.abs() * (1.0 - dtdx * s.abs())) * *w;
                    }
                    corr[di][e] += ftil;
                }
                if transverse {
                    self.transverse_into(d, line, pos - 1, f.amdq + ftil, dtdx_l, cells, &mut corr[1 - di]);
                    self.transverse_into(d, line, pos, f.apdq - ftil, dtdx_r, cells, &mut corr[1 - di]);
                }
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn transverse_into(
        &self,
        d: Dir,
        line: usize,
        pos: usize,
        a: Cons,
        dtdx: f64,
        cells: &[CellInfo],
        corr: &mut [Cons],
    ) {
        if a == Cons::ZERO {
            return;
        }
        let o = d.other();
        let c1 = cells[self.cell_at(d, line - 1, pos)].c;
        let c2 = cells[self.cell_at(d, line, pos)].c;
        let c3 = cells[self.cell_at(d, line + 1, pos)].c;
        let (n_lo, g_lo) = self.edge_geom(o, pos, line);
        let (n_up, g_up) = self.edge_geom(o, pos, line + 1);
        let mut t = transverse_fluctuations(&a, c1, c2, c3, n_lo, n_up);
        if self.numerics.transverse_energy == TransverseEnergy::Acoustic {
            let enthalpy = |k: usize| (self.q[k].energy + cells[k].prim.p) / cells[k].prim.rho;
            t.up.energy = t.up.rho * enthalpy(self.cell_at(d, line + 1, pos));
            t.down.energy = t.down.rho * enthalpy(self.cell_at(d, line - 1, pos));
        }
        corr[self.edge_at(o, pos, line + 1)] -= (0.5 * dtdx * g_up) * t.up;
        corr[self.edge_at(o, pos, line)] -= (0.5 * dtdx * g_lo) * t.down;
    }

    /// Applies `dq` and the correction-flux differences to the real cells.
    fn commit(&self, next: &mut [Cons], dq: &[Cons], corr: &[Vec<Cons>; 2], dt: f64) {
        let g = &self.grid;
        for j in 0..g.my {
            for i in 0..g.mx {
                let (ip, jp) = (i + G, j + G);
                let pc = self.pc(ip, jp);
                let k = g.capacity[g.cell(i, j)];
                let fx = corr[0][self.edge_at(Dir::X, jp, ip + 1)] - corr[0][self.edge_at(Dir::X, jp, ip)];
                let fy = corr[1][self.edge_at(Dir::Y, ip, jp + 1)] - corr[1][self.edge_at(Dir::Y, ip, jp)];
                next[pc] -= dq[pc] + (dt / (k * g.dxc)) * fx + (dt / (k * g.dyc)) * fy;
            }
        }
    }

    fn check_states(&self, q: &[Cons]) -> Result<()> {
        for (k, c) in q.iter().enumerate() {
            if self.is_real(k) {
                if let Err(e) = self.eos[self.mat[k]].cons_to_prim(c) {
                    return Err(self.failure(k, e.to_string()));
                }
            }
        }
        Ok(())
    }

    /// Integrates the geometric source over `dt` in every real cell.
    pub fn source_step(&mut self, dt: f64) -> Result<()> {
        let g = &self.grid;
        for j in 0..g.my {
            for i in 0..g.mx {
                let pc = self.pc(i + G, j + G);
                let r = g.centroid[g.cell(i, j)][1];
                let eos = self.eos[self.mat[pc]];
                if self.q[pc].my == 0.0 {
                    continue;
                }
                let q = midpoint_step(&self.q[pc], dt, |q| axisymmetric_source(q, &eos, r))
                    .map_err(|e| self.failure(pc, format!("source step: {e}")))?;
                if let Err(e) = eos.cons_to_prim(&q) {
                    return Err(self.failure(pc, format!("source step: {e}")));
                }
                self.q[pc] = q;
            }
        }
        self.apply_boundary();
        Ok(())
    }

    /// Homogeneous update over `dt`. Returns the observed Courant number, or
    /// `None` (state untouched) when it exceeds `cfl_max`.
    fn hyperbolic(&mut self, dt: f64) -> Result<Option<f64>> {
        let cells = self.cells()?;
        let (ex, ey) = (self.n_edges(Dir::X), self.n_edges(Dir::Y));
        let corr_init = || [vec![Cons::ZERO; ex], vec![Cons::ZERO; ey]];
        match self.numerics.splitting {
            Splitting2D::Unsplit => {
                let sx = self.solve_sweep(Dir::X, &cells)?;
                let sy = self.solve_sweep(Dir::Y, &cells)?;
                let cfl = dt * self.courant_rate(Dir::X, &sx).max(self.courant_rate(Dir::Y, &sy));
                if cfl > self.numerics.cfl_max * (1.0 + 1e-12) {
                    return Ok(None);
                }
                let mut dq = vec![Cons::ZERO; self.q.len()];
                let mut corr = corr_init();
                let tr = self.numerics.transverse;
                self.apply_sweep(Dir::X, &sx, &cells, dt, &mut dq, &mut corr, tr);
                self.apply_sweep(Dir::Y, &sy, &cells, dt, &mut dq, &mut corr, tr);
                let mut next = self.q.clone();
                self.commit(&mut next, &dq, &corr, dt);
                self.check_states(&next)?;
                self.q = next;
                self.apply_boundary();
                Ok(Some(cfl))
            }
            Splitting2D::Dimensional => {
                let saved = self.q.clone();
                let mut cfl = 0.0_f64;
                let mut cells = cells;
                for d in [Dir::X, Dir::Y] {
                    let sw = self.solve_sweep(d, &cells)?;
                    cfl = cfl.max(dt * self.courant_rate(d, &sw));
                    if cfl > self.numerics.cfl_max * (1.0 + 1e-12) {
                        self.q = saved;
                        self.apply_boundary();
                        return Ok(None);
                    }
                    let mut dq = vec![Cons::ZERO; self.q.len()];
                    let mut corr = corr_init();
                    self.apply_sweep(d, &sw, &cells, dt, &mut dq, &mut corr, false);
                    let mut next = self.q.clone();
                    self.commit(&mut next, &dq, &corr, dt);
                    if let Err(e) = self.check_states(&next) {
                        self.q = saved;
                        self.apply_boundary();
                        return Err(e);
                    }
                    self.q = next;
                    self.apply_boundary();
                    if d == Dir::X {
                        cells = self.cells()?;
                    }
                }
                Ok(Some(cfl))
            }
        }
    }

    /// One full step including the source. Returns `None` if the step was
    /// rejected for exceeding `cfl_max`, leaving the state unchanged.
    pub fn try_step(&mut self, dt: f64) -> Result<Option<f64>> {
        let saved = self.q.clone();
        let axi = self.numerics.axisymmetric;
        let strang = self.numerics.source_splitting == SourceSplitting::Strang;
        let restore = |s: &mut Self| {
            s.q = saved.clone();
            s.apply_boundary();
        };
        if axi && strang {
            self.source_step(0.5 * dt)?;
        }
        let cfl = match self.hyperbolic(dt) {
            Ok(Some(c)) => c,
            Ok(None) => {
                restore(self);
                return Ok(None);
            }
            Err(e) => {
                restore(self);
                return Err(e);
            }
        };
        if axi {
            let r = self.source_step(if strang { 0.5 * dt } else { dt });
            if let Err(e) = r {
                restore(self);
                return Err(e);
            }
        }
        self.t += dt;
        self.steps += 1;
        self.last_cfl = cfl;
        self.record_gauges()?;
        Ok(Some(cfl))
    }

    /// Largest stable step for the configured Courant number, from the
    /// current edge speeds.
    pub fn cfl_dt(&self) -> Result<f64> {
        if let Some(dt) = self.numerics.fixed_dt {
            return Ok(dt);
        }
        let cells = self.cells()?;
        let rx = self.courant_rate(Dir::X, &self.solve_sweep(Dir::X, &cells)?);
        let ry = self.courant_rate(Dir::Y, &self.solve_sweep(Dir::Y, &cells)?);
        let rate = rx.max(ry).max(self.cell_rate(&cells));
        Ok(if rate > 0.0 {
            self.numerics.cfl / rate
        } else {
            f64::INFINITY
        })
    }

    /// Characteristic bound `(|u_n| + c) gamma / (ds kappa)` over the real
    /// cells, so that quiescent regions still limit the step.
    fn cell_rate(&self, cells: &[CellInfo]) -> f64 {
        let g = &self.grid;
        let mut rate = 0.0_f64;
        for j in 0..g.my {
            for i in 0..g.mx {
                let c = &cells[self.real(i, j)];
                let k = g.capacity[g.cell(i, j)];
                let speed = |n: [f64; 2], gamma: f64| (n[0] * c.prim.u + n[1] * c.prim.v).abs() * gamma + c.c * gamma;
                for e in [g.x_edge(i, j), g.x_edge(i + 1, j)] {
                    rate = rate.max(speed(g.x_normals[e], g.x_ratio[e]) / (g.dxc * k));
                }
                for e in [g.y_edge(i, j), g.y_edge(i, j + 1)] {
                    rate = rate.max(speed(g.y_normals[e], g.y_ratio[e]) / (g.dyc * k));
                }
            }
        }
        rate
    }

    /// Takes one accepted step of at most `dt_max`, retrying with a smaller
    /// step when the observed Courant number is too large.
    pub fn step_adaptive(&mut self, dt_max: f64) -> Result<f64> {
        let mut dt = self.cfl_dt()?.min(dt_max);
        for _ in 0..20 {
            if !(dt > 0.0 && dt.is_finite()) {
                break;
            }
            match self.try_step(dt)? {
                Some(_) => return Ok(dt),
                None => {
                    self.rejected_steps += 1;
                    dt *= 0.5;
                }
            }
        }
        Err(Error::StepFailure {
            time: self.t,
            cell: "-".into(),
            reason: format!("no acceptable time step (last dt = {dt})"),
        })
    }

    pub fn advance_to(&mut self, t_end: f64) -> Result<()> {
        while self.t < t_end * (1.0 - 1e-14) {
            if self.steps >= self.numerics.max_steps {
                return Err(Error::StepFailure {
                    time: self.t,
                    cell: "-".into(),
                    reason: format!("step limit {} reached", self.numerics.max_steps),
                });
            }
            let remaining = t_end - self.t;
            self.step_adaptive(remaining)?;
        }
        Ok(())
    }

    /// Total variation of the pressure over edges whose two cells both
    /// carry `material`.
    pub fn pressure_total_variation(&self, material: usize) -> Result<f64> {
        let g = &self.grid;
        let mut tv = 0.0;
        for j in 0..g.my {
            for i in 0..g.mx {
                if self.material(i, j) != material {
                    continue;
                }
                let p = self.prim(i, j)?.p;
                if i + 1 < g.mx && self.material(i + 1, j) == material {
                    tv += (self.prim(i + 1, j)?.p - p).abs();
                }
                if j + 1 < g.my && self.material(i, j + 1) == material {
                    tv += (self.prim(i, j + 1)?.p - p).abs();
                }
            }
        }
        Ok(tv)
    }

    /// Snapshot CSV with a header line; x is the axial and y the radial
    /// coordinate.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> io::Result<()> {
        let g = &self.grid;
        writeln!(w, "# nx={} ny={} time={:?} mapping={}", g.mx, g.my, self.t, g.info.name)?;
        writeln!(w, "x_m,y_m,rho,u_r,u_z,p_kPa,material")?;
        for j in 0..g.my {
            for i in 0..g.mx {
                let c = g.centroid[g.cell(i, j)];
                let p = self
                    .prim(i, j)
                    .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
                writeln!(
                    w,
                    "{:?},{:?},{:?},{:?},{:?},{:?},{}",
                    c[0],
                    c[1],
                    p.rho,
                    p.v,
                    p.u,
                    p.p / 1000.0,
                    self.material(i, j)
                )?;
            }
        }
        Ok(())
    }

    /// Cell-centered `|grad p|` (Pa/m) by the Green-Gauss rule, for
    /// schlieren-style plots.
    pub fn pressure_gradient(&self) -> Result<Vec<f64>> {
        let g = &self.grid;
        let mut p = vec![0.0; self.q.len()];
        for (k, (q, &m)) in self.q.iter().zip(self.mat.iter()).enumerate() {
            p[k] = self.eos[m]
                .cons_to_prim(q)
                .map_err(|e| self.failure(k, e.to_string()))?
                .p;
        }
        let mut out = Vec::with_capacity(g.mx * g.my);
        for j in 0..g.my {
            for i in 0..g.mx {
                let (ip, jp) = (i + G, j + G);
                let pc = self.pc(ip, jp);
                let area = g.capacity[g.cell(i, j)] * g.dxc * g.dyc;
                let mut acc = [0.0, 0.0];
                let mut add = |n: [f64; 2], len: f64, pf: f64, sign: f64| {
                    acc[0] += sign * n[0] * len * pf;
                    acc[1] += sign * n[1] * len * pf;
                };
                let e = g.x_edge(i, j);
                add(
                    g.x_normals[e],
                    g.x_ratio[e] * g.dyc,
                    0.5 * (p[pc] + p[self.pc(ip - 1, jp)]),
                    -1.0,
                );
                let e = g.x_edge(i + 1, j);
                add(
                    g.x_normals[e],
                    g.x_ratio[e] * g.dyc,
                    0.5 * (p[pc] + p[self.pc(ip + 1, jp)]),
                    1.0,
                );
                let e = g.y_edge(i, j);
                add(
                    g.y_normals[e],
                    g.y_ratio[e] * g.dxc,
                    0.5 * (p[pc] + p[self.pc(ip, jp - 1)]),
                    -1.0,
                );
                let e = g.y_edge(i, j + 1);
                add(
                    g.y_normals[e],
                    g.y_ratio[e] * g.dxc,
                    0.5 * (p[pc] + p[self.pc(ip, jp + 1)]),
                    1.0,
                );
                out.push(acc[0].hypot(acc[1]) / area);
            }
        }
        Ok(out)
    }

    pub fn write_schlieren<W: Write>(&self, mut w: W) -> io::Result<()> {
        let grad = self
            .pressure_gradient()
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
        writeln!(w, "x_m,y_m,grad_p_Pa_per_m")?;
        for (k, gp) in grad.iter().enumerate() {
            let c = self.grid.centroid[k];
            writeln!(w, "{:?},{:?},{:?}", c[0], c[1], gp)?;
        }
        Ok(())
    }
}
