use std::f64::consts::SQRT_2;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use super::aligned_edge;
use crate::error::{Error, Result};

/// Radii of the circular-inclusion mapping: inner and outer interface
/// circles inside the square `[-r_m, r_m]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleParams {
    pub r_i: f64,
    pub r_o: f64,
    pub r_m: f64,
}

impl Default for CircleParams {
    fn default() -> Self {
        Self {
            r_i: 0.01,
            r_o: 0.015,
            r_m: 0.04,
        }
    }
}

impl CircleParams {
    pub fn validate(&self) -> Result<()> {
        if self.r_i > 0.0 && self.r_o > self.r_i && self.r_m > self.r_o {
            Ok(())
        } else {
            Err(Error::Grid(format!(
                "need 0 < r_i < r_o < r_m, got {} {} {}",
                self.r_i, self.r_o, self.r_m
            )))
        }
    }
}

/// Which outer-branch arc radius to use. `Printed` grows from `r_m` at the
/// outer circle and leaves a radial jump there; `Continuous` grows from
/// `r_o`. `Auto` picks `Printed` only if it turns out continuous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MappingVariant {
    #[default]
    Auto,
    Printed,
    Continuous,
}

fn branch_dr(d: f64, p: &CircleParams, variant: MappingVariant, branch: u8) -> (f64, f64) {
    let t_o = p.r_o / p.r_m;
    match branch {
        1 => (p.r_m * d / SQRT_2, p.r_i),
        2 => (p.r_m * d / SQRT_2, d * p.r_m),
        _ => {
            let dd = p.r_o / SQRT_2 + (d - t_o) * (p.r_m - p.r_o / SQRT_2) / (1.0 - t_o);
            let pre = if variant == MappingVariant::Printed {
                p.r_m
            } else {
                p.r_o
            };
            let r = pre * ((1.0 - t_o) / (1.0 - d)).powf(p.r_m / p.r_o + 0.5);
            (dd, r)
        }
    }
}

fn dr(d: f64, p: &CircleParams, variant: MappingVariant) -> (f64, f64) {
    let b = if d <= p.r_i / p.r_m {
        1
    } else if d <= p.r_o / p.r_m {
        2
    } else {
        3
    };
    branch_dr(d, p, variant, b)
}

/// Point of the arc through `(D, +-D)` with radius `R`, at height `y`.
fn arc_x(dd: f64, r: f64, y: f64) -> f64 {
    if !r.is_finite() {
        return dd;
    }
    // x0 + sqrt(R^2 - y^2) with x0 = D - sqrt(R^2 - D^2), without cancellation
    dd + (dd * dd - y * y) / ((r * r - y * y).sqrt() + (r * r - dd * dd).sqrt())
}

/// Maps a point of the computational square `[-1, 1]^2` to the physical
/// square `[-r_m, r_m]^2`. `variant` must not be `Auto`.
pub fn circular_inclusion_map(xc: f64, yc: f64, p: &CircleParams, variant: MappingVariant) -> [f64; 2] {
    let d = xc.abs().max(yc.abs());
    if d == 0.0 {
        return [0.0, 0.0];
    }
    let east = |b: f64| {
        let (dd, r) = dr(d, p, variant);
        let y = b * dd / d;
        (arc_x(dd, r, y), y)
    };
    if yc.abs() <= xc.abs() {
        let (x, y) = east(yc);
        [x.copysign(xc), y]
    } else {
        let (x, y) = east(xc);
        [y, x.copysign(yc)]
    }
}

/// Radial jump of the mapped sector edge `y_c = 0` across the outer
/// interface circle.
pub fn mapping_jump(p: &CircleParams, variant: MappingVariant) -> f64 {
    let t = p.r_o / p.r_m;
    let (d2, r2) = branch_dr(t, p, variant, 2);
    let (d3, r3) = branch_dr(t, p, variant, 3);
    (arc_x(d3, r3, 0.0) - arc_x(d2, r2, 0.0)).abs()
}

fn resolve_variant(p: &CircleParams, v: MappingVariant) -> (MappingVariant, f64) {
    let jump = mapping_jump(p, MappingVariant::Printed);
    let v = match v {
        MappingVariant::Auto if jump > 1e-9 * p.r_m => MappingVariant::Continuous,
        MappingVariant::Auto => MappingVariant::Printed,
        other => other,
    };
    (v, jump)
}

/// How a grid was produced, for manifests and dumps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MappingInfo {
    pub name: String,
    pub circle: Option<CircleParams>,
    pub variant: Option<MappingVariant>,
    /// Outer-circle jump of the printed variant, as found by the self-test.
    pub printed_jump: Option<f64>,
    pub min_capacity: f64,
}

/// Diagnostics of a mapped grid, see [`MappedGrid2D::check`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCheck {
    pub name: String,
    pub mx: usize,
    pub my: usize,
    pub variant: Option<MappingVariant>,
    pub printed_jump: Option<f64>,
    pub min_capacity: f64,
    pub max_capacity: f64,
    /// Sum of cell areas and the area of the node bounding box.
    pub total_area: f64,
    pub bbox_area: f64,
    /// Largest net outward normal-times-length per cell, relative to the
    /// perimeter. Zero for closed cells.
    pub max_closure: f64,
    /// `(radius, largest node distance from that circle)` for the interface
    /// circles that fall on grid lines.
    pub circle_error: Vec<(f64, f64)>,
}

impl GridCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.min_capacity > 0.0
            && self.max_closure <= tol
            && (self.total_area - self.bbox_area).abs() <= tol * self.bbox_area
            && self.circle_error.iter().all(|&(r, e)| e <= tol * r)
    }
}

/// Material layout of a 2D grid. Material indices refer to the run's
/// material table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionSpec {
    Uniform {
        material: usize,
    },
    /// Axis-aligned rectangle in physical coordinates; Cartesian grids only.
    Rectangle {
        x0: f64,
        x1: f64,
        y0: f64,
        y1: f64,
        inside: usize,
        outside: usize,
    },
    /// Concentric mapped circles of the circular-inclusion grid, `radii`
    /// increasing, `materials` listed from the center outwards.
    Rings {
        radii: Vec<f64>,
        materials: Vec<usize>,
    },
}

/// Logically rectangular grid with cell-edge normals, edge-length ratios
/// and cell capacities. Node `(i, j)` is stored at `j * (mx + 1) + i`,
/// cell `(i, j)` at `j * mx + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedGrid2D {
    pub mx: usize,
    pub my: usize,
    /// Computational extents `[x_lo, x_hi, y_lo, y_hi]`.
    pub comp: [f64; 4],
    pub dxc: f64,
    pub dyc: f64,
    pub nodes: Vec<[f64; 2]>,
    /// Edges between cells `(i-1, j)` and `(i, j)`, `i in 0..=mx`, stored at
    /// `j * (mx + 1) + i`; normals point towards increasing `i`.
    pub x_normals: Vec<[f64; 2]>,
    pub x_ratio: Vec<f64>,
    /// Edges between cells `(i, j-1)` and `(i, j)`, `j in 0..=my`, stored at
    /// `j * mx + i`; normals point towards increasing `j`.
    pub y_normals: Vec<[f64; 2]>,
    pub y_ratio: Vec<f64>,
    pub capacity: Vec<f64>,
    pub centroid: Vec<[f64; 2]>,
    pub material: Vec<usize>,
    pub info: MappingInfo,
}

impl MappedGrid2D {
    /// Builds the grid from a node mapping of the computational rectangle.
    pub fn from_map(
        comp: [f64; 4],
        mx: usize,
        my: usize,
        map: impl Fn(f64, f64) -> [f64; 2],
        name: &str,
    ) -> Result<Self> {
        if mx == 0 || my == 0 || !(comp[1] > comp[0] && comp[3] > comp[2]) {
            return Err(Error::Grid(format!(
                "bad computational domain {comp:?} with {mx}x{my} cells"
            )));
        }
        let dxc = (comp[1] - comp[0]) / mx as f64;
        let dyc = (comp[3] - comp[2]) / my as f64;
        let mut nodes = Vec::with_capacity((mx + 1) * (my + 1));
        for j in 0..=my {
            for i in 0..=mx {
                let n = map(comp[0] + i as f64 * dxc, comp[2] + j as f64 * dyc);
                if !(n[0].is_finite() && n[1].is_finite()) {
                    return Err(Error::Grid(format!("mapping produced a non-finite node at ({i}, {j})")));
                }
                nodes.push(n);
            }
        }
        let mut g = Self {
            mx,
            my,
            comp,
            dxc,
            dyc,
            nodes,
            x_normals: Vec::new(),
            x_ratio: Vec::new(),
            y_normals: Vec::new(),
            y_ratio: Vec::new(),
            capacity: Vec::new(),
            centroid: Vec::new(),
            material: vec![0; mx * my],
            info: MappingInfo {
                name: name.to_string(),
                circle: None,
                variant: None,
                printed_jump: None,
                min_capacity: 0.0,
            },
        };
        g.compute_metrics()?;
        Ok(g)
    }

    /// Identity mapping of the physical rectangle.
    pub fn cartesian(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64, mx: usize, my: usize) -> Result<Self> {
        Self::from_map([x_lo, x_hi, y_lo, y_hi], mx, my, |x, y| [x, y], "cartesian")
    }

    /// Circular-inclusion grid with `n` cells per unit computational length.
    /// With `half`, only the upper half `y >= 0` is gridded.
    pub fn circular(p: CircleParams, variant: MappingVariant, n: usize, half: bool) -> Result<Self> {
        p.validate()?;
        let (v, jump) = resolve_variant(&p, variant);
        let (comp, my) = if half {
            ([-1.0, 1.0, 0.0, 1.0], n)
        } else {
            ([-1.0, 1.0, -1.0, 1.0], 2 * n)
        };
        let mut g = Self::from_map(
            comp,
            2 * n,
            my,
            |x, y| circular_inclusion_map(x, y, &p, v),
            "circular_inclusion",
        )?;
        g.info.circle = Some(p);
        g.info.variant = Some(v);
        g.info.printed_jump = Some(jump);
        Ok(g)
    }

    pub fn node(&self, i: usize, j: usize) -> [f64; 2] {
        self.nodes[j * (self.mx + 1) + i]
    }

    pub fn cell(&self, i: usize, j: usize) -> usize {
        j * self.mx + i
    }

    pub fn x_edge(&self, i: usize, j: usize) -> usize {
        j * (self.mx + 1) + i
    }

    pub fn y_edge(&self, i: usize, j: usize) -> usize {
        j * self.mx + i
    }

    pub fn comp_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.comp[0] + (i as f64 + 0.5) * self.dxc,
            self.comp[2] + (j as f64 + 0.5) * self.dyc,
        ]
    }

    pub fn quad(&self, i: usize, j: usize) -> [[f64; 2]; 4] {
        [
            self.node(i, j),
            self.node(i + 1, j),
            self.node(i + 1, j + 1),
            self.node(i, j + 1),
        ]
    }

    /// Recomputes normals, edge ratios, capacities and centroids from the
    /// node coordinates.
    pub fn compute_metrics(&mut self) -> Result<()> {
        let (mx, my) = (self.mx, self.my);
        self.x_normals = Vec::with_capacity((mx + 1) * my);
        self.x_ratio = Vec::with_capacity((mx + 1) * my);
        for j in 0..my {
            for i in 0..=mx {
                let (a, b) = (self.node(i, j), self.node(i, j + 1));
                let (tx, ty) = (b[0] - a[0], b[1] - a[1]);
                let len = tx.hypot(ty);
                if !(len > 0.0) {
                    return Err(Error::Grid(format!("degenerate x-edge ({i}, {j})")));
                }
                self.x_normals.push([ty / len, -tx / len]);
                self.x_ratio.push(len / self.dyc);
            }
        }
        self.y_normals = Vec::with_capacity(mx * (my + 1));
        self.y_ratio = Vec::with_capacity(mx * (my + 1));
        for j in 0..=my {
            for i in 0..mx {
                let (a, b) = (self.node(i, j), self.node(i + 1, j));
                let (tx, ty) = (b[0] - a[0], b[1] - a[1]);
                let len = tx.hypot(ty);
                if !(len > 0.0) {
                    return Err(Error::Grid(format!("degenerate y-edge ({i}, {j})")));
                }
                self.y_normals.push([-ty / len, tx / len]);
                self.y_ratio.push(len / self.dxc);
            }
        }
        self.capacity = Vec::with_capacity(mx * my);
        self.centroid = Vec::with_capacity(mx * my);
        let mut min_k = f64::INFINITY;
        for j in 0..my {
            for i in 0..mx {
                let q = self.quad(i, j);
                let (area, c) = polygon_area_centroid(&q);
                if !(area > 0.0) {
                    return Err(Error::Grid(format!("cell ({i}, {j}) has non-positive area {area}")));
                }
                let k = area / (self.dxc * self.dyc);
                min_k = min_k.min(k);
                self.capacity.push(k);
                self.centroid.push(c);
            }
        }
        self.info.min_capacity = min_k;
        Ok(())
    }

    pub fn assign_materials(&mut self, spec: &RegionSpec) -> Result<()> {
        match spec {
            RegionSpec::Uniform { material } => self.material.iter_mut().for_each(|m| *m = *material),
            RegionSpec::Rectangle {
                x0,
                x1,
                y0,
                y1,
                inside,
                outside,
            } => {
                if self.info.name != "cartesian" {
                    return Err(Error::Config("rectangle regions need a cartesian grid".into()));
                }
                let ix = |x: f64| self.edge_index(self.comp[0], self.dxc, self.mx, x);
                let iy = |y: f64| self.edge_index(self.comp[2], self.dyc, self.my, y);
                let (a, b, c, d) = (ix(*x0)?, ix(*x1)?, iy(*y0)?, iy(*y1)?);
                for j in 0..self.my {
                    for i in 0..self.mx {
                        let k = self.cell(i, j);
                        self.material[k] = if (a..b).contains(&i) && (c..d).contains(&j) {
                            *inside
                        } else {
                            *outside
                        };
                    }
                }
            }
            RegionSpec::Rings { radii, materials } => {
                let p = self
                    .info
                    .circle
                    .ok_or_else(|| Error::Config("ring regions need a circular-inclusion grid".into()))?;
                if materials.len() != radii.len() + 1 {
                    return Err(Error::Config(format!(
                        "{} ring radii need {} materials, got {}",
                        radii.len(),
                        radii.len() + 1,
                        materials.len()
                    )));
                }
                let mut thresholds = Vec::with_capacity(radii.len());
                for &r in radii {
                    let t = r / p.r_m;
                    if !(t > 0.0 && t < 1.0) || aligned_edge(0.0, self.dxc, t).is_none() {
                        return Err(Error::Config(format!(
                            "ring radius {r} does not fall on a grid line (d = {t}, spacing {})",
                            self.dxc
                        )));
                    }
                    thresholds.push(t);
                }
                if thresholds.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Config("ring radii must increase".into()));
                }
                for j in 0..self.my {
                    for i in 0..self.mx {
                        let [xc, yc] = self.comp_center(i, j);
                        let d = xc.abs().max(yc.abs());
                        let k = self.cell(i, j);
                        self.material[k] = materials[thresholds.iter().filter(|&&t| t < d).count()];
                    }
                }
            }
        }
        Ok(())
    }

    fn edge_index(&self, lo: f64, h: f64, n: usize, x: f64) -> Result<usize> {
        let hi = lo + n as f64 * h;
        if x <= lo {
            return Ok(0);
        }
        if x >= hi {
            return Ok(n);
        }
        aligned_edge(lo, h, x)
            .map(|k| k as usize)
            .ok_or_else(|| Error::Config(format!("region boundary {x} is not on a grid line (spacing {h})")))
    }

    /// Interface x-edges and y-edges as `(i, j)` edge coordinates.
    pub fn interface_edges(&self) -> (Vec<(usize, usize)>, Vec<(usize, usize)>) {
        let mut xe = Vec::new();
        let mut ye = Vec::new();
        for j in 0..self.my {
            for i in 1..self.mx {
                if self.material[self.cell(i - 1, j)] != self.material[self.cell(i, j)] {
                    xe.push((i, j));
                }
            }
        }
        for j in 1..self.my {
            for i in 0..self.mx {
                if self.material[self.cell(i, j - 1)] != self.material[self.cell(i, j)] {
                    ye.push((i, j));
                }
            }
        }
        (xe, ye)
    }

    /// Cell whose quadrilateral contains `p`. Points on shared edges go to
    /// the cell with the lowest linear index.
    pub fn locate(&self, p: [f64; 2]) -> Result<(usize, usize)> {
        let scale = self
            .nodes
            .iter()
            .fold(0.0_f64, |m, n| m.max(n[0].abs()).max(n[1].abs()));
        let tol = 1e-12 * scale.max(1e-300);
        for j in 0..self.my {
            for i in 0..self.mx {
                if point_in_quad(&self.quad(i, j), p, tol) {
                    return Ok((i, j));
                }
            }
        }
        Err(Error::Grid(format!("point ({}, {}) is outside the grid", p[0], p[1])))
    }

    pub fn total_area(&self) -> f64 {
        self.capacity.iter().sum::<f64>() * self.dxc * self.dyc
    }

    /// Metric and continuity diagnostics.
    pub fn check(&self) -> GridCheck {
        let (mx, my) = (self.mx, self.my);
        let mut closure = 0.0_f64;
        for j in 0..my {
            for i in 0..mx {
                let xl = self.x_edge(i, j);
                let xr = self.x_edge(i + 1, j);
                let yl = self.y_edge(i, j);
                let yr = self.y_edge(i, j + 1);
                let mut sum = [0.0; 2];
                for c in 0..2 {
                    sum[c] = self.x_normals[xr][c] * self.x_ratio[xr] * self.dyc
                        - self.x_normals[xl][c] * self.x_ratio[xl] * self.dyc
                        + self.y_normals[yr][c] * self.y_ratio[yr] * self.dxc
                        - self.y_normals[yl][c] * self.y_ratio[yl] * self.dxc;
                }
                let perimeter =
                    (self.x_ratio[xl] + self.x_ratio[xr]) * self.dyc + (self.y_ratio[yl] + self.y_ratio[yr]) * self.dxc;
                closure = closure.max(sum[0].hypot(sum[1]) / perimeter);
            }
        }
        let (lo, hi) = self
            .capacity
            .iter()
            .fold((f64::INFINITY, 0.0_f64), |(a, b), &k| (a.min(k), b.max(k)));
        let xs = self.nodes.iter().map(|n| n[0]);
        let ys = self.nodes.iter().map(|n| n[1]);
        let bbox = [
            xs.clone().fold(f64::INFINITY, f64::min),
            xs.fold(f64::NEG_INFINITY, f64::max),
            ys.clone().fold(f64::INFINITY, f64::min),
            ys.fold(f64::NEG_INFINITY, f64::max),
        ];
        let bbox_area = (bbox[1] - bbox[0]) * (bbox[3] - bbox[2]);
        let mut circle_error = Vec::new();
        if let Some(p) = self.info.circle {
            for r in [p.r_i, p.r_o] {
                let Some(k) = aligned_edge(0.0, self.dxc, r / p.r_m) else {
                    continue;
                };
                let k = k as i64;
                let mut err = 0.0_f64;
                // the square ring |xc|, |yc| = d passes through grid nodes
                for j in 0..=my {
                    for i in 0..=mx {
                        let xc = self.comp[0] + i as f64 * self.dxc;
                        let yc = self.comp[2] + j as f64 * self.dyc;
                        let ring = (xc.abs().max(yc.abs()) / self.dxc).round() as i64;
                        if ring == k {
                            let n = self.node(i, j);
                            err = err.max((n[0].hypot(n[1]) - r).abs());
                        }
                    }
                }
                circle_error.push((r, err));
            }
        }
        GridCheck {
            name: self.info.name.clone(),
            mx,
            my,
            variant: self.info.variant,
            printed_jump: self.info.printed_jump,
            min_capacity: lo,
            max_capacity: hi,
            total_area: self.total_area(),
            bbox_area,
            max_closure: closure,
            circle_error,
        }
    }

    /// Plain-text dump: header, node coordinates, then per-cell capacity and
    /// material.
    pub fn write_dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# tammann mapped grid")?;
        writeln!(w, "dims {} {}", self.mx, self.my)?;
        writeln!(
            w,
            "comp {:?} {:?} {:?} {:?}",
            self.comp[0], self.comp[1], self.comp[2], self.comp[3]
        )?;
        let variant = self
            .info
            .variant
            .map(|v| format!("{v:?}").to_lowercase())
            .unwrap_or_else(|| "none".into());
        writeln!(w, "mapping {} {}", self.info.name, variant)?;
        writeln!(w, "min_capacity {:?}", self.info.min_capacity)?;
        writeln!(w, "nodes {}", self.nodes.len())?;
        for j in 0..=self.my {
            for i in 0..=self.mx {
                let n = self.node(i, j);
                writeln!(w, "{i} {j} {:?} {:?}", n[0], n[1])?;
            }
        }
        writeln!(w, "cells {}", self.capacity.len())?;
        for j in 0..self.my {
            for i in 0..self.mx {
                let k = self.cell(i, j);
                let c = self.centroid[k];
                writeln!(
                    w,
                    "{i} {j} {:?} {:?} {:?} {}",
                    c[0], c[1], self.capacity[k], self.material[k]
                )?;
            }
        }
        Ok(())
    }
}

fn polygon_area_centroid(q: &[[f64; 2]]) -> (f64, [f64; 2]) {
    let (mut a, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for k in 0..q.len() {
        let (p, r) = (q[k], q[(k + 1) % q.len()]);
        let cross = p[0] * r[1] - r[0] * p[1];
        a += cross;
        cx += (p[0] + r[0]) * cross;
        cy += (p[1] + r[1]) * cross;
    }
    let a = 0.5 * a;
    (a, [cx / (6.0 * a), cy / (6.0 * a)])
}

fn point_in_quad(q: &[[f64; 2]; 4], p: [f64; 2], tol: f64) -> bool {
    let mut inside = false;
    for k in 0..4 {
        let (a, b) = (q[k], q[(k + 1) % 4]);
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        let (px, py) = (p[0] - a[0], p[1] - a[1]);
        let len2 = ex * ex + ey * ey;
        let t = ((px * ex + py * ey) / len2).clamp(0.0, 1.0);
        if (px - t * ex).hypot(py - t * ey) <= tol {
            return true;
        }
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * ex;
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}
