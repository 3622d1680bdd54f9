//! Canonical experiments: 1D air-plastic-water and air-water shock
//! transmission, the 2D Cartesian water cylinder and the mapped spherical
//! inclusion. Scenarios are plain data ([`ScenarioSpec`]) that round-trip
//! through TOML; [`run_scenario`] executes one and collects gauge peaks.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::eos::{Material, MaterialTable, TammannEos, ATM};
use crate::error::{Error, Result};
use crate::gauge::{write_gauge_csv, Gauge};
use crate::grid::{CircleParams, Grid1D, Layer, MappedGrid2D, MappingInfo, MappingVariant, RegionSpec};
use crate::limiters::LimiterKind;
use crate::numerics::{LimiterConfig, NumericsConfig};
use crate::riemann::exact::post_shock_state;
use crate::riemann::Side;
use crate::solver1d::{BoundaryKind, Solver1D};
use crate::solver2d::Solver2D;
use crate::state::Prim;

/// Initial peak used throughout the width study, Pa absolute.
pub const WIDTH_STUDY_PEAK: f64 = 184_060.0;

/// Plastic widths of the width study, m.
pub const WIDTH_STUDY_WIDTHS: [f64; 6] = [2.6, 1.4, 0.6, 0.2, 0.1, 0.0];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShockProfile {
    /// Constant post-shock state behind the front.
    #[default]
    Step,
    /// Over-pressure decays linearly to zero over `length` behind the front;
    /// every point carries the post-shock state of its own pressure.
    LinearTail { length: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShockSpec {
    /// Peak pressure behind the front, Pa absolute.
    pub peak_pressure: f64,
    /// Front position along x, m. The shock runs towards +x.
    pub front: f64,
    #[serde(default)]
    pub profile: ShockProfile,
    #[serde(default = "default_ambient")]
    pub ambient_pressure: f64,
    /// Material the shock is launched in.
    #[serde(default = "default_medium")]
    pub medium: String,
}

fn default_ambient() -> f64 {
    ATM
}

fn default_medium() -> String {
    "air".into()
}

/// A right-moving shock into a quiescent medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialShock {
    pub eos: TammannEos,
    pub ambient: Prim,
    pub peak: f64,
    pub front: f64,
    pub profile: ShockProfile,
    /// Post-shock state at the peak and the front speed.
    pub post: Prim,
    pub speed: f64,
}

impl InitialShock {
    pub fn new(medium: &Material, ambient_p: f64, peak: f64, front: f64, profile: ShockProfile) -> Result<Self> {
        if !(ambient_p > -medium.eos.p_inf) {
            return Err(Error::Config(format!("ambient pressure {ambient_p} is not admissible")));
        }
        if !(peak >= ambient_p) || !peak.is_finite() {
            return Err(Error::Config(format!(
                "shock peak {peak} Pa is below the ambient pressure {ambient_p} Pa"
            )));
        }
        if let ShockProfile::LinearTail { length } = profile {
            if !(length > 0.0) {
                return Err(Error::Config(format!("tail length {length} must be positive")));
            }
        }
        let ambient = medium.at_rest(ambient_p);
        let (post, speed) = post_shock_state(&ambient, &medium.eos, peak, Side::Right)?;
        Ok(Self {
            eos: medium.eos,
            ambient,
            peak,
            front,
            profile,
            post,
            speed,
        })
    }

    /// State at position `x` in the shock medium.
    pub fn state_at(&self, x: f64) -> Result<Prim> {
        if x >= self.front {
            return Ok(self.ambient);
        }
        match self.profile {
            ShockProfile::Step => Ok(self.post),
            ShockProfile::LinearTail { length } => {
                let f = (1.0 - (self.front - x) / length).max(0.0);
                let p = self.ambient.p + f * (self.peak - self.ambient.p);
                Ok(post_shock_state(&self.ambient, &self.eos, p, Side::Right)?.0)
            }
        }
    }

    /// Ratio of the front speed to the ambient sound speed.
    pub fn mach(&self) -> Result<f64> {
        Ok(self.speed / self.eos.sound_speed(&self.ambient)?)
    }
}

/// Initial states for cells with centers `xs` and materials `mats`: the
/// shock medium behind the front carries the shock profile, every other
/// cell rests at the ambient pressure with its reference density.
pub fn build_initial_shock(xs: &[f64], mats: &[usize], table: &MaterialTable, spec: &ShockSpec) -> Result<Vec<Prim>> {
    let medium_idx = table.index_of(&spec.medium)?;
    let shock = InitialShock::new(
        table.get(medium_idx),
        spec.ambient_pressure,
        spec.peak_pressure,
        spec.front,
        spec.profile,
    )?;
    xs.iter()
        .zip(mats.iter())
        .map(|(&x, &m)| {
            if x < spec.front {
                if m != medium_idx {
                    return Err(Error::Config(format!(
                        "cell at x = {x} behind the shock front is {}, not {}",
                        table.get(m).name,
                        spec.medium
                    )));
                }
                shock.state_at(x)
            } else {
                Ok(table.get(m).at_rest(spec.ambient_pressure))
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub x0: f64,
    pub x1: f64,
    pub material: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxSpec {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub material: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeometrySpec {
    /// 1D line of `cells` cells with material layers on a base material.
    Layered1d {
        x_lo: f64,
        x_hi: f64,
        cells: usize,
        base: String,
        #[serde(default)]
        layers: Vec<LayerSpec>,
    },
    /// Cartesian (z, r) half plane, optionally with one rectangular inclusion.
    Cartesian2d {
        x_lo: f64,
        x_hi: f64,
        y_lo: f64,
        y_hi: f64,
        nx: usize,
        ny: usize,
        base: String,
        #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
        inclusion: Option<BoxSpec>,
    },
    /// Circular-inclusion grid. `radii` increase and `materials` go from the
    /// center outwards, one more material than radii.
    Circular2d {
        #[serde(default)]
        circle: CircleParams,
        #[serde(default)]
        variant: MappingVariant,
        n: usize,
        #[serde(default = "default_true")]
        half: bool,
        radii: Vec<f64>,
        materials: Vec<String>,
    },
}

fn default_true() -> bool {
    true
}

impl GeometrySpec {
    pub fn is_1d(&self) -> bool {
        matches!(self, GeometrySpec::Layered1d { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeSpec {
    pub id: usize,
    pub x: f64,
    #[serde(default)]
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    /// Extra or replacement materials on top of air, plastic and water.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub materials: Vec<Material>,
    pub geometry: GeometrySpec,
    pub shock: ShockSpec,
    #[serde(default)]
    pub gauges: Vec<GaugeSpec>,
    /// x_lo, x_hi in 1D; x_lo, x_hi, y_lo, y_hi in 2D. Defaults to outflow
    /// everywhere, with a wall on the axis in 2D.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub boundaries: Vec<BoundaryKind>,
    pub t_end: f64,
    /// Snapshot interval, s. Initial and final snapshots are always written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<f64>,
    #[serde(default)]
    pub numerics: NumericsConfig,
}

/// Default gauge positions of the width study: before, inside (only with
/// plastic) and after the layer. The outer gauges move out of thick layers.
pub fn width_study_gauges(width: f64) -> Vec<GaugeSpec> {
    let off = (0.5 * width + 0.5).max(1.0);
    let mut g = vec![
        GaugeSpec { id: 1, x: -5.0, y: 0.0 },
        GaugeSpec { id: 2, x: -off, y: 0.0 },
    ];
    if width > 0.0 {
        g.push(GaugeSpec { id: 3, x: 0.0, y: 0.0 });
    }
    g.push(GaugeSpec { id: 4, x: off, y: 0.0 });
    g
}

/// Air, a plastic layer of `width` centered at 0 and water, on [-10, 10] m
/// with 2000 cells; `width = 0` gives the bare air-water interface.
pub fn air_plastic_water_1d(width: f64) -> Result<ScenarioSpec> {
    if !(width >= 0.0) {
        return Err(Error::Config(format!("plastic width {width} must be non-negative")));
    }
    let mut layers = vec![LayerSpec {
        x0: 0.5 * width,
        x1: 10.0,
        material: "water".into(),
    }];
    if width > 0.0 {
        layers.insert(
            0,
            LayerSpec {
                x0: -0.5 * width,
                x1: 0.5 * width,
                material: "plastic".into(),
            },
        );
    }
    Ok(ScenarioSpec {
        name: if width > 0.0 {
            format!("air_plastic_water_1d_w{width}")
        } else {
            "air_water_1d".into()
        },
        materials: Vec::new(),
        geometry: GeometrySpec::Layered1d {
            x_lo: -10.0,
            x_hi: 10.0,
            cells: 2000,
            base: "air".into(),
            layers,
        },
        shock: ShockSpec {
            peak_pressure: WIDTH_STUDY_PEAK,
            front: -6.0,
            profile: ShockProfile::Step,
            ambient_pressure: ATM,
            medium: "air".into(),
        },
        gauges: width_study_gauges(width),
        boundaries: vec![BoundaryKind::Outflow; 2],
        t_end: 0.018,
        snapshot_every: None,
        numerics: NumericsConfig::default(),
    })
}

/// Water box `[-2, 2] x [0, 2]` cm in air on `[-4, 4] x [0, 4]` cm, revolved
/// about the x axis into a cylinder.
pub fn cartesian_cylinder_2d() -> ScenarioSpec {
    ScenarioSpec {
        name: "cartesian_cylinder_2d".into(),
        materials: Vec::new(),
        geometry: GeometrySpec::Cartesian2d {
            x_lo: -0.04,
            x_hi: 0.04,
            y_lo: 0.0,
            y_hi: 0.04,
            nx: 160,
            ny: 80,
            base: "air".into(),
            inclusion: Some(BoxSpec {
                x0: -0.02,
                x1: 0.02,
                y0: 0.0,
                y1: 0.02,
                material: "water".into(),
            }),
        },
        shock: ShockSpec {
            peak_pressure: WIDTH_STUDY_PEAK,
            front: -0.03,
            profile: ShockProfile::Step,
            ambient_pressure: ATM,
            medium: "air".into(),
        },
        gauges: vec![GaugeSpec {
            id: 1,
            x: -0.01,
            y: 0.0,
        }],
        boundaries: default_boundaries(false),
        t_end: 8e-5,
        snapshot_every: None,
        numerics: NumericsConfig::default(),
    }
}

/// Spherical water inclusion of radius `r_o` in air on the half
/// circular-inclusion grid; with `shell`, a plastic shell between `r_i` and
/// `r_o` holds the water.
pub fn mapped_sphere_2d(shell: bool) -> ScenarioSpec {
    let circle = CircleParams::default();
    let (radii, materials) = if shell {
        (vec![circle.r_i, circle.r_o], vec!["water", "plastic", "air"])
    } else {
        (vec![circle.r_o], vec!["water", "air"])
    };
    ScenarioSpec {
        name: if shell { "mapped_shell_2d" } else { "mapped_sphere_2d" }.into(),
        materials: Vec::new(),
        geometry: GeometrySpec::Circular2d {
            circle,
            variant: MappingVariant::Auto,
            n: 80,
            half: true,
            radii,
            materials: materials.into_iter().map(String::from).collect(),
        },
        shock: ShockSpec {
            peak_pressure: WIDTH_STUDY_PEAK,
            front: -0.025,
            profile: ShockProfile::Step,
            ambient_pressure: ATM,
            medium: "air".into(),
        },
        gauges: vec![GaugeSpec {
            id: 1,
            x: -0.01,
            y: 0.0,
        }],
        boundaries: default_boundaries(false),
        t_end: 8e-5,
        snapshot_every: None,
        numerics: NumericsConfig::default(),
    }
}

fn default_boundaries(one_d: bool) -> Vec<BoundaryKind> {
    if one_d {
        vec![BoundaryKind::Outflow; 2]
    } else {
        vec![
            BoundaryKind::Outflow,
            BoundaryKind::Outflow,
            BoundaryKind::Wall,
            BoundaryKind::Outflow,
        ]
    }
}

/// Names accepted by [`ScenarioSpec::builtin`].
pub const BUILTIN_SCENARIOS: [&str; 5] = [
    "air_water_1d",
    "air_plastic_water_1d",
    "cartesian_cylinder_2d",
    "mapped_sphere_2d",
    "mapped_shell_2d",
];

impl ScenarioSpec {
    /// A named built-in scenario; `air_plastic_water_1d` uses the 2.6 m layer.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "air_water_1d" => air_plastic_water_1d(0.0),
            "air_plastic_water_1d" => air_plastic_water_1d(2.6),
            "cartesian_cylinder_2d" => Ok(cartesian_cylinder_2d()),
            "mapped_sphere_2d" => Ok(mapped_sphere_2d(false)),
            "mapped_shell_2d" => Ok(mapped_sphere_2d(true)),
            _ => Err(Error::Config(format!(
                "unknown scenario {name}; built-ins are {}",
                BUILTIN_SCENARIOS.join(", ")
            ))),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("scenario file: {e}")))
    }

    pub fn from_toml_value(value: toml::Value) -> Result<Self> {
        value
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(format!("scenario: {e}")))
    }

    pub fn to_toml_value(&self) -> Result<toml::Value> {
        toml::Value::try_from(self).map_err(|e| Error::Config(format!("cannot serialize scenario: {e}")))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize scenario: {e}")))
    }

    pub fn material_table(&self) -> Result<MaterialTable> {
        let mut table = MaterialTable::default();
        for m in &self.materials {
            let checked = Material::new(&m.name, m.eos.gamma, m.eos.p_inf, m.rho_ref)?;
            table.upsert(checked);
        }
        Ok(table)
    }

    fn boundary_kinds<const N: usize>(&self) -> Result<[BoundaryKind; N]> {
        let given = if self.boundaries.is_empty() {
            default_boundaries(N == 2)
        } else {
            self.boundaries.clone()
        };
        given
            .try_into()
            .map_err(|b: Vec<BoundaryKind>| Error::Config(format!("expected {N} boundary kinds, got {}", b.len())))
    }

    /// Checks everything that can be checked without running.
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end = {} must be non-negative", self.t_end)));
        }
        if let Some(dt) = self.snapshot_every {
            if !(dt > 0.0) {
                return Err(Error::Config(format!("snapshot_every = {dt} must be positive")));
            }
        }
        if !(self.shock.peak_pressure > 0.0) {
            return Err(Error::Config("shock peak pressure must be positive".into()));
        }
        for (k, g) in self.gauges.iter().enumerate() {
            if self.gauges[..k].iter().any(|o| o.id == g.id) {
                return Err(Error::Config(format!("gauge id {} used twice", g.id)));
            }
        }
        self.numerics.validate()?;
        self.build()?;
        Ok(())
    }

    fn build(&self) -> Result<Built> {
        let table = self.material_table()?;
        match &self.geometry {
            GeometrySpec::Layered1d {
                x_lo,
                x_hi,
                cells,
                base,
                layers,
            } => {
                let base = table.index_of(base)?;
                let resolved = layers
                    .iter()
                    .map(|l| {
                        Ok(Layer {
                            x0: l.x0,
                            x1: l.x1,
                            material: table.index_of(&l.material)?,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let grid = Grid1D::layered(*x_lo, *x_hi, *cells, base, &resolved)?;
                let dx = grid.dx();
                for l in layers {
                    let w = l.x1 - l.x0;
                    if w > 0.0 && w < 4.0 * dx * (1.0 - 1e-9) {
                        return Err(Error::Config(format!(
                            "layer of {} with width {w} m is resolved by fewer than 4 cells (dx = {dx} m); increase the resolution",
                            l.material
                        )));
                    }
                }
                Ok(Built::One(table, grid))
            }
            GeometrySpec::Cartesian2d {
                x_lo,
                x_hi,
                y_lo,
                y_hi,
                nx,
                ny,
                base,
                inclusion,
            } => {
                let mut grid = MappedGrid2D::cartesian(*x_lo, *x_hi, *y_lo, *y_hi, *nx, *ny)?;
                let base = table.index_of(base)?;
                let region = match inclusion {
                    None => RegionSpec::Uniform { material: base },
                    Some(b) => RegionSpec::Rectangle {
                        x0: b.x0,
                        x1: b.x1,
                        y0: b.y0,
                        y1: b.y1,
                        inside: table.index_of(&b.material)?,
                        outside: base,
                    },
                };
                grid.assign_materials(&region)?;
                Ok(Built::Two(table, grid))
            }
            GeometrySpec::Circular2d {
                circle,
                variant,
                n,
                half,
                radii,
                materials,
            } => {
                let mut grid = MappedGrid2D::circular(*circle, *variant, *n, *half)?;
                let mats = materials
                    .iter()
                    .map(|m| table.index_of(m))
                    .collect::<Result<Vec<_>>>()?;
                let region = if radii.is_empty() && mats.len() == 1 {
                    RegionSpec::Uniform { material: mats[0] }
                } else {
                    RegionSpec::Rings {
                        radii: radii.clone(),
                        materials: mats,
                    }
                };
                grid.assign_materials(&region)?;
                Ok(Built::Two(table, grid))
            }
        }
    }
}

enum Built {
    One(MaterialTable, Grid1D),
    Two(MaterialTable, MappedGrid2D),
}

/// Peak of one gauge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugePeak {
    pub id: usize,
    pub location: [f64; 2],
    pub peak_kpa: f64,
    pub time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeReport {
    pub scenario: String,
    pub initial_peak_kpa: f64,
    pub gauges: Vec<GaugePeak>,
    /// File holding the full series, relative to the output directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_file: Option<String>,
}

impl GaugeReport {
    pub fn from_gauges(scenario: &str, initial_peak_kpa: f64, gauges: &[Gauge]) -> Self {
        Self {
            scenario: scenario.to_string(),
            initial_peak_kpa,
            gauges: gauges
                .iter()
                .filter_map(|g| {
                    g.peak().map(|(t, p)| GaugePeak {
                        id: g.id,
                        location: g.location,
                        peak_kpa: p,
                        time_s: t,
                    })
                })
                .collect(),
            series_file: None,
        }
    }

    pub fn peak(&self, id: usize) -> Option<&GaugePeak> {
        self.gauges.iter().find(|g| g.id == id)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "gauge_id,x_m,y_m,peak_kPa,time_of_peak_s")?;
        for g in &self.gauges {
            writeln!(
                w,
                "{},{:?},{:?},{:?},{:?}",
                g.id, g.location[0], g.location[1], g.peak_kpa, g.time_s
            )?;
        }
        Ok(())
    }
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: GaugeReport,
    pub gauges: Vec<Gauge>,
    pub steps: usize,
    pub rejected_steps: usize,
    pub t_final: f64,
    pub cells: usize,
    pub mapping: Option<MappingInfo>,
    /// Files written, relative to the output directory.
    pub files: Vec<String>,
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io(format!("{}: {e}", path.display()))
}

struct Writer {
    dir: Option<PathBuf>,
    files: Vec<String>,
}

impl Writer {
    fn new(dir: Option<&Path>) -> Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d).map_err(|e| io_err(d, e))?;
        }
        Ok(Self {
            dir: dir.map(Path::to_path_buf),
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| io_err(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Snapshot times: every `every` up to `t_end`, plus `t_end`.
fn snapshot_times(t_end: f64, every: Option<f64>) -> Vec<f64> {
    let mut out = Vec::new();
    if let Some(dt) = every {
        let mut k = 1;
        while (k as f64) * dt < t_end * (1.0 - 1e-12) {
            out.push(k as f64 * dt);
            k += 1;
        }
    }
    if t_end > 0.0 {
        out.push(t_end);
    }
    out
}

/// A ready-to-run solver for a scenario, gauges attached.
pub enum ScenarioSolver {
    One(Solver1D),
    Two(Solver2D),
}

impl ScenarioSolver {
    pub fn advance_to(&mut self, t: f64) -> Result<()> {
        match self {
            Self::One(s) => s.advance_to(t),
            Self::Two(s) => s.advance_to(t),
        }
    }

    pub fn gauges(&self) -> &[Gauge] {
        match self {
            Self::One(s) => &s.gauges,
            Self::Two(s) => &s.gauges,
        }
    }
}

impl ScenarioSpec {
    /// Builds the grid, initial shock and solver.
    pub fn solver(&self) -> Result<ScenarioSolver> {
        self.validate()?;
        match self.build()? {
            Built::One(table, grid) => {
                let xs: Vec<f64> = (0..grid.n()).map(|i| grid.center(i)).collect();
                let init = build_initial_shock(&xs, &grid.material, &table, &self.shock)?;
                let mut s = Solver1D::new(grid, &table, &init, self.boundary_kinds::<2>()?, self.numerics.clone())?;
                for g in &self.gauges {
                    s.add_gauge(g.id, g.x)?;
                }
                Ok(ScenarioSolver::One(s))
            }
            Built::Two(table, grid) => {
                let xs: Vec<f64> = grid.centroid.iter().map(|c| c[0]).collect();
                let init = build_initial_shock(&xs, &grid.material, &table, &self.shock)?;
                let mut s = Solver2D::new(grid, &table, &init, self.boundary_kinds::<4>()?, self.numerics.clone())?;
                for g in &self.gauges {
                    s.add_gauge(g.id, [g.x, g.y])?;
                }
                Ok(ScenarioSolver::Two(s))
            }
        }
    }
}

/// Runs `spec`, writing gauge series, snapshots and the peak report into
/// `out` when given.
pub fn run_scenario(spec: &ScenarioSpec, out: Option<&Path>) -> Result<RunOutcome> {
    let mut solver = spec.solver()?;
    let mut w = Writer::new(out)?;
    let times = snapshot_times(spec.t_end, spec.snapshot_every);
    let (gauges, steps, rejected, t_final, cells, mapping) = match &mut solver {
        ScenarioSolver::One(s) => {
            w.write("snapshot_0000.csv", |f| s.write_snapshot(f))?;
            for (k, &t) in times.iter().enumerate() {
                s.advance_to(t)?;
                w.write(&format!("snapshot_{:04}.csv", k + 1), |f| s.write_snapshot(f))?;
            }
            (std::mem::take(&mut s.gauges), s.steps, 0, s.t, s.n(), None)
        }
        ScenarioSolver::Two(s) => {
            w.write("snapshot_0000.csv", |f| s.write_snapshot(f))?;
            w.write("schlieren_0000.csv", |f| s.write_schlieren(f))?;
            for (k, &t) in times.iter().enumerate() {
                s.advance_to(t)?;
                w.write(&format!("snapshot_{:04}.csv", k + 1), |f| s.write_snapshot(f))?;
                w.write(&format!("schlieren_{:04}.csv", k + 1), |f| s.write_schlieren(f))?;
            }
            let cells = s.grid.mx * s.grid.my;
            let mapping = s.grid.info.clone();
            (
                std::mem::take(&mut s.gauges),
                s.steps,
                s.rejected_steps,
                s.t,
                cells,
                Some(mapping),
            )
        }
    };
    let mut report = GaugeReport::from_gauges(&spec.name, spec.shock.peak_pressure / 1000.0, &gauges);
    if !gauges.is_empty() {
        w.write("gauges.csv", |f| write_gauge_csv(f, &gauges))?;
        if w.dir.is_some() {
            report.series_file = Some("gauges.csv".into());
        }
    }
    w.write("peaks.csv", |f| report.write_csv(f))?;
    Ok(RunOutcome {
        report,
        gauges,
        steps,
        rejected_steps: rejected,
        t_final,
        cells,
        mapping,
        files: w.files,
    })
}

/// Adjusts the initial shock peak until gauge `gauge` records a peak of
/// `target` Pa, by secant iteration on the peak over-pressure. Returns the
/// calibrated scenario and the number of runs it took.
pub fn calibrate_peak(spec: &ScenarioSpec, gauge: usize, target: f64, rel_tol: f64) -> Result<(ScenarioSpec, usize)> {
    if !spec.gauges.iter().any(|g| g.id == gauge) {
        return Err(Error::Config(format!("no gauge {gauge} to calibrate against")));
    }
    let ambient = spec.shock.ambient_pressure;
    if !(target > ambient) {
        return Err(Error::Config(format!(
            "calibration target {target} Pa is not above ambient"
        )));
    }
    let measure = |over: f64| -> Result<f64> {
        let mut s = spec.clone();
        s.shock.peak_pressure = ambient + over;
        let out = run_scenario(&s, None)?;
        let p = out
            .report
            .peak(gauge)
            .map(|g| g.peak_kpa * 1000.0)
            .ok_or_else(|| Error::Config(format!("gauge {gauge} recorded nothing")))?;
        Ok(p - ambient)
    };
    let goal = target - ambient;
    let done = |f: f64| f.abs() <= rel_tol * goal;
    let (mut x0, mut f0) = (goal, measure(goal)? - goal);
    let mut runs = 1;
    // first correction assumes the gauge reading scales with the over-pressure
    let mut x1 = x0 * goal / (f0 + goal).max(0.5 * goal);
    while !done(f0) {
        if runs >= 20 {
            return Err(Error::Calibration(format!(
                "no convergence after {runs} runs, last peak {} Pa",
                ambient + x0
            )));
        }
        let f1 = measure(x1)? - goal;
        runs += 1;
        if f1 == f0 {
            return Err(Error::Calibration(format!(
                "gauge reading stalled at a peak of {} Pa",
                ambient + x1
            )));
        }
        let x2 = (x1 - f1 * (x1 - x0) / (f1 - f0)).clamp(0.5 * x1, 2.0 * x1);
        (x0, f0, x1) = (x1, f1, x2);
    }
    let mut s = spec.clone();
    s.shock.peak_pressure = ambient + x0;
    Ok((s, runs))
}

/// Parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    /// Plastic width of the layered 1D layout, m.
    Width,
    /// Cells along x (1D cells, 2D `nx` with `ny` scaled, circular `n`).
    Resolution,
    /// Limiter kind, or `standard` / `transmission` presets.
    Limiter,
}

impl FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "width" => Ok(Self::Width),
            "resolution" => Ok(Self::Resolution),
            "limiter" => Ok(Self::Limiter),
            _ => Err(Error::Config(format!(
                "cannot sweep over {s}; choose width, resolution or limiter"
            ))),
        }
    }
}

/// The scenario `base` with one sweep value applied.
pub fn apply_sweep_value(base: &ScenarioSpec, param: SweepParameter, value: &str) -> Result<ScenarioSpec> {
    let bad = |what: &str| Error::Config(format!("bad {what} value {value:?}"));
    match param {
        SweepParameter::Width => {
            let width: f64 = value.trim().parse().map_err(|_| bad("width"))?;
            let GeometrySpec::Layered1d { cells, x_lo, x_hi, .. } = &base.geometry else {
                return Err(Error::Config("width sweeps need a layered 1D scenario".into()));
            };
            let mut s = air_plastic_water_1d(width)?;
            if let GeometrySpec::Layered1d {
                cells: c,
                x_lo: lo,
                x_hi: hi,
                ..
            } = &mut s.geometry
            {
                (*c, *lo, *hi) = (*cells, *x_lo, *x_hi);
            }
            s.shock = base.shock.clone();
            s.t_end = base.t_end;
            s.snapshot_every = base.snapshot_every;
            s.numerics = base.numerics.clone();
            s.materials = base.materials.clone();
            Ok(s)
        }
        SweepParameter::Resolution => {
            let n: usize = value.trim().parse().map_err(|_| bad("resolution"))?;
            if n == 0 {
                return Err(bad("resolution"));
            }
            let mut s = base.clone();
            match &mut s.geometry {
                GeometrySpec::Layered1d { cells, .. } => *cells = n,
                GeometrySpec::Cartesian2d { nx, ny, .. } => {
                    let scaled = (n as f64 * *ny as f64 / *nx as f64).round() as usize;
                    (*nx, *ny) = (n, scaled.max(1));
                }
                GeometrySpec::Circular2d { n: cn, .. } => *cn = n,
            }
            s.name = format!("{}_n{n}", base.name);
            Ok(s)
        }
        SweepParameter::Limiter => {
            let mut s = base.clone();
            let v = value.trim();
            s.numerics.limiter = match v {
                "standard" => LimiterConfig::standard_minmod(),
                "transmission" => LimiterConfig::default(),
                _ => {
                    let kind: LimiterKind = toml::Value::String(v.to_string())
                        .try_into()
                        .map_err(|_| bad("limiter"))?;
                    LimiterConfig {
                        bulk: kind,
                        stiff_material: kind,
                        ..base.numerics.limiter.clone()
                    }
                }
            };
            s.name = format!("{}_{v}", base.name);
            Ok(s)
        }
    }
}

/// Applies `key.path=value` to a TOML document. The value is read as a TOML
/// literal when possible and as a bare string otherwise; missing tables
/// along the path are created.
pub fn apply_override(doc: &mut toml::Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("bad override key {key:?}")));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = doc;
    for (k, part) in parts.iter().enumerate() {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key}: {} is not a table", parts[..k].join("."))))?;
        if k + 1 == parts.len() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        cur = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    unreachable!("non-empty key")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quiescent_when_peak_is_ambient() {
        let spec = ShockSpec {
            peak_pressure: ATM,
            front: 0.0,
            profile: ShockProfile::Step,
            ambient_pressure: ATM,
            medium: "air".into(),
        };
        let table = MaterialTable::default();
        let init = build_initial_shock(&[-1.0, 1.0], &[0, 2], &table, &spec).unwrap();
        assert_eq!(init[0], Material::air().at_rest(ATM));
        assert_eq!(init[1], Material::water().at_rest(ATM));
        let low = ShockSpec {
            peak_pressure: 0.5 * ATM,
            ..spec.clone()
        };
        assert!(build_initial_shock(&[-1.0], &[0], &table, &low).is_err());
        // the shock medium must fill everything behind the front
        assert!(build_initial_shock(&[-1.0], &[2], &table, &spec).is_err());
    }

    #[test]
    fn table_peak_shock() {
        let s = InitialShock::new(&Material::air(), ATM, WIDTH_STUDY_PEAK, 0.0, ShockProfile::Step).unwrap();
        assert!(s.post.u > 0.0 && s.post.rho > 1.204);
        let m = s.mach().unwrap();
        assert!(m > 1.0 && (m - (1.0 + 6.0 / 7.0 * (WIDTH_STUDY_PEAK / ATM - 1.0)).sqrt()).abs() < 1e-12);
        let mut last = m;
        for k in 1..6 {
            let peak = ATM + (WIDTH_STUDY_PEAK - ATM) * 2f64.powi(k);
            let mk = InitialShock::new(&Material::air(), ATM, peak, 0.0, ShockProfile::Step)
                .unwrap()
                .mach()
                .unwrap();
            assert!(mk > last);
            last = mk;
        }
    }

    #[test]
    fn linear_tail() {
        let s = InitialShock::new(
            &Material::air(),
            ATM,
            WIDTH_STUDY_PEAK,
            0.0,
            ShockProfile::LinearTail { length: 2.0 },
        )
        .unwrap();
        assert!((s.state_at(-1e-12).unwrap().p - WIDTH_STUDY_PEAK).abs() < 1e-6);
        assert!((s.state_at(-1.0).unwrap().p - 0.5 * (ATM + WIDTH_STUDY_PEAK)).abs() < 1e-9);
        assert_eq!(s.state_at(-3.0).unwrap(), s.ambient);
        assert_eq!(s.state_at(0.5).unwrap(), s.ambient);
    }

    #[test]
    fn width_layouts() {
        for w in WIDTH_STUDY_WIDTHS {
            let s = air_plastic_water_1d(w).unwrap();
            s.validate().unwrap();
            assert_eq!(s.gauges.len(), if w > 0.0 { 4 } else { 3 });
            let half = 0.5 * w;
            for g in &s.gauges {
                match g.id {
                    2 => assert!(g.x < -half),
                    4 => assert!(g.x > half),
                    _ => {}
                }
            }
        }
        let mut s = air_plastic_water_1d(0.01).unwrap();
        assert!(matches!(s.validate(), Err(Error::Config(_))));
        if let GeometrySpec::Layered1d { cells, .. } = &mut s.geometry {
            *cells = 8000;
        }
        s.validate().unwrap();
    }

    #[test]
    fn builtins_validate_and_round_trip() {
        for name in BUILTIN_SCENARIOS {
            let s = ScenarioSpec::builtin(name).unwrap();
            s.validate().unwrap();
            let text = s.to_toml_string().unwrap();
            assert_eq!(ScenarioSpec::from_toml_str(&text).unwrap(), s, "{name}");
        }
        assert!(ScenarioSpec::builtin("nope").is_err());
    }

    #[test]
    fn overrides() {
        let mut doc = ScenarioSpec::builtin("air_water_1d").unwrap().to_toml_value().unwrap();
        apply_override(&mut doc, "numerics.cfl=0.5").unwrap();
        apply_override(&mut doc, "geometry.cells = 1000").unwrap();
        apply_override(&mut doc, "numerics.limiter.bulk=mc").unwrap();
        apply_override(&mut doc, "name=renamed").unwrap();
        let s = ScenarioSpec::from_toml_value(doc.clone()).unwrap();
        assert_eq!(s.numerics.cfl, 0.5);
        assert_eq!(s.numerics.limiter.bulk, LimiterKind::Mc);
        assert_eq!(s.name, "renamed");
        assert!(matches!(s.geometry, GeometrySpec::Layered1d { cells: 1000, .. }));
        assert!(apply_override(&mut doc, "novalue").is_err());
        apply_override(&mut doc, "numerics.bogus=1").unwrap();
        assert!(ScenarioSpec::from_toml_value(doc).is_err());
    }

    #[test]
    fn sweep_values() {
        let base = air_plastic_water_1d(0.0).unwrap();
        let s = apply_sweep_value(&base, SweepParameter::Width, "0.6").unwrap();
        assert_eq!(s.gauges.len(), 4);
        let s = apply_sweep_value(&base, SweepParameter::Resolution, "4000").unwrap();
        assert!(matches!(s.geometry, GeometrySpec::Layered1d { cells: 4000, .. }));
        let s = apply_sweep_value(&base, SweepParameter::Limiter, "standard").unwrap();
        assert_eq!(s.numerics.limiter, LimiterConfig::standard_minmod());
        let s = apply_sweep_value(&base, SweepParameter::Limiter, "vanleer").unwrap();
        assert_eq!(s.numerics.limiter.bulk, LimiterKind::Vanleer);
        assert!(apply_sweep_value(&base, SweepParameter::Limiter, "fancy").is_err());
        let cyl = cartesian_cylinder_2d();
        assert!(apply_sweep_value(&cyl, SweepParameter::Width, "0.1").is_err());
        let s = apply_sweep_value(&cyl, SweepParameter::Resolution, "80").unwrap();
        assert!(matches!(s.geometry, GeometrySpec::Cartesian2d { nx: 80, ny: 40, .. }));
        assert!("colour".parse::<SweepParameter>().is_err());
    }

    #[test]
    fn zero_time_run_writes_initial_snapshot() {
        let dir = std::env::temp_dir().join(format!("tammann-zero-{}", std::process::id()));
        let mut s = air_plastic_water_1d(0.0).unwrap();
        s.t_end = 0.0;
        let out = run_scenario(&s, Some(&dir)).unwrap();
        assert_eq!(out.steps, 0);
        assert!(out.files.contains(&"snapshot_0000.csv".to_string()));
        assert!(!out.files.contains(&"snapshot_0001.csv".to_string()));
        let g4 = out.report.peak(4).unwrap();
        assert!((g4.peak_kpa - 101.325).abs() < 1e-9);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn snapshot_schedule() {
        assert_eq!(snapshot_times(1.0, None), vec![1.0]);
        assert_eq!(snapshot_times(1.0, Some(0.4)), vec![0.4, 0.8, 1.0]);
        assert_eq!(snapshot_times(1.0, Some(0.5)), vec![0.5, 1.0]);
        assert!(snapshot_times(0.0, Some(0.5)).is_empty());
    }

    #[test]
    fn calibration_of_a_step_is_immediate() {
        let mut s = air_plastic_water_1d(0.0).unwrap();
        if let GeometrySpec::Layered1d { cells, .. } = &mut s.geometry {
            *cells = 200;
        }
        s.t_end = 0.006;
        let (c, runs) = calibrate_peak(&s, 1, WIDTH_STUDY_PEAK, 1e-3).unwrap();
        assert_eq!(runs, 1);
        assert_eq!(c.shock.peak_pressure, WIDTH_STUDY_PEAK);
        assert!(calibrate_peak(&s, 1, ATM, 1e-4).is_err());
        assert!(calibrate_peak(&s, 9, WIDTH_STUDY_PEAK, 1e-6).is_err());
    }

    #[test]
    fn calibration_compensates_tail_decay() {
        let mut s = air_plastic_water_1d(0.0).unwrap();
        if let GeometrySpec::Layered1d { cells, .. } = &mut s.geometry {
            *cells = 400;
        }
        s.t_end = 0.01;
        s.shock.profile = ShockProfile::LinearTail { length: 2.0 };
        let (c, runs) = calibrate_peak(&s, 2, WIDTH_STUDY_PEAK, 1e-4).unwrap();
        assert!(runs > 1 && c.shock.peak_pressure > WIDTH_STUDY_PEAK);
        let got = run_scenario(&c, None).unwrap().report.peak(2).unwrap().peak_kpa;
        assert!((got * 1000.0 - WIDTH_STUDY_PEAK).abs() < 1e-4 * (WIDTH_STUDY_PEAK - ATM));
    }
}
