//! `tammann`: runs shock-transmission scenarios and the analytic oracles.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tammann_fv::acoustics::{
    interface_coefficients, nth_transmission, partial_transmission, total_transmission, AcousticMedium,
};
use tammann_fv::grid::{CircleParams, GridCheck, MappedGrid2D, MappingInfo, MappingVariant};
use tammann_fv::riemann::exact::solve_star;
use tammann_fv::scenarios::{
    apply_override, apply_sweep_value, calibrate_peak, run_scenario, GaugeReport, RunOutcome, ScenarioSpec,
    SweepParameter, WIDTH_STUDY_WIDTHS,
};
use tammann_fv::{Error, MaterialTable, Prim, TammannEos};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("grid check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) | CliError::Io { .. } => 2,
            CliError::Core(Error::Config(_) | Error::Grid(_) | Error::Io(_)) => 2,
            CliError::Core(_) | CliError::CheckFailed(_) => 3,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "tammann",
    version,
    about = "Multi-material shock transmission on fixed and mapped grids"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and write gauges, snapshots and a manifest.
    Run(RunArgs),
    /// Run a scenario once per parameter value and summarize gauge peaks.
    Sweep(SweepArgs),
    /// Sample the exact Riemann solution as CSV (xi,rho,u,p).
    Riemann(RiemannArgs),
    /// Linear-acoustics coefficients and the reverberation series.
    Acoustics(AcousticsArgs),
    /// Metric and continuity report for the circular-inclusion grid.
    Gridcheck(GridcheckArgs),
}

#[derive(Args, Debug, Clone)]
struct ScenarioArgs {
    /// Built-in scenario name, or a path to a scenario or manifest TOML file.
    #[arg(long, short)]
    scenario: String,
    /// Override any scenario key, e.g. `--set numerics.cfl=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Cells along x (1D cells, 2D nx, circular n).
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    cfl: Option<f64>,
    /// Run time in seconds.
    #[arg(long)]
    t_end: Option<f64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Output directory (default `out/<scenario name>`).
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Rescale the initial peak until gauge ID reads the given kPa, e.g. `4=184.06`.
    #[arg(long, value_name = "ID=KPA")]
    calibrate: Option<String>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// width, resolution or limiter.
    #[arg(long)]
    param: String,
    /// Comma-separated values. Width sweeps default to the six study widths.
    #[arg(long, value_delimiter = ',')]
    values: Vec<String>,
    #[arg(long, short)]
    out: Option<PathBuf>,
    /// Concurrent runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args, Debug)]
struct RiemannArgs {
    /// Left state `rho,u,p`.
    #[arg(long, allow_hyphen_values = true)]
    left: String,
    #[arg(long, allow_hyphen_values = true)]
    right: String,
    /// Material name or `gamma,p_inf` for the left state.
    #[arg(long, default_value = "air")]
    left_eos: String,
    #[arg(long, default_value = "air")]
    right_eos: String,
    /// Comma-separated similarity coordinates x/t.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    xi: Vec<f64>,
    /// Evenly spaced samples `lo:hi:count`, used when --xi is absent.
    #[arg(long, allow_hyphen_values = true)]
    xi_range: Option<String>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AcousticsArgs {
    /// Incident, middle and transmitting materials.
    #[arg(long, value_delimiter = ',', default_value = "air,plastic,water")]
    materials: Vec<String>,
    /// Terms of the partial-sum table.
    #[arg(long, default_value_t = 50)]
    terms: u32,
    /// Directory for coefficients.csv and partial_sums.csv; stdout otherwise.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GridcheckArgs {
    /// Cells per unit computational length.
    #[arg(long, default_value_t = 80)]
    n: usize,
    #[arg(long, default_value = "auto")]
    variant: String,
    #[arg(long, default_value_t = 0.01)]
    r_i: f64,
    #[arg(long, default_value_t = 0.015)]
    r_o: f64,
    #[arg(long, default_value_t = 0.04)]
    r_m: f64,
    /// Grid the full square instead of the upper half.
    #[arg(long)]
    full: bool,
    /// Relative tolerance of the pass/fail verdict.
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Also write the node/cell dump here.
    #[arg(long)]
    dump: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Riemann(a) => cmd_riemann(a),
        Command::Acoustics(a) => cmd_acoustics(a),
        Command::Gridcheck(a) => cmd_gridcheck(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn load_scenario(a: &ScenarioArgs) -> CliResult<ScenarioSpec> {
    let mut doc = if Path::new(&a.scenario).is_file() {
        let path = Path::new(&a.scenario);
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let mut v: toml::Value =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        // a manifest carries the resolved scenario in its own table
        if let Some(inner) = v.as_table_mut().and_then(|t| t.remove("scenario")) {
            inner
        } else {
            v
        }
    } else {
        ScenarioSpec::builtin(&a.scenario)?.to_toml_value()?
    };
    for o in &a.overrides {
        apply_override(&mut doc, o)?;
    }
    if let Some(c) = a.cfl {
        apply_override(&mut doc, &format!("numerics.cfl={c:?}"))?;
    }
    if let Some(t) = a.t_end {
        apply_override(&mut doc, &format!("t_end={t:?}"))?;
    }
    let mut spec = ScenarioSpec::from_toml_value(doc)?;
    if let Some(n) = a.resolution {
        let name = spec.name.clone();
        spec = apply_sweep_value(&spec, SweepParameter::Resolution, &n.to_string())?;
        spec.name = name;
    }
    spec.validate()?;
    Ok(spec)
}

#[derive(Serialize)]
struct Manifest<'a> {
    tammann_version: &'a str,
    steps: usize,
    rejected_steps: usize,
    t_final: f64,
    cells: usize,
    files: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    mapping: Option<&'a MappingInfo>,
    peaks: &'a GaugeReport,
    scenario: toml::Value,
}

fn write_manifest(dir: &Path, spec: &ScenarioSpec, out: &RunOutcome) -> CliResult<()> {
    let m = Manifest {
        tammann_version: env!("CARGO_PKG_VERSION"),
        steps: out.steps,
        rejected_steps: out.rejected_steps,
        t_final: out.t_final,
        cells: out.cells,
        files: &out.files,
        mapping: out.mapping.as_ref(),
        peaks: &out.report,
        scenario: spec.to_toml_value()?,
    };
    let text = toml::to_string(&m).map_err(|e| Error::Config(format!("manifest: {e}")))?;
    let path = dir.join("manifest.toml");
    fs::write(&path, text).map_err(io_err(&path))
}

fn print_report(r: &GaugeReport) {
    println!("scenario {}  initial peak {:.2} kPa", r.scenario, r.initial_peak_kpa);
    println!(
        "{:>6} {:>10} {:>10} {:>12} {:>14}",
        "gauge", "x_m", "y_m", "peak_kPa", "t_peak_s"
    );
    for g in &r.gauges {
        println!(
            "{:>6} {:>10.4} {:>10.4} {:>12.2} {:>14.6e}",
            g.id, g.location[0], g.location[1], g.peak_kpa, g.time_s
        );
    }
}

fn run_one(spec: &ScenarioSpec, dir: &Path) -> CliResult<RunOutcome> {
    let out = run_scenario(spec, Some(dir))?;
    write_manifest(dir, spec, &out)?;
    Ok(out)
}

fn cmd_run(a: RunArgs) -> CliResult<()> {
    let mut spec = load_scenario(&a.scenario)?;
    if let Some(c) = &a.calibrate {
        let bad = || CliError::Usage(format!("--calibrate expects ID=kPa, got `{c}`"));
        let (id, kpa) = c.split_once('=').ok_or_else(bad)?;
        let id: usize = id.trim().parse().map_err(|_| bad())?;
        let kpa: f64 = kpa.trim().parse().map_err(|_| bad())?;
        let (calibrated, runs) = calibrate_peak(&spec, id, kpa * 1000.0, 1e-4)?;
        println!(
            "calibrated initial peak {:.3} kPa after {runs} runs",
            calibrated.shock.peak_pressure / 1000.0
        );
        spec = calibrated;
    }
    let dir = a.out.unwrap_or_else(|| PathBuf::from("out").join(&spec.name));
    let out = run_one(&spec, &dir)?;
    print_report(&out.report);
    println!(
        "{} steps to t = {:e} s, output in {}",
        out.steps,
        out.t_final,
        dir.display()
    );
    Ok(())
}

fn cmd_sweep(a: SweepArgs) -> CliResult<()> {
    let param: SweepParameter = a.param.parse()?;
    let values: Vec<String> = if a.values.is_empty() && param == SweepParameter::Width {
        WIDTH_STUDY_WIDTHS.iter().map(|w| w.to_string()).collect()
    } else {
        a.values.iter().map(|v| v.trim().to_string()).collect()
    };
    if values.is_empty() || values.iter().any(String::is_empty) {
        return Err(CliError::Usage("sweep needs at least one value (--values)".into()));
    }
    let base = load_scenario(&a.scenario)?;
    let specs = values
        .iter()
        .map(|v| apply_sweep_value(&base, param, v).map(|s| (v.clone(), s)))
        .collect::<Result<Vec<_>, _>>()?;
    let root = a
        .out
        .unwrap_or_else(|| PathBuf::from("out").join(format!("{}_sweep_{}", base.name, a.param)));
    let jobs = a.jobs.max(1);
    let mut results: Vec<Option<CliResult<RunOutcome>>> = (0..specs.len()).map(|_| None).collect();
    for (chunk, slots) in specs.chunks(jobs).zip(results.chunks_mut(jobs)) {
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|(v, s)| {
                    let dir = root.join(format!("{}_{v}", a.param));
                    scope.spawn(move || run_one(s, &dir))
                })
                .collect();
            for (slot, h) in slots.iter_mut().zip(handles) {
                *slot = Some(h.join().expect("sweep worker panicked"));
            }
        });
    }
    let outcomes = results
        .into_iter()
        .map(|r| r.expect("every slot is filled"))
        .collect::<CliResult<Vec<_>>>()?;
    let mut ids: Vec<usize> = outcomes
        .iter()
        .flat_map(|o| o.report.gauges.iter().map(|g| g.id))
        .collect();
    ids.sort_unstable();
    ids.dedup();
    fs::create_dir_all(&root).map_err(io_err(&root))?;
    let path = root.join("summary.csv");
    let file = fs::File::create(&path).map_err(io_err(&path))?;
    let mut w = BufWriter::new(file);
    let write = |w: &mut BufWriter<fs::File>| -> io::Result<()> {
        write!(w, "{},initial_peak_kPa", a.param)?;
        for id in &ids {
            write!(w, ",gauge{id}_peak_kPa")?;
        }
        writeln!(w)?;
        for ((v, _), o) in specs.iter().zip(&outcomes) {
            write!(w, "{v},{:?}", o.report.initial_peak_kpa)?;
            for id in &ids {
                match o.report.peak(*id) {
                    Some(g) => write!(w, ",{:?}", g.peak_kpa)?,
                    None => write!(w, ",")?,
                }
            }
            writeln!(w)?;
        }
        w.flush()
    };
    write(&mut w).map_err(io_err(&path))?;
    print!("{:>12}", a.param);
    for id in &ids {
        print!(" {:>12}", format!("gauge{id}"));
    }
    println!();
    for ((v, _), o) in specs.iter().zip(&outcomes) {
        print!("{v:>12}");
        for id in &ids {
            match o.report.peak(*id) {
                Some(g) => print!(" {:>12.2}", g.peak_kpa),
                None => print!(" {:>12}", "-"),
            }
        }
        println!();
    }
    println!("summary in {}", path.display());
    Ok(())
}

fn parse_floats(s: &str, n: usize, what: &str) -> CliResult<Vec<f64>> {
    let v = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::Usage(format!("{what}: expected {n} comma-separated numbers, got {s:?}")))?;
    if v.len() != n {
        return Err(CliError::Usage(format!(
            "{what}: expected {n} numbers, got {}",
            v.len()
        )));
    }
    Ok(v)
}

fn parse_eos(s: &str) -> CliResult<TammannEos> {
    if s.contains(',') {
        let v = parse_floats(s, 2, "eos")?;
        Ok(TammannEos::new(v[0], v[1])?)
    } else {
        Ok(MaterialTable::default().by_name(s)?.eos)
    }
}

fn parse_state(s: &str, what: &str) -> CliResult<Prim> {
    let v = parse_floats(s, 3, what)?;
    Ok(Prim::new_1d(v[0], v[1], v[2]))
}

fn output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p).map_err(io_err(p))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn cmd_riemann(a: RiemannArgs) -> CliResult<()> {
    let left = parse_state(&a.left, "--left")?;
    let right = parse_state(&a.right, "--right")?;
    let fan = solve_star(&left, &right, &parse_eos(&a.left_eos)?, &parse_eos(&a.right_eos)?)?;
    let xi = if !a.xi.is_empty() {
        a.xi
    } else if let Some(r) = &a.xi_range {
        let parts: Vec<&str> = r.split(':').collect();
        let bad = || CliError::Usage(format!("--xi-range: expected lo:hi:count, got {r:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].parse().map_err(|_| bad())?;
        let n: usize = parts[2].parse().map_err(|_| bad())?;
        if n < 2 || !(hi > lo) {
            return Err(bad());
        }
        (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
    } else {
        return Err(CliError::Usage("give --xi or --xi-range".into()));
    };
    let path = a.out.as_deref();
    let mut w = output(path)?;
    let err = |e| CliError::Io {
        path: path.map_or("stdout".into(), |p| p.display().to_string()),
        source: e,
    };
    writeln!(w, "xi,rho,u,p").map_err(err)?;
    for x in xi {
        let s = fan.sample(x);
        writeln!(w, "{x:?},{:?},{:?},{:?}", s.rho, s.u, s.p).map_err(err)?;
    }
    w.flush().map_err(err)
}

fn write_acoustics(w: &mut dyn Write, names: &[String], z: [f64; 3]) -> io::Result<()> {
    writeln!(w, "from,to,Z_from_Pa_s_per_m,Z_to_Pa_s_per_m,T,R")?;
    let pairs = [(0, 1), (1, 0), (1, 2), (2, 1), (0, 2)];
    for (i, j) in pairs {
        let (t, r) = interface_coefficients(z[i], z[j]);
        writeln!(w, "{},{},{:?},{:?},{t:?},{r:?}", names[i], names[j], z[i], z[j])?;
    }
    Ok(())
}

fn write_partial_sums(w: &mut dyn Write, z: [f64; 3], terms: u32) -> io::Result<()> {
    let total = total_transmission(z[0], z[2]);
    writeln!(w, "N,term,partial_sum,closed_form,relative_error")?;
    for n in 1..=terms {
        let s = partial_transmission(z[0], z[1], z[2], n);
        writeln!(
            w,
            "{n},{:?},{s:?},{total:?},{:?}",
            nth_transmission(z[0], z[1], z[2], n),
            ((s - total) / total).abs()
        )?;
    }
    Ok(())
}

fn cmd_acoustics(a: AcousticsArgs) -> CliResult<()> {
    if a.materials.len() != 3 {
        return Err(CliError::Usage(format!(
            "--materials needs three names, got {}",
            a.materials.len()
        )));
    }
    if a.terms == 0 {
        return Err(CliError::Usage("--terms must be at least 1".into()));
    }
    let table = MaterialTable::default();
    let mut z = [0.0; 3];
    for (k, name) in a.materials.iter().enumerate() {
        z[k] = AcousticMedium::ambient(table.by_name(name)?).impedance();
    }
    match &a.out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
            let p = dir.join("coefficients.csv");
            let mut w = output(Some(&p))?;
            write_acoustics(&mut w, &a.materials, z)
                .and_then(|_| w.flush())
                .map_err(io_err(&p))?;
            let p = dir.join("partial_sums.csv");
            let mut w = output(Some(&p))?;
            write_partial_sums(&mut w, z, a.terms)
                .and_then(|_| w.flush())
                .map_err(io_err(&p))?;
        }
        None => {
            let mut w = output(None)?;
            let stdout = Path::new("stdout");
            write_acoustics(&mut w, &a.materials, z)
                .and_then(|_| writeln!(w))
                .and_then(|_| write_partial_sums(&mut w, z, a.terms))
                .and_then(|_| w.flush())
                .map_err(io_err(stdout))?;
        }
    }
    Ok(())
}

fn print_check(c: &GridCheck, tol: f64) {
    println!("grid {} {}x{}", c.name, c.mx, c.my);
    if let Some(v) = c.variant {
        println!("variant {v:?}");
    }
    if let Some(j) = c.printed_jump {
        println!("printed outer-circle jump {j:e} m");
    }
    println!("capacity min {:e} max {:e}", c.min_capacity, c.max_capacity);
    println!("area {:e} of bounding box {:e}", c.total_area, c.bbox_area);
    println!("max cell closure {:e}", c.max_closure);
    for (r, e) in &c.circle_error {
        println!("circle r = {r} max node deviation {e:e} m");
    }
    println!("{}", if c.passes(tol) { "PASS" } else { "FAIL" });
}

fn cmd_gridcheck(a: GridcheckArgs) -> CliResult<()> {
    let variant: MappingVariant = toml::Value::String(a.variant.clone()).try_into().map_err(|_| {
        CliError::Usage(format!(
            "unknown variant {:?}; use auto, printed or continuous",
            a.variant
        ))
    })?;
    let p = CircleParams {
        r_i: a.r_i,
        r_o: a.r_o,
        r_m: a.r_m,
    };
    let g = MappedGrid2D::circular(p, variant, a.n, !a.full)?;
    if let Some(path) = &a.dump {
        let mut w = output(Some(path))?;
        g.write_dump(&mut w).and_then(|_| w.flush()).map_err(io_err(path))?;
    }
    let c = g.check();
    print_check(&c, a.tol);
    if c.passes(a.tol) {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("tolerance {:e}", a.tol)))
    }
}
