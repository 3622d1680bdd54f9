use tammann_fv::grid::{CircleParams, MappedGrid2D, MappingVariant};
use tammann_fv::numerics::{NumericsConfig, Splitting2D};
use tammann_fv::solver1d::BoundaryKind;
use tammann_fv::solver2d::Solver2D;
use tammann_fv::{Material, MaterialTable, Prim, ATM};

const BC: [BoundaryKind; 4] = [
    BoundaryKind::Outflow,
    BoundaryKind::Outflow,
    BoundaryKind::Wall,
    BoundaryKind::Outflow,
];

fn air_state(p: f64) -> Prim {
    let air = Material::air();
    Prim::new_1d(air.rho_ref * (p / ATM).powf(1.0 / air.eos.gamma), 0.0, p)
}

fn run(
    grid: MappedGrid2D,
    init: impl Fn([f64; 2]) -> Prim,
    numerics: NumericsConfig,
    gauges: &[[f64; 2]],
    t: f64,
) -> Solver2D {
    let initial: Vec<Prim> = grid.centroid.iter().map(|&c| init(c)).collect();
    let mut s = Solver2D::new(grid, &MaterialTable::default(), &initial, BC, numerics).unwrap();
    for (k, &g) in gauges.iter().enumerate() {
        s.add_gauge(k + 1, g).unwrap();
    }
    s.advance_to(t).unwrap();
    s
}

/// Time at which a gauge first exceeds `level` kPa, interpolated between
/// samples.
fn arrival(series: &[(f64, f64)], level: f64) -> f64 {
    let k = series.iter().position(|s| s.1 > level).expect("wave arrives");
    let ((t0, p0), (t1, p1)) = (series[k - 1], series[k]);
    t0 + (level - p0) / (p1 - p0) * (t1 - t0)
}

#[test]
fn planar_shock_on_mapped_and_cartesian_grids() {
    let p1 = 1.5 * ATM;
    let air = Material::air();
    let (post, shock_speed) =
        tammann_fv::riemann::exact::post_shock_state(&air.at_rest(ATM), &air.eos, p1, tammann_fv::riemann::Side::Right)
            .unwrap();
    let init = |c: [f64; 2]| if c[0] < -0.02 { post } else { air.at_rest(ATM) };
    let t = 1.2e-4;
    let cart = MappedGrid2D::cartesian(-0.04, 0.04, 0.0, 0.04, 80, 40).unwrap();
    let mapped = MappedGrid2D::circular(CircleParams::default(), MappingVariant::Auto, 40, true).unwrap();
    let mid = 0.5 * (ATM + p1) / 1000.0;
    let mut speeds = Vec::new();
    for grid in [cart, mapped] {
        // one gauge per cell centroid in a band, then a least-squares fit
        // of arrival time against position
        let band: Vec<[f64; 2]> = grid
            .centroid
            .iter()
            .copied()
            .filter(|c| (-0.01..0.02).contains(&c[0]) && (0.005..0.015).contains(&c[1]))
            .collect();
        assert!(band.len() > 20);
        let s = run(grid, init, NumericsConfig::default(), &band, t);
        let pts: Vec<(f64, f64)> = s
            .gauges
            .iter()
            .map(|g| (g.location[0], arrival(&g.series, mid)))
            .collect();
        let n = pts.len() as f64;
        let (mx, mt) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
        let sxt: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - mt)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        speeds.push(sxx / sxt);
        let last = s.gauges.iter().map(|g| g.series.last().unwrap().1).fold(0.0, f64::max);
        assert!(
            (last - p1 / 1000.0).abs() < 0.02 * (p1 - ATM) / 1000.0,
            "plateau {last}"
        );
    }
    let (va, vb) = (speeds[0], speeds[1]);
    assert!((va - vb).abs() < 0.02 * va, "shock speed {va} vs {vb}");
    assert!(
        (va - shock_speed).abs() < 0.02 * shock_speed,
        "{va} vs exact {shock_speed}"
    );
}

fn pulse(c: [f64; 2]) -> Prim {
    let r2 = c[0] * c[0] + c[1] * c[1];
    air_state(ATM * (1.0 + 0.2 * (-r2 / 0.008f64.powi(2)).exp()))
}

fn ring(radius: f64) -> Vec<[f64; 2]> {
    [0.0f64, 45.0, 90.0, 135.0]
        .iter()
        .map(|a| {
            let a = a.to_radians();
            [radius * a.cos(), radius * a.sin()]
        })
        .collect()
}

fn peaks(s: &Solver2D) -> Vec<f64> {
    s.gauges.iter().map(|g| g.peak().unwrap().1 - ATM / 1000.0).collect()
}

#[test]
fn spherical_pulse_with_and_without_dimensional_splitting() {
    let grid = || MappedGrid2D::cartesian(-0.04, 0.04, 0.0, 0.04, 80, 40).unwrap();
    let gauges = ring(0.025);
    let t = 8e-5;
    let unsplit = run(grid(), pulse, NumericsConfig::default(), &gauges, t);
    let split = run(
        grid(),
        pulse,
        NumericsConfig {
            splitting: Splitting2D::Dimensional,
            ..Default::default()
        },
        &gauges,
        t,
    );
    let (pu, ps) = (peaks(&unsplit), peaks(&split));
    let spread = |p: &[f64]| {
        let hi = p.iter().cloned().fold(f64::MIN, f64::max);
        let lo = p.iter().cloned().fold(f64::MAX, f64::min);
        (hi - lo) / hi
    };
    // the transverse terms make the unsplit scheme the more isotropic one
    assert!(spread(&pu) < 0.05, "unsplit directions {pu:?}");
    assert!(spread(&pu) < spread(&ps), "{pu:?} vs {ps:?}");
    for (a, b) in pu.iter().zip(&ps) {
        assert!((a - b).abs() < 0.1 * a, "{pu:?} vs {ps:?}");
    }
    // spherical spreading: the over-pressure at 2.5 cm is well below the
    // initial 20 kPa but clearly positive
    assert!(pu.iter().all(|&p| p > 0.5 && p < 10.0), "{pu:?}");
}

#[test]
fn pulse_is_symmetric_about_the_mid_plane() {
    let grid = MappedGrid2D::circular(CircleParams::default(), MappingVariant::Auto, 24, true).unwrap();
    let s = run(grid, pulse, NumericsConfig::default(), &[], 4e-5);
    let (mx, my) = (s.grid.mx, s.grid.my);
    let mut worst = 0.0_f64;
    for j in 0..my {
        for i in 0..mx / 2 {
            let a = s.prim(i, j).unwrap();
            let b = s.prim(mx - 1 - i, j).unwrap();
            worst = worst.max((a.p - b.p).abs() / ATM).max((a.u + b.u).abs() / 343.0);
        }
    }
    assert!(worst < 1e-10, "{worst}");
}
