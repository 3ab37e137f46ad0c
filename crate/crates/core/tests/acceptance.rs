//! Acceptance suite: one test per numbered criterion, each asserting the
//! pinned tolerance and printing a single summary line on success. Criteria
//! cover reference speeds on two mesh resolutions, agreement with the radial
//! solver across a radius grid, closed-form optima, thin/wide-section limits,
//! non-monotone dependence on surface diffusivity, shape and eigenvalue
//! derivatives against finite differences, solver invariants, and the three
//! optimization endpoints.

use bulksurf::coeffs::{CoeffExpr, ProblemParams};
use bulksurf::eigsolver::EigOptions;
use bulksurf::geometry::{build_mesh, FourierShape, Mesh};
use bulksurf::optimizer::{
    optimize, optimize_free_disk_check, Constraint, Direction, OptimOptions,
};
use bulksurf::oracles::{brr_speed, radial_speed, BRRProblem, RadialProblem};
use bulksurf::shape_grad::fourier_gradient;
use bulksurf::speed::{lambda_prime, spreading_speed, FemEvaluator, SpeedOptions, SpeedResult};

fn table_params(d_surf: f64) -> ProblemParams {
    ProblemParams::constant(1.0, d_surf, 1.0, 1.0, 1.0, 0.5, 0.0).unwrap()
}

fn disk_mesh(radius: f64, h: f64) -> Mesh {
    build_mesh(&FourierShape::disk(radius).unwrap(), h).unwrap()
}

fn fem(mesh: &Mesh, params: &ProblemParams) -> SpeedResult {
    spreading_speed(mesh, params, &EigOptions::default(), &SpeedOptions::default()).unwrap()
}

fn rel(value: f64, reference: f64) -> f64 {
    ((value - reference) / reference).abs()
}

/// Largest deviation of the boundary radius from 1 over a dense angle grid.
fn max_unit_disk_deviation(shape: &FourierShape) -> f64 {
    (0..2048)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / 2048.0;
            (shape.eval(theta).0 - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

fn reference_speed_check(criterion: usize, d_surf: f64, reference: f64) {
    let params = table_params(d_surf);
    let mut report = Vec::new();
    for (h, tol, lo, hi) in [(0.11, 2e-4, 850, 1100), (0.022, 2e-5, 20_000, 24_000)] {
        let mesh = disk_mesh(1.0, h);
        let nodes = mesh.vertices.len();
        assert!(
            (lo..=hi).contains(&nodes),
            "mesh size {h} gives {nodes} nodes, outside [{lo}, {hi}]"
        );
        let c = fem(&mesh, &params).c_star;
        let err = rel(c, reference);
        assert!(
            err <= tol,
            "c* = {c:.10e} vs reference {reference}: rel {err:.3e} > {tol:.0e} at {nodes} nodes"
        );
        report.push(format!("{nodes} nodes rel {err:.2e} (tol {tol:.0e})"));
    }
    println!("criterion {criterion} PASS: D={d_surf} unit disk, {}", report.join(", "));
}

#[test]
fn c01_unit_disk_speed_matches_reference_low_d() {
    reference_speed_check(1, 1.5, 0.9923449724);
}

#[test]
fn c02_unit_disk_speed_matches_reference_high_d() {
    reference_speed_check(2, 3.0, 1.288082554);
}

#[test]
fn c03_disk_radii_match_radial_solver() {
    let radii: Vec<f64> =
        (0..20).map(|i| 0.13 * (50.0f64 / 0.13).powf(i as f64 / 19.0)).collect();
    let mut worst = (0.0f64, 0.0, 0.0);
    for d_surf in [1.5, 3.0] {
        let params = table_params(d_surf);
        for &radius in &radii {
            // mesh size proportional to the radius keeps roughly 1000 nodes
            let mesh = disk_mesh(radius, 0.1 * radius);
            let c_fem = fem(&mesh, &params).c_star;
            let radial = RadialProblem::from_params(&params, 0.0, radius, 2000);
            let oracle = radial_speed(&radial, &SpeedOptions::default()).unwrap().c_star;
            let err = rel(c_fem, oracle);
            assert!(
                err <= 2e-4,
                "R={radius}, D={d_surf}: fem {c_fem:.8e} vs radial {oracle:.8e}, rel {err:.3e}"
            );
            if err > worst.0 {
                worst = (err, radius, d_surf);
            }
        }
    }
    println!(
        "criterion 3 PASS: 20 radii x 2 parameter sets, worst rel {:.2e} at R={:.3}, D={} (tol 2e-4)",
        worst.0, worst.1, worst.2
    );
}

#[test]
fn c04_radial_speed_peaks_at_radius_six() {
    let c_at = |radius: f64| {
        let p = RadialProblem::with_constants(0.0, radius, 3000, 1.0, 3.0, 1.0, 1.0, 1.0, 0.5, 0.0);
        radial_speed(&p, &SpeedOptions::default()).unwrap().c_star
    };
    // golden-section maximization over a bracket containing the peak
    let (mut lo, mut hi) = (1.0f64, 20.0f64);
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut x1, mut x2) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
    let (mut f1, mut f2) = (c_at(x1), c_at(x2));
    for _ in 0..60 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = c_at(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = c_at(x1);
        }
    }
    let r_hat = 0.5 * (lo + hi);
    let c_hat = c_at(r_hat);
    assert!((r_hat - 6.0).abs() <= 0.05, "peak radius {r_hat}");
    assert!((c_hat - 1.5).abs() <= 1e-3, "peak speed {c_hat}");
    println!("criterion 4 PASS: radial peak at R={r_hat:.4} (6 +- 0.05), c={c_hat:.6} (1.5 +- 1e-3)");
}

#[test]
fn c05_thin_and_wide_section_limits() {
    // thin tube with surface growth: speed approaches 2 sqrt(D <g'>)
    let grow = ProblemParams::constant(1.0, 1.5, 1.0, 1.0, 1.0, 0.5, 0.5).unwrap();
    let c_small = fem(&disk_mesh(0.05, 0.1 * 0.05), &grow).c_star;
    let limit = 2.0 * (1.5f64 * 0.5).sqrt();
    let err_small = rel(c_small, limit);
    assert!(err_small <= 0.05, "c(R=0.05) = {c_small:.6e} vs {limit:.6e}, rel {err_small:.3e}");

    // wide section: speed approaches the half-space value
    let params = table_params(3.0);
    let radial = RadialProblem::from_params(&params, 0.0, 50.0, 20_000);
    let c_wide = radial_speed(&radial, &SpeedOptions::default()).unwrap().c_star;
    let brr = brr_speed(&BRRProblem {
        d_bulk: 1.0,
        d_surf: 3.0,
        mu: 1.0,
        nu: 1.0,
        f_prime: 0.5,
        g_prime: 0.0,
        l: 10.0,
        n: 2000,
    })
    .unwrap();
    let err_wide = rel(c_wide, brr.c_star);
    assert!(err_wide <= 0.02, "c(R=50) = {c_wide:.6e} vs half-space {:.6e}", brr.c_star);

    // negative surface average extinguishes thin tubes
    let decay = ProblemParams::constant(1.0, 1.5, 1.0, 1.0, 1.0, 0.5, -0.25).unwrap();
    let thin = fem(&disk_mesh(0.05, 0.1 * 0.05), &decay);
    assert!(!thin.persistent && thin.c_star == 0.0, "expected extinction, got {thin:?}");

    println!(
        "criterion 5 PASS: thin-tube rel {err_small:.2e} (tol 5e-2), wide-section rel {err_wide:.2e} (tol 2e-2), negative growth extinct"
    );
}

fn skew_params(d_surf: f64) -> ProblemParams {
    ProblemParams::new(
        1.0,
        d_surf,
        1.0,
        1.0,
        CoeffExpr::parse("1").unwrap(),
        CoeffExpr::parse("0.8").unwrap(),
        CoeffExpr::parse("y1-0.8").unwrap(),
    )
    .unwrap()
}

#[test]
fn c06_speed_non_monotone_in_surface_diffusivity() {
    // speed along a surface-diffusivity grid with an asymmetric surface rate
    let mesh = disk_mesh(1.0, 0.11);
    let grid = [
        0.1, 0.2, 0.4, 0.7, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 15.0, 25.0, 40.0, 60.0,
        100.0,
    ];
    let speeds: Vec<f64> = grid.iter().map(|&dd| fem(&mesh, &skew_params(dd)).c_star).collect();
    let mut drop = (0.0f64, 0.0, 0.0);
    for i in 0..speeds.len() {
        for j in i + 1..speeds.len() {
            if speeds[i] - speeds[j] > drop.0 {
                drop = (speeds[i] - speeds[j], grid[i], grid[j]);
            }
        }
    }
    assert!(
        drop.0 > 1e-3,
        "no decrease along the grid: speeds {speeds:?}"
    );

    // at very large diffusivity the margin to extinction matches the
    // reference magnitude 1.66e-3 (reported there with the opposite sign
    // convention for the eigenvalue)
    let fine = disk_mesh(1.0, 0.075);
    let at_large = fem(&fine, &skew_params(1e4));
    let margin = -at_large.lambda0;
    assert!(at_large.persistent, "expected persistence at D=1e4");
    assert!(
        (1.0e-3..=2.5e-3).contains(&margin),
        "eigenvalue margin {margin:.3e} outside [1.0e-3, 2.5e-3]"
    );

    println!(
        "criterion 6 PASS: c* drops by {:.3e} from D={} to D={} (>1e-3); |lambda(0)| at D=1e4 = {margin:.3e} in [1.0e-3, 2.5e-3]",
        drop.0, drop.1, drop.2
    );
}

#[test]
fn c07_shape_gradient_matches_remeshed_differences() {
    let shape = FourierShape::new(
        1.0,
        vec![0.06, -0.04, 0.03, 0.02, -0.02],
        vec![-0.03, 0.05, -0.02, 0.01, 0.02],
    )
    .unwrap();
    let heterogeneous = ProblemParams::new(
        1.0,
        1.5,
        1.0,
        1.0,
        CoeffExpr::parse("1").unwrap(),
        CoeffExpr::parse("1+exp(-r^2)").unwrap(),
        CoeffExpr::parse("0").unwrap(),
    )
    .unwrap();
    let h = 0.05;
    let delta = 1e-3;
    let eig = EigOptions::default();
    let mut worst = 0.0f64;
    for (label, params) in [("uniform", table_params(1.5)), ("radial bulk rate", heterogeneous)] {
        let mesh = build_mesh(&shape, h).unwrap();
        let speed = spreading_speed(&mesh, &params, &eig, &SpeedOptions::default()).unwrap();
        let grad = fourier_gradient(&shape, &mesh, &params, &speed).unwrap();
        let scale = grad.dj.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut fd_opts = SpeedOptions::default();
        fd_opts.alpha_init = speed.alpha_star;
        let c_at = |v: &[f64]| {
            let s = FourierShape::from_coeff_vector(v).unwrap();
            let m = build_mesh(&s, h).unwrap();
            spreading_speed(&m, &params, &eig, &fd_opts).unwrap().c_star
        };
        for slot in 0..grad.dj.len() {
            let mut plus = shape.coeff_vector();
            plus[slot] += delta;
            let mut minus = shape.coeff_vector();
            minus[slot] -= delta;
            let fd = (c_at(&plus) - c_at(&minus)) / (2.0 * delta);
            let err = (grad.dj[slot] - fd).abs() / fd.abs().max(scale);
            assert!(
                err <= 1e-2,
                "{label}, coefficient {slot}: gradient {:.6e} vs difference {fd:.6e}, rel {err:.3e}",
                grad.dj[slot]
            );
            worst = worst.max(err);
        }
    }
    println!(
        "criterion 7 PASS: 11 modes x 2 coefficient sets at h=0.05, worst rel {worst:.2e} (tol 1e-2)"
    );
}

#[test]
fn c08_eigenvalue_slope_matches_differences() {
    let params = table_params(1.5);
    let mesh = disk_mesh(1.0, 0.11);
    let mut ev = FemEvaluator::new(&mesh, &params, EigOptions::default()).unwrap();
    let step = 1e-5;
    let mut worst = 0.0f64;
    for alpha in [0.5, 0.9, 1.4] {
        let pair = ev.eigenpair(alpha).unwrap();
        let exact = lambda_prime(ev.forms(), alpha, &pair);
        let hi = ev.eigenpair(alpha + step).unwrap().lambda;
        let lo = ev.eigenpair(alpha - step).unwrap().lambda;
        let fd = (hi - lo) / (2.0 * step);
        let err = rel(exact, fd);
        assert!(err <= 1e-6, "alpha {alpha}: slope {exact:.10e} vs difference {fd:.10e}");
        worst = worst.max(err);
    }
    println!("criterion 8 PASS: eigenvalue slope at 3 alphas, worst rel {worst:.2e} (tol 1e-6)");
}

#[test]
fn c09_solver_invariants() {
    let params = table_params(1.5);
    let mesh = disk_mesh(1.0, 0.11);
    let mut ev = FemEvaluator::new(&mesh, &params, EigOptions::default()).unwrap();

    // concavity of the eigenvalue along an alpha grid
    let alphas: Vec<f64> = (1..=13).map(|i| 0.2 * i as f64).collect();
    let lambdas: Vec<f64> = alphas.iter().map(|&a| ev.eigenpair(a).unwrap().lambda).collect();
    for i in 1..lambdas.len() - 1 {
        let second = lambdas[i - 1] + lambdas[i + 1] - 2.0 * lambdas[i];
        assert!(second <= 1e-8, "eigenvalue not concave at alpha={}: {second:.3e}", alphas[i]);
    }

    // doubling the exchange coefficient slows invasion
    let c_base = fem(&mesh, &params).c_star;
    let doubled = ProblemParams::constant(1.0, 1.5, 1.0, 1.0, 2.0, 0.5, 0.0).unwrap();
    let c_doubled = fem(&mesh, &doubled).c_star;
    assert!(
        c_doubled <= c_base + 1e-9,
        "doubling the exchange raised the speed: {c_base:.8e} -> {c_doubled:.8e}"
    );

    // radial configurations are monotone in the surface diffusivity
    let d_grid = [1.0, 1.5, 2.0, 3.0, 5.0];
    let radial: Vec<f64> = d_grid
        .iter()
        .map(|&dd| {
            let p = RadialProblem::with_constants(0.0, 1.0, 2000, 1.0, dd, 1.0, 1.0, 1.0, 0.5, 0.0);
            radial_speed(&p, &SpeedOptions::default()).unwrap().c_star
        })
        .collect();
    for i in 1..radial.len() {
        assert!(
            radial[i] >= radial[i - 1] - 1e-6 * (1.0 + radial[i - 1]),
            "radial speed decreased from D={} to D={}",
            d_grid[i - 1],
            d_grid[i]
        );
    }

    // c* / sqrt(D) settles at large D
    let ratio_at = |dd: f64| {
        let p = ProblemParams::constant(1.0, dd, 1.0, 1.0, 1.0, 0.5, 0.0).unwrap();
        fem(&mesh, &p).c_star / dd.sqrt()
    };
    let (r100, r400) = (ratio_at(100.0), ratio_at(400.0));
    assert!(
        (r400 - r100).abs() <= 0.25 * r100,
        "c*/sqrt(D) drifts: {r100:.4e} at D=100 vs {r400:.4e} at D=400"
    );

    // principal pairs are positive and satisfy the Rayleigh identity
    for alpha in [0.4, 0.9, 1.6] {
        let pair = ev.eigenpair(alpha).unwrap();
        let max = pair.w.iter().fold(0.0f64, |m, v| m.max(*v));
        let min = pair.w.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        assert!(max > 0.0 && min >= -1e-6 * max, "eigenvector sign dip {min:.3e} vs {max:.3e}");
        let a = ev.forms().matrix_a(alpha);
        let quotient =
            a.quad_form(&pair.w, &pair.w) / ev.forms().b.quad_form(&pair.w, &pair.w);
        assert!(
            (quotient - pair.lambda).abs() <= 1e-9 * (1.0 + pair.lambda.abs()),
            "Rayleigh quotient {quotient:.12e} vs eigenvalue {:.12e}",
            pair.lambda
        );
    }

    // parser agrees with hand-computed values
    let cases: [(&str, [f64; 2], f64); 16] = [
        ("2^-2", [0.0, 0.0], 0.25),
        ("-2^2", [0.0, 0.0], -4.0),
        ("2^3^2", [0.0, 0.0], 512.0),
        ("1-2-3", [0.0, 0.0], -4.0),
        ("4/2/2", [0.0, 0.0], 1.0),
        ("2*3+4*5", [0.0, 0.0], 26.0),
        ("min(1+2, 2^2)", [0.0, 0.0], 3.0),
        ("max(-1, -2)", [0.0, 0.0], -1.0),
        ("cos(0)+sin(0)", [0.0, 0.0], 1.0),
        ("exp(0)*7", [0.0, 0.0], 7.0),
        ("tanh(0)", [0.0, 0.0], 0.0),
        ("abs(-3.5)", [0.0, 0.0], 3.5),
        ("1e-3*1000", [0.0, 0.0], 1.0),
        ("y1*y2", [2.0, 3.0], 6.0),
        ("sqrt(r^2)", [3.0, 4.0], 5.0),
        ("(1+2)*3", [0.0, 0.0], 9.0),
    ];
    for (src, y, expected) in cases {
        let value = CoeffExpr::parse(src).unwrap().eval(y).unwrap();
        assert!(
            (value - expected).abs() <= 1e-12 * (1.0 + expected.abs()),
            "`{src}` at {y:?}: {value} vs {expected}"
        );
    }

    println!(
        "criterion 9 PASS: concavity, exchange doubling ({c_base:.4e} -> {c_doubled:.4e}), radial D-monotonicity, c*/sqrt(D) ratio {r100:.3e} vs {r400:.3e}, positivity/Rayleigh, parser corpus"
    );
}

/// Origin-centered ellipse-like start: eccentricity `ecc` at orientation
/// `angle`, expanded to second order. Centered starts keep the optimization
/// out of the translation gauge direction (translating a shape changes
/// neither its speed nor its area, so mode-1 content can never be removed
/// by the gradient flow; endpoint deviation is measured about the origin).
fn ellipse_start(ecc: f64, angle: f64) -> FourierShape {
    let mut a = vec![0.0; 4];
    let mut b = vec![0.0; 4];
    a[1] = ecc * (2.0 * angle).cos();
    b[1] = ecc * (2.0 * angle).sin();
    a[3] = 0.125 * ecc * ecc * (4.0 * angle).cos();
    b[3] = 0.125 * ecc * ecc * (4.0 * angle).sin();
    FourierShape::new(1.0, a, b).unwrap()
}

#[test]
fn c10_optimization_endpoints() {
    // fixed-area maximization ends at the unit disk
    let mut opts = OptimOptions::new(Direction::Maximize, Constraint::Area(std::f64::consts::PI));
    opts.modes = 16;
    opts.dt0 = 0.25;
    opts.max_iters = 250;
    opts.target_h = 0.07;
    let run_max = optimize(&ellipse_start(0.16, 0.5), &table_params(1.5), &opts).unwrap();
    let dev_max = max_unit_disk_deviation(run_max.final_shape());
    assert!(dev_max <= 0.02, "area-constrained maximum deviates by {dev_max:.4} ({run_max:?})");

    // unconstrained growth stalls at the optimal disk radius
    let mut free = OptimOptions::new(Direction::Maximize, Constraint::None);
    free.modes = 0;
    free.dt0 = 0.5;
    free.max_iters = 150;
    free.target_h = 0.07;
    let check = optimize_free_disk_check(&table_params(3.0), 2.0, &free).unwrap();
    assert!((check.r_hat - 6.0).abs() <= 0.1, "free radius {:.4}", check.r_hat);
    assert!((check.c_hat - 1.5).abs() <= 0.005, "free speed {:.6}", check.c_hat);

    // with a faster surface rate the disk minimizes instead
    let mut min_opts =
        OptimOptions::new(Direction::Minimize, Constraint::Area(std::f64::consts::PI));
    min_opts.modes = 16;
    min_opts.dt0 = 0.25;
    min_opts.max_iters = 250;
    min_opts.target_h = 0.07;
    let surface_driven = ProblemParams::constant(1.0, 1.5, 1.0, 1.0, 1.0, 1.0, 1.5).unwrap();
    let run_min = optimize(&ellipse_start(0.18, 1.2), &surface_driven, &min_opts).unwrap();
    let dev_min = max_unit_disk_deviation(run_min.final_shape());
    assert!(dev_min <= 0.02, "area-constrained minimum deviates by {dev_min:.4}");

    println!(
        "criterion 10 PASS: constrained max dev {dev_max:.3e}, free run R={:.3} c={:.5}, constrained min dev {dev_min:.3e} (tols 0.02 / 0.1, 0.005 / 0.02)",
        check.r_hat, check.c_hat
    );
}
