//! Command line driver: speed runs, parameter sweeps, shape optimization,
//! oracle validation, and mesh dumps, all from one TOML config.
//!
//! Every run writes `manifest.toml` into the output directory echoing the
//! fully resolved configuration (flag overrides included), so the artifact
//! alone reproduces the run. Exit codes: 0 ok, 1 validation failures,
//! 2 config error, 3 solver error.

use bulksurf::config::{
    Manifest, ManifestMesh, ManifestOptimize, ManifestParams, ManifestShape, ManifestSolver,
    ManifestSweep, RunConfig,
};
use bulksurf::coeffs::ProblemParams;
use bulksurf::eigsolver::EigOptions;
use bulksurf::geometry::{build_mesh, FourierShape, Mesh};
use bulksurf::optimizer::{
    optimize, random_shape, summary_line, write_history_csv, Constraint, OptimOptions,
};
use bulksurf::oracles::{radial_speed, write_validation_csv, RadialProblem, ValidationRow};
use bulksurf::shape_grad::{fourier_gradient, write_gradient_csv};
use bulksurf::speed::{
    lambda_prime, spreading_speed, sweep, write_sweep_csv, FemEvaluator, SpeedOptions,
};
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Parser)]
#[command(name = "bulksurf", version, about = "Spreading speeds of bulk-surface reaction-diffusion systems in cylinders")]
struct Cli {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV, shape and manifest artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for the optimizer's random starting shape (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweeps and gradient modes.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Mesh size override (replaces mesh.target_h).
    #[arg(long)]
    h: Option<f64>,
    /// Regularization override (replaces params.eps).
    #[arg(long)]
    eps: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spreading speed of the configured shape.
    Speed,
    /// Speed over the configured parameter grid.
    Sweep,
    /// Projected gradient shape optimization.
    Optimize {
        /// Also write the final iterate's mode gradient as gradient.csv.
        #[arg(long)]
        dump_gradient: bool,
    },
    /// Bundled oracle validation suite.
    Validate,
    /// Plain-text mesh dump for external visualization.
    Mesh,
}

/// Failure paired with the exit code class it belongs to.
enum Failure {
    /// Anything wrong with the configuration or run setup (exit 2).
    Config(bulksurf::Error),
    /// Solver-stage errors (exit 3).
    Solver(bulksurf::Error),
    /// Artifact write failures (exit 3).
    Write(PathBuf, std::io::Error),
}

impl Failure {
    fn report(&self) -> (i32, String) {
        match self {
            Failure::Config(e) => (2, format!("config error: {e}")),
            Failure::Solver(e) => (3, format!("solver error: {e}")),
            Failure::Write(path, e) => (3, format!("cannot write {}: {e}", path.display())),
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(failure) => {
            let (code, msg) = failure.report();
            eprintln!("{msg}");
            code
        }
    };
    std::process::exit(code);
}

/// Inputs shared by every subcommand, resolved from config plus overrides.
struct Setup {
    cfg: RunConfig,
    base: PathBuf,
    params: ProblemParams,
    eig: EigOptions,
    speed_opts: SpeedOptions,
    target_h: f64,
    out: PathBuf,
}

fn run(cli: &Cli) -> Result<i32, Failure> {
    let (cfg, base) = RunConfig::load(&cli.config).map_err(Failure::Config)?;
    let mut params = cfg.problem_params().map_err(Failure::Config)?;
    if let Some(eps) = cli.eps {
        params = params.with_eps(eps).map_err(Failure::Config)?;
    }
    let target_h = cli.h.unwrap_or(cfg.mesh.target_h);
    if !(target_h > 0.0) || !target_h.is_finite() {
        return Err(Failure::Config(bulksurf::Error::Config(format!(
            "mesh size must be positive, got {target_h}"
        ))));
    }
    std::fs::create_dir_all(&cli.out)
        .map_err(|e| Failure::Write(cli.out.clone(), e))?;
    // gradient modes run on the global pool; sweeps take the count directly
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.max(1))
        .build_global();

    let eig = cfg.eig_options();
    let speed_opts = cfg.speed_options();
    let setup = Setup { cfg, base, params, eig, speed_opts, target_h, out: cli.out.clone() };

    match &cli.command {
        Command::Speed => cmd_speed(&setup),
        Command::Sweep => cmd_sweep(&setup, cli.threads.max(1)),
        Command::Optimize { dump_gradient } => cmd_optimize(&setup, cli, *dump_gradient),
        Command::Validate => cmd_validate(&setup),
        Command::Mesh => cmd_mesh(&setup),
    }
}

fn required_shape(setup: &Setup) -> Result<FourierShape, Failure> {
    setup
        .cfg
        .shape(&setup.base)
        .map_err(Failure::Config)?
        .ok_or_else(|| {
            Failure::Config(bulksurf::Error::Config(
                "this subcommand needs a [shape] section".into(),
            ))
        })
}

fn base_manifest(setup: &Setup, command: &str, seed: u64, threads: usize) -> Manifest {
    Manifest {
        command: command.into(),
        seed,
        threads,
        params: ManifestParams::from_config(&setup.cfg, &setup.params),
        mesh: ManifestMesh { target_h: setup.target_h },
        solver: ManifestSolver::from_options(&setup.eig, &setup.speed_opts),
        shape: None,
        sweep: None,
        optimize: None,
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::Write(path.to_path_buf(), e))
}

fn write_manifest(setup: &Setup, manifest: &Manifest) -> Result<(), Failure> {
    let text = manifest.to_toml().map_err(Failure::Config)?;
    write_file(&setup.out.join("manifest.toml"), text.as_bytes())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.11e}")).unwrap_or_default()
}

fn cmd_speed(setup: &Setup) -> Result<i32, Failure> {
    let shape = required_shape(setup)?;
    let mesh = build_mesh(&shape, setup.target_h).map_err(Failure::Solver)?;
    let result = spreading_speed(&mesh, &setup.params, &setup.eig, &setup.speed_opts)
        .map_err(Failure::Solver)?;

    println!("c_star = {:.11e}", result.c_star);
    println!("alpha_star = {}", fmt_opt(result.alpha_star));
    println!("lambda0 = {:.11e}", result.lambda0);
    println!("{}", if result.persistent { "persistent" } else { "extinct" });

    let mut csv = Vec::new();
    let _ = writeln!(csv, "c_star,alpha_star,lambda0,lambda_star,persistent,evals");
    let _ = writeln!(
        csv,
        "{:.11e},{},{:.11e},{:.11e},{},{}",
        result.c_star,
        fmt_opt(result.alpha_star),
        result.lambda0,
        result.lambda_at_star,
        result.persistent,
        result.evals
    );
    write_file(&setup.out.join("speed.csv"), &csv)?;

    let mut manifest = base_manifest(setup, "speed", 0, 1);
    manifest.shape = Some(ManifestShape::from_shape(&shape));
    write_manifest(setup, &manifest)?;
    Ok(0)
}

fn cmd_sweep(setup: &Setup, threads: usize) -> Result<i32, Failure> {
    let shape = required_shape(setup)?;
    let (var, values) = setup
        .cfg
        .sweep_spec()
        .map_err(Failure::Config)?
        .ok_or_else(|| {
            Failure::Config(bulksurf::Error::Config("sweep needs a [sweep] section".into()))
        })?;
    let points = sweep(
        &shape,
        &setup.params,
        var,
        &values,
        setup.target_h,
        threads,
        &setup.eig,
        &setup.speed_opts,
    )
    .map_err(Failure::Solver)?;

    let mut csv = Vec::new();
    write_sweep_csv(&mut csv, &points)
        .map_err(|e| Failure::Write(setup.out.join("sweep.csv"), e))?;
    write_file(&setup.out.join("sweep.csv"), &csv)?;

    let errors = points.iter().filter(|p| p.result.is_err()).count();
    println!("sweep: {} points, {} errors -> sweep.csv", points.len(), errors);

    let mut manifest = base_manifest(setup, "sweep", 0, threads);
    manifest.shape = Some(ManifestShape::from_shape(&shape));
    manifest.sweep = Some(ManifestSweep {
        var: setup.cfg.sweep.as_ref().expect("spec resolved").var.clone(),
        values,
    });
    write_manifest(setup, &manifest)?;
    Ok(0)
}

fn cmd_optimize(setup: &Setup, cli: &Cli, dump_gradient: bool) -> Result<i32, Failure> {
    let (opts, cfg_seed) = setup
        .cfg
        .optim_spec()
        .map_err(Failure::Config)?
        .ok_or_else(|| {
            Failure::Config(bulksurf::Error::Config(
                "optimize needs an [optimize] section".into(),
            ))
        })?;
    let opts = OptimOptions { target_h: setup.target_h, ..opts };
    let seed = cli.seed.unwrap_or(cfg_seed);
    let shape0 = match setup.cfg.shape(&setup.base).map_err(Failure::Config)? {
        Some(shape) => shape,
        None => random_shape(seed, opts.modes).map_err(Failure::Config)?,
    };

    let run = optimize(&shape0, &setup.params, &opts).map_err(Failure::Solver)?;

    let mut csv = Vec::new();
    write_history_csv(&mut csv, &run)
        .map_err(|e| Failure::Write(setup.out.join("history.csv"), e))?;
    write_file(&setup.out.join("history.csv"), &csv)?;

    for trial in &run.trials {
        if !trial.accepted {
            continue;
        }
        let shape = trial.shape.as_ref().expect("accepted trials carry a shape");
        let mut text = Vec::new();
        bulksurf::config::write_shape_file(&mut text, shape)
            .map_err(|e| Failure::Write(setup.out.clone(), e))?;
        write_file(&setup.out.join(format!("iter_{:04}.shape", trial.iter)), &text)?;
    }

    if dump_gradient {
        let last = run.final_shape();
        let mesh = build_mesh(last, opts.target_h * last.a0()).map_err(Failure::Solver)?;
        let speed = spreading_speed(&mesh, &setup.params, &setup.eig, &setup.speed_opts)
            .map_err(Failure::Solver)?;
        let grad =
            fourier_gradient(last, &mesh, &setup.params, &speed).map_err(Failure::Solver)?;
        let mut text = Vec::new();
        write_gradient_csv(&mut text, &grad)
            .map_err(|e| Failure::Write(setup.out.join("gradient.csv"), e))?;
        write_file(&setup.out.join("gradient.csv"), &text)?;
    }

    println!("{}", summary_line(&run));

    let (constraint, target) = match opts.constraint {
        Constraint::None => ("none", None),
        Constraint::Area(t) => ("area", Some(t)),
        Constraint::Perimeter(t) => ("perimeter", Some(t)),
    };
    let mut manifest = base_manifest(setup, "optimize", seed, cli.threads.max(1));
    manifest.shape = Some(ManifestShape::from_shape(&shape0));
    manifest.optimize = Some(ManifestOptimize {
        direction: opts.direction.to_string(),
        constraint: constraint.into(),
        target,
        modes: opts.modes,
        dt0: opts.dt0,
        tol: opts.tol,
        grad_tol: opts.grad_tol,
        max_iters: opts.max_iters,
    });
    write_manifest(setup, &manifest)?;
    Ok(0)
}

fn cmd_mesh(setup: &Setup) -> Result<i32, Failure> {
    let shape = required_shape(setup)?;
    let mesh = build_mesh(&shape, setup.target_h).map_err(Failure::Solver)?;
    let text = mesh_dump(&mesh);
    write_file(&setup.out.join("mesh.txt"), text.as_bytes())?;
    println!(
        "vertices {} triangles {} boundary {}",
        mesh.vertices.len(),
        mesh.triangles.len(),
        mesh.boundary.len()
    );
    let mut manifest = base_manifest(setup, "mesh", 0, 1);
    manifest.shape = Some(ManifestShape::from_shape(&shape));
    write_manifest(setup, &manifest)?;
    Ok(0)
}

fn mesh_dump(mesh: &Mesh) -> String {
    let mut out = String::new();
    out.push_str(&format!("vertices {}\n", mesh.vertices.len()));
    for v in &mesh.vertices {
        out.push_str(&format!("{:.17e} {:.17e}\n", v[0], v[1]));
    }
    out.push_str(&format!("triangles {}\n", mesh.triangles.len()));
    for t in &mesh.triangles {
        out.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
    }
    out.push_str(&format!("boundary {}\n", mesh.boundary.len()));
    for b in &mesh.boundary {
        out.push_str(&format!("{} {:.17e} {:.17e}\n", b.vertex, b.point.theta, b.weight));
    }
    out
}

/// Bundled quick checks against the independent oracles; returns exit 1 when
/// any row fails.
fn cmd_validate(setup: &Setup) -> Result<i32, Failure> {
    let mut rows = Vec::new();

    // unit disk reference speeds, coarse mesh
    for (d_surf, reference) in [(1.5, 0.9923449724), (3.0, 1.288082554)] {
        let params = ProblemParams::constant(1.0, d_surf, 1.0, 1.0, 1.0, 0.5, 0.0)
            .map_err(Failure::Config)?;
        let shape = FourierShape::disk(1.0).map_err(Failure::Config)?;
        let mesh = build_mesh(&shape, 0.11).map_err(Failure::Solver)?;
        let result = spreading_speed(&mesh, &params, &setup.eig, &SpeedOptions::default())
            .map_err(Failure::Solver)?;
        rows.push(ValidationRow {
            case: format!("disk_speed_D{d_surf}"),
            config: "unit disk, d=1, f'=0.5, g'=0".into(),
            oracle: reference,
            fem: result.c_star,
            tolerance: 2e-4,
        });
    }

    // radius-2 disk against the one-dimensional radial solver
    {
        let params =
            ProblemParams::constant(1.0, 3.0, 1.0, 1.0, 1.0, 0.5, 0.0).map_err(Failure::Config)?;
        let shape = FourierShape::disk(2.0).map_err(Failure::Config)?;
        let mesh = build_mesh(&shape, 0.22).map_err(Failure::Solver)?;
        let fem = spreading_speed(&mesh, &params, &setup.eig, &SpeedOptions::default())
            .map_err(Failure::Solver)?;
        let radial = RadialProblem::with_constants(0.0, 2.0, 2000, 1.0, 3.0, 1.0, 1.0, 1.0, 0.5, 0.0);
        let oracle = radial_speed(&radial, &SpeedOptions::default()).map_err(Failure::Solver)?;
        rows.push(ValidationRow {
            case: "radial_oracle_R2".into(),
            config: "disk R=2, d=1, D=3".into(),
            oracle: oracle.c_star,
            fem: fem.c_star,
            tolerance: 2e-4,
        });
    }

    // peak of the radial speed curve at the closed-form optimum
    {
        let radial = RadialProblem::with_constants(0.0, 6.0, 3000, 1.0, 3.0, 1.0, 1.0, 1.0, 0.5, 0.0);
        let peak = radial_speed(&radial, &SpeedOptions::default()).map_err(Failure::Solver)?;
        rows.push(ValidationRow {
            case: "radial_peak_R6".into(),
            config: "disk R=6, d=1, D=3".into(),
            oracle: 1.5,
            fem: peak.c_star,
            tolerance: 1e-3,
        });
    }

    // eigenvalue derivative against central finite differences
    {
        let params =
            ProblemParams::constant(1.0, 1.5, 1.0, 1.0, 1.0, 0.5, 0.0).map_err(Failure::Config)?;
        let shape = FourierShape::disk(1.0).map_err(Failure::Config)?;
        let mesh = build_mesh(&shape, 0.11).map_err(Failure::Solver)?;
        let mut ev = FemEvaluator::new(&mesh, &params, setup.eig).map_err(Failure::Solver)?;
        let alpha = 0.9;
        let pair = ev.eigenpair(alpha).map_err(Failure::Solver)?;
        let exact = lambda_prime(ev.forms(), alpha, &pair);
        let h = 1e-5;
        let hi = ev.eigenpair(alpha + h).map_err(Failure::Solver)?.lambda;
        let lo = ev.eigenpair(alpha - h).map_err(Failure::Solver)?.lambda;
        rows.push(ValidationRow {
            case: "eigenvalue_derivative".into(),
            config: "unit disk, alpha=0.9".into(),
            oracle: (hi - lo) / (2.0 * h),
            fem: exact,
            tolerance: 1e-6,
        });
    }

    // negative reactions force extinction with an exact zero speed
    {
        let params =
            ProblemParams::constant(1.0, 1.5, 1.0, 1.0, 1.0, -1.0, -1.0).map_err(Failure::Config)?;
        let shape = FourierShape::disk(1.0).map_err(Failure::Config)?;
        let mesh = build_mesh(&shape, 0.11).map_err(Failure::Solver)?;
        let result = spreading_speed(&mesh, &params, &setup.eig, &SpeedOptions::default())
            .map_err(Failure::Solver)?;
        rows.push(ValidationRow {
            case: "extinction_zero_speed".into(),
            config: "unit disk, f'=g'=-1".into(),
            oracle: 0.0,
            fem: result.c_star,
            tolerance: 1e-12,
        });
    }

    // one Fourier mode of the shape gradient against a remeshed difference
    {
        let params =
            ProblemParams::constant(1.0, 1.5, 1.0, 1.0, 1.0, 0.5, 0.0).map_err(Failure::Config)?;
        let shape = FourierShape::new(1.0, vec![0.0, 0.08], vec![0.0, 0.0])
            .map_err(Failure::Config)?;
        let h = 0.07;
        let mesh = build_mesh(&shape, h).map_err(Failure::Solver)?;
        let speed = spreading_speed(&mesh, &params, &setup.eig, &SpeedOptions::default())
            .map_err(Failure::Solver)?;
        let grad =
            fourier_gradient(&shape, &mesh, &params, &speed).map_err(Failure::Solver)?;
        let delta = 1e-3;
        let c_at = |a2: f64| -> Result<f64, Failure> {
            let s = FourierShape::new(1.0, vec![0.0, a2], vec![0.0, 0.0])
                .map_err(Failure::Config)?;
            let m = build_mesh(&s, h).map_err(Failure::Solver)?;
            Ok(spreading_speed(&m, &params, &setup.eig, &SpeedOptions::default())
                .map_err(Failure::Solver)?
                .c_star)
        };
        let fd = (c_at(0.08 + delta)? - c_at(0.08 - delta)?) / (2.0 * delta);
        rows.push(ValidationRow {
            case: "shape_gradient_cos2".into(),
            config: "perturbed disk, mode cos(2t)".into(),
            oracle: fd,
            fem: grad.dj[2],
            tolerance: 2e-2,
        });
    }

    // mesh density lands in the expected node band for h=0.11
    {
        let shape = FourierShape::disk(1.0).map_err(Failure::Config)?;
        let mesh = build_mesh(&shape, 0.11).map_err(Failure::Solver)?;
        rows.push(ValidationRow {
            case: "mesh_node_count".into(),
            config: "unit disk, h=0.11".into(),
            oracle: 975.0,
            fem: mesh.vertices.len() as f64,
            tolerance: 0.128,
        });
    }

    let mut csv = Vec::new();
    let failures = write_validation_csv(&mut csv, &rows)
        .map_err(|e| Failure::Write(setup.out.join("validate.csv"), e))?;
    write_file(&setup.out.join("validate.csv"), &csv)?;

    for row in &rows {
        println!(
            "{} {} (fem {:.6e} vs oracle {:.6e}, rel {:.2e}, tol {:.1e})",
            if row.pass() { "PASS" } else { "FAIL" },
            row.case,
            row.fem,
            row.oracle,
            row.rel_error(),
            row.tolerance
        );
    }
    println!("validate: {} cases, {} failures", rows.len(), failures);

    write_manifest(setup, &base_manifest(setup, "validate", 0, 1))?;
    Ok(if failures > 0 { 1 } else { 0 })
}
