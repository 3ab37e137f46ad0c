//! Projected gradient optimization of the spreading speed over Fourier
//! boundaries.
//!
//! The design variable is the coefficient vector `(a0, a_1..a_M, b_1..b_M)`
//! of a star-shaped boundary. Each iteration steps along the shape gradient,
//! rescales the result back onto the constraint manifold (a dilation, which
//! is exact for both area and perimeter), and keeps the candidate only if the
//! objective strictly improves. The step length grows by 1.5 on acceptance
//! and halves on rejection, so the run is monotone by construction.
//!
//! Stationarity is measured on the constraint-tangential part of the
//! gradient and only consulted in two places: once at the starting shape
//! (an already optimal start stops at iteration 1) and when the step length
//! collapses below `tol`. A collapse near a stationary point reports
//! `Converged`; a collapse with a large residual gradient reports
//! `StepBelowTol`. Configurations whose speed grows without bound never
//! reject steps, so they exhaust `max_iters` instead of being mislabeled as
//! converged. Three consecutive steps that leave the class of valid
//! star-shaped boundaries (or produce an unusable mesh) abort the run with
//! `ShapeInvalid`.
//!
//! Candidates that fall outside the persistence region are rejected like
//! failed steps: the gradient is not defined at an extinct configuration, so
//! iterates are kept strictly inside the region where the speed is positive.

use crate::coeffs::ProblemParams;
use crate::eigsolver::EigOptions;
use crate::geometry::{build_mesh, FourierShape, Mesh, THETA_SAMPLES};
use crate::shape_grad::fourier_gradient;
use crate::speed::{spreading_speed, SpeedOptions, SpeedResult};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

/// Sense of the optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Maximize,
    Minimize,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Direction::Maximize => write!(f, "maximize"),
            Direction::Minimize => write!(f, "minimize"),
        }
    }
}

/// Geometric constraint kept exactly (by dilation) at every iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Constraint {
    None,
    Area(f64),
    Perimeter(f64),
}

impl Constraint {
    /// Scales `shape` onto the constraint manifold; identity when
    /// unconstrained.
    pub fn project(&self, shape: &FourierShape) -> Result<FourierShape> {
        match *self {
            Constraint::None => Ok(shape.clone()),
            Constraint::Area(target) => shape.project_to_area(target),
            Constraint::Perimeter(target) => shape.project_to_perimeter(target),
        }
    }

    /// Relative constraint violation of `shape`; 0 when unconstrained.
    pub fn violation(&self, shape: &FourierShape) -> f64 {
        match *self {
            Constraint::None => 0.0,
            Constraint::Area(target) => (shape.area() - target).abs() / target,
            Constraint::Perimeter(target) => (shape.perimeter() - target).abs() / target,
        }
    }

    fn validate(&self) -> Result<()> {
        let target = match *self {
            Constraint::None => return Ok(()),
            Constraint::Area(t) | Constraint::Perimeter(t) => t,
        };
        if !target.is_finite() || target <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "constraint target must be positive and finite, got {target}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Constraint::None => write!(f, "none"),
            Constraint::Area(t) => write!(f, "area={t}"),
            Constraint::Perimeter(t) => write!(f, "perimeter={t}"),
        }
    }
}

/// Why the run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimStatus {
    /// Tangential gradient below `grad_tol` (at the start or when the step
    /// collapsed at a stationary point).
    Converged,
    /// Step collapsed below `tol` away from stationarity.
    StepBelowTol,
    /// Three consecutive trial steps left the valid shape class.
    ShapeInvalid,
    /// Iteration budget exhausted.
    MaxIters,
}

impl fmt::Display for OptimStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OptimStatus::Converged => write!(f, "converged"),
            OptimStatus::StepBelowTol => write!(f, "step_below_tol"),
            OptimStatus::ShapeInvalid => write!(f, "shape_invalid"),
            OptimStatus::MaxIters => write!(f, "max_iters"),
        }
    }
}

/// Optimizer controls. `modes` is the Fourier truncation of the design
/// space; a starting shape with fewer modes is zero-padded.
#[derive(Debug, Clone)]
pub struct OptimOptions {
    pub direction: Direction,
    pub constraint: Constraint,
    pub modes: usize,
    /// Initial step length on the coefficient vector.
    pub dt0: f64,
    /// Step collapse threshold; ending the run via collapse classifies it as
    /// `Converged` or `StepBelowTol` depending on `grad_tol`.
    pub tol: f64,
    /// Stationarity threshold on the max-norm of the constraint-tangential
    /// gradient.
    pub grad_tol: f64,
    /// Budget of trial steps (the initial evaluation is not counted).
    pub max_iters: usize,
    /// Boundary resolution relative to the mean radius: the mesh for a shape
    /// with mean radius a0 is built at edge length `target_h * a0`.
    pub target_h: f64,
}

impl OptimOptions {
    pub fn new(direction: Direction, constraint: Constraint) -> Self {
        OptimOptions {
            direction,
            constraint,
            modes: 16,
            dt0: 0.1,
            tol: 1e-6,
            grad_tol: 1e-4,
            max_iters: 300,
            target_h: 0.05,
        }
    }

    fn validate(&self) -> Result<()> {
        self.constraint.validate()?;
        if !(self.dt0.is_finite() && self.dt0 > 0.0) {
            return Err(Error::InvalidParams("dt0 must be positive".into()));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(Error::InvalidParams("tol must be positive".into()));
        }
        if !(self.grad_tol.is_finite() && self.grad_tol >= 0.0) {
            return Err(Error::InvalidParams("grad_tol must be nonnegative".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParams("max_iters must be at least 1".into()));
        }
        if !(self.target_h.is_finite() && self.target_h > 0.0) {
            return Err(Error::InvalidParams("target_h must be positive".into()));
        }
        Ok(())
    }
}

/// One evaluated (or attempted) step. Trials that never produced a usable
/// shape or mesh carry NaN in the numeric fields and no shape.
#[derive(Debug, Clone)]
pub struct Trial {
    pub iter: usize,
    pub c_star: f64,
    pub alpha_star: f64,
    pub dt: f64,
    pub area: f64,
    pub perimeter: f64,
    pub accepted: bool,
    pub shape: Option<FourierShape>,
}

/// Full optimization log. `shapes` and `objectives` hold the accepted
/// iterates only (starting shape included) and are parallel; `steps` holds
/// the step length used at each trial and is parallel to `trials`.
#[derive(Debug, Clone)]
pub struct OptimRun {
    pub direction: Direction,
    pub constraint: Constraint,
    pub status: OptimStatus,
    pub shapes: Vec<FourierShape>,
    pub objectives: Vec<f64>,
    pub steps: Vec<f64>,
    pub trials: Vec<Trial>,
    /// Max-norm of the constraint-tangential gradient at the final iterate.
    pub grad_norm: f64,
}

impl OptimRun {
    /// Number of evaluations performed, counting the starting shape as
    /// iteration 1.
    pub fn iterations(&self) -> usize {
        self.trials.len()
    }

    pub fn final_shape(&self) -> &FourierShape {
        self.shapes.last().expect("run holds at least the start")
    }

    pub fn final_speed(&self) -> f64 {
        *self.objectives.last().expect("run holds at least the start")
    }
}

/// One-line run summary for logs and console output.
pub fn summary_line(run: &OptimRun) -> String {
    let shape = run.final_shape();
    format!(
        "status={} iterations={} c_star={:.9e} a0={:.6} area={:.9e} perimeter={:.9e} grad_norm={:.3e}",
        run.status,
        run.iterations(),
        run.final_speed(),
        shape.a0(),
        shape.area(),
        shape.perimeter(),
        run.grad_norm,
    )
}

struct Eval {
    mesh: Mesh,
    speed: SpeedResult,
}

/// Meshes and solves one candidate. `Ok(None)` marks a shape that cannot be
/// meshed (a validity failure of the trial, not of the solver); genuine
/// solver errors propagate.
fn evaluate(
    shape: &FourierShape,
    params: &ProblemParams,
    opts: &OptimOptions,
    alpha_hint: Option<f64>,
) -> Result<Option<Eval>> {
    let mesh = match build_mesh(shape, opts.target_h * shape.a0()) {
        Ok(m) => m,
        Err(Error::MeshQuality(_)) | Err(Error::InvalidShape { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let sopts = SpeedOptions { alpha_init: alpha_hint, ..SpeedOptions::default() };
    let speed = spreading_speed(&mesh, params, &EigOptions::default(), &sopts)?;
    Ok(Some(Eval { mesh, speed }))
}

/// Gradient of the constrained quantity with respect to the coefficient
/// vector, by periodic trapezoid quadrature: for the area the mode integrand
/// is `rho * phi_k`, for the perimeter `(rho phi_k + rho' phi_k') / w` with
/// `w = sqrt(rho^2 + rho'^2)`.
fn constraint_gradient(shape: &FourierShape, constraint: &Constraint) -> Option<Vec<f64>> {
    let want_perimeter = match constraint {
        Constraint::None => return None,
        Constraint::Area(_) => false,
        Constraint::Perimeter(_) => true,
    };
    let m = shape.modes();
    let mut normal = vec![0.0; 2 * m + 1];
    let dtheta = 2.0 * PI / THETA_SAMPLES as f64;
    for i in 0..THETA_SAMPLES {
        let theta = dtheta * i as f64;
        let (rho, d1, _) = shape.eval(theta);
        let w = (rho * rho + d1 * d1).sqrt();
        for slot in 0..2 * m + 1 {
            let (phi, dphi) = if slot == 0 {
                (1.0, 0.0)
            } else if slot <= m {
                let k = slot as f64;
                ((k * theta).cos(), -k * (k * theta).sin())
            } else {
                let k = (slot - m) as f64;
                ((k * theta).sin(), k * (k * theta).cos())
            };
            normal[slot] += if want_perimeter {
                (rho * phi + d1 * dphi) / w
            } else {
                rho * phi
            };
        }
    }
    for v in normal.iter_mut() {
        *v *= dtheta;
    }
    Some(normal)
}

/// Component of `dj` tangential to the constraint manifold at `shape`.
fn tangential(dj: &[f64], shape: &FourierShape, constraint: &Constraint) -> Vec<f64> {
    let normal = match constraint_gradient(shape, constraint) {
        None => return dj.to_vec(),
        Some(n) => n,
    };
    let gn: f64 = dj.iter().zip(&normal).map(|(g, n)| g * n).sum();
    let nn: f64 = normal.iter().map(|n| n * n).sum();
    dj.iter().zip(&normal).map(|(g, n)| g - gn / nn * n).collect()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn pad_to_modes(shape: &FourierShape, modes: usize) -> Result<FourierShape> {
    if shape.modes() > modes {
        return Err(Error::InvalidParams(format!(
            "starting shape has {} modes but the optimizer is truncated at {modes}",
            shape.modes()
        )));
    }
    let mut a = shape.cos_coeffs().to_vec();
    let mut b = shape.sin_coeffs().to_vec();
    a.resize(modes, 0.0);
    b.resize(modes, 0.0);
    FourierShape::new(shape.a0(), a, b)
}

/// Runs projected gradient ascent/descent from `shape0`. The starting shape
/// is zero-padded to `opts.modes` and projected onto the constraint before
/// the first evaluation.
pub fn optimize(
    shape0: &FourierShape,
    params: &ProblemParams,
    opts: &OptimOptions,
) -> Result<OptimRun> {
    opts.validate()?;
    let padded = pad_to_modes(shape0, opts.modes)?;
    let mut shape = opts.constraint.project(&padded)?;

    let Eval { mut mesh, speed: mut speed_cur } =
        evaluate(&shape, params, opts, None)?.ok_or_else(|| {
            Error::InvalidParams("starting shape cannot be meshed".into())
        })?;
    let mut grad = fourier_gradient(&shape, &mesh, params, &speed_cur)?;
    let mut gnorm = inf_norm(&tangential(&grad.dj, &shape, &opts.constraint));

    let mut trials = vec![Trial {
        iter: 0,
        c_star: speed_cur.c_star,
        alpha_star: speed_cur.alpha_star.unwrap_or(f64::NAN),
        dt: opts.dt0,
        area: shape.area(),
        perimeter: shape.perimeter(),
        accepted: true,
        shape: Some(shape.clone()),
    }];
    let mut steps = vec![opts.dt0];
    let mut shapes = vec![shape.clone()];
    let mut objectives = vec![speed_cur.c_star];

    let sign = match opts.direction {
        Direction::Maximize => 1.0,
        Direction::Minimize => -1.0,
    };
    let mut dt = opts.dt0;
    let mut consecutive_invalid = 0usize;

    let status = if gnorm <= opts.grad_tol {
        OptimStatus::Converged
    } else {
        loop {
            if trials.len() - 1 >= opts.max_iters {
                break OptimStatus::MaxIters;
            }
            if dt < opts.tol {
                break if gnorm <= opts.grad_tol {
                    OptimStatus::Converged
                } else {
                    OptimStatus::StepBelowTol
                };
            }
            let iter = trials.len();
            let stepped: Vec<f64> = shape
                .coeff_vector()
                .iter()
                .zip(&grad.dj)
                .map(|(v, g)| v + sign * dt * g)
                .collect();
            let candidate = FourierShape::from_coeff_vector(&stepped)
                .and_then(|s| opts.constraint.project(&s));
            let evaluated = match candidate {
                Err(_) => None,
                Ok(cand) => evaluate(&cand, params, opts, speed_cur.alpha_star)?
                    .map(|ev| (cand, ev)),
            };
            match evaluated {
                None => {
                    trials.push(Trial {
                        iter,
                        c_star: f64::NAN,
                        alpha_star: f64::NAN,
                        dt,
                        area: f64::NAN,
                        perimeter: f64::NAN,
                        accepted: false,
                        shape: None,
                    });
                    steps.push(dt);
                    consecutive_invalid += 1;
                    if consecutive_invalid >= 3 {
                        break OptimStatus::ShapeInvalid;
                    }
                    dt *= 0.5;
                }
                Some((cand, ev)) => {
                    consecutive_invalid = 0;
                    let improved = ev.speed.persistent
                        && match opts.direction {
                            Direction::Maximize => ev.speed.c_star > speed_cur.c_star,
                            Direction::Minimize => ev.speed.c_star < speed_cur.c_star,
                        };
                    trials.push(Trial {
                        iter,
                        c_star: ev.speed.c_star,
                        alpha_star: ev.speed.alpha_star.unwrap_or(f64::NAN),
                        dt,
                        area: cand.area(),
                        perimeter: cand.perimeter(),
                        accepted: improved,
                        shape: Some(cand.clone()),
                    });
                    steps.push(dt);
                    if improved {
                        shape = cand;
                        mesh = ev.mesh;
                        speed_cur = ev.speed;
                        grad = fourier_gradient(&shape, &mesh, params, &speed_cur)?;
                        gnorm = inf_norm(&tangential(&grad.dj, &shape, &opts.constraint));
                        shapes.push(shape.clone());
                        objectives.push(speed_cur.c_star);
                        dt *= 1.5;
                    } else {
                        dt *= 0.5;
                    }
                }
            }
        }
    };

    Ok(OptimRun {
        direction: opts.direction,
        constraint: opts.constraint,
        status,
        shapes,
        objectives,
        steps,
        trials,
        grad_norm: gnorm,
    })
}

/// Result of the unconstrained disk sanity run.
#[derive(Debug, Clone)]
pub struct FreeDiskCheck {
    /// Mean radius of the final iterate.
    pub r_hat: f64,
    /// Speed at the final iterate.
    pub c_hat: f64,
    pub run: OptimRun,
}

/// Unconstrained speed maximization started from a disk of radius
/// `start_radius`. Direction and constraint in `opts` are overridden; the
/// remaining controls (modes, steps, tolerances, mesh resolution) are used
/// as given.
pub fn optimize_free_disk_check(
    params: &ProblemParams,
    start_radius: f64,
    opts: &OptimOptions,
) -> Result<FreeDiskCheck> {
    let mut free = opts.clone();
    free.direction = Direction::Maximize;
    free.constraint = Constraint::None;
    let shape0 = FourierShape::disk(start_radius)?;
    let run = optimize(&shape0, params, &free)?;
    Ok(FreeDiskCheck {
        r_hat: run.final_shape().a0(),
        c_hat: run.final_speed(),
        run,
    })
}

/// Deterministic random starting shape: mean radius uniform in [0.5, 2),
/// mode-k amplitudes uniform within `0.3 a0 / k^2`. Draws are retried (still
/// deterministically) until the sampled boundary is valid.
pub fn random_shape(seed: u64, modes: usize) -> Result<FourierShape> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..32 {
        let a0 = rng.gen_range(0.5..2.0);
        let mut a = Vec::with_capacity(modes);
        let mut b = Vec::with_capacity(modes);
        for k in 1..=modes {
            let bound = 0.3 * a0 / (k * k) as f64;
            a.push(rng.gen_range(-bound..bound));
            b.push(rng.gen_range(-bound..bound));
        }
        if let Ok(shape) = FourierShape::new(a0, a, b) {
            return Ok(shape);
        }
    }
    Err(Error::InvalidParams(
        "no valid shape within 32 random draws".into(),
    ))
}

/// Writes the per-trial history as CSV. Invalid trials carry NaN fields.
pub fn write_history_csv<W: Write>(mut out: W, run: &OptimRun) -> std::io::Result<()> {
    writeln!(out, "iter,c_star,alpha_star,dt,area,perimeter,accepted")?;
    for t in &run.trials {
        writeln!(
            out,
            "{},{:.12e},{:.12e},{:.6e},{:.12e},{:.12e},{}",
            t.iter, t.c_star, t.alpha_star, t.dt, t.area, t.perimeter, t.accepted
        )?;
    }
    Ok(())
}
