//! Run configuration: the TOML file schema, the plain-text shape file
//! format, and the manifest each run writes next to its outputs.
//!
//! Config schema (TOML), with `[params]`, `[coeffs]` and `[mesh]` always
//! required and the remaining sections read by the subcommands that need
//! them:
//!
//! ```toml
//! [params]
//! d = 1.0        # bulk diffusivity
//! D = 1.5        # surface diffusivity
//! mu = 1.0       # surface-to-bulk exchange weight
//! nu = 1.0       # bulk-to-surface exchange weight
//! eps = 1e-6     # optional: surface-extension regularization
//!
//! [coeffs]       # expressions in y1, y2, r (see CoeffExpr)
//! kappa = "1"
//! f_lin = "0.5"
//! g_lin = "0"
//!
//! [shape]        # inline coefficients or a shape file, not both
//! a0 = 1.0
//! a = [0.1]      # optional cos coefficients
//! b = []         # optional sin coefficients
//! # file = "start.shape"
//!
//! [mesh]
//! target_h = 0.05
//!
//! [solver]       # optional overrides, defaults shown
//! eig_tol = 1e-12
//! eig_residual_tol = 1e-9
//! eig_max_iter = 500
//! speed_tol_grad = 1e-8
//! speed_tol_step = 1e-10
//! speed_max_iters = 200
//! # alpha_init = 0.9
//!
//! [sweep]        # for the sweep subcommand
//! var = "radius"            # radius | surface_diffusivity | exchange_scale
//! values = [1.0, 2.0]       # explicit grid, or:
//! # from = 0.13
//! # to = 50.0
//! # count = 20
//! # log = true              # geometric spacing
//!
//! [optimize]     # for the optimize subcommand
//! direction = "maximize"    # maximize | minimize
//! constraint = "none"       # none | area | perimeter
//! # target = 3.14159        # required for area/perimeter
//! modes = 16
//! dt0 = 0.1
//! tol = 1e-6
//! grad_tol = 1e-4
//! max_iters = 300
//! seed = 0                  # random start when [shape] is absent
//! ```
//!
//! Shape files are plain text: first line the mode count `M`, second line
//! the mean radius `a0`, then `M` lines of `a_k b_k` pairs.

use crate::eigsolver::EigOptions;
use crate::geometry::FourierShape;
use crate::optimizer::{Constraint, Direction, OptimOptions};
use crate::speed::{SpeedOptions, SweepVar};
use crate::{coeffs::CoeffExpr, coeffs::ProblemParams, Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub params: ParamsSection,
    pub coeffs: CoeffsSection,
    #[serde(default)]
    pub shape: Option<ShapeSection>,
    pub mesh: MeshSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub optimize: Option<OptimizeSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub d: f64,
    #[serde(rename = "D")]
    pub d_surf: f64,
    pub mu: f64,
    pub nu: f64,
    #[serde(default)]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffsSection {
    pub kappa: String,
    pub f_lin: String,
    pub g_lin: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeSection {
    #[serde(default)]
    pub a0: Option<f64>,
    #[serde(default)]
    pub a: Option<Vec<f64>>,
    #[serde(default)]
    pub b: Option<Vec<f64>>,
    #[serde(default)]
    pub file: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub target_h: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default)]
    pub eig_tol: Option<f64>,
    #[serde(default)]
    pub eig_residual_tol: Option<f64>,
    #[serde(default)]
    pub eig_max_iter: Option<usize>,
    #[serde(default)]
    pub speed_tol_grad: Option<f64>,
    #[serde(default)]
    pub speed_tol_step: Option<f64>,
    #[serde(default)]
    pub speed_max_iters: Option<usize>,
    #[serde(default)]
    pub alpha_init: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub var: String,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
    #[serde(default)]
    pub from: Option<f64>,
    #[serde(default)]
    pub to: Option<f64>,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub log: Option<bool>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeSection {
    pub direction: String,
    #[serde(default)]
    pub constraint: Option<String>,
    #[serde(default)]
    pub target: Option<f64>,
    #[serde(default)]
    pub modes: Option<usize>,
    #[serde(default)]
    pub dt0: Option<f64>,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub grad_tol: Option<f64>,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl RunConfig {
    /// Parses a config file. The returned config remembers the file's parent
    /// directory so shape file references resolve relative to it.
    pub fn load(path: &Path) -> Result<(RunConfig, PathBuf)> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.check()?;
        let base = path.parent().unwrap_or_else(|| Path::new(".")).to_path_buf();
        Ok((cfg, base))
    }

    pub fn from_str(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    fn check(&self) -> Result<()> {
        if !(self.mesh.target_h > 0.0) || !self.mesh.target_h.is_finite() {
            return Err(Error::Config(format!(
                "mesh.target_h must be positive, got {}",
                self.mesh.target_h
            )));
        }
        if let Some(shape) = &self.shape {
            match (&shape.file, shape.a0) {
                (Some(_), Some(_)) => {
                    return Err(Error::Config(
                        "shape.file and inline shape.a0 are mutually exclusive".into(),
                    ))
                }
                (None, None) => {
                    return Err(Error::Config(
                        "shape section needs either a0 or file".into(),
                    ))
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Problem coefficients with expressions parsed and validated.
    pub fn problem_params(&self) -> Result<ProblemParams> {
        let kappa = CoeffExpr::parse(&self.coeffs.kappa)?;
        let f_lin = CoeffExpr::parse(&self.coeffs.f_lin)?;
        let g_lin = CoeffExpr::parse(&self.coeffs.g_lin)?;
        let p = ProblemParams::new(
            self.params.d,
            self.params.d_surf,
            self.params.mu,
            self.params.nu,
            kappa,
            f_lin,
            g_lin,
        )?;
        match self.params.eps {
            Some(eps) => p.with_eps(eps),
            None => Ok(p),
        }
    }

    /// The configured starting shape, if any. `base` is the config file's
    /// directory for resolving `shape.file`.
    pub fn shape(&self, base: &Path) -> Result<Option<FourierShape>> {
        let Some(section) = &self.shape else { return Ok(None) };
        if let Some(file) = &section.file {
            return read_shape_file(&base.join(file)).map(Some);
        }
        let a0 = section.a0.expect("check() guarantees a0 when file absent");
        let a = section.a.clone().unwrap_or_default();
        let b = section.b.clone().unwrap_or_default();
        let modes = a.len().max(b.len());
        let mut a = a;
        let mut b = b;
        a.resize(modes, 0.0);
        b.resize(modes, 0.0);
        FourierShape::new(a0, a, b).map(Some)
    }

    pub fn eig_options(&self) -> EigOptions {
        let mut eig = EigOptions::default();
        if let Some(v) = self.solver.eig_tol {
            eig.tol = v;
        }
        if let Some(v) = self.solver.eig_residual_tol {
            eig.residual_tol = v;
        }
        if let Some(v) = self.solver.eig_max_iter {
            eig.max_iter = v;
        }
        eig
    }

    pub fn speed_options(&self) -> SpeedOptions {
        let mut opts = SpeedOptions::default();
        if let Some(v) = self.solver.speed_tol_grad {
            opts.tol_grad = v;
        }
        if let Some(v) = self.solver.speed_tol_step {
            opts.tol_step = v;
        }
        if let Some(v) = self.solver.speed_max_iters {
            opts.max_iters = v;
        }
        opts.alpha_init = self.solver.alpha_init;
        opts
    }

    /// Sweep variable and resolved grid values, when the section is present.
    pub fn sweep_spec(&self) -> Result<Option<(SweepVar, Vec<f64>)>> {
        let Some(section) = &self.sweep else { return Ok(None) };
        let var = match section.var.as_str() {
            "radius" => SweepVar::Radius,
            "surface_diffusivity" => SweepVar::SurfaceDiffusivity,
            "exchange_scale" => SweepVar::ExchangeScale,
            other => {
                return Err(Error::Config(format!(
                    "sweep.var must be radius, surface_diffusivity or exchange_scale, got {other}"
                )))
            }
        };
        let values = match (&section.values, section.from, section.to, section.count) {
            (Some(values), None, None, None) => {
                if values.is_empty() {
                    return Err(Error::Config("sweep.values is empty".into()));
                }
                values.clone()
            }
            (None, Some(from), Some(to), Some(count)) => {
                if count < 2 {
                    return Err(Error::Config("sweep.count must be at least 2".into()));
                }
                let log = section.log.unwrap_or(false);
                if log && !(from > 0.0 && to > 0.0) {
                    return Err(Error::Config(
                        "log-spaced sweep needs positive endpoints".into(),
                    ));
                }
                (0..count)
                    .map(|i| {
                        let t = i as f64 / (count - 1) as f64;
                        if log {
                            (from.ln() + t * (to.ln() - from.ln())).exp()
                        } else {
                            from + t * (to - from)
                        }
                    })
                    .collect()
            }
            _ => {
                return Err(Error::Config(
                    "sweep needs either values or all of from/to/count".into(),
                ))
            }
        };
        Ok(Some((var, values)))
    }

    /// Optimizer options and the starting-shape seed, when the section is
    /// present. `target_h` comes from the mesh section.
    pub fn optim_spec(&self) -> Result<Option<(OptimOptions, u64)>> {
        let Some(section) = &self.optimize else { return Ok(None) };
        let direction = match section.direction.as_str() {
            "maximize" => Direction::Maximize,
            "minimize" => Direction::Minimize,
            other => {
                return Err(Error::Config(format!(
                    "optimize.direction must be maximize or minimize, got {other}"
                )))
            }
        };
        let constraint = match section.constraint.as_deref().unwrap_or("none") {
            "none" => {
                if section.target.is_some() {
                    return Err(Error::Config(
                        "optimize.target given without an area/perimeter constraint".into(),
                    ));
                }
                Constraint::None
            }
            kind @ ("area" | "perimeter") => {
                let target = section.target.ok_or_else(|| {
                    Error::Config(format!("optimize.target required for constraint {kind}"))
                })?;
                if kind == "area" {
                    Constraint::Area(target)
                } else {
                    Constraint::Perimeter(target)
                }
            }
            other => {
                return Err(Error::Config(format!(
                    "optimize.constraint must be none, area or perimeter, got {other}"
                )))
            }
        };
        let mut opts = OptimOptions::new(direction, constraint);
        opts.target_h = self.mesh.target_h;
        if let Some(v) = section.modes {
            opts.modes = v;
        }
        if let Some(v) = section.dt0 {
            opts.dt0 = v;
        }
        if let Some(v) = section.tol {
            opts.tol = v;
        }
        if let Some(v) = section.grad_tol {
            opts.grad_tol = v;
        }
        if let Some(v) = section.max_iters {
            opts.max_iters = v;
        }
        Ok(Some((opts, section.seed.unwrap_or(0))))
    }
}

/// Reads the plain-text shape format: `M`, then `a0`, then `M` lines of
/// `a_k b_k`.
pub fn read_shape_file(path: &Path) -> Result<FourierShape> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_shape_text(&text)
        .map_err(|msg| Error::Config(format!("{}: {msg}", path.display())))
}

fn parse_shape_text(text: &str) -> std::result::Result<FourierShape, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let modes: usize = lines
        .next()
        .ok_or("missing mode count line")?
        .trim()
        .parse()
        .map_err(|e| format!("bad mode count: {e}"))?;
    let a0: f64 = lines
        .next()
        .ok_or("missing a0 line")?
        .trim()
        .parse()
        .map_err(|e| format!("bad a0: {e}"))?;
    let mut a = Vec::with_capacity(modes);
    let mut b = Vec::with_capacity(modes);
    for k in 1..=modes {
        let line = lines.next().ok_or(format!("missing coefficient line {k}"))?;
        let mut parts = line.split_whitespace();
        let ak: f64 = parts
            .next()
            .ok_or(format!("line {k}: missing a_{k}"))?
            .parse()
            .map_err(|e| format!("line {k}: bad a_{k}: {e}"))?;
        let bk: f64 = parts
            .next()
            .ok_or(format!("line {k}: missing b_{k}"))?
            .parse()
            .map_err(|e| format!("line {k}: bad b_{k}: {e}"))?;
        if parts.next().is_some() {
            return Err(format!("line {k}: trailing fields"));
        }
        a.push(ak);
        b.push(bk);
    }
    if lines.next().is_some() {
        return Err("trailing lines after the last coefficient".into());
    }
    FourierShape::new(a0, a, b).map_err(|e| e.to_string())
}

/// Writes the plain-text shape format with full float precision.
pub fn write_shape_file<W: Write>(mut out: W, shape: &FourierShape) -> std::io::Result<()> {
    writeln!(out, "{}", shape.modes())?;
    writeln!(out, "{:.17e}", shape.a0())?;
    for (a, b) in shape.cos_coeffs().iter().zip(shape.sin_coeffs()) {
        writeln!(out, "{a:.17e} {b:.17e}")?;
    }
    Ok(())
}

/// Fully resolved run description, echoed as `manifest.toml` next to every
/// run's outputs so results stay reproducible from the artifact alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    pub params: ManifestParams,
    pub mesh: ManifestMesh,
    pub solver: ManifestSolver,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shape: Option<ManifestShape>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<ManifestSweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimize: Option<ManifestOptimize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestParams {
    pub d: f64,
    #[serde(rename = "D")]
    pub d_surf: f64,
    pub mu: f64,
    pub nu: f64,
    pub eps: f64,
    pub kappa: String,
    pub f_lin: String,
    pub g_lin: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestMesh {
    pub target_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSolver {
    pub eig_tol: f64,
    pub eig_residual_tol: f64,
    pub eig_max_iter: usize,
    pub speed_tol_grad: f64,
    pub speed_tol_step: f64,
    pub speed_max_iters: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha_init: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestShape {
    pub a0: f64,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestSweep {
    pub var: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestOptimize {
    pub direction: String,
    pub constraint: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub modes: usize,
    pub dt0: f64,
    pub tol: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
}

impl Manifest {
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(format!("manifest: {e}")))
    }

    pub fn parse(text: &str) -> Result<Manifest> {
        toml::from_str(text).map_err(|e| Error::Config(format!("manifest: {e}")))
    }
}

impl ManifestParams {
    pub fn from_config(cfg: &RunConfig, params: &ProblemParams) -> Self {
        ManifestParams {
            d: params.d_bulk,
            d_surf: params.d_surf,
            mu: params.mu,
            nu: params.nu,
            eps: params.eps,
            kappa: cfg.coeffs.kappa.clone(),
            f_lin: cfg.coeffs.f_lin.clone(),
            g_lin: cfg.coeffs.g_lin.clone(),
        }
    }
}

impl ManifestSolver {
    pub fn from_options(eig: &EigOptions, speed: &SpeedOptions) -> Self {
        ManifestSolver {
            eig_tol: eig.tol,
            eig_residual_tol: eig.residual_tol,
            eig_max_iter: eig.max_iter,
            speed_tol_grad: speed.tol_grad,
            speed_tol_step: speed.tol_step,
            speed_max_iters: speed.max_iters,
            alpha_init: speed.alpha_init,
        }
    }
}

impl ManifestShape {
    pub fn from_shape(shape: &FourierShape) -> Self {
        ManifestShape {
            a0: shape.a0(),
            a: shape.cos_coeffs().to_vec(),
            b: shape.sin_coeffs().to_vec(),
        }
    }
}
