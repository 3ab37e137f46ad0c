//! Spreading speed `c* = min_{alpha>0} -lambda(alpha)/alpha`.
//!
//! The minimizer works on any `LambdaEvaluator` (the finite-element pencil or
//! a 1-D reduction): it brackets the unique critical point of
//! `s(alpha) = -lambda(alpha)/alpha` using the exact derivative
//! `s'(alpha) = (-lambda'(alpha) alpha + lambda(alpha)) / alpha^2`, then
//! alternates secant proposals on `s'` (accepted only when `s` decreases)
//! with halved gradient steps. `lambda'` comes at no extra cost from the
//! eigenvector: `lambda'(alpha) = -2 alpha (D int U^2 + d int V^2)` for a
//! B-normalized eigenpair.

use crate::assembly::PencilForms;
use crate::coeffs::ProblemParams;
use crate::eigsolver::{ordering_for, solve_ordered, EigOptions, EigenPair};
use crate::geometry::{build_mesh, FourierShape, Mesh};
use crate::{Error, Result};
use std::io::Write;

/// `lambda(0) >= -EXTINCTION_TOL` is reported as extinction: a discrete
/// eigenvalue this close to zero is dominated by mesh error.
pub const EXTINCTION_TOL: f64 = 1e-12;

/// Anything that can produce the principal eigenvalue and its
/// alpha-derivative.
pub trait LambdaEvaluator {
    /// `(lambda(alpha), lambda'(alpha))`.
    fn lambda(&mut self, alpha: f64) -> Result<(f64, f64)>;
    /// `max(d, D)`, used for the default starting wavenumber.
    fn max_diffusivity(&self) -> f64;
}

#[derive(Debug, Clone, Copy)]
pub struct SpeedOptions {
    /// Stop when `|s'(alpha)| * alpha / s(alpha) <= tol_grad` (scale-free).
    pub tol_grad: f64,
    /// Stop when the proposed step falls below this length.
    pub tol_step: f64,
    /// Starting wavenumber; default `sqrt(-lambda(0)/max(d,D))`.
    pub alpha_init: Option<f64>,
    pub max_iters: usize,
}

impl Default for SpeedOptions {
    fn default() -> Self {
        SpeedOptions { tol_grad: 1e-8, tol_step: 1e-10, alpha_init: None, max_iters: 200 }
    }
}

/// Outcome of a speed computation.
#[derive(Debug, Clone)]
pub struct SpeedResult {
    /// Spreading speed; `0` in the extinction regime.
    pub c_star: f64,
    /// Minimizing wavenumber; `None` in the extinction regime.
    pub alpha_star: Option<f64>,
    /// Principal eigenvalue at `alpha = 0`.
    pub lambda0: f64,
    /// Principal eigenvalue at `alpha_star` (equals `lambda0` on extinction).
    pub lambda_at_star: f64,
    /// `lambda0 < -EXTINCTION_TOL`.
    pub persistent: bool,
    /// Number of eigenproblem solves.
    pub evals: usize,
    /// Visited `(alpha, s(alpha), s'(alpha))` triples.
    pub trace: Vec<(f64, f64, f64)>,
}

#[derive(Clone, Copy)]
struct Point {
    a: f64,
    s: f64,
    ds: f64,
}

fn eval_point<E: LambdaEvaluator + ?Sized>(
    ev: &mut E,
    a: f64,
    evals: &mut usize,
    trace: &mut Vec<(f64, f64, f64)>,
) -> Result<Point> {
    let (l, dl) = ev.lambda(a)?;
    *evals += 1;
    let s = -l / a;
    let ds = (-dl * a + l) / (a * a);
    trace.push((a, s, ds));
    Ok(Point { a, s, ds })
}

/// Minimizes `s(alpha) = -lambda(alpha)/alpha` over `alpha > 0`, with the
/// extinction branch when `lambda(0) >= -EXTINCTION_TOL`.
pub fn minimize_speed<E: LambdaEvaluator + ?Sized>(
    ev: &mut E,
    opts: &SpeedOptions,
) -> Result<SpeedResult> {
    let mut evals = 0usize;
    let mut trace = Vec::new();
    let (lambda0, _) = ev.lambda(0.0)?;
    evals += 1;
    if lambda0 >= -EXTINCTION_TOL {
        return Ok(SpeedResult {
            c_star: 0.0,
            alpha_star: None,
            lambda0,
            lambda_at_star: lambda0,
            persistent: false,
            evals,
            trace,
        });
    }

    let a_init = match opts.alpha_init {
        Some(a) if a.is_finite() && a > 0.0 => a,
        _ => (-lambda0 / ev.max_diffusivity()).sqrt(),
    };

    let done = |p: &Point| p.ds.abs() * p.a <= opts.tol_grad * p.s.abs();
    let finish = |best: Point, evals: usize, trace: Vec<(f64, f64, f64)>| SpeedResult {
        c_star: best.s,
        alpha_star: Some(best.a),
        lambda0,
        lambda_at_star: -best.s * best.a,
        persistent: true,
        evals,
        trace,
    };

    // bracket the critical point: s' < 0 on the left, > 0 on the right
    let p0 = eval_point(ev, a_init, &mut evals, &mut trace)?;
    if done(&p0) {
        return Ok(finish(p0, evals, trace));
    }
    let (mut left, mut right);
    if p0.ds < 0.0 {
        left = p0;
        let mut a = a_init;
        loop {
            a *= 2.0;
            let p = eval_point(ev, a, &mut evals, &mut trace)?;
            if done(&p) {
                return Ok(finish(p, evals, trace));
            }
            if p.ds > 0.0 {
                right = p;
                break;
            }
            left = p;
            if a > a_init * 2f64.powi(60) {
                return Err(Error::Bracket(format!(
                    "s'(alpha) stayed negative up to alpha = {a:.3e}"
                )));
            }
        }
    } else {
        right = p0;
        let mut a = a_init;
        loop {
            a *= 0.5;
            let p = eval_point(ev, a, &mut evals, &mut trace)?;
            if done(&p) {
                return Ok(finish(p, evals, trace));
            }
            if p.ds < 0.0 {
                left = p;
                break;
            }
            right = p;
            if a < a_init * 2f64.powi(-60) {
                return Err(Error::Bracket(format!(
                    "s'(alpha) stayed positive down to alpha = {a:.3e}"
                )));
            }
        }
    }

    let mut best = if left.s <= right.s { left } else { right };
    for _ in 0..opts.max_iters {
        if done(&best) || right.a - left.a <= opts.tol_step {
            return Ok(finish(best, evals, trace));
        }

        // secant (regula falsi) zero of s' inside the bracket
        let den = right.ds - left.ds;
        let a_sec = (left.a * right.ds - right.a * left.ds) / den;
        let mut accepted = false;
        if a_sec.is_finite() && a_sec > left.a && a_sec < right.a {
            let p = eval_point(ev, a_sec, &mut evals, &mut trace)?;
            if p.s <= best.s {
                best = p;
                accepted = true;
            }
            // the rejected point still tightens the bracket
            if p.ds < 0.0 {
                left = p;
            } else {
                right = p;
            }
        }

        if !accepted {
            // halved gradient steps from the incumbent until s decreases
            let mut h = (right.a - left.a) / (right.ds - left.ds).max(f64::MIN_POSITIVE);
            let mut improved = false;
            while h * best.ds.abs() > opts.tol_step {
                let width = right.a - left.a;
                if width <= opts.tol_step {
                    break;
                }
                let margin = 1e-3 * width;
                let a_g = (best.a - h * best.ds).clamp(left.a + margin, right.a - margin);
                if (a_g - best.a).abs() <= opts.tol_step {
                    break;
                }
                let p = eval_point(ev, a_g, &mut evals, &mut trace)?;
                if p.ds < 0.0 {
                    left = p;
                } else {
                    right = p;
                }
                if p.s <= best.s {
                    best = p;
                    improved = true;
                    break;
                }
                h *= 0.5;
            }
            if !improved {
                // step limit reached: the incumbent is the minimum to within
                // the requested resolution
                return Ok(finish(best, evals, trace));
            }
        }
    }
    Err(Error::NonConvergence(format!(
        "speed minimizer exceeded {} iterations (alpha bracket [{:.6e}, {:.6e}])",
        opts.max_iters, left.a, right.a
    )))
}

/// `lambda'(alpha)` by the eigenvector identity: for a B-normalized pair,
/// `lambda' = -2 alpha w^T M2 w` with `M2 = D M_boundary + d M_bulk`.
pub fn lambda_prime(forms: &PencilForms, alpha: f64, pair: &EigenPair) -> f64 {
    -2.0 * alpha * forms.mass2.quad_form(&pair.w, &pair.w)
}

/// Finite-element evaluator: owns the assembled pencil, reuses the ordering
/// and warm-starts the eigenvector across alpha values.
pub struct FemEvaluator {
    forms: PencilForms,
    perm: Vec<usize>,
    eig: EigOptions,
    warm: Option<Vec<f64>>,
}

impl FemEvaluator {
    pub fn new(mesh: &Mesh, params: &ProblemParams, eig: EigOptions) -> Result<Self> {
        let forms = PencilForms::assemble(mesh, params)?;
        let perm = ordering_for(&forms);
        Ok(FemEvaluator { forms, perm, eig, warm: None })
    }

    pub fn forms(&self) -> &PencilForms {
        &self.forms
    }

    /// Principal eigenpair at `alpha`, warm-started from the previous call.
    pub fn eigenpair(&mut self, alpha: f64) -> Result<EigenPair> {
        let pair = solve_ordered(&self.forms, &self.perm, alpha, &self.eig, self.warm.as_deref())?;
        self.warm = Some(pair.w.clone());
        Ok(pair)
    }
}

impl LambdaEvaluator for FemEvaluator {
    fn lambda(&mut self, alpha: f64) -> Result<(f64, f64)> {
        let pair = self.eigenpair(alpha)?;
        let dl = lambda_prime(&self.forms, alpha, &pair);
        Ok((pair.lambda, dl))
    }

    fn max_diffusivity(&self) -> f64 {
        self.forms.d_bulk().max(self.forms.d_surf())
    }
}

/// Spreading speed of the assembled problem on `mesh`.
pub fn spreading_speed(
    mesh: &Mesh,
    params: &ProblemParams,
    eig: &EigOptions,
    opts: &SpeedOptions,
) -> Result<SpeedResult> {
    let mut ev = FemEvaluator::new(mesh, params, *eig)?;
    minimize_speed(&mut ev, opts)
}

/// Sufficient persistence condition by quadrature:
/// `nu int_boundary g + mu int_bulk f > 0`.
pub fn persistence_sufficient(mesh: &Mesh, params: &ProblemParams) -> Result<bool> {
    let mut bulk = 0.0;
    for t in 0..mesh.triangles.len() {
        let [i, j, k] = mesh.triangles[t];
        let p = [mesh.vertices[i], mesh.vertices[j], mesh.vertices[k]];
        let w = mesh.tri_area(t) / 3.0;
        for (a, b) in [(0, 1), (1, 2), (2, 0)] {
            let mid = [(p[a][0] + p[b][0]) * 0.5, (p[a][1] + p[b][1]) * 0.5];
            bulk += w * params.f_at(mid)?;
        }
    }
    let mut surf = 0.0;
    for bn in &mesh.boundary {
        surf += bn.weight * params.g_at(bn.point.position)?;
    }
    Ok(params.nu * surf + params.mu * bulk > 0.0)
}

/// Parameter varied by [`sweep`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    /// Surface diffusivity `D`.
    SurfaceDiffusivity,
    /// Domain dilation: the base shape is scaled so its mean radius is the
    /// grid value, coefficients are evaluated at `y/R`, and the mesh size
    /// scales with `R` to keep the vertex count roughly constant.
    Radius,
    /// Multiplier on the exchange coefficient.
    ExchangeScale,
}

/// One grid point of a sweep.
pub struct SweepPoint {
    pub param: f64,
    pub result: Result<SpeedResult>,
}

/// Runs `spreading_speed` over a parameter grid. Points are processed in
/// contiguous chunks (one per thread), each chunk warm-starting `alpha` from
/// its previous point; per-point failures are recorded, not fatal.
pub fn sweep(
    shape: &FourierShape,
    params: &ProblemParams,
    var: SweepVar,
    values: &[f64],
    target_h: f64,
    threads: usize,
    eig: &EigOptions,
    opts: &SpeedOptions,
) -> Result<Vec<SweepPoint>> {
    params.validate()?;
    // D- and kappa-sweeps share one mesh; radius sweeps rebuild per point
    let shared_mesh = match var {
        SweepVar::Radius => None,
        _ => Some(build_mesh(shape, target_h)?),
    };

    let run_point = |value: f64, alpha_init: Option<f64>| -> Result<SpeedResult> {
        let mut p = params.clone();
        let mut point_opts = *opts;
        point_opts.alpha_init = alpha_init;
        match var {
            SweepVar::SurfaceDiffusivity => {
                p.d_surf = value;
                p.validate()?;
                spreading_speed(shared_mesh.as_ref().unwrap(), &p, eig, &point_opts)
            }
            SweepVar::ExchangeScale => {
                p.kappa_scale = value;
                p.validate()?;
                spreading_speed(shared_mesh.as_ref().unwrap(), &p, eig, &point_opts)
            }
            SweepVar::Radius => {
                let ratio = value / shape.a0();
                if !(ratio > 0.0) {
                    return Err(Error::InvalidParams(format!("radius {value} not positive")));
                }
                let scaled = shape.scaled(ratio)?;
                let mesh = build_mesh(&scaled, target_h * ratio)?;
                p.domain_scale *= ratio;
                spreading_speed(&mesh, &p, eig, &point_opts)
            }
        }
    };

    let n = values.len();
    let workers = threads.max(1).min(n.max(1));
    let chunk_len = n.div_ceil(workers.max(1)).max(1);
    let mut out: Vec<Option<SweepPoint>> = Vec::new();
    out.resize_with(n, || None);

    std::thread::scope(|scope| {
        let run_point = &run_point;
        for (chunk_idx, chunk) in out.chunks_mut(chunk_len).enumerate() {
            let offset = chunk_idx * chunk_len;
            scope.spawn(move || {
                let mut warm_alpha: Option<f64> = None;
                for (i, slot) in chunk.iter_mut().enumerate() {
                    let value = values[offset + i];
                    let result = run_point(value, warm_alpha);
                    if let Ok(r) = &result {
                        if let Some(a) = r.alpha_star {
                            warm_alpha = Some(a);
                        }
                    }
                    *slot = Some(SweepPoint { param: value, result });
                }
            });
        }
    });

    Ok(out.into_iter().map(|p| p.unwrap()).collect())
}

/// Writes the sweep CSV: `param,c_star,alpha_star,lambda0,lambda_star,evals,status`,
/// 12 significant digits, status `ok | extinct | error:<code>`.
pub fn write_sweep_csv<W: Write>(mut out: W, points: &[SweepPoint]) -> std::io::Result<()> {
    writeln!(out, "param,c_star,alpha_star,lambda0,lambda_star,evals,status")?;
    for p in points {
        match &p.result {
            Ok(r) => {
                let alpha = r.alpha_star.map(|a| format!("{a:.11e}")).unwrap_or_default();
                let status = if r.persistent { "ok" } else { "extinct" };
                writeln!(
                    out,
                    "{:.11e},{:.11e},{alpha},{:.11e},{:.11e},{},{status}",
                    p.param, r.c_star, r.lambda0, r.lambda_at_star, r.evals
                )?;
            }
            Err(e) => {
                writeln!(out, "{:.11e},,,,,,error:{}", p.param, e.code())?;
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    // closed-form test stand: lambda = -(k + c a^2) gives s = (k + c a^2)/a,
    // minimized at a* = sqrt(k/c) with s* = 2 sqrt(k c)
    struct Quadratic {
        k: f64,
        c: f64,
    }

    impl LambdaEvaluator for Quadratic {
        fn lambda(&mut self, a: f64) -> Result<(f64, f64)> {
            Ok((-(self.k + self.c * a * a), -2.0 * self.c * a))
        }
        fn max_diffusivity(&self) -> f64 {
            self.c
        }
    }

    #[test]
    fn quadratic_profile_recovers_closed_form() {
        let mut ev = Quadratic { k: 0.7, c: 2.37 };
        let r = minimize_speed(&mut ev, &SpeedOptions::default()).unwrap();
        let expect_c = 2.0 * (0.7f64 * 2.37).sqrt();
        let expect_a = (0.7f64 / 2.37).sqrt();
        assert!(r.persistent);
        assert!((r.c_star - expect_c).abs() < 1e-10 * expect_c, "c {}", r.c_star);
        assert!((r.alpha_star.unwrap() - expect_a).abs() < 1e-6 * expect_a);
        assert!((r.lambda_at_star - -(0.7 + 2.37 * expect_a * expect_a)).abs() < 1e-8);
        assert!(r.evals <= 25, "evals {}", r.evals);
        assert_eq!(r.evals, r.trace.len() + 1); // alpha = 0 is not traced
    }

    #[test]
    fn extinction_branch() {
        struct Positive;
        impl LambdaEvaluator for Positive {
            fn lambda(&mut self, a: f64) -> Result<(f64, f64)> {
                Ok((0.25 + a * a, 2.0 * a))
            }
            fn max_diffusivity(&self) -> f64 {
                1.0
            }
        }
        let r = minimize_speed(&mut Positive, &SpeedOptions::default()).unwrap();
        assert!(!r.persistent);
        assert_eq!(r.c_star, 0.0);
        assert!(r.alpha_star.is_none());
        assert_eq!(r.evals, 1);
    }

    #[test]
    fn threshold_is_sharp() {
        struct Marginal {
            l0: f64,
        }
        impl LambdaEvaluator for Marginal {
            fn lambda(&mut self, a: f64) -> Result<(f64, f64)> {
                Ok((self.l0 - a * a, -2.0 * a))
            }
            fn max_diffusivity(&self) -> f64 {
                1.0
            }
        }
        let at = minimize_speed(&mut Marginal { l0: -0.5e-12 }, &SpeedOptions::default()).unwrap();
        assert!(!at.persistent);
        let below =
            minimize_speed(&mut Marginal { l0: -1e-3 }, &SpeedOptions::default()).unwrap();
        assert!(below.persistent);
        let expect = 2.0 * (1e-3f64).sqrt();
        assert!((below.c_star - expect).abs() < 1e-8 * expect);
    }

    #[test]
    fn respects_alpha_init() {
        let mut ev = Quadratic { k: 1.0, c: 1.0 };
        let opts = SpeedOptions { alpha_init: Some(7.0), ..Default::default() };
        let r = minimize_speed(&mut ev, &opts).unwrap();
        assert!((r.c_star - 2.0).abs() < 1e-9);
        assert!((r.alpha_star.unwrap() - 1.0).abs() < 1e-5);
    }

    mod fem {
        use super::*;
        use crate::geometry::build_mesh;

        fn table_setup(h: f64) -> (Mesh, ProblemParams) {
            let mesh = build_mesh(&FourierShape::disk(1.0).unwrap(), h).unwrap();
            let params = ProblemParams::constant(1.0, 1.5, 1.0, 1.0, 1.0, 0.5, 0.0).unwrap();
            (mesh, params)
        }

        #[test]
        fn coarse_disk_speed_near_reference() {
            let (mesh, params) = table_setup(0.2);
            let r = spreading_speed(&mesh, &params, &EigOptions::default(), &Default::default())
                .unwrap();
            assert!(r.persistent);
            // coarse mesh: generous tolerance around the radial value
            assert!((r.c_star - 0.9923449724).abs() < 8e-3, "c* {}", r.c_star);
            assert!(r.lambda0 < 0.0);
            let a = r.alpha_star.unwrap();
            assert!(a > 0.3 && a < 2.0, "alpha* {a}");
        }

        #[test]
        fn lambda_prime_matches_finite_differences() {
            let (mesh, params) = table_setup(0.15);
            let mut ev = FemEvaluator::new(&mesh, &params, EigOptions::default()).unwrap();
            let alpha = 1.0;
            let (_, dl) = ev.lambda(alpha).unwrap();
            let delta = 1e-4;
            let (lp, _) = ev.lambda(alpha + delta).unwrap();
            let (lm, _) = ev.lambda(alpha - delta).unwrap();
            let fd = (lp - lm) / (2.0 * delta);
            assert!((dl - fd).abs() <= 1e-6 * fd.abs(), "kato {dl} vs fd {fd}");
        }

        #[test]
        fn lambda_prime_bound_and_zero_at_origin() {
            let (mesh, params) = table_setup(0.2);
            let mut ev = FemEvaluator::new(&mesh, &params, EigOptions::default()).unwrap();
            let (_, dl0) = ev.lambda(0.0).unwrap();
            assert_eq!(dl0, 0.0);
            for alpha in [0.5, 1.0, 2.0] {
                let (_, dl) = ev.lambda(alpha).unwrap();
                assert!(dl.abs() <= 2.0 * alpha * 1.5 + 1e-12, "bound at {alpha}: {dl}");
            }
        }

        #[test]
        fn grid_around_minimum_confirms_it() {
            let (mesh, params) = table_setup(0.25);
            let r = spreading_speed(&mesh, &params, &EigOptions::default(), &Default::default())
                .unwrap();
            let a_star = r.alpha_star.unwrap();
            let mut ev = FemEvaluator::new(&mesh, &params, EigOptions::default()).unwrap();
            let mut best = (f64::INFINITY, 0.0);
            let lo = 0.5 * a_star;
            let step = a_star / 20.0;
            for i in 0..=20 {
                let a = lo + step * i as f64;
                let (l, _) = ev.lambda(a).unwrap();
                let s = -l / a;
                if s < best.0 {
                    best = (s, a);
                }
            }
            assert!(
                (best.1 - a_star).abs() <= step + 1e-12,
                "grid min at {} vs alpha* {a_star}",
                best.1
            );
            assert!(r.c_star <= best.0 + 1e-10);
        }

        #[test]
        fn extinction_for_negative_reactions() {
            let mesh = build_mesh(&FourierShape::disk(1.0).unwrap(), 0.25).unwrap();
            let params = ProblemParams::constant(1.0, 1.5, 1.0, 1.0, 1.0, -1.0, -1.0).unwrap();
            let r = spreading_speed(&mesh, &params, &EigOptions::default(), &Default::default())
                .unwrap();
            assert!(!r.persistent);
            assert_eq!(r.c_star, 0.0);
            assert!(r.lambda0 > 0.0);
            assert!(!persistence_sufficient(&mesh, &params).unwrap());
        }

        #[test]
        fn persistence_condition_quadrature() {
            let (mesh, params) = table_setup(0.25);
            assert!(persistence_sufficient(&mesh, &params).unwrap());
        }

        #[test]
        fn kappa_sweep_is_monotone_and_csv_well_formed() {
            let shape = FourierShape::disk(1.0).unwrap();
            let params = ProblemParams::constant(1.0, 1.5, 1.0, 1.0, 1.0, 0.5, 0.0).unwrap();
            let points = sweep(
                &shape,
                &params,
                SweepVar::ExchangeScale,
                &[1.0, 2.0, 4.0],
                0.25,
                2,
                &EigOptions::default(),
                &SpeedOptions::default(),
            )
            .unwrap();
            let speeds: Vec<f64> =
                points.iter().map(|p| p.result.as_ref().unwrap().c_star).collect();
            assert!(speeds[0] >= speeds[1] - 1e-9 && speeds[1] >= speeds[2] - 1e-9,
                "kappa scaling must not increase c*: {speeds:?}");

            let mut buf = Vec::new();
            write_sweep_csv(&mut buf, &points).unwrap();
            let text = String::from_utf8(buf).unwrap();
            let mut lines = text.lines();
            assert_eq!(
                lines.next().unwrap(),
                "param,c_star,alpha_star,lambda0,lambda_star,evals,status"
            );
            for line in lines {
                assert_eq!(line.split(',').count(), 7, "row {line}");
                assert!(line.ends_with(",ok"));
            }
        }

        #[test]
        fn radial_d_sweep_nondecreasing() {
            let shape = FourierShape::disk(1.0).unwrap();
            let params = ProblemParams::constant(1.0, 1.0, 1.0, 1.0, 1.0, 0.5, 0.0).unwrap();
            let points = sweep(
                &shape,
                &params,
                SweepVar::SurfaceDiffusivity,
                &[1.0, 2.0, 3.0],
                0.25,
                1,
                &EigOptions::default(),
                &SpeedOptions::default(),
            )
            .unwrap();
            let speeds: Vec<f64> =
                points.iter().map(|p| p.result.as_ref().unwrap().c_star).collect();
            assert!(speeds[0] <= speeds[1] + 1e-6 && speeds[1] <= speeds[2] + 1e-6,
                "radial c*(D) must be nondecreasing: {speeds:?}");
        }

        #[test]
        fn radius_sweep_rescales_domain() {
            let shape = FourierShape::disk(1.0).unwrap();
            let params = ProblemParams::constant(1.0, 1.5, 1.0, 1.0, 1.0, 0.5, 0.0).unwrap();
            let points = sweep(
                &shape,
                &params,
                SweepVar::Radius,
                &[0.5, 1.0],
                0.2,
                1,
                &EigOptions::default(),
                &SpeedOptions::default(),
            )
            .unwrap();
            for p in &points {
                let r = p.result.as_ref().unwrap();
                assert!(r.persistent, "radius {} extinct", p.param);
                assert!(r.c_star > 0.5 && r.c_star < 1.5);
            }
        }
    }
}
