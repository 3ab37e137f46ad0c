//! Independent low-dimensional reference solvers and closed-form speeds.
//!
//! Three kinds of ground truth live here, all deliberately disjoint from the
//! 2-D finite-element path so they can certify it:
//!
//! * [`radial_speed`]: for disks and annuli with radial data the principal
//!   eigenfunction is radial, so the cross-sectional eigenproblem collapses to
//!   a second-order ODE in the radius coupled to one scalar per boundary
//!   circle.  We discretize it with central finite differences, compute the
//!   smallest eigenvalue by Sturm bisection, and minimize `-lambda/alpha` with
//!   the same hybrid iteration as the 2-D solver, feeding it the exact
//!   discrete derivative.
//! * [`brr_speed`]: the half-space limit problem on a strip of height `L`
//!   (bulk interval with one exchange scalar at the surface end, Dirichlet at
//!   the far end).  `L` is doubled until the speed settles.
//! * [`closed_forms`]: explicit formulas for limiting speeds, diffusion
//!   thresholds, and the radius-monotonicity regime diagram.
//!
//! The tridiagonal core never forms a dense matrix: eigenvalue counts come
//! from the signs of the LDL^T pivots of the shifted matrix (Sturm sequence),
//! which stay valid for our slightly unsymmetric rows because every pair of
//! adjacent couplings has a positive product, making the matrix diagonally
//! similar to a symmetric one.

use crate::coeffs::ProblemParams;
use crate::speed::{minimize_speed, LambdaEvaluator, SpeedOptions, SpeedResult};
use crate::{Error, Result};
use std::io::Write;

/// Radial coefficient profile: a function of the radius alone.
pub type RadialProfile = Box<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// Disk (`r_inner == 0`) or annulus cross-section with radial coefficients.
///
/// The discrete unknowns are `n` bulk values on an equispaced radial grid
/// plus one exchange scalar per boundary circle (one for a disk, two for an
/// annulus).
pub struct RadialProblem {
    pub r_inner: f64,
    pub r_outer: f64,
    /// Number of radial bulk nodes, endpoints included.
    pub n: usize,
    pub d_bulk: f64,
    pub d_surf: f64,
    pub mu: f64,
    pub nu: f64,
    pub kappa: RadialProfile,
    pub f: RadialProfile,
    pub g: RadialProfile,
}

impl RadialProblem {
    /// Problem with constant exchange rate and linear-growth slopes.
    #[allow(clippy::too_many_arguments)]
    pub fn with_constants(
        r_inner: f64,
        r_outer: f64,
        n: usize,
        d_bulk: f64,
        d_surf: f64,
        mu: f64,
        nu: f64,
        kappa: f64,
        f_slope: f64,
        g_slope: f64,
    ) -> Self {
        RadialProblem {
            r_inner,
            r_outer,
            n,
            d_bulk,
            d_surf,
            mu,
            nu,
            kappa: Box::new(move |_| Ok(kappa)),
            f: Box::new(move |_| Ok(f_slope)),
            g: Box::new(move |_| Ok(g_slope)),
        }
    }

    /// Sample a 2-D parameter set along the positive x axis.  Only valid when
    /// the coefficient expressions are radially symmetric; that is the
    /// caller's contract, not something we can check cheaply.
    pub fn from_params(params: &ProblemParams, r_inner: f64, r_outer: f64, n: usize) -> Self {
        let (pk, pf, pg) = (params.clone(), params.clone(), params.clone());
        RadialProblem {
            r_inner,
            r_outer,
            n,
            d_bulk: params.d_bulk,
            d_surf: params.d_surf,
            mu: params.mu,
            nu: params.nu,
            kappa: Box::new(move |r| pk.kappa_at([r, 0.0])),
            f: Box::new(move |r| pf.f_at([r, 0.0])),
            g: Box::new(move |r| pg.g_at([r, 0.0])),
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("r_inner", self.r_inner),
            ("r_outer", self.r_outer),
            ("d_bulk", self.d_bulk),
            ("d_surf", self.d_surf),
            ("mu", self.mu),
            ("nu", self.nu),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParams(format!("{name} must be finite, got {v}")));
            }
        }
        if self.r_inner < 0.0 || self.r_outer <= self.r_inner {
            return Err(Error::InvalidParams(format!(
                "need 0 <= r_inner < r_outer, got [{}, {}]",
                self.r_inner, self.r_outer
            )));
        }
        for (name, v) in [
            ("d_bulk", self.d_bulk),
            ("d_surf", self.d_surf),
            ("mu", self.mu),
            ("nu", self.nu),
        ] {
            if v <= 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        if self.n < 16 {
            return Err(Error::InvalidParams(format!("need n >= 16 radial nodes, got {}", self.n)));
        }
        let h = (self.r_outer - self.r_inner) / (self.n - 1) as f64;
        if self.r_inner > 0.0 && h >= 1.96 * self.r_inner {
            return Err(Error::InvalidParams(format!(
                "grid step {h:.3e} too coarse for inner radius {:.3e}; increase n",
                self.r_inner
            )));
        }
        Ok(())
    }
}

/// Spreading speed of a radial problem.
///
/// Builds the tridiagonal reduction once and runs the shared speed minimizer
/// on it; the derivative of the eigenvalue is exact for the discrete problem
/// (see [`Reduced1D::kato_quotient`]).
pub fn radial_speed(p: &RadialProblem, opts: &SpeedOptions) -> Result<SpeedResult> {
    let mut ev = RadialEvaluator::new(p)?;
    minimize_speed(&mut ev, opts)
}

/// Half-space limit problem truncated to a strip of height `l`.
///
/// Bulk interval `(0, l)` with the exchange scalar at 0 and a homogeneous
/// Dirichlet condition at `l`; all coefficients constant, `kappa = 1`.
#[derive(Debug, Clone)]
pub struct BRRProblem {
    pub d_bulk: f64,
    pub d_surf: f64,
    pub mu: f64,
    pub nu: f64,
    pub f_prime: f64,
    pub g_prime: f64,
    /// Initial truncation length; doubled until the speed settles.
    pub l: f64,
    /// Initial bulk grid size; doubled with `l` so the step stays fixed.
    pub n: usize,
}

/// Outcome of the truncation-doubling run.
#[derive(Debug, Clone, Copy)]
pub struct BrrResult {
    pub c_star: f64,
    pub alpha_star: f64,
    /// Truncation length at which the doubling stopped.
    pub l_final: f64,
    /// Number of doublings performed.
    pub doublings: usize,
    /// Total eigenvalue evaluations across all levels.
    pub evals: usize,
}

/// Relative change of `c*` under one doubling below which we stop.
const BRR_STOP_REL: f64 = 1e-8;
/// Doubling budget before reporting non-convergence.
const BRR_MAX_DOUBLINGS: usize = 20;
/// Grid-size ceiling; beyond this the run cannot finish in reasonable memory.
const BRR_MAX_N: usize = 1 << 24;

/// Spreading speed of the truncated half-space problem, with the truncation
/// length doubled until `c*` changes by less than `1e-8` relative.
pub fn brr_speed(p: &BRRProblem) -> Result<BrrResult> {
    for (name, v) in [
        ("d_bulk", p.d_bulk),
        ("d_surf", p.d_surf),
        ("mu", p.mu),
        ("nu", p.nu),
        ("l", p.l),
    ] {
        if !v.is_finite() || v <= 0.0 {
            return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
        }
    }
    if !p.f_prime.is_finite() || p.f_prime <= 0.0 {
        return Err(Error::InvalidParams(format!(
            "f_prime must be positive, got {}",
            p.f_prime
        )));
    }
    if !p.g_prime.is_finite() {
        return Err(Error::InvalidParams("g_prime must be finite".into()));
    }
    if p.n < 32 {
        return Err(Error::InvalidParams(format!("need n >= 32 strip nodes, got {}", p.n)));
    }

    let mut l = p.l;
    let mut n = p.n;
    let mut prev: Option<f64> = None;
    // Minimizer location of the untruncated bulk-only speed; a good seed.
    let mut seed = (p.f_prime / p.d_bulk).sqrt();
    let mut evals = 0usize;
    for doublings in 0..=BRR_MAX_DOUBLINGS {
        if n > BRR_MAX_N {
            return Err(Error::NonConvergence(format!(
                "strip speed still moving at grid size {n}; last c* change {:.3e}",
                prev.unwrap_or(f64::NAN)
            )));
        }
        let red = build_strip(p, l, n);
        let mut sf = SpeedFn1D::new(&red);
        let (alpha, c) = min_speed_1d(&mut sf, seed)?;
        evals += sf.evals;
        if let Some(pc) = prev {
            if (c - pc).abs() <= BRR_STOP_REL * c.abs().max(pc.abs()) {
                return Ok(BrrResult {
                    c_star: c,
                    alpha_star: alpha,
                    l_final: l,
                    doublings,
                    evals,
                });
            }
        }
        prev = Some(c);
        seed = alpha;
        l *= 2.0;
        n *= 2;
    }
    Err(Error::NonConvergence(format!(
        "strip speed did not settle within {BRR_MAX_DOUBLINGS} truncation doublings"
    )))
}

/// Radius-monotonicity regime of the speed for a disk cross-section.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `(D/d, g'/f') = (1, 1)`: the speed does not depend on the radius.
    Constant,
    /// Speed increases with the radius.
    Increasing,
    /// Speed decreases with the radius.
    Decreasing,
    /// Speed peaks at the finite radius `r_star`.
    InteriorMax,
}

/// Explicit limiting speeds and thresholds, each present only where defined.
///
/// `d_star_surf` is the surface-diffusivity threshold `d(2 - g'/f')` (written
/// `D*` in the analysis) and `d_star_bulk` the mirror bulk threshold
/// `D(2 - f'/g')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedForms {
    /// Bulk-only speed `2 sqrt(d f')`.
    pub c_star_f: Option<f64>,
    /// Surface-only small-radius limit `2 sqrt(D g')`.
    pub c_star_avg_g: Option<f64>,
    pub d_star_surf: Option<f64>,
    pub d_star_bulk: Option<f64>,
    /// Peak speed over all radii in the interior-maximum regime.
    pub c_max: Option<f64>,
    /// Radius attaining `c_max` (cross-section dimension 2).
    pub r_star: Option<f64>,
    pub regime: Option<Regime>,
}

/// Closed-form speeds, thresholds, and regime for constant coefficients.
///
/// Arguments outside a formula's domain simply leave that field `None`.
pub fn closed_forms(d: f64, dd: f64, f_prime: f64, g_prime: f64, mu: f64, nu: f64) -> ClosedForms {
    let pos = |v: f64| v.is_finite() && v > 0.0;
    let c_star_f = (pos(d) && pos(f_prime)).then(|| 2.0 * (d * f_prime).sqrt());
    let c_star_avg_g = (pos(dd) && pos(g_prime)).then(|| 2.0 * (dd * g_prime).sqrt());
    let d_star_surf = (pos(d) && pos(f_prime) && g_prime.is_finite() && g_prime / f_prime < 2.0)
        .then(|| d * (2.0 - g_prime / f_prime));
    let d_star_bulk = (pos(dd) && pos(g_prime) && f_prime.is_finite() && f_prime / g_prime < 2.0)
        .then(|| dd * (2.0 - f_prime / g_prime));

    let mut c_max = None;
    let mut r_star = None;
    if pos(d) && pos(dd) && f_prime.is_finite() && g_prime.is_finite() {
        let den2 = (dd - d) * (f_prime - g_prime);
        if den2 > 0.0 {
            let cm = (dd * f_prime - d * g_prime).abs() / den2.sqrt();
            c_max = Some(cm);
            let num2 = cm * cm - 4.0 * dd * g_prime;
            let dwn2 = cm * cm - 4.0 * d * f_prime;
            if num2 >= 0.0 && dwn2 > 0.0 && pos(mu) && pos(nu) {
                r_star = Some(2.0 * (nu / mu) * (num2 / dwn2).sqrt());
            }
        }
    }

    let regime = if pos(d) && pos(dd) && pos(f_prime) && g_prime >= 0.0 && g_prime.is_finite() {
        let x = dd / d;
        let y = g_prime / f_prime;
        Some(if (x - 1.0).abs() <= 1e-12 && (y - 1.0).abs() <= 1e-12 {
            Regime::Constant
        } else if y <= 2.0 - x {
            Regime::Increasing
        } else if x > 0.5 && y >= x / (2.0 * x - 1.0) {
            Regime::Decreasing
        } else {
            Regime::InteriorMax
        })
    } else {
        None
    };

    ClosedForms {
        c_star_f,
        c_star_avg_g,
        d_star_surf,
        d_star_bulk,
        c_max,
        r_star,
        regime,
    }
}

/// One oracle-versus-solver comparison for the validation report.
#[derive(Debug, Clone)]
pub struct ValidationRow {
    pub case: String,
    pub config: String,
    pub oracle: f64,
    pub fem: f64,
    pub tolerance: f64,
}

impl ValidationRow {
    pub fn rel_error(&self) -> f64 {
        (self.fem - self.oracle).abs() / self.oracle.abs().max(f64::MIN_POSITIVE)
    }

    pub fn pass(&self) -> bool {
        self.rel_error() <= self.tolerance
    }
}

/// Write the validation report; returns the number of failing rows.
pub fn write_validation_csv<W: Write>(out: &mut W, rows: &[ValidationRow]) -> std::io::Result<usize> {
    writeln!(out, "case,config,oracle,fem,rel_error,tolerance,pass")?;
    let mut failures = 0usize;
    for r in rows {
        let ok = r.pass();
        if !ok {
            failures += 1;
        }
        writeln!(
            out,
            "{},{},{:.11e},{:.11e},{:.3e},{:.3e},{}",
            r.case,
            r.config,
            r.oracle,
            r.fem,
            r.rel_error(),
            r.tolerance,
            ok
        )?;
    }
    Ok(failures)
}

// ---------------------------------------------------------------------------
// Compensated (double-double) scalars for the radial Sturm recurrence.
//
// The smallest eigenvalue is O(1) while the matrix norm is O(1/h^2), so plain
// f64 pivoting resolves it only to about eps/h^2; at the grid sizes the
// refinement study runs, that noise floor sits exactly where the O(h^2)
// truncation differences live.  Carrying the entries and the pivot recurrence
// in unevaluated (hi, lo) pairs removes the floor entirely at a small
// constant-factor cost, which only matters for the short radial grids.
// ---------------------------------------------------------------------------

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy)]
struct Dd(f64, f64);

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let ap = s - b;
    let bp = s - ap;
    (s, (a - ap) + (b - bp))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

impl Dd {
    #[inline]
    fn from(v: f64) -> Self {
        Dd(v, 0.0)
    }

    #[inline]
    fn hi(self) -> f64 {
        self.0
    }

    #[inline]
    fn neg(self) -> Self {
        Dd(-self.0, -self.1)
    }

    #[inline]
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.0, o.0);
        let (hi, lo) = quick_two_sum(s, e + self.1 + o.1);
        Dd(hi, lo)
    }

    #[inline]
    fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    #[inline]
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.0, o.0);
        let (hi, lo) = quick_two_sum(p, e + self.0 * o.1 + self.1 * o.0);
        Dd(hi, lo)
    }

    #[inline]
    fn mul_f64(self, v: f64) -> Dd {
        let (p, e) = two_prod(self.0, v);
        let (hi, lo) = quick_two_sum(p, e + self.1 * v);
        Dd(hi, lo)
    }

    #[inline]
    fn div(self, o: Dd) -> Dd {
        let q1 = self.0 / o.0;
        let r = self.sub(o.mul_f64(q1));
        let q2 = (r.0 + r.1) / o.0;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd(hi, lo)
    }

    #[inline]
    fn recip(v: Dd) -> Dd {
        Dd::from(1.0).div(v)
    }
}

// ---------------------------------------------------------------------------
// Tridiagonal reduction shared by the radial and strip oracles.
// ---------------------------------------------------------------------------

/// Tridiagonal pencil `T(alpha) = diag(diag0 - alpha^2 a2c) + off-diagonal`,
/// stored in symmetrized form.
///
/// The raw finite-difference rows are unsymmetric, but every adjacent coupling
/// pair has a positive product `e2`, so the matrix is diagonally similar to
/// the symmetric tridiagonal with off-diagonals `sqrt(e2)`.  Eigenvalues (and
/// Sturm counts) are computed on that symmetric representative.  `a2c` is
/// also exactly the derivative weight: `d lambda / d(alpha^2) = -phi' C phi`
/// with `C = diag(a2c)` for the normalized eigenvector `phi`.
struct Reduced1D {
    diag0: Vec<Dd>,
    a2c: Vec<f64>,
    /// Products of adjacent couplings, all nonnegative.
    e2: Vec<Dd>,
    /// `sqrt(e2)`: off-diagonals of the symmetric representative.
    esym: Vec<f64>,
    /// Largest `a2c` entry; used for warm eigenvalue brackets.
    max_a2c: f64,
    /// Magnitude scale of the rows, for pivot floors and bracket margins.
    scale: f64,
    /// Run the pivot recurrence in compensated arithmetic (radial grids).
    refined: bool,
}

impl Reduced1D {
    fn new(diag0: Vec<Dd>, a2c: Vec<f64>, e2: Vec<Dd>, refined: bool) -> Self {
        let esym: Vec<f64> = e2.iter().map(|v| v.hi().max(0.0).sqrt()).collect();
        let mut scale = 1.0f64;
        let n = diag0.len();
        for i in 0..n {
            let mut row = diag0[i].hi().abs();
            if i > 0 {
                row += esym[i - 1];
            }
            if i + 1 < n {
                row += esym[i];
            }
            scale = scale.max(row);
        }
        let max_a2c = a2c.iter().cloned().fold(0.0f64, f64::max);
        Reduced1D {
            diag0,
            a2c,
            e2,
            esym,
            max_a2c,
            scale,
            refined,
        }
    }

    fn dim(&self) -> usize {
        self.diag0.len()
    }

    /// Number of eigenvalues strictly below `x`, from the pivot signs of the
    /// shifted LDL^T recurrence.  Near-zero pivots are pushed to a tiny
    /// negative floor, the usual guard against division blow-up.
    fn count_below(&self, alpha2: f64, x: f64) -> usize {
        if self.refined {
            return self.count_below_refined(alpha2, x);
        }
        let pivmin = f64::EPSILON * f64::EPSILON * self.scale;
        let mut count = 0usize;
        let mut q = 1.0f64;
        for i in 0..self.dim() {
            let mut m = self.diag0[i].hi() - alpha2 * self.a2c[i] - x;
            if i > 0 {
                m -= self.e2[i - 1].hi() / q;
            }
            if m.abs() < pivmin {
                m = -pivmin;
            }
            if m < 0.0 {
                count += 1;
            }
            q = m;
        }
        count
    }

    fn count_below_refined(&self, alpha2: f64, x: f64) -> usize {
        let pivmin = f64::EPSILON * f64::EPSILON * self.scale;
        let mut count = 0usize;
        let mut q = Dd::from(1.0);
        for i in 0..self.dim() {
            let (p, pe) = two_prod(alpha2, self.a2c[i]);
            let mut m = self.diag0[i].add(Dd(-p, -pe)).add(Dd::from(-x));
            if i > 0 {
                m = m.sub(self.e2[i - 1].div(q));
            }
            if m.0.abs() < pivmin {
                m = Dd::from(-pivmin);
            }
            if m.0 < 0.0 {
                count += 1;
            }
            q = m;
        }
        count
    }

    /// Certified enclosure of the whole spectrum (Gershgorin discs of the
    /// symmetric representative, padded for roundoff).
    fn spectrum_bounds(&self, alpha2: f64) -> (f64, f64) {
        let n = self.dim();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let d = self.diag0[i].hi() - alpha2 * self.a2c[i];
            let mut r = 0.0;
            if i > 0 {
                r += self.esym[i - 1];
            }
            if i + 1 < n {
                r += self.esym[i];
            }
            lo = lo.min(d - r);
            hi = hi.max(d + r);
        }
        let pad = 1e-12 * self.scale + 1e-12 * (alpha2.abs() * self.max_a2c) + f64::MIN_POSITIVE;
        (lo - pad, hi + pad)
    }

    /// Smallest eigenvalue by Sturm bisection.  `hint` is an optional warm
    /// bracket; it is re-certified by counting and expanded (up to the
    /// Gershgorin enclosure) if stale.
    fn lambda1(&self, alpha2: f64, hint: Option<(f64, f64)>) -> f64 {
        let (glo, ghi) = self.spectrum_bounds(alpha2);
        let (mut lo, mut hi) = hint.unwrap_or((glo, ghi));
        lo = lo.clamp(glo, ghi);
        hi = hi.clamp(glo, ghi);
        if lo >= hi {
            lo = glo;
            hi = ghi;
        }
        let mut step = (hi - lo).max(1e-9 * (1.0 + lo.abs()));
        while lo > glo && self.count_below(alpha2, lo) > 0 {
            lo = (lo - step).max(glo);
            step *= 2.0;
        }
        let mut step = (hi - lo).max(1e-9 * (1.0 + hi.abs()));
        while hi < ghi && self.count_below(alpha2, hi) == 0 {
            hi = (hi + step).min(ghi);
            step *= 2.0;
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-13 * (1.0 + lo.abs().max(hi.abs())) {
                break;
            }
            if self.count_below(alpha2, mid) == 0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Weighted Rayleigh quotient `phi' C phi / phi' phi` of the principal
    /// eigenvector, `C = diag(a2c)`; this is exactly `-d lambda / d(alpha^2)`
    /// of the discrete eigenvalue.
    ///
    /// The vector comes from inverse iteration on the symmetric representative
    /// with a shift just below `lam`; the shift retreats when rounding makes a
    /// pivot nonpositive (the exact shifted matrix is positive definite).
    fn kato_quotient(&self, alpha2: f64, lam: f64) -> Result<f64> {
        let n = self.dim();
        let diag: Vec<f64> = (0..n)
            .map(|i| self.diag0[i].hi() - alpha2 * self.a2c[i])
            .collect();
        let mut delta = 1e-9 * (1.0 + lam.abs()) + 1e-14 * self.scale;
        let mut piv = vec![0.0f64; n];
        let mut lmul = vec![0.0f64; n];
        let mut v = vec![0.0f64; n];
        'attempt: for _ in 0..8 {
            let sigma = lam - delta;
            piv[0] = diag[0] - sigma;
            if piv[0] <= 0.0 {
                delta *= 16.0;
                continue 'attempt;
            }
            for i in 1..n {
                lmul[i] = self.esym[i - 1] / piv[i - 1];
                piv[i] = diag[i] - sigma - self.esym[i - 1] * lmul[i];
                if piv[i] <= 0.0 {
                    delta *= 16.0;
                    continue 'attempt;
                }
            }
            v.iter_mut().for_each(|x| *x = 1.0);
            for _ in 0..4 {
                for i in 1..n {
                    let prev = v[i - 1];
                    v[i] -= lmul[i] * prev;
                }
                for i in 0..n {
                    v[i] /= piv[i];
                }
                for i in (0..n - 1).rev() {
                    let next = v[i + 1];
                    v[i] -= lmul[i + 1] * next;
                }
                let norm = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                if !(norm.is_finite() && norm > 0.0) {
                    delta *= 16.0;
                    continue 'attempt;
                }
                v.iter_mut().for_each(|x| *x /= norm);
            }
            // Confirm the vector belongs to `lam` and not a higher mode.
            let (mut tvv, mut vv, mut cvv) = (0.0f64, 0.0f64, 0.0f64);
            for i in 0..n {
                let mut tv = diag[i] * v[i];
                if i > 0 {
                    tv += self.esym[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    tv += self.esym[i] * v[i + 1];
                }
                tvv += v[i] * tv;
                vv += v[i] * v[i];
                cvv += self.a2c[i] * v[i] * v[i];
            }
            let rayleigh = tvv / vv;
            if (rayleigh - lam).abs() <= 1e-7 * (1.0 + lam.abs()) + 1e-12 * self.scale {
                return Ok(cvv / vv);
            }
            delta *= 16.0;
        }
        Err(Error::NonConvergence(
            "principal eigenvector inverse iteration kept hitting a nonpositive pivot".into(),
        ))
    }
}

/// Build the radial reduction.  Ordering: `[U_in,] V_0 .. V_{n-1}, U_out`.
///
/// Entries are assembled in compensated pairs so that the O(1/h^2) stiffness
/// magnitude does not swamp the O(1) eigenvalue; see the note above [`Dd`].
fn build_radial(p: &RadialProblem) -> Result<Reduced1D> {
    p.validate()?;
    let n = p.n;
    let annulus = p.r_inner > 0.0;
    let dim = n + 1 + usize::from(annulus);
    let h = (p.r_outer - p.r_inner) / (n - 1) as f64;
    let (d, dd) = (p.d_bulk, p.d_surf);
    let smn = (p.mu * p.nu).sqrt();
    let h_dd = Dd::from(h);
    let inv_h2 = Dd::recip(h_dd.mul(h_dd));

    let sample = |profile: &RadialProfile, r: f64, what: &str| -> Result<f64> {
        let v = profile(r)?;
        if !v.is_finite() {
            return Err(Error::InvalidParams(format!("{what}({r}) is not finite")));
        }
        Ok(v)
    };

    let mut diag0 = vec![Dd::from(0.0); dim];
    let mut a2c = vec![0.0f64; dim];
    let mut lower = vec![Dd::from(0.0); dim];
    let mut upper = vec![Dd::from(0.0); dim];
    let base = usize::from(annulus);

    if annulus {
        let kap = sample(&p.kappa, p.r_inner, "kappa")?;
        if kap < 0.0 {
            return Err(Error::InvalidParams(format!("kappa({}) = {kap} < 0", p.r_inner)));
        }
        let g_in = sample(&p.g, p.r_inner, "g")?;
        diag0[0] = Dd::from(kap * p.mu).sub(Dd::from(g_in));
        a2c[0] = dd;
        upper[0] = Dd::from(-kap * smn);
        // Robin closure at the inner circle; outward normal points inward.
        let fac = Dd::from(2.0).div(h_dd).sub(Dd::recip(Dd::from(p.r_inner)));
        let f0 = sample(&p.f, p.r_inner, "f")?;
        diag0[base] = inv_h2
            .mul_f64(2.0 * d)
            .add(fac.mul_f64(kap * p.nu))
            .sub(Dd::from(f0));
        a2c[base] = d;
        lower[base] = fac.mul_f64(-kap * smn);
        upper[base] = inv_h2.mul_f64(-2.0 * d);
    } else {
        // Regular center: the radial Laplacian limit doubles the second
        // difference at r = 0.
        let f0 = sample(&p.f, 0.0, "f")?;
        diag0[base] = inv_h2.mul_f64(4.0 * d).sub(Dd::from(f0));
        a2c[base] = d;
        upper[base] = inv_h2.mul_f64(-4.0 * d);
    }

    for i in 1..n - 1 {
        let r = p.r_inner + i as f64 * h;
        let fi = sample(&p.f, r, "f")?;
        let row = base + i;
        diag0[row] = inv_h2.mul_f64(2.0 * d).sub(Dd::from(fi));
        a2c[row] = d;
        let b = Dd::recip(Dd::from(2.0 * r).mul(h_dd));
        lower[row] = inv_h2.sub(b).mul_f64(-d);
        upper[row] = inv_h2.add(b).mul_f64(-d);
    }

    let kap = sample(&p.kappa, p.r_outer, "kappa")?;
    if kap < 0.0 {
        return Err(Error::InvalidParams(format!("kappa({}) = {kap} < 0", p.r_outer)));
    }
    let f_out = sample(&p.f, p.r_outer, "f")?;
    let g_out = sample(&p.g, p.r_outer, "g")?;
    let fac = Dd::from(2.0).div(h_dd).add(Dd::recip(Dd::from(p.r_outer)));
    let row = base + n - 1;
    diag0[row] = inv_h2
        .mul_f64(2.0 * d)
        .add(fac.mul_f64(kap * p.nu))
        .sub(Dd::from(f_out));
    a2c[row] = d;
    lower[row] = inv_h2.mul_f64(-2.0 * d);
    upper[row] = fac.mul_f64(-kap * smn);
    diag0[row + 1] = Dd::from(kap * p.mu).sub(Dd::from(g_out));
    a2c[row + 1] = dd;
    lower[row + 1] = Dd::from(-kap * smn);

    let mut e2 = vec![Dd::from(0.0); dim - 1];
    for i in 0..dim - 1 {
        let prod = lower[i + 1].mul(upper[i]);
        if prod.hi() < 0.0 {
            return Err(Error::InvalidParams(format!(
                "coupling product {:.3e} < 0 between radial rows {i} and {}",
                prod.hi(),
                i + 1
            )));
        }
        e2[i] = prod;
    }
    Ok(Reduced1D::new(diag0, a2c, e2, true))
}

/// Build the strip reduction.  Ordering: `[U, V_0 .. V_{n-1}]` with
/// `V_i` at depth `i h`, `h = l / n`, and a Dirichlet ghost at depth `l`.
///
/// Plain f64 entries: the step stays fixed across truncation doublings, so
/// the matrix norm never grows and the f64 pivot recurrence is accurate.
fn build_strip(p: &BRRProblem, l: f64, n: usize) -> Reduced1D {
    let h = l / n as f64;
    let (d, dd) = (p.d_bulk, p.d_surf);
    let dim = n + 1;
    let mut diag0 = vec![Dd::from(0.0); dim];
    let mut a2c = vec![d; dim];
    let mut e2 = vec![Dd::from(0.0); dim - 1];

    diag0[0] = Dd::from(p.mu - p.g_prime);
    a2c[0] = dd;
    let bulk = 2.0 * d / (h * h) - p.f_prime;
    diag0[1] = Dd::from(bulk + 2.0 * p.nu / h);
    // U row couples with -nu, surface bulk row with -2 mu / h.
    e2[0] = Dd::from(2.0 * p.mu * p.nu / h);
    for i in 2..dim {
        diag0[i] = Dd::from(bulk);
        e2[i - 1] = Dd::from(if i == 2 {
            // Surface bulk row couples outward with -2d/h^2.
            2.0 * d * d / (h * h * h * h)
        } else {
            d * d / (h * h * h * h)
        });
    }
    Reduced1D::new(diag0, a2c, e2, false)
}

/// Radial problem viewed through the shared speed-minimizer interface, with a
/// warm eigenvalue bracket carried between evaluations.
struct RadialEvaluator {
    red: Reduced1D,
    d_max: f64,
    last: Option<(f64, f64)>,
}

impl RadialEvaluator {
    fn new(p: &RadialProblem) -> Result<Self> {
        Ok(RadialEvaluator {
            red: build_radial(p)?,
            d_max: p.d_bulk.max(p.d_surf),
            last: None,
        })
    }
}

impl LambdaEvaluator for RadialEvaluator {
    fn lambda(&mut self, alpha: f64) -> Result<(f64, f64)> {
        let alpha2 = alpha * alpha;
        let hint = self.last.map(|(pa2, pl)| {
            let r = self.red.max_a2c * (alpha2 - pa2).abs() + 1e-9 * (1.0 + pl.abs());
            (pl - r, pl + r)
        });
        let lam = self.red.lambda1(alpha2, hint);
        self.last = Some((alpha2, lam));
        let dlam = if alpha == 0.0 {
            0.0
        } else {
            -2.0 * alpha * self.red.kato_quotient(alpha2, lam)?
        };
        Ok((lam, dlam))
    }

    fn max_diffusivity(&self) -> f64 {
        self.d_max
    }
}

/// Speed profile of a fixed reduction, with warm eigenvalue brackets.
struct SpeedFn1D<'a> {
    red: &'a Reduced1D,
    last: Option<(f64, f64)>,
    evals: usize,
}

impl<'a> SpeedFn1D<'a> {
    fn new(red: &'a Reduced1D) -> Self {
        SpeedFn1D {
            red,
            last: None,
            evals: 0,
        }
    }

    fn s(&mut self, alpha: f64) -> f64 {
        let alpha2 = alpha * alpha;
        let hint = self.last.map(|(pa2, pl)| {
            let r = self.red.max_a2c * (alpha2 - pa2).abs() + 1e-9 * (1.0 + pl.abs());
            (pl - r, pl + r)
        });
        let lam = self.red.lambda1(alpha2, hint);
        self.last = Some((alpha2, lam));
        self.evals += 1;
        -lam / alpha
    }
}

/// Derivative-free minimization of `s(alpha)`: walk a geometric grid until a
/// bracketing triple appears, then golden-section to a relative width of
/// about `1e-5`.  `s` is strictly unimodal here (the eigenvalue is concave in
/// `alpha`), so the local minimum is the global one.
fn min_speed_1d(sf: &mut SpeedFn1D, seed: f64) -> Result<(f64, f64)> {
    const GROW: f64 = 1.6;
    if !(seed.is_finite() && seed > 0.0) {
        return Err(Error::Bracket(format!("bad strip minimizer seed {seed}")));
    }
    let mut mid = seed;
    let mut lo = seed / GROW;
    let mut hi = seed * GROW;
    let mut smid = sf.s(mid);
    let mut slo = sf.s(lo);
    let mut shi = sf.s(hi);
    let mut steps = 0;
    while !(smid <= slo && smid <= shi) {
        if slo < smid {
            hi = mid;
            shi = smid;
            mid = lo;
            smid = slo;
            lo /= GROW;
            slo = sf.s(lo);
        } else {
            lo = mid;
            slo = smid;
            mid = hi;
            smid = shi;
            hi *= GROW;
            shi = sf.s(hi);
        }
        steps += 1;
        if steps > 120 {
            return Err(Error::Bracket(format!(
                "no interior speed minimum found near [{lo:.3e}, {hi:.3e}]"
            )));
        }
    }
    const GR: f64 = 0.618_033_988_749_895;
    let mut x1 = hi - GR * (hi - lo);
    let mut x2 = lo + GR * (hi - lo);
    let mut f1 = sf.s(x1);
    let mut f2 = sf.s(x2);
    let mut best = (mid, smid);
    if f1 < best.1 {
        best = (x1, f1);
    }
    if f2 < best.1 {
        best = (x2, f2);
    }
    while hi - lo > 1e-5 * (0.1 + lo.abs()) {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GR * (hi - lo);
            f1 = sf.s(x1);
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GR * (hi - lo);
            f2 = sf.s(x2);
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
    }
    Ok(best)
}
