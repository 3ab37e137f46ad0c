//! Boundary shape derivative of the spreading speed.
//!
//! Perturbing the cross-section by a vector field `theta` moves the principal
//! eigenvalue by a boundary integral `int_bd F (theta . n) ds`, where the
//! integrand `F` combines the eigenfunction pair, its first derivatives, the
//! coefficients and the boundary curvature. At the minimizing frequency
//! `alpha*` the speed derivative is `-1/alpha*` times that integral, with no
//! frequency-correction term (the minimizer is stationary in `alpha`).
//! Projecting onto the radial fields `theta = {1, cos k t, sin k t} rhat`
//! turns the integral into the gradient with respect to the Fourier shape
//! coefficients: `theta . n ds = phi_k(t) rho(t) dt` exactly, so each mode is
//! a plain trapezoid sum over the equally spaced boundary nodes.
//!
//! On a plane curve the Hessian of the signed distance acts on tangent
//! vectors as multiplication by the curvature `H`, which collapses the
//! tangential-energy block of `F` to `-D H |grad_tau U|^2`. The bulk normal
//! derivative is eliminated through the exchange balance
//! `d dn(V) = sqrt(mu nu) U - nu V`, which holds exactly on the continuous
//! level and removes the noisiest finite-difference term. Both reductions
//! require a unit exchange coefficient and a constant surface reaction slope;
//! the bulk reaction slope may vary in space.

use crate::coeffs::{CoeffExpr, ProblemParams};
use crate::eigsolver::{EigOptions, EigenPair};
use crate::geometry::{FourierShape, Mesh};
use crate::speed::{FemEvaluator, SpeedResult};
use crate::{Error, Result};
use rayon::prelude::*;
use std::f64::consts::PI;
use std::io::Write;

/// Gradient of the speed with respect to Fourier shape coefficients.
#[derive(Debug, Clone)]
pub struct ShapeGradient {
    /// Coefficient derivatives, ordered like
    /// [`FourierShape::coeff_vector`]: `(a0, a_1..a_M, b_1..b_M)`.
    pub dj: Vec<f64>,
    /// Integrand samples at the boundary nodes, in chain order.
    pub f_values: Vec<f64>,
    /// Frequency the gradient was evaluated at.
    pub alpha_star: f64,
}

/// Samples the shape-derivative integrand at every boundary node (chain
/// order). `pair` must be the principal eigenpair of this mesh at `alpha`,
/// normalized to `w^T B w = 1` (the eigensolver's convention); the eigenvalue
/// enters the integrand directly.
pub fn shape_integrand(
    mesh: &Mesh,
    params: &ProblemParams,
    alpha: f64,
    pair: &EigenPair,
) -> Result<Vec<f64>> {
    let kappa0 = match params.kappa {
        CoeffExpr::Const(c) => c * params.kappa_scale,
        _ => {
            return Err(Error::Unsupported(
                "shape derivative requires a spatially constant exchange coefficient".into(),
            ))
        }
    };
    if (kappa0 - 1.0).abs() > 1e-12 {
        return Err(Error::Unsupported(format!(
            "shape derivative is derived for unit exchange strength, got kappa = {kappa0}"
        )));
    }
    let g0 = match params.g_lin {
        CoeffExpr::Const(c) => c,
        _ => {
            return Err(Error::Unsupported(
                "shape derivative requires a spatially constant surface reaction slope".into(),
            ))
        }
    };

    let n = mesh.n_vertices();
    if pair.w.len() != 2 * n {
        return Err(Error::InvalidParams(format!(
            "eigenvector length {} does not match a mesh with {n} vertices",
            pair.w.len()
        )));
    }
    let (v, u) = pair.w.split_at(n);
    let nb = mesh.n_boundary();

    // area-weighted P1 gradients of both fields at the boundary vertices
    let mut grad_v = vec![[0.0f64; 2]; nb];
    let mut grad_u = vec![[0.0f64; 2]; nb];
    let mut area_sum = vec![0.0f64; nb];
    for tri in &mesh.triangles {
        let [i, j, k] = *tri;
        let slots = [
            mesh.boundary_slot(i),
            mesh.boundary_slot(j),
            mesh.boundary_slot(k),
        ];
        if slots.iter().all(Option::is_none) {
            continue;
        }
        let p = [mesh.vertices[i], mesh.vertices[j], mesh.vertices[k]];
        let two_a = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
            - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let bb = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
        let cc = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];
        let mut gv = [0.0; 2];
        let mut gu = [0.0; 2];
        for (a, &vtx) in tri.iter().enumerate() {
            gv[0] += v[vtx] * bb[a];
            gv[1] += v[vtx] * cc[a];
            gu[0] += u[vtx] * bb[a];
            gu[1] += u[vtx] * cc[a];
        }
        // triangle gradient is gv / two_a; weighting by area leaves gv / 2
        for s in slots.into_iter().flatten() {
            grad_v[s][0] += 0.5 * gv[0];
            grad_v[s][1] += 0.5 * gv[1];
            grad_u[s][0] += 0.5 * gu[0];
            grad_u[s][1] += 0.5 * gu[1];
            area_sum[s] += 0.5 * two_a;
        }
    }
    for s in 0..nb {
        let w = area_sum[s];
        grad_v[s][0] /= w;
        grad_v[s][1] /= w;
        grad_u[s][0] /= w;
        grad_u[s][1] /= w;
    }

    // tangential derivative of the surface field through the angular
    // parametrization: dU/ds = (dU/dt) / (ds/dt) with the exact arc density
    let ub: Vec<f64> = mesh.boundary.iter().map(|bn| u[bn.vertex]).collect();
    let mut tang2 = vec![0.0f64; nb];
    for i in 0..nb {
        let prev = (i + nb - 1) % nb;
        let next = (i + 1) % nb;
        let mut dt = mesh.boundary[next].point.theta - mesh.boundary[prev].point.theta;
        if dt <= 0.0 {
            dt += 2.0 * PI;
        }
        let t = (ub[next] - ub[prev]) / (dt * mesh.boundary[i].point.arc_weight);
        tang2[i] = t * t;
    }

    let d = params.d_bulk;
    let dd = params.d_surf;
    let (mu, nu, eps) = (params.mu, params.nu, params.eps);
    let root_mn = (mu * nu).sqrt();
    let a2 = alpha * alpha;
    let lam = pair.lambda;

    let mut out = Vec::with_capacity(nb);
    for (s, bn) in mesh.boundary.iter().enumerate() {
        let uv = u[bn.vertex];
        let vv = v[bn.vertex];
        let h = bn.point.curvature;
        let f_i = params.f_at(bn.point.position)?;
        let gv2 = grad_v[s][0] * grad_v[s][0] + grad_v[s][1] * grad_v[s][1];
        let gu2 = grad_u[s][0] * grad_u[s][0] + grad_u[s][1] * grad_u[s][1];
        let dn_u = grad_u[s][0] * bn.point.normal[0] + grad_u[s][1] * bn.point.normal[1];
        // exchange balance: dn(V) = (sqrt(mu nu) U - nu V) / d
        let dn_v = (root_mn * uv - nu * vv) / d;
        let f_val = d * gv2 - (d * a2 + f_i) * vv * vv
            + nu * (2.0 * vv * dn_v + h * vv * vv)
            - 2.0 * root_mn * (uv * dn_v + h * uv * vv)
            - (dd * a2 + g0 - mu) * h * uv * uv
            - dd * h * tang2[s]
            - lam * (vv * vv + h * uv * uv)
            + eps * gu2
            - 2.0 * eps * dn_u * dn_u;
        out.push(f_val);
    }
    Ok(out)
}

/// Gradient of the speed with respect to the shape's Fourier coefficients.
///
/// `mesh` must be built from `shape`, and `speed` must be the result of the
/// speed minimization on that mesh with these parameters; the configuration
/// has to be persistent (an extinct population has speed identically zero and
/// no useful gradient). The eigenpair is re-solved once at `alpha*`.
pub fn fourier_gradient(
    shape: &FourierShape,
    mesh: &Mesh,
    params: &ProblemParams,
    speed: &SpeedResult,
) -> Result<ShapeGradient> {
    if !speed.persistent {
        return Err(Error::Unsupported(
            "shape gradient of an extinct configuration (speed is identically zero)".into(),
        ));
    }
    let alpha_star = speed
        .alpha_star
        .ok_or_else(|| Error::Unsupported("speed result carries no minimizing frequency".into()))?;

    for bn in &mesh.boundary {
        let bp = shape.boundary_point(bn.point.theta);
        let dx = bp.position[0] - bn.point.position[0];
        let dy = bp.position[1] - bn.point.position[1];
        if dx.hypot(dy) > 1e-9 * shape.a0() {
            return Err(Error::InvalidParams(
                "mesh boundary does not lie on the given shape".into(),
            ));
        }
    }

    let mut ev = FemEvaluator::new(mesh, params, EigOptions::default())?;
    let pair = ev.eigenpair(alpha_star)?;
    let f_values = shape_integrand(mesh, params, alpha_star, &pair)?;

    // dJ_k = -(1/alpha*) int F phi_k rho dt; nodes are equally spaced in t,
    // so the periodic trapezoid sum is spectrally accurate
    let nb = mesh.n_boundary();
    let dt = 2.0 * PI / nb as f64;
    let m = shape.modes();
    let dj: Vec<f64> = (0..2 * m + 1)
        .into_par_iter()
        .map(|slot| {
            let mut acc = 0.0;
            for (i, bn) in mesh.boundary.iter().enumerate() {
                let rho = bn.point.position[0].hypot(bn.point.position[1]);
                let phi = if slot == 0 {
                    1.0
                } else if slot <= m {
                    (slot as f64 * bn.point.theta).cos()
                } else {
                    ((slot - m) as f64 * bn.point.theta).sin()
                };
                acc += f_values[i] * phi * rho;
            }
            -acc * dt / alpha_star
        })
        .collect();

    Ok(ShapeGradient { dj, f_values, alpha_star })
}

/// Derivative of the speed along rigid translations of the cross-section,
/// `-(1/alpha*) int_bd F n ds`. Vanishes when the coefficients are
/// translation invariant; with a spatially varying bulk slope it points
/// toward regions of faster reaction.
pub fn translation_gradient(mesh: &Mesh, grad: &ShapeGradient) -> [f64; 2] {
    let mut acc = [0.0f64; 2];
    for (i, bn) in mesh.boundary.iter().enumerate() {
        acc[0] += grad.f_values[i] * bn.point.normal[0] * bn.weight;
        acc[1] += grad.f_values[i] * bn.point.normal[1] * bn.weight;
    }
    [-acc[0] / grad.alpha_star, -acc[1] / grad.alpha_star]
}

/// Writes the gradient as `mode,type,value` rows; `type` is `mean` for the
/// radius coefficient, `cos`/`sin` for the oscillating modes.
pub fn write_gradient_csv<W: Write>(mut out: W, grad: &ShapeGradient) -> std::io::Result<()> {
    writeln!(out, "mode,type,value")?;
    let m = (grad.dj.len() - 1) / 2;
    writeln!(out, "0,mean,{:.16e}", grad.dj[0])?;
    for k in 1..=m {
        writeln!(out, "{k},cos,{:.16e}", grad.dj[k])?;
    }
    for k in 1..=m {
        writeln!(out, "{k},sin,{:.16e}", grad.dj[m + k])?;
    }
    Ok(())
}
