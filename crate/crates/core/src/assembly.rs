//! P1 finite-element assembly of the coupled cross-sectional pencil.
//!
//! Unknowns: the bulk field `V` on every vertex and the surface field `U`,
//! extended into the bulk with a small regularizing Dirichlet energy so both
//! fields share one nodal layout. For a trial/test pair the bilinear forms are
//!
//! ```text
//! A(alpha)(W, Psi) = d int_om grad V . grad psi
//!                  - int_om (d alpha^2 + f_lin) V psi
//!                  - int_bd kappa (sqrt(mu nu) U - nu V) psi
//!                  - int_bd (D alpha^2 + g_lin - kappa mu) U phi
//!                  - int_bd kappa sqrt(mu nu) V phi
//!                  + D int_bd grad_tau U . grad_tau phi
//!                  + eps int_om grad U . grad phi
//! B(W, Psi)        = int_bd U phi + int_om V psi
//! ```
//!
//! with `W = (U, V)`, `Psi = (phi, psi)`. The alpha dependence is affine in
//! `alpha^2`: `A(alpha) = A(0) - alpha^2 (D M_bd + d M_om)`, so one assembly
//! serves every alpha. Quadrature: 3-point edge-midpoint rule on triangles,
//! 2-point Gauss on boundary segments (both exact for P1 mass matrices, so
//! completing the square in the exchange term survives discretization and the
//! spectral lower bound below is exact).

use crate::coeffs::ProblemParams;
use crate::geometry::Mesh;
use crate::sparse::{CsrMatrix, TripletBuilder};
use crate::{Error, Result};
use std::io::Write;

/// Nodal dof numbering shared by all assembled matrices: the bulk value at
/// vertex `i` is dof `i`, the surface value at vertex `i` is dof `n + i`.
#[derive(Debug, Clone, Copy)]
pub struct DofLayout {
    pub n_vertices: usize,
}

impl DofLayout {
    pub fn new(mesh: &Mesh) -> Self {
        DofLayout { n_vertices: mesh.n_vertices() }
    }

    pub fn n_dofs(&self) -> usize {
        2 * self.n_vertices
    }

    pub fn v_dof(&self, vertex: usize) -> usize {
        vertex
    }

    pub fn u_dof(&self, vertex: usize) -> usize {
        self.n_vertices + vertex
    }

    /// Splits a dof vector into `(V, U)` nodal slices.
    pub fn split<'a>(&self, w: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        w.split_at(self.n_vertices)
    }
}

/// The assembled alpha-family `A(alpha) = base - alpha^2 mass2` together with
/// the coupling mass `B`. All three matrices share one sparsity pattern.
#[derive(Debug)]
pub struct PencilForms {
    pub layout: DofLayout,
    pub base: CsrMatrix,
    pub mass2: CsrMatrix,
    pub b: CsrMatrix,
    /// Largest bulk reaction slope seen at a quadrature point.
    pub max_f: f64,
    /// Largest surface reaction slope seen at a boundary quadrature point.
    pub max_g: f64,
    d_bulk: f64,
    d_surf: f64,
}

impl PencilForms {
    pub fn assemble(mesh: &Mesh, params: &ProblemParams) -> Result<Self> {
        assemble_forms(mesh, params)
    }

    /// `A(alpha)`.
    pub fn matrix_a(&self, alpha: f64) -> CsrMatrix {
        CsrMatrix::linear_combination(&[(1.0, &self.base), (-alpha * alpha, &self.mass2)])
    }

    /// `A(alpha) - sigma B`.
    pub fn shifted(&self, alpha: f64, sigma: f64) -> CsrMatrix {
        CsrMatrix::linear_combination(&[
            (1.0, &self.base),
            (-alpha * alpha, &self.mass2),
            (-sigma, &self.b),
        ])
    }

    /// Certified lower bound `lambda(alpha) >= -L(alpha)`: for any `w` the
    /// quadratic form satisfies `w^T A(alpha) w >= -L(alpha) w^T B w`, because
    /// after completing the exchange square every remaining term is a
    /// (positive) energy or a mass term with coefficient bounded by `L`.
    pub fn lower_bound(&self, alpha: f64) -> f64 {
        let a2 = alpha * alpha;
        (self.d_surf * a2 + self.max_g).max(self.d_bulk * a2 + self.max_f)
    }

    pub fn d_bulk(&self) -> f64 {
        self.d_bulk
    }

    pub fn d_surf(&self) -> f64 {
        self.d_surf
    }
}

fn assemble_forms(mesh: &Mesh, params: &ProblemParams) -> Result<PencilForms> {
    params.validate()?;
    let layout = DofLayout::new(mesh);
    let mut tb = TripletBuilder::<3>::new(layout.n_dofs());
    // structural diagonal so every dof owns a row even before contributions
    for dof in 0..layout.n_dofs() {
        tb.add(dof, dof, [0.0, 0.0, 0.0]);
    }

    let d = params.d_bulk;
    let dd = params.d_surf;
    let root_mn = (params.mu * params.nu).sqrt();
    let mut max_f = f64::NEG_INFINITY;
    let mut max_g = f64::NEG_INFINITY;
    let mut min_kappa = f64::INFINITY;
    let mut max_kappa = f64::NEG_INFINITY;

    // bulk triangles: V stiffness + reaction mass, U regularization stiffness,
    // V blocks of mass2 and B
    for tri in &mesh.triangles {
        let [i, j, k] = *tri;
        let p = [mesh.vertices[i], mesh.vertices[j], mesh.vertices[k]];
        let area = 0.5
            * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1])
                - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
        // gradients of the barycentric basis
        let bb = [p[1][1] - p[2][1], p[2][1] - p[0][1], p[0][1] - p[1][1]];
        let cc = [p[2][0] - p[1][0], p[0][0] - p[2][0], p[1][0] - p[0][0]];

        // 3-point edge-midpoint rule: midpoints of edges 01, 12, 20
        let mids = [
            [(p[0][0] + p[1][0]) * 0.5, (p[0][1] + p[1][1]) * 0.5],
            [(p[1][0] + p[2][0]) * 0.5, (p[1][1] + p[2][1]) * 0.5],
            [(p[2][0] + p[0][0]) * 0.5, (p[2][1] + p[0][1]) * 0.5],
        ];
        // basis values at midpoints: phi_a(mid_q)
        const PHI: [[f64; 3]; 3] = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]];
        let mut fq = [0.0; 3];
        for q in 0..3 {
            let f = params.f_at(mids[q])?;
            fq[q] = f;
            max_f = max_f.max(f);
        }

        let wq = area / 3.0;
        for a in 0..3 {
            for bidx in a..3 {
                let stiff = (bb[a] * bb[bidx] + cc[a] * cc[bidx]) / (4.0 * area);
                let mut mass = 0.0;
                let mut fmass = 0.0;
                for q in 0..3 {
                    let prod = PHI[q][a] * PHI[q][bidx] * wq;
                    mass += prod;
                    fmass += fq[q] * prod;
                }
                let (va, vb) = (layout.v_dof(tri[a]), layout.v_dof(tri[bidx]));
                let (ua, ub) = (layout.u_dof(tri[a]), layout.u_dof(tri[bidx]));
                let add = |tb: &mut TripletBuilder<3>, r: usize, c: usize, v: [f64; 3]| {
                    if r == c {
                        tb.add(r, c, v);
                    } else {
                        tb.add_sym(r, c, v);
                    }
                };
                // [base, mass2, b]
                add(&mut tb, va, vb, [d * stiff - fmass, d * mass, mass]);
                add(&mut tb, ua, ub, [params.eps * stiff, 0.0, 0.0]);
            }
        }
    }

    // boundary segments: tangential U stiffness, exchange, surface reaction,
    // U blocks of mass2 and B
    const GAUSS: [f64; 2] = [0.5 - 0.288675134594812882, 0.5 + 0.288675134594812882];
    for &[v0, v1] in &mesh.boundary_edges {
        let (p0, p1) = (mesh.vertices[v0], mesh.vertices[v1]);
        let len = (p1[0] - p0[0]).hypot(p1[1] - p0[1]);
        let verts = [v0, v1];

        let mut kq = [0.0; 2];
        let mut gq = [0.0; 2];
        for q in 0..2 {
            let t = GAUSS[q];
            let x = [(1.0 - t) * p0[0] + t * p1[0], (1.0 - t) * p0[1] + t * p1[1]];
            let kap = params.kappa_at(x)?;
            let g = params.g_at(x)?;
            kq[q] = kap;
            gq[q] = g;
            max_g = max_g.max(g);
            min_kappa = min_kappa.min(kap);
            max_kappa = max_kappa.max(kap);
        }

        for a in 0..2 {
            for bidx in a..2 {
                let stiff = dd * (if a == bidx { 1.0 } else { -1.0 }) / len;
                let mut mass = 0.0;
                let mut kmass = 0.0;
                let mut gmass = 0.0;
                for q in 0..2 {
                    let t = GAUSS[q];
                    let phi = [1.0 - t, t];
                    let prod = phi[a] * phi[bidx] * (len * 0.5);
                    mass += prod;
                    kmass += kq[q] * prod;
                    gmass += gq[q] * prod;
                }
                let (ua, ub) = (layout.u_dof(verts[a]), layout.u_dof(verts[bidx]));
                let (va, vb) = (layout.v_dof(verts[a]), layout.v_dof(verts[bidx]));
                let add = |tb: &mut TripletBuilder<3>, r: usize, c: usize, v: [f64; 3]| {
                    if r == c {
                        tb.add(r, c, v);
                    } else {
                        tb.add_sym(r, c, v);
                    }
                };
                // U-U: tangential stiffness - (g - kappa mu) mass; alpha^2 slot D*mass
                add(
                    &mut tb,
                    ua,
                    ub,
                    [stiff - gmass + params.mu * kmass, dd * mass, mass],
                );
                // V-V boundary: + kappa nu mass
                add(&mut tb, va, vb, [params.nu * kmass, 0.0, 0.0]);
                // U-V exchange: - kappa sqrt(mu nu) mass, in both field blocks
                tb.add_sym(ua, vb, [-root_mn * kmass, 0.0, 0.0]);
                if a != bidx {
                    tb.add_sym(ub, va, [-root_mn * kmass, 0.0, 0.0]);
                }
            }
        }
    }

    if min_kappa < 0.0 {
        return Err(Error::InvalidParams(format!(
            "exchange coefficient is negative on the boundary (min {min_kappa:.3e})"
        )));
    }
    if !(max_kappa > 0.0) {
        return Err(Error::InvalidParams(
            "exchange coefficient vanishes identically on the boundary".into(),
        ));
    }

    let [base, mass2, b] = tb.build();
    Ok(PencilForms {
        layout,
        base,
        mass2,
        b,
        max_f,
        max_g,
        d_bulk: params.d_bulk,
        d_surf: params.d_surf,
    })
}

/// Assembles `A(alpha)` alone (one-shot convenience).
pub fn assemble_a(mesh: &Mesh, params: &ProblemParams, alpha: f64) -> Result<(CsrMatrix, DofLayout)> {
    let forms = PencilForms::assemble(mesh, params)?;
    Ok((forms.matrix_a(alpha), forms.layout))
}

/// Assembles `B` alone.
pub fn assemble_b(mesh: &Mesh, params: &ProblemParams) -> Result<(CsrMatrix, DofLayout)> {
    let forms = PencilForms::assemble(mesh, params)?;
    Ok((forms.b, forms.layout))
}

/// Writes a matrix in coordinate text form, one `row col value` per line with
/// 17 significant digits (for external inspection and diffing).
pub fn write_coo<W: Write>(m: &CsrMatrix, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{} {} {}", m.n, m.n, m.nnz())?;
    for i in 0..m.n {
        for k in m.row_ptr[i]..m.row_ptr[i + 1] {
            writeln!(out, "{} {} {:.16e}", i, m.col_idx[k], m.values[k])?;
        }
    }
    Ok(())
}
