//! Star-shaped cross-sections with Fourier-parametrized boundaries.
//!
//! A shape is `rho(theta) = a0 + sum_k (a_k cos(k theta) + b_k sin(k theta))`
//! with `rho > 0`. Boundary geometry (outward normal, curvature, arclength
//! density) is evaluated from the closed form, not from a discretization, so
//! meshes of any resolution see the exact curve.

mod mesh;

pub use mesh::{build_mesh, BoundaryNode, Mesh};

use crate::{Error, Result};
use std::f64::consts::PI;

/// Number of samples used for validity checks and boundary quadratures of
/// smooth integrands (trapezoid sums on trigonometric polynomials are exact
/// once the sample count exceeds the bandwidth).
pub const THETA_SAMPLES: usize = 4096;

/// Minimal admissible radius, relative to the mean radius `a0`.
pub const MIN_RHO_FACTOR: f64 = 1e-6;

/// Truncated Fourier description of a star-shaped boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierShape {
    a0: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

/// Exact boundary data at one angle.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryPoint {
    pub theta: f64,
    pub position: [f64; 2],
    /// Outward unit normal.
    pub normal: [f64; 2],
    /// Signed curvature, positive where the boundary is convex.
    pub curvature: f64,
    /// Arclength density `ds/dtheta = sqrt(rho^2 + rho'^2)`.
    pub arc_weight: f64,
}

impl FourierShape {
    /// Builds a shape from mean radius `a0` and mode coefficients
    /// (`a[k-1]`, `b[k-1]` weight `cos(k theta)`, `sin(k theta)`).
    /// Rejects shapes whose sampled radius dips below `MIN_RHO_FACTOR * a0`.
    pub fn new(a0: f64, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.len() != b.len() {
            return Err(Error::InvalidParams(format!(
                "cosine/sine coefficient counts differ: {} vs {}",
                a.len(),
                b.len()
            )));
        }
        if !a0.is_finite() || a.iter().chain(&b).any(|c| !c.is_finite()) {
            return Err(Error::InvalidParams("non-finite shape coefficient".into()));
        }
        let s = FourierShape { a0, a, b };
        let min_rho = s.min_rho();
        let required = MIN_RHO_FACTOR * a0;
        if !(a0 > 0.0) || min_rho <= required {
            return Err(Error::InvalidShape { min_rho, required });
        }
        Ok(s)
    }

    /// Circle of the given radius.
    pub fn disk(radius: f64) -> Result<Self> {
        Self::new(radius, Vec::new(), Vec::new())
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    /// Number of Fourier modes `M`.
    pub fn modes(&self) -> usize {
        self.a.len()
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.a
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.b
    }

    /// Radius and its first two derivatives at `theta`.
    pub fn eval(&self, theta: f64) -> (f64, f64, f64) {
        let mut rho = self.a0;
        let mut d1 = 0.0;
        let mut d2 = 0.0;
        for k in 1..=self.a.len() {
            let kf = k as f64;
            let (s, c) = (kf * theta).sin_cos();
            let ak = self.a[k - 1];
            let bk = self.b[k - 1];
            rho += ak * c + bk * s;
            d1 += kf * (bk * c - ak * s);
            d2 -= kf * kf * (ak * c + bk * s);
        }
        (rho, d1, d2)
    }

    /// Smallest sampled radius over a dense uniform grid.
    pub fn min_rho(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..THETA_SAMPLES {
            let theta = 2.0 * PI * i as f64 / THETA_SAMPLES as f64;
            let (rho, _, _) = self.eval(theta);
            m = m.min(rho);
        }
        m
    }

    /// Exact boundary geometry at `theta`.
    pub fn boundary_point(&self, theta: f64) -> BoundaryPoint {
        let (rho, d1, d2) = self.eval(theta);
        let (s, c) = theta.sin_cos();
        let w2 = rho * rho + d1 * d1;
        let w = w2.sqrt();
        // n = (rho * rhat - rho' * that) / w with rhat = (c, s), that = (-s, c)
        let normal = [(rho * c + d1 * s) / w, (rho * s - d1 * c) / w];
        let curvature = (rho * rho + 2.0 * d1 * d1 - rho * d2) / (w2 * w);
        BoundaryPoint {
            theta,
            position: [rho * c, rho * s],
            normal,
            curvature,
            arc_weight: w,
        }
    }

    /// Enclosed area `1/2 * integral of rho^2` (exact for the truncated series).
    pub fn area(&self) -> f64 {
        // trapezoid = exact: rho^2 is a trig polynomial of degree 2M << samples
        let mut acc = 0.0;
        for i in 0..THETA_SAMPLES {
            let theta = 2.0 * PI * i as f64 / THETA_SAMPLES as f64;
            let (rho, _, _) = self.eval(theta);
            acc += rho * rho;
        }
        0.5 * acc * 2.0 * PI / THETA_SAMPLES as f64
    }

    /// Boundary length (spectrally accurate quadrature).
    pub fn perimeter(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..THETA_SAMPLES {
            let theta = 2.0 * PI * i as f64 / THETA_SAMPLES as f64;
            let (rho, d1, _) = self.eval(theta);
            acc += (rho * rho + d1 * d1).sqrt();
        }
        acc * 2.0 * PI / THETA_SAMPLES as f64
    }

    /// Uniform dilation by `s > 0` (multiplies every coefficient).
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidParams(format!("scale factor must be positive, got {s}")));
        }
        FourierShape::new(
            self.a0 * s,
            self.a.iter().map(|c| c * s).collect(),
            self.b.iter().map(|c| c * s).collect(),
        )
    }

    /// Dilates onto the prescribed area.
    pub fn project_to_area(&self, target: f64) -> Result<Self> {
        if !(target > 0.0) {
            return Err(Error::InvalidParams(format!("target area must be positive, got {target}")));
        }
        self.scaled((target / self.area()).sqrt())
    }

    /// Dilates onto the prescribed perimeter.
    pub fn project_to_perimeter(&self, target: f64) -> Result<Self> {
        if !(target > 0.0) {
            return Err(Error::InvalidParams(format!(
                "target perimeter must be positive, got {target}"
            )));
        }
        self.scaled(target / self.perimeter())
    }

    /// Flat coefficient vector `(a0, a_1..a_M, b_1..b_M)`.
    pub fn coeff_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(1 + 2 * self.a.len());
        v.push(self.a0);
        v.extend_from_slice(&self.a);
        v.extend_from_slice(&self.b);
        v
    }

    /// Inverse of [`coeff_vector`](Self::coeff_vector); length must be `2M + 1`.
    pub fn from_coeff_vector(v: &[f64]) -> Result<Self> {
        if v.is_empty() || v.len() % 2 == 0 {
            return Err(Error::InvalidParams(format!(
                "coefficient vector length must be odd (2M+1), got {}",
                v.len()
            )));
        }
        let m = (v.len() - 1) / 2;
        FourierShape::new(v[0], v[1..1 + m].to_vec(), v[1 + m..].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Curvature of the parametric curve via central differences; independent
    // of the closed-form polar expression under test.
    fn fd_curvature(shape: &FourierShape, theta: f64) -> f64 {
        // step balances truncation against roundoff in the second difference
        let h = 1e-4;
        let pos = |t: f64| {
            let (rho, _, _) = shape.eval(t);
            [rho * t.cos(), rho * t.sin()]
        };
        let pm = pos(theta - h);
        let p0 = pos(theta);
        let pp = pos(theta + h);
        let d1 = [(pp[0] - pm[0]) / (2.0 * h), (pp[1] - pm[1]) / (2.0 * h)];
        let d2 = [
            (pp[0] - 2.0 * p0[0] + pm[0]) / (h * h),
            (pp[1] - 2.0 * p0[1] + pm[1]) / (h * h),
        ];
        (d1[0] * d2[1] - d1[1] * d2[0]) / (d1[0] * d1[0] + d1[1] * d1[1]).powf(1.5)
    }

    fn fd_normal(shape: &FourierShape, theta: f64) -> [f64; 2] {
        let h = 1e-6;
        let pos = |t: f64| {
            let (rho, _, _) = shape.eval(t);
            [rho * t.cos(), rho * t.sin()]
        };
        let pm = pos(theta - h);
        let pp = pos(theta + h);
        let t = [pp[0] - pm[0], pp[1] - pm[1]];
        let n = [t[1], -t[0]]; // tangent rotated -90 degrees points outward for CCW curves
        let len = n[0].hypot(n[1]);
        [n[0] / len, n[1] / len]
    }

    #[test]
    fn eval_spot_values() {
        let s = FourierShape::new(1.0, vec![0.0, 0.1], vec![0.0, 0.0]).unwrap();
        let (rho, d1, d2) = s.eval(0.0);
        assert!((rho - 1.1).abs() < 1e-15);
        assert!(d1.abs() < 1e-15);
        assert!((d2 + 0.4).abs() < 1e-15);

        let s = FourierShape::new(2.0, vec![0.0], vec![0.5]).unwrap();
        let (rho, d1, d2) = s.eval(std::f64::consts::FRAC_PI_2);
        assert!((rho - 2.5).abs() < 1e-15);
        assert!(d1.abs() < 1e-15);
        assert!((d2 + 0.5).abs() < 1e-15);
    }

    #[test]
    fn circle_geometry() {
        let s = FourierShape::disk(2.0).unwrap();
        assert!((s.area() - 4.0 * PI).abs() < 1e-12);
        assert!((s.perimeter() - 4.0 * PI).abs() < 1e-12);
        for theta in [0.0, 0.7, 2.0, -1.3] {
            let bp = s.boundary_point(theta);
            assert!((bp.curvature - 0.5).abs() < 1e-14);
            assert!((bp.arc_weight - 2.0).abs() < 1e-14);
            assert!((bp.normal[0] - theta.cos()).abs() < 1e-14);
            assert!((bp.normal[1] - theta.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn curvature_matches_finite_differences() {
        let s = FourierShape::new(1.0, vec![0.05, 0.1, -0.02], vec![0.03, 0.0, 0.04]).unwrap();
        for i in 0..32 {
            let theta = 2.0 * PI * i as f64 / 32.0;
            let bp = s.boundary_point(theta);
            let fd = fd_curvature(&s, theta);
            assert!(
                (bp.curvature - fd).abs() <= 1e-6 * (1.0 + fd.abs()),
                "theta={theta}: analytic {} vs fd {fd}",
                bp.curvature
            );
            let fdn = fd_normal(&s, theta);
            assert!((bp.normal[0] - fdn[0]).abs() < 1e-8);
            assert!((bp.normal[1] - fdn[1]).abs() < 1e-8);
        }
    }

    #[test]
    fn total_curvature_of_simple_closed_curve() {
        // integral of curvature over arclength is the total turning 2*pi
        let s = FourierShape::new(1.0, vec![0.0, 0.1, 0.0], vec![0.0, 0.0, 0.05]).unwrap();
        let mut acc = 0.0;
        for i in 0..THETA_SAMPLES {
            let theta = 2.0 * PI * i as f64 / THETA_SAMPLES as f64;
            let bp = s.boundary_point(theta);
            acc += bp.curvature * bp.arc_weight;
        }
        acc *= 2.0 * PI / THETA_SAMPLES as f64;
        assert!((acc - 2.0 * PI).abs() < 1e-10, "total turning {acc}");
    }

    #[test]
    fn ellipse_like_area_against_polygon_oracle() {
        let s = FourierShape::new(1.3, vec![0.2], vec![-0.1]).unwrap();
        // shoelace on a dense polygon
        let n = 200_000;
        let mut acc = 0.0;
        let mut prev = {
            let (rho, _, _) = s.eval(0.0);
            [rho, 0.0]
        };
        for i in 1..=n {
            let theta = 2.0 * PI * i as f64 / n as f64;
            let (rho, _, _) = s.eval(theta);
            let p = [rho * theta.cos(), rho * theta.sin()];
            acc += prev[0] * p[1] - prev[1] * p[0];
            prev = p;
        }
        let poly_area = 0.5 * acc;
        assert!(
            (s.area() - poly_area).abs() < 1e-8 * poly_area,
            "{} vs {poly_area}",
            s.area()
        );
    }

    #[test]
    fn scaling_laws() {
        let s = FourierShape::new(1.0, vec![0.1], vec![0.05]).unwrap();
        let s2 = s.scaled(2.5).unwrap();
        assert!((s2.area() - 2.5 * 2.5 * s.area()).abs() <= 1e-12 * s2.area());
        assert!((s2.perimeter() - 2.5 * s.perimeter()).abs() <= 1e-12 * s2.perimeter());

        let pa = s.project_to_area(PI).unwrap();
        assert!((pa.area() - PI).abs() <= 1e-12 * PI);
        let pp = s.project_to_perimeter(7.0).unwrap();
        assert!((pp.perimeter() - 7.0).abs() <= 1e-12 * 7.0);
    }

    #[test]
    fn rejects_degenerate_shapes() {
        // rho touches zero at theta = pi
        assert!(FourierShape::new(1.0, vec![1.0], vec![]).is_err());
        assert!(FourierShape::new(-1.0, vec![], vec![]).is_err());
        assert!(FourierShape::new(1.0, vec![0.5], vec![0.0, 0.0]).is_err()); // length mismatch
    }

    #[test]
    fn coeff_vector_round_trip() {
        let s = FourierShape::new(1.5, vec![0.1, 0.0], vec![-0.2, 0.05]).unwrap();
        let v = s.coeff_vector();
        assert_eq!(v, vec![1.5, 0.1, 0.0, -0.2, 0.05]);
        let s2 = FourierShape::from_coeff_vector(&v).unwrap();
        assert_eq!(s, s2);
    }
}
