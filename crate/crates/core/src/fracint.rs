//! Riemann–Liouville fractional integrals of broken polynomial fields.
//!
//! The left-sided integral of order μ along `x` at (x₀, y₀) is
//! (1/Γ(μ)) ∫_a^{x₀} (x₀ − s)^{μ−1} u(s, y₀) ds with `a` the lower edge of
//! the bounding box; the right-sided one runs from x₀ to the upper edge with
//! kernel (s − x₀)^{μ−1}. Fields are extended by zero outside the mesh.
//!
//! Along the ray each element segment is integrated in the distance
//! variable σ = |s − x₀|:
//! - the segment containing the target with Gauss–Jacobi absorbing σ^{μ−1};
//! - segments closer than their own length as a difference of two such
//!   Gauss–Jacobi integrals from the target, extrapolating the element
//!   polynomial (exact for polynomials);
//! - remaining segments with Gauss–Legendre, the kernel being smooth there.

use crate::error::{invalid, Error, Result};
use crate::linalg::DenseMatrix;
use crate::mesh::{Axis, Point, Side};
use crate::quadrature::{gauss_jacobi, gauss_legendre, QuadRule};
use crate::space::DgSpace;
use crate::special::{gamma, recip_gamma};
use rayon::prelude::*;

/// Fractional orders of the model problem.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FracParams {
    alpha: f64,
    beta: f64,
}

impl FracParams {
    /// Both orders must lie in (1, 2].
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v > 1.0 && v <= 2.0) {
                return Err(invalid(format!("{name} = {v} is outside (1, 2]")));
            }
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn alpha1(&self) -> f64 {
        2.0 - self.alpha
    }

    pub fn alpha2(&self) -> f64 {
        2.0 - self.beta
    }

    /// Integral order acting along `axis`.
    pub fn order(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.alpha1(),
            Axis::Y => self.alpha2(),
        }
    }
}

/// Γ(n+1)/Γ(n+1+μ)·(x−a)^{n+μ}, the left-sided integral of (s−a)^n.
pub fn rl_power_rule(n: u32, mu: f64, a: f64, x: f64) -> f64 {
    if x <= a {
        return if mu == 0.0 && n == 0 && x == a { 1.0 } else { 0.0 };
    }
    let ratio = if n < 20 {
        gamma(n as f64 + 1.0) * recip_gamma(n as f64 + 1.0 + mu)
    } else {
        (crate::special::ln_gamma(n as f64 + 1.0) - crate::special::ln_gamma(n as f64 + 1.0 + mu)).exp()
    };
    ratio * (x - a).powf(n as f64 + mu)
}

/// Polynomial Σ c_k (x − origin)^k.
#[derive(Clone, Debug, PartialEq)]
pub struct ShiftedPoly {
    pub origin: f64,
    pub coeffs: Vec<f64>,
}

impl ShiftedPoly {
    pub fn new(origin: f64, coeffs: Vec<f64>) -> Self {
        Self { origin, coeffs }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let t = x - self.origin;
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self.coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
        Self { origin: self.origin, coeffs }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.origin, other.origin, "shift origins differ");
        if self.coeffs.is_empty() || other.coeffs.is_empty() {
            return Self::new(self.origin, vec![]);
        }
        let mut c = vec![0.0; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::new(self.origin, c)
    }

    /// Left-sided integral of order μ from `origin`, termwise by the power rule.
    pub fn rl_integral(&self, mu: f64, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * rl_power_rule(k as u32, mu, self.origin, x))
            .sum()
    }
}

/// Forcing of the benchmark with u = (x²−1)³(y²−1)³ on (−1,1)².
pub fn forcing_example1(params: &FracParams, p: Point) -> f64 {
    // 6(x²−1)(5x²−1) in powers of t = x + 1.
    let g2 = ShiftedPoly::new(-1.0, vec![0.0, -48.0, 144.0, -120.0, 30.0]);
    let cube = |v: f64| (v * v - 1.0).powi(3);
    -cube(p.y) * g2.rl_integral(params.alpha1(), p.x) - cube(p.x) * g2.rl_integral(params.alpha2(), p.y)
}

/// Per-element coefficient blocks of a scalar field.
#[derive(Clone, Copy, Debug)]
pub struct BrokenField<'a> {
    space: &'a DgSpace,
    coeffs: &'a [f64],
}

impl<'a> BrokenField<'a> {
    pub fn new(space: &'a DgSpace, coeffs: &'a [f64]) -> Result<Self> {
        if coeffs.len() != space.ndofs() {
            return Err(invalid(format!(
                "field has {} coefficients, the space needs {}",
                coeffs.len(),
                space.ndofs()
            )));
        }
        Ok(Self { space, coeffs })
    }

    pub fn space(&self) -> &'a DgSpace {
        self.space
    }

    pub fn coeffs(&self) -> &'a [f64] {
        self.coeffs
    }

    pub fn value(&self, e: usize, p: Point) -> f64 {
        self.space.value(self.coeffs, e, p)
    }
}

/// Which quantity of a field is integrated along the ray.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    Value,
    Dx,
    Dy,
}

impl Component {
    pub fn derivative(axis: Axis) -> Self {
        match axis {
            Axis::X => Component::Dx,
            Axis::Y => Component::Dy,
        }
    }
}

/// One quadrature node of a ray integral; `point` may lie slightly outside
/// `element`, where the element polynomial is extrapolated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RayNode {
    pub element: usize,
    pub point: Point,
    pub weight: f64,
}

/// Quadrature machinery for ray integrals of one fixed order μ.
#[derive(Clone, Debug)]
pub struct RayIntegrator<'a> {
    space: &'a DgSpace,
    mu: f64,
    jacobi: QuadRule,
    far: QuadRule,
    inv_gamma: f64,
}

impl<'a> RayIntegrator<'a> {
    pub fn new(space: &'a DgSpace, mu: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&mu) {
            return Err(invalid(format!("integral order {mu} outside [0, 1]")));
        }
        let n = space.order();
        let jb = if mu > 0.0 { mu - 1.0 } else { 0.0 };
        Ok(Self {
            space,
            mu,
            jacobi: gauss_jacobi(n + 3, 0.0, jb)?,
            far: gauss_legendre(n + 8)?,
            inv_gamma: recip_gamma(mu),
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// ∫_0^D σ^{μ−1} g(s₀ + dir·σ) dσ appended as nodes with factor `sign`.
    fn push_tail(&self, out: &mut Vec<RayNode>, e: usize, axis: Axis, s0: f64, t0: f64, dir: f64, d: f64, sign: f64) {
        let half = 0.5 * d;
        let scale = sign * half.powf(self.mu) * self.inv_gamma;
        for (x, w) in self.jacobi.nodes.iter().zip(&self.jacobi.weights) {
            let sigma = half * (1.0 + x);
            out.push(RayNode { element: e, point: Point::from_axis(axis, s0 + dir * sigma, t0), weight: scale * w });
        }
    }

    /// Quadrature nodes whose weighted sum of field values is the integral at
    /// `target`. `hint` fixes the element the target belongs to.
    pub fn nodes(&self, target: Point, axis: Axis, side: Side, hint: Option<usize>) -> Result<Vec<RayNode>> {
        let mesh = self.space.mesh();
        if self.mu == 0.0 {
            let element = match hint {
                Some(h) => h,
                None => mesh.locate(target).ok_or(Error::OutsideMesh(target.x, target.y))?,
            };
            return Ok(vec![RayNode { element, point: target, weight: 1.0 }]);
        }
        let segs = mesh.trace_axis_ray(target, axis, side, hint)?;
        let s0 = target.along(axis);
        let t0 = target.across(axis);
        let mut out = Vec::with_capacity(segs.len() * (self.far.len() + 2 * self.jacobi.len()));
        for seg in &segs {
            let (near, dir) = match side {
                Side::Left => (seg.end, -1.0),
                Side::Right => (seg.start, 1.0),
            };
            let d = (near - s0).abs();
            let len = seg.length();
            if d == 0.0 {
                self.push_tail(&mut out, seg.element, axis, s0, t0, dir, len, 1.0);
            } else if d < len {
                self.push_tail(&mut out, seg.element, axis, s0, t0, dir, d + len, 1.0);
                self.push_tail(&mut out, seg.element, axis, s0, t0, dir, d, -1.0);
            } else {
                let half = 0.5 * len;
                for (x, w) in self.far.nodes.iter().zip(&self.far.weights) {
                    let sigma = d + half * (1.0 + x);
                    out.push(RayNode {
                        element: seg.element,
                        point: Point::from_axis(axis, s0 + dir * sigma, t0),
                        weight: half * w * sigma.powf(self.mu - 1.0) * self.inv_gamma,
                    });
                }
            }
        }
        Ok(out)
    }

    /// Fractional integral of a component of the global field `u` at `target`.
    pub fn integrate(
        &self,
        u: &[f64],
        target: Point,
        axis: Axis,
        side: Side,
        hint: Option<usize>,
        comp: Component,
    ) -> Result<f64> {
        let mut acc = 0.0;
        for n in self.nodes(target, axis, side, hint)? {
            let (v, g) = self.space.value_grad(u, n.element, n.point);
            acc += n.weight
                * match comp {
                    Component::Value => v,
                    Component::Dx => g[0],
                    Component::Dy => g[1],
                };
        }
        Ok(acc)
    }

    /// Integrals I^μ(component of φ_j)(target) of every global mode,
    /// grouped by element in order of first appearance along the ray.
    pub fn mode_integrals(
        &self,
        target: Point,
        axis: Axis,
        side: Side,
        hint: Option<usize>,
        comp: Component,
    ) -> Result<Vec<(usize, Vec<f64>)>> {
        let np = self.space.np();
        let (mut v, mut gx, mut gy) = (vec![0.0; np], vec![0.0; np], vec![0.0; np]);
        let mut out: Vec<(usize, Vec<f64>)> = Vec::new();
        for n in self.nodes(target, axis, side, hint)? {
            let vals = match comp {
                Component::Value => {
                    self.space.modes_at(n.element, n.point, &mut v);
                    &v
                }
                _ => {
                    self.space.mode_grads_at(n.element, n.point, &mut v, &mut gx, &mut gy);
                    if comp == Component::Dx {
                        &gx
                    } else {
                        &gy
                    }
                }
            };
            if out.last().is_none_or(|(e, _)| *e != n.element) {
                out.push((n.element, vec![0.0; np]));
            }
            let acc = &mut out.last_mut().expect("just pushed").1;
            for (a, m) in acc.iter_mut().zip(vals.iter()) {
                *a += n.weight * m;
            }
        }
        Ok(out)
    }
}

/// Pointwise fractional integral of a broken field.
pub fn rl_integral_point(field: &BrokenField, mu: f64, target: Point, axis: Axis, side: Side) -> Result<f64> {
    RayIntegrator::new(field.space(), mu)?.integrate(field.coeffs(), target, axis, side, None, Component::Value)
}

/// Outer quadrature used when testing fractional integrals against the
/// basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OuterRule {
    /// The basis volume rule (exact to degree 2N+2 for polynomials).
    Volume,
    /// Tensor rules on axis-aligned sub-triangles, geometrically graded
    /// towards all sub-triangle edges. Resolves the (x − x_face)^μ
    /// behaviour of fractional integrals at element faces; intended for
    /// reference computations.
    Graded { levels: usize, points: usize },
}

const GRADING: f64 = 0.15;

fn graded_unit(levels: usize, points: usize) -> Result<Vec<(f64, f64)>> {
    let gl = gauss_legendre(points)?;
    let mut breaks = vec![0.0];
    for k in (1..=levels).rev() {
        breaks.push(0.5 * GRADING.powi(k as i32));
    }
    breaks.push(0.5);
    let lower = breaks.clone();
    breaks.extend(lower.iter().rev().skip(1).map(|b| 1.0 - b));
    let mut out = Vec::new();
    for w in breaks.windows(2) {
        let half = 0.5 * (w[1] - w[0]);
        for (x, wt) in gl.nodes.iter().zip(&gl.weights) {
            out.push((w[0] + half * (1.0 + x), half * wt));
        }
    }
    Ok(out)
}

/// Outer quadrature points and physical weights on element `e`.
pub fn outer_points(space: &DgSpace, e: usize, axis: Axis, rule: OuterRule) -> Result<Vec<(Point, f64)>> {
    let map = space.map(e);
    match rule {
        OuterRule::Volume => {
            let r = space.basis().volume_rule();
            Ok(r
                .points
                .iter()
                .zip(&r.weights)
                .map(|(p, w)| (map.to_physical(p[0], p[1]), w * map.det()))
                .collect())
        }
        OuterRule::Graded { levels, points } => {
            let unit = graded_unit(levels, points)?;
            let mut v = space.mesh().element_points(e);
            v.sort_by(|a, b| a.across(axis).total_cmp(&b.across(axis)));
            let (lo, mid, hi) = (v[0], v[1], v[2]);
            let lam = (mid.across(axis) - lo.across(axis)) / (hi.across(axis) - lo.across(axis));
            let p = Point::new(lo.x + lam * (hi.x - lo.x), lo.y + lam * (hi.y - lo.y));
            let mut out = Vec::new();
            for apex in [lo, hi] {
                let cross = (mid.x - apex.x) * (p.y - mid.y) - (mid.y - apex.y) * (p.x - mid.x);
                if cross.abs() <= 1e-14 * map.det() {
                    continue;
                }
                for &(tau, wt) in &unit {
                    for &(xi, wx) in &unit {
                        let b = Point::new(mid.x + xi * (p.x - mid.x), mid.y + xi * (p.y - mid.y));
                        let q = Point::new(apex.x + tau * (b.x - apex.x), apex.y + tau * (b.y - apex.y));
                        out.push((q, wt * wx * tau * cross.abs()));
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Dense matrix F[i][j] = (I^μ φ_j, φ_i)_Ω for one axis and side.
#[derive(Clone, Debug)]
pub struct FracCoupling {
    pub mu: f64,
    pub axis: Axis,
    pub side: Side,
    pub matrix: DenseMatrix,
}

/// Assembles the fractional coupling with the basis volume rule outside.
pub fn assemble_frac_coupling(space: &DgSpace, mu: f64, axis: Axis, side: Side) -> Result<FracCoupling> {
    assemble_frac_coupling_with(space, mu, axis, side, OuterRule::Volume)
}

pub fn assemble_frac_coupling_with(
    space: &DgSpace,
    mu: f64,
    axis: Axis,
    side: Side,
    outer: OuterRule,
) -> Result<FracCoupling> {
    let n = space.ndofs();
    let np = space.np();
    if mu == 0.0 && outer == OuterRule::Volume {
        return Ok(FracCoupling { mu, axis, side, matrix: DenseMatrix::identity(n) });
    }
    let integ = RayIntegrator::new(space, mu)?;
    let mut matrix = DenseMatrix::zeros(n, n);
    matrix
        .as_mut_slice()
        .par_chunks_mut(np * n)
        .enumerate()
        .try_for_each(|(e, block)| -> Result<()> {
            let mut phi = vec![0.0; np];
            for (x, w) in outer_points(space, e, axis, outer)? {
                space.modes_at(e, x, &mut phi);
                for (ej, vals) in integ.mode_integrals(x, axis, side, Some(e), Component::Value)? {
                    let cols = space.dofs(ej);
                    for (i, pi) in phi.iter().enumerate() {
                        let c = w * pi;
                        let row = &mut block[i * n..(i + 1) * n];
                        for (r, mv) in row[cols.clone()].iter_mut().zip(&vals) {
                            *r += c * mv;
                        }
                    }
                }
            }
            Ok(())
        })?;
    Ok(FracCoupling { mu, axis, side, matrix })
}
