//! Orthonormal modal basis on triangles.
//!
//! The reference triangle has vertices (−1,−1), (1,−1), (−1,1). Modes are
//! the collapsed-coordinate Jacobi products of Dubiner type, orthonormal on
//! the reference triangle. On a physical element they are divided by
//! √det(J), so the physical mass matrix is the identity as well.

use crate::error::{invalid, Error, Result};
use crate::mesh::{Mesh, Point};
use crate::quadrature::{gauss_jacobi, gauss_legendre};
use crate::special::gamma;

pub const MAX_ORDER: usize = 8;

/// Reference coordinates of the three vertices.
pub const REF_VERTICES: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]];

/// Number of modes of total degree ≤ `order`.
pub fn num_modes(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

/// Orthonormal Jacobi polynomials P_0..=P_n with weight (1−x)^a (1+x)^b.
fn jacobi_normalized(x: f64, a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    let g0 = 2f64.powf(a + b + 1.0) / (a + b + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(a + b + 1.0);
    p.push(1.0 / g0.sqrt());
    if n == 0 {
        return p;
    }
    let g1 = (a + 1.0) * (b + 1.0) / (a + b + 3.0) * g0;
    p.push(((a + b + 2.0) * x / 2.0 + (a - b) / 2.0) / g1.sqrt());
    let mut a_old = 2.0 / (2.0 + a + b) * ((a + 1.0) * (b + 1.0) / (a + b + 3.0)).sqrt();
    for i in 1..n {
        let fi = i as f64;
        let h1 = 2.0 * fi + a + b;
        let a_new = 2.0 / (h1 + 2.0)
            * ((fi + 1.0) * (fi + 1.0 + a + b) * (fi + 1.0 + a) * (fi + 1.0 + b) / (h1 + 1.0) / (h1 + 3.0)).sqrt();
        let b_new = -(a * a - b * b) / h1 / (h1 + 2.0);
        let next = (-a_old * p[i - 1] + (x - b_new) * p[i]) / a_new;
        p.push(next);
        a_old = a_new;
    }
    p
}

fn jacobi_value(x: f64, a: f64, b: f64, n: usize) -> f64 {
    jacobi_normalized(x, a, b, n)[n]
}

fn jacobi_derivative(x: f64, a: f64, b: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        let nf = n as f64;
        (nf * (nf + a + b + 1.0)).sqrt() * jacobi_value(x, a + 1.0, b + 1.0, n - 1)
    }
}

/// Mode exponents (i, j), i in the collapsed `a` direction.
fn mode_indices(order: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(num_modes(order));
    for i in 0..=order {
        for j in 0..=order - i {
            out.push((i, j));
        }
    }
    out
}

/// Quadrature rule on the reference triangle; weights sum to its area 2.
#[derive(Clone, Debug)]
pub struct TriangleRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Collapsed Gauss rule with `n` points per direction: Gauss–Legendre in
    /// `a`, Gauss–Jacobi(1, 0) in `b`. Exact to degree 2n−1.
    pub fn collapsed(n: usize) -> Result<Self> {
        let ga = gauss_legendre(n)?;
        let gb = gauss_jacobi(n, 1.0, 0.0)?;
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (&b, &wb) in gb.nodes.iter().zip(&gb.weights) {
            for (&a, &wa) in ga.nodes.iter().zip(&ga.weights) {
                points.push([0.5 * (1.0 + a) * (1.0 - b) - 1.0, b]);
                weights.push(0.5 * wa * wb);
            }
        }
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Basis values and reference gradients tabulated on a set of points,
/// stored row-major (`point × mode`).
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub np: usize,
    pub values: Vec<f64>,
    pub dr: Vec<f64>,
    pub ds: Vec<f64>,
}

impl Tabulation {
    pub fn row(&self, q: usize) -> &[f64] {
        &self.values[q * self.np..(q + 1) * self.np]
    }

    pub fn dr_row(&self, q: usize) -> &[f64] {
        &self.dr[q * self.np..(q + 1) * self.np]
    }

    pub fn ds_row(&self, q: usize) -> &[f64] {
        &self.ds[q * self.np..(q + 1) * self.np]
    }
}

#[derive(Clone, Debug)]
pub struct ReferenceBasis {
    order: usize,
    modes: Vec<(usize, usize)>,
    volume: TriangleRule,
    volume_tab: Tabulation,
    face_nodes: Vec<f64>,
    face_weights: Vec<f64>,
    face_tab: [Tabulation; 3],
}

impl ReferenceBasis {
    /// Builds the basis of total degree `order` with a volume rule exact to
    /// degree 2N+2 and N+2 Gauss–Legendre points per face.
    pub fn new(order: usize) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(invalid(format!("polynomial order {order} outside 1..={MAX_ORDER}")));
        }
        let modes = mode_indices(order);
        let volume = TriangleRule::collapsed(order + 2)?;
        let face = gauss_legendre(order + 2)?;
        let mut basis = Self {
            order,
            modes,
            volume_tab: Tabulation { np: 0, values: vec![], dr: vec![], ds: vec![] },
            volume,
            face_nodes: face.nodes,
            face_weights: face.weights,
            face_tab: std::array::from_fn(|_| Tabulation { np: 0, values: vec![], dr: vec![], ds: vec![] }),
        };
        basis.volume_tab = basis.tabulate(&basis.volume.points);
        for f in 0..3 {
            let pts: Vec<[f64; 2]> = basis.face_nodes.iter().map(|&t| face_point(f, t)).collect();
            basis.face_tab[f] = basis.tabulate(&pts);
        }
        Ok(basis)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn np(&self) -> usize {
        self.modes.len()
    }

    pub fn volume_rule(&self) -> &TriangleRule {
        &self.volume
    }

    pub fn volume_table(&self) -> &Tabulation {
        &self.volume_tab
    }

    /// Gauss–Legendre nodes on [−1, 1] used on every face.
    pub fn face_nodes(&self) -> &[f64] {
        &self.face_nodes
    }

    pub fn face_weights(&self) -> &[f64] {
        &self.face_weights
    }

    /// Traces on local face `f`, at the points returned by [`face_point`].
    pub fn face_table(&self, f: usize) -> &Tabulation {
        &self.face_tab[f]
    }

    /// Mode values at a reference point. The evaluation is division-free,
    /// so points outside the triangle are valid polynomial extrapolations.
    pub fn eval(&self, r: f64, s: f64, out: &mut [f64]) {
        let np = self.np();
        let (mut dr, mut ds) = (vec![0.0; np], vec![0.0; np]);
        self.eval_grad(r, s, out, &mut dr, &mut ds);
    }

    /// Mode values and reference gradients at a reference point.
    ///
    /// The collapsed factor P_i(a)·((1−s)/2)^i is the homogenised Legendre
    /// polynomial in x = (2r + 1 + s)/2, y = (1 − s)/2, generated by
    /// (i+1) L_{i+1} = (2i+1) x L_i − i y² L_{i−1}.
    pub fn eval_grad(&self, r: f64, s: f64, val: &mut [f64], dr: &mut [f64], ds: &mut [f64]) {
        let n = self.order;
        let x = 0.5 * (2.0 * r + 1.0 + s);
        let y = 0.5 * (1.0 - s);
        // L_i and its derivatives in r and s.
        let mut l = vec![[0.0; 3]; n + 1];
        l[0] = [1.0, 0.0, 0.0];
        if n >= 1 {
            l[1] = [x, 1.0, 0.5];
        }
        for i in 1..n {
            let fi = i as f64;
            let (c1, c2) = ((2.0 * fi + 1.0) / (fi + 1.0), fi / (fi + 1.0));
            let (a, b) = (l[i], l[i - 1]);
            l[i + 1] = [
                c1 * x * a[0] - c2 * y * y * b[0],
                c1 * (a[0] + x * a[1]) - c2 * y * y * b[1],
                c1 * (0.5 * a[0] + x * a[2]) - c2 * (-y * b[0] + y * y * b[2]),
            ];
        }
        for (k, &(i, j)) in self.modes.iter().enumerate() {
            let c = (2.0 * i as f64 + 1.0).sqrt() * 2f64.powi(i as i32);
            let alpha = 2.0 * i as f64 + 1.0;
            let q = jacobi_value(s, alpha, 0.0, j);
            let dq = jacobi_derivative(s, alpha, 0.0, j);
            val[k] = c * l[i][0] * q;
            dr[k] = c * l[i][1] * q;
            ds[k] = c * (l[i][2] * q + l[i][0] * dq);
        }
    }

    /// Tabulates values and gradients at arbitrary reference points.
    pub fn tabulate(&self, points: &[[f64; 2]]) -> Tabulation {
        let np = self.np();
        let mut t = Tabulation {
            np,
            values: vec![0.0; points.len() * np],
            dr: vec![0.0; points.len() * np],
            ds: vec![0.0; points.len() * np],
        };
        for (q, p) in points.iter().enumerate() {
            let rng = q * np..(q + 1) * np;
            let (v, rest) = (&mut t.values[rng.clone()], (&mut t.dr[rng.clone()], &mut t.ds[rng]));
            self.eval_grad(p[0], p[1], v, rest.0, rest.1);
        }
        t
    }
}

/// Reference point at parameter `t ∈ [−1, 1]` along local face `f`, running
/// from vertex `f` to vertex `(f + 1) % 3`.
pub fn face_point(f: usize, t: f64) -> [f64; 2] {
    let a = REF_VERTICES[f];
    let b = REF_VERTICES[(f + 1) % 3];
    let (wa, wb) = (0.5 * (1.0 - t), 0.5 * (1.0 + t));
    [wa * a[0] + wb * b[0], wa * a[1] + wb * b[1]]
}

/// Affine map from the reference triangle onto a physical element.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementMap {
    origin: Point,
    /// Columns ∂x/∂r and ∂x/∂s.
    jac: [[f64; 2]; 2],
    /// Rows ∇r and ∇s in physical coordinates.
    inv: [[f64; 2]; 2],
    det: f64,
}

impl ElementMap {
    pub fn from_vertices(v: [Point; 3]) -> Result<Self> {
        let jac = [
            [0.5 * (v[1].x - v[0].x), 0.5 * (v[2].x - v[0].x)],
            [0.5 * (v[1].y - v[0].y), 0.5 * (v[2].y - v[0].y)],
        ];
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !(det > 0.0) {
            return Err(Error::Degenerate(format!("element map has determinant {det}")));
        }
        let inv = [
            [jac[1][1] / det, -jac[0][1] / det],
            [-jac[1][0] / det, jac[0][0] / det],
        ];
        Ok(Self { origin: v[0], jac, inv, det })
    }

    pub fn new(mesh: &Mesh, e: usize) -> Self {
        // Mesh construction guarantees positive orientation.
        Self::from_vertices(mesh.element_points(e)).expect("mesh elements are non-degenerate")
    }

    /// Maps for every element of `mesh`.
    pub fn all(mesh: &Mesh) -> Vec<Self> {
        (0..mesh.num_elements()).map(|e| Self::new(mesh, e)).collect()
    }

    pub fn det(&self) -> f64 {
        self.det
    }

    /// Factor turning reference modes into physical orthonormal modes.
    pub fn scale(&self) -> f64 {
        1.0 / self.det.sqrt()
    }

    pub fn jacobian(&self) -> [[f64; 2]; 2] {
        self.jac
    }

    pub fn inverse(&self) -> [[f64; 2]; 2] {
        self.inv
    }

    pub fn to_physical(&self, r: f64, s: f64) -> Point {
        let (dr, ds) = (r + 1.0, s + 1.0);
        Point::new(
            self.origin.x + self.jac[0][0] * dr + self.jac[0][1] * ds,
            self.origin.y + self.jac[1][0] * dr + self.jac[1][1] * ds,
        )
    }

    pub fn to_reference(&self, p: Point) -> [f64; 2] {
        let (dx, dy) = (p.x - self.origin.x, p.y - self.origin.y);
        [
            self.inv[0][0] * dx + self.inv[0][1] * dy - 1.0,
            self.inv[1][0] * dx + self.inv[1][1] * dy - 1.0,
        ]
    }

    /// Physical gradient from reference derivatives.
    pub fn gradient(&self, dr: f64, ds: f64) -> [f64; 2] {
        [
            dr * self.inv[0][0] + ds * self.inv[1][0],
            dr * self.inv[0][1] + ds * self.inv[1][1],
        ]
    }
}

/// Whether a reference point lies in the closed reference triangle.
pub fn in_reference(rs: [f64; 2], tol: f64) -> bool {
    rs[0] >= -1.0 - tol && rs[1] >= -1.0 - tol && rs[0] + rs[1] <= tol
}

/// Value and physical gradient of `coeffs` at a physical point of the element.
pub fn evaluate_field(
    map: &ElementMap,
    basis: &ReferenceBasis,
    coeffs: &[f64],
    point: Point,
) -> Result<(f64, [f64; 2])> {
    let rs = map.to_reference(point);
    if !in_reference(rs, 1e-10) {
        return Err(Error::OutsideMesh(point.x, point.y));
    }
    let np = basis.np();
    let (mut v, mut dr, mut ds) = (vec![0.0; np], vec![0.0; np], vec![0.0; np]);
    basis.eval_grad(rs[0], rs[1], &mut v, &mut dr, &mut ds);
    let sc = map.scale();
    let dot = |t: &[f64]| t.iter().zip(coeffs).map(|(a, b)| a * b).sum::<f64>() * sc;
    Ok((dot(&v), map.gradient(dot(&dr), dot(&ds))))
}

/// L²-orthogonal projection of `f` onto the element's polynomial space.
pub fn project(map: &ElementMap, basis: &ReferenceBasis, f: impl Fn(Point) -> f64) -> Vec<f64> {
    let np = basis.np();
    let rule = basis.volume_rule();
    let tab = basis.volume_table();
    let mut c = vec![0.0; np];
    for (q, p) in rule.points.iter().enumerate() {
        let w = rule.weights[q] * f(map.to_physical(p[0], p[1]));
        for (cj, phi) in c.iter_mut().zip(tab.row(q)) {
            *cj += w * phi;
        }
    }
    let sc = map.det() * map.scale();
    c.iter_mut().for_each(|v| *v *= sc);
    c
}

/// Projects `f` onto every element of `mesh`, element-major.
pub fn project_global(mesh: &Mesh, basis: &ReferenceBasis, f: impl Fn(Point) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(mesh.num_elements() * basis.np());
    for map in ElementMap::all(mesh) {
        out.extend(project(&map, basis, &f));
    }
    out
}
