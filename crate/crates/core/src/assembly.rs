//! Global DG operators for the central, LDG and interior-penalty fluxes.
//!
//! The mixed system p = ∇u − L(u), q = I^ᾱ p, (q, ∇v) − ⟨q̂·n, v⟩ = (f, v)
//! is eliminated algebraically: with an orthonormal basis the mass matrix is
//! the identity, so for the central and LDG fluxes
//!
//!   A = G_xᵀ F_x G_x + G_yᵀ F_y G_y + S,
//!
//! where G = D − L is the discrete gradient, F the fractional coupling and S
//! the jump penalty. The interior-penalty operator is assembled in primal
//! form with the fractional integrals evaluated pointwise on the faces.
//!
//! On an interior edge the scalar jump is J(u) = u⁻ − u⁺, so [[u]] = J n⁻,
//! and the LDG switch enters through c = η·n⁻ ∈ {−½, ½}.

use crate::basis::TriangleRule;
use crate::error::{invalid, Result};
use crate::fracint::{assemble_frac_coupling_with, Component, OuterRule, FracCoupling, FracParams, RayIntegrator};
use crate::linalg::{CsrMatrix, DenseMatrix};
use crate::mesh::{Axis, Edge, Point, Side};
use crate::space::DgSpace;
use rayon::prelude::*;
use std::io::Write;
use std::path::Path;

/// How the LDG switch η picks the upwind side of an interior edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EtaRule {
    /// û takes the trace of the element with the smaller id.
    MinId,
    /// û takes the trace of the element lying against `direction`, i.e. the
    /// minus side when n⁻ · direction > 0 (ties go to the minus side).
    Direction([f64; 2]),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FluxScheme {
    Central,
    Ldg(EtaRule),
    Ip,
}

impl FluxScheme {
    pub fn name(&self) -> &'static str {
        match self {
            FluxScheme::Central => "central",
            FluxScheme::Ldg(_) => "ldg",
            FluxScheme::Ip => "ip",
        }
    }
}

/// c = η·n⁻ on every edge (zero on the boundary and for non-LDG schemes).
pub fn eta_coefficients(space: &DgSpace, scheme: FluxScheme) -> Vec<f64> {
    space
        .mesh()
        .edges()
        .iter()
        .map(|e| match (scheme, e.is_boundary()) {
            (FluxScheme::Ldg(rule), false) => match rule {
                EtaRule::MinId => 0.5,
                EtaRule::Direction(d) => {
                    if e.normal[0] * d[0] + e.normal[1] * d[1] >= 0.0 {
                        0.5
                    } else {
                        -0.5
                    }
                }
            },
            _ => 0.0,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PenaltyLaw {
    /// λ = λ̃ / h with h the smaller adjacent element diameter.
    Analysis,
    /// λ = λ̃ on every edge.
    Constant,
    /// λ = λ̃ / h^{γ−1} with γ = max(α, β), the scaling of the fractional
    /// flux terms; reduces to the analysis law at α = β = 2.
    Fractional,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PenaltyConfig {
    pub lambda_tilde: f64,
    pub law: PenaltyLaw,
}

impl PenaltyConfig {
    pub fn new(lambda_tilde: f64, law: PenaltyLaw) -> Result<Self> {
        if !(lambda_tilde > 0.0 && lambda_tilde.is_finite()) {
            return Err(invalid(format!("penalty {lambda_tilde} must be positive")));
        }
        Ok(Self { lambda_tilde, law })
    }

    /// Default stabilization for a scheme. Central and LDG are coercive for
    /// any λ > 0 and keep the optimal L² order only with an h-independent
    /// penalty. The symmetric interior penalty form needs λ ∝ 1/h with a
    /// trace-inverse sized constant, taken as 10 (N+1)²/4.
    pub fn default_for(scheme: FluxScheme, order: usize) -> Self {
        match scheme {
            FluxScheme::Central | FluxScheme::Ldg(_) => Self { lambda_tilde: 1.0, law: PenaltyLaw::Constant },
            FluxScheme::Ip => {
                let n = order as f64 + 1.0;
                Self { lambda_tilde: 2.5 * n * n, law: PenaltyLaw::Analysis }
            }
        }
    }

    /// Penalty on an edge adjacent to elements of the given diameters.
    pub fn edge_value(&self, h_minus: f64, h_plus: Option<f64>, params: &FracParams) -> f64 {
        let h = h_plus.map_or(h_minus, |hp| hp.min(h_minus));
        match self.law {
            PenaltyLaw::Constant => self.lambda_tilde,
            PenaltyLaw::Analysis => self.lambda_tilde / h,
            PenaltyLaw::Fractional => self.lambda_tilde / h.powf(params.alpha().max(params.beta()) - 1.0),
        }
    }
}

/// Quadrature point on an edge with the physical traces of both sides.
#[derive(Clone, Debug)]
pub struct FacePoint {
    pub point: Point,
    pub weight: f64,
    pub minus: Vec<f64>,
    pub plus: Option<Vec<f64>>,
}

/// Face quadrature of edge `id` (Gauss–Legendre with N+2 points).
pub fn face_points(space: &DgSpace, id: usize) -> Vec<FacePoint> {
    let edge = &space.mesh().edges()[id];
    let basis = space.basis();
    let np = space.np();
    let tab = basis.face_table(edge.minus_face);
    let sc = space.map(edge.minus).scale();
    (0..basis.face_nodes().len())
        .map(|q| {
            let point = space.face_point(edge.minus, edge.minus_face, q);
            let minus = tab.row(q).iter().map(|v| v * sc).collect();
            let plus = edge.plus.map(|e| {
                let mut v = vec![0.0; np];
                space.modes_at(e, point, &mut v);
                v
            });
            FacePoint { point, weight: 0.5 * edge.length * basis.face_weights()[q], minus, plus }
        })
        .collect()
}

/// Penalty values per edge.
pub fn edge_penalties(space: &DgSpace, penalty: &PenaltyConfig, params: &FracParams) -> Vec<f64> {
    let els = space.mesh().elements();
    space
        .mesh()
        .edges()
        .iter()
        .map(|e| penalty.edge_value(els[e.minus].diameter, e.plus.map(|p| els[p].diameter), params))
        .collect()
}

/// Per-axis sparse operators.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisPair {
    pub x: CsrMatrix,
    pub y: CsrMatrix,
}

impl AxisPair {
    pub fn get(&self, axis: Axis) -> &CsrMatrix {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
        }
    }
}

/// Broken derivative matrices: column j holds the coefficients of ∂φ_j.
pub fn assemble_derivatives(space: &DgSpace) -> AxisPair {
    let np = space.np();
    let n = space.ndofs();
    let rule = space.basis().volume_rule();
    let tab = space.basis().volume_table();
    let (mut tx, mut ty) = (Vec::new(), Vec::new());
    for e in 0..space.mesh().num_elements() {
        let map = space.map(e);
        let sc = map.scale();
        let base = e * np;
        let mut dx = vec![0.0; np * np];
        let mut dy = vec![0.0; np * np];
        for q in 0..rule.len() {
            let w = rule.weights[q] * map.det() * sc * sc;
            let phi = tab.row(q);
            for j in 0..np {
                let g = map.gradient(tab.dr_row(q)[j], tab.ds_row(q)[j]);
                for k in 0..np {
                    dx[k * np + j] += w * phi[k] * g[0];
                    dy[k * np + j] += w * phi[k] * g[1];
                }
            }
        }
        for k in 0..np {
            for j in 0..np {
                tx.push((base + k, base + j, dx[k * np + j]));
                ty.push((base + k, base + j, dy[k * np + j]));
            }
        }
    }
    AxisPair { x: CsrMatrix::from_triplets(n, n, tx), y: CsrMatrix::from_triplets(n, n, ty) }
}

/// Lifting operator: (L(θ), π) = ∮_Γb θ n·π + ∮_Γi {π}·[[θ]] − ∮_Γi (η·[[θ]])[[π]].
/// `eta[e]` is c = η·n⁻ for edge `e`.
pub fn assemble_lifting(space: &DgSpace, eta: &[f64]) -> AxisPair {
    let np = space.np();
    let n = space.ndofs();
    let (mut tx, mut ty) = (Vec::new(), Vec::new());
    for (id, edge) in space.mesh().edges().iter().enumerate() {
        let nrm = edge.normal;
        let c = eta[id];
        for fp in face_points(space, id) {
            // (dof offset, test weight, trial sign, traces) for each side.
            let mut sides = vec![(edge.minus * np, 0.5 - c, 1.0, &fp.minus)];
            if let (Some(pe), Some(pv)) = (edge.plus, fp.plus.as_ref()) {
                sides.push((pe * np, 0.5 + c, -1.0, pv));
            } else {
                sides[0].1 = 1.0;
            }
            for &(ko, kw, _, kv) in &sides {
                for &(jo, _, js, jv) in &sides {
                    for k in 0..np {
                        for j in 0..np {
                            let v = fp.weight * kw * kv[k] * js * jv[j];
                            tx.push((ko + k, jo + j, v * nrm[0]));
                            ty.push((ko + k, jo + j, v * nrm[1]));
                        }
                    }
                }
            }
        }
    }
    AxisPair { x: CsrMatrix::from_triplets(n, n, tx), y: CsrMatrix::from_triplets(n, n, ty) }
}

/// Discrete gradient G = D − L for the scheme's û (boundary û = 0).
pub fn assemble_gradient_op(space: &DgSpace, scheme: FluxScheme) -> AxisPair {
    let d = assemble_derivatives(space);
    let l = assemble_lifting(space, &eta_coefficients(space, scheme));
    let sub = |a: &CsrMatrix, b: &CsrMatrix| {
        let mut t = Vec::with_capacity(a.nnz() + b.nnz());
        for i in 0..a.rows() {
            t.extend(a.row(i).map(|(j, v)| (i, j, v)));
            t.extend(b.row(i).map(|(j, v)| (i, j, -v)));
        }
        CsrMatrix::from_triplets(a.rows(), a.cols(), t)
    };
    AxisPair { x: sub(&d.x, &l.x), y: sub(&d.y, &l.y) }
}

/// Jump penalty S: ∮_Γi λ J(u) J(v) + ∮_Γb λ u v.
pub fn assemble_penalty(space: &DgSpace, penalty: &PenaltyConfig, params: &FracParams) -> CsrMatrix {
    let np = space.np();
    let lam = edge_penalties(space, penalty, params);
    let mut t = Vec::new();
    for (id, edge) in space.mesh().edges().iter().enumerate() {
        for fp in face_points(space, id) {
            let mut sides = vec![(edge.minus * np, 1.0, &fp.minus)];
            if let (Some(pe), Some(pv)) = (edge.plus, fp.plus.as_ref()) {
                sides.push((pe * np, -1.0, pv));
            }
            for &(io, is, iv) in &sides {
                for &(jo, js, jv) in &sides {
                    for i in 0..np {
                        for j in 0..np {
                            t.push((io + i, jo + j, lam[id] * fp.weight * is * iv[i] * js * jv[j]));
                        }
                    }
                }
            }
        }
    }
    CsrMatrix::from_triplets(space.ndofs(), space.ndofs(), t)
}

/// Left-sided fractional couplings of both axes for one pair of orders.
#[derive(Clone, Debug)]
pub struct FracOperators {
    pub params: FracParams,
    pub x: FracCoupling,
    pub y: FracCoupling,
}

impl FracOperators {
    pub fn new(space: &DgSpace, params: FracParams) -> Result<Self> {
        Self::with_outer(space, params, OuterRule::Volume)
    }

    pub fn with_outer(space: &DgSpace, params: FracParams, outer: OuterRule) -> Result<Self> {
        Ok(Self {
            params,
            x: assemble_frac_coupling_with(space, params.alpha1(), Axis::X, Side::Left, outer)?,
            y: assemble_frac_coupling_with(space, params.alpha2(), Axis::Y, Side::Left, outer)?,
        })
    }

    pub fn get(&self, axis: Axis) -> &FracCoupling {
        match axis {
            Axis::X => &self.x,
            Axis::Y => &self.y,
        }
    }
}

/// Assembled operator and load vector.
#[derive(Clone, Debug)]
pub struct GlobalSystem {
    pub matrix: DenseMatrix,
    pub rhs: Vec<f64>,
    pub np: usize,
    pub scheme: FluxScheme,
}

impl GlobalSystem {
    pub fn ndofs(&self) -> usize {
        self.rhs.len()
    }

    /// Dense binary dump: rows and cols as little-endian u64, then the
    /// row-major entries as little-endian f64.
    pub fn write_matrix_binary(&self, path: &Path) -> Result<()> {
        write_dense_binary(&self.matrix, path)
    }

    /// Text dump: one `i j value` line per nonzero entry of A, then one
    /// `rhs i value` line per load entry.
    pub fn write_triplets(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(w, "{} {}", self.matrix.rows(), self.matrix.cols())?;
        for i in 0..self.matrix.rows() {
            for (j, v) in self.matrix.row(i).iter().enumerate() {
                if *v != 0.0 {
                    writeln!(w, "{i} {j} {v:e}")?;
                }
            }
        }
        for (i, v) in self.rhs.iter().enumerate() {
            writeln!(w, "rhs {i} {v:e}")?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn write_dense_binary(m: &DenseMatrix, path: &Path) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dense_binary(bytes: &[u8]) -> Result<DenseMatrix> {
    let word = |i: usize| -> Result<[u8; 8]> {
        bytes
            .get(8 * i..8 * i + 8)
            .and_then(|s| s.try_into().ok())
            .ok_or_else(|| invalid("truncated matrix dump"))
    };
    let rows = u64::from_le_bytes(word(0)?) as usize;
    let cols = u64::from_le_bytes(word(1)?) as usize;
    let len = rows.checked_mul(cols).ok_or_else(|| invalid("matrix dump dimensions overflow"))?;
    if len.checked_mul(8).and_then(|b| b.checked_add(16)) != Some(bytes.len()) {
        return Err(invalid("matrix dump length does not match its dimensions"));
    }
    let data = (0..len).map(|k| word(k + 2).map(f64::from_le_bytes)).collect::<Result<Vec<_>>>()?;
    Ok(DenseMatrix::from_row_major(rows, cols, data))
}

/// Load vector (f, φ_i) with a volume rule two orders above the basis rule.
pub fn assemble_rhs(space: &DgSpace, f: &(dyn Fn(Point) -> f64 + Sync)) -> Result<Vec<f64>> {
    let np = space.np();
    let rule = TriangleRule::collapsed(space.order() + 4)?;
    let tab = space.basis().tabulate(&rule.points);
    let blocks: Vec<Vec<f64>> = (0..space.mesh().num_elements())
        .into_par_iter()
        .map(|e| {
            let map = space.map(e);
            let mut b = vec![0.0; np];
            for (q, p) in rule.points.iter().enumerate() {
                let w = rule.weights[q] * map.det() * map.scale() * f(map.to_physical(p[0], p[1]));
                for (bi, phi) in b.iter_mut().zip(tab.row(q)) {
                    *bi += w * phi;
                }
            }
            b
        })
        .collect();
    Ok(blocks.concat())
}

/// Assembles A and the load vector, computing the fractional couplings.
pub fn assemble_system(
    space: &DgSpace,
    params: FracParams,
    scheme: FluxScheme,
    penalty: &PenaltyConfig,
    f: &(dyn Fn(Point) -> f64 + Sync),
) -> Result<GlobalSystem> {
    let ops = FracOperators::new(space, params)?;
    assemble_system_with(space, &ops, scheme, penalty, f)
}

/// Assembles with precomputed couplings (shared between schemes).
pub fn assemble_system_with(
    space: &DgSpace,
    ops: &FracOperators,
    scheme: FluxScheme,
    penalty: &PenaltyConfig,
    f: &(dyn Fn(Point) -> f64 + Sync),
) -> Result<GlobalSystem> {
    let matrix = assemble_operator(space, ops, scheme, penalty)?;
    let rhs = assemble_rhs(space, f)?;
    Ok(GlobalSystem { matrix, rhs, np: space.np(), scheme })
}

/// The operator A alone.
pub fn assemble_operator(
    space: &DgSpace,
    ops: &FracOperators,
    scheme: FluxScheme,
    penalty: &PenaltyConfig,
) -> Result<DenseMatrix> {
    if space.mesh().num_elements() == 0 {
        return Err(invalid("cannot assemble on an empty mesh"));
    }
    let n = space.ndofs();
    let mut a = DenseMatrix::zeros(n, n);
    match scheme {
        FluxScheme::Central | FluxScheme::Ldg(_) => {
            let g = assemble_gradient_op(space, scheme);
            for axis in Axis::BOTH {
                let ga = g.get(axis);
                let fg = ops.get(axis).matrix.mul_sparse(ga);
                a.add_scaled(&ga.transpose_mul_dense(&fg), 1.0);
            }
        }
        FluxScheme::Ip => {
            let d = assemble_derivatives(space);
            for axis in Axis::BOTH {
                let da = d.get(axis);
                let fd = ops.get(axis).matrix.mul_sparse(da);
                a.add_scaled(&da.transpose_mul_dense(&fd), 1.0);
            }
            add_ip_face_terms(space, &ops.params, &mut a)?;
        }
    }
    let s = assemble_penalty(space, penalty, &ops.params);
    for i in 0..n {
        for (j, v) in s.row(i) {
            a[(i, j)] += v;
        }
    }
    Ok(a)
}

/// Contribution of one face point: a test-side jump vector over the local
/// dofs and, per axis, the averaged fractional-integral rows.
struct IpFaceContribution {
    /// (global dof, jump value) for the elements adjacent to the edge.
    jump: Vec<(usize, f64)>,
    normal: [f64; 2],
    left: [Vec<(usize, Vec<f64>)>; 2],
    right: [Vec<(usize, Vec<f64>)>; 2],
}

fn average_mode_integrals(
    integ: &RayIntegrator,
    fp: &FacePoint,
    edge: &Edge,
    axis: Axis,
    side: Side,
) -> Result<Vec<(usize, Vec<f64>)>> {
    let hints: Vec<usize> = std::iter::once(edge.minus).chain(edge.plus).collect();
    let share = fp.weight / hints.len() as f64;
    let mut out: Vec<(usize, Vec<f64>)> = Vec::new();
    for h in hints {
        for (e, vals) in integ.mode_integrals(fp.point, axis, side, Some(h), Component::derivative(axis))? {
            let scaled: Vec<f64> = vals.iter().map(|v| v * share).collect();
            match out.iter_mut().find(|(oe, _)| *oe == e) {
                Some((_, acc)) => acc.iter_mut().zip(&scaled).for_each(|(a, b)| *a += b),
                None => out.push((e, scaled)),
            }
        }
    }
    Ok(out)
}

/// Adds −∮ {I^ᾱ∇φ_j}·[[φ_i]] − ∮ {ᴿI^ᾱ∇φ_i}·[[φ_j]] to A[i][j].
fn add_ip_face_terms(space: &DgSpace, params: &FracParams, a: &mut DenseMatrix) -> Result<()> {
    let np = space.np();
    let integ = [RayIntegrator::new(space, params.alpha1())?, RayIntegrator::new(space, params.alpha2())?];
    let edges = space.mesh().edges();
    let contributions: Vec<Vec<IpFaceContribution>> = (0..edges.len())
        .into_par_iter()
        .map(|id| -> Result<Vec<IpFaceContribution>> {
            let edge = &edges[id];
            let mut out = Vec::new();
            for fp in face_points(space, id) {
                let mut jump: Vec<(usize, f64)> = (0..np).map(|k| (edge.minus * np + k, fp.minus[k])).collect();
                if let (Some(pe), Some(pv)) = (edge.plus, fp.plus.as_ref()) {
                    jump.extend((0..np).map(|k| (pe * np + k, -pv[k])));
                }
                let mut left: [Vec<(usize, Vec<f64>)>; 2] = Default::default();
                let mut right: [Vec<(usize, Vec<f64>)>; 2] = Default::default();
                for axis in Axis::BOTH {
                    let ig = &integ[axis.index()];
                    left[axis.index()] = average_mode_integrals(ig, &fp, edge, axis, Side::Left)?;
                    right[axis.index()] = average_mode_integrals(ig, &fp, edge, axis, Side::Right)?;
                }
                out.push(IpFaceContribution { jump, normal: edge.normal, left, right });
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    for c in contributions.iter().flatten() {
        for axis in Axis::BOTH {
            let nk = c.normal[axis.index()];
            for &(i, ji) in &c.jump {
                let s = nk * ji;
                for (e, vals) in &c.left[axis.index()] {
                    let row = a.row_mut(i);
                    for (r, v) in row[space.dofs(*e)].iter_mut().zip(vals) {
                        *r -= s * v;
                    }
                }
                for (e, vals) in &c.right[axis.index()] {
                    for (b, v) in space.dofs(*e).zip(vals) {
                        a[(b, i)] -= s * v;
                    }
                }
            }
        }
    }
    Ok(())
}

/// B_h(U, V) evaluated without forming A: fractional integrals are taken
/// pointwise along rays at every quadrature point.
pub fn apply_bilinear(
    space: &DgSpace,
    params: FracParams,
    scheme: FluxScheme,
    penalty: &PenaltyConfig,
    u: &[f64],
    v: &[f64],
) -> Result<f64> {
    let n = space.ndofs();
    if u.len() != n || v.len() != n {
        return Err(invalid(format!("vectors must have {n} entries")));
    }
    if v.iter().all(|&x| x == 0.0) || u.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let mut total = 0.0;
    let integ = [RayIntegrator::new(space, params.alpha1())?, RayIntegrator::new(space, params.alpha2())?];
    match scheme {
        FluxScheme::Central | FluxScheme::Ldg(_) => {
            let g = assemble_gradient_op(space, scheme);
            for axis in Axis::BOTH {
                let pu = g.get(axis).matvec(u);
                let pv = g.get(axis).matvec(v);
                total += volume_pairing(space, &integ[axis.index()], axis, &pu, Component::Value, &pv)?;
            }
        }
        FluxScheme::Ip => {
            for axis in Axis::BOTH {
                let ig = &integ[axis.index()];
                let comp = Component::derivative(axis);
                let dv = assemble_derivatives(space).get(axis).matvec(v);
                total += volume_pairing(space, ig, axis, u, comp, &dv)?;
                for (id, edge) in space.mesh().edges().iter().enumerate() {
                    let hints: Vec<usize> = std::iter::once(edge.minus).chain(edge.plus).collect();
                    for fp in face_points(space, id) {
                        let jump = |w: &[f64]| {
                            let m: f64 = fp.minus.iter().zip(&w[space.dofs(edge.minus)]).map(|(a, b)| a * b).sum();
                            let p: f64 = match (edge.plus, &fp.plus) {
                                (Some(pe), Some(pv)) => pv.iter().zip(&w[space.dofs(pe)]).map(|(a, b)| a * b).sum(),
                                _ => 0.0,
                            };
                            (m - p) * edge.normal[axis.index()]
                        };
                        let mut avg_u = 0.0;
                        let mut avg_v = 0.0;
                        for &h in &hints {
                            avg_u += ig.integrate(u, fp.point, axis, Side::Left, Some(h), comp)?;
                            avg_v += ig.integrate(v, fp.point, axis, Side::Right, Some(h), comp)?;
                        }
                        let k = hints.len() as f64;
                        total -= fp.weight * (avg_u / k * jump(v) + avg_v / k * jump(u));
                    }
                }
            }
        }
    }
    let lam = edge_penalties(space, penalty, &params);
    for (id, edge) in space.mesh().edges().iter().enumerate() {
        for fp in face_points(space, id) {
            let tr = |w: &[f64]| {
                let m: f64 = fp.minus.iter().zip(&w[space.dofs(edge.minus)]).map(|(a, b)| a * b).sum();
                let p: f64 = match (edge.plus, &fp.plus) {
                    (Some(pe), Some(pv)) => pv.iter().zip(&w[space.dofs(pe)]).map(|(a, b)| a * b).sum(),
                    _ => 0.0,
                };
                m - p
            };
            total += lam[id] * fp.weight * tr(u) * tr(v);
        }
    }
    Ok(total)
}

/// Σ_elements ∫ I^μ(comp of w)(x) · z(x) dx with the basis volume rule.
fn volume_pairing(
    space: &DgSpace,
    integ: &RayIntegrator,
    axis: Axis,
    w: &[f64],
    comp: Component,
    z: &[f64],
) -> Result<f64> {
    let rule = space.basis().volume_rule();
    (0..space.mesh().num_elements())
        .into_par_iter()
        .map(|e| -> Result<f64> {
            let map = space.map(e);
            let mut acc = 0.0;
            for (p, wq) in rule.points.iter().zip(&rule.weights) {
                let x = map.to_physical(p[0], p[1]);
                let zi = space.value(z, e, x);
                if zi != 0.0 {
                    acc += wq * map.det() * zi * integ.integrate(w, x, axis, Side::Left, Some(e), comp)?;
                }
            }
            Ok(acc)
        })
        .sum()
}
