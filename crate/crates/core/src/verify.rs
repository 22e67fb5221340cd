//! Manufactured solutions, error norms, convergence orders and the drivers
//! for refinement and conditioning studies.

use crate::assembly::{assemble_penalty, assemble_system_with, FluxScheme, FracOperators, PenaltyConfig, PenaltyLaw};
use crate::basis::TriangleRule;
use crate::error::{invalid, Error, Result};
use crate::fracint::{Component, FracParams, OuterRule, RayIntegrator, ShiftedPoly};
use crate::linalg::DenseMatrix;
use crate::mesh::{jittered, l_shape, structured, Axis, BoundingBox, Mesh, Point, Side};
use crate::solver::{cholesky, condition_number, singular_values, solve_dense};
use crate::space::DgSpace;
use crate::special::recip_gamma;
use rayon::prelude::*;
use std::fmt::Write as _;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Domain {
    Square,
    LShape,
}

/// Which manufactured solution a study uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseKind {
    /// u = (x²−1)³(y²−1)³ on (−1,1)².
    Example1,
    /// u = x y (x²−1)²(y²−1)² on the L-shape.
    LShapeSmooth,
    /// u = x²(x²−1) y²(y²−1) on the L-shape.
    Example2,
}

impl CaseKind {
    pub fn name(&self) -> &'static str {
        match self {
            CaseKind::Example1 => "example1",
            CaseKind::LShapeSmooth => "lshape-smooth",
            CaseKind::Example2 => "example2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "example1" => Ok(CaseKind::Example1),
            "lshape-smooth" => Ok(CaseKind::LShapeSmooth),
            "example2" => Ok(CaseKind::Example2),
            _ => Err(invalid(format!("unknown case '{s}'"))),
        }
    }
}

/// A separable exact solution u = g(x) h(y) with g, h polynomials vanishing
/// at ±1, and its forcing f = −∂x I^{2−α}∂x u − ∂y I^{2−β}∂y u.
///
/// Left-sided integrals start at x = −1 (resp. y = −1). On the L-shape with
/// the upper-right quadrant removed every left-going ray stays inside the
/// domain, so the same closed forms apply there.
#[derive(Clone, Debug)]
pub struct ManufacturedCase {
    pub kind: CaseKind,
    pub domain: Domain,
    pub params: FracParams,
    gx: ShiftedPoly,
    gy: ShiftedPoly,
}

/// x as a polynomial about −1.
fn var() -> ShiftedPoly {
    ShiftedPoly::new(-1.0, vec![-1.0, 1.0])
}

fn pow(p: &ShiftedPoly, k: usize) -> ShiftedPoly {
    (0..k).fold(ShiftedPoly::new(p.origin, vec![1.0]), |acc, _| acc.mul(p))
}

/// d/dx I^μ p(x) for a polynomial p about its origin a:
/// I^μ p′ + p(a)(x−a)^{μ−1}/Γ(μ).
fn d_rl_integral(p: &ShiftedPoly, mu: f64, x: f64) -> f64 {
    let smooth = p.derivative().rl_integral(mu, x);
    let p0 = p.coeffs.first().copied().unwrap_or(0.0);
    if mu == 0.0 || p0 == 0.0 {
        return smooth;
    }
    smooth + p0 * (x - p.origin).powf(mu - 1.0) * recip_gamma(mu)
}

impl ManufacturedCase {
    pub fn new(kind: CaseKind, params: FracParams) -> Self {
        let x = var();
        let q = x.mul(&x);
        let x2m1 = ShiftedPoly::new(-1.0, vec![0.0, -2.0, 1.0]); // x² − 1
        let (g, domain) = match kind {
            CaseKind::Example1 => (pow(&x2m1, 3), Domain::Square),
            CaseKind::LShapeSmooth => (x.mul(&pow(&x2m1, 2)), Domain::LShape),
            CaseKind::Example2 => (q.mul(&x2m1), Domain::LShape),
        };
        Self { kind, domain, params, gx: g.clone(), gy: g }
    }

    pub fn exact(&self, p: Point) -> f64 {
        self.gx.eval(p.x) * self.gy.eval(p.y)
    }

    pub fn gradient(&self, p: Point) -> [f64; 2] {
        [self.gx.derivative().eval(p.x) * self.gy.eval(p.y), self.gx.eval(p.x) * self.gy.derivative().eval(p.y)]
    }

    pub fn forcing(&self, p: Point) -> f64 {
        let fx = d_rl_integral(&self.gx.derivative(), self.params.alpha1(), p.x) * self.gy.eval(p.y);
        let fy = self.gx.eval(p.x) * d_rl_integral(&self.gy.derivative(), self.params.alpha2(), p.y);
        -fx - fy
    }

    /// Left-sided I^ν ∂_axis u at `p`.
    pub fn derivative_integral(&self, axis: Axis, nu: f64, p: Point) -> f64 {
        match axis {
            Axis::X => self.gx.derivative().rl_integral(nu, p.x) * self.gy.eval(p.y),
            Axis::Y => self.gx.eval(p.x) * self.gy.derivative().rl_integral(nu, p.y),
        }
    }
}

/// ‖u_h − u‖ over the mesh, with a rule exact to degree 2N+4.
pub fn l2_error(space: &DgSpace, u: &[f64], exact: &dyn Fn(Point) -> f64) -> f64 {
    let rule = TriangleRule::collapsed(space.order() + 3).expect("rule size is positive");
    let sum: f64 = (0..space.mesh().num_elements())
        .map(|e| {
            let map = space.map(e);
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(|(r, w)| {
                    let x = map.to_physical(r[0], r[1]);
                    w * map.det() * (space.value(u, e, x) - exact(x)).powi(2)
                })
                .sum::<f64>()
        })
        .sum();
    sum.sqrt()
}

/// Energy error |||u − u_h|||:
/// Σ_axis ‖I^{μ/2} ∂_axis e‖²_Ω + Σ_Γi h⁻¹‖[[e]]‖² + Σ_Γb h⁻¹‖e‖²,
/// with μ the integral order of the axis and h the smaller adjacent diameter.
pub fn energy_error(space: &DgSpace, u: &[f64], case: &ManufacturedCase) -> Result<f64> {
    let params = case.params;
    let rule = space.basis().volume_rule();
    let mut total = 0.0;
    for axis in Axis::BOTH {
        let nu = 0.5 * params.order(axis);
        let integ = RayIntegrator::new(space, nu)?;
        let comp = Component::derivative(axis);
        total += (0..space.mesh().num_elements())
            .into_par_iter()
            .map(|e| -> Result<f64> {
                let map = space.map(e);
                let mut acc = 0.0;
                for (r, w) in rule.points.iter().zip(&rule.weights) {
                    let x = map.to_physical(r[0], r[1]);
                    let uh = integ.integrate(u, x, axis, Side::Left, Some(e), comp)?;
                    acc += w * map.det() * (uh - case.derivative_integral(axis, nu, x)).powi(2);
                }
                Ok(acc)
            })
            .sum::<Result<f64>>()?;
    }
    let els = space.mesh().elements();
    let nodes = space.basis().face_nodes();
    let weights = space.basis().face_weights();
    for edge in space.mesh().edges() {
        let h = edge.plus.map_or(els[edge.minus].diameter, |p| els[p].diameter.min(els[edge.minus].diameter));
        for q in 0..nodes.len() {
            let x = space.face_point(edge.minus, edge.minus_face, q);
            let jump = match edge.plus {
                Some(p) => space.value(u, edge.minus, x) - space.value(u, p, x),
                None => space.value(u, edge.minus, x) - case.exact(x),
            };
            total += 0.5 * edge.length * weights[q] * jump * jump / h;
        }
    }
    Ok(total.sqrt())
}

/// Pairwise orders log(e_{i−1}/e_i)/log(h_{i−1}/h_i).
pub fn eoc(errors: &[f64], hs: &[f64]) -> Result<Vec<f64>> {
    if errors.len() != hs.len() || errors.len() < 2 {
        return Err(invalid("eoc needs two or more (h, error) pairs of equal length"));
    }
    if let Some(e) = errors.iter().find(|e| !(**e > 0.0)) {
        return Err(invalid(format!("error {e} is not positive")));
    }
    if hs.windows(2).any(|w| !(w[1] < w[0] && w[1] > 0.0)) {
        return Err(invalid("mesh sizes must be positive and strictly decreasing"));
    }
    Ok((1..errors.len()).map(|i| (errors[i - 1] / errors[i]).ln() / (hs[i - 1] / hs[i]).ln()).collect())
}

/// Families of meshes indexed by a refinement level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeshFamily {
    /// `structured(level)` on (−1,1)², K = 2·level².
    Structured,
    /// `jittered(level)` on (−1,1)², K = 2·level².
    Jittered { amplitude: f64, seed: u64 },
    /// `l_shape(level)`, K = 3·level²/2.
    LShape { jitter: f64, seed: u64 },
}

impl MeshFamily {
    pub fn build(&self, level: usize) -> Result<Mesh> {
        let square = BoundingBox::square(-1.0, 1.0)?;
        match *self {
            MeshFamily::Structured => structured(level, square),
            MeshFamily::Jittered { amplitude, seed } => jittered(level, square, amplitude, seed),
            MeshFamily::LShape { jitter, seed } => l_shape(level, jitter, seed),
        }
    }

    pub fn is_structured(&self) -> bool {
        match *self {
            MeshFamily::Structured => true,
            MeshFamily::Jittered { amplitude, .. } => amplitude == 0.0,
            MeshFamily::LShape { jitter, .. } => jitter == 0.0,
        }
    }

    pub fn domain(&self) -> Domain {
        match self {
            MeshFamily::LShape { .. } => Domain::LShape,
            _ => Domain::Square,
        }
    }

    /// Largest element diameter on structured meshes, √(2|Ω|/K) otherwise.
    pub fn mesh_size(&self, mesh: &Mesh) -> f64 {
        if self.is_structured() {
            mesh.max_diameter()
        } else {
            unstructured_size(mesh)
        }
    }

    pub fn h_convention(&self) -> &'static str {
        if self.is_structured() {
            "max element diameter"
        } else {
            "sqrt(2*area/K)"
        }
    }
}

/// √(2|Ω|/K), the mesh size proxy for unstructured meshes.
pub fn unstructured_size(mesh: &Mesh) -> f64 {
    (2.0 * mesh.area() / mesh.num_elements() as f64).sqrt()
}

/// One refinement or conditioning study.
#[derive(Clone, Debug)]
pub struct StudyConfig {
    pub case: CaseKind,
    pub family: MeshFamily,
    pub levels: Vec<usize>,
    pub orders: Vec<usize>,
    pub params: Vec<FracParams>,
    pub schemes: Vec<FluxScheme>,
    /// `None` uses [`PenaltyConfig::default_for`] per scheme and order.
    pub penalty: Option<PenaltyConfig>,
    pub outer: OuterRule,
    pub energy: bool,
    pub condition: bool,
}

impl StudyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() || self.orders.is_empty() || self.params.is_empty() || self.schemes.is_empty() {
            return Err(invalid("study needs at least one level, order, parameter pair and flux"));
        }
        let case_domain = ManufacturedCase::new(self.case, self.params[0]).domain;
        if case_domain != self.family.domain() {
            return Err(invalid(format!("case {} does not live on this mesh family", self.case.name())));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub k: usize,
    pub h: f64,
    pub order: usize,
    pub alpha: f64,
    pub beta: f64,
    pub flux: String,
    pub l2_error: f64,
    pub l2_eoc: f64,
    pub energy_error: f64,
    pub energy_eoc: f64,
    pub cond: f64,
    pub wall_time: f64,
}

/// Study results; rows of one (N, α, β, flux) sequence are consecutive and
/// in refinement order. Missing values are NaN.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConvergenceReport {
    pub case: String,
    pub h_convention: String,
    pub rows: Vec<ReportRow>,
    pub diagnostics: Vec<String>,
}

pub const CSV_HEADER: &str = "K,h,N,alpha,beta,flux,l2_error,l2_eoc,energy_error,energy_eoc,cond,wall_time";

fn sci(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.5e}")
    } else {
        "nan".to_string()
    }
}

impl ConvergenceReport {
    /// Rows of one sequence, matched on order, parameters and flux name.
    pub fn sequence(&self, order: usize, alpha: f64, beta: f64, flux: &str) -> Vec<&ReportRow> {
        self.rows
            .iter()
            .filter(|r| r.order == order && r.alpha == alpha && r.beta == beta && r.flux == flux)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# schema=1");
        let _ = writeln!(s, "# case={}", self.case);
        let _ = writeln!(s, "# h={}", self.h_convention);
        for d in &self.diagnostics {
            let _ = writeln!(s, "# error: {}", d.replace(['\n', '\r'], " ").trim());
        }
        let _ = writeln!(s, "{CSV_HEADER}");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.k,
                sci(r.h),
                r.order,
                r.alpha,
                r.beta,
                r.flux,
                sci(r.l2_error),
                sci(r.l2_eoc),
                sci(r.energy_error),
                sci(r.energy_eoc),
                sci(r.cond),
                sci(r.wall_time)
            );
        }
        s
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse { line, message };
        let mut report = ConvergenceReport::default();
        let mut schema = false;
        let mut header = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() {
                continue;
            }
            if let Some(meta) = l.strip_prefix('#') {
                let meta = meta.trim();
                if let Some(v) = meta.strip_prefix("schema=") {
                    if v != "1" {
                        return Err(perr(line, format!("unsupported schema {v}")));
                    }
                    schema = true;
                } else if let Some(v) = meta.strip_prefix("case=") {
                    report.case = v.to_string();
                } else if let Some(v) = meta.strip_prefix("h=") {
                    report.h_convention = v.to_string();
                } else if let Some(v) = meta.strip_prefix("error:") {
                    report.diagnostics.push(v.trim().to_string());
                }
                continue;
            }
            if !schema {
                return Err(perr(line, "missing '# schema=1' line".into()));
            }
            if !header {
                if l != CSV_HEADER {
                    return Err(perr(line, "unexpected column header".into()));
                }
                header = true;
                continue;
            }
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 12 {
                return Err(perr(line, format!("expected 12 fields, found {}", f.len())));
            }
            let int = |s: &str| s.parse::<usize>().map_err(|e| perr(line, format!("'{s}': {e}")));
            let num = |s: &str| s.parse::<f64>().map_err(|e| perr(line, format!("'{s}': {e}")));
            if f[5].is_empty() || f[5].contains(char::is_whitespace) {
                return Err(perr(line, "empty or malformed flux name".into()));
            }
            report.rows.push(ReportRow {
                k: int(f[0])?,
                h: num(f[1])?,
                order: int(f[2])?,
                alpha: num(f[3])?,
                beta: num(f[4])?,
                flux: f[5].to_string(),
                l2_error: num(f[6])?,
                l2_eoc: num(f[7])?,
                energy_error: num(f[8])?,
                energy_eoc: num(f[9])?,
                cond: num(f[10])?,
                wall_time: num(f[11])?,
            });
        }
        if !header {
            return Err(perr(text.lines().count().max(1), "missing column header".into()));
        }
        Ok(report)
    }

    /// (h, error) pairs of every sequence, one block per sequence.
    pub fn companion(&self, energy: bool) -> String {
        let mut s = String::new();
        let mut last: Option<(usize, f64, f64, &str)> = None;
        for r in &self.rows {
            let key = (r.order, r.alpha, r.beta, r.flux.as_str());
            if last != Some(key) {
                if last.is_some() {
                    s.push('\n');
                }
                let _ = writeln!(s, "# N={} alpha={} beta={} flux={}", r.order, r.alpha, r.beta, r.flux);
                last = Some(key);
            }
            let e = if energy { r.energy_error } else { r.l2_error };
            let _ = writeln!(s, "{} {}", sci(r.h), sci(e));
        }
        s
    }
}

/// Condition numbers laid out per (α, β) block: K against κ of each flux.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConditionTable {
    pub fluxes: Vec<String>,
    pub blocks: Vec<ConditionBlock>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionBlock {
    pub alpha: f64,
    pub beta: f64,
    /// (K, κ per flux in `fluxes` order).
    pub rows: Vec<(usize, Vec<f64>)>,
}

impl ConditionTable {
    /// Regroups the rows of a condition study.
    pub fn from_report(report: &ConvergenceReport) -> Self {
        let mut table = ConditionTable::default();
        for r in &report.rows {
            if !table.fluxes.contains(&r.flux) {
                table.fluxes.push(r.flux.clone());
            }
        }
        for r in &report.rows {
            let fi = table.fluxes.iter().position(|f| *f == r.flux).expect("flux registered above");
            let nf = table.fluxes.len();
            let block = match table.blocks.iter_mut().position(|b| b.alpha == r.alpha && b.beta == r.beta) {
                Some(i) => &mut table.blocks[i],
                None => {
                    table.blocks.push(ConditionBlock { alpha: r.alpha, beta: r.beta, rows: Vec::new() });
                    table.blocks.last_mut().expect("just pushed")
                }
            };
            let row = match block.rows.iter_mut().position(|(k, _)| *k == r.k) {
                Some(i) => &mut block.rows[i],
                None => {
                    block.rows.push((r.k, vec![f64::NAN; nf]));
                    block.rows.last_mut().expect("just pushed")
                }
            };
            row.1[fi] = r.cond;
        }
        for b in &mut table.blocks {
            b.rows.sort_by_key(|(k, _)| *k);
        }
        table
    }

    /// Columns (per block and flux) whose κ decreases as K grows.
    pub fn trend_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for b in &self.blocks {
            for (fi, f) in self.fluxes.iter().enumerate() {
                for w in b.rows.windows(2) {
                    if !(w[1].1[fi] > w[0].1[fi]) {
                        out.push(format!("alpha={} beta={} {f}: K={} -> K={} does not increase", b.alpha, b.beta, w[0].0, w[1].0));
                    }
                }
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# schema=1");
        let _ = writeln!(s, "# table=condition");
        let header: Vec<String> = std::iter::once("K".to_string()).chain(self.fluxes.iter().map(|f| format!("cond_{f}"))).collect();
        for b in &self.blocks {
            let _ = writeln!(s, "# alpha={} beta={}", b.alpha, b.beta);
            let _ = writeln!(s, "{}", header.join(","));
            for (k, vals) in &b.rows {
                let cells: Vec<String> = vals.iter().map(|v| sci(*v)).collect();
                let _ = writeln!(s, "{k},{}", cells.join(","));
            }
        }
        s
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let perr = |line: usize, message: String| Error::Parse { line, message };
        let mut table = ConditionTable::default();
        let mut schema = false;
        let mut expect_header = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.trim();
            if l.is_empty() {
                continue;
            }
            if let Some(meta) = l.strip_prefix('#') {
                let meta = meta.trim();
                if let Some(v) = meta.strip_prefix("schema=") {
                    if v != "1" {
                        return Err(perr(line, format!("unsupported schema {v}")));
                    }
                    schema = true;
                } else if meta.starts_with("alpha=") {
                    let mut it = meta.split_whitespace();
                    let mut get = |key: &str| -> Result<f64> {
                        it.next()
                            .and_then(|t| t.strip_prefix(key))
                            .ok_or_else(|| perr(line, format!("expected {key}<value>")))?
                            .parse::<f64>()
                            .map_err(|e| perr(line, e.to_string()))
                    };
                    let alpha = get("alpha=")?;
                    let beta = get("beta=")?;
                    table.blocks.push(ConditionBlock { alpha, beta, rows: Vec::new() });
                    expect_header = true;
                }
                continue;
            }
            if !schema {
                return Err(perr(line, "missing '# schema=1' line".into()));
            }
            let cells: Vec<&str> = l.split(',').collect();
            if expect_header {
                if cells.first() != Some(&"K") || cells.len() < 2 {
                    return Err(perr(line, "expected a K,cond_<flux>... header".into()));
                }
                let fluxes: Vec<String> = cells[1..]
                    .iter()
                    .map(|c| c.strip_prefix("cond_").map(str::to_string).ok_or_else(|| perr(line, format!("bad column '{c}'"))))
                    .collect::<Result<_>>()?;
                if table.blocks.len() > 1 && fluxes != table.fluxes {
                    return Err(perr(line, "flux columns differ between blocks".into()));
                }
                table.fluxes = fluxes;
                expect_header = false;
                continue;
            }
            let block = table.blocks.last_mut().ok_or_else(|| perr(line, "row before any block".into()))?;
            if cells.len() != table.fluxes.len() + 1 {
                return Err(perr(line, format!("expected {} fields", table.fluxes.len() + 1)));
            }
            let k = cells[0].parse::<usize>().map_err(|e| perr(line, e.to_string()))?;
            let vals = cells[1..].iter().map(|c| c.parse::<f64>().map_err(|e| perr(line, e.to_string()))).collect::<Result<_>>()?;
            block.rows.push((k, vals));
        }
        if !schema {
            return Err(perr(1, "missing '# schema=1' line".into()));
        }
        Ok(table)
    }
}

/// Fills the EOC columns of consecutive rows of a sequence.
fn fill_eoc(rows: &mut [ReportRow]) {
    for i in 1..rows.len() {
        let (ha, hb) = (rows[i - 1].h, rows[i].h);
        let order = |ea: f64, eb: f64| {
            if ea > 0.0 && eb > 0.0 && hb < ha {
                (ea / eb).ln() / (ha / hb).ln()
            } else {
                f64::NAN
            }
        };
        let l2 = order(rows[i - 1].l2_error, rows[i].l2_error);
        let energy = order(rows[i - 1].energy_error, rows[i].energy_error);
        rows[i].l2_eoc = l2;
        rows[i].energy_eoc = energy;
    }
}

fn study_penalty(config: &StudyConfig, scheme: FluxScheme, order: usize) -> PenaltyConfig {
    config.penalty.unwrap_or_else(|| PenaltyConfig::default_for(scheme, order))
}

/// Assembles, solves and measures every (level, N, α, β, flux) point.
/// A failing point is recorded as a diagnostic with NaN values.
pub fn run_convergence_study(config: &StudyConfig) -> Result<ConvergenceReport> {
    run_study(config, true)
}

/// Condition numbers κ₂ of the system matrices (error columns are NaN).
pub fn run_condition_study(config: &StudyConfig) -> Result<ConvergenceReport> {
    let mut c = config.clone();
    c.condition = true;
    c.energy = false;
    run_study(&c, false)
}

fn run_study(config: &StudyConfig, solve: bool) -> Result<ConvergenceReport> {
    config.validate()?;
    let meshes: Vec<(Mesh, f64)> = config
        .levels
        .iter()
        .map(|&l| {
            let m = config.family.build(l)?;
            let h = config.family.mesh_size(&m);
            Ok((m, h))
        })
        .collect::<Result<_>>()?;
    if meshes.windows(2).any(|w| !(w[1].1 < w[0].1)) {
        return Err(invalid("mesh levels must refine strictly"));
    }
    let combos: Vec<(usize, FracParams)> =
        config.orders.iter().flat_map(|&n| config.params.iter().map(move |&p| (n, p))).collect();
    let blocks: Vec<(Vec<Vec<ReportRow>>, Vec<String>)> = combos
        .par_iter()
        .map(|&(order, params)| study_block(config, &meshes, order, params, solve))
        .collect();
    let mut report = ConvergenceReport {
        case: config.case.name().to_string(),
        h_convention: config.family.h_convention().to_string(),
        ..Default::default()
    };
    for (seqs, diags) in blocks {
        for mut seq in seqs {
            fill_eoc(&mut seq);
            report.rows.extend(seq);
        }
        report.diagnostics.extend(diags);
    }
    Ok(report)
}

fn study_block(
    config: &StudyConfig,
    meshes: &[(Mesh, f64)],
    order: usize,
    params: FracParams,
    solve: bool,
) -> (Vec<Vec<ReportRow>>, Vec<String>) {
    let case = ManufacturedCase::new(config.case, params);
    let mut seqs: Vec<Vec<ReportRow>> = vec![Vec::new(); config.schemes.len()];
    let mut diags = Vec::new();
    for (mesh, h) in meshes {
        let blank = |flux: &str| ReportRow {
            k: mesh.num_elements(),
            h: *h,
            order,
            alpha: params.alpha(),
            beta: params.beta(),
            flux: flux.to_string(),
            l2_error: f64::NAN,
            l2_eoc: f64::NAN,
            energy_error: f64::NAN,
            energy_eoc: f64::NAN,
            cond: f64::NAN,
            wall_time: f64::NAN,
        };
        let start = Instant::now();
        let shared = DgSpace::new(mesh.clone(), order).and_then(|sp| {
            let ops = FracOperators::with_outer(&sp, params, config.outer)?;
            Ok((sp, ops))
        });
        let shared_time = start.elapsed().as_secs_f64();
        let (space, ops) = match shared {
            Ok(s) => s,
            Err(e) => {
                diags.push(format!("K={} N={order} alpha={} beta={}: {e}", mesh.num_elements(), params.alpha(), params.beta()));
                for (seq, s) in seqs.iter_mut().zip(&config.schemes) {
                    seq.push(blank(s.name()));
                }
                continue;
            }
        };
        for (seq, &scheme) in seqs.iter_mut().zip(&config.schemes) {
            let t = Instant::now();
            let mut row = blank(scheme.name());
            let penalty = study_penalty(config, scheme, order);
            let outcome = (|| -> Result<()> {
                let sys = assemble_system_with(&space, &ops, scheme, &penalty, &|p| case.forcing(p))?;
                if config.condition {
                    row.cond = condition_number(&sys.matrix)?;
                }
                if solve {
                    let u = solve_dense(&sys.matrix, &sys.rhs)?;
                    row.l2_error = l2_error(&space, &u, &|p| case.exact(p));
                    if config.energy {
                        row.energy_error = energy_error(&space, &u, &case)?;
                    }
                }
                Ok(())
            })();
            if let Err(e) = outcome {
                diags.push(format!(
                    "K={} N={order} alpha={} beta={} flux={}: {e}",
                    mesh.num_elements(),
                    params.alpha(),
                    params.beta(),
                    scheme.name()
                ));
            }
            row.wall_time = shared_time + t.elapsed().as_secs_f64();
            seq.push(row);
        }
    }
    (seqs, diags)
}

/// Gram matrix of the discrete energy norm: E = Σ_axis Wᵀ W + J, where W
/// samples I^{μ/2}∂φ_j at the volume quadrature points and J is the
/// h⁻¹-weighted jump Gram matrix.
pub fn energy_gram(space: &DgSpace, params: &FracParams) -> Result<DenseMatrix> {
    let n = space.ndofs();
    let np = space.np();
    let rule = space.basis().volume_rule();
    let jumps = assemble_penalty(space, &PenaltyConfig::new(1.0, PenaltyLaw::Analysis)?, params);
    let mut gram = jumps.to_dense();
    for axis in Axis::BOTH {
        let integ = RayIntegrator::new(space, 0.5 * params.order(axis))?;
        let comp = Component::derivative(axis);
        let rows: Vec<Vec<(usize, f64)>> = (0..space.mesh().num_elements())
            .into_par_iter()
            .map(|e| -> Result<Vec<Vec<(usize, f64)>>> {
                let map = space.map(e);
                rule.points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(r, w)| {
                        let x = map.to_physical(r[0], r[1]);
                        let sw = (w * map.det()).sqrt();
                        let blocks = integ.mode_integrals(x, axis, Side::Left, Some(e), comp)?;
                        Ok(blocks
                            .into_iter()
                            .flat_map(|(el, vals)| vals.into_iter().enumerate().map(move |(k, v)| (el * np + k, sw * v)))
                            .collect())
                    })
                    .collect()
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
        for row in &rows {
            for &(i, vi) in row {
                for &(j, vj) in row {
                    gram[(i, j)] += vi * vj;
                }
            }
        }
    }
    debug_assert_eq!(gram.rows(), n);
    Ok(gram)
}

/// sup |vᵀA u| / (|||u||| |||v|||) = σ_max(C⁻¹ A C⁻ᵀ) with E = C Cᵀ.
pub fn boundedness_constant(a: &DenseMatrix, gram: &DenseMatrix) -> Result<f64> {
    let c = cholesky(gram)?;
    let n = a.rows();
    // X = C⁻¹ A, then Y = C⁻¹ Xᵀ = (X C⁻ᵀ)ᵀ.
    let forward = |b: &DenseMatrix| {
        let mut x = b.clone();
        for col in 0..n {
            for i in 0..n {
                let mut s = x[(i, col)];
                for k in 0..i {
                    s -= c[(i, k)] * x[(k, col)];
                }
                x[(i, col)] = s / c[(i, i)];
            }
        }
        x
    };
    let x = forward(a);
    let y = forward(&x.transpose());
    Ok(singular_values(&y)?.into_iter().fold(0.0, f64::max))
}
