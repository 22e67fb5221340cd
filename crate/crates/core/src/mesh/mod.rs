//! Triangular meshes: storage, connectivity, point location and axis-aligned
//! ray traversal.

mod generate;
mod io;
mod ray;

pub use generate::{jittered, l_shape, structured};
pub use io::{load_mesh, parse_gmsh, parse_mesh, parse_native, write_native};
pub use ray::RaySegment;

use crate::error::{Error, Result};
use std::collections::HashMap;

/// Relative geometric tolerance; multiplied by the domain extent.
pub const GEOM_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Coordinate along `axis`.
    pub fn along(self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
        }
    }

    /// The fixed coordinate of a ray along `axis`.
    pub fn across(self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.y,
            Axis::Y => self.x,
        }
    }

    /// Builds a point from (along, across) coordinates.
    pub fn from_axis(axis: Axis, along: f64, across: f64) -> Self {
        match axis {
            Axis::X => Self::new(along, across),
            Axis::Y => Self::new(across, along),
        }
    }

    fn dist(self, o: Point) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }
}

/// Integration direction of a fractional integral.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub const BOTH: [Axis; 2] = [Axis::X, Axis::Y];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }
}

/// Left-sided integrals run from the lower bounding-box edge up to the
/// target; right-sided ones from the target to the upper edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// Axis-aligned bounding box `(a, b) × (c, d)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl BoundingBox {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Result<Self> {
        let ok = [xmin, xmax, ymin, ymax].iter().all(|v| v.is_finite());
        if !ok || xmax - xmin <= 0.0 || ymax - ymin <= 0.0 {
            return Err(Error::Degenerate(format!(
                "box ({xmin}, {xmax}) x ({ymin}, {ymax}) has no interior"
            )));
        }
        Ok(Self { xmin, xmax, ymin, ymax })
    }

    pub fn square(lo: f64, hi: f64) -> Result<Self> {
        Self::new(lo, hi, lo, hi)
    }

    pub fn extent(&self) -> f64 {
        (self.xmax - self.xmin).max(self.ymax - self.ymin)
    }

    pub fn lower(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.xmin,
            Axis::Y => self.ymin,
        }
    }

    pub fn upper(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.xmax,
            Axis::Y => self.ymax,
        }
    }

    pub fn area(&self) -> f64 {
        (self.xmax - self.xmin) * (self.ymax - self.ymin)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    /// Vertex indices in counter-clockwise order.
    pub vertices: [usize; 3],
    pub area: f64,
    /// Longest edge length.
    pub diameter: f64,
}

/// A geometric edge. Local face `f` of an element joins its vertices
/// `f` and `(f + 1) % 3`.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Endpoints, ordered counter-clockwise as seen from `minus`.
    pub vertices: [usize; 2],
    pub minus: usize,
    pub minus_face: usize,
    /// `None` on the boundary Γ_b.
    pub plus: Option<usize>,
    pub plus_face: Option<usize>,
    /// Unit normal pointing out of `minus`.
    pub normal: [f64; 2],
    pub length: f64,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.plus.is_none()
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    elements: Vec<Element>,
    edges: Vec<Edge>,
    element_edges: Vec<[usize; 3]>,
    neighbors: Vec<[Option<usize>; 3]>,
    bbox: BoundingBox,
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y))
}

impl Mesh {
    /// Builds a mesh from raw vertices and triangles. Triangles given in
    /// clockwise order are flipped.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        Self::with_boundary(vertices, triangles, &[])
    }

    /// Like [`Mesh::new`], additionally forcing the listed vertex pairs to be
    /// treated as boundary edges even when two elements share them.
    pub fn with_boundary(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        forced_boundary: &[[usize; 2]],
    ) -> Result<Self> {
        if vertices.is_empty() || triangles.is_empty() {
            return Err(Error::Degenerate("mesh has no elements".into()));
        }
        if let Some(p) = vertices.iter().find(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Degenerate(format!("non-finite vertex ({}, {})", p.x, p.y)));
        }
        let (mut xmin, mut xmax, mut ymin, mut ymax) =
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for t in &triangles {
            for &v in t {
                let p = *vertices.get(v).ok_or(Error::MissingVertex {
                    element: 0,
                    vertex: v,
                })?;
                xmin = xmin.min(p.x);
                xmax = xmax.max(p.x);
                ymin = ymin.min(p.y);
                ymax = ymax.max(p.y);
            }
        }
        let bbox = BoundingBox::new(xmin, xmax, ymin, ymax)?;
        let area_tol = (GEOM_TOL * bbox.extent()).powi(2);

        let mut elements = Vec::with_capacity(triangles.len());
        for (id, t) in triangles.iter().enumerate() {
            let mut t = *t;
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::Degenerate(format!("element {id} repeats a vertex")));
            }
            let [a, b, c] = t.map(|v| vertices[v]);
            let mut area = signed_area(a, b, c);
            if area.abs() <= area_tol {
                return Err(Error::Degenerate(format!("element {id} has zero area")));
            }
            if area < 0.0 {
                t.swap(1, 2);
                area = -area;
            }
            let diameter = a.dist(b).max(b.dist(c)).max(c.dist(a));
            elements.push(Element { vertices: t, area, diameter });
        }

        let mut mesh = Mesh {
            vertices,
            elements,
            edges: Vec::new(),
            element_edges: Vec::new(),
            neighbors: Vec::new(),
            bbox,
        };
        mesh.build_connectivity(forced_boundary)?;
        Ok(mesh)
    }

    /// Matches element faces into edges and fills the neighbour table.
    fn build_connectivity(&mut self, forced_boundary: &[[usize; 2]]) -> Result<()> {
        let key = |a: usize, b: usize| if a < b { (a, b) } else { (b, a) };
        let mut faces: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
        let mut order = Vec::new();
        for (e, el) in self.elements.iter().enumerate() {
            for f in 0..3 {
                let k = key(el.vertices[f], el.vertices[(f + 1) % 3]);
                let entry = faces.entry(k).or_default();
                if entry.is_empty() {
                    order.push(k);
                }
                entry.push((e, f));
                if entry.len() > 2 {
                    return Err(Error::NonConforming(k.0, k.1));
                }
            }
        }
        let mut forced = std::collections::HashSet::new();
        for &[a, b] in forced_boundary {
            let k = key(a, b);
            if !faces.contains_key(&k) {
                return Err(Error::InvalidArgument(format!(
                    "boundary override ({a}, {b}) is not an edge of the mesh"
                )));
            }
            forced.insert(k);
        }

        let k_elems = self.elements.len();
        self.edges.clear();
        self.element_edges = vec![[usize::MAX; 3]; k_elems];
        self.neighbors = vec![[None; 3]; k_elems];
        for k in order {
            let sides = &faces[&k];
            let mut push = |minus: (usize, usize), plus: Option<(usize, usize)>, edges: &mut Vec<Edge>| {
                let el = &self.elements[minus.0];
                let a = el.vertices[minus.1];
                let b = el.vertices[(minus.1 + 1) % 3];
                let (pa, pb) = (self.vertices[a], self.vertices[b]);
                let length = pa.dist(pb);
                let normal = [(pb.y - pa.y) / length, -(pb.x - pa.x) / length];
                let id = edges.len();
                edges.push(Edge {
                    vertices: [a, b],
                    minus: minus.0,
                    minus_face: minus.1,
                    plus: plus.map(|p| p.0),
                    plus_face: plus.map(|p| p.1),
                    normal,
                    length,
                });
                self.element_edges[minus.0][minus.1] = id;
                if let Some(p) = plus {
                    self.element_edges[p.0][p.1] = id;
                    self.neighbors[minus.0][minus.1] = Some(p.0);
                    self.neighbors[p.0][p.1] = Some(minus.0);
                }
            };
            let mut edges = std::mem::take(&mut self.edges);
            match sides.as_slice() {
                [one] => push(*one, None, &mut edges),
                [s0, s1] if forced.contains(&k) => {
                    push(*s0, None, &mut edges);
                    push(*s1, None, &mut edges);
                }
                [s0, s1] => {
                    // The smaller element id is always the minus side.
                    let (m, p) = if s0.0 <= s1.0 { (*s0, *s1) } else { (*s1, *s0) };
                    if m.0 == p.0 {
                        return Err(Error::Degenerate(format!(
                            "element {} uses edge ({}, {}) twice",
                            m.0, k.0, k.1
                        )));
                    }
                    let (ea, eb) = (self.elements[m.0].vertices[m.1], self.elements[m.0].vertices[(m.1 + 1) % 3]);
                    let (fa, fb) = (self.elements[p.0].vertices[p.1], self.elements[p.0].vertices[(p.1 + 1) % 3]);
                    if ea != fb || eb != fa {
                        // Both sides traverse the edge in the same direction: the
                        // two elements overlap instead of abutting.
                        return Err(Error::Degenerate(format!(
                            "elements {} and {} overlap across edge ({}, {})",
                            m.0, p.0, k.0, k.1
                        )));
                    }
                    push(m, Some(p), &mut edges);
                }
                _ => unreachable!("face lists hold one or two entries"),
            }
            self.edges = edges;
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Number of elements K.
    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn bbox(&self) -> &BoundingBox {
        &self.bbox
    }

    /// Edge ids of the three local faces of element `e`.
    pub fn element_edges(&self, e: usize) -> [usize; 3] {
        self.element_edges[e]
    }

    /// Neighbour across each local face (`None` on the boundary).
    pub fn neighbors(&self, e: usize) -> [Option<usize>; 3] {
        self.neighbors[e]
    }

    pub fn element_points(&self, e: usize) -> [Point; 3] {
        self.elements[e].vertices.map(|v| self.vertices[v])
    }

    pub fn centroid(&self, e: usize) -> Point {
        let [a, b, c] = self.element_points(e);
        Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0)
    }

    /// Σ element areas.
    pub fn area(&self) -> f64 {
        self.elements.iter().map(|e| e.area).sum()
    }

    /// Largest element diameter.
    pub fn max_diameter(&self) -> f64 {
        self.elements.iter().map(|e| e.diameter).fold(0.0, f64::max)
    }

    /// Absolute geometric tolerance for this mesh.
    pub fn tolerance(&self) -> f64 {
        GEOM_TOL * self.bbox.extent()
    }

    /// Barycentric coordinates of `p` with respect to element `e`.
    pub fn barycentric(&self, e: usize, p: Point) -> [f64; 3] {
        let [a, b, c] = self.element_points(e);
        let area = signed_area(a, b, c);
        [
            signed_area(p, b, c) / area,
            signed_area(a, p, c) / area,
            signed_area(a, b, p) / area,
        ]
    }

    /// Element containing `p`; when `p` sits on shared boundaries the element
    /// in which it is most interior wins (ties go to the lowest id).
    pub fn locate(&self, p: Point) -> Option<usize> {
        let tol = 1e-10;
        let mut best: Option<(usize, f64)> = None;
        for e in 0..self.elements.len() {
            let lam = self.barycentric(e, p);
            let m = lam[0].min(lam[1]).min(lam[2]);
            if m >= -tol && best.is_none_or(|(_, bm)| m > bm) {
                best = Some((e, m));
            }
        }
        best.map(|(e, _)| e)
    }

    /// Number of boundary edges.
    pub fn num_boundary_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.is_boundary()).count()
    }
}
