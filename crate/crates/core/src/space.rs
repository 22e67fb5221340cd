//! The broken polynomial space V_h on a mesh.

use crate::basis::{project, ElementMap, ReferenceBasis};
use crate::error::Result;
use crate::mesh::{Mesh, Point};
use std::ops::Range;

/// A mesh together with a reference basis and the element maps. Degrees of
/// freedom are element-major: element `e` owns `e·Np .. (e+1)·Np`.
#[derive(Clone, Debug)]
pub struct DgSpace {
    mesh: Mesh,
    basis: ReferenceBasis,
    maps: Vec<ElementMap>,
}

impl DgSpace {
    pub fn new(mesh: Mesh, order: usize) -> Result<Self> {
        let basis = ReferenceBasis::new(order)?;
        let maps = ElementMap::all(&mesh);
        Ok(Self { mesh, basis, maps })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn basis(&self) -> &ReferenceBasis {
        &self.basis
    }

    pub fn map(&self, e: usize) -> &ElementMap {
        &self.maps[e]
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    pub fn np(&self) -> usize {
        self.basis.np()
    }

    pub fn ndofs(&self) -> usize {
        self.np() * self.mesh.num_elements()
    }

    pub fn dofs(&self, e: usize) -> Range<usize> {
        e * self.np()..(e + 1) * self.np()
    }

    /// Physical mode values of element `e` at `p` (extrapolated if `p` lies
    /// outside the element).
    pub fn modes_at(&self, e: usize, p: Point, out: &mut [f64]) {
        let map = &self.maps[e];
        let rs = map.to_reference(p);
        self.basis.eval(rs[0], rs[1], out);
        let sc = map.scale();
        out.iter_mut().for_each(|v| *v *= sc);
    }

    /// Physical mode values and gradients of element `e` at `p`.
    pub fn mode_grads_at(&self, e: usize, p: Point, val: &mut [f64], gx: &mut [f64], gy: &mut [f64]) {
        let map = &self.maps[e];
        let rs = map.to_reference(p);
        self.basis.eval_grad(rs[0], rs[1], val, gx, gy);
        let sc = map.scale();
        for k in 0..val.len() {
            let g = map.gradient(gx[k], gy[k]);
            val[k] *= sc;
            gx[k] = g[0] * sc;
            gy[k] = g[1] * sc;
        }
    }

    /// Value of the global coefficient vector `u` restricted to element `e`.
    pub fn value(&self, u: &[f64], e: usize, p: Point) -> f64 {
        let mut m = vec![0.0; self.np()];
        self.modes_at(e, p, &mut m);
        m.iter().zip(&u[self.dofs(e)]).map(|(a, b)| a * b).sum()
    }

    /// Value and gradient of `u` restricted to element `e`.
    pub fn value_grad(&self, u: &[f64], e: usize, p: Point) -> (f64, [f64; 2]) {
        let np = self.np();
        let (mut v, mut gx, mut gy) = (vec![0.0; np], vec![0.0; np], vec![0.0; np]);
        self.mode_grads_at(e, p, &mut v, &mut gx, &mut gy);
        let c = &u[self.dofs(e)];
        let dot = |t: &[f64]| t.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
        (dot(&v), [dot(&gx), dot(&gy)])
    }

    /// Element-wise L² projection of `f`.
    pub fn project(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.ndofs());
        for map in &self.maps {
            out.extend(project(map, &self.basis, &f));
        }
        out
    }

    /// Physical point of face quadrature node `q` on local face `f` of `e`.
    pub fn face_point(&self, e: usize, f: usize, q: usize) -> Point {
        let t = self.basis.face_nodes()[q];
        let rs = crate::basis::face_point(f, t);
        self.maps[e].to_physical(rs[0], rs[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{jittered, BoundingBox};

    #[test]
    fn extrapolation_matches_global_polynomial() {
        let mesh = jittered(3, BoundingBox::square(-1.0, 1.0).unwrap(), 0.2, 5).unwrap();
        let sp = DgSpace::new(mesh, 3).unwrap();
        let f = |p: Point| 1.0 + p.x - 2.0 * p.y * p.x + p.x.powi(3) - 0.5 * p.y.powi(2) * p.x;
        let u = sp.project(f);
        for e in 0..sp.mesh().num_elements() {
            for p in [Point::new(-0.95, 0.9), Point::new(0.3, -0.7), Point::new(0.99, 0.99)] {
                assert!((sp.value(&u, e, p) - f(p)).abs() < 1e-11);
            }
        }
    }
}
