//! Mesh generators.

use super::{BoundingBox, Mesh, Point};
use crate::error::{invalid, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `m × m` squares on `bbox`, each split along its lower-left → upper-right
/// diagonal. K = 2m².
pub fn structured(m: usize, bbox: BoundingBox) -> Result<Mesh> {
    grid(m, m, bbox, |_, _| true, 0.0, None)
}

/// A perturbed grid: interior vertices are displaced by up to
/// `amplitude · spacing` in each direction and every cell picks its diagonal
/// at random. Deterministic for a given seed. K = 2m².
pub fn jittered(m: usize, bbox: BoundingBox, amplitude: f64, seed: u64) -> Result<Mesh> {
    if !(0.0..0.5).contains(&amplitude) {
        return Err(invalid(format!("jitter amplitude {amplitude} outside [0, 0.5)")));
    }
    grid(m, m, bbox, |_, _| true, amplitude, Some(seed))
}

/// L-shaped domain (−1, 1)² minus the upper-right quadrant [0, 1)², meshed
/// by an `n × n` grid with `n` even (K = 3n²/2). With `jitter > 0` the grid
/// is perturbed as in [`jittered`].
pub fn l_shape(n: usize, jitter: f64, seed: u64) -> Result<Mesh> {
    if n < 2 || n % 2 != 0 {
        return Err(invalid(format!("L-shape grid needs an even cell count, got {n}")));
    }
    if !(0.0..0.5).contains(&jitter) {
        return Err(invalid(format!("jitter amplitude {jitter} outside [0, 0.5)")));
    }
    let half = n / 2;
    let seed = (jitter > 0.0).then_some(seed);
    grid(n, n, BoundingBox::square(-1.0, 1.0)?, |i, j| i < half || j < half, jitter, seed)
}

fn grid(
    nx: usize,
    ny: usize,
    bbox: BoundingBox,
    keep_cell: impl Fn(usize, usize) -> bool,
    amplitude: f64,
    seed: Option<u64>,
) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(invalid("grid needs at least one cell per axis"));
    }
    let dx = (bbox.xmax - bbox.xmin) / nx as f64;
    let dy = (bbox.ymax - bbox.ymin) / ny as f64;
    let mut rng = seed.map(ChaCha8Rng::seed_from_u64);

    // Which grid vertices are used, and which lie on the domain boundary.
    let mut cell_used = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            cell_used[j * nx + i] = keep_cell(i, j);
        }
    }
    let cell = |i: isize, j: isize| -> bool {
        i >= 0 && j >= 0 && (i as usize) < nx && (j as usize) < ny && cell_used[j as usize * nx + i as usize]
    };

    let mut index = vec![usize::MAX; (nx + 1) * (ny + 1)];
    let mut vertices = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            let (ii, jj) = (i as isize, j as isize);
            let around = [cell(ii - 1, jj - 1), cell(ii, jj - 1), cell(ii - 1, jj), cell(ii, jj)];
            if !around.iter().any(|&c| c) {
                continue;
            }
            let mut p = Point::new(bbox.xmin + i as f64 * dx, bbox.ymin + j as f64 * dy);
            if i == nx {
                p.x = bbox.xmax;
            }
            if j == ny {
                p.y = bbox.ymax;
            }
            let interior = around.iter().all(|&c| c);
            if let (Some(rng), true) = (rng.as_mut(), interior && amplitude > 0.0) {
                p.x += amplitude * dx * rng.random_range(-1.0..1.0);
                p.y += amplitude * dy * rng.random_range(-1.0..1.0);
            }
            index[j * (nx + 1) + i] = vertices.len();
            vertices.push(p);
        }
    }

    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            if !cell_used[j * nx + i] {
                continue;
            }
            let v00 = index[j * (nx + 1) + i];
            let v10 = index[j * (nx + 1) + i + 1];
            let v01 = index[(j + 1) * (nx + 1) + i];
            let v11 = index[(j + 1) * (nx + 1) + i + 1];
            let anti = match rng.as_mut() {
                Some(r) => r.random_bool(0.5),
                None => false,
            };
            if anti {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            } else {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            }
        }
    }
    Mesh::new(vertices, triangles)
}
