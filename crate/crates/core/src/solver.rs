//! Dense direct solves and spectral diagnostics.

use crate::error::{invalid, Error, Result};
use crate::linalg::DenseMatrix;
use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Matrices up to this size get their condition number from a full SVD.
pub const SVD_LIMIT: usize = 2000;

/// LU factors with partial pivoting, P·A = L·U.
pub struct Factorization {
    lu: PartialPivLu<f64>,
    n: usize,
}

impl Factorization {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        if a.rows() != a.cols() {
            return Err(invalid(format!("matrix is {}x{}, not square", a.rows(), a.cols())));
        }
        let n = a.rows();
        let lu = a.to_faer().partial_piv_lu();
        let tiny = f64::EPSILON * n as f64 * a.max_abs();
        let u = lu.U();
        for i in 0..n {
            let d = u[(i, i)];
            if !(d.abs() > tiny) {
                return Err(Error::SingularMatrix { pivot: i });
            }
        }
        Ok(Self { lu, n })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(&mut x);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    pub fn solve_transpose(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_transpose_in_place(&mut x);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Dense L, U and the row permutation `perm` with (P·A)[i] = A[perm[i]].
    pub fn factors(&self) -> (DenseMatrix, DenseMatrix, Vec<usize>) {
        let l = DenseMatrix::from_faer(&self.lu.L().to_owned());
        let u = DenseMatrix::from_faer(&self.lu.U().to_owned());
        let perm = self.lu.P().arrays().0.to_vec();
        (l, u, perm)
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// ‖A x − b‖₂ / (‖A‖_F ‖x‖₂ + ‖b‖₂).
pub fn relative_residual(a: &DenseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let r: Vec<f64> = a.matvec(x).iter().zip(b).map(|(p, q)| p - q).collect();
    let fro = norm2(a.as_slice());
    let den = fro * norm2(x) + norm2(b);
    if den == 0.0 {
        0.0
    } else {
        norm2(&r) / den
    }
}

/// Solves A x = b, with one step of iterative refinement when the first
/// residual misses 1e−10.
pub fn solve_dense(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.rows() {
        return Err(invalid(format!("right-hand side has {} entries, matrix has {} rows", b.len(), a.rows())));
    }
    let f = Factorization::new(a)?;
    let mut x = f.solve(b);
    if relative_residual(a, &x, b) > 1e-10 {
        let r: Vec<f64> = b.iter().zip(a.matvec(&x)).map(|(p, q)| p - q).collect();
        x.iter_mut().zip(f.solve(&r)).for_each(|(xi, d)| *xi += d);
    }
    let res = relative_residual(a, &x, b);
    if !(res <= 1e-10) {
        return Err(Error::Numerical(format!("relative residual {res:e} after refinement")));
    }
    Ok(x)
}

/// Singular values, largest first.
pub fn singular_values(a: &DenseMatrix) -> Result<Vec<f64>> {
    a.to_faer().singular_values().map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))
}

/// 2-norm condition number σ_max/σ_min; +∞ for singular matrices.
pub fn condition_number(a: &DenseMatrix) -> Result<f64> {
    if a.rows() != a.cols() {
        return Err(invalid("condition number needs a square matrix"));
    }
    if a.rows() <= SVD_LIMIT {
        let s = singular_values(a)?;
        let (max, min) = (s[0], *s.last().expect("non-empty"));
        return Ok(if min > 0.0 { max / min } else { f64::INFINITY });
    }
    condition_number_iterative(a, 1e-6)
}

/// Power iteration on AᵀA for σ_max and inverse iteration for σ_min.
pub fn condition_number_iterative(a: &DenseMatrix, tol: f64) -> Result<f64> {
    let n = a.rows();
    let f = match Factorization::new(a) {
        Ok(f) => f,
        Err(Error::SingularMatrix { .. }) => return Ok(f64::INFINITY),
        Err(e) => return Err(e),
    };
    let at = a.transpose();
    let smax2 = power_iteration(n, tol, |x| at.matvec(&a.matvec(x)))?;
    let inv2 = power_iteration(n, tol, |x| f.solve(&f.solve_transpose(x)))?;
    Ok((smax2 * inv2).sqrt())
}

/// Dominant eigenvalue of a symmetric positive semidefinite operator.
fn power_iteration(n: usize, tol: f64, op: impl Fn(&[f64]) -> Vec<f64>) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut lambda = 0.0;
    for _ in 0..20_000 {
        let y = op(&x);
        let next: f64 = y.iter().zip(&x).map(|(a, b)| a * b).sum();
        let ny = norm2(&y);
        if ny == 0.0 {
            return Ok(0.0);
        }
        x = y.into_iter().map(|v| v / ny).collect();
        if (next - lambda).abs() <= tol * next.abs() {
            return Ok(next);
        }
        lambda = next;
    }
    Err(Error::Numerical("power iteration did not converge".into()))
}

/// Eigenvalues of the symmetric part ½(A + Aᵀ), ascending.
pub fn symmetric_part_eigenvalues(a: &DenseMatrix) -> Result<Vec<f64>> {
    let n = a.rows();
    let s = Mat::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    s.self_adjoint_eigenvalues(Side::Lower).map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))
}

/// Lower Cholesky factor of a symmetric positive definite matrix.
pub fn cholesky(a: &DenseMatrix) -> Result<DenseMatrix> {
    let llt = a
        .to_faer()
        .llt(Side::Lower)
        .map_err(|e| Error::Numerical(format!("matrix is not positive definite: {e:?}")))?;
    Ok(DenseMatrix::from_faer(&llt.L().to_owned()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = rng.random_range(-1.0..1.0);
            }
            a[(i, i)] += n as f64;
        }
        a
    }

    #[test]
    fn small_systems() {
        let b = vec![3.0, -1.0, 2.5];
        assert_eq!(solve_dense(&DenseMatrix::identity(3), &b).unwrap(), b);
        let mut d = DenseMatrix::zeros(2, 2);
        d[(0, 0)] = 2.0;
        d[(1, 1)] = 4.0;
        let x = solve_dense(&d, &[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_pivot_is_reported() {
        let mut a = DenseMatrix::zeros(3, 3);
        a[(0, 0)] = 1.0;
        a[(1, 1)] = 1.0;
        assert!(matches!(solve_dense(&a, &[1.0, 1.0, 1.0]), Err(Error::SingularMatrix { pivot: 2 })));
        assert!(solve_dense(&a, &[1.0]).is_err());
        assert_eq!(condition_number(&a).unwrap(), f64::INFINITY);
    }

    #[test]
    fn random_system_residual_and_reconstruction() {
        let a = random(50, 1);
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let x = solve_dense(&a, &b).unwrap();
        assert!(relative_residual(&a, &x, &b) <= 1e-10);
        let f = Factorization::new(&a).unwrap();
        let (l, u, perm) = f.factors();
        let mut lu = DenseMatrix::zeros(50, 50);
        for i in 0..50 {
            for j in 0..50 {
                lu[(i, j)] = (0..50).map(|k| l[(i, k)] * u[(k, j)]).sum();
            }
        }
        for i in 0..50 {
            for j in 0..50 {
                assert!((lu[(i, j)] - a[(perm[i], j)]).abs() <= 1e-12 * a.max_abs());
            }
        }
    }

    #[test]
    fn condition_numbers() {
        assert!((condition_number(&DenseMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-14);
        let mut d = DenseMatrix::zeros(2, 2);
        d[(0, 0)] = 1.0;
        d[(1, 1)] = 10.0;
        assert!((condition_number(&d).unwrap() - 10.0).abs() < 1e-12);
        let a = random(120, 7);
        let k = condition_number(&a).unwrap();
        let mut b = a.clone();
        b.as_mut_slice().iter_mut().for_each(|v| *v *= -3.7);
        assert!((condition_number(&b).unwrap() / k - 1.0).abs() < 1e-10);
        let it = condition_number_iterative(&a, 1e-10).unwrap();
        assert!((it / k - 1.0).abs() < 1e-4, "{it} {k}");
    }

    #[test]
    fn symmetric_part_and_cholesky() {
        let mut a = DenseMatrix::zeros(2, 2);
        a[(0, 0)] = 2.0;
        a[(0, 1)] = 3.0;
        a[(1, 0)] = -3.0;
        a[(1, 1)] = 1.0;
        let ev = symmetric_part_eigenvalues(&a).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 2.0).abs() < 1e-14);
        let mut s = DenseMatrix::identity(2);
        s[(0, 1)] = 0.5;
        s[(1, 0)] = 0.5;
        let l = cholesky(&s).unwrap();
        assert!((l[(1, 0)] - 0.5).abs() < 1e-15 && l[(0, 1)] == 0.0);
        assert!(cholesky(&a).is_err());
    }
}
