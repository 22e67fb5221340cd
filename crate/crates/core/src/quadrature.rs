//! One-dimensional Gauss rules.
//!
//! Nodes come from the eigenvalues of the symmetric Jacobi matrix of the
//! three-term recurrence (Golub–Welsch), are polished with a few Newton steps
//! on the monic recurrence, and the weights are the Christoffel numbers
//! `μ₀ / Σ q_k(x)²` computed from the orthonormal recurrence.

use crate::error::{invalid, Result};
use crate::special::{gamma, ln_gamma};
use faer::{Mat, Side};

/// Largest supported point count.
pub const MAX_POINTS: usize = 64;

/// A quadrature rule on [−1, 1] (or on an interval it was mapped to).
#[derive(Clone, Debug, PartialEq)]
pub struct QuadRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Σ wᵢ f(xᵢ).
    pub fn apply(&self, mut f: impl FnMut(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    /// Affinely maps a Legendre rule from [−1, 1] onto [lo, hi] and integrates `f`.
    pub fn integrate(&self, lo: f64, hi: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        half * self.apply(|x| f(mid + half * x))
    }
}

/// Recurrence coefficients (αₖ, βₖ) of the monic Jacobi polynomials for the
/// weight (1−x)^a (1+x)^b; β₀ is the total mass μ₀.
fn jacobi_recurrence(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let ab = a + b;
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + ab;
        alpha.push(if k == 0 {
            (b - a) / (ab + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        });
        beta.push(match k {
            0 => {
                if ab + 2.0 < 150.0 {
                    2f64.powf(ab + 1.0) * gamma(a + 1.0) * gamma(b + 1.0) / gamma(ab + 2.0)
                } else {
                    ((ab + 1.0) * 2f64.ln() + ln_gamma(a + 1.0) + ln_gamma(b + 1.0)
                        - ln_gamma(ab + 2.0))
                    .exp()
                }
            }
            // (1 + a + b) cancels analytically.
            1 => 4.0 * (1.0 + a) * (1.0 + b) / ((2.0 + ab).powi(2) * (3.0 + ab)),
            _ => {
                4.0 * kf * (kf + a) * (kf + b) * (kf + ab)
                    / (s * s * (s + 1.0) * (s - 1.0))
            }
        });
    }
    (alpha, beta)
}

/// Gauss–Jacobi rule with `n` points for the weight (1−x)^a (1+x)^b on [−1, 1].
///
/// Exact for polynomials of degree ≤ 2n−1 against the weight.
pub fn gauss_jacobi(n: usize, a: f64, b: f64) -> Result<QuadRule> {
    if !(1..=MAX_POINTS).contains(&n) {
        return Err(invalid(format!("point count {n} outside 1..={MAX_POINTS}")));
    }
    if !(a > -1.0 && b > -1.0) || !a.is_finite() || !b.is_finite() {
        return Err(invalid(format!("Jacobi exponents must exceed -1, got ({a}, {b})")));
    }
    let (alpha, beta) = jacobi_recurrence(n + 1, a, b);
    let mu0 = beta[0];

    let mut nodes = if n == 1 {
        vec![alpha[0]]
    } else {
        let mut jm = Mat::<f64>::zeros(n, n);
        for k in 0..n {
            jm[(k, k)] = alpha[k];
            if k + 1 < n {
                let off = beta[k + 1].sqrt();
                jm[(k, k + 1)] = off;
                jm[(k + 1, k)] = off;
            }
        }
        jm.self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| crate::Error::Numerical(format!("Jacobi matrix eigensolve: {e:?}")))?
    };

    // Newton polish on the monic recurrence.
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (mut p0, mut p1) = (0.0, 1.0);
            let (mut d0, mut d1) = (0.0, 0.0);
            for k in 0..n {
                let bk = if k == 0 { 0.0 } else { beta[k] };
                let p2 = (*x - alpha[k]) * p1 - bk * p0;
                let d2 = p1 + (*x - alpha[k]) * d1 - bk * d0;
                p0 = p1;
                p1 = p2;
                d0 = d1;
                d1 = d2;
            }
            if d1 == 0.0 {
                break;
            }
            let step = p1 / d1;
            if !step.is_finite() {
                break;
            }
            *x -= step;
            if step.abs() < 1e-17 {
                break;
            }
        }
    }
    nodes.sort_by(|p, q| p.total_cmp(q));

    if a == b {
        for i in 0..n / 2 {
            let v = 0.5 * (nodes[n - 1 - i] - nodes[i]);
            nodes[i] = -v;
            nodes[n - 1 - i] = v;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
    }

    let weights = nodes
        .iter()
        .map(|&x| {
            // Orthonormal recurrence: q_{k+1} √β_{k+1} = (x − α_k) q_k − √β_k q_{k−1}.
            let mut q_prev = 0.0;
            let mut q = 1.0 / mu0.sqrt();
            let mut sum = q * q;
            for k in 0..n - 1 {
                let sb = if k == 0 { 0.0 } else { beta[k].sqrt() };
                let q_next = ((x - alpha[k]) * q - sb * q_prev) / beta[k + 1].sqrt();
                q_prev = q;
                q = q_next;
                sum += q * q;
            }
            1.0 / sum
        })
        .collect();

    Ok(QuadRule { nodes, weights })
}

/// Gauss–Legendre rule with `n` points on [−1, 1]; exact to degree 2n−1.
pub fn gauss_legendre(n: usize) -> Result<QuadRule> {
    gauss_jacobi(n, 0.0, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::adaptive_simpson;

    /// ∫_{-1}^{1} (1−x)^a x^k dx from the integration-by-parts recurrence
    /// (a+1+k) M_k = k M_{k−1} + (−1)^k 2^{a+1}, which is forward stable.
    fn jacobi_moment(a: f64, k: u32) -> f64 {
        let c = 2f64.powf(a + 1.0);
        let mut m = c / (a + 1.0);
        for j in 1..=k {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            m = (j as f64 * m + sign * c) / (a + 1.0 + j as f64);
        }
        m
    }

    #[test]
    fn one_point_legendre() {
        let r = gauss_legendre(1).unwrap();
        assert_eq!(r.nodes, vec![0.0]);
        assert!((r.weights[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_legendre_on_square() {
        let r = gauss_legendre(2).unwrap();
        assert!((r.apply(|x| x * x) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn legendre_weights_sum_and_symmetry() {
        for n in 1..=MAX_POINTS {
            let r = gauss_legendre(n).unwrap();
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n = {n}: {s}");
            for i in 0..n {
                assert_eq!(r.nodes[i], -r.nodes[n - 1 - i]);
                assert!(r.weights[i] > 0.0);
            }
        }
    }

    #[test]
    fn jacobi_constant_moment() {
        // 2^μ/μ with a = μ − 1.
        let mu: f64 = 0.5;
        for n in [1, 3, 8, 20] {
            let r = gauss_jacobi(n, mu - 1.0, 0.0).unwrap();
            let s: f64 = r.weights.iter().sum();
            assert!((s - 2f64.powf(mu) / mu).abs() < 1e-13);
            assert!((s - 2.828_427_124_746_19).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobi_reduces_to_legendre() {
        for n in 1..=30 {
            let j = gauss_jacobi(n, 0.0, 0.0).unwrap();
            let l = gauss_legendre(n).unwrap();
            for i in 0..n {
                assert!((j.nodes[i] - l.nodes[i]).abs() < 1e-13);
                assert!((j.weights[i] - l.weights[i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn jacobi_against_adaptive_oracle() {
        // Substituting 1 − x = t^k with k = 1/(a+1) removes the singular weight:
        // ∫ (1−x)^a f(x) dx = k ∫_0^{2^{1/k}} f(1 − t^k) dt.
        let a: f64 = -0.4;
        let k = 1.0 / (a + 1.0);
        let r = gauss_jacobi(3, a, 0.0).unwrap();
        for f in [|x: f64| x, |x: f64| x * x] {
            let oracle = k * adaptive_simpson(&|t: f64| f(1.0 - t.powf(k)), 0.0, 2f64.powf(1.0 / k), 1e-14);
            let got = r.apply(f);
            assert!((got - oracle).abs() < 1e-12, "{got} vs {oracle}");
        }
    }

    #[test]
    fn polynomial_exactness_sweep() {
        for &a in &[-0.9, -0.5, -0.01, 0.0] {
            for n in 1..=16usize {
                let r = gauss_jacobi(n, a, 0.0).unwrap();
                for k in 0..=(2 * n - 1) as u32 {
                    let exact = jacobi_moment(a, k);
                    let got = r.apply(|x| x.powi(k as i32));
                    let scale = exact.abs().max(1.0);
                    assert!(
                        (got - exact).abs() < 1e-12 * scale,
                        "a={a} n={n} k={k}: {got} vs {exact}"
                    );
                }
                assert!(r.weights.iter().all(|&w| w > 0.0));
            }
        }
    }

    #[test]
    fn two_sided_weight() {
        // ∫ (1−x)^{1/2}(1+x)^{-1/2} dx = π.
        let r = gauss_jacobi(5, 0.5, -0.5).unwrap();
        assert!((r.apply(|_| 1.0) - std::f64::consts::PI).abs() < 1e-13);
        // ∫ (1-x)(1+x) x² dx = 4/15
        let r = gauss_jacobi(3, 1.0, 1.0).unwrap();
        assert!((r.apply(|x| x * x) - 4.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(gauss_legendre(0).is_err());
        assert!(gauss_legendre(65).is_err());
        assert!(gauss_jacobi(4, -1.0, 0.0).is_err());
        assert!(gauss_jacobi(4, 0.0, -1.5).is_err());
    }

    #[test]
    fn large_rules_are_exact() {
        let r = gauss_legendre(64).unwrap();
        assert!((r.apply(|x| x.powi(126)) - 2.0 / 127.0).abs() < 1e-13);
        let r = gauss_jacobi(64, -0.5, 0.0).unwrap();
        assert!((r.apply(|x| x.powi(20)) - jacobi_moment(-0.5, 20)).abs() < 1e-11);
    }
}
