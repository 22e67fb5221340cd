mod common;

use common::*;
use fracdg::assembly::*;
use fracdg::fracint::FracParams;
use fracdg::mesh::{jittered, structured, BoundingBox, Point};
use fracdg::solver::solve_dense;
use fracdg::space::DgSpace;

fn square(m: usize) -> DgSpace {
    DgSpace::new(structured(m, BoundingBox::square(-1.0, 1.0).unwrap()).unwrap(), 1).unwrap()
}

fn space(m: usize, order: usize, jitter: bool) -> DgSpace {
    let b = BoundingBox::square(-1.0, 1.0).unwrap();
    let mesh = if jitter { jittered(m, b, 0.2, 11).unwrap() } else { structured(m, b).unwrap() };
    DgSpace::new(mesh, order).unwrap()
}

fn classical() -> FracParams {
    FracParams::new(2.0, 2.0).unwrap()
}

#[test]
fn classical_limit_matches_flux_form_oracle() {
    for (m, jitter) in [(2, false), (4, false), (3, true)] {
        for order in [1, 2] {
            let sp = space(m, order, jitter);
            let ops = FracOperators::new(&sp, classical()).unwrap();
            let penalty = PenaltyConfig::new(1.5, PenaltyLaw::Analysis).unwrap();
            let lambda = oracle_penalty(&sp, 1.5, true);
            let zero = vec![0.0; sp.mesh().edges().len()];
            let dir = [0.6, 0.8];
            let dir_switch: Vec<f64> = sp
                .mesh()
                .edges()
                .iter()
                .map(|e| match e.plus {
                    None => 0.0,
                    Some(_) => {
                        let n = outward_normal(sp.mesh().element_points(e.minus), e.minus_face);
                        if n[0] * dir[0] + n[1] * dir[1] >= 0.0 {
                            0.5
                        } else {
                            -0.5
                        }
                    }
                })
                .collect();
            let cases = [
                (FluxScheme::Central, OracleFlux::Mixed, zero.clone()),
                (FluxScheme::Ldg(EtaRule::MinId), OracleFlux::Mixed, min_id_switch(&sp)),
                (FluxScheme::Ldg(EtaRule::Direction(dir)), OracleFlux::Mixed, dir_switch),
                (FluxScheme::Ip, OracleFlux::Sipg, zero.clone()),
            ];
            for (scheme, flux, c) in cases {
                let a = assemble_operator(&sp, &ops, scheme, &penalty).unwrap();
                let oracle = classical_operator(&sp, flux, &c, &lambda);
                let diff = max_abs_diff(&oracle, &a);
                assert!(diff < 1e-10, "{} m={m} N={order}: {diff:e}", scheme.name());
            }
        }
    }
}

#[test]
fn doubling_the_penalty_adds_the_penalty_matrix() {
    let sp = square(2);
    let params = FracParams::new(1.3, 1.7).unwrap();
    let ops = FracOperators::new(&sp, params).unwrap();
    for scheme in [FluxScheme::Central, FluxScheme::Ldg(EtaRule::MinId), FluxScheme::Ip] {
        for law in [PenaltyLaw::Analysis, PenaltyLaw::Constant, PenaltyLaw::Fractional] {
            let p1 = PenaltyConfig::new(0.7, law).unwrap();
            let p2 = PenaltyConfig::new(1.4, law).unwrap();
            let mut d = assemble_operator(&sp, &ops, scheme, &p2).unwrap();
            d.add_scaled(&assemble_operator(&sp, &ops, scheme, &p1).unwrap(), -1.0);
            let s = assemble_penalty(&sp, &p1, &params).to_dense();
            assert!(d.max_abs_diff(&s) < 1e-12 * s.max_abs().max(1.0));
        }
    }
}

#[test]
fn penalty_matrix_matches_oracle() {
    let sp = space(3, 2, true);
    let params = FracParams::new(1.5, 1.5).unwrap();
    let s = assemble_penalty(&sp, &PenaltyConfig::new(2.0, PenaltyLaw::Analysis).unwrap(), &params).to_dense();
    // Penalty-only oracle: zero derivatives contribute nothing in SIPG minus the
    // volume and consistency terms, so compare through λ-linearity instead.
    let l2 = oracle_penalty(&sp, 2.0, true);
    let l0 = vec![0.0; l2.len()];
    let zero = vec![0.0; l2.len()];
    let with = classical_operator(&sp, OracleFlux::Sipg, &zero, &l2);
    let without = classical_operator(&sp, OracleFlux::Sipg, &zero, &l0);
    let diff: Vec<Vec<f64>> = with.iter().zip(&without).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect();
    assert!(max_abs_diff(&diff, &s) < 1e-10);
}

#[test]
fn streamed_bilinear_form_matches_matrix() {
    let sp = square(2);
    let params = FracParams::new(1.5, 1.5).unwrap();
    let ops = FracOperators::new(&sp, params).unwrap();
    let u = random_vector(sp.ndofs(), 1);
    let v = random_vector(sp.ndofs(), 2);
    for scheme in [FluxScheme::Central, FluxScheme::Ldg(EtaRule::MinId), FluxScheme::Ip] {
        let penalty = PenaltyConfig::default_for(scheme, 1);
        let a = assemble_operator(&sp, &ops, scheme, &penalty).unwrap();
        let want = a.bilinear(&v, &u);
        let got = apply_bilinear(&sp, params, scheme, &penalty, &u, &v).unwrap();
        assert!((got - want).abs() < 1e-10 * want.abs().max(1.0), "{}: {got} vs {want}", scheme.name());
    }
}

#[test]
fn element_boundary_identity_holds_for_random_broken_fields() {
    let sp = space(3, 2, true);
    for seed in 0..10 {
        let v = random_vector(sp.ndofs(), 3 * seed);
        let qx = random_vector(sp.ndofs(), 3 * seed + 1);
        let qy = random_vector(sp.ndofs(), 3 * seed + 2);
        let lhs = element_boundary_sum(&sp, &v, [&qx, &qy]);
        let rhs = edge_sum(&sp, &v, [&qx, &qy]);
        assert!((lhs - rhs).abs() < 1e-11 * lhs.abs().max(1.0));
    }
}

#[test]
fn lifting_matrices_satisfy_their_defining_relation() {
    let sp = space(3, 2, true);
    for scheme in [FluxScheme::Central, FluxScheme::Ldg(EtaRule::MinId), FluxScheme::Ldg(EtaRule::Direction([1.0, 0.3]))] {
        let c = eta_coefficients(&sp, scheme);
        let l = assemble_lifting(&sp, &c);
        for seed in 0..5 {
            let theta = random_vector(sp.ndofs(), 100 + seed);
            let px = random_vector(sp.ndofs(), 200 + seed);
            let py = random_vector(sp.ndofs(), 300 + seed);
            let lt = [l.x.matvec(&theta), l.y.matvec(&theta)];
            let lhs: f64 = lt[0].iter().zip(&px).map(|(a, b)| a * b).sum::<f64>()
                + lt[1].iter().zip(&py).map(|(a, b)| a * b).sum::<f64>();
            let rhs = lifting_rhs(&sp, &c, &theta, [&px, &py]);
            assert!((lhs - rhs).abs() < 1e-11 * rhs.abs().max(1.0), "{}: {lhs} vs {rhs}", scheme.name());
        }
    }
}

#[test]
fn min_id_switch_picks_the_lower_element() {
    let sp = space(4, 1, true);
    let c = eta_coefficients(&sp, FluxScheme::Ldg(EtaRule::MinId));
    assert_eq!(c, min_id_switch(&sp));
}

#[test]
fn solution_satisfies_galerkin_orthogonality() {
    let sp = square(2);
    let params = FracParams::new(1.4, 1.7).unwrap();
    let f = |p: Point| (1.0 + p.x) * (2.0 - p.y * p.y);
    for scheme in [FluxScheme::Central, FluxScheme::Ldg(EtaRule::MinId), FluxScheme::Ip] {
        let penalty = PenaltyConfig::default_for(scheme, 1);
        let sys = assemble_system(&sp, params, scheme, &penalty, &f).unwrap();
        let u = solve_dense(&sys.matrix, &sys.rhs).unwrap();
        let scale = sys.rhs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..sp.ndofs() {
            let mut e = vec![0.0; sp.ndofs()];
            e[i] = 1.0;
            let b = apply_bilinear(&sp, params, scheme, &penalty, &u, &e).unwrap();
            assert!((b - sys.rhs[i]).abs() <= 1e-8 * scale, "{} dof {i}", scheme.name());
        }
    }
}

#[test]
fn load_vector_matches_oracle_quadrature() {
    let sp = space(3, 2, true);
    let f = |p: Point| (3.0 * p.x).sin() * (1.0 + p.y * p.y);
    let rhs = assemble_rhs(&sp, &f).unwrap();
    for e in 0..sp.mesh().num_elements() {
        let mut want = vec![0.0; sp.np()];
        for (p, w) in triangle_quadrature(sp.mesh().element_points(e), 12) {
            let m = modes(&sp, e, p);
            for k in 0..sp.np() {
                want[k] += w * f(p) * m.val[k];
            }
        }
        for k in 0..sp.np() {
            assert!((rhs[e * sp.np() + k] - want[k]).abs() < 1e-9);
        }
    }
}

#[test]
fn binary_matrix_round_trip() {
    let sp = square(2);
    let sys = assemble_system(&sp, FracParams::new(1.5, 1.5).unwrap(), FluxScheme::Central, &PenaltyConfig::default_for(FluxScheme::Central, 1), &|_| 1.0).unwrap();
    let dir = std::env::temp_dir().join(format!("fracdg-asm-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("a.bin");
    sys.write_matrix_binary(&path).unwrap();
    let back = read_dense_binary(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(back, sys.matrix);
    assert!(read_dense_binary(&[1, 2, 3]).is_err());
    let mut huge = (1u64 << 31).to_le_bytes().to_vec();
    huge.extend((1u64 << 31).to_le_bytes());
    assert!(read_dense_binary(&huge).is_err());
    std::fs::remove_dir_all(&dir).unwrap();
}

proptest::proptest! {
    #[test]
    fn matrix_decoder_never_panics(bytes in proptest::collection::vec(proptest::prelude::any::<u8>(), 0..200)) {
        if let Ok(m) = read_dense_binary(&bytes) {
            proptest::prop_assert_eq!(16 + 8 * m.rows() * m.cols(), bytes.len());
        }
    }
}
