//! Acceptance gate: one test per contract the library must honor, each
//! ending in a single `PASS` line (visible with `--nocapture`; the harness
//! line itself is the pass/fail record otherwise). Checks are either exact
//! (normal forms subtract to zero) or pinned to the tolerances below, and
//! every randomized check runs from a fixed seed.
//!
//! Where a result could be produced and checked by the same code path, the
//! test carries its own oracle instead: the torus quadrature in
//! `a10_exact_integration_matches_quadrature` and the classical Christoffel
//! transformation law in `a09_covariance_under_chart_changes` are implemented
//! here, independently of the library.

use densops::densities::{density_pullback, ChartChange, Density};
use densops::geometry::{
    brans_dicke, covariant_parts, gamma_transform, kk_extract, op_conjugate, pi_symbols,
    thomas_lift, Christoffel, Connection, GeometryError,
};
use densops::operators::{build_canonical, commutator, extract_symbol, DiffOperator, SymbolTriple};
use densops::pencils::{canonical_pencil, example_pencil, LambdaOperator};
use densops::verify::{
    integrate_torus, rand_christoffel, rand_operator, rand_symbol_triple, rand_trig_poly,
    rand_vector_field, rand_weight, scalar_product, TorusValue,
};
use densops::{expr_equal, EqualityPolicy, Expression, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Residual bound for checks that fall back to evaluation at seeded sample
/// points (duality on the quadrature path, nonlinear covariance, numeric
/// connection recovery).
const SAMPLE_TOL: f64 = 1e-9;
/// Agreement bound between the exact Fourier integral and plain quadrature.
const INTEGRATOR_TOL: f64 = 1e-10;
/// Base seed; each test offsets it so the streams are independent.
const SEED: u64 = 0xACC0_5EED;

fn rng(offset: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(SEED + offset)
}

fn assert_expr_exact(a: &Expression, b: &Expression, what: &str) {
    assert!(
        expr_equal(a, b, EqualityPolicy::Symbolic).unwrap(),
        "{what}: {a} ≠ {b}"
    );
}

fn assert_expr_near(a: &Expression, b: &Expression, what: &str) {
    let policy = EqualityPolicy::SymbolicThenNumeric {
        tolerance: SAMPLE_TOL,
    };
    assert!(expr_equal(a, b, policy).unwrap(), "{what}: {a} ≠ {b}");
}

fn assert_op_exact(a: &DiffOperator, b: &DiffOperator, what: &str) {
    assert!(
        a.equal(b, EqualityPolicy::Symbolic).unwrap(),
        "{what}:\n  left  = {a}\n  right = {b}"
    );
}

/// Termwise comparison: every normal-ordered term of `a − b` must vanish.
fn assert_op_termwise(a: &DiffOperator, b: &DiffOperator, what: &str) {
    let diff = a.sub(b);
    for (key, coeff) in diff.terms() {
        assert!(
            expr_equal(coeff, &Expression::zero(), EqualityPolicy::Symbolic).unwrap(),
            "{what}: term ∂^{:?}ŵ^{} differs by {coeff}",
            key.alpha,
            key.wpow,
        );
    }
}

fn torus_exactly_equal(a: &TorusValue, b: &TorusValue) -> bool {
    match (a, b) {
        (
            TorusValue::Exact {
                coeff: c1,
                pi_power: p1,
            },
            TorusValue::Exact {
                coeff: c2,
                pi_power: p2,
            },
        ) => (c1.is_zero() && c2.is_zero()) || (c1 == c2 && p1 == p2),
        _ => false,
    }
}

#[test]
fn a01_adjoint_is_an_involution_and_antihomomorphism() {
    let mut rng = rng(1);
    for trial in 0..50 {
        let dim = trial % 3 + 1;
        let a = rand_operator(&mut rng, dim, 3, 2);
        let b = rand_operator(&mut rng, dim, 3, 2);
        assert_op_exact(
            &a.adjoint().adjoint(),
            &a,
            &format!("trial {trial}: (Â*)* = Â"),
        );
        assert_op_exact(
            &a.compose(&b).adjoint(),
            &b.adjoint().compose(&a.adjoint()),
            &format!("trial {trial}: (Â∘B̂)* = B̂*∘Â*"),
        );
    }
    println!("PASS 01 — adjoint involution and anti-homomorphism, exact on 50 seeded operators");
}

#[test]
fn a02_adjoint_satisfies_integral_duality_on_tori() {
    let mut rng = rng(2);
    let mut exact_trials = 0usize;
    for trial in 0..50 {
        let dim = trial % 2 + 1;
        let op = rand_operator(&mut rng, dim, if dim == 1 { 3 } else { 2 }, 2);
        let lambda = rand_weight(&mut rng, false);
        let co_lambda = &Rational::one() - &lambda;
        let d1 = Density::term(lambda, rand_trig_poly(&mut rng, dim, 2));
        let d2 = Density::term(co_lambda, rand_trig_poly(&mut rng, dim, 2));
        let lhs = scalar_product(&op.apply(&d1), &d2, dim).unwrap();
        let rhs = scalar_product(&d1, &op.adjoint().apply(&d2), dim).unwrap();
        if torus_exactly_equal(&lhs, &rhs) {
            exact_trials += 1;
            continue;
        }
        let residual = (lhs.to_f64() - rhs.to_f64()).abs();
        assert!(
            residual <= SAMPLE_TOL * (1.0 + lhs.to_f64().abs()),
            "trial {trial} on T^{dim}: ⟨Âs₁,s₂⟩ = {lhs} but ⟨s₁,Â*s₂⟩ = {rhs}"
        );
    }
    assert_eq!(
        exact_trials, 50,
        "trig-polynomial data must take the exact Fourier path"
    );
    println!("PASS 02 — ⟨Âs₁,s₂⟩ = ⟨s₁,Â*s₂⟩ on T¹/T², all 50 trials exact via Fourier");
}

#[test]
fn a03_canonical_operators_are_self_adjoint_and_kill_constants() {
    let mut rng = rng(3);
    let unit = Density::term(Rational::zero(), Expression::one());
    for trial in 0..25 {
        let dim = trial % 3 + 1;
        let st = rand_symbol_triple(&mut rng, dim, 2);
        let op = build_canonical(&st);
        assert!(
            op.is_self_adjoint(EqualityPolicy::Symbolic).unwrap(),
            "trial {trial}: canonical operator is not self-adjoint: {op}"
        );
        assert!(
            op.apply(&unit).is_zero(),
            "trial {trial}: canonical operator does not annihilate constants: {op}"
        );
    }
    println!(
        "PASS 03 — canonical operators self-adjoint and annihilate constants, 25 triples exact"
    );
}

#[test]
fn a04_pencil_reconstruction_is_unique_and_rejects_singular_weights() {
    let mut rng = rng(4);
    let anchors = [
        Rational::from_int(2),
        Rational::from_int(-1),
        Rational::new(3, 2),
    ];
    for trial in 0..25 {
        let dim = trial % 3 + 1;
        let st = rand_symbol_triple(&mut rng, dim, 2);
        let full = build_canonical(&st);
        for lambda0 in &anchors {
            let restricted = full.restrict(lambda0);
            let l = LambdaOperator::new(restricted, lambda0.clone())
                .expect("restrictions at regular weights are valid pencil inputs");
            let rebuilt = canonical_pencil(&l);
            assert_op_exact(
                &rebuilt,
                &full,
                &format!("trial {trial}, λ₀ = {lambda0:?}: pencil through the restriction"),
            );
            let recovered = extract_symbol(&rebuilt).unwrap();
            for i in 0..dim {
                for k in 0..dim {
                    assert_expr_exact(
                        &recovered.s()[i][k],
                        &st.s()[i][k],
                        &format!("trial {trial}: S[{i}][{k}]"),
                    );
                }
                assert_expr_exact(
                    &recovered.b()[i],
                    &st.b()[i],
                    &format!("trial {trial}: B[{i}]"),
                );
            }
            assert_expr_exact(recovered.c(), st.c(), &format!("trial {trial}: C"));
        }
    }
    let sample = build_canonical(&rand_symbol_triple(&mut rng, 2, 1));
    for singular in [Rational::zero(), Rational::new(1, 2), Rational::one()] {
        let restricted = sample.restrict(&singular);
        assert!(
            LambdaOperator::new(restricted, singular.clone()).is_err(),
            "weight {singular:?} must be rejected"
        );
    }
    println!("PASS 04 — pencil reconstruction recovers (S,B,C) exactly at λ₀ ∈ {{2,−1,3/2}}, singular weights rejected");
}

#[test]
fn a05_lie_derivative_pencil_matches_reconstruction_and_both_closed_forms() {
    let mut rng = rng(5);
    for trial in 0..10 {
        let dim = trial % 2 + 1;
        let x = rand_vector_field(&mut rng, dim, 2);
        let y = rand_vector_field(&mut rng, dim, 2);
        let lambda0 = rand_weight(&mut rng, true);
        let pencil = example_pencil(&x, &y, &lambda0).unwrap();

        // Reconstruction route: restrict L̂_X L̂_Y to weight λ₀ and lift back.
        let product = x.lie_lift().compose(&y.lie_lift());
        let l = LambdaOperator::new(product.restrict(&lambda0), lambda0.clone()).unwrap();
        assert_op_exact(
            &pencil,
            &canonical_pencil(&l),
            &format!("trial {trial}: pencil vs reconstruction through L̂_X L̂_Y at λ₀ = {lambda0:?}"),
        );

        // Symmetrized closed form:
        // ½(L̂_X L̂_Y + L̂_Y L̂_X) + ½·(2ŵ−1)/(2λ₀−1)·[L̂_X, L̂_Y].
        let lx = x.lie_lift();
        let ly = y.lie_lift();
        let half = Rational::new(1, 2);
        let inv = (&(&lambda0 + &lambda0) - &Rational::one()).recip();
        let w_factor = DiffOperator::weight(dim)
            .scale(&Rational::from_int(2))
            .sub(&DiffOperator::identity(dim))
            .scale(&inv);
        let symmetrized = lx
            .compose(&ly)
            .add(&ly.compose(&lx))
            .scale(&half)
            .add(&w_factor.compose(&commutator(&lx, &ly)).scale(&half));
        assert_op_termwise(
            &pencil,
            &symmetrized,
            &format!("trial {trial}: the two closed forms"),
        );
    }
    println!("PASS 05 — Lie-derivative pencil equals its reconstruction and the symmetrized form termwise, 10 pairs");
}

#[test]
fn a06_lie_lifts_are_divergence_free_homomorphisms() {
    let mut rng = rng(6);
    for trial in 0..25 {
        let dim = trial % 3 + 1;
        let x = rand_vector_field(&mut rng, dim, 2);
        let y = rand_vector_field(&mut rng, dim, 2);
        assert!(
            x.lie_lift().divergence().unwrap().is_zero(),
            "trial {trial}: div L̂_X ≠ 0"
        );
        assert_op_exact(
            &commutator(&x.lie_lift(), &y.lie_lift()),
            &x.commutator(&y).unwrap().lie_lift(),
            &format!("trial {trial}: [L̂_X, L̂_Y] = L̂_[X,Y]"),
        );
    }
    println!("PASS 06 — Lie lifts divergence-free and bracket-preserving, 25 trials exact");
}

/// A strictly diagonally dominant symmetric matrix of trig polynomials:
/// diagonal 3 + small oscillation, off-diagonal bounded by ¼, so it is
/// invertible everywhere on the torus.
fn dominant_symbol(rng: &mut ChaCha20Rng, dim: usize) -> Vec<Vec<Expression>> {
    let mut s = vec![vec![Expression::zero(); dim]; dim];
    for i in 0..dim {
        let xi = Expression::coord(rng.gen_range(0..dim));
        let wave = if rng.gen() { xi.sin() } else { xi.cos() };
        s[i][i] = &Expression::from_int(3) + &wave.scale(&Rational::new(1, 2));
        for k in (i + 1)..dim {
            let xj = Expression::coord(rng.gen_range(0..dim));
            let off = xj.sin().scale(&Rational::new(1, 4));
            s[i][k] = off.clone();
            s[k][i] = off;
        }
    }
    s
}

#[test]
fn a07_connection_extraction_inverts_the_kaluza_klein_condition() {
    let mut rng = rng(7);
    for dim in 1..=3 {
        for trial in 0..10 {
            let s = dominant_symbol(&mut rng, dim);
            let gamma: Vec<Expression> =
                (0..dim).map(|_| rand_trig_poly(&mut rng, dim, 2)).collect();
            let b: Vec<Expression> = (0..dim)
                .map(|i| {
                    let mut acc = Expression::zero();
                    for k in 0..dim {
                        acc = &acc + &(&s[i][k] * &gamma[k]);
                    }
                    acc
                })
                .collect();
            let c = rand_trig_poly(&mut rng, dim, 2);
            let st = SymbolTriple::new(s, b, c.clone()).unwrap();
            let recovered = kk_extract(&st).unwrap();
            for k in 0..dim {
                assert_expr_near(
                    &recovered.components()[k],
                    &gamma[k],
                    &format!("dim {dim}, trial {trial}: γ[{k}]"),
                );
            }
            // With B = Sγ the scalar C − Bⁱγᵢ is what remains of C.
            let mut bg = Expression::zero();
            for i in 0..dim {
                bg = &bg + &(&st.b()[i] * &gamma[i]);
            }
            assert_expr_near(
                &brans_dicke(&st, &recovered).unwrap(),
                &(&c - &bg),
                &format!("dim {dim}, trial {trial}: residual scalar"),
            );
        }
    }

    // Degenerate symbol: S has rank 1, B points out of its range.
    let s = vec![
        vec![Expression::one(), Expression::zero()],
        vec![Expression::zero(), Expression::zero()],
    ];
    let b = vec![Expression::zero(), Expression::one()];
    let st = SymbolTriple::new(s, b, Expression::zero()).unwrap();
    match kk_extract(&st) {
        Err(GeometryError::DegenerateSymbol { b_in_range }) => {
            assert!(!b_in_range, "B = (0,1) is not in the range of diag(1,0)")
        }
        other => panic!("degenerate symbol must be refused, got {other:?}"),
    }
    // …and with B inside the range the failure reports recoverable directions.
    let s = vec![
        vec![Expression::one(), Expression::zero()],
        vec![Expression::zero(), Expression::zero()],
    ];
    let b = vec![Expression::coord(0).sin(), Expression::zero()];
    let st = SymbolTriple::new(s, b, Expression::zero()).unwrap();
    match kk_extract(&st) {
        Err(GeometryError::DegenerateSymbol { b_in_range }) => {
            assert!(b_in_range, "B = (sin x₁, 0) lies in the range of diag(1,0)")
        }
        other => panic!("degenerate symbol must be refused, got {other:?}"),
    }
    println!("PASS 07 — Kaluza–Klein extraction recovers γ (30 random invertible symbols), degenerate symbols refused");
}

#[test]
fn a08_projective_symbols_are_trace_free_invariants_and_the_flat_lift_is_constant() {
    let mut rng = rng(8);
    for trial in 0..25 {
        let dim = trial % 3 + 1;
        let gamma = rand_christoffel(&mut rng, dim, 1);
        let pi = pi_symbols(&gamma);
        for k in 0..dim {
            let mut trace = Expression::zero();
            for i in 0..dim {
                trace = &trace + pi.entry(i, i, k);
            }
            assert_expr_exact(
                &trace,
                &Expression::zero(),
                &format!("trial {trial}: Σᵢ Π^i_{{ik}} for k = {k}"),
            );
        }

        // A projective shift Γ^i_km ↦ Γ^i_km + t_k δ^i_m + t_m δ^i_k leaves Π alone.
        let t: Vec<Expression> = (0..dim).map(|_| rand_trig_poly(&mut rng, dim, 1)).collect();
        let mut shifted = vec![vec![vec![Expression::zero(); dim]; dim]; dim];
        for i in 0..dim {
            for k in 0..dim {
                for m in 0..dim {
                    let mut e = gamma.entry(i, k, m).clone();
                    if i == m {
                        e = &e + &t[k];
                    }
                    if i == k {
                        e = &e + &t[m];
                    }
                    shifted[i][k][m] = e;
                }
            }
        }
        let pi_shifted = pi_symbols(&Christoffel::new(shifted).unwrap());
        for i in 0..dim {
            for k in 0..dim {
                for m in 0..dim {
                    assert_expr_exact(
                        pi_shifted.entry(i, k, m),
                        pi.entry(i, k, m),
                        &format!("trial {trial}: Π^{i}_{{{k}{m}}} after a projective shift"),
                    );
                }
            }
        }
    }

    // The lift of the flat projective class has constant entries.
    for n in 1..=3usize {
        let hat = thomas_lift(&pi_symbols(&Christoffel::zero(n)));
        let v = hat.vertical_index();
        let c = Expression::constant(Rational::new(-1, n as i64 + 1));
        for a in 0..=n {
            for b in 0..=n {
                for m in 0..=n {
                    let expected = if (a, b, m) == (v, v, v)
                        || (a < n && ((b == v && m == a) || (m == v && b == a)))
                    {
                        c.clone()
                    } else {
                        Expression::zero()
                    };
                    assert_expr_exact(
                        hat.entry(a, b, m),
                        &expected,
                        &format!("flat lift entry ({a},{b},{m}) in dimension {n}"),
                    );
                }
            }
        }
    }
    println!("PASS 08 — Π trace-free and invariant under 25 projective shifts; flat lift constants exact for n = 1,2,3");
}

/// The classical transformation law of Christoffel symbols, implemented
/// directly from the chain rule as an independent oracle:
/// `Γ'^c_ab = (∂x'_c/∂x_k)[(∂x_i/∂x'_a)(∂x_j/∂x'_b)Γ^k_ij + ∂²x_k/∂x'_a∂x'_b]`.
fn christoffel_transform_oracle(gamma: &Christoffel, ch: &ChartChange) -> Christoffel {
    let n = gamma.dim();
    let jac = ch.jacobian();
    let inv_jac = ch.inverse_jacobian();
    let inverse = ch.inverse();
    let mut entries = vec![vec![vec![Expression::zero(); n]; n]; n];
    for c in 0..n {
        for a in 0..n {
            for b in 0..n {
                let mut acc = Expression::zero();
                for k in 0..n {
                    let push = jac[c][k].subst(inverse).unwrap();
                    let mut inner = inv_jac[k][a].diff(b);
                    for i in 0..n {
                        for j in 0..n {
                            let g = gamma.entry(k, i, j).subst(inverse).unwrap();
                            inner = &inner + &(&(&g * &inv_jac[i][a]) * &inv_jac[j][b]);
                        }
                    }
                    acc = &acc + &(&push * &inner);
                }
                entries[c][a][b] = acc;
            }
        }
    }
    Christoffel::new(entries).unwrap()
}

/// Shared covariance checks for one chart change; `exact` switches between
/// symbolic-only equality and the sampled fallback at [`SAMPLE_TOL`].
fn check_covariance(ch: &ChartChange, rng: &mut ChaCha20Rng, exact: bool, label: &str) {
    let check: fn(&Expression, &Expression, &str) = if exact {
        assert_expr_exact
    } else {
        assert_expr_near
    };
    let dim = ch.dim();
    let s = dominant_symbol(rng, dim);
    let b: Vec<Expression> = (0..dim).map(|_| rand_trig_poly(rng, dim, 1)).collect();
    let c = rand_trig_poly(rng, dim, 1);
    let st = SymbolTriple::new(s, b, c).unwrap();
    let gamma = rand_christoffel(rng, dim, 1);

    let conjugated = op_conjugate(&build_canonical(&st), ch).unwrap();
    let st_new = extract_symbol(&conjugated).unwrap();
    let gamma_new = christoffel_transform_oracle(&gamma, ch);
    let jac = ch.jacobian();
    let inverse = ch.inverse();

    // Brans–Dicke scalar: BD' = BD ∘ inverse.
    let bd = brans_dicke(&st, &kk_extract(&st).unwrap()).unwrap();
    let bd_new = brans_dicke(&st_new, &kk_extract(&st_new).unwrap()).unwrap();
    check(
        &bd_new,
        &bd.subst(inverse).unwrap(),
        &format!("{label}: Brans–Dicke scalar"),
    );

    // Covariant parts: θ transforms as a vector, F as a scalar.
    let (theta, f) = covariant_parts(&st, &gamma).unwrap();
    let (theta_new, f_new) = covariant_parts(&st_new, &gamma_new).unwrap();
    for a in 0..dim {
        let mut pushed = Expression::zero();
        for k in 0..dim {
            pushed =
                &pushed + &(&jac[a][k].subst(inverse).unwrap() * &theta[k].subst(inverse).unwrap());
        }
        check(&theta_new[a], &pushed, &format!("{label}: θ[{a}]"));
    }
    check(&f_new, &f.subst(inverse).unwrap(), &format!("{label}: F"));
}

#[test]
fn a09_covariance_under_chart_changes() {
    let mut rng = rng(9);
    let x = |i: usize| Expression::coord(i);

    // Fixed affine change: x' = (x₁ + 2x₂ + 1, x₂ − ½).
    let affine = ChartChange::new(
        vec![
            &(&x(0) + &x(1).scale(&Rational::from_int(2))) + &Expression::one(),
            &x(1) - &Expression::constant(Rational::new(1, 2)),
        ],
        vec![
            &(&x(0) - &x(1).scale(&Rational::from_int(2))) - &Expression::from_int(2),
            &x(1) + &Expression::constant(Rational::new(1, 2)),
        ],
    )
    .unwrap();
    // Fixed nonlinear change: the shear x' = (x₁, x₂ + sin x₁).
    let shear = ChartChange::new(
        vec![x(0), &x(1) + &x(0).sin()],
        vec![x(0), &x(1) - &x(0).sin()],
    )
    .unwrap();

    // Pullback functoriality: pulling back along a composite equals pulling
    // back in two stages, exactly — including a fractional weight.
    let second = ChartChange::new(
        vec![
            &x(0) - &x(1),
            &x(1).scale(&Rational::from_int(3)) + &Expression::one(),
        ],
        vec![
            &x(0) + &(&x(1) - &Expression::one()).scale(&Rational::new(1, 3)),
            (&x(1) - &Expression::one()).scale(&Rational::new(1, 3)),
        ],
    )
    .unwrap();
    for trial in 0..5 {
        let mut d = Density::term(Rational::from_int(2), rand_trig_poly(&mut rng, 2, 2));
        d = d.add(&Density::term(
            Rational::new(3, 2),
            rand_trig_poly(&mut rng, 2, 2),
        ));
        let staged = density_pullback(&density_pullback(&d, &affine).unwrap(), &second).unwrap();
        let direct = density_pullback(&d, &affine.then(&second).unwrap()).unwrap();
        assert!(
            staged.sub(&direct).is_zero(),
            "trial {trial}: pullback functoriality:\n staged {staged}\n direct {direct}"
        );
    }

    // Connection transformation composes along chart changes.
    for trial in 0..5 {
        let gamma =
            Connection::new((0..2).map(|_| rand_trig_poly(&mut rng, 2, 1)).collect()).unwrap();
        let staged = gamma_transform(&gamma_transform(&gamma, &affine).unwrap(), &shear).unwrap();
        let direct = gamma_transform(&gamma, &affine.then(&shear).unwrap()).unwrap();
        for k in 0..2 {
            assert_expr_near(
                &staged.components()[k],
                &direct.components()[k],
                &format!("trial {trial}: γ composition law, component {k}"),
            );
        }
    }

    check_covariance(&affine, &mut rng, true, "affine change");
    check_covariance(&shear, &mut rng, false, "nonlinear change");
    println!("PASS 09 — pullback functoriality exact; γ composition ≤ 1e−9; scalar/vector/scalar covariance (affine exact, shear ≤ 1e−9)");
}

/// Plain left-endpoint Riemann sum over the torus — exact-path-free oracle.
/// On full periods of a trig polynomial this converges spectrally, so the
/// step count only needs to beat the bandwidth.
fn riemann_torus(e: &Expression, dim: usize, steps: usize) -> f64 {
    let h = std::f64::consts::TAU / steps as f64;
    let mut idx = vec![0usize; dim];
    let mut sum = 0.0;
    loop {
        let point: Vec<f64> = idx.iter().map(|&k| k as f64 * h).collect();
        sum += e
            .eval(&point)
            .expect("trig polynomials evaluate everywhere");
        let mut d = 0;
        loop {
            if d == dim {
                return sum * h.powi(dim as i32);
            }
            idx[d] += 1;
            if idx[d] < steps {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

#[test]
fn a10_exact_integration_matches_quadrature() {
    let mut rng = rng(10);
    for trial in 0..50 {
        let dim = trial % 2 + 1;
        let degree = if dim == 1 { 4 } else { 3 };
        let e = rand_trig_poly(&mut rng, dim, degree);
        let exact = integrate_torus(&e, dim).unwrap();
        assert!(
            exact.is_exact(),
            "trial {trial}: trig polynomial must integrate exactly, got {exact}"
        );
        let numeric = riemann_torus(&e, dim, if dim == 1 { 512 } else { 128 });
        let residual = (exact.to_f64() - numeric).abs();
        assert!(
            residual <= INTEGRATOR_TOL * (1.0 + exact.to_f64().abs()),
            "trial {trial} on T^{dim}: exact {exact} vs quadrature {numeric} (residual {residual:.3e})"
        );
    }
    println!("PASS 10 — exact Fourier integrals match independent quadrature ≤ 1e−10 on 50 trig polynomials");
}
