use nalgebra::{Matrix2, SymmetricEigen};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use torus_dipole::analytics::*;
use torus_dipole::geometry::{Current, Geometry};
use torus_dipole::integrals::AspectRatio;
use torus_dipole::operators::OperatorSet;
use torus_dipole::spectral::level_table;

fn cur(i: f64) -> Current {
    Current::new(i).unwrap()
}

fn ar(a: f64) -> AspectRatio {
    AspectRatio::new(a).unwrap()
}

#[test]
fn solve_matches_direct_eigensolve() {
    let mut rng = StdRng::seed_from_u64(5);
    for _ in 0..500 {
        let eps: f64 = rng.gen_range(-2.0..2.0);
        let delta: f64 = rng.gen_range(-2.0..2.0) * 10f64.powi(rng.gen_range(-3..4));
        let s = two_level_solve(eps, delta);
        let m = Matrix2::new(1.0 + delta, eps, eps, 1.0 - delta);
        let e = SymmetricEigen::new(m);
        let (hi, lo) = if e.eigenvalues[0] > e.eigenvalues[1] { (0, 1) } else { (1, 0) };
        assert!((s.alpha_plus - e.eigenvalues[hi]).abs() <= 1e-12 * s.alpha_plus.abs().max(1.0));
        assert!((s.alpha_minus - e.eigenvalues[lo]).abs() <= 1e-12 * s.alpha_minus.abs().max(1.0));
        for (v, k) in [(s.v_plus, hi), (s.v_minus, lo)] {
            let w = e.eigenvectors.column(k);
            let overlap = (v[0] * w[0] + v[1] * w[1]).abs();
            assert!((overlap - 1.0).abs() <= 1e-12, "eps={eps} delta={delta}");
            assert!((v[0] * v[0] + v[1] * v[1] - 1.0).abs() <= 1e-14);
        }
        assert!((s.theta_plus.tan() - s.v_plus[1] / s.v_plus[0]).abs() <= 1e-9 * s.theta_plus.tan().abs().max(1.0));
    }
}

#[test]
fn zero_current_reduces_to_free_model() {
    let g = Geometry::new(3.0).unwrap();
    let p = exact_two_level_params(&g, 2, 1, cur(0.0)).unwrap();
    let (a0, e0) = free_two_level(g.a, 2, 1);
    assert_eq!(p.delta_i, 0.0);
    assert!((p.a_i - a0).abs() < 1e-12 && (p.eps_i - e0).abs() < 1e-15);
    // Closed ε with the (m² − ¼) factor in the numerator.
    let s = g.a.root();
    let (a, n, mm) = (3.0f64, 2.0f64, 0.75f64);
    let closed = (2.0 * n * s + a) * (s - a).powi(4) * mm / ((n * n - 0.25) * s.powi(3) + a * mm);
    assert!((e0 - closed).abs() < 1e-15);
    assert!(exact_two_level_params(&g, 1, 0, cur(0.1)).is_err());
}

#[test]
fn asymmetry_is_exactly_a_n_q_i() {
    for a in [2.0, 3.0, 10.0] {
        let g = Geometry::new(a).unwrap();
        let q = g.a.decay();
        for n in 2..5 {
            for i in [0.05, 0.3, 2.0] {
                let p = exact_two_level_params(&g, n, 0, cur(i)).unwrap();
                let want = a * n as f64 * q * i;
                assert!((p.delta_i * p.a_i - want).abs() < 1e-10 * want);
                let large_a = n as f64 * i / 2.0;
                assert!((want - large_a).abs() / large_a <= q * q * (1.0 + 1e-12));
            }
        }
    }
}

#[test]
fn half_inverse_a_approximation() {
    for a in [3.0, 5.0, 10.0, 100.0] {
        let q = ar(a).decay();
        let rel = (q - 0.5 / a).abs() / q;
        assert!(rel <= 1.0 / (4.0 * (a * a - 1.0)), "a={a}: {rel}");
        // Leading order only: 1/(4a²) is exceeded by O(1/a⁴).
        assert!((rel * 4.0 * a * a - 1.0).abs() < 2.0 / (a * a));
    }
}

#[test]
fn k_sign_patterns() {
    for a in [2.0, 3.0, 5.0, 10.0] {
        for n in [2, 3, 5] {
            let k = k_coefficients(ar(a), n, 0, 8.0).unwrap();
            assert!(k.k1 < 0.0 && k.k2 > 0.0 && k.k3 < 0.0, "m=0 a={a} n={n}: {k:?}");
            for m in [1, 2] {
                let k = k_coefficients(ar(a), n, m, 8.0).unwrap();
                assert!(k.k1 > 0.0 && k.k2 < 0.0 && k.k3 > 0.0, "m={m} a={a} n={n}: {k:?}");
            }
        }
    }
}

#[test]
fn ratio_form_matches_large_a_elements() {
    for (a, n, m) in [(3.0, 2, 0), (3.0, 3, 1), (10.0, 2, 2), (5.0, 5, 0)] {
        let k = k_coefficients(ar(a), n, m, 8.0).unwrap();
        for x in [1e-3, 0.01, 0.1, 0.7] {
            let p = approx_large_a_elements(ar(a), n, m, cur(x), 8.0).unwrap().params();
            let r = k.ratio(x);
            assert!((p.ratio() - r).abs() <= 1e-10 * r.abs(), "a={a} n={n} m={m} x={x}");
        }
        let h = 1e-7;
        let slope = (approx_large_a_elements(ar(a), n, m, cur(h), 8.0).unwrap().params().ratio()
            - approx_large_a_elements(ar(a), n, m, cur(-h), 8.0).unwrap().params().ratio())
            / (2.0 * h);
        assert!((slope - k.k1).abs() <= 1e-6 * k.k1.abs());
        assert!((k.ratio_derivative(0.0) - k.k1).abs() == 0.0);
    }
}

#[test]
fn divergence_root() {
    let mut last = f64::INFINITY;
    for a in 2..=10 {
        let k = k_coefficients(ar(a as f64), 2, 0, 8.0).unwrap();
        let xd = divergence_current(&k).unwrap();
        assert!(xd > 0.0);
        assert!(k.denominator(xd).abs() <= 1e-12);
        assert!(xd < last, "x_d should fall with a");
        last = xd;
        // Monotone decrease of the ratio up to the pole.
        let mut prev = 0.0;
        for s in 1..200 {
            let x = xd * s as f64 / 200.0;
            let r = k.ratio(x);
            assert!(r < prev);
            prev = r;
        }
    }
    let k = k_coefficients(ar(3.0), 2, 1, 8.0).unwrap();
    assert!(divergence_current(&k).is_err());
}

#[test]
fn peak_ratio() {
    let g = Geometry::new(3.0).unwrap();
    let k = exact_k_coefficients(&g, 2, 1).unwrap();
    let (imax, rmax) = peak_current_and_ratio(&k).unwrap();
    assert!(rmax.is_finite() && rmax > 0.0);
    assert!(k.ratio_derivative(imax).abs() <= 1e-10 * k.k1);
    assert!((k.ratio(imax) - rmax).abs() <= 1e-12 * rmax);
    let scan = (1..=20000).map(|s| k.ratio(imax * 4.0 * s as f64 / 20000.0)).fold(f64::MIN, f64::max);
    assert!(scan <= rmax * (1.0 + 1e-12) && scan >= rmax * (1.0 - 1e-6), "{scan} vs {rmax}");

    // The displayed large-a k2 has |k2| > 2√k3, so D(x) has two positive
    // roots and the stationary point sits between poles, on a negative branch.
    let shown = k_coefficients(g.a, 2, 1, 8.0).unwrap();
    let (imax, rmax) = peak_current_and_ratio(&shown).unwrap();
    assert!(shown.ratio_derivative(imax).abs() <= 1e-10 * shown.k1);
    assert!((shown.ratio(imax) - rmax).abs() <= 1e-12 * rmax.abs());
    println!("displayed k at a=3 n=2 m=1: {shown:?}, stationary ratio {rmax:.6}");

    let k0 = k_coefficients(g.a, 2, 0, 8.0).unwrap();
    assert!(peak_current_and_ratio(&k0).is_err());
}

#[test]
fn exact_ratio_form_is_an_identity() {
    for (a, n, m) in [(1.2, 2, 0), (3.0, 2, 1), (3.0, 3, 0), (10.0, 2, 2)] {
        let g = Geometry::new(a).unwrap();
        let k = exact_k_coefficients(&g, n, m).unwrap();
        // Linear part of the interaction off-diagonal vanishes.
        assert!(k.k2.abs() <= 1e-9 * k.k1.abs());
        assert!(k.k1.signum() == k.k3.signum());
        for x in [0.01, 0.3, 2.0] {
            let p = exact_two_level_params(&g, n, m, cur(x)).unwrap();
            assert!((p.ratio() - k.ratio(x)).abs() <= 1e-9 * k.ratio(x).abs(), "a={a} n={n} m={m} x={x}");
        }
        if m == 0 {
            let xd = divergence_current(&k).unwrap();
            assert!(k.denominator(xd).abs() <= 1e-12);
        }
    }
}

#[test]
fn large_a_elements() {
    let g = Geometry::new(10.0).unwrap();
    for n in 2..5 {
        for i in [0.0, 0.1, 1.0] {
            let ex = exact_two_level_params(&g, n, 1, cur(i)).unwrap();
            let ap = approx_large_a_elements(g.a, n, 1, cur(i), 8.0).unwrap().params();
            let (e_hi, e_lo) = (ex.a_i * (1.0 + ex.delta_i), ex.a_i * (1.0 - ex.delta_i));
            let (a_hi, a_lo) = (ap.a_i * (1.0 + ap.delta_i), ap.a_i * (1.0 - ap.delta_i));
            assert!((e_hi - a_hi).abs() <= 0.02 * e_hi && (e_lo - a_lo).abs() <= 0.02 * e_lo);
        }
        let el = approx_large_a_elements(g.a, n, 1, cur(0.0), 8.0).unwrap();
        let want = (2.0 * n as f64 + 1.0) * 0.75 / 20f64.powi(2 * n as i32);
        assert!((el.off_diag - want).abs() <= 1e-15 * want);
    }
}

#[test]
fn eigenvalue_limit() {
    let p = TwoLevelParams { a_i: 40.0, delta_i: 0.02, eps_i: 1e-7 };
    let (hi, lo) = p.eigenvalues();
    assert!((hi - 40.0 * 1.02).abs() < 1e-9 && (lo - 40.0 * 0.98).abs() < 1e-9);
}

#[test]
fn a_i_display_paths() {
    for a in [2.0, 3.0, 10.0] {
        let g = Geometry::new(a).unwrap();
        for i in [0.5, 2.0] {
            let ex = exact_two_level_params(&g, 2, 0, cur(i)).unwrap().a_i;
            let closed = a_i_closed(&g, 2, 0, cur(i)).unwrap();
            let large = a_i_large_a(&g, 2, cur(i));
            println!("A_I a={a} i={i}: exact {ex:.9} closed-display {closed:.9} (diff {:.3e}) large-a {large:.9} (diff {:.3e})", closed - ex, large - ex);
            assert!(closed.is_finite() && large.is_finite());
        }
    }
}

#[test]
fn two_level_matches_full_diagonalization() {
    let g = Geometry::new(3.0).unwrap();
    for m in [0, 1] {
        let set = OperatorSet::new(g, m, 60).unwrap();
        for i in [0.0, 0.05, 0.1, 0.2, 0.5] {
            let (_, table) = level_table(&set, cur(i), 11).unwrap();
            for n in [2usize, 3] {
                if !pair_isolated(&table.energies, n, 10.0) {
                    continue;
                }
                let (hi, lo) = exact_two_level_params(&g, n as i64, m, cur(i)).unwrap().eigenvalues();
                let (f_hi, f_lo) = (table.energies[2 * n], table.energies[2 * n - 1]);
                assert!((hi - f_hi).abs() <= 0.01 * f_hi.abs() && (lo - f_lo).abs() <= 0.01 * f_lo.abs(), "m={m} i={i} n={n}");
            }
        }
    }
}
