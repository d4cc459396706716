//! Property tests of the algebraic laws and numerical invariants.

use std::sync::Arc;

use nilcorr_core::averaging::{approximation_error, cesaro_average, AveragingScheme, PrimeSieve, DEFAULT_SIEVE_BUDGET};
use nilcorr_core::correlate::{CorrelationSpec, Iterate, Sequence};
use nilcorr_core::TorusObs64 as TorusObs;
use nilcorr_core::equidist::{hit_density, weyl_sum, Verdict};
use nilcorr_core::observables::{integrate, Integration, Observable, QuadratureRule, TrigObservable};
use nilcorr_core::poly::{BracketKind, BracketMap, Coefficient, VectorPolynomial};
use nilcorr_core::scalar::e;
use nilcorr_core::systems::{
    heis_mul, heis_pow, nil_reduce, LatticeAction, Space, TorusAction, TorusFlow, TorusPoint, TorusSpace,
};
use nilcorr_core::systems::FlowFamily;
use nilcorr_core::{Fixed, HeisenbergQ, C64};
use num_complex::Complex;
use num_rational::Ratio;
use proptest::prelude::*;

fn small_ratio() -> impl Strategy<Value = Ratio<i64>> {
    (-40i64..40, 1i64..13).prop_map(|(a, b)| Ratio::new(a, b))
}

fn element() -> impl Strategy<Value = HeisenbergQ> {
    (small_ratio(), small_ratio(), small_ratio()).prop_map(|(x, y, z)| HeisenbergQ::new(x, y, z))
}

fn lattice() -> impl Strategy<Value = HeisenbergQ> {
    (-20i64..20, -20i64..20, -20i64..20)
        .prop_map(|(a, b, c)| HeisenbergQ::new(a.into(), b.into(), c.into()))
}

fn in_unit(r: &Ratio<i64>) -> bool {
    *r >= Ratio::from_integer(0) && *r < Ratio::from_integer(1)
}

/// A double in `(0, 1)` as the exact dyadic `a / 2^k`.
fn dyadic(d: f64) -> (i128, u32) {
    let bits = d.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32;
    let mantissa = (bits & ((1 << 52) - 1)) | (1 << 52);
    let k = (1075 - exp) as u32;
    (i128::from(mantissa), k)
}

/// Fractional part of `num/den` as a 128-bit fraction.
fn frac_of(num: i128, den: i128) -> u128 {
    Fixed::from_ratio(num.rem_euclid(den), den).unwrap().frac_bits()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn heisenberg_associative(a in element(), b in element(), c in element()) {
        prop_assert_eq!(heis_mul(&heis_mul(&a, &b), &c), heis_mul(&a, &heis_mul(&b, &c)));
        prop_assert_eq!(heis_mul(&a, &a.inverse()), HeisenbergQ::identity());
    }

    #[test]
    fn heis_pow_is_repeated_product(g in element(), n in -60i64..60) {
        let mut acc = HeisenbergQ::identity();
        let step = if n >= 0 { g } else { g.inverse() };
        for _ in 0..n.unsigned_abs() {
            acc = heis_mul(&acc, &step);
        }
        prop_assert_eq!(heis_pow(&g, n), acc);
    }

    #[test]
    fn heis_pow_cocycle(g in element(), a in -500i64..500, b in -500i64..500) {
        prop_assert_eq!(heis_pow(&g, a + b), heis_mul(&heis_pow(&g, a), &heis_pow(&g, b)));
    }

    #[test]
    fn nil_reduce_coset_invariant(g in element(), gamma in lattice()) {
        let p = nil_reduce(&g);
        let r = p.rep();
        prop_assert!(in_unit(&r.x) && in_unit(&r.y) && in_unit(&r.z));
        prop_assert_eq!(nil_reduce(&heis_mul(&g, &gamma)), p);
        prop_assert_eq!(nil_reduce(r), p);
    }

    #[test]
    fn rational_rotation_cocycle(p in -50i64..50, q in 1i64..50, a in -10_000i128..10_000, b in -10_000i128..10_000) {
        let t = TorusAction::rotation(Coefficient::rational(p, q).unwrap());
        let x = TorusPoint::<f64>::origin(1);
        let ab = LatticeAction::<f64>::apply(&t, &[a + b], &x).unwrap();
        let step = LatticeAction::<f64>::apply(&t, &[b], &x).unwrap();
        let two = LatticeAction::<f64>::apply(&t, &[a], &step).unwrap();
        let circle = TorusSpace { dim: 1 };
        prop_assert!(circle.distance(&ab, &two) < 1e-15);
        let want = frac_of(i128::from(p) * (a + b), i128::from(q));
        prop_assert_eq!(t.shift(&[a + b]).unwrap()[0].frac_bits(), want);
    }

    #[test]
    fn irrational_rotation_cocycle(k in 2u64..50, a in -1_000_000i128..1_000_000, b in -1_000_000i128..1_000_000) {
        let t = TorusAction::rotation(Coefficient::sqrt(k));
        let x = TorusPoint::<f64>::origin(1);
        let ab = LatticeAction::<f64>::apply(&t, &[a + b], &x).unwrap();
        let two = LatticeAction::<f64>::apply(&t, &[a], &LatticeAction::<f64>::apply(&t, &[b], &x).unwrap()).unwrap();
        let circle = TorusSpace { dim: 1 };
        prop_assert!(circle.distance(&ab, &two) < 1e-15);
    }

    #[test]
    fn torus_flows_commute(
        a in (-30i64..30, 1i64..9), b in (-30i64..30, 1i64..9),
        s in -5.0f64..5.0, t in -5.0f64..5.0, x0 in 0.0f64..1.0, x1 in 0.0f64..1.0,
    ) {
        let c = |(p, q): (i64, i64)| Coefficient::rational(p, q).unwrap();
        let flow = TorusFlow::new(vec![
            vec![vec![c(a), Coefficient::sqrt(2)]],
            vec![vec![Coefficient::sqrt(3), c(b)]],
        ])
        .unwrap();
        let x = TorusPoint::new(vec![x0, x1]);
        let st = flow.apply_flow(0, &[s], &flow.apply_flow(1, &[t], &x).unwrap()).unwrap();
        let ts = flow.apply_flow(1, &[t], &flow.apply_flow(0, &[s], &x).unwrap()).unwrap();
        prop_assert!(FlowFamily::<f64>::space(&flow).distance(&st, &ts) < 1e-12);
    }

    #[test]
    fn midpoint_rule_exact_on_low_frequencies(
        terms in prop::collection::vec((-30i64..30, -30i64..30, -1.0f64..1.0, -1.0f64..1.0), 1..6),
    ) {
        // Q nodes integrate e(k·x) exactly unless Q divides a frequency.
        let f = TrigObservable::new(2, terms.iter().map(|&(a, b, re, im)| (vec![a, b], Complex::new(re, im)))).unwrap();
        let space = TorusSpace { dim: 2 };
        let exact = integrate::<_, f64>(&f as &dyn Observable<TorusPoint<f64>, f64>, &space, Integration::Exact).unwrap();
        let rule = QuadratureRule::new(61).unwrap();
        let quad = integrate::<_, f64>(&f as &dyn Observable<TorusPoint<f64>, f64>, &space, Integration::Quadrature(rule)).unwrap();
        prop_assert!((exact - quad).norm() < 1e-12);
    }

    #[test]
    fn cesaro_translation(c in -1000i128..1000, start in -500i128..500, len in 1i128..3000) {
        let base = |n: i128| -> nilcorr_core::Result<C64> { Ok(e((n as f64 * 0.31).sin())) };
        let shifted = move |n: i128| base(n + c);
        let a = cesaro_average(&shifted, start, start + len).unwrap();
        let b = cesaro_average(&base, start + c, start + c + len).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn approximation_error_triangle(p in 0.0f64..1.0, q in 0.0f64..1.0, r in 0.0f64..1.0) {
        let seq = |a: f64| move |n: i128| -> nilcorr_core::Result<C64> { Ok(e(a * n as f64)) };
        let scheme = AveragingScheme::Cesaro { start: 0, end: 2000 };
        let ab: f64 = approximation_error(&seq(p), &seq(q), &scheme, None).unwrap();
        let bc: f64 = approximation_error(&seq(q), &seq(r), &scheme, None).unwrap();
        let ac: f64 = approximation_error(&seq(p), &seq(r), &scheme, None).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!((0.0..=2.0 + 1e-12).contains(&ac));
    }

    #[test]
    fn densities_bounded_and_monotone(k in 2u64..40, d1 in 0.01f64..0.99, d2 in 0.01f64..0.99) {
        let q = VectorPolynomial::scalar(vec![Coefficient::zero(), Coefficient::sqrt(k)]).unwrap();
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let a = hit_density(&q, lo, 0, 5000).unwrap();
        let b = hit_density(&q, hi, 0, 5000).unwrap();
        prop_assert!((0.0..=1.0).contains(&a.density));
        prop_assert!(a.hits <= b.hits);
    }

    #[test]
    fn rational_verdicts_match_brute_force(
        c0 in (-20i64..20, 1i64..12), c1 in (-20i64..20, 1i64..12), c2 in (-20i64..20, 1i64..12),
        delta in 0.01f64..0.99,
    ) {
        let c = |(p, q): (i64, i64)| Coefficient::rational(p, q).unwrap();
        let q = VectorPolynomial::scalar(vec![c(c0), c(c1), c(c2)]).unwrap();
        let rep = hit_density(&q, delta, 0, 20_000).unwrap();
        // exact oracle: {q(n)} = r/D with r ∈ [0, D); hit iff r ≥ (1−δ)D,
        // decided in integers with δ = a/2^k taken as its exact dyadic value
        let den = i128::from(c0.1 * c1.1 * c2.1);
        let (a, k) = dyadic(delta);
        let mut hits = 0u64;
        for n in 0..20_000i128 {
            let num = i128::from(c0.0) * (den / i128::from(c0.1))
                + i128::from(c1.0) * (den / i128::from(c1.1)) * n
                + i128::from(c2.0) * (den / i128::from(c2.1)) * n * n;
            let r = num.rem_euclid(den);
            if r << k >= ((1i128 << k) - a) * den {
                hits += 1;
            }
        }
        prop_assert_eq!(rep.hits, hits);
        if rep.verdict == Verdict::ExactZero {
            prop_assert_eq!(hits, 0);
        }
    }
}

#[test]
fn dyadic_oracle_is_exact() {
    for d in [0.05, 0.1, 0.3, 0.987654321, 0.01] {
        let (a, k) = dyadic(d);
        assert_eq!(a as f64 * 2f64.powi(-(k as i32)), d);
        let f = Fixed::from_float(d).unwrap();
        assert_eq!(f.frac_bits(), (a as u128) << (128 - k), "{d}");
    }
}

#[test]
fn sieve_matches_trial_division() {
    let sieve = PrimeSieve::build(100_000, DEFAULT_SIEVE_BUDGET).unwrap();
    let mut count = 0;
    for n in 0..=100_000u64 {
        let prime = n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| n % d != 0);
        assert_eq!(sieve.is_prime(n), prime, "{n}");
        count += u64::from(prime);
        assert_eq!(sieve.pi(n).unwrap(), count, "{n}");
    }
    assert_eq!(count, 9592);
}

#[test]
fn rational_exact_zero_brute_force() {
    let q = VectorPolynomial::parse(&["1/3*x + 1/7"]).unwrap();
    let rep = hit_density(&q, 0.05, 0, 100_001).unwrap();
    assert_eq!(rep.verdict, Verdict::ExactZero);
    // {n/3 + 1/7} = ((7n + 3) mod 21)/21 ≥ 19/20 iff 20·r ≥ 399
    assert!((0..=100_000i64).all(|n| 20 * (7 * n + 3).rem_euclid(21) < 399));
}

#[test]
fn uniform_window_robustness() {
    let q = VectorPolynomial::parse(&["sqrt(2)*x"]).unwrap();
    let d: Vec<f64> = [0i128, 1_000_000, 1_000_000_000]
        .iter()
        .map(|&m| hit_density(&q, 0.1, m, m + 100_000).unwrap().density)
        .collect();
    let spread = d.iter().cloned().fold(f64::MIN, f64::max) - d.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread <= 0.02, "{d:?}");
}

#[test]
fn weyl_sums_predict_density() {
    // Erdős–Turán heuristic: small Weyl sums at frequencies 1..K put the
    // density within O(1/K) of δ.
    let n = 100_000;
    for k in [2u64, 3, 5] {
        let max_weyl = (1..=100i64)
            .map(|h| {
                let q = VectorPolynomial::scalar(vec![
                    Coefficient::zero(),
                    Coefficient::sqrt(k).scale(Ratio::from_integer(h)).unwrap(),
                ])
                .unwrap();
                weyl_sum::<f64>(&q, 0, n).unwrap().norm()
            })
            .fold(0.0, f64::max);
        assert!(max_weyl < 0.01, "k={k}: {max_weyl}");
        let q = VectorPolynomial::scalar(vec![Coefficient::zero(), Coefficient::sqrt(k)]).unwrap();
        for delta in [0.05, 0.1, 0.25] {
            let rep = hit_density(&q, delta, 0, n).unwrap();
            assert!((rep.density - delta).abs() < 0.05, "k={k} δ={delta}: {}", rep.density);
        }
    }
}

#[test]
fn sequences_compose_through_arc() {
    let s: Arc<dyn Sequence<f64> + Send> = Arc::new(|n: i128| Ok(Complex::new(n as f64, 0.0)));
    assert_eq!(cesaro_average(&s, 0, 5).unwrap(), Complex::new(2.0, 0.0));
}

#[test]
fn nearest_via_floor_with_irrational_constant() {
    // The constant term is a multiple of π, so the shift by 1/2 cannot be
    // folded into a coefficient.
    let q = VectorPolynomial::parse(&["2/7*pi + sqrt(3)*x"]).unwrap();
    let f: TorusObs = Arc::new(TrigObservable::character(vec![1], Complex::new(1.0, 0.0)).unwrap());
    let spec = CorrelationSpec::new(
        TorusAction::rotation(Coefficient::sqrt(2)),
        f.clone(),
        vec![Iterate {
            observable: f,
            poly: q,
            brackets: BracketMap::new(vec![BracketKind::Nearest]),
        }],
        Integration::Exact,
    )
    .unwrap();
    for n in -200..200 {
        let want = (2.0 / 7.0 * std::f64::consts::PI + 3f64.sqrt() * n as f64 + 0.5).floor() as i128;
        assert_eq!(spec.exponents(n).unwrap(), vec![vec![want]]);
        assert_eq!(spec.exponents_via_floor(n).unwrap(), vec![vec![want]]);
    }
}
