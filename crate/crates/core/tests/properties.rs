use std::collections::BTreeMap;
use std::sync::Arc;

use proptest::prelude::*;

use drinfeld::algebra::{parse_poly, parse_scalar};
use drinfeld::{Field, FieldSpec, Poly, Scalar, USeries};

fn f9() -> Arc<Field> {
    Field::new(FieldSpec::new(3, 2)).unwrap()
}

fn f3() -> Arc<Field> {
    Field::prime(3).unwrap()
}

fn poly(f: &Arc<Field>, c: &[u32]) -> Poly {
    let q = f.q();
    Poly::from_coeffs(f, c.iter().map(|x| x % q).collect())
}

fn coeffs() -> impl Strategy<Value = Vec<u32>> {
    prop::collection::vec(0u32..9, 0..6)
}

// type 0 at q = 3: only even indices
fn series(f: &Arc<Field>, c: &[(usize, Vec<u32>)]) -> USeries {
    let mut m = BTreeMap::new();
    for (i, p) in c {
        m.insert(2 * i, Scalar::from_poly(poly(f, p)));
    }
    USeries::new(f, 0, 0, 16, m).unwrap()
}

fn series_strategy() -> impl Strategy<Value = Vec<(usize, Vec<u32>)>> {
    prop::collection::vec((0usize..8, prop::collection::vec(0u32..3, 0..4)), 0..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fq_field_axioms(a in 0u32..9, b in 0u32..9, c in 0u32..9) {
        let f = f9();
        prop_assert_eq!(f.add(a, b), f.add(b, a));
        prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
        prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
        prop_assert_eq!(f.add(a, f.neg(a)), 0);
        if a != 0 {
            prop_assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
        }
        prop_assert_eq!(f.pow(a, 9), a);
    }

    #[test]
    fn poly_ring_and_division(a in coeffs(), b in coeffs(), c in coeffs()) {
        let f = f9();
        let (a, b, c) = (poly(&f, &a), poly(&f, &b), poly(&f, &c));
        prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
        prop_assert_eq!(&a * &b, &b * &a);
        if !b.is_zero() {
            let (qq, r) = a.divmod(&b).unwrap();
            prop_assert_eq!(&(&qq * &b) + &r, a.clone());
            prop_assert!(r.deg() < b.deg());
        }
        let g = a.gcd(&b);
        if !g.is_zero() {
            prop_assert!(g.divides(&a) && g.divides(&b));
        }
    }

    #[test]
    fn frobenius_is_additive_and_multiplicative(a in coeffs(), b in coeffs(), n in 0u32..4) {
        let f = f9();
        let (a, b) = (poly(&f, &a), poly(&f, &b));
        prop_assert_eq!((&a + &b).frobenius(n), &a.frobenius(n) + &b.frobenius(n));
        prop_assert_eq!((&a * &b).frobenius(n), &a.frobenius(n) * &b.frobenius(n));
    }

    #[test]
    fn text_round_trip(a in coeffs(), b in coeffs()) {
        let f = f9();
        let pa = poly(&f, &a);
        prop_assert_eq!(parse_poly(&f, &pa.to_text()).unwrap(), pa.clone());
        let pb = poly(&f, &b);
        if !pb.is_zero() {
            let s = Scalar::new(pa, pb).unwrap();
            prop_assert_eq!(parse_scalar(&f, &s.to_text()).unwrap(), s);
        }
    }

    #[test]
    fn scalar_field_laws(a in coeffs(), b in coeffs(), c in coeffs()) {
        let f = f3();
        let x = Scalar::from_poly(poly(&f, &a));
        let y = Scalar::new(poly(&f, &b), Poly::t(&f)).unwrap();
        let z = Scalar::from_poly(poly(&f, &c));
        prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
        if !y.is_zero() {
            prop_assert_eq!(&x.div(&y).unwrap() * &y, x.clone());
        }
    }

    #[test]
    fn series_ring_laws(a in series_strategy(), b in series_strategy(), c in series_strategy()) {
        let f = f3();
        let (a, b, c) = (series(&f, &a), series(&f, &b), series(&f, &c));
        prop_assert!(a.mul(&b).unwrap().agrees_with(&b.mul(&a).unwrap()));
        let l = a.mul(&b.add(&c).unwrap()).unwrap();
        let r = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
        prop_assert!(l.agrees_with(&r));
        let l = a.mul(&b).unwrap().mul(&c).unwrap();
        let r = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert!(l.agrees_with(&r));
    }

    #[test]
    fn series_frobenius_is_a_ring_map(a in series_strategy(), b in series_strategy()) {
        let f = f3();
        let (a, b) = (series(&f, &a), series(&f, &b));
        let l = a.mul(&b).unwrap().frobenius_pow(1);
        let r = a.frobenius_pow(1).mul(&b.frobenius_pow(1)).unwrap();
        prop_assert!(l.agrees_with(&r));
    }

    #[test]
    fn cache_string_round_trip(a in series_strategy()) {
        let f = f3();
        let s = series(&f, &a);
        let back = USeries::from_cache_string(&s.to_cache_string()).unwrap();
        prop_assert!(back.agrees_with(&s));
        prop_assert_eq!(back.prec(), s.prec());
    }
}

#[test]
fn dilation_composes() {
    let f = f3();
    let h = drinfeld::forms::build_h(&f, 60).unwrap();
    let t = Poly::t(&f);
    let t1 = parse_poly(&f, "T+1").unwrap();
    let a = h.dilate(&t, 60).unwrap().dilate(&t1, 60).unwrap();
    let b = h.dilate(&(&t * &t1), 60).unwrap();
    assert!(a.agrees_with(&b));
}

#[test]
fn unit_inverse() {
    let f = f3();
    let g1 = drinfeld::forms::build_g1(&f, 40).unwrap();
    let inv = g1.invert_unit().unwrap();
    let one = g1.mul(&inv).unwrap();
    assert!(one.agrees_with(&USeries::one(&f, one.prec())));
}
