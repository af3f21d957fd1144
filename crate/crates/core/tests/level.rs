use std::sync::Arc;

use proptest::prelude::*;

use drinfeld::algebra::parse_poly;
use drinfeld::level::{Atom, Base, FormExpr, FormRegistry, TraceValue, Verdict};
use drinfeld::{Field, Poly, Scalar};

fn setup() -> (Arc<Field>, FormRegistry, Poly, Poly) {
    let f = Field::prime(3).unwrap();
    let t = Poly::t(&f);
    let t1 = parse_poly(&f, "T+1").unwrap();
    let r = FormRegistry::seeded(&f, &[t.clone(), t1.clone()]).unwrap();
    (f, r, t, t1)
}

// Tr(Δ_T E_T) falls back to series and lands in M_{q+1,1} = span{h}
#[test]
fn trace_of_product_is_level_one() {
    let (f, r, t, _) = setup();
    let e = r.get("Delta_T").unwrap().mul(r.get("E_{T}").unwrap());
    let tr = r.trace(&e, &t, 60).unwrap();
    let s = match &tr {
        TraceValue::Expr(x) => r.series(x, 60).unwrap(),
        TraceValue::Series(s) => s.clone(),
    };
    assert!(s.level().is_one());
    let h = r.named_series("h", 60).unwrap();
    let c = s.coeff(1).unwrap().div(&h.coeff(1).unwrap()).unwrap();
    assert!(s.agrees_with(&h.scale(&c)), "trace {}", s.to_text(6));
    let _ = f;
}

#[test]
fn symbolic_u_agrees_with_series() {
    let (_, r, t, t1) = setup();
    let n = &t * &t1;
    let base = r.get("Delta").unwrap().mul(r.get("h").unwrap()).at_level(&n).unwrap();
    let e = base.add(&base.dilate(&t1)).unwrap();
    for p in [&t, &t1] {
        let sym = r.u_p(&e, p).unwrap().expect("closes symbolically");
        let a = r.series(&sym, 30).unwrap();
        let b = r.u_p_series(&e, p, 30).unwrap();
        assert!(a.agrees_with(&b));
    }
}

#[test]
fn old_and_new() {
    let (f, r, t, _) = setup();
    let et = r.get("E_{T}").unwrap();
    assert!(r.is_p_new(et, &t, 60).unwrap().is_yes());
    let old = r.get("h").unwrap().clone().at_level(&t).unwrap();
    assert_eq!(r.is_p_old(&old, &t, 60).unwrap(), Verdict::YesExact);
    assert!(matches!(r.is_p_new(&old, &t, 60).unwrap(), Verdict::No { .. }));
    let d = r.get("h").unwrap().delta_p(&t).unwrap();
    assert!(r.is_p_old(&d, &t, 60).unwrap().is_yes());
    let _ = f;
}

fn atoms(f: &Arc<Field>, t: &Poly, t1: &Poly) -> Vec<Atom> {
    let y = Atom::level_one(f, &[(Base::Delta, 1), (Base::H, 1)]);
    let g = Atom::level_one(f, &[(Base::G1, 4), (Base::H, 1)]);
    let mut out = Vec::new();
    for a in [y, g] {
        for d in [Poly::one(f), t.clone(), t1.clone(), t * t1] {
            out.push(FormExpr::atom(f, a.clone()).dilate(&d).terms().keys().next().unwrap().clone());
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // W_P^2 = P^{2l-k} on level T(T+1), symbolically and on series
    #[test]
    fn w_is_an_involution_up_to_scalar(cs in prop::collection::vec(-1i64..2, 8)) {
        let (f, r, t, t1) = setup();
        let n = &t * &t1;
        let mut e = FormExpr::zero(&f, 12, 1, n.clone());
        for (a, c) in atoms(&f, &t, &t1).into_iter().zip(&cs) {
            let term = FormExpr::atom(&f, a).at_level(&n).unwrap().scale(&Scalar::from_int(&f, *c));
            e = e.add(&term).unwrap();
        }
        for p in [&t, &t1] {
            let ww = r.w_action(&r.w_action(&e, p).unwrap(), p).unwrap();
            let exp = 2 * e.ty() as i64 - e.weight();
            let s = Scalar::from_poly(p.clone()).pow(exp).unwrap();
            prop_assert_eq!(&ww, &e.scale(&s));
            prop_assert!(r.series(&ww, 20).unwrap().agrees_with(&r.series(&e, 20).unwrap().scale(&s)));
        }
        let w12 = r.w_action(&r.w_action(&e, &t).unwrap(), &t1).unwrap();
        let w21 = r.w_action(&r.w_action(&e, &t1).unwrap(), &t).unwrap();
        prop_assert_eq!(w12, w21);
    }
}
