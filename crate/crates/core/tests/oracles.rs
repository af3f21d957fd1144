//! Cross-checks between independent constructions of the same objects.

use std::sync::Arc;

use drinfeld::algebra::parse_poly;
use drinfeld::carlitz;
use drinfeld::forms;
use drinfeld::hecke::{self, PrimeP};
use drinfeld::{Field, FieldSpec, Poly, Scalar, USeries};

fn field(q: u32) -> Arc<Field> {
    match q {
        9 => Field::new(FieldSpec::new(3, 2)).unwrap(),
        p => Field::prime(p).unwrap(),
    }
}

fn prime(f: &Arc<Field>, s: &str) -> PrimeP {
    PrimeP::new(&parse_poly(f, s).unwrap()).unwrap()
}

// the product formula route and the A-expansion route agree
#[test]
fn generators_match_a_expansions() {
    for (q, prec) in [(3, 90), (5, 60)] {
        let f = field(q);
        let h = forms::build_h(&f, prec).unwrap();
        assert!(h.agrees_with(&forms::build_h_aexpansion(&f, prec).unwrap()), "h at q={q}");
        let d = forms::build_delta(&f, prec).unwrap();
        assert!(d.agrees_with(&forms::build_delta_aexpansion(&f, prec).unwrap()), "Delta at q={q}");
    }
}

// h^{q-1} = -Delta
#[test]
fn h_power_is_minus_delta() {
    for q in [3, 5] {
        let f = field(q);
        let h = forms::build_h(&f, 80).unwrap();
        let d = forms::build_delta(&f, 80).unwrap();
        assert!(h.pow(q as u64 - 1).unwrap().agrees_with(&d.neg()), "q={q}");
    }
}

// rho_{ab} = rho_a o rho_b
#[test]
fn carlitz_is_a_ring_map() {
    let f = field(3);
    let a = parse_poly(&f, "T^2+1").unwrap();
    let b = parse_poly(&f, "T+2").unwrap();
    let lhs = carlitz::carlitz_poly(&(&a * &b)).unwrap();
    let rhs = carlitz::carlitz_poly(&a).unwrap().compose(&carlitz::carlitz_poly(&b).unwrap());
    assert_eq!(lhs.to_string(), rhs.to_string());
    let sum = carlitz::carlitz_poly(&(&a + &b)).unwrap();
    assert_eq!(sum.to_string(), carlitz::carlitz_poly(&a).unwrap().add(&carlitz::carlitz_poly(&b).unwrap()).to_string());
}

// recurrence for G_j(Pu) against Goss polynomials of the P-torsion lattice
#[test]
fn goss_at_pu_two_routes() {
    for (q, ps) in [(3, vec!["T", "T^2+1"]), (5, vec!["T+3"])] {
        let f = field(q);
        for p in ps {
            let pp = prime(&f, p);
            for j in [1, 2, q as usize, q as usize + 1, 2 * q as usize + 3] {
                let a = pp.goss_at_pu(j, 60).unwrap();
                let b = hecke::goss_at_pu_via_table(&pp, j, 60).unwrap();
                assert!(a.agrees_with(&b), "q={q} P={p} j={j}");
            }
        }
    }
}

fn eigen(f: &Arc<Field>, s: &USeries, p: &str, lambda: &Poly, out: usize) {
    let pp = prime(f, p);
    let big = s.truncate(pp.needed_precision(out));
    let t = hecke::op_t(&big, &pp, out).unwrap();
    assert!(t.agrees_with(&s.truncate(out).scale_poly(lambda)), "P={p}");
}

// T_P h = P h and T_P Delta = P^{q-1} Delta
#[test]
fn hecke_eigenvalues() {
    let f = field(3);
    let h = forms::build_h(&f, 400).unwrap();
    let d = forms::build_delta(&f, 400).unwrap();
    for p in ["T", "T+2", "T^2+1"] {
        let pp = parse_poly(&f, p).unwrap();
        eigen(&f, &h, p, &pp, 40);
        eigen(&f, &d, p, &pp.pow(2), 40);
    }
}

#[test]
fn low_coefficient_oracle() {
    let f = field(3);
    let h = forms::build_h(&f, 200).unwrap();
    for p in ["T", "T+1"] {
        let pp = prime(&f, p);
        let t = hecke::op_t(&h, &pp, 20).unwrap();
        let want = hecke::op_t_low_coeff_oracle(&h, &pp).unwrap();
        assert_eq!(t.coeff(hecke::low_coeff_index(&h)).unwrap(), want);
    }
}

#[test]
fn frobenius_twist_commutes_with_u() {
    let f = field(3);
    let h = forms::build_h(&f, 200).unwrap();
    let c = hecke::frobenius_commutation(&h, &prime(&f, "T+1"), 1, 20).unwrap();
    assert!(c.equal);
}

#[test]
fn u_needs_enough_input() {
    let f = field(3);
    let h = forms::build_h(&f, 30).unwrap();
    let err = hecke::op_u(&h, &prime(&f, "T^2+1"), 30).unwrap_err();
    assert!(matches!(err, drinfeld::Error::InsufficientPrecision { .. }), "{err}");
}

// two sums for E_T agree, and U_T E_T = T E_T
#[test]
fn eisenstein_level_t() {
    let f = field(3);
    let t = Poly::t(&f);
    let e = forms::build_e_p(&t, 200).unwrap();
    let alt = forms::build_e_p_coprime_sum(&t, 200).unwrap();
    assert!(e.agrees_with(&alt));
    let pp = PrimeP::new(&t).unwrap();
    let u = hecke::op_u(&e, &pp, 60).unwrap();
    assert!(u.agrees_with(&e.truncate(60).scale(&Scalar::t(&f))));
}

#[test]
fn expansions_over_f9() {
    let f = field(9);
    let h = forms::build_h(&f, 40).unwrap();
    let d = forms::build_delta(&f, 40).unwrap();
    assert!(h.pow(8).unwrap().agrees_with(&d.neg()));
}
