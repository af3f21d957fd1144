//! Generator forms as u-expansions: E, E_P, g_1, g_d, h, Δ, Δ_T, Δ_W.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::algebra::{parse_poly, Acc, Field, Poly, Scalar};
use crate::carlitz::{self, check_prime, Lattice};
use crate::error::{Error, Result};
use crate::useries::{divide_one_plus_sparse, USeries};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GeneratorId {
    G1,
    Gd(u32),
    H,
    Delta,
    E,
    EP(Poly),
    DeltaT,
    DeltaW,
}

impl GeneratorId {
    /// (weight, type) of the generator.
    pub fn grading(&self, field: &Field) -> (i64, u32) {
        let q = field.q() as i64;
        match self {
            GeneratorId::G1 => (q - 1, 0),
            GeneratorId::Gd(d) => (q.pow(*d) - 1, 0),
            GeneratorId::H => (q + 1, 1 % (q as u32 - 1)),
            GeneratorId::Delta => (q * q - 1, 0),
            GeneratorId::E | GeneratorId::EP(_) => (2, 1 % (q as u32 - 1)),
            GeneratorId::DeltaT | GeneratorId::DeltaW => (q - 1, 0),
        }
    }

    pub fn level(&self, field: &Arc<Field>) -> Poly {
        match self {
            GeneratorId::EP(p) => p.clone(),
            GeneratorId::DeltaT | GeneratorId::DeltaW => Poly::t(field),
            _ => Poly::one(field),
        }
    }

    /// E is the only generator that is not a modular form.
    pub fn is_modular(&self) -> bool {
        !matches!(self, GeneratorId::E)
    }

    /// Parse "g1", "gd:2", "h", "Delta", "E", "E_P:T+1", "Delta_T", "Delta_W".
    pub fn parse(field: &Arc<Field>, s: &str) -> Result<GeneratorId> {
        let (name, arg) = match s.split_once(':') {
            Some((a, b)) => (a, Some(b)),
            None => (s, None),
        };
        Ok(match (name, arg) {
            ("g1", None) => GeneratorId::G1,
            ("gd", Some(d)) => GeneratorId::Gd(d.parse().map_err(|_| Error::Parse(format!("bad d in {s}")))?),
            ("h", None) => GeneratorId::H,
            ("Delta", None) => GeneratorId::Delta,
            ("E", None) => GeneratorId::E,
            ("E_P", Some(p)) => {
                let p = parse_poly(field, p)?;
                check_prime(&p)?;
                GeneratorId::EP(p)
            }
            ("Delta_T", None) => GeneratorId::DeltaT,
            ("Delta_W", None) => GeneratorId::DeltaW,
            _ => return Err(Error::Parse(format!("unknown generator {s:?}"))),
        })
    }

    pub fn build(&self, field: &Arc<Field>, prec: usize) -> Result<USeries> {
        match self {
            GeneratorId::G1 => build_g1(field, prec),
            GeneratorId::Gd(d) => build_gd(field, *d, prec),
            GeneratorId::H => build_h(field, prec),
            GeneratorId::Delta => build_delta(field, prec),
            GeneratorId::E => build_e(field, prec),
            GeneratorId::EP(p) => build_e_p(p, prec),
            GeneratorId::DeltaT => build_delta_t(field, prec),
            GeneratorId::DeltaW => build_delta_w(field, prec),
        }
    }
}

impl fmt::Display for GeneratorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeneratorId::G1 => write!(f, "g1"),
            GeneratorId::Gd(d) => write!(f, "gd:{d}"),
            GeneratorId::H => write!(f, "h"),
            GeneratorId::Delta => write!(f, "Delta"),
            GeneratorId::E => write!(f, "E"),
            GeneratorId::EP(p) => write!(f, "E_P:{p}"),
            GeneratorId::DeltaT => write!(f, "Delta_T"),
            GeneratorId::DeltaW => write!(f, "Delta_W"),
        }
    }
}

/// Σ_{a monic} w(a)·Σ_m γ_m u(az)^m, valid below `prec`.
///
/// Each u(az)^m = u^{m q^d}(1+R_a(v))^{-m}, v = u^{q-1}, is produced by
/// repeated sparse division by 1+R_a.
pub fn monic_sum<W>(field: &Arc<Field>, prec: usize, terms: &[(usize, Scalar)], weight_of: W) -> Result<BTreeMap<usize, Scalar>>
where
    W: Fn(&Poly) -> Option<Poly>,
{
    let q = field.q() as usize;
    let mut terms: Vec<(usize, Scalar)> = terms.iter().filter(|(_, g)| !g.is_zero()).cloned().collect();
    terms.sort_by_key(|(m, _)| *m);
    if terms.is_empty() || terms[0].0 == 0 {
        return Err(Error::Invalid("monic_sum needs positive exponents".into()));
    }
    let mut den = Poly::one(field);
    for (_, g) in &terms {
        den = den.lcm(g.den());
    }
    let nums: Vec<(usize, Poly)> = terms
        .iter()
        .map(|(m, g)| (*m, g.num() * &den.exact_div(g.den()).expect("lcm")))
        .collect();
    let m_min = nums[0].0;
    let mut accs: Vec<Option<Acc>> = (0..prec).map(|_| None).collect();
    let mut d = 0u32;
    while m_min * q.pow(d) < prec {
        let qd = q.pow(d);
        for a in Poly::monics_of_degree(field, d as usize) {
            let wa = match weight_of(&a) {
                Some(w) => w,
                None => continue,
            };
            let rho = carlitz::carlitz_coeffs(&a);
            let rterms: Vec<(usize, Poly)> = (0..d as usize)
                .filter(|&i| !rho[i].is_zero())
                .map(|i| ((qd - q.pow(i as u32)) / (q - 1), rho[i].clone()))
                .collect();
            let len0 = (prec - m_min * qd).div_ceil(q - 1);
            let mut w = vec![Poly::zero(field); len0];
            w[0] = Poly::one(field);
            let mut wm = 0usize;
            for (m, num) in &nums {
                if m * qd >= prec {
                    break;
                }
                let len = (prec - m * qd).div_ceil(q - 1);
                w.truncate(len);
                while wm < *m {
                    divide_one_plus_sparse(&mut w, &rterms);
                    wm += 1;
                }
                let coef = &wa * num;
                for (n, c) in w.iter().enumerate() {
                    if c.is_zero() {
                        continue;
                    }
                    let idx = m * qd + (q - 1) * n;
                    accs[idx].get_or_insert_with(|| Acc::new(field)).add_mul(&coef, c);
                }
            }
        }
        d += 1;
    }
    let mut out = BTreeMap::new();
    for (i, a) in accs.into_iter().enumerate() {
        if let Some(a) = a {
            let p = a.finish();
            if !p.is_zero() {
                field.check_degree(p.deg() as usize)?;
                out.insert(i, Scalar::new(p, den.clone())?);
            }
        }
    }
    Ok(out)
}

fn series_from(field: &Arc<Field>, gen: &GeneratorId, prec: usize, coeffs: BTreeMap<usize, Scalar>) -> Result<USeries> {
    let (k, l) = gen.grading(field);
    Ok(USeries::new(field, k, l as i64, prec, coeffs)?.with_level(gen.level(field)))
}

/// E = Σ_{a monic} a·u(az) (weight 2, type 1; not modular).
pub fn build_e(field: &Arc<Field>, prec: usize) -> Result<USeries> {
    let m = monic_sum(field, prec, &[(1, Scalar::one(field))], |a| Some(a.clone()))?;
    series_from(field, &GeneratorId::E, prec, m)
}

/// E_P = E - P·E(Pz).
pub fn build_e_p(p: &Poly, prec: usize) -> Result<USeries> {
    check_prime(p)?;
    let f = p.field().clone();
    let e = build_e(&f, prec)?;
    let ep = e.sub(&e.dilate(p, prec)?.scale_poly(p))?;
    Ok(ep.with_level(p.clone()))
}

/// E_P = Σ_{a monic, P∤a} a·u(az); an independent route to build_e_p.
pub fn build_e_p_coprime_sum(p: &Poly, prec: usize) -> Result<USeries> {
    check_prime(p)?;
    let f = p.field().clone();
    let m = monic_sum(&f, prec, &[(1, Scalar::one(&f))], |a| if p.divides(a) { None } else { Some(a.clone()) })?;
    series_from(&f, &GeneratorId::EP(p.clone()), prec, m)
}

/// Non-constant part -Σ_{a monic} G_{k,period}(u(az)) plus the given constant.
pub fn build_eisenstein_normalized(field: &Arc<Field>, k: usize, prec: usize, constant: &Scalar) -> Result<USeries> {
    let q = field.q() as usize;
    if k == 0 || !k.is_multiple_of(q - 1) {
        return Err(Error::Invalid(format!("weight {k} is not a positive multiple of q-1")));
    }
    let table = carlitz::goss_table_for(&Lattice::Period, field, k)?;
    let terms: Vec<(usize, Scalar)> = table
        .get(k)
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(m, c)| (m, -c))
        .collect();
    let mut m = monic_sum(field, prec, &terms, |_| Some(Poly::one(field)))?;
    if !constant.is_zero() && prec > 0 {
        m.insert(0, constant.clone());
    }
    USeries::new(field, k as i64, 0, prec, m)
}

/// g_1 = 1 - [1]·Σ_{a monic} u(az)^{q-1}.
pub fn build_g1(field: &Arc<Field>, prec: usize) -> Result<USeries> {
    let q = field.q() as usize;
    let br = Scalar::from_poly(Poly::bracket(field, 1));
    let mut m = monic_sum(field, prec, &[(q - 1, -&br)], |_| Some(Poly::one(field)))?;
    if prec > 0 {
        m.insert(0, Scalar::one(field));
    }
    series_from(field, &GeneratorId::G1, prec, m)
}

/// g_d = (-1)^{d+1} L_d · Ẽ_{q^d-1}, with the constant pinned by g_d(∞) = 1.
pub fn build_gd(field: &Arc<Field>, d: u32, prec: usize) -> Result<USeries> {
    if d == 0 {
        return Err(Error::Invalid("g_d needs d ≥ 1".into()));
    }
    let q = field.q() as usize;
    let ld = Scalar::from_poly(carlitz::l_sequence(field, d));
    let sign = if d % 2 == 1 { Scalar::one(field) } else { Scalar::from_int(field, -1) };
    let c = (&sign * &ld).inv()?;
    let e = build_eisenstein_normalized(field, q.pow(d) - 1, prec, &c)?;
    let g = e.scale(&(&sign * &ld));
    Ok(g.with_level(Poly::one(field)))
}

/// Δ = [2]·Ẽ_{q²-1} + [1]^q·Ẽ_{q-1}^{q+1} with Ẽ_{q-1} = g_1/[1] and the
/// constant of Ẽ_{q²-1} pinned by Δ(∞) = 0.
pub fn build_delta(field: &Arc<Field>, prec: usize) -> Result<USeries> {
    let q = field.q() as usize;
    let b1 = Poly::bracket(field, 1);
    let b2 = Poly::bracket(field, 2);
    let c = Scalar::new(-&Poly::one(field), &b1 * &b2)?;
    let e2 = build_eisenstein_normalized(field, q * q - 1, prec, &c)?;
    let g1 = build_g1(field, prec)?;
    let g1q1 = g1.pow(q as u64 + 1)?;
    let part2 = g1q1.scale(&Scalar::new(Poly::one(field), b1)?);
    let d = e2.scale_poly(&b2).add(&part2)?;
    Ok(d.with_level(Poly::one(field)))
}

/// Δ = -Σ_{a monic} a^{q(q-1)} u(az)^{q-1}, the A-expansion; an independent route.
pub fn build_delta_aexpansion(field: &Arc<Field>, prec: usize) -> Result<USeries> {
    let q = field.q() as usize;
    let m = monic_sum(field, prec, &[(q - 1, Scalar::from_int(field, -1))], |a| Some(a.pow((q * (q - 1)) as u64)))?;
    series_from(field, &GeneratorId::Delta, prec, m)
}

/// h = -Σ_{a monic} a^q u(az), the A-expansion; an independent route to build_h.
pub fn build_h_aexpansion(field: &Arc<Field>, prec: usize) -> Result<USeries> {
    let q = field.q() as u64;
    let m = monic_sum(field, prec, &[(1, Scalar::from_int(field, -1))], |a| Some(a.pow(q)))?;
    series_from(field, &GeneratorId::H, prec, m)
}

/// Δ_T = (g_1(Tz) - g_1(z))/[1].
pub fn build_delta_t(field: &Arc<Field>, prec: usize) -> Result<USeries> {
    let g1 = build_g1(field, prec)?;
    let g1t = g1.dilate(&Poly::t(field), prec)?;
    let inv = Scalar::new(Poly::one(field), Poly::bracket(field, 1))?;
    Ok(g1t.sub(&g1)?.scale(&inv).with_level(Poly::t(field)))
}

/// Δ_W = (T^q g_1(Tz) - T g_1(z))/[1].
pub fn build_delta_w(field: &Arc<Field>, prec: usize) -> Result<USeries> {
    let q = field.q() as usize;
    let t = Poly::t(field);
    let g1 = build_g1(field, prec)?;
    let g1t = g1.dilate(&t, prec)?;
    let inv = Scalar::new(Poly::one(field), Poly::bracket(field, 1))?;
    let num = g1t.scale_poly(&Poly::monomial(field, 1, q)).sub(&g1.scale_poly(&t))?;
    Ok(num.scale(&inv).with_level(t))
}

/// h = -Δ_W·E_T.
pub fn build_h(field: &Arc<Field>, prec: usize) -> Result<USeries> {
    let t = Poly::t(field);
    let dw = build_delta_w(field, prec)?;
    let et = build_e_p(&t, prec)?;
    let (k, l) = GeneratorId::H.grading(field);
    let h = dw.mul_capped(&et, prec)?.neg();
    USeries::new(field, k, l as i64, h.prec(), h.coeffs().clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_scalar;

    fn f3() -> Arc<Field> {
        Field::prime(3).unwrap()
    }

    fn c(s: &USeries, i: usize) -> String {
        s.coeff(i).unwrap().to_text()
    }

    #[test]
    fn e_low_coefficients() {
        let f = f3();
        let e = build_e(&f, 30).unwrap();
        assert_eq!(c(&e, 1), "1");
        assert_eq!(c(&e, 3), "0");
        assert_eq!(c(&e, 5), "1");
    }

    #[test]
    fn e_t_routes_agree() {
        let f = f3();
        let t = Poly::t(&f);
        let a = build_e_p(&t, 60).unwrap();
        let b = build_e_p_coprime_sum(&t, 60).unwrap();
        assert!(a.compare(&b).equal);
        assert_eq!(c(&a, 1), "1");
        assert_eq!(c(&a, 3), "2*T");
    }

    #[test]
    fn g1_and_delta_t_w() {
        let f = f3();
        let g1 = build_g1(&f, 40).unwrap();
        assert_eq!(c(&g1, 0), "1");
        assert_eq!(c(&g1, 2), "2*T^3+T");
        assert_eq!(c(&g1, 14), "2*T^3+T");
        let dt = build_delta_t(&f, 40).unwrap();
        let dw = build_delta_w(&f, 40).unwrap();
        assert_eq!(c(&dt, 0), "0");
        assert_eq!(c(&dt, 2), "1");
        assert_eq!(c(&dw, 0), "1");
        // Δ_W - T^q Δ_T = g_1 and Δ_W - T Δ_T = g_1(Tz)
        let tq = Poly::monomial(&f, 1, 3);
        assert!(dw.sub(&dt.scale_poly(&tq)).unwrap().agrees_with(&g1));
        let g1t = g1.dilate(&Poly::t(&f), 40).unwrap();
        assert!(dw.sub(&dt.scale_poly(&Poly::t(&f))).unwrap().agrees_with(&g1t));
        for s in [&dt, &dw] {
            assert!(s.coeffs().values().all(|x| x.is_integral()));
        }
    }

    #[test]
    fn g1_matches_normalized_eisenstein() {
        let f = f3();
        let b1 = Scalar::from_poly(Poly::bracket(&f, 1));
        let e = build_eisenstein_normalized(&f, 2, 50, &b1.inv().unwrap()).unwrap();
        assert!(e.scale(&b1).agrees_with(&build_g1(&f, 50).unwrap()));
    }

    #[test]
    fn h_routes_agree() {
        let f = f3();
        let h = build_h(&f, 80).unwrap();
        let h2 = build_h_aexpansion(&f, 80).unwrap();
        assert!(h.compare(&h2).equal);
        assert_eq!(c(&h, 1), "2");
        assert_eq!(c(&h, 5), "2");
        assert_eq!(c(&h, 7), "T^3+2*T");
    }

    #[test]
    fn delta_routes_agree() {
        let f = f3();
        let d = build_delta(&f, 80).unwrap();
        let d2 = build_delta_aexpansion(&f, 80).unwrap();
        assert!(d.compare(&d2).equal, "{:?}", d.compare(&d2));
        assert_eq!(c(&d, 2), "2");
        assert_eq!(c(&d, 6), "1");
        assert_eq!(c(&d, 8), parse_scalar(&f, "-(T^3-T)").unwrap().to_text());
    }
}
