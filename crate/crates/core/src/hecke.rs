//! Hecke operators T_p, U_p and the degeneracy map δ_P on u-expansions.
//!
//! U_p f = Σ_Q f((z+Q)/P) = Σ_j a_f(j)·G_{j,Λ_P}(P u). Writing H_j(u) = G_{j,Λ_P}(Pu),
//! the Goss recurrence with α_i = c_i/P (ρ_P = Σ c_i X^{q^i}) becomes
//! H_1 = P u, H_j = u·Σ_i c_i H_{j-q^i}, which stays inside A[u].

use std::fmt;
use std::sync::{Arc, Mutex};

use crate::algebra::{binomial_mod_p, Acc, Field, Poly, Scalar};
use crate::carlitz::{self, check_prime};
use crate::error::{Error, Result};
use crate::useries::{Comparison, USeries};

struct ScaledGoss {
    jmax: usize,
    bound: usize,
    /// rows[j][m] = coefficient of u^m in G_j(Pu), for m < bound
    rows: Vec<Vec<Poly>>,
}

pub struct PrimeP {
    p: Poly,
    d: usize,
    rho: Vec<Poly>,
    cache: Mutex<Option<Arc<ScaledGoss>>>,
}

impl fmt::Debug for PrimeP {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PrimeP({})", self.p)
    }
}

impl PrimeP {
    pub fn new(p: &Poly) -> Result<PrimeP> {
        check_prime(p)?;
        Ok(PrimeP { p: p.clone(), d: p.deg() as usize, rho: carlitz::carlitz_coeffs(p), cache: Mutex::new(None) })
    }

    pub fn poly(&self) -> &Poly {
        &self.p
    }

    pub fn deg(&self) -> usize {
        self.d
    }

    pub fn field(&self) -> &Arc<Field> {
        self.p.field()
    }

    /// q^{deg P}
    pub fn norm(&self) -> usize {
        (self.field().q() as usize).pow(self.d as u32)
    }

    pub fn rho(&self) -> &[Poly] {
        &self.rho
    }

    /// The input precision U_p/T_p need for `out_prec` output coefficients.
    pub fn needed_precision(&self, out_prec: usize) -> usize {
        out_prec.saturating_mul(self.norm())
    }

    fn scaled_goss(&self, jmax: usize, bound: usize) -> Arc<ScaledGoss> {
        let mut guard = self.cache.lock().expect("scaled goss cache");
        if let Some(t) = guard.as_ref() {
            if t.jmax >= jmax && t.bound >= bound {
                return t.clone();
            }
        }
        let (jmax, bound) = match guard.as_ref() {
            Some(t) => (jmax.max(t.jmax), bound.max(t.bound)),
            None => (jmax, bound),
        };
        let f = self.field().clone();
        let q = f.q() as usize;
        let mut rows: Vec<Vec<Poly>> = vec![Vec::new(); jmax + 1];
        if jmax >= 1 && bound > 1 {
            rows[1] = vec![Poly::zero(&f), self.p.clone()];
        }
        for j in 2..=jmax {
            let len = (j + 1).min(bound);
            let mut accs: Vec<Option<Acc>> = (0..len).map(|_| None).collect();
            let mut qi = 1usize;
            for c in &self.rho {
                if qi >= j {
                    break;
                }
                if !c.is_zero() {
                    for (m, h) in rows[j - qi].iter().enumerate() {
                        if h.is_zero() || m + 1 >= len {
                            continue;
                        }
                        accs[m + 1].get_or_insert_with(|| Acc::new(&f)).add_mul(c, h);
                    }
                }
                qi *= q;
            }
            let mut row: Vec<Poly> = accs.into_iter().map(|a| a.map(|a| a.finish()).unwrap_or_else(|| Poly::zero(&f))).collect();
            while row.last().map(|x| x.is_zero()).unwrap_or(false) {
                row.pop();
            }
            rows[j] = row;
        }
        let t = Arc::new(ScaledGoss { jmax, bound, rows });
        *guard = Some(t.clone());
        t
    }

    /// G_{j,Λ_P}(Pu) as a u-series, valid below `bound`.
    pub fn goss_at_pu(&self, j: usize, bound: usize) -> Result<USeries> {
        let t = self.scaled_goss(j, bound);
        let f = self.field();
        let items = t.rows[j].iter().enumerate().take(bound).filter(|(_, p)| !p.is_zero()).map(|(m, p)| (m, p.clone()));
        USeries::from_polys(f, 0, j as i64, bound, items)
    }
}

fn check_input(f: &USeries, p: &PrimeP, out_prec: usize) -> Result<usize> {
    let need = p.needed_precision(out_prec);
    if f.prec() < need {
        return Err(Error::InsufficientPrecision { needed: need, available: f.prec() });
    }
    Ok(need)
}

/// U_p f to `out_prec` coefficients.
pub fn op_u(f: &USeries, p: &PrimeP, out_prec: usize) -> Result<USeries> {
    let need = check_input(f, p, out_prec)?;
    let field = f.field().clone();
    let (den, items) = f.split_denominator();
    let jmax = items.iter().map(|(j, _)| *j).filter(|&j| j < need).max().unwrap_or(0);
    let table = p.scaled_goss(jmax, out_prec);
    let mut accs: Vec<Option<Acc>> = (0..out_prec).map(|_| None).collect();
    for (j, a) in &items {
        if *j >= need {
            break;
        }
        if *j == 0 {
            continue;
        }
        for (m, h) in table.rows[*j].iter().enumerate().take(out_prec) {
            if !h.is_zero() {
                accs[m].get_or_insert_with(|| Acc::new(&field)).add_mul(a, h);
            }
        }
    }
    let out = f.assemble(f.weight(), f.ty(), out_prec, &den, accs)?;
    Ok(out.with_level(f.level().clone()))
}

/// δ_P f = P^l·f(Pz), valid below min(prec·q^d, cap); the level tag is multiplied by P.
pub fn op_delta_p(f: &USeries, p: &PrimeP, cap: usize) -> Result<USeries> {
    let s = f.dilate(p.poly(), cap)?;
    let pl = p.poly().pow(f.ty() as u64);
    let level = f.level() * p.poly();
    Ok(s.scale_poly(&pl).with_level(level))
}

/// T_p f = P^k f(Pz) + U_p f, for P coprime to the level of f.
pub fn op_t(f: &USeries, p: &PrimeP, out_prec: usize) -> Result<USeries> {
    if p.poly().divides(f.level()) {
        return Err(Error::LevelNotCoprime { prime: p.poly().to_text(), level: f.level().to_text() });
    }
    let u = op_u(f, p, out_prec)?;
    let scale = scale_part(f, p, out_prec)?;
    Ok(u.add(&scale)?.with_level(f.level().clone()))
}

/// P^k f(Pz), the term of T_p not in U_p.
pub fn scale_part(f: &USeries, p: &PrimeP, out_prec: usize) -> Result<USeries> {
    if f.weight() < 0 {
        return Err(Error::Invalid("negative weight".into()));
    }
    let pk = p.poly().pow(f.weight() as u64);
    Ok(f.dilate(p.poly(), out_prec)?.scale_poly(&pk))
}

/// Which coefficient of T_p f the low-coefficient formula predicts.
pub fn low_coeff_index(f: &USeries) -> usize {
    if f.ty() == 0 {
        f.field().q() as usize - 1
    } else {
        f.ty() as usize
    }
}

/// Σ_{0≤j<l} C(l-1,j) P^{l-j} a_f(j(q-1)+l) for type l ≥ 1, and
/// Σ_{0≤j<q-1} C(q-2,j) P^{q-1-j} a_f((j+1)(q-1)) for type 0 (deg P = 1).
pub fn op_t_low_coeff_oracle(f: &USeries, p: &PrimeP) -> Result<Scalar> {
    if p.deg() != 1 {
        return Err(Error::Invalid("the low-coefficient formula needs deg P = 1".into()));
    }
    let field = f.field().clone();
    let q = field.q() as usize;
    let pf = field.p();
    let l = f.ty() as usize;
    let mut acc = Scalar::zero(&field);
    let (top, terms): (usize, Vec<(usize, usize)>) = if l >= 1 {
        (l - 1, (0..l).map(|j| (j, j * (q - 1) + l)).collect())
    } else {
        (q - 2, (0..q - 1).map(|j| (j, (j + 1) * (q - 1))).collect())
    };
    let ptop = if l >= 1 { l } else { q - 1 };
    for (j, idx) in terms {
        let b = binomial_mod_p(top as u64, j as u64, pf);
        if b == 0 {
            continue;
        }
        let a = f.coeff(idx)?;
        let pw = p.poly().pow((ptop - j) as u64);
        acc = &acc + &a.mul_poly(&pw.scale(b));
    }
    Ok(acc)
}

/// f^{q^n}
pub fn op_frobenius_twist(f: &USeries, n: u32) -> USeries {
    f.frobenius_pow(n)
}

/// Compare T_p(f^{q^n}) with (T_p f)^{q^n} on their common range.
pub fn frobenius_commutation(f: &USeries, p: &PrimeP, n: u32, out_prec: usize) -> Result<Comparison> {
    let qn = (f.field().q() as usize).pow(n);
    let lhs = op_t(&f.frobenius_pow(n), p, out_prec)?;
    let base_prec = out_prec.div_ceil(qn);
    let rhs = op_t(f, p, base_prec)?.frobenius_pow(n);
    Ok(lhs.compare(&rhs))
}

/// Coefficients of U_p applied to a batch, sharing the Goss table.
pub fn op_u_batch(fs: &[USeries], p: &PrimeP, out_prec: usize) -> Result<Vec<USeries>> {
    fs.iter().map(|f| op_u(f, p, out_prec)).collect()
}

/// G_{j,Λ_P}(Pu) through the rational Goss table of Λ_P.
pub fn goss_at_pu_via_table(p: &PrimeP, j: usize, bound: usize) -> Result<USeries> {
    let f = p.field().clone();
    let table = carlitz::goss_table(&carlitz::torsion_alpha(p.poly())?, j)?;
    let pu = USeries::u(&f, bound).scale_poly(p.poly());
    carlitz::goss_eval(table.get(j), &pu, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_poly;
    use crate::forms;

    fn f3() -> Arc<Field> {
        Field::prime(3).unwrap()
    }

    #[test]
    fn scaled_goss_matches_rational_table() {
        let f = f3();
        for ps in ["T", "T+1", "T^2+1"] {
            let p = PrimeP::new(&parse_poly(&f, ps).unwrap()).unwrap();
            for j in 1..40 {
                let a = p.goss_at_pu(j, 30).unwrap();
                let b = goss_at_pu_via_table(&p, j, 30).unwrap();
                assert!(a.agrees_with(&b), "P={ps} j={j}");
            }
        }
    }

    #[test]
    fn u_t_on_e_t() {
        let f = f3();
        let t = Poly::t(&f);
        let p = PrimeP::new(&t).unwrap();
        let et = forms::build_e_p(&t, 180).unwrap();
        let u = op_u(&et, &p, 60).unwrap();
        assert!(u.compare(&et.scale_poly(&t).truncate(60)).equal);
    }

    #[test]
    fn t_p_h_eigen() {
        let f = f3();
        let h = forms::build_h(&f, 120).unwrap();
        for ps in ["T", "T+2"] {
            let pp = parse_poly(&f, ps).unwrap();
            let p = PrimeP::new(&pp).unwrap();
            let th = op_t(&h, &p, 40).unwrap();
            assert!(th.compare(&h.scale_poly(&pp).truncate(40)).equal, "P={ps}");
        }
    }

    #[test]
    fn precision_contract() {
        let f = f3();
        let h = forms::build_h(&f, 50).unwrap();
        let p = PrimeP::new(&Poly::t(&f)).unwrap();
        assert!(matches!(op_u(&h, &p, 20), Err(Error::InsufficientPrecision { .. })));
        let et = forms::build_e_p(&Poly::t(&f), 90).unwrap();
        assert!(matches!(op_t(&et, &p, 10), Err(Error::LevelNotCoprime { .. })));
    }

    #[test]
    fn oracle_on_h() {
        let f = f3();
        let h = forms::build_h(&f, 60).unwrap();
        let p = PrimeP::new(&Poly::t(&f)).unwrap();
        let o = op_t_low_coeff_oracle(&h, &p).unwrap();
        assert_eq!(o, Scalar::from_poly(-&Poly::t(&f)));
    }
}
