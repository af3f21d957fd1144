//! Monomial bases g1^a Δ^b h^l of level-one spaces, exact T_p matrices and the
//! kernel / ±P^{k/2} / diagonalizability / bijectivity checks.

use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{Field, Poly, Scalar, XPoly};
use crate::error::{Error, Result};
use crate::forms;
use crate::hecke::{self, PrimeP};
use crate::useries::USeries;

pub type Matrix = Vec<Vec<Scalar>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonomialBasis {
    pub q: usize,
    pub k: i64,
    pub l: u32,
    pub cusp: bool,
    /// exponent pairs (a, b), strictly increasing in b
    pub exps: Vec<(usize, usize)>,
}

impl MonomialBasis {
    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    pub fn orders(&self) -> Vec<usize> {
        self.exps.iter().map(|&(_, b)| b * (self.q - 1) + self.l as usize).collect()
    }

    pub fn max_order(&self) -> usize {
        self.orders().into_iter().max().unwrap_or(0)
    }

    pub fn labels(&self) -> Vec<String> {
        self.exps.iter().map(|&(a, b)| monomial_label(a, b, self.l)).collect()
    }
}

pub fn monomial_label(a: usize, b: usize, l: u32) -> String {
    let mut parts = Vec::new();
    for (name, e) in [("g1", a), ("Delta", b), ("h", l as usize)] {
        match e {
            0 => {}
            1 => parts.push(name.to_string()),
            _ => parts.push(format!("{name}^{e}")),
        }
    }
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("*")
    }
}

/// ⌊(k − l(q+1))/(q²−1)⌋ + 1, or 0 when the numerator is negative or k ≢ 2l.
pub fn dimension_formula(q: usize, k: i64, l: u32) -> usize {
    let m = q as i64 - 1;
    if (k - 2 * l as i64).rem_euclid(m) != 0 {
        return 0;
    }
    let num = k - l as i64 * (q as i64 + 1);
    if num < 0 {
        return 0;
    }
    (num.div_euclid(q as i64 * q as i64 - 1) + 1) as usize
}

pub fn enumerate_basis(q: usize, k: i64, l: u32, cusp: bool) -> MonomialBasis {
    let mut exps = Vec::new();
    let qi = q as i64;
    if l as i64 <= qi - 2 && (k - 2 * l as i64).rem_euclid(qi - 1) == 0 {
        let rest = k - l as i64 * (qi + 1);
        let mut b = 0i64;
        while rest - b * (qi * qi - 1) >= 0 {
            let a = (rest - b * (qi * qi - 1)) / (qi - 1);
            if !(cusp && l == 0 && b == 0) {
                exps.push((a as usize, b as usize));
            }
            b += 1;
        }
    }
    MonomialBasis { q, k, l, cusp, exps }
}

/// Generator series g1, Δ, h at a common precision.
pub struct Generators {
    pub g1: USeries,
    pub delta: USeries,
    pub h: USeries,
}

impl Generators {
    pub fn new(field: &Arc<Field>, prec: usize) -> Result<Generators> {
        Ok(Generators { g1: forms::build_g1(field, prec)?, delta: forms::build_delta(field, prec)?, h: forms::build_h(field, prec)? })
    }

    pub fn prec(&self) -> usize {
        self.g1.prec().min(self.delta.prec()).min(self.h.prec())
    }

    pub fn monomial(&self, a: usize, b: usize, l: u32) -> Result<USeries> {
        let field = self.g1.field();
        let prec = self.prec();
        let mut s = USeries::one(field, prec);
        for (g, e) in [(&self.g1, a), (&self.delta, b), (&self.h, l as usize)] {
            if e > 0 {
                s = s.mul_capped(&g.pow_capped(e as u64, prec)?, prec)?;
            }
        }
        Ok(s)
    }
}

/// Gaussian elimination on coefficient vectors below `prec`, tracking how each
/// reduced row combines the original basis.
pub struct SpanSolver {
    field: Arc<Field>,
    prec: usize,
    n: usize,
    rows: Vec<(usize, Vec<Scalar>, Vec<Scalar>)>,
}

fn dense(s: &USeries, prec: usize) -> Vec<Scalar> {
    let mut v = vec![Scalar::zero(s.field()); prec];
    for (&i, c) in s.coeffs().range(..prec) {
        v[i] = c.clone();
    }
    v
}

impl SpanSolver {
    pub fn new(basis: &[USeries], prec: usize) -> Result<SpanSolver> {
        let field = basis.first().map(|s| s.field().clone()).ok_or_else(|| Error::Invalid("empty basis".into()))?;
        let n = basis.len();
        let mut rows: Vec<(usize, Vec<Scalar>, Vec<Scalar>)> = Vec::new();
        for (j, b) in basis.iter().enumerate() {
            if b.prec() < prec {
                return Err(Error::InsufficientPrecision { needed: prec, available: b.prec() });
            }
            let mut v = dense(b, prec);
            let mut comb = vec![Scalar::zero(&field); n];
            comb[j] = Scalar::one(&field);
            for (piv, rv, rc) in &rows {
                if !v[*piv].is_zero() {
                    let t = v[*piv].clone();
                    for i in 0..prec {
                        if !rv[i].is_zero() {
                            v[i] = &v[i] - &(&t * &rv[i]);
                        }
                    }
                    for i in 0..n {
                        comb[i] = &comb[i] - &(&t * &rc[i]);
                    }
                }
            }
            let piv = (0..prec).find(|&i| !v[i].is_zero()).ok_or_else(|| Error::Invalid("basis is linearly dependent".into()))?;
            let inv = v[piv].inv()?;
            let v: Vec<Scalar> = v.iter().map(|x| x * &inv).collect();
            let comb: Vec<Scalar> = comb.iter().map(|x| x * &inv).collect();
            // keep earlier rows reduced at the new pivot
            for (_, rv, rc) in rows.iter_mut() {
                if !rv[piv].is_zero() {
                    let t = rv[piv].clone();
                    for i in 0..prec {
                        rv[i] = &rv[i] - &(&t * &v[i]);
                    }
                    for i in 0..n {
                        rc[i] = &rc[i] - &(&t * &comb[i]);
                    }
                }
            }
            rows.push((piv, v, comb));
        }
        Ok(SpanSolver { field, prec, n, rows })
    }

    pub fn prec(&self) -> usize {
        self.prec
    }

    /// Coordinates of `target` in the basis; fails unless the residual vanishes below prec.
    pub fn express(&self, target: &USeries) -> Result<Vec<Scalar>> {
        if target.prec() < self.prec {
            return Err(Error::InsufficientPrecision { needed: self.prec, available: target.prec() });
        }
        let mut v = dense(target, self.prec);
        let mut out = vec![Scalar::zero(&self.field); self.n];
        for (piv, rv, rc) in &self.rows {
            if v[*piv].is_zero() {
                continue;
            }
            let t = v[*piv].clone();
            for i in 0..self.prec {
                if !rv[i].is_zero() {
                    v[i] = &v[i] - &(&t * &rv[i]);
                }
            }
            for i in 0..self.n {
                out[i] = &out[i] + &(&t * &rc[i]);
            }
        }
        if let Some(i) = v.iter().position(|x| !x.is_zero()) {
            return Err(Error::Residual(i));
        }
        Ok(out)
    }
}

/// Matrix whose column j holds the coordinates of images[j].
pub fn matrix_on_span(basis: &[USeries], images: &[USeries], prec: usize) -> Result<Matrix> {
    let n = basis.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let solver = SpanSolver::new(basis, prec)?;
    let field = basis[0].field().clone();
    let mut m = vec![vec![Scalar::zero(&field); n]; n];
    for (j, img) in images.iter().enumerate() {
        for (i, c) in solver.express(img)?.into_iter().enumerate() {
            m[i][j] = c;
        }
    }
    Ok(m)
}

/// det(X·I − M) by Berkowitz's division-free recursion.
pub fn charpoly(field: &Arc<Field>, m: &Matrix) -> XPoly {
    let n = m.len();
    // high degree first
    let mut p = vec![Scalar::one(field)];
    for r in 0..n {
        let mut vec_t = Vec::with_capacity(r + 2);
        vec_t.push(Scalar::one(field));
        vec_t.push(-&m[r][r]);
        // w = A_r^i C for i = 0..r-1
        let mut w: Vec<Scalar> = (0..r).map(|i| m[i][r].clone()).collect();
        for _ in 0..r {
            let mut s = Scalar::zero(field);
            for j in 0..r {
                s = &s + &(&m[r][j] * &w[j]);
            }
            vec_t.push(-&s);
            let nw: Vec<Scalar> = (0..r)
                .map(|i| {
                    let mut t = Scalar::zero(field);
                    for j in 0..r {
                        t = &t + &(&m[i][j] * &w[j]);
                    }
                    t
                })
                .collect();
            w = nw;
        }
        let mut np = vec![Scalar::zero(field); r + 2];
        for (i, slot) in np.iter_mut().enumerate() {
            let mut s = Scalar::zero(field);
            for (j, pj) in p.iter().enumerate() {
                if i >= j {
                    s = &s + &(&vec_t[i - j] * pj);
                }
            }
            *slot = s;
        }
        p = np;
    }
    p.reverse();
    XPoly::from_coeffs(field, p)
}

pub fn det(field: &Arc<Field>, m: &Matrix) -> Scalar {
    let c0 = charpoly(field, m).coeff(0);
    if m.len() % 2 == 1 {
        -&c0
    } else {
        c0
    }
}

fn mat_vec(m: &Matrix, v: &[Scalar]) -> Vec<Scalar> {
    m.iter()
        .map(|row| row.iter().zip(v).fold(Scalar::zero(v[0].field()), |acc, (a, b)| &acc + &(a * b)))
        .collect()
}

fn mat_mul(field: &Arc<Field>, a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(Scalar::zero(field), |acc, k| &acc + &(&a[i][k] * &b[k][j])))
                .collect()
        })
        .collect()
}

/// Solve Σ c_i vs[i] = target if possible.
pub(crate) fn in_span(field: &Arc<Field>, vs: &[Vec<Scalar>], target: &[Scalar]) -> Option<Vec<Scalar>> {
    let n = target.len();
    let k = vs.len();
    // augmented system n × (k+1)
    let mut a: Vec<Vec<Scalar>> = (0..n).map(|i| {
        let mut row: Vec<Scalar> = vs.iter().map(|v| v[i].clone()).collect();
        row.push(target[i].clone());
        row
    }).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..k {
        let Some(p) = (r..n).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let inv = a[r][c].inv().ok()?;
        for x in a[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..n {
            if i != r && !a[i][c].is_zero() {
                let t = a[i][c].clone();
                #[allow(clippy::needless_range_loop)]
                for j in 0..=k {
                    a[i][j] = &a[i][j] - &(&t * &a[r][j]);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    if a[r..].iter().any(|row| !row[k].is_zero()) {
        return None;
    }
    let mut sol = vec![Scalar::zero(field); k];
    for (i, &c) in pivots.iter().enumerate() {
        sol[c] = a[i][k].clone();
    }
    Some(sol)
}

/// Minimal polynomial as the lcm of the Krylov annihilators of the unit vectors.
pub fn minpoly(field: &Arc<Field>, m: &Matrix) -> XPoly {
    let n = m.len();
    let mut acc = XPoly::one(field);
    for e in 0..n {
        let mut v: Vec<Scalar> = (0..n).map(|i| if i == e { Scalar::one(field) } else { Scalar::zero(field) }).collect();
        let mut krylov: Vec<Vec<Scalar>> = Vec::new();
        loop {
            if let Some(c) = in_span(field, &krylov, &v) {
                let d = krylov.len();
                let mut coeffs: Vec<Scalar> = c.iter().map(|x| -x).collect();
                coeffs.push(Scalar::one(field));
                debug_assert_eq!(coeffs.len(), d + 1);
                acc = acc.lcm(&XPoly::from_coeffs(field, coeffs));
                break;
            }
            let next = mat_vec(m, &v);
            krylov.push(v);
            v = next;
        }
    }
    acc
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Verdicts {
    pub kernel_trivial: bool,
    pub no_pm_pk2_eigenvalue: bool,
    pub diagonalizable: bool,
    pub id_minus_pkt2_bijective: bool,
}

pub fn conjecture_checks(field: &Arc<Field>, p: &Poly, k: i64, m: &Matrix) -> Result<Verdicts> {
    let chi = charpoly(field, m);
    let mp = minpoly(field, m);
    let kernel_trivial = !chi.eval(&Scalar::zero(field)).is_zero();
    let no_pm = if k % 2 != 0 {
        true
    } else {
        let half = Scalar::from_poly(p.pow((k / 2) as u64));
        !chi.eval(&half).is_zero() && !chi.eval(&-&half).is_zero()
    };
    let dm = mp.derivative();
    let diagonalizable = !dm.is_zero() && mp.gcd(&dm).deg() == 0;
    let n = m.len();
    let pk = Scalar::from_poly(p.pow(k as u64)).inv()?;
    let m2 = mat_mul(field, m, m);
    let id_minus: Matrix = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let id = if i == j { Scalar::one(field) } else { Scalar::zero(field) };
                    &id - &(&pk * &m2[i][j])
                })
                .collect()
        })
        .collect();
    let bij = n == 0 || !det(field, &id_minus).is_zero();
    Ok(Verdicts { kernel_trivial, no_pm_pk2_eigenvalue: no_pm, diagonalizable, id_minus_pkt2_bijective: bij })
}

#[derive(Clone, Debug, Serialize)]
pub struct HeckeReport {
    pub q: usize,
    #[serde(rename = "P")]
    pub p: String,
    pub k: i64,
    pub l: u32,
    pub cusp: bool,
    pub basis: Vec<String>,
    pub matrix: Vec<Vec<String>>,
    pub char_poly: String,
    pub min_poly: String,
    pub verdicts: Verdicts,
    pub certified_prec: usize,
    #[serde(skip)]
    pub raw_matrix: Matrix,
    #[serde(skip)]
    pub images: Vec<USeries>,
}

/// Output precision used to solve for the columns of T_p on `basis`.
pub fn solve_precision(basis: &MonomialBasis) -> usize {
    basis.max_order() + basis.dim() + 1 + 2 * (basis.q - 1)
}

pub fn hecke_matrix(field: &Arc<Field>, p: &PrimeP, k: i64, l: u32, cusp: bool) -> Result<HeckeReport> {
    let q = field.q() as usize;
    let basis = enumerate_basis(q, k, l, cusp);
    let out = solve_precision(&basis);
    let gens = Generators::new(field, p.needed_precision(out))?;
    hecke_matrix_with(field, p, &basis, &gens)
}

pub fn hecke_matrix_with(field: &Arc<Field>, p: &PrimeP, basis: &MonomialBasis, gens: &Generators) -> Result<HeckeReport> {
    let out = solve_precision(basis);
    let mut monos = Vec::new();
    let mut images = Vec::new();
    for &(a, b) in &basis.exps {
        let f = gens.monomial(a, b, basis.l)?;
        images.push(hecke::op_t(&f, p, out)?);
        monos.push(f.truncate(out));
    }
    let m = matrix_on_span(&monos, &images, out)?;
    let chi = charpoly(field, &m);
    let mp = minpoly(field, &m);
    let verdicts = conjecture_checks(field, p.poly(), basis.k, &m)?;
    Ok(HeckeReport {
        q: basis.q,
        p: p.poly().to_text(),
        k: basis.k,
        l: basis.l,
        cusp: basis.cusp,
        basis: basis.labels(),
        matrix: m.iter().map(|r| r.iter().map(|x| x.to_text()).collect()).collect(),
        char_poly: chi.to_text(),
        min_poly: mp.to_text(),
        verdicts,
        certified_prec: out,
        raw_matrix: m,
        images,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_poly;

    fn f3() -> Arc<Field> {
        Field::prime(3).unwrap()
    }

    fn s(f: &Arc<Field>, t: &str) -> Scalar {
        crate::algebra::parse_scalar(f, t).unwrap()
    }

    #[test]
    fn basis_examples() {
        assert_eq!(enumerate_basis(3, 4, 1, true).labels(), vec!["h"]);
        assert_eq!(enumerate_basis(3, 8, 0, true).labels(), vec!["Delta"]);
        assert_eq!(enumerate_basis(3, 18, 1, true).labels(), vec!["g1^7*h", "g1^3*Delta*h"]);
        assert_eq!(enumerate_basis(3, 5, 1, false).dim(), 0);
        for k in 0..60 {
            for l in 0..2 {
                assert_eq!(enumerate_basis(3, k, l, false).dim(), dimension_formula(3, k, l));
            }
        }
    }

    #[test]
    fn berkowitz_small() {
        let f = f3();
        let one = Scalar::one(&f);
        let z = Scalar::zero(&f);
        let id = vec![vec![one.clone(), z.clone()], vec![z.clone(), one.clone()]];
        assert_eq!(charpoly(&f, &id).to_text(), "X^2 + X + 1");
        assert_eq!(minpoly(&f, &id).to_text(), "X + 2");
        let jb = vec![vec![z.clone(), one.clone()], vec![z.clone(), z.clone()]];
        assert_eq!(minpoly(&f, &jb).to_text(), "X^2");
        let v = conjecture_checks(&f, &Poly::t(&f), 4, &jb).unwrap();
        assert!(!v.diagonalizable && !v.kernel_trivial);
        let m = vec![vec![s(&f, "T"), s(&f, "1")], vec![s(&f, "T^2"), s(&f, "1/T")]];
        let chi = charpoly(&f, &m);
        assert_eq!(chi.coeff(0), det(&f, &m));
        assert_eq!(det(&f, &m), s(&f, "1-T^2"));
    }

    #[test]
    fn small_matrices() {
        let f = f3();
        for ps in ["T", "T+1", "T^2+1"] {
            let pp = parse_poly(&f, ps).unwrap();
            let p = PrimeP::new(&pp).unwrap();
            let r = hecke_matrix(&f, &p, 4, 1, true).unwrap();
            assert_eq!(r.matrix, vec![vec![pp.to_text()]]);
            let r = hecke_matrix(&f, &p, 8, 0, true).unwrap();
            assert_eq!(r.matrix, vec![vec![pp.pow(2).to_text()]]);
            assert!(r.verdicts.no_pm_pk2_eigenvalue);
        }
    }

    #[test]
    fn dim_two_special_values() {
        let f = f3();
        let t = Poly::t(&f);
        let p = PrimeP::new(&t).unwrap();
        let r = hecke_matrix(&f, &p, 18, 1, true).unwrap();
        assert_eq!(r.images[0].coeff(1).unwrap(), Scalar::from_poly(-&t));
        assert!(r.images[1].coeff(1).unwrap().is_zero());
        assert_eq!(r.images[1].coeff(3).unwrap(), Scalar::from_poly(t.pow(3)));
        assert!(r.verdicts.no_pm_pk2_eigenvalue && r.verdicts.id_minus_pkt2_bijective);
    }
}
