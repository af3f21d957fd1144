//! The finite field F_q, q = p^r with p odd.
//!
//! Elements are encoded as integers in `0..q`: the base-p digits of the code
//! are the coefficients of the element as a polynomial in the generator `w`
//! of F_p[w]/(modulus).

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DEGREE_CEILING: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u32,
    pub r: u32,
    /// Coefficients over F_p, lowest degree first, monic of degree r.
    /// Empty means "pick the default" (and is ignored for r = 1).
    pub modulus: Vec<u32>,
}

impl FieldSpec {
    pub fn prime(p: u32) -> Self {
        FieldSpec { p, r: 1, modulus: vec![0, 1] }
    }

    pub fn new(p: u32, r: u32) -> Self {
        FieldSpec { p, r, modulus: Vec::new() }
    }

    pub fn with_modulus(p: u32, r: u32, modulus: Vec<u32>) -> Self {
        FieldSpec { p, r, modulus }
    }

    pub fn q(&self) -> u64 {
        (self.p as u64).pow(self.r)
    }
}

pub struct Field {
    spec: FieldSpec,
    q: u32,
    // log/exp tables for r > 1
    exp: Vec<u32>,
    log: Vec<u32>,
    degree_ceiling: usize,
}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "F_{}", self.q)?;
        if self.spec.r > 1 {
            write!(f, " (modulus {:?})", self.spec.modulus)?;
        }
        Ok(())
    }
}

fn is_prime_u32(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

// Polynomials over F_p as small vectors, used only to set up F_q.
fn fp_polymulmod(a: &[u32], b: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let r = m.len() - 1;
    let mut prod = vec![0u64; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x as u64 * y as u64) % p as u64;
        }
    }
    let mut prod: Vec<u32> = prod.into_iter().map(|x| x as u32).collect();
    for i in (r..prod.len()).rev() {
        let c = prod[i];
        if c == 0 {
            continue;
        }
        for k in 0..=r {
            let t = (c as u64 * m[k] as u64) % p as u64;
            prod[i - r + k] = ((prod[i - r + k] as u64 + p as u64 - t) % p as u64) as u32;
        }
    }
    prod.truncate(r);
    prod.resize(r, 0);
    prod
}

fn digits_of(mut code: u32, p: u32, r: u32) -> Vec<u32> {
    let mut d = Vec::with_capacity(r as usize);
    for _ in 0..r {
        d.push(code % p);
        code /= p;
    }
    d
}

fn code_of(digits: &[u32], p: u32) -> u32 {
    digits.iter().rev().fold(0u32, |acc, &d| acc * p + d)
}

/// Irreducibility over F_p for small degree by exhaustive root/factor search:
/// checks that no monic polynomial of degree 1..=r/2 divides m.
fn fp_irreducible(m: &[u32], p: u32) -> bool {
    let r = m.len() - 1;
    if r == 0 || m[r] != 1 {
        return false;
    }
    for d in 1..=(r / 2) {
        let count = (p as u64).pow(d as u32);
        for low in 0..count {
            let mut g = digits_of(low as u32, p, d as u32);
            g.push(1);
            if fp_divides(&g, m, p) {
                return false;
            }
        }
    }
    true
}

fn fp_divides(g: &[u32], m: &[u32], p: u32) -> bool {
    let mut rem: Vec<u64> = m.iter().map(|&x| x as u64).collect();
    let dg = g.len() - 1;
    for i in (dg..rem.len()).rev() {
        let c = rem[i] % p as u64;
        if c == 0 {
            continue;
        }
        for k in 0..=dg {
            let t = c * g[k] as u64 % p as u64;
            rem[i - dg + k] = (rem[i - dg + k] + p as u64 - t) % p as u64;
        }
    }
    rem[..dg].iter().all(|&x| x % p as u64 == 0)
}

/// Lexicographically smallest monic irreducible of degree r over F_p,
/// comparing coefficient vectors from degree r-1 down to the constant term.
pub fn default_modulus(p: u32, r: u32) -> Vec<u32> {
    let count = (p as u64).pow(r);
    for low in 0..count {
        let mut m = digits_of(low as u32, p, r);
        m.push(1);
        if fp_irreducible(&m, p) {
            return m;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

impl Field {
    pub fn new(spec: FieldSpec) -> Result<Arc<Field>> {
        Self::with_ceiling(spec, DEFAULT_DEGREE_CEILING)
    }

    pub fn prime(p: u32) -> Result<Arc<Field>> {
        Self::new(FieldSpec::prime(p))
    }

    pub fn with_ceiling(mut spec: FieldSpec, degree_ceiling: usize) -> Result<Arc<Field>> {
        let p = spec.p;
        if p == 2 || !is_prime_u32(p) {
            return Err(Error::InvalidField(format!("p = {p} is not an odd prime")));
        }
        if spec.r == 0 {
            return Err(Error::InvalidField("r must be positive".into()));
        }
        let q64 = spec.q();
        if q64 > (1 << 20) {
            return Err(Error::InvalidField(format!("q = {q64} too large")));
        }
        let q = q64 as u32;
        if spec.r == 1 {
            spec.modulus = vec![0, 1];
            return Ok(Arc::new(Field { spec, q, exp: Vec::new(), log: Vec::new(), degree_ceiling }));
        }
        if spec.modulus.is_empty() {
            spec.modulus = default_modulus(p, spec.r);
        }
        if spec.modulus.len() != spec.r as usize + 1 || spec.modulus.iter().any(|&c| c >= p) {
            return Err(Error::InvalidField("modulus must have degree r with digits < p".into()));
        }
        if !fp_irreducible(&spec.modulus, p) {
            return Err(Error::InvalidField(format!("modulus {:?} is not irreducible", spec.modulus)));
        }
        // find a generator of F_q^* and build log/exp tables
        let r = spec.r;
        let mut exp = vec![0u32; q as usize];
        let mut log = vec![0u32; q as usize];
        let mut found = false;
        for g in 2..q {
            let gd = digits_of(g, p, r);
            let mut cur = digits_of(1, p, r);
            let mut ok = true;
            for (e, slot) in exp.iter_mut().enumerate().take(q as usize - 1) {
                let c = code_of(&cur, p);
                if e > 0 && c == 1 {
                    ok = false;
                    break;
                }
                *slot = c;
                cur = fp_polymulmod(&cur, &gd, &spec.modulus, p);
            }
            if ok {
                found = true;
                break;
            }
        }
        if !found {
            return Err(Error::InvalidField("no primitive element".into()));
        }
        for e in 0..(q - 1) {
            log[exp[e as usize] as usize] = e;
        }
        Ok(Arc::new(Field { spec, q, exp, log, degree_ceiling }))
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.spec
    }
    pub fn p(&self) -> u32 {
        self.spec.p
    }
    pub fn r(&self) -> u32 {
        self.spec.r
    }
    pub fn q(&self) -> u32 {
        self.q
    }
    pub fn is_prime_field(&self) -> bool {
        self.spec.r == 1
    }
    pub fn degree_ceiling(&self) -> usize {
        self.degree_ceiling
    }

    pub fn check_degree(&self, degree: usize) -> Result<()> {
        if degree > self.degree_ceiling {
            Err(Error::DegreeCeiling { degree, ceiling: self.degree_ceiling })
        } else {
            Ok(())
        }
    }

    /// The image of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> u32 {
        n.rem_euclid(self.spec.p as i64) as u32
    }

    #[inline]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let p = self.spec.p;
        if self.spec.r == 1 {
            let s = a + b;
            return if s >= p { s - p } else { s };
        }
        let (mut a, mut b) = (a, b);
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..self.spec.r {
            let s = (a % p + b % p) % p;
            out += s * place;
            place *= p;
            a /= p;
            b /= p;
        }
        out
    }

    #[inline]
    pub fn neg(&self, a: u32) -> u32 {
        let p = self.spec.p;
        if self.spec.r == 1 {
            return if a == 0 { 0 } else { p - a };
        }
        let mut a = a;
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..self.spec.r {
            let d = a % p;
            out += ((p - d) % p) * place;
            place *= p;
            a /= p;
        }
        out
    }

    #[inline]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if self.spec.r == 1 {
            return ((a as u64 * b as u64) % self.spec.p as u64) as u32;
        }
        if a == 0 || b == 0 {
            return 0;
        }
        let e = (self.log[a as usize] as u64 + self.log[b as usize] as u64) % (self.q as u64 - 1);
        self.exp[e as usize]
    }

    pub fn pow(&self, a: u32, mut e: u64) -> u32 {
        let mut base = a;
        let mut acc = 1u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: u32) -> Option<u32> {
        if a == 0 {
            return None;
        }
        if self.spec.r == 1 {
            return Some(self.pow(a, self.spec.p as u64 - 2));
        }
        let e = (self.q - 1 - self.log[a as usize]) % (self.q - 1);
        Some(self.exp[e as usize])
    }

    /// Base-p digits of an element (coefficients in the generator w).
    pub fn digits(&self, a: u32) -> Vec<u32> {
        digits_of(a, self.spec.p, self.spec.r)
    }

    pub fn from_digits(&self, digits: &[u32]) -> u32 {
        let mut d: Vec<u32> = digits.iter().map(|&x| x % self.spec.p).collect();
        d.resize(self.spec.r as usize, 0);
        code_of(&d, self.spec.p)
    }

    /// The element w (class of the generator); 1 when r = 1.
    pub fn generator_w(&self) -> u32 {
        if self.spec.r == 1 {
            1
        } else {
            self.spec.p
        }
    }

    pub fn same(&self, other: &Field) -> bool {
        std::ptr::eq(self, other) || self.spec == other.spec
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_modulus_f9() {
        // x^2 + 1 is irreducible over F_3 and smallest in constant-first order
        assert_eq!(default_modulus(3, 2), vec![1, 0, 1]);
        assert_eq!(default_modulus(5, 2), vec![2, 0, 1]);
    }

    #[test]
    fn rejects_even_and_composite() {
        assert!(Field::prime(2).is_err());
        assert!(Field::prime(9).is_err());
        assert!(Field::new(FieldSpec::with_modulus(3, 2, vec![2, 0, 1])).is_err());
    }

    #[test]
    fn f9_axioms_exhaustive() {
        let f = Field::new(FieldSpec::new(3, 2)).unwrap();
        let q = f.q();
        for a in 0..q {
            assert_eq!(f.pow(a, q as u64), a);
            assert_eq!(f.add(a, f.neg(a)), 0);
            if a != 0 {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
            }
            for b in 0..q {
                assert_eq!(f.mul(a, b), f.mul(b, a));
                // freshman's dream in characteristic 3
                assert_eq!(f.pow(f.add(a, b), 3), f.add(f.pow(a, 3), f.pow(b, 3)));
                for c in 0..q {
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                }
            }
        }
    }
}
