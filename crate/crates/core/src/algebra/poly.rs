//! Dense polynomials over F_q: the ring A = F_q[T].

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use super::field::Field;
use crate::error::{Error, Result};

#[derive(Clone)]
pub struct Poly {
    field: Arc<Field>,
    c: Vec<u32>,
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl PartialEq for Poly {
    fn eq(&self, other: &Self) -> bool {
        self.c == other.c
    }
}
impl Eq for Poly {}

impl Hash for Poly {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.c.hash(state);
    }
}

impl Ord for Poly {
    fn cmp(&self, other: &Self) -> Ordering {
        self.c
            .len()
            .cmp(&other.c.len())
            .then_with(|| self.c.iter().rev().cmp(other.c.iter().rev()))
    }
}
impl PartialOrd for Poly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn trim(c: &mut Vec<u32>) {
    while c.last() == Some(&0) {
        c.pop();
    }
}

/// Lazily reduced accumulator for sums of products over a prime field.
/// Entries are kept as raw u64 sums and reduced mod p on demand.
pub struct RawAcc {
    p: u64,
    acc: Vec<u64>,
    headroom: u64,
}

impl RawAcc {
    pub fn new(p: u32) -> Self {
        RawAcc { p: p as u64, acc: Vec::new(), headroom: u64::MAX / 2 }
    }

    fn reduce_in_place(&mut self) {
        for x in self.acc.iter_mut() {
            *x %= self.p;
        }
        self.headroom = u64::MAX / 2 - self.p;
    }

    /// acc += a*b
    pub fn add_mul(&mut self, a: &[u32], b: &[u32]) {
        if a.is_empty() || b.is_empty() {
            return;
        }
        let cost = (self.p - 1) * (self.p - 1) * a.len().min(b.len()) as u64;
        if cost >= self.headroom {
            self.reduce_in_place();
        }
        self.headroom -= cost;
        let n = a.len() + b.len() - 1;
        if self.acc.len() < n {
            self.acc.resize(n, 0);
        }
        let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
        for (i, &x) in short.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let x = x as u64;
            let row = &mut self.acc[i..i + long.len()];
            for (slot, &y) in row.iter_mut().zip(long) {
                *slot += x * y as u64;
            }
        }
    }

    /// acc += s*a for a field constant s
    pub fn add_scaled(&mut self, s: u32, a: &[u32]) {
        if s == 0 || a.is_empty() {
            return;
        }
        let cost = (self.p - 1) * (self.p - 1);
        if cost >= self.headroom {
            self.reduce_in_place();
        }
        self.headroom -= cost;
        if self.acc.len() < a.len() {
            self.acc.resize(a.len(), 0);
        }
        for (slot, &y) in self.acc.iter_mut().zip(a) {
            *slot += s as u64 * y as u64;
        }
    }

    pub fn is_empty(&self) -> bool {
        self.acc.is_empty()
    }

    pub fn finish(self, field: &Arc<Field>) -> Poly {
        let p = self.p;
        let c: Vec<u32> = self.acc.into_iter().map(|x| (x % p) as u32).collect();
        Poly::from_coeffs(field, c)
    }
}

/// Accumulator for sums of polynomial products over any F_q; uses the lazy
/// u64 path for prime fields.
pub struct Acc {
    field: Arc<Field>,
    raw: Option<RawAcc>,
    generic: Vec<u32>,
}

impl Acc {
    pub fn new(field: &Arc<Field>) -> Acc {
        let raw = if field.is_prime_field() { Some(RawAcc::new(field.p())) } else { None };
        Acc { field: field.clone(), raw, generic: Vec::new() }
    }

    pub fn add_mul(&mut self, a: &Poly, b: &Poly) {
        match &mut self.raw {
            Some(r) => r.add_mul(&a.c, &b.c),
            None => {
                let prod = mul_generic(&self.field, &a.c, &b.c);
                add_into(&self.field, &mut self.generic, &prod);
            }
        }
    }

    pub fn add(&mut self, a: &Poly) {
        match &mut self.raw {
            Some(r) => r.add_scaled(1, &a.c),
            None => add_into(&self.field, &mut self.generic, &a.c),
        }
    }

    pub fn add_scaled(&mut self, s: u32, a: &Poly) {
        match &mut self.raw {
            Some(r) => r.add_scaled(s, &a.c),
            None => {
                let f = self.field.clone();
                let scaled: Vec<u32> = a.c.iter().map(|&x| f.mul(x, s)).collect();
                add_into(&f, &mut self.generic, &scaled);
            }
        }
    }

    pub fn finish(self) -> Poly {
        match self.raw {
            Some(r) => r.finish(&self.field),
            None => Poly::from_coeffs(&self.field, self.generic),
        }
    }
}

fn add_into(f: &Field, acc: &mut Vec<u32>, a: &[u32]) {
    if acc.len() < a.len() {
        acc.resize(a.len(), 0);
    }
    for (slot, &x) in acc.iter_mut().zip(a) {
        *slot = f.add(*slot, x);
    }
}

fn mul_generic(f: &Field, a: &[u32], b: &[u32]) -> Vec<u32> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    if f.is_prime_field() {
        let p = f.p() as u64;
        let mut acc = RawAcc { p, acc: Vec::new(), headroom: u64::MAX / 2 };
        acc.add_mul(a, b);
        return acc.acc.into_iter().map(|x| (x % p) as u32).collect();
    }
    let mut out = vec![0u32; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = f.add(out[i + j], f.mul(x, y));
        }
    }
    out
}

impl Poly {
    pub fn from_coeffs(field: &Arc<Field>, mut c: Vec<u32>) -> Poly {
        debug_assert!(c.iter().all(|&x| x < field.q()));
        trim(&mut c);
        Poly { field: field.clone(), c }
    }

    /// Coefficients given as integers, reduced into the prime subfield.
    pub fn from_ints(field: &Arc<Field>, c: &[i64]) -> Poly {
        Poly::from_coeffs(field, c.iter().map(|&x| field.from_int(x)).collect())
    }

    pub fn zero(field: &Arc<Field>) -> Poly {
        Poly { field: field.clone(), c: Vec::new() }
    }

    pub fn one(field: &Arc<Field>) -> Poly {
        Poly::constant(field, 1)
    }

    pub fn constant(field: &Arc<Field>, a: u32) -> Poly {
        Poly::from_coeffs(field, vec![a])
    }

    pub fn t(field: &Arc<Field>) -> Poly {
        Poly::monomial(field, 1, 1)
    }

    pub fn monomial(field: &Arc<Field>, a: u32, n: usize) -> Poly {
        if a == 0 {
            return Poly::zero(field);
        }
        let mut c = vec![0u32; n + 1];
        c[n] = a;
        Poly { field: field.clone(), c }
    }

    /// The bracket [i] = T^{q^i} - T.
    pub fn bracket(field: &Arc<Field>, i: u32) -> Poly {
        let qi = (field.q() as usize).pow(i);
        &Poly::monomial(field, 1, qi) - &Poly::t(field)
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.c
    }

    pub fn into_coeffs(self) -> Vec<u32> {
        self.c
    }

    pub fn coeff(&self, i: usize) -> u32 {
        self.c.get(i).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.c.len() == 1 && self.c[0] == 1
    }

    pub fn is_constant(&self) -> bool {
        self.c.len() <= 1
    }

    /// Degree, with -1 for the zero polynomial.
    pub fn deg(&self) -> i64 {
        self.c.len() as i64 - 1
    }

    pub fn lead(&self) -> u32 {
        self.c.last().copied().unwrap_or(0)
    }

    pub fn is_monic(&self) -> bool {
        self.lead() == 1
    }

    /// Lowest index with a nonzero coefficient.
    pub fn valuation_t(&self) -> Option<usize> {
        self.c.iter().position(|&x| x != 0)
    }

    pub fn scale(&self, a: u32) -> Poly {
        if a == 0 {
            return Poly::zero(&self.field);
        }
        let f = &self.field;
        Poly { field: f.clone(), c: self.c.iter().map(|&x| f.mul(x, a)).collect() }
    }

    pub fn shift(&self, n: usize) -> Poly {
        if self.is_zero() {
            return self.clone();
        }
        let mut c = vec![0u32; n];
        c.extend_from_slice(&self.c);
        Poly { field: self.field.clone(), c }
    }

    pub fn monic(&self) -> Poly {
        match self.field.inv(self.lead()) {
            Some(i) => self.scale(i),
            None => self.clone(),
        }
    }

    pub fn checked_mul(&self, other: &Poly) -> Result<Poly> {
        if !self.is_zero() && !other.is_zero() {
            self.field.check_degree(self.c.len() + other.c.len() - 2)?;
        }
        Ok(self * other)
    }

    pub fn divmod(&self, b: &Poly) -> Result<(Poly, Poly)> {
        if b.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let f = &self.field;
        if self.c.len() < b.c.len() {
            return Ok((Poly::zero(f), self.clone()));
        }
        let inv = f.inv(b.lead()).expect("nonzero lead");
        let db = b.c.len() - 1;
        let mut r = self.c.clone();
        let mut qc = vec![0u32; self.c.len() - db];
        for i in (db..r.len()).rev() {
            let c = r[i];
            if c == 0 {
                continue;
            }
            let t = f.mul(c, inv);
            qc[i - db] = t;
            for k in 0..=db {
                r[i - db + k] = f.sub(r[i - db + k], f.mul(t, b.c[k]));
            }
        }
        r.truncate(db);
        Ok((Poly::from_coeffs(f, qc), Poly::from_coeffs(f, r)))
    }

    pub fn rem(&self, b: &Poly) -> Result<Poly> {
        Ok(self.divmod(b)?.1)
    }

    /// Quotient of an exact division; errors if the remainder is nonzero.
    pub fn exact_div(&self, b: &Poly) -> Result<Poly> {
        let (q, r) = self.divmod(b)?;
        if !r.is_zero() {
            return Err(Error::Invalid(format!("{} does not divide {}", b, self)));
        }
        Ok(q)
    }

    pub fn divides(&self, a: &Poly) -> bool {
        !self.is_zero() && a.rem(self).map(|r| r.is_zero()).unwrap_or(false)
    }

    /// Monic gcd; gcd(0, 0) = 0.
    pub fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b).expect("nonzero divisor");
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn lcm(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero(&self.field);
        }
        let g = self.gcd(other);
        (&self.exact_div(&g).unwrap() * other).monic()
    }

    pub fn pow(&self, mut e: u64) -> Poly {
        let mut base = self.clone();
        let mut acc = Poly::one(&self.field);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn pow_mod(&self, mut e: u64, m: &Poly) -> Result<Poly> {
        let mut base = self.rem(m)?;
        let mut acc = Poly::one(&self.field).rem(m)?;
        while e > 0 {
            if e & 1 == 1 {
                acc = (&acc * &base).rem(m)?;
            }
            e >>= 1;
            if e > 0 {
                base = (&base * &base).rem(m)?;
            }
        }
        Ok(acc)
    }

    /// self^{q^n}: coefficients are fixed by Frobenius, so T^i maps to T^{i q^n}.
    pub fn frobenius(&self, n: u32) -> Poly {
        if n == 0 || self.c.len() <= 1 {
            return self.clone();
        }
        let qn = (self.field.q() as usize).pow(n);
        let mut c = vec![0u32; (self.c.len() - 1) * qn + 1];
        for (i, &x) in self.c.iter().enumerate() {
            c[i * qn] = x;
        }
        Poly { field: self.field.clone(), c }
    }

    pub fn derivative(&self) -> Poly {
        let f = &self.field;
        let c = self.c.iter().enumerate().skip(1).map(|(i, &x)| f.mul(x, f.from_int(i as i64))).collect();
        Poly::from_coeffs(f, c)
    }

    pub fn eval_fq(&self, x: u32) -> u32 {
        let f = &self.field;
        self.c.iter().rev().fold(0u32, |acc, &c| f.add(f.mul(acc, x), c))
    }

    /// Monic irreducible test (Ben-Or): gcd(T^{q^i} - T, f) = 1 for i <= deg/2.
    pub fn is_irreducible(&self) -> bool {
        let d = self.deg();
        if d < 1 {
            return false;
        }
        if d == 1 {
            return true;
        }
        let q = self.field.q() as u64;
        let t = Poly::t(&self.field);
        let mut x = t.clone();
        for _ in 1..=(d / 2) {
            x = x.pow_mod(q, self).expect("nonzero modulus");
            let g = (&x - &t).gcd(self);
            if !g.is_one() {
                return false;
            }
        }
        true
    }

    /// All monic polynomials of degree d, in increasing order.
    pub fn monics_of_degree(field: &Arc<Field>, d: usize) -> impl Iterator<Item = Poly> + '_ {
        let q = field.q() as u64;
        let count = q.pow(d as u32);
        (0..count).map(move |mut code| {
            let mut c = Vec::with_capacity(d + 1);
            for _ in 0..d {
                c.push((code % q) as u32);
                code /= q;
            }
            c.push(1);
            Poly { field: field.clone(), c }
        })
    }

    /// Exponent of the monic irreducible `p` in self (self nonzero).
    pub fn multiplicity(&self, p: &Poly) -> u32 {
        let mut n = 0;
        let mut a = self.clone();
        while !a.is_zero() {
            let (q, r) = a.divmod(p).expect("nonzero prime");
            if !r.is_zero() {
                break;
            }
            a = q;
            n += 1;
        }
        n
    }

    pub fn to_text(&self) -> String {
        format!("{}", self)
    }
}

pub(crate) fn fq_text(field: &Field, a: u32) -> String {
    if field.is_prime_field() {
        return a.to_string();
    }
    let d = field.digits(a);
    let mut parts = Vec::new();
    for (i, &x) in d.iter().enumerate().rev() {
        if x == 0 {
            continue;
        }
        let mono = match i {
            0 => String::new(),
            1 => "w".to_string(),
            _ => format!("w^{i}"),
        };
        parts.push(match (x, i) {
            (_, 0) => x.to_string(),
            (1, _) => mono,
            _ => format!("{x}*{mono}"),
        });
    }
    if parts.is_empty() {
        "0".into()
    } else {
        parts.join("+")
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, &x) in self.c.iter().enumerate().rev() {
            if x == 0 {
                continue;
            }
            if !first {
                write!(f, "+")?;
            }
            first = false;
            let coeff = fq_text(&self.field, x);
            let compound = coeff.contains('+');
            let mono = match i {
                0 => String::new(),
                1 => "T".to_string(),
                _ => format!("T^{i}"),
            };
            if i == 0 {
                write!(f, "{coeff}")?;
            } else if x == 1 {
                write!(f, "{mono}")?;
            } else if compound {
                write!(f, "({coeff})*{mono}")?;
            } else {
                write!(f, "{coeff}*{mono}")?;
            }
        }
        Ok(())
    }
}

impl<'a> Add<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn add(self, o: &'a Poly) -> Poly {
        let f = &self.field;
        let (long, short) = if self.c.len() >= o.c.len() { (self, o) } else { (o, self) };
        let mut c = long.c.clone();
        for (i, &x) in short.c.iter().enumerate() {
            c[i] = f.add(c[i], x);
        }
        Poly::from_coeffs(f, c)
    }
}

impl<'a> Sub<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn sub(self, o: &'a Poly) -> Poly {
        let f = &self.field;
        let n = self.c.len().max(o.c.len());
        let mut c = self.c.clone();
        c.resize(n, 0);
        for (i, &x) in o.c.iter().enumerate() {
            c[i] = f.sub(c[i], x);
        }
        Poly::from_coeffs(f, c)
    }
}

impl<'a> Mul<&'a Poly> for &'a Poly {
    type Output = Poly;
    fn mul(self, o: &'a Poly) -> Poly {
        let c = mul_generic(&self.field, &self.c, &o.c);
        Poly::from_coeffs(&self.field, c)
    }
}

impl Neg for &Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        let f = &self.field;
        Poly { field: f.clone(), c: self.c.iter().map(|&x| f.neg(x)).collect() }
    }
}

impl Add for Poly {
    type Output = Poly;
    fn add(self, o: Poly) -> Poly {
        &self + &o
    }
}
impl Sub for Poly {
    type Output = Poly;
    fn sub(self, o: Poly) -> Poly {
        &self - &o
    }
}
impl Mul for Poly {
    type Output = Poly;
    fn mul(self, o: Poly) -> Poly {
        &self * &o
    }
}
impl Neg for Poly {
    type Output = Poly;
    fn neg(self) -> Poly {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::field::FieldSpec;

    fn f3() -> Arc<Field> {
        Field::prime(3).unwrap()
    }

    #[test]
    fn char3_bracket() {
        let f = f3();
        assert_eq!(Poly::bracket(&f, 1).to_text(), "T^3+2*T");
    }

    #[test]
    fn l2_degree() {
        let f = f3();
        let l2 = &Poly::bracket(&f, 1) * &Poly::bracket(&f, 2);
        assert_eq!(l2.deg(), 12);
        // product of all monics of degree 2 times ... lcm property: divisible by every monic of degree <= 2
        for d in 1..=2 {
            for m in Poly::monics_of_degree(&f, d) {
                assert!(m.divides(&l2));
            }
        }
    }

    #[test]
    fn gcd_with_zero_is_monic() {
        let f = f3();
        let a = Poly::from_ints(&f, &[1, 0, 2]);
        assert_eq!(a.gcd(&Poly::zero(&f)), a.monic());
        assert!(a.gcd(&Poly::zero(&f)).is_monic());
    }

    #[test]
    fn irreducibles() {
        let f = f3();
        assert!(Poly::from_ints(&f, &[1, 0, 1]).is_irreducible()); // T^2+1
        assert!(!Poly::from_ints(&f, &[2, 0, 1]).is_irreducible()); // T^2-1
        let count = Poly::monics_of_degree(&f, 3).filter(|p| p.is_irreducible()).count();
        assert_eq!(count, 8); // (27-3)/3
    }

    #[test]
    fn frobenius_is_qth_power() {
        let f = f3();
        let a = Poly::from_ints(&f, &[2, 1, 1]);
        assert_eq!(a.frobenius(1), a.pow(3));
        assert_eq!(a.frobenius(2), a.pow(9));
    }

    #[test]
    fn text_forms() {
        let f = f3();
        assert_eq!(Poly::from_ints(&f, &[1, 2, 0, 1]).to_text(), "T^3+2*T+1");
        assert_eq!(Poly::zero(&f).to_text(), "0");
        let f9 = Field::new(FieldSpec::new(3, 2)).unwrap();
        let w = f9.generator_w();
        let p = Poly::from_coeffs(&f9, vec![1, f9.add(w, 1), w]);
        assert_eq!(p.to_text(), "w*T^2+(w+1)*T+1");
    }
}
