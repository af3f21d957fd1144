//! Elements of K = F_q(T) as reduced fractions with monic denominator.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use super::field::Field;
use super::poly::Poly;
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scalar {
    num: Poly,
    den: Poly,
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl Scalar {
    pub fn zero(field: &Arc<Field>) -> Scalar {
        Scalar { num: Poly::zero(field), den: Poly::one(field) }
    }

    pub fn one(field: &Arc<Field>) -> Scalar {
        Scalar::from_poly(Poly::one(field))
    }

    pub fn t(field: &Arc<Field>) -> Scalar {
        Scalar::from_poly(Poly::t(field))
    }

    pub fn from_int(field: &Arc<Field>, n: i64) -> Scalar {
        Scalar::from_poly(Poly::constant(field, field.from_int(n)))
    }

    pub fn from_fq(field: &Arc<Field>, a: u32) -> Scalar {
        Scalar::from_poly(Poly::constant(field, a))
    }

    pub fn from_poly(num: Poly) -> Scalar {
        let den = Poly::one(num.field());
        Scalar { num, den }
    }

    /// num/den, reduced; errors when den = 0.
    pub fn new(num: Poly, den: Poly) -> Result<Scalar> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if den.is_one() {
            return Ok(Scalar::from_poly(num));
        }
        let g = num.gcd(&den);
        let (mut n, mut d) = if g.is_one() {
            (num, den)
        } else {
            (num.exact_div(&g)?, den.exact_div(&g)?)
        };
        let lc = d.lead();
        if lc != 1 {
            let inv = n.field().inv(lc).expect("nonzero");
            n = n.scale(inv);
            d = d.scale(inv);
        }
        Ok(Scalar { num: n, den: d })
    }

    pub fn field(&self) -> &Arc<Field> {
        self.num.field()
    }

    pub fn num(&self) -> &Poly {
        &self.num
    }

    pub fn den(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn is_integral(&self) -> bool {
        self.den.is_one()
    }

    pub fn as_poly(&self) -> Option<&Poly> {
        if self.den.is_one() {
            Some(&self.num)
        } else {
            None
        }
    }

    pub fn inv(&self) -> Result<Scalar> {
        if self.num.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let f = self.num.field();
        let inv = f.inv(self.num.lead()).expect("nonzero");
        Ok(Scalar { num: self.den.scale(inv), den: self.num.scale(inv) })
    }

    pub fn div(&self, other: &Scalar) -> Result<Scalar> {
        Ok(self * &other.inv()?)
    }

    pub fn scale_fq(&self, a: u32) -> Scalar {
        if a == 0 {
            return Scalar::zero(self.field());
        }
        Scalar { num: self.num.scale(a), den: self.den.clone() }
    }

    pub fn mul_poly(&self, p: &Poly) -> Scalar {
        if self.den.is_one() {
            return Scalar::from_poly(&self.num * p);
        }
        self * &Scalar::from_poly(p.clone())
    }

    pub fn pow(&self, e: i64) -> Result<Scalar> {
        if e < 0 {
            return self.inv()?.pow(-e);
        }
        Ok(Scalar { num: self.num.pow(e as u64), den: self.den.pow(e as u64) })
    }

    /// x^{q^n}
    pub fn frobenius(&self, n: u32) -> Scalar {
        Scalar { num: self.num.frobenius(n), den: self.den.frobenius(n) }
    }

    /// Degree of num minus degree of den (the negative of the valuation at infinity).
    pub fn degree(&self) -> Option<i64> {
        if self.is_zero() {
            None
        } else {
            Some(self.num.deg() - self.den.deg())
        }
    }

    pub fn to_text(&self) -> String {
        format!("{}", self)
    }
}

fn wrap(s: String) -> String {
    if s.contains('+') {
        format!("({s})")
    } else {
        s
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", wrap(self.num.to_text()), wrap(self.den.to_text()))
        }
    }
}

impl<'a> Add<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn add(self, o: &'a Scalar) -> Scalar {
        if self.den.is_one() && o.den.is_one() {
            return Scalar::from_poly(&self.num + &o.num);
        }
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        if self.den == o.den {
            return Scalar::new(&self.num + &o.num, self.den.clone()).expect("nonzero den");
        }
        // Henrici: with g = gcd(b, d), a/b + c/d = (a d' + c b') / (b' d) up to gcd with g
        let g = self.den.gcd(&o.den);
        if g.is_one() {
            let n = &(&self.num * &o.den) + &(&o.num * &self.den);
            let d = &self.den * &o.den;
            return Scalar { num: n, den: d };
        }
        let b1 = self.den.exact_div(&g).unwrap();
        let d1 = o.den.exact_div(&g).unwrap();
        let n = &(&self.num * &d1) + &(&o.num * &b1);
        let den = &b1 * &o.den;
        let h = n.gcd(&g);
        if h.is_one() || n.is_zero() {
            if n.is_zero() {
                return Scalar::zero(self.field());
            }
            Scalar { num: n, den }
        } else {
            Scalar { num: n.exact_div(&h).unwrap(), den: den.exact_div(&h).unwrap() }
        }
    }
}

impl<'a> Sub<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn sub(self, o: &'a Scalar) -> Scalar {
        self + &(-o)
    }
}

impl<'a> Mul<&'a Scalar> for &'a Scalar {
    type Output = Scalar;
    fn mul(self, o: &'a Scalar) -> Scalar {
        if self.den.is_one() && o.den.is_one() {
            return Scalar::from_poly(&self.num * &o.num);
        }
        if self.is_zero() || o.is_zero() {
            return Scalar::zero(self.field());
        }
        let g1 = self.num.gcd(&o.den);
        let g2 = o.num.gcd(&self.den);
        let (a, d) = if g1.is_one() {
            (self.num.clone(), o.den.clone())
        } else {
            (self.num.exact_div(&g1).unwrap(), o.den.exact_div(&g1).unwrap())
        };
        let (c, b) = if g2.is_one() {
            (o.num.clone(), self.den.clone())
        } else {
            (o.num.exact_div(&g2).unwrap(), self.den.exact_div(&g2).unwrap())
        };
        // b and d are monic up to the monic gcd factors, so their product is monic
        Scalar { num: &a * &c, den: &b * &d }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar { num: -&self.num, den: self.den.clone() }
    }
}

impl Add for Scalar {
    type Output = Scalar;
    fn add(self, o: Scalar) -> Scalar {
        &self + &o
    }
}
impl Sub for Scalar {
    type Output = Scalar;
    fn sub(self, o: Scalar) -> Scalar {
        &self - &o
    }
}
impl Mul for Scalar {
    type Output = Scalar;
    fn mul(self, o: Scalar) -> Scalar {
        &self * &o
    }
}
impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        -&self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frobenius_of_inverse() {
        let f = Field::prime(3).unwrap();
        let x = Scalar::new(Poly::one(&f), Poly::from_ints(&f, &[1, 1])).unwrap();
        assert_eq!(x.frobenius(1).to_text(), "1/(T^3+1)");
        assert_eq!(Scalar::t(&f).frobenius(1).to_text(), "T^3");
        let c = Scalar::from_int(&f, 2);
        assert_eq!(c.frobenius(3), c);
    }

    #[test]
    fn reduced_with_monic_den() {
        let f = Field::prime(5).unwrap();
        let n = Poly::from_ints(&f, &[2, 2]); // 2T+2
        let d = Poly::from_ints(&f, &[3, 3, 0]); // 3T+3
        let s = Scalar::new(n, d).unwrap();
        assert!(s.is_integral());
        assert_eq!(s.to_text(), "4"); // 2/3 = 4 mod 5
        let s = Scalar::new(Poly::from_ints(&f, &[1]), Poly::from_ints(&f, &[0, 2])).unwrap();
        assert_eq!(s.to_text(), "3/T");
    }

    #[test]
    fn henrici_sum() {
        let f = Field::prime(3).unwrap();
        let t = Poly::t(&f);
        let tp1 = Poly::from_ints(&f, &[1, 1]);
        let a = Scalar::new(Poly::one(&f), &t * &tp1).unwrap();
        let b = Scalar::new(Poly::from_ints(&f, &[2]), t.clone()).unwrap();
        // 1/(T(T+1)) - 1/T = (1 - (T+1))/(T(T+1)) = -T/(T(T+1)) = -1/(T+1)
        let s = &a + &b;
        assert_eq!(s, Scalar::new(Poly::from_ints(&f, &[2]), tp1).unwrap());
    }
}
