//! Dense polynomials in an auxiliary variable X over K = F_q(T).
//! Used for Goss polynomials and characteristic/minimal polynomials.

use std::fmt;
use std::sync::Arc;

use super::field::Field;
use super::scalar::Scalar;
use crate::error::{Error, Result};

#[derive(Clone)]
pub struct XPoly {
    field: Arc<Field>,
    c: Vec<Scalar>,
}

impl PartialEq for XPoly {
    fn eq(&self, o: &Self) -> bool {
        self.c == o.c
    }
}
impl Eq for XPoly {}

impl fmt::Debug for XPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl XPoly {
    pub fn from_coeffs(field: &Arc<Field>, mut c: Vec<Scalar>) -> XPoly {
        while c.last().map(|s| s.is_zero()).unwrap_or(false) {
            c.pop();
        }
        XPoly { field: field.clone(), c }
    }

    pub fn zero(field: &Arc<Field>) -> XPoly {
        XPoly { field: field.clone(), c: Vec::new() }
    }

    pub fn one(field: &Arc<Field>) -> XPoly {
        XPoly::from_coeffs(field, vec![Scalar::one(field)])
    }

    pub fn x(field: &Arc<Field>) -> XPoly {
        XPoly::monomial(Scalar::one(field), 1)
    }

    pub fn monomial(a: Scalar, n: usize) -> XPoly {
        let f = a.field().clone();
        let mut c = vec![Scalar::zero(&f); n + 1];
        c[n] = a;
        XPoly::from_coeffs(&f, c)
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn coeffs(&self) -> &[Scalar] {
        &self.c
    }

    pub fn coeff(&self, i: usize) -> Scalar {
        self.c.get(i).cloned().unwrap_or_else(|| Scalar::zero(&self.field))
    }

    pub fn deg(&self) -> i64 {
        self.c.len() as i64 - 1
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn lead(&self) -> Scalar {
        self.c.last().cloned().unwrap_or_else(|| Scalar::zero(&self.field))
    }

    pub fn add(&self, o: &XPoly) -> XPoly {
        let n = self.c.len().max(o.c.len());
        let c = (0..n).map(|i| &self.coeff(i) + &o.coeff(i)).collect();
        XPoly::from_coeffs(&self.field, c)
    }

    pub fn sub(&self, o: &XPoly) -> XPoly {
        let n = self.c.len().max(o.c.len());
        let c = (0..n).map(|i| &self.coeff(i) - &o.coeff(i)).collect();
        XPoly::from_coeffs(&self.field, c)
    }

    pub fn scale(&self, s: &Scalar) -> XPoly {
        XPoly::from_coeffs(&self.field, self.c.iter().map(|x| x * s).collect())
    }

    pub fn mul(&self, o: &XPoly) -> XPoly {
        if self.is_zero() || o.is_zero() {
            return XPoly::zero(&self.field);
        }
        let mut c = vec![Scalar::zero(&self.field); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                c[i + j] = &c[i + j] + &(a * b);
            }
        }
        XPoly::from_coeffs(&self.field, c)
    }

    pub fn eval(&self, x: &Scalar) -> Scalar {
        self.c.iter().rev().fold(Scalar::zero(&self.field), |acc, c| &(&acc * x) + c)
    }

    pub fn derivative(&self) -> XPoly {
        let f = &self.field;
        let c = self.c.iter().enumerate().skip(1).map(|(i, a)| a.scale_fq(f.from_int(i as i64))).collect();
        XPoly::from_coeffs(f, c)
    }

    pub fn monic(&self) -> XPoly {
        if self.is_zero() {
            return self.clone();
        }
        let inv = self.lead().inv().expect("nonzero lead");
        self.scale(&inv)
    }

    pub fn divmod(&self, b: &XPoly) -> Result<(XPoly, XPoly)> {
        if b.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let f = &self.field;
        if self.c.len() < b.c.len() {
            return Ok((XPoly::zero(f), self.clone()));
        }
        let inv = b.lead().inv()?;
        let db = b.c.len() - 1;
        let mut r = self.c.clone();
        let mut q = vec![Scalar::zero(f); self.c.len() - db];
        for i in (db..r.len()).rev() {
            if r[i].is_zero() {
                continue;
            }
            let t = &r[i] * &inv;
            for k in 0..=db {
                r[i - db + k] = &r[i - db + k] - &(&t * &b.c[k]);
            }
            q[i - db] = t;
        }
        r.truncate(db);
        Ok((XPoly::from_coeffs(f, q), XPoly::from_coeffs(f, r)))
    }

    /// Monic gcd.
    pub fn gcd(&self, o: &XPoly) -> XPoly {
        let mut a = self.clone();
        let mut b = o.clone();
        while !b.is_zero() {
            let r = a.divmod(&b).expect("nonzero").1;
            a = b;
            b = r;
        }
        a.monic()
    }

    pub fn lcm(&self, o: &XPoly) -> XPoly {
        if self.is_zero() || o.is_zero() {
            return XPoly::zero(&self.field);
        }
        let g = self.gcd(o);
        self.divmod(&g).expect("nonzero").0.mul(o).monic()
    }

    /// Coefficient strings, constant term first.
    pub fn coeff_texts(&self) -> Vec<String> {
        self.c.iter().map(|s| s.to_text()).collect()
    }

    /// Human-readable form in X, highest degree first, e.g. "X^4 + (1/T)X^2".
    pub fn to_text(&self) -> String {
        self.to_text_var("X")
    }

    pub fn to_text_var(&self, var: &str) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (i, a) in self.c.iter().enumerate().rev() {
            if a.is_zero() {
                continue;
            }
            let mono = match i {
                0 => String::new(),
                1 => var.to_string(),
                _ => format!("{var}^{i}"),
            };
            let part = if i == 0 {
                a.to_text()
            } else if a.is_one() {
                mono
            } else {
                format!("({}){}", a.to_text(), mono)
            };
            parts.push(part);
        }
        parts.join(" + ")
    }
}

impl fmt::Display for XPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}
