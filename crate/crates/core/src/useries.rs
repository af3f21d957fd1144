//! Truncated u-series Σ a_i u^i over K, graded by weight and type.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::algebra::{parse_poly, parse_scalar, Acc, Field, FieldSpec, Poly, Scalar};
use crate::carlitz;
use crate::error::{Error, Result};

pub const CACHE_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct USeries {
    field: Arc<Field>,
    weight: i64,
    ty: u32,
    order: usize,
    prec: usize,
    level: Poly,
    coeffs: BTreeMap<usize, Scalar>,
}

/// Result of comparing two truncated series on their common valid range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Comparison {
    pub equal: bool,
    pub range: usize,
    pub first_difference: Option<usize>,
}

fn canonical_type(field: &Field, ty: i64) -> u32 {
    ty.rem_euclid(field.q() as i64 - 1) as u32
}

impl USeries {
    pub fn new(field: &Arc<Field>, weight: i64, ty: i64, prec: usize, coeffs: BTreeMap<usize, Scalar>) -> Result<USeries> {
        let m = field.q() as usize - 1;
        let ty = canonical_type(field, ty);
        let mut kept = BTreeMap::new();
        for (i, c) in coeffs {
            if i >= prec || c.is_zero() {
                continue;
            }
            if i % m != ty as usize {
                return Err(Error::Invalid(format!("index {i} violates type {ty} grading")));
            }
            kept.insert(i, c);
        }
        Ok(Self::raw(field, weight, ty, prec, Poly::one(field), kept))
    }

    fn raw(field: &Arc<Field>, weight: i64, ty: u32, prec: usize, level: Poly, coeffs: BTreeMap<usize, Scalar>) -> USeries {
        let order = coeffs.keys().next().copied().unwrap_or(prec);
        USeries { field: field.clone(), weight, ty, order, prec, level, coeffs }
    }

    pub fn from_polys<I: IntoIterator<Item = (usize, Poly)>>(field: &Arc<Field>, weight: i64, ty: i64, prec: usize, items: I) -> Result<USeries> {
        let map = items.into_iter().map(|(i, p)| (i, Scalar::from_poly(p))).collect();
        USeries::new(field, weight, ty, prec, map)
    }

    pub fn zero(field: &Arc<Field>, weight: i64, ty: i64, prec: usize) -> USeries {
        Self::raw(field, weight, canonical_type(field, ty), prec, Poly::one(field), BTreeMap::new())
    }

    pub fn constant(c: Scalar, prec: usize) -> USeries {
        let f = c.field().clone();
        let mut m = BTreeMap::new();
        if !c.is_zero() && prec > 0 {
            m.insert(0, c);
        }
        Self::raw(&f, 0, 0, prec, Poly::one(&f), m)
    }

    pub fn one(field: &Arc<Field>, prec: usize) -> USeries {
        Self::constant(Scalar::one(field), prec)
    }

    /// The parameter u itself (weight 0, type 1).
    pub fn u(field: &Arc<Field>, prec: usize) -> USeries {
        Self::monomial(Scalar::one(field), 1, 0, prec)
    }

    /// c·u^n tagged with weight k (type is forced to n mod q-1).
    pub fn monomial(c: Scalar, n: usize, weight: i64, prec: usize) -> USeries {
        let f = c.field().clone();
        let mut m = BTreeMap::new();
        if !c.is_zero() && n < prec {
            m.insert(n, c);
        }
        Self::raw(&f, weight, canonical_type(&f, n as i64), prec, Poly::one(&f), m)
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }
    pub fn weight(&self) -> i64 {
        self.weight
    }
    pub fn ty(&self) -> u32 {
        self.ty
    }
    pub fn order(&self) -> usize {
        self.order
    }
    pub fn prec(&self) -> usize {
        self.prec
    }
    pub fn level(&self) -> &Poly {
        &self.level
    }
    pub fn coeffs(&self) -> &BTreeMap<usize, Scalar> {
        &self.coeffs
    }

    /// Whether k ≡ 2l (mod q-1), the necessary condition for a nonzero form.
    pub fn is_form_grading(&self) -> bool {
        let m = self.field.q() as i64 - 1;
        (self.weight - 2 * self.ty as i64).rem_euclid(m) == 0
    }

    pub fn with_level(mut self, level: Poly) -> USeries {
        self.level = level.monic();
        self
    }

    pub fn with_weight(mut self, weight: i64) -> USeries {
        self.weight = weight;
        self
    }

    /// Coefficient a(i); errors beyond the valid range.
    pub fn coeff(&self, i: usize) -> Result<Scalar> {
        if i >= self.prec {
            return Err(Error::InsufficientPrecision { needed: i + 1, available: self.prec });
        }
        Ok(self.coeffs.get(&i).cloned().unwrap_or_else(|| Scalar::zero(&self.field)))
    }

    pub fn get(&self, i: usize) -> Option<&Scalar> {
        self.coeffs.get(&i)
    }

    pub fn is_zero_to_prec(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn truncate(&self, prec: usize) -> USeries {
        if prec >= self.prec {
            return self.clone();
        }
        let m = self.coeffs.range(..prec).map(|(&i, c)| (i, c.clone())).collect();
        Self::raw(&self.field, self.weight, self.ty, prec, self.level.clone(), m)
    }

    fn check_grading(&self, o: &USeries) -> Result<()> {
        if self.weight != o.weight || self.ty != o.ty {
            return Err(Error::GradingMismatch(self.weight, self.ty, o.weight, o.ty));
        }
        Ok(())
    }

    pub fn add(&self, o: &USeries) -> Result<USeries> {
        self.check_grading(o)?;
        let prec = self.prec.min(o.prec);
        let mut m: BTreeMap<usize, Scalar> = self.coeffs.range(..prec).map(|(&i, c)| (i, c.clone())).collect();
        for (&i, c) in o.coeffs.range(..prec) {
            let v = match m.remove(&i) {
                Some(x) => &x + c,
                None => c.clone(),
            };
            if !v.is_zero() {
                m.insert(i, v);
            }
        }
        Ok(Self::raw(&self.field, self.weight, self.ty, prec, self.level.lcm(&o.level), m))
    }

    pub fn sub(&self, o: &USeries) -> Result<USeries> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> USeries {
        let m = self.coeffs.iter().map(|(&i, c)| (i, -c)).collect();
        Self::raw(&self.field, self.weight, self.ty, self.prec, self.level.clone(), m)
    }

    pub fn scale(&self, s: &Scalar) -> USeries {
        let m = if s.is_zero() {
            BTreeMap::new()
        } else {
            self.coeffs.iter().map(|(&i, c)| (i, c * s)).collect()
        };
        Self::raw(&self.field, self.weight, self.ty, self.prec, self.level.clone(), m)
    }

    pub fn scale_poly(&self, p: &Poly) -> USeries {
        self.scale(&Scalar::from_poly(p.clone()))
    }

    /// f = (1/D)·Σ n_i u^i with D monic and n_i ∈ A.
    pub fn split_denominator(&self) -> (Poly, Vec<(usize, Poly)>) {
        let mut d = Poly::one(&self.field);
        for c in self.coeffs.values() {
            if !c.den().is_one() {
                d = d.lcm(c.den());
            }
        }
        let items = self
            .coeffs
            .iter()
            .map(|(&i, c)| {
                if d.is_one() {
                    (i, c.num().clone())
                } else {
                    (i, c.num() * &d.exact_div(c.den()).expect("lcm"))
                }
            })
            .collect();
        (d, items)
    }

    pub(crate) fn assemble(&self, weight: i64, ty: u32, prec: usize, den: &Poly, accs: Vec<Option<Acc>>) -> Result<USeries> {
        let mut m = BTreeMap::new();
        for (i, a) in accs.into_iter().enumerate() {
            if let Some(a) = a {
                let p = a.finish();
                if p.is_zero() {
                    continue;
                }
                self.field.check_degree(p.deg() as usize)?;
                let s = if den.is_one() { Scalar::from_poly(p) } else { Scalar::new(p, den.clone())? };
                m.insert(i, s);
            }
        }
        Ok(Self::raw(&self.field, weight, ty, prec, Poly::one(&self.field), m))
    }

    pub fn mul(&self, o: &USeries) -> Result<USeries> {
        self.mul_capped(o, usize::MAX)
    }

    /// Product truncated at min(propagated precision, cap).
    pub fn mul_capped(&self, o: &USeries, cap: usize) -> Result<USeries> {
        let prec = (self.prec.saturating_add(o.order)).min(o.prec.saturating_add(self.order)).min(cap);
        let qm1 = self.field.q() - 1;
        let ty = (self.ty + o.ty) % qm1;
        let weight = self.weight + o.weight;
        let (d1, a) = self.split_denominator();
        let (d2, b) = o.split_denominator();
        let mut accs: Vec<Option<Acc>> = (0..prec).map(|_| None).collect();
        for (i, x) in &a {
            if *i >= prec {
                break;
            }
            for (j, y) in &b {
                let n = i + j;
                if n >= prec {
                    break;
                }
                accs[n].get_or_insert_with(|| Acc::new(&self.field)).add_mul(x, y);
            }
        }
        let den = &d1 * &d2;
        let out = self.assemble(weight, ty, prec, &den, accs)?;
        Ok(out.with_level(self.level.lcm(&o.level)))
    }

    pub fn pow(&self, e: u64) -> Result<USeries> {
        self.pow_capped(e, usize::MAX)
    }

    /// f^e via base-q digits: f^e = Π (f^{q^s})^{e_s}, the q^s-powers by Frobenius.
    pub fn pow_capped(&self, e: u64, cap: usize) -> Result<USeries> {
        let q = self.field.q() as u64;
        let mut acc: Option<USeries> = None;
        let mut rest = e;
        let mut s = 0u32;
        while rest > 0 {
            let digit = rest % q;
            rest /= q;
            if digit > 0 {
                let base = self.frobenius_pow_capped(s, cap);
                for _ in 0..digit {
                    acc = Some(match acc {
                        None => base.clone(),
                        Some(a) => a.mul_capped(&base, cap)?,
                    });
                }
            }
            s += 1;
        }
        Ok(match acc {
            Some(a) => a,
            None => {
                let one = USeries::one(&self.field, self.prec.min(cap));
                one.with_level(self.level.clone())
            }
        })
    }

    /// f^{q^n} = Σ a_i^{q^n} u^{i q^n}, valid below prec·q^n.
    pub fn frobenius_pow(&self, n: u32) -> USeries {
        self.frobenius_pow_capped(n, usize::MAX)
    }

    pub fn frobenius_pow_capped(&self, n: u32, cap: usize) -> USeries {
        let qn = (self.field.q() as usize).pow(n);
        let prec = self.prec.saturating_mul(qn).min(cap);
        let m = self
            .coeffs
            .iter()
            .filter(|(&i, _)| i.saturating_mul(qn) < prec)
            .map(|(&i, c)| (i * qn, c.frobenius(n)))
            .collect();
        let qm1 = self.field.q() as i64 - 1;
        let ty = (self.ty as i64 * qn as i64).rem_euclid(qm1) as u32;
        Self::raw(&self.field, self.weight * qn as i64, ty, prec, self.level.clone(), m)
    }

    /// Substitute s for u. Output precision: min(prec_f·ord(s), prec_s + (j_min-1)·ord(s)).
    pub fn compose(&self, s: &USeries) -> Result<USeries> {
        let os = s.order;
        if os == 0 {
            return Err(Error::ZeroOrder);
        }
        let mut prec = self.prec.saturating_mul(os);
        if let Some((&jmin, _)) = self.coeffs.range(1..).next() {
            prec = prec.min(s.prec + (jmin - 1) * os);
        }
        let qm1 = self.field.q() - 1;
        let ty = ((self.ty as u64 * s.ty as u64) % qm1 as u64) as u32;
        let mut m: BTreeMap<usize, Scalar> = BTreeMap::new();
        let add_term = |m: &mut BTreeMap<usize, Scalar>, i: usize, v: Scalar| {
            if v.is_zero() {
                return;
            }
            let nv = match m.remove(&i) {
                Some(x) => &x + &v,
                None => v,
            };
            if !nv.is_zero() {
                m.insert(i, nv);
            }
        };
        if let Some(c) = self.coeffs.get(&0) {
            add_term(&mut m, 0, c.clone());
        }
        let mut power = s.truncate(prec);
        let mut j = 1usize;
        while j * os < prec {
            if let Some(a) = self.coeffs.get(&j) {
                for (&i, c) in power.coeffs.range(..prec) {
                    add_term(&mut m, i, a * c);
                }
            }
            if self.coeffs.range(j + 1..).next().is_none() {
                break;
            }
            power = power.mul_capped(s, prec)?;
            j += 1;
        }
        let mut out = Self::raw(&self.field, self.weight, ty, prec, self.level.clone(), BTreeMap::new());
        out.coeffs = m.into_iter().filter(|(i, _)| *i < prec).collect();
        out.order = out.coeffs.keys().next().copied().unwrap_or(prec);
        Ok(out)
    }

    /// f(az) for a nonzero a ∈ A, using u(az) = u^{q^d}/(c_d + Σ_{i<d} c_i u^{q^d-q^i})
    /// with ρ_a = Σ c_i X^{q^i}. Valid below prec·q^d, capped at `cap`.
    pub fn dilate(&self, a: &Poly, cap: usize) -> Result<USeries> {
        if a.is_zero() {
            return Err(Error::Invalid("dilation by zero".into()));
        }
        let f = &self.field;
        let q = f.q() as usize;
        let d = a.deg() as u32;
        let qd = q.pow(d);
        let prec = self.prec.saturating_mul(qd).min(cap);
        let rho = carlitz::carlitz_coeffs(a);
        let lam_inv = f.inv(rho[d as usize].lead()).expect("nonzero");
        // R(v) = Σ_{i<d} (c_i/λ) v^{e_i}, e_i = (q^d - q^i)/(q-1)
        let rterms: Vec<(usize, Poly)> = (0..d as usize)
            .filter(|&i| !rho[i].is_zero())
            .map(|i| ((qd - q.pow(i as u32)) / (q - 1), rho[i].scale(lam_inv)))
            .collect();
        let (den, items) = self.split_denominator();
        let mut accs: Vec<Option<Acc>> = (0..prec).map(|_| None).collect();
        let vlen = |j: usize| -> usize {
            if j * qd >= prec {
                0
            } else {
                (prec - j * qd).div_ceil(q - 1)
            }
        };
        let mut w: Vec<Poly> = Vec::new();
        let mut wj = 0usize;
        for (j, aj) in &items {
            let (j, aj) = (*j, aj);
            let len = vlen(j);
            if len == 0 {
                break;
            }
            if w.is_empty() {
                w = vec![Poly::zero(f); len];
                w[0] = Poly::one(f);
                wj = 0;
            }
            w.truncate(len);
            while wj < j {
                divide_one_plus_sparse(&mut w, &rterms);
                wj += 1;
            }
            let scale = f.pow(lam_inv, j as u64);
            let aj = aj.scale(scale);
            for (n, c) in w.iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let idx = j * qd + (q - 1) * n;
                if idx >= prec {
                    break;
                }
                accs[idx].get_or_insert_with(|| Acc::new(f)).add_mul(&aj, c);
            }
        }
        let out = self.assemble(self.weight, self.ty, prec, &den, accs)?;
        Ok(out.with_level(self.level.clone()))
    }

    /// 1/f for f with nonzero constant term.
    pub fn invert_unit(&self) -> Result<USeries> {
        let a0 = match self.coeffs.get(&0) {
            Some(c) if self.order == 0 => c.clone(),
            _ => return Err(Error::NotUnit),
        };
        let prec = self.prec;
        let inv0 = a0.inv()?;
        let mut g: BTreeMap<usize, Scalar> = BTreeMap::new();
        g.insert(0, inv0.clone());
        let m = self.field.q() as usize - 1;
        let mut n = m;
        while n < prec {
            let mut s = Scalar::zero(&self.field);
            for (&i, a) in self.coeffs.range(1..=n) {
                if let Some(b) = g.get(&(n - i)) {
                    s = &s + &(a * b);
                }
            }
            let v = -&(&s * &inv0);
            if !v.is_zero() {
                g.insert(n, v);
            }
            n += m;
        }
        Ok(Self::raw(&self.field, -self.weight, 0, prec, self.level.clone(), g))
    }

    /// Equality of grading and of coefficients on the common valid range.
    pub fn compare(&self, o: &USeries) -> Comparison {
        let range = self.prec.min(o.prec);
        if self.weight != o.weight || self.ty != o.ty {
            return Comparison { equal: false, range: 0, first_difference: Some(0) };
        }
        let keys: std::collections::BTreeSet<usize> =
            self.coeffs.range(..range).chain(o.coeffs.range(..range)).map(|(&i, _)| i).collect();
        for i in keys {
            if self.coeffs.get(&i) != o.coeffs.get(&i) {
                return Comparison { equal: false, range, first_difference: Some(i) };
            }
        }
        Comparison { equal: true, range, first_difference: None }
    }

    /// Same coefficients on the common range, ignoring the weight tag.
    pub fn agrees_with(&self, o: &USeries) -> bool {
        let range = self.prec.min(o.prec);
        self.coeffs.range(..range).eq(o.coeffs.range(..range))
    }

    pub fn to_text(&self, max_terms: usize) -> String {
        let mut s = String::new();
        let mut count = 0;
        for (&i, c) in &self.coeffs {
            if count == max_terms {
                s.push_str(" + ...");
                break;
            }
            if count > 0 {
                s.push_str(" + ");
            }
            let mono = match i {
                0 => String::new(),
                1 => "u".to_string(),
                _ => format!("u^{i}"),
            };
            if i == 0 {
                let _ = write!(s, "{c}");
            } else if c.is_one() {
                s.push_str(&mono);
            } else {
                let _ = write!(s, "({c}){mono}");
            }
            count += 1;
        }
        if count == 0 {
            s.push('0');
        }
        let _ = write!(s, " + O(u^{})", self.prec);
        s
    }

    pub fn to_cache_string(&self) -> String {
        let spec = self.field.spec();
        let modulus: Vec<String> = spec.modulus.iter().map(|x| x.to_string()).collect();
        let mut s = String::new();
        let _ = writeln!(s, "format-version: {CACHE_FORMAT_VERSION}");
        let _ = writeln!(s, "q: {}", self.field.q());
        let _ = writeln!(s, "p: {}", spec.p);
        let _ = writeln!(s, "r: {}", spec.r);
        let _ = writeln!(s, "modulus: {}", modulus.join(","));
        let _ = writeln!(s, "weight: {}", self.weight);
        let _ = writeln!(s, "type: {}", self.ty);
        let _ = writeln!(s, "order: {}", self.order);
        let _ = writeln!(s, "prec: {}", self.prec);
        let _ = writeln!(s, "level: {}", self.level);
        s.push_str("---\n");
        for (i, c) in &self.coeffs {
            let _ = writeln!(s, "{i}\t{c}");
        }
        s
    }

    pub fn from_cache_string(text: &str) -> Result<USeries> {
        let mut header: BTreeMap<&str, &str> = BTreeMap::new();
        let mut lines = text.lines();
        for line in lines.by_ref() {
            if line == "---" {
                break;
            }
            let (k, v) = line.split_once(": ").ok_or_else(|| Error::Parse(format!("bad header line {line:?}")))?;
            header.insert(k, v);
        }
        let get = |k: &str| header.get(k).copied().ok_or_else(|| Error::Parse(format!("missing header {k}")));
        let num = |k: &str| -> Result<i64> { get(k)?.parse::<i64>().map_err(|e| Error::Parse(format!("{k}: {e}"))) };
        if num("format-version")? != CACHE_FORMAT_VERSION as i64 {
            return Err(Error::Parse("unsupported cache format version".into()));
        }
        let p = num("p")? as u32;
        let r = num("r")? as u32;
        let modulus: Vec<u32> = get("modulus")?
            .split(',')
            .map(|x| x.parse::<u32>().map_err(|e| Error::Parse(e.to_string())))
            .collect::<Result<_>>()?;
        let field = Field::new(FieldSpec::with_modulus(p, r, modulus))?;
        if num("q")? != field.q() as i64 {
            return Err(Error::Parse("q does not match p^r".into()));
        }
        let mut m = BTreeMap::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let (i, c) = line.split_once('\t').ok_or_else(|| Error::Parse(format!("bad entry {line:?}")))?;
            let i = i.parse::<usize>().map_err(|e| Error::Parse(e.to_string()))?;
            m.insert(i, parse_scalar(&field, c)?);
        }
        let prec = num("prec")? as usize;
        let level = parse_poly(&field, get("level")?)?;
        let out = USeries::new(&field, num("weight")?, num("type")?, prec, m)?.with_level(level);
        if out.order != num("order")? as usize {
            return Err(Error::Parse("order does not match coefficients".into()));
        }
        Ok(out)
    }
}

/// In place: w <- w / (1 + Σ c_e v^e) as a dense v-series.
pub(crate) fn divide_one_plus_sparse(w: &mut [Poly], terms: &[(usize, Poly)]) {
    for n in 0..w.len() {
        let mut sub: Option<Acc> = None;
        for (e, c) in terms {
            if *e > n {
                continue;
            }
            let prev = &w[n - e];
            if prev.is_zero() {
                continue;
            }
            sub.get_or_insert_with(|| Acc::new(c.field())).add_mul(c, prev);
        }
        if let Some(s) = sub {
            w[n] = &w[n] - &s.finish();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f3() -> Arc<Field> {
        Field::prime(3).unwrap()
    }

    fn series(f: &Arc<Field>, w: i64, ty: i64, prec: usize, items: &[(usize, &str)]) -> USeries {
        let m = items.iter().map(|(i, s)| (*i, parse_scalar(f, s).unwrap())).collect();
        USeries::new(f, w, ty, prec, m).unwrap()
    }

    #[test]
    fn grading_is_enforced() {
        let f = f3();
        let m = [(2usize, Scalar::one(&f))].into_iter().collect();
        assert!(USeries::new(&f, 4, 1, 10, m).is_err());
    }

    #[test]
    fn geometric_inverse() {
        let f = f3();
        let g = series(&f, 0, 0, 9, &[(0, "1"), (2, "T")]);
        let inv = g.invert_unit().unwrap();
        let expect = series(&f, 0, 0, 9, &[(0, "1"), (2, "2*T"), (4, "T^2"), (6, "2*T^3"), (8, "T^4")]);
        assert!(inv.agrees_with(&expect));
        let prod = g.mul(&inv).unwrap();
        assert!(prod.agrees_with(&USeries::one(&f, 9)));
    }

    #[test]
    fn compose_monomials() {
        let f = f3();
        let u2 = USeries::monomial(Scalar::one(&f), 2, 0, 10);
        let s = USeries::monomial(Scalar::one(&f), 3, 0, 100);
        let c = u2.compose(&s).unwrap();
        assert_eq!(c.coeffs().len(), 1);
        assert!(c.get(6).unwrap().is_one());
        let id = u2.compose(&USeries::u(&f, 50)).unwrap();
        assert!(id.agrees_with(&u2));
    }

    #[test]
    fn product_precision_rule() {
        let f = f3();
        let a = series(&f, 0, 1, 7, &[(1, "1"), (3, "T")]);
        let b = series(&f, 0, 1, 11, &[(3, "1")]);
        let c = a.mul(&b).unwrap();
        assert_eq!(c.prec(), (7 + 3));
        assert_eq!(c.order(), 4);
    }

    #[test]
    fn cache_round_trip() {
        let f = f3();
        let a = series(&f, 4, 1, 20, &[(1, "2"), (3, "(T+1)/T^3"), (9, "T^9+2*T")]).with_level(Poly::t(&f));
        let text = a.to_cache_string();
        let b = USeries::from_cache_string(&text).unwrap();
        assert_eq!(b.to_cache_string(), text);
        assert!(a.compare(&b).equal);
        assert_eq!(b.level(), a.level());
    }
}
