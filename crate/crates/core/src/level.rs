//! Exact combinations of products of dilated generators, with symbolic
//! Atkin-Lehner, U_p and trace operators and old/new membership verdicts.
//!
//! An atom is a product of letters D_d B = B(dz). B runs over g1, Δ, h and E_Q;
//! δ_P φ = P^l·D_P φ.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::algebra::{Field, Poly, Scalar};
use crate::error::{Error, Result};
use crate::forms;
use crate::hecke::{self, PrimeP};
use crate::spectral::{self, SpanSolver};
use crate::useries::USeries;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Base {
    G1,
    Delta,
    H,
    Eis(Poly),
}

impl Base {
    fn weight(&self, q: i64) -> i64 {
        match self {
            Base::G1 => q - 1,
            Base::Delta => q * q - 1,
            Base::H => q + 1,
            Base::Eis(_) => 2,
        }
    }

    fn ty(&self) -> i64 {
        match self {
            Base::G1 | Base::Delta => 0,
            Base::H | Base::Eis(_) => 1,
        }
    }

    fn level(&self, field: &Arc<Field>) -> Poly {
        match self {
            Base::Eis(p) => p.clone(),
            _ => Poly::one(field),
        }
    }

    fn build(&self, field: &Arc<Field>, prec: usize) -> Result<USeries> {
        match self {
            Base::G1 => forms::build_g1(field, prec),
            Base::Delta => forms::build_delta(field, prec),
            Base::H => forms::build_h(field, prec),
            Base::Eis(p) => forms::build_e_p(p, prec),
        }
    }
}

impl fmt::Display for Base {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Base::G1 => write!(f, "g1"),
            Base::Delta => write!(f, "Delta"),
            Base::H => write!(f, "h"),
            Base::Eis(p) => write!(f, "E_{{{p}}}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Letter {
    pub dil: Poly,
    pub base: Base,
}

/// A product of letters with positive exponents.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom(pub BTreeMap<Letter, u64>);

impl Atom {
    pub fn letter(dil: Poly, base: Base) -> Atom {
        Atom(BTreeMap::from([(Letter { dil, base }, 1)]))
    }

    pub fn level_one(field: &Arc<Field>, bases: &[(Base, u64)]) -> Atom {
        let mut m = BTreeMap::new();
        for (b, e) in bases {
            if *e > 0 {
                *m.entry(Letter { dil: Poly::one(field), base: b.clone() }).or_insert(0) += e;
            }
        }
        Atom(m)
    }

    pub fn mul(&self, o: &Atom) -> Atom {
        let mut m = self.0.clone();
        for (l, e) in &o.0 {
            *m.entry(l.clone()).or_insert(0) += e;
        }
        Atom(m)
    }

    pub fn weight(&self, q: i64) -> i64 {
        self.0.iter().map(|(l, e)| l.base.weight(q) * *e as i64).sum()
    }

    pub fn type_sum(&self) -> i64 {
        self.0.iter().map(|(l, e)| l.base.ty() * *e as i64).sum()
    }

    pub fn level(&self, field: &Arc<Field>) -> Poly {
        self.0.keys().fold(Poly::one(field), |acc, l| acc.lcm(&(&l.dil * &l.base.level(field))))
    }

    /// The common dilation when all letters share one.
    fn uniform_dilation(&self) -> Option<Poly> {
        let mut it = self.0.keys();
        let d = it.next()?.dil.clone();
        it.all(|l| l.dil == d).then_some(d)
    }

    fn undilated(&self, field: &Arc<Field>) -> Atom {
        let mut m = BTreeMap::new();
        for (l, e) in &self.0 {
            *m.entry(Letter { dil: Poly::one(field), base: l.base.clone() }).or_insert(0) += e;
        }
        Atom(m)
    }

    fn dilated(&self, d: &Poly) -> Atom {
        Atom(self.0.iter().map(|(l, e)| (Letter { dil: &l.dil * d, base: l.base.clone() }, *e)).collect())
    }

    fn is_level_one_product(&self) -> bool {
        self.0.keys().all(|l| l.dil.is_one() && !matches!(l.base, Base::Eis(_)))
    }

    /// Largest s with q^s dividing every exponent, and the q^s-th root.
    fn frobenius_root(&self, q: u64) -> (u32, Atom) {
        let mut s = 0;
        let mut cur = self.clone();
        while !cur.0.is_empty() && cur.0.values().all(|e| e % q == 0) {
            cur = Atom(cur.0.iter().map(|(l, e)| (l.clone(), e / q)).collect());
            s += 1;
        }
        (s, cur)
    }

    fn frobenius(&self, q: u64, s: u32) -> Atom {
        let f = q.pow(s);
        Atom(self.0.iter().map(|(l, e)| (l.clone(), e * f)).collect())
    }

    pub fn to_text(&self) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(l, e)| {
                let b = if l.dil.is_one() { l.base.to_string() } else { format!("D[{}]{}", l.dil, l.base) };
                if *e == 1 {
                    b
                } else {
                    format!("{b}^{e}")
                }
            })
            .collect();
        parts.join("*")
    }
}

/// Σ c_i·atom_i, all of weight k and type l, viewed at ambient level `level`.
#[derive(Clone, Debug)]
pub struct FormExpr {
    field: Arc<Field>,
    k: i64,
    l: u32,
    level: Poly,
    terms: BTreeMap<Atom, Scalar>,
}

impl PartialEq for FormExpr {
    fn eq(&self, o: &Self) -> bool {
        self.k == o.k && self.l == o.l && self.level == o.level && self.terms == o.terms
    }
}
impl Eq for FormExpr {}

fn canonical(field: &Field, l: i64) -> u32 {
    l.rem_euclid(field.q() as i64 - 1) as u32
}

impl FormExpr {
    pub fn zero(field: &Arc<Field>, k: i64, l: u32, level: Poly) -> FormExpr {
        FormExpr { field: field.clone(), k, l: canonical(field, l as i64), level, terms: BTreeMap::new() }
    }

    pub fn atom(field: &Arc<Field>, a: Atom) -> FormExpr {
        let q = field.q() as i64;
        let level = a.level(field);
        let mut terms = BTreeMap::new();
        let k = a.weight(q);
        let l = canonical(field, a.type_sum());
        terms.insert(a, Scalar::one(field));
        FormExpr { field: field.clone(), k, l, level, terms }
    }

    pub fn base(field: &Arc<Field>, b: Base) -> FormExpr {
        FormExpr::atom(field, Atom::letter(Poly::one(field), b))
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn weight(&self) -> i64 {
        self.k
    }

    pub fn ty(&self) -> u32 {
        self.l
    }

    pub fn level(&self) -> &Poly {
        &self.level
    }

    pub fn terms(&self) -> &BTreeMap<Atom, Scalar> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// View at a multiple of the current level.
    pub fn at_level(mut self, n: &Poly) -> Result<FormExpr> {
        if !self.level.divides(n) {
            return Err(Error::Invalid(format!("level {} does not divide {}", self.level, n)));
        }
        self.level = n.monic();
        Ok(self)
    }

    fn insert(&mut self, a: Atom, c: Scalar) {
        if c.is_zero() {
            return;
        }
        let lv = a.level(&self.field);
        self.level = self.level.lcm(&lv);
        let e = self.terms.entry(a).or_insert_with(|| Scalar::zero(&self.field));
        *e = &*e + &c;
        let zero: Vec<Atom> = self.terms.iter().filter(|(_, c)| c.is_zero()).map(|(a, _)| a.clone()).collect();
        for a in zero {
            self.terms.remove(&a);
        }
    }

    fn check_grading(&self, o: &FormExpr) -> Result<()> {
        if self.k != o.k || self.l != o.l {
            return Err(Error::GradingMismatch(self.k, self.l, o.k, o.l));
        }
        Ok(())
    }

    pub fn add(&self, o: &FormExpr) -> Result<FormExpr> {
        self.check_grading(o)?;
        let mut r = self.clone();
        r.level = r.level.lcm(&o.level);
        for (a, c) in &o.terms {
            r.insert(a.clone(), c.clone());
        }
        Ok(r)
    }

    pub fn sub(&self, o: &FormExpr) -> Result<FormExpr> {
        self.add(&o.scale(&-&Scalar::one(&self.field)))
    }

    pub fn scale(&self, s: &Scalar) -> FormExpr {
        let mut r = FormExpr::zero(&self.field, self.k, self.l, self.level.clone());
        for (a, c) in &self.terms {
            r.insert(a.clone(), c * s);
        }
        r
    }

    pub fn mul(&self, o: &FormExpr) -> FormExpr {
        let mut r = FormExpr::zero(&self.field, self.k + o.k, self.l + o.l, self.level.lcm(&o.level));
        for (a, c) in &self.terms {
            for (b, d) in &o.terms {
                r.insert(a.mul(b), c * d);
            }
        }
        r
    }

    /// f(dz) at level d·level.
    pub fn dilate(&self, d: &Poly) -> FormExpr {
        let mut r = FormExpr::zero(&self.field, self.k, self.l, &self.level * d);
        for (a, c) in &self.terms {
            r.insert(a.dilated(d), c.clone());
        }
        r
    }

    /// δ_P f = P^l f(Pz)
    pub fn delta_p(&self, p: &Poly) -> Result<FormExpr> {
        Ok(self.dilate(p).scale(&Scalar::from_poly(p.pow(self.l as u64))))
    }

    /// f^{q^s}; Frobenius is additive in characteristic p.
    pub fn frobenius(&self, s: u32) -> FormExpr {
        let q = self.field.q() as u64;
        let qs = q.pow(s) as i64;
        let mut r = FormExpr::zero(&self.field, self.k * qs, self.l, self.level.clone());
        for (a, c) in &self.terms {
            r.insert(a.frobenius(q, s), c.frobenius(s));
        }
        r
    }

    pub fn to_text(&self) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let parts: Vec<String> = self.terms.iter().map(|(a, c)| format!("({})*{}", c.to_text(), a.to_text())).collect();
        parts.join(" + ")
    }
}

impl fmt::Display for FormExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_text())
    }
}

fn p_adic(p: &Poly, d: &Poly) -> (u32, Poly) {
    let mut j = 0;
    let mut r = d.clone();
    while p.divides(&r) {
        r = r.exact_div(p).expect("divides");
        j += 1;
    }
    (j, r)
}

fn p_pow(p: &Poly, e: i64) -> Result<Scalar> {
    Scalar::from_poly(p.clone()).pow(e)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    YesExact,
    YesToPrecision { precision: usize },
    No { witness: usize },
    Undetermined,
}

impl Verdict {
    pub fn is_yes(&self) -> bool {
        matches!(self, Verdict::YesExact | Verdict::YesToPrecision { .. })
    }

    pub fn label(&self) -> String {
        match self {
            Verdict::YesExact => "yes-exact".into(),
            Verdict::YesToPrecision { precision } => format!("yes-to-precision({precision})"),
            Verdict::No { witness } => format!("no(witness u^{witness})"),
            Verdict::Undetermined => "undetermined".into(),
        }
    }

    fn and(self, o: Verdict) -> Verdict {
        use Verdict::*;
        match (self, o) {
            (No { witness }, _) | (_, No { witness }) => No { witness },
            (Undetermined, _) | (_, Undetermined) => Undetermined,
            (YesExact, YesExact) => YesExact,
            (YesToPrecision { precision: a }, YesToPrecision { precision: b }) => YesToPrecision { precision: a.min(b) },
            (YesToPrecision { precision }, YesExact) | (YesExact, YesToPrecision { precision }) => YesToPrecision { precision },
        }
    }
}

/// Output of a trace: symbolic when every U_p involved closes in the atoms.
#[derive(Clone, Debug)]
pub enum TraceValue {
    Expr(FormExpr),
    Series(USeries),
}

impl TraceValue {
    pub fn as_expr(&self) -> Option<&FormExpr> {
        match self {
            TraceValue::Expr(e) => Some(e),
            TraceValue::Series(_) => None,
        }
    }
}

/// Named forms plus caches of generator series and level-one Hecke images.
pub struct FormRegistry {
    field: Arc<Field>,
    named: BTreeMap<String, FormExpr>,
    series: Mutex<HashMap<Base, USeries>>,
    level_one_t: Mutex<HashMap<(Poly, Atom), FormExpr>>,
    primes: Mutex<HashMap<Poly, Arc<PrimeP>>>,
}

impl FormRegistry {
    pub fn new(field: &Arc<Field>) -> FormRegistry {
        FormRegistry {
            field: field.clone(),
            named: BTreeMap::new(),
            series: Mutex::new(HashMap::new()),
            level_one_t: Mutex::new(HashMap::new()),
            primes: Mutex::new(HashMap::new()),
        }
    }

    /// Registry with g1, Δ, h, Δ_T, Δ_W and E_P for each listed prime.
    pub fn seeded(field: &Arc<Field>, primes: &[Poly]) -> Result<FormRegistry> {
        let mut r = FormRegistry::new(field);
        r.register("g1", FormExpr::base(field, Base::G1));
        r.register("Delta", FormExpr::base(field, Base::Delta));
        r.register("h", FormExpr::base(field, Base::H));
        let t = Poly::t(field);
        let g1 = FormExpr::base(field, Base::G1);
        let b1 = Scalar::from_poly(Poly::bracket(field, 1));
        let dt = g1.sub(&g1.dilate(&t))?.scale(&-&b1.inv()?).at_level(&t)?;
        let dw = g1.at_level(&t)?.add(&dt.scale(&Scalar::from_poly(t.pow(field.q() as u64))))?;
        r.register("Delta_T", dt);
        r.register("Delta_W", dw);
        for p in primes {
            PrimeP::new(p)?;
            r.register(&format!("E_{{{p}}}"), FormExpr::base(field, Base::Eis(p.monic())));
        }
        Ok(r)
    }

    pub fn field(&self) -> &Arc<Field> {
        &self.field
    }

    pub fn register(&mut self, name: &str, e: FormExpr) {
        self.named.insert(name.to_string(), e);
    }

    pub fn get(&self, name: &str) -> Result<&FormExpr> {
        self.named.get(name).ok_or_else(|| Error::Invalid(format!("unknown form {name}")))
    }

    pub fn names(&self) -> impl Iterator<Item = &String> {
        self.named.keys()
    }

    fn prime(&self, p: &Poly) -> Result<Arc<PrimeP>> {
        let mut g = self.primes.lock().expect("prime cache");
        if let Some(x) = g.get(p) {
            return Ok(x.clone());
        }
        let x = Arc::new(PrimeP::new(p)?);
        g.insert(p.clone(), x.clone());
        Ok(x)
    }

    /// Register δ_1φ and δ_Pφ at level m·P under "name@1,P" and "name@P,P".
    pub fn register_delta_images(&mut self, name: &str, p: &Poly) -> Result<(String, String)> {
        let phi = self.get(name)?.clone();
        if p.divides(phi.level()) {
            return Err(Error::LevelNotCoprime { prime: p.to_text(), level: phi.level().to_text() });
        }
        let n = phi.level() * p;
        let d1 = phi.clone().at_level(&n)?;
        let dp = phi.delta_p(p)?.at_level(&n)?;
        let a = format!("{name}@1,{p}");
        let b = format!("{name}@{p},{p}");
        self.register(&a, d1);
        self.register(&b, dp);
        Ok((a, b))
    }

    fn base_series(&self, b: &Base, prec: usize) -> Result<USeries> {
        let mut g = self.series.lock().expect("series cache");
        if let Some(s) = g.get(b) {
            if s.prec() >= prec {
                return Ok(s.truncate(prec));
            }
        }
        let s = b.build(&self.field, prec)?;
        g.insert(b.clone(), s.clone());
        Ok(s)
    }

    pub fn atom_series(&self, a: &Atom, prec: usize) -> Result<USeries> {
        let mut s = USeries::one(&self.field, prec);
        for (l, e) in &a.0 {
            let b = self.base_series(&l.base, prec)?;
            let d = if l.dil.is_one() { b } else { b.dilate(&l.dil, prec)? };
            let d = if *e == 1 { d } else { d.pow_capped(*e, prec)? };
            s = s.mul_capped(&d, prec)?;
        }
        Ok(s)
    }

    /// Ground-truth u-series of an expression.
    pub fn series(&self, e: &FormExpr, prec: usize) -> Result<USeries> {
        let mut acc = USeries::zero(&self.field, e.k, e.l as i64, prec);
        for (a, c) in &e.terms {
            let s = self.atom_series(a, prec)?.scale(c);
            let s = USeries::new(&self.field, e.k, e.l as i64, s.prec(), s.coeffs().clone())?;
            acc = acc.add(&s)?;
        }
        Ok(acc.with_level(e.level.clone()))
    }

    pub fn named_series(&self, name: &str, prec: usize) -> Result<USeries> {
        self.series(self.get(name)?, prec)
    }

    /// W_{P^α} at the ambient level of `e`, with P^α ∥ level.
    pub fn w_action(&self, e: &FormExpr, p: &Poly) -> Result<FormExpr> {
        let (alpha, _) = p_adic(p, e.level());
        if alpha == 0 {
            return Err(Error::NotExactDivisor { prime: p.to_text(), level: e.level().to_text() });
        }
        let mut r = FormExpr::zero(&self.field, e.k, e.l, e.level.clone());
        for (a, c) in &e.terms {
            let (s, img) = self.w_atom(a, p, alpha, e.l)?;
            r.insert(img, c * &s);
        }
        Ok(r)
    }

    fn w_atom(&self, a: &Atom, p: &Poly, alpha: u32, l_can: u32) -> Result<(Scalar, Atom)> {
        let q = self.field.q() as i64;
        let mut scal = Scalar::one(&self.field);
        let mut m = BTreeMap::new();
        for (letter, e) in &a.0 {
            let (j, rest) = p_adic(p, &letter.dil);
            let (s, dil) = match &letter.base {
                Base::Eis(b) if b == p => {
                    if alpha != 1 || j != 0 {
                        return Err(Error::UnknownWAction(format!("{} under W_{{{}^{}}}", Atom::letter(letter.dil.clone(), letter.base.clone()).to_text(), p, alpha)));
                    }
                    (-&Scalar::one(&self.field), letter.dil.clone())
                }
                b => {
                    if j > alpha {
                        return Err(Error::NotExactDivisor { prime: p.to_text(), level: letter.dil.to_text() });
                    }
                    let ex = alpha as i64 * b.ty() - j as i64 * b.weight(q);
                    (p_pow(p, ex)?, &rest * &p.pow((alpha - j) as u64))
                }
            };
            scal = &scal * &s.pow(*e as i64)?;
            *m.entry(Letter { dil, base: letter.base.clone() }).or_insert(0) += e;
        }
        let corr = alpha as i64 * (l_can as i64 - a.type_sum());
        scal = &scal * &p_pow(p, corr)?;
        Ok((scal, Atom(m)))
    }

    /// T_P of a level-one monomial (letters undilated, no E_Q), expanded in the
    /// full monomial basis.
    fn level_one_hecke(&self, pp: &PrimeP, y: &Atom) -> Result<FormExpr> {
        let key = (pp.poly().clone(), y.clone());
        if let Some(e) = self.level_one_t.lock().expect("hecke cache").get(&key) {
            return Ok(e.clone());
        }
        let q = self.field.q() as usize;
        let k = y.weight(q as i64);
        let l = canonical(&self.field, y.type_sum());
        let basis = spectral::enumerate_basis(q, k, l, false);
        let mut out = FormExpr::zero(&self.field, k, l, Poly::one(&self.field));
        if basis.dim() > 0 {
            let n = spectral::solve_precision(&basis) + y.0.values().sum::<u64>() as usize;
            let big = pp.needed_precision(n);
            let ys = self.atom_series(y, big)?.with_level(Poly::one(&self.field));
            let img = hecke::op_t(&ys, pp, n)?;
            let atoms: Vec<Atom> =
                basis.exps.iter().map(|&(a, b)| Atom::level_one(&self.field, &[(Base::G1, a as u64), (Base::Delta, b as u64), (Base::H, l as u64)])).collect();
            let bs: Vec<USeries> = atoms.iter().map(|a| self.atom_series(a, n)).collect::<Result<_>>()?;
            let coords = SpanSolver::new(&bs, n)?.express(&img)?;
            for (a, c) in atoms.into_iter().zip(coords) {
                out.insert(a, c);
            }
        }
        self.level_one_t.lock().expect("hecke cache").insert(key, out.clone());
        Ok(out)
    }

    /// T_P Y for an undilated atom Y with P ∤ level(Y), when it closes symbolically.
    fn t_undilated(&self, pp: &PrimeP, y: &Atom) -> Result<Option<FormExpr>> {
        let q = self.field.q() as u64;
        let (s, root) = y.frobenius_root(q);
        let img = if root.is_level_one_product() {
            self.level_one_hecke(pp, &root)?
        } else if root.0.len() == 1 && root.0.values().all(|&e| e == 1) {
            match &root.0.keys().next().expect("one letter").base {
                Base::Eis(b) if b != pp.poly() => FormExpr::atom(&self.field, root.clone()).scale(&Scalar::from_poly(pp.poly().clone())),
                _ => return Ok(None),
            }
        } else {
            return Ok(None);
        };
        Ok(Some(img.frobenius(s)))
    }

    /// U_P of one atom, or None when it does not close.
    fn u_atom(&self, pp: &PrimeP, a: &Atom) -> Result<Option<FormExpr>> {
        let p = pp.poly();
        let q = self.field.q() as i64;
        let k = a.weight(q);
        let l = canonical(&self.field, a.type_sum());
        let js: Vec<u32> = a.0.keys().map(|lt| p_adic(p, &lt.dil).0).collect();
        if js.iter().all(|&j| j >= 1) {
            return Ok(Some(FormExpr::zero(&self.field, k, l, Poly::one(&self.field))));
        }
        if js.iter().any(|&j| j >= 1) {
            return Ok(None);
        }
        let Some(d) = a.uniform_dilation() else { return Ok(None) };
        let y = a.undilated(&self.field);
        let has_p = y.0.keys().any(|lt| matches!(&lt.base, Base::Eis(b) if b == p));
        let img = if has_p {
            // U_P E_P^{q^s} = P^{q^s} E_P^{q^s}
            let (s, root) = y.frobenius_root(q as u64);
            if root.0.len() != 1 || root.0.values().any(|&e| e != 1) {
                return Ok(None);
            }
            let qs = (q as u64).pow(s);
            FormExpr::atom(&self.field, y.clone()).scale(&Scalar::from_poly(p.pow(qs)))
        } else {
            let Some(t) = self.t_undilated(pp, &y)? else { return Ok(None) };
            let pk = Scalar::from_poly(p.pow(k as u64));
            let mut r = t;
            r.insert(y.dilated(p), -&pk);
            r
        };
        Ok(Some(img.dilate(&d)))
    }

    /// Symbolic U_P at the ambient level of `e` (P must divide it).
    pub fn u_p(&self, e: &FormExpr, p: &Poly) -> Result<Option<FormExpr>> {
        if !p.divides(e.level()) {
            return Err(Error::NotExactDivisor { prime: p.to_text(), level: e.level().to_text() });
        }
        let pp = self.prime(p)?;
        let mut r = FormExpr::zero(&self.field, e.k, e.l, e.level.clone());
        for (a, c) in &e.terms {
            let Some(img) = self.u_atom(&pp, a)? else { return Ok(None) };
            for (b, d) in img.terms {
                r.insert(b, c * &d);
            }
        }
        Ok(Some(r))
    }

    /// Symbolic T_P for P coprime to the level of `e`.
    pub fn t_p(&self, e: &FormExpr, p: &Poly) -> Result<Option<FormExpr>> {
        if p.divides(e.level()) {
            return Err(Error::LevelNotCoprime { prime: p.to_text(), level: e.level().to_text() });
        }
        let pp = self.prime(p)?;
        let mut r = FormExpr::zero(&self.field, e.k, e.l, e.level.clone());
        for (a, c) in &e.terms {
            let Some(d) = a.uniform_dilation() else { return Ok(None) };
            let Some(img) = self.t_undilated(&pp, &a.undilated(&self.field))? else { return Ok(None) };
            for (b, x) in img.dilate(&d).terms {
                r.insert(b, c * &x);
            }
        }
        Ok(Some(r))
    }

    /// U_P on series, used when the symbolic route does not close.
    pub fn u_p_series(&self, e: &FormExpr, p: &Poly, prec: usize) -> Result<USeries> {
        let pp = self.prime(p)?;
        let s = self.series(e, pp.needed_precision(prec))?;
        Ok(hecke::op_u(&s, &pp, prec)?.with_level(e.level.clone()))
    }

    fn strip(&self, e: &FormExpr, p: &Poly) -> Result<Poly> {
        let (alpha, m) = p_adic(p, e.level());
        if alpha != 1 {
            return Err(Error::NotExactDivisor { prime: p.to_text(), level: e.level().to_text() });
        }
        Ok(m)
    }

    /// Tr^{Pm}_m f = f + P^{-l} U_P(f|W_P), for P ∥ level. `prec` is used only
    /// when U_P does not close symbolically.
    pub fn trace(&self, e: &FormExpr, p: &Poly, prec: usize) -> Result<TraceValue> {
        let m = self.strip(e, p)?;
        let w = self.w_action(e, p)?;
        let pl = p_pow(p, -(e.l as i64))?;
        match self.u_p(&w, p)? {
            Some(u) => {
                let r = e.add(&u.scale(&pl))?;
                Ok(TraceValue::Expr(FormExpr { level: m, ..r }))
            }
            None => {
                let u = self.u_p_series(&w, p, prec)?.scale(&pl);
                let s = self.series(e, prec)?.add(&u)?;
                Ok(TraceValue::Series(s.with_level(m)))
            }
        }
    }

    /// Tr'(f) = Tr(f|W_P).
    pub fn trace_prime(&self, e: &FormExpr, p: &Poly, prec: usize) -> Result<TraceValue> {
        let w = self.w_action(e, p)?;
        self.trace(&w, p, prec)
    }

    /// Tr^{P^α m}_{P^{α-1} m} f = P^{-l-(α-1)(2l-k)}·U_P(f|W_{P^α})|W_{P^{α-1}}, α ≥ 2.
    pub fn trace_high_alpha(&self, e: &FormExpr, p: &Poly) -> Result<FormExpr> {
        let (alpha, _) = p_adic(p, e.level());
        if alpha < 2 {
            return Err(Error::Invalid(format!("{} is not a square divisor of {}", p, e.level())));
        }
        if e.is_zero() {
            return Ok(FormExpr::zero(&self.field, e.k, e.l, e.level.exact_div(p)?));
        }
        let w = self.w_action(e, p)?;
        let u = self.u_p(&w, p)?.ok_or_else(|| Error::UnknownWAction("U_P image not expressible".into()))?;
        let lower = e.level.exact_div(p)?;
        let u = FormExpr { level: lower.clone(), ..u };
        for a in u.terms.keys() {
            if !a.level(&self.field).divides(&lower) {
                return Err(Error::Invalid(format!("U_P image atom {} is not of level {}", a.to_text(), lower)));
            }
        }
        let w2 = self.w_action(&u, p)?;
        let ex = -(e.l as i64) - (alpha as i64 - 1) * (2 * e.l as i64 - e.k);
        Ok(w2.scale(&p_pow(p, ex)?))
    }

    fn zero_verdict(&self, v: &TraceValue, prec: usize) -> Result<Verdict> {
        let s = match v {
            TraceValue::Expr(e) if e.is_zero() => return Ok(Verdict::YesExact),
            TraceValue::Expr(e) => self.series(e, prec)?,
            TraceValue::Series(s) => s.truncate(prec),
        };
        Ok(match s.coeffs().keys().next() {
            Some(&i) => Verdict::No { witness: i },
            None => Verdict::YesToPrecision { precision: s.prec() },
        })
    }

    /// In the kernel of both Tr and Tr' for P ∥ level.
    pub fn is_p_new(&self, e: &FormExpr, p: &Poly, prec: usize) -> Result<Verdict> {
        let a = self.zero_verdict(&self.trace(e, p, prec)?, prec)?;
        let b = self.zero_verdict(&self.trace_prime(e, p, prec)?, prec)?;
        Ok(a.and(b))
    }

    /// Image of (δ_1, δ_P) from level m = level/P.
    pub fn is_p_old(&self, e: &FormExpr, p: &Poly, prec: usize) -> Result<Verdict> {
        let m = self.strip(e, p)?;
        if e.terms.keys().all(|a| atom_is_p_old(&self.field, a, p, &m)) {
            return Ok(Verdict::YesExact);
        }
        if m.is_one() {
            return self.level_one_old_span(e, p, prec);
        }
        Ok(Verdict::Undetermined)
    }

    fn level_one_old_span(&self, e: &FormExpr, p: &Poly, prec: usize) -> Result<Verdict> {
        let q = self.field.q() as usize;
        let target = self.series(e, prec)?;
        let basis = spectral::enumerate_basis(q, e.k, e.l, false);
        if basis.dim() == 0 {
            return Ok(match target.coeffs().keys().next() {
                Some(&i) => Verdict::No { witness: i },
                None => Verdict::YesToPrecision { precision: prec },
            });
        }
        let mut gens = Vec::new();
        for &(a, b) in &basis.exps {
            let at = Atom::level_one(&self.field, &[(Base::G1, a as u64), (Base::Delta, b as u64), (Base::H, e.l as u64)]);
            gens.push(self.atom_series(&at, prec)?);
            gens.push(self.atom_series(&at.dilated(p), prec)?);
        }
        let Ok(solver) = SpanSolver::new(&gens, prec) else { return Ok(Verdict::Undetermined) };
        Ok(match solver.express(&target) {
            Ok(_) => Verdict::YesToPrecision { precision: prec },
            Err(Error::Residual(i)) => Verdict::No { witness: i },
            Err(e) => return Err(e),
        })
    }

    /// Σ_{P | n} p-old, for square-free n = level.
    pub fn is_in_old(&self, e: &FormExpr, prec: usize) -> Result<Verdict> {
        let primes = squarefree_primes(e.level())?;
        if e.is_zero() {
            return Ok(Verdict::YesExact);
        }
        if e.terms.keys().all(|a| primes.iter().any(|p| atom_is_p_old(&self.field, a, p, &e.level.exact_div(p).expect("divides")))) {
            return Ok(Verdict::YesExact);
        }
        if primes.len() == 1 {
            return self.is_p_old(e, &primes[0], prec);
        }
        Ok(Verdict::Undetermined)
    }

    /// ⋂_{P | n} p-new, for square-free n = level.
    pub fn is_in_new(&self, e: &FormExpr, prec: usize) -> Result<Verdict> {
        let mut v = Verdict::YesExact;
        for p in squarefree_primes(e.level())? {
            v = v.and(self.is_p_new(e, &p, prec)?);
        }
        Ok(v)
    }
}

fn atom_is_p_old(field: &Arc<Field>, a: &Atom, p: &Poly, m: &Poly) -> bool {
    let js: Vec<u32> = a.0.keys().map(|l| p_adic(p, &l.dil).0).collect();
    let j = js[0];
    if j > 1 || js.iter().any(|&x| x != j) {
        return false;
    }
    let inner = if j == 0 {
        a.clone()
    } else {
        Atom(a.0.iter().map(|(l, e)| (Letter { dil: l.dil.exact_div(p).expect("divides"), base: l.base.clone() }, *e)).collect())
    };
    inner.level(field).divides(m)
}

/// Monic prime divisors of a square-free level.
pub fn squarefree_primes(n: &Poly) -> Result<Vec<Poly>> {
    let field = n.field().clone();
    let mut rest = n.monic();
    let mut out = Vec::new();
    let mut d = 1;
    while rest.deg() > 0 {
        for p in Poly::monics_of_degree(&field, d) {
            if p.is_irreducible() && p.divides(&rest) {
                rest = rest.exact_div(&p)?;
                if p.divides(&rest) {
                    return Err(Error::Invalid(format!("level {n} is not square-free")));
                }
                out.push(p);
            }
        }
        d += 1;
    }
    Ok(out)
}

/// Coordinates of `target` in the span of `exprs`, in atom coordinates.
pub fn express_symbolic(exprs: &[FormExpr], target: &FormExpr) -> Option<Vec<Scalar>> {
    let field = target.field().clone();
    let mut atoms: Vec<Atom> = target.terms.keys().cloned().collect();
    for e in exprs {
        atoms.extend(e.terms.keys().cloned());
    }
    atoms.sort();
    atoms.dedup();
    let coord = |e: &FormExpr| -> Vec<Scalar> { atoms.iter().map(|a| e.terms.get(a).cloned().unwrap_or_else(|| Scalar::zero(&field))).collect() };
    let vs: Vec<Vec<Scalar>> = exprs.iter().map(coord).collect();
    spectral::in_span(&field, &vs, &coord(target))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_poly;

    fn setup() -> (Arc<Field>, FormRegistry) {
        let f = Field::prime(3).unwrap();
        let ps: Vec<Poly> = ["T", "T+1"].iter().map(|s| parse_poly(&f, s).unwrap()).collect();
        let r = FormRegistry::seeded(&f, &ps).unwrap();
        (f, r)
    }

    #[test]
    fn seeded_series_match_builders() {
        let (f, r) = setup();
        let dt = r.named_series("Delta_T", 40).unwrap();
        assert!(dt.agrees_with(&forms::build_delta_t(&f, 40).unwrap()));
        let dw = r.named_series("Delta_W", 40).unwrap();
        assert!(dw.agrees_with(&forms::build_delta_w(&f, 40).unwrap()));
    }

    #[test]
    fn w_examples() {
        let (f, r) = setup();
        let t = Poly::t(&f);
        let et = r.get("E_{T}").unwrap().clone();
        assert_eq!(r.w_action(&et, &t).unwrap(), et.scale(&Scalar::from_int(&f, -1)));
        let dw = r.get("Delta_W").unwrap();
        let dt = r.get("Delta_T").unwrap();
        assert_eq!(r.w_action(dw, &t).unwrap(), dt.scale(&-&Scalar::t(&f)));
        let prod = dw.mul(&et);
        assert_eq!(r.w_action(&prod, &t).unwrap(), dt.mul(&et).scale(&Scalar::t(&f)));
        // involution
        let h = r.get("h").unwrap().clone().at_level(&t).unwrap();
        let ww = r.w_action(&r.w_action(&h, &t).unwrap(), &t).unwrap();
        assert_eq!(ww, h.scale(&p_pow(&t, 2 - 4).unwrap()));
    }

    #[test]
    fn trace_prime_of_delta_one() {
        let (f, mut r) = setup();
        let t = Poly::t(&f);
        let (a, _) = r.register_delta_images("h", &t).unwrap();
        let e = r.get(&a).unwrap().clone();
        let tr = r.trace_prime(&e, &t, 30).unwrap();
        let h = r.get("h").unwrap();
        let th = r.t_p(h, &t).unwrap().unwrap();
        assert_eq!(tr.as_expr().unwrap(), &th.scale(&p_pow(&t, 1 - 4).unwrap()));
        assert_eq!(th, h.scale(&Scalar::t(&f)));
    }

    #[test]
    fn counterexample_traces() {
        let (f, r) = setup();
        let p = parse_poly(&f, "T+1").unwrap();
        let t = Poly::t(&f);
        let eq = r.get("E_{T}").unwrap().clone();
        let v = eq.sub(&eq.delta_p(&p).unwrap()).unwrap();
        assert!(r.trace(&v, &p, 20).unwrap().as_expr().unwrap().is_zero());
        assert!(r.trace_prime(&v, &p, 20).unwrap().as_expr().unwrap().is_zero());
        assert_eq!(r.is_in_new(&v, 30).unwrap(), Verdict::YesExact);
        assert_eq!(r.is_in_old(&v, 30).unwrap(), Verdict::YesExact);
        let ep = r.get("E_{T}").unwrap();
        assert_eq!(r.is_p_new(ep, &t, 30).unwrap(), Verdict::YesExact);
        assert!(matches!(r.is_p_old(ep, &t, 30).unwrap(), Verdict::No { .. }));
    }

    #[test]
    fn symbolic_u_matches_series() {
        let (f, r) = setup();
        let t = Poly::t(&f);
        let p = parse_poly(&f, "T+1").unwrap();
        let n = &t * &p;
        let h = r.get("h").unwrap().clone();
        let e = h.add(&h.dilate(&p).scale(&Scalar::t(&f))).unwrap().add(&h.dilate(&t)).unwrap().at_level(&n).unwrap();
        for pr in [&t, &p] {
            let u = r.u_p(&e, pr).unwrap().unwrap();
            let a = r.series(&u, 25).unwrap();
            let b = r.u_p_series(&e, pr, 25).unwrap();
            assert!(a.agrees_with(&b));
        }
    }

    #[test]
    fn high_alpha_kills_lower_level() {
        let (f, r) = setup();
        let t = Poly::t(&f);
        let t2 = t.pow(2);
        let h = r.get("h").unwrap().clone();
        for e in [h.clone(), h.dilate(&t)] {
            let e = e.at_level(&t2).unwrap();
            assert!(r.trace_high_alpha(&e, &t).unwrap().is_zero());
        }
        let e = h.dilate(&t2);
        let tr = r.trace_high_alpha(&e, &t).unwrap();
        assert!(tr.level().divides(&t));
        let et = r.get("E_{T}").unwrap().clone().at_level(&t2).unwrap();
        assert!(matches!(r.trace_high_alpha(&et, &t), Err(Error::UnknownWAction(_))));
    }
}
