//! The Carlitz module, Carlitz factorials, the rescaled parameter u(az) and
//! Goss polynomials of the period lattice and of the torsion lattices Λ_P.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::algebra::{Field, Poly, Scalar, XPoly};
use crate::error::{Error, Result};
use crate::useries::USeries;

/// Σ c_i X^{q^i} with coefficients in A.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdditivePoly {
    pub coeffs: Vec<Poly>,
}

impl AdditivePoly {
    pub fn field(&self) -> &Arc<Field> {
        self.coeffs[0].field()
    }

    /// q-degree (index of the last nonzero coefficient).
    pub fn qdeg(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn add(&self, o: &AdditivePoly) -> AdditivePoly {
        let f = self.field().clone();
        let n = self.coeffs.len().max(o.coeffs.len());
        let z = Poly::zero(&f);
        let mut c: Vec<Poly> = (0..n)
            .map(|i| self.coeffs.get(i).unwrap_or(&z) + o.coeffs.get(i).unwrap_or(&z))
            .collect();
        while c.len() > 1 && c.last().map(|x| x.is_zero()).unwrap_or(false) {
            c.pop();
        }
        AdditivePoly { coeffs: c }
    }

    /// (self ∘ o)(X) = Σ_i Σ_j f_i g_j^{q^i} X^{q^{i+j}}.
    pub fn compose(&self, o: &AdditivePoly) -> AdditivePoly {
        let f = self.field().clone();
        let mut c = vec![Poly::zero(&f); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, fi) in self.coeffs.iter().enumerate() {
            if fi.is_zero() {
                continue;
            }
            for (j, gj) in o.coeffs.iter().enumerate() {
                if gj.is_zero() {
                    continue;
                }
                c[i + j] = &c[i + j] + &(fi * &gj.frobenius(i as u32));
            }
        }
        while c.len() > 1 && c.last().map(|x| x.is_zero()).unwrap_or(false) {
            c.pop();
        }
        AdditivePoly { coeffs: c }
    }

    /// Evaluate at an element of K.
    pub fn eval(&self, x: &Scalar) -> Scalar {
        let mut acc = Scalar::zero(self.field());
        for (i, c) in self.coeffs.iter().enumerate() {
            acc = &acc + &x.frobenius(i as u32).mul_poly(c);
        }
        acc
    }
}

impl fmt::Display for AdditivePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let q = self.field().q() as u64;
        let mut parts = Vec::new();
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let e = q.pow(i as u32);
            let mono = if e == 1 { "X".to_string() } else { format!("X^{e}") };
            parts.push(if c.is_one() { mono } else { format!("({c}){mono}") });
        }
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

/// Coefficients of ρ_a for a nonzero a ∈ A.
pub fn carlitz_coeffs(a: &Poly) -> Vec<Poly> {
    let f = a.field().clone();
    let t = Poly::t(&f);
    let mut out = vec![Poly::zero(&f); a.deg().max(0) as usize + 1];
    // current = ρ_{T^k}
    let mut current = vec![Poly::one(&f)];
    for (k, &ak) in a.coeffs().iter().enumerate() {
        if k > 0 {
            // ρ_T ∘ g = T·g + g^q
            let mut next = vec![Poly::zero(&f); current.len() + 1];
            for (i, g) in current.iter().enumerate() {
                next[i] = &next[i] + &(&t * g);
                next[i + 1] = &next[i + 1] + &g.frobenius(1);
            }
            current = next;
        }
        if ak != 0 {
            for (i, g) in current.iter().enumerate() {
                out[i] = &out[i] + &g.scale(ak);
            }
        }
    }
    out
}

pub fn carlitz_poly(a: &Poly) -> Result<AdditivePoly> {
    if a.is_zero() {
        return Err(Error::Invalid("ρ_0 is not requested: input must be nonzero".into()));
    }
    Ok(AdditivePoly { coeffs: carlitz_coeffs(a) })
}

/// Carlitz factorial D_i = [i]·D_{i-1}^q, D_0 = 1.
pub fn d_sequence(field: &Arc<Field>, i: u32) -> Poly {
    let mut d = Poly::one(field);
    for j in 1..=i {
        d = &Poly::bracket(field, j) * &d.frobenius(1);
    }
    d
}

/// L_d = [1][2]...[d].
pub fn l_sequence(field: &Arc<Field>, d: u32) -> Poly {
    (1..=d).fold(Poly::one(field), |acc, j| &acc * &Poly::bracket(field, j))
}

/// α_j = 1/D_j for 0 ≤ j ≤ n (the normalized period-lattice exponential).
pub fn period_alpha(field: &Arc<Field>, n: u32) -> Vec<Scalar> {
    let mut out = Vec::new();
    let mut d = Poly::one(field);
    for j in 0..=n {
        if j > 0 {
            d = &Poly::bracket(field, j) * &d.frobenius(1);
        }
        out.push(Scalar::new(Poly::one(field), d.clone()).expect("nonzero"));
    }
    out
}

pub fn check_prime(p: &Poly) -> Result<()> {
    if !p.is_monic() || !p.is_irreducible() {
        return Err(Error::NotPrime(p.to_text()));
    }
    Ok(())
}

/// α_j = coeff(ρ_P, X^{q^j})/P for the lattice Λ_P = ker ρ_P.
pub fn torsion_alpha(p: &Poly) -> Result<Vec<Scalar>> {
    check_prime(p)?;
    let rho = carlitz_coeffs(p);
    rho.iter().map(|c| Scalar::new(c.clone(), p.clone())).collect()
}

/// Exponential coefficients of the toy lattice F_q: e(z) = z - z^q.
pub fn toy_alpha(field: &Arc<Field>) -> Vec<Scalar> {
    vec![Scalar::one(field), Scalar::from_int(field, -1)]
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Lattice {
    Period,
    Torsion(Poly),
    Toy,
}

impl Lattice {
    pub fn alpha(&self, field: &Arc<Field>, kmax: usize) -> Result<Vec<Scalar>> {
        match self {
            Lattice::Period => {
                let q = field.q() as usize;
                let mut n = 0u32;
                while q.pow(n + 1) < kmax {
                    n += 1;
                }
                Ok(period_alpha(field, n))
            }
            Lattice::Torsion(p) => torsion_alpha(p),
            Lattice::Toy => Ok(toy_alpha(field)),
        }
    }
}

impl Lattice {
    /// "period", "toy" or "torsion:<P>"
    pub fn parse(field: &Arc<Field>, s: &str) -> Result<Lattice> {
        match s.trim() {
            "period" => Ok(Lattice::Period),
            "toy" => Ok(Lattice::Toy),
            t => match t.strip_prefix("torsion:") {
                Some(p) => {
                    let p = crate::algebra::parse_poly(field, p)?;
                    check_prime(&p)?;
                    Ok(Lattice::Torsion(p))
                }
                None => Err(Error::Parse(format!("unknown lattice {t}; use period, toy or torsion:<P>"))),
            },
        }
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lattice::Period => write!(f, "period"),
            Lattice::Torsion(p) => write!(f, "torsion:{p}"),
            Lattice::Toy => write!(f, "toy"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GossTable {
    pub lattice: Option<Lattice>,
    pub alpha: Vec<Scalar>,
    /// polys[i] = G_i; polys[0] = 0.
    pub polys: Vec<XPoly>,
}

impl GossTable {
    pub fn kmax(&self) -> usize {
        self.polys.len() - 1
    }

    pub fn get(&self, i: usize) -> &XPoly {
        &self.polys[i]
    }
}

/// G_1 = X, G_i = X·Σ_{j≥0} α_j G_{i-q^j} (G_{≤0} = 0).
pub fn goss_table(alpha: &[Scalar], kmax: usize) -> Result<GossTable> {
    if alpha.is_empty() || !alpha[0].is_one() {
        return Err(Error::Invalid("α_0 must be 1".into()));
    }
    let f = alpha[0].field().clone();
    let q = f.q() as usize;
    let mut polys = vec![XPoly::zero(&f)];
    if kmax >= 1 {
        polys.push(XPoly::x(&f));
    }
    for i in 2..=kmax {
        let mut acc = XPoly::zero(&f);
        let mut qj = 1usize;
        for a in alpha {
            if qj >= i {
                break;
            }
            if !a.is_zero() {
                acc = acc.add(&polys[i - qj].scale(a));
            }
            qj *= q;
        }
        polys.push(acc.mul(&XPoly::x(&f)));
    }
    Ok(GossTable { lattice: None, alpha: alpha.to_vec(), polys })
}

pub fn goss_table_for(lattice: &Lattice, field: &Arc<Field>, kmax: usize) -> Result<GossTable> {
    let alpha = lattice.alpha(field, kmax)?;
    let mut t = goss_table(&alpha, kmax)?;
    t.lattice = Some(lattice.clone());
    Ok(t)
}

/// Memo of Goss tables keyed by lattice; a request is served by any cached
/// table of at least the requested length.
#[derive(Default)]
pub struct GossContext {
    tables: Mutex<HashMap<(u32, Lattice), Arc<GossTable>>>,
}

impl GossContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn table(&self, field: &Arc<Field>, lattice: &Lattice, kmax: usize) -> Result<Arc<GossTable>> {
        let key = (field.q(), lattice.clone());
        if let Some(t) = self.tables.lock().expect("goss memo").get(&key) {
            if t.kmax() >= kmax {
                return Ok(t.clone());
            }
        }
        let t = Arc::new(goss_table_for(lattice, field, kmax)?);
        self.tables.lock().expect("goss memo").insert(key, t.clone());
        Ok(t)
    }
}

/// Goss polynomials with the α_j kept symbolic: each G_i is a map
/// (power of X, exponents of α_1, α_2, ...) -> coefficient in F_p.
pub struct SymbolicGoss {
    pub q: usize,
    pub polys: Vec<BTreeMap<(usize, Vec<u32>), u32>>,
}

pub fn symbolic_goss(field: &Arc<Field>, nalpha: usize, kmax: usize) -> SymbolicGoss {
    let q = field.q() as usize;
    let mut polys: Vec<BTreeMap<(usize, Vec<u32>), u32>> = vec![BTreeMap::new()];
    if kmax >= 1 {
        let mut g1 = BTreeMap::new();
        g1.insert((1, vec![0; nalpha]), 1);
        polys.push(g1);
    }
    for i in 2..=kmax {
        let mut acc: BTreeMap<(usize, Vec<u32>), u32> = BTreeMap::new();
        let mut qj = 1usize;
        for j in 0..=nalpha {
            if qj >= i {
                break;
            }
            for ((m, ex), &c) in &polys[i - qj] {
                let mut ex = ex.clone();
                if j > 0 {
                    ex[j - 1] += 1;
                }
                let slot = acc.entry((m + 1, ex)).or_insert(0);
                *slot = field.add(*slot, c);
            }
            qj *= q;
        }
        acc.retain(|_, c| *c != 0);
        polys.push(acc);
    }
    SymbolicGoss { q, polys }
}

impl SymbolicGoss {
    /// Every monomial X^m·Π α_j^{e_j} of G_i has m + Σ e_j (q^j - 1) = i.
    pub fn is_isobaric(&self) -> bool {
        self.polys.iter().enumerate().all(|(i, g)| {
            g.keys().all(|(m, ex)| {
                let w: usize = ex.iter().enumerate().map(|(j, &e)| e as usize * (self.q.pow(j as u32 + 1) - 1)).sum();
                m + w == i
            })
        })
    }

    pub fn evaluate(&self, i: usize, alpha: &[Scalar]) -> XPoly {
        let f = alpha[0].field().clone();
        let mut c: Vec<Scalar> = vec![Scalar::zero(&f); i + 1];
        for ((m, ex), &k) in &self.polys[i] {
            let mut term = Scalar::from_fq(&f, k);
            for (j, &e) in ex.iter().enumerate() {
                if e > 0 {
                    let a = alpha.get(j + 1).cloned().unwrap_or_else(|| Scalar::zero(&f));
                    term = &term * &a.pow(e as i64).expect("nonnegative power");
                }
            }
            c[*m] = &c[*m] + &term;
        }
        XPoly::from_coeffs(&f, c)
    }
}

/// The series u(az) = 1/ρ_a(1/u), valid below `prec`.
pub fn u_scale(a: &Poly, prec: usize) -> Result<USeries> {
    if a.is_zero() || !a.is_monic() {
        return Err(Error::Invalid(format!("u_scale needs a monic polynomial, got {a}")));
    }
    USeries::u(a.field(), prec).dilate(a, prec)
}

/// G(s) for a polynomial G in X, truncated per the composition rule and at `prec`.
pub fn goss_eval(g: &XPoly, s: &USeries, prec: usize) -> Result<USeries> {
    let f = g.field().clone();
    if g.is_zero() {
        return Ok(USeries::zero(&f, 0, 0, prec.min(s.prec())));
    }
    let m = f.q() as usize - 1;
    let deg = g.deg() as usize;
    let ty = deg % m;
    let mut coeffs = BTreeMap::new();
    for (i, c) in g.coeffs().iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        if i % m != ty {
            return Err(Error::Invalid("polynomial is not homogeneous for the type grading".into()));
        }
        coeffs.insert(i, c.clone());
    }
    let gs = USeries::new(&f, 0, ty as i64, deg + 1, coeffs)?;
    Ok(gs.compose(s)?.truncate(prec))
}

/// Both sides of Σ_{λ∈F_q}(z-λ)^{-k} = G_k(1/(z - z^q)) in F_q(z), with z played by T.
pub fn toy_lattice_sides(field: &Arc<Field>, table: &GossTable, k: usize) -> Result<(Scalar, Scalar)> {
    let mut lhs = Scalar::zero(field);
    for c in 0..field.q() {
        let zl = &Poly::t(field) - &Poly::constant(field, c);
        lhs = &lhs + &Scalar::from_poly(zl).pow(-(k as i64))?;
    }
    let e = &Poly::t(field) - &Poly::monomial(field, 1, field.q() as usize);
    let x = Scalar::from_poly(e).inv()?;
    Ok((lhs, table.get(k).eval(&x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::parse_poly;

    fn f3() -> Arc<Field> {
        Field::prime(3).unwrap()
    }

    #[test]
    fn rho_small_cases() {
        let f = f3();
        assert_eq!(carlitz_poly(&Poly::t(&f)).unwrap().to_string(), "(T)X + X^3");
        assert_eq!(carlitz_poly(&Poly::one(&f)).unwrap().to_string(), "X");
        let t2 = parse_poly(&f, "T^2").unwrap();
        let r = carlitz_poly(&t2).unwrap();
        assert_eq!(r.coeffs[1], parse_poly(&f, "T^3+T").unwrap());
        assert_eq!(r.coeffs[2], Poly::one(&f));
        assert!(carlitz_poly(&Poly::zero(&f)).is_err());
    }

    #[test]
    fn d_values() {
        let f = f3();
        assert!(d_sequence(&f, 0).is_one());
        assert_eq!(d_sequence(&f, 1), Poly::bracket(&f, 1));
        assert_eq!(d_sequence(&f, 2), &Poly::bracket(&f, 2) * &Poly::bracket(&f, 1).pow(3));
    }

    #[test]
    fn torsion_alphas() {
        let f = f3();
        let a = torsion_alpha(&Poly::t(&f)).unwrap();
        assert_eq!(a.len(), 2);
        assert!(a[0].is_one());
        assert_eq!(a[1].to_text(), "1/T");
        let p = parse_poly(&f, "T^2+1").unwrap();
        let a = torsion_alpha(&p).unwrap();
        assert_eq!(a.len(), 3);
        assert_eq!(a[2], Scalar::new(Poly::one(&f), p).unwrap());
        assert!(torsion_alpha(&parse_poly(&f, "T^2+2").unwrap()).is_err());
    }

    #[test]
    fn goss_q3_small() {
        let f = f3();
        let t = goss_table_for(&Lattice::Torsion(Poly::t(&f)), &f, 8).unwrap();
        for i in 1..=3 {
            assert_eq!(t.get(i), &XPoly::monomial(Scalar::one(&f), i));
        }
        assert_eq!(t.get(4).to_text(), "X^4 + (1/T)X^2");
        assert_eq!(t.get(6).to_text(), "X^6");
        assert_eq!(t.get(7).to_text(), "X^7 + (1/T)X^5 + (1/T^2)X^3");
    }

    #[test]
    fn u_scale_t() {
        let f = f3();
        let s = u_scale(&Poly::t(&f), 10).unwrap();
        let c: Vec<String> = s.coeffs().iter().map(|(i, c)| format!("{i}:{c}")).collect();
        assert_eq!(c, vec!["3:1", "5:2*T", "7:T^2", "9:2*T^3"]);
        assert!(u_scale(&Poly::one(&f), 10).unwrap().agrees_with(&USeries::u(&f, 10)));
    }

    #[test]
    fn goss_eval_example() {
        let f = f3();
        let t = goss_table_for(&Lattice::Torsion(Poly::t(&f)), &f, 4).unwrap();
        let tu = USeries::u(&f, 20).scale_poly(&Poly::t(&f));
        let r = goss_eval(t.get(4), &tu, 20).unwrap();
        let c: Vec<String> = r.coeffs().iter().map(|(i, c)| format!("{i}:{c}")).collect();
        assert_eq!(c, vec!["2:T", "4:T^4"]);
    }
}
