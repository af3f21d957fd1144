//! Named verification suites. Each returns a list of pass/fail checks labelled
//! with the statement being verified; the CLI, the Python bindings and the
//! acceptance tests all run these.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{binomial_mod_p, parse_poly, Field, FieldSpec, Poly, Scalar};
use crate::carlitz;
use crate::error::{Error, Result};
use crate::forms;
use crate::hecke::{self, PrimeP};
use crate::level::{self, Atom, Base, FormExpr, FormRegistry, TraceValue, Verdict};
use crate::spectral;
use crate::useries::USeries;

pub const SUITES: &[&str] = &[
    "gen-expansions",
    "goss-toy",
    "eigen-h",
    "eigen-delta",
    "eigen-EP",
    "dim1",
    "dim2",
    "trace-identities",
    "commute",
    "involution",
    "counterexample",
    "frobenius",
    "newform-stability",
    "exple2",
    "simdiag",
    "dimension-formula",
    "oracle-lowcoeff",
];

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub p: u32,
    pub r: u32,
    pub modulus: Vec<u32>,
    pub q: u32,
    pub prec: Option<usize>,
    pub seed: u64,
    /// suite parameters such as P, P1, P2, Q, kmax, count
    pub params: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(spec: &FieldSpec) -> RunConfig {
        RunConfig { p: spec.p, r: spec.r, modulus: spec.modulus.clone(), q: spec.q() as u32, prec: None, seed: 0, params: BTreeMap::new() }
    }

    pub fn q(q: u32) -> Result<RunConfig> {
        let (p, r) = prime_power(q)?;
        Ok(RunConfig::new(&FieldSpec::new(p, r)))
    }

    pub fn with(mut self, key: &str, value: &str) -> RunConfig {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn with_prec(mut self, prec: usize) -> RunConfig {
        self.prec = Some(prec);
        self
    }

    pub fn field(&self) -> Result<Arc<Field>> {
        Field::new(FieldSpec::with_modulus(self.p, self.r, self.modulus.clone()))
    }
}

/// q = p^r with p an odd prime.
pub fn prime_power(q: u32) -> Result<(u32, u32)> {
    if q < 3 {
        return Err(Error::InvalidField(format!("q = {q}")));
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d)).expect("q ≥ 2");
    let mut r = 0;
    let mut x = q;
    while x.is_multiple_of(p) {
        x /= p;
        r += 1;
    }
    if x != 1 {
        return Err(Error::InvalidField(format!("{q} is not a prime power")));
    }
    Ok((p, r))
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Check {
    pub name: String,
    pub paper_label: String,
    pub verdict: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    pub certified_prec: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.verdict == "pass"
    }

    fn new(name: impl Into<String>, label: &str, ok: bool) -> Check {
        Check {
            name: name.into(),
            paper_label: label.to_string(),
            verdict: if ok { "pass" } else { "fail" }.into(),
            witness: None,
            certified_prec: None,
            detail: None,
        }
    }

    fn prec(mut self, p: usize) -> Check {
        self.certified_prec = Some(p);
        self
    }

    fn witness(mut self, w: impl Into<String>) -> Check {
        self.witness = Some(w.into());
        self
    }

    fn detail(mut self, d: impl Into<String>) -> Check {
        self.detail = Some(d.into());
        self
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub config: RunConfig,
    pub suite: String,
    pub checks: Vec<Check>,
    pub elapsed_ms: u64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("suite {} (q = {})\n", self.suite, self.config.q);
        for c in &self.checks {
            s.push_str(&format!("  [{}] {}", c.verdict, c.name));
            if let Some(w) = &c.witness {
                s.push_str(&format!("  witness {w}"));
            }
            if let Some(d) = &c.detail {
                s.push_str(&format!("  {d}"));
            }
            s.push('\n');
        }
        let n = self.checks.iter().filter(|c| c.passed()).count();
        s.push_str(&format!("{}/{} passed\n", n, self.checks.len()));
        s
    }
}

pub fn run_suite(name: &str, cfg: &RunConfig) -> Result<Report> {
    let start = Instant::now();
    let ctx = Ctx { field: cfg.field()?, cfg };
    let mut checks = match name {
        "gen-expansions" => gen_expansions(&ctx)?,
        "goss-toy" => goss_toy(&ctx)?,
        "eigen-h" => eigen_level_one(&ctx, false)?,
        "eigen-delta" => eigen_level_one(&ctx, true)?,
        "eigen-EP" => eigen_ep(&ctx)?,
        "dim1" => dim_harness(&ctx, 1)?,
        "dim2" => dim_harness(&ctx, 2)?,
        "trace-identities" => trace_identities(&ctx)?,
        "commute" => commute(&ctx)?,
        "involution" => involution(&ctx)?,
        "counterexample" => counterexample(&ctx)?,
        "frobenius" => frobenius(&ctx)?,
        "newform-stability" => newform_stability(&ctx)?,
        "exple2" => exple2(&ctx)?,
        "simdiag" => simdiag(&ctx)?,
        "dimension-formula" => dimension_formula(&ctx)?,
        "oracle-lowcoeff" => oracle_lowcoeff(&ctx)?,
        _ => return Err(Error::Invalid(format!("unknown suite {name}; known: {}", SUITES.join(", ")))),
    };
    checks.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(Report { config: cfg.clone(), suite: name.to_string(), checks, elapsed_ms: start.elapsed().as_millis() as u64 })
}

struct Ctx<'a> {
    field: Arc<Field>,
    cfg: &'a RunConfig,
}

impl Ctx<'_> {
    fn q(&self) -> usize {
        self.field.q() as usize
    }

    fn poly(&self, key: &str, default: &str) -> Result<Poly> {
        let s = self.cfg.params.get(key).map(|s| s.as_str()).unwrap_or(default);
        parse_poly(&self.field, s)
    }

    fn polys(&self, key: &str, default: &[&str]) -> Result<Vec<Poly>> {
        match self.cfg.params.get(key) {
            Some(s) => s.split(',').map(|x| parse_poly(&self.field, x.trim())).collect(),
            None => default.iter().map(|x| parse_poly(&self.field, x)).collect(),
        }
    }

    fn int(&self, key: &str, default: i64) -> Result<i64> {
        match self.cfg.params.get(key) {
            Some(s) => s.trim().parse().map_err(|_| Error::Invalid(format!("--{key} expects an integer, got {s}"))),
            None => Ok(default),
        }
    }

    fn prec(&self, default: usize) -> usize {
        self.cfg.prec.unwrap_or(default)
    }
}

fn compare_check(name: impl Into<String>, label: &str, a: &USeries, b: &USeries) -> Check {
    let c = a.compare(b);
    let ch = Check::new(name, label, c.equal).prec(c.range);
    match c.first_difference {
        Some(i) => ch.witness(format!("u^{i}")),
        None => ch,
    }
}

/// Every coefficient below `bound` equals the listed value, or zero if unlisted.
fn printed_check(name: impl Into<String>, label: &str, s: &USeries, terms: &[(usize, Scalar)], bound: usize) -> Check {
    let field = s.field().clone();
    let bound = bound.min(s.prec());
    let want: BTreeMap<usize, Scalar> = terms.iter().filter(|(i, c)| *i < bound && !c.is_zero()).cloned().collect();
    let mut bad = None;
    for i in 0..bound {
        let got = s.get(i).cloned().unwrap_or_else(|| Scalar::zero(&field));
        let w = want.get(&i).cloned().unwrap_or_else(|| Scalar::zero(&field));
        if got != w {
            bad = Some((i, got, w));
            break;
        }
    }
    match bad {
        None => Check::new(name, label, true).prec(bound),
        Some((i, got, w)) => Check::new(name, label, false).prec(bound).witness(format!("u^{i}")).detail(format!("got {got}, expected {w}")),
    }
}

fn gen_expansions(ctx: &Ctx) -> Result<Vec<Check>> {
    let f = &ctx.field;
    let q = ctx.q();
    let m = q - 1;
    let pf = f.p();
    let need = m * (q * q - q + 1) + 2;
    let prec = ctx.prec(need).max(need);
    let g1 = forms::build_g1(f, prec)?;
    let h = forms::build_h(f, prec)?;
    let d = forms::build_delta(f, prec)?;
    let b1 = Scalar::from_poly(Poly::bracket(f, 1));
    let one = Scalar::one(f);
    let neg = |s: &Scalar| -s;
    let sgn = |e: usize| if e.is_multiple_of(2) { one.clone() } else { neg(&one) };
    let mut out = Vec::new();
    out.push(printed_check(
        "g1",
        "g1 = 1 - [1]u^{q-1} - [1]u^{(q-1)(q^2-q+1)} + ...",
        &g1,
        &[(0, one.clone()), (m, neg(&b1)), (m * (q * q - q + 1), neg(&b1))],
        m * (q * q - q + 1) + 1,
    ));
    out.push(printed_check(
        "h",
        "h = -u - u^{1+(q-1)^2} + [1]u^{1+q(q-1)} - u^{1+(2q-2)(q-1)} + ...",
        &h,
        &[(1, neg(&one)), (1 + m * m, neg(&one)), (1 + q * m, b1.clone()), (1 + 2 * m * m, neg(&one))],
        2 + 2 * m * m,
    ));
    out.push(printed_check(
        "Delta",
        "Delta = -u^{q-1} + u^{q(q-1)} - [1]u^{(q+1)(q-1)} + O(u^{(q^2-q+1)(q-1)})",
        &d,
        &[(m, neg(&one)), (q * m, one.clone()), ((q + 1) * m, neg(&b1))],
        (q * q - q + 1) * m,
    ));
    for l in 1..=q.saturating_sub(2) {
        let hl = h.pow_capped(l as u64, prec)?;
        let lf = Scalar::from_int(f, l as i64);
        out.push(printed_check(
            format!("h^{l}"),
            "h^l = (-1)^l u^l + (-1)^l l u^{(q-1)^2+l} + (-1)^{l-1} l [1] u^{q(q-1)+l} + O(u^{(l+q)(q-1)+l})",
            &hl,
            &[(l, sgn(l)), (m * m + l, &sgn(l) * &lf), (q * m + l, &(&sgn(l + 1) * &lf) * &b1)],
            (l + q) * m + l,
        ));
        let dhl = d.mul_capped(&hl, prec)?;
        let one_minus_l = Scalar::from_int(f, 1 - l as i64);
        out.push(printed_check(
            format!("Delta*h^{l}"),
            "Delta h^l = (-1)^{l+1}u^{q-1+l} + (-1)^l(1-l)u^{q(q-1)+l} + (-1)^l(l-1)[1]u^{q^2-1+l} + O(u^{(l+q)(q-1)+l})",
            &dhl,
            &[(m + l, sgn(l + 1)), (q * m + l, &sgn(l) * &one_minus_l), (q * q - 1 + l, &(&sgn(l) * &neg(&one_minus_l)) * &b1)],
            (l + q) * m + l,
        ));
    }
    for x in 1..=2 * q {
        let gx = g1.pow_capped(x as u64, prec)?;
        let terms: Vec<(usize, Scalar)> = (0..=x)
            .map(|i| (i * m, (&sgn(i) * &b1.pow(i as i64).expect("power")).scale_fq(binomial_mod_p(x as u64, i as u64, pf))))
            .collect();
        out.push(printed_check(format!("g1^{x}"), "g1^x = sum_i C(x,i)(-1)^i [1]^i u^{i(q-1)} + O(u^{(q-1)(q^2-q+1)})", &gx, &terms, m * (q * q - q + 1)));
        let gxd = gx.mul_capped(&d, prec)?;
        let terms: Vec<(usize, Scalar)> = (0..=x)
            .map(|i| ((i + 1) * m, (&sgn(i + 1) * &b1.pow(i as i64).expect("power")).scale_fq(binomial_mod_p(x as u64, i as u64, pf))))
            .collect();
        out.push(printed_check(format!("g1^{x}*Delta"), "g1^x Delta = sum_i C(x,i)(-1)^{i+1}[1]^i u^{(i+1)(q-1)} + O(u^{q(q-1)})", &gxd, &terms, q * m));
        for l in 1..=q.saturating_sub(2) {
            let gxh = gx.mul_capped(&h.pow_capped(l as u64, prec)?, prec)?;
            let terms: Vec<(usize, Scalar)> = (0..=x)
                .map(|i| (i * m + l, (&sgn(i + l) * &b1.pow(i as i64).expect("power")).scale_fq(binomial_mod_p(x as u64, i as u64, pf))))
                .collect();
            out.push(printed_check(
                format!("g1^{x}*h^{l}"),
                "g1^x h^l = (-1)^l sum_i (-1)^i C(x,i)[1]^i u^{i(q-1)+l} + O(u^{(q-1)^2+l})",
                &gxh,
                &terms,
                m * m + l,
            ));
        }
    }
    // the product route and the A-expansion route agree
    let da = forms::build_delta_aexpansion(f, prec)?;
    out.push(compare_check("Delta-vs-A-expansion", "Delta = -sum_{a monic} a^{q(q-1)} u_a^{q-1}", &d, &da));
    let ha = forms::build_h_aexpansion(f, prec)?;
    out.push(compare_check("h-vs-A-expansion", "h = -sum_{a monic} a^q u_a", &h, &ha));
    Ok(out)
}

fn goss_toy(ctx: &Ctx) -> Result<Vec<Check>> {
    let f = &ctx.field;
    let q = ctx.q();
    let kmax = ctx.int("kmax", (q * q + q) as i64)? as usize;
    let table = carlitz::goss_table(&carlitz::toy_alpha(f), kmax)?;
    let mut out = Vec::new();
    for k in 1..=kmax {
        let (lhs, rhs) = carlitz::toy_lattice_sides(f, &table, k)?;
        let ch = Check::new(format!("k={k:03}"), "sum_{c in F_q} (z-c)^{-k} = G_k(1/(z-z^q))", lhs == rhs);
        out.push(if lhs == rhs { ch } else { ch.detail(format!("lhs {lhs}, rhs {rhs}")) });
    }
    Ok(out)
}

fn eigen_level_one(ctx: &Ctx, delta: bool) -> Result<Vec<Check>> {
    let f = &ctx.field;
    let q = ctx.q();
    let out_prec = ctx.prec(120);
    let primes = ctx.polys("P", &["T", "T+1", "T^2+1"])?;
    let dmax = primes.iter().map(|p| p.deg()).max().unwrap_or(1) as u32;
    let big = out_prec * q.pow(dmax);
    let (g, name, label) = if delta {
        (forms::build_delta(f, big)?, "Delta", "T_P Delta = P^{q-1} Delta")
    } else {
        (forms::build_h(f, big)?, "h", "T_P h = P h")
    };
    let mut out = Vec::new();
    for p in primes {
        let pp = PrimeP::new(&p)?;
        let t = hecke::op_t(&g, &pp, out_prec)?;
        let lam = if delta { p.pow(q as u64 - 1) } else { p.clone() };
        out.push(compare_check(format!("T_{{{p}}} {name}"), label, &t, &g.scale_poly(&lam).truncate(out_prec)));
    }
    Ok(out)
}

fn eigen_ep(ctx: &Ctx) -> Result<Vec<Check>> {
    let q = ctx.q();
    let out_prec = ctx.prec(120);
    let pairs: Vec<(Poly, Poly)> = if ctx.cfg.params.contains_key("P1") || ctx.cfg.params.contains_key("P2") {
        vec![(ctx.poly("P1", "T+1")?, ctx.poly("P2", "T")?)]
    } else {
        vec![(ctx.poly("P1", "T+1")?, ctx.poly("P2", "T")?), (ctx.poly("P1", "T")?, ctx.poly("P2", "T+1")?)]
    };
    let mut out = Vec::new();
    for (p1, p2) in &pairs {
        let pp = PrimeP::new(p1)?;
        let e = forms::build_e_p(p2, pp.needed_precision(out_prec))?;
        let t = hecke::op_t(&e, &pp, out_prec)?;
        out.push(compare_check(format!("T_{{{p1}}} E_{{{p2}}}"), "T_{P1} E_{P2} = P1 E_{P2}", &t, &e.scale_poly(p1).truncate(out_prec)));
    }
    let mut us: Vec<Poly> = pairs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
    us.sort();
    us.dedup();
    for p in us {
        let pp = PrimeP::new(&p)?;
        let e = forms::build_e_p(&p, out_prec * q.pow(p.deg() as u32))?;
        let u = hecke::op_u(&e, &pp, out_prec)?;
        out.push(compare_check(format!("U_{{{p}}} E_{{{p}}}"), "U_P E_P = P E_P", &u, &e.scale_poly(&p).truncate(out_prec)));
    }
    Ok(out)
}

fn dim_harness(ctx: &Ctx, dim: usize) -> Result<Vec<Check>> {
    let f = &ctx.field;
    let q = ctx.q();
    let p = ctx.poly("P", "T")?;
    let pp = PrimeP::new(&p)?;
    let kmax = ctx.int("kmax", 60)?;
    let mut cases = Vec::new();
    for k in 1..=kmax {
        for l in 0..(q as u32 - 1) {
            let b = spectral::enumerate_basis(q, k, l, true);
            if b.dim() == dim {
                cases.push(b);
            }
        }
    }
    let need = cases.iter().map(|b| pp.needed_precision(spectral::solve_precision(b))).max().unwrap_or(1);
    let gens = spectral::Generators::new(f, need)?;
    let mut out = Vec::new();
    for b in &cases {
        let r = spectral::hecke_matrix_with(f, &pp, b, &gens)?;
        let v = &r.verdicts;
        let name = format!("k={:03} l={}", b.k, b.l);
        let detail = format!("matrix {:?} char {}", r.matrix, r.char_poly);
        let ok = if dim == 1 {
            v.kernel_trivial && v.no_pm_pk2_eigenvalue && v.diagonalizable && v.id_minus_pkt2_bijective
        } else {
            v.no_pm_pk2_eigenvalue && v.id_minus_pkt2_bijective
        };
        let label = if dim == 1 {
            "dim 1: ker T_P = 0, no eigenvalue +-P^{k/2}, T_P diagonalizable, Id - P^{-k}T_P^2 bijective"
        } else {
            "dim 2: no eigenvalue +-P^{k/2} and Id - P^{-k}T_P^2 bijective"
        };
        let consistent = v.no_pm_pk2_eigenvalue == v.id_minus_pkt2_bijective;
        out.push(Check::new(name.clone(), label, ok).prec(r.certified_prec).detail(detail));
        out.push(Check::new(format!("{name} bijective<=>no+-P^(k/2)"), "Id - P^{-k}T_P^2 bijective iff no eigenvalue +-P^{k/2}", consistent));
    }
    if dim == 2 && p.deg() == 1 {
        let k = ((2 * q + 1) * (q - 1) + q + 1) as i64;
        let b = spectral::enumerate_basis(q, k, 1, true);
        let need = pp.needed_precision(spectral::solve_precision(&b));
        let gens = spectral::Generators::new(f, need)?;
        let r = spectral::hecke_matrix_with(f, &pp, &b, &gens)?;
        let g_h = &r.images[0];
        let g_dh = &r.images[1];
        let pq = Scalar::from_poly(p.pow(q as u64));
        out.push(Check::new("a_{T(g1^{2q+1}h)}(1) = -P", "a_{T_P(g1^{2q+1}h)}(1) = -P", g_h.coeff(1)? == Scalar::from_poly(-&p)));
        out.push(Check::new("a_{T(g1^q Delta h)}(1) = 0", "a_{T_P(g1^q Delta h)}(1) = 0", g_dh.coeff(1)?.is_zero()));
        out.push(Check::new("a_{T(g1^q Delta h)}(q) = P^q", "a_{T_P(g1^q Delta h)}(q) = P^q", g_dh.coeff(q)? == pq));
    }
    if cases.is_empty() {
        out.push(Check::new("no cases", "vacuous", true));
    }
    Ok(out)
}

fn trace_identities(ctx: &Ctx) -> Result<Vec<Check>> {
    let f = &ctx.field;
    let prec = ctx.prec(40);
    let primes = ctx.polys("P", &["T", "T+1"])?;
    let mut reg = FormRegistry::seeded(f, &[])?;
    let dh = FormExpr::base(f, Base::Delta).mul(&FormExpr::base(f, Base::H));
    reg.register("Delta*h", dh);
    let mut out = Vec::new();
    for name in ["h", "Delta", "Delta*h"] {
        for p in &primes {
            let (a, b) = reg.register_delta_images(name, p)?;
            let phi = reg.get(name)?.clone();
            let d1 = reg.get(&a)?.clone();
            let dp = reg.get(&b)?.clone();
            let (k, l) = (phi.weight(), phi.ty() as i64);
            let tphi = reg.t_p(&phi, p)?.ok_or_else(|| Error::Invalid("T_P did not close".into()))?;
            let pl = |e: i64| Scalar::from_poly(p.clone()).pow(e);
            let rhs = tphi.scale(&pl(l - k)?);
            let lhs = reg.trace_prime(&d1, p, prec)?;
            let ok = matches!(&lhs, TraceValue::Expr(e) if *e == rhs);
            out.push(Check::new(format!("Tr'(delta_1 {name}) P={p}"), "Tr'(delta_1 phi) = P^{l-k} T_P phi", ok).detail(rhs.to_text()));
            let u = reg.u_p(&d1, p)?.ok_or_else(|| Error::Invalid("U_P did not close".into()))?;
            let sum = u.add(&dp.scale(&pl(k - l)?))?;
            let ok = sum == tphi.clone().at_level(&(phi.level() * p))?;
            out.push(Check::new(format!("T_P {name} = U_P + P^(k-l) delta_P, P={p}"), "T_P phi = U_P phi + P^{k-l} delta_P phi", ok));
            // the same identity on u-series
            let pp = PrimeP::new(p)?;
            let big = pp.needed_precision(prec);
            let phis = reg.series(&phi, big)?;
            let ts = hecke::op_t(&phis, &pp, prec)?;
            let us = hecke::op_u(&phis.clone().with_level(p.clone()), &pp, prec)?;
            let ds = reg.series(&dp, prec)?.scale(&pl(k - l)?);
            out.push(compare_check(format!("series T_P {name} = U_P + P^(k-l) delta_P, P={p}"), "T_P phi = U_P phi + P^{k-l} delta_P phi", &ts, &us.add(&ds)?));
        }
    }
    Ok(out)
}

/// Random combinations of atoms whose U_P images close symbolically: dilated
/// level-one monomials, and dilated E_Q in weight 2.
fn random_forms(reg: &FormRegistry, n: &Poly, primes: &[Poly], count: usize, seed: u64) -> Result<Vec<FormExpr>> {
    let f = reg.field().clone();
    let q = f.q() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let divisors: Vec<Poly> = {
        let mut ds = vec![Poly::one(&f)];
        for p in primes {
            let extra: Vec<Poly> = ds.iter().map(|d| d * p).collect();
            ds.extend(extra);
        }
        ds
    };
    let gradings: Vec<(i64, u32)> = vec![(2, 1), ((q + 1) as i64, 1), ((q * q - 1) as i64, 0), ((q * q + q) as i64, 1), (2 * (q * q - 1) as i64, 0), ((q - 1 + q + 1) as i64, 1)];
    let mut out = Vec::new();
    while out.len() < count {
        let (k, l) = gradings[rng.gen_range(0..gradings.len())];
        let mut atoms: Vec<Atom> = Vec::new();
        if k == 2 {
            for qq in primes {
                for d in &divisors {
                    if (d * qq).divides(n) {
                        atoms.push(Atom::letter(d.clone(), Base::Eis(qq.clone())));
                    }
                }
            }
        } else {
            let basis = spectral::enumerate_basis(q, k, l, false);
            for &(a, b) in &basis.exps {
                let y = Atom::level_one(&f, &[(Base::G1, a as u64), (Base::Delta, b as u64), (Base::H, l as u64)]);
                for d in &divisors {
                    atoms.push(FormExpr::atom(&f, y.clone()).dilate(d).terms().keys().next().expect("atom").clone());
                }
            }
        }
        let mut e = FormExpr::zero(&f, k, l, n.clone());
        for a in atoms {
            if rng.gen_bool(0.6) {
                let c = Poly::from_coeffs(&f, (0..rng.gen_range(1..3)).map(|_| rng.gen_range(0..f.q())).collect());
                e = e.add(&FormExpr::atom(&f, a).scale(&Scalar::from_poly(c)))?;
            }
        }
        if !e.is_zero() {
            out.push(e.at_level(n)?);
        }
    }
    Ok(out)
}

fn commute(ctx: &Ctx) -> Result<Vec<Check>> {
    let f = &ctx.field;
    let p1 = ctx.poly("P1", "T")?;
    let p2 = ctx.poly("P2", "T+1")?;
    let count = ctx.int("count", 20)? as usize;
    let prec = ctx.prec(80);
    let reg = FormRegistry::seeded(f, &[p1.clone(), p2.clone()])?;
    let pp1 = PrimeP::new(&p1)?;
    let pp2 = PrimeP::new(&p2)?;
    let n = &p1 * &p2;
    let mut out = Vec::new();
    let forms_n = random_forms(&reg, &n, &[p1.clone(), p2.clone()], count, ctx.cfg.seed)?;
    for (i, e) in forms_n.iter().enumerate() {
        let tag = format!("form{i:02} (k={}, l={})", e.weight(), e.ty());
        // U_{P1} U_{P2} = U_{P2} U_{P1}
        let big = pp1.needed_precision(pp2.needed_precision(prec));
        let s = reg.series(e, big)?;
        let a = hecke::op_u(&hecke::op_u(&s, &pp2, pp1.needed_precision(prec))?, &pp1, prec)?;
        let b = hecke::op_u(&hecke::op_u(&s, &pp1, pp2.needed_precision(prec))?, &pp2, prec)?;
        out.push(compare_check(format!("{tag} U1U2=U2U1"), "U_{P1}U_{P2} = U_{P2}U_{P1}", &a, &b));
        // U_{P1}(f|W_{P2}) = (U_{P1} f)|W_{P2}
        let w = reg.w_action(e, &p2)?;
        let lhs = reg.u_p_series(&w, &p1, prec)?;
        let u = reg.u_p(e, &p1)?.ok_or_else(|| Error::Invalid("U_P did not close".into()))?;
        let rhs = reg.series(&reg.w_action(&u, &p2)?, prec)?;
        out.push(compare_check(format!("{tag} U1(f|W2)=(U1 f)|W2"), "U_{P1}(f|W_{P2}) = (U_{P1}f)|W_{P2}", &lhs, &rhs));
        // the symbolic U agrees with the series U
        let su = reg.series(&u, prec)?;
        let tu = reg.u_p_series(e, &p1, prec)?;
        out.push(compare_check(format!("{tag} symbolic U1 = series U1"), "U_P f = sum_{deg Q < deg P} f((z+Q)/P)", &su, &tu));
        // involution scalar
        let ww = reg.w_action(&reg.w_action(e, &p2)?, &p2)?;
        let sc = Scalar::from_poly(p2.clone()).pow(2 * e.ty() as i64 - e.weight())?;
        out.push(Check::new(format!("{tag} W2W2 = P^(2l-k)"), "f|W_P|W_P = P^{2l-k} f", ww == e.scale(&sc)));
    }
    // U_{P1} T_{P2} = T_{P2} U_{P1} at level P1
    let forms_p1 = random_forms(&reg, &p1, std::slice::from_ref(&p1), count, ctx.cfg.seed ^ 0x5eed)?;
    for (i, e) in forms_p1.iter().enumerate() {
        let tag = format!("level-P1 form{i:02} (k={}, l={})", e.weight(), e.ty());
        let big = pp1.needed_precision(pp2.needed_precision(prec));
        let s = reg.series(e, big)?;
        let a = hecke::op_u(&hecke::op_t(&s, &pp2, pp1.needed_precision(prec))?, &pp1, prec)?;
        let b = hecke::op_t(&hecke::op_u(&s, &pp1, pp2.needed_precision(prec))?, &pp2, prec)?;
        out.push(compare_check(format!("{tag} U1T2=T2U1"), "U_{P1}T_{P2} = T_{P2}U_{P1}", &a, &b));
    }
    Ok(out)
}

fn involution(ctx: &Ctx) -> Result<Vec<Check>> {
    let f = &ctx.field;
    let p1 = ctx.poly("P1", "T")?;
    let p2 = ctx.poly("P2", "T+1")?;
    let count = ctx.int("count", 20)? as usize;
    let reg = FormRegistry::seeded(f, &[p1.clone(), p2.clone()])?;
    let n = &p1 * &p2;
    let mut out = Vec::new();
    for (i, e) in random_forms(&reg, &n, &[p1.clone(), p2.clone()], count, ctx.cfg.seed)?.iter().enumerate() {
        let tag = format!("form{i:02} (k={}, l={})", e.weight(), e.ty());
        for p in [&p1, &p2] {
            let ww = reg.w_action(&reg.w_action(e, p)?, p)?;
            let sc = Scalar::from_poly(p.clone()).pow(2 * e.ty() as i64 - e.weight())?;
            out.push(Check::new(format!("{tag} W_{{{p}}}^2"), "f|W_P|W_P = P^{2l-k} f", ww == e.scale(&sc)));
        }
        let a = reg.w_action(&reg.w_action(e, &p1)?, &p2)?;
        let b = reg.w_action(&reg.w_action(e, &p2)?, &p1)?;
        out.push(Check::new(format!("{tag} W1W2=W2W1"), "W_{P1}W_{P2} = W_{P2}W_{P1}", a == b));
    }
    // the α = 1 rule on the level-T generators
    let t = Poly::t(f);
    let dw = reg.get("Delta_W")?;
    let dt = reg.get("Delta_T")?;
    out.push(Check::new("Delta_W|W_T = -T Delta_T", "Delta_T = -T^{-1} Delta_W|W_T", reg.w_action(dw, &t)? == dt.scale(&-&Scalar::t(f))));
    let et = FormExpr::base(f, Base::Eis(t.clone()));
    out.push(Check::new("E_T|W_T = -E_T", "E_T|W_T = -E_T", reg.w_action(&et, &t)? == et.scale(&Scalar::from_int(f, -1))));
    Ok(out)
}

fn new_old_checks(reg: &FormRegistry, tag: &str, v: &FormExpr, p: &Poly, prec: usize) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let tr = reg.trace(v, p, prec)?;
    let trp = reg.trace_prime(v, p, prec)?;
    out.push(Check::new(format!("{tag}: Tr = 0"), "Tr(E_Q - delta_P E_Q) = 0", tr.as_expr().map(|e| e.is_zero()).unwrap_or(false)));
    out.push(Check::new(format!("{tag}: Tr' = 0"), "Tr((E_Q - delta_P E_Q)|W_P) = 0", trp.as_expr().map(|e| e.is_zero()).unwrap_or(false)));
    let pn = reg.is_p_new(v, p, prec)?;
    out.push(Check::new(format!("{tag}: p-new"), "E_Q - delta_P E_Q is P-new", pn == Verdict::YesExact).detail(pn.label()));
    let po = reg.is_p_old(v, p, prec)?;
    out.push(Check::new(format!("{tag}: p-old"), "E_Q - delta_P E_Q is P-old", po == Verdict::YesExact).detail(po.label()));
    let s = reg.series(v, prec)?;
    out.push(Check::new(format!("{tag}: nonzero"), "E_Q - delta_P E_Q != 0", !s.is_zero_to_prec()).prec(prec));
    let nv = reg.is_in_new(v, prec)?;
    out.push(Check::new(format!("{tag}: in new"), "old and new intersect at level PQ", nv == Verdict::YesExact).detail(nv.label()));
    let ov = reg.is_in_old(v, prec)?;
    out.push(Check::new(format!("{tag}: in old"), "old and new intersect at level PQ", ov == Verdict::YesExact).detail(ov.label()));
    Ok(out)
}

fn counterexample(ctx: &Ctx) -> Result<Vec<Check>> {
    let f = &ctx.field;
    let q = ctx.q();
    let p = ctx.poly("P", "T+1")?;
    let qq = ctx.poly("Q", "T")?;
    let prec = ctx.prec(100);
    let reg = FormRegistry::seeded(f, &[p.clone(), qq.clone()])?;
    let n = &p * &qq;
    let eq = FormExpr::base(f, Base::Eis(qq.monic()));
    let v = eq.sub(&eq.delta_p(&p)?)?.at_level(&n)?;
    let mut out = new_old_checks(&reg, "E_Q - delta_P E_Q", &v, &p, prec)?;
    let eqq = eq.frobenius(1);
    let pq1 = Scalar::from_poly(p.pow(q as u64 - 1));
    let vq = eqq.sub(&eqq.delta_p(&p)?.scale(&pq1))?.at_level(&n)?;
    out.extend(new_old_checks(&reg, "E_Q^q - P^(q-1) delta_P E_Q^q", &vq, &p, prec)?);
    out.push(Check::new("Frobenius variant = (E_Q - delta_P E_Q)^q", "f^q at weight 2q", vq == v.frobenius(1)));
    // E_P is P-new at level P but not P-old
    let ep = FormExpr::base(f, Base::Eis(p.monic()));
    let pn = reg.is_p_new(&ep, &p, prec)?;
    out.push(Check::new("E_P: p-new", "M_{2,1}(GL_2(A)) = 0", pn == Verdict::YesExact).detail(pn.label()));
    let po = reg.is_p_old(&ep, &p, prec)?;
    out.push(Check::new("E_P: not p-old", "M_{2,1}(GL_2(A)) = 0", matches!(po, Verdict::No { .. })).detail(po.label()));
    // δ_1 h at level PQ is old but not new
    let h = FormExpr::base(f, Base::H).at_level(&n)?;
    let hv = reg.is_in_new(&h, prec)?;
    out.push(Check::new("delta_1 h: not new", "Tr'(delta_1 h) = P^{l-k+1} h != 0", matches!(hv, Verdict::No { .. })).detail(hv.label()));
    let ho = reg.is_in_old(&h, prec)?;
    out.push(Check::new("delta_1 h: old", "delta_1 h is old", ho == Verdict::YesExact));
    Ok(out)
}

fn frobenius(ctx: &Ctx) -> Result<Vec<Check>> {
    let f = &ctx.field;
    let p = ctx.poly("P", "T+1")?;
    let p2 = ctx.poly("P2", "T")?;
    let out_prec = ctx.prec(60);
    let pp = PrimeP::new(&p)?;
    let base_prec = pp.needed_precision(out_prec);
    let mut out = Vec::new();
    let cases = [
        ("h", forms::build_h(f, base_prec)?),
        ("Delta", forms::build_delta(f, base_prec)?),
        ("E_P2", forms::build_e_p(&p2, base_prec)?),
    ];
    for (name, g) in cases {
        let c = hecke::frobenius_commutation(&g, &pp, 1, out_prec)?;
        let ch = Check::new(format!("T_P({name}^q) = (T_P {name})^q"), "T_P(f^{q^n}) = (T_P f)^{q^n}", c.equal).prec(c.range);
        out.push(match c.first_difference {
            Some(i) => ch.witness(format!("u^{i}")),
            None => ch,
        });
    }
    Ok(out)
}

fn new_vectors(f: &Arc<Field>, p1: &Poly, p2: &Poly) -> Result<Vec<FormExpr>> {
    let n = p1 * p2;
    let e1 = FormExpr::base(f, Base::Eis(p1.monic()));
    let e2 = FormExpr::base(f, Base::Eis(p2.monic()));
    Ok(vec![e1.sub(&e1.delta_p(p2)?)?.at_level(&n)?, e2.sub(&e2.delta_p(p1)?)?.at_level(&n)?])
}

fn newform_stability(ctx: &Ctx) -> Result<Vec<Check>> {
    let f = &ctx.field;
    let p1 = ctx.poly("P1", "T")?;
    let p2 = ctx.poly("P2", "T+1")?;
    let p3 = ctx.poly("P3", "T+2")?;
    let prec = ctx.prec(60);
    let reg = FormRegistry::seeded(f, &[p1.clone(), p2.clone()])?;
    let n = &p1 * &p2;
    let mut out = Vec::new();
    let mut vs = new_vectors(f, &p1, &p2)?;
    vs.extend(vs.clone().iter().map(|v| v.frobenius(1)));
    for (i, v) in vs.iter().enumerate() {
        let nv = reg.is_in_new(v, prec)?;
        out.push(Check::new(format!("v{i} new"), "constructible new vector", nv == Verdict::YesExact).detail(nv.label()));
        for p in [&p1, &p2] {
            let u = reg.u_p(v, p)?.ok_or_else(|| Error::Invalid("U_P did not close".into()))?;
            let nv = reg.is_in_new(&u, prec)?;
            out.push(Check::new(format!("U_{{{p}}} v{i} new"), "new space is invariant under the Hecke operators", nv == Verdict::YesExact).detail(nv.label()));
        }
        if !p3.divides(&n) {
            let t = reg.t_p(v, &p3)?.ok_or_else(|| Error::Invalid("T_P did not close".into()))?;
            let nv = reg.is_in_new(&t, prec)?;
            out.push(Check::new(format!("T_{{{p3}}} v{i} new"), "new space is invariant under the Hecke operators", nv == Verdict::YesExact).detail(nv.label()));
        }
    }
    // old vectors stay old
    let h = FormExpr::base(f, Base::H);
    let olds = [h.clone().at_level(&n)?, h.delta_p(&p1)?.at_level(&n)?, h.delta_p(&p2)?.at_level(&n)?];
    for (i, o) in olds.iter().enumerate() {
        for p in [&p1, &p2] {
            let u = reg.u_p(o, p)?.ok_or_else(|| Error::Invalid("U_P did not close".into()))?.at_level(&n)?;
            let ov = reg.is_in_old(&u, prec)?;
            out.push(Check::new(format!("U_{{{p}}} old{i} old"), "old space is invariant under the Hecke operators", ov == Verdict::YesExact).detail(ov.label()));
        }
    }
    Ok(out)
}

fn exple2(ctx: &Ctx) -> Result<Vec<Check>> {
    let f = &ctx.field;
    let primes = ctx.polys("P", &["T+1", "T+2"])?;
    let out_prec = ctx.prec(30);
    let reg = FormRegistry::seeded(f, &[Poly::t(f)])?;
    let et = reg.get("E_{T}")?.clone();
    let basis = [reg.get("Delta_T")?.mul(&et), reg.get("Delta_W")?.mul(&et)];
    let mut out = Vec::new();
    // h = -Δ_W E_T
    let hs = reg.series(&FormExpr::base(f, Base::H), out_prec)?;
    let hw = reg.series(&basis[1], out_prec)?.neg();
    out.push(compare_check("h = -Delta_W E_T", "h = -Delta_W E_T", &hs, &hw));
    for p in primes {
        let pp = PrimeP::new(&p)?;
        let big = pp.needed_precision(out_prec);
        let series: Vec<USeries> = basis.iter().map(|b| reg.series(b, big)).collect::<Result<_>>()?;
        let images: Vec<USeries> = series.iter().map(|s| hecke::op_t(s, &pp, out_prec)).collect::<Result<_>>()?;
        let trunc: Vec<USeries> = series.iter().map(|s| s.truncate(out_prec)).collect();
        let m = spectral::matrix_on_span(&trunc, &images, out_prec)?;
        let ps = Scalar::from_poly(p.clone());
        let ok = m.len() == 2 && (0..2).all(|i| (0..2).all(|j| m[i][j] == if i == j { ps.clone() } else { Scalar::zero(f) }));
        let txt: Vec<Vec<String>> = m.iter().map(|r| r.iter().map(|x| x.to_text()).collect()).collect();
        out.push(Check::new(format!("T_{{{p}}} on <Delta_T E_T, Delta_W E_T> = P Id"), "T_P = P on S_{q+1,1}(Gamma_0(T))", ok).prec(out_prec).detail(format!("{txt:?}")));
    }
    Ok(out)
}

fn simdiag(ctx: &Ctx) -> Result<Vec<Check>> {
    let f = &ctx.field;
    let p1 = ctx.poly("P1", "T")?;
    let p2 = ctx.poly("P2", "T+1")?;
    let prec = ctx.prec(60);
    let reg = FormRegistry::seeded(f, &[p1.clone(), p2.clone()])?;
    let vs = new_vectors(f, &p1, &p2)?;
    let mut out = Vec::new();
    let mut mats = Vec::new();
    for p in [&p1, &p2] {
        let mut m = vec![vec![Scalar::zero(f); vs.len()]; vs.len()];
        let mut closed = true;
        for (j, v) in vs.iter().enumerate() {
            let u = reg.u_p(v, p)?.ok_or_else(|| Error::Invalid("U_P did not close".into()))?;
            match level::express_symbolic(&vs, &u) {
                Some(c) => {
                    for (i, x) in c.into_iter().enumerate() {
                        m[i][j] = x;
                    }
                }
                None => closed = false,
            }
            let us = reg.series(&u, prec)?;
            let ts = reg.u_p_series(v, p, prec)?;
            out.push(compare_check(format!("U_{{{p}}} v{j}: symbolic = series"), "U_P f = sum_{deg Q < deg P} f((z+Q)/P)", &us, &ts));
        }
        out.push(Check::new(format!("U_{{{p}}} preserves span"), "new space is invariant under the Hecke operators", closed));
        let ps = Scalar::from_poly(p.clone());
        let diag_ok = (0..2).all(|i| (0..2).all(|j| m[i][j] == if i == j { ps.clone() } else { Scalar::zero(f) }));
        let txt: Vec<Vec<String>> = m.iter().map(|r| r.iter().map(|x| x.to_text()).collect()).collect();
        out.push(Check::new(format!("U_{{{p}}} eigenvalues"), "U_P acts on the new vectors by P", diag_ok).detail(format!("{txt:?}")));
        let mp = spectral::minpoly(f, &m);
        let dm = mp.derivative();
        out.push(Check::new(format!("U_{{{p}}} diagonalizable"), "U_{P1}, U_{P2} are simultaneously diagonalizable", !dm.is_zero() && mp.gcd(&dm).deg() == 0));
        mats.push(m);
    }
    let n = vs.len();
    let mul = |a: &spectral::Matrix, b: &spectral::Matrix| -> spectral::Matrix {
        (0..n).map(|i| (0..n).map(|j| (0..n).fold(Scalar::zero(f), |acc, k| &acc + &(&a[i][k] * &b[k][j]))).collect()).collect()
    };
    out.push(Check::new("U_P1 U_P2 = U_P2 U_P1 on span", "U_{P1}, U_{P2} are simultaneously diagonalizable", mul(&mats[0], &mats[1]) == mul(&mats[1], &mats[0])));
    Ok(out)
}

fn dimension_formula(ctx: &Ctx) -> Result<Vec<Check>> {
    let q = ctx.q();
    let kmax = ctx.int("kmax", 100)?;
    let mut bad = Vec::new();
    let mut n = 0;
    for k in 0..=kmax {
        for l in 0..(q as u32 - 1) {
            if (k - 2 * l as i64).rem_euclid(q as i64 - 1) != 0 {
                continue;
            }
            n += 1;
            let b = spectral::enumerate_basis(q, k, l, false);
            let formula = spectral::dimension_formula(q, k, l);
            if b.dim() != formula {
                bad.push(format!("k={k} l={l}: {} vs {formula}", b.dim()));
            }
            let orders = b.orders();
            if orders.windows(2).any(|w| w[0] >= w[1]) {
                bad.push(format!("k={k} l={l}: orders not increasing"));
            }
        }
    }
    let ch = Check::new(format!("monomial count, {n} cases with k <= {kmax}"), "dim M_{k,l}(GL_2(A)) = [(k-l(q+1))/(q^2-1)] + 1", bad.is_empty());
    Ok(vec![if bad.is_empty() { ch } else { ch.detail(bad.join("; ")) }])
}

fn oracle_lowcoeff(ctx: &Ctx) -> Result<Vec<Check>> {
    let f = &ctx.field;
    let q = ctx.q();
    let primes = ctx.polys("P", &["T", "T+1"])?;
    let kmax = ctx.int("kmax", 60)?;
    let mut out = Vec::new();
    for p in primes {
        let pp = PrimeP::new(&p)?;
        let mut cases = Vec::new();
        for k in 1..=kmax {
            for l in 0..(q as u32 - 1) {
                let b = spectral::enumerate_basis(q, k, l, true);
                if b.dim() == 1 {
                    cases.push(b);
                }
            }
        }
        let need = cases.iter().map(|b| pp.needed_precision(b.max_order() + q + 2)).max().unwrap_or(1);
        let gens = spectral::Generators::new(f, need)?;
        for b in cases {
            let (a, bb) = b.exps[0];
            let g = gens.monomial(a, bb, b.l)?;
            let idx = hecke::low_coeff_index(&g);
            let t = hecke::op_t(&g, &pp, idx + 1)?;
            let got = t.coeff(idx)?;
            let want = hecke::op_t_low_coeff_oracle(&g, &pp)?;
            let name = format!("P={p} k={:03} l={} {}", b.k, b.l, b.labels()[0]);
            out.push(Check::new(format!("{name} oracle"), "a_{T_P f}(l) = sum_j C(l-1,j) P^{l-j} a_f(j(q-1)+l)", got == want).detail(format!("a({idx}) = {got}")));
            if b.l >= 1 {
                let deg = got.degree().unwrap_or(-1);
                let ok = deg > 0 && 2 * deg < b.k;
                out.push(Check::new(format!("{name} degree"), "0 < deg a_{T_P(g1^x h^l)}(l) < k/2", ok).detail(format!("deg {deg}")));
            }
        }
    }
    Ok(out)
}
