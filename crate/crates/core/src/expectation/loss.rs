//! Loss expressions and their normalization to a linear form over products of
//! independent leaves.

use super::circuit::{truncate, Circuit, Compiled, Compiler, NodeId};
use super::error::{ExpectationError, ExpectationResult};
use crate::logic::{
    evaluate, flexible_refs, Binding, FactId, FactSet, Formula, Interpretation, LogicResult,
    RandomFact, Structure,
};
use std::collections::{BTreeMap, HashMap};

#[derive(Clone, Debug)]
pub enum LossExpression {
    Const(f64),
    /// A formula instance read as 0/1.
    Formula { formula: Formula, binding: Binding },
    /// The numeric value of a random fact.
    Fact(RandomFact),
    Sum(Vec<LossExpression>),
    Sub(Box<LossExpression>, Box<LossExpression>),
    Product(Vec<LossExpression>),
    Abs(Box<LossExpression>),
    Pow(Box<LossExpression>, u32),
}

impl LossExpression {
    pub fn formula(formula: Formula, binding: Binding) -> Self {
        LossExpression::Formula { formula, binding }
    }

    pub fn fact(symbol: &str, args: Vec<crate::logic::Value>) -> Self {
        LossExpression::Fact(RandomFact::new(symbol, args))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn sub(a: LossExpression, b: LossExpression) -> Self {
        LossExpression::Sub(Box::new(a), Box::new(b))
    }

    pub fn abs(a: LossExpression) -> Self {
        LossExpression::Abs(Box::new(a))
    }

    pub fn pow(a: LossExpression, n: u32) -> Self {
        LossExpression::Pow(Box::new(a), n)
    }

    pub fn scale(w: f64, a: LossExpression) -> Self {
        LossExpression::Product(vec![LossExpression::Const(w), a])
    }

    /// Direct evaluation at an interpretation, independent of the compiled
    /// form.
    pub fn evaluate(
        &self,
        structure: &Structure,
        facts: &FactSet,
        interp: &Interpretation,
    ) -> LogicResult<f64> {
        let rec = |e: &LossExpression| e.evaluate(structure, facts, interp);
        Ok(match self {
            LossExpression::Const(c) => *c,
            LossExpression::Formula { formula, binding } => {
                evaluate(formula, structure, facts, interp, binding)? as u8 as f64
            }
            LossExpression::Fact(f) => {
                let id = facts
                    .id(f)
                    .ok_or_else(|| crate::logic::LogicError::Incomplete(f.to_string()))?;
                interp.value(facts, id).as_f64().ok_or_else(|| {
                    crate::logic::LogicError::IllTyped(format!("{f} is not numeric"))
                })?
            }
            LossExpression::Sum(xs) => {
                let mut s = 0.0;
                for x in xs {
                    s += rec(x)?;
                }
                s
            }
            LossExpression::Sub(a, b) => rec(a)? - rec(b)?,
            LossExpression::Product(xs) => {
                let mut p = 1.0;
                for x in xs {
                    p *= rec(x)?;
                }
                p
            }
            LossExpression::Abs(a) => rec(a)?.abs(),
            LossExpression::Pow(a, n) => rec(a)?.powi(*n as i32),
        })
    }

    /// Top-level additive terms with their signs, flattening sums and
    /// differences.
    pub fn additive_terms(&self) -> Vec<(f64, &LossExpression)> {
        let mut out = Vec::new();
        fn walk<'e>(e: &'e LossExpression, sign: f64, out: &mut Vec<(f64, &'e LossExpression)>) {
            match e {
                LossExpression::Sum(xs) => xs.iter().for_each(|x| walk(x, sign, out)),
                LossExpression::Sub(a, b) => {
                    walk(a, sign, out);
                    walk(b, -sign, out);
                }
                other => out.push((sign, other)),
            }
        }
        walk(self, 1.0, &mut out);
        out
    }

    /// Flexible references in occurrence order: fact leaves and the flexible
    /// atoms of formula leaves.
    pub fn flexible_refs(&self, structure: &Structure) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_refs(structure, &mut out);
        out
    }

    fn collect_refs(&self, structure: &Structure, out: &mut Vec<String>) {
        match self {
            LossExpression::Const(_) => {}
            LossExpression::Fact(f) => out.push(f.to_string()),
            LossExpression::Formula { formula, binding } => {
                formula.for_each_atom(&mut |a| {
                    for r in flexible_refs(a, structure) {
                        let mut r = r;
                        for (name, v) in binding.iter() {
                            r = substitute_var(&r, name, &v.to_string());
                        }
                        out.push(r);
                    }
                })
            }
            LossExpression::Sum(xs) | LossExpression::Product(xs) => {
                xs.iter().for_each(|x| x.collect_refs(structure, out))
            }
            LossExpression::Sub(a, b) => {
                a.collect_refs(structure, out);
                b.collect_refs(structure, out);
            }
            LossExpression::Abs(a) => a.collect_refs(structure, out),
            LossExpression::Pow(a, n) => {
                for _ in 0..*n {
                    a.collect_refs(structure, out);
                }
            }
        }
    }

    /// Diversity of the expression: every random fact is used at most once.
    pub fn check_diverse(&self, structure: &Structure) -> crate::logic::CheckOutcome {
        let mut seen = std::collections::HashSet::new();
        for r in self.flexible_refs(structure) {
            if !seen.insert(r.clone()) {
                return crate::logic::CheckOutcome::Violated { atom: r };
            }
        }
        crate::logic::CheckOutcome::Holds
    }
}

fn substitute_var(s: &str, name: &str, value: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let bytes: Vec<char> = s.chars().collect();
    let is_ident = |c: char| c.is_alphanumeric() || c == '_';
    let pat: Vec<char> = name.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let matches = i + pat.len() <= bytes.len()
            && bytes[i..i + pat.len()] == pat[..]
            && (i == 0 || !is_ident(bytes[i - 1]))
            && (i + pat.len() == bytes.len() || !is_ident(bytes[i + pat.len()]));
        if matches {
            out.push_str(value);
            i += pat.len();
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) enum Factor {
    Node(NodeId),
    Fact(FactId),
}

type Mono = Vec<(Factor, u32)>;

#[derive(Clone, Debug, Default)]
struct Poly {
    constant: f64,
    terms: BTreeMap<Mono, f64>,
}

/// Largest number of monomials a normalization may produce.
const TERM_LIMIT: usize = 20_000_000;

impl Poly {
    fn constant(c: f64) -> Self {
        Poly {
            constant: c,
            terms: BTreeMap::new(),
        }
    }

    fn single(f: Factor) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(vec![(f, 1)], 1.0);
        Poly {
            constant: 0.0,
            terms,
        }
    }

    fn add_scaled(&mut self, other: Poly, w: f64) {
        self.constant += w * other.constant;
        for (m, c) in other.terms {
            *self.terms.entry(m).or_insert(0.0) += w * c;
        }
    }

    fn mul(self, other: Poly, binary: &dyn Fn(Factor) -> bool) -> ExpectationResult<Poly> {
        let mut out = Poly::constant(self.constant * other.constant);
        if self.constant != 0.0 {
            for (m, c) in &other.terms {
                *out.terms.entry(m.clone()).or_insert(0.0) += self.constant * c;
            }
        }
        if other.constant != 0.0 {
            for (m, c) in &self.terms {
                *out.terms.entry(m.clone()).or_insert(0.0) += other.constant * c;
            }
        }
        if self.terms.len().saturating_mul(other.terms.len()) > TERM_LIMIT {
            return Err(ExpectationError::Unsupported(
                "product expands to too many terms".into(),
            ));
        }
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let m = merge(m1, m2, binary);
                *out.terms.entry(m).or_insert(0.0) += c1 * c2;
            }
        }
        Ok(out)
    }
}

/// Multiplies two monomials; powers of 0/1-valued factors collapse to 1.
fn merge(a: &Mono, b: &Mono, binary: &dyn Fn(Factor) -> bool) -> Mono {
    let mut out: Mono = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = if j >= b.len() || (i < a.len() && a[i].0 < b[j].0) {
            i += 1;
            a[i - 1]
        } else if i >= a.len() || b[j].0 < a[i].0 {
            j += 1;
            b[j - 1]
        } else {
            i += 1;
            j += 1;
            (a[i - 1].0, a[i - 1].1 + b[j - 1].1)
        };
        out.push(next);
    }
    for f in out.iter_mut() {
        if binary(f.0) {
            f.1 = 1;
        }
    }
    out
}

#[derive(Clone, Debug)]
pub(crate) struct Monomial {
    pub coef: f64,
    pub factors: Box<[(Factor, u32)]>,
}

/// Compressed sparse rows: `row(i)` lists the entries of row `i`.
#[derive(Clone, Debug, Default)]
pub(crate) struct Csr {
    offsets: Vec<usize>,
    data: Vec<u32>,
}

impl Csr {
    fn from_rows(rows: Vec<Vec<u32>>) -> Self {
        let mut offsets = Vec::with_capacity(rows.len() + 1);
        let mut data = Vec::new();
        offsets.push(0);
        for r in rows {
            data.extend(r);
            offsets.push(data.len());
        }
        Csr { offsets, data }
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.data[self.offsets[i]..self.offsets[i + 1]]
    }
}

/// A loss normalized to `constant + Σ coef · Π factor^power` with pairwise
/// independent factors in every monomial, plus the occurrence indexes the
/// incremental cache needs.
#[derive(Debug)]
pub struct CompiledLoss {
    pub(crate) circuit: Circuit,
    pub(crate) constant: f64,
    pub(crate) monomials: Vec<Monomial>,
    /// Numeric range values per fact, for fact factors.
    pub(crate) numeric: Vec<Option<Box<[f64]>>>,
    /// Per fact: gates to recompute when it changes, in topological order.
    pub(crate) fact_nodes: Csr,
    /// Per fact: monomials whose value depends on it.
    pub(crate) fact_monos: Csr,
    n_facts: usize,
}

impl CompiledLoss {
    pub fn compile(
        structure: &Structure,
        facts: &FactSet,
        loss: &LossExpression,
    ) -> ExpectationResult<CompiledLoss> {
        let mut circuit = Circuit::default();
        let numeric: Vec<Option<Box<[f64]>>> = facts
            .ids()
            .map(|id| {
                facts
                    .range(id)
                    .iter()
                    .map(|v| v.as_f64())
                    .collect::<Option<Vec<_>>>()
                    .map(Into::into)
            })
            .collect();
        let poly = {
            let mut norm = Normalizer {
                compiler: Compiler::new(structure, facts, &mut circuit),
                facts,
                numeric: &numeric,
            };
            norm.poly(loss)?
        };
        circuit.freeze();
        let mut monomials = Vec::with_capacity(poly.terms.len());
        for (m, c) in poly.terms {
            if c == 0.0 {
                continue;
            }
            check_independent(&m, &circuit, facts)?;
            monomials.push(Monomial {
                coef: c,
                factors: m.into(),
            });
        }
        let (fact_nodes, fact_monos) = index(&circuit, &monomials, facts.len());
        Ok(CompiledLoss {
            circuit,
            constant: poly.constant,
            monomials,
            numeric,
            fact_nodes,
            fact_monos,
            n_facts: facts.len(),
        })
    }

    pub fn fact_count(&self) -> usize {
        self.n_facts
    }

    pub fn monomial_count(&self) -> usize {
        self.monomials.len()
    }

    pub fn gate_count(&self) -> usize {
        self.circuit.len()
    }

    /// Indices of the monomials that depend on `fact`.
    pub fn touched_monomials(&self, fact: FactId) -> &[u32] {
        self.fact_monos.row(fact.index())
    }

    pub(crate) fn factor_value(
        &self,
        factor: (Factor, u32),
        node: impl Fn(NodeId) -> f64,
        q: &super::FactorDistribution,
        pin: Option<super::Pin>,
    ) -> f64 {
        match factor.0 {
            Factor::Node(n) => node(n),
            Factor::Fact(f) => {
                let vals = self.numeric[f.index()].as_ref().expect("numeric fact");
                let p = factor.1 as i32;
                match pin {
                    Some(pin) if pin.fact == f => vals[pin.value as usize].powi(p),
                    _ => q
                        .pmf(f)
                        .iter()
                        .zip(vals.iter())
                        .map(|(m, v)| m * v.powi(p))
                        .sum(),
                }
            }
        }
    }

    /// Expected loss by full evaluation, without any cache.
    pub fn expectation(&self, q: &super::FactorDistribution, pin: Option<super::Pin>) -> f64 {
        let vals = self.circuit.eval_all(q, pin);
        self.constant
            + self
                .monomials
                .iter()
                .map(|m| {
                    m.coef
                        * m.factors
                            .iter()
                            .map(|f| self.factor_value(*f, |n| vals[n as usize], q, pin))
                            .product::<f64>()
                })
                .sum::<f64>()
    }
}

struct Normalizer<'a, 'c> {
    compiler: Compiler<'c>,
    facts: &'a FactSet,
    numeric: &'a [Option<Box<[f64]>>],
}

impl Normalizer<'_, '_> {
    fn is_binary(&self, f: Factor) -> bool {
        match f {
            Factor::Node(_) => true,
            Factor::Fact(id) => self.numeric[id.index()]
                .as_ref()
                .is_some_and(|v| v.iter().all(|x| *x == 0.0 || *x == 1.0)),
        }
    }

    fn poly(&mut self, e: &LossExpression) -> ExpectationResult<Poly> {
        Ok(match e {
            LossExpression::Const(c) => Poly::constant(*c),
            LossExpression::Formula { formula, binding } => {
                match self.compiler.compile(formula, binding)? {
                    Compiled::Const(b) => Poly::constant(b as u8 as f64),
                    Compiled::Node(n) => Poly::single(Factor::Node(n)),
                }
            }
            LossExpression::Fact(f) => {
                let id = self
                    .facts
                    .id(f)
                    .ok_or_else(|| ExpectationError::UnknownFact(f.to_string()))?;
                if self.numeric[id.index()].is_none() {
                    return Err(ExpectationError::NotNumeric(f.to_string()));
                }
                Poly::single(Factor::Fact(id))
            }
            LossExpression::Sum(xs) => {
                let mut acc = Poly::default();
                for x in xs {
                    let p = self.poly(x)?;
                    acc.add_scaled(p, 1.0);
                }
                acc
            }
            LossExpression::Sub(a, b) => {
                let mut acc = self.poly(a)?;
                let pb = self.poly(b)?;
                acc.add_scaled(pb, -1.0);
                acc
            }
            LossExpression::Product(xs) => {
                let mut acc = Poly::constant(1.0);
                for x in xs {
                    let p = self.poly(x)?;
                    let bin = |f: Factor| self.is_binary(f);
                    acc = acc.mul(p, &bin)?;
                }
                acc
            }
            LossExpression::Pow(a, n) => {
                let base = self.poly(a)?;
                let mut acc = Poly::constant(1.0);
                for _ in 0..*n {
                    let bin = |f: Factor| self.is_binary(f);
                    acc = acc.mul(base.clone(), &bin)?;
                }
                acc
            }
            LossExpression::Abs(a) => {
                let p = self.poly(a)?;
                let nonzero: Vec<_> = p.terms.iter().filter(|(_, c)| **c != 0.0).collect();
                match nonzero.as_slice() {
                    [] => Poly::constant(p.constant.abs()),
                    [(m, w)] if m.len() == 1 && self.is_binary(m[0].0) => {
                        let (m, w) = ((*m).clone(), **w);
                        let at0 = p.constant.abs();
                        let at1 = (p.constant + w).abs();
                        let mut out = Poly::constant(at0);
                        out.terms.insert(m, at1 - at0);
                        out
                    }
                    _ => {
                        return Err(ExpectationError::Unsupported(
                            "absolute value of an expression that is not affine in a single 0/1 leaf"
                                .into(),
                        ))
                    }
                }
            }
        })
    }
}

fn check_independent(m: &Mono, circuit: &Circuit, facts: &FactSet) -> ExpectationResult<()> {
    let mut owner: HashMap<FactId, usize> = HashMap::new();
    for (i, (f, _)) in m.iter().enumerate() {
        let support: Vec<FactId> = match f {
            Factor::Node(n) => circuit.supports[*n as usize].to_vec(),
            Factor::Fact(id) => vec![*id],
        };
        for s in support {
            if let Some(j) = owner.insert(s, i) {
                if j != i {
                    return Err(ExpectationError::Decomposition {
                        subformula: truncate(format!("product of {} factors", m.len())),
                        reason: format!("factors share random fact {}", facts.fact(s)),
                    });
                }
            }
        }
    }
    Ok(())
}

fn index(circuit: &Circuit, monos: &[Monomial], n_facts: usize) -> (Csr, Csr) {
    let n = circuit.len();
    let mut parents: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut direct: Vec<Vec<u32>> = vec![Vec::new(); n_facts];
    for id in 0..n as u32 {
        for c in circuit.children(id) {
            parents[*c as usize].push(id);
        }
        for f in circuit.direct_facts(id) {
            direct[f.index()].push(id);
        }
    }
    let mut node_monos: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut fact_direct_monos: Vec<Vec<u32>> = vec![Vec::new(); n_facts];
    for (i, m) in monos.iter().enumerate() {
        for (f, _) in m.factors.iter() {
            match f {
                Factor::Node(node) => node_monos[*node as usize].push(i as u32),
                Factor::Fact(fact) => fact_direct_monos[fact.index()].push(i as u32),
            }
        }
    }
    let mut mark = vec![u32::MAX; n];
    let mut node_rows = Vec::with_capacity(n_facts);
    let mut mono_rows = Vec::with_capacity(n_facts);
    for f in 0..n_facts {
        let mut stack: Vec<u32> = direct[f].clone();
        let mut seen = Vec::new();
        while let Some(x) = stack.pop() {
            if mark[x as usize] == f as u32 {
                continue;
            }
            mark[x as usize] = f as u32;
            seen.push(x);
            stack.extend(parents[x as usize].iter().copied());
        }
        seen.sort_unstable();
        let mut ms: Vec<u32> = seen
            .iter()
            .flat_map(|x| node_monos[*x as usize].iter().copied())
            .chain(fact_direct_monos[f].iter().copied())
            .collect();
        ms.sort_unstable();
        ms.dedup();
        node_rows.push(seen);
        mono_rows.push(ms);
    }
    (Csr::from_rows(node_rows), Csr::from_rows(mono_rows))
}
