//! Symbolic identifying functionals written in terms of conditionals of the observed joint.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_traits::{One, Zero};

use crate::causal::{CausalQuery, IdResult};
use crate::error::{Error, Result};
use crate::graph::MixedGraph;
use crate::kernel::{Kernel, Rational};
use crate::set::NodeSet;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    One,
    /// p(x_head | x_given) of the observed joint.
    Cond { head: usize, given: Vec<usize> },
    Prod(Vec<Expr>),
    Sum { vars: Vec<usize>, body: Box<Expr> },
    Ratio(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn free(&self) -> NodeSet {
        match self {
            Expr::One => NodeSet::EMPTY,
            Expr::Cond { head, given } => given.iter().copied().collect::<NodeSet>().with(*head),
            Expr::Prod(fs) => fs.iter().fold(NodeSet::EMPTY, |s, f| s.union(f.free())),
            Expr::Sum { vars, body } => body.free().minus(vars.iter().copied().collect()),
            Expr::Ratio(a, b) => a.free().union(b.free()),
        }
    }

    fn factors(self) -> Vec<Expr> {
        match self {
            Expr::One => Vec::new(),
            Expr::Prod(fs) => fs,
            e => vec![e],
        }
    }

    fn product(mut fs: Vec<Expr>) -> Expr {
        match fs.len() {
            0 => Expr::One,
            1 => fs.pop().unwrap(),
            _ => Expr::Prod(fs),
        }
    }
}

/// Ranks vertices by a topological order; lists are rendered latest first.
struct Order {
    pos: Vec<usize>,
}

impl Order {
    fn new(g: &MixedGraph) -> Order {
        let mut pos = vec![usize::MAX; g.universe_size()];
        for (i, v) in g.topological_order().into_iter().enumerate() {
            pos[v] = i;
        }
        Order { pos }
    }

    fn desc(&self, s: NodeSet) -> Vec<usize> {
        let mut v: Vec<usize> = s.iter().collect();
        v.sort_by_key(|&x| std::cmp::Reverse(self.pos[x]));
        v
    }
}

/// Σ_{vars} e, dropping each summed vertex that only appears as the head of a
/// single conditional.
fn marg(e: Expr, vars: NodeSet, ord: &Order) -> Expr {
    let mut fs = e.factors();
    let mut vars = vars;
    loop {
        let hit = vars.iter().find_map(|v| {
            let holders: Vec<usize> = (0..fs.len()).filter(|&i| fs[i].free().contains(v)).collect();
            match (holders.as_slice(), holders.first().map(|&i| &fs[i])) {
                ([i], Some(Expr::Cond { head, .. })) if *head == v => Some((v, *i)),
                _ => None,
            }
        });
        match hit {
            Some((v, i)) => {
                vars.remove(v);
                fs.remove(i);
            }
            None => break,
        }
    }
    let body = Expr::product(fs);
    if vars.is_empty() {
        body
    } else {
        Expr::Sum {
            vars: ord.desc(vars),
            body: Box::new(body),
        }
    }
}

/// num / den with common factors cancelled.
fn ratio(num: Expr, den: Expr) -> Expr {
    let mut n = num.factors();
    let mut d = den.factors();
    d.retain(|f| match n.iter().position(|x| x == f) {
        Some(i) => {
            n.remove(i);
            false
        }
        None => true,
    });
    let (n, d) = (Expr::product(n), Expr::product(d));
    if d == Expr::One {
        n
    } else {
        Expr::Ratio(Box::new(n), Box::new(d))
    }
}

/// Q[S] = Π_{v∈S} p(x_v | x_{pre(v)}) for a district S.
fn district_q(g: &MixedGraph, s: NodeSet, ord: &Order) -> Expr {
    let fs = ord
        .desc(s)
        .into_iter()
        .map(|v| {
            let pre: NodeSet = g.vertices().iter().filter(|&w| ord.pos[w] < ord.pos[v]).collect();
            Expr::Cond {
                head: v,
                given: ord.desc(pre),
            }
        })
        .collect();
    Expr::product(fs)
}

/// Q[D] from Q[T] by alternating ancestral margins and district splits.
fn identify_q(g: &MixedGraph, d: NodeSet, t: NodeSet, q: Expr, ord: &Order) -> Result<Expr> {
    let a = g.an_within(d, t);
    if a == d {
        return Ok(marg(q, t.minus(d), ord));
    }
    if a == t {
        return Err(Error::invalid("district is not identifiable from its enclosing factor"));
    }
    let qa = marg(q, t.minus(a), ord);
    let t2 = g.district_within(d.first().expect("non-empty"), a);
    let mut fs = Vec::new();
    for v in ord.desc(t2) {
        let after: NodeSet = a.iter().filter(|&w| ord.pos[w] > ord.pos[v]).collect();
        let num = marg(qa.clone(), after, ord);
        let den = marg(qa.clone(), after.with(v), ord);
        fs.push(ratio(num, den));
    }
    identify_q(g, d, t2, Expr::product(fs), ord)
}

/// The functional Σ_{Y*\Y} Π_D Q[D] for an identified query.
pub fn identifying_functional(g: &MixedGraph, id: &IdResult) -> Result<Expr> {
    let IdResult::Identifiable { factors, sum_over, .. } = id else {
        return Err(Error::invalid("the effect is not identifiable"));
    };
    let ord = Order::new(g);
    let mut fs = Vec::new();
    for (d, _) in factors {
        let s = g.district_within(d.first().expect("non-empty"), g.vertices());
        fs.push(identify_q(g, *d, s, district_q(g, s, &ord), &ord)?);
    }
    Ok(marg(Expr::product(fs), *sum_over, &ord))
}

// ----- rendering -----

struct Printer<'a> {
    g: &'a MixedGraph,
    primes: Vec<usize>,
    taken: NodeSet,
}

impl Printer<'_> {
    fn var(&self, v: usize) -> String {
        format!("{}{}", self.g.name(v), "'".repeat(self.primes[v]))
    }

    fn expr(&mut self, e: &Expr, out: &mut String) {
        match e {
            Expr::One => out.push('1'),
            Expr::Cond { head, given } => {
                let _ = write!(out, "p({}", self.var(*head));
                if !given.is_empty() {
                    let list: Vec<String> = given.iter().map(|&v| self.var(v)).collect();
                    let _ = write!(out, "|{}", list.join(","));
                }
                out.push(')');
            }
            Expr::Prod(fs) => {
                for (i, f) in fs.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    self.factor(f, out);
                }
            }
            Expr::Sum { vars, body } => {
                let saved: Vec<(usize, usize)> = vars.iter().map(|&v| (v, self.primes[v])).collect();
                let taken = self.taken;
                for &v in vars {
                    if self.taken.contains(v) {
                        self.primes[v] += 1;
                    }
                    self.taken.insert(v);
                }
                let list: Vec<String> = vars.iter().map(|&v| self.var(v)).collect();
                let _ = write!(out, "Σ_{{{}}} ", list.join(","));
                self.expr(body, out);
                for (v, p) in saved {
                    self.primes[v] = p;
                }
                self.taken = taken;
            }
            Expr::Ratio(n, d) => {
                self.factor(n, out);
                out.push_str(" / ");
                self.factor(d, out);
            }
        }
    }

    fn factor(&mut self, e: &Expr, out: &mut String) {
        if matches!(e, Expr::Sum { .. } | Expr::Ratio(..) | Expr::Prod(_)) {
            out.push('[');
            self.expr(e, out);
            out.push(']');
        } else {
            self.expr(e, out);
        }
    }
}

/// Text form; bound variables that clash with visible ones get primes.
pub fn render(g: &MixedGraph, e: &Expr) -> String {
    let mut p = Printer {
        g,
        primes: vec![0; g.universe_size()],
        taken: e.free(),
    };
    let mut out = String::new();
    p.expr(e, &mut out);
    out
}

// ----- evaluation -----

/// Numeric evaluation against a joint distribution over the graph's vertices.
pub struct Evaluator<'a> {
    p: &'a Kernel,
    card: Vec<usize>,
    conds: HashMap<(usize, NodeSet), Kernel>,
}

impl<'a> Evaluator<'a> {
    pub fn new(p: &'a Kernel) -> Self {
        let n = p.scope().iter().max().map_or(0, |m| m + 1);
        let card = (0..n).map(|v| if p.scope().contains(v) { p.card(v) } else { 1 }).collect();
        Evaluator {
            p,
            card,
            conds: HashMap::new(),
        }
    }

    pub fn eval(&mut self, e: &Expr, x: &mut [usize]) -> Result<Rational> {
        Ok(match e {
            Expr::One => Rational::one(),
            Expr::Cond { head, given } => {
                let g: NodeSet = given.iter().copied().collect();
                let key = (*head, g);
                if !self.conds.contains_key(&key) {
                    let k = self.p.conditional(NodeSet::single(*head), g)?;
                    self.conds.insert(key, k);
                }
                self.conds[&key].value(x).cloned().unwrap_or_else(Rational::zero)
            }
            Expr::Prod(fs) => {
                let mut acc = Rational::one();
                for f in fs {
                    acc *= self.eval(f, x)?;
                }
                acc
            }
            Expr::Sum { vars, body } => {
                let saved: Vec<usize> = vars.iter().map(|&v| x[v]).collect();
                let mut acc = Rational::zero();
                let mut digits = vec![0usize; vars.len()];
                'outer: loop {
                    for (&v, &d) in vars.iter().zip(&digits) {
                        x[v] = d;
                    }
                    acc += self.eval(body, x)?;
                    for (i, &v) in vars.iter().enumerate() {
                        digits[i] += 1;
                        if digits[i] < self.card[v] {
                            continue 'outer;
                        }
                        digits[i] = 0;
                    }
                    break;
                }
                for (&v, s) in vars.iter().zip(saved) {
                    x[v] = s;
                }
                acc
            }
            Expr::Ratio(n, d) => {
                let den = self.eval(d, x)?;
                if den.is_zero() {
                    Rational::zero()
                } else {
                    self.eval(n, x)? / den
                }
            }
        })
    }
}

/// The functional as a table over Y given A.
pub fn evaluate_functional(e: &Expr, p: &Kernel, q: &CausalQuery) -> Result<Kernel> {
    let space = p.state_space(0);
    let mut ev = Evaluator::new(p);
    let mut err = None;
    let k = Kernel::from_fn_unchecked(&space, q.outcome(), q.treatment(), |x| {
        let mut x = x.to_vec();
        match ev.eval(e, &mut x) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                Rational::zero()
            }
        }
    })?;
    match err {
        Some(e) => Err(e),
        None => Ok(k),
    }
}
