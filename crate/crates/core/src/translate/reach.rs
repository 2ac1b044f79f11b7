//! Syntactic over-approximation of which aborts a term can produce.

use std::collections::BTreeMap;

use crate::formula::Q;
use crate::syntax::{Meth, Repo, Term, Type};

/// Every body that may run when a method of some type is called: the
/// repository entries plus lambdas and letrec bodies that would be
/// added at run time.
struct Callees<'a> {
    by_type: BTreeMap<Type, Vec<usize>>,
    named: BTreeMap<&'a Meth, usize>,
    bodies: Vec<&'a Term>,
}

/// Lambdas and letrec bodies inside `t`, with the types they get.
fn collect(t: &Term, out: &mut Vec<(Type, Term)>) {
    t.visit(&mut |s| match s {
        Term::Lambda(x, b) => out.push((Type::arrow(x.ty.clone(), super::type_of(b)), (**b).clone())),
        Term::Letrec(f, _, b, _) => out.push((f.ty.clone(), (**b).clone())),
        _ => {}
    });
}

fn q_of(t: &Term, cs: &Callees, est: &[Q]) -> Q {
    let go = |t: &Term| q_of(t, cs, est);
    match t {
        Term::Fail(_) => Q::Fail,
        Term::Var(_) | Term::Meth(_) | Term::Int(_) | Term::Unit | Term::Deref(_) | Term::Lambda(..) => Q::Zero,
        Term::Assign(_, m) | Term::Proj(_, m) => go(m),
        Term::BinOp(_, a, b) | Term::Pair(a, b) | Term::Let(_, a, b) => go(a) + go(b),
        Term::If(c, a, b) => go(c) + go(a) + go(b),
        Term::Letrec(_, _, _, cont) => go(cont),
        Term::AppMeth(m, arg) => {
            let body = cs.named.get(m).map_or(Q::Both, |&i| est[i]);
            go(arg) + Q::Nil + body
        }
        Term::AppVar(x, arg) => {
            let bodies = cs.by_type.get(&x.ty).map_or(Q::Zero, |is| is.iter().fold(Q::Zero, |q, &i| q + est[i]));
            go(arg) + Q::Nil + bodies
        }
    }
}

/// Least fixpoint of the abstraction over the term and every body it can
/// reach. Any application may exhaust the bound, so contributes `Nil`.
pub fn reachability_q(term: &Term, repo: &Repo) -> Q {
    let mut inner = Vec::new();
    for lam in repo.values() {
        collect(&lam.body, &mut inner);
    }
    collect(term, &mut inner);
    let mut cs = Callees { by_type: BTreeMap::new(), named: BTreeMap::new(), bodies: Vec::new() };
    for (m, lam) in repo {
        let i = cs.bodies.len();
        cs.bodies.push(&lam.body);
        cs.named.insert(m, i);
        cs.by_type.entry(m.ty.clone()).or_default().push(i);
    }
    for (ty, body) in &inner {
        let i = cs.bodies.len();
        cs.bodies.push(body);
        cs.by_type.entry(ty.clone()).or_default().push(i);
    }
    let mut est = vec![Q::Zero; cs.bodies.len()];
    loop {
        let next: Vec<Q> = cs.bodies.iter().map(|b| q_of(b, &cs, &est)).collect();
        if next == est {
            break;
        }
        est = next;
    }
    q_of(term, &cs, &est)
}
