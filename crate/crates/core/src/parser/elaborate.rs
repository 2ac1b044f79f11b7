//! Name resolution, desugaring and configuration building.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use super::ast::*;
use super::lexer::Pos;
use super::ParseError;
use crate::syntax::sugar::{desugar_with, FreshVars};
use crate::syntax::{
    typecheck, validate_config, Bound, Config, Lambda, Meth, Ref, Repo, Store, Sugared, Term, Type, Value, Var,
};

fn err_at(pos: Pos, f: impl FnOnce(u32, u32) -> ParseError) -> ParseError {
    f(pos.line, pos.col)
}

fn is_ssa_like(name: &str, refs: &HashMap<String, Ref>) -> bool {
    if let Some((base, idx)) = name.rsplit_once('_') {
        !idx.is_empty() && idx.bytes().all(|b| b.is_ascii_digit()) && refs.contains_key(base)
    } else {
        false
    }
}

fn is_ret_like(name: &str) -> bool {
    name.strip_prefix("ret").is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

struct Elab {
    refs: HashMap<String, Ref>,
    meths: HashMap<String, Meth>,
    /// One symbol, one type, across the whole program.
    globals: HashMap<String, Type>,
    /// Binder names already used in the body being resolved.
    used: BTreeSet<String>,
}

impl Elab {
    fn declare(&mut self, id: &Ident, ty: &Type) -> Result<(), ParseError> {
        if is_ret_like(&id.name) {
            return Err(err_at(id.pos, |line, col| ParseError::ReservedName { name: id.name.clone(), line, col }));
        }
        match self.globals.get(&id.name) {
            Some(t) if t != ty => Err(err_at(id.pos, |line, col| ParseError::TypeClash {
                name: id.name.clone(),
                first: t.clone(),
                second: ty.clone(),
                line,
                col,
            })),
            _ => {
                self.globals.insert(id.name.clone(), ty.clone());
                Ok(())
            }
        }
    }

    /// A binder gets its own name unless that name is already in use in
    /// the current body, in which case it is renamed apart.
    fn bind(&mut self, id: &Ident, ty: &Type) -> Var {
        if self.used.insert(id.name.clone()) {
            return Var::new(id.name.as_str(), ty.clone());
        }
        let mut k = 1;
        loop {
            let cand = format!("{}'{k}", id.name);
            if !self.globals.contains_key(&cand) && !self.used.contains(&cand) {
                self.used.insert(cand.clone());
                self.globals.insert(cand.clone(), ty.clone());
                return Var::new(cand, ty.clone());
            }
            k += 1;
        }
    }

    fn lookup_ref(&self, id: &Ident) -> Result<Ref, ParseError> {
        self.refs
            .get(&id.name)
            .cloned()
            .ok_or_else(|| err_at(id.pos, |line, col| ParseError::UndeclaredRef { name: id.name.clone(), line, col }))
    }

    fn resolve(&mut self, e: &Expr, scope: &mut Vec<(String, Var)>) -> Result<Sugared, ParseError> {
        Ok(match e {
            Expr::Fail => Sugared::Fail(None),
            Expr::Int(i) => Sugared::Int(*i),
            Expr::Unit => Sugared::Unit,
            Expr::Name(id) => {
                if let Some((_, v)) = scope.iter().rev().find(|(n, _)| *n == id.name) {
                    Sugared::Var(v.clone())
                } else if let Some(m) = self.meths.get(&id.name) {
                    Sugared::Meth(m.clone())
                } else if self.refs.contains_key(&id.name) {
                    return Err(err_at(id.pos, |line, col| ParseError::UnknownName {
                        name: format!("{} (a reference; read it with `!{}`)", id.name, id.name),
                        line,
                        col,
                    }));
                } else {
                    return Err(err_at(id.pos, |line, col| ParseError::UnknownName { name: id.name.clone(), line, col }));
                }
            }
            Expr::Deref(id) => Sugared::Deref(self.lookup_ref(id)?),
            Expr::Assign(id, m) => Sugared::Assign(self.lookup_ref(id)?, Box::new(self.resolve(m, scope)?)),
            Expr::Incr(id) => Sugared::Incr(self.lookup_ref(id)?),
            Expr::BinOp(op, a, b) => {
                Sugared::BinOp(*op, Box::new(self.resolve(a, scope)?), Box::new(self.resolve(b, scope)?))
            }
            Expr::Pair(a, b) => Sugared::Pair(Box::new(self.resolve(a, scope)?), Box::new(self.resolve(b, scope)?)),
            Expr::Proj(s, t, m) => Sugared::Proj(*s, t.clone(), Box::new(self.resolve(m, scope)?)),
            Expr::App(h, args) => {
                let h = self.resolve(h, scope)?;
                let args = args.iter().map(|a| self.resolve(a, scope)).collect::<Result<_, _>>()?;
                Sugared::App(Box::new(h), args)
            }
            Expr::If(c, t, f) => Sugared::If(
                Box::new(self.resolve(c, scope)?),
                Box::new(self.resolve(t, scope)?),
                Box::new(self.resolve(f, scope)?),
            ),
            Expr::Let(p, m, n) => {
                self.declare(&p.name, &p.ty)?;
                let m = self.resolve(m, scope)?;
                let x = self.bind(&p.name, &p.ty);
                scope.push((p.name.name.clone(), x.clone()));
                let n = self.resolve(n, scope);
                scope.pop();
                Sugared::Let(x, Box::new(m), Box::new(n?))
            }
            Expr::Letrec(f, ps, body, cont) => {
                self.declare(&f.name, &f.ty)?;
                let fv = self.bind(&f.name, &f.ty);
                scope.push((f.name.name.clone(), fv.clone()));
                let (xs, body) = self.resolve_params(ps, body, scope)?;
                let cont = self.resolve(cont, scope);
                scope.pop();
                Sugared::Letrec(fv, xs, Box::new(body), Box::new(cont?))
            }
            Expr::Fun(ps, body) => {
                let (xs, body) = self.resolve_params(ps, body, scope)?;
                Sugared::Lambda(xs, Box::new(body))
            }
            Expr::Seq(a, b) => Sugared::Seq(Box::new(self.resolve(a, scope)?), Box::new(self.resolve(b, scope)?)),
            Expr::Assert(m) => Sugared::Assert(Box::new(self.resolve(m, scope)?)),
            Expr::Ascribe(m, t) => Sugared::Ascribe(Box::new(self.resolve(m, scope)?), t.clone()),
        })
    }

    fn resolve_params(
        &mut self,
        ps: &[Param],
        body: &Expr,
        scope: &mut Vec<(String, Var)>,
    ) -> Result<(Vec<Var>, Sugared), ParseError> {
        let mut xs = Vec::new();
        for p in ps {
            self.declare(&p.name, &p.ty)?;
            let x = self.bind(&p.name, &p.ty);
            scope.push((p.name.name.clone(), x.clone()));
            xs.push(x);
        }
        let body = self.resolve(body, scope);
        scope.truncate(scope.len() - ps.len());
        Ok((xs, body?))
    }

    fn literal(&self, lit: &Literal, ty: &Type, owner: &Ident) -> Result<Value, ParseError> {
        let bad = |msg: String| ParseError::BadLiteral { name: owner.name.clone(), msg };
        match (lit, ty) {
            (Literal::Int(i), Type::Int) => Ok(Value::Int(*i)),
            (Literal::Unit, Type::Unit) => Ok(Value::Unit),
            (Literal::Pair(a, b), Type::Prod(ta, tb)) => {
                Ok(Value::pair(self.literal(a, ta, owner)?, self.literal(b, tb, owner)?))
            }
            (Literal::Name(id), Type::Arrow(..)) => match self.meths.get(&id.name) {
                Some(m) if m.ty == *ty => Ok(Value::Meth(m.clone())),
                Some(m) => Err(bad(format!("method `{}` has type {}, expected {ty}", id.name, m.ty))),
                None => Err(bad(format!("`{}` is not a declared method", id.name))),
            },
            _ => Err(bad(format!("literal does not have type {ty}"))),
        }
    }
}

fn arrow_of(params: &[Param], ret: &Type) -> Type {
    params.iter().rev().fold(ret.clone(), |acc, p| Type::arrow(p.ty.clone(), acc))
}

/// Builds the initial configuration at bound `bound`.
pub fn elaborate(p: &SourceProgram, bound: Bound) -> Result<Config, ParseError> {
    let mut el = Elab { refs: HashMap::new(), meths: HashMap::new(), globals: HashMap::new(), used: BTreeSet::new() };

    for r in &p.refs {
        if el.refs.insert(r.name.name.clone(), Ref::new(r.name.name.as_str(), r.ty.clone())).is_some() {
            return Err(err_at(r.name.pos, |line, col| ParseError::DuplicateName {
                kind: "reference",
                name: r.name.name.clone(),
                line,
                col,
            }));
        }
    }
    for m in &p.methods {
        let ty = arrow_of(&m.params, &m.ret);
        if el.meths.insert(m.name.name.clone(), Meth::new(m.name.name.as_str(), ty)).is_some() {
            return Err(err_at(m.name.pos, |line, col| ParseError::DuplicateName {
                kind: "method",
                name: m.name.name.clone(),
                line,
                col,
            }));
        }
    }

    let mut store = Store::new();
    for r in &p.refs {
        let v = el.literal(&r.init, &r.ty, &r.name)?;
        store.insert(el.refs[&r.name.name].clone(), v);
    }

    let mut inputs = Vec::new();
    for prm in &p.main.params {
        if !prm.ty.is_ground() {
            return Err(ParseError::Config(crate::syntax::ConfigError::NonGroundFreeVar(
                prm.name.name.clone(),
                prm.ty.clone(),
            )));
        }
        if is_ssa_like(&prm.name.name, &el.refs) {
            return Err(err_at(prm.name.pos, |line, col| ParseError::ReservedName {
                name: prm.name.name.clone(),
                line,
                col,
            }));
        }
        el.declare(&prm.name, &prm.ty)?;
        if inputs.iter().any(|x: &Var| *x.name == *prm.name.name) {
            return Err(err_at(prm.name.pos, |line, col| ParseError::DuplicateName {
                kind: "parameter",
                name: prm.name.name.clone(),
                line,
                col,
            }));
        }
        inputs.push(Var::new(prm.name.name.as_str(), prm.ty.clone()));
    }

    // Resolve every body first so fresh names avoid all of them.
    let mut method_bodies = Vec::new();
    for m in &p.methods {
        el.used.clear();
        let mut scope = Vec::new();
        let (xs, body) = el.resolve_params(&m.params, &m.body, &mut scope)?;
        method_bodies.push(Sugared::Lambda(xs, Box::new(body)));
    }
    el.used = inputs.iter().map(|x| x.name.to_string()).collect();
    let mut scope: Vec<(String, Var)> = inputs.iter().map(|x| (x.name.to_string(), x.clone())).collect();
    let main_body = el.resolve(&p.main.body, &mut scope)?;

    let all_names: BTreeSet<Arc<str>> = el.globals.keys().map(|s| Arc::from(s.as_str())).collect();
    let mut fresh = FreshVars::avoiding(all_names);

    let mut repo = Repo::new();
    for (decl, body) in p.methods.iter().zip(&method_bodies) {
        let meth = el.meths[&decl.name.name].clone();
        let term = desugar_with(body, Some(&meth.ty), &mut fresh);
        let found = typecheck(&term).map_err(ParseError::Type)?;
        if found != meth.ty {
            return Err(ParseError::Type(crate::syntax::TypeError::Mismatch {
                term: format!("body of method `{}`", decl.name.name),
                expected: meth.ty.to_string(),
                found,
            }));
        }
        let Term::Lambda(param, body) = term else { unreachable!("method bodies desugar to lambdas") };
        repo.insert(meth, Lambda { param, body: *body });
    }

    let term = desugar_with(&main_body, Some(&p.main.ret), &mut fresh);
    let found = typecheck(&term).map_err(ParseError::Type)?;
    if found != p.main.ret {
        return Err(ParseError::Type(crate::syntax::TypeError::Mismatch {
            term: "body of Main".into(),
            expected: p.main.ret.to_string(),
            found,
        }));
    }

    let config = Config { term, repo, store, bound, inputs };
    validate_config(&config)?;
    Ok(config)
}

/// Free variable names of `config` mapped to their types; handy for tools.
pub fn input_types(config: &Config) -> BTreeMap<String, Type> {
    config.inputs.iter().map(|x| (x.name.to_string(), x.ty.clone())).collect()
}
