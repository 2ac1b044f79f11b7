//! Decoding solver models back into values, `fail` and `nil`.

use std::collections::BTreeMap;
use std::fmt;

use super::sexpr::SExpr;
use crate::syntax::{Repo, Value};

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum ModelValue {
    Int(i64),
    Unit,
    Pair(Box<ModelValue>, Box<ModelValue>),
    /// A method, by id.
    Meth(u32),
    Fail,
    Nil,
}

impl ModelValue {
    /// The source value, with method ids resolved against `repo`.
    pub fn to_value(&self, repo: &Repo) -> Option<Value> {
        match self {
            ModelValue::Int(i) => Some(Value::Int(*i)),
            ModelValue::Unit => Some(Value::Unit),
            ModelValue::Pair(a, b) => Some(Value::pair(a.to_value(repo)?, b.to_value(repo)?)),
            ModelValue::Meth(id) => repo.get_index(*id as usize).map(|(m, _)| Value::Meth(m.clone())),
            ModelValue::Fail | ModelValue::Nil => None,
        }
    }

    pub fn is_proper(&self) -> bool {
        match self {
            ModelValue::Fail | ModelValue::Nil => false,
            ModelValue::Pair(a, b) => a.is_proper() && b.is_proper(),
            _ => true,
        }
    }
}

impl fmt::Display for ModelValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelValue::Int(i) => write!(f, "{i}"),
            ModelValue::Unit => f.write_str("()"),
            ModelValue::Pair(a, b) => write!(f, "({a}, {b})"),
            ModelValue::Meth(id) => write!(f, "m{id}"),
            ModelValue::Fail => f.write_str("fail"),
            ModelValue::Nil => f.write_str("nil"),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
#[error("cannot decode model fragment `{fragment}`: {msg}")]
pub struct ModelParseError {
    pub fragment: String,
    pub msg: String,
}

fn bad(e: &SExpr, msg: &str) -> ModelParseError {
    let mut fragment = e.to_string();
    if fragment.len() > 120 {
        fragment.truncate(117);
        fragment.push_str("...");
    }
    ModelParseError { fragment, msg: msg.to_string() }
}

fn int(e: &SExpr) -> Result<i64, ModelParseError> {
    match e {
        SExpr::Atom(a) => a.parse::<i64>().map_err(|_| bad(e, "not a 64-bit integer")),
        SExpr::List(l) if l.len() == 2 && l[0].atom() == Some("-") => {
            int(&l[1])?.checked_neg().ok_or_else(|| bad(e, "integer out of range"))
        }
        _ => Err(bad(e, "expected an integer")),
    }
}

type Env = Vec<(String, ModelValue)>;

fn decode(e: &SExpr, env: &mut Env) -> Result<ModelValue, ModelParseError> {
    match e {
        SExpr::Atom(a) => {
            if let Some((_, v)) = env.iter().rev().find(|(n, _)| n == a) {
                return Ok(v.clone());
            }
            if a == "Unit" {
                Ok(ModelValue::Unit)
            } else if a.starts_with("Fail_") {
                Ok(ModelValue::Fail)
            } else if a.starts_with("Nil_") {
                Ok(ModelValue::Nil)
            } else {
                Err(bad(e, "unknown constant"))
            }
        }
        SExpr::Str(_) => Err(bad(e, "unexpected string")),
        SExpr::List(l) => {
            let head = l.first().and_then(SExpr::atom).ok_or_else(|| bad(e, "expected a constructor"))?;
            match head {
                "Int" if l.len() == 2 => Ok(ModelValue::Int(int(&l[1])?)),
                "as" if l.len() == 3 => decode(&l[1], env),
                "let" if l.len() == 3 => {
                    let binds = l[1].list().ok_or_else(|| bad(e, "malformed let"))?;
                    let mut vals = Vec::new();
                    for b in binds {
                        match b.list() {
                            Some([SExpr::Atom(n), v]) => vals.push((n.clone(), decode(v, env)?)),
                            _ => return Err(bad(b, "malformed let binding")),
                        }
                    }
                    let depth = env.len();
                    env.extend(vals);
                    let r = decode(&l[2], env);
                    env.truncate(depth);
                    r
                }
                h if h.starts_with("Pair_") && l.len() == 3 => {
                    Ok(ModelValue::Pair(Box::new(decode(&l[1], env)?), Box::new(decode(&l[2], env)?)))
                }
                h if h.starts_with("Meth_") && l.len() == 2 => {
                    let id = int(&l[1])?;
                    u32::try_from(id).map(ModelValue::Meth).map_err(|_| bad(e, "method id out of range"))
                }
                _ => Err(bad(e, "unknown constructor")),
            }
        }
    }
}

/// Values of every nullary `define-fun` in a `(get-model)` reply.
pub fn parse_model(model: &SExpr) -> Result<BTreeMap<String, ModelValue>, ModelParseError> {
    let items = match model.list() {
        Some([SExpr::Atom(m), rest @ ..]) if m == "model" => rest,
        Some(items) => items,
        None => return Err(bad(model, "expected a list of definitions")),
    };
    let mut out = BTreeMap::new();
    for d in items {
        let Some(parts) = d.list() else { return Err(bad(d, "expected a definition")) };
        match parts {
            [SExpr::Atom(kw), SExpr::Atom(name), SExpr::List(args), _sort, body] if kw == "define-fun" => {
                if args.is_empty() {
                    out.insert(name.clone(), decode(body, &mut Vec::new())?);
                }
            }
            [SExpr::Atom(kw), ..] if kw == "define-fun" || kw == "declare-fun" || kw == "forall" => {}
            _ => return Err(bad(d, "unexpected model entry")),
        }
    }
    Ok(out)
}
