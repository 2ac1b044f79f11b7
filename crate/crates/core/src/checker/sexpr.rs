//! S-expressions as printed by SMT solvers.

use std::fmt;

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum SExpr {
    Atom(String),
    Str(String),
    List(Vec<SExpr>),
}

impl SExpr {
    pub fn atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(a) => Some(a),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(l) => Some(l),
            _ => None,
        }
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Atom(a) => f.write_str(a),
            SExpr::Str(s) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
            SExpr::List(l) => {
                f.write_str("(")?;
                for (i, x) in l.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug, thiserror::Error)]
#[error("malformed s-expression at byte {offset}: {msg}")]
pub struct SExprError {
    pub offset: usize,
    pub msg: &'static str,
}

/// Parses a whitespace-separated sequence of s-expressions. Quoted
/// symbols `|..|` become atoms without the bars; `;` starts a comment.
pub fn parse_all(src: &str) -> Result<Vec<SExpr>, SExprError> {
    let bytes = src.as_bytes();
    let mut stack: Vec<Vec<SExpr>> = vec![Vec::new()];
    let mut i = 0;
    let err = |offset, msg| Err(SExprError { offset, msg });
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b';' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            b'(' => {
                stack.push(Vec::new());
                i += 1;
            }
            b')' => {
                if stack.len() == 1 {
                    return err(i, "unbalanced `)`");
                }
                let l = stack.pop().unwrap();
                stack.last_mut().unwrap().push(SExpr::List(l));
                i += 1;
            }
            b'"' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match bytes.get(i) {
                        None => return err(i, "unterminated string"),
                        Some(b'"') if bytes.get(i + 1) == Some(&b'"') => {
                            s.push('"');
                            i += 2;
                        }
                        Some(b'"') => {
                            i += 1;
                            break;
                        }
                        Some(_) => {
                            let ch = src[i..].chars().next().unwrap();
                            s.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                stack.last_mut().unwrap().push(SExpr::Str(s));
            }
            b'|' => {
                let start = i + 1;
                let Some(len) = src[start..].find('|') else {
                    return err(i, "unterminated quoted symbol");
                };
                stack.last_mut().unwrap().push(SExpr::Atom(src[start..start + len].to_string()));
                i = start + len + 1;
            }
            _ => {
                let start = i;
                while i < bytes.len() && !b" \t\n\r()\";|".contains(&bytes[i]) {
                    i += 1;
                }
                stack.last_mut().unwrap().push(SExpr::Atom(src[start..i].to_string()));
            }
        }
    }
    if stack.len() != 1 {
        return err(src.len(), "unbalanced `(`");
    }
    Ok(stack.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_and_quoted() {
        let v = parse_all("sat (a (b |x'1|) \"m \"\"q\"\"\") ; c\n").unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0], SExpr::Atom("sat".into()));
        assert_eq!(v[1].to_string(), "(a (b x'1) \"m \"\"q\"\"\")");
    }

    #[test]
    fn unbalanced() {
        assert!(parse_all("(a").is_err());
        assert!(parse_all("a)").is_err());
    }
}
