use std::fmt;

use super::ParseError;

#[derive(Clone, Copy, PartialEq, Eq, Debug, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Tok {
    Int(i64),
    Ident(String),
    // keywords
    Let,
    Letrec,
    Rec,
    In,
    Fun,
    If,
    Then,
    Else,
    Assert,
    Skip,
    Fail,
    Fst,
    Snd,
    True,
    False,
    Div,
    Mod,
    AndKw,
    OrKw,
    // punctuation
    LParen,
    RParen,
    Comma,
    Colon,
    Semi,
    Assign,
    Bang,
    Incr,
    Arrow,
    Plus,
    Minus,
    Star,
    Slash,
    Eq,
    EqEq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Int(i) => return write!(f, "integer {i}"),
            Tok::Ident(s) => return write!(f, "identifier `{s}`"),
            Tok::Let => "`let`",
            Tok::Letrec => "`letrec`",
            Tok::Rec => "`rec`",
            Tok::In => "`in`",
            Tok::Fun => "`fun`",
            Tok::If => "`if`",
            Tok::Then => "`then`",
            Tok::Else => "`else`",
            Tok::Assert => "`assert`",
            Tok::Skip => "`skip`",
            Tok::Fail => "`fail`",
            Tok::Fst => "`fst`",
            Tok::Snd => "`snd`",
            Tok::True => "`true`",
            Tok::False => "`false`",
            Tok::Div => "`div`",
            Tok::Mod => "`mod`",
            Tok::AndKw => "`and`",
            Tok::OrKw => "`or`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::Comma => "`,`",
            Tok::Colon => "`:`",
            Tok::Semi => "`;`",
            Tok::Assign => "`:=`",
            Tok::Bang => "`!`",
            Tok::Incr => "`++`",
            Tok::Arrow => "`->`",
            Tok::Plus => "`+`",
            Tok::Minus => "`-`",
            Tok::Star => "`*`",
            Tok::Slash => "`/`",
            Tok::Eq => "`=`",
            Tok::EqEq => "`==`",
            Tok::Ne => "`<>`",
            Tok::Lt => "`<`",
            Tok::Le => "`<=`",
            Tok::Gt => "`>`",
            Tok::Ge => "`>=`",
            Tok::AndAnd => "`&&`",
            Tok::OrOr => "`||`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

fn keyword(s: &str) -> Option<Tok> {
    Some(match s {
        "let" => Tok::Let,
        "letrec" => Tok::Letrec,
        "rec" => Tok::Rec,
        "in" => Tok::In,
        "fun" => Tok::Fun,
        "if" => Tok::If,
        "then" => Tok::Then,
        "else" => Tok::Else,
        "assert" => Tok::Assert,
        "skip" => Tok::Skip,
        "fail" => Tok::Fail,
        "fst" => Tok::Fst,
        "snd" => Tok::Snd,
        "true" => Tok::True,
        "false" => Tok::False,
        "div" => Tok::Div,
        "mod" => Tok::Mod,
        "and" => Tok::AndKw,
        "or" => Tok::OrKw,
        _ => return None,
    })
}

pub fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;
    let err = |pos: Pos, msg: String| ParseError::Lex { line: pos.line, col: pos.col, msg };

    macro_rules! bump {
        () => {{
            if chars[i] == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            i += 1;
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '(' && chars.get(i + 1) == Some(&'*') {
            let mut depth = 0usize;
            loop {
                if i >= chars.len() {
                    return Err(err(pos, "unterminated comment".into()));
                }
                if chars[i] == '(' && chars.get(i + 1) == Some(&'*') {
                    depth += 1;
                    bump!();
                    bump!();
                } else if chars[i] == '*' && chars.get(i + 1) == Some(&')') {
                    depth -= 1;
                    bump!();
                    bump!();
                    if depth == 0 {
                        break;
                    }
                } else {
                    bump!();
                }
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<i64>()
                .map_err(|_| err(pos, format!("integer literal {text} out of range")))?;
            out.push(Token { tok: Tok::Int(v), pos });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                bump!();
            }
            let text: String = chars[start..i].iter().collect();
            let tok = keyword(&text).unwrap_or(Tok::Ident(text));
            out.push(Token { tok, pos });
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, len) = match (c, next) {
            (':', Some('=')) => (Tok::Assign, 2),
            ('+', Some('+')) => (Tok::Incr, 2),
            ('-', Some('>')) => (Tok::Arrow, 2),
            ('=', Some('=')) => (Tok::EqEq, 2),
            ('!', Some('=')) => (Tok::Ne, 2),
            ('<', Some('>')) => (Tok::Ne, 2),
            ('<', Some('=')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('&', Some('&')) => (Tok::AndAnd, 2),
            ('|', Some('|')) => (Tok::OrOr, 2),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            (',', _) => (Tok::Comma, 1),
            (':', _) => (Tok::Colon, 1),
            (';', _) => (Tok::Semi, 1),
            ('!', _) => (Tok::Bang, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('*', _) => (Tok::Star, 1),
            ('/', _) => (Tok::Slash, 1),
            ('=', _) => (Tok::Eq, 1),
            ('<', _) => (Tok::Lt, 1),
            ('>', _) => (Tok::Gt, 1),
            _ => return Err(err(pos, format!("unexpected character `{c}`"))),
        };
        for _ in 0..len {
            bump!();
        }
        out.push(Token { tok, pos });
    }
    out.push(Token { tok: Tok::Eof, pos: Pos { line, col } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn distinguishes_compound_operators() {
        assert_eq!(
            toks("r := !r; r++ != 3 <> x'1"),
            vec![
                Tok::Ident("r".into()),
                Tok::Assign,
                Tok::Bang,
                Tok::Ident("r".into()),
                Tok::Semi,
                Tok::Ident("r".into()),
                Tok::Incr,
                Tok::Ne,
                Tok::Int(3),
                Tok::Ne,
                Tok::Ident("x'1".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn nested_comments_are_skipped() {
        assert_eq!(toks("1 (* a (* b *) c *) 2"), vec![Tok::Int(1), Tok::Int(2), Tok::Eof]);
    }

    #[test]
    fn positions_track_lines() {
        let t = lex("a\n  b").unwrap();
        assert_eq!(t[1].pos, Pos { line: 2, col: 3 });
    }

    #[test]
    fn unterminated_comment_is_an_error() {
        assert!(lex("(* x").is_err());
    }
}
