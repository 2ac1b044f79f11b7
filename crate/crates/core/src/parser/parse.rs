use super::ast::*;
use super::lexer::{lex, Pos, Tok, Token};
use super::ParseError;
use crate::syntax::{BinOp, Side, Type};

pub fn parse(src: &str) -> Result<SourceProgram, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, i: 0 };
    p.program()
}

/// Parses a single expression; used by tests and tooling.
pub fn parse_expr(src: &str) -> Result<Expr, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, i: 0 };
    let e = p.expr()?;
    p.expect(Tok::Eof)?;
    Ok(e)
}

/// A literal on its own, as used for initial values and inputs.
pub fn parse_literal(src: &str) -> Result<Literal, ParseError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, i: 0 };
    let l = p.literal()?;
    p.expect(Tok::Eof)?;
    Ok(l)
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, j: usize) -> &Tok {
        let k = (self.i + j).min(self.toks.len() - 1);
        &self.toks[k].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].tok.clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        let pos = self.pos();
        Err(ParseError::Syntax {
            line: pos.line,
            col: pos.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().to_string(),
        })
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<()> {
        if self.eat(&t) {
            Ok(())
        } else {
            self.error(&[&t.to_string()])
        }
    }

    fn is_ident(&self, j: usize, name: &str) -> bool {
        matches!(self.peek_at(j), Tok::Ident(s) if s == name)
    }

    fn ident(&mut self) -> PResult<Ident> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(Ident { name, pos })
            }
            _ => self.error(&["identifier"]),
        }
    }

    /// True when the tokens at offset `j` start a new declaration: an
    /// identifier, any number of parenthesised groups, then `:`.
    fn decl_starts_at(&self, j: usize) -> bool {
        let mut k = self.i + j;
        match &self.toks[k].tok {
            Tok::Eof => return true,
            Tok::Ident(_) => k += 1,
            _ => return false,
        }
        loop {
            match &self.toks[k].tok {
                Tok::Colon => return true,
                Tok::LParen => {
                    let mut depth = 0usize;
                    loop {
                        match &self.toks[k].tok {
                            Tok::LParen => depth += 1,
                            Tok::RParen => {
                                depth -= 1;
                                if depth == 0 {
                                    k += 1;
                                    break;
                                }
                            }
                            Tok::Eof => return false,
                            _ => {}
                        }
                        k += 1;
                    }
                }
                _ => return false,
            }
        }
    }

    fn program(&mut self) -> PResult<SourceProgram> {
        let mut refs = Vec::new();
        let mut methods = Vec::new();
        if self.is_ident(0, "Refs") && self.peek_at(1) == &Tok::Colon {
            self.bump();
            self.bump();
            while !(self.is_ident(0, "Methods") || self.is_ident(0, "Main") || self.peek() == &Tok::Eof) {
                refs.push(self.ref_decl()?);
            }
        }
        if self.is_ident(0, "Methods") && self.peek_at(1) == &Tok::Colon {
            self.bump();
            self.bump();
            while !(self.is_ident(0, "Main") || self.peek() == &Tok::Eof) {
                methods.push(self.method_decl()?);
            }
        }
        if !self.is_ident(0, "Main") {
            return self.error(&["`Main`", "method declaration"]);
        }
        self.bump();
        let mut params = Vec::new();
        if self.peek() == &Tok::LParen && self.peek_at(1) == &Tok::RParen {
            self.bump();
            self.bump();
        } else {
            while self.peek() == &Tok::LParen {
                params.push(self.param()?);
            }
        }
        self.expect(Tok::Colon)?;
        let ret = self.ty()?;
        self.expect(Tok::Colon)?;
        let body = self.expr()?;
        self.eat(&Tok::Semi);
        self.expect(Tok::Eof)?;
        Ok(SourceProgram { refs, methods, main: MainDecl { params, ret, body } })
    }

    fn ref_decl(&mut self) -> PResult<RefDecl> {
        let name = self.ident()?;
        self.expect(Tok::Colon)?;
        let ty = self.ty()?;
        self.expect(Tok::Eq)?;
        let init = self.literal()?;
        self.expect(Tok::Semi)?;
        Ok(RefDecl { name, ty, init })
    }

    fn literal(&mut self) -> PResult<Literal> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Literal::Int(i))
            }
            Tok::Minus => {
                self.bump();
                match self.bump() {
                    Tok::Int(i) => Ok(Literal::Int(-i)),
                    _ => self.error(&["integer"]),
                }
            }
            Tok::True => {
                self.bump();
                Ok(Literal::Int(1))
            }
            Tok::False => {
                self.bump();
                Ok(Literal::Int(0))
            }
            Tok::Skip => {
                self.bump();
                Ok(Literal::Unit)
            }
            Tok::Ident(_) => Ok(Literal::Name(self.ident()?)),
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    return Ok(Literal::Unit);
                }
                let a = self.literal()?;
                self.expect(Tok::Comma)?;
                let b = self.literal()?;
                self.expect(Tok::RParen)?;
                Ok(Literal::Pair(Box::new(a), Box::new(b)))
            }
            _ => self.error(&["literal"]),
        }
    }

    fn method_decl(&mut self) -> PResult<MethodDecl> {
        let name = self.ident()?;
        let mut params = Vec::new();
        while self.peek() == &Tok::LParen {
            params.push(self.param()?);
        }
        if params.is_empty() {
            return self.error(&["parameter `(x:T)`"]);
        }
        self.expect(Tok::Colon)?;
        let ret = self.ty()?;
        self.expect(Tok::Eq)?;
        let body = self.expr()?;
        self.eat(&Tok::Semi);
        Ok(MethodDecl { name, params, ret, body })
    }

    fn param(&mut self) -> PResult<Param> {
        self.expect(Tok::LParen)?;
        let name = self.ident()?;
        self.expect(Tok::Colon)?;
        let ty = self.ty()?;
        self.expect(Tok::RParen)?;
        Ok(Param { name, ty })
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        let mut ps = Vec::new();
        while self.peek() == &Tok::LParen {
            ps.push(self.param()?);
        }
        if ps.is_empty() {
            return self.error(&["parameter `(x:T)`"]);
        }
        Ok(ps)
    }

    pub fn ty(&mut self) -> PResult<Type> {
        let a = self.prod_ty()?;
        if self.eat(&Tok::Arrow) {
            Ok(Type::arrow(a, self.ty()?))
        } else {
            Ok(a)
        }
    }

    fn prod_ty(&mut self) -> PResult<Type> {
        let mut a = self.atom_ty()?;
        while self.eat(&Tok::Star) {
            a = Type::prod(a, self.atom_ty()?);
        }
        Ok(a)
    }

    fn atom_ty(&mut self) -> PResult<Type> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "Int" || s == "int" => {
                self.bump();
                Ok(Type::Int)
            }
            Tok::Ident(s) if s == "Unit" || s == "unit" => {
                self.bump();
                Ok(Type::Unit)
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            _ => self.error(&["type"]),
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let e = self.single()?;
        if self.peek() == &Tok::Semi && !self.decl_starts_at(1) {
            self.bump();
            let rest = self.expr()?;
            return Ok(Expr::Seq(Box::new(e), Box::new(rest)));
        }
        Ok(e)
    }

    fn single(&mut self) -> PResult<Expr> {
        match self.peek() {
            Tok::Let => self.let_expr(),
            Tok::Letrec => {
                self.bump();
                self.letrec_tail()
            }
            Tok::Fun => {
                self.bump();
                let ps = self.params()?;
                self.expect(Tok::Arrow)?;
                let body = self.expr()?;
                Ok(Expr::Fun(ps, Box::new(body)))
            }
            Tok::If => {
                self.bump();
                let c = self.expr()?;
                self.expect(Tok::Then)?;
                let t = self.single()?;
                let e = if self.eat(&Tok::Else) { self.single()? } else { Expr::Unit };
                Ok(Expr::If(Box::new(c), Box::new(t), Box::new(e)))
            }
            Tok::Ident(_) if self.peek_at(1) == &Tok::Assign => {
                let r = self.ident()?;
                self.bump();
                let rhs = self.single()?;
                Ok(Expr::Assign(r, Box::new(rhs)))
            }
            _ => self.or_expr(),
        }
    }

    fn let_expr(&mut self) -> PResult<Expr> {
        self.expect(Tok::Let)?;
        if self.eat(&Tok::Rec) {
            return self.letrec_tail();
        }
        let name = self.ident()?;
        if self.peek() == &Tok::LParen {
            let ps = self.params()?;
            self.expect(Tok::Colon)?;
            let ret = self.ty()?;
            self.expect(Tok::Eq)?;
            let body = self.expr()?;
            self.expect(Tok::In)?;
            let cont = self.expr()?;
            let ty = ps.iter().rev().fold(ret, |acc, p| Type::arrow(p.ty.clone(), acc));
            let fun = Expr::Fun(ps, Box::new(body));
            return Ok(Expr::Let(Param { name, ty }, Box::new(fun), Box::new(cont)));
        }
        self.expect(Tok::Colon)?;
        let ty = self.ty()?;
        self.expect(Tok::Eq)?;
        let m = self.expr()?;
        self.expect(Tok::In)?;
        let n = self.expr()?;
        Ok(Expr::Let(Param { name, ty }, Box::new(m), Box::new(n)))
    }

    fn letrec_tail(&mut self) -> PResult<Expr> {
        let name = self.ident()?;
        let (ty, ps, body) = if self.peek() == &Tok::LParen {
            let ps = self.params()?;
            self.expect(Tok::Colon)?;
            let ret = self.ty()?;
            self.expect(Tok::Eq)?;
            let body = self.expr()?;
            let ty = ps.iter().rev().fold(ret, |acc, p| Type::arrow(p.ty.clone(), acc));
            (ty, ps, body)
        } else {
            self.expect(Tok::Colon)?;
            let ty = self.ty()?;
            self.expect(Tok::Eq)?;
            self.expect(Tok::Fun)?;
            let ps = self.params()?;
            self.expect(Tok::Arrow)?;
            let body = self.expr()?;
            (ty, ps, body)
        };
        self.expect(Tok::In)?;
        let cont = self.expr()?;
        Ok(Expr::Letrec(Param { name, ty }, ps, Box::new(body), Box::new(cont)))
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut a = self.and_expr()?;
        while matches!(self.peek(), Tok::OrOr | Tok::OrKw) {
            self.bump();
            let b = self.and_expr()?;
            a = Expr::BinOp(BinOp::Or, Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut a = self.cmp_expr()?;
        while matches!(self.peek(), Tok::AndAnd | Tok::AndKw) {
            self.bump();
            let b = self.cmp_expr()?;
            a = Expr::BinOp(BinOp::And, Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let a = self.add_expr()?;
        let op = match self.peek() {
            Tok::Eq | Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return Ok(a),
        };
        self.bump();
        let b = self.add_expr()?;
        Ok(Expr::BinOp(op, Box::new(a), Box::new(b)))
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut a = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(a),
            };
            self.bump();
            let b = self.mul_expr()?;
            a = Expr::BinOp(op, Box::new(a), Box::new(b));
        }
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut a = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash | Tok::Div => BinOp::Div,
                Tok::Mod => BinOp::Mod,
                _ => return Ok(a),
            };
            self.bump();
            let b = self.unary()?;
            a = Expr::BinOp(op, Box::new(a), Box::new(b));
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.eat(&Tok::Minus) {
            return Ok(match self.unary()? {
                Expr::Int(i) => Expr::Int(-i),
                e => Expr::BinOp(BinOp::Sub, Box::new(Expr::Int(0)), Box::new(e)),
            });
        }
        self.app()
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Int(_)
            | Tok::LParen
            | Tok::Bang
            | Tok::Skip
            | Tok::Fail
            | Tok::Fst
            | Tok::Snd
            | Tok::Assert
            | Tok::True
            | Tok::False => true,
            Tok::Ident(_) => self.peek_at(1) != &Tok::Assign,
            _ => false,
        }
    }

    fn app(&mut self) -> PResult<Expr> {
        let head = self.atom()?;
        let mut args = Vec::new();
        while self.starts_atom() {
            args.push(self.atom()?);
        }
        if args.is_empty() {
            Ok(head)
        } else {
            Ok(Expr::App(Box::new(head), args))
        }
    }

    fn atom(&mut self) -> PResult<Expr> {
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                Ok(Expr::Int(i))
            }
            Tok::True => {
                self.bump();
                Ok(Expr::Int(1))
            }
            Tok::False => {
                self.bump();
                Ok(Expr::Int(0))
            }
            Tok::Skip => {
                self.bump();
                Ok(Expr::Unit)
            }
            Tok::Fail => {
                self.bump();
                Ok(Expr::Fail)
            }
            Tok::Ident(_) => {
                let id = self.ident()?;
                if self.eat(&Tok::Incr) {
                    Ok(Expr::Incr(id))
                } else {
                    Ok(Expr::Name(id))
                }
            }
            Tok::Bang => {
                self.bump();
                Ok(Expr::Deref(self.ident()?))
            }
            Tok::Assert => {
                self.bump();
                Ok(Expr::Assert(Box::new(self.atom()?)))
            }
            Tok::Fst | Tok::Snd => {
                let side = if self.bump() == Tok::Fst { Side::First } else { Side::Second };
                let ann = if self.eat(&Tok::Colon) { Some(self.atom_ty()?) } else { None };
                Ok(Expr::Proj(side, ann, Box::new(self.atom()?)))
            }
            Tok::LParen => {
                self.bump();
                if self.eat(&Tok::RParen) {
                    return Ok(Expr::Unit);
                }
                let e = self.expr()?;
                match self.peek() {
                    Tok::Comma => {
                        self.bump();
                        let b = self.expr()?;
                        self.expect(Tok::RParen)?;
                        Ok(Expr::Pair(Box::new(e), Box::new(b)))
                    }
                    Tok::Colon => {
                        self.bump();
                        let t = self.ty()?;
                        self.expect(Tok::RParen)?;
                        Ok(Expr::Ascribe(Box::new(e), t))
                    }
                    _ => {
                        self.expect(Tok::RParen)?;
                        Ok(e)
                    }
                }
            }
            _ => self.error(&["expression"]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn name(e: &Expr) -> &str {
        match e {
            Expr::Name(i) => &i.name,
            other => panic!("not a name: {other:?}"),
        }
    }

    #[test]
    fn application_binds_tighter_than_operators() {
        match parse_expr("mc91 n == 91").unwrap() {
            Expr::BinOp(BinOp::Eq, a, b) => {
                assert!(matches!(*a, Expr::App(..)));
                assert_eq!(*b, Expr::Int(91));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn negative_literals_fold() {
        match parse_expr("x + -10").unwrap() {
            Expr::BinOp(BinOp::Add, _, b) => assert_eq!(*b, Expr::Int(-10)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sequencing_is_below_if() {
        match parse_expr("if c then a else b; d").unwrap() {
            Expr::Seq(a, b) => {
                assert!(matches!(*a, Expr::If(..)));
                assert_eq!(name(&b), "d");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn let_body_is_greedy() {
        match parse_expr("let x :(Int) = 1 in a; b").unwrap() {
            Expr::Let(_, _, body) => assert!(matches!(*body, Expr::Seq(..))),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn assignment_and_increment() {
        match parse_expr("r := !r + 1; r++").unwrap() {
            Expr::Seq(a, b) => {
                assert!(matches!(*a, Expr::Assign(..)));
                assert!(matches!(*b, Expr::Incr(..)));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pairs_projections_and_ascriptions() {
        assert!(matches!(parse_expr("fst:(Int) (1, 2)").unwrap(), Expr::Proj(Side::First, Some(Type::Int), _)));
        assert!(matches!(parse_expr("(fail : Int)").unwrap(), Expr::Ascribe(_, Type::Int)));
    }

    #[test]
    fn method_terminator_is_recognised() {
        let src = "Methods:\n f (x:Int) :(Int) = x;\n g (y:Int) :(Int) = f y;\nMain (n:Int) :(Unit): assert (g n == n)";
        let p = parse(src).unwrap();
        assert_eq!(p.methods.len(), 2);
        assert_eq!(p.main.params.len(), 1);
    }

    #[test]
    fn main_without_parameters() {
        let p = parse("Main () :(Unit): skip").unwrap();
        assert!(p.main.params.is_empty());
        assert_eq!(p.main.body, Expr::Unit);
    }

    #[test]
    fn refs_section() {
        let p = parse("Refs: r :(Int) = -3; s :(Int * Unit) = (1, ()); Main () :(Int): !r").unwrap();
        assert_eq!(p.refs.len(), 2);
        assert_eq!(p.refs[0].init, Literal::Int(-3));
    }

    #[test]
    fn errors_report_position_and_expectation() {
        match parse("Main () :(Unit): let x = 1 in x") {
            Err(ParseError::Syntax { line, col, expected, .. }) => {
                assert_eq!((line, col), (1, 24));
                assert!(expected.iter().any(|e| e.contains(':')));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn arrow_types_are_right_associative() {
        let p = parse("Main (f:Int) :(Int -> Int -> Int): fun (a:Int) (b:Int) -> a").unwrap();
        assert_eq!(p.main.ret, Type::arrow(Type::Int, Type::arrow(Type::Int, Type::Int)));
    }
}
