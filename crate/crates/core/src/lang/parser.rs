//! Recursive-descent parser for MiniLang. See `docs/grammar.ebnf`.

use std::collections::HashSet;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::FrontendError;

const RESERVED: [&str; 15] = [
    "class", "public", "private", "int", "float", "bool", "string", "void", "if", "else", "while", "return", "throw",
    "true", "false",
];

pub fn parse_class(src: &str) -> Result<ClassDecl, FrontendError> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, at: 0, next_expr: 0, next_stmt: 0, next_pred: 0 };
    p.class()
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    next_expr: ExprId,
    next_stmt: StmtId,
    next_pred: PredId,
}

fn type_keyword(name: &str) -> Option<Type> {
    match name {
        "int" => Some(Type::Int),
        "float" => Some(Type::Float),
        "bool" => Some(Type::Bool),
        "string" => Some(Type::Str),
        _ => None,
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.tokens[(self.at + k).min(self.tokens.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        self.tokens[self.at].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn unexpected<T>(&self, wanted: &str) -> Result<T, FrontendError> {
        let found = match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::IntMinMagnitude => "`9223372036854775808`".to_string(),
            Tok::Float(v) => format!("`{v:?}`"),
            Tok::Str(s) => format!("{s:?}"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        };
        Err(FrontendError::syntax(self.pos(), format!("expected {wanted}, found {found}")))
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), FrontendError> {
        if self.is_punct(p) {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&format!("`{p}`"))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), FrontendError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            self.unexpected(&format!("`{kw}`"))
        }
    }

    fn ident(&mut self) -> Result<(String, Pos), FrontendError> {
        match self.peek().clone() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let pos = self.pos();
                self.bump();
                Ok((s, pos))
            }
            _ => self.unexpected("identifier"),
        }
    }

    fn value_type(&mut self) -> Result<Type, FrontendError> {
        if let Tok::Ident(s) = self.peek() {
            if let Some(t) = type_keyword(s) {
                self.bump();
                return Ok(t);
            }
        }
        self.unexpected("type")
    }

    fn class(&mut self) -> Result<ClassDecl, FrontendError> {
        self.expect_keyword("class")?;
        let (name, _) = self.ident()?;
        self.expect_punct("{")?;
        let mut fields: Vec<FieldDecl> = Vec::new();
        let mut ctor: Option<MethodDecl> = None;
        let mut methods: Vec<MethodDecl> = Vec::new();
        let mut seen: HashSet<String> = HashSet::new();
        let mut field_names: HashSet<String> = HashSet::new();

        while !self.is_punct("}") {
            let pos = self.pos();
            match self.peek().clone() {
                Tok::Ident(s) if type_keyword(&s).is_some() => {
                    let ty = self.value_type()?;
                    let (fname, fpos) = self.ident()?;
                    self.expect_punct(";")?;
                    if !field_names.insert(fname.clone()) {
                        return Err(FrontendError::ty(fpos, format!("duplicate field `{fname}`")));
                    }
                    fields.push(FieldDecl { name: fname, ty });
                }
                Tok::Ident(s) if s == "public" || s == "private" => {
                    let m = self.method()?;
                    if m.name == name || !seen.insert(m.name.clone()) {
                        return Err(FrontendError::DuplicateMethod { name: m.name, line: pos.line, col: pos.col });
                    }
                    methods.push(m);
                }
                Tok::Ident(s) if s == name && matches!(self.peek_at(1), Tok::Punct("(")) => {
                    if ctor.is_some() {
                        return Err(FrontendError::DuplicateMethod { name, line: pos.line, col: pos.col });
                    }
                    self.bump();
                    let params = self.params()?;
                    let body = self.block()?;
                    ctor = Some(MethodDecl {
                        name: name.clone(),
                        pos,
                        visibility: Visibility::Public,
                        is_ctor: true,
                        params,
                        ret: None,
                        body,
                        frame_size: 0,
                    });
                }
                _ => return self.unexpected("field, constructor or method"),
            }
        }
        self.expect_punct("}")?;
        if !matches!(self.peek(), Tok::Eof) {
            return self.unexpected("end of input");
        }
        let mut all = Vec::with_capacity(methods.len() + 1);
        all.extend(ctor);
        all.extend(methods);
        Ok(ClassDecl { name, fields, methods: all })
    }

    fn method(&mut self) -> Result<MethodDecl, FrontendError> {
        let pos = self.pos();
        let visibility = if self.is_keyword("public") { Visibility::Public } else { Visibility::Private };
        self.bump();
        let ret = if self.is_keyword("void") {
            self.bump();
            None
        } else {
            Some(self.value_type()?)
        };
        let (name, _) = self.ident()?;
        let params = self.params()?;
        let body = self.block()?;
        Ok(MethodDecl { name, pos, visibility, is_ctor: false, params, ret, body, frame_size: 0 })
    }

    fn params(&mut self) -> Result<Vec<Param>, FrontendError> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        if !self.is_punct(")") {
            loop {
                let ty = self.value_type()?;
                let (name, _) = self.ident()?;
                params.push(Param { name, ty });
                if self.is_punct(",") {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.expect_punct(")")?;
        Ok(params)
    }

    fn block(&mut self) -> Result<Vec<Stmt>, FrontendError> {
        self.expect_punct("{")?;
        let mut body = Vec::new();
        while !self.is_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return self.unexpected("`}`");
            }
            body.push(self.stmt()?);
        }
        self.expect_punct("}")?;
        Ok(body)
    }

    fn new_stmt(&mut self) -> (StmtId, Line) {
        let id = self.next_stmt;
        self.next_stmt += 1;
        (id, id + 1)
    }

    fn stmt(&mut self) -> Result<Stmt, FrontendError> {
        let pos = self.pos();
        let Tok::Ident(head) = self.peek().clone() else {
            let (id, line) = self.new_stmt();
            let e = self.expr()?;
            self.expect_punct(";")?;
            return Ok(Stmt { id, line, pos, kind: StmtKind::Expr(e) });
        };
        let (id, line) = self.new_stmt();
        let kind = if let Some(ty) = type_keyword(&head) {
            self.bump();
            let (name, _) = self.ident()?;
            self.expect_punct("=")?;
            let init = self.expr()?;
            self.expect_punct(";")?;
            StmtKind::Decl { ty, name, slot: 0, init }
        } else if head == "if" {
            return self.if_stmt(id, line, pos);
        } else if head == "while" {
            self.bump();
            let pred = self.new_pred();
            self.expect_punct("(")?;
            let cond = self.expr()?;
            self.expect_punct(")")?;
            let body = self.block()?;
            StmtKind::While { pred, cond, body }
        } else if head == "return" {
            self.bump();
            let value = if self.is_punct(";") { None } else { Some(self.expr()?) };
            self.expect_punct(";")?;
            StmtKind::Return(value)
        } else if head == "throw" {
            self.bump();
            let kpos = self.pos();
            let (name, _) = self.ident()?;
            let Some(kind) = ExceptionKind::declared(&name) else {
                return Err(FrontendError::syntax(kpos, format!("unknown exception kind `{name}` (expected E1..E5)")));
            };
            self.expect_punct(";")?;
            StmtKind::Throw(kind)
        } else if matches!(self.peek_at(1), Tok::Punct("=")) {
            let (name, _) = self.ident()?;
            self.bump();
            let value = self.expr()?;
            self.expect_punct(";")?;
            StmtKind::Assign { name, place: Place::Unresolved, value }
        } else {
            let e = self.expr()?;
            self.expect_punct(";")?;
            StmtKind::Expr(e)
        };
        Ok(Stmt { id, line, pos, kind })
    }

    fn new_pred(&mut self) -> PredId {
        let p = self.next_pred;
        self.next_pred += 1;
        p
    }

    fn if_stmt(&mut self, id: StmtId, line: Line, pos: Pos) -> Result<Stmt, FrontendError> {
        self.expect_keyword("if")?;
        let pred = self.new_pred();
        self.expect_punct("(")?;
        let cond = self.expr()?;
        self.expect_punct(")")?;
        let then_body = self.block()?;
        let else_body = if self.is_keyword("else") {
            self.bump();
            if self.is_keyword("if") {
                let ipos = self.pos();
                let (iid, iline) = self.new_stmt();
                Some(vec![self.if_stmt(iid, iline, ipos)?])
            } else {
                Some(self.block()?)
            }
        } else {
            None
        };
        Ok(Stmt { id, line, pos, kind: StmtKind::If { pred, cond, then_body, else_body } })
    }

    fn mk(&mut self, pos: Pos, kind: ExprKind) -> Expr {
        let id = self.next_expr;
        self.next_expr += 1;
        Expr { id, pos, ty: Type::Int, kind }
    }

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        self.binary(1)
    }

    fn peek_binop(&self) -> Option<BinOp> {
        let Tok::Punct(p) = self.peek() else { return None };
        match *p {
            "||" => Some(BinOp::Or),
            "&&" => Some(BinOp::And),
            other => ArithOp::from_token(other)
                .map(BinOp::Arith)
                .or_else(|| RelOp::from_token(other).map(BinOp::Rel)),
        }
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, FrontendError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.peek_binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            let pos = self.pos();
            self.bump();
            // Relational operators do not chain: `a < b < c` is rejected by the type checker anyway.
            let rhs = self.binary(prec + 1)?;
            lhs = self.mk(pos, ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, FrontendError> {
        let pos = self.pos();
        if self.is_punct("-") {
            self.bump();
            if matches!(self.peek(), Tok::IntMinMagnitude) {
                self.bump();
                return Ok(self.mk(pos, ExprKind::Lit(Literal::Int(i64::MIN))));
            }
            let inner = self.unary()?;
            // Negated numeric literals fold into a single literal.
            return Ok(match inner.kind {
                ExprKind::Lit(Literal::Int(v)) if v != i64::MIN => {
                    Expr { kind: ExprKind::Lit(Literal::Int(-v)), pos, ..inner }
                }
                ExprKind::Lit(Literal::Float(v)) => Expr { kind: ExprKind::Lit(Literal::Float(-v)), pos, ..inner },
                _ => self.mk(pos, ExprKind::Unary(UnaryOp::Neg, Box::new(inner))),
            });
        }
        if self.is_punct("!") {
            self.bump();
            let inner = self.unary()?;
            return Ok(self.mk(pos, ExprKind::Unary(UnaryOp::Not, Box::new(inner))));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, FrontendError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(self.mk(pos, ExprKind::Lit(Literal::Int(v))))
            }
            Tok::IntMinMagnitude => Err(FrontendError::syntax(pos, "integer literal out of range")),
            Tok::Float(v) => {
                self.bump();
                Ok(self.mk(pos, ExprKind::Lit(Literal::Float(v))))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(self.mk(pos, ExprKind::Lit(Literal::Str(s))))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(self.mk(pos, ExprKind::Lit(Literal::Bool(s == "true"))))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            Tok::Ident(_) => {
                let (name, _) = self.ident()?;
                if self.is_punct("(") {
                    self.bump();
                    let mut args = Vec::new();
                    if !self.is_punct(")") {
                        loop {
                            args.push(self.expr()?);
                            if self.is_punct(",") {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                    }
                    self.expect_punct(")")?;
                    Ok(self.mk(pos, ExprKind::Call { name, method: None, args }))
                } else {
                    Ok(self.mk(pos, ExprKind::Var { name, place: Place::Unresolved }))
                }
            }
            _ => self.unexpected("expression"),
        }
    }
}
