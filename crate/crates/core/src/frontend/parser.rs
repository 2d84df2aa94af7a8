//! Recursive-descent parser for the supported PL/pgSQL subset.

use std::collections::HashSet;

use crate::error::CompileError;
use crate::expr::{BinOp, Builtin, Expr, QueryId, UnOp};
use crate::frontend::ast::{Decl, FunctionAst, Param, Stmt};
use crate::frontend::lexer::{tokenize, LineMap, Tok, Token};
use crate::frontend::query::QueryTemplate;
use crate::value::{TypeTag, Value};

/// Statement keywords outside the subset; they are reported by name.
const UNSUPPORTED: &[&str] = &[
    "foreach", "raise", "perform", "execute", "case", "begin", "declare", "get", "open", "fetch",
    "close", "assert", "call", "commit", "rollback", "select", "insert", "update", "delete",
    "goto",
];

const RESERVED: &[&str] = &[
    "and", "or", "not", "is", "null", "true", "false", "if", "then", "else", "elsif", "end",
    "loop", "for", "while", "in", "exit", "continue", "return", "when", "begin", "declare", "cast",
    "as", "row",
];

pub fn parse_function(source: &str) -> Result<FunctionAst, CompileError> {
    let lines = LineMap::new(source);
    let toks = tokenize(source, 0, &lines)?;
    let mut header = Parser::new(toks, lines.clone());
    let (name, params, return_type, body_tok) = header.header()?;
    let (body, start) = match body_tok.tok {
        Tok::Dollar { body, start } => (body, start),
        _ => unreachable!("header() returns the dollar-quoted body"),
    };
    let toks = tokenize(&body, start, &lines)?;
    let mut p = Parser::new(toks, lines);
    for prm in &params {
        if !p.scope.insert(prm.name.clone()) {
            return Err(CompileError::Semantic(format!(
                "duplicate parameter `{}`",
                prm.name
            )));
        }
    }
    p.types
        .extend(params.iter().map(|p| (p.name.clone(), p.ty)));
    let decls = p.declarations()?;
    let body = p.block_body()?;
    if !always_returns(&body) {
        return Err(CompileError::Semantic(format!(
            "control can reach the end of function `{name}` without RETURN"
        )));
    }
    Ok(FunctionAst {
        name,
        params,
        decls,
        body,
        return_type,
        queries: p.queries,
    })
}

/// Whether control can never fall off the end of `stmts`.
fn always_returns(stmts: &[Stmt]) -> bool {
    stmts.iter().any(|s| match s {
        Stmt::Return(_) => true,
        Stmt::If {
            then_branch,
            else_branch,
            ..
        } => always_returns(then_branch) && always_returns(else_branch),
        // a bare LOOP that nothing exits never falls through
        Stmt::Loop { label, body } => !exits_loop(body, label.as_deref(), 0),
        _ => false,
    })
}

/// Whether an EXIT in `stmts` leaves the loop labelled `label` that sits `depth` loops up.
fn exits_loop(stmts: &[Stmt], label: Option<&str>, depth: usize) -> bool {
    stmts.iter().any(|s| match s {
        Stmt::Exit { label: l, .. } => match l {
            None => depth == 0,
            Some(l) => Some(l.as_str()) == label,
        },
        Stmt::If {
            then_branch,
            else_branch,
            ..
        } => exits_loop(then_branch, label, depth) || exits_loop(else_branch, label, depth),
        Stmt::ForRange { body, .. } | Stmt::While { body, .. } | Stmt::Loop { body, .. } => {
            exits_loop(body, label, depth + 1)
        }
        _ => false,
    })
}

struct Parser<'s> {
    toks: Vec<Token>,
    i: usize,
    lines: LineMap<'s>,
    scope: HashSet<String>,
    types: Vec<(String, TypeTag)>,
    /// Names of loop variables currently in scope (not assignable).
    loop_vars: Vec<String>,
    /// Labels of enclosing loops, innermost last.
    loops: Vec<Option<String>>,
    queries: Vec<QueryTemplate>,
}

impl<'s> Parser<'s> {
    fn new(toks: Vec<Token>, lines: LineMap<'s>) -> Self {
        Parser {
            toks,
            i: 0,
            lines,
            scope: HashSet::new(),
            types: Vec::new(),
            loop_vars: Vec::new(),
            loops: Vec::new(),
            queries: Vec::new(),
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> usize {
        self.toks[self.i].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> CompileError {
        self.lines.syntax(self.pos(), message)
    }

    fn unsupported(&self, construct: impl Into<String>) -> CompileError {
        let (line, col) = self.lines.locate(self.pos());
        CompileError::Unsupported {
            construct: construct.into(),
            line,
            col,
        }
    }

    fn describe(&self) -> String {
        match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(i) => format!("`{i}`"),
            Tok::Float(x) => format!("`{x}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Dollar { .. } => "dollar-quoted string".into(),
            Tok::Query { .. } => "subquery".into(),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".into(),
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), CompileError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.err(format!(
                "expected {}, found {}",
                kw.to_uppercase(),
                self.describe()
            )))
        }
    }

    fn eat_sym(&mut self, sym: &str) -> bool {
        if matches!(self.peek(), Tok::Sym(s) if *s == sym) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, sym: &str) -> Result<(), CompileError> {
        if self.eat_sym(sym) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{sym}`, found {}", self.describe())))
        }
    }

    fn ident(&mut self) -> Result<String, CompileError> {
        match self.peek().clone() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.err(format!("expected identifier, found {}", self.describe()))),
        }
    }

    fn type_tag(&mut self) -> Result<TypeTag, CompileError> {
        let name = match self.peek().clone() {
            Tok::Ident(s) => s,
            _ => return Err(self.err(format!("expected type name, found {}", self.describe()))),
        };
        if name == "double" && matches!(self.peek_at(1), Tok::Ident(p) if p == "precision") {
            self.bump();
            self.bump();
            return Ok(TypeTag::Float);
        }
        let ty =
            TypeTag::from_name(&name).ok_or_else(|| self.unsupported(format!("type {name}")))?;
        self.bump();
        if matches!(self.peek(), Tok::Sym("(")) {
            // varchar(10), numeric(5,2), ...: the modifier does not change the semantics here
            while !self.eat_sym(")") {
                if matches!(self.peek(), Tok::Eof) {
                    return Err(self.err("unterminated type modifier"));
                }
                self.bump();
            }
        }
        Ok(ty)
    }

    fn header(&mut self) -> Result<(String, Vec<Param>, TypeTag, Token), CompileError> {
        self.expect_kw("create")?;
        if self.eat_kw("or") {
            self.expect_kw("replace")?;
        }
        if self.is_kw("procedure") {
            return Err(self.unsupported("PROCEDURE"));
        }
        self.expect_kw("function")?;
        let name = self.ident()?;
        self.expect_sym("(")?;
        let mut params = Vec::new();
        if !self.eat_sym(")") {
            loop {
                if self.is_kw("out") || self.is_kw("inout") || self.is_kw("variadic") {
                    return Err(self.unsupported(format!(
                        "{} parameters",
                        self.describe().trim_matches('`').to_uppercase()
                    )));
                }
                self.eat_kw("in");
                let pname = self.ident()?;
                let ty = self.type_tag()?;
                params.push(Param { name: pname, ty });
                if self.eat_sym(")") {
                    break;
                }
                self.expect_sym(",")?;
            }
        }
        self.expect_kw("returns")?;
        if self.is_kw("setof") || self.is_kw("table") {
            return Err(self.unsupported("set-returning functions"));
        }
        let ret = self.type_tag()?;
        let mut body = None;
        loop {
            if self.eat_kw("as") {
                if !matches!(self.peek(), Tok::Dollar { .. }) {
                    return Err(self.err("function body must be dollar-quoted"));
                }
                body = Some(self.bump());
            } else if self.eat_kw("language") {
                let lang = self.ident()?;
                if lang != "plpgsql" {
                    return Err(self.unsupported(format!("LANGUAGE {lang}")));
                }
            } else if matches!(self.peek(), Tok::Ident(_)) {
                // volatility and similar attributes
                self.bump();
            } else {
                break;
            }
        }
        self.eat_sym(";");
        if !matches!(self.peek(), Tok::Eof) {
            return Err(self.err(format!(
                "unexpected {} after function definition",
                self.describe()
            )));
        }
        let body = body.ok_or_else(|| self.err("missing function body"))?;
        Ok((name, params, ret, body))
    }

    fn declarations(&mut self) -> Result<Vec<Decl>, CompileError> {
        let mut decls = Vec::new();
        if !self.eat_kw("declare") {
            return Ok(decls);
        }
        while !self.is_kw("begin") {
            let at = self.pos();
            let name = self.ident()?;
            if self.is_kw("constant") {
                return Err(self.unsupported("CONSTANT"));
            }
            let ty = self.type_tag()?;
            if self.is_kw("not") {
                return Err(self.unsupported("NOT NULL declarations"));
            }
            let init = if self.eat_sym(":=") || self.eat_sym("=") || self.eat_kw("default") {
                let start = self.queries.len();
                let e = self.expr()?;
                self.note_result_type(start, &e, ty);
                Some(e)
            } else {
                None
            };
            self.expect_sym(";")?;
            if !self.scope.insert(name.clone()) {
                return Err(self
                    .lines
                    .syntax(at, format!("duplicate variable name `{name}`")));
            }
            self.types.push((name.clone(), ty));
            decls.push(Decl { name, ty, init });
        }
        Ok(decls)
    }

    fn block_body(&mut self) -> Result<Vec<Stmt>, CompileError> {
        self.expect_kw("begin")?;
        let body = self.statements(&["end"])?;
        self.expect_kw("end")?;
        self.eat_sym(";");
        if !matches!(self.peek(), Tok::Eof) {
            return Err(self.err(format!("unexpected {} after END", self.describe())));
        }
        Ok(body)
    }

    /// Statements up to (not including) one of the `stop` keywords.
    fn statements(&mut self, stop: &[&str]) -> Result<Vec<Stmt>, CompileError> {
        let mut out = Vec::new();
        loop {
            if let Tok::Ident(k) = self.peek() {
                if stop.contains(&k.as_str()) {
                    return Ok(out);
                }
            }
            if matches!(self.peek(), Tok::Eof) {
                return Err(self.err(format!(
                    "expected {}, found end of input",
                    stop[0].to_uppercase()
                )));
            }
            if let Some(s) = self.statement()? {
                out.push(s);
            }
        }
    }

    fn statement(&mut self) -> Result<Option<Stmt>, CompileError> {
        let label = if self.eat_sym("<<") {
            let l = self.ident()?;
            self.expect_sym(">>")?;
            if !(self.is_kw("for") || self.is_kw("while") || self.is_kw("loop")) {
                return Err(self.err("labels are only supported on loops"));
            }
            Some(l)
        } else {
            None
        };
        let kw = match self.peek() {
            Tok::Ident(k) => k.clone(),
            _ => return Err(self.err(format!("expected statement, found {}", self.describe()))),
        };
        if UNSUPPORTED.contains(&kw.as_str()) {
            return Err(self.unsupported(kw.to_uppercase()));
        }
        let stmt = match kw.as_str() {
            "if" => self.if_stmt()?,
            "for" => self.for_stmt(label)?,
            "while" => {
                self.bump();
                let cond = self.expr()?;
                let body = self.loop_body(&label)?;
                Stmt::While { label, cond, body }
            }
            "loop" => {
                let body = self.loop_body(&label)?;
                Stmt::Loop { label, body }
            }
            "exit" | "continue" => {
                self.bump();
                if self.loops.is_empty() {
                    return Err(self.err(format!("{} outside a loop", kw.to_uppercase())));
                }
                let target = match self.peek() {
                    Tok::Ident(l) if l != "when" => {
                        let l = l.clone();
                        if !self.loops.iter().any(|x| x.as_deref() == Some(l.as_str())) {
                            return Err(self.err(format!("no enclosing loop labelled `{l}`")));
                        }
                        self.bump();
                        Some(l)
                    }
                    _ => None,
                };
                let cond = if self.eat_kw("when") {
                    Some(self.expr()?)
                } else {
                    None
                };
                self.expect_sym(";")?;
                if kw == "exit" {
                    Stmt::Exit {
                        label: target,
                        cond,
                    }
                } else {
                    Stmt::Continue {
                        label: target,
                        cond,
                    }
                }
            }
            "return" => {
                self.bump();
                if self.is_kw("next") || self.is_kw("query") {
                    return Err(self.unsupported(format!(
                        "RETURN {}",
                        self.describe().trim_matches('`').to_uppercase()
                    )));
                }
                if matches!(self.peek(), Tok::Sym(";")) {
                    return Err(self.err("RETURN requires a value"));
                }
                let e = self.expr()?;
                self.expect_sym(";")?;
                Stmt::Return(e)
            }
            "null" => {
                self.bump();
                self.expect_sym(";")?;
                return Ok(None);
            }
            _ => self.assignment()?,
        };
        Ok(Some(stmt))
    }

    fn assignment(&mut self) -> Result<Stmt, CompileError> {
        let at = self.pos();
        let var = self.ident()?;
        if !self.scope.contains(&var) {
            let (line, col) = self.lines.locate(at);
            return Err(CompileError::Undeclared {
                name: var,
                line,
                col,
            });
        }
        if self.loop_vars.contains(&var) {
            return Err(self
                .lines
                .syntax(at, format!("cannot assign to loop variable `{var}`")));
        }
        if !(self.eat_sym(":=") || self.eat_sym("=")) {
            return Err(self.err(format!("expected `:=` or `=`, found {}", self.describe())));
        }
        let start = self.queries.len();
        let expr = self.expr()?;
        if let Some(ty) = self.type_of(&var) {
            self.note_result_type(start, &expr, ty);
        }
        self.expect_sym(";")?;
        Ok(Stmt::Assign { var, expr })
    }

    fn type_of(&self, var: &str) -> Option<TypeTag> {
        if self.loop_vars.iter().any(|v| v == var) {
            return Some(TypeTag::Int);
        }
        self.types
            .iter()
            .rev()
            .find(|(n, _)| n == var)
            .map(|(_, t)| *t)
    }

    /// A query assigned directly to a variable takes on that variable's type.
    fn note_result_type(&mut self, first_new_query: usize, e: &Expr, ty: TypeTag) {
        if let Expr::Query { id, .. } = e {
            if id.0 as usize == first_new_query + 1 {
                self.queries[first_new_query].result_type = Some(ty);
            }
        }
    }

    fn if_stmt(&mut self) -> Result<Stmt, CompileError> {
        self.bump();
        let cond = self.expr()?;
        self.expect_kw("then")?;
        let then_branch = self.statements(&["elsif", "elseif", "else", "end"])?;
        let else_branch = if self.is_kw("elsif") || self.is_kw("elseif") {
            // the nested IF consumes the shared END IF
            vec![self.if_stmt()?]
        } else {
            let e = if self.eat_kw("else") {
                self.statements(&["end"])?
            } else {
                Vec::new()
            };
            self.expect_kw("end")?;
            self.expect_kw("if")?;
            self.expect_sym(";")?;
            e
        };
        Ok(Stmt::If {
            cond,
            then_branch,
            else_branch,
        })
    }

    fn for_stmt(&mut self, label: Option<String>) -> Result<Stmt, CompileError> {
        self.bump();
        let at = self.pos();
        let var = self.ident()?;
        self.expect_kw("in")?;
        if self.is_kw("reverse") {
            return Err(self.unsupported("FOR ... REVERSE"));
        }
        if matches!(self.peek(), Tok::Query { .. }) || self.is_kw("select") || self.is_kw("execute")
        {
            return Err(self.unsupported("FOR over query results"));
        }
        let lo = self.expr()?;
        self.expect_sym("..")?;
        let hi = self.expr()?;
        if self.is_kw("by") {
            return Err(self.unsupported("FOR ... BY"));
        }
        if self.scope.contains(&var) {
            return Err(self.lines.syntax(
                at,
                format!("loop variable `{var}` shadows another variable"),
            ));
        }
        self.scope.insert(var.clone());
        self.loop_vars.push(var.clone());
        let body = self.loop_body(&label);
        self.loop_vars.pop();
        self.scope.remove(&var);
        Ok(Stmt::ForRange {
            label,
            var,
            lo,
            hi,
            body: body?,
        })
    }

    /// `LOOP stmts END LOOP [label] ;`
    fn loop_body(&mut self, label: &Option<String>) -> Result<Vec<Stmt>, CompileError> {
        self.expect_kw("loop")?;
        self.loops.push(label.clone());
        let body = self.statements(&["end"]);
        self.loops.pop();
        let body = body?;
        self.expect_kw("end")?;
        self.expect_kw("loop")?;
        if let Tok::Ident(l) = self.peek().clone() {
            if Some(&l) != label.as_ref() {
                return Err(self.err(format!("END LOOP label `{l}` does not match")));
            }
            self.bump();
        }
        self.expect_sym(";")?;
        Ok(body)
    }

    // ---- expressions -------------------------------------------------------

    fn expr(&mut self) -> Result<Expr, CompileError> {
        let mut lhs = self.and_expr()?;
        while self.eat_kw("or") {
            lhs = Expr::binary(BinOp::Or, lhs, self.and_expr()?);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Expr, CompileError> {
        let mut lhs = self.not_expr()?;
        while self.eat_kw("and") {
            lhs = Expr::binary(BinOp::And, lhs, self.not_expr()?);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> Result<Expr, CompileError> {
        if self.eat_kw("not") {
            return Ok(Expr::Unary {
                op: UnOp::Not,
                arg: Box::new(self.not_expr()?),
            });
        }
        self.is_expr()
    }

    fn is_expr(&mut self) -> Result<Expr, CompileError> {
        let mut e = self.cmp_expr()?;
        while self.eat_kw("is") {
            let negated = self.eat_kw("not");
            self.expect_kw("null")?;
            e = Expr::IsNull {
                expr: Box::new(e),
                negated,
            };
        }
        Ok(e)
    }

    fn cmp_expr(&mut self) -> Result<Expr, CompileError> {
        let lhs = self.concat_expr()?;
        let op = match self.peek() {
            Tok::Sym("=") => BinOp::Eq,
            Tok::Sym("<>") | Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.concat_expr()?;
        if matches!(
            self.peek(),
            Tok::Sym("=" | "<>" | "!=" | "<" | "<=" | ">" | ">=")
        ) {
            return Err(self.err("comparison operators do not associate; add parentheses"));
        }
        Ok(Expr::binary(op, lhs, rhs))
    }

    fn concat_expr(&mut self) -> Result<Expr, CompileError> {
        let mut lhs = self.add_expr()?;
        while self.eat_sym("||") {
            lhs = Expr::binary(BinOp::Concat, lhs, self.add_expr()?);
        }
        Ok(lhs)
    }

    fn add_expr(&mut self) -> Result<Expr, CompileError> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => BinOp::Add,
                Tok::Sym("-") => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::binary(op, lhs, self.mul_expr()?);
        }
    }

    fn mul_expr(&mut self) -> Result<Expr, CompileError> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("*") => BinOp::Mul,
                Tok::Sym("/") => BinOp::Div,
                Tok::Sym("%") => BinOp::Mod,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = Expr::binary(op, lhs, self.unary_expr()?);
        }
    }

    fn unary_expr(&mut self) -> Result<Expr, CompileError> {
        if self.eat_sym("-") {
            // fold negative literals so that `-9223372036854775808` is representable
            match self.peek().clone() {
                Tok::Int(i) => {
                    self.bump();
                    return self.postfix(Expr::Lit(Value::Int((-i) as i64)));
                }
                Tok::Float(x) => {
                    self.bump();
                    return self.postfix(Expr::Lit(Value::Float(-x)));
                }
                _ => {}
            }
            return Ok(Expr::Unary {
                op: UnOp::Neg,
                arg: Box::new(self.unary_expr()?),
            });
        }
        if self.eat_sym("+") {
            return self.unary_expr();
        }
        let p = self.primary()?;
        self.postfix(p)
    }

    fn postfix(&mut self, mut e: Expr) -> Result<Expr, CompileError> {
        while self.eat_sym("::") {
            let ty = self.type_tag()?;
            e = Expr::Cast {
                expr: Box::new(e),
                ty,
            };
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<Expr, CompileError> {
        let at = self.pos();
        match self.peek().clone() {
            Tok::Int(i) => {
                self.bump();
                let v = i64::try_from(i)
                    .map_err(|_| self.lines.syntax(at, "integer literal out of range"))?;
                Ok(Expr::Lit(Value::Int(v)))
            }
            Tok::Float(x) => {
                self.bump();
                Ok(Expr::Lit(Value::Float(x)))
            }
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Lit(Value::Text(s)))
            }
            Tok::Query { text, .. } => {
                self.bump();
                let id = QueryId(self.queries.len() as u32 + 1);
                let q = QueryTemplate::scan(id, &text, &self.scope);
                let args = q.params.iter().map(Expr::var).collect();
                self.queries.push(q);
                Ok(Expr::Query { id, args })
            }
            Tok::Sym("(") => {
                self.bump();
                let first = self.expr()?;
                if self.eat_sym(")") {
                    return Ok(first);
                }
                let mut items = vec![first];
                while self.eat_sym(",") {
                    items.push(self.expr()?);
                }
                self.expect_sym(")")?;
                Ok(tuple(items))
            }
            Tok::Ident(name) => {
                self.bump();
                match name.as_str() {
                    "true" => return Ok(Expr::Lit(Value::Bool(true))),
                    "false" => return Ok(Expr::Lit(Value::Bool(false))),
                    "null" => return Ok(Expr::Lit(Value::Null)),
                    "cast" => {
                        self.expect_sym("(")?;
                        let e = self.expr()?;
                        self.expect_kw("as")?;
                        let ty = self.type_tag()?;
                        self.expect_sym(")")?;
                        return Ok(Expr::Cast {
                            expr: Box::new(e),
                            ty,
                        });
                    }
                    "row" => {
                        self.expect_sym("(")?;
                        let items = self.args()?;
                        return Ok(tuple(items));
                    }
                    _ => {}
                }
                if self.eat_sym("(") {
                    let func = Builtin::from_name(&name).ok_or_else(|| {
                        let (line, col) = self.lines.locate(at);
                        CompileError::Unsupported {
                            construct: format!("function {name}()"),
                            line,
                            col,
                        }
                    })?;
                    let args = self.args()?;
                    let (lo, hi) = func.arity();
                    if args.len() < lo || args.len() > hi {
                        return Err(self
                            .lines
                            .syntax(at, format!("wrong number of arguments to {name}()")));
                    }
                    return Ok(Expr::Builtin { func, args });
                }
                if RESERVED.contains(&name.as_str()) {
                    return Err(self
                        .lines
                        .syntax(at, format!("unexpected keyword `{name}`")));
                }
                if self.scope.contains(&name) {
                    return Ok(Expr::Var(name));
                }
                let (line, col) = self.lines.locate(at);
                Err(CompileError::Undeclared { name, line, col })
            }
            _ => Err(self.err(format!("expected expression, found {}", self.describe()))),
        }
    }

    /// Comma-separated expressions after an opening `(`, through the closing `)`.
    fn args(&mut self) -> Result<Vec<Expr>, CompileError> {
        let mut out = Vec::new();
        if self.eat_sym(")") {
            return Ok(out);
        }
        loop {
            out.push(self.expr()?);
            if self.eat_sym(")") {
                return Ok(out);
            }
            self.expect_sym(",")?;
        }
    }
}

/// Tuples of literals are literals themselves, so printing and re-parsing agree.
fn tuple(items: Vec<Expr>) -> Expr {
    if items.iter().all(|e| matches!(e, Expr::Lit(_))) {
        Expr::Lit(Value::Tuple(
            items
                .into_iter()
                .map(|e| match e {
                    Expr::Lit(v) => v,
                    _ => unreachable!(),
                })
                .collect(),
        ))
    } else {
        Expr::Tuple(items)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wrap(body: &str) -> String {
        format!("CREATE FUNCTION f(n int) RETURNS int AS $$\n{body}\n$$ LANGUAGE PLPGSQL;")
    }

    #[test]
    fn minimal_function() {
        let f = parse_function(
            "CREATE FUNCTION k() RETURNS int AS $$ BEGIN RETURN 0; END; $$ LANGUAGE plpgsql",
        )
        .unwrap();
        assert!(f.decls.is_empty());
        assert_eq!(f.body, vec![Stmt::Return(Expr::int(0))]);
    }

    #[test]
    fn foreach_is_unsupported() {
        let e = parse_function(&wrap(
            "BEGIN FOREACH x IN ARRAY a LOOP END LOOP; RETURN 0; END;",
        ))
        .unwrap_err();
        assert_eq!(
            e,
            CompileError::Unsupported {
                construct: "FOREACH".into(),
                line: 2,
                col: 7
            }
        );
    }

    #[test]
    fn undeclared_variables_are_reported_with_position() {
        let e = parse_function(&wrap("BEGIN\n  RETURN n + m;\nEND;")).unwrap_err();
        assert_eq!(
            e,
            CompileError::Undeclared {
                name: "m".into(),
                line: 3,
                col: 14
            }
        );
    }

    #[test]
    fn missing_return_is_rejected() {
        let e = parse_function(&wrap("BEGIN IF n > 0 THEN RETURN 1; END IF; END;")).unwrap_err();
        assert!(matches!(e, CompileError::Semantic(_)));
        // an infinite LOOP never falls through
        parse_function(&wrap("BEGIN LOOP n = n + 1; END LOOP; END;")).unwrap();
    }

    #[test]
    fn exit_labels_must_name_enclosing_loops() {
        let e =
            parse_function(&wrap("BEGIN LOOP EXIT outer; END LOOP; RETURN 0; END;")).unwrap_err();
        assert!(matches!(e, CompileError::Syntax { .. }));
        parse_function(&wrap("BEGIN <<outer>> LOOP LOOP EXIT outer WHEN n > 0; END LOOP; END LOOP outer; RETURN 0; END;"))
            .unwrap();
    }

    #[test]
    fn elsif_nests_in_else() {
        let f = parse_function(&wrap(
            "BEGIN IF n = 0 THEN RETURN 0; ELSIF n = 1 THEN RETURN 1; ELSE RETURN 2; END IF; END;",
        ))
        .unwrap();
        match &f.body[0] {
            Stmt::If { else_branch, .. } => assert!(matches!(else_branch[0], Stmt::If { .. })),
            s => panic!("{s:?}"),
        }
    }

    #[test]
    fn identical_query_texts_get_distinct_ids() {
        let f = parse_function(&wrap(
            "DECLARE a int; b int; BEGIN a = (SELECT t.v FROM t WHERE t.k = n); b = (SELECT t.v FROM t WHERE t.k = n); RETURN a + b; END;",
        ))
        .unwrap();
        assert_eq!(f.queries.len(), 2);
        assert_eq!(f.queries[0].id, QueryId(1));
        assert_eq!(f.queries[1].id, QueryId(2));
        assert_eq!(f.queries[0].params, vec!["n"]);
        assert_eq!(f.queries[1].result_type, Some(TypeTag::Int));
    }

    #[test]
    fn negative_literals_fold() {
        let f = parse_function(&wrap("BEGIN RETURN -9223372036854775808; END;")).unwrap();
        assert_eq!(f.body, vec![Stmt::Return(Expr::int(i64::MIN))]);
    }
}
