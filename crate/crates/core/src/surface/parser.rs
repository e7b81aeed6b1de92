use std::fmt;

use super::ast::*;
use super::lexer::{Lexer, Token, TokenKind};

/// A syntax error with source position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(line: usize, col: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            col,
            message: message.into(),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Parses a single statement; a trailing `;` is optional.
pub fn parse(text: &str) -> Result<Statement, ParseError> {
    let tokens = Lexer::new(text).tokenize()?;
    let mut p = Parser { tokens, idx: 0 };
    let stmt = p.statement()?;
    p.eat_semi_and_eof()?;
    Ok(stmt)
}

/// Parses a bare relational-calculus formula.
pub fn parse_formula(text: &str) -> Result<SFormula, ParseError> {
    let tokens = Lexer::new(text).tokenize()?;
    let mut p = Parser { tokens, idx: 0 };
    let f = p.formula()?;
    p.eat_semi_and_eof()?;
    Ok(f)
}

struct Parser {
    tokens: Vec<Token>,
    idx: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.idx.min(self.tokens.len() - 1)]
    }

    fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.idx < self.tokens.len() - 1 {
            self.idx += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> ParseError {
        let t = self.peek();
        ParseError::new(t.line, t.col, msg)
    }

    /// Is the next token the given keyword (case-insensitive)?
    fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().kind, TokenKind::Ident(s) if s.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{kw}', found '{}'", self.peek().kind)))
        }
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), ParseError> {
        if self.peek().kind == kind {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected '{kind}', found '{}'", self.peek().kind)))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match &self.peek().kind {
            TokenKind::Ident(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            other => Err(self.err(format!("expected identifier, found '{other}'"))),
        }
    }

    fn eat_semi_and_eof(&mut self) -> Result<(), ParseError> {
        if self.peek().kind == TokenKind::Semi {
            self.bump();
        }
        if self.peek().kind == TokenKind::Eof {
            Ok(())
        } else {
            Err(self.err(format!("trailing input: '{}'", self.peek().kind)))
        }
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        if self.at_kw("SELECT") {
            return Ok(Statement::Select(self.select_form()?));
        }
        if self.at_kw("ADD") {
            self.bump();
            self.expect_kw("USER")?;
            let user = self.ident()?;
            return Ok(Statement::AddUser { user });
        }
        if self.at_kw("CREATE") {
            self.bump();
            if self.eat_kw("TRIGGER") {
                return self.create_trigger();
            }
            if self.eat_kw("VIEW") {
                return self.create_view();
            }
            return Err(self.err("expected TRIGGER or VIEW after CREATE"));
        }
        Ok(Statement::Basic(self.basic_stmt()?))
    }

    fn select_form(&mut self) -> Result<SelectForm, ParseError> {
        self.expect_kw("SELECT")?;
        if self.eat_kw("DISTINCT") {
            let columns = if self.peek().kind == TokenKind::Star {
                self.bump();
                Columns::Star
            } else {
                Columns::List(self.ident_list()?)
            };
            self.expect_kw("FROM")?;
            let tables = self.ident_list()?;
            let filter = if self.eat_kw("WHERE") {
                Some(self.formula()?)
            } else {
                None
            };
            return Ok(SelectForm::Sql {
                columns,
                tables,
                filter,
            });
        }
        if self.peek().kind == TokenKind::LBrace {
            self.bump();
            let head = self.ident_list()?;
            self.expect(TokenKind::Pipe)?;
            let body = self.formula()?;
            self.expect(TokenKind::RBrace)?;
            return Ok(SelectForm::RcQuery { head, body });
        }
        Ok(SelectForm::RcBool(self.formula()?))
    }

    fn ident_list(&mut self) -> Result<Vec<String>, ParseError> {
        let mut out = vec![self.ident()?];
        while self.peek().kind == TokenKind::Comma {
            self.bump();
            out.push(self.ident()?);
        }
        Ok(out)
    }

    fn basic_stmt(&mut self) -> Result<BasicStmt, ParseError> {
        if self.eat_kw("INSERT") {
            self.expect_kw("INTO")?;
            let table = self.ident()?;
            self.expect_kw("VALUES")?;
            self.expect(TokenKind::LParen)?;
            let mut values = vec![self.value_term()?];
            while self.peek().kind == TokenKind::Comma {
                self.bump();
                values.push(self.value_term()?);
            }
            self.expect(TokenKind::RParen)?;
            return Ok(BasicStmt::Insert { table, values });
        }
        if self.eat_kw("DELETE") {
            self.expect_kw("FROM")?;
            let table = self.ident()?;
            self.expect_kw("WHERE")?;
            let mut eqs = Vec::new();
            loop {
                let col = self.ident()?;
                self.expect(TokenKind::Eq)?;
                let v = self.value_term()?;
                eqs.push((col, v));
                if !self.eat_kw("AND") {
                    break;
                }
            }
            return Ok(BasicStmt::Delete { table, eqs });
        }
        if self.eat_kw("GRANT") {
            let privilege = self.privilege()?;
            self.expect_kw("TO")?;
            let grantee = self.ident()?;
            let mut grant_option = false;
            if self.eat_kw("WITH") {
                self.expect_kw("GRANT")?;
                self.expect_kw("OPTION")?;
                grant_option = true;
            }
            return Ok(BasicStmt::Grant {
                privilege,
                grantee,
                grant_option,
            });
        }
        if self.eat_kw("REVOKE") {
            let privilege = self.privilege()?;
            self.expect_kw("FROM")?;
            let grantee = self.ident()?;
            if self.eat_kw("WITH") {
                self.expect_kw("CASCADE")?;
            }
            return Ok(BasicStmt::Revoke { privilege, grantee });
        }
        Err(self.err(format!(
            "expected a statement, found '{}'",
            self.peek().kind
        )))
    }

    fn privilege(&mut self) -> Result<PrivilegeAst, ParseError> {
        if self.eat_kw("SELECT") {
            self.expect_kw("ON")?;
            return Ok(PrivilegeAst::Select(self.ident()?));
        }
        if self.eat_kw("INSERT") {
            self.expect_kw("ON")?;
            return Ok(PrivilegeAst::Insert(self.ident()?));
        }
        if self.eat_kw("DELETE") {
            self.expect_kw("ON")?;
            return Ok(PrivilegeAst::Delete(self.ident()?));
        }
        if self.eat_kw("CREATE") {
            if self.eat_kw("TRIGGER") {
                self.expect_kw("ON")?;
                return Ok(PrivilegeAst::CreateTrigger(self.ident()?));
            }
            if self.eat_kw("VIEW") {
                return Ok(PrivilegeAst::CreateView);
            }
            return Err(self.err("expected TRIGGER or VIEW after CREATE"));
        }
        Err(self.err("expected a privilege"))
    }

    fn create_trigger(&mut self) -> Result<Statement, ParseError> {
        let id = self.ident()?;
        self.expect_kw("AFTER")?;
        let event = if self.eat_kw("INSERT") {
            EventAst::Insert
        } else if self.eat_kw("DELETE") {
            EventAst::Delete
        } else {
            return Err(self.err("expected INSERT or DELETE"));
        };
        self.expect_kw("ON")?;
        let table = self.ident()?;
        self.expect_kw("SECURITY")?;
        let mode = if self.eat_kw("DEFINER") {
            ModeAst::Definer
        } else if self.eat_kw("INVOKER") {
            ModeAst::Invoker
        } else {
            return Err(self.err("expected DEFINER or INVOKER"));
        };
        let (condition, body) = if self.eat_kw("BEGIN") {
            self.expect_kw("IF")?;
            let cond = self.formula()?;
            self.expect_kw("THEN")?;
            let body = self.basic_stmt()?;
            self.expect_kw("END")?;
            (Some(cond), body)
        } else {
            (None, self.basic_stmt()?)
        };
        Ok(Statement::CreateTrigger {
            id,
            event,
            table,
            mode,
            condition,
            body: Box::new(body),
        })
    }

    fn create_view(&mut self) -> Result<Statement, ParseError> {
        let id = self.ident()?;
        self.expect_kw("SECURITY")?;
        let mode = if self.eat_kw("DEFINER") {
            ModeAst::Definer
        } else if self.eat_kw("INVOKER") {
            ModeAst::Invoker
        } else {
            return Err(self.err("expected DEFINER or INVOKER"));
        };
        self.expect_kw("AS")?;
        let def = self.select_form()?;
        Ok(Statement::CreateView { id, mode, def })
    }

    /// A term in a value position: constants, `NEW.k`, the reserved
    /// positional variables `x1`, `x2`, …, or a bare identifier, which
    /// denotes a constant.
    fn value_term(&mut self) -> Result<STerm, ParseError> {
        match self.peek().kind.clone() {
            TokenKind::Str(s) => {
                self.bump();
                Ok(STerm::Const(s.as_str().into()))
            }
            TokenKind::Num(s) => {
                self.bump();
                Ok(STerm::Const(s.as_str().into()))
            }
            TokenKind::Ident(s) if s.eq_ignore_ascii_case("NEW") => {
                self.bump();
                self.expect(TokenKind::Dot)?;
                self.new_index()
            }
            TokenKind::Ident(s) => {
                self.bump();
                if let Some(k) = positional_index(&s) {
                    Ok(STerm::New(k))
                } else {
                    Ok(STerm::Const(s.as_str().into()))
                }
            }
            other => Err(self.err(format!("expected a value, found '{other}'"))),
        }
    }

    fn new_index(&mut self) -> Result<STerm, ParseError> {
        match self.peek().kind.clone() {
            TokenKind::Num(s) => {
                self.bump();
                let k: usize = s.parse().map_err(|_| self.err("invalid NEW position"))?;
                if k == 0 {
                    return Err(self.err("NEW positions are 1-based"));
                }
                Ok(STerm::New(k))
            }
            other => Err(self.err(format!("expected a column position, found '{other}'"))),
        }
    }

    /// A term in a formula: identifiers are variables; quoted strings and
    /// numbers are constants; `NEW.k` refers to the firing tuple.
    fn formula_term(&mut self) -> Result<STerm, ParseError> {
        match self.peek().kind.clone() {
            TokenKind::Str(s) => {
                self.bump();
                Ok(STerm::Const(s.as_str().into()))
            }
            TokenKind::Num(s) => {
                self.bump();
                Ok(STerm::Const(s.as_str().into()))
            }
            TokenKind::Ident(s) if s.eq_ignore_ascii_case("NEW") => {
                self.bump();
                self.expect(TokenKind::Dot)?;
                self.new_index()
            }
            TokenKind::Ident(s) => {
                self.bump();
                Ok(STerm::Var(s))
            }
            other => Err(self.err(format!("expected a term, found '{other}'"))),
        }
    }

    fn formula(&mut self) -> Result<SFormula, ParseError> {
        let mut left = self.and_formula()?;
        while self.eat_kw("OR") {
            let right = self.and_formula()?;
            left = SFormula::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and_formula(&mut self) -> Result<SFormula, ParseError> {
        let mut left = self.unary_formula()?;
        while self.at_kw("AND") {
            self.bump();
            let right = self.unary_formula()?;
            left = SFormula::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn unary_formula(&mut self) -> Result<SFormula, ParseError> {
        if self.eat_kw("NOT") {
            let inner = self.unary_formula()?;
            return Ok(SFormula::Not(Box::new(inner)));
        }
        if self.at_kw("EXISTS") {
            self.bump();
            if self.peek().kind == TokenKind::LParen {
                self.bump();
                let sel = self.select_form()?;
                self.expect(TokenKind::RParen)?;
                return Ok(SFormula::ExistsSelect(Box::new(sel)));
            }
            let vars = self.ident_list()?;
            self.expect(TokenKind::Dot)?;
            let body = self.formula()?;
            return Ok(SFormula::Exists(vars, Box::new(body)));
        }
        if self.at_kw("FORALL") {
            self.bump();
            let vars = self.ident_list()?;
            self.expect(TokenKind::Dot)?;
            let body = self.formula()?;
            return Ok(SFormula::Forall(vars, Box::new(body)));
        }
        if self.at_kw("TRUE") {
            self.bump();
            return Ok(SFormula::True);
        }
        if self.at_kw("FALSE") {
            self.bump();
            return Ok(SFormula::False);
        }
        if self.peek().kind == TokenKind::LParen {
            self.bump();
            let inner = self.formula()?;
            self.expect(TokenKind::RParen)?;
            return Ok(inner);
        }
        // Predicate atom or equality.
        if let TokenKind::Ident(name) = self.peek().kind.clone() {
            if !name.eq_ignore_ascii_case("NEW")
                && self.tokens.get(self.idx + 1).map(|t| &t.kind) == Some(&TokenKind::LParen)
            {
                self.bump();
                self.bump();
                let mut args = Vec::new();
                if self.peek().kind != TokenKind::RParen {
                    args.push(self.formula_term()?);
                    while self.peek().kind == TokenKind::Comma {
                        self.bump();
                        args.push(self.formula_term()?);
                    }
                }
                self.expect(TokenKind::RParen)?;
                return Ok(SFormula::Atom(name, args));
            }
        }
        let a = self.formula_term()?;
        match self.peek().kind {
            TokenKind::Eq => {
                self.bump();
                let b = self.formula_term()?;
                Ok(SFormula::Eq(a, b))
            }
            TokenKind::Neq => {
                self.bump();
                let b = self.formula_term()?;
                Ok(SFormula::Neq(a, b))
            }
            _ => Err(self.err("expected '=' or '<>' in atomic formula")),
        }
    }
}

/// Recognizes the reserved positional variables `x1`, `x2`, … used to
/// reference the firing tuple inside trigger bodies.
fn positional_index(s: &str) -> Option<usize> {
    let rest = s.strip_prefix('x')?;
    if rest.is_empty() || !rest.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let k: usize = rest.parse().ok()?;
    if k >= 1 {
        Some(k)
    } else {
        None
    }
}
