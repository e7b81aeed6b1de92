//! The scenario file format: schema, domain, and constraint declarations,
//! initial rows, and a script of per-user statements with optional
//! expectation annotations.
//!
//! ```text
//! TABLE p 1;
//! DOMAIN 'v', 'z';
//! CONSTRAINT pk FD s KEY 1 DETERMINES 2;
//! CONSTRAINT fk ID s REFERENCES p PREFIX 1;
//! INIT s ('z');
//! AS u2 INSERT INTO p VALUES ('v') EXPECT PERMIT;
//! ```
//!
//! Comments run from `#` to the end of the line; every declaration and
//! statement ends with `;`.

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use secdb_core::kernel::{SystemConfig, SystemState, ADMIN};
use secdb_core::rc::{Constraint, ConstraintKind, DatabaseState, Name, Schema, Value};
use secdb_core::surface::{Lexer, ParseError, Statement, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Expectation {
    Permit,
    Deny,
    IntegrityEx,
}

impl std::fmt::Display for Expectation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Expectation::Permit => f.write_str("PERMIT"),
            Expectation::Deny => f.write_str("DENY"),
            Expectation::IntegrityEx => f.write_str("INTEGRITY_EX"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Step {
    pub user: Name,
    pub statement: Statement,
    pub text: String,
    pub expect: Option<Expectation>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: Arc<SystemConfig>,
    pub init: Vec<(Name, Vec<Value>)>,
    pub steps: Vec<Step>,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("line {0}: {1}")]
    Decl(usize, String),
    #[error("{0}")]
    Invalid(String),
}

impl Scenario {
    /// The initial system state: the declared database, the admin account
    /// alone, and an empty policy. Users, grants, triggers, and views come
    /// from the script.
    pub fn initial_state(&self) -> Result<SystemState, ScenarioError> {
        let mut db = DatabaseState::empty(&self.config.schema);
        for (table, row) in &self.init {
            db.insert(&self.config.schema, table, row.clone())
                .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        }
        let users: BTreeSet<Name> = [Name::from(ADMIN)].into_iter().collect();
        SystemState::initial(
            self.config.clone(),
            db,
            users,
            BTreeSet::new(),
            Vec::new(),
            Vec::new(),
        )
        .map_err(ScenarioError::Invalid)
    }
}

/// Splits a token stream into `;`-terminated groups.
fn split_statements(tokens: Vec<Token>) -> Vec<Vec<Token>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    for t in tokens {
        match t.kind {
            TokenKind::Semi => {
                if !current.is_empty() {
                    out.push(std::mem::take(&mut current));
                }
            }
            TokenKind::Eof => break,
            _ => current.push(t),
        }
    }
    if !current.is_empty() {
        out.push(current);
    }
    out
}

fn ident(tokens: &[Token], i: usize) -> Result<&str, ScenarioError> {
    match tokens.get(i).map(|t| &t.kind) {
        Some(TokenKind::Ident(s)) => Ok(s),
        _ => Err(ScenarioError::Decl(
            tokens.first().map(|t| t.line).unwrap_or(0),
            "expected an identifier".into(),
        )),
    }
}

fn number(tokens: &[Token], i: usize) -> Result<usize, ScenarioError> {
    match tokens.get(i).map(|t| &t.kind) {
        Some(TokenKind::Num(s)) => s
            .parse()
            .map_err(|_| ScenarioError::Decl(tokens[i].line, "expected a number".into())),
        _ => Err(ScenarioError::Decl(
            tokens.first().map(|t| t.line).unwrap_or(0),
            "expected a number".into(),
        )),
    }
}

fn constant(t: &Token) -> Result<Value, ScenarioError> {
    match &t.kind {
        TokenKind::Str(s) | TokenKind::Num(s) => Ok(Value::from(s.as_str())),
        TokenKind::Ident(s) => Ok(Value::from(s.as_str())),
        other => Err(ScenarioError::Decl(
            t.line,
            format!("expected a constant, found '{other}'"),
        )),
    }
}

/// Comma-separated position list, one-based in the file, zero-based out.
fn positions(tokens: &[Token], mut i: usize) -> Result<(Vec<usize>, usize), ScenarioError> {
    let mut out = Vec::new();
    loop {
        out.push(number(tokens, i)? - 1);
        i += 1;
        if tokens.get(i).map(|t| &t.kind) == Some(&TokenKind::Comma) {
            i += 1;
        } else {
            return Ok((out, i));
        }
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let tokens = Lexer::new(text).tokenize()?;
    let groups = split_statements(tokens);
    let mut tables: Vec<(Name, usize)> = Vec::new();
    let mut domain: Vec<Value> = Vec::new();
    let mut constraints: Vec<Constraint> = Vec::new();
    let mut init: Vec<(Name, Vec<Value>)> = Vec::new();
    let mut raw_steps: Vec<(Name, Vec<Token>, Option<Expectation>)> = Vec::new();

    for group in groups {
        let head = match &group[0].kind {
            TokenKind::Ident(s) => s.to_ascii_uppercase(),
            other => {
                return Err(ScenarioError::Decl(
                    group[0].line,
                    format!("unexpected '{other}'"),
                ))
            }
        };
        match head.as_str() {
            "TABLE" => {
                let name = ident(&group, 1)?;
                let arity = number(&group, 2)?;
                if arity == 0 {
                    return Err(ScenarioError::Decl(
                        group[0].line,
                        "arity must be positive".into(),
                    ));
                }
                tables.push((name.into(), arity));
            }
            "DOMAIN" => {
                let mut i = 1;
                while i < group.len() {
                    domain.push(constant(&group[i])?);
                    i += 1;
                    if group.get(i).map(|t| &t.kind) == Some(&TokenKind::Comma) {
                        i += 1;
                    }
                }
            }
            "CONSTRAINT" => {
                let id = ident(&group, 1)?;
                let kind = ident(&group, 2)?.to_ascii_uppercase();
                match kind.as_str() {
                    "FD" => {
                        let table = ident(&group, 3)?;
                        let kw = ident(&group, 4)?.to_ascii_uppercase();
                        if kw != "KEY" {
                            return Err(ScenarioError::Decl(group[0].line, "expected KEY".into()));
                        }
                        let (determinant, i) = positions(&group, 5)?;
                        let kw = ident(&group, i)?.to_ascii_uppercase();
                        if kw != "DETERMINES" {
                            return Err(ScenarioError::Decl(
                                group[0].line,
                                "expected DETERMINES".into(),
                            ));
                        }
                        let (dependent, _) = positions(&group, i + 1)?;
                        constraints.push(Constraint {
                            id: id.into(),
                            kind: ConstraintKind::Fd {
                                table: table.into(),
                                determinant,
                                dependent,
                            },
                        });
                    }
                    "ID" => {
                        let from = ident(&group, 3)?;
                        let kw = ident(&group, 4)?.to_ascii_uppercase();
                        if kw != "REFERENCES" {
                            return Err(ScenarioError::Decl(
                                group[0].line,
                                "expected REFERENCES".into(),
                            ));
                        }
                        let to = ident(&group, 5)?;
                        let kw = ident(&group, 6)?.to_ascii_uppercase();
                        if kw != "PREFIX" {
                            return Err(ScenarioError::Decl(
                                group[0].line,
                                "expected PREFIX".into(),
                            ));
                        }
                        let prefix = number(&group, 7)?;
                        constraints.push(Constraint {
                            id: id.into(),
                            kind: ConstraintKind::Id {
                                from: from.into(),
                                to: to.into(),
                                prefix,
                            },
                        });
                    }
                    other => {
                        return Err(ScenarioError::Decl(
                            group[0].line,
                            format!("unknown constraint kind '{other}'"),
                        ))
                    }
                }
            }
            "INIT" => {
                let table = ident(&group, 1)?;
                if group.get(2).map(|t| &t.kind) != Some(&TokenKind::LParen) {
                    return Err(ScenarioError::Decl(group[0].line, "expected '('".into()));
                }
                let mut row = Vec::new();
                let mut i = 3;
                while group.get(i).map(|t| &t.kind) != Some(&TokenKind::RParen) {
                    if group.get(i).map(|t| &t.kind) == Some(&TokenKind::Comma) {
                        i += 1;
                        continue;
                    }
                    row.push(constant(group.get(i).ok_or_else(|| {
                        ScenarioError::Decl(group[0].line, "unterminated row".into())
                    })?)?);
                    i += 1;
                }
                init.push((table.into(), row));
            }
            "AS" => {
                let user = ident(&group, 1)?.to_string();
                let mut body: Vec<Token> = group[2..].to_vec();
                // Optional trailing `EXPECT <verdict>`.
                let mut expect = None;
                if body.len() >= 2 {
                    if let (TokenKind::Ident(kw), TokenKind::Ident(v)) =
                        (&body[body.len() - 2].kind, &body[body.len() - 1].kind)
                    {
                        if kw.eq_ignore_ascii_case("EXPECT") {
                            expect = Some(match v.to_ascii_uppercase().as_str() {
                                "PERMIT" => Expectation::Permit,
                                "DENY" => Expectation::Deny,
                                "INTEGRITY_EX" => Expectation::IntegrityEx,
                                other => {
                                    return Err(ScenarioError::Decl(
                                        group[0].line,
                                        format!("unknown expectation '{other}'"),
                                    ))
                                }
                            });
                            body.truncate(body.len() - 2);
                        }
                    }
                }
                raw_steps.push((user.as_str().into(), body, expect));
            }
            other => {
                return Err(ScenarioError::Decl(
                    group[0].line,
                    format!("unknown declaration '{other}'"),
                ))
            }
        }
    }

    if domain.is_empty() {
        return Err(ScenarioError::Invalid(
            "a DOMAIN declaration is required".into(),
        ));
    }
    let schema = Schema::new(tables, domain).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
    let config = SystemConfig::new(schema, constraints)
        .map_err(|e| ScenarioError::Invalid(e.to_string()))?;

    let mut steps = Vec::new();
    for (user, body, expect) in raw_steps {
        let text = render_tokens(&body);
        let statement = secdb_core::surface::parse(&text)?;
        steps.push(Step {
            user,
            statement,
            text,
            expect,
        });
    }
    Ok(Scenario {
        config: Arc::new(config),
        init,
        steps,
    })
}

/// Re-renders a token slice as parseable text.
fn render_tokens(tokens: &[Token]) -> String {
    let mut out = String::new();
    for (i, t) in tokens.iter().enumerate() {
        let s = t.kind.to_string();
        let glue_left = matches!(
            t.kind,
            TokenKind::RParen | TokenKind::Comma | TokenKind::Dot | TokenKind::RBrace
        );
        let prev_glues = i > 0
            && matches!(
                tokens[i - 1].kind,
                TokenKind::LParen | TokenKind::Dot | TokenKind::LBrace
            );
        if i > 0 && !glue_left && !prev_glues {
            out.push(' ');
        }
        out.push_str(&s);
    }
    out
}
