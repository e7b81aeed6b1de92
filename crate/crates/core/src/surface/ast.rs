use std::fmt;

use crate::rc::Value;

/// A term of the surface syntax: a variable, a constant, or a positional
/// reference `NEW.k` to the tuple that fired the enclosing trigger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum STerm {
    Var(String),
    Const(Value),
    New(usize),
}

impl fmt::Display for STerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            STerm::Var(v) => f.write_str(v),
            STerm::Const(c) => write!(f, "{c}"),
            STerm::New(k) => write!(f, "NEW.{k}"),
        }
    }
}

/// Textual relational-calculus formulas.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SFormula {
    True,
    False,
    Atom(String, Vec<STerm>),
    Eq(STerm, STerm),
    Neq(STerm, STerm),
    Not(Box<SFormula>),
    And(Box<SFormula>, Box<SFormula>),
    Or(Box<SFormula>, Box<SFormula>),
    Exists(Vec<String>, Box<SFormula>),
    Forall(Vec<String>, Box<SFormula>),
    /// `EXISTS ( <select> )`, the grammar's subquery form.
    ExistsSelect(Box<SelectForm>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Columns {
    Star,
    List(Vec<String>),
}

/// The three accepted SELECT shapes: the SQL form, an explicit
/// relational-calculus query, and a bare boolean condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SelectForm {
    Sql {
        columns: Columns,
        tables: Vec<String>,
        filter: Option<SFormula>,
    },
    RcQuery {
        head: Vec<String>,
        body: SFormula,
    },
    RcBool(SFormula),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrivilegeAst {
    Select(String),
    Insert(String),
    Delete(String),
    CreateTrigger(String),
    CreateView,
}

/// Statements allowed as trigger bodies (and standalone).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasicStmt {
    Insert {
        table: String,
        values: Vec<STerm>,
    },
    Delete {
        table: String,
        eqs: Vec<(String, STerm)>,
    },
    Grant {
        privilege: PrivilegeAst,
        grantee: String,
        grant_option: bool,
    },
    Revoke {
        privilege: PrivilegeAst,
        grantee: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventAst {
    Insert,
    Delete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeAst {
    /// `SECURITY INVOKER`: activator's privileges.
    Invoker,
    /// `SECURITY DEFINER`: owner's privileges.
    Definer,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Statement {
    Select(SelectForm),
    Basic(BasicStmt),
    CreateTrigger {
        id: String,
        event: EventAst,
        table: String,
        mode: ModeAst,
        condition: Option<SFormula>,
        body: Box<BasicStmt>,
    },
    CreateView {
        id: String,
        mode: ModeAst,
        def: SelectForm,
    },
    AddUser {
        user: String,
    },
}

impl fmt::Display for SFormula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl SFormula {
    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            SFormula::True => f.write_str("TRUE"),
            SFormula::False => f.write_str("FALSE"),
            SFormula::Atom(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            SFormula::Eq(a, b) => write!(f, "{a} = {b}"),
            SFormula::Neq(a, b) => write!(f, "{a} <> {b}"),
            SFormula::Not(inner) => {
                f.write_str("NOT ")?;
                inner.fmt_prec(f, 3)
            }
            SFormula::And(a, b) => {
                let parens = prec > 2;
                if parens {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, 3)?;
                f.write_str(" AND ")?;
                b.fmt_prec(f, 3)?;
                if parens {
                    f.write_str(")")?;
                }
                Ok(())
            }
            SFormula::Or(a, b) => {
                let parens = prec > 1;
                if parens {
                    f.write_str("(")?;
                }
                a.fmt_prec(f, 2)?;
                f.write_str(" OR ")?;
                b.fmt_prec(f, 2)?;
                if parens {
                    f.write_str(")")?;
                }
                Ok(())
            }
            SFormula::Exists(vars, inner) | SFormula::Forall(vars, inner) => {
                let parens = prec > 0;
                if parens {
                    f.write_str("(")?;
                }
                let kw = if matches!(self, SFormula::Exists(..)) {
                    "EXISTS"
                } else {
                    "FORALL"
                };
                write!(f, "{kw} {}", vars.join(", "))?;
                f.write_str(". ")?;
                inner.fmt_prec(f, 0)?;
                if parens {
                    f.write_str(")")?;
                }
                Ok(())
            }
            SFormula::ExistsSelect(sel) => write!(f, "EXISTS ({sel})"),
        }
    }
}

impl fmt::Display for SelectForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectForm::Sql {
                columns,
                tables,
                filter,
            } => {
                f.write_str("SELECT DISTINCT ")?;
                match columns {
                    Columns::Star => f.write_str("*")?,
                    Columns::List(cols) => f.write_str(&cols.join(", "))?,
                }
                write!(f, " FROM {}", tables.join(", "))?;
                if let Some(w) = filter {
                    write!(f, " WHERE {w}")?;
                }
                Ok(())
            }
            SelectForm::RcQuery { head, body } => {
                write!(f, "SELECT {{{} | {body}}}", head.join(", "))
            }
            SelectForm::RcBool(body) => write!(f, "SELECT {body}"),
        }
    }
}

impl fmt::Display for PrivilegeAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrivilegeAst::Select(o) => write!(f, "SELECT ON {o}"),
            PrivilegeAst::Insert(t) => write!(f, "INSERT ON {t}"),
            PrivilegeAst::Delete(t) => write!(f, "DELETE ON {t}"),
            PrivilegeAst::CreateTrigger(t) => write!(f, "CREATE TRIGGER ON {t}"),
            PrivilegeAst::CreateView => f.write_str("CREATE VIEW"),
        }
    }
}

impl fmt::Display for BasicStmt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasicStmt::Insert { table, values } => {
                write!(f, "INSERT INTO {table} VALUES (")?;
                for (i, v) in values.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str(")")
            }
            BasicStmt::Delete { table, eqs } => {
                write!(f, "DELETE FROM {table} WHERE ")?;
                for (i, (col, v)) in eqs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" AND ")?;
                    }
                    write!(f, "{col} = {v}")?;
                }
                Ok(())
            }
            BasicStmt::Grant {
                privilege,
                grantee,
                grant_option,
            } => {
                write!(f, "GRANT {privilege} TO {grantee}")?;
                if *grant_option {
                    f.write_str(" WITH GRANT OPTION")?;
                }
                Ok(())
            }
            BasicStmt::Revoke { privilege, grantee } => {
                write!(f, "REVOKE {privilege} FROM {grantee} WITH CASCADE")
            }
        }
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Select(sel) => write!(f, "{sel}"),
            Statement::Basic(b) => write!(f, "{b}"),
            Statement::CreateTrigger {
                id,
                event,
                table,
                mode,
                condition,
                body,
            } => {
                let ev = match event {
                    EventAst::Insert => "INSERT",
                    EventAst::Delete => "DELETE",
                };
                let sec = match mode {
                    ModeAst::Invoker => "SECURITY INVOKER",
                    ModeAst::Definer => "SECURITY DEFINER",
                };
                write!(f, "CREATE TRIGGER {id} AFTER {ev} ON {table} {sec} ")?;
                match condition {
                    Some(c) => write!(f, "BEGIN IF {c} THEN {body} END"),
                    None => write!(f, "{body}"),
                }
            }
            Statement::CreateView { id, mode, def } => {
                let sec = match mode {
                    ModeAst::Invoker => "SECURITY INVOKER",
                    ModeAst::Definer => "SECURITY DEFINER",
                };
                write!(f, "CREATE VIEW {id} {sec} AS {def}")
            }
            Statement::AddUser { user } => write!(f, "ADD USER {user}"),
        }
    }
}
