//! The interactive session: statements prefixed with `AS <user>`, plus
//! meta commands for the attacker engine and the judgment checker.

use std::io::{BufRead, Write};

use secdb_core::attacker::{derive, secure_data_oracle, DeriveConfig};
use secdb_core::authz::secure;
use secdb_core::rc::Name;
use secdb_core::surface::{bind, parse, parse_formula, Bound, Catalog};

use crate::session::Session;

const HELP: &str = "\
commands:
  AS <user> <statement>;     execute a statement as the user
  \\derive <user> [budget]    print the judgments derivable from the run
  \\secure <user> <formula>   check the judgment at the current state
  \\oracle <user> <formula>   brute-force security of the judgment
  \\state                     summarize the current system state
  \\help                      this text
  \\quit                      leave";

pub fn repl(
    mut session: Session,
    input: &mut dyn BufRead,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    writeln!(out, "secdb repl (pdp={})", session.pdp.name())?;
    let mut line = String::new();
    loop {
        line.clear();
        if input.read_line(&mut line)? == 0 {
            return Ok(());
        }
        let text = line.trim();
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        if let Some(rest) = text.strip_prefix('\\') {
            let mut parts = rest.splitn(3, ' ');
            match parts.next().unwrap_or("") {
                "quit" | "q" => return Ok(()),
                "help" => writeln!(out, "{HELP}")?,
                "state" => {
                    let s = &session.state;
                    writeln!(out, "users: {:?}", s.users)?;
                    for g in &s.sec {
                        writeln!(out, "grant: {g}")?;
                    }
                    for v in &s.views {
                        writeln!(
                            out,
                            "view: {} ({}) owner={} as {}",
                            v.id, v.mode, v.owner, v.query
                        )?;
                    }
                    for t in &s.triggers {
                        writeln!(out, "trigger: {} on {} owner={}", t.id, t.table, t.owner)?;
                    }
                    for (table, rows) in s.db.tables() {
                        writeln!(out, "table {table}: {rows:?}")?;
                    }
                }
                "derive" => {
                    let Some(user) = parts.next() else {
                        writeln!(out, "usage: \\derive <user> [budget]")?;
                        continue;
                    };
                    let budget: usize = parts
                        .next()
                        .and_then(|b| b.trim().parse().ok())
                        .unwrap_or(DeriveConfig::default().budget);
                    let cfg = DeriveConfig {
                        budget,
                        ..Default::default()
                    };
                    let d = derive(&session.run, &Name::from(user), cfg);
                    for j in d.judgments() {
                        writeln!(out, "{}, {} |- {}", user, j.pos, j.sentence)?;
                    }
                    if d.exhausted {
                        writeln!(out, "(budget exhausted; the judgment set is incomplete)")?;
                    }
                }
                "secure" | "oracle" => {
                    let cmd = rest.split(' ').next().unwrap_or("");
                    let Some(user) = parts.next() else {
                        writeln!(out, "usage: \\{cmd} <user> <formula>")?;
                        continue;
                    };
                    let Some(formula_text) = parts.next() else {
                        writeln!(out, "usage: \\{cmd} <user> <formula>")?;
                        continue;
                    };
                    match parse_formula(formula_text) {
                        Ok(sf) => {
                            let catalog = Catalog::of_state(&session.state);
                            let stmt = secdb_core::surface::Statement::Select(
                                secdb_core::surface::SelectForm::RcBool(sf),
                            );
                            match bind(&stmt, &Name::from(user), &catalog) {
                                Ok(Bound::Act(secdb_core::kernel::Action::Select {
                                    query,
                                    ..
                                })) => {
                                    if cmd == "secure" {
                                        let verdict =
                                            secure(&Name::from(user), &query, &session.state);
                                        writeln!(
                                            out,
                                            "{}",
                                            if verdict { "SECURE" } else { "INSECURE" }
                                        )?;
                                    } else {
                                        let pos = session.run.len();
                                        match secure_data_oracle(
                                            &session.run,
                                            pos,
                                            &Name::from(user),
                                            &query,
                                            24,
                                        ) {
                                            Ok(true) => writeln!(out, "SECURE (oracle)")?,
                                            Ok(false) => writeln!(out, "INSECURE (oracle)")?,
                                            Err(e) => writeln!(out, "oracle error: {e}")?,
                                        }
                                    }
                                }
                                Ok(_) => writeln!(out, "expected a boolean formula")?,
                                Err(e) => writeln!(out, "error: {e}")?,
                            }
                        }
                        Err(e) => writeln!(out, "error: {e}")?,
                    }
                }
                other => writeln!(out, "unknown command '\\{other}' (try \\help)")?,
            }
            continue;
        }
        // AS <user> <statement>
        let Some(rest) = strip_keyword(text, "AS") else {
            writeln!(out, "statements start with 'AS <user>' (try \\help)")?;
            continue;
        };
        let mut parts = rest.trim().splitn(2, ' ');
        let Some(user) = parts.next() else {
            writeln!(out, "missing user")?;
            continue;
        };
        let Some(stmt_text) = parts.next() else {
            writeln!(out, "missing statement")?;
            continue;
        };
        match parse(stmt_text) {
            Ok(statement) => {
                let canonical = statement.to_string();
                match session.submit(&Name::from(user), &statement, &canonical) {
                    Ok(submitted) => {
                        for r in &submitted.records {
                            writeln!(out, "{r} rule={}", r.rule)?;
                        }
                        if let Some(rows) = submitted.rows {
                            for row in rows {
                                let cells: Vec<String> =
                                    row.iter().map(|v| v.to_string()).collect();
                                writeln!(out, "row: ({})", cells.join(", "))?;
                            }
                        }
                    }
                    Err(e) => writeln!(out, "error: {e}")?,
                }
            }
            Err(e) => writeln!(out, "error: {e}")?,
        }
    }
}

fn strip_keyword<'a>(text: &'a str, kw: &str) -> Option<&'a str> {
    let head = text.get(..kw.len())?;
    if head.eq_ignore_ascii_case(kw) {
        Some(&text[kw.len()..])
    } else {
        None
    }
}
