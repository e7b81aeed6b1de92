//! The confidentiality half of the decision point: the extended
//! vocabulary of projection predicates, a sound containment
//! under-approximation, the authorized-data rewritings with their
//! boundedness guard, the `secure` judgment check, the update-leak
//! templates, and the composed decision point.

use std::collections::{BTreeMap, BTreeSet};

use crate::kernel::{Action, Decision, Pdp, Privilege, SystemConfig, SystemState, ADMIN};
use crate::rc::{
    eliminate_activator_views, eval, inline_views, Assignment, Constraint, ConstraintKind, Formula,
    Name, Query, Schema, Term, Value, Var, View, ViewEnv,
};

use super::integrity::{f_int, AuthzVerdict};

/// A projection predicate of the extended vocabulary: the base object with
/// a set of existentially-dropped positions (empty for the object itself).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ProjPred {
    pub sym: Name,
    pub base: Name,
    pub base_arity: usize,
    /// 0-based positions projected away, sorted.
    pub dropped: Vec<usize>,
}

impl ProjPred {
    pub fn arity(&self) -> usize {
        self.base_arity - self.dropped.len()
    }

    /// The defining query `{kept | ∃dropped. Base(x1..xn)}` over tables
    /// and views.
    pub fn definition(&self) -> Query {
        let vars: Vec<Var> = (0..self.base_arity)
            .map(|i| Var::numbered("p", i))
            .collect();
        let atom = Formula::pred(
            self.base.clone(),
            vars.iter().cloned().map(Term::Var).collect(),
        );
        let mut body = atom;
        for &i in self.dropped.iter().rev() {
            body = Formula::exists(vars[i].clone(), body);
        }
        let head: Vec<Var> = (0..self.base_arity)
            .filter(|i| !self.dropped.contains(i))
            .map(|i| vars[i].clone())
            .collect();
        Query::new(head, body).expect("projection definitions are well-formed")
    }
}

/// The extended vocabulary over a schema and a set of (owner-mode) views.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    pub entries: Vec<ProjPred>,
    by_sym: BTreeMap<Name, usize>,
}

fn proj_sym(base: &Name, dropped: &[usize]) -> Name {
    if dropped.is_empty() {
        base.clone()
    } else {
        let idx: Vec<String> = dropped.iter().map(|i| (i + 1).to_string()).collect();
        format!("{base}@{}", idx.join("_")).into()
    }
}

/// All proper projections (and the identity) of every table and view.
pub fn build_vocabulary(schema: &Schema, views: &[View]) -> Vocabulary {
    let mut entries = Vec::new();
    let mut push_object = |name: &Name, arity: usize| {
        // Subsets of positions with fewer than `arity` elements.
        for mask in 0..(1u32 << arity) {
            let dropped: Vec<usize> = (0..arity).filter(|i| mask & (1 << i) != 0).collect();
            if dropped.len() == arity && arity > 0 {
                continue;
            }
            entries.push(ProjPred {
                sym: proj_sym(name, &dropped),
                base: name.clone(),
                base_arity: arity,
                dropped,
            });
        }
    };
    for (name, arity) in schema.tables() {
        push_object(name, arity);
    }
    for v in views {
        push_object(&v.id, v.arity());
    }
    let by_sym = entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.sym.clone(), i))
        .collect();
    Vocabulary { entries, by_sym }
}

impl Vocabulary {
    pub fn get(&self, sym: &Name) -> Option<&ProjPred> {
        self.by_sym.get(sym).map(|&i| &self.entries[i])
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    /// Replaces every vocabulary predicate in the formula by its
    /// definition, leaving base tables and views as atoms.
    pub fn inline(&self, phi: &Formula) -> Formula {
        match phi {
            Formula::Pred(sym, args) => match self.get(sym) {
                Some(p) if !p.dropped.is_empty() => p.definition().instantiate(args),
                _ => phi.clone(),
            },
            Formula::True | Formula::False | Formula::Eq(..) => phi.clone(),
            Formula::Not(f) => Formula::not(self.inline(f)),
            Formula::And(a, b) => Formula::raw_and(self.inline(a), self.inline(b)),
            Formula::Or(a, b) => Formula::raw_or(self.inline(a), self.inline(b)),
            Formula::Exists(v, f) => Formula::exists(v.clone(), self.inline(f)),
            Formula::Forall(v, f) => Formula::forall(v.clone(), self.inline(f)),
        }
    }
}

/// Rewrites existential projections of single atoms into vocabulary
/// predicates: `∃ȳ. O(ȳ, x̄)` becomes `O_ȳ(x̄)`. Applied bottom-up;
/// quantifiers that do not fit the pattern are kept.
pub fn extvoc_abstract(phi: &Formula, vocab: &Vocabulary) -> Formula {
    match phi {
        Formula::Exists(..) => {
            let mut chain: Vec<Var> = Vec::new();
            let mut inner = phi;
            while let Formula::Exists(v, f) = inner {
                chain.push(v.clone());
                inner = f;
            }
            let abstracted_inner = extvoc_abstract_children(inner, vocab);
            if let Formula::Pred(base, args) = &abstracted_inner {
                if let Some(entry) = vocab.get(base) {
                    if entry.dropped.is_empty() {
                        return abstract_chain(&chain, base, args, vocab);
                    }
                }
            }
            let mut out = abstracted_inner;
            for v in chain.into_iter().rev() {
                out = Formula::exists(v, out);
            }
            out
        }
        Formula::True | Formula::False | Formula::Pred(..) | Formula::Eq(..) => phi.clone(),
        Formula::Not(f) => Formula::not(extvoc_abstract(f, vocab)),
        Formula::And(a, b) => {
            Formula::raw_and(extvoc_abstract(a, vocab), extvoc_abstract(b, vocab))
        }
        Formula::Or(a, b) => Formula::raw_or(extvoc_abstract(a, vocab), extvoc_abstract(b, vocab)),
        Formula::Forall(v, f) => Formula::forall(v.clone(), extvoc_abstract(f, vocab)),
    }
}

fn extvoc_abstract_children(phi: &Formula, vocab: &Vocabulary) -> Formula {
    match phi {
        Formula::Exists(..) => extvoc_abstract(phi, vocab),
        other => extvoc_abstract(other, vocab),
    }
}

fn abstract_chain(chain: &[Var], base: &Name, args: &[Term], vocab: &Vocabulary) -> Formula {
    // Droppable chain variables occur exactly once among the atom's
    // arguments; innermost variables are preferred, and at least one
    // position must remain.
    let arity = args.len();
    let mut dropped: Vec<usize> = Vec::new();
    let mut dropped_vars: BTreeSet<Var> = BTreeSet::new();
    for v in chain.iter().rev() {
        if dropped.len() + 1 >= arity {
            break;
        }
        let positions: Vec<usize> = args
            .iter()
            .enumerate()
            .filter(|(_, t)| t.as_var() == Some(v))
            .map(|(i, _)| i)
            .collect();
        if positions.len() == 1 && !dropped.contains(&positions[0]) {
            dropped.push(positions[0]);
            dropped_vars.insert(v.clone());
        }
    }
    dropped.sort_unstable();
    let sym = proj_sym(base, &dropped);
    if dropped.is_empty() || vocab.get(&sym).is_none() {
        let mut out = Formula::Pred(base.clone(), args.to_vec());
        for v in chain.iter().rev() {
            out = Formula::exists(v.clone(), out);
        }
        return out;
    }
    let kept: Vec<Term> = args
        .iter()
        .enumerate()
        .filter(|(i, _)| !dropped.contains(i))
        .map(|(_, t)| t.clone())
        .collect();
    let mut out = Formula::Pred(sym, kept);
    for v in chain.iter().rev() {
        if !dropped_vars.contains(v) {
            out = Formula::exists(v.clone(), out);
        }
    }
    out
}

// ---------------------------------------------------------------------
// Containment.
// ---------------------------------------------------------------------

/// Sound derivability check for query containment `{x̄|φ} ⊆ {ȳ|ψ}` with
/// heads ordered by `⪯_var`: identity up to renaming, conjunct dropping,
/// disjunct introduction, parallel projection, and inclusion dependencies.
pub fn contained(phi: &Formula, psi: &Formula, config: &SystemConfig) -> bool {
    let fa = sorted_free(phi);
    let fb = sorted_free(psi);
    if fa.len() != fb.len() {
        return false;
    }
    c_check(phi, psi, config)
}

fn sorted_free(f: &Formula) -> Vec<Var> {
    f.free_vars().into_iter().collect()
}

fn rename_to(phi: &Formula, from: &[Var], to: &[Var]) -> Formula {
    let map: BTreeMap<Var, Term> = from
        .iter()
        .zip(to.iter())
        .map(|(a, b)| (a.clone(), Term::Var(b.clone())))
        .collect();
    phi.substitute(&map)
}

fn c_check(phi: &Formula, psi: &Formula, config: &SystemConfig) -> bool {
    let fa = sorted_free(phi);
    let fb = sorted_free(psi);
    if fa.len() != fb.len() {
        return false;
    }
    // Identity modulo positional renaming of the sorted free variables.
    if !fa.is_empty() && rename_to(phi, &fa, &fb).alpha_canonical() == psi.alpha_canonical() {
        return true;
    }
    // Dropping a conjunct that preserves the free variables.
    if let Formula::And(a, b) = phi {
        for part in [a, b] {
            if !fa.is_empty()
                && part.free_vars().len() == fa.len()
                && sorted_free(part) == fa
                && c_check(part, psi, config)
            {
                return true;
            }
        }
    }
    // Introducing a disjunct that preserves the free variables.
    if let Formula::Or(a, b) = psi {
        for part in [a, b] {
            if !fb.is_empty() && sorted_free(part) == fb && c_check(phi, part, config) {
                return true;
            }
        }
    }
    // Parallel projection of the i-th head variable.
    if let (Formula::Exists(x, a), Formula::Exists(y, b)) = (phi, psi) {
        let fa_in = sorted_free(a);
        let fb_in = sorted_free(b);
        if fa_in.len() == fb_in.len() && fa_in.len() > 1 {
            let ix = fa_in.iter().position(|v| v == x);
            let iy = fb_in.iter().position(|v| v == y);
            if let (Some(ix), Some(iy)) = (ix, iy) {
                if ix == iy && c_check(a, b, config) {
                    return true;
                }
            }
        }
    }
    // Inclusion dependencies on shared prefixes.
    if let (Some((r, rp)), Some((s, sp))) = (id_shape(phi), id_shape(psi)) {
        if !rp.is_empty() && rp.len() == sp.len() {
            // Positional correspondence through the sorted free variables.
            let r_positions: Option<Vec<usize>> =
                rp.iter().map(|v| fa.iter().position(|w| w == v)).collect();
            let s_positions: Option<Vec<usize>> =
                sp.iter().map(|v| fb.iter().position(|w| w == v)).collect();
            if let (Some(r_pos), Some(s_pos)) = (r_positions, s_positions) {
                if r_pos == s_pos {
                    let holds = config.constraints.iter().any(|c| {
                        matches!(&c.kind, ConstraintKind::Id { from, to, prefix }
                            if *from == r && *to == s && *prefix == rp.len())
                    });
                    if holds {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// Matches `∃z̄. R(x̄, z̄)` with free prefix `x̄` and bound suffix `z̄`;
/// returns the predicate and the prefix variables.
fn id_shape(phi: &Formula) -> Option<(Name, Vec<Var>)> {
    let mut bound: Vec<Var> = Vec::new();
    let mut inner = phi;
    while let Formula::Exists(v, f) = inner {
        bound.push(v.clone());
        inner = f;
    }
    let Formula::Pred(name, args) = inner else {
        return None;
    };
    let vars: Option<Vec<&Var>> = args.iter().map(|t| t.as_var()).collect();
    let vars = vars?;
    let bound_set: BTreeSet<&Var> = bound.iter().collect();
    let prefix_len = vars
        .iter()
        .position(|v| bound_set.contains(v))
        .unwrap_or(vars.len());
    let (prefix, suffix) = vars.split_at(prefix_len);
    // The suffix must consist of exactly the bound variables, each once,
    // and the prefix must avoid them.
    if suffix.len() != bound.len() {
        return None;
    }
    let suffix_set: BTreeSet<&Var> = suffix.iter().copied().collect();
    if suffix_set.len() != suffix.len() || suffix_set != bound_set {
        return None;
    }
    if prefix.iter().any(|v| bound_set.contains(v)) {
        return None;
    }
    let prefix_vars: Vec<Var> = prefix.iter().map(|v| (*v).clone()).collect();
    let unique: BTreeSet<&Var> = prefix.iter().copied().collect();
    if unique.len() != prefix_vars.len() {
        return None;
    }
    Some((name.clone(), prefix_vars))
}

/// The containment sets of the vocabulary predicates occurring in a
/// formula: `below[P]` are the predicates contained in `P`, `above[P]`
/// those containing it. Filtered variants intersect with the projections
/// of the user's readable objects.
#[derive(Debug, Clone)]
pub struct ContainmentSets {
    pub below: BTreeMap<Name, Vec<ProjPred>>,
    pub above: BTreeMap<Name, Vec<ProjPred>>,
}

/// Computes containment sets for the given predicates against the whole
/// vocabulary, comparing fully view-inlined definitions.
pub fn containment_sets(
    syms: &BTreeSet<Name>,
    vocab: &Vocabulary,
    views: &[View],
    config: &SystemConfig,
) -> ContainmentSets {
    let inlined: BTreeMap<Name, Formula> = vocab
        .entries
        .iter()
        .map(|e| {
            let def = e.definition();
            let body = inline_views(&def.body, views.iter()).unwrap_or(def.body);
            (e.sym.clone(), body)
        })
        .collect();
    let mut below: BTreeMap<Name, Vec<ProjPred>> = BTreeMap::new();
    let mut above: BTreeMap<Name, Vec<ProjPred>> = BTreeMap::new();
    for sym in syms {
        let Some(target) = vocab.get(sym) else {
            continue;
        };
        let t_def = &inlined[sym];
        let mut b = Vec::new();
        let mut a = Vec::new();
        for cand in &vocab.entries {
            if cand.arity() != target.arity() {
                continue;
            }
            let c_def = &inlined[&cand.sym];
            if contained(c_def, t_def, config) {
                b.push(cand.clone());
            }
            if contained(t_def, c_def, config) {
                a.push(cand.clone());
            }
        }
        below.insert(sym.clone(), b);
        above.insert(sym.clone(), a);
    }
    ContainmentSets { below, above }
}

// ---------------------------------------------------------------------
// Rewriting.
// ---------------------------------------------------------------------

/// Rewriting context: the vocabulary, the containment sets filtered by the
/// user's readable objects, and the two polarities' predicate sets.
pub struct RewriteCtx {
    pub vocab: Vocabulary,
    sets: ContainmentSets,
    readable: BTreeSet<Name>,
}

impl RewriteCtx {
    /// The filtered set `R^v_{s,u}`: predicates contained in (`top`) or
    /// containing (`!top`) `sym`, restricted to projections of readable
    /// objects.
    fn filtered(&self, sym: &Name, top: bool) -> Vec<&ProjPred> {
        let all = if top {
            self.sets.below.get(sym)
        } else {
            self.sets.above.get(sym)
        };
        all.map(|v| {
            v.iter()
                .filter(|p| self.readable.contains(&p.base))
                .collect()
        })
        .unwrap_or_default()
    }
}

/// The boundedness guard of the rewriting's quantifier cases.
pub fn bound(phi: &Formula, ctx: &RewriteCtx, x: &Var, polarity: bool) -> bool {
    match phi {
        Formula::Pred(sym, args) => {
            args.iter().any(|t| t.as_var() == Some(x)) && !ctx.filtered(sym, polarity).is_empty()
        }
        Formula::Eq(a, b) => {
            matches!((a, b), (Term::Var(v), Term::Const(_)) if v == x)
                || matches!((a, b), (Term::Const(_), Term::Var(v)) if v == x)
        }
        Formula::True | Formula::False => false,
        Formula::Not(f) => bound(f, ctx, x, !polarity),
        Formula::And(a, b) => bound(a, ctx, x, polarity) || bound(b, ctx, x, polarity),
        Formula::Or(a, b) => bound(a, ctx, x, polarity) && bound(b, ctx, x, polarity),
        Formula::Exists(y, f) | Formula::Forall(y, f) => {
            if x == y {
                false
            } else {
                bound(f, ctx, x, polarity) && bound(f, ctx, y, polarity)
            }
        }
    }
}

/// The authorized-data rewriting `φ^⊤` (`polarity = true`) or `φ^⊥`
/// (`polarity = false`) over the extended vocabulary.
pub fn rewrite(phi: &Formula, ctx: &RewriteCtx, polarity: bool) -> Formula {
    match phi {
        Formula::Pred(sym, args) => {
            let preds = ctx.filtered(sym, polarity);
            let atoms = preds
                .into_iter()
                .map(|p| Formula::Pred(p.sym.clone(), args.clone()));
            if polarity {
                Formula::disj(atoms)
            } else {
                Formula::conj(atoms)
            }
        }
        Formula::Eq(..) | Formula::True | Formula::False => phi.clone(),
        Formula::Not(f) => Formula::not(rewrite(f, ctx, !polarity)),
        Formula::And(a, b) => {
            Formula::raw_and(rewrite(a, ctx, polarity), rewrite(b, ctx, polarity))
        }
        Formula::Or(a, b) => Formula::raw_or(rewrite(a, ctx, polarity), rewrite(b, ctx, polarity)),
        Formula::Exists(x, f) => {
            if bound(f, ctx, x, polarity) {
                Formula::exists(x.clone(), rewrite(f, ctx, polarity))
            } else {
                vacuous(polarity)
            }
        }
        Formula::Forall(x, f) => {
            if bound(f, ctx, x, polarity) {
                Formula::forall(x.clone(), rewrite(f, ctx, polarity))
            } else {
                vacuous(polarity)
            }
        }
    }
}

/// The rewriting that claims nothing: the lower approximation falls back
/// to `⊥`, the upper one to `⊤`, keeping both implication invariants.
fn vacuous(polarity: bool) -> Formula {
    if polarity {
        Formula::False
    } else {
        Formula::True
    }
}

/// The objects (tables and owner-mode views after elimination) the user
/// may read in the state: every object with a `SELECT` grant; the
/// administrator reads everything.
pub fn permissions(
    schema: &Schema,
    views: &[View],
    sec: &BTreeSet<crate::kernel::Grant>,
    user: &Name,
) -> BTreeSet<Name> {
    if user.as_str() == ADMIN {
        let mut all: BTreeSet<Name> = schema.table_names().cloned().collect();
        all.extend(views.iter().map(|v| v.id.clone()));
        return all;
    }
    sec.iter()
        .filter(|g| g.grantee == *user)
        .filter_map(|g| match &g.privilege {
            Privilege::Select(o) => Some(o.clone()),
            _ => None,
        })
        .collect()
}

/// Everything `secure` needs after activator-mode views are eliminated.
pub struct SecureInputs {
    pub formula: Formula,
    pub views: Vec<View>,
    pub readable: BTreeSet<Name>,
}

fn eliminate_for_user(
    phi: &Formula,
    state: &SystemState,
    user: &Name,
) -> Result<SecureInputs, crate::rc::RcError> {
    let (formula, views, dropped) = eliminate_activator_views(phi, state.views.iter())?;
    let sec: BTreeSet<crate::kernel::Grant> = state
        .sec
        .iter()
        .filter(|g| match g.privilege.object() {
            Some(o) => !dropped.contains(o),
            None => true,
        })
        .cloned()
        .collect();
    let readable = permissions(&state.config.schema, &views, &sec, user);
    Ok(SecureInputs {
        formula,
        views,
        readable,
    })
}

/// Builds the rewriting context and both polarities for a sentence in a
/// state. Exposed for the acceptance checks on the produced rewritings.
pub fn rewrites_for(
    user: &Name,
    phi: &Formula,
    state: &SystemState,
) -> Result<(RewriteCtx, Formula, Formula, Formula), crate::rc::RcError> {
    let inputs = eliminate_for_user(phi, state, user)?;
    let vocab = build_vocabulary(&state.config.schema, &inputs.views);
    let abstracted = extvoc_abstract(&inputs.formula, &vocab);
    let syms = abstracted.predicates();
    let sets = containment_sets(&syms, &vocab, &inputs.views, &state.config);
    let ctx = RewriteCtx {
        vocab,
        sets,
        readable: inputs.readable,
    };
    let top = rewrite(&abstracted, &ctx, true);
    let bot = rewrite(&abstracted, &ctx, false);
    Ok((ctx, abstracted, top, bot))
}

/// Whether the judgment `φ` is provably secure for `user` in `state`: the
/// rewritten sentence `¬φ^⊤ ∧ φ^⊥` must evaluate to false.
pub fn secure(user: &Name, phi: &Formula, state: &SystemState) -> bool {
    let Ok(inputs) = eliminate_for_user(phi, state, user) else {
        return false;
    };
    let Ok((ctx, _, top, bot)) = rewrites_for(user, phi, state) else {
        return false;
    };
    let rw = Formula::raw_and(Formula::not(top), bot);
    let inlined = ctx.vocab.inline(&rw);
    let env = ViewEnv::of(inputs.views.iter());
    match eval(&state.db, &inlined, &Assignment::new(), &env) {
        Ok(value) => !value,
        Err(_) => false,
    }
}

// ---------------------------------------------------------------------
// Update-leak templates.
// ---------------------------------------------------------------------

/// The constraints whose violation the action could cause or reveal.
pub fn dep(action: &Action, constraints: &[Constraint]) -> Vec<Constraint> {
    match action {
        Action::Insert { table, .. } => constraints
            .iter()
            .filter(|c| match &c.kind {
                ConstraintKind::Fd { table: t, .. } => t == table,
                ConstraintKind::Id { from, .. } => from == table,
            })
            .cloned()
            .collect(),
        Action::Delete { table, .. } => constraints
            .iter()
            .filter(|c| matches!(&c.kind, ConstraintKind::Id { to, .. } if to == table))
            .cloned()
            .collect(),
        _ => Vec::new(),
    }
}

/// What the issuer learns from the update's success: the tuple's (non-)
/// membership.
pub fn get_info(action: &Action) -> Formula {
    match action {
        Action::Insert { table, tuple, .. } => Formula::not(ground_atom(table, tuple)),
        Action::Delete { table, tuple, .. } => ground_atom(table, tuple),
        _ => Formula::True,
    }
}

fn ground_atom(table: &Name, tuple: &[Value]) -> Formula {
    Formula::pred(
        table.clone(),
        tuple.iter().cloned().map(Term::Const).collect(),
    )
}

fn eq_tuple(vars: &[Var], values: &[&Value]) -> Formula {
    Formula::conj(
        vars.iter()
            .zip(values.iter())
            .map(|(v, c)| Formula::eq(Term::Var(v.clone()), Term::Const((*c).clone()))),
    )
}

/// The sentence learned if the action succeeds without violating `γ`.
pub fn get_info_s(gamma: &Constraint, action: &Action, schema: &Schema) -> Formula {
    match violation_sentence(gamma, action, schema) {
        Some(TemplateShape::FdInsert(v)) => Formula::not(v),
        Some(TemplateShape::IdInsert { target, prefix }) => exists_with_prefix(&target, &prefix),
        Some(TemplateShape::IdDelete {
            source,
            target,
            prefix,
            rest,
        }) => {
            // Either no source row matches the prefix, or another target
            // row keeps the dependency satisfied.
            let no_source = forall_prefix_differs(&source, &prefix);
            let other_target = exists_other(&target, &prefix, &rest);
            Formula::raw_or(no_source, other_target)
        }
        None => Formula::True,
    }
}

/// The sentence learned if the action violates `γ`.
pub fn get_info_v(gamma: &Constraint, action: &Action, schema: &Schema) -> Formula {
    match violation_sentence(gamma, action, schema) {
        Some(TemplateShape::FdInsert(v)) => v,
        Some(TemplateShape::IdInsert { target, prefix }) => {
            // ∀x̄,ȳ. target(x̄,ȳ) ⇒ x̄ ≠ prefix
            let arity = target.1;
            let vars: Vec<Var> = (0..arity).map(|i| Var::numbered("q", i)).collect();
            let atom = Formula::pred(
                target.0.clone(),
                vars.iter().cloned().map(Term::Var).collect(),
            );
            let prefix_vars = &vars[..prefix.len()];
            let refs: Vec<&Value> = prefix.iter().collect();
            let body = Formula::raw_or(
                Formula::not(atom),
                Formula::not(eq_tuple(prefix_vars, &refs)),
            );
            vars.into_iter()
                .rev()
                .fold(body, |acc, v| Formula::forall(v, acc))
        }
        Some(TemplateShape::IdDelete {
            source,
            target,
            prefix,
            rest,
        }) => {
            // ∃z̄. source(prefix, z̄) ∧ ∀ȳ. (target(prefix, ȳ) ⇒ ȳ = rest)
            let some_source = exists_with_prefix(&source, &prefix);
            let only_this = forall_rest_equal(&target, &prefix, &rest);
            Formula::raw_and(some_source, only_this)
        }
        None => Formula::True,
    }
}

enum TemplateShape {
    FdInsert(Formula),
    IdInsert {
        target: (Name, usize),
        prefix: Vec<Value>,
    },
    IdDelete {
        source: (Name, usize),
        target: (Name, usize),
        prefix: Vec<Value>,
        rest: Vec<Value>,
    },
}

fn violation_sentence(
    gamma: &Constraint,
    action: &Action,
    schema: &Schema,
) -> Option<TemplateShape> {
    match (action, &gamma.kind) {
        (
            Action::Insert { table, tuple, .. },
            ConstraintKind::Fd {
                table: t,
                determinant,
                dependent,
            },
        ) if t == table => {
            // ∃ (non-determinant vars). R(det = consts, rest vars) ∧
            //   ¬(dependent vars = inserted values)
            let arity = tuple.len();
            let vars: Vec<Var> = (0..arity).map(|i| Var::numbered("q", i)).collect();
            let args: Vec<Term> = (0..arity)
                .map(|i| {
                    if determinant.contains(&i) {
                        Term::Const(tuple[i].clone())
                    } else {
                        Term::Var(vars[i].clone())
                    }
                })
                .collect();
            let dep_vars: Vec<Var> = dependent.iter().map(|&i| vars[i].clone()).collect();
            let dep_vals: Vec<&Value> = dependent.iter().map(|&i| &tuple[i]).collect();
            let mut body = Formula::raw_and(
                Formula::pred(t.clone(), args),
                Formula::not(eq_tuple(&dep_vars, &dep_vals)),
            );
            for i in (0..arity).rev() {
                if !determinant.contains(&i) {
                    body = Formula::exists(vars[i].clone(), body);
                }
            }
            Some(TemplateShape::FdInsert(body))
        }
        (Action::Insert { table, tuple, .. }, ConstraintKind::Id { from, to, prefix })
            if from == table =>
        {
            Some(TemplateShape::IdInsert {
                target: (to.clone(), schema.arity(to)?),
                prefix: tuple[..*prefix].to_vec(),
            })
        }
        (Action::Delete { table, tuple, .. }, ConstraintKind::Id { from, to, prefix })
            if to == table =>
        {
            Some(TemplateShape::IdDelete {
                source: (from.clone(), schema.arity(from)?),
                target: (to.clone(), tuple.len()),
                prefix: tuple[..*prefix].to_vec(),
                rest: tuple[*prefix..].to_vec(),
            })
        }
        _ => None,
    }
}

fn exists_with_prefix(obj: &(Name, usize), prefix: &[Value]) -> Formula {
    let (name, arity) = obj;
    let vars: Vec<Var> = (prefix.len()..*arity)
        .map(|i| Var::numbered("q", i))
        .collect();
    let mut args: Vec<Term> = prefix.iter().cloned().map(Term::Const).collect();
    args.extend(vars.iter().cloned().map(Term::Var));
    let mut body = Formula::pred(name.clone(), args);
    for v in vars.into_iter().rev() {
        body = Formula::exists(v, body);
    }
    body
}

fn forall_prefix_differs(obj: &(Name, usize), prefix: &[Value]) -> Formula {
    let (name, arity) = obj;
    let vars: Vec<Var> = (0..*arity).map(|i| Var::numbered("q", i)).collect();
    let atom = Formula::pred(name.clone(), vars.iter().cloned().map(Term::Var).collect());
    let prefix_vars = &vars[..prefix.len()];
    let refs: Vec<&Value> = prefix.iter().collect();
    let body = Formula::raw_or(
        Formula::not(atom),
        Formula::not(eq_tuple(prefix_vars, &refs)),
    );
    vars.into_iter()
        .rev()
        .fold(body, |acc, v| Formula::forall(v, acc))
}

fn exists_other(obj: &(Name, usize), prefix: &[Value], rest: &[Value]) -> Formula {
    let (name, arity) = obj;
    let vars: Vec<Var> = (prefix.len()..*arity)
        .map(|i| Var::numbered("q", i))
        .collect();
    let mut args: Vec<Term> = prefix.iter().cloned().map(Term::Const).collect();
    args.extend(vars.iter().cloned().map(Term::Var));
    let refs: Vec<&Value> = rest.iter().collect();
    let mut body = Formula::raw_and(
        Formula::pred(name.clone(), args),
        Formula::not(eq_tuple(&vars, &refs)),
    );
    for v in vars.into_iter().rev() {
        body = Formula::exists(v, body);
    }
    body
}

fn forall_rest_equal(obj: &(Name, usize), prefix: &[Value], rest: &[Value]) -> Formula {
    let (name, arity) = obj;
    let vars: Vec<Var> = (prefix.len()..*arity)
        .map(|i| Var::numbered("q", i))
        .collect();
    let mut args: Vec<Term> = prefix.iter().cloned().map(Term::Const).collect();
    args.extend(vars.iter().cloned().map(Term::Var));
    let refs: Vec<&Value> = rest.iter().collect();
    let body = Formula::raw_or(
        Formula::not(Formula::pred(name.clone(), args)),
        eq_tuple(&vars, &refs),
    );
    vars.into_iter()
        .rev()
        .fold(body, |acc, v| Formula::forall(v, acc))
}

// ---------------------------------------------------------------------
// Leak detection and the decision point.
// ---------------------------------------------------------------------

/// The tables of a view's fully inlined definition: the smallest table set
/// the syntactic determinacy check accepts for it.
pub fn t_det(view: &View, state: &SystemState) -> BTreeSet<Name> {
    let inlined =
        inline_views(&view.query.body, state.views.iter()).unwrap_or(view.query.body.clone());
    inlined
        .predicates()
        .into_iter()
        .filter(|p| state.config.schema.has_table(p))
        .collect()
}

/// Whether updating `table` cannot leak through the views the user reads:
/// every readable view depending on the table must have all of its
/// determining tables readable too.
pub fn no_leak(state: &SystemState, table: &Name, user: &Name) -> bool {
    let readable = permissions(&state.config.schema, &state.views, &state.sec, user);
    state.views.iter().all(|v| {
        if !readable.contains(&v.id) {
            return true;
        }
        let det = t_det(v, state);
        if !det.contains(table) {
            return true;
        }
        det.iter().all(|o| readable.contains(o))
    })
}

/// The confidentiality decision for `user`.
pub fn f_conf(state: &SystemState, action: &Action, user: &Name) -> Decision {
    if user.as_str() == ADMIN {
        return Decision::permit("f_conf:admin");
    }
    let in_transaction = state.trigger().is_some();
    let invoked_by_user = state.invoker().map(|i| i == user).unwrap_or(false) && in_transaction;
    match action {
        Action::Select {
            user: issuer,
            query,
        } => {
            let applies =
                (!in_transaction && issuer == user) || (in_transaction && invoked_by_user);
            if !applies {
                return Decision::permit("f_conf:other-user");
            }
            if secure(user, query, state) {
                Decision::permit("f_conf:secure-select")
            } else {
                Decision::deny("f_conf:insecure-select")
            }
        }
        Action::Insert {
            user: issuer,
            table,
            ..
        }
        | Action::Delete {
            user: issuer,
            table,
            ..
        } => {
            let applies =
                (!in_transaction && issuer == user) || (in_transaction && invoked_by_user);
            if !applies {
                return Decision::permit("f_conf:other-user");
            }
            if !no_leak(state, table, user) {
                return Decision::deny("f_conf:view-leak");
            }
            if !secure(user, &get_info(action), state) {
                return Decision::deny("f_conf:insecure-result");
            }
            for gamma in dep(action, &state.config.constraints) {
                let gs = get_info_s(&gamma, action, &state.config.schema);
                let gv = get_info_v(&gamma, action, &state.config.schema);
                if !secure(user, &gs, state) || !secure(user, &gv, state) {
                    return Decision::deny("f_conf:insecure-constraint");
                }
            }
            Decision::permit("f_conf:secure-update")
        }
        Action::Grant {
            grantee,
            privilege,
            grantor,
            ..
        } => {
            let self_grant = grantee == user
                && ((!in_transaction && grantor == user) || (in_transaction && invoked_by_user));
            if self_grant {
                if let Privilege::Select(o) = privilege {
                    let readable =
                        permissions(&state.config.schema, &state.views, &state.sec, user);
                    if !readable.contains(o) {
                        return Decision::deny("f_conf:self-grant-unreadable");
                    }
                }
            }
            Decision::permit("f_conf:grant")
        }
        _ => Decision::permit("f_conf:default"),
    }
}

/// The user on whose behalf an action executes: the invoker during a
/// trigger transaction, otherwise the issuer.
pub fn acting_user(state: &SystemState, action: &Action) -> Name {
    if state.trigger().is_some() {
        state
            .invoker()
            .cloned()
            .unwrap_or_else(|| action.issuer().clone())
    } else {
        action.issuer().clone()
    }
}

/// The confidentiality half as a standalone decision point, evaluated for
/// the acting user.
pub struct PdpConf;

impl Pdp for PdpConf {
    fn name(&self) -> &'static str {
        "f_conf"
    }

    fn decide(&self, state: &SystemState, action: &Action) -> Decision {
        let user = acting_user(state, action);
        f_conf(state, action, &user)
    }
}

/// The composed decision point: integrity and confidentiality must both
/// permit.
pub struct PdpF;

impl Pdp for PdpF {
    fn name(&self) -> &'static str {
        "f"
    }

    fn decide(&self, state: &SystemState, action: &Action) -> Decision {
        let int: AuthzVerdict = f_int(state, action);
        if !int.permit {
            return Decision::deny("f_int:no-rule");
        }
        let user = acting_user(state, action);
        let conf = f_conf(state, action, &user);
        if !conf.permit {
            return conf;
        }
        Decision::permit(format!(
            "f_int:{} & {}",
            int.rule.unwrap_or("?"),
            conf.reason
        ))
    }
}
