use std::collections::BTreeSet;

use crate::rc::{Mode, Name, View};

use super::action::{GrantOp, Privilege};

/// A grant in the policy: `⟨op, grantee, privilege, grantor⟩`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Grant {
    pub op: GrantOp,
    pub grantee: Name,
    pub privilege: Privilege,
    pub grantor: Name,
}

impl std::fmt::Display for Grant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let op = match self.op {
            GrantOp::Plain => "+",
            GrantOp::WithGrantOption => "+*",
        };
        write!(
            f,
            "<{op}, {}, {}, {}>",
            self.grantee, self.privilege, self.grantor
        )
    }
}

/// Whether a grant can root a chain: grants issued by `admin` always can;
/// grants of `SELECT` on a view with owner's privileges can also be rooted
/// at the view's owner.
fn is_root(grant: &Grant, views: &[View], admin: &Name) -> bool {
    if &grant.grantor == admin {
        return true;
    }
    if let Privilege::Select(object) = &grant.privilege {
        if let Some(v) = views.iter().find(|v| &v.id == object) {
            return v.mode == Mode::Owner && v.owner == grant.grantor;
        }
    }
    false
}

/// The grants reachable by some chain of `sec` that avoids `banned`, i.e.,
/// `policy(filter(chain(sec), banned))`. A chain starts at a rooted grant
/// and extends from a grant-option holder to a grant of the same privilege
/// issued by that holder.
pub fn surviving_grants(
    sec: &BTreeSet<Grant>,
    banned: Option<&Grant>,
    views: &[View],
    admin: &Name,
) -> BTreeSet<Grant> {
    let candidates: Vec<&Grant> = sec
        .iter()
        .filter(|g| banned.is_none_or(|b| **g != *b))
        .collect();
    let mut reached: BTreeSet<Grant> = candidates
        .iter()
        .filter(|g| is_root(g, views, admin))
        .map(|g| (*g).clone())
        .collect();
    loop {
        let mut added = false;
        for g in &candidates {
            if reached.contains(*g) {
                continue;
            }
            // g extends a chain ending in a grant-option grant of the same
            // privilege to g's grantor.
            let extends = reached.iter().any(|prev| {
                prev.op == GrantOp::WithGrantOption
                    && prev.privilege == g.privilege
                    && prev.grantee == g.grantor
            });
            if extends {
                reached.insert((*g).clone());
                added = true;
            }
        }
        if !added {
            return reached;
        }
    }
}

/// All chains constructible from the policy, as the set of grants lying on
/// some chain. Exposed for the property suite.
pub fn chains(sec: &BTreeSet<Grant>, views: &[View], admin: &Name) -> BTreeSet<Grant> {
    surviving_grants(sec, None, views, admin)
}


/// SQL `REVOKE … CASCADE`:
/// `policy(filter(chain(policy(filter(chain(sec), ⟨⊕,…⟩))), ⟨⊕*,…⟩))`.
/// Revoking an absent grant may still prune grants that were only
/// reachable through it; revoking a grant nobody depends on is a no-op on
/// the rest of the policy.
pub fn revoke_cascade(
    sec: &BTreeSet<Grant>,
    grantee: &Name,
    privilege: &Privilege,
    revoker: &Name,
    views: &[View],
    admin: &Name,
) -> BTreeSet<Grant> {
    let plain = Grant {
        op: GrantOp::Plain,
        grantee: grantee.clone(),
        privilege: privilege.clone(),
        grantor: revoker.clone(),
    };
    let with_option = Grant {
        op: GrantOp::WithGrantOption,
        ..plain.clone()
    };
    let stage1 = surviving_grants(sec, Some(&plain), views, admin);
    surviving_grants(&stage1, Some(&with_option), views, admin)
}
