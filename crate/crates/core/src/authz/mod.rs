//! The access-control decision point: the integrity half, the
//! confidentiality half, and their composition.

pub mod confidentiality;
pub mod integrity;

pub use confidentiality::{
    acting_user, bound, build_vocabulary, contained, containment_sets, dep, extvoc_abstract,
    f_conf, get_info, get_info_s, get_info_v, no_leak, permissions, rewrite, rewrites_for, secure,
    t_det, ContainmentSets, PdpConf, PdpF, ProjPred, RewriteCtx, Vocabulary,
};
pub use integrity::{
    appr_det, at_tables, auth_appr, auth_full, av_views, determines_brute, extend, f_int,
    AuthzVerdict, PdpInt,
};
