//! Hyper-code: source text with embedded links to extant values, and the
//! reify/reflect pair that moves between values and such text.

pub mod entity;
pub mod hypertext;
pub mod reify;
pub mod store;
pub mod subst;

pub use hypertext::{
    from_json, from_json_str, manifest, replace_first, to_json, to_json_string, transform, EditOp, EditScript,
    HyperTextError, ManifestEntry,
};
pub use reify::MachineLinks;
pub use store::{StoreEntry, ValueStore};
pub use subst::{free_vars, link_free};
