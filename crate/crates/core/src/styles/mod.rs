pub mod check;
pub mod def;
pub mod registry;

pub use check::{check_constraints, formula_holds, ConformanceReport, Element, Topology, Violation};
pub use def::*;
pub use registry::StyleRegistry;
