pub mod hypercode;
pub mod runtime;
pub mod styles;
pub mod syntax;
pub mod typesys;
pub mod workspace;
