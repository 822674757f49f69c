//! Static analysis of object-oriented bytecode by abstract interpretation of a
//! CESK-style machine with k-limited call-site sensitivity.

pub mod class_table;
pub mod domain;
pub mod error;
pub mod frontend;
pub mod machine;
pub mod sexp;
pub mod syntax;
pub mod predicate;
pub mod engine;
pub mod oracle;
pub mod report;
