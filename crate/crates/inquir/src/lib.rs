pub mod analyzer;
pub mod arch;
pub mod ast;
pub mod frontend;
pub mod qstate;
pub mod runtime;
pub mod checker;
