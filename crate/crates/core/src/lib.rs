pub mod benderwu;
pub mod diagnostics;
pub mod evaluate;
pub mod exec;
pub mod numerics;
pub mod oracle;
pub mod strongcoupling;
pub mod vptcore;
