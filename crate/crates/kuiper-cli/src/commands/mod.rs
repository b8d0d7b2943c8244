//! One module per subcommand. Each exposes its key table and an entry
//! point taking the resolved [`Config`](crate::config::Config).

pub mod algebra;
pub mod decompose;
pub mod report;
pub mod run;
pub mod schedule;
