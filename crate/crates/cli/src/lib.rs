//! Library surface of the command-line tool: instance generators for the
//! benchmark families and the benchmark harness itself.

pub mod bench;
pub mod gen;
