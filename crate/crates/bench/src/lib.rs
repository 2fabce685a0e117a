//! Benchmark harness for the lock-free trie map and the lock-based table:
//! workload description, timed runs behind a validation gate, and CSV
//! output.

mod keys;
mod report;
mod run;

pub use keys::{collider_keys, uniform_keys, Distribution};
pub use report::{emit_csv, read_csv, CsvRow, ReadError, HEADER};
pub use run::{
    reachability, run_benchmark, BenchError, Cell, Impl, Mode, RunResult, WorkloadSpec,
};
