//! Instance formats and result files.

pub mod benchmark;
pub mod canonical;
pub mod results;

pub use benchmark::{detect_format, import_benchmark, import_str, DetectedFormat, FormatHint};
pub use canonical::{parse_instance, parse_instance_str, to_canonical_string, write_instance};
pub use results::{write_results, write_trace, ResultRow, RESULT_COLUMNS, TRACE_COLUMNS};
