//! Schema-carrying, partitioned tables with relational and map/reduce
//! operations.

mod io;
mod numeric;
mod schema;
mod table;
mod value;

pub use io::{read_corpus, read_csv, write_csv, CsvOptions};
pub use numeric::MLNumericTable;
pub use schema::{Column, Schema};
pub use table::MLTable;
pub use value::{MLRow, MLValue, ValueKind};

pub(crate) use table::split_even;
