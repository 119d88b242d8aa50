//! Reading and writing sensor tables, plus the seeded synthetic generator.

mod csv_io;
mod synth;

pub use csv_io::{read_csv, write_csv, CsvSchema};
pub use synth::{generate_synthetic, SynthConfig, BURST_LENGTH, ROWS_PER_MILEAGE, SAMPLE_SPACING};
