//! File formats: MNIST IDX input, spike tables, PGM images and config text.

pub mod config;
pub mod idx;
pub mod pgm;
pub mod spikes;

pub use config::{load_config, Config, ConfigError};
pub use idx::{parse_idx_header, parse_idx_images, parse_idx_labels, write_idx_images, IdxError, IdxHeader};
pub use pgm::{read_pgm, write_pgm, PgmError};
pub use spikes::{read_spike_table, write_spike_table, SpikeTableError};
