//! On-disk artifact formats: event CSV, EVF1 frame stacks, PRM1 channel
//! stacks, IMU traces and JSON documents.

mod binary;
mod events_csv;
mod imu;
mod json;

pub use binary::{decode_evf, decode_prm, encode_evf, encode_prm, read_evf, read_prm, write_evf, write_prm};
pub use events_csv::{parse_events_csv, read_events_csv, write_events_csv, EVENTS_HEADER};
pub use imu::{read_imu_csv, write_imu_csv};
pub use json::{read_json, write_json};
