//! Versioned JSON run reports.

use serde::Serialize;
use std::path::Path;
use std::time::Instant;

#[derive(Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: &'static str,
    pub passes: u64,
    pub peak_sketch_bytes: u64,
    pub output_size: u64,
    pub params: serde_json::Map<String, serde_json::Value>,
    pub timings: Timings,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validation: Option<serde_json::Value>,
}

#[derive(Serialize, Default)]
pub struct Timings {
    pub total_ms: u64,
}

impl Report {
    pub fn new(command: &'static str) -> Report {
        Report {
            schema: "1",
            command,
            passes: 0,
            peak_sketch_bytes: 0,
            output_size: 0,
            params: serde_json::Map::new(),
            timings: Timings::default(),
            validation: None,
        }
    }

    pub fn param<T: Serialize>(&mut self, key: &str, value: T) {
        self.params.insert(key.to_string(), serde_json::to_value(value).unwrap());
    }

    pub fn validation(&mut self, v: serde_json::Value) {
        self.validation = Some(v);
    }

    /// Write the report (when a path was given) and print a one-line summary.
    pub fn finish(mut self, start: Instant, path: Option<&Path>) -> dgs_core::Result<()> {
        self.timings.total_ms = start.elapsed().as_millis() as u64;
        let text = serde_json::to_string_pretty(&self).expect("report serializes");
        if let Some(p) = path {
            std::fs::write(p, &text)?;
        }
        eprintln!(
            "{}: passes={} peak_sketch_bytes={} output_size={} ({} ms)",
            self.command,
            self.passes,
            self.peak_sketch_bytes,
            self.output_size,
            self.timings.total_ms
        );
        Ok(())
    }

    /// Print the full report to stdout.
    pub fn print(mut self, start: Instant) -> dgs_core::Result<()> {
        self.timings.total_ms = start.elapsed().as_millis() as u64;
        println!("{}", serde_json::to_string_pretty(&self).expect("report serializes"));
        Ok(())
    }
}
