//! Run manifest embedded in every artifact.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::CliResult;

pub const BUILD_ID: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// What produced an artifact. The wall-clock timestamp and worker count go
/// only to the `run.json` sidecar so that data files stay byte-identical
/// across repeated runs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub seed: u64,
    pub build: String,
    /// Every setting the subcommand read, defaults included.
    pub config: BTreeMap<String, String>,
}

#[derive(Debug, Serialize)]
struct Sidecar<'a> {
    #[serde(flatten)]
    manifest: &'a RunManifest,
    timestamp_unix: u64,
    workers: usize,
}

impl RunManifest {
    pub fn new(subcommand: &str, seed: u64, config: BTreeMap<String, String>) -> Self {
        Self {
            subcommand: subcommand.to_string(),
            seed,
            build: BUILD_ID.to_string(),
            config,
        }
    }

    pub fn to_json(&self) -> CliResult<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// `# manifest {...}`, the first line of CSV outputs.
    pub fn csv_comment(&self) -> CliResult<String> {
        Ok(format!("# manifest {}\r\n", self.to_json()?))
    }

    /// XML comment for SVG outputs; `--` cannot appear inside a comment.
    pub fn xml_comment(&self) -> CliResult<String> {
        let json = self.to_json()?.replace("--", "-\\u002d");
        Ok(format!("<!-- manifest {json} -->\n"))
    }

    pub fn sidecar_json(&self, timestamp_unix: u64, workers: usize) -> CliResult<String> {
        Ok(serde_json::to_string_pretty(&Sidecar {
            manifest: self,
            timestamp_unix,
            workers,
        })?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_are_single_lines_and_parse_back() {
        let mut cfg = BTreeMap::new();
        cfg.insert("out".to_string(), "a--b\nc".to_string());
        let m = RunManifest::new("simulate", 7, cfg);
        let csv = m.csv_comment().unwrap();
        assert_eq!(csv.lines().count(), 1);
        let v: serde_json::Value =
            serde_json::from_str(csv.trim_start_matches("# manifest ")).unwrap();
        assert_eq!(v["seed"], 7);
        assert_eq!(v["config"]["out"], "a--b\nc");

        let xml = m.xml_comment().unwrap();
        let body = xml
            .trim_start_matches("<!-- ")
            .trim_end()
            .trim_end_matches("-->");
        assert!(!body.contains("--"));
        let v: serde_json::Value =
            serde_json::from_str(body.trim_start_matches("manifest ").trim()).unwrap();
        assert_eq!(v["config"]["out"], "a--b\nc");
    }
}
