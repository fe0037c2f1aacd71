//! Report layout: a deterministic payload plus a metadata block for
//! everything that varies between runs (timings, worker count).

use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::runner::Overrides;

#[derive(Clone, Debug, Serialize)]
pub struct Verdict {
    pub name: String,
    pub value: String,
    pub inconclusive: bool,
}

impl Verdict {
    pub fn new(name: &str, value: impl Into<String>) -> Self {
        let value = value.into();
        Self { name: name.into(), inconclusive: value == "inconclusive", value }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentResult {
    pub index: usize,
    pub kind: String,
    pub verdicts: Vec<Verdict>,
    pub caveats: Vec<String>,
    pub data: serde_json::Value,
    #[serde(skip)]
    pub csv: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Payload {
    pub name: String,
    pub anchor: Option<String>,
    pub seed: u64,
    pub model_family: String,
    pub model_fingerprint: String,
    pub config: ExperimentConfig,
    pub overrides: Overrides,
    pub results: Vec<ExperimentResult>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunMetadata {
    pub started_unix_seconds: u64,
    pub wall_seconds: f64,
    /// Wall time per experiment, in order.
    pub experiment_seconds: Vec<f64>,
    pub workers: usize,
    pub version: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub payload: Payload,
    pub metadata: RunMetadata,
}

impl Report {
    /// The reproducible part of the report.
    pub fn payload_json(&self) -> String {
        serde_json::to_string_pretty(&self.payload).expect("payload serialises")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    pub fn any_inconclusive(&self) -> bool {
        self.payload.results.iter().flat_map(|r| &r.verdicts).any(|v| v.inconclusive)
    }

    /// `(file name, contents)` for every CSV export.
    pub fn csv_files(&self) -> Vec<(String, String)> {
        self.payload
            .results
            .iter()
            .filter_map(|r| r.csv.as_ref().map(|c| (format!("{}-{:02}-{}.csv", self.payload.name, r.index, r.kind), c.clone())))
            .collect()
    }

    /// Writes `<name>.report.json` and the CSV exports into `dir`.
    pub fn write_to(&self, dir: &std::path::Path) -> std::io::Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let path = dir.join(format!("{}.report.json", self.payload.name));
        std::fs::write(&path, self.to_json())?;
        written.push(path);
        for (name, body) in self.csv_files() {
            let path = dir.join(name);
            std::fs::write(&path, body)?;
            written.push(path);
        }
        Ok(written)
    }
}
