//! Machine-readable report rows: fixed CSV schema (version 1) and a
//! JSON-lines alternative, both round-trippable.

use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::drivers::SolveReport;
use crate::error::{Error, Result};
use crate::instance::CnlInstance;

/// Schema version tag written into JSON-lines records.
pub const SCHEMA_VERSION: u32 = 1;

/// One solver run on one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub instance: String,
    pub method: String,
    pub m: usize,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub r: usize,
    pub config: String,
    #[serde(rename = "LB")]
    pub lb: f64,
    #[serde(rename = "UB")]
    pub ub: f64,
    pub gap: f64,
    pub optimal: bool,
    pub iters: usize,
    pub cuts_oa: usize,
    pub cuts_sc: usize,
    pub time_s: f64,
    pub seed: u64,
    pub termination: String,
}

/// Flatten a report against its instance. Times are kept at millisecond
/// resolution.
pub fn row_from_report(
    instance: &str,
    inst: &CnlInstance,
    rep: &SolveReport,
    seed: u64,
) -> ReportRow {
    ReportRow {
        instance: instance.to_string(),
        method: rep.method.clone(),
        m: inst.m(),
        t: inst.num_types(),
        n: inst.num_nests(),
        r: inst.r(),
        config: format!("{:?}", inst.config()).to_lowercase(),
        lb: rep.lb,
        ub: rep.ub,
        gap: rep.gap(),
        optimal: rep.optimal,
        iters: rep.iterations,
        cuts_oa: rep.cuts_oa,
        cuts_sc: rep.cuts_sc,
        time_s: (rep.time_s * 1000.0).round() / 1000.0,
        seed,
        termination: rep.termination.to_string(),
    }
}

/// Append rows to a CSV file, writing the header only when the file is new
/// or empty.
pub fn append_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let new = !path.exists() || std::fs::metadata(path)?.len() == 0;
    let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = csv::WriterBuilder::new().has_headers(new).from_writer(file);
    for row in rows {
        w.serialize(row).map_err(|e| Error::Parse(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Parse(e.to_string()))?;
    rdr.deserialize()
        .map(|r| r.map_err(|e| Error::Parse(e.to_string())))
        .collect()
}

/// Append rows as JSON lines, each tagged with the schema version.
pub fn append_json_lines(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
    for row in rows {
        let mut value =
            serde_json::to_value(row).map_err(|e| Error::Parse(e.to_string()))?;
        value["schema"] = serde_json::json!(SCHEMA_VERSION);
        writeln!(file, "{value}")?;
    }
    Ok(())
}
