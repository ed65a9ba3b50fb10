//! Canonical instance files (JSON with fixed field names), cost-matrix CSV
//! ingestion, and content checksums.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::instance::{CnlInstance, InstanceData, NestConfig};

/// On-disk instance document. `alpha` is sparse quadruples
/// `(t, facility, nest, value)`; facilities are candidates `0..m` then the
/// competitors listed in `competitors`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub m: usize,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub r: usize,
    pub config: NestConfig,
    pub q: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    pub alpha: Vec<(usize, usize, usize, f64)>,
    pub v: Vec<Vec<f64>>,
    /// Competitor facility indices, `m..m + count`.
    pub competitors: Vec<usize>,
    /// Free-form provenance (generator config, seed, tool version).
    pub meta: serde_json::Value,
}

/// Serialize an instance with a provenance block.
pub fn to_file(inst: &CnlInstance, meta: serde_json::Value) -> InstanceFile {
    let data = inst.data();
    let mut alpha = Vec::new();
    for t in 0..data.num_types {
        for i in 0..inst.num_facilities() {
            for n in 0..data.num_nests {
                let a = data.alpha[t][i][n];
                if a > 0.0 {
                    alpha.push((t, i, n, a));
                }
            }
        }
    }
    InstanceFile {
        m: data.m,
        t: data.num_types,
        n: data.num_nests,
        r: data.r,
        config: data.config,
        q: data.q.clone(),
        sigma: data.sigma.clone(),
        alpha,
        v: data.v.clone(),
        competitors: (data.m..data.m + data.n_competitors).collect(),
        meta,
    }
}

/// Rebuild and validate an instance from its file form.
pub fn from_file(f: &InstanceFile) -> Result<CnlInstance> {
    let nc = f.competitors.len();
    let nf = f.m + nc;
    for (pos, &i) in f.competitors.iter().enumerate() {
        if i != f.m + pos {
            return Err(Error::Parse(format!(
                "competitor list must be contiguous from m: found {i} at position {pos}"
            )));
        }
    }
    let mut alpha = vec![vec![vec![0.0; f.n]; nf]; f.t];
    for &(t, i, n, a) in &f.alpha {
        if t >= f.t || i >= nf || n >= f.n {
            return Err(Error::Parse(format!("alpha index ({t}, {i}, {n}) out of range")));
        }
        alpha[t][i][n] = a;
    }
    CnlInstance::new(InstanceData {
        m: f.m,
        num_types: f.t,
        num_nests: f.n,
        n_competitors: nc,
        r: f.r,
        config: f.config,
        q: f.q.clone(),
        sigma: f.sigma.clone(),
        alpha,
        v: f.v.clone(),
    })
}

pub fn save_instance(path: &Path, inst: &CnlInstance, meta: serde_json::Value) -> Result<()> {
    let file = to_file(inst, meta);
    let mut text = serde_json::to_string_pretty(&file)
        .map_err(|e| Error::Parse(format!("serialize: {e}")))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_instance(path: &Path) -> Result<CnlInstance> {
    let text = std::fs::read_to_string(path)?;
    let file: InstanceFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    from_file(&file)
}

/// SHA-256 of a file's bytes, hex encoded.
pub fn checksum(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut h = Sha256::new();
    h.update(&bytes);
    Ok(format!("{:x}", h.finalize()))
}

/// Parse a cost CSV with header `type,site_1..site_k` into a `T x k` matrix,
/// rows ordered by the leading type index.
pub fn load_cost_csv(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    let width = rdr.headers().map_err(|e| Error::Parse(e.to_string()))?.len() - 1;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        if rec.len() != width + 1 {
            return Err(Error::Parse(format!(
                "cost row has {} fields, expected {}",
                rec.len(),
                width + 1
            )));
        }
        let t: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad type index {:?}", &rec[0])))?;
        let vals: Vec<f64> = rec
            .iter()
            .skip(1)
            .map(|s| {
                let v: f64 = s
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad cost value {s:?}")))?;
                if v < 0.0 {
                    return Err(Error::Parse(format!("negative cost {v}")));
                }
                Ok(v)
            })
            .collect::<Result<_>>()?;
        rows.push((t, vals));
    }
    rows.sort_by_key(|(t, _)| *t);
    for (expect, (t, _)) in rows.iter().enumerate() {
        if *t != expect {
            return Err(Error::Parse(format!(
                "cost rows must cover types 0..T contiguously; saw {t}, expected {expect}"
            )));
        }
    }
    Ok(rows.into_iter().map(|(_, v)| v).collect())
}
