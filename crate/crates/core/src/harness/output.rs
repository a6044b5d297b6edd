use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use super::ResultTable;
use crate::analysis::DetectableProfile;
use crate::error::{Error, Result};

pub const REGRET_HEADER: [&str; 5] = [
    "policy",
    "round",
    "mean_regret",
    "stderr_regret",
    "mean_reward",
];
pub const SUMMARY_HEADER: [&str; 5] = [
    "policy",
    "mean_T_star",
    "sd_T_star",
    "mean_D_star",
    "sd_D_star",
];
pub const DSTAR_HEADER: [&str; 4] = ["n", "D_star", "T_star", "Delta_star"];

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

/// One row per (policy, round). `mean_reward` is the mean cumulative
/// reward; floats use shortest round-trip formatting.
pub fn write_regret_csv<W: Write>(table: &ResultTable, out: W) -> csv::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(REGRET_HEADER)?;
    for result in &table.results {
        let c = &result.curve;
        for t in 0..c.len() {
            w.write_record([
                result.label.clone(),
                (t + 1).to_string(),
                c.mean_regret[t].to_string(),
                c.stderr_regret[t].to_string(),
                c.mean_reward[t].to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per policy that reports exploration statistics.
pub fn write_summary_csv<W: Write>(table: &ResultTable, out: W) -> csv::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for result in &table.results {
        if let (Some(t), Some(d)) = (result.curve.t_star, result.curve.d_star) {
            w.write_record([
                result.label.clone(),
                t.mean.to_string(),
                t.sd.to_string(),
                d.mean.to_string(),
                d.sd.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_dstar_csv<W: Write>(profiles: &[DetectableProfile], out: W) -> csv::Result<()> {
    let mut w = csv_writer(out);
    w.write_record(DSTAR_HEADER)?;
    for p in profiles {
        w.write_record([
            p.n.to_string(),
            p.d_star.to_string(),
            p.t_star.to_string(),
            p.delta_star.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `regret.csv`, `summary.csv` and `config.txt` into `dir`.
pub fn emit_csv(table: &ResultTable, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let write = |name: &str, f: &dyn Fn(&mut Vec<u8>) -> csv::Result<()>| -> Result<()> {
        let path = dir.join(name);
        let mut buf = Vec::new();
        f(&mut buf).map_err(|source| Error::Csv {
            path: path.clone(),
            source,
        })?;
        fs::write(&path, buf).map_err(|e| Error::io(&path, e))
    };
    write("regret.csv", &|buf| write_regret_csv(table, buf))?;
    write("summary.csv", &|buf| write_summary_csv(table, buf))?;

    let mut echo = table.config.to_text();
    for r in &table.results {
        echo.push_str(&format!("# r_star[{}] = {}\n", r.label, r.r_star));
    }
    let path = dir.join("config.txt");
    fs::write(&path, echo).map_err(|e| Error::io(&path, e))
}

/// Per-policy columns read back from a regret CSV.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RegretColumns {
    pub mean_regret: Vec<f64>,
    pub stderr_regret: Vec<f64>,
    pub mean_reward: Vec<f64>,
}

pub fn read_regret_csv(path: &Path) -> Result<BTreeMap<String, RegretColumns>> {
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = csv::Reader::from_path(path).map_err(csv_err)?;
    let mut out: BTreeMap<String, RegretColumns> = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = idx + 2;
        let field = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Parse {
                    path: path.display().to_string(),
                    line,
                    message: format!("column {} is missing or not a number", REGRET_HEADER[i]),
                })
        };
        let label = record.get(0).unwrap_or_default().to_string();
        let cols = out.entry(label).or_default();
        cols.mean_regret.push(field(2)?);
        cols.stderr_regret.push(field(3)?);
        cols.mean_reward.push(field(4)?);
    }
    Ok(out)
}
