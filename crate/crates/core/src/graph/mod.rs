//! Influence matrices: construction, loading and serialization.
//!
//! An [`InfluenceMatrix`] stores `p_ij`, the probability that choosing node
//! `i` influences node `j`, as sparse rows. Entries that are not stored have
//! probability zero.

mod generate;
mod snap;

use std::io::{BufRead, Write};

pub use generate::{
    generate, lower_bound_asymmetric, lower_bound_symmetric, GraphKind, GraphSpec,
    DEFAULT_EDGE_PROBABILITY,
};
pub use snap::{load_snap, parse_snap, write_snap};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::config(format!("probability {p} outside (0, 1]")))
    }
}

impl InfluenceMatrix {
    /// A matrix with `d` nodes and no influence at all.
    pub fn empty(d: usize) -> Self {
        Self {
            rows: vec![Vec::new(); d],
        }
    }

    /// Builds a matrix from explicit rows, validating every entry.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return Err(Error::config("matrix needs at least one node"));
        }
        for (i, row) in rows.iter().enumerate() {
            let mut seen = std::collections::HashSet::with_capacity(row.len());
            for &(j, p) in row {
                if j >= d {
                    return Err(Error::config(format!(
                        "entry ({i}, {j}) out of range for d = {d}"
                    )));
                }
                check_probability(p)?;
                if !seen.insert(j) {
                    return Err(Error::config(format!("duplicate entry ({i}, {j})")));
                }
            }
        }
        Ok(Self { rows })
    }

    pub fn d(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[(usize, f64)]> {
        self.rows.iter().map(Vec::as_slice)
    }

    /// Number of stored (non-zero) entries.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .iter()
            .find(|&&(col, _)| col == j)
            .map_or(0.0, |&(_, p)| p)
    }

    /// Row sums: `r_k`, the expected number of nodes `k` influences.
    pub fn influence(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(_, p)| p).sum())
            .collect()
    }

    /// Column sums: the dual influence, i.e. how strongly each node is
    /// influenced by the rest of the graph. Accumulated in row order.
    pub fn dual_influence(&self) -> Vec<f64> {
        let mut dual = vec![0.0; self.d()];
        for row in &self.rows {
            for &(j, p) in row {
                dual[j] += p;
            }
        }
        dual
    }

    /// Replaces every stored probability by `p`, keeping the sparsity pattern.
    pub fn apply_uniform_probability(&self, p: f64) -> Result<Self> {
        check_probability(p)?;
        let rows = self
            .rows
            .iter()
            .map(|row| row.iter().map(|&(j, _)| (j, p)).collect())
            .collect();
        Ok(Self { rows })
    }

    /// True when `(i, j)` is stored iff `(j, i)` is, with equal probability.
    pub fn is_symmetric(&self) -> bool {
        self.rows.iter().enumerate().all(|(i, row)| {
            row.iter()
                .all(|&(j, p)| self.rows[j].iter().any(|&(back, q)| back == i && q == p))
        })
    }

    /// Writes the plain-text matrix format: a `d=<d>` header followed by
    /// one `i j p` line per stored entry.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "d={}", self.d())?;
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, p) in row {
                writeln!(out, "{i} {j} {p}")?;
            }
        }
        out.flush()
    }

    /// Reads the format produced by [`InfluenceMatrix::write_to`]. Blank
    /// lines and lines starting with `#` are ignored.
    pub fn read_from<R: BufRead>(input: R, source: &str) -> Result<Self> {
        let parse_err = |line: usize, message: String| Error::Parse {
            path: source.to_string(),
            line,
            message,
        };
        let mut rows: Option<Vec<Vec<(usize, f64)>>> = None;
        for (idx, line) in input.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::io(source, e))?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some(rows) = rows.as_mut() else {
                let d = line
                    .strip_prefix("d=")
                    .and_then(|v| v.trim().parse::<usize>().ok())
                    .filter(|&d| d > 0)
                    .ok_or_else(|| {
                        parse_err(lineno, format!("expected header `d=<d>`, got `{line}`"))
                    })?;
                rows = Some(vec![Vec::new(); d]);
                continue;
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [i, j, p] = fields[..] else {
                return Err(parse_err(lineno, format!("expected `i j p`, got `{line}`")));
            };
            let i: usize = i
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad row index `{i}`")))?;
            let j: usize = j
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad column index `{j}`")))?;
            let p: f64 = p
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad probability `{p}`")))?;
            let d = rows.len();
            if i >= d || j >= d {
                return Err(parse_err(
                    lineno,
                    format!("entry ({i}, {j}) out of range for d = {d}"),
                ));
            }
            if !(p > 0.0 && p <= 1.0) {
                return Err(parse_err(lineno, format!("probability {p} outside (0, 1]")));
            }
            if rows[i].iter().any(|&(col, _)| col == j) {
                return Err(parse_err(lineno, format!("duplicate entry ({i}, {j})")));
            }
            rows[i].push((j, p));
        }
        let rows = rows.ok_or_else(|| parse_err(0, "missing `d=<d>` header".into()))?;
        Ok(Self { rows })
    }
}
