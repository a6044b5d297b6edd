use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use super::InfluenceMatrix;
use crate::error::{Error, Result};

/// Loads a SNAP edge list. Node identifiers are renumbered `0..d` in order
/// of first appearance, duplicate edges collapse, self-loops are kept. Every
/// stored entry gets probability 1; use
/// [`InfluenceMatrix::apply_uniform_probability`] to set the real value.
pub fn load_snap(path: impl AsRef<Path>, symmetrize: bool) -> Result<InfluenceMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_snap(
        BufReader::new(file),
        &path.display().to_string(),
        symmetrize,
    )
}

pub fn parse_snap<R: BufRead>(input: R, source: &str, symmetrize: bool) -> Result<InfluenceMatrix> {
    let mut ids: HashMap<u64, usize> = HashMap::new();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();

    let mut index_of = |raw: u64, rows: &mut Vec<Vec<(usize, f64)>>| {
        *ids.entry(raw).or_insert_with(|| {
            rows.push(Vec::new());
            rows.len() - 1
        })
    };
    let mut add = |a: usize, b: usize, rows: &mut Vec<Vec<(usize, f64)>>| {
        if seen.insert((a, b)) {
            rows[a].push((b, 1.0));
        }
    };

    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(source, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let parse_err = |message: String| Error::Parse {
            path: source.to_string(),
            line: lineno,
            message,
        };
        let [src, dst] = fields[..] else {
            return Err(parse_err(format!(
                "expected two node ids, found {} fields",
                fields.len()
            )));
        };
        let src: u64 = src
            .parse()
            .map_err(|_| parse_err(format!("node id `{src}` is not an integer")))?;
        let dst: u64 = dst
            .parse()
            .map_err(|_| parse_err(format!("node id `{dst}` is not an integer")))?;
        let a = index_of(src, &mut rows);
        let b = index_of(dst, &mut rows);
        add(a, b, &mut rows);
        if symmetrize {
            add(b, a, &mut rows);
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse {
            path: source.to_string(),
            line: 0,
            message: "edge list contains no edges".into(),
        });
    }
    Ok(InfluenceMatrix { rows })
}

/// Writes the stored pattern as a SNAP edge list (probabilities dropped).
pub fn write_snap<W: Write>(matrix: &InfluenceMatrix, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# Nodes: {} Edges: {}", matrix.d(), matrix.nnz())?;
    for (i, row) in matrix.rows().enumerate() {
        for &(j, _) in row {
            writeln!(out, "{i}\t{j}")?;
        }
    }
    out.flush()
}
