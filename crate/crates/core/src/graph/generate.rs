use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{load_snap, InfluenceMatrix};
use crate::error::{Error, Result};

/// Edge probability used when a graph description does not set one.
pub const DEFAULT_EDGE_PROBABILITY: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub enum GraphKind {
    /// Undirected preferential attachment, `m` edges per arriving node.
    BarabasiAlbert {
        m: usize,
    },
    /// Node 0 linked both ways to every other node.
    Star,
    Complete,
    Empty,
    /// Two-level construction where node 0 is better than every other node
    /// by `sqrt(d r / n)`.
    LowerBoundSymmetric {
        r: f64,
        n: u64,
    },
    /// Every node influences `k0` surely; otherwise row `l` has level
    /// `r_profile[l] / d`.
    LowerBoundAsymmetric {
        r_profile: Vec<f64>,
        k0: usize,
    },
    /// SNAP edge list on disk.
    File {
        path: PathBuf,
        symmetrize: bool,
    },
}

/// A graph description. `d` is ignored for [`GraphKind::File`], and `p`
/// is ignored by the lower-bound constructions, which fix their own
/// probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphSpec {
    pub kind: GraphKind,
    pub d: usize,
    pub p: f64,
}

impl GraphSpec {
    pub fn new(kind: GraphKind, d: usize, p: f64) -> Self {
        Self { kind, d, p }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(Error::config(format!(
                "edge probability {} outside (0, 1]",
                self.p
            )));
        }
        if matches!(self.kind, GraphKind::File { .. }) {
            return Ok(());
        }
        if self.d == 0 {
            return Err(Error::config("graph needs d >= 1"));
        }
        match &self.kind {
            GraphKind::BarabasiAlbert { m } if *m == 0 || *m >= self.d => Err(Error::config(
                format!("barabasi_albert needs 1 <= m < d (m = {m}, d = {})", self.d),
            )),
            _ => Ok(()),
        }
    }
}

/// Builds the matrix described by `spec`. The seed only matters for random
/// models.
pub fn generate(spec: &GraphSpec, seed: u64) -> Result<InfluenceMatrix> {
    spec.validate()?;
    let d = spec.d;
    let p = spec.p;
    match &spec.kind {
        GraphKind::BarabasiAlbert { m } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok(undirected(d, &barabasi_albert_edges(d, *m, &mut rng), p))
        }
        GraphKind::Star => {
            let edges: Vec<_> = (1..d).map(|j| (0, j)).collect();
            Ok(undirected(d, &edges, p))
        }
        GraphKind::Complete => {
            let rows = (0..d)
                .map(|i| (0..d).filter(|&j| j != i).map(|j| (j, p)).collect())
                .collect();
            Ok(InfluenceMatrix { rows })
        }
        GraphKind::Empty => Ok(InfluenceMatrix::empty(d)),
        GraphKind::LowerBoundSymmetric { r, n } => lower_bound_symmetric(d, *r, *n),
        GraphKind::LowerBoundAsymmetric { r_profile, k0 } => {
            lower_bound_asymmetric(d, r_profile, *k0)
        }
        GraphKind::File { path, symmetrize } => {
            load_snap(path, *symmetrize)?.apply_uniform_probability(p)
        }
    }
}

fn undirected(d: usize, edges: &[(usize, usize)], p: f64) -> InfluenceMatrix {
    let mut rows = vec![Vec::new(); d];
    for &(a, b) in edges {
        rows[a].push((b, p));
        rows[b].push((a, p));
    }
    InfluenceMatrix { rows }
}

/// Seed graph: a clique on the first `m` nodes. Every later node attaches to
/// `m` distinct earlier nodes drawn proportionally to degree, by rejection
/// from the endpoint list.
fn barabasi_albert_edges(d: usize, m: usize, rng: &mut impl Rng) -> Vec<(usize, usize)> {
    let mut edges = Vec::with_capacity(m * (m.saturating_sub(1)) / 2 + m * (d - m));
    for a in 0..m {
        for b in a + 1..m {
            edges.push((a, b));
        }
    }
    let mut endpoints: Vec<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    let mut chosen = Vec::with_capacity(m);
    for node in m..d {
        chosen.clear();
        if endpoints.is_empty() {
            // m = 1: the seed is a single isolated node.
            chosen.push(0);
        } else {
            while chosen.len() < m {
                let target = endpoints[rng.gen_range(0..endpoints.len())];
                if !chosen.contains(&target) {
                    chosen.push(target);
                }
            }
        }
        for &target in &chosen {
            edges.push((target, node));
            endpoints.push(target);
            endpoints.push(node);
        }
    }
    edges
}

/// Node 0 influences every node (itself included) with probability `r/d`;
/// every other node does so with `r/d - sqrt(r/(d n))`.
pub fn lower_bound_symmetric(d: usize, r: f64, n: u64) -> Result<InfluenceMatrix> {
    if d == 0 || n == 0 {
        return Err(Error::config(
            "lower_bound_symmetric needs d >= 1 and n >= 1",
        ));
    }
    if !(r > 0.0 && r <= d as f64) {
        return Err(Error::config(format!(
            "lower_bound_symmetric needs 0 < r <= d (r = {r})"
        )));
    }
    let best = r / d as f64;
    let rest = best - (r / (d as f64 * n as f64)).sqrt();
    if rest <= 0.0 {
        return Err(Error::config(format!(
            "lower_bound_symmetric: suboptimal probability {rest} is not positive"
        )));
    }
    let rows = (0..d)
        .map(|i| {
            let q = if i == 0 { best } else { rest };
            (0..d).map(|j| (j, q)).collect()
        })
        .collect();
    Ok(InfluenceMatrix { rows })
}

/// `p_{l,k0} = 1` for every `l`, and `p_{l,k} = r_profile[l] / d` elsewhere.
pub fn lower_bound_asymmetric(d: usize, r_profile: &[f64], k0: usize) -> Result<InfluenceMatrix> {
    if r_profile.len() != d {
        return Err(Error::config(format!(
            "r_profile has {} levels, expected d = {d}",
            r_profile.len()
        )));
    }
    if k0 >= d {
        return Err(Error::config(format!("k0 = {k0} out of range for d = {d}")));
    }
    if let Some(r) = r_profile.iter().find(|&&r| !(r > 0.0 && r <= d as f64)) {
        return Err(Error::config(format!("influence level {r} outside (0, d]")));
    }
    let top = r_profile.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if r_profile[k0] >= top {
        return Err(Error::config(format!(
            "k0 = {k0} is not suboptimal under r_profile"
        )));
    }
    let rows = r_profile
        .iter()
        .map(|&r| {
            let q = r / d as f64;
            (0..d).map(|k| (k, if k == k0 { 1.0 } else { q })).collect()
        })
        .collect();
    Ok(InfluenceMatrix { rows })
}

impl fmt::Display for GraphSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (d, p) = (self.d, self.p);
        match &self.kind {
            GraphKind::BarabasiAlbert { m } => write!(f, "ba:d={d},m={m},p={p}"),
            GraphKind::Star => write!(f, "star:d={d},p={p}"),
            GraphKind::Complete => write!(f, "complete:d={d},p={p}"),
            GraphKind::Empty => write!(f, "empty:d={d}"),
            GraphKind::LowerBoundSymmetric { r, n } => write!(f, "lb_sym:d={d},r={r},n={n}"),
            GraphKind::LowerBoundAsymmetric { r_profile, k0 } => {
                let levels: Vec<String> = r_profile.iter().map(f64::to_string).collect();
                write!(f, "lb_asym:d={d},k0={k0},r={}", levels.join("/"))
            }
            GraphKind::File { path, symmetrize } => write!(
                f,
                "file:path={},symmetrize={symmetrize},p={p}",
                path.display()
            ),
        }
    }
}

/// Parses `kind[:key=value,...]`, e.g. `ba:d=1000,m=10,p=0.8`,
/// `star:d=100,p=1`, `lb_sym:d=2,r=1,n=1000`, `lb_asym:d=3,k0=2,r=1/1/0.5`
/// or `file:path=edges.txt,symmetrize=true,p=0.8`.
impl FromStr for GraphSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = BTreeMap::new();
        for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = pair.split_once('=').ok_or_else(|| {
                Error::config(format!("graph parameter `{pair}` is not key=value"))
            })?;
            params.insert(k.trim().to_string(), v.trim().to_string());
        }
        let mut take = |key: &str| params.remove(key);
        fn num<T: FromStr>(key: &str, v: Option<String>) -> Result<Option<T>> {
            v.map(|v| {
                v.parse().map_err(|_| {
                    Error::config(format!("graph parameter {key} = `{v}` is not a number"))
                })
            })
            .transpose()
        }
        let need_d =
            |v: Option<usize>| v.ok_or_else(|| Error::config(format!("graph `{s}` needs d=")));

        let d = num::<usize>("d", take("d"))?;
        let p = num::<f64>("p", take("p"))?.unwrap_or(DEFAULT_EDGE_PROBABILITY);
        let spec = match kind {
            "ba" | "barabasi_albert" => {
                let m = num("m", take("m"))?.unwrap_or(10);
                GraphSpec::new(GraphKind::BarabasiAlbert { m }, need_d(d)?, p)
            }
            "star" => GraphSpec::new(GraphKind::Star, need_d(d)?, p),
            "complete" => GraphSpec::new(GraphKind::Complete, need_d(d)?, p),
            "empty" => GraphSpec::new(GraphKind::Empty, need_d(d)?, p),
            "lb_sym" | "lower_bound_symmetric" => {
                let r = num("r", take("r"))?.ok_or_else(|| Error::config("lb_sym needs r="))?;
                let n = num("n", take("n"))?.ok_or_else(|| Error::config("lb_sym needs n="))?;
                GraphSpec::new(GraphKind::LowerBoundSymmetric { r, n }, need_d(d)?, p)
            }
            "lb_asym" | "lower_bound_asymmetric" => {
                let k0 =
                    num("k0", take("k0"))?.ok_or_else(|| Error::config("lb_asym needs k0="))?;
                let levels = take("r").ok_or_else(|| Error::config("lb_asym needs r=a/b/..."))?;
                let r_profile = levels
                    .split('/')
                    .map(|v| {
                        v.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::config(format!("bad influence level `{v}`")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let d = d.unwrap_or(r_profile.len());
                GraphSpec::new(GraphKind::LowerBoundAsymmetric { r_profile, k0 }, d, p)
            }
            "file" | "snap" => {
                let path = take("path").ok_or_else(|| Error::config("file graph needs path="))?;
                let symmetrize = match take("symmetrize").as_deref() {
                    None | Some("false") | Some("0") => false,
                    Some("true") | Some("1") => true,
                    Some(other) => {
                        return Err(Error::config(format!(
                            "symmetrize = `{other}` is not a boolean"
                        )))
                    }
                };
                GraphSpec::new(
                    GraphKind::File {
                        path: path.into(),
                        symmetrize,
                    },
                    d.unwrap_or(0),
                    p,
                )
            }
            other => return Err(Error::config(format!("unknown graph kind `{other}`"))),
        };
        if let Some(key) = params.keys().next() {
            return Err(Error::config(format!(
                "unknown graph parameter `{key}` for `{kind}`"
            )));
        }
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complete_graph() {
        let m = generate(&GraphSpec::new(GraphKind::Complete, 3, 1.0), 0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(m.get(i, j), if i == j { 0.0 } else { 1.0 });
            }
        }
    }

    #[test]
    fn star_graph() {
        let m = generate(&GraphSpec::new(GraphKind::Star, 4, 0.5), 0).unwrap();
        assert_eq!(m.row(0), &[(1, 0.5), (2, 0.5), (3, 0.5)]);
        for i in 1..4 {
            assert_eq!(m.row(i), &[(0, 0.5)]);
        }
        assert!(m.is_symmetric());
    }

    #[test]
    fn empty_graph_has_no_entries() {
        let m = generate(&GraphSpec::new(GraphKind::Empty, 5, 0.8), 0).unwrap();
        assert_eq!((m.d(), m.nnz()), (5, 0));
    }

    #[test]
    fn barabasi_albert_edge_count() {
        // 1000 nodes, m = 10: C(10, 2) seed edges + 10 per arriving node,
        // so 45 + 10 * 990 = 9945 undirected edges, stored both ways.
        let spec = GraphSpec::new(GraphKind::BarabasiAlbert { m: 10 }, 1000, 0.8);
        let m = generate(&spec, 7).unwrap();
        assert_eq!(m.nnz(), 2 * 9945);
        assert!(m.is_symmetric());
        assert!((0..1000).all(|i| m.get(i, i) == 0.0));
        assert!(m.rows().flatten().all(|&(_, p)| p == 0.8));
        assert_eq!(generate(&spec, 7).unwrap(), m);
        assert_ne!(generate(&spec, 8).unwrap(), m);
    }

    #[test]
    fn barabasi_albert_single_edge_per_node() {
        let spec = GraphSpec::new(GraphKind::BarabasiAlbert { m: 1 }, 50, 1.0);
        let m = generate(&spec, 1).unwrap();
        assert_eq!(m.nnz(), 2 * 49);
        assert!(m.rows().all(|r| !r.is_empty()));
    }

    #[test]
    fn barabasi_albert_rejects_bad_m() {
        let bad = GraphSpec::new(GraphKind::BarabasiAlbert { m: 5 }, 5, 0.8);
        assert!(matches!(generate(&bad, 0), Err(Error::Config(_))));
        let bad = GraphSpec::new(GraphKind::BarabasiAlbert { m: 0 }, 5, 0.8);
        assert!(generate(&bad, 0).is_err());
        assert!(generate(&GraphSpec::new(GraphKind::Star, 4, 0.0), 0).is_err());
    }

    #[test]
    fn symmetric_lower_bound_values() {
        let m = lower_bound_symmetric(2, 1.0, 100).unwrap();
        assert_eq!(m.get(0, 0), 0.5);
        assert_eq!(m.get(0, 1), 0.5);
        let rest = 0.5 - (1.0f64 / 200.0).sqrt();
        assert!((rest - 0.4293).abs() < 1e-4);
        assert_eq!(m.get(1, 0), rest);
        assert_eq!(m.get(1, 1), rest);

        let m = lower_bound_symmetric(4, 2.0, 64).unwrap();
        assert!((m.get(3, 2) - 0.4116).abs() < 1e-4);
        let r = m.influence();
        let gap = (4.0f64 * 2.0 / 64.0).sqrt();
        for ri in &r[1..] {
            assert!((r[0] - ri - gap).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_lower_bound_underflow() {
        // 1/2 - sqrt(1/2) < 0
        assert!(matches!(
            lower_bound_symmetric(2, 1.0, 1),
            Err(Error::Config(_))
        ));
        assert!(lower_bound_symmetric(2, 3.0, 100).is_err());
    }

    #[test]
    fn asymmetric_lower_bound() {
        let m = lower_bound_asymmetric(3, &[1.0, 1.0, 0.5], 2).unwrap();
        for l in 0..3 {
            assert_eq!(m.get(l, 2), 1.0);
        }
        assert_eq!(m.get(0, 1), 1.0 / 3.0);
        assert_eq!(m.get(2, 0), 0.5 / 3.0);
        assert_eq!(m.dual_influence()[2], 3.0);
        assert!(lower_bound_asymmetric(3, &[1.0, 4.0, 0.5], 2).is_err());
        assert!(lower_bound_asymmetric(3, &[1.0, 1.0, 1.0], 2).is_err());
        assert!(lower_bound_asymmetric(3, &[1.0, 1.0], 1).is_err());
    }

    #[test]
    fn spec_strings_round_trip() {
        for s in [
            "ba:d=1000,m=10,p=0.8",
            "star:d=100,p=1",
            "complete:d=50,p=0.8",
            "empty:d=50",
            "lb_sym:d=2,r=1,n=1000",
            "lb_asym:d=3,k0=2,r=1/1/0.5",
            "file:path=data/edges.txt,symmetrize=true,p=0.8",
        ] {
            let spec: GraphSpec = s.parse().unwrap();
            assert_eq!(spec.to_string().parse::<GraphSpec>().unwrap(), spec, "{s}");
        }
        assert!("ba:d=10,m=3,q=1".parse::<GraphSpec>().is_err());
        assert!("torus:d=10".parse::<GraphSpec>().is_err());
        assert!("star".parse::<GraphSpec>().is_err());
    }
}
