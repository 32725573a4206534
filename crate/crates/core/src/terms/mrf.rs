use std::collections::{BTreeSet, HashMap};

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};

/// Regions and their unordered neighbor pairs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdjacencyGraph {
    labels: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
    edges: BTreeSet<(usize, usize)>,
}

impl AdjacencyGraph {
    pub fn new<S: AsRef<str>>(labels: &[S], pairs: &[(S, S)]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidAdjacency("graph has no regions".into()));
        }
        let mut index = HashMap::new();
        let labels: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::InvalidAdjacency(format!("region `{l}` listed twice")));
            }
        }
        let mut edges = BTreeSet::new();
        for (a, b) in pairs {
            let (a, b) = (a.as_ref(), b.as_ref());
            let ia = *index
                .get(a)
                .ok_or_else(|| Error::InvalidAdjacency(format!("neighbor pair names unknown region `{a}`")))?;
            let ib = *index
                .get(b)
                .ok_or_else(|| Error::InvalidAdjacency(format!("neighbor pair names unknown region `{b}`")))?;
            if ia == ib {
                return Err(Error::InvalidAdjacency(format!("self-loop at region `{a}`")));
            }
            edges.insert((ia.min(ib), ia.max(ib)));
        }
        Ok(Self { labels, index, edges })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn connected_components(&self) -> usize {
        let n = self.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let ra = find(&mut parent, a);
            let rb = find(&mut parent, b);
            if ra != rb {
                parent[ra] = rb;
            }
        }
        (0..n).filter(|&i| find(&mut parent, i) == i).count()
    }
}

/// Parse `region: neighbor neighbor ...` lines. Blank lines and `#` comments
/// are ignored; every listing must be reciprocated.
pub fn parse_adjacency(text: &str) -> Result<AdjacencyGraph> {
    let mut labels: Vec<String> = Vec::new();
    let mut listed: Vec<(String, Vec<String>)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (region, rest) = line.split_once(':').ok_or_else(|| {
            Error::InvalidAdjacency(format!("line {}: expected `region: neighbors`", lineno + 1))
        })?;
        let region = region.trim().to_string();
        if region.is_empty() {
            return Err(Error::InvalidAdjacency(format!("line {}: empty region id", lineno + 1)));
        }
        let neighbors = rest.split_whitespace().map(str::to_string).collect();
        labels.push(region.clone());
        listed.push((region, neighbors));
    }
    let declared: BTreeSet<(&str, &str)> = listed
        .iter()
        .flat_map(|(r, ns)| ns.iter().map(move |n| (r.as_str(), n.as_str())))
        .collect();
    let mut pairs = Vec::new();
    for &(a, b) in &declared {
        if !declared.contains(&(b, a)) {
            return Err(Error::InvalidAdjacency(format!(
                "`{a}` lists `{b}` as neighbor but not vice versa"
            )));
        }
        if a < b {
            pairs.push((a.to_string(), b.to_string()));
        } else if a == b {
            return Err(Error::InvalidAdjacency(format!("self-loop at region `{a}`")));
        }
    }
    AdjacencyGraph::new(&labels, &pairs)
}

/// Graph Laplacian: neighbor counts on the diagonal, −1 per edge.
pub fn mrf_precision(graph: &AdjacencyGraph) -> DMatrix<f64> {
    let s = graph.len();
    let mut k = DMatrix::zeros(s, s);
    for (a, b) in graph.edges() {
        k[(a, b)] -= 1.0;
        k[(b, a)] -= 1.0;
        k[(a, a)] += 1.0;
        k[(b, b)] += 1.0;
    }
    k
}

/// Region incidence matrix, one 1 per row.
pub fn mrf_design<S: AsRef<str>>(regions: &[S], graph: &AdjacencyGraph) -> Result<DMatrix<f64>> {
    let mut d = DMatrix::zeros(regions.len(), graph.len());
    for (i, r) in regions.iter().enumerate() {
        let j = graph
            .position(r.as_ref())
            .ok_or_else(|| Error::UnknownRegion(r.as_ref().to_string()))?;
        d[(i, j)] = 1.0;
    }
    Ok(d)
}
