//! Reading networks and covariates from text files.
//!
//! Fields are separated by tabs, commas or runs of spaces. Blank lines and
//! lines starting with `#` are skipped. Node ids are 0-based integers; a
//! [`LabelMap`] translates string ids.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::glm::AdjacencyMatrix;
use crate::scalar::Scalar;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Non-comment lines with their 1-based line numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, line)| {
        let t = line.trim();
        (!t.is_empty() && !t.starts_with('#')).then_some((k + 1, t))
    })
}

fn fields(line: &str) -> Vec<&str> {
    line.split(['\t', ',', ' '])
        .filter(|f| !f.is_empty())
        .collect()
}

/// String node labels mapped to contiguous 0-based ids.
///
/// File format: one `id<sep>label` pair per line.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabelMap {
    ids: HashMap<String, usize>,
    labels: Vec<String>,
}

impl LabelMap {
    pub fn load(path: &Path) -> Result<Self> {
        let text = read(path)?;
        let mut pairs = BTreeMap::new();
        for (line_no, line) in data_lines(&text) {
            let (id, label) = line
                .split_once(['\t', ','])
                .ok_or_else(|| Error::parse(path, line_no, "expected `id<sep>label`"))?;
            let id: usize = id
                .trim()
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("bad node id `{id}`")))?;
            if pairs.insert(id, label.trim().to_string()).is_some() {
                return Err(Error::parse(path, line_no, format!("duplicate node id {id}")));
            }
        }
        let mut map = LabelMap::default();
        for (expected, (id, label)) in pairs.into_iter().enumerate() {
            if id != expected {
                return Err(Error::parse(path, 0, format!("node ids must be 0..n, missing {expected}")));
            }
            if map.ids.insert(label.clone(), id).is_some() {
                return Err(Error::parse(path, 0, format!("duplicate label `{label}`")));
            }
            map.labels.push(label);
        }
        Ok(map)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn id(&self, label: &str) -> Option<usize> {
        self.ids.get(label).copied()
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.labels.get(id).map(String::as_str)
    }
}

/// Dense `n x n` matrix from an `i<sep>j[<sep>weight]` edge list.
///
/// Repeated `(i, j)` rows add up. With `symmetric`, `(i, j)` and `(j, i)`
/// describe the same undirected edge and must agree when both are given.
pub fn load_edge_list<F: Scalar>(path: &Path, n: usize, symmetric: bool) -> Result<AdjacencyMatrix<F>> {
    load_edges(path, n, symmetric, |tok| tok.parse::<usize>().ok())
}

/// [`load_edge_list`] with node ids given as labels from `labels`.
pub fn load_labeled_edge_list<F: Scalar>(
    path: &Path,
    labels: &LabelMap,
    symmetric: bool,
) -> Result<AdjacencyMatrix<F>> {
    load_edges(path, labels.len(), symmetric, |tok| labels.id(tok))
}

fn load_edges<F: Scalar>(
    path: &Path,
    n: usize,
    symmetric: bool,
    resolve: impl Fn(&str) -> Option<usize>,
) -> Result<AdjacencyMatrix<F>> {
    let text = read(path)?;
    // directed sums with the line of the last contributing row
    let mut sums: BTreeMap<(usize, usize), (f64, usize)> = BTreeMap::new();
    for (line_no, line) in data_lines(&text) {
        let f = fields(line);
        if f.len() < 2 || f.len() > 3 {
            return Err(Error::parse(path, line_no, "expected `i<sep>j[<sep>weight]`"));
        }
        let node = |tok: &str| {
            let id = resolve(tok)
                .ok_or_else(|| Error::parse(path, line_no, format!("unknown node id `{tok}`")))?;
            if id >= n {
                return Err(Error::parse(path, line_no, format!("node id {id} >= n = {n}")));
            }
            Ok(id)
        };
        let i = node(f[0])?;
        let j = node(f[1])?;
        let w = match f.get(2) {
            Some(tok) => tok
                .parse::<f64>()
                .map_err(|_| Error::parse(path, line_no, format!("bad weight `{tok}`")))?,
            None => 1.0,
        };
        if !w.is_finite() {
            return Err(Error::parse(path, line_no, "non-finite weight"));
        }
        if w < 0.0 {
            return Err(Error::parse(path, line_no, format!("negative weight {w}")));
        }
        let entry = sums.entry((i, j)).or_insert((0.0, line_no));
        entry.0 += w;
        entry.1 = line_no;
    }
    let mut values = Array2::<F>::zeros((n, n));
    for (&(i, j), &(w, line_no)) in &sums {
        if symmetric && i != j {
            if let Some(&(other, other_line)) = sums.get(&(j, i)) {
                if other != w {
                    return Err(Error::parse(
                        path,
                        line_no.max(other_line),
                        format!("conflicting weights {w} and {other} for undirected edge ({i}, {j})"),
                    ));
                }
            }
            values[[j, i]] = F::of(w);
        }
        values[[i, j]] = F::of(w);
    }
    AdjacencyMatrix::new(values)
}

/// Dense CSV with `n` rows of `n` values.
pub fn load_dense_matrix<F: Scalar>(path: &Path, n: usize) -> Result<Array2<F>> {
    let text = read(path)?;
    let mut out = Array2::<F>::zeros((n, n));
    let mut row = 0;
    for (line_no, line) in data_lines(&text) {
        if row == n {
            return Err(Error::parse(path, line_no, format!("more than {n} rows")));
        }
        let f = fields(line);
        if f.len() != n {
            return Err(Error::parse(path, line_no, format!("expected {n} columns, found {}", f.len())));
        }
        for (j, tok) in f.iter().enumerate() {
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(path, line_no, format!("bad number `{tok}`")))?;
            if !v.is_finite() {
                return Err(Error::parse(path, line_no, "non-finite value"));
            }
            out[[row, j]] = F::of(v);
        }
        row += 1;
    }
    if row != n {
        return Err(Error::parse(path, text.lines().count(), format!("expected {n} rows, found {row}")));
    }
    Ok(out)
}

/// How node attributes become an edge covariate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttrMethod {
    /// Shared-item counts divided by their largest off-diagonal value.
    CocountMaxnorm,
    /// Dot products of per-node numeric vectors.
    InnerProduct,
}

impl std::str::FromStr for AttrMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cocount-maxnorm" | "cocount" => Ok(AttrMethod::CocountMaxnorm),
            "inner-product" | "inner" => Ok(AttrMethod::InnerProduct),
            other => Err(Error::InvalidArgument(format!("unknown attribute method `{other}`"))),
        }
    }
}

/// Build an `n x n` covariate from a node attribute file.
///
/// `CocountMaxnorm` reads `node_id<sep>item_id` rows and returns
/// `|items_i & items_j| / max_{i != j} |items_i & items_j|` with a zero
/// diagonal. `InnerProduct` reads `node_id<TAB>v1,...,vd` rows (nodes without
/// a row get the zero vector) and returns `<v_i, v_j>`.
pub fn convert_node_attrs<F: Scalar>(path: &Path, n: usize, method: AttrMethod) -> Result<Array2<F>> {
    match method {
        AttrMethod::CocountMaxnorm => cocount_maxnorm(path, n),
        AttrMethod::InnerProduct => inner_product(path, n),
    }
}

fn parse_node(path: &Path, line_no: usize, tok: &str, n: usize) -> Result<usize> {
    let id: usize = tok
        .trim()
        .parse()
        .map_err(|_| Error::parse(path, line_no, format!("bad node id `{tok}`")))?;
    if id >= n {
        return Err(Error::parse(path, line_no, format!("node id {id} >= n = {n}")));
    }
    Ok(id)
}

fn cocount_maxnorm<F: Scalar>(path: &Path, n: usize) -> Result<Array2<F>> {
    let text = read(path)?;
    let mut holders: BTreeMap<String, BTreeSet<usize>> = BTreeMap::new();
    for (line_no, line) in data_lines(&text) {
        let f = fields(line);
        if f.len() != 2 {
            return Err(Error::parse(path, line_no, "expected `node_id<sep>item_id`"));
        }
        let node = parse_node(path, line_no, f[0], n)?;
        holders.entry(f[1].to_string()).or_default().insert(node);
    }
    let mut counts = Array2::<f64>::zeros((n, n));
    for nodes in holders.values() {
        let nodes: Vec<usize> = nodes.iter().copied().collect();
        for (k, &i) in nodes.iter().enumerate() {
            for &j in &nodes[k + 1..] {
                counts[[i, j]] += 1.0;
                counts[[j, i]] += 1.0;
            }
        }
    }
    let max = counts.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "{}: no two nodes share an item, co-counts cannot be normalised",
            path.display()
        )));
    }
    Ok(counts.mapv(|c| F::of(c / max)))
}

fn inner_product<F: Scalar>(path: &Path, n: usize) -> Result<Array2<F>> {
    let text = read(path)?;
    let mut vectors: Vec<Option<Vec<f64>>> = vec![None; n];
    let mut dim: Option<usize> = None;
    for (line_no, line) in data_lines(&text) {
        let (id, rest) = line
            .split_once(['\t', ' '])
            .ok_or_else(|| Error::parse(path, line_no, "expected `node_id<TAB>v1,...,vd`"))?;
        let node = parse_node(path, line_no, id, n)?;
        let v = rest
            .trim()
            .split(',')
            .map(|tok| {
                tok.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(path, line_no, format!("bad value `{tok}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        match dim {
            None => dim = Some(v.len()),
            Some(d) if d != v.len() => {
                return Err(Error::parse(path, line_no, format!("expected {d} values, found {}", v.len())));
            }
            _ => {}
        }
        if vectors[node].replace(v).is_some() {
            return Err(Error::parse(path, line_no, format!("duplicate node {node}")));
        }
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| match (&vectors[i], &vectors[j]) {
        (Some(a), Some(b)) => F::of(a.iter().zip(b).map(|(x, y)| x * y).sum()),
        _ => F::zero(),
    }))
}
