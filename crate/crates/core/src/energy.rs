//! Higher-order multilabel energy functions over hypergraphs.
//!
//! An energy is a sum of cost tables, one per hyperedge, including a constant
//! term for the empty hyperedge and a unary table for every node. Tables are
//! dense, indexed lexicographically with the last node's label varying
//! fastest.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::relaxation::ConstraintMatrix;

/// A full assignment of labels, one per node.
pub type Labeling = Vec<usize>;

/// One cost term: a hyperedge (strictly increasing node tuple) and its dense
/// table. `strides` convert a tuple of labels into a flat table index.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub nodes: Vec<usize>,
    pub table: Vec<f64>,
    strides: Vec<usize>,
}

impl Term {
    fn new(nodes: Vec<usize>, table: Vec<f64>, label_counts: &[usize]) -> Result<Self> {
        let mut expected = 1usize;
        for w in nodes.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::invalid(format!(
                    "hyperedge {:?} is not strictly increasing",
                    nodes
                )));
            }
        }
        for &s in &nodes {
            if s >= label_counts.len() {
                return Err(Error::invalid(format!("node {} out of range", s)));
            }
            expected = expected
                .checked_mul(label_counts[s])
                .ok_or_else(|| Error::invalid("cost table size overflow"))?;
        }
        if table.len() != expected {
            return Err(Error::invalid(format!(
                "hyperedge {:?}: table has {} entries, expected {}",
                nodes,
                table.len(),
                expected
            )));
        }
        if table.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "hyperedge {:?}: non-finite cost",
                nodes
            )));
        }
        let mut strides = vec![1usize; nodes.len()];
        for k in (0..nodes.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * label_counts[nodes[k + 1]];
        }
        Ok(Term {
            nodes,
            table,
            strides,
        })
    }

    pub fn arity(&self) -> usize {
        self.nodes.len()
    }

    /// Flat table index of the restriction of labeling `x` to this hyperedge.
    #[inline]
    pub fn flat_index(&self, x: &[usize]) -> usize {
        let mut idx = 0usize;
        for (k, &s) in self.nodes.iter().enumerate() {
            idx += self.strides[k] * x[s];
        }
        idx
    }

    /// Flat index from per-position labels (already restricted to the edge).
    #[inline]
    pub fn flat_index_local(&self, xc: &[usize]) -> usize {
        let mut idx = 0usize;
        for (k, &l) in xc.iter().enumerate() {
            idx += self.strides[k] * l;
        }
        idx
    }

    /// Decode a flat index into per-position labels.
    pub fn unflatten(&self, mut idx: usize, label_counts: &[usize]) -> Vec<usize> {
        let mut out = vec![0usize; self.nodes.len()];
        for k in 0..self.nodes.len() {
            out[k] = idx / self.strides[k];
            idx %= self.strides[k];
            debug_assert!(out[k] < label_counts[self.nodes[k]]);
        }
        out
    }

    pub fn table_len(&self) -> usize {
        self.table.len()
    }
}

/// Energy function over a hypergraph: nodes `0..n`, per-node label counts and
/// one cost table per hyperedge. The empty hyperedge and all singletons are
/// always present (zero tables are inserted on construction when missing).
/// Terms are kept in canonical order: sorted by (arity, node tuple).
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyModel {
    label_counts: Vec<usize>,
    terms: Vec<Term>,
    lookup: BTreeMap<Vec<usize>, usize>,
}

impl EnergyModel {
    pub fn new(label_counts: Vec<usize>, terms: Vec<(Vec<usize>, Vec<f64>)>) -> Result<Self> {
        if label_counts.iter().any(|&k| k == 0) {
            return Err(Error::invalid("every node needs at least one label"));
        }
        let n = label_counts.len();
        let mut by_edge: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
        for (nodes, table) in terms {
            if by_edge.contains_key(&nodes) {
                return Err(Error::invalid(format!("duplicate hyperedge {:?}", nodes)));
            }
            by_edge.insert(nodes, table);
        }
        // Standing normalization: the constant term and every unary table exist.
        by_edge.entry(Vec::new()).or_insert_with(|| vec![0.0]);
        for s in 0..n {
            by_edge
                .entry(vec![s])
                .or_insert_with(|| vec![0.0; label_counts[s]]);
        }
        let mut list: Vec<(Vec<usize>, Vec<f64>)> = by_edge.into_iter().collect();
        list.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));
        let mut built = Vec::with_capacity(list.len());
        let mut lookup = BTreeMap::new();
        for (i, (nodes, table)) in list.into_iter().enumerate() {
            lookup.insert(nodes.clone(), i);
            built.push(Term::new(nodes, table, &label_counts)?);
        }
        Ok(EnergyModel {
            label_counts,
            terms: built,
            lookup,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.label_counts.len()
    }

    pub fn label_counts(&self) -> &[usize] {
        &self.label_counts
    }

    pub fn label_count(&self, s: usize) -> usize {
        self.label_counts[s]
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn term(&self, i: usize) -> &Term {
        &self.terms[i]
    }

    pub fn term_index(&self, nodes: &[usize]) -> Option<usize> {
        self.lookup.get(nodes).copied()
    }

    pub fn constant_term(&self) -> f64 {
        self.terms[0].table[0]
    }

    /// Index of the unary term of node `s`.
    pub fn unary_term(&self, s: usize) -> usize {
        self.lookup[&vec![s]]
    }

    pub fn validate_labeling(&self, x: &[usize]) -> Result<()> {
        if x.len() != self.num_nodes() {
            return Err(Error::invalid(format!(
                "labeling has {} entries, model has {} nodes",
                x.len(),
                self.num_nodes()
            )));
        }
        for (s, &l) in x.iter().enumerate() {
            if l >= self.label_counts[s] {
                return Err(Error::invalid(format!(
                    "label {} out of range at node {} ({} labels)",
                    l, s, self.label_counts[s]
                )));
            }
        }
        Ok(())
    }

    /// Total energy of a labeling, including the constant term.
    pub fn evaluate(&self, x: &[usize]) -> Result<f64> {
        self.validate_labeling(x)?;
        Ok(self.evaluate_unchecked(x))
    }

    #[inline]
    pub(crate) fn evaluate_unchecked(&self, x: &[usize]) -> f64 {
        let mut e = 0.0;
        for t in &self.terms {
            e += t.table[t.flat_index(x)];
        }
        e
    }

    pub fn max_abs_cost(&self) -> f64 {
        self.terms
            .iter()
            .flat_map(|t| t.table.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn has_integer_costs(&self) -> bool {
        self.terms
            .iter()
            .flat_map(|t| t.table.iter())
            .all(|&v| v == v.round())
    }

    pub fn is_binary(&self) -> bool {
        self.label_counts.iter().all(|&k| k == 2)
    }

    /// True when no hyperedge couples more than two nodes.
    pub fn is_pairwise(&self) -> bool {
        self.terms.iter().all(|t| t.arity() <= 2)
    }

    /// Pairwise neighbor lists: `neighbors[s]` holds every `t` with an edge
    /// `{s,t}` in the hypergraph.
    pub fn pairwise_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.num_nodes()];
        for t in &self.terms {
            if t.arity() == 2 {
                nb[t.nodes[0]].push(t.nodes[1]);
                nb[t.nodes[1]].push(t.nodes[0]);
            }
        }
        nb
    }

    /// Cost of the pairwise term on `{s,t}` at labels `(i,j)` (of `s`,`t`
    /// respectively), regardless of node order. Zero when no such edge.
    pub fn edge_cost(&self, s: usize, t: usize, i: usize, j: usize) -> f64 {
        let (a, b, ia, ib) = if s < t { (s, t, i, j) } else { (t, s, j, i) };
        match self.term_index(&[a, b]) {
            Some(k) => {
                let term = &self.terms[k];
                term.table[term.flat_index_local(&[ia, ib])]
            }
            None => 0.0,
        }
    }

    /// Total number of labelings, saturating at `u128::MAX`.
    pub fn labeling_space(&self) -> u128 {
        let mut total = 1u128;
        for &k in &self.label_counts {
            total = total.saturating_mul(k as u128);
        }
        total
    }

    /// Sum of `|X_s| - 1` over nodes: the number of labels that could in
    /// principle be eliminated.
    pub fn eliminable_labels(&self) -> usize {
        self.label_counts.iter().map(|&k| k - 1).sum()
    }

    /// Serialize in the `HEM 1` text format.
    pub fn to_hem(&self) -> String {
        let mut out = String::new();
        out.push_str("HEM 1\n");
        let _ = writeln!(out, "nodes {}", self.num_nodes());
        out.push_str("labels");
        for &k in &self.label_counts {
            let _ = write!(out, " {}", k);
        }
        out.push('\n');
        let _ = writeln!(out, "terms {}", self.terms.len());
        for t in &self.terms {
            let _ = write!(out, "{}", t.arity());
            for &s in &t.nodes {
                let _ = write!(out, " {}", s);
            }
            for &v in &t.table {
                let _ = write!(out, " {}", v);
            }
            out.push('\n');
        }
        out
    }

    /// Parse the `HEM 1` text format. `#` starts a comment; missing singleton
    /// and constant terms are inserted with zero tables.
    pub fn from_hem(text: &str) -> Result<Self> {
        // Token stream with line tracking for error reports.
        let mut tokens: Vec<(usize, &str)> = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let code = match line.find('#') {
                Some(p) => &line[..p],
                None => line,
            };
            for tok in code.split_whitespace() {
                tokens.push((ln + 1, tok));
            }
        }
        let mut pos = 0usize;
        let mut next = |what: &str| -> Result<(usize, &str)> {
            if pos >= tokens.len() {
                return Err(Error::Parse {
                    line: tokens.last().map_or(1, |t| t.0),
                    message: format!("unexpected end of file, expected {}", what),
                });
            }
            let t = tokens[pos];
            pos += 1;
            Ok(t)
        };
        fn expect_kw(tok: (usize, &str), kw: &str) -> Result<()> {
            if tok.1 != kw {
                return Err(Error::Parse {
                    line: tok.0,
                    message: format!("expected `{}`, found `{}`", kw, tok.1),
                });
            }
            Ok(())
        }
        fn parse_usize(tok: (usize, &str), what: &str) -> Result<usize> {
            tok.1.parse().map_err(|_| Error::Parse {
                line: tok.0,
                message: format!("invalid {}: `{}`", what, tok.1),
            })
        }
        fn parse_f64(tok: (usize, &str), what: &str) -> Result<f64> {
            tok.1.parse().map_err(|_| Error::Parse {
                line: tok.0,
                message: format!("invalid {}: `{}`", what, tok.1),
            })
        }

        expect_kw(next("HEM")?, "HEM")?;
        let ver = next("format version")?;
        if ver.1 != "1" {
            return Err(Error::Parse {
                line: ver.0,
                message: format!("unsupported format version `{}`", ver.1),
            });
        }
        expect_kw(next("nodes")?, "nodes")?;
        let n = parse_usize(next("node count")?, "node count")?;
        expect_kw(next("labels")?, "labels")?;
        let mut label_counts = Vec::with_capacity(n);
        for _ in 0..n {
            let k = parse_usize(next("label count")?, "label count")?;
            if k == 0 {
                return Err(Error::Parse {
                    line: tokens[pos - 1].0,
                    message: "label count must be positive".into(),
                });
            }
            label_counts.push(k);
        }
        expect_kw(next("terms")?, "terms")?;
        let t_count = parse_usize(next("term count")?, "term count")?;
        let mut terms = Vec::with_capacity(t_count);
        for _ in 0..t_count {
            let m_tok = next("hyperedge arity")?;
            let line = m_tok.0;
            let m = parse_usize(m_tok, "hyperedge arity")?;
            let mut nodes = Vec::with_capacity(m);
            for _ in 0..m {
                let s = parse_usize(next("node id")?, "node id")?;
                if s >= n {
                    return Err(Error::Parse {
                        line,
                        message: format!("node id {} out of range", s),
                    });
                }
                nodes.push(s);
            }
            if nodes.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Parse {
                    line,
                    message: format!("hyperedge {:?} not strictly increasing", nodes),
                });
            }
            let len: usize = nodes.iter().map(|&s| label_counts[s]).product();
            let mut table = Vec::with_capacity(len);
            for _ in 0..len {
                table.push(parse_f64(next("cost value")?, "cost value")?);
            }
            terms.push((nodes, table));
        }
        if pos < tokens.len() {
            return Err(Error::Parse {
                line: tokens[pos].0,
                message: format!("trailing content `{}`", tokens[pos].1),
            });
        }
        // Surface duplicate hyperedges as a parse error rather than a generic
        // construction error.
        let mut seen = BTreeMap::new();
        for (nodes, _) in &terms {
            if seen.insert(nodes.clone(), ()).is_some() {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("duplicate hyperedge {:?}", nodes),
                });
            }
        }
        EnergyModel::new(label_counts, terms)
    }

    pub fn save(&self, path: &std::path::Path, header_comment: Option<&str>) -> Result<()> {
        let mut text = String::new();
        text.push_str("HEM 1\n");
        if let Some(c) = header_comment {
            for line in c.lines() {
                let _ = writeln!(text, "# {}", line);
            }
        }
        let body = self.to_hem();
        text.push_str(body.strip_prefix("HEM 1\n").unwrap_or(&body));
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_hem(&text)
    }

    /// SHA-256 of the canonical serialization; stable identity for records.
    pub fn instance_hash(&self) -> String {
        let digest = Sha256::digest(self.to_hem().as_bytes());
        digest.iter().map(|b| format!("{:02x}", b)).collect()
    }
}

/// The equivalent cost vector `f - Aᵀφ`: each multiplier `φ_r` of a
/// marginalization row `(D, C, x_D)` is subtracted from the matching block of
/// `C`'s table and added onto the single `(D, x_D)` entry. Energies of all
/// labelings are unchanged.
pub fn reparametrize(
    f: &EnergyModel,
    phi: &[f64],
    constraints: &ConstraintMatrix,
) -> Result<EnergyModel> {
    if phi.len() != constraints.rows().len() {
        return Err(Error::invalid(format!(
            "phi has {} entries, coupling has {} rows",
            phi.len(),
            constraints.rows().len()
        )));
    }
    let model = constraints.model();
    if model.label_counts != f.label_counts {
        return Err(Error::invalid("coupling built for a different model"));
    }
    let mut tables: Vec<Vec<f64>> = model.terms.iter().map(|t| t.table.clone()).collect();
    // Start from f's tables (the coupling model may have extra zero tables).
    for (i, t) in model.terms.iter().enumerate() {
        if let Some(j) = f.term_index(&t.nodes) {
            tables[i] = f.terms[j].table.clone();
        }
    }
    for (r, row) in constraints.rows().iter().enumerate() {
        if phi[r] == 0.0 {
            continue;
        }
        for &(term, flat, coeff) in row.table_entries() {
            // f^phi = f - A^T phi
            tables[term][flat] -= coeff * phi[r];
        }
    }
    let terms = model
        .terms
        .iter()
        .zip(tables)
        .map(|(t, tab)| (t.nodes.clone(), tab))
        .collect();
    EnergyModel::new(model.label_counts.clone(), terms)
}

/// Which random family to draw an instance from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GeneratorKind {
    /// Grid with label-dependent Potts attraction terms.
    Potts,
    /// Dense uniform pairwise tables (grid or complete graph).
    Full,
    /// Random multilinear 0-1 polynomial with bounded-degree terms.
    Polynomial,
    /// Binary grid with one random non-negative table per degree-d window.
    PosiformGrid,
}

impl GeneratorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            GeneratorKind::Potts => "potts",
            GeneratorKind::Full => "full",
            GeneratorKind::Polynomial => "poly",
            GeneratorKind::PosiformGrid => "posiform-grid",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "potts" => Ok(GeneratorKind::Potts),
            "full" => Ok(GeneratorKind::Full),
            "poly" | "polynomial" => Ok(GeneratorKind::Polynomial),
            "posiform-grid" | "posiform" => Ok(GeneratorKind::PosiformGrid),
            other => Err(Error::invalid(format!("unknown generator `{}`", other))),
        }
    }
}

/// Node layout of a generated instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Shape {
    /// 4-connected grid, nodes in row-major order.
    Grid { rows: usize, cols: usize },
    /// Complete graph on `n` nodes.
    Nodes(usize),
}

/// Reproducible description of a random instance.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct InstanceSpec {
    pub kind: GeneratorKind,
    pub shape: Shape,
    pub labels: usize,
    pub degree: usize,
    pub terms: usize,
    pub seed: u64,
}

impl InstanceSpec {
    fn validate(&self) -> Result<()> {
        match self.shape {
            Shape::Grid { rows, cols } => {
                if rows == 0 || cols == 0 {
                    return Err(Error::invalid("grid dimensions must be >= 1"));
                }
            }
            Shape::Nodes(n) => {
                if n == 0 {
                    return Err(Error::invalid("node count must be >= 1"));
                }
            }
        }
        if self.labels == 0 {
            return Err(Error::invalid("label count must be >= 1"));
        }
        match self.kind {
            GeneratorKind::Potts | GeneratorKind::PosiformGrid => {
                if !matches!(self.shape, Shape::Grid { .. }) {
                    return Err(Error::invalid(format!(
                        "{} generator needs a grid shape",
                        self.kind.as_str()
                    )));
                }
            }
            GeneratorKind::Polynomial => {
                if self.degree < 2 {
                    return Err(Error::invalid("polynomial degree must be >= 2"));
                }
                if self.num_nodes() < 2 {
                    return Err(Error::invalid("polynomial instances need >= 2 nodes"));
                }
            }
            GeneratorKind::Full => {}
        }
        if self.kind == GeneratorKind::PosiformGrid && !(self.degree == 3 || self.degree == 4) {
            return Err(Error::invalid("posiform-grid degree must be 3 or 4"));
        }
        if matches!(
            self.kind,
            GeneratorKind::Polynomial | GeneratorKind::PosiformGrid
        ) && self.labels != 2
        {
            return Err(Error::invalid("binary generators require labels = 2"));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        match self.shape {
            Shape::Grid { rows, cols } => rows * cols,
            Shape::Nodes(n) => n,
        }
    }

    /// One-line summary for instance file headers.
    pub fn header_line(&self) -> String {
        let shape = match self.shape {
            Shape::Grid { rows, cols } => format!("rows={} cols={}", rows, cols),
            Shape::Nodes(n) => format!("nodes={}", n),
        };
        format!(
            "generator={} {} labels={} degree={} terms={} seed={}",
            self.kind.as_str(),
            shape,
            self.labels,
            self.degree,
            self.terms,
            self.seed
        )
    }
}

fn grid_edges(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    edges.sort_unstable();
    edges
}

fn edge_list(spec: &InstanceSpec) -> Vec<(usize, usize)> {
    match spec.shape {
        Shape::Grid { rows, cols } => grid_edges(rows, cols),
        Shape::Nodes(n) => {
            let mut edges = Vec::new();
            for s in 0..n {
                for t in s + 1..n {
                    edges.push((s, t));
                }
            }
            edges
        }
    }
}

fn draw_int(rng: &mut ChaCha8Rng, hi: u64) -> f64 {
    rng.gen_range(0..=hi) as f64
}

/// Deterministically generate the instance described by `spec`.
pub fn generate(spec: &InstanceSpec) -> Result<EnergyModel> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.num_nodes();
    let k = spec.labels;
    let mut terms: Vec<(Vec<usize>, Vec<f64>)> = Vec::new();
    match spec.kind {
        GeneratorKind::Potts => {
            for s in 0..n {
                terms.push((vec![s], (0..k).map(|_| draw_int(&mut rng, 100)).collect()));
            }
            for (s, t) in edge_list(spec) {
                let mut table = vec![0.0; k * k];
                for i in 0..k {
                    table[i * k + i] = -draw_int(&mut rng, 50);
                }
                terms.push((vec![s, t], table));
            }
        }
        GeneratorKind::Full => {
            for s in 0..n {
                terms.push((vec![s], (0..k).map(|_| draw_int(&mut rng, 100)).collect()));
            }
            for (s, t) in edge_list(spec) {
                terms.push((
                    vec![s, t],
                    (0..k * k).map(|_| draw_int(&mut rng, 100)).collect(),
                ));
            }
        }
        GeneratorKind::Polynomial => {
            // Multilinear monomial terms: each table is zero except at the
            // all-ones assignment, which carries the coefficient.
            for s in 0..n {
                let mut table = vec![0.0; 2];
                table[1] = rng.gen_range(-100i64..=100) as f64;
                terms.push((vec![s], table));
            }
            let mut used: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
            let mut attempts = 0usize;
            while used.len() < spec.terms && attempts < spec.terms * 100 {
                attempts += 1;
                let arity = rng.gen_range(2..=spec.degree.min(n));
                let mut nodes = Vec::with_capacity(arity);
                while nodes.len() < arity {
                    let s = rng.gen_range(0..n);
                    if !nodes.contains(&s) {
                        nodes.push(s);
                    }
                }
                nodes.sort_unstable();
                if used.contains_key(&nodes) {
                    continue;
                }
                used.insert(nodes, rng.gen_range(-100i64..=100) as f64);
            }
            for (nodes, coeff) in used {
                let len = 1usize << nodes.len();
                let mut table = vec![0.0; len];
                table[len - 1] = coeff;
                terms.push((nodes, table));
            }
        }
        GeneratorKind::PosiformGrid => {
            let (rows, cols) = match spec.shape {
                Shape::Grid { rows, cols } => (rows, cols),
                Shape::Nodes(_) => unreachable!(),
            };
            if rows < 2 || cols < 2 {
                return Err(Error::invalid("posiform-grid needs at least a 2x2 grid"));
            }
            let id = |r: usize, c: usize| r * cols + c;
            for r in 0..rows - 1 {
                for c in 0..cols - 1 {
                    let mut nodes = match spec.degree {
                        3 => vec![id(r, c), id(r + 1, c), id(r, c + 1)],
                        4 => vec![id(r, c), id(r + 1, c), id(r, c + 1), id(r + 1, c + 1)],
                        _ => unreachable!(),
                    };
                    nodes.sort_unstable();
                    let len = 1usize << nodes.len();
                    let table: Vec<f64> = (0..len).map(|_| draw_int(&mut rng, 100)).collect();
                    terms.push((nodes, table));
                }
            }
        }
    }
    EnergyModel::new(vec![k; n], terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn toy_two_binary() -> EnergyModel {
        EnergyModel::new(
            vec![2, 2],
            vec![
                (vec![0], vec![0.0, 1.0]),
                (vec![1], vec![0.0, 2.0]),
                (vec![0, 1], vec![0.0, 0.0, 0.0, 0.0]),
            ],
        )
        .unwrap()
    }

    /// Independent evaluation path used as an oracle: re-derives flat indices
    /// from scratch instead of using the precomputed strides.
    fn eval_by_direct_summation(f: &EnergyModel, x: &[usize]) -> f64 {
        let mut total = 0.0;
        for t in f.terms() {
            let mut idx = 0usize;
            for &s in &t.nodes {
                idx = idx * f.label_count(s) + x[s];
            }
            total += t.table[idx];
        }
        total
    }

    #[test]
    fn constant_term_only() {
        let f = EnergyModel::new(vec![2], vec![(vec![], vec![5.0])]).unwrap();
        assert_eq!(f.evaluate(&[0]).unwrap(), 5.0);
        assert_eq!(f.evaluate(&[1]).unwrap(), 5.0);
    }

    #[test]
    fn additive_unaries() {
        let f = toy_two_binary();
        assert_eq!(f.evaluate(&[1, 1]).unwrap(), 3.0);
        assert_eq!(f.evaluate(&[0, 1]).unwrap(), 2.0);
    }

    #[test]
    fn evaluate_matches_direct_summation() {
        let spec = InstanceSpec {
            kind: GeneratorKind::Polynomial,
            shape: Shape::Nodes(3),
            labels: 2,
            degree: 3,
            terms: 4,
            seed: 11,
        };
        let f = generate(&spec).unwrap();
        for bits in 0..8usize {
            let x: Labeling = (0..3).map(|s| (bits >> s) & 1).collect();
            let e = f.evaluate(&x).unwrap();
            assert_eq!(e, eval_by_direct_summation(&f, &x));
        }
    }

    #[test]
    fn evaluate_rejects_bad_labelings() {
        let f = toy_two_binary();
        assert!(f.evaluate(&[0]).is_err());
        assert!(f.evaluate(&[0, 2]).is_err());
    }

    #[test]
    fn evaluate_is_linear_in_costs() {
        let spec = InstanceSpec {
            kind: GeneratorKind::Full,
            shape: Shape::Nodes(3),
            labels: 3,
            degree: 2,
            terms: 0,
            seed: 7,
        };
        let f = generate(&spec).unwrap();
        let g = generate(&InstanceSpec { seed: 8, ..spec }).unwrap();
        let (alpha, beta) = (2.5, -0.75);
        let combo_terms = f
            .terms()
            .iter()
            .map(|t| {
                let gt = &g.terms()[g.term_index(&t.nodes).unwrap()];
                let table = t
                    .table
                    .iter()
                    .zip(&gt.table)
                    .map(|(a, b)| alpha * a + beta * b)
                    .collect();
                (t.nodes.clone(), table)
            })
            .collect();
        let combo = EnergyModel::new(f.label_counts().to_vec(), combo_terms).unwrap();
        let x = vec![2, 0, 1];
        let lhs = combo.evaluate(&x).unwrap();
        let rhs = alpha * f.evaluate(&x).unwrap() + beta * g.evaluate(&x).unwrap();
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn generator_is_deterministic() {
        let spec = InstanceSpec {
            kind: GeneratorKind::Potts,
            shape: Shape::Grid { rows: 2, cols: 2 },
            labels: 2,
            degree: 2,
            terms: 0,
            seed: 42,
        };
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a.to_hem(), b.to_hem());
    }

    #[test]
    fn full_generator_cost_range() {
        let spec = InstanceSpec {
            kind: GeneratorKind::Full,
            shape: Shape::Nodes(10),
            labels: 3,
            degree: 2,
            terms: 0,
            seed: 3,
        };
        let f = generate(&spec).unwrap();
        for t in f.terms().iter().filter(|t| t.arity() == 2) {
            for &v in &t.table {
                assert!((0.0..=100.0).contains(&v));
                assert_eq!(v, v.round());
            }
        }
        // complete graph on 10 nodes
        assert_eq!(f.terms().iter().filter(|t| t.arity() == 2).count(), 45);
    }

    #[test]
    fn potts_tables_have_expected_shape() {
        let spec = InstanceSpec {
            kind: GeneratorKind::Potts,
            shape: Shape::Grid { rows: 2, cols: 2 },
            labels: 3,
            degree: 2,
            terms: 0,
            seed: 5,
        };
        let f = generate(&spec).unwrap();
        for t in f.terms().iter().filter(|t| t.arity() == 2) {
            for i in 0..3 {
                for j in 0..3 {
                    let v = t.table[i * 3 + j];
                    if i == j {
                        assert!((-50.0..=0.0).contains(&v));
                    } else {
                        assert_eq!(v, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn posiform_grid_windows() {
        let spec = InstanceSpec {
            kind: GeneratorKind::PosiformGrid,
            shape: Shape::Grid { rows: 3, cols: 3 },
            labels: 2,
            degree: 4,
            terms: 0,
            seed: 1,
        };
        let f = generate(&spec).unwrap();
        let quads: Vec<&Term> = f.terms().iter().filter(|t| t.arity() == 4).collect();
        let expect: Vec<Vec<usize>> = vec![
            vec![0, 1, 3, 4],
            vec![1, 2, 4, 5],
            vec![3, 4, 6, 7],
            vec![4, 5, 7, 8],
        ];
        let got: Vec<Vec<usize>> = quads.iter().map(|t| t.nodes.clone()).collect();
        assert_eq!(got, expect);
    }

    #[test]
    fn hem_round_trip() {
        let spec = InstanceSpec {
            kind: GeneratorKind::Full,
            shape: Shape::Grid { rows: 2, cols: 3 },
            labels: 3,
            degree: 2,
            terms: 0,
            seed: 9,
        };
        let f = generate(&spec).unwrap();
        let g = EnergyModel::from_hem(&f.to_hem()).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn hem_duplicate_hyperedge_is_parse_error() {
        let text = "HEM 1\nnodes 2\nlabels 2 2\nterms 2\n1 0 1 2\n1 0 3 4\n";
        match EnergyModel::from_hem(text) {
            Err(Error::Parse { .. }) => {}
            other => panic!("expected parse error, got {:?}", other),
        }
    }

    #[test]
    fn hem_reports_line_numbers() {
        let text = "HEM 1\nnodes 2\nlabels 2 2\nterms 1\n1 0 oops 2\n";
        match EnergyModel::from_hem(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("expected parse error, got {:?}", other),
        }
    }

    #[test]
    fn hem_missing_singleton_is_normalized() {
        // Only a pairwise table; unaries and constant must appear as zeros
        // and leave the energy unchanged.
        let text = "HEM 1\n# a comment\nnodes 2\nlabels 2 2\nterms 1\n2 0 1 1 2 3 4\n";
        let f = EnergyModel::from_hem(text).unwrap();
        assert_eq!(f.terms().len(), 4); // const, two unaries, one edge
        assert_eq!(f.evaluate(&[0, 1]).unwrap(), 2.0);
        assert_eq!(f.evaluate(&[1, 0]).unwrap(), 3.0);
    }

    #[test]
    fn reparametrization_moves_mass_between_tables() {
        use crate::relaxation::{RelaxKind, RelaxationSpec};
        let f = toy_two_binary();
        let spec = RelaxationSpec::build(&f, RelaxKind::Blp);
        let cm = spec.constraint_matrix();
        // Find the row ({0}, {0,1}, x_0 = 1) and move c = 2.5 along it.
        let r = cm
            .rows()
            .iter()
            .position(|row| {
                let meta = row.meta();
                cm.model().term(meta.d_term).nodes == vec![0]
                    && cm.model().term(meta.c_term).nodes == vec![0, 1]
                    && meta.x_d == 1
            })
            .unwrap();
        let mut phi = vec![0.0; cm.rows().len()];
        phi[r] = 2.5;
        let g = reparametrize(&f, &phi, &cm).unwrap();
        // f_s(1) gains +2.5, f_{st}(1, .) loses 2.5.
        let us = g.term(g.unary_term(0)).table.clone();
        assert_eq!(us, vec![0.0, 1.0 + 2.5]);
        let e = g.term(g.term_index(&[0, 1]).unwrap()).table.clone();
        assert_eq!(e, vec![0.0, 0.0, -2.5, -2.5]);
        // Energy is invariant on all four labelings.
        for x0 in 0..2 {
            for x1 in 0..2 {
                let x = vec![x0, x1];
                assert!(
                    (f.evaluate(&x).unwrap() - g.evaluate(&x).unwrap()).abs() < 1e-12,
                    "energy changed at {:?}",
                    x
                );
            }
        }
    }

    #[test]
    fn reparametrization_zero_phi_is_identity() {
        use crate::relaxation::{RelaxKind, RelaxationSpec};
        let f = toy_two_binary();
        let spec = RelaxationSpec::build(&f, RelaxKind::Blp);
        let cm = spec.constraint_matrix();
        let phi = vec![0.0; cm.rows().len()];
        let g = reparametrize(&f, &phi, &cm).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn reparametrization_preserves_energy_randomly() {
        use crate::relaxation::{RelaxKind, RelaxationSpec};
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(123);
        for seed in 0..20u64 {
            let spec = InstanceSpec {
                kind: GeneratorKind::Full,
                shape: Shape::Nodes(3),
                labels: 3,
                degree: 2,
                terms: 0,
                seed,
            };
            let f = generate(&spec).unwrap();
            let rspec = RelaxationSpec::build(&f, RelaxKind::Flp);
            let cm = rspec.constraint_matrix();
            let phi: Vec<f64> = (0..cm.rows().len())
                .map(|_| rng.gen_range(-10.0..10.0))
                .collect();
            let g = reparametrize(&f, &phi, &cm).unwrap();
            let scale = 1.0 + f.max_abs_cost();
            for _ in 0..100 {
                let x: Labeling = (0..3).map(|_| rng.gen_range(0..3)).collect();
                let d = (f.evaluate(&x).unwrap() - g.evaluate(&x).unwrap()).abs();
                assert!(d <= 1e-9 * scale, "diff {} at {:?}", d, x);
            }
        }
    }

    #[test]
    fn reparametrization_rejects_wrong_phi_length() {
        use crate::relaxation::{RelaxKind, RelaxationSpec};
        let f = toy_two_binary();
        let cm = RelaxationSpec::build(&f, RelaxKind::Blp).constraint_matrix();
        assert!(reparametrize(&f, &[0.0], &cm).is_err());
    }

    #[test]
    fn instance_spec_header_mentions_seed() {
        let spec = InstanceSpec {
            kind: GeneratorKind::Potts,
            shape: Shape::Grid { rows: 3, cols: 3 },
            labels: 3,
            degree: 2,
            terms: 0,
            seed: 7,
        };
        assert!(spec.header_line().contains("seed=7"));
    }
}
