//! Local LP relaxations: coupling structures, sparse marginalization
//! constraints and the embedding of labelings into the relaxed space.

use std::collections::BTreeSet;
use std::io::Write;

use crate::energy::{EnergyModel, Labeling};
use crate::error::{Error, Result};

/// Flat coordinates for all components `(hyperedge C, assignment x_C)` of a
/// model, in the model's canonical term order. The first coordinate is the
/// constant-term component `(∅, ∅)`.
#[derive(Debug, Clone)]
pub struct IndexSet {
    offsets: Vec<usize>,
    total: usize,
}

impl IndexSet {
    pub fn new(model: &EnergyModel) -> Self {
        let mut offsets = Vec::with_capacity(model.terms().len());
        let mut total = 0usize;
        for t in model.terms() {
            offsets.push(total);
            total += t.table_len();
        }
        IndexSet { offsets, total }
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Coordinate of `(term, flat assignment index)`.
    #[inline]
    pub fn coord(&self, term: usize, flat: usize) -> usize {
        self.offsets[term] + flat
    }

    /// Inverse of `coord`.
    pub fn decode(&self, coord: usize) -> (usize, usize) {
        debug_assert!(coord < self.total);
        let term = match self.offsets.binary_search(&coord) {
            Ok(t) => t,
            Err(ins) => ins - 1,
        };
        (term, coord - self.offsets[term])
    }

    pub fn term_range(&self, term: usize) -> std::ops::Range<usize> {
        let start = self.offsets[term];
        let end = if term + 1 < self.offsets.len() {
            self.offsets[term + 1]
        } else {
            self.total
        };
        start..end
    }
}

/// Coupling families for the two standard local relaxations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum RelaxKind {
    /// Normalizations plus first-order marginalization (node into hyperedge).
    Blp,
    /// All subset pairs after closing the hyperedge set under subsets.
    Flp,
}

impl RelaxKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RelaxKind::Blp => "blp",
            RelaxKind::Flp => "flp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "blp" => Ok(RelaxKind::Blp),
            "flp" => Ok(RelaxKind::Flp),
            other => Err(Error::invalid(format!("unknown relaxation `{}`", other))),
        }
    }
}

/// A coupling structure over a (possibly subset-closed) model. Owns the
/// working copy of the model so the caller's original stays untouched.
#[derive(Debug, Clone)]
pub struct RelaxationSpec {
    kind: RelaxKind,
    model: EnergyModel,
    /// Pairs `(D, C)` of term indices with `D ⊊ C`.
    couplings: Vec<(usize, usize)>,
}

fn proper_subsets(nodes: &[usize]) -> Vec<Vec<usize>> {
    let m = nodes.len();
    let mut out = Vec::new();
    for mask in 0..(1usize << m) - 1 {
        let sub: Vec<usize> = (0..m).filter(|k| mask >> k & 1 == 1).map(|k| nodes[k]).collect();
        out.push(sub);
    }
    out
}

impl RelaxationSpec {
    pub fn build(f: &EnergyModel, kind: RelaxKind) -> Self {
        let model = match kind {
            RelaxKind::Blp => f.clone(),
            RelaxKind::Flp => {
                // Close the hyperedge set under subsets, adding zero tables.
                let mut edges: BTreeSet<Vec<usize>> =
                    f.terms().iter().map(|t| t.nodes.clone()).collect();
                for t in f.terms() {
                    for sub in proper_subsets(&t.nodes) {
                        edges.insert(sub);
                    }
                }
                let terms = edges
                    .into_iter()
                    .map(|nodes| {
                        if let Some(i) = f.term_index(&nodes) {
                            (nodes, f.term(i).table.clone())
                        } else {
                            let len = nodes.iter().map(|&s| f.label_count(s)).product();
                            (nodes, vec![0.0; len])
                        }
                    })
                    .collect();
                EnergyModel::new(f.label_counts().to_vec(), terms)
                    .expect("subset closure of a valid model is valid")
            }
        };
        let mut couplings = Vec::new();
        match kind {
            RelaxKind::Blp => {
                for (c, t) in model.terms().iter().enumerate() {
                    if t.arity() == 0 {
                        continue;
                    }
                    couplings.push((model.term_index(&[]).unwrap(), c));
                    if t.arity() > 1 {
                        for &s in &t.nodes {
                            couplings.push((model.unary_term(s), c));
                        }
                    }
                }
            }
            RelaxKind::Flp => {
                for (c, t) in model.terms().iter().enumerate() {
                    if t.arity() == 0 {
                        continue;
                    }
                    for sub in proper_subsets(&t.nodes) {
                        let d = model
                            .term_index(&sub)
                            .expect("closure guarantees subset terms");
                        couplings.push((d, c));
                    }
                }
            }
        }
        couplings.sort_unstable();
        couplings.dedup();
        RelaxationSpec {
            kind,
            model,
            couplings,
        }
    }

    pub fn kind(&self) -> RelaxKind {
        self.kind
    }

    /// The working model; for FLP this is the subset-closed copy.
    pub fn model(&self) -> &EnergyModel {
        &self.model
    }

    pub fn couplings(&self) -> &[(usize, usize)] {
        &self.couplings
    }

    /// True when every node of every non-unary hyperedge is coupled into it;
    /// under such couplings the strong-persistency perturbation only needs to
    /// touch unary tables.
    pub fn has_all_first_order_couplings(&self) -> bool {
        self.model.terms().iter().enumerate().all(|(c, t)| {
            t.arity() <= 1
                || t.nodes
                    .iter()
                    .all(|&s| self.couplings.binary_search(&(self.model.unary_term(s), c)).is_ok())
        })
    }

    /// Expand couplings into the sparse equality matrix.
    pub fn constraint_matrix(&self) -> ConstraintMatrix {
        let model = &self.model;
        let idx = IndexSet::new(model);
        let mut rows = Vec::new();
        for &(d, c) in &self.couplings {
            let dt = model.term(d);
            let ct = model.term(c);
            // positions of D's nodes inside C
            let dpos: Vec<usize> = dt
                .nodes
                .iter()
                .map(|s| ct.nodes.iter().position(|t| t == s).unwrap())
                .collect();
            for x_d in 0..dt.table_len() {
                let d_labels = dt.unflatten(x_d, model.label_counts());
                let mut entries = Vec::new();
                for x_c in 0..ct.table_len() {
                    let c_labels = ct.unflatten(x_c, model.label_counts());
                    if dpos.iter().zip(&d_labels).all(|(&p, &l)| c_labels[p] == l) {
                        entries.push((c, x_c, 1.0));
                    }
                }
                entries.push((d, x_d, -1.0));
                rows.push(MargRow {
                    meta: CouplingRow {
                        d_term: d,
                        c_term: c,
                        x_d,
                    },
                    entries,
                });
            }
        }
        ConstraintMatrix {
            model: model.clone(),
            idx,
            rows,
        }
    }
}

/// Identity of one marginalization row: `sum_{x_{C\D}} mu_C(x_C) = mu_D(x_D)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CouplingRow {
    pub d_term: usize,
    pub c_term: usize,
    pub x_d: usize,
}

#[derive(Debug, Clone)]
pub struct MargRow {
    meta: CouplingRow,
    /// `(term, flat, coeff)` triples; +1 over the consistent C-block, -1 at D.
    entries: Vec<(usize, usize, f64)>,
}

impl MargRow {
    pub fn meta(&self) -> &CouplingRow {
        &self.meta
    }

    pub fn table_entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn coords<'a>(&'a self, idx: &'a IndexSet) -> impl Iterator<Item = (usize, f64)> + 'a {
        self.entries
            .iter()
            .map(move |&(term, flat, v)| (idx.coord(term, flat), v))
    }
}

/// Sparse marginalization equalities `A mu = 0` over an index set. The
/// normalization `mu_∅ = 1` is kept as a variable bound, not a row.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    model: EnergyModel,
    idx: IndexSet,
    rows: Vec<MargRow>,
}

impl ConstraintMatrix {
    pub fn model(&self) -> &EnergyModel {
        &self.model
    }

    pub fn index_set(&self) -> &IndexSet {
        &self.idx
    }

    pub fn rows(&self) -> &[MargRow] {
        &self.rows
    }

    pub fn ncols(&self) -> usize {
        self.idx.len()
    }

    /// Largest absolute row residual `|A mu|`.
    pub fn max_residual(&self, mu: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for row in &self.rows {
            let r: f64 = row.coords(&self.idx).map(|(j, v)| v * mu[j]).sum();
            worst = worst.max(r.abs());
        }
        worst
    }

    /// Matrix-Market-style triplet dump `row col value` (0-based).
    pub fn write_triplets(&self, w: &mut impl Write) -> std::io::Result<()> {
        let nnz: usize = self.rows.iter().map(|r| r.entries.len()).sum();
        writeln!(w, "% rows cols nnz")?;
        writeln!(w, "{} {} {}", self.rows.len(), self.ncols(), nnz)?;
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row.coords(&self.idx) {
                writeln!(w, "{} {} {}", i, j, v)?;
            }
        }
        Ok(())
    }

    /// Sidecar metadata: one line per row naming `(D, C, x_D)`.
    pub fn write_row_metadata(&self, w: &mut impl Write) -> std::io::Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            let d = self.model.term(row.meta.d_term);
            let c = self.model.term(row.meta.c_term);
            let labels = d.unflatten(row.meta.x_d, self.model.label_counts());
            writeln!(w, "{} D={:?} C={:?} x_D={:?}", i, d.nodes, c.nodes, labels)?;
        }
        Ok(())
    }
}

/// Dense relaxed labeling over an IndexSet.
pub type RelaxedLabeling = Vec<f64>;

/// 0/1 embedding of a labeling: one indicator per hyperedge block.
pub fn embed(x: &Labeling, model: &EnergyModel, idx: &IndexSet) -> RelaxedLabeling {
    let mut mu = vec![0.0; idx.len()];
    for (t, term) in model.terms().iter().enumerate() {
        mu[idx.coord(t, term.flat_index(x))] = 1.0;
    }
    mu
}

/// Inner product `<f, mu>` over the index set.
pub fn cost_inner(model: &EnergyModel, idx: &IndexSet, mu: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (t, term) in model.terms().iter().enumerate() {
        let base = idx.coord(t, 0);
        for (k, &v) in term.table.iter().enumerate() {
            acc += v * mu[base + k];
        }
    }
    acc
}

/// Feasibility for the local polytope: `mu >= -tol`, `|mu_∅ - 1| <= tol`,
/// `|A mu|_inf <= tol`. Returns the verdict and the worst residual.
pub fn check_feasible(mu: &[f64], constraints: &ConstraintMatrix, tol: f64) -> (bool, f64) {
    let mut worst = 0.0f64;
    worst = worst.max((mu[0] - 1.0).abs());
    for &v in mu {
        worst = worst.max(-v);
    }
    worst = worst.max(constraints.max_residual(mu));
    (worst <= tol, worst)
}

pub const DEFAULT_FEASIBILITY_TOL: f64 = 1e-8;
