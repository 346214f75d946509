//! Node-wise discrete maps, their linear extensions on relaxed labelings,
//! subset-to-one maps, and the lifted product variables that linearize them.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::energy::{EnergyModel, Labeling};
use crate::error::{Error, Result};
use crate::relaxation::{IndexSet, RelaxedLabeling};

/// Hyperedges larger than this make subset enumeration explode; reject.
pub const MAX_LIFTED_ARITY: usize = 8;

/// Per-node label maps `p_s : X_s -> X_s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodewiseMap {
    maps: Vec<Vec<usize>>,
}

impl NodewiseMap {
    pub fn new(maps: Vec<Vec<usize>>, model: &EnergyModel) -> Result<Self> {
        if maps.len() != model.num_nodes() {
            return Err(Error::invalid("map has wrong number of nodes"));
        }
        for (s, m) in maps.iter().enumerate() {
            if m.len() != model.label_count(s) || m.iter().any(|&l| l >= model.label_count(s)) {
                return Err(Error::invalid(format!("bad label map at node {}", s)));
            }
        }
        Ok(NodewiseMap { maps })
    }

    pub fn identity(model: &EnergyModel) -> Self {
        NodewiseMap {
            maps: (0..model.num_nodes())
                .map(|s| (0..model.label_count(s)).collect())
                .collect(),
        }
    }

    /// The constant map sending every node to `y_s`.
    pub fn constant(y: &Labeling, model: &EnergyModel) -> Self {
        NodewiseMap {
            maps: (0..model.num_nodes())
                .map(|s| vec![y[s]; model.label_count(s)])
                .collect(),
        }
    }

    pub fn node(&self, s: usize) -> &[usize] {
        &self.maps[s]
    }

    pub fn maps(&self) -> &[Vec<usize>] {
        &self.maps
    }

    pub fn set(&mut self, s: usize, from: usize, to: usize) {
        self.maps[s][from] = to;
    }

    pub fn is_identity(&self) -> bool {
        self.maps
            .iter()
            .all(|m| m.iter().enumerate().all(|(i, &l)| i == l))
    }

    pub fn is_idempotent(&self) -> bool {
        self.maps.iter().all(|m| m.iter().all(|&l| m[l] == l))
    }

    /// Labels `(s, i)` with `p_s(i) != i`; these are the eliminated labels.
    pub fn eliminated(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (s, m) in self.maps.iter().enumerate() {
            for (i, &l) in m.iter().enumerate() {
                if l != i {
                    out.push((s, i));
                }
            }
        }
        out
    }

    /// Apply componentwise: `p(x)_s = p_s(x_s)`.
    pub fn apply(&self, x: &Labeling) -> Labeling {
        x.iter()
            .enumerate()
            .map(|(s, &l)| self.maps[s][l])
            .collect()
    }

    /// The idempotent compositional power `p^k`: every trajectory is walked
    /// onto its eventual cycle and cycles collapse to fixed points of `p^k`
    /// (`k` a common multiple of all cycle lengths), so `p^k(X) ⊆ p(X)`.
    pub fn idempotent_power(&self) -> NodewiseMap {
        let maps = self
            .maps
            .iter()
            .map(|m| {
                let k = m.len();
                let mut out = vec![0usize; k];
                for (i, slot) in out.iter_mut().enumerate() {
                    let mut seen = vec![usize::MAX; k];
                    let mut path = Vec::new();
                    let mut cur = i;
                    while seen[cur] == usize::MAX {
                        seen[cur] = path.len();
                        path.push(cur);
                        cur = m[cur];
                    }
                    let entry = seen[cur]; // first index on the cycle
                    let cycle_len = path.len() - entry;
                    let tail = entry; // steps before entering the cycle
                    // p^k(i) for k ≡ 0 (mod cycle_len), k >= tail lands at
                    // cycle position (-tail) mod cycle_len.
                    let offset = (cycle_len - tail % cycle_len) % cycle_len;
                    *slot = path[entry + offset];
                }
                out
            })
            .collect();
        NodewiseMap { maps }
    }

    /// Restriction image `p_C(X_C)` on a hyperedge, as flat table indices.
    pub fn range_on_term(&self, model: &EnergyModel, term: usize) -> Vec<usize> {
        let t = model.term(term);
        let mut image = vec![false; t.table_len()];
        for flat in 0..t.table_len() {
            let labels = t.unflatten(flat, model.label_counts());
            let mapped: Vec<usize> = t
                .nodes
                .iter()
                .zip(&labels)
                .map(|(&s, &l)| self.maps[s][l])
                .collect();
            image[t.flat_index_local(&mapped)] = true;
        }
        image
            .iter()
            .enumerate()
            .filter_map(|(k, &b)| b.then_some(k))
            .collect()
    }
}

/// Linear extension `[p]` applied to a relaxed labeling:
/// `([p]mu)_C(x_C) = sum of mu_C(x'_C) over x'_C with p_C(x'_C) = x_C`.
pub fn extend_apply(
    p: &NodewiseMap,
    mu: &RelaxedLabeling,
    model: &EnergyModel,
    idx: &IndexSet,
) -> RelaxedLabeling {
    let mut out = vec![0.0; idx.len()];
    for (t, term) in model.terms().iter().enumerate() {
        let base = idx.coord(t, 0);
        for flat in 0..term.table_len() {
            let labels = term.unflatten(flat, model.label_counts());
            let mapped: Vec<usize> = term
                .nodes
                .iter()
                .zip(&labels)
                .map(|(&s, &l)| p.node(s)[l])
                .collect();
            out[base + term.flat_index_local(&mapped)] += mu[base + flat];
        }
    }
    out
}

/// A subset-to-one map: per node, a kept label set; everything else is sent
/// to the test label `y_s`. Such maps are idempotent by construction. The
/// test label itself is never marked kept (it is a fixed point regardless).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetToOneMap {
    y: Labeling,
    keep: Vec<Vec<bool>>,
}

impl SubsetToOneMap {
    pub fn new(y: Labeling, keep: Vec<Vec<bool>>, model: &EnergyModel) -> Result<Self> {
        if y.len() != model.num_nodes() || keep.len() != model.num_nodes() {
            return Err(Error::invalid("map shape mismatch"));
        }
        let mut keep = keep;
        for s in 0..y.len() {
            if y[s] >= model.label_count(s) || keep[s].len() != model.label_count(s) {
                return Err(Error::invalid(format!("bad subset map at node {}", s)));
            }
            keep[s][y[s]] = false;
        }
        Ok(SubsetToOneMap { y, keep })
    }

    /// The identity map of class `P^{2,y}` (every label kept).
    pub fn identity(y: Labeling, model: &EnergyModel) -> Self {
        let keep = (0..model.num_nodes())
            .map(|s| (0..model.label_count(s)).map(|i| i != y[s]).collect())
            .collect();
        SubsetToOneMap { y, keep }
    }

    /// The all-to-y map (nothing kept).
    pub fn collapse(y: Labeling, model: &EnergyModel) -> Self {
        let keep = (0..model.num_nodes())
            .map(|s| vec![false; model.label_count(s)])
            .collect();
        SubsetToOneMap { y, keep }
    }

    pub fn y(&self) -> &Labeling {
        &self.y
    }

    pub fn keeps(&self, s: usize, i: usize) -> bool {
        i == self.y[s] || self.keep[s][i]
    }

    fn keep_flag(&self, s: usize, i: usize) -> bool {
        self.keep[s][i]
    }

    pub fn to_nodewise(&self, model: &EnergyModel) -> NodewiseMap {
        let maps = (0..model.num_nodes())
            .map(|s| {
                (0..model.label_count(s))
                    .map(|i| if self.keeps(s, i) { i } else { self.y[s] })
                    .collect()
            })
            .collect();
        NodewiseMap { maps }
    }

    pub fn eliminated(&self, model: &EnergyModel) -> Vec<(usize, usize)> {
        self.to_nodewise(model).eliminated()
    }
}

/// Canonical coordinates for the lifted product variables: one real per
/// `(D, x_D)` with `D` a non-empty subset of some hyperedge and `x_D` free of
/// the test labeling (`x_s != y_s` on all of `D`). Components that touch the
/// test labeling are structurally zero and the empty set is pinned to one, so
/// neither gets a coordinate. Keys are ordered by (|D|, D, x_D).
#[derive(Debug, Clone)]
pub struct ZetaIndex {
    y: Labeling,
    label_counts: Vec<usize>,
    keys: Vec<(Vec<usize>, Vec<usize>)>,
    lookup: BTreeMap<(Vec<usize>, Vec<usize>), usize>,
    unary: Vec<Vec<Option<usize>>>,
}

fn nonempty_subsets(nodes: &[usize]) -> Vec<Vec<usize>> {
    let m = nodes.len();
    (1..(1usize << m))
        .map(|mask| {
            (0..m)
                .filter(|k| mask >> k & 1 == 1)
                .map(|k| nodes[k])
                .collect()
        })
        .collect()
}

/// Assignments of `nodes` avoiding the test label at every node, in
/// lexicographic order with the last node fastest.
fn free_assignments(nodes: &[usize], y: &[usize], label_counts: &[usize]) -> Vec<Vec<usize>> {
    if nodes.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Vec::new()];
    for &s in nodes {
        let mut next = Vec::new();
        for partial in &out {
            for l in 0..label_counts[s] {
                if l == y[s] {
                    continue;
                }
                let mut p = partial.clone();
                p.push(l);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

impl ZetaIndex {
    pub fn new(model: &EnergyModel, y: &Labeling) -> Result<Arc<Self>> {
        model.validate_labeling(y)?;
        let mut subsets: BTreeMap<(usize, Vec<usize>), ()> = BTreeMap::new();
        for t in model.terms() {
            if t.arity() > MAX_LIFTED_ARITY {
                return Err(Error::invalid(format!(
                    "hyperedge {:?} exceeds lifted arity cap {}",
                    t.nodes, MAX_LIFTED_ARITY
                )));
            }
            for d in nonempty_subsets(&t.nodes) {
                subsets.insert((d.len(), d), ());
            }
        }
        let mut keys = Vec::new();
        let mut lookup = BTreeMap::new();
        let mut unary: Vec<Vec<Option<usize>>> = (0..model.num_nodes())
            .map(|s| vec![None; model.label_count(s)])
            .collect();
        for ((_, d), _) in subsets {
            for xd in free_assignments(&d, y, model.label_counts()) {
                let coord = keys.len();
                if d.len() == 1 {
                    unary[d[0]][xd[0]] = Some(coord);
                }
                lookup.insert((d.clone(), xd.clone()), coord);
                keys.push((d.clone(), xd));
            }
        }
        Ok(Arc::new(ZetaIndex {
            y: y.clone(),
            label_counts: model.label_counts().to_vec(),
            keys,
            lookup,
            unary,
        }))
    }

    pub fn y(&self) -> &Labeling {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[(Vec<usize>, Vec<usize>)] {
        &self.keys
    }

    /// Coordinate of `(D, x_D)`; `None` when the assignment touches the test
    /// labeling (structural zero) or the subset was never lifted.
    pub fn coord(&self, d: &[usize], xd: &[usize]) -> Option<usize> {
        if d.iter().zip(xd).any(|(&s, &l)| l == self.y[s]) {
            return None;
        }
        self.lookup.get(&(d.to_vec(), xd.to_vec())).copied()
    }

    pub fn unary_coord(&self, s: usize, i: usize) -> Option<usize> {
        self.unary[s][i]
    }

    /// All `(node, label, coordinate)` triples of unary components.
    pub fn unary_coords(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::new();
        for (s, labels) in self.unary.iter().enumerate() {
            for (i, c) in labels.iter().enumerate() {
                if let Some(c) = c {
                    out.push((s, i, *c));
                }
            }
        }
        out
    }

    pub fn describe(&self, coord: usize) -> String {
        let (d, xd) = &self.keys[coord];
        format!("zeta[D={:?}, x={:?}]", d, xd)
    }
}

/// A (possibly fractional) lifted vector over a `ZetaIndex`. The empty-set
/// component is implicitly one.
#[derive(Debug, Clone)]
pub struct ZetaVector {
    index: Arc<ZetaIndex>,
    values: Vec<f64>,
}

impl ZetaVector {
    pub fn new(index: Arc<ZetaIndex>, values: Vec<f64>) -> Result<Self> {
        if values.len() != index.len() {
            return Err(Error::invalid("zeta vector length mismatch"));
        }
        Ok(ZetaVector { index, values })
    }

    pub fn index(&self) -> &Arc<ZetaIndex> {
        &self.index
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value of `zeta_{D, x_D}` including the structural cases: 1 for the
    /// empty set, 0 on assignments touching the test labeling.
    pub fn get(&self, d: &[usize], xd: &[usize]) -> f64 {
        if d.is_empty() {
            return 1.0;
        }
        match self.index.coord(d, xd) {
            Some(c) => self.values[c],
            None => 0.0,
        }
    }

    /// Componentwise square; stays inside the lifted polytope.
    pub fn square(&self) -> ZetaVector {
        ZetaVector {
            index: self.index.clone(),
            values: self.values.iter().map(|v| v * v).collect(),
        }
    }

    /// Largest distance of any component from {0, 1}.
    pub fn max_integrality_gap(&self) -> f64 {
        self.values
            .iter()
            .map(|&v| v.abs().min((v - 1.0).abs()))
            .fold(0.0, f64::max)
    }

    /// Convex combination of integral lifts `sum alpha_k zeta(m_k)`.
    pub fn convex_combination(
        index: Arc<ZetaIndex>,
        parts: &[(f64, SubsetToOneMap)],
        model: &EnergyModel,
    ) -> Result<ZetaVector> {
        let mut values = vec![0.0; index.len()];
        for (alpha, m) in parts {
            let z = zeta_from_map(m, index.clone(), model)?;
            for (v, zv) in values.iter_mut().zip(z.values) {
                *v += alpha * zv;
            }
        }
        ZetaVector::new(index, values)
    }
}

/// Integral lift of a subset-to-one map: `zeta_{D,x_D} = prod_s keep[s][x_s]`.
pub fn zeta_from_map(
    m: &SubsetToOneMap,
    index: Arc<ZetaIndex>,
    _model: &EnergyModel,
) -> Result<ZetaVector> {
    if m.y() != index.y() {
        return Err(Error::invalid("map and index use different test labelings"));
    }
    let values = index
        .keys()
        .iter()
        .map(|(d, xd)| {
            let all = d.iter().zip(xd).all(|(&s, &l)| m.keep_flag(s, l));
            if all {
                1.0
            } else {
                0.0
            }
        })
        .collect();
    Ok(ZetaVector { index, values })
}

/// Recover the discrete map from (numerically) integral unary components.
/// Components within 1e-6 of {0,1} are rounded; anything further is an error.
pub fn map_from_zeta(z: &ZetaVector, model: &EnergyModel) -> Result<SubsetToOneMap> {
    let idx = z.index();
    let y = idx.y().clone();
    let mut keep: Vec<Vec<bool>> = (0..model.num_nodes())
        .map(|s| vec![false; model.label_count(s)])
        .collect();
    for (s, i, coord) in idx.unary_coords() {
        let v = z.values[coord];
        if (v - 1.0).abs() <= 1e-6 {
            keep[s][i] = true;
        } else if v.abs() <= 1e-6 {
            keep[s][i] = false;
        } else {
            return Err(Error::NumericIntegrality(format!(
                "zeta for label {} at node {} = {} is not integral",
                i, s, v
            )));
        }
    }
    SubsetToOneMap::new(y, keep, model)
}

/// One factor of the expansion coefficient of the linearized map:
/// `[x'_s = x_s] - [y_s = x_s]` inside the subset, `[y_s = x_s]` outside.
fn map_coefficient(
    c_nodes: &[usize],
    d_mask: usize,
    x_out: &[usize],
    x_in: &[usize],
    y: &[usize],
) -> f64 {
    let mut acc = 1.0f64;
    for (k, &s) in c_nodes.iter().enumerate() {
        let f = if d_mask >> k & 1 == 1 {
            (x_in[k] == x_out[k]) as i32 - (y[s] == x_out[k]) as i32
        } else {
            (y[s] == x_out[k]) as i32
        };
        if f == 0 {
            return 0.0;
        }
        acc *= f as f64;
    }
    acc
}

/// Apply the linearized map: each block entry is the polynomial expansion of
/// the extension with label products replaced by lifted components. On an
/// integral vector this agrees exactly with `extend_apply` of the discrete
/// map.
pub fn apply_p_zeta(
    z: &ZetaVector,
    mu: &RelaxedLabeling,
    model: &EnergyModel,
    idx: &IndexSet,
) -> RelaxedLabeling {
    let y = z.index().y().clone();
    let mut out = vec![0.0; idx.len()];
    for (t, term) in model.terms().iter().enumerate() {
        let base = idx.coord(t, 0);
        let arity = term.arity();
        let assignments: Vec<Vec<usize>> = (0..term.table_len())
            .map(|flat| term.unflatten(flat, model.label_counts()))
            .collect();
        for (out_flat, x_out) in assignments.iter().enumerate() {
            let mut acc = 0.0;
            for (in_flat, x_in) in assignments.iter().enumerate() {
                let mut p = 0.0;
                for d_mask in 0..(1usize << arity) {
                    let coeff = map_coefficient(&term.nodes, d_mask, x_out, x_in, &y);
                    if coeff == 0.0 {
                        continue;
                    }
                    let d: Vec<usize> = (0..arity)
                        .filter(|k| d_mask >> k & 1 == 1)
                        .map(|k| term.nodes[k])
                        .collect();
                    let xd: Vec<usize> = (0..arity)
                        .filter(|k| d_mask >> k & 1 == 1)
                        .map(|k| x_in[k])
                        .collect();
                    p += coeff * z.get(&d, &xd);
                }
                acc += p * mu[base + in_flat];
            }
            out[base + out_flat] = acc;
        }
    }
    out
}

/// One linear inequality over lifted coordinates:
/// `sum coeffs·zeta + constant >= 0` (the constant absorbs the pinned
/// empty-set component).
#[derive(Debug, Clone)]
pub struct ZetaRow {
    pub coeffs: Vec<(usize, f64)>,
    pub constant: f64,
}

impl ZetaRow {
    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.coeffs
            .iter()
            .map(|&(c, w)| w * values[c])
            .sum::<f64>()
            + self.constant
    }
}

/// Inequality description of the lifted polytope: for every hyperedge `C`,
/// every test-free assignment `x'_C` and every `B ⊆ C`,
/// `sum_{D ⊆ C\B} (-1)^{|D|} zeta_{D∪B, x'_{D∪B}} >= 0`. Assignments with a
/// test-label coordinate are structural zeros and generate nothing.
pub fn zeta_constraint_rows(zidx: &ZetaIndex, model: &EnergyModel) -> Result<Vec<ZetaRow>> {
    let y = zidx.y();
    let mut rows = Vec::new();
    for term in model.terms() {
        let arity = term.arity();
        if arity == 0 {
            continue;
        }
        if arity > MAX_LIFTED_ARITY {
            return Err(Error::invalid(format!(
                "hyperedge {:?} exceeds lifted arity cap {}",
                term.nodes, MAX_LIFTED_ARITY
            )));
        }
        for x_free in free_assignments(&term.nodes, y, &zidx.label_counts) {
            for b_mask in 0..(1usize << arity) {
                let rest: Vec<usize> = (0..arity).filter(|k| b_mask >> k & 1 == 0).collect();
                let mut coeffs: BTreeMap<usize, f64> = BTreeMap::new();
                let mut constant = 0.0;
                for d_bits in 0..(1usize << rest.len()) {
                    let mut union_mask = b_mask;
                    for (bit, &k) in rest.iter().enumerate() {
                        if d_bits >> bit & 1 == 1 {
                            union_mask |= 1 << k;
                        }
                    }
                    let sign = if d_bits.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    if union_mask == 0 {
                        constant += sign;
                        continue;
                    }
                    let d: Vec<usize> = (0..arity)
                        .filter(|k| union_mask >> k & 1 == 1)
                        .map(|k| term.nodes[k])
                        .collect();
                    let xd: Vec<usize> = (0..arity)
                        .filter(|k| union_mask >> k & 1 == 1)
                        .map(|k| x_free[k])
                        .collect();
                    if let Some(coord) = zidx.coord(&d, &xd) {
                        *coeffs.entry(coord).or_insert(0.0) += sign;
                    }
                }
                rows.push(ZetaRow {
                    coeffs: coeffs.into_iter().filter(|&(_, v)| v != 0.0).collect(),
                    constant,
                });
            }
        }
    }
    Ok(rows)
}
