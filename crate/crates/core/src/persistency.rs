//! The persistency pipeline: verification LPs for weak/strict relaxed
//! improving maps, the linear program whose unique integral optimum is the
//! maximum subset-to-one improving map, the strong-persistency perturbation,
//! and the two-phase method tying them together.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::energy::{EnergyModel, Labeling};
use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpSolution, RowOp};
use crate::mapping::{
    zeta_constraint_rows, NodewiseMap, SubsetToOneMap, ZetaIndex, ZetaVector,
};
use crate::relaxation::{ConstraintMatrix, IndexSet, RelaxKind, RelaxationSpec};

pub const DEFAULT_TOL: f64 = 1e-8;
/// Components of an LP-optimal lifted vector further than this from {0,1}
/// trigger rounding plus re-verification.
pub const INTEGRALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Weak,
    Strict,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Weak => "weak",
            Mode::Strict => "strict",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "weak" => Ok(Mode::Weak),
            "strict" => Ok(Mode::Strict),
            other => Err(Error::invalid(format!("unknown mode `{}`", other))),
        }
    }
}

/// Which family of subset-to-one maps the program optimizes over: all-or-none
/// per node, or any kept subset per node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapClass {
    P1y,
    P2y,
}

impl MapClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            MapClass::P1y => "p1y",
            MapClass::P2y => "p2y",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "p1y" => Ok(MapClass::P1y),
            "p2y" => Ok(MapClass::P2y),
            other => Err(Error::invalid(format!("unknown map class `{}`", other))),
        }
    }
}

/// A linear map acting on relaxed labelings: either the extension of a
/// discrete node-wise map or a (possibly fractional) lifted vector.
#[derive(Debug, Clone)]
pub enum LinearMapAction {
    Discrete(NodewiseMap),
    Lifted(ZetaVector),
}

/// The phase-1 LP `min <f, mu>` over the local polytope.
pub fn relaxation_problem(cm: &ConstraintMatrix) -> LpProblem {
    relaxation_problem_with_costs(cm, cm.model())
}

fn flatten_costs(model: &EnergyModel, idx: &IndexSet) -> Vec<f64> {
    let mut c = vec![0.0; idx.len()];
    for (t, term) in model.terms().iter().enumerate() {
        let base = idx.coord(t, 0);
        for (k, &v) in term.table.iter().enumerate() {
            c[base + k] = v;
        }
    }
    c
}

fn relaxation_problem_with_costs(cm: &ConstraintMatrix, costs: &EnergyModel) -> LpProblem {
    let idx = cm.index_set();
    let mut p = LpProblem::new(idx.len());
    p.objective = flatten_costs(costs, idx);
    p.fix(0, 1.0); // mu_∅ = 1 as a bound, not a row
    for row in cm.rows() {
        p.add_row(row.coords(idx).collect(), RowOp::Eq, 0.0);
    }
    p
}

/// Weight of the lifted component `(D, x'_D)` in `(P^T f)_C(x'_C)`:
/// inclusion-exclusion of the cost table over the sub-cube spanned by moving
/// coordinates in `D` between the test labeling and `x'`.
fn transpose_cost_weight(
    term: &crate::energy::Term,
    d_mask: usize,
    x_in: &[usize],
    y: &[usize],
) -> f64 {
    let arity = term.arity();
    let mut w = 0.0;
    let d_bits: Vec<usize> = (0..arity).filter(|k| d_mask >> k & 1 == 1).collect();
    for s_bits in 0..(1usize << d_bits.len()) {
        let mut labels: Vec<usize> = term.nodes.iter().map(|&s| y[s]).collect();
        let mut dropped = 0usize;
        for (b, &k) in d_bits.iter().enumerate() {
            if s_bits >> b & 1 == 1 {
                labels[k] = x_in[k];
            } else {
                dropped += 1;
            }
        }
        let sign = if dropped % 2 == 0 { 1.0 } else { -1.0 };
        w += sign * term.table[term.flat_index_local(&labels)];
    }
    w
}

/// Objective of the verification LP: `(I - P^T) f` over the index set.
pub fn improving_costs(
    costs: &EnergyModel,
    idx: &IndexSet,
    action: &LinearMapAction,
) -> Vec<f64> {
    let mut c = vec![0.0; idx.len()];
    match action {
        LinearMapAction::Discrete(p) => {
            for (t, term) in costs.terms().iter().enumerate() {
                let base = idx.coord(t, 0);
                for flat in 0..term.table_len() {
                    let labels = term.unflatten(flat, costs.label_counts());
                    let mapped: Vec<usize> = term
                        .nodes
                        .iter()
                        .zip(&labels)
                        .map(|(&s, &l)| p.node(s)[l])
                        .collect();
                    c[base + flat] =
                        term.table[flat] - term.table[term.flat_index_local(&mapped)];
                }
            }
        }
        LinearMapAction::Lifted(z) => {
            let y = z.index().y().clone();
            for (t, term) in costs.terms().iter().enumerate() {
                let base = idx.coord(t, 0);
                let arity = term.arity();
                for flat in 0..term.table_len() {
                    let x_in = term.unflatten(flat, costs.label_counts());
                    let mut pt = 0.0;
                    for d_mask in 0..(1usize << arity) {
                        // components touching the test labeling vanish
                        if (0..arity)
                            .any(|k| d_mask >> k & 1 == 1 && x_in[k] == y[term.nodes[k]])
                        {
                            continue;
                        }
                        let w = transpose_cost_weight(term, d_mask, &x_in, &y);
                        if w == 0.0 {
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
                        pt += w * z.get(&d, &xd);
                    }
                    c[base + flat] = term.table[flat] - pt;
                }
            }
        }
    }
    c
}

/// Verdict of the verification LP on a candidate map.
#[derive(Debug, Clone)]
pub struct ImprovingVerdict {
    pub is_weak_improving: bool,
    /// Only present when the strict check ran.
    pub is_strict_improving: Option<bool>,
    /// Optimal value of `min <(I-P^T)f, mu>` over the relaxation polytope.
    pub objective: f64,
    /// A minimizing relaxed labeling when the map is not improving.
    pub witness: Option<Vec<f64>>,
}

fn verification_lp(
    cm: &ConstraintMatrix,
    costs: &EnergyModel,
    action: &LinearMapAction,
    tol: f64,
) -> Result<(LpProblem, LpSolution)> {
    let mut p = relaxation_problem_with_costs(cm, costs);
    p.objective = improving_costs(costs, cm.index_set(), action);
    let sol = lp::solve(&p, tol);
    if !sol.is_optimal() {
        return Err(Error::Solver(format!(
            "verification LP ended with {:?}",
            sol.status
        )));
    }
    Ok((p, sol))
}

/// Decide (weak) relaxed-improvement of `action` for the relaxation's costs:
/// the map improves iff the verification LP is non-negative.
pub fn verify_weak_improving(
    spec: &RelaxationSpec,
    action: &LinearMapAction,
    tol: f64,
) -> Result<ImprovingVerdict> {
    verify_weak_improving_with(&spec.constraint_matrix(), spec.model(), action, tol)
}

fn verify_weak_improving_with(
    cm: &ConstraintMatrix,
    costs: &EnergyModel,
    action: &LinearMapAction,
    tol: f64,
) -> Result<ImprovingVerdict> {
    let (_, sol) = verification_lp(cm, costs, action, tol)?;
    let scale = 1.0 + costs.max_abs_cost();
    let ok = sol.objective >= -tol * scale;
    Ok(ImprovingVerdict {
        is_weak_improving: ok,
        is_strict_improving: None,
        objective: sol.objective,
        witness: if ok { None } else { Some(sol.x) },
    })
}

/// Strict check: solve the verification LP, extract the union-of-optima
/// support per hyperedge block, and require it to equal the map's image on
/// every block.
pub fn verify_strict_improving(
    spec: &RelaxationSpec,
    p: &NodewiseMap,
    tol: f64,
) -> Result<ImprovingVerdict> {
    if !p.is_idempotent() {
        return Err(Error::invalid("strict verification needs an idempotent map"));
    }
    let cm = spec.constraint_matrix();
    let model = spec.model();
    let idx = cm.index_set();
    let action = LinearMapAction::Discrete(p.clone());
    let (problem, sol) = verification_lp(&cm, model, &action, tol)?;
    let scale = 1.0 + model.max_abs_cost();
    let weak = sol.objective >= -tol * scale;
    if !weak {
        return Ok(ImprovingVerdict {
            is_weak_improving: false,
            is_strict_improving: Some(false),
            objective: sol.objective,
            witness: Some(sol.x),
        });
    }
    let coords: Vec<usize> = (0..idx.len()).collect();
    let support = lp::optimal_support(&problem, &sol, &coords, tol.max(1e-9))?;
    let mut strict = true;
    for (t, term) in model.terms().iter().enumerate() {
        if term.arity() == 0 {
            continue;
        }
        let image = p.range_on_term(model, t);
        let supported: Vec<usize> = (0..term.table_len())
            .filter(|&k| support[idx.coord(t, k)])
            .collect();
        if supported != image {
            strict = false;
            break;
        }
    }
    Ok(ImprovingVerdict {
        is_weak_improving: true,
        is_strict_improving: Some(strict),
        objective: sol.objective,
        witness: None,
    })
}

/// The cost increment used for strong persistency: counts agreements with
/// the test labeling on every hyperedge.
pub fn perturbation_vector(f: &EnergyModel, y: &Labeling) -> Result<EnergyModel> {
    f.validate_labeling(y)?;
    let terms = f
        .terms()
        .iter()
        .map(|t| {
            let table = (0..t.table_len())
                .map(|flat| {
                    let labels = t.unflatten(flat, f.label_counts());
                    t.nodes
                        .iter()
                        .zip(&labels)
                        .filter(|(&s, &l)| l == y[s])
                        .count() as f64
                })
                .collect();
            (t.nodes.clone(), table)
        })
        .collect();
    EnergyModel::new(f.label_counts().to_vec(), terms)
}

/// Perturbed costs for strong persistency. With first-order couplings in the
/// relaxation it suffices to raise the unary cost of the test label at every
/// node; otherwise the full agreement-count increment is added per hyperedge.
pub fn perturb(
    f: &EnergyModel,
    y: &Labeling,
    eps: f64,
    spec: &RelaxationSpec,
) -> Result<EnergyModel> {
    f.validate_labeling(y)?;
    if eps == 0.0 {
        return Ok(f.clone());
    }
    if spec.has_all_first_order_couplings() {
        let terms = f
            .terms()
            .iter()
            .map(|t| {
                let mut table = t.table.clone();
                if t.arity() == 1 {
                    table[y[t.nodes[0]]] += eps;
                }
                (t.nodes.clone(), table)
            })
            .collect();
        EnergyModel::new(f.label_counts().to_vec(), terms)
    } else {
        let g = perturbation_vector(f, y)?;
        let terms = f
            .terms()
            .iter()
            .map(|t| {
                let gt = &g.terms()[g.term_index(&t.nodes).unwrap()];
                let table = t
                    .table
                    .iter()
                    .zip(&gt.table)
                    .map(|(a, b)| a + eps * b)
                    .collect();
                (t.nodes.clone(), table)
            })
            .collect();
        EnergyModel::new(f.label_counts().to_vec(), terms)
    }
}

/// The assembled maximum-persistency LP together with everything needed to
/// interpret its solution.
#[derive(Debug, Clone)]
pub struct L1Program {
    pub problem: LpProblem,
    pub zeta_index: Arc<ZetaIndex>,
    /// Lifted coordinates occupy columns `0..n_zeta`; reparametrization
    /// multipliers follow, one per marginalization row.
    pub n_zeta: usize,
    spec: RelaxationSpec,
    cm: ConstraintMatrix,
    /// The cost vector the rows were built from (perturbed in strict mode).
    cost_model: EnergyModel,
    pub class: MapClass,
    pub eps: Option<f64>,
}

impl L1Program {
    pub fn spec(&self) -> &RelaxationSpec {
        &self.spec
    }

    pub fn cost_model(&self) -> &EnergyModel {
        &self.cost_model
    }

    /// Human-readable legend of the LP columns, for dump cross-checking.
    pub fn column_legend(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.n_zeta)
            .map(|c| self.zeta_index.describe(c))
            .collect();
        for (r, row) in self.cm.rows().iter().enumerate() {
            let meta = row.meta();
            names.push(format!(
                "phi[{} -> {} | x={}] (row {})",
                format_args!("{:?}", self.cm.model().term(meta.d_term).nodes),
                format_args!("{:?}", self.cm.model().term(meta.c_term).nodes),
                meta.x_d,
                r
            ));
        }
        names
    }
}

/// Assemble the maximum-persistency LP for maps onto the test labeling `y`:
/// minimize the number of kept labels subject to the lifted map being
/// relaxed-improving (one inequality per cost component, with free
/// reparametrization multipliers) and the lifted vector staying in its
/// product polytope. `P1y` adds per-node equalities tying all kept-label
/// indicators together.
pub fn build_l1(
    f: &EnergyModel,
    kind: RelaxKind,
    y: &Labeling,
    class: MapClass,
    perturbed: bool,
    eps: f64,
) -> Result<L1Program> {
    let spec = RelaxationSpec::build(f, kind);
    let cm = spec.constraint_matrix();
    let cost_model = if perturbed {
        perturb(spec.model(), y, eps, &spec)?
    } else {
        spec.model().clone()
    };
    build_l1_with(spec, cm, cost_model, y, class, perturbed.then_some(eps))
}

fn build_l1_with(
    spec: RelaxationSpec,
    cm: ConstraintMatrix,
    cost_model: EnergyModel,
    y: &Labeling,
    class: MapClass,
    eps: Option<f64>,
) -> Result<L1Program> {
    let model = spec.model().clone();
    let idx = cm.index_set().clone();
    let zidx = ZetaIndex::new(&model, y)?;
    let n_zeta = zidx.len();
    let n_phi = cm.rows().len();
    let mut p = LpProblem::new(n_zeta + n_phi);
    for c in 0..n_zeta {
        p.upper[c] = 1.0;
    }
    for j in n_zeta..n_zeta + n_phi {
        p.set_free(j);
    }
    for (_, _, c) in zidx.unary_coords() {
        p.objective[c] = 1.0;
    }

    // -A^T phi, gathered per index-set coordinate.
    let mut phi_cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); idx.len()];
    for (r, row) in cm.rows().iter().enumerate() {
        for (coord, v) in row.coords(&idx) {
            phi_cols[coord].push((n_zeta + r, -v));
        }
    }

    // One improving row per cost component (C, x'_C).
    for (t, term) in cost_model.terms().iter().enumerate() {
        let arity = term.arity();
        for flat in 0..term.table_len() {
            let x_in = term.unflatten(flat, cost_model.label_counts());
            let mut coeffs = phi_cols[idx.coord(t, flat)].clone();
            let mut constant = term.table[flat];
            for d_mask in 0..(1usize << arity) {
                if (0..arity).any(|k| d_mask >> k & 1 == 1 && x_in[k] == y[term.nodes[k]]) {
                    continue; // structural zero of the lifted vector
                }
                let w = transpose_cost_weight(term, d_mask, &x_in, y);
                if w == 0.0 {
                    continue;
                }
                if d_mask == 0 {
                    constant -= w; // the pinned empty-set component
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
                let coord = zidx
                    .coord(&d, &xd)
                    .expect("free assignment must have a lifted coordinate");
                coeffs.push((coord, -w));
            }
            p.add_row(coeffs, RowOp::Ge, -constant);
        }
    }

    // Lifted product polytope rows.
    for row in zeta_constraint_rows(&zidx, &model)? {
        p.add_row(row.coeffs, RowOp::Ge, -row.constant);
    }

    // All-or-none class: tie kept-label indicators within each node.
    if class == MapClass::P1y {
        for s in 0..model.num_nodes() {
            let coords: Vec<usize> = (0..model.label_count(s))
                .filter_map(|i| zidx.unary_coord(s, i))
                .collect();
            for w in coords.windows(2) {
                p.add_row(vec![(w[0], 1.0), (w[1], -1.0)], RowOp::Eq, 0.0);
            }
        }
    }

    Ok(L1Program {
        problem: p,
        zeta_index: zidx,
        n_zeta,
        spec,
        cm,
        cost_model,
        class,
        eps,
    })
}

/// Diagnostics attached to a solved maximum-persistency LP.
#[derive(Debug, Clone)]
pub struct L1Diagnostics {
    pub objective: f64,
    pub unary_integrality_gap: f64,
    pub total_integrality_gap: f64,
    pub rounded: bool,
    /// Verification objective of the rounded map when a rounding was needed.
    pub reverification_objective: Option<f64>,
    pub iterations: usize,
}

pub struct L1Solved {
    pub zeta: ZetaVector,
    pub phi: Vec<f64>,
    pub map: SubsetToOneMap,
    pub diagnostics: L1Diagnostics,
}

/// Solve the assembled LP. The optimum is integral in exact arithmetic; any
/// numeric fractionality beyond the tolerance is rounded down to the
/// indicator of ones and the rounded map is re-verified before returning.
pub fn solve_l1(prog: &L1Program, tol: f64) -> Result<L1Solved> {
    let sol = lp::solve(&prog.problem, tol);
    if !sol.is_optimal() {
        return Err(Error::Solver(format!("persistency LP ended {:?}", sol.status)));
    }
    let zeta = ZetaVector::new(
        prog.zeta_index.clone(),
        sol.x[..prog.n_zeta].to_vec(),
    )?;
    let phi = sol.x[prog.n_zeta..].to_vec();
    let unary_gap = prog
        .zeta_index
        .unary_coords()
        .iter()
        .map(|&(_, _, c)| {
            let v = zeta.values()[c];
            v.abs().min((v - 1.0).abs())
        })
        .fold(0.0f64, f64::max);
    let total_gap = zeta.max_integrality_gap();

    // Round: keep exactly the components at one.
    let model = prog.spec.model();
    let mut keep: Vec<Vec<bool>> = (0..model.num_nodes())
        .map(|s| vec![false; model.label_count(s)])
        .collect();
    for (s, i, c) in prog.zeta_index.unary_coords() {
        keep[s][i] = zeta.values()[c] >= 1.0 - INTEGRALITY_TOL;
    }
    let map = SubsetToOneMap::new(prog.zeta_index.y().clone(), keep, model)?;

    let rounded = unary_gap > INTEGRALITY_TOL;
    let mut reverification_objective = None;
    if rounded {
        let verdict = verify_weak_improving_with(
            &prog.cm,
            &prog.cost_model,
            &LinearMapAction::Discrete(map.to_nodewise(model)),
            tol,
        )?;
        reverification_objective = Some(verdict.objective);
        if !verdict.is_weak_improving {
            return Err(Error::NumericIntegrality(format!(
                "rounded map failed re-verification (objective {}, unary gap {:.3e}); \
                 fractional and rounded candidates disagree",
                verdict.objective, unary_gap
            )));
        }
    }

    Ok(L1Solved {
        zeta,
        phi,
        map,
        diagnostics: L1Diagnostics {
            objective: sol.objective,
            unary_integrality_gap: unary_gap,
            total_integrality_gap: total_gap,
            rounded,
            reverification_objective,
            iterations: sol.iterations,
        },
    })
}

/// How the strong-persistency perturbation magnitude is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsPolicy {
    /// `1e-3 * (1 + max|f|) / |V|`, halved on certification failure.
    Auto,
    Fixed(f64),
}

fn completeness_of(n_elim: usize, model: &EnergyModel) -> f64 {
    let denom = model.eliminable_labels();
    if denom == 0 {
        100.0
    } else {
        n_elim as f64 / denom as f64 * 100.0
    }
}

/// Timing and certification details of one pipeline run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunDiagnostics {
    pub eps_trace: Vec<f64>,
    pub relaxation_objective: Option<f64>,
    pub verification_objective: Option<f64>,
    pub zeta_integrality_gap: Option<f64>,
    pub downgraded_to_weak: bool,
    pub notes: Vec<String>,
    pub lp_time_ms: f64,
    pub total_time_ms: f64,
}

/// The outcome every method reports: an improving map, the labels it
/// eliminates, and the completeness metric.
#[derive(Debug, Clone)]
pub struct PersistencyResult {
    pub method: String,
    pub relaxation: RelaxKind,
    pub class: Option<MapClass>,
    pub mode: Mode,
    pub y: Option<Labeling>,
    pub map: NodewiseMap,
    pub eliminated: Vec<(usize, usize)>,
    pub n_elim: usize,
    pub completeness: f64,
    pub diagnostics: RunDiagnostics,
}

impl PersistencyResult {
    pub fn new(
        method: impl Into<String>,
        relaxation: RelaxKind,
        class: Option<MapClass>,
        mode: Mode,
        y: Option<Labeling>,
        map: NodewiseMap,
        model: &EnergyModel,
        diagnostics: RunDiagnostics,
    ) -> Self {
        let eliminated = map.eliminated();
        let n_elim = eliminated.len();
        PersistencyResult {
            method: method.into(),
            relaxation,
            class,
            mode,
            y,
            map,
            eliminated,
            n_elim,
            completeness: completeness_of(n_elim, model),
            diagnostics,
        }
    }
}

/// Read the test labeling off a relaxed solution: the integral label where
/// one exists, otherwise the heaviest (ties to the lowest index).
pub fn extract_test_labeling(
    sol: &LpSolution,
    model: &EnergyModel,
    idx: &IndexSet,
) -> Labeling {
    (0..model.num_nodes())
        .map(|s| {
            let t = model.unary_term(s);
            let base = idx.coord(t, 0);
            let k = model.label_count(s);
            for i in 0..k {
                if (sol.x[base + i] - 1.0).abs() <= 1e-6 {
                    return i;
                }
            }
            let mut best = 0usize;
            for i in 1..k {
                if sol.x[base + i] > sol.x[base + best] {
                    best = i;
                }
            }
            best
        })
        .collect()
}

/// The two-phase method: solve the relaxation to pick the test labeling,
/// then solve the maximum-persistency LP (on perturbed costs in strict mode,
/// with certification on the original costs and a halving retry loop).
pub fn two_phase(
    f: &EnergyModel,
    kind: RelaxKind,
    class: MapClass,
    mode: Mode,
    eps_policy: EpsPolicy,
    y_override: Option<Labeling>,
) -> Result<PersistencyResult> {
    let t0 = Instant::now();
    let mut lp_ms = 0.0f64;
    let spec = RelaxationSpec::build(f, kind);
    let cm = spec.constraint_matrix();
    let mut diag = RunDiagnostics::default();

    // Phase 1: the relaxation itself.
    let relax = relaxation_problem(&cm);
    let t = Instant::now();
    let sol1 = lp::solve(&relax, DEFAULT_TOL);
    lp_ms += t.elapsed().as_secs_f64() * 1e3;
    if !sol1.is_optimal() {
        return Err(Error::Solver(format!("relaxation LP ended {:?}", sol1.status)));
    }
    diag.relaxation_objective = Some(sol1.objective);
    let y = match y_override {
        Some(y) => {
            spec.model().validate_labeling(&y)?;
            y
        }
        None => extract_test_labeling(&sol1, spec.model(), cm.index_set()),
    };

    // Phase 2: maximum persistency over maps onto y.
    let run_l1 = |eps: Option<f64>, lp_ms: &mut f64| -> Result<L1Solved> {
        let cost_model = match eps {
            Some(e) => perturb(spec.model(), &y, e, &spec)?,
            None => spec.model().clone(),
        };
        let prog = build_l1_with(spec.clone(), cm.clone(), cost_model, &y, class, eps)?;
        let t = Instant::now();
        let out = solve_l1(&prog, DEFAULT_TOL);
        *lp_ms += t.elapsed().as_secs_f64() * 1e3;
        out
    };

    let (solved, final_mode) = match mode {
        Mode::Weak => (run_l1(None, &mut lp_ms)?, Mode::Weak),
        Mode::Strict => {
            let mut eps = match eps_policy {
                EpsPolicy::Auto => 1e-3 * (1.0 + f.max_abs_cost()) / f.num_nodes() as f64,
                EpsPolicy::Fixed(e) => e,
            };
            let mut accepted = None;
            let mut last = None;
            for _ in 0..7 {
                diag.eps_trace.push(eps);
                let cand = run_l1(Some(eps), &mut lp_ms)?;
                let t = Instant::now();
                let verdict = verify_strict_improving(
                    &spec,
                    &cand.map.to_nodewise(spec.model()),
                    DEFAULT_TOL,
                )?;
                lp_ms += t.elapsed().as_secs_f64() * 1e3;
                if verdict.is_strict_improving == Some(true) {
                    accepted = Some(cand);
                    break;
                }
                last = Some(cand);
                eps /= 2.0;
            }
            match accepted {
                Some(c) => (c, Mode::Strict),
                None => {
                    // Keep the last (smallest-eps) map, which is still weakly
                    // improving for the original costs, and say so.
                    diag.downgraded_to_weak = true;
                    diag.notes.push(
                        "strict certification failed after 6 halvings; result downgraded to weak"
                            .into(),
                    );
                    (last.expect("at least one attempt ran"), Mode::Weak)
                }
            }
        }
    };

    // The returned map must pass weak verification on the original costs.
    let t = Instant::now();
    let verdict = verify_weak_improving(
        &spec,
        &LinearMapAction::Discrete(solved.map.to_nodewise(spec.model())),
        DEFAULT_TOL,
    )?;
    lp_ms += t.elapsed().as_secs_f64() * 1e3;
    if !verdict.is_weak_improving {
        return Err(Error::NumericIntegrality(format!(
            "final map failed weak verification (objective {})",
            verdict.objective
        )));
    }
    diag.verification_objective = Some(verdict.objective);
    diag.zeta_integrality_gap = Some(solved.diagnostics.unary_integrality_gap);
    diag.lp_time_ms = lp_ms;
    diag.total_time_ms = t0.elapsed().as_secs_f64() * 1e3;

    Ok(PersistencyResult::new(
        "l1",
        kind,
        Some(class),
        final_mode,
        Some(y),
        solved.map.to_nodewise(spec.model()),
        spec.model(),
        diag,
    ))
}

/// Flip the label order of selected binary nodes (0 <-> 1), returning an
/// equivalent model; used to move an arbitrary binary test labeling to zero.
pub fn flip_binary(f: &EnergyModel, flips: &[bool]) -> Result<EnergyModel> {
    if !f.is_binary() {
        return Err(Error::invalid("flip preprocessing needs a binary model"));
    }
    if flips.len() != f.num_nodes() {
        return Err(Error::invalid("flip mask length mismatch"));
    }
    let terms = f
        .terms()
        .iter()
        .map(|t| {
            let mut table = vec![0.0; t.table_len()];
            for flat in 0..t.table_len() {
                let mut labels = t.unflatten(flat, f.label_counts());
                for (k, &s) in t.nodes.iter().enumerate() {
                    if flips[s] {
                        labels[k] = 1 - labels[k];
                    }
                }
                table[t.flat_index_local(&labels)] = t.table[flat];
            }
            (t.nodes.clone(), table)
        })
        .collect();
    EnergyModel::new(f.label_counts().to_vec(), terms)
}

/// Multilinear coefficients of a binary model, per subset of each hyperedge,
/// accumulated over overlapping tables.
fn multilinear_coefficients(
    f: &EnergyModel,
) -> std::collections::BTreeMap<Vec<usize>, f64> {
    use std::collections::BTreeMap;
    let mut eta: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for t in f.terms() {
        let arity = t.arity();
        for d_mask in 0..(1usize << arity) {
            // eta_D = sum over S subset D of (-1)^{|D\S|} f(1_S, 0 elsewhere)
            let mut coeff = 0.0;
            let d_bits: Vec<usize> = (0..arity).filter(|k| d_mask >> k & 1 == 1).collect();
            for s_bits in 0..(1usize << d_bits.len()) {
                let mut labels = vec![0usize; arity];
                let mut dropped = 0usize;
                for (b, &k) in d_bits.iter().enumerate() {
                    if s_bits >> b & 1 == 1 {
                        labels[k] = 1;
                    } else {
                        dropped += 1;
                    }
                }
                let sign = if dropped % 2 == 0 { 1.0 } else { -1.0 };
                coeff += sign * t.table[t.flat_index_local(&labels)];
            }
            if coeff != 0.0 {
                let d: Vec<usize> = d_bits.iter().map(|&k| t.nodes[k]).collect();
                *eta.entry(d).or_insert(0.0) += coeff;
            }
        }
    }
    eta.retain(|_, v| *v != 0.0);
    eta
}

/// Specialized maximum persistency for binary models with test labeling
/// zero: costs are converted to multilinear coefficients, one kept-monomial
/// indicator per hyperedge replaces the general lifted block, and the
/// improving rows collapse to one inequality per component. The result
/// matches the general construction with `y = 0`.
pub fn pseudo_boolean_l1(f: &EnergyModel, kind: RelaxKind) -> Result<PersistencyResult> {
    if !f.is_binary() {
        return Err(Error::invalid("pseudo-Boolean persistency needs a binary model"));
    }
    let t0 = Instant::now();
    let mut lp_ms = 0.0f64;
    let spec = RelaxationSpec::build(f, kind);
    let cm = spec.constraint_matrix();
    let model = spec.model().clone();
    let idx = cm.index_set();
    let eta = multilinear_coefficients(&model);
    for d in eta.keys() {
        if model.term_index(d).is_none() {
            return Err(Error::invalid(format!(
                "multilinear term {:?} falls outside the hyperedge set; \
                 use the full local relaxation (subset closure)",
                d
            )));
        }
    }
    let y = vec![0usize; model.num_nodes()];
    let zidx = ZetaIndex::new(&model, &y)?;
    let n_zeta = zidx.len();
    let n_phi = cm.rows().len();
    let mut p = LpProblem::new(n_zeta + n_phi);
    for c in 0..n_zeta {
        p.upper[c] = 1.0;
    }
    for j in n_zeta..n_zeta + n_phi {
        p.set_free(j);
    }
    for (_, _, c) in zidx.unary_coords() {
        p.objective[c] = 1.0;
    }
    let mut phi_cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); idx.len()];
    for (r, row) in cm.rows().iter().enumerate() {
        for (coord, v) in row.coords(idx) {
            phi_cols[coord].push((n_zeta + r, -v));
        }
    }
    // (1 - zeta_C) eta_C - (A^T phi)_C(1_C) >= 0 at the all-ones assignment,
    // plain -(A^T phi) >= 0 elsewhere.
    for (t, term) in model.terms().iter().enumerate() {
        let ones_flat = term.table_len() - 1;
        for flat in 0..term.table_len() {
            let mut coeffs = phi_cols[idx.coord(t, flat)].clone();
            let mut rhs = 0.0;
            if flat == ones_flat && term.arity() > 0 {
                if let Some(&e) = eta.get(&term.nodes) {
                    let coord = zidx
                        .coord(&term.nodes, &vec![1; term.arity()])
                        .expect("all-ones assignment is lifted");
                    coeffs.push((coord, -e));
                    rhs = -e;
                }
            }
            p.add_row(coeffs, RowOp::Ge, rhs);
        }
    }
    for row in zeta_constraint_rows(&zidx, &model)? {
        p.add_row(row.coeffs, RowOp::Ge, -row.constant);
    }
    let prog = L1Program {
        problem: p,
        zeta_index: zidx,
        n_zeta,
        spec: spec.clone(),
        cm,
        cost_model: model.clone(),
        class: MapClass::P2y,
        eps: None,
    };
    let t = Instant::now();
    let solved = solve_l1(&prog, DEFAULT_TOL)?;
    lp_ms += t.elapsed().as_secs_f64() * 1e3;

    let t = Instant::now();
    let verdict = verify_weak_improving(
        &spec,
        &LinearMapAction::Discrete(solved.map.to_nodewise(&model)),
        DEFAULT_TOL,
    )?;
    lp_ms += t.elapsed().as_secs_f64() * 1e3;
    if !verdict.is_weak_improving {
        return Err(Error::NumericIntegrality(
            "specialized persistency map failed verification".into(),
        ));
    }
    let diag = RunDiagnostics {
        verification_objective: Some(verdict.objective),
        zeta_integrality_gap: Some(solved.diagnostics.unary_integrality_gap),
        lp_time_ms: lp_ms,
        total_time_ms: t0.elapsed().as_secs_f64() * 1e3,
        ..Default::default()
    };
    Ok(PersistencyResult::new(
        "pbl1",
        kind,
        Some(MapClass::P2y),
        Mode::Weak,
        Some(y),
        solved.map.to_nodewise(&model),
        &model,
        diag,
    ))
}

/// Serializable record of one method run, as written next to CSV reports and
/// consumed by the re-verification command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    pub format: String,
    pub instance: String,
    pub instance_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub method: String,
    pub relaxation: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<usize>>,
    pub map: Vec<Vec<usize>>,
    pub eliminated: Vec<(usize, usize)>,
    pub n_elim: usize,
    pub completeness: f64,
    pub eps_trace: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification_objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta_integrality_gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verified_lp: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verified_oracle: Option<bool>,
    pub notes: Vec<String>,
    pub lp_time_ms: f64,
    pub total_time_ms: f64,
}

pub const RESULT_FORMAT: &str = "partopt-result 1";

impl ResultRecord {
    pub fn from_result(
        r: &PersistencyResult,
        instance: impl Into<String>,
        instance_hash: impl Into<String>,
        seed: Option<u64>,
    ) -> Self {
        ResultRecord {
            format: RESULT_FORMAT.into(),
            instance: instance.into(),
            instance_hash: instance_hash.into(),
            seed,
            method: r.method.clone(),
            relaxation: r.relaxation.as_str().into(),
            class: r.class.map(|c| c.as_str().into()),
            mode: r.mode.as_str().into(),
            y: r.y.clone(),
            map: r.map.maps().to_vec(),
            eliminated: r.eliminated.clone(),
            n_elim: r.n_elim,
            completeness: r.completeness,
            eps_trace: r.diagnostics.eps_trace.clone(),
            verification_objective: r.diagnostics.verification_objective,
            zeta_integrality_gap: r.diagnostics.zeta_integrality_gap,
            verified_lp: None,
            verified_oracle: None,
            notes: r.diagnostics.notes.clone(),
            lp_time_ms: r.diagnostics.lp_time_ms,
            total_time_ms: r.diagnostics.total_time_ms,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let rec: ResultRecord = serde_json::from_str(text)
            .map_err(|e| Error::invalid(format!("bad result record: {}", e)))?;
        if rec.format != RESULT_FORMAT {
            return Err(Error::invalid(format!(
                "unsupported record format `{}`",
                rec.format
            )));
        }
        Ok(rec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{generate, GeneratorKind, InstanceSpec, Shape};
    use crate::oracle;
    use rand::{Rng, SeedableRng};

    fn tight_chain() -> EnergyModel {
        // Two binary nodes with a unique integral optimum (0,1); the pairwise
        // relaxation is exact here.
        EnergyModel::new(
            vec![2, 2],
            vec![
                (vec![0], vec![0.0, 3.0]),
                (vec![1], vec![1.0, 0.0]),
                (vec![0, 1], vec![0.0, 0.0, 2.0, 1.0]),
            ],
        )
        .unwrap()
    }

    /// Three binary nodes in an odd frustrated cycle with zero unaries: the
    /// relaxation has a unique, fully fractional optimum.
    fn frustrated_triangle() -> EnergyModel {
        let same = vec![2.0, 0.0, 0.0, 2.0];
        EnergyModel::new(
            vec![2, 2, 2],
            vec![
                (vec![0, 1], same.clone()),
                (vec![0, 2], same.clone()),
                (vec![1, 2], same),
            ],
        )
        .unwrap()
    }

    /// The three-variable gap fixture: a one-label dummy node, a pairwise
    /// term with costs 2 and 3, a triple term with costs 1 and 4. The basic
    /// relaxation misses the coupling between pair and triple and reports 0,
    /// the exact minimum is 1.
    pub(crate) fn gap_fixture() -> EnergyModel {
        EnergyModel::new(
            vec![1, 2, 2],
            vec![
                (vec![1, 2], vec![2.0, 0.0, 0.0, 3.0]),
                (vec![0, 1, 2], vec![0.0, 1.0, 4.0, 0.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn relaxation_matches_brute_force_on_tight_instance() {
        let f = tight_chain();
        let spec = RelaxationSpec::build(&f, RelaxKind::Blp);
        let cm = spec.constraint_matrix();
        let sol = lp::solve(&relaxation_problem(&cm), DEFAULT_TOL);
        assert!(sol.is_optimal());
        let (min, optima) = oracle::all_optima(&f, None).unwrap();
        assert_eq!(optima, vec![vec![0, 1]]);
        assert!((sol.objective - min).abs() <= 1e-7 * (1.0 + min.abs()));
    }

    #[test]
    fn gap_fixture_has_loose_basic_and_tight_full_relaxation() {
        let f = gap_fixture();
        let (min, _) = oracle::all_optima(&f, None).unwrap();
        assert_eq!(min, 1.0);
        let blp = RelaxationSpec::build(&f, RelaxKind::Blp);
        let sol = lp::solve(&relaxation_problem(&blp.constraint_matrix()), DEFAULT_TOL);
        assert!(sol.is_optimal());
        assert!(sol.objective.abs() < 1e-7, "basic value {}", sol.objective);
        let flp = RelaxationSpec::build(&f, RelaxKind::Flp);
        let sol = lp::solve(&relaxation_problem(&flp.constraint_matrix()), DEFAULT_TOL);
        assert!(sol.is_optimal());
        assert!((sol.objective - 1.0).abs() < 1e-7, "full value {}", sol.objective);
    }

    #[test]
    fn identity_map_verifies_with_zero_objective() {
        let f = tight_chain();
        let spec = RelaxationSpec::build(&f, RelaxKind::Blp);
        let v = verify_weak_improving(
            &spec,
            &LinearMapAction::Discrete(NodewiseMap::identity(&f)),
            DEFAULT_TOL,
        )
        .unwrap();
        assert!(v.is_weak_improving);
        assert!(v.objective.abs() < 1e-9);
    }

    #[test]
    fn map_to_optimum_is_relaxed_improving_on_tight_instance() {
        let f = tight_chain();
        let spec = RelaxationSpec::build(&f, RelaxKind::Blp);
        let p = NodewiseMap::constant(&vec![0, 1], &f);
        let v = verify_weak_improving(&spec, &LinearMapAction::Discrete(p), DEFAULT_TOL).unwrap();
        assert!(v.is_weak_improving, "objective {}", v.objective);
    }

    #[test]
    fn map_to_suboptimal_labeling_fails_with_witness() {
        let f = tight_chain();
        let spec = RelaxationSpec::build(&f, RelaxKind::Blp);
        let p = NodewiseMap::constant(&vec![1, 0], &f);
        let v = verify_weak_improving(&spec, &LinearMapAction::Discrete(p), DEFAULT_TOL).unwrap();
        assert!(!v.is_weak_improving);
        assert!(v.witness.is_some());
        assert!(v.objective < 0.0);
    }

    #[test]
    fn lifted_actions_verify_consistently() {
        use crate::mapping::zeta_from_map;
        let f = tight_chain();
        let spec = RelaxationSpec::build(&f, RelaxKind::Blp);
        let y = vec![0, 1];
        let zidx = ZetaIndex::new(&f, &y).unwrap();
        // The integral lift must score exactly like the discrete route.
        let m = SubsetToOneMap::collapse(y.clone(), &f);
        let z = zeta_from_map(&m, zidx.clone(), &f).unwrap();
        let dv = verify_weak_improving(
            &spec,
            &LinearMapAction::Discrete(m.to_nodewise(&f)),
            DEFAULT_TOL,
        )
        .unwrap();
        let lv =
            verify_weak_improving(&spec, &LinearMapAction::Lifted(z), DEFAULT_TOL).unwrap();
        assert!((dv.objective - lv.objective).abs() < 1e-9);
        assert!(lv.is_weak_improving);
        // A convex combination of improving maps stays improving.
        let ident = SubsetToOneMap::identity(y.clone(), &f);
        let mix =
            ZetaVector::convex_combination(zidx, &[(0.5, m), (0.5, ident)], &f).unwrap();
        let mv =
            verify_weak_improving(&spec, &LinearMapAction::Lifted(mix), DEFAULT_TOL).unwrap();
        assert!(mv.is_weak_improving);
    }

    #[test]
    fn identity_is_strict_and_tied_collapse_is_not() {
        // One node, two labels, equal costs: identity is strict (the optimal
        // face is everything and stays fixed); collapsing the tie is weak
        // but not strict.
        let f = EnergyModel::new(vec![2], vec![(vec![0], vec![0.0, 0.0])]).unwrap();
        let spec = RelaxationSpec::build(&f, RelaxKind::Blp);
        let id = verify_strict_improving(&spec, &NodewiseMap::identity(&f), DEFAULT_TOL).unwrap();
        assert_eq!(id.is_strict_improving, Some(true));
        let mut collapse = NodewiseMap::identity(&f);
        collapse.set(0, 1, 0);
        let v = verify_strict_improving(&spec, &collapse, DEFAULT_TOL).unwrap();
        assert!(v.is_weak_improving);
        assert_eq!(v.is_strict_improving, Some(false));
    }

    #[test]
    fn perturbation_zero_eps_is_identity() {
        let f = tight_chain();
        let spec = RelaxationSpec::build(&f, RelaxKind::Blp);
        let g = perturb(&f, &vec![0, 1], 0.0, &spec).unwrap();
        assert_eq!(f, g);
    }

    #[test]
    fn perturbation_touches_only_test_unaries() {
        let spec_gen = InstanceSpec {
            kind: GeneratorKind::Potts,
            shape: Shape::Grid { rows: 1, cols: 3 },
            labels: 3,
            degree: 2,
            terms: 0,
            seed: 2,
        };
        let f = generate(&spec_gen).unwrap();
        let spec = RelaxationSpec::build(&f, RelaxKind::Blp);
        let y = vec![0, 1, 2];
        let eps = 0.125;
        let g = perturb(&f, &y, eps, &spec).unwrap();
        let mut changed = 0usize;
        for (tf, tg) in f.terms().iter().zip(g.terms()) {
            for (k, (a, b)) in tf.table.iter().zip(&tg.table).enumerate() {
                if a != b {
                    changed += 1;
                    assert_eq!(tf.arity(), 1);
                    assert_eq!(k, y[tf.nodes[0]]);
                    assert!((b - a - eps).abs() < 1e-12);
                }
            }
        }
        assert_eq!(changed, 3);
    }

    #[test]
    fn perturbation_vector_counts_agreements() {
        let f = EnergyModel::new(vec![2, 2, 2], vec![(vec![0, 1, 2], vec![0.0; 8])]).unwrap();
        let y = vec![1, 0, 1];
        let g = perturbation_vector(&f, &y).unwrap();
        let t = &g.terms()[g.term_index(&[0, 1, 2]).unwrap()];
        for flat in 0..8 {
            let labels = t.unflatten(flat, f.label_counts());
            let agree = labels
                .iter()
                .zip(&[1usize, 0, 1])
                .filter(|(a, b)| a == b)
                .count() as f64;
            assert_eq!(t.table[flat], agree);
            assert!((0.0..=3.0).contains(&t.table[flat]));
        }
    }

    #[test]
    fn zero_costs_let_everything_collapse() {
        let f = EnergyModel::new(vec![3, 3], vec![(vec![0, 1], vec![0.0; 9])]).unwrap();
        let prog = build_l1(&f, RelaxKind::Blp, &vec![0, 0], MapClass::P2y, false, 0.0).unwrap();
        let solved = solve_l1(&prog, DEFAULT_TOL).unwrap();
        assert!(solved.diagnostics.objective.abs() < 1e-9);
        assert_eq!(solved.map.eliminated(&f).len(), 4);
        assert!(solved.diagnostics.unary_integrality_gap <= INTEGRALITY_TOL);
    }

    #[test]
    fn tight_instance_reaches_full_completeness() {
        let f = tight_chain();
        let r = two_phase(
            &f,
            RelaxKind::Blp,
            MapClass::P2y,
            Mode::Weak,
            EpsPolicy::Auto,
            None,
        )
        .unwrap();
        assert_eq!(r.completeness, 100.0);
        assert_eq!(r.y, Some(vec![0, 1]));
        // soundness against the oracle
        assert_eq!(
            oracle::check_persistency(&f, &r.map, false, None).unwrap(),
            oracle::PersistencyVerdict::Valid
        );
    }

    #[test]
    fn fully_fractional_instance_yields_identity_for_all_or_none_maps() {
        let f = frustrated_triangle();
        let r = two_phase(
            &f,
            RelaxKind::Blp,
            MapClass::P1y,
            Mode::Weak,
            EpsPolicy::Auto,
            None,
        )
        .unwrap();
        assert_eq!(r.completeness, 0.0);
        assert!(r.map.is_identity());
    }

    #[test]
    fn strict_mode_respects_all_optima() {
        let mut checked = 0;
        for seed in 0..10u64 {
            let spec = InstanceSpec {
                kind: GeneratorKind::Full,
                shape: Shape::Grid { rows: 2, cols: 2 },
                labels: 2,
                degree: 2,
                terms: 0,
                seed,
            };
            let f = generate(&spec).unwrap();
            let r = two_phase(
                &f,
                RelaxKind::Flp,
                MapClass::P2y,
                Mode::Strict,
                EpsPolicy::Auto,
                None,
            )
            .unwrap();
            if r.mode == Mode::Strict && r.n_elim > 0 {
                checked += 1;
                assert_eq!(
                    oracle::check_persistency(&f, &r.map, true, None).unwrap(),
                    oracle::PersistencyVerdict::Valid,
                    "seed {}",
                    seed
                );
            }
        }
        assert!(checked > 0, "no strict eliminations in the sample");
    }

    #[test]
    fn strict_results_are_subsets_of_weak_results() {
        for seed in 0..8u64 {
            let spec = InstanceSpec {
                kind: GeneratorKind::Potts,
                shape: Shape::Grid { rows: 2, cols: 2 },
                labels: 2,
                degree: 2,
                terms: 0,
                seed,
            };
            let f = generate(&spec).unwrap();
            let weak = two_phase(&f, RelaxKind::Flp, MapClass::P2y, Mode::Weak, EpsPolicy::Auto, None)
                .unwrap();
            let strict = two_phase(
                &f,
                RelaxKind::Flp,
                MapClass::P2y,
                Mode::Strict,
                EpsPolicy::Auto,
                None,
            )
            .unwrap();
            if strict.mode != Mode::Strict {
                continue;
            }
            for e in &strict.eliminated {
                assert!(
                    weak.eliminated.contains(e),
                    "seed {}: strict eliminated {:?} not in weak set",
                    seed,
                    e
                );
            }
        }
    }

    #[test]
    fn l1_dominates_hand_built_improving_maps() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for seed in 0..6u64 {
            let gen = InstanceSpec {
                kind: GeneratorKind::Full,
                shape: Shape::Grid { rows: 2, cols: 2 },
                labels: 3,
                degree: 2,
                terms: 0,
                seed,
            };
            let f = generate(&gen).unwrap();
            let r = two_phase(&f, RelaxKind::Flp, MapClass::P2y, Mode::Weak, EpsPolicy::Auto, None)
                .unwrap();
            let y = r.y.clone().unwrap();
            let spec = RelaxationSpec::build(&f, RelaxKind::Flp);
            for _ in 0..10 {
                let keep: Vec<Vec<bool>> = (0..4)
                    .map(|_| (0..3).map(|_| rng.gen_bool(0.6)).collect())
                    .collect();
                let q = SubsetToOneMap::new(y.clone(), keep, &f).unwrap();
                let v = verify_weak_improving(
                    &spec,
                    &LinearMapAction::Discrete(q.to_nodewise(&f)),
                    DEFAULT_TOL,
                )
                .unwrap();
                if v.is_weak_improving {
                    assert!(
                        r.n_elim >= q.eliminated(&f).len(),
                        "seed {}: maximum run eliminated {} but a feasible map got {}",
                        seed,
                        r.n_elim,
                        q.eliminated(&f).len()
                    );
                }
            }
        }
    }

    #[test]
    fn nonnegative_polynomials_collapse_to_zero() {
        // All-positive multilinear coefficients: all-zeros is the unique
        // optimum and everything maps to it.
        let f = EnergyModel::new(
            vec![2, 2, 2],
            vec![
                (vec![0], vec![0.0, 2.0]),
                (vec![1], vec![0.0, 1.0]),
                (vec![2], vec![0.0, 3.0]),
                (vec![0, 1], vec![0.0, 0.0, 0.0, 4.0]),
                (vec![0, 1, 2], vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 5.0]),
            ],
        )
        .unwrap();
        let r = pseudo_boolean_l1(&f, RelaxKind::Flp).unwrap();
        assert_eq!(r.completeness, 100.0);
    }

    #[test]
    fn specialized_and_generic_builders_agree() {
        for seed in 0..10u64 {
            let gen = InstanceSpec {
                kind: GeneratorKind::Polynomial,
                shape: Shape::Nodes(6),
                labels: 2,
                degree: 3,
                terms: 8,
                seed,
            };
            let f = generate(&gen).unwrap();
            let special = pseudo_boolean_l1(&f, RelaxKind::Flp).unwrap();
            let generic = two_phase(
                &f,
                RelaxKind::Flp,
                MapClass::P2y,
                Mode::Weak,
                EpsPolicy::Auto,
                Some(vec![0; 6]),
            )
            .unwrap();
            assert_eq!(
                special.eliminated, generic.eliminated,
                "seed {}: specialized {:?} vs generic {:?}",
                seed, special.eliminated, generic.eliminated
            );
        }
    }

    #[test]
    fn flip_preprocessing_preserves_energies() {
        let gen = InstanceSpec {
            kind: GeneratorKind::Polynomial,
            shape: Shape::Nodes(5),
            labels: 2,
            degree: 3,
            terms: 6,
            seed: 12,
        };
        let f = generate(&gen).unwrap();
        let flips = vec![true, false, true, true, false];
        let g = flip_binary(&f, &flips).unwrap();
        for bits in 0..32usize {
            let x: Labeling = (0..5).map(|s| bits >> s & 1).collect();
            let fx: Labeling = x
                .iter()
                .zip(&flips)
                .map(|(&l, &fl)| if fl { 1 - l } else { l })
                .collect();
            assert_eq!(f.evaluate(&x).unwrap(), g.evaluate(&fx).unwrap());
        }
        // flipping twice is the identity
        assert_eq!(flip_binary(&g, &flips).unwrap(), f);
    }

    #[test]
    fn flip_moves_the_optimum_to_zero() {
        // A model whose optimum is all-ones; flipping every node lets the
        // zero-labeling specialization find it.
        let f = EnergyModel::new(
            vec![2, 2],
            vec![
                (vec![0], vec![5.0, 0.0]),
                (vec![1], vec![5.0, 0.0]),
                (vec![0, 1], vec![0.0, 2.0, 2.0, 0.0]),
            ],
        )
        .unwrap();
        let flips = vec![true, true];
        let g = flip_binary(&f, &flips).unwrap();
        let r = pseudo_boolean_l1(&g, RelaxKind::Flp).unwrap();
        assert_eq!(r.completeness, 100.0);
        // mapping back: eliminating label 1 of the flipped model pins the
        // original to label 1
        let (_, optima) = oracle::all_optima(&f, None).unwrap();
        assert_eq!(optima, vec![vec![1, 1]]);
    }

    #[test]
    fn result_record_round_trips() {
        let f = tight_chain();
        let r = two_phase(&f, RelaxKind::Blp, MapClass::P2y, Mode::Weak, EpsPolicy::Auto, None)
            .unwrap();
        let rec = ResultRecord::from_result(&r, "toy.hem", f.instance_hash(), Some(7));
        let back = ResultRecord::from_json(&rec.to_json()).unwrap();
        assert_eq!(back.method, "l1");
        assert_eq!(back.n_elim, rec.n_elim);
        assert_eq!(back.map, r.map.maps());
    }

    #[test]
    fn l1_dump_legend_covers_all_columns() {
        let f = tight_chain();
        let prog = build_l1(&f, RelaxKind::Blp, &vec![0, 1], MapClass::P2y, false, 0.0).unwrap();
        assert_eq!(prog.column_legend().len(), prog.problem.ncols);
        let mut buf = Vec::new();
        prog.problem.write_listing(&mut buf).unwrap();
        assert!(!buf.is_empty());
    }
}
