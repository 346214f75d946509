//! Reference persistency methods for comparison: simple and pairwise
//! dead-end elimination, iterative pruning through an auxiliary energy, and
//! roof-dual style persistency for binary pairwise models read off the
//! relaxation's optimal face.

use std::time::Instant;

use crate::energy::{EnergyModel, Labeling};
use crate::error::{Error, Result};
use crate::lp::{self, LpSolution};
use crate::mapping::NodewiseMap;
use crate::persistency::{
    extract_test_labeling, relaxation_problem, Mode, PersistencyResult, RunDiagnostics,
    DEFAULT_TOL,
};
use crate::relaxation::{IndexSet, RelaxKind, RelaxationSpec};

fn require_pairwise(f: &EnergyModel) -> Result<()> {
    if !f.is_pairwise() {
        return Err(Error::invalid("this method needs a pairwise model"));
    }
    Ok(())
}

/// Elimination margin policy. The non-strict variant accepts ties (margin
/// `>= 0`), which still preserves some optimum when eliminations are masked
/// sequentially; the default requires a strictly positive margin so tied
/// labels survive.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum TiePolicy {
    StrictMargin,
    #[cfg_attr(not(test), allow(dead_code))]
    AllowTies,
}

impl TiePolicy {
    fn eliminates(&self, margin: f64) -> bool {
        match self {
            TiePolicy::StrictMargin => margin > 0.0,
            TiePolicy::AllowTies => margin >= 0.0,
        }
    }
}

struct DeeState {
    alive: Vec<Vec<bool>>,
    /// Composed per-step switches, in application order.
    map: NodewiseMap,
}

impl DeeState {
    fn new(f: &EnergyModel) -> Self {
        DeeState {
            alive: (0..f.num_nodes())
                .map(|s| vec![true; f.label_count(s)])
                .collect(),
            map: NodewiseMap::identity(f),
        }
    }

    fn eliminate(&mut self, s: usize, from: usize, to: usize) {
        self.alive[s][from] = false;
        self.map.set(s, from, to);
    }

    fn finish(self, f: &EnergyModel, relaxation: RelaxKind, diag: RunDiagnostics, method: &str)
        -> PersistencyResult {
        // Chase elimination chains onto surviving labels.
        let map = self.map.idempotent_power();
        PersistencyResult::new(method, relaxation, None, Mode::Weak, None, map, f, diag)
    }
}

/// `min over alive x_t of f_st(alpha, x_t) - f_st(beta, x_t)`.
fn min_pair_diff(
    f: &EnergyModel,
    alive: &[Vec<bool>],
    s: usize,
    t: usize,
    alpha: usize,
    beta: usize,
) -> f64 {
    let mut best = f64::INFINITY;
    for j in 0..f.label_count(t) {
        if !alive[t][j] {
            continue;
        }
        best = best.min(f.edge_cost(s, t, alpha, j) - f.edge_cost(s, t, beta, j));
    }
    best
}

fn dee_run(f: &EnergyModel, policy: TiePolicy, with_pairs: bool) -> Result<PersistencyResult> {
    require_pairwise(f)?;
    let t0 = Instant::now();
    let nb = f.pairwise_neighbors();
    let mut st = DeeState::new(f);
    loop {
        let mut changed = false;
        // Single-label condition: switching alpha -> beta never hurts,
        // whatever the neighbors do.
        for s in 0..f.num_nodes() {
            for alpha in 0..f.label_count(s) {
                if !st.alive[s][alpha] {
                    continue;
                }
                for beta in 0..f.label_count(s) {
                    if beta == alpha || !st.alive[s][beta] {
                        continue;
                    }
                    let us = f.term(f.unary_term(s)).table[alpha]
                        - f.term(f.unary_term(s)).table[beta];
                    let margin: f64 = us
                        + nb[s]
                            .iter()
                            .map(|&t| min_pair_diff(f, &st.alive, s, t, alpha, beta))
                            .sum::<f64>();
                    if policy.eliminates(margin) {
                        st.eliminate(s, alpha, beta);
                        changed = true;
                        break;
                    }
                }
            }
        }
        // Pairwise condition: alpha_s can go when, for some beta_s, every
        // surviving neighbor label alpha_t admits a joint switch
        // (alpha_s, alpha_t) -> (beta_s, beta_t) that never hurts.
        if with_pairs {
            for s in 0..f.num_nodes() {
                for &t in &nb[s] {
                    for alpha_s in 0..f.label_count(s) {
                        if !st.alive[s][alpha_s] {
                            continue;
                        }
                        'beta: for beta_s in 0..f.label_count(s) {
                            if beta_s == alpha_s || !st.alive[s][beta_s] {
                                continue;
                            }
                            let u_s = f.term(f.unary_term(s)).table[alpha_s]
                                - f.term(f.unary_term(s)).table[beta_s];
                            let ctx_s: f64 = nb[s]
                                .iter()
                                .filter(|&&tp| tp != t)
                                .map(|&tp| min_pair_diff(f, &st.alive, s, tp, alpha_s, beta_s))
                                .sum();
                            let mut all_covered = true;
                            for alpha_t in 0..f.label_count(t) {
                                if !st.alive[t][alpha_t] {
                                    continue;
                                }
                                let mut some_beta = false;
                                for beta_t in 0..f.label_count(t) {
                                    if !st.alive[t][beta_t] {
                                        continue;
                                    }
                                    let u_t = f.term(f.unary_term(t)).table[alpha_t]
                                        - f.term(f.unary_term(t)).table[beta_t];
                                    let ctx_t: f64 = nb[t]
                                        .iter()
                                        .filter(|&&tp| tp != s)
                                        .map(|&tp| {
                                            min_pair_diff(f, &st.alive, t, tp, alpha_t, beta_t)
                                        })
                                        .sum();
                                    let pair = f.edge_cost(s, t, alpha_s, alpha_t)
                                        - f.edge_cost(s, t, beta_s, beta_t);
                                    if policy.eliminates(u_s + u_t + pair + ctx_s + ctx_t) {
                                        some_beta = true;
                                        break;
                                    }
                                }
                                if !some_beta {
                                    all_covered = false;
                                    break;
                                }
                            }
                            if all_covered {
                                st.eliminate(s, alpha_s, beta_s);
                                changed = true;
                                break 'beta;
                            }
                        }
                    }
                }
            }
        }
        if !changed {
            break;
        }
    }
    let diag = RunDiagnostics {
        total_time_ms: t0.elapsed().as_secs_f64() * 1e3,
        ..Default::default()
    };
    Ok(st.finish(f, RelaxKind::Flp, diag, if with_pairs { "dee2" } else { "dee1" }))
}

/// Simple dead-end elimination: a label is removed when switching it to some
/// other surviving label never increases the energy, with a strictly
/// positive margin (ties survive). Iterates to a fixpoint; earlier
/// eliminations are masked out of later minimizations.
pub fn dee1(f: &EnergyModel) -> Result<PersistencyResult> {
    dee_run(f, TiePolicy::StrictMargin, false)
}

/// Dead-end elimination including the pairwise joint-switch condition. Not
/// covered by the relaxed-improving certificate; soundness is checked
/// against the oracle only.
pub fn dee2(f: &EnergyModel) -> Result<PersistencyResult> {
    dee_run(f, TiePolicy::StrictMargin, true)
}

#[cfg(test)]
pub(crate) fn dee1_with_ties(f: &EnergyModel) -> Result<PersistencyResult> {
    dee_run(f, TiePolicy::AllowTies, false)
}

/// Auxiliary energy for a fixed region and labeling: inside the region it is
/// the original cost, boundary edges are flattened to the best case for the
/// kept labeling and the worst case for others, everything else is dropped.
fn auxiliary_energy(f: &EnergyModel, region: &[bool], y: &Labeling) -> EnergyModel {
    let terms = f
        .terms()
        .iter()
        .filter_map(|t| {
            match t.arity() {
                0 => Some((t.nodes.clone(), t.table.clone())),
                1 => {
                    let s = t.nodes[0];
                    if region[s] {
                        Some((t.nodes.clone(), t.table.clone()))
                    } else {
                        None
                    }
                }
                2 => {
                    let (s, t_node) = (t.nodes[0], t.nodes[1]);
                    match (region[s], region[t_node]) {
                        (true, true) => Some((t.nodes.clone(), t.table.clone())),
                        (false, false) => None,
                        (inside_first, _) => {
                            // one endpoint inside: for its kept label take the
                            // worst partner, otherwise the best partner
                            let (ks, kt) = (f.label_count(s), f.label_count(t_node));
                            let mut table = vec![0.0; ks * kt];
                            for i in 0..ks {
                                for j in 0..kt {
                                    let v = if inside_first {
                                        let vals =
                                            (0..kt).map(|jp| t.table[i * kt + jp]);
                                        if i == y[s] {
                                            vals.fold(f64::NEG_INFINITY, f64::max)
                                        } else {
                                            vals.fold(f64::INFINITY, f64::min)
                                        }
                                    } else {
                                        let vals =
                                            (0..ks).map(|ip| t.table[ip * kt + j]);
                                        if j == y[t_node] {
                                            vals.fold(f64::NEG_INFINITY, f64::max)
                                        } else {
                                            vals.fold(f64::INFINITY, f64::min)
                                        }
                                    };
                                    table[i * kt + j] = v;
                                }
                            }
                            Some((t.nodes.clone(), table))
                        }
                    }
                }
                _ => unreachable!("pairwise guard"),
            }
        })
        .collect();
    EnergyModel::new(f.label_counts().to_vec(), terms).expect("auxiliary model is valid")
}

fn solve_relaxation(
    spec: &RelaxationSpec,
) -> Result<(LpSolution, IndexSet)> {
    let cm = spec.constraint_matrix();
    let sol = lp::solve(&relaxation_problem(&cm), DEFAULT_TOL);
    if !sol.is_optimal() {
        return Err(Error::Solver(format!("relaxation LP ended {:?}", sol.status)));
    }
    Ok((sol, cm.index_set().clone()))
}

fn integral_nodes(sol: &LpSolution, model: &EnergyModel, idx: &IndexSet) -> Vec<Option<usize>> {
    (0..model.num_nodes())
        .map(|s| {
            let base = idx.coord(model.unary_term(s), 0);
            (0..model.label_count(s)).find(|&i| (sol.x[base + i] - 1.0).abs() <= 1e-6)
        })
        .collect()
}

/// Iterative pruning: seed the region with the integral nodes of the
/// relaxed solution, then repeatedly solve the relaxation of the auxiliary
/// energy; stop when the kept labeling attains its optimum (and overwrite
/// the region), otherwise shrink the region to the nodes the auxiliary
/// solution confirms.
pub fn iterative_pruning(f: &EnergyModel, kind: RelaxKind) -> Result<PersistencyResult> {
    require_pairwise(f)?;
    let t0 = Instant::now();
    let mut lp_ms = 0.0;
    let spec = RelaxationSpec::build(f, kind);
    let t = Instant::now();
    let (sol, idx) = solve_relaxation(&spec)?;
    lp_ms += t.elapsed().as_secs_f64() * 1e3;
    let y = extract_test_labeling(&sol, spec.model(), &idx);
    let ints = integral_nodes(&sol, spec.model(), &idx);
    let mut region: Vec<bool> = ints.iter().map(|i| i.is_some()).collect();

    let mut iterations = 0usize;
    let map = loop {
        iterations += 1;
        if !region.iter().any(|&r| r) || iterations > f.num_nodes() + 1 {
            break NodewiseMap::identity(f);
        }
        let g = auxiliary_energy(f, &region, &y);
        let gspec = RelaxationSpec::build(&g, kind);
        let t = Instant::now();
        let (gsol, gidx) = solve_relaxation(&gspec)?;
        lp_ms += t.elapsed().as_secs_f64() * 1e3;
        let value = gsol.objective;
        // E_g(y) only depends on the region part of y: boundary rows are
        // flat and outside terms are zero.
        let kept_value = g.evaluate(&y)?;
        let scale = 1.0 + g.max_abs_cost();
        if kept_value <= value + 1e-7 * scale {
            // The kept labeling attains the auxiliary optimum: overwrite the
            // region with it.
            let mut p = NodewiseMap::identity(f);
            for s in 0..f.num_nodes() {
                if region[s] {
                    for i in 0..f.label_count(s) {
                        p.set(s, i, y[s]);
                    }
                }
            }
            break p;
        }
        // Shrink to nodes the auxiliary relaxation confirms integrally.
        let g_ints = integral_nodes(&gsol, gspec.model(), &gidx);
        let mut next: Vec<bool> = (0..f.num_nodes())
            .map(|s| region[s] && g_ints[s] == Some(y[s]))
            .collect();
        if next == region {
            // No shrink without attainment means numerical stalling; bail to
            // the empty region.
            next = vec![false; f.num_nodes()];
        }
        region = next;
    };

    let diag = RunDiagnostics {
        relaxation_objective: Some(sol.objective),
        lp_time_ms: lp_ms,
        total_time_ms: t0.elapsed().as_secs_f64() * 1e3,
        ..Default::default()
    };
    Ok(PersistencyResult::new(
        "pruning",
        kind,
        None,
        Mode::Weak,
        Some(y),
        map,
        f,
        diag,
    ))
}

/// Roof-dual style persistency for binary pairwise models, read off the
/// relaxation's optimal face. Weak mode fixes a node when exactly one of its
/// labels can be forced to one somewhere on the face; strong mode fixes a
/// node when the union-of-optima support is a singleton.
pub fn roof_dual_persistency(f: &EnergyModel, mode: Mode) -> Result<PersistencyResult> {
    require_pairwise(f)?;
    if !f.is_binary() {
        return Err(Error::invalid("roof-dual persistency needs a binary model"));
    }
    let t0 = Instant::now();
    let mut lp_ms = 0.0;
    let spec = RelaxationSpec::build(f, RelaxKind::Flp);
    let cm = spec.constraint_matrix();
    let problem = relaxation_problem(&cm);
    let t = Instant::now();
    let sol = lp::solve(&problem, DEFAULT_TOL);
    lp_ms += t.elapsed().as_secs_f64() * 1e3;
    if !sol.is_optimal() {
        return Err(Error::Solver(format!("relaxation LP ended {:?}", sol.status)));
    }
    let idx = cm.index_set();
    let unary_coords: Vec<usize> = (0..f.num_nodes())
        .flat_map(|s| {
            let base = idx.coord(spec.model().unary_term(s), 0);
            vec![base, base + 1]
        })
        .collect();
    let mut map = NodewiseMap::identity(f);
    let t = Instant::now();
    match mode {
        Mode::Weak => {
            let maxima = lp::face_coordinate_max(&problem, &sol, &unary_coords, DEFAULT_TOL)?;
            for s in 0..f.num_nodes() {
                let can0 = maxima[2 * s] >= 1.0 - 1e-6;
                let can1 = maxima[2 * s + 1] >= 1.0 - 1e-6;
                match (can0, can1) {
                    (true, false) => map.set(s, 1, 0),
                    (false, true) => map.set(s, 0, 1),
                    _ => {}
                }
            }
        }
        Mode::Strict => {
            let support = lp::optimal_support(&problem, &sol, &unary_coords, 1e-7)?;
            for s in 0..f.num_nodes() {
                match (support[2 * s], support[2 * s + 1]) {
                    (true, false) => map.set(s, 1, 0),
                    (false, true) => map.set(s, 0, 1),
                    _ => {}
                }
            }
        }
    }
    lp_ms += t.elapsed().as_secs_f64() * 1e3;
    let diag = RunDiagnostics {
        relaxation_objective: Some(sol.objective),
        lp_time_ms: lp_ms,
        total_time_ms: t0.elapsed().as_secs_f64() * 1e3,
        ..Default::default()
    };
    Ok(PersistencyResult::new(
        "roofdual",
        RelaxKind::Flp,
        None,
        mode,
        None,
        map,
        f,
        diag,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{generate, GeneratorKind, InstanceSpec, Shape};
    use crate::oracle::{self, PersistencyVerdict};
    use crate::persistency::{
        two_phase, verify_weak_improving, EpsPolicy, LinearMapAction, MapClass,
    };

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

    #[test]
    fn dee_eliminates_dominated_unary_label() {
        let f = EnergyModel::new(vec![2], vec![(vec![0], vec![0.0, 10.0])]).unwrap();
        let r = dee1(&f).unwrap();
        assert_eq!(r.eliminated, vec![(0, 1)]);
        assert_eq!(r.completeness, 100.0);
    }

    #[test]
    fn dee_keeps_ties_by_default() {
        let f = EnergyModel::new(vec![2], vec![(vec![0], vec![0.0, 0.0])]).unwrap();
        let r = dee1(&f).unwrap();
        assert_eq!(r.n_elim, 0);
        // The tie-accepting policy does eliminate, and stays weakly sound.
        let r2 = dee1_with_ties(&f).unwrap();
        assert_eq!(r2.n_elim, 1);
        assert_eq!(
            oracle::check_persistency(&f, &r2.map, false, None).unwrap(),
            PersistencyVerdict::Valid
        );
    }

    #[test]
    fn both_tie_policies_are_weakly_sound() {
        for seed in 0..15u64 {
            let spec = InstanceSpec {
                kind: GeneratorKind::Potts,
                shape: Shape::Grid { rows: 2, cols: 3 },
                labels: 3,
                degree: 2,
                terms: 0,
                seed,
            };
            let f = generate(&spec).unwrap();
            for r in [dee1(&f).unwrap(), dee1_with_ties(&f).unwrap()] {
                assert_eq!(
                    oracle::check_persistency(&f, &r.map, false, None).unwrap(),
                    PersistencyVerdict::Valid,
                    "seed {}",
                    seed
                );
            }
        }
    }

    #[test]
    fn dee_rejects_higher_order_models() {
        let f = EnergyModel::new(vec![2, 2, 2], vec![(vec![0, 1, 2], vec![0.0; 8])]).unwrap();
        assert!(dee1(&f).is_err());
        assert!(dee2(&f).is_err());
    }

    #[test]
    fn dee_map_is_relaxed_improving() {
        for seed in 0..10u64 {
            let spec = InstanceSpec {
                kind: GeneratorKind::Full,
                shape: Shape::Grid { rows: 2, cols: 2 },
                labels: 3,
                degree: 2,
                terms: 0,
                seed,
            };
            let f = generate(&spec).unwrap();
            let r = dee1(&f).unwrap();
            let rspec = RelaxationSpec::build(&f, RelaxKind::Flp);
            let v = verify_weak_improving(
                &rspec,
                &LinearMapAction::Discrete(r.map.clone()),
                DEFAULT_TOL,
            )
            .unwrap();
            assert!(
                v.is_weak_improving && v.objective >= -1e-7 * (1.0 + f.max_abs_cost()),
                "seed {} objective {}",
                seed,
                v.objective
            );
        }
    }

    #[test]
    fn dee2_covers_dee1_and_dominated_pairs() {
        // Pair condition example: two nodes where the joint switch
        // (1,1) -> (0,0) always pays off but no single switch does.
        let f = EnergyModel::new(
            vec![2, 2],
            vec![
                (vec![0], vec![0.0, 0.0]),
                (vec![1], vec![0.0, 0.0]),
                (vec![0, 1], vec![0.0, 2.0, 2.0, 3.0]),
            ],
        )
        .unwrap();
        let r1 = dee1(&f).unwrap();
        let r2 = dee2(&f).unwrap();
        for e in &r1.eliminated {
            assert!(r2.eliminated.contains(e));
        }
        assert!(r2.n_elim >= 1, "pair condition should fire");
        assert_eq!(
            oracle::check_persistency(&f, &r2.map, false, None).unwrap(),
            PersistencyVerdict::Valid
        );
    }

    #[test]
    fn dee2_superset_and_soundness_on_random_instances() {
        for seed in 0..10u64 {
            let spec = InstanceSpec {
                kind: GeneratorKind::Full,
                shape: Shape::Grid { rows: 2, cols: 2 },
                labels: 3,
                degree: 2,
                terms: 0,
                seed: seed + 100,
            };
            let f = generate(&spec).unwrap();
            let r1 = dee1(&f).unwrap();
            let r2 = dee2(&f).unwrap();
            for e in &r1.eliminated {
                assert!(r2.eliminated.contains(e), "seed {}", seed);
            }
            assert_eq!(
                oracle::check_persistency(&f, &r2.map, false, None).unwrap(),
                PersistencyVerdict::Valid,
                "seed {}",
                seed
            );
        }
    }

    #[test]
    fn pruning_solves_tight_instances_completely() {
        let f = EnergyModel::new(
            vec![2, 2],
            vec![
                (vec![0], vec![0.0, 3.0]),
                (vec![1], vec![1.0, 0.0]),
                (vec![0, 1], vec![0.0, 0.0, 2.0, 1.0]),
            ],
        )
        .unwrap();
        let r = iterative_pruning(&f, RelaxKind::Flp).unwrap();
        assert_eq!(r.completeness, 100.0);
        assert_eq!(
            oracle::check_persistency(&f, &r.map, false, None).unwrap(),
            PersistencyVerdict::Valid
        );
    }

    #[test]
    fn pruning_returns_identity_on_fully_fractional_instances() {
        let f = frustrated_triangle();
        let r = iterative_pruning(&f, RelaxKind::Flp).unwrap();
        assert!(r.map.is_identity());
        assert_eq!(r.completeness, 0.0);
    }

    #[test]
    fn pruning_map_is_relaxed_improving() {
        for seed in 0..10u64 {
            let spec = InstanceSpec {
                kind: GeneratorKind::Potts,
                shape: Shape::Grid { rows: 2, cols: 2 },
                labels: 3,
                degree: 2,
                terms: 0,
                seed,
            };
            let f = generate(&spec).unwrap();
            let r = iterative_pruning(&f, RelaxKind::Flp).unwrap();
            let rspec = RelaxationSpec::build(&f, RelaxKind::Flp);
            let v = verify_weak_improving(
                &rspec,
                &LinearMapAction::Discrete(r.map.clone()),
                DEFAULT_TOL,
            )
            .unwrap();
            assert!(v.is_weak_improving, "seed {} objective {}", seed, v.objective);
            assert_eq!(
                oracle::check_persistency(&f, &r.map, false, None).unwrap(),
                PersistencyVerdict::Valid,
                "seed {}",
                seed
            );
        }
    }

    #[test]
    fn maximum_persistency_dominates_pruning() {
        for seed in 0..8u64 {
            let spec = InstanceSpec {
                kind: GeneratorKind::Potts,
                shape: Shape::Grid { rows: 2, cols: 2 },
                labels: 2,
                degree: 2,
                terms: 0,
                seed: 40 + seed,
            };
            let f = generate(&spec).unwrap();
            let pruned = iterative_pruning(&f, RelaxKind::Flp).unwrap();
            let l1 = two_phase(
                &f,
                RelaxKind::Flp,
                MapClass::P2y,
                Mode::Weak,
                EpsPolicy::Auto,
                None,
            )
            .unwrap();
            assert!(
                l1.completeness >= pruned.completeness - 1e-9,
                "seed {}: {} < {}",
                seed,
                l1.completeness,
                pruned.completeness
            );
        }
    }

    #[test]
    fn roof_dual_recovers_tight_submodular_instances() {
        // Attractive (submodular) binary model with a unique optimum.
        let f = EnergyModel::new(
            vec![2, 2, 2],
            vec![
                (vec![0], vec![0.0, 5.0]),
                (vec![1], vec![2.0, 1.0]),
                (vec![2], vec![3.0, 0.0]),
                (vec![0, 1], vec![0.0, 1.0, 1.0, 0.0]),
                (vec![1, 2], vec![0.0, 1.0, 1.0, 0.0]),
            ],
        )
        .unwrap();
        for mode in [Mode::Weak, Mode::Strict] {
            let r = roof_dual_persistency(&f, mode).unwrap();
            assert_eq!(r.completeness, 100.0, "mode {:?}", mode);
            assert_eq!(
                oracle::check_persistency(&f, &r.map, mode == Mode::Strict, None).unwrap(),
                PersistencyVerdict::Valid
            );
        }
    }

    #[test]
    fn roof_dual_fixes_nothing_on_frustrated_cycle() {
        let f = frustrated_triangle();
        for mode in [Mode::Weak, Mode::Strict] {
            let r = roof_dual_persistency(&f, mode).unwrap();
            assert_eq!(r.n_elim, 0, "mode {:?}", mode);
        }
        // ground truth: six tied optima, none of the nodes determined
        let (_, optima) = oracle::all_optima(&f, None).unwrap();
        assert_eq!(optima.len(), 6);
    }

    #[test]
    fn roof_dual_rejects_non_binary_models() {
        let f = EnergyModel::new(vec![3, 3], vec![(vec![0, 1], vec![0.0; 9])]).unwrap();
        assert!(roof_dual_persistency(&f, Mode::Weak).is_err());
    }

    #[test]
    fn roof_dual_strong_matches_strict_maximum_persistency() {
        for seed in 0..8u64 {
            let spec = InstanceSpec {
                kind: GeneratorKind::Full,
                shape: Shape::Grid { rows: 2, cols: 2 },
                labels: 2,
                degree: 2,
                terms: 0,
                seed: 200 + seed,
            };
            let f = generate(&spec).unwrap();
            let rd = roof_dual_persistency(&f, Mode::Strict).unwrap();
            let l1 = two_phase(
                &f,
                RelaxKind::Flp,
                MapClass::P2y,
                Mode::Strict,
                EpsPolicy::Auto,
                None,
            )
            .unwrap();
            assert_eq!(l1.mode, Mode::Strict, "seed {}: certification failed", seed);
            assert_eq!(
                rd.eliminated, l1.eliminated,
                "seed {}: roof-dual {:?} vs maximum {:?}",
                seed, rd.eliminated, l1.eliminated
            );
        }
    }
}
