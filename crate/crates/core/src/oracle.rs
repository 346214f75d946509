//! Brute-force ground truth: exact minimization by enumeration, improving-map
//! checks, persistency verdicts, and small-clique checks of the lifted
//! product polytope.

use crate::energy::{EnergyModel, Labeling};
use crate::error::{Error, Result};
use crate::lp::{self, LpProblem, LpStatus, RowOp};
use crate::mapping::NodewiseMap;

/// Default cap on the number of labelings enumerated exactly.
pub const DEFAULT_ENUM_CAP: u128 = 1 << 20;

fn check_cap(f: &EnergyModel, cap: Option<u128>) -> Result<u128> {
    let size = f.labeling_space();
    let cap = cap.unwrap_or(DEFAULT_ENUM_CAP);
    if size > cap {
        return Err(Error::CapExceeded { size, cap });
    }
    Ok(size)
}

fn first_labeling(f: &EnergyModel) -> Labeling {
    vec![0; f.num_nodes()]
}

/// Lexicographic successor with the last node's label fastest.
fn advance(x: &mut Labeling, f: &EnergyModel) -> bool {
    for s in (0..x.len()).rev() {
        x[s] += 1;
        if x[s] < f.label_count(s) {
            return true;
        }
        x[s] = 0;
    }
    false
}

/// Equality tolerance for "is an optimum": exact on integer-cost models,
/// relative 1e-9 otherwise.
fn optimum_tolerance(f: &EnergyModel) -> f64 {
    if f.has_integer_costs() {
        0.0
    } else {
        1e-9 * (1.0 + f.max_abs_cost())
    }
}

fn enumerate_range(
    f: &EnergyModel,
    mut x: Labeling,
    count: usize,
    tol: f64,
) -> (f64, Vec<Labeling>) {
    let mut best = f64::INFINITY;
    let mut optima: Vec<Labeling> = Vec::new();
    for _ in 0..count {
        let e = f.evaluate_unchecked(&x);
        if e < best - tol {
            best = e;
            optima.clear();
            optima.push(x.clone());
        } else if e <= best + tol {
            optima.push(x.clone());
            if e < best {
                best = e;
            }
        }
        if !advance(&mut x, f) {
            break;
        }
    }
    (best, optima)
}

fn labeling_at(f: &EnergyModel, mut index: u128) -> Labeling {
    let n = f.num_nodes();
    let mut x = vec![0usize; n];
    for s in (0..n).rev() {
        let k = f.label_count(s) as u128;
        x[s] = (index % k) as usize;
        index /= k;
    }
    x
}

/// Exact minimum and the full list of optimal labelings, by enumeration.
/// Refuses when the labeling space exceeds `cap` (default `2^20`). Large
/// spaces are partitioned across worker threads and merged deterministically.
pub fn all_optima(f: &EnergyModel, cap: Option<u128>) -> Result<(f64, Vec<Labeling>)> {
    let size = check_cap(f, cap)? as usize;
    let tol = optimum_tolerance(f);
    let threads = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(8);
    if size < (1 << 14) || threads < 2 {
        let (best, mut optima) = enumerate_range(f, first_labeling(f), size, tol);
        optima.retain(|x| f.evaluate_unchecked(x) <= best + tol);
        return Ok((best, optima));
    }
    let chunk = size.div_ceil(threads);
    let mut parts: Vec<(f64, Vec<Labeling>)> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for t in 0..threads {
            let start = t * chunk;
            if start >= size {
                break;
            }
            let count = chunk.min(size - start);
            let x0 = labeling_at(f, start as u128);
            handles.push(scope.spawn(move || enumerate_range(f, x0, count, tol)));
        }
        for h in handles {
            parts.push(h.join().expect("enumeration worker panicked"));
        }
    });
    let best = parts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let mut optima: Vec<Labeling> = parts
        .into_iter()
        .flat_map(|(_, xs)| xs)
        .filter(|x| f.evaluate_unchecked(x) <= best + tol)
        .collect();
    optima.sort();
    Ok((best, optima))
}

/// `E(p(x)) <= E(x)` for every labeling.
pub fn check_improving(f: &EnergyModel, p: &NodewiseMap, cap: Option<u128>) -> Result<bool> {
    let size = check_cap(f, cap)? as usize;
    let mut x = first_labeling(f);
    for _ in 0..size {
        if f.evaluate_unchecked(&p.apply(&x)) > f.evaluate_unchecked(&x) + 1e-12 {
            return Ok(false);
        }
        if !advance(&mut x, f) {
            break;
        }
    }
    Ok(true)
}

/// `E(p(x)) <= E(x)` everywhere and strictly wherever `p(x) != x`.
pub fn check_strict_improving(
    f: &EnergyModel,
    p: &NodewiseMap,
    cap: Option<u128>,
) -> Result<bool> {
    let size = check_cap(f, cap)? as usize;
    let tol = optimum_tolerance(f);
    let mut x = first_labeling(f);
    for _ in 0..size {
        let px = p.apply(&x);
        let ex = f.evaluate_unchecked(&x);
        let epx = f.evaluate_unchecked(&px);
        if epx > ex + 1e-12 {
            return Ok(false);
        }
        if px != x && epx >= ex - tol {
            return Ok(false);
        }
        if !advance(&mut x, f) {
            break;
        }
    }
    Ok(true)
}

/// Outcome of a ground-truth persistency check.
#[derive(Debug, Clone, PartialEq)]
pub enum PersistencyVerdict {
    Valid,
    /// Weak mode: no optimum lies in `p(X)`; strict mode: some optimum lies
    /// outside. Carries a witness optimum.
    Violated(Labeling),
}

/// Weak: some optimum is a fixed point of `p`. Strict: all optima are.
/// `p` must be idempotent so that `p(X) = {x : p(x) = x}`.
pub fn check_persistency(
    f: &EnergyModel,
    p: &NodewiseMap,
    strict: bool,
    cap: Option<u128>,
) -> Result<PersistencyVerdict> {
    if !p.is_idempotent() {
        return Err(Error::invalid("persistency check needs an idempotent map"));
    }
    let (_, optima) = all_optima(f, cap)?;
    if strict {
        for x in &optima {
            if &p.apply(x) != x {
                return Ok(PersistencyVerdict::Violated(x.clone()));
            }
        }
        Ok(PersistencyVerdict::Valid)
    } else if optima.iter().any(|x| &p.apply(x) == x) {
        Ok(PersistencyVerdict::Valid)
    } else {
        Ok(PersistencyVerdict::Violated(optima[0].clone()))
    }
}

// ---------------------------------------------------------------------------
// Small-clique checks of the lifted product polytope. A point is a vector
// over all subsets of a clique (bitmask-indexed), with the empty set pinned
// to one.
// ---------------------------------------------------------------------------

/// `zeta(z)` for a 0/1 configuration `z` (bitmask): component at subset `d`
/// is the product of the selected coordinates.
fn lift_configuration(clique_size: usize, z: usize) -> Vec<f64> {
    (0..(1usize << clique_size))
        .map(|d| if d & !z == 0 { 1.0 } else { 0.0 })
        .collect()
}

/// Evaluate the inequality description: for every `B ⊆ C`,
/// `sum_{D ⊆ C\B} (-1)^{|D|} zeta_{D∪B} >= -tol`.
pub fn zeta_inequality_check(clique_size: usize, zeta: &[f64], tol: f64) -> bool {
    let full = 1usize << clique_size;
    assert_eq!(zeta.len(), full);
    for b in 0..full {
        let rest = !b & (full - 1);
        let mut acc = 0.0;
        let mut d = rest;
        loop {
            let sign = if (d.count_ones() % 2) == 0 { 1.0 } else { -1.0 };
            acc += sign * zeta[d | b];
            if d == 0 {
                break;
            }
            d = (d - 1) & rest;
        }
        if acc < -tol {
            return false;
        }
    }
    true
}

/// Membership in the convex hull of the `2^|C|` lifted configurations,
/// decided by an LP feasibility problem over mixture weights.
pub fn zeta_hull_check(clique_size: usize, zeta: &[f64], tol: f64) -> Result<bool> {
    if clique_size > 3 {
        return Err(Error::invalid("hull check is for cliques of size <= 3"));
    }
    let full = 1usize << clique_size;
    if zeta.len() != full {
        return Err(Error::invalid("zeta must have one component per subset"));
    }
    if (zeta[0] - 1.0).abs() > tol {
        return Ok(false);
    }
    // Find lambda >= 0 with sum lambda = 1 and sum lambda_z zeta(z) = zeta.
    let mut p = LpProblem::new(full);
    for d in 1..full {
        let coeffs: Vec<(usize, f64)> = (0..full)
            .map(|z| (z, lift_configuration(clique_size, z)[d]))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        p.add_row(coeffs, RowOp::Eq, zeta[d]);
    }
    p.add_row((0..full).map(|z| (z, 1.0)).collect(), RowOp::Eq, 1.0);
    let sol = lp::solve(&p, tol.max(1e-10));
    match sol.status {
        LpStatus::Optimal => Ok(true),
        LpStatus::Infeasible => Ok(false),
        other => Err(Error::Solver(format!("hull feasibility LP ended {:?}", other))),
    }
}

/// Minimum of the linearized polynomial over the inequality polytope equals
/// the 0/1 minimum of the polynomial itself (within `tol`). `coefficients`
/// are multilinear, bitmask-indexed.
pub fn multilinear_min_check(clique_size: usize, coefficients: &[f64], tol: f64) -> Result<bool> {
    if clique_size > 3 {
        return Err(Error::invalid("min check is for cliques of size <= 3"));
    }
    let full = 1usize << clique_size;
    if coefficients.len() != full {
        return Err(Error::invalid("need one coefficient per subset"));
    }
    let mut brute = f64::INFINITY;
    for z in 0..full {
        let mut g = 0.0;
        for (d, &a) in coefficients.iter().enumerate() {
            if d & !z == 0 {
                g += a;
            }
        }
        brute = brute.min(g);
    }
    let mut p = LpProblem::new(full);
    for j in 0..full {
        p.set_free(j);
    }
    p.fix(0, 1.0);
    p.objective = coefficients.to_vec();
    for b in 0..full {
        let rest = !b & (full - 1);
        let mut coeffs = Vec::new();
        let mut d = rest;
        loop {
            let sign = if (d.count_ones() % 2) == 0 { 1.0 } else { -1.0 };
            coeffs.push((d | b, sign));
            if d == 0 {
                break;
            }
            d = (d - 1) & rest;
        }
        p.add_row(coeffs, RowOp::Ge, 0.0);
    }
    let sol = lp::solve(&p, 1e-10);
    if !sol.is_optimal() {
        return Err(Error::Solver(format!("polytope min LP ended {:?}", sol.status)));
    }
    Ok((sol.objective - brute).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{generate, GeneratorKind, InstanceSpec, Shape};
    use rand::{Rng, SeedableRng};

    #[test]
    fn zero_energy_makes_everything_optimal() {
        let f = EnergyModel::new(vec![2, 3], vec![]).unwrap();
        let (min, optima) = all_optima(&f, None).unwrap();
        assert_eq!(min, 0.0);
        assert_eq!(optima.len(), 6);
    }

    #[test]
    fn unary_only_optima_are_argmin_products() {
        let f = EnergyModel::new(
            vec![3, 2],
            vec![(vec![0], vec![1.0, 0.0, 0.0]), (vec![1], vec![2.0, 2.0])],
        )
        .unwrap();
        let (min, optima) = all_optima(&f, None).unwrap();
        assert_eq!(min, 2.0);
        assert_eq!(optima.len(), 4);
        for x in &optima {
            assert!(x[0] == 1 || x[0] == 2);
        }
    }

    #[test]
    fn cap_is_enforced() {
        let f = EnergyModel::new(vec![2; 25], vec![]).unwrap();
        match all_optima(&f, Some(1 << 20)) {
            Err(Error::CapExceeded { size, cap }) => {
                assert_eq!(size, 1 << 25);
                assert_eq!(cap, 1 << 20);
            }
            other => panic!("expected cap refusal, got {:?}", other),
        }
    }

    #[test]
    fn threaded_and_serial_enumeration_agree() {
        let spec = InstanceSpec {
            kind: GeneratorKind::Potts,
            shape: Shape::Grid { rows: 3, cols: 3 },
            labels: 3,
            degree: 2,
            terms: 0,
            seed: 77,
        };
        let f = generate(&spec).unwrap();
        // 3^9 = 19683 > 2^14 triggers the threaded path; compare against a
        // from-scratch serial loop.
        let (min, optima) = all_optima(&f, None).unwrap();
        let mut best = f64::INFINITY;
        let mut count = 0usize;
        let mut x = vec![0usize; 9];
        loop {
            let e = f.evaluate(&x).unwrap();
            if e < best {
                best = e;
                count = 1;
            } else if e == best {
                count += 1;
            }
            if !advance(&mut x, &f) {
                break;
            }
        }
        assert_eq!(min, best);
        assert_eq!(optima.len(), count);
    }

    #[test]
    fn identity_is_improving_and_vacuously_strict() {
        let f = EnergyModel::new(vec![2, 2], vec![(vec![0], vec![0.0, 1.0])]).unwrap();
        let id = NodewiseMap::identity(&f);
        assert!(check_improving(&f, &id, None).unwrap());
        assert!(check_strict_improving(&f, &id, None).unwrap());
    }

    #[test]
    fn map_to_optimum_is_improving() {
        let spec = InstanceSpec {
            kind: GeneratorKind::Full,
            shape: Shape::Nodes(3),
            labels: 3,
            degree: 2,
            terms: 0,
            seed: 4,
        };
        let f = generate(&spec).unwrap();
        let (_, optima) = all_optima(&f, None).unwrap();
        let p = NodewiseMap::constant(&optima[0], &f);
        assert!(check_improving(&f, &p, None).unwrap());
    }

    #[test]
    fn random_maps_agree_with_independent_reimplementation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for seed in 0..10u64 {
            let spec = InstanceSpec {
                kind: GeneratorKind::Full,
                shape: Shape::Nodes(3),
                labels: 2,
                degree: 2,
                terms: 0,
                seed,
            };
            let f = generate(&spec).unwrap();
            let maps: Vec<Vec<usize>> = (0..3)
                .map(|_| (0..2).map(|_| rng.gen_range(0..2)).collect())
                .collect();
            let p = NodewiseMap::new(maps.clone(), &f).unwrap();
            let got = check_improving(&f, &p, None).unwrap();
            // independent path: explicit loop over the 8 labelings
            let mut want = true;
            for bits in 0..8usize {
                let x: Vec<usize> = (0..3).map(|s| bits >> s & 1).collect();
                let px: Vec<usize> = x.iter().enumerate().map(|(s, &l)| maps[s][l]).collect();
                if f.evaluate(&px).unwrap() > f.evaluate(&x).unwrap() {
                    want = false;
                }
            }
            assert_eq!(got, want, "seed {}", seed);
        }
    }

    #[test]
    fn persistency_verdicts() {
        let f = EnergyModel::new(vec![2, 2], vec![(vec![0], vec![0.0, 1.0])]).unwrap();
        let id = NodewiseMap::identity(&f);
        assert_eq!(
            check_persistency(&f, &id, false, None).unwrap(),
            PersistencyVerdict::Valid
        );
        assert_eq!(
            check_persistency(&f, &id, true, None).unwrap(),
            PersistencyVerdict::Valid
        );
        // Pinning node 0 to its optimal label 0 is valid in both modes.
        let mut good = NodewiseMap::identity(&f);
        good.set(0, 1, 0);
        assert_eq!(
            check_persistency(&f, &good, true, None).unwrap(),
            PersistencyVerdict::Valid
        );
        // Pinning node 0 to the bad label 1 is invalid.
        let mut bad = NodewiseMap::identity(&f);
        bad.set(0, 0, 1);
        assert!(matches!(
            check_persistency(&f, &bad, false, None).unwrap(),
            PersistencyVerdict::Violated(_)
        ));
        // Node 1 is tied: fixing it is weakly but not strictly valid.
        let mut tie = NodewiseMap::identity(&f);
        tie.set(1, 1, 0);
        assert_eq!(
            check_persistency(&f, &tie, false, None).unwrap(),
            PersistencyVerdict::Valid
        );
        assert!(matches!(
            check_persistency(&f, &tie, true, None).unwrap(),
            PersistencyVerdict::Violated(_)
        ));
    }

    #[test]
    fn hull_vertices_and_midpoints_are_members() {
        for size in 1..=3usize {
            let full = 1usize << size;
            for z in 0..full {
                let zeta = lift_configuration(size, z);
                assert!(zeta_hull_check(size, &zeta, 1e-9).unwrap());
                assert!(zeta_inequality_check(size, &zeta, 1e-9));
            }
            let a = lift_configuration(size, 0);
            let b = lift_configuration(size, full - 1);
            let mid: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
            assert!(zeta_hull_check(size, &mid, 1e-9).unwrap());
            assert!(zeta_inequality_check(size, &mid, 1e-9));
        }
    }

    #[test]
    fn unit_unaries_with_zero_product_is_not_a_member() {
        // zeta_s = zeta_t = 1 but zeta_st = 0: the B = ∅ inequality evaluates
        // to 1 - 1 - 1 + 0 = -1, and the hull LP is infeasible.
        let zeta = vec![1.0, 1.0, 1.0, 0.0];
        assert!(!zeta_inequality_check(2, &zeta, 1e-9));
        assert!(!zeta_hull_check(2, &zeta, 1e-9).unwrap());
    }

    #[test]
    fn hull_and_inequality_routes_agree_on_random_points() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(55);
        for _ in 0..200 {
            let size = rng.gen_range(1..=3usize);
            let full = 1usize << size;
            let zeta: Vec<f64> = if rng.gen_bool(0.5) {
                let mut acc = vec![0.0; full];
                let mut total = 0.0;
                for _ in 0..3 {
                    let w: f64 = rng.gen_range(0.1..1.0);
                    let z = rng.gen_range(0..full);
                    for (a, v) in acc.iter_mut().zip(lift_configuration(size, z)) {
                        *a += w * v;
                    }
                    total += w;
                }
                acc.iter().map(|v| v / total).collect()
            } else {
                let mut v: Vec<f64> = (0..full).map(|_| rng.gen_range(-0.2..1.2)).collect();
                v[0] = 1.0;
                v
            };
            let by_rows = zeta_inequality_check(size, &zeta, 1e-8);
            let by_hull = zeta_hull_check(size, &zeta, 1e-8).unwrap();
            assert_eq!(by_rows, by_hull, "size {} zeta {:?}", size, zeta);
        }
    }

    #[test]
    fn multilinear_min_trivial_and_hand_checked() {
        // g ≡ 1
        assert!(multilinear_min_check(2, &[1.0, 0.0, 0.0, 0.0], 1e-8).unwrap());
        // g(z) = z1 z2 - z1 has minimum -1 at z = (1,0).
        assert!(multilinear_min_check(2, &[0.0, -1.0, 0.0, 1.0], 1e-8).unwrap());
    }

    #[test]
    fn multilinear_min_random_draws() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(66);
        for _ in 0..200 {
            let size = rng.gen_range(1..=3usize);
            let coeffs: Vec<f64> = (0..(1usize << size))
                .map(|_| rng.gen_range(-10i64..=10) as f64)
                .collect();
            assert!(multilinear_min_check(size, &coeffs, 1e-8).unwrap());
        }
    }
}
