//! Linear programming: a bounded-variable revised simplex with Bland's
//! anti-cycling rule, primal and dual certificates, and extraction of
//! optimal-face support sets.
//!
//! The solver is built for desk-scale problems (up to a few thousand rows)
//! where deterministic, certificate-carrying answers matter more than speed.

use std::io::Write;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;
const INF: f64 = f64::INFINITY;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowOp {
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub op: RowOp,
    pub rhs: f64,
}

/// `min c·x` subject to sparse equality/inequality rows and per-coordinate
/// bounds. Fixed coordinates are expressed as `lower == upper`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub ncols: usize,
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    pub fn new(ncols: usize) -> Self {
        LpProblem {
            ncols,
            objective: vec![0.0; ncols],
            rows: Vec::new(),
            lower: vec![0.0; ncols],
            upper: vec![INF; ncols],
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, op: RowOp, rhs: f64) {
        self.rows.push(LpRow { coeffs, op, rhs });
    }

    pub fn set_free(&mut self, j: usize) {
        self.lower[j] = -INF;
        self.upper[j] = INF;
    }

    pub fn fix(&mut self, j: usize, v: f64) {
        self.lower[j] = v;
        self.upper[j] = v;
    }

    fn validate(&self) -> Result<()> {
        if self.ncols == 0 {
            return Err(Error::invalid("LP needs at least one coordinate"));
        }
        if self.objective.len() != self.ncols
            || self.lower.len() != self.ncols
            || self.upper.len() != self.ncols
        {
            return Err(Error::invalid("LP vector lengths disagree"));
        }
        for j in 0..self.ncols {
            if self.lower[j] > self.upper[j] {
                return Err(Error::invalid(format!("empty bound range at column {}", j)));
            }
            if !self.objective[j].is_finite() {
                return Err(Error::invalid("non-finite objective"));
            }
        }
        for row in &self.rows {
            if !row.rhs.is_finite() || row.coeffs.iter().any(|&(j, v)| j >= self.ncols || !v.is_finite()) {
                return Err(Error::invalid("bad row data"));
            }
        }
        Ok(())
    }

    /// Plain-text listing for cross-checking with external tools.
    pub fn write_listing(&self, w: &mut impl Write) -> std::io::Result<()> {
        write!(w, "min:")?;
        for (j, &c) in self.objective.iter().enumerate() {
            if c != 0.0 {
                write!(w, " {:+} x{}", c, j)?;
            }
        }
        writeln!(w, ";")?;
        for (i, row) in self.rows.iter().enumerate() {
            write!(w, "r{}:", i)?;
            for &(j, v) in &row.coeffs {
                write!(w, " {:+} x{}", v, j)?;
            }
            let op = match row.op {
                RowOp::Eq => "=",
                RowOp::Ge => ">=",
            };
            writeln!(w, " {} {};", op, row.rhs)?;
        }
        for j in 0..self.ncols {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l == u {
                writeln!(w, "x{} = {};", j, l)?;
            } else if l == -INF && u == INF {
                writeln!(w, "x{} free;", j)?;
            } else if u == INF {
                writeln!(w, "x{} >= {};", j, l)?;
            } else {
                writeln!(w, "{} <= x{} <= {};", l, j, u)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericFailure,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// One multiplier per problem row (φ in the dual pair).
    pub row_duals: Vec<f64>,
    /// Reduced costs per structural coordinate; the entry of a fixed
    /// coordinate is its bound multiplier (ψ for `mu_∅ = 1`).
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    fn failed(status: LpStatus, ncols: usize, nrows: usize, iterations: usize) -> Self {
        LpSolution {
            status,
            x: vec![0.0; ncols],
            row_duals: vec![0.0; nrows],
            reduced_costs: vec![0.0; ncols],
            objective: f64::NAN,
            iterations,
        }
    }
}

/// Solver backends share this interface so an external LP code can be
/// swapped in without touching call sites.
pub trait LpBackend {
    fn solve(&self, problem: &LpProblem, tol: f64) -> LpSolution;
}

/// Bounded-variable revised simplex. Dantzig pricing with a switch to
/// Bland's rule after a run of degenerate steps; dense basis inverse with
/// periodic refactorization; deterministic tie-breaking by lowest index.
#[derive(Debug, Clone)]
pub struct Simplex {
    pub max_iterations: usize,
    pub refactor_period: usize,
}

impl Default for Simplex {
    fn default() -> Self {
        Simplex {
            max_iterations: 200_000,
            refactor_period: 60,
        }
    }
}

/// Solve with the default backend.
pub fn solve(problem: &LpProblem, tol: f64) -> LpSolution {
    Simplex::default().solve(problem, tol)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ColState {
    Basic(usize),
    AtLower,
    AtUpper,
    /// Free nonbasic column, parked at zero.
    FreeZero,
}

struct Tableau {
    m: usize,
    ncols: usize,
    cols: Vec<Vec<(usize, f64)>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    state: Vec<ColState>,
    basis: Vec<usize>,
    binv: Vec<f64>, // row-major m x m
    xb: Vec<f64>,
    rhs: Vec<f64>,
    iterations: usize,
    bland: bool,
    force_bland: bool,
    degenerate_run: usize,
}

impl Tableau {
    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            ColState::Basic(i) => self.xb[i],
            ColState::AtLower => self.lower[j],
            ColState::AtUpper => self.upper[j],
            ColState::FreeZero => 0.0,
        }
    }

    fn col_value_dot(&self, j: usize, vec: &[f64]) -> f64 {
        self.cols[j].iter().map(|&(i, a)| vec[i] * a).sum()
    }

    /// Recompute the dense basis inverse and basic values from scratch.
    fn refactor(&mut self) -> std::result::Result<(), ()> {
        let m = self.m;
        if m == 0 {
            return Ok(());
        }
        // Gauss-Jordan on [B | I].
        let mut a = vec![0.0f64; m * m];
        let mut inv = vec![0.0f64; m * m];
        for (slot, &j) in self.basis.iter().enumerate() {
            for &(i, v) in &self.cols[j] {
                a[i * m + slot] = v;
            }
        }
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for col in 0..m {
            let mut piv = col;
            let mut best = a[col * m + col].abs();
            for r in col + 1..m {
                let v = a[r * m + col].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best < 1e-12 {
                return Err(());
            }
            if piv != col {
                for k in 0..m {
                    a.swap(col * m + k, piv * m + k);
                    inv.swap(col * m + k, piv * m + k);
                }
            }
            let p = a[col * m + col];
            for k in 0..m {
                a[col * m + k] /= p;
                inv[col * m + k] /= p;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let factor = a[r * m + col];
                if factor == 0.0 {
                    continue;
                }
                for k in 0..m {
                    a[r * m + k] -= factor * a[col * m + k];
                    inv[r * m + k] -= factor * inv[col * m + k];
                }
            }
        }
        self.binv = inv;
        self.recompute_basics();
        Ok(())
    }

    fn recompute_basics(&mut self) {
        let m = self.m;
        // xb = B^{-1} (rhs - N x_N)
        let mut resid = self.rhs.clone();
        for j in 0..self.ncols {
            if matches!(self.state[j], ColState::Basic(_)) {
                continue;
            }
            let v = self.nonbasic_value(j);
            if v != 0.0 {
                for &(i, a) in &self.cols[j] {
                    resid[i] -= a * v;
                }
            }
        }
        for i in 0..m {
            let mut acc = 0.0;
            for k in 0..m {
                acc += self.binv[i * m + k] * resid[k];
            }
            self.xb[i] = acc;
        }
    }

    fn duals(&self) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0f64; m];
        for (slot, &j) in self.basis.iter().enumerate() {
            let c = self.cost[j];
            if c != 0.0 {
                for k in 0..m {
                    y[k] += c * self.binv[slot * m + k];
                }
            }
        }
        y
    }

    /// One simplex phase on the current cost vector. Returns Ok(true) on
    /// optimality, Ok(false) on unboundedness.
    fn optimize(
        &mut self,
        tol: f64,
        max_iterations: usize,
        refactor_period: usize,
    ) -> std::result::Result<bool, ()> {
        let dtol = tol * (1.0 + self.cost.iter().fold(0.0f64, |m, &c| m.max(c.abs())));
        let feastol = tol * (1.0 + self.rhs.iter().fold(0.0f64, |m, &b| m.max(b.abs())));
        let ztol = 1e-10;
        let steptol = 1e-10;
        let pivtol = 1e-7;
        let m = self.m;
        // Columns whose pivot candidates stayed tiny even after a rebuild;
        // cleared on any successful pivot.
        let mut skipped = vec![false; self.ncols];
        let mut fresh_factor = false;
        loop {
            if self.iterations >= max_iterations {
                return Err(());
            }
            if self.iterations > 0 && self.iterations % refactor_period == 0 && !fresh_factor {
                self.refactor()?;
                fresh_factor = true;
            }
            let y = self.duals();
            // Pricing: Dantzig by default, lowest eligible index under Bland.
            let mut entering: Option<(usize, f64, i8)> = None; // (col, |d|, dir)
            for j in 0..self.ncols {
                if skipped[j] || matches!(self.state[j], ColState::Basic(_)) {
                    continue;
                }
                if self.lower[j] == self.upper[j] {
                    continue; // fixed column never moves
                }
                let d = self.cost[j] - self.col_value_dot(j, &y);
                let dir: i8 = match self.state[j] {
                    ColState::AtLower if d < -dtol => 1,
                    ColState::AtUpper if d > dtol => -1,
                    ColState::FreeZero if d < -dtol => 1,
                    ColState::FreeZero if d > dtol => -1,
                    _ => continue,
                };
                if self.bland {
                    entering = Some((j, d.abs(), dir));
                    break;
                }
                match entering {
                    Some((_, best, _)) if d.abs() <= best => {}
                    _ => entering = Some((j, d.abs(), dir)),
                }
            }
            let (j_in, _, dir) = match entering {
                Some(e) => e,
                None => {
                    if skipped.iter().any(|&s| s) {
                        // Only numerically unusable columns remain eligible:
                        // rebuild once and give them another chance.
                        if fresh_factor {
                            return Err(());
                        }
                        self.refactor()?;
                        fresh_factor = true;
                        skipped.iter_mut().for_each(|s| *s = false);
                        continue;
                    }
                    return Ok(true);
                }
            };
            let sigma = dir as f64;
            // w = B^{-1} A_j
            let mut w = vec![0.0f64; m];
            for &(r, a) in &self.cols[j_in] {
                if a == 0.0 {
                    continue;
                }
                for i in 0..m {
                    let b = self.binv[i * m + r];
                    if b != 0.0 {
                        w[i] += b * a;
                    }
                }
            }
            let own_range = if self.upper[j_in].is_finite() && self.lower[j_in].is_finite() {
                self.upper[j_in] - self.lower[j_in]
            } else {
                INF
            };

            // Ratio test. Bland mode: exact minimum with smallest-index ties
            // (anti-cycling). Default: two passes, first relaxing each limit
            // by the feasibility tolerance, then taking the largest pivot
            // whose strict limit fits under the relaxed minimum.
            let mut t_best = own_range;
            let mut leave: Option<(usize, bool)> = None;
            if self.bland {
                for i in 0..m {
                    let rate = -sigma * w[i];
                    let (room, hits_upper) = if rate > ztol {
                        let k = self.basis[i];
                        if !self.upper[k].is_finite() {
                            continue;
                        }
                        ((self.upper[k] - self.xb[i]).max(0.0), true)
                    } else if rate < -ztol {
                        let k = self.basis[i];
                        if !self.lower[k].is_finite() {
                            continue;
                        }
                        ((self.xb[i] - self.lower[k]).max(0.0), false)
                    } else {
                        continue;
                    };
                    let t = room / rate.abs();
                    let better = match leave {
                        _ if t < t_best - steptol => true,
                        None => t < t_best + steptol,
                        Some((row, _)) => t < t_best + steptol && self.basis[i] < self.basis[row],
                    };
                    if better {
                        t_best = t.min(t_best);
                        leave = Some((i, hits_upper));
                    }
                }
            } else {
                let mut t_relax = own_range;
                for i in 0..m {
                    let rate = -sigma * w[i];
                    if rate > ztol {
                        let k = self.basis[i];
                        if self.upper[k].is_finite() {
                            let room = (self.upper[k] - self.xb[i]).max(0.0) + feastol;
                            t_relax = t_relax.min(room / rate);
                        }
                    } else if rate < -ztol {
                        let k = self.basis[i];
                        if self.lower[k].is_finite() {
                            let room = (self.xb[i] - self.lower[k]).max(0.0) + feastol;
                            t_relax = t_relax.min(room / (-rate));
                        }
                    }
                }
                if t_relax.is_finite() {
                    let mut best_mag = 0.0f64;
                    for i in 0..m {
                        let rate = -sigma * w[i];
                        let (room, hits_upper) = if rate > ztol {
                            let k = self.basis[i];
                            if !self.upper[k].is_finite() {
                                continue;
                            }
                            ((self.upper[k] - self.xb[i]).max(0.0), true)
                        } else if rate < -ztol {
                            let k = self.basis[i];
                            if !self.lower[k].is_finite() {
                                continue;
                            }
                            ((self.xb[i] - self.lower[k]).max(0.0), false)
                        } else {
                            continue;
                        };
                        let t = room / rate.abs();
                        if t <= t_relax && w[i].abs() > best_mag {
                            best_mag = w[i].abs();
                            t_best = t;
                            leave = Some((i, hits_upper));
                        }
                    }
                    if leave.is_none() || own_range < t_best {
                        t_best = own_range;
                        leave = None;
                    }
                } else {
                    t_best = INF;
                }
            }
            if !t_best.is_finite() {
                return Ok(false); // unbounded ray
            }

            match leave {
                None => {
                    // Entering variable runs to its opposite bound.
                    self.iterations += 1;
                    self.degenerate_run = 0;
                    for i in 0..m {
                        self.xb[i] -= sigma * t_best * w[i];
                    }
                    self.state[j_in] = match self.state[j_in] {
                        ColState::AtLower => ColState::AtUpper,
                        ColState::AtUpper => ColState::AtLower,
                        other => other, // free columns have no finite range
                    };
                    fresh_factor = false;
                }
                Some((r, hit_upper)) => {
                    let pivot = w[r];
                    if pivot.abs() < pivtol {
                        // Numerically unusable pivot: rebuild once, then set
                        // the column aside instead of retrying forever.
                        if fresh_factor {
                            skipped[j_in] = true;
                        } else {
                            self.refactor()?;
                            fresh_factor = true;
                        }
                        continue;
                    }
                    self.iterations += 1;
                    if t_best <= steptol {
                        self.degenerate_run += 1;
                        if self.degenerate_run > 40 {
                            self.bland = true;
                        }
                    } else {
                        self.degenerate_run = 0;
                        self.bland = self.force_bland;
                    }
                    skipped.iter_mut().for_each(|s| *s = false);
                    let start = self.nonbasic_value(j_in);
                    for i in 0..m {
                        self.xb[i] -= sigma * t_best * w[i];
                    }
                    let k_out = self.basis[r];
                    self.state[k_out] = if hit_upper {
                        ColState::AtUpper
                    } else {
                        ColState::AtLower
                    };
                    // Snap the leaving variable exactly onto its bound.
                    self.basis[r] = j_in;
                    self.state[j_in] = ColState::Basic(r);
                    self.xb[r] = start + sigma * t_best;
                    // binv <- E^{-1} binv with eta column w at row r.
                    let inv_p = 1.0 / pivot;
                    for k in 0..m {
                        self.binv[r * m + k] *= inv_p;
                    }
                    for i in 0..m {
                        if i == r {
                            continue;
                        }
                        let f = w[i];
                        if f != 0.0 {
                            for k in 0..m {
                                self.binv[i * m + k] -= f * self.binv[r * m + k];
                            }
                        }
                    }
                    // A smallish pivot amplifies noise in the running
                    // inverse; rebuild before it can fake a future pivot.
                    fresh_factor = if pivot.abs() < 1e-4 {
                        self.refactor()?;
                        true
                    } else {
                        false
                    };
                }
            }
        }
    }
}

impl LpBackend for Simplex {
    fn solve(&self, problem: &LpProblem, tol: f64) -> LpSolution {
        match self.solve_inner(problem, tol, false) {
            Ok(sol) => sol,
            Err(LpStatus::NumericFailure) => {
                // One conservative retry: Bland's rule throughout and eager
                // refactorization. Slow but deterministic.
                match self.solve_inner(problem, tol, true) {
                    Ok(sol) => sol,
                    Err(status) => {
                        LpSolution::failed(status, problem.ncols, problem.rows.len(), 0)
                    }
                }
            }
            Err(status) => LpSolution::failed(status, problem.ncols, problem.rows.len(), 0),
        }
    }
}

impl Simplex {
    pub fn solve(&self, problem: &LpProblem, tol: f64) -> LpSolution {
        LpBackend::solve(self, problem, tol)
    }

    fn solve_inner(
        &self,
        problem: &LpProblem,
        tol: f64,
        conservative: bool,
    ) -> std::result::Result<LpSolution, LpStatus> {
        problem.validate().map_err(|_| LpStatus::NumericFailure)?;
        let n = problem.ncols;
        let m = problem.rows.len();
        let n_logic = m;

        // Equilibrate rows then columns with powers of two (exact in binary
        // floating point): mixed cost and indicator coefficients otherwise
        // leave the basis badly conditioned.
        let pow2 = |v: f64| -> f64 {
            if v > 0.0 {
                (2.0f64).powi(-(v.log2().round() as i32))
            } else {
                1.0
            }
        };
        let mut row_scale = vec![1.0f64; m];
        for (i, row) in problem.rows.iter().enumerate() {
            let mx = row.coeffs.iter().fold(0.0f64, |a, &(_, v)| a.max(v.abs()));
            row_scale[i] = pow2(mx);
        }
        let mut col_max = vec![0.0f64; n];
        for (i, row) in problem.rows.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                col_max[j] = col_max[j].max(v.abs() * row_scale[i]);
            }
        }
        let col_scale: Vec<f64> = col_max.iter().map(|&v| pow2(v)).collect();

        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, row) in problem.rows.iter().enumerate() {
            for &(j, v) in &row.coeffs {
                if v != 0.0 {
                    cols[j].push((i, v * row_scale[i] * col_scale[j]));
                }
            }
        }
        let mut lower: Vec<f64> = (0..n).map(|j| problem.lower[j] / col_scale[j]).collect();
        let mut upper: Vec<f64> = (0..n).map(|j| problem.upper[j] / col_scale[j]).collect();
        let scaled_objective: Vec<f64> = (0..n)
            .map(|j| problem.objective[j] * col_scale[j])
            .collect();
        let mut rhs = Vec::with_capacity(m);
        for (i, row) in problem.rows.iter().enumerate() {
            // logical column: a.x + l = b
            cols.push(vec![(i, 1.0)]);
            match row.op {
                RowOp::Eq => {
                    lower.push(0.0);
                    upper.push(0.0);
                }
                RowOp::Ge => {
                    lower.push(-INF);
                    upper.push(0.0);
                }
            }
            rhs.push(row.rhs * row_scale[i]);
        }
        // Initial nonbasic placement of structural columns.
        let mut state = Vec::with_capacity(n + n_logic);
        for j in 0..n {
            state.push(if lower[j].is_finite() {
                ColState::AtLower
            } else if upper[j].is_finite() {
                ColState::AtUpper
            } else {
                ColState::FreeZero
            });
        }
        for _ in 0..n_logic {
            state.push(ColState::AtUpper); // placeholder, fixed below
        }
        // Row residuals with structural columns at their initial values.
        let mut resid = rhs.clone();
        for j in 0..n {
            let v = match state[j] {
                ColState::AtLower => lower[j],
                ColState::AtUpper => upper[j],
                _ => 0.0,
            };
            if v != 0.0 {
                for &(i, a) in &cols[j] {
                    resid[i] -= a * v;
                }
            }
        }
        let mut basis = vec![0usize; m];
        let mut xb = vec![0.0f64; m];
        let mut artificials: Vec<usize> = Vec::new();
        for i in 0..m {
            let lj = n + i;
            let v = resid[i];
            let fits = v >= lower[lj] - 1e-12 && v <= upper[lj] + 1e-12;
            if fits {
                basis[i] = lj;
                state[lj] = ColState::Basic(i);
                xb[i] = v.clamp(lower[lj], upper[lj]);
            } else {
                // Park the logical at the bound nearest the residual and
                // absorb the rest with a signed artificial.
                let park = if v > upper[lj] { upper[lj] } else { lower[lj] };
                state[lj] = if park == upper[lj] {
                    ColState::AtUpper
                } else {
                    ColState::AtLower
                };
                let gap = v - park;
                let col = cols.len();
                cols.push(vec![(i, if gap >= 0.0 { 1.0 } else { -1.0 })]);
                lower.push(0.0);
                upper.push(INF);
                state.push(ColState::Basic(i));
                basis[i] = col;
                xb[i] = gap.abs();
                artificials.push(col);
            }
        }
        let ncols_all = cols.len();
        let mut t = Tableau {
            m,
            ncols: ncols_all,
            cols,
            lower,
            upper,
            cost: vec![0.0; ncols_all],
            state,
            basis,
            binv: {
                let mut b = vec![0.0; m * m];
                for i in 0..m {
                    b[i * m + i] = 1.0;
                }
                b
            },
            xb,
            rhs,
            iterations: 0,
            bland: conservative,
            force_bland: conservative,
            degenerate_run: 0,
        };
        // Identity start: artificial columns with -1 entries invert to -1.
        if m > 0 && t.refactor().is_err() {
            return Err(LpStatus::NumericFailure);
        }

        let period = if conservative {
            25
        } else {
            self.refactor_period
        };
        // Phase 1: drive artificial infeasibility to zero.
        if !artificials.is_empty() {
            for &a in &artificials {
                t.cost[a] = 1.0;
            }
            let optimal = t
                .optimize(tol, self.max_iterations, period)
                .map_err(|_| LpStatus::NumericFailure)?;
            if !optimal {
                return Err(LpStatus::NumericFailure);
            }
            let infeas: f64 = artificials.iter().map(|&a| t.nonbasic_value(a).max(0.0)).sum();
            let btol = tol * (1.0 + t.rhs.iter().fold(0.0f64, |mx, &b| mx.max(b.abs())));
            if infeas > btol.max(tol) {
                return Err(LpStatus::Infeasible);
            }
            for &a in &artificials {
                t.cost[a] = 0.0;
                t.upper[a] = 0.0;
                if !matches!(t.state[a], ColState::Basic(_)) {
                    t.state[a] = ColState::AtLower;
                }
            }
        }

        // Phase 2 on the real objective.
        t.cost[..n].copy_from_slice(&scaled_objective);
        let optimal = t
            .optimize(tol, self.max_iterations, period)
            .map_err(|_| LpStatus::NumericFailure)?;
        if !optimal {
            return Err(LpStatus::Unbounded);
        }
        // Clean pass: refactor once and re-optimize to wash out drift.
        if m > 0 {
            t.refactor().map_err(|_| LpStatus::NumericFailure)?;
            let optimal = t
                .optimize(tol, self.max_iterations, period)
                .map_err(|_| LpStatus::NumericFailure)?;
            if !optimal {
                return Err(LpStatus::Unbounded);
            }
        }

        let y_scaled = t.duals();
        // Map the scaled solution back to the caller's units.
        let mut x = vec![0.0f64; n];
        for (j, xv) in x.iter_mut().enumerate() {
            *xv = t.nonbasic_value(j) * col_scale[j];
        }
        let y: Vec<f64> = (0..m).map(|i| y_scaled[i] * row_scale[i]).collect();
        let mut reduced = vec![0.0f64; n];
        for j in 0..n {
            if !matches!(t.state[j], ColState::Basic(_)) {
                reduced[j] = (t.cost[j] - t.col_value_dot(j, &y_scaled)) / col_scale[j];
            }
        }
        let objective: f64 = (0..n).map(|j| problem.objective[j] * x[j]).sum();

        // Certificate checks per the solution contract, in original units.
        let scale_b = 1.0
            + problem
                .rows
                .iter()
                .fold(0.0f64, |mx, row| mx.max(row.rhs.abs()));
        let feastol = 10.0 * tol * scale_b;
        for (i, row) in problem.rows.iter().enumerate() {
            let lhs: f64 = row.coeffs.iter().map(|&(j, v)| v * x[j]).sum();
            let viol = match row.op {
                RowOp::Eq => (lhs - row.rhs).abs(),
                RowOp::Ge => (row.rhs - lhs).max(0.0),
            };
            if viol > feastol {
                return Err(LpStatus::NumericFailure);
            }
            let _ = i;
        }
        for j in 0..n {
            if x[j] < problem.lower[j] - feastol || x[j] > problem.upper[j] + feastol {
                return Err(LpStatus::NumericFailure);
            }
        }
        let mut dual_obj: f64 = (0..m).map(|i| y[i] * problem.rows[i].rhs).sum();
        for j in 0..n {
            if !matches!(t.state[j], ColState::Basic(_)) && x[j] != 0.0 {
                dual_obj += reduced[j] * x[j];
            }
        }
        if (objective - dual_obj).abs() > 100.0 * tol * (1.0 + objective.abs()) {
            return Err(LpStatus::NumericFailure);
        }

        Ok(LpSolution {
            status: LpStatus::Optimal,
            x,
            row_duals: y,
            reduced_costs: reduced,
            objective,
            iterations: t.iterations,
        })
    }
}

/// Restrict `problem` to its optimal face. A feasible point is optimal
/// exactly when it is complementary to one fixed optimal dual, so rows with
/// clearly positive multipliers become equalities and coordinates with
/// clearly nonzero reduced costs are pinned to their bounds. This avoids the
/// mass leak of an objective-slack row.
fn face_problem(problem: &LpProblem, base: &LpSolution, tol: f64) -> LpProblem {
    let scale = 1.0 + problem.objective.iter().fold(0.0f64, |m, &c| m.max(c.abs()));
    let eps = 10.0 * tol * scale;
    let mut face = problem.clone();
    for j in 0..problem.ncols {
        let d = base.reduced_costs[j];
        if d > eps && problem.lower[j].is_finite() {
            face.fix(j, problem.lower[j]);
        } else if d < -eps && problem.upper[j].is_finite() {
            face.fix(j, problem.upper[j]);
        }
    }
    for (i, row) in face.rows.iter_mut().enumerate() {
        if row.op == RowOp::Ge && base.row_duals[i] > eps {
            row.op = RowOp::Eq;
        }
    }
    face
}

/// For each requested coordinate: can it be strictly positive somewhere on
/// the optimal face of `problem`? Decided by per-coordinate auxiliary LPs,
/// skipping coordinates already positive in a known optimal-face point.
pub fn optimal_support(
    problem: &LpProblem,
    base: &LpSolution,
    coords: &[usize],
    tol: f64,
) -> Result<Vec<bool>> {
    if !base.is_optimal() {
        return Err(Error::Solver("support extraction needs an optimal base".into()));
    }
    let face = face_problem(problem, base, tol);
    let mut known: Vec<Vec<f64>> = vec![base.x.clone()];
    let mut out = Vec::with_capacity(coords.len());
    for &c in coords {
        if known.iter().any(|p| p[c] > tol) {
            out.push(true);
            continue;
        }
        let mut aux = face.clone();
        aux.objective = vec![0.0; aux.ncols];
        aux.objective[c] = -1.0;
        let sol = solve(&aux, tol);
        if !sol.is_optimal() {
            return Err(Error::Solver(format!(
                "support LP for coordinate {} ended with {:?}",
                c, sol.status
            )));
        }
        out.push(sol.x[c] > tol);
        known.push(sol.x);
    }
    Ok(out)
}

/// Exact per-coordinate maxima over the optimal face.
pub fn face_coordinate_max(
    problem: &LpProblem,
    base: &LpSolution,
    coords: &[usize],
    tol: f64,
) -> Result<Vec<f64>> {
    if !base.is_optimal() {
        return Err(Error::Solver("face maximization needs an optimal base".into()));
    }
    let face = face_problem(problem, base, tol);
    let mut out = Vec::with_capacity(coords.len());
    for &c in coords {
        let mut aux = face.clone();
        aux.objective = vec![0.0; aux.ncols];
        aux.objective[c] = -1.0;
        let sol = solve(&aux, tol);
        if !sol.is_optimal() {
            return Err(Error::Solver(format!(
                "face LP for coordinate {} ended with {:?}",
                c, sol.status
            )));
        }
        out.push(sol.x[c]);
    }
    Ok(out)
}
