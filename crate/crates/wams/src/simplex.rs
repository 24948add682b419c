//! Bounded-variable revised simplex over sparse columns with an LU-factored
//! basis and product-form updates. Sized for the relaxations this crate
//! produces: thousands of rows of mostly two- and three-term coupling
//! constraints over a 0-1 box.

/// Column-compressed sparse matrix.
#[derive(Clone, Debug, Default)]
pub struct ColMatrix {
    pub rows: usize,
    pub col_ptr: Vec<usize>,
    pub row_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl ColMatrix {
    pub fn cols(&self) -> usize {
        self.col_ptr.len() - 1
    }

    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Builds from `(row, col, value)` triples; duplicates are summed.
    pub fn from_triples(rows: usize, cols: usize, triples: &[(usize, usize, f64)]) -> ColMatrix {
        let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); cols];
        for &(r, c, v) in triples {
            by_col[c].push((r, v));
        }
        let mut col_ptr = vec![0usize; cols + 1];
        let mut row_idx = Vec::with_capacity(triples.len());
        let mut values = Vec::with_capacity(triples.len());
        for (c, mut entries) in by_col.into_iter().enumerate() {
            entries.sort_by_key(|&(r, _)| r);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(entries.len());
            for (r, v) in entries {
                match merged.last_mut() {
                    Some(last) if last.0 == r => last.1 += v,
                    _ => merged.push((r, v)),
                }
            }
            for (r, v) in merged {
                if v != 0.0 {
                    row_idx.push(r);
                    values.push(v);
                }
            }
            col_ptr[c + 1] = row_idx.len();
        }
        ColMatrix {
            rows,
            col_ptr,
            row_idx,
            values,
        }
    }
}

/// Sparse LU factors of a basis matrix; rows keep original indices,
/// columns live in pivot-position space.
struct LuFactors {
    m: usize,
    /// Column t: below-pivot multipliers at original row indices.
    l_cols: Vec<Vec<(usize, f64)>>,
    /// Column k: entries U(t,k) at pivot positions t < k.
    u_cols: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
    /// Pivot position -> original row.
    pivot_row: Vec<usize>,
}

impl LuFactors {
    fn factor(columns: &[Vec<(usize, f64)>], m: usize) -> Option<LuFactors> {
        let mut l_cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        let mut u_cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        let mut diag = Vec::with_capacity(m);
        let mut pivot_row: Vec<usize> = Vec::with_capacity(m);
        let mut pinv = vec![usize::MAX; m];
        let mut work = vec![0.0f64; m];
        let mut touched: Vec<usize> = Vec::with_capacity(64);
        let mut is_touched = vec![false; m];

        for column in columns.iter() {
            for &(r, v) in column {
                work[r] = v;
                if !is_touched[r] {
                    is_touched[r] = true;
                    touched.push(r);
                }
            }
            let k = diag.len();
            for t in 0..k {
                let r = pivot_row[t];
                let val = work[r];
                if val == 0.0 {
                    continue;
                }
                for &(row, lval) in &l_cols[t] {
                    if !is_touched[row] {
                        is_touched[row] = true;
                        touched.push(row);
                    }
                    work[row] -= val * lval;
                }
            }
            let mut best: Option<(usize, f64)> = None;
            for &r in &touched {
                if pinv[r] == usize::MAX {
                    let mag = work[r].abs();
                    if mag > 0.0 && best.map_or(true, |(_, b)| mag > b) {
                        best = Some((r, mag));
                    }
                }
            }
            let Some((prow, mag)) = best else {
                for &r in &touched {
                    work[r] = 0.0;
                    is_touched[r] = false;
                }
                return None;
            };
            if mag < 1e-11 {
                for &r in &touched {
                    work[r] = 0.0;
                    is_touched[r] = false;
                }
                return None;
            }
            let pivot = work[prow];
            let mut ucol = Vec::new();
            let mut lcol = Vec::new();
            for &r in &touched {
                let v = work[r];
                if v != 0.0 {
                    if pinv[r] != usize::MAX {
                        ucol.push((pinv[r], v));
                    } else if r != prow {
                        lcol.push((r, v / pivot));
                    }
                }
                work[r] = 0.0;
                is_touched[r] = false;
            }
            touched.clear();
            ucol.sort_by_key(|&(t, _)| t);
            pinv[prow] = k;
            pivot_row.push(prow);
            diag.push(pivot);
            u_cols.push(ucol);
            l_cols.push(lcol);
        }
        Some(LuFactors {
            m,
            l_cols,
            u_cols,
            diag,
            pivot_row,
        })
    }

    /// Solves `B x = b`; input indexed by original row, output by position.
    fn solve(&self, b: &mut [f64]) -> Vec<f64> {
        for t in 0..self.m {
            let val = b[self.pivot_row[t]];
            if val != 0.0 {
                for &(row, lval) in &self.l_cols[t] {
                    b[row] -= val * lval;
                }
            }
        }
        let mut y: Vec<f64> = (0..self.m).map(|t| b[self.pivot_row[t]]).collect();
        for v in b.iter_mut() {
            *v = 0.0;
        }
        for k in (0..self.m).rev() {
            let xk = y[k] / self.diag[k];
            y[k] = xk;
            if xk != 0.0 {
                for &(t, val) in &self.u_cols[k] {
                    y[t] -= val * xk;
                }
            }
        }
        y
    }

    /// Solves `B^T y = c`; input indexed by position, output by original row.
    fn solve_transpose(&self, c: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0f64; self.m];
        for k in 0..self.m {
            let mut acc = c[k];
            for &(t, val) in &self.u_cols[k] {
                acc -= val * z[t];
            }
            z[k] = acc / self.diag[k];
        }
        let mut y = vec![0.0f64; self.m];
        for t in (0..self.m).rev() {
            let mut acc = z[t];
            for &(row, lval) in &self.l_cols[t] {
                acc -= lval * y[row];
            }
            y[self.pivot_row[t]] = acc;
        }
        y
    }
}

/// One product-form update: the basis column at `position` was replaced by
/// a column whose representation in the old basis is the spike.
struct Eta {
    position: usize,
    entries: Vec<(usize, f64)>,
    pivot: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    /// Structural variable values (empty when infeasible).
    pub values: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum LpError {
    #[error("simplex iteration limit reached ({0} iterations)")]
    IterationLimit(usize),
    #[error("numerically singular basis")]
    SingularBasis,
    #[error("simplex lost primal feasibility beyond tolerance")]
    LostFeasibility,
}

/// A prepared linear program: structural columns plus one logical column
/// per row encoding the row sense through its bounds. Structural bounds
/// arrive per solve, so branching fixes variables without a rebuild.
pub struct LpWorkspace {
    pub structural: ColMatrix,
    pub objective: Vec<f64>,
    pub rhs: Vec<f64>,
    pub slack_lower: Vec<f64>,
    pub slack_upper: Vec<f64>,
}

const FEAS_TOL: f64 = 1e-7;
const DUAL_TOL: f64 = 1e-9;
const RATIO_TOL: f64 = 1e-10;
const REFRESH: usize = 60;

impl LpWorkspace {
    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn structurals(&self) -> usize {
        self.structural.cols()
    }

    /// Minimizes the objective over the supplied structural box.
    pub fn solve(&self, lower: &[f64], upper: &[f64]) -> Result<LpSolution, LpError> {
        match Simplex::new(self, lower, upper, false).run() {
            Ok(solution) => Ok(solution),
            // One deterministic retry under Bland's rule with frequent
            // refactorization; degenerate or ill-conditioned bases end up
            // here.
            Err(_) => Simplex::new(self, lower, upper, true).run(),
        }
    }
}

struct Simplex<'a> {
    ws: &'a LpWorkspace,
    m: usize,
    n: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    scale: f64,
    state: Vec<VarState>,
    basis: Vec<usize>,
    pos_of: Vec<usize>,
    x_basic: Vec<f64>,
    value: Vec<f64>,
    lu: Option<LuFactors>,
    etas: Vec<Eta>,
    /// (row, sign) per artificial column, appended after slacks.
    artificials: Vec<(usize, f64)>,
    iterations: usize,
    bland: bool,
    force_bland: bool,
    degenerate_steps: usize,
    refresh: usize,
}

impl<'a> Simplex<'a> {
    fn new(ws: &'a LpWorkspace, lo: &[f64], hi: &[f64], force_bland: bool) -> Simplex<'a> {
        let m = ws.rows();
        let n = ws.structurals();
        let mut lower = lo.to_vec();
        let mut upper = hi.to_vec();
        lower.extend_from_slice(&ws.slack_lower);
        upper.extend_from_slice(&ws.slack_upper);
        let scale = ws.objective.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
        let cost: Vec<f64> = ws.objective.iter().map(|c| c / scale).collect();
        Simplex {
            ws,
            m,
            n,
            lower,
            upper,
            cost,
            scale,
            state: Vec::new(),
            basis: Vec::new(),
            pos_of: Vec::new(),
            x_basic: Vec::new(),
            value: Vec::new(),
            lu: None,
            etas: Vec::new(),
            artificials: Vec::new(),
            iterations: 0,
            bland: force_bland,
            force_bland,
            degenerate_steps: 0,
            refresh: if force_bland { 20 } else { REFRESH },
        }
    }

    fn total_vars(&self) -> usize {
        self.n + self.m + self.artificials.len()
    }

    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.n {
            self.ws.structural.col(j).collect()
        } else if j < self.n + self.m {
            vec![(j - self.n, 1.0)]
        } else {
            let (row, sign) = self.artificials[j - self.n - self.m];
            vec![(row, sign)]
        }
    }

    fn run(mut self) -> Result<LpSolution, LpError> {
        self.initialize();
        if !self.artificials.is_empty() {
            let mut phase1 = vec![0.0f64; self.total_vars()];
            for j in self.n + self.m..self.total_vars() {
                phase1[j] = 1.0;
            }
            let infeasibility = self.optimize(&phase1)?;
            if infeasibility > 1e-7 {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    objective: f64::INFINITY,
                    values: Vec::new(),
                    iterations: self.iterations,
                });
            }
            for k in 0..self.artificials.len() {
                let j = self.n + self.m + k;
                self.lower[j] = 0.0;
                self.upper[j] = 0.0;
                if self.state[j] != VarState::Basic {
                    self.value[j] = 0.0;
                }
            }
        }
        let mut phase2 = self.cost.clone();
        phase2.resize(self.total_vars(), 0.0);
        let objective = self.optimize(&phase2)?;
        self.check_feasibility()?;
        let mut values = vec![0.0f64; self.n];
        for (j, value) in values.iter_mut().enumerate() {
            *value = self.current_value(j);
        }
        Ok(LpSolution {
            status: LpStatus::Optimal,
            objective: objective * self.scale,
            values,
            iterations: self.iterations,
        })
    }

    fn current_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::Basic => self.x_basic[self.pos_of[j]],
            _ => self.value[j],
        }
    }

    fn initialize(&mut self) {
        let vars = self.n + self.m;
        self.state = vec![VarState::AtLower; vars];
        self.value = vec![0.0; vars];
        self.pos_of = vec![usize::MAX; vars];
        // Structurals start at their finite lower bound (the box is [0,1],
        // possibly pinched by fixing).
        let mut activity = vec![0.0f64; self.m];
        for j in 0..self.n {
            let v = self.lower[j];
            self.value[j] = v;
            if v != 0.0 {
                for (r, a) in self.ws.structural.col(j) {
                    activity[r] += a * v;
                }
            }
        }
        self.basis = Vec::with_capacity(self.m);
        self.x_basic = Vec::with_capacity(self.m);
        for r in 0..self.m {
            let slack = self.n + r;
            let want = self.ws.rhs[r] - activity[r];
            let (lo, hi) = (self.lower[slack], self.upper[slack]);
            if want < lo - FEAS_TOL {
                // Slack pinned at its lower bound; artificial absorbs the gap.
                self.state[slack] = VarState::AtLower;
                self.value[slack] = lo;
                let idx = self.push_artificial(r, -1.0, lo - want);
                self.basis.push(idx);
                self.x_basic.push(lo - want);
            } else if want > hi + FEAS_TOL {
                self.state[slack] = VarState::AtUpper;
                self.value[slack] = hi;
                let idx = self.push_artificial(r, 1.0, want - hi);
                self.basis.push(idx);
                self.x_basic.push(want - hi);
            } else {
                self.state[slack] = VarState::Basic;
                self.basis.push(slack);
                self.x_basic.push(want.clamp(lo, hi));
            }
        }
        for (pos, &j) in self.basis.iter().enumerate() {
            self.pos_of[j] = pos;
        }
        self.lu = None;
        self.etas.clear();
    }

    fn push_artificial(&mut self, row: usize, sign: f64, value: f64) -> usize {
        let idx = self.n + self.m + self.artificials.len();
        self.artificials.push((row, sign));
        self.state.push(VarState::Basic);
        self.value.push(value);
        self.pos_of.push(usize::MAX);
        self.lower.push(0.0);
        self.upper.push(f64::INFINITY);
        idx
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let columns: Vec<Vec<(usize, f64)>> =
            self.basis.iter().map(|&j| self.column(j)).collect();
        let lu = LuFactors::factor(&columns, self.m).ok_or(LpError::SingularBasis)?;
        self.lu = Some(lu);
        self.etas.clear();
        // Recompute basic values from scratch to shed accumulated drift.
        let mut residual = self.ws.rhs.clone();
        for j in 0..self.total_vars() {
            if self.state[j] != VarState::Basic && self.value[j] != 0.0 {
                for (r, a) in self.column(j) {
                    residual[r] -= a * self.value[j];
                }
            }
        }
        self.x_basic = self.lu.as_ref().unwrap().solve(&mut residual);
        Ok(())
    }

    fn ftran(&self, column: &[(usize, f64)]) -> Vec<f64> {
        let mut b = vec![0.0f64; self.m];
        for &(r, v) in column {
            b[r] += v;
        }
        let mut x = self.lu.as_ref().unwrap().solve(&mut b);
        for eta in &self.etas {
            let xr = x[eta.position] / eta.pivot;
            if xr != 0.0 {
                for &(i, v) in &eta.entries {
                    x[i] -= v * xr;
                }
            }
            x[eta.position] = xr;
        }
        x
    }

    fn btran(&self, c_basis: &[f64]) -> Vec<f64> {
        let mut z = c_basis.to_vec();
        for eta in self.etas.iter().rev() {
            let mut acc = z[eta.position];
            for &(i, v) in &eta.entries {
                acc -= v * z[i];
            }
            z[eta.position] = acc / eta.pivot;
        }
        self.lu.as_ref().unwrap().solve_transpose(&z)
    }

    fn optimize(&mut self, cost: &[f64]) -> Result<f64, LpError> {
        let max_iterations = 200 * (self.m + self.n) + 20_000;
        if self.lu.is_none() {
            self.refactor()?;
        }
        loop {
            self.iterations += 1;
            if self.iterations > max_iterations {
                return Err(LpError::IterationLimit(self.iterations));
            }
            if self.etas.len() >= self.refresh {
                self.refactor()?;
            }

            let c_basis: Vec<f64> = self.basis.iter().map(|&j| cost[j]).collect();
            let y = self.btran(&c_basis);

            // Pricing.
            let mut entering: Option<(usize, f64, f64)> = None; // (var, |d|, dir)
            for j in 0..self.total_vars() {
                let state = self.state[j];
                if state == VarState::Basic || self.lower[j] == self.upper[j] {
                    continue;
                }
                let mut d = cost[j];
                for (r, a) in self.column(j) {
                    d -= y[r] * a;
                }
                let (eligible, dir) = match state {
                    VarState::AtLower => (d < -DUAL_TOL, 1.0),
                    VarState::AtUpper => (d > DUAL_TOL, -1.0),
                    VarState::Basic => unreachable!(),
                };
                if !eligible {
                    continue;
                }
                if self.bland {
                    entering = Some((j, d.abs(), dir));
                    break;
                }
                match entering {
                    Some((_, best, _)) if d.abs() <= best => {}
                    _ => entering = Some((j, d.abs(), dir)),
                }
            }
            let Some((q, _, dir)) = entering else {
                let mut objective = 0.0;
                for j in 0..self.total_vars() {
                    objective += cost[j] * self.current_value(j);
                }
                return Ok(objective);
            };

            let w = self.ftran(&self.column(q));

            // Ratio test: the entering variable moves by `delta` in
            // direction `dir`; basic variables move by -dir * w.
            let entering_range = self.upper[q] - self.lower[q];
            let mut delta = entering_range;
            let mut blocking: Option<(usize, f64, bool)> = None; // (pos, |w|, to_upper)
            for (pos, &wpos) in w.iter().enumerate() {
                if wpos.abs() <= RATIO_TOL {
                    continue;
                }
                let jb = self.basis[pos];
                let g = wpos * dir;
                let (room, to_upper) = if g > 0.0 {
                    ((self.x_basic[pos] - self.lower[jb]).max(0.0) / g, false)
                } else {
                    ((self.upper[jb] - self.x_basic[pos]).max(0.0) / -g, true)
                };
                if !room.is_finite() {
                    continue;
                }
                let replace = if room < delta - 1e-12 {
                    true
                } else if room <= delta + 1e-12 {
                    // Tie: prefer the larger pivot magnitude for stability,
                    // then the smaller variable index for determinism.
                    match blocking {
                        None => true,
                        Some((bpos, bw, _)) => {
                            wpos.abs() > bw * (1.0 + 1e-9)
                                || ((wpos.abs() - bw).abs() <= bw * 1e-9
                                    && jb < self.basis[bpos])
                        }
                    }
                } else {
                    false
                };
                if replace {
                    delta = delta.min(room);
                    blocking = Some((pos, wpos.abs(), to_upper));
                }
            }

            if !delta.is_finite() {
                // No blocking basic and an unbounded entering range cannot
                // happen for these models; treat as numerical trouble.
                return Err(LpError::LostFeasibility);
            }

            if self.degenerate_steps > 200 {
                self.bland = true;
            } else if delta > 1e-9 && !self.force_bland {
                self.bland = false;
            }
            if delta <= 1e-9 {
                self.degenerate_steps += 1;
            } else {
                self.degenerate_steps = 0;
            }

            match blocking {
                Some((pos, _, to_upper)) if delta < entering_range - 1e-12 => {
                    // Pivot: entering becomes basic at `pos`.
                    let leaving = self.basis[pos];
                    let signed = dir * delta;
                    for (p, &wp) in w.iter().enumerate() {
                        if wp != 0.0 {
                            self.x_basic[p] -= signed * wp;
                        }
                    }
                    let entering_value = self.value[q] + signed;
                    self.state[leaving] = if to_upper {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.value[leaving] = if to_upper {
                        self.upper[leaving]
                    } else {
                        self.lower[leaving]
                    };
                    self.pos_of[leaving] = usize::MAX;
                    self.basis[pos] = q;
                    self.pos_of[q] = pos;
                    self.state[q] = VarState::Basic;
                    self.x_basic[pos] = entering_value;
                    let entries: Vec<(usize, f64)> = w
                        .iter()
                        .enumerate()
                        .filter(|&(p, &v)| p != pos && v != 0.0)
                        .map(|(p, &v)| (p, v))
                        .collect();
                    self.etas.push(Eta {
                        position: pos,
                        entries,
                        pivot: w[pos],
                    });
                }
                _ => {
                    // Bound flip: the entering variable crosses its box.
                    let signed = dir * entering_range;
                    for (p, &wp) in w.iter().enumerate() {
                        if wp != 0.0 {
                            self.x_basic[p] -= signed * wp;
                        }
                    }
                    self.state[q] = match self.state[q] {
                        VarState::AtLower => VarState::AtUpper,
                        VarState::AtUpper => VarState::AtLower,
                        VarState::Basic => unreachable!(),
                    };
                    self.value[q] = if self.state[q] == VarState::AtUpper {
                        self.upper[q]
                    } else {
                        self.lower[q]
                    };
                }
            }
        }
    }

    fn check_feasibility(&self) -> Result<(), LpError> {
        for (pos, &j) in self.basis.iter().enumerate() {
            let x = self.x_basic[pos];
            if x < self.lower[j] - 1e-6 || x > self.upper[j] + 1e-6 {
                return Err(LpError::LostFeasibility);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn workspace(
        rows: usize,
        cols: usize,
        triples: &[(usize, usize, f64)],
        objective: Vec<f64>,
        rhs: Vec<f64>,
        senses: &[char],
    ) -> LpWorkspace {
        let mut slack_lower = Vec::new();
        let mut slack_upper = Vec::new();
        for &s in senses {
            match s {
                'l' => {
                    slack_lower.push(0.0);
                    slack_upper.push(f64::INFINITY);
                }
                'g' => {
                    slack_lower.push(f64::NEG_INFINITY);
                    slack_upper.push(0.0);
                }
                'e' => {
                    slack_lower.push(0.0);
                    slack_upper.push(0.0);
                }
                _ => unreachable!(),
            }
        }
        LpWorkspace {
            structural: ColMatrix::from_triples(rows, cols, triples),
            objective,
            rhs,
            slack_lower,
            slack_upper,
        }
    }

    fn solve(ws: &LpWorkspace, lo: &[f64], hi: &[f64]) -> LpSolution {
        ws.solve(lo, hi).unwrap()
    }

    #[test]
    fn knapsack_relaxation() {
        // max 8a + 5b + 4c st 6a + 4b + 3c <= 12, vars in [0,1], as a
        // minimization. Densities put a and c at 1 and b at 3/4: -15.75.
        let ws = workspace(
            1,
            3,
            &[(0, 0, 6.0), (0, 1, 4.0), (0, 2, 3.0)],
            vec![-8.0, -5.0, -4.0],
            vec![12.0],
            &['l'],
        );
        let sol = solve(&ws, &[0.0; 3], &[1.0; 3]);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - (-15.75)).abs() < 1e-9);
        assert!((sol.values[0] - 1.0).abs() < 1e-9);
        assert!((sol.values[1] - 0.75).abs() < 1e-9);
        assert!((sol.values[2] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn cover_with_ge_rows() {
        // min 3x1 + 2x2 + 4x3 + 3x4
        //   x1 + x3 >= 1; x1 + x2 + x4 >= 1; x2 + x3 + x4 >= 1
        // Fractional relaxation optimum 4.5 (duality: y = (2.5, 0.5, 1.5)).
        let ws = workspace(
            3,
            4,
            &[
                (0, 0, 1.0),
                (0, 2, 1.0),
                (1, 0, 1.0),
                (1, 1, 1.0),
                (1, 3, 1.0),
                (2, 1, 1.0),
                (2, 2, 1.0),
                (2, 3, 1.0),
            ],
            vec![3.0, 2.0, 4.0, 3.0],
            vec![1.0, 1.0, 1.0],
            &['g', 'g', 'g'],
        );
        let sol = solve(&ws, &[0.0; 4], &[1.0; 4]);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - 4.5).abs() < 1e-9, "{}", sol.objective);
    }

    #[test]
    fn equality_rows_and_fixed_variables() {
        // min x + 2y st x + y = 1, y - z = 0, z fixed to 0.3.
        let ws = workspace(
            2,
            3,
            &[(0, 0, 1.0), (0, 1, 1.0), (1, 1, 1.0), (1, 2, -1.0)],
            vec![1.0, 2.0, 0.0],
            vec![1.0, 0.0],
            &['e', 'e'],
        );
        let sol = solve(&ws, &[0.0, 0.0, 0.3], &[1.0, 1.0, 0.3]);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.values[1] - 0.3).abs() < 1e-9);
        assert!((sol.values[0] - 0.7).abs() < 1e-9);
        assert!((sol.objective - 1.3).abs() < 1e-9);
    }

    #[test]
    fn infeasible_system_detected() {
        // x <= 0.2 and x >= 0.8 cannot both hold.
        let ws = workspace(
            2,
            1,
            &[(0, 0, 1.0), (1, 0, 1.0)],
            vec![1.0],
            vec![0.2, 0.8],
            &['l', 'g'],
        );
        let sol = solve(&ws, &[0.0], &[1.0]);
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn negative_objective_pushes_to_upper_bounds() {
        // Unconstrained box: everything runs to its upper bound.
        let ws = workspace(
            1,
            2,
            &[(0, 0, 1.0), (0, 1, 1.0)],
            vec![-1.0, -2.0],
            vec![10.0],
            &['l'],
        );
        let sol = solve(&ws, &[0.0, 0.0], &[1.0, 1.0]);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.values, vec![1.0, 1.0]);
        assert!((sol.objective + 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_guard() {
        // Beale's cycling example; must terminate at -0.05.
        let ws = workspace(
            3,
            4,
            &[
                (0, 0, 0.25),
                (0, 1, -60.0),
                (0, 2, -0.04),
                (0, 3, 9.0),
                (1, 0, 0.5),
                (1, 1, -90.0),
                (1, 2, -0.02),
                (1, 3, 3.0),
                (2, 2, 1.0),
            ],
            vec![-0.75, 150.0, -0.02, 6.0],
            vec![0.0, 0.0, 1.0],
            &['l', 'l', 'l'],
        );
        let sol = solve(&ws, &[0.0; 4], &[f64::INFINITY; 4]);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective - (-0.05)).abs() < 1e-9, "{}", sol.objective);
    }

    #[test]
    fn random_dense_lps_match_reference() {
        // Cross-check against a plain dense tableau implementation on
        // random boxed problems with mixed senses.
        let mut seed = 0x12345678u64;
        let mut rand = move || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 33) as f64) / ((1u64 << 31) as f64) - 1.0
        };
        for trial in 0..60 {
            let rows = 2 + (trial % 4);
            let cols = 2 + (trial % 5);
            let mut triples = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    let v = (rand() * 4.0).round();
                    if v != 0.0 {
                        triples.push((r, c, v));
                    }
                }
            }
            let objective: Vec<f64> = (0..cols).map(|_| (rand() * 5.0).round()).collect();
            let rhs: Vec<f64> = (0..rows).map(|_| (rand() * 3.0).round()).collect();
            let senses: Vec<char> = (0..rows)
                .map(|r| ['l', 'g', 'e'][(trial + r) % 3])
                .collect();
            let ws = workspace(rows, cols, &triples, objective.clone(), rhs.clone(), &senses);
            let sol = ws.solve(&vec![0.0; cols], &vec![1.0; cols]).unwrap();
            let reference = dense_reference(&triples, &objective, &rhs, &senses, rows, cols);
            match (sol.status, reference) {
                (LpStatus::Optimal, Some(best)) => {
                    assert!(
                        (sol.objective - best).abs() < 1e-6,
                        "trial {trial}: simplex {} vs reference {best}",
                        sol.objective
                    );
                }
                (LpStatus::Infeasible, None) => {}
                (status, reference) => {
                    panic!("trial {trial}: simplex {status:?} vs reference {reference:?}")
                }
            }
        }
    }

    /// Brute-force reference: samples the optimum over all basic solutions
    /// by enumerating vertex candidates via active-set combinations on a
    /// dense tableau. Small sizes only.
    fn dense_reference(
        triples: &[(usize, usize, f64)],
        objective: &[f64],
        rhs: &[f64],
        senses: &[char],
        rows: usize,
        cols: usize,
    ) -> Option<f64> {
        // Exhaustive active-set enumeration: every variable is either at a
        // bound or free, and every free set is solved against each same-size
        // subset of rows treated as equalities. An LP optimum lies at such a
        // vertex, so the best feasible candidate is the true optimum.
        let mut dense = vec![vec![0.0f64; cols]; rows];
        for &(r, c, v) in triples {
            dense[r][c] += v;
        }
        let feasible = |x: &[f64]| -> bool {
            for r in 0..rows {
                let lhs: f64 = (0..cols).map(|c| dense[r][c] * x[c]).sum();
                let ok = match senses[r] {
                    'l' => lhs <= rhs[r] + 1e-7,
                    'g' => lhs >= rhs[r] - 1e-7,
                    'e' => (lhs - rhs[r]).abs() <= 1e-7,
                    _ => unreachable!(),
                };
                if !ok {
                    return false;
                }
            }
            x.iter().all(|&v| (-1e-9..=1.0 + 1e-9).contains(&v))
        };
        let mut best: Option<f64> = None;
        // Enumerate candidate active sets: subsets of rows forced tight and
        // subsets of variables forced to bounds填 with every bound sign
        // pattern. All remaining free variables are solved by least squares
        // (square systems only).
        let row_masks = 1usize << rows;
        let var_masks = 1usize << cols;
        for vmask in 0..var_masks {
            let free: Vec<usize> = (0..cols).filter(|c| vmask & (1 << c) == 0).collect();
            let bound_vars: Vec<usize> = (0..cols).filter(|c| vmask & (1 << c) != 0).collect();
            let bound_patterns = 1usize << bound_vars.len();
            for pattern in 0..bound_patterns {
                let mut x = vec![0.0f64; cols];
                for (bit, &c) in bound_vars.iter().enumerate() {
                    x[c] = if pattern & (1 << bit) != 0 { 1.0 } else { 0.0 };
                }
                if free.is_empty() {
                    if feasible(&x) {
                        let obj: f64 = (0..cols).map(|c| objective[c] * x[c]).sum();
                        best = Some(best.map_or(obj, |b: f64| b.min(obj)));
                    }
                    continue;
                }
                for rmask in 0..row_masks {
                    let tight: Vec<usize> = (0..rows).filter(|r| rmask & (1 << r) != 0).collect();
                    if tight.len() != free.len() {
                        continue;
                    }
                    // Solve the square system over the free variables.
                    let k = free.len();
                    let mut a = vec![vec![0.0f64; k + 1]; k];
                    for (ri, &r) in tight.iter().enumerate() {
                        for (ci, &c) in free.iter().enumerate() {
                            a[ri][ci] = dense[r][c];
                        }
                        let fixed: f64 = bound_vars.iter().map(|&c| dense[r][c] * x[c]).sum();
                        a[ri][k] = rhs[r] - fixed;
                    }
                    if let Some(solved) = gauss(&mut a, k) {
                        let mut candidate = x.clone();
                        for (ci, &c) in free.iter().enumerate() {
                            candidate[c] = solved[ci];
                        }
                        if feasible(&candidate) {
                            let obj: f64 =
                                (0..cols).map(|c| objective[c] * candidate[c]).sum();
                            best = Some(best.map_or(obj, |b: f64| b.min(obj)));
                        }
                    }
                }
            }
        }
        best
    }

    fn gauss(a: &mut [Vec<f64>], k: usize) -> Option<Vec<f64>> {
        for col in 0..k {
            let pivot = (col..k).max_by(|&i, &j| {
                a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
            })?;
            if a[pivot][col].abs() < 1e-9 {
                return None;
            }
            a.swap(col, pivot);
            for row in 0..k {
                if row != col && a[row][col] != 0.0 {
                    let f = a[row][col] / a[col][col];
                    for c in col..=k {
                        a[row][c] -= f * a[col][c];
                    }
                }
            }
        }
        Some((0..k).map(|i| a[i][k] / a[i][i]).collect())
    }
}
