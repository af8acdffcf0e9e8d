//! Bounded-variable dual simplex.
//!
//! Each row `a_i x` gets a logical variable `r_i = a_i x` whose bounds come
//! from the row sense plus the activity range implied by the (finite)
//! variable bounds. With every variable boxed, any basis is made dual
//! feasible by parking each nonbasic at the bound its reduced cost asks
//! for, so no phase one is needed and bound changes between
//! branch-and-bound nodes keep the basis valid.
//!
//! The basis inverse is kept in partitioned form: only the square block of
//! rows whose logical is nonbasic by basic structural columns is inverted
//! densely, and all four kinds of basis change update that block in
//! O(s²).

use crate::error::{Error, Result};
use crate::milp::{MilpModel, Sense};

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpSettings {
    /// Primal feasibility tolerance in the scaled problem.
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub pivot_tol: f64,
    pub refactor_interval: usize,
    /// Pivots within one solve after which Bland's rule takes over;
    /// `None` picks a size-dependent default.
    pub bland_threshold: Option<usize>,
    /// Hard pivot limit per solve; `None` picks a size-dependent default.
    pub max_pivots: Option<usize>,
}

impl Default for LpSettings {
    fn default() -> Self {
        LpSettings {
            primal_tol: 1e-9,
            dual_tol: 1e-9,
            pivot_tol: 1e-9,
            refactor_interval: 100,
            bland_threshold: None,
            max_pivots: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Outcome {
    Optimal,
    Infeasible,
    /// The dual bound exceeded the supplied cutoff.
    Cutoff,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
}

#[derive(Clone, Debug, Default)]
struct Sparse {
    start: Vec<usize>,
    idx: Vec<usize>,
    val: Vec<f64>,
}

impl Sparse {
    fn from_lists(lists: Vec<Vec<(usize, f64)>>) -> Self {
        let mut s = Sparse {
            start: Vec::with_capacity(lists.len() + 1),
            ..Default::default()
        };
        s.start.push(0);
        for l in lists {
            for (i, v) in l {
                s.idx.push(i);
                s.val.push(v);
            }
            s.start.push(s.idx.len());
        }
        s
    }

    #[inline]
    fn iter(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.start[j]..self.start[j + 1];
        self.idx[r.clone()].iter().copied().zip(self.val[r].iter().copied())
    }
}

fn pow2(x: f64) -> f64 {
    if x.is_finite() && x > 0.0 {
        x.log2().round().exp2()
    } else {
        1.0
    }
}

/// Geometric row/column scaling followed by row equilibration, rounded
/// to powers of two so scaling itself introduces no rounding.
fn compute_scaling(cols: &[Vec<(usize, f64)>], m: usize) -> (Vec<f64>, Vec<f64>) {
    let n = cols.len();
    let mut rs = vec![1.0; m];
    let mut cs = vec![1.0; n];
    for _ in 0..4 {
        let mut lo = vec![f64::INFINITY; m];
        let mut hi = vec![0.0f64; m];
        for (j, col) in cols.iter().enumerate() {
            for &(i, a) in col {
                let v = a.abs() * rs[i] * cs[j];
                lo[i] = lo[i].min(v);
                hi[i] = hi[i].max(v);
            }
        }
        for i in 0..m {
            if hi[i] > 0.0 {
                rs[i] /= (lo[i] * hi[i]).sqrt();
            }
        }
        for (j, col) in cols.iter().enumerate() {
            let (mut l, mut h) = (f64::INFINITY, 0.0f64);
            for &(i, a) in col {
                let v = a.abs() * rs[i] * cs[j];
                l = l.min(v);
                h = h.max(v);
            }
            if h > 0.0 {
                cs[j] /= (l * h).sqrt();
            }
        }
    }
    let mut hi = vec![0.0f64; m];
    for (j, col) in cols.iter().enumerate() {
        for &(i, a) in col {
            hi[i] = hi[i].max(a.abs() * rs[i] * cs[j]);
        }
    }
    for i in 0..m {
        if hi[i] > 0.0 {
            rs[i] /= hi[i];
        }
    }
    (rs.into_iter().map(pow2).collect(), cs.into_iter().map(pow2).collect())
}

pub(crate) struct DualSimplex {
    n: usize,
    m: usize,
    cols: Sparse,
    rows: Sparse,
    col_scale: Vec<f64>,
    obj_scale: f64,
    obj_constant: f64,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    state: Vec<State>,
    x: Vec<f64>,
    d: Vec<f64>,
    weight: Vec<f64>,
    /// Basic structurals, in inverse-row order.
    s_list: Vec<usize>,
    /// Rows whose logical is nonbasic, in inverse-column order.
    r_list: Vec<usize>,
    s_pos: Vec<usize>,
    r_pos: Vec<usize>,
    /// Inverse of the (r_list × s_list) block, stored so that
    /// `inv[u * cap + t]` is entry (t, u).
    inv: Vec<f64>,
    cap: usize,
    since_refactor: usize,
    primal_stale: bool,
    settings: LpSettings,
    pub(crate) total_pivots: usize,
}

impl DualSimplex {
    pub(crate) fn new(model: &MilpModel, settings: LpSettings) -> Result<Self> {
        let n = model.num_vars();
        let m = model.num_constraints();
        let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for (i, c) in model.constraints().iter().enumerate() {
            for &(v, a) in &c.terms {
                cols[v.0].push((i, a));
            }
        }
        let (rs, cs) = compute_scaling(&cols, m);

        let vars = model.variables();
        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        for (j, v) in vars.iter().enumerate() {
            lower.push(v.lower / cs[j]);
            upper.push(v.upper / cs[j]);
        }
        for (i, c) in model.constraints().iter().enumerate() {
            let (mut amin, mut amax) = (0.0, 0.0);
            for &(v, a) in &c.terms {
                let (l, u) = (vars[v.0].lower, vars[v.0].upper);
                if a > 0.0 {
                    amin += a * l;
                    amax += a * u;
                } else {
                    amin += a * u;
                    amax += a * l;
                }
            }
            let (lo, hi) = match c.sense {
                Sense::Le => (amin, c.rhs.min(amax)),
                Sense::Ge => (c.rhs.max(amin), amax),
                Sense::Eq => (c.rhs, c.rhs),
            };
            lower.push(lo * rs[i]);
            upper.push(hi * rs[i]);
        }

        let mut scaled_cols = Vec::with_capacity(n);
        let mut row_lists: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m];
        for (j, col) in cols.into_iter().enumerate() {
            let sc: Vec<(usize, f64)> = col.into_iter().map(|(i, a)| (i, a * rs[i] * cs[j])).collect();
            for &(i, a) in &sc {
                row_lists[i].push((j, a));
            }
            scaled_cols.push(sc);
        }

        let mut cost = vec![0.0; n + m];
        for &(v, c) in &model.objective().terms {
            cost[v.0] = c * cs[v.0];
        }
        let cmax = cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let obj_scale = if cmax > 0.0 { pow2(1.0 / cmax) } else { 1.0 };
        for c in &mut cost {
            *c *= obj_scale;
        }

        let mut state = vec![State::Basic; n + m];
        let mut x = vec![0.0; n + m];
        for j in 0..n {
            if cost[j] >= 0.0 {
                state[j] = State::Lower;
                x[j] = lower[j];
            } else {
                state[j] = State::Upper;
                x[j] = upper[j];
            }
        }
        let d = cost.clone();
        let cap = n.min(m);
        Ok(DualSimplex {
            n,
            m,
            cols: Sparse::from_lists(scaled_cols),
            rows: Sparse::from_lists(row_lists),
            col_scale: cs,
            obj_scale,
            obj_constant: model.objective().constant,
            cost,
            lower,
            upper,
            state,
            x,
            d,
            weight: vec![1.0; n + m],
            s_list: Vec::with_capacity(cap),
            r_list: Vec::with_capacity(cap),
            s_pos: vec![NONE; n],
            r_pos: vec![NONE; m],
            inv: vec![0.0; cap * cap],
            cap,
            since_refactor: 0,
            primal_stale: true,
            settings,
            total_pivots: 0,
        })
    }

    /// Change the bounds of structural `j` (unscaled units).
    pub(crate) fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        let cs = self.col_scale[j];
        self.lower[j] = lo / cs;
        self.upper[j] = hi / cs;
        if self.state[j] != State::Basic {
            if self.d[j] >= 0.0 {
                self.state[j] = State::Lower;
                self.x[j] = self.lower[j];
            } else {
                self.state[j] = State::Upper;
                self.x[j] = self.upper[j];
            }
            self.primal_stale = true;
        }
    }

    /// Current objective in model units (a valid lower bound on the LP
    /// while the basis is dual feasible).
    pub(crate) fn objective(&self) -> f64 {
        let s: f64 = (0..self.n).map(|j| self.cost[j] * self.x[j]).sum();
        s / self.obj_scale + self.obj_constant
    }

    /// Structural values in model units, clamped into their bounds.
    pub(crate) fn values(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| (self.x[j].clamp(self.lower[j], self.upper[j])) * self.col_scale[j])
            .collect()
    }

    fn is_basic_row(&self, i: usize) -> bool {
        self.r_pos[i] == NONE
    }

    /// Solve B z = h for dense h; returns (structural part by position,
    /// logical part by row).
    fn ftran(&self, h: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let s = self.s_list.len();
        let mut zs = vec![0.0; s];
        let mut zl = vec![0.0; self.m];
        for (i, &v) in h.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let u = self.r_pos[i];
            if u != NONE {
                let col = &self.inv[u * self.cap..u * self.cap + s];
                for (z, &mi) in zs.iter_mut().zip(col) {
                    *z += mi * v;
                }
            } else {
                zl[i] -= v;
            }
        }
        self.finish_ftran(&zs, &mut zl);
        (zs, zl)
    }

    fn ftran_column(&self, q: usize) -> (Vec<f64>, Vec<f64>) {
        let s = self.s_list.len();
        let mut zs = vec![0.0; s];
        let mut zl = vec![0.0; self.m];
        let push = |i: usize, v: f64, zs: &mut [f64], zl: &mut [f64]| {
            let u = self.r_pos[i];
            if u != NONE {
                let col = &self.inv[u * self.cap..u * self.cap + s];
                for (z, &mi) in zs.iter_mut().zip(col) {
                    *z += mi * v;
                }
            } else {
                zl[i] -= v;
            }
        };
        if q < self.n {
            for (i, a) in self.cols.iter(q) {
                push(i, a, &mut zs, &mut zl);
            }
        } else {
            push(q - self.n, -1.0, &mut zs, &mut zl);
        }
        self.finish_ftran(&zs, &mut zl);
        (zs, zl)
    }

    fn finish_ftran(&self, zs: &[f64], zl: &mut [f64]) {
        for (t, &z) in zs.iter().enumerate() {
            if z == 0.0 {
                continue;
            }
            for (i, a) in self.cols.iter(self.s_list[t]) {
                if self.r_pos[i] == NONE {
                    zl[i] += a * z;
                }
            }
        }
    }

    /// y with yᵀB = c_Bᵀ, where `cs` holds structural basic costs by
    /// position and `cl` logical basic costs by row.
    fn btran(&self, cs: &[f64], cl: &[f64]) -> Vec<f64> {
        let s = self.s_list.len();
        let mut y = vec![0.0; self.m];
        let mut v = cs.to_vec();
        for i in 0..self.m {
            if self.r_pos[i] == NONE && cl[i] != 0.0 {
                y[i] = -cl[i];
            }
        }
        for (t, vt) in v.iter_mut().enumerate() {
            for (i, a) in self.cols.iter(self.s_list[t]) {
                if self.r_pos[i] == NONE {
                    *vt -= a * y[i];
                }
            }
        }
        for u in 0..s {
            let col = &self.inv[u * self.cap..u * self.cap + s];
            y[self.r_list[u]] = col.iter().zip(&v).map(|(a, b)| a * b).sum();
        }
        y
    }

    /// Row `p` of B⁻¹ for the basic variable `p`.
    fn pivot_row(&self, p: usize) -> Vec<f64> {
        let s = self.s_list.len();
        let mut rho = vec![0.0; self.m];
        if p < self.n {
            let t = self.s_pos[p];
            for u in 0..s {
                rho[self.r_list[u]] = self.inv[u * self.cap + t];
            }
        } else {
            let l = p - self.n;
            rho[l] = -1.0;
            let mut v = vec![0.0; s];
            for (j, a) in self.rows.iter(l) {
                if self.s_pos[j] != NONE {
                    v[self.s_pos[j]] = a;
                }
            }
            for u in 0..s {
                let col = &self.inv[u * self.cap..u * self.cap + s];
                rho[self.r_list[u]] = col.iter().zip(&v).map(|(a, b)| a * b).sum();
            }
        }
        rho
    }

    fn basic_value<'a>(&self, j: usize, zs: &'a [f64], zl: &'a [f64]) -> f64 {
        if j < self.n {
            zs[self.s_pos[j]]
        } else {
            zl[j - self.n]
        }
    }

    fn recompute_primal(&mut self) {
        let mut h = vec![0.0; self.m];
        for j in 0..self.n {
            if self.state[j] != State::Basic && self.x[j] != 0.0 {
                for (i, a) in self.cols.iter(j) {
                    h[i] += a * self.x[j];
                }
            }
        }
        for (i, hi) in h.iter_mut().enumerate() {
            if self.r_pos[i] != NONE {
                *hi -= self.x[self.n + i];
            }
        }
        let (zs, zl) = self.ftran(&h);
        for (t, &j) in self.s_list.iter().enumerate() {
            self.x[j] = -zs[t];
        }
        for i in 0..self.m {
            if self.is_basic_row(i) {
                self.x[self.n + i] = -zl[i];
            }
        }
        self.primal_stale = false;
    }

    fn recompute_duals(&mut self) {
        let cs: Vec<f64> = self.s_list.iter().map(|&j| self.cost[j]).collect();
        let y = self.btran(&cs, &vec![0.0; self.m]);
        for j in 0..self.n {
            self.d[j] = if self.state[j] == State::Basic {
                0.0
            } else {
                self.cost[j] - self.cols.iter(j).map(|(i, a)| a * y[i]).sum::<f64>()
            };
        }
        for i in 0..self.m {
            self.d[self.n + i] = if self.is_basic_row(i) { 0.0 } else { y[i] };
        }
    }

    /// Park every nonbasic on the bound matching its reduced cost.
    fn restore_dual_feasibility(&mut self) -> bool {
        let mut changed = false;
        for j in 0..self.n + self.m {
            let want = match self.state[j] {
                State::Basic => continue,
                State::Lower if self.d[j] < -self.settings.dual_tol => State::Upper,
                State::Upper if self.d[j] > self.settings.dual_tol => State::Lower,
                s => s,
            };
            if want != self.state[j] {
                self.state[j] = want;
                self.x[j] = if want == State::Lower { self.lower[j] } else { self.upper[j] };
                changed = true;
            }
        }
        changed
    }

    /// Rebuild the block inverse from scratch, dropping dependent
    /// structural columns in favour of logicals if the basis is singular.
    fn refactor(&mut self) {
        loop {
            let s = self.s_list.len();
            let mut a = vec![0.0; s * s];
            for (t, &j) in self.s_list.iter().enumerate() {
                for (i, v) in self.cols.iter(j) {
                    let u = self.r_pos[i];
                    if u != NONE {
                        a[u * s + t] = v;
                    }
                }
            }
            match invert(&mut a, s) {
                Ok(inv) => {
                    for u in 0..s {
                        for t in 0..s {
                            // `inv` is S×R row-major: entry (t, u).
                            self.inv[u * self.cap + t] = inv[t * s + u];
                        }
                    }
                    break;
                }
                Err((bad_cols, free_rows)) => {
                    log::warn!("singular basis: replacing {} structural column(s) by logicals", bad_cols.len());
                    let drop: Vec<usize> = bad_cols.iter().map(|&t| self.s_list[t]).collect();
                    let add: Vec<usize> = free_rows.iter().map(|&u| self.r_list[u]).collect();
                    for j in drop {
                        self.state[j] = if self.d[j] >= 0.0 { State::Lower } else { State::Upper };
                        self.x[j] = if self.state[j] == State::Lower { self.lower[j] } else { self.upper[j] };
                        self.s_pos[j] = NONE;
                    }
                    for i in add {
                        self.state[self.n + i] = State::Basic;
                        self.r_pos[i] = NONE;
                        self.weight[self.n + i] = 1.0;
                    }
                    self.s_list.retain(|&j| self.state[j] == State::Basic);
                    self.r_list.retain(|&i| self.state[self.n + i] != State::Basic);
                    for (t, &j) in self.s_list.iter().enumerate() {
                        self.s_pos[j] = t;
                    }
                    for (u, &i) in self.r_list.iter().enumerate() {
                        self.r_pos[i] = u;
                    }
                }
            }
        }
        self.since_refactor = 0;
        self.recompute_duals();
        self.restore_dual_feasibility();
        self.recompute_primal();
    }

    fn infeasibility(&self, j: usize) -> f64 {
        let x = self.x[j];
        if x < self.lower[j] - self.settings.primal_tol {
            self.lower[j] - x
        } else if x > self.upper[j] + self.settings.primal_tol {
            x - self.upper[j]
        } else {
            0.0
        }
    }

    fn basics(&self) -> impl Iterator<Item = usize> + '_ {
        self.s_list
            .iter()
            .copied()
            .chain((0..self.m).filter(|&i| self.is_basic_row(i)).map(|i| self.n + i))
    }

    fn max_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.m {
            let act: f64 = self.rows.iter(i).map(|(j, a)| a * self.x[j]).sum();
            let r = self.x[self.n + i];
            worst = worst.max((act - r).abs() / (1.0 + r.abs()));
        }
        worst
    }

    /// Run the dual simplex from the current basis. Stops early with
    /// `Cutoff` once the objective exceeds `cutoff`.
    pub(crate) fn solve(&mut self, cutoff: f64) -> Result<Outcome> {
        for j in 0..self.n + self.m {
            if self.lower[j] > self.upper[j] + self.settings.primal_tol {
                return Ok(Outcome::Infeasible);
            }
        }
        if self.primal_stale {
            self.recompute_primal();
        }
        let size = self.n + self.m;
        let bland_after = self.settings.bland_threshold.unwrap_or(20 * size + 1000);
        let max_pivots = self.settings.max_pivots.unwrap_or(200 * size + 20_000);
        let mut pivots = 0usize;
        loop {
            if cutoff.is_finite() && self.objective() > cutoff {
                return Ok(Outcome::Cutoff);
            }
            let bland = pivots >= bland_after;
            let mut leave = NONE;
            let mut best = 0.0;
            for j in self.basics() {
                let inf = self.infeasibility(j);
                if inf <= 0.0 {
                    continue;
                }
                if bland {
                    if j < leave {
                        leave = j;
                    }
                } else {
                    let score = inf * inf / self.weight[j];
                    if score > best || (score == best && j < leave) {
                        best = score;
                        leave = j;
                    }
                }
            }
            if leave == NONE {
                if self.since_refactor > 0 && self.max_residual() > 1e-9 {
                    self.refactor();
                    continue;
                }
                return Ok(Outcome::Optimal);
            }
            if pivots >= max_pivots {
                return Err(Error::Solver(format!("simplex pivot limit {max_pivots} reached")));
            }

            let p = leave;
            let below = self.x[p] < self.lower[p];
            let sgn = if below { 1.0 } else { -1.0 };
            let delta = self.infeasibility(p);
            let rho = self.pivot_row(p);

            let mut alpha = vec![0.0; self.n + self.m];
            for (i, &r) in rho.iter().enumerate() {
                if r == 0.0 {
                    continue;
                }
                for (j, a) in self.rows.iter(i) {
                    alpha[j] += r * a;
                }
                if self.r_pos[i] != NONE {
                    alpha[self.n + i] = -r;
                }
            }

            let mut cands: Vec<(f64, usize, f64)> = Vec::new();
            for (j, &aj) in alpha.iter().enumerate() {
                if self.state[j] == State::Basic || self.upper[j] <= self.lower[j] {
                    continue;
                }
                let ab = sgn * aj;
                match self.state[j] {
                    State::Lower if ab < -self.settings.pivot_tol => {
                        cands.push((self.d[j].max(0.0) / -ab, j, ab));
                    }
                    State::Upper if ab > self.settings.pivot_tol => {
                        cands.push(((-self.d[j]).max(0.0) / ab, j, ab));
                    }
                    _ => {}
                }
            }
            cands.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

            let mut flips: Vec<usize> = Vec::new();
            let q_idx;
            if cands.is_empty() {
                if self.since_refactor > 0 {
                    self.refactor();
                    continue;
                }
                return Ok(Outcome::Infeasible);
            }
            if bland {
                let tmin = cands[0].0;
                q_idx = cands
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c.0 <= tmin + 1e-12)
                    .min_by_key(|(_, c)| c.1)
                    .map(|(k, _)| k)
                    .unwrap();
            } else {
                let mut slope = delta;
                let mut k = 0;
                while k < cands.len() {
                    let (_, j, ab) = cands[k];
                    let next = slope - ab.abs() * (self.upper[j] - self.lower[j]);
                    // A residual slope within tolerance means this
                    // candidate makes the row feasible.
                    if next > self.settings.primal_tol {
                        flips.push(j);
                        slope = next;
                        k += 1;
                    } else {
                        break;
                    }
                }
                if k == cands.len() {
                    if self.since_refactor > 0 {
                        self.refactor();
                        continue;
                    }
                    return Ok(Outcome::Infeasible);
                }
                let dual_tol = self.settings.dual_tol;
                let mut tmax = f64::INFINITY;
                for c in &cands[k..] {
                    if c.0 > tmax {
                        break;
                    }
                    let dj = if self.state[c.1] == State::Lower { self.d[c.1] } else { -self.d[c.1] };
                    tmax = tmax.min((dj.max(0.0) + dual_tol) / c.2.abs());
                }
                let mut pick = k;
                for (idx, c) in cands.iter().enumerate().skip(k) {
                    if c.0 > tmax {
                        break;
                    }
                    if c.2.abs() > cands[pick].2.abs() {
                        pick = idx;
                    }
                }
                q_idx = pick;
            }
            let (t_step, q, _) = cands[q_idx];

            let (mut qs, mut ql) = self.ftran_column(q);
            let alpha_r = self.basic_value(p, &qs, &ql);
            if (alpha_r - alpha[q]).abs() > 1e-7 * (1.0 + alpha_r.abs()) || alpha_r.abs() < 1e-12 {
                if self.since_refactor > 0 {
                    self.refactor();
                    continue;
                }
                if alpha_r.abs() < 1e-12 {
                    return Err(Error::Solver("numerically singular pivot".into()));
                }
            }

            // Bound flips of the passed breakpoints.
            if !flips.is_empty() {
                let mut h = vec![0.0; self.m];
                for &j in &flips {
                    let (from, to, st) = if self.state[j] == State::Lower {
                        (self.lower[j], self.upper[j], State::Upper)
                    } else {
                        (self.upper[j], self.lower[j], State::Lower)
                    };
                    let dx = to - from;
                    self.state[j] = st;
                    self.x[j] = to;
                    if j < self.n {
                        for (i, a) in self.cols.iter(j) {
                            h[i] += a * dx;
                        }
                    } else {
                        h[j - self.n] -= dx;
                    }
                }
                let (zs, zl) = self.ftran(&h);
                for (t, &j) in self.s_list.iter().enumerate() {
                    self.x[j] -= zs[t];
                }
                for i in 0..self.m {
                    if self.is_basic_row(i) {
                        self.x[self.n + i] -= zl[i];
                    }
                }
            }

            // Primal step.
            let target = if below { self.lower[p] } else { self.upper[p] };
            let theta = (self.x[p] - target) / alpha_r;
            for (t, &j) in self.s_list.iter().enumerate() {
                self.x[j] -= theta * qs[t];
            }
            for i in 0..self.m {
                if self.is_basic_row(i) {
                    self.x[self.n + i] -= theta * ql[i];
                }
            }
            self.x[q] += theta;
            self.x[p] = target;

            // Dual steepest-edge weights.
            let wp: f64 = rho.iter().map(|r| r * r).sum();
            let (ts, tl) = self.ftran(&rho);
            let basics: Vec<usize> = self.basics().collect();
            for &j in &basics {
                if j == p {
                    continue;
                }
                let ai = self.basic_value(j, &qs, &ql);
                if ai == 0.0 {
                    continue;
                }
                let ratio = ai / alpha_r;
                let ti = self.basic_value(j, &ts, &tl);
                self.weight[j] = (self.weight[j] - 2.0 * ratio * ti + ratio * ratio * wp).max(ratio * ratio).max(1e-12);
            }
            self.weight[q] = (wp / (alpha_r * alpha_r)).max(1e-12);

            // Dual step.
            for (j, &aj) in alpha.iter().enumerate() {
                if self.state[j] != State::Basic && aj != 0.0 {
                    self.d[j] += sgn * t_step * aj;
                }
            }
            self.d[q] = 0.0;
            self.d[p] = sgn * t_step;

            // Basis change.
            self.state[q] = State::Basic;
            self.state[p] = if below { State::Lower } else { State::Upper };
            self.change_basis(q, p, &mut qs, &mut ql, &rho, alpha_r);

            pivots += 1;
            self.total_pivots += 1;
            self.since_refactor += 1;
            if self.since_refactor >= self.settings.refactor_interval {
                self.refactor();
            }
        }
    }

    fn change_basis(&mut self, q: usize, p: usize, qs: &mut [f64], _ql: &mut [f64], rho: &[f64], alpha_r: f64) {
        let s = self.s_list.len();
        let cap = self.cap;
        match (q < self.n, p < self.n) {
            (true, true) => {
                let t = self.s_pos[p];
                let dt = qs[t];
                for u in 0..s {
                    let col = &mut self.inv[u * cap..u * cap + s];
                    let mt = col[t] / dt;
                    for (i, c) in col.iter_mut().enumerate() {
                        if i != t {
                            *c -= qs[i] * mt;
                        }
                    }
                    col[t] = mt;
                }
                self.s_list[t] = q;
                self.s_pos[q] = t;
                self.s_pos[p] = NONE;
            }
            (true, false) => {
                let l = p - self.n;
                let sigma = -alpha_r;
                let v: Vec<f64> = self.r_list.iter().map(|&i| rho[i]).collect();
                for u in 0..s {
                    let f = v[u] / sigma;
                    let col = &mut self.inv[u * cap..u * cap + s];
                    for (c, &z) in col.iter_mut().zip(qs.iter()) {
                        *c += z * f;
                    }
                    self.inv[u * cap + s] = -v[u] / sigma;
                }
                for t in 0..s {
                    self.inv[s * cap + t] = -qs[t] / sigma;
                }
                self.inv[s * cap + s] = 1.0 / sigma;
                self.s_list.push(q);
                self.s_pos[q] = s;
                self.r_list.push(l);
                self.r_pos[l] = s;
            }
            (false, true) => {
                let i = q - self.n;
                let u = self.r_pos[i];
                let t = self.s_pos[p];
                let piv = self.inv[u * cap + t];
                let row_t: Vec<f64> = (0..s).map(|uu| self.inv[uu * cap + t]).collect();
                let col_u: Vec<f64> = self.inv[u * cap..u * cap + s].to_vec();
                for uu in 0..s {
                    if uu == u {
                        continue;
                    }
                    let f = row_t[uu] / piv;
                    let col = &mut self.inv[uu * cap..uu * cap + s];
                    for (tt, c) in col.iter_mut().enumerate() {
                        if tt != t {
                            *c -= col_u[tt] * f;
                        }
                    }
                }
                let last = s - 1;
                if t != last {
                    for uu in 0..s {
                        self.inv[uu * cap + t] = self.inv[uu * cap + last];
                    }
                }
                if u != last {
                    for tt in 0..s {
                        self.inv[u * cap + tt] = self.inv[last * cap + tt];
                    }
                }
                self.s_list.swap_remove(t);
                self.s_pos[p] = NONE;
                if t < self.s_list.len() {
                    self.s_pos[self.s_list[t]] = t;
                }
                self.r_list.swap_remove(u);
                self.r_pos[i] = NONE;
                if u < self.r_list.len() {
                    self.r_pos[self.r_list[u]] = u;
                }
            }
            (false, false) => {
                let i = q - self.n;
                let l = p - self.n;
                let u = self.r_pos[i];
                let v: Vec<f64> = self.r_list.iter().map(|&r| rho[r]).collect();
                let vu = v[u];
                let pivot_col: Vec<f64> = self.inv[u * cap..u * cap + s].iter().map(|c| c / vu).collect();
                for uu in 0..s {
                    if uu == u || v[uu] == 0.0 {
                        continue;
                    }
                    let f = v[uu];
                    let col = &mut self.inv[uu * cap..uu * cap + s];
                    for (c, &pc) in col.iter_mut().zip(&pivot_col) {
                        *c -= f * pc;
                    }
                }
                self.inv[u * cap..u * cap + s].copy_from_slice(&pivot_col);
                self.r_list[u] = l;
                self.r_pos[l] = u;
                self.r_pos[i] = NONE;
            }
        }
    }
}

/// Gauss-Jordan inverse of the row-major s×s matrix `a` (rows R, columns
/// S), returned S×R row-major. On singularity returns the dependent
/// column positions and the rows left without a pivot.
#[allow(clippy::type_complexity)]
fn invert(a: &mut [f64], s: usize) -> std::result::Result<Vec<f64>, (Vec<usize>, Vec<usize>)> {
    let mut e = vec![0.0; s * s];
    for i in 0..s {
        e[i * s + i] = 1.0;
    }
    let mut used = vec![false; s];
    let mut pivot_row = vec![NONE; s];
    let mut bad = Vec::new();
    for t in 0..s {
        let mut best = NONE;
        let mut bv = 0.0;
        for u in 0..s {
            if !used[u] && a[u * s + t].abs() > bv {
                bv = a[u * s + t].abs();
                best = u;
            }
        }
        if best == NONE || bv < 1e-11 {
            bad.push(t);
            continue;
        }
        used[best] = true;
        pivot_row[t] = best;
        let pv = a[best * s + t];
        for c in 0..s {
            a[best * s + c] /= pv;
            e[best * s + c] /= pv;
        }
        for u in 0..s {
            if u == best {
                continue;
            }
            let f = a[u * s + t];
            if f == 0.0 {
                continue;
            }
            for c in 0..s {
                a[u * s + c] -= f * a[best * s + c];
                e[u * s + c] -= f * e[best * s + c];
            }
        }
    }
    if !bad.is_empty() {
        return Err((bad, (0..s).filter(|&u| !used[u]).collect()));
    }
    // E·a is a permutation with a 1 at (pivot_row[t], t), so row t of
    // a⁻¹ is row pivot_row[t] of E.
    let mut res = vec![0.0; s * s];
    for t in 0..s {
        res[t * s..(t + 1) * s].copy_from_slice(&e[pivot_row[t] * s..(pivot_row[t] + 1) * s]);
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_model(rng: &mut ChaCha8Rng) -> MilpModel {
        let mut m = MilpModel::new("warm");
        let n = 14;
        let vars: Vec<_> = (0..n)
            .map(|j| {
                if j < 6 {
                    m.add_binary(format!("b{j}")).unwrap()
                } else {
                    m.add_continuous(format!("c{j}"), 0.0, rng.gen_range(0.5..4.0)).unwrap()
                }
            })
            .collect();
        for i in 0..10 {
            let mut terms = Vec::new();
            for &v in &vars {
                if rng.gen_bool(0.5) {
                    terms.push((v, rng.gen_range(-1.0..1.0)));
                }
            }
            let sense = [Sense::Le, Sense::Ge, Sense::Eq][rng.gen_range(0..3)];
            let rhs = if sense == Sense::Eq { rng.gen_range(-0.3..0.3) } else { rng.gen_range(-1.0..1.0) };
            m.add_constraint(format!("r{i}"), terms, sense, rhs).unwrap();
        }
        let obj: Vec<_> = vars.iter().map(|&v| (v, rng.gen_range(-1.0..1.0))).collect();
        m.set_objective(obj, 0.0).unwrap();
        m
    }

    fn fresh(model: &MilpModel, bounds: &[(f64, f64)]) -> Option<f64> {
        let mut f = model.clone();
        for (j, &(lo, hi)) in bounds.iter().enumerate() {
            f.set_bounds(crate::milp::VarId(j), lo, hi).unwrap();
        }
        let mut e = DualSimplex::new(&f, LpSettings::default()).unwrap();
        (e.solve(f64::INFINITY).unwrap() == Outcome::Optimal).then(|| e.objective())
    }

    // Bound changes on a reused engine must give the same answers as
    // solving each bound set from scratch.
    #[test]
    fn warm_engine_matches_fresh_solves() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for case in 0..40 {
            let model = random_model(&mut rng);
            let mut engine = DualSimplex::new(&model, LpSettings::default()).unwrap();
            let mut bounds: Vec<(f64, f64)> = model.variables().iter().map(|v| (v.lower, v.upper)).collect();
            for step in 0..30 {
                let j = rng.gen_range(0..6);
                bounds[j] = match rng.gen_range(0..3) {
                    0 => (0.0, 0.0),
                    1 => (1.0, 1.0),
                    _ => (0.0, 1.0),
                };
                engine.set_bounds(j, bounds[j].0, bounds[j].1);
                let warm = (engine.solve(f64::INFINITY).unwrap() == Outcome::Optimal).then(|| engine.objective());
                match (warm, fresh(&model, &bounds)) {
                    (None, None) => {}
                    (Some(a), Some(b)) => assert!((a - b).abs() < 1e-7, "case {case} step {step}: {a} vs {b}"),
                    (a, b) => panic!("case {case} step {step}: warm {a:?}, fresh {b:?}"),
                }
            }
        }
    }
}
