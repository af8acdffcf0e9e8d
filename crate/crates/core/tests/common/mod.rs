#![allow(dead_code)]

use hetnet_energy::harness::{ExperimentConfig, Preset};
use hetnet_energy::milp::{MilpModel, Sense, Symbol, VarId, VarKind, VarMap};
use hetnet_energy::solver::{solve_lp, LpStatus};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Textbook dense two-phase tableau simplex with Bland's rule. Returns
/// `None` when infeasible, otherwise the optimal objective.
pub fn tableau_lp(model: &MilpModel) -> Option<f64> {
    let vars = model.variables();
    let n = vars.len();
    // Rows: (coefs over shifted vars y = x - l, sense, rhs).
    let mut rows: Vec<(Vec<f64>, Sense, f64)> = Vec::new();
    for c in model.constraints() {
        let mut a = vec![0.0; n];
        let mut rhs = c.rhs;
        for (v, coef) in &c.terms {
            a[v.0] += coef;
            rhs -= coef * vars[v.0].lower;
        }
        rows.push((a, c.sense, rhs));
    }
    for (j, v) in vars.iter().enumerate() {
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        rows.push((a, Sense::Le, v.upper - v.lower));
    }
    for r in &mut rows {
        if r.2 < 0.0 {
            for c in &mut r.0 {
                *c = -*c;
            }
            r.2 = -r.2;
            r.1 = match r.1 {
                Sense::Le => Sense::Ge,
                Sense::Ge => Sense::Le,
                Sense::Eq => Sense::Eq,
            };
        }
    }
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Sense::Le).count();
    let width = n + n_slack + n_art + 1;
    let mut t = vec![vec![0.0; width]; m];
    let mut basis = vec![0usize; m];
    let (mut si, mut ai) = (n, n + n_slack);
    let mut art_cols = Vec::new();
    for (i, (a, sense, rhs)) in rows.iter().enumerate() {
        t[i][..n].copy_from_slice(a);
        t[i][width - 1] = *rhs;
        match sense {
            Sense::Le => {
                t[i][si] = 1.0;
                basis[i] = si;
                si += 1;
            }
            Sense::Ge => {
                t[i][si] = -1.0;
                si += 1;
                t[i][ai] = 1.0;
                basis[i] = ai;
                art_cols.push(ai);
                ai += 1;
            }
            Sense::Eq => {
                t[i][ai] = 1.0;
                basis[i] = ai;
                art_cols.push(ai);
                ai += 1;
            }
        }
    }
    let run = |t: &mut Vec<Vec<f64>>, basis: &mut Vec<usize>, cost: &[f64], allowed: usize| {
        loop {
            // Reduced costs.
            let mut enter = None;
            for j in 0..allowed {
                if basis.contains(&j) {
                    continue;
                }
                let mut d = cost[j];
                for i in 0..t.len() {
                    d -= cost[basis[i]] * t[i][j];
                }
                if d < -1e-11 {
                    enter = Some(j);
                    break;
                }
            }
            let Some(q) = enter else { return };
            let mut leave: Option<(f64, usize, usize)> = None;
            for i in 0..t.len() {
                if t[i][q] > 1e-11 {
                    let ratio = t[i][width - 1] / t[i][q];
                    let better = match leave {
                        None => true,
                        Some((r, _, b)) => ratio < r - 1e-13 || (ratio <= r + 1e-13 && basis[i] < b),
                    };
                    if better {
                        leave = Some((ratio, i, basis[i]));
                    }
                }
            }
            let (_, r, _) = leave.expect("bounded by construction");
            let pv = t[r][q];
            for c in t[r].iter_mut() {
                *c /= pv;
            }
            for i in 0..t.len() {
                if i != r && t[i][q] != 0.0 {
                    let f = t[i][q];
                    for c in 0..width {
                        t[i][c] -= f * t[r][c];
                    }
                }
            }
            basis[r] = q;
        }
    };
    let mut c1 = vec![0.0; width - 1];
    for &a in &art_cols {
        c1[a] = 1.0;
    }
    run(&mut t, &mut basis, &c1, width - 1);
    let infeas: f64 = (0..m).filter(|&i| c1[basis[i]] > 0.0).map(|i| t[i][width - 1]).sum();
    if infeas > 1e-8 {
        return None;
    }
    // Drive remaining artificials out where possible.
    for i in 0..m {
        if art_cols.contains(&basis[i]) {
            if let Some(q) = (0..n + n_slack).find(|&j| !basis.contains(&j) && t[i][j].abs() > 1e-9) {
                let pv = t[i][q];
                for c in t[i].iter_mut() {
                    *c /= pv;
                }
                for k in 0..m {
                    if k != i && t[k][q] != 0.0 {
                        let f = t[k][q];
                        for c in 0..width {
                            t[k][c] -= f * t[i][c];
                        }
                    }
                }
                basis[i] = q;
            }
        }
    }
    let mut c2 = vec![0.0; width - 1];
    for (v, c) in &model.objective().terms {
        c2[v.0] = *c;
    }
    run(&mut t, &mut basis, &c2, n + n_slack);
    let mut y = vec![0.0; n];
    for i in 0..m {
        if basis[i] < n {
            y[basis[i]] = t[i][width - 1];
        }
    }
    let x: Vec<f64> = (0..n).map(|j| y[j] + vars[j].lower).collect();
    Some(model.objective_value(&x))
}

/// Brute force over all binary assignments, solving the continuous rest
/// with the tableau oracle.
pub fn enumerate_milp(model: &MilpModel) -> Option<f64> {
    let bins: Vec<usize> = model
        .variables()
        .iter()
        .enumerate()
        .filter(|(_, v)| v.kind == VarKind::Binary)
        .map(|(j, _)| j)
        .collect();
    assert!(bins.len() <= 20);
    let mut best: Option<f64> = None;
    for mask in 0u64..(1 << bins.len()) {
        let mut m = model.clone();
        let mut ok = true;
        for (bit, &j) in bins.iter().enumerate() {
            let v = ((mask >> bit) & 1) as f64;
            let var = &model.variables()[j];
            if v < var.lower || v > var.upper {
                ok = false;
                break;
            }
            m.set_bounds(hetnet_energy::milp::VarId(j), v, v).unwrap();
        }
        if !ok {
            continue;
        }
        if let Some(obj) = tableau_lp(&m) {
            best = Some(best.map_or(obj, |b: f64| b.min(obj)));
        }
    }
    best
}


/// Desk preset cut down to three cells (one macro, two pico) and four DPs.
pub fn mini_config() -> ExperimentConfig {
    let mut c = ExperimentConfig::preset(Preset::Desk);
    c.cells = vec![c.cells[0].clone(), c.cells[2].clone(), c.cells[3].clone()];
    c.dp_count = 4;
    c
}

/// Exhaustive search of the inner approximation over allocations `A`,
/// activity supersets `x` and interference levels of allocated pairs, with
/// an LP per leaf. Unallocated pairs take level 1: nothing but their own
/// interference row depends on their level, and level 1 has the largest Ψ.
pub fn enumerate_inner_approximation(model: &MilpModel, map: &VarMap) -> Option<f64> {
    let (kn, mn, nn) = (map.num_cells, map.num_dps, map.num_levels);
    let mut best: Option<f64> = None;
    let mut serving = vec![0usize; mn];
    loop {
        let support: u32 = serving.iter().fold(0, |acc, &k| acc | 1 << k);
        for xmask in 1u32..(1 << kn) {
            if xmask & support != support {
                continue;
            }
            let mut levels = vec![0usize; mn];
            loop {
                let mut m2 = model.clone();
                let mut fix = |sym: Symbol, v: f64| {
                    let id = map.var(sym);
                    m2.set_bounds(id, v, v).unwrap();
                };
                for k in 0..kn {
                    fix(Symbol::X(k), (xmask >> k & 1) as f64);
                    for m in 0..mn {
                        let on = serving[m] == k;
                        fix(Symbol::A(k, m), on as u8 as f64);
                        let level = if on { levels[m] } else { 0 };
                        for n in 0..nn {
                            fix(Symbol::Phi(n, k, m), (n == level) as u8 as f64);
                        }
                    }
                }
                let lp = solve_lp(&m2).unwrap();
                if lp.status == LpStatus::Optimal {
                    best = Some(best.map_or(lp.objective, |b: f64| b.min(lp.objective)));
                }
                if !advance(&mut levels, nn) {
                    break;
                }
            }
        }
        if !advance(&mut serving, kn) {
            break;
        }
    }
    best
}

/// Odometer increment in base `base`; false after the last combination.
pub fn advance(digits: &mut [usize], base: usize) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

pub fn knapsack(values: &[f64], weights: &[f64], cap: f64) -> MilpModel {
    let mut m = MilpModel::new("knap");
    let vars: Vec<VarId> = (0..values.len()).map(|i| m.add_binary(format!("y{i}")).unwrap()).collect();
    m.add_constraint("cap", vars.iter().zip(weights).map(|(&v, &w)| (v, w)), Sense::Le, cap)
        .unwrap();
    m.set_objective(vars.iter().zip(values).map(|(&v, &c)| (v, -c)), 0.0).unwrap();
    m
}

pub fn random_milp(rng: &mut ChaCha8Rng) -> MilpModel {
    let mut m = MilpModel::new("mix");
    let nb = rng.gen_range(3..9);
    let nc = rng.gen_range(0..4);
    let mut vars = Vec::new();
    for i in 0..nb {
        vars.push(m.add_binary(format!("b{i}")).unwrap());
    }
    for i in 0..nc {
        vars.push(m.add_continuous(format!("c{i}"), 0.0, rng.gen_range(0.5..3.0)).unwrap());
    }
    for i in 0..rng.gen_range(1..6) {
        let mut terms = Vec::new();
        for &v in &vars {
            if rng.gen_bool(0.6) {
                terms.push((v, rng.gen_range(-2.0..2.0)));
            }
        }
        let sense = if rng.gen_bool(0.5) { Sense::Le } else { Sense::Ge };
        m.add_constraint(format!("r{i}"), terms, sense, rng.gen_range(-1.5..1.5)).unwrap();
    }
    let mut obj = Vec::new();
    for &v in &vars {
        obj.push((v, rng.gen_range(-3.0..3.0)));
    }
    m.set_objective(obj, 0.0).unwrap();
    m
}

pub fn random_lp(rng: &mut ChaCha8Rng, n: usize, rows: usize) -> MilpModel {
    let mut m = MilpModel::new("rand");
    let mut point = Vec::new();
    let vars: Vec<_> = (0..n)
        .map(|j| {
            let lo = if rng.gen_bool(0.3) { -rng.gen_range(0.0..2.0) } else { 0.0 };
            let hi = lo + rng.gen_range(0.1..3.0);
            point.push(rng.gen_range(lo..hi));
            m.add_continuous(format!("v{j}"), lo, hi).unwrap()
        })
        .collect();
    let feasible = rng.gen_bool(0.8);
    for i in 0..rows {
        let mut terms = Vec::new();
        for &v in &vars {
            if rng.gen_bool(0.4) {
                terms.push((v, rng.gen_range(-1.0..1.0)));
            }
        }
        let act: f64 = terms.iter().map(|(v, c)| c * point[v.0]).sum();
        let sense = match rng.gen_range(0..3) {
            0 => Sense::Le,
            1 => Sense::Ge,
            _ => Sense::Eq,
        };
        let rhs = if feasible {
            match sense {
                Sense::Le => act + rng.gen_range(0.0..0.5),
                Sense::Ge => act - rng.gen_range(0.0..0.5),
                Sense::Eq => act,
            }
        } else {
            rng.gen_range(-2.0..2.0)
        };
        m.add_constraint(format!("r{i}"), terms, sense, rhs).unwrap();
    }
    let obj: Vec<_> = vars.iter().map(|&v| (v, rng.gen_range(-1.0..1.0))).collect();
    m.set_objective(obj, rng.gen_range(-1.0..1.0)).unwrap();
    m
}
