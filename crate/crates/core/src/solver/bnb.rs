//! LP-based branch and bound over the binaries of a [`MilpModel`].

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use super::lp::{DualSimplex, LpSettings, Outcome};
use super::check_point;
use crate::error::Result;
use crate::milp::MilpModel;

/// Nodes whose bound is within this of the incumbent are pruned.
pub const PRUNE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct BnbSettings {
    /// Relative gap at which the search stops and reports optimality.
    pub gap_tol: f64,
    pub node_limit: usize,
    /// Wall-clock limit; leaving it unset keeps runs reproducible.
    pub time_limit: Option<Duration>,
    /// A depth-first dive starts every this many nodes.
    pub dive_interval: usize,
    pub integrality_tol: f64,
    pub lp: LpSettings,
}

impl Default for BnbSettings {
    fn default() -> Self {
        BnbSettings {
            gap_tol: 1e-9,
            node_limit: 200_000,
            time_limit: None,
            dive_interval: 50,
            integrality_tol: 1e-6,
            lp: LpSettings::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BnbStatus {
    Optimal,
    /// A limit stopped the search with an incumbent at the given gap.
    Feasible { gap: f64 },
    Infeasible,
    /// A node or time limit stopped the search before any incumbent.
    NodeLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BnbResult {
    pub status: BnbStatus,
    pub incumbent: Option<Vec<f64>>,
    /// Incumbent objective, `+inf` without one.
    pub objective: f64,
    pub bound: f64,
    pub gap: f64,
    pub nodes: usize,
    pub wall_time: Duration,
    /// (node count, objective) each time the incumbent improved.
    pub incumbent_history: Vec<(usize, f64)>,
    pub lp_pivots: usize,
}

impl BnbResult {
    pub fn has_solution(&self) -> bool {
        self.incumbent.is_some()
    }
}

#[derive(Clone, Debug)]
struct Node {
    bound: f64,
    seq: usize,
    fixes: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // Max-heap order: the smallest bound, then the oldest node, is greatest.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(other.seq.cmp(&self.seq))
    }
}

fn relative_gap(objective: f64, bound: f64) -> f64 {
    ((objective - bound) / objective.abs().max(1e-10)).max(0.0)
}

pub fn branch_and_bound(model: &MilpModel, settings: &BnbSettings) -> Result<BnbResult> {
    let start = Instant::now();
    let binaries: Vec<usize> = model.binaries().map(|v| v.0).collect();
    let root_bounds: Vec<(f64, f64)> = binaries
        .iter()
        .map(|&b| (model.variables()[b].lower, model.variables()[b].upper))
        .collect();
    let mut current = root_bounds.clone();
    let mut engine = DualSimplex::new(model, settings.lp)?;

    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut seq = 0usize;
    let mut next: Option<Node> = Some(Node {
        bound: f64::NEG_INFINITY,
        seq,
        fixes: Vec::new(),
    });
    let mut diving = true;
    let mut since_dive = 0usize;
    let mut nodes = 0usize;
    let mut incumbent: Option<Vec<f64>> = None;
    let mut inc_obj = f64::INFINITY;
    let mut history = Vec::new();
    // Smallest bound among nodes discarded only because of the incumbent.
    let mut pruned_bound = f64::INFINITY;
    let mut limit_hit = false;

    loop {
        let open_bound = heap
            .peek()
            .map(|n| n.bound)
            .into_iter()
            .chain(next.as_ref().map(|n| n.bound))
            .fold(f64::INFINITY, f64::min);
        if incumbent.is_some() && relative_gap(inc_obj, open_bound.min(pruned_bound)) <= settings.gap_tol {
            break;
        }
        let node = match next.take() {
            Some(n) => n,
            None => {
                if since_dive >= settings.dive_interval {
                    diving = true;
                    since_dive = 0;
                }
                match heap.pop() {
                    Some(n) => n,
                    None => break,
                }
            }
        };
        if nodes >= settings.node_limit || settings.time_limit.is_some_and(|t| start.elapsed() >= t) {
            heap.push(node);
            limit_hit = true;
            break;
        }
        let threshold = if inc_obj.is_finite() {
            inc_obj - PRUNE_TOL.max(settings.gap_tol * inc_obj.abs())
        } else {
            f64::INFINITY
        };
        if node.bound >= threshold {
            pruned_bound = pruned_bound.min(node.bound);
            diving = false;
            continue;
        }
        nodes += 1;
        since_dive += 1;

        let mut want = root_bounds.clone();
        for &(k, v) in &node.fixes {
            want[k] = (v, v);
        }
        for k in 0..binaries.len() {
            if want[k] != current[k] {
                engine.set_bounds(binaries[k], want[k].0, want[k].1);
                current[k] = want[k];
            }
        }

        let outcome = engine.solve(threshold)?;
        if outcome != Outcome::Optimal {
            if outcome == Outcome::Cutoff {
                pruned_bound = pruned_bound.min(threshold.max(node.bound));
            }
            diving = false;
            continue;
        }
        let obj = engine.objective().max(node.bound);
        if obj >= threshold {
            pruned_bound = pruned_bound.min(obj);
            diving = false;
            continue;
        }
        let values = engine.values();

        // Most fractional binary (fraction above `tol`) among the highest
        // priority with any such member; lowest index on ties.
        let most_fractional = |tol: f64| {
            let mut branch: Option<(usize, f64)> = None;
            let mut best = (0u32, tol);
            for (k, &b) in binaries.iter().enumerate() {
                let x = values[b];
                let frac = x.min(1.0 - x);
                if frac <= tol {
                    continue;
                }
                let prio = model.variables()[b].priority;
                if branch.is_none() || prio > best.0 || (prio == best.0 && frac > best.1) {
                    best = (prio, frac);
                    branch = Some((k, x));
                }
            }
            branch
        };

        let mut branch = most_fractional(settings.integrality_tol);
        if branch.is_none() {
            for (k, &b) in binaries.iter().enumerate() {
                let v = values[b].round();
                if current[k] != (v, v) {
                    engine.set_bounds(b, v, v);
                    current[k] = (v, v);
                }
            }
            if engine.solve(threshold)? == Outcome::Optimal {
                let mut vals = engine.values();
                for &b in &binaries {
                    vals[b] = vals[b].round();
                }
                let obj = model.objective_value(&vals);
                match check_point(model, &vals) {
                    Ok(()) if obj < inc_obj => {
                        inc_obj = obj;
                        incumbent = Some(vals);
                        history.push((nodes, obj));
                        log::debug!("node {nodes}: incumbent {obj:.9}");
                    }
                    Ok(()) => {}
                    Err(e) => log::warn!("node {nodes}: rejected integral point: {e}"),
                }
                diving = false;
                continue;
            }
            // Rounding broke feasibility: fractions inside the integrality
            // tolerance still matter, so keep branching on them.
            branch = most_fractional(0.0);
        }
        let Some((k, x)) = branch else {
            diving = false;
            continue;
        };
        let mk = |v: f64, seq: usize| {
            let mut fixes = node.fixes.clone();
            fixes.push((k, v));
            Node { bound: obj, seq, fixes }
        };
        let down = mk(0.0, seq + 1);
        let up = mk(1.0, seq + 2);
        seq += 2;
        if diving {
            let (first, second) = if x >= 0.5 { (up, down) } else { (down, up) };
            heap.push(second);
            next = Some(first);
        } else {
            heap.push(down);
            heap.push(up);
        }
    }

    let open_bound = heap
        .peek()
        .map(|n| n.bound)
        .into_iter()
        .chain(next.as_ref().map(|n| n.bound))
        .fold(f64::INFINITY, f64::min);
    let bound = open_bound.min(pruned_bound).min(inc_obj);
    let (status, gap) = match (&incumbent, limit_hit) {
        (Some(_), _) => {
            let gap = relative_gap(inc_obj, bound);
            // An exhausted tree is optimal to within the pruning threshold,
            // which rounding can place a hair above `gap_tol`.
            if !limit_hit || gap <= settings.gap_tol {
                (BnbStatus::Optimal, gap)
            } else {
                (BnbStatus::Feasible { gap }, gap)
            }
        }
        (None, true) => (BnbStatus::NodeLimit, f64::INFINITY),
        (None, false) => (BnbStatus::Infeasible, f64::INFINITY),
    };
    Ok(BnbResult {
        status,
        incumbent,
        objective: inc_obj,
        bound,
        gap,
        nodes,
        wall_time: start.elapsed(),
        incumbent_history: history,
        lp_pivots: engine.total_pivots,
    })
}
