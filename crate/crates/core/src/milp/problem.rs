use std::collections::BTreeMap;
use std::fmt;

use super::model::{MilpModel, Sense, VarId};
use crate::error::{Error, Result};
use crate::netmodel::{cell_loads, GainMatrix, NetworkScenario, SolutionPoint};
use crate::pwl::PwlBound;
use crate::scenarios::InterferenceLevels;

/// One variable family of the linear model with its indices (0-based
/// here, 1-based in variable names).
///
/// `PhiLift` is stored divided by its interference level: the variable
/// holds `p_k g_km φ_nkm / Ψ_nkm`, an SINR-like quantity, instead of a
/// received power of order 1e-10 W.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    /// Cell on/off `x_k`.
    X(usize),
    /// Transmit power `p̃_k`, zero when off.
    P(usize),
    /// Allocation `A_km`.
    A(usize, usize),
    /// `Ω_km = p̃_k A_km`.
    Omega(usize, usize),
    /// Inverse-rate bound `μ_km`.
    Mu(usize, usize),
    /// `Λ_km = μ_km A_km`.
    Lambda(usize, usize),
    /// Interference level selector `φ_nkm`.
    Phi(usize, usize, usize),
    /// `p̃_k g_km φ_nkm / Ψ_nkm`.
    PhiLift(usize, usize, usize),
    /// Load bound `ρ̃_k`.
    Rho(usize),
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Symbol::X(k) => write!(f, "x_{}", k + 1),
            Symbol::P(k) => write!(f, "p_{}", k + 1),
            Symbol::A(k, m) => write!(f, "A_{}_{}", k + 1, m + 1),
            Symbol::Omega(k, m) => write!(f, "Omega_{}_{}", k + 1, m + 1),
            Symbol::Mu(k, m) => write!(f, "mu_{}_{}", k + 1, m + 1),
            Symbol::Lambda(k, m) => write!(f, "Lambda_{}_{}", k + 1, m + 1),
            Symbol::Phi(n, k, m) => write!(f, "phi_{}_{}_{}", n + 1, k + 1, m + 1),
            Symbol::PhiLift(n, k, m) => write!(f, "Phi_{}_{}_{}", n + 1, k + 1, m + 1),
            Symbol::Rho(k) => write!(f, "rho_{}", k + 1),
        }
    }
}

impl Symbol {
    pub fn parse(name: &str) -> Option<Symbol> {
        let mut parts = name.split('_');
        let head = parts.next()?;
        let idx: Vec<usize> = parts
            .map(|p| p.parse::<usize>().ok().filter(|&v| v >= 1).map(|v| v - 1))
            .collect::<Option<_>>()?;
        Some(match (head, idx.as_slice()) {
            ("x", &[k]) => Symbol::X(k),
            ("p", &[k]) => Symbol::P(k),
            ("A", &[k, m]) => Symbol::A(k, m),
            ("Omega", &[k, m]) => Symbol::Omega(k, m),
            ("mu", &[k, m]) => Symbol::Mu(k, m),
            ("Lambda", &[k, m]) => Symbol::Lambda(k, m),
            ("phi", &[n, k, m]) => Symbol::Phi(n, k, m),
            ("Phi", &[n, k, m]) => Symbol::PhiLift(n, k, m),
            ("rho", &[k]) => Symbol::Rho(k),
            _ => return None,
        })
    }
}

/// Bidirectional map between model symbols and variable ids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct VarMap {
    by_symbol: BTreeMap<Symbol, VarId>,
    by_var: Vec<Symbol>,
    pub num_cells: usize,
    pub num_dps: usize,
    pub num_levels: usize,
}

impl VarMap {
    fn insert(&mut self, sym: Symbol, var: VarId) {
        debug_assert_eq!(var.0, self.by_var.len());
        self.by_symbol.insert(sym, var);
        self.by_var.push(sym);
    }

    pub fn get(&self, sym: Symbol) -> Option<VarId> {
        self.by_symbol.get(&sym).copied()
    }

    /// Panics if `sym` is out of range; the map is total over its index ranges.
    pub fn var(&self, sym: Symbol) -> VarId {
        self.by_symbol[&sym]
    }

    pub fn symbol(&self, var: VarId) -> Option<Symbol> {
        self.by_var.get(var.0).copied()
    }

    pub fn len(&self) -> usize {
        self.by_var.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_var.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Symbol, VarId)> + '_ {
        self.by_var.iter().enumerate().map(|(i, &s)| (s, VarId(i)))
    }

    pub fn value(&self, values: &[f64], sym: Symbol) -> f64 {
        values[self.var(sym).0]
    }
}

/// Append the three rows forcing `a = r·b` at binary `b`, given
/// `r ∈ [0, r_bar]`: `a ≥ r − (1−b)·r_bar`, `a ≤ r`, `a ≤ b·r_bar`.
pub fn add_lifting_set(model: &mut MilpModel, r: VarId, r_bar: f64, b: VarId, a: VarId) -> Result<[usize; 3]> {
    add_scaled_lifting_set(model, "lift", (r, 1.0), r_bar, b, a)
}

/// Lifting set for the product of `b` with `scale · r`.
pub fn add_scaled_lifting_set(
    model: &mut MilpModel,
    name: &str,
    (r, scale): (VarId, f64),
    r_bar: f64,
    b: VarId,
    a: VarId,
) -> Result<[usize; 3]> {
    if !(r_bar > 0.0 && r_bar.is_finite()) {
        return Err(Error::Build(format!("{name}: lifting bound must be positive, got {r_bar}")));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::Build(format!("{name}: lifting scale must be positive, got {scale}")));
    }
    let var = &model.variables()[r.0];
    if var.lower < 0.0 || var.upper * scale > r_bar * (1.0 + 1e-12) {
        return Err(Error::Build(format!(
            "{name}: lifted variable {} must lie in [0, {r_bar}]",
            var.name
        )));
    }
    // One normalization for the whole set: the `a`, `r` and `b` entries of
    // the three rows stay bit-identical, so `b = 1` still pins `a` exactly
    // after the coefficients are rounded for export.
    let f = scale.max(r_bar);
    let (ca, cr, cb) = (1.0 / f, -scale / f, -r_bar / f);
    let lo = model.add_constraint(format!("{name}_lo"), [(a, ca), (r, cr), (b, cb)], Sense::Ge, cb)?;
    let up = model.add_constraint(format!("{name}_up"), [(a, ca), (r, cr)], Sense::Le, 0.0)?;
    let on = model.add_constraint(format!("{name}_on"), [(a, ca), (b, cb)], Sense::Le, 0.0)?;
    Ok([lo, up, on])
}

/// Build the mixed-binary linear inner approximation of the energy
/// minimization problem.
///
/// `levels` must be computed at nominal maximum powers and `pwl` must span
/// `[γ_min, γ_max]` of `scenario`.
pub fn build_inner_approximation(
    scenario: &NetworkScenario,
    gains: &GainMatrix,
    pwl: &PwlBound,
    levels: &InterferenceLevels,
) -> Result<(MilpModel, VarMap)> {
    scenario.validate()?;
    let (kn, mn, nn) = (scenario.num_cells(), scenario.num_dps(), levels.n_levels);
    if gains.num_cells() != kn || gains.num_dps() != mn {
        return Err(Error::Build("gain matrix does not match the scenario".into()));
    }
    if levels.num_cells() != kn || levels.num_dps() != mn {
        return Err(Error::Build("interference levels do not match the scenario".into()));
    }
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs().max(1e-12);
    if !close(pwl.gamma_lo, scenario.gamma_min) || !close(pwl.gamma_hi, scenario.gamma_max) {
        return Err(Error::Build(format!(
            "bound spans [{}, {}] but the scenario needs [{}, {}]",
            pwl.gamma_lo, pwl.gamma_hi, scenario.gamma_min, scenario.gamma_max
        )));
    }
    let beta1 = pwl.beta_first();
    let tau_max = scenario.tau_max();
    if beta1 < tau_max * (1.0 - 1e-12) {
        return Err(Error::Build(format!(
            "first piece intercept {beta1} is below tau_max {tau_max}; the bound cannot cover gamma_min"
        )));
    }
    if pwl.pieces.iter().any(|pc| pc.beta > beta1 || pc.alpha > 0.0) {
        return Err(Error::Build("bound pieces must be non-increasing with the first intercept largest".into()));
    }

    let cells = &scenario.cells;
    let sigma2 = scenario.noise_power;
    let gmin = scenario.gamma_min;
    let ep = &scenario.energy_params;
    let mut model = MilpModel::new("hetnet");
    let mut map = VarMap {
        num_cells: kn,
        num_dps: mn,
        num_levels: nn,
        ..Default::default()
    };

    // Switching decisions are branched on first, then allocations, then
    // interference levels.
    macro_rules! var {
        ($sym:expr, binary, $prio:expr) => {{
            let s = $sym;
            let v = model.add_binary(s.to_string())?;
            model.set_priority(v, $prio);
            map.insert(s, v);
        }};
        ($sym:expr, $lo:expr, $hi:expr) => {{
            let s = $sym;
            let v = model.add_continuous(s.to_string(), $lo, $hi)?;
            map.insert(s, v);
        }};
    }
    for k in 0..kn {
        var!(Symbol::X(k), binary, 2);
    }
    for k in 0..kn {
        var!(Symbol::P(k), 0.0, cells[k].p_max);
    }
    for k in 0..kn {
        for m in 0..mn {
            var!(Symbol::A(k, m), binary, 1);
        }
    }
    for k in 0..kn {
        for m in 0..mn {
            var!(Symbol::Omega(k, m), 0.0, cells[k].p_max);
        }
    }
    for k in 0..kn {
        for m in 0..mn {
            var!(Symbol::Mu(k, m), 0.0, beta1);
        }
    }
    for k in 0..kn {
        for m in 0..mn {
            var!(Symbol::Lambda(k, m), 0.0, beta1);
        }
    }
    for n in 0..nn {
        for k in 0..kn {
            for m in 0..mn {
                var!(Symbol::Phi(n, k, m), binary, 0);
            }
        }
    }
    for n in 0..nn {
        for k in 0..kn {
            for m in 0..mn {
                let hi = cells[k].p_max * gains.get(k, m) / levels.get(n, k, m);
                var!(Symbol::PhiLift(n, k, m), 0.0, hi);
            }
        }
    }
    for k in 0..kn {
        var!(Symbol::Rho(k), 0.0, 1.0);
    }

    let x = |k| map.var(Symbol::X(k));
    let p = |k| map.var(Symbol::P(k));
    let a = |k, m| map.var(Symbol::A(k, m));
    let om = |k, m| map.var(Symbol::Omega(k, m));
    let mu = |k, m| map.var(Symbol::Mu(k, m));
    let la = |k, m| map.var(Symbol::Lambda(k, m));
    let phi = |n, k, m| map.var(Symbol::Phi(n, k, m));
    let phl = |n, k, m| map.var(Symbol::PhiLift(n, k, m));
    let rho = |k| map.var(Symbol::Rho(k));

    for (k, c) in cells.iter().enumerate() {
        model.add_scaled_constraint(format!("pmin_{}", k + 1), [(p(k), 1.0), (x(k), -c.p_min)], Sense::Ge, 0.0)?;
        model.add_scaled_constraint(format!("pmax_{}", k + 1), [(p(k), 1.0), (x(k), -c.p_max)], Sense::Le, 0.0)?;
    }
    for m in 0..mn {
        model.add_constraint(format!("assign_{}", m + 1), (0..kn).map(|k| (a(k, m), 1.0)), Sense::Eq, 1.0)?;
    }
    for k in 0..kn {
        for m in 0..mn {
            model.add_constraint(
                format!("active_{}_{}", k + 1, m + 1),
                [(a(k, m), 1.0), (x(k), -1.0)],
                Sense::Le,
                0.0,
            )?;
        }
    }
    for (k, c) in cells.iter().enumerate() {
        for m in 0..mn {
            add_scaled_lifting_set(
                &mut model,
                &format!("Omega_{}_{}", k + 1, m + 1),
                (p(k), 1.0),
                c.p_max,
                a(k, m),
                om(k, m),
            )?;
        }
    }
    // Served biased power dominates every cell's biased power.
    for j in 0..kn {
        for m in 0..mn {
            let terms = (0..kn)
                .map(|k| (om(k, m), cells[k].bias * gains.get(k, m)))
                .chain([(p(j), -cells[j].bias * gains.get(j, m))]);
            model.add_scaled_constraint(format!("assoc_{}_{}", j + 1, m + 1), terms, Sense::Ge, 0.0)?;
        }
    }
    // Interference at m is Σ_j g_jm (p̃_j − Ω_jm): every active cell except the server.
    let interference = |m: usize, sign: f64| {
        (0..kn).flat_map(move |j| [(p(j), sign * gains.get(j, m)), (om(j, m), -sign * gains.get(j, m))])
    };
    for m in 0..mn {
        let terms = (0..kn)
            .map(|k| (om(k, m), gains.get(k, m)))
            .chain(interference(m, -gmin));
        model.add_scaled_constraint(format!("sinr_{}", m + 1), terms, Sense::Ge, gmin * sigma2)?;
    }
    for k in 0..kn {
        for m in 0..mn {
            model.add_constraint(
                format!("select_{}_{}", k + 1, m + 1),
                (0..nn).map(|n| (phi(n, k, m), 1.0)),
                Sense::Eq,
                1.0,
            )?;
        }
    }
    for k in 0..kn {
        for m in 0..mn {
            let terms = (0..nn)
                .map(|n| (phi(n, k, m), levels.get(n, k, m)))
                .chain(interference(m, -1.0));
            model.add_scaled_constraint(format!("interf_{}_{}", k + 1, m + 1), terms, Sense::Ge, sigma2)?;
        }
    }
    for n in 0..nn {
        for (k, c) in cells.iter().enumerate() {
            for m in 0..mn {
                let s = gains.get(k, m) / levels.get(n, k, m);
                add_scaled_lifting_set(
                    &mut model,
                    &format!("Phi_{}_{}_{}", n + 1, k + 1, m + 1),
                    (p(k), s),
                    c.p_max * s,
                    phi(n, k, m),
                    phl(n, k, m),
                )?;
            }
        }
    }
    for (i, pc) in pwl.pieces.iter().enumerate() {
        for k in 0..kn {
            for m in 0..mn {
                let terms = std::iter::once((mu(k, m), 1.0)).chain((0..nn).map(|n| (phl(n, k, m), -pc.alpha)));
                model.add_scaled_constraint(
                    format!("pwl_{}_{}_{}", i + 1, k + 1, m + 1),
                    terms,
                    Sense::Ge,
                    pc.beta,
                )?;
            }
        }
    }
    for k in 0..kn {
        for m in 0..mn {
            add_scaled_lifting_set(
                &mut model,
                &format!("Lambda_{}_{}", k + 1, m + 1),
                (mu(k, m), 1.0),
                beta1,
                a(k, m),
                la(k, m),
            )?;
        }
    }
    for k in 0..kn {
        let terms =
            std::iter::once((rho(k), 1.0)).chain((0..mn).map(|m| (la(k, m), -scenario.load_coefficient(m))));
        model.add_scaled_constraint(format!("load_{}", k + 1), terms, Sense::Eq, 0.0)?;
    }

    let obj = cells.iter().enumerate().flat_map(|(k, c)| {
        [
            (x(k), ep.t0 * c.p_max * ep.kappa1),
            (p(k), ep.t0 * ep.kappa2),
            (rho(k), ep.t0 * c.p_max * ep.kappa3),
        ]
    });
    model.set_objective(obj, 0.0)?;
    Ok((model, map))
}

/// Model load bounds `ρ̃_k` of an assignment.
pub fn model_loads(values: &[f64], map: &VarMap) -> Vec<f64> {
    (0..map.num_cells).map(|k| map.value(values, Symbol::Rho(k))).collect()
}

/// Map an integral model assignment to a network configuration and check
/// it against the exact model. Failure means the linear model admitted a
/// point the network cannot realise.
pub fn extract_solution(
    values: &[f64],
    map: &VarMap,
    scenario: &NetworkScenario,
    gains: &GainMatrix,
) -> Result<SolutionPoint> {
    let (kn, mn) = (map.num_cells, map.num_dps);
    if values.len() != map.len() {
        return Err(Error::Build(format!("expected {} values, got {}", map.len(), values.len())));
    }
    let active: Vec<bool> = (0..kn).map(|k| map.value(values, Symbol::X(k)) > 0.5).collect();
    let power: Vec<f64> = (0..kn)
        .map(|k| if active[k] { map.value(values, Symbol::P(k)) } else { 0.0 })
        .collect();
    let mut serving = Vec::with_capacity(mn);
    for m in 0..mn {
        let on: Vec<usize> = (0..kn).filter(|&k| map.value(values, Symbol::A(k, m)) > 0.5).collect();
        match on.as_slice() {
            [k] => serving.push(*k),
            _ => {
                return Err(Error::InnerApproximation(format!(
                    "DP {} is allocated to {} cells",
                    m + 1,
                    on.len()
                )))
            }
        }
    }
    let sol = SolutionPoint::new(active, power, serving)?;
    let report = cell_loads(&sol, scenario, gains);
    if !report.feasible {
        let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::InnerApproximation(msgs.join("; ")));
    }
    Ok(sol)
}

/// Largest deviation of the lifted variables from the products they stand
/// for; zero (to rounding) at every integral feasible point.
pub fn lifting_residual(
    values: &[f64],
    map: &VarMap,
    gains: &GainMatrix,
    levels: &InterferenceLevels,
) -> f64 {
    let v = |s| map.value(values, s);
    let mut worst = 0.0f64;
    for k in 0..map.num_cells {
        for m in 0..map.num_dps {
            let a = v(Symbol::A(k, m));
            worst = worst.max((v(Symbol::Omega(k, m)) - v(Symbol::P(k)) * a).abs());
            worst = worst.max((v(Symbol::Lambda(k, m)) - v(Symbol::Mu(k, m)) * a).abs());
            for n in 0..map.num_levels {
                let want = v(Symbol::P(k)) * gains.get(k, m) / levels.get(n, k, m) * v(Symbol::Phi(n, k, m));
                worst = worst.max((v(Symbol::PhiLift(n, k, m)) - want).abs());
            }
        }
    }
    worst
}
