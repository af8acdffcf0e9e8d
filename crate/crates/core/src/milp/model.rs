use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
    /// Branching priority; fractional binaries of the highest priority are
    /// branched on first.
    pub priority: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Sorted by variable, no duplicates, no zeros.
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|(v, c)| c * values[v.0]).sum()
    }

    /// Amount by which `values` breach this row, zero when satisfied.
    pub fn violation(&self, values: &[f64]) -> f64 {
        let a = self.activity(values);
        match self.sense {
            Sense::Le => (a - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - a).max(0.0),
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Objective {
    pub terms: Vec<(VarId, f64)>,
    pub constant: f64,
}

/// Solver-independent mixed-binary linear model, always minimized.
///
/// Every variable has finite bounds and every row references declared
/// variables; both are enforced on insertion.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MilpModel {
    pub name: String,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Objective,
}

/// Smallest coefficient magnitude kept in a normalized inequality row.
pub const COEF_FLOOR: f64 = 1e-9;

/// Merge duplicate variables, drop exact zeros and sort.
fn canonical_terms(terms: impl IntoIterator<Item = (VarId, f64)>) -> Vec<(VarId, f64)> {
    let mut acc: BTreeMap<VarId, f64> = BTreeMap::new();
    for (v, c) in terms {
        *acc.entry(v).or_insert(0.0) += c;
    }
    acc.into_iter().filter(|(_, c)| *c != 0.0).collect()
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        MilpModel {
            name: name.into(),
            ..Default::default()
        }
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, kind: VarKind) -> Result<VarId> {
        let name = name.into();
        if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
            return Err(Error::Build(format!(
                "variable {name}: bounds must be finite with lower <= upper, got [{lower}, {upper}]"
            )));
        }
        if kind == VarKind::Binary && !(lower >= 0.0 && upper <= 1.0) {
            return Err(Error::Build(format!("binary {name}: bounds must lie in [0, 1]")));
        }
        self.variables.push(Variable {
            name,
            lower,
            upper,
            kind,
            priority: 0,
        });
        Ok(VarId(self.variables.len() - 1))
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId> {
        self.add_var(name, 0.0, 1.0, VarKind::Binary)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> Result<VarId> {
        self.add_var(name, lower, upper, VarKind::Continuous)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<usize> {
        let name = name.into();
        let terms = canonical_terms(terms);
        if let Some((v, _)) = terms.iter().find(|(v, _)| v.0 >= self.variables.len()) {
            return Err(Error::Build(format!("constraint {name}: unknown variable id {}", v.0)));
        }
        if !rhs.is_finite() || terms.iter().any(|(_, c)| !c.is_finite()) {
            return Err(Error::Build(format!("constraint {name}: non-finite coefficient")));
        }
        self.constraints.push(Constraint {
            name,
            terms,
            sense,
            rhs,
        });
        Ok(self.constraints.len() - 1)
    }

    /// Like [`add_constraint`](Self::add_constraint) but divides the row by
    /// its largest coefficient magnitude first, so absolute tolerances are
    /// meaningful on every row. In inequality rows, coefficients that end up
    /// below [`COEF_FLOOR`] are folded into the right-hand side at their
    /// worst case over the variable bounds; external solvers drop such
    /// entries silently, and folding keeps the row conservative.
    pub fn add_scaled_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<usize> {
        let terms = canonical_terms(terms);
        let scale = terms.iter().map(|(_, c)| c.abs()).fold(0.0, f64::max);
        let scale = if scale > 0.0 { scale } else { 1.0 };
        let mut rhs = rhs / scale;
        let mut kept = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            let c = c / scale;
            if c.abs() >= COEF_FLOOR || sense == Sense::Eq {
                kept.push((v, c));
                continue;
            }
            // Replace the term by its least favourable value over the
            // variable's bounds: the row only gets tighter.
            let var = self.variables.get(v.0).ok_or_else(|| Error::Build(format!("unknown variable id {}", v.0)))?;
            let (lo, hi) = (c * var.lower, c * var.upper);
            rhs -= if sense == Sense::Le { lo.max(hi) } else { lo.min(hi) };
        }
        self.add_constraint(name, kept, sense, rhs)
    }

    pub fn set_objective(&mut self, terms: impl IntoIterator<Item = (VarId, f64)>, constant: f64) -> Result<()> {
        let terms = canonical_terms(terms);
        if let Some((v, _)) = terms.iter().find(|(v, _)| v.0 >= self.variables.len()) {
            return Err(Error::Build(format!("objective: unknown variable id {}", v.0)));
        }
        self.objective = Objective { terms, constant };
        Ok(())
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| VarId(i))
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.variables.iter().position(|v| v.name == name).map(VarId)
    }

    /// Tighten the bounds of one variable, e.g. to fix a binary.
    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) -> Result<()> {
        let v = &mut self.variables[var.0];
        if !(lower.is_finite() && upper.is_finite() && lower <= upper) {
            return Err(Error::Build(format!("variable {}: invalid bounds [{lower}, {upper}]", v.name)));
        }
        v.lower = lower;
        v.upper = upper;
        Ok(())
    }

    pub fn set_priority(&mut self, var: VarId, priority: u32) {
        self.variables[var.0].priority = priority;
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.constant + self.objective.terms.iter().map(|(v, c)| c * values[v.0]).sum::<f64>()
    }

    /// Largest bound or row violation of `values`, with the offending name.
    pub fn max_violation(&self, values: &[f64]) -> (f64, Option<&str>) {
        let mut worst = (0.0, None);
        for v in self.variables.iter().zip(values) {
            let (var, &x) = v;
            let viol = (var.lower - x).max(x - var.upper).max(0.0);
            if viol > worst.0 {
                worst = (viol, Some(var.name.as_str()));
            }
        }
        for c in &self.constraints {
            let viol = c.violation(values);
            if viol > worst.0 {
                worst = (viol, Some(c.name.as_str()));
            }
        }
        worst
    }

    /// True when every binary is within `tol` of 0 or 1.
    pub fn is_integral(&self, values: &[f64], tol: f64) -> bool {
        self.binaries().all(|v| {
            let x = values[v.0];
            x.abs() <= tol || (x - 1.0).abs() <= tol
        })
    }
}
