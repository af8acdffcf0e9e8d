//! Fixed-format MPS export, a matching reader, and plain-text solution
//! import.
//!
//! Fixed MPS limits names to 8 characters. When any variable (or row)
//! name is longer, or contains whitespace, every name of that kind is
//! replaced by a positional short name (`V0000001`, `R0000001`, 1-based)
//! and the mapping is returned alongside the text so it can be written as
//! a sidecar file of `short long` lines.
//!
//! Objective constants are written as the RHS of the objective row with
//! the opposite sign, the usual MPS convention.

use std::collections::{BTreeMap, HashMap};

use crate::error::{Error, Result};
use crate::milp::{MilpModel, Sense, VarId, VarKind};

pub const OBJ_ROW: &str = "OBJ";

#[derive(Clone, Debug, PartialEq)]
pub struct MpsExport {
    pub text: String,
    /// `(short, long)` pairs for every renamed variable or row.
    pub name_map: Vec<(String, String)>,
}

impl MpsExport {
    /// Sidecar name map as text, one `short long` pair per line.
    pub fn name_map_text(&self) -> String {
        self.name_map.iter().map(|(s, l)| format!("{s} {l}\n")).collect()
    }
}

fn fits(name: &str) -> bool {
    !name.is_empty() && name.len() <= 8 && !name.chars().any(char::is_whitespace) && name != OBJ_ROW
}

fn unique<'a>(names: impl Iterator<Item = &'a str>) -> bool {
    let mut seen = std::collections::HashSet::new();
    names.into_iter().all(|n| seen.insert(n))
}

/// Decimal rendering of `v` for a 12-character field. The magnitude is
/// rounded the same way whatever the sign, so coefficients that cancel in
/// the model still cancel after export.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    let mut best = format!("{a:e}");
    let mut best_err = f64::INFINITY;
    let plain = format!("{a}");
    if plain.len() <= 11 {
        best = plain;
    } else {
        let candidates = (0..=10)
            .map(|p| format!("{a:.p$}"))
            .chain((0..=10).map(|p| format!("{a:.p$e}")));
        for c in candidates {
            if c.len() > 11 {
                continue;
            }
            let back: f64 = c.parse().expect("formatted float parses");
            let err = (back - a).abs();
            if back > 0.0 && (err < best_err || (err == best_err && c.len() < best.len())) {
                best_err = err;
                best = c;
            }
        }
    }
    if v < 0.0 {
        format!("-{best}")
    } else {
        best
    }
}

fn pair_line(out: &mut String, a: &str, b: &str, v: f64) {
    out.push_str(&format!("    {a:<8}  {b:<8}  {:>12}\n", format_number(v)));
}

pub fn export_mps(model: &MilpModel) -> Result<MpsExport> {
    let vars = model.variables();
    let rows = model.constraints();
    let mut name_map = Vec::new();

    let rename_vars = !vars.iter().all(|v| fits(&v.name)) || !unique(vars.iter().map(|v| v.name.as_str()));
    let var_names: Vec<String> = if rename_vars {
        (0..vars.len())
            .map(|j| {
                let s = format!("V{:07}", j + 1);
                name_map.push((s.clone(), vars[j].name.clone()));
                s
            })
            .collect()
    } else {
        vars.iter().map(|v| v.name.clone()).collect()
    };
    let rename_rows = !rows.iter().all(|r| fits(&r.name)) || !unique(rows.iter().map(|r| r.name.as_str()));
    let row_names: Vec<String> = if rename_rows {
        (0..rows.len())
            .map(|i| {
                let s = format!("R{:07}", i + 1);
                name_map.push((s.clone(), rows[i].name.clone()));
                s
            })
            .collect()
    } else {
        rows.iter().map(|r| r.name.clone()).collect()
    };
    if var_names.len() > 9_999_999 || row_names.len() > 9_999_999 {
        return Err(Error::Build("model too large for fixed MPS names".into()));
    }

    let model_name: String = model.name.chars().filter(|c| !c.is_whitespace()).take(8).collect();
    let mut out = String::new();
    out.push_str(&format!("NAME          {model_name}\n"));
    out.push_str("ROWS\n");
    out.push_str(&format!(" N  {OBJ_ROW}\n"));
    for (r, name) in rows.iter().zip(&row_names) {
        let t = match r.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        out.push_str(&format!(" {t}  {name}\n"));
    }

    let mut col_entries: Vec<Vec<(usize, f64)>> = vec![Vec::new(); vars.len()];
    for (i, r) in rows.iter().enumerate() {
        for &(v, a) in &r.terms {
            col_entries[v.0].push((i, a));
        }
    }
    let mut obj = vec![0.0; vars.len()];
    for &(v, c) in &model.objective().terms {
        obj[v.0] = c;
    }

    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0;
    for (j, v) in vars.iter().enumerate() {
        let is_int = v.kind == VarKind::Binary;
        if is_int != in_int {
            let tag = if is_int { "'INTORG'" } else { "'INTEND'" };
            out.push_str(&format!("    M{marker:07}  'MARKER'                 {tag}\n"));
            marker += 1;
            in_int = is_int;
        }
        let name = &var_names[j];
        let mut any = false;
        if obj[j] != 0.0 {
            pair_line(&mut out, name, OBJ_ROW, obj[j]);
            any = true;
        }
        for &(i, a) in &col_entries[j] {
            pair_line(&mut out, name, &row_names[i], a);
            any = true;
        }
        if !any {
            // Keep the column declared even when it appears nowhere.
            pair_line(&mut out, name, OBJ_ROW, 0.0);
        }
    }
    if in_int {
        out.push_str(&format!("    M{marker:07}  'MARKER'                 'INTEND'\n"));
    }

    out.push_str("RHS\n");
    let constant = model.objective().constant;
    if constant != 0.0 {
        pair_line(&mut out, "RHS", OBJ_ROW, -constant);
    }
    for (r, name) in rows.iter().zip(&row_names) {
        if r.rhs != 0.0 {
            pair_line(&mut out, "RHS", name, r.rhs);
        }
    }

    out.push_str("BOUNDS\n");
    let bound = |out: &mut String, t: &str, name: &str, v: f64| {
        out.push_str(&format!(" {t} BND       {name:<8}  {:>12}\n", format_number(v)));
    };
    for (v, name) in vars.iter().zip(&var_names) {
        if v.lower == v.upper {
            bound(&mut out, "FX", name, v.lower);
            continue;
        }
        if v.lower != 0.0 {
            bound(&mut out, "LO", name, v.lower);
        }
        bound(&mut out, "UP", name, v.upper);
    }
    out.push_str("ENDATA\n");
    Ok(MpsExport { text: out, name_map })
}

/// Parse a sidecar name map (`short long` per line).
pub fn parse_name_map(text: &str) -> Result<HashMap<String, String>> {
    let mut map = HashMap::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        match (it.next(), it.next(), it.next()) {
            (Some(s), Some(l), None) => {
                if map.insert(s.to_string(), l.to_string()).is_some() {
                    return Err(Error::parse(ln + 1, format!("duplicate short name {s}")));
                }
            }
            _ => return Err(Error::parse(ln + 1, "expected `short long`")),
        }
    }
    Ok(map)
}

#[derive(PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
}

/// Read an MPS file of the subset written by [`export_mps`] (no RANGES,
/// every column bounded). Short names are translated through `names`.
pub fn read_mps(text: &str, names: Option<&HashMap<String, String>>) -> Result<MilpModel> {
    let long = |s: &str| names.and_then(|m| m.get(s)).cloned().unwrap_or_else(|| s.to_string());
    let mut model_name = String::new();
    let mut section = Section::None;
    let mut obj_row: Option<String> = None;
    let mut row_order: Vec<(String, Sense)> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut col_order: Vec<(String, bool)> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut entries: Vec<BTreeMap<usize, f64>> = Vec::new();
    let mut obj: BTreeMap<usize, f64> = BTreeMap::new();
    let mut rhs: HashMap<usize, f64> = HashMap::new();
    let mut constant = 0.0;
    let mut lo: HashMap<usize, f64> = HashMap::new();
    let mut up: HashMap<usize, f64> = HashMap::new();
    let mut in_int = false;
    let mut ended = false;

    let num = |s: &str, ln: usize| -> Result<f64> {
        s.parse::<f64>().map_err(|_| Error::parse(ln, format!("bad number `{s}`")))
    };

    for (ln0, raw) in text.lines().enumerate() {
        let ln = ln0 + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        if !raw.starts_with(' ') {
            let mut it = raw.split_whitespace();
            let head = it.next().unwrap_or("");
            section = match head {
                "NAME" => {
                    model_name = it.next().unwrap_or("").to_string();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => {
                    ended = true;
                    break;
                }
                other => return Err(Error::parse(ln, format!("unsupported section {other}"))),
            };
            continue;
        }
        let f: Vec<&str> = raw.split_whitespace().collect();
        match section {
            Section::Rows => {
                if f.len() != 2 {
                    return Err(Error::parse(ln, "expected `type name`"));
                }
                let sense = match f[0] {
                    "N" => {
                        if obj_row.is_some() {
                            return Err(Error::parse(ln, "more than one objective row"));
                        }
                        obj_row = Some(f[1].to_string());
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    t => return Err(Error::parse(ln, format!("unknown row type {t}"))),
                };
                if row_index.insert(f[1].to_string(), row_order.len()).is_some() {
                    return Err(Error::parse(ln, format!("duplicate row {}", f[1])));
                }
                row_order.push((f[1].to_string(), sense));
            }
            Section::Columns => {
                if f.len() == 3 && f[1] == "'MARKER'" {
                    in_int = match f[2] {
                        "'INTORG'" => true,
                        "'INTEND'" => false,
                        t => return Err(Error::parse(ln, format!("unknown marker {t}"))),
                    };
                    continue;
                }
                if f.len() != 3 && f.len() != 5 {
                    return Err(Error::parse(ln, "expected `column row value [row value]`"));
                }
                let j = match col_index.get(f[0]) {
                    Some(&j) => j,
                    None => {
                        col_index.insert(f[0].to_string(), col_order.len());
                        col_order.push((f[0].to_string(), in_int));
                        entries.push(BTreeMap::new());
                        col_order.len() - 1
                    }
                };
                for pair in f[1..].chunks(2) {
                    let v = num(pair[1], ln)?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        obj.insert(j, v);
                    } else {
                        let i = *row_index
                            .get(pair[0])
                            .ok_or_else(|| Error::parse(ln, format!("unknown row {}", pair[0])))?;
                        entries[j].insert(i, v);
                    }
                }
            }
            Section::Rhs => {
                if f.len() != 3 && f.len() != 5 {
                    return Err(Error::parse(ln, "expected `set row value [row value]`"));
                }
                for pair in f[1..].chunks(2) {
                    let v = num(pair[1], ln)?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        constant = -v;
                    } else {
                        let i = *row_index
                            .get(pair[0])
                            .ok_or_else(|| Error::parse(ln, format!("unknown row {}", pair[0])))?;
                        rhs.insert(i, v);
                    }
                }
            }
            Section::Bounds => {
                let (t, col, val) = match f.len() {
                    4 => (f[0], f[2], Some(f[3])),
                    3 if f[0] == "BV" => (f[0], f[2], None),
                    _ => return Err(Error::parse(ln, "expected `type set column value`")),
                };
                let j = *col_index
                    .get(col)
                    .ok_or_else(|| Error::parse(ln, format!("unknown column {col}")))?;
                match (t, val) {
                    ("UP", Some(v)) => {
                        up.insert(j, num(v, ln)?);
                    }
                    ("LO", Some(v)) => {
                        lo.insert(j, num(v, ln)?);
                    }
                    ("FX", Some(v)) => {
                        let v = num(v, ln)?;
                        lo.insert(j, v);
                        up.insert(j, v);
                    }
                    ("BV", _) => {
                        lo.insert(j, 0.0);
                        up.insert(j, 1.0);
                        col_order[j].1 = true;
                    }
                    _ => return Err(Error::parse(ln, format!("unsupported bound type {t}"))),
                }
            }
            Section::None => return Err(Error::parse(ln, "data outside a section")),
        }
    }
    if !ended {
        return Err(Error::parse(text.lines().count(), "missing ENDATA"));
    }

    let mut model = MilpModel::new(model_name);
    for (j, (name, is_int)) in col_order.iter().enumerate() {
        let l = lo.get(&j).copied().unwrap_or(0.0);
        let u = match up.get(&j) {
            Some(&u) => u,
            None if *is_int => 1.0,
            None => return Err(Error::Build(format!("column {name} has no finite upper bound"))),
        };
        let kind = if *is_int { VarKind::Binary } else { VarKind::Continuous };
        model.add_var(long(name), l, u, kind)?;
    }
    let mut rows: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); row_order.len()];
    for (j, e) in entries.iter().enumerate() {
        for (&i, &a) in e {
            rows[i].push((VarId(j), a));
        }
    }
    for (i, ((name, sense), terms)) in row_order.into_iter().zip(rows).enumerate() {
        model.add_constraint(long(&name), terms, sense, rhs.get(&i).copied().unwrap_or(0.0))?;
    }
    model.set_objective(obj.into_iter().map(|(j, c)| (VarId(j), c)), constant)?;
    Ok(model)
}

/// Read `name value` lines into an assignment over `model`'s variables.
/// Names may be model names or short names from `names`. Binaries must be
/// within 1e-6 of 0 or 1 and are snapped; missing variables default to 0
/// with a warning.
pub fn import_solution(text: &str, model: &MilpModel, names: Option<&HashMap<String, String>>) -> Result<Vec<f64>> {
    let index: HashMap<&str, usize> = model
        .variables()
        .iter()
        .enumerate()
        .map(|(j, v)| (v.name.as_str(), j))
        .collect();
    let mut values = vec![None; model.num_vars()];
    let mut count = 0;
    for (ln0, line) in text.lines().enumerate() {
        let ln = ln0 + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (name, val) = match (it.next(), it.next(), it.next()) {
            (Some(n), Some(v), None) => (n, v),
            _ => return Err(Error::parse(ln, "expected `name value`")),
        };
        let long = names.and_then(|m| m.get(name)).map(String::as_str).unwrap_or(name);
        let j = *index
            .get(long)
            .ok_or_else(|| Error::parse(ln, format!("unknown variable {name}")))?;
        let v: f64 = val
            .parse()
            .map_err(|_| Error::parse(ln, format!("bad value `{val}`")))?;
        if !v.is_finite() {
            return Err(Error::parse(ln, format!("non-finite value for {name}")));
        }
        if values[j].is_some() {
            return Err(Error::parse(ln, format!("duplicate variable {name}")));
        }
        let var = &model.variables()[j];
        let v = if var.kind == VarKind::Binary {
            let r = v.round();
            if (v - r).abs() > 1e-6 || !(r == 0.0 || r == 1.0) {
                return Err(Error::parse(ln, format!("binary {} has non-integral value {v}", var.name)));
            }
            r
        } else {
            v
        };
        values[j] = Some(v);
        count += 1;
    }
    if count == 0 {
        return Err(Error::Parse {
            line: 0,
            msg: "solution file has no entries".into(),
        });
    }
    Ok(values
        .into_iter()
        .zip(model.variables())
        .map(|(v, var)| {
            v.unwrap_or_else(|| {
                log::warn!("{} missing from solution; using 0", var.name);
                0.0
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_fit_field() {
        for v in [1.0, -0.5, 1e-11, 1.234567890123e-11, 123456789012345.0, -9.87654321e20, 1.0 / 3.0] {
            let s = format_number(v);
            assert!(s.len() <= 12, "{s}");
            let back: f64 = s.parse().unwrap();
            assert!(((back - v) / v).abs() < 5e-6, "{v} -> {s}");
        }
        assert_eq!(format_number(0.25), "0.25");
        assert_eq!(format_number(-0.025118864315095794), "-0.025118864");
        assert_eq!(format_number(0.025118864315095794), "0.025118864");
        assert_eq!(format_number(-1.234567890123e-11), "-1.23457e-11");
    }

    #[test]
    fn empty_and_unknown_solutions() {
        let mut m = MilpModel::new("t");
        m.add_binary("x").unwrap();
        assert!(import_solution("", &m, None).is_err());
        assert!(import_solution("x 1\ny 0\n", &m, None).is_err());
        assert!(import_solution("x 0.5\n", &m, None).is_err());
        assert_eq!(import_solution("x 0.9999999\n", &m, None).unwrap(), vec![1.0]);
    }
}
