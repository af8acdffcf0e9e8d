use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

use super::{InstanceRecord, MetricsRow};

pub const METRICS_HEADER: &str =
    "demand,method,feasibility_rate,mean_energy,mean_active_cells,mean_active_load,instances_counted";
pub const INSTANCES_HEADER: &str =
    "demand,run,method,status,energy,objective,active_cells,mean_active_load,nodes,gap";

/// Six significant digits in the style of C's `%g`.
pub fn format_g(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{v:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    let decimals = (5 - exp) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt_g(v: Option<f64>) -> String {
    v.map(format_g).unwrap_or_default()
}

fn opt_int(v: Option<usize>) -> String {
    v.map(|n| n.to_string()).unwrap_or_default()
}

pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            format_g(r.demand),
            r.method.as_str(),
            format_g(r.feasibility_rate),
            opt_g(r.mean_energy),
            opt_g(r.mean_active_cells),
            opt_g(r.mean_active_load),
            r.instances_counted
        )
        .unwrap();
    }
    out
}

pub fn instances_csv(records: &[InstanceRecord]) -> String {
    let mut out = String::from(INSTANCES_HEADER);
    out.push('\n');
    for r in records {
        let o = &r.outcome;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            format_g(r.demand),
            r.run,
            o.method.as_str(),
            o.status.as_str(),
            opt_g(o.energy),
            opt_g(o.objective),
            opt_int(o.active_cells),
            opt_g(o.mean_active_load),
            opt_int(o.nodes),
            opt_g(o.gap)
        )
        .unwrap();
    }
    out
}

/// Write `metrics.csv` and `instances.csv` into `out_dir`, creating it.
pub fn emit_csv(rows: &[MetricsRow], records: &[InstanceRecord], out_dir: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Config("no metrics rows to write".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    for (name, text) in [("metrics.csv", metrics_csv(rows)), ("instances.csv", instances_csv(records))] {
        let path = out_dir.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_format() {
        let cases = [
            (175.167155, "175.167"),
            (21.894, "21.894"),
            (250000.0, "250000"),
            (7.5e6, "7.5e+06"),
            (1.0, "1"),
            (0.5, "0.5"),
            (1e-5, "1e-05"),
            (0.000123456789, "0.000123457"),
            (-2.5, "-2.5"),
            (999999.7, "1e+06"),
        ];
        for (v, want) in cases {
            assert_eq!(format_g(v), want, "{v}");
        }
    }

    #[test]
    fn header_only_instances() {
        assert_eq!(instances_csv(&[]), format!("{INSTANCES_HEADER}\n"));
    }
}
