//! Error-bounded piecewise-linear over-approximation of the inverse rate
//! `f(γ) = 1/log2(1+γ)` on `[γ_lo, γ_hi]`, extended by the constant tail
//! `τ_min = f(γ_hi)`.
//!
//! Breakpoints are placed recursively at the point where the chord error is
//! stationary. That point has a closed form through the principal branch of
//! the Lambert W function.

use std::f64::consts::LN_2;
use std::fmt::Write as _;

use crate::error::{Error, Result};

const LAMBERT_TOL: f64 = 1e-12;
const LAMBERT_MAX_ITER: usize = 64;
const MAX_DEPTH: usize = 64;
/// Intervals narrower than this need no further split.
const MIN_WIDTH: f64 = 1e-9;

/// `f(γ) = 1/log2(1+γ)`.
#[inline]
pub fn inverse_rate(gamma: f64) -> f64 {
    LN_2 / gamma.ln_1p()
}

/// Principal branch `W0(y)` for `y ≥ 0`, by Halley iteration.
pub fn lambert_w(y: f64) -> Result<f64> {
    if !(y >= 0.0) || !y.is_finite() {
        return Err(Error::Domain(format!("lambert_w needs a finite y >= 0, got {y}")));
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    let mut w = if y < 3.0 {
        // ln(1+y) is within a few percent of W on this range
        y.ln_1p() * (1.0 - 0.15 * y.ln_1p() / (1.0 + y.ln_1p()))
    } else {
        let l = y.ln();
        l - l.ln()
    };
    for _ in 0..LAMBERT_MAX_ITER {
        let ew = w.exp();
        let r = w * ew - y;
        let wp1 = w + 1.0;
        let step = r / (ew * wp1 - (w + 2.0) * r / (2.0 * wp1));
        w -= step;
        if step.abs() <= LAMBERT_TOL * w.abs().max(f64::MIN_POSITIVE) * 1e-2 {
            break;
        }
    }
    Ok(w)
}

/// Stationary point of `ξ(γ) = αγ + β − f(γ)` for a chord slope `α < 0`.
///
/// Solves `α + ln2 / ((γ+1) ln²(γ+1)) = 0`, giving
/// `ln(1+γ) = 2 W(½ √(−ln2/α))`.
pub fn max_error_point(alpha: f64) -> Result<f64> {
    if !(alpha < 0.0) {
        return Err(Error::Domain(format!("max_error_point needs alpha < 0, got {alpha}")));
    }
    let arg = 0.5 * (-LN_2 / alpha).sqrt();
    Ok((2.0 * lambert_w(arg)?).exp_m1())
}

/// Chord through `(g1, f(g1))` and `(g2, f(g2))` as `(slope, intercept)`.
fn chord(g1: f64, g2: f64) -> (f64, f64) {
    let f1 = inverse_rate(g1);
    let f2 = inverse_rate(g2);
    let alpha = (f2 - f1) / (g2 - g1);
    (alpha, f1 - alpha * g1)
}

/// Interior breakpoints needed between `gamma1` and `gamma2` so that no
/// chord deviates from `f` by more than `epsilon`, in increasing order.
pub fn bps(gamma1: f64, gamma2: f64, epsilon: f64) -> Result<Vec<f64>> {
    if !(gamma1 > 0.0 && gamma1 < gamma2) {
        return Err(Error::Domain(format!(
            "breakpoint selection needs 0 < gamma1 < gamma2, got [{gamma1}, {gamma2}]"
        )));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut out = Vec::new();
    bps_rec(gamma1, gamma2, epsilon, 0, &mut out)?;
    Ok(out)
}

fn bps_rec(g1: f64, g2: f64, eps: f64, depth: usize, out: &mut Vec<f64>) -> Result<()> {
    if depth > MAX_DEPTH {
        return Err(Error::Solver(format!(
            "breakpoint recursion exceeded depth {MAX_DEPTH} on [{g1}, {g2}]"
        )));
    }
    if g2 - g1 < MIN_WIDTH {
        return Ok(());
    }
    let (alpha, beta) = chord(g1, g2);
    if !(alpha < 0.0) {
        // f is numerically flat on this interval
        return Ok(());
    }
    let delta = max_error_point(alpha)?;
    if !(delta > g1 && delta < g2) {
        return Ok(());
    }
    let err = alpha * delta + beta - inverse_rate(delta);
    if err.abs() <= eps {
        return Ok(());
    }
    bps_rec(g1, delta, eps, depth + 1, out)?;
    out.push(delta);
    bps_rec(delta, g2, eps, depth + 1, out)
}

/// One affine piece `u(γ) = α γ + β`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub alpha: f64,
    pub beta: f64,
}

impl Piece {
    #[inline]
    pub fn eval(&self, gamma: f64) -> f64 {
        self.alpha * gamma + self.beta
    }
}

/// Pieces whose pointwise maximum bounds `f` from above on `[gamma_lo, gamma_hi]`.
///
/// Pieces are ordered by increasing γ; the last one is the constant
/// `τ_min` tail.
#[derive(Clone, Debug, PartialEq)]
pub struct PwlBound {
    pub pieces: Vec<Piece>,
    /// `gamma_lo`, interior breakpoints, `gamma_hi`.
    pub breakpoints: Vec<f64>,
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub epsilon: f64,
    pub tau_min: f64,
    pub tau_max: f64,
}

impl PwlBound {
    /// `max_i u_i(γ)`.
    pub fn eval(&self, gamma: f64) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.eval(gamma))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Intercept of the first (steepest) piece.
    pub fn beta_first(&self) -> f64 {
        self.pieces[0].beta
    }

    /// Plain-text table: a header block followed by one row per piece.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# piecewise-linear upper bound of 1/log2(1+gamma)");
        let _ = writeln!(s, "gamma_lo {:.15e}", self.gamma_lo);
        let _ = writeln!(s, "gamma_hi {:.15e}", self.gamma_hi);
        let _ = writeln!(s, "epsilon {:.15e}", self.epsilon);
        let _ = writeln!(s, "tau_min {:.15e}", self.tau_min);
        let _ = writeln!(s, "tau_max {:.15e}", self.tau_max);
        let _ = writeln!(s, "# piece breakpoint alpha beta");
        for (i, p) in self.pieces.iter().enumerate() {
            let _ = writeln!(s, "{} {:.15e} {:.15e} {:.15e}", i + 1, self.breakpoints[i], p.alpha, p.beta);
        }
        s
    }

    pub fn from_table(text: &str) -> Result<Self> {
        let mut header = [None::<f64>; 5];
        let keys = ["gamma_lo", "gamma_hi", "epsilon", "tau_min", "tau_max"];
        let mut breakpoints = Vec::new();
        let mut pieces = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| s.parse::<f64>().map_err(|e| Error::parse(ln + 1, format!("{s}: {e}")));
            if let Some(slot) = keys.iter().position(|k| *k == fields[0]) {
                if fields.len() != 2 {
                    return Err(Error::parse(ln + 1, "expected `key value`"));
                }
                header[slot] = Some(num(fields[1])?);
            } else {
                if fields.len() != 4 {
                    return Err(Error::parse(ln + 1, "expected `piece breakpoint alpha beta`"));
                }
                breakpoints.push(num(fields[1])?);
                pieces.push(Piece {
                    alpha: num(fields[2])?,
                    beta: num(fields[3])?,
                });
            }
        }
        let get = |i: usize| header[i].ok_or_else(|| Error::parse(0, format!("missing `{}`", keys[i])));
        if pieces.is_empty() {
            return Err(Error::parse(0, "no pieces"));
        }
        Ok(PwlBound {
            pieces,
            breakpoints,
            gamma_lo: get(0)?,
            gamma_hi: get(1)?,
            epsilon: get(2)?,
            tau_min: get(3)?,
            tau_max: get(4)?,
        })
    }
}

/// Chords between `{γ_lo} ∪ BPS(γ_lo, γ_hi, ε) ∪ {γ_hi}`, each lifted by its
/// largest deficit below `f`, plus the constant `τ_min` piece.
pub fn build_bound(gamma_min: f64, gamma_max: f64, epsilon: f64) -> Result<PwlBound> {
    if !(gamma_min > 0.0 && gamma_min < gamma_max) {
        return Err(Error::Domain(format!(
            "need 0 < gamma_min < gamma_max, got {gamma_min} and {gamma_max}"
        )));
    }
    let mut breakpoints = vec![gamma_min];
    breakpoints.extend(bps(gamma_min, gamma_max, epsilon)?);
    breakpoints.push(gamma_max);

    let mut pieces: Vec<Piece> = breakpoints
        .windows(2)
        .map(|w| {
            let (alpha, beta) = chord(w[0], w[1]);
            // f is convex here, so chords sit above it and the deficit is
            // normally zero; it is still measured rather than assumed.
            let mut probes = vec![w[0], w[1]];
            if alpha < 0.0 {
                if let Ok(d) = max_error_point(alpha) {
                    if d > w[0] && d < w[1] {
                        probes.push(d);
                    }
                }
            }
            let deficit = probes
                .iter()
                .map(|&g| inverse_rate(g) - (alpha * g + beta))
                .fold(0.0, f64::max);
            Piece {
                alpha: alpha.min(0.0),
                beta: beta + deficit,
            }
        })
        .collect();
    let tau_min = inverse_rate(gamma_max);
    pieces.push(Piece {
        alpha: 0.0,
        beta: tau_min,
    });

    Ok(PwlBound {
        pieces,
        breakpoints,
        gamma_lo: gamma_min,
        gamma_hi: gamma_max,
        epsilon,
        tau_min,
        tau_max: inverse_rate(gamma_min),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    /// Independent check: plain Newton on w e^w - y with a bisection guard.
    fn lambert_oracle(y: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, y.max(1.0));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() > y {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    fn xi_slope(alpha: f64, gamma: f64) -> f64 {
        alpha + LN_2 / ((gamma + 1.0) * (gamma + 1.0).ln().powi(2))
    }

    #[test]
    fn lambert_w_examples() {
        assert_eq!(lambert_w(0.0).unwrap(), 0.0);
        assert!((lambert_w(E).unwrap() - 1.0).abs() < 1e-14);
        let omega = lambert_oracle(1.0);
        assert!((omega - 0.5671432904).abs() < 1e-10);
        assert!((lambert_w(1.0).unwrap() - omega).abs() < 1e-13);
        assert!(matches!(lambert_w(-0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn lambert_w_round_trip() {
        let mut y = 1e-6;
        while y <= 1e3 {
            let w = lambert_w(y).unwrap();
            assert!(((w * w.exp()) / y - 1.0).abs() < 1e-12, "y = {y}");
            y *= 1.37;
        }
    }

    #[test]
    fn stationary_point_closed_form() {
        // 0.5 sqrt(-ln2/alpha) = e  =>  W = 1  =>  ln(1+delta) = 2.
        let alpha = -LN_2 / (4.0 * E * E);
        assert!((alpha + 0.0234519).abs() < 1e-6);
        let d = max_error_point(alpha).unwrap();
        assert!((d - (E * E - 1.0)).abs() < 1e-12);
        assert!(xi_slope(alpha, d).abs() < 1e-9);

        // 0.5 sqrt(-ln2/alpha) = 2e^2.
        let alpha = -LN_2 / (16.0 * E.powi(4));
        let d = max_error_point(alpha).unwrap();
        assert!((d - ((2.0 * lambert_oracle(2.0 * E * E)).exp() - 1.0)).abs() < 1e-9);
        assert!(xi_slope(alpha, d).abs() < 1e-9);

        for a in [-5.0, -0.3, -1e-2, -1e-4, -1e-6] {
            let d = max_error_point(a).unwrap();
            assert!(xi_slope(a, d).abs() < 1e-9, "alpha {a}");
        }
        assert!(max_error_point(0.0).is_err());
    }

    #[test]
    fn bps_examples() {
        assert!(bps(0.1, 100.0, 100.0).unwrap().is_empty());
        assert!(bps(1.0, 1.0 + 1e-10, 1e-6).unwrap().is_empty());
        let b = bps(0.1, 100.0, 0.05).unwrap();
        assert!(!b.is_empty());
        assert!(b.windows(2).all(|w| w[0] < w[1]));
        assert!(bps(2.0, 1.0, 0.1).is_err());
        assert!(bps(1.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn bound_endpoint_values() {
        let b = build_bound(0.1, 100.0, 0.05).unwrap();
        let top = b.eval(100.0);
        assert!(top >= b.tau_min - 1e-15 && top <= b.tau_min + 0.05);
        assert!(b.eval(1.0) >= 1.0);
        assert_eq!(b.pieces.last().unwrap().alpha, 0.0);
        assert_eq!(b.len(), b.breakpoints.len());
        assert!(b.beta_first() >= b.tau_max);
    }

    #[test]
    fn table_round_trip() {
        let b = build_bound(0.1, 100.0, 0.2).unwrap();
        let back = PwlBound::from_table(&b.to_table()).unwrap();
        assert_eq!(back.len(), b.len());
        for (p, q) in back.pieces.iter().zip(&b.pieces) {
            assert!((p.alpha - q.alpha).abs() <= 1e-14 * q.alpha.abs().max(1.0));
            assert!((p.beta - q.beta).abs() <= 1e-14 * q.beta.abs().max(1.0));
        }
        assert!(PwlBound::from_table("gamma_lo 1\n").is_err());
    }
}
