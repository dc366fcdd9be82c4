//! Distortion lower-bound curves, slope fits, and iterated predictions.

use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::presentation::{build_rips_table, check_params};
use crate::qgroup::binom;
use crate::witness::{sparsity_constant, w_len_formula};

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub n: u64,
    pub w_len: BigUint,
    /// `|u_n b0|`, exact.
    pub ub0_len: BigUint,
    /// `|u_n b0| · ln K1`, a lower bound for `ln |chi_n|`.
    pub log_chi_lb: f64,
}

#[derive(Clone, Debug)]
pub struct Curve {
    pub p: u32,
    pub q: u32,
    pub scale: u32,
    pub k1: u64,
    pub points: Vec<CurvePoint>,
    pub slope: f64,
    /// Inclusive `n` range used for the fit.
    pub fit_window: (u64, u64),
    /// Largest `|w_{n+1}| / |w_n|` and the constant it is held against.
    pub max_sparsity_ratio: f64,
    pub sparsity_constant: u64,
}

impl Curve {
    pub fn target(&self) -> f64 {
        self.p as f64 / self.q as f64
    }

    pub fn rel_err(&self) -> f64 {
        (self.slope - self.target()).abs() / self.target()
    }

    pub const CSV_HEADER: &'static str = "n,w_len,log_chi_lb";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::CSV_HEADER);
        s.push('\n');
        for pt in &self.points {
            let _ = writeln!(s, "{},{},{}", pt.n, pt.w_len, pt.log_chi_lb);
        }
        s
    }

    pub fn summary(&self) -> String {
        format!(
            "slope={:.6} target={:.6} rel_err={:.6}",
            self.slope,
            self.target(),
            self.rel_err()
        )
    }
}

/// Parses the CSV written by [`Curve::to_csv`] into `(n, w_len, log_chi_lb)`.
pub fn parse_curve_csv(text: &str) -> Result<Vec<(u64, BigUint, f64)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == Curve::CSV_HEADER => {}
        _ => return Err(Error::parse(1, 1, "missing curve header")),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 3 {
            return Err(Error::parse(i + 1, 1, "expected three fields"));
        }
        let bad = |c: usize| Error::parse(i + 1, c, "bad number");
        let n = f[0].trim().parse().map_err(|_| bad(1))?;
        let w = f[1].trim().parse().map_err(|_| bad(2))?;
        let l = f[2].trim().parse().map_err(|_| bad(3))?;
        out.push((n, w, l));
    }
    Ok(out)
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn big_ln(x: &BigUint) -> f64 {
    match x.to_f64() {
        Some(v) if v.is_finite() => v.ln(),
        _ => {
            let bits = x.bits();
            let shift = bits - 64;
            (x >> shift).to_f64().unwrap_or(f64::MAX).ln() + shift as f64 * std::f64::consts::LN_2
        }
    }
}

/// The curve for `n = 1..=n_max`, fitted over the upper half of the range.
pub fn distortion_curve(p: u32, q: u32, scale: u32, n_max: u64) -> Result<Curve> {
    check_params(p, q, scale)?;
    if n_max < 4 {
        return Err(Error::Param(format!("n_max must be at least 4, got {n_max}")));
    }
    let k1 = build_rips_table(p, q, scale)?.min_len() / 2;
    if k1 < 2 {
        return Err(Error::Precondition(format!("K1 = {k1} gives no growth")));
    }
    let ln_k1 = (k1 as f64).ln();
    let points: Vec<CurvePoint> = (1..=n_max)
        .map(|n| {
            let ub0_len: BigUint = (0..=p as u64).map(|i| binom(n, i)).sum();
            let log_chi_lb = ub0_len.to_f64().unwrap_or(f64::INFINITY) * ln_k1;
            CurvePoint {
                n,
                w_len: w_len_formula(n, q),
                ub0_len,
                log_chi_lb,
            }
        })
        .collect();
    for w in points.windows(2) {
        if w[1].log_chi_lb <= w[0].log_chi_lb {
            return Err(Error::Assertion(format!(
                "log_chi_lb not increasing at n={}",
                w[1].n
            )));
        }
    }
    let lo = n_max / 2;
    let window: Vec<&CurvePoint> = points.iter().filter(|pt| pt.n >= lo).collect();
    let xs: Vec<f64> = window.iter().map(|pt| big_ln(&pt.w_len)).collect();
    let ys: Vec<f64> = window.iter().map(|pt| pt.log_chi_lb.ln()).collect();
    let slope = ls_slope(&xs, &ys);
    let max_sparsity_ratio = points
        .windows(2)
        .map(|w| w[1].w_len.to_f64().unwrap_or(f64::INFINITY) / w[0].w_len.to_f64().unwrap_or(1.0))
        .fold(0.0, f64::max);
    Ok(Curve {
        p,
        q,
        scale,
        k1,
        points,
        slope,
        fit_window: (lo, n_max),
        max_sparsity_ratio,
        sparsity_constant: sparsity_constant(q),
    })
}

/// `exp^depth(inner)`, kept symbolic so that towers do not overflow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NestedLog {
    pub depth: u32,
    pub inner: f64,
}

impl NestedLog {
    /// `ln^m` of the value, if it is a finite `f64`.
    pub fn log_at(&self, m: u32) -> Option<f64> {
        if m > self.depth {
            return None;
        }
        let mut v = self.inner;
        for _ in 0..self.depth - m {
            v = v.exp();
            if !v.is_finite() {
                return None;
            }
        }
        Some(v)
    }

    pub fn value(&self) -> Option<f64> {
        self.log_at(0)
    }

    /// Outermost finite logarithm level and its value.
    pub fn outermost_finite(&self) -> (u32, f64) {
        for m in 0..=self.depth {
            if let Some(v) = self.log_at(m) {
                return (m, v);
            }
        }
        (self.depth, self.inner)
    }
}

/// `exp^(k-1)` applied to each base value `f(n) = K1^|u_n b0|`.
///
/// When `f(n)` is an integer below `2^53` it is stored exactly at depth
/// `k - 1`; otherwise its logarithm is stored at depth `k`.
pub fn predict_iterated(curve: &Curve, k: u32) -> Result<Vec<(u64, NestedLog)>> {
    if k == 0 {
        return Err(Error::Param("k must be at least 1".into()));
    }
    let bits_per_letter = (curve.k1 as f64).log2();
    Ok(curve
        .points
        .iter()
        .map(|pt| {
            let exact = pt
                .ub0_len
                .to_u32()
                .filter(|&len| len as f64 * bits_per_letter < 53.0)
                .map(|len| BigUint::from(curve.k1).pow(len));
            let v = match exact.and_then(|f| f.to_f64()) {
                Some(f) => NestedLog { depth: k - 1, inner: f },
                None => NestedLog { depth: k, inner: pt.log_chi_lb },
            };
            (pt.n, v)
        })
        .collect())
}

pub const PREDICT_CSV_HEADER: &str = "n,k,depth,inner,outer_level,outer_value";

pub fn predict_csv(rows: &[(u64, NestedLog)], k: u32) -> String {
    let mut s = String::from(PREDICT_CSV_HEADER);
    s.push('\n');
    for (n, v) in rows {
        let (m, o) = v.outermost_finite();
        let _ = writeln!(s, "{n},{k},{},{},{m},{o}", v.depth, v.inner);
    }
    s
}
