//! Undirected degree distribution and discrete power-law fit.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Triple;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    /// Inclusive lower degree.
    pub lower: u64,
    /// Exclusive upper degree; `upper == 2 * lower`.
    pub upper: u64,
    pub pdf: f64,
}

impl HistogramBin {
    pub fn width(&self) -> f64 {
        (self.upper - self.lower) as f64
    }

    /// Geometric centre of the integer degrees covered by the bin.
    pub fn center(&self) -> f64 {
        ((self.lower as f64) * ((self.upper - 1) as f64)).sqrt()
    }
}

/// The JSON sidecar written next to the histogram CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeSummary {
    pub alpha_hat: f64,
    pub d_min: u64,
    pub n_entities: usize,
    pub n_facts: usize,
    /// Closed-form estimate 1 + N / Σ ln(d / (d_min − ½)).
    pub alpha_hat_shifted: f64,
}

#[derive(Debug, Clone)]
pub struct DegreeReport {
    /// Entity id → incident fact count (self-loops count twice).
    pub degrees: BTreeMap<usize, u64>,
    pub histogram: Vec<HistogramBin>,
    /// Exact discrete maximum-likelihood exponent for d ≥ d_min.
    pub alpha_hat: f64,
    pub alpha_hat_shifted: f64,
    pub d_min: u64,
    pub n_facts: usize,
}

impl DegreeReport {
    pub fn total_degree(&self) -> u64 {
        self.degrees.values().sum()
    }

    pub fn summary(&self) -> DegreeSummary {
        DegreeSummary {
            alpha_hat: self.alpha_hat,
            d_min: self.d_min,
            n_entities: self.degrees.len(),
            n_facts: self.n_facts,
            alpha_hat_shifted: self.alpha_hat_shifted,
        }
    }

    /// Writes `degree,pdf` rows, one per non-empty log bin.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "degree,pdf").map_err(io)?;
        for bin in &self.histogram {
            writeln!(w, "{},{}", bin.center(), bin.pdf).map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.summary())?;
        fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

pub fn degree_analysis(triples: &[Triple]) -> Result<DegreeReport> {
    degree_analysis_with_min(triples, 1)
}

pub fn degree_analysis_with_min(triples: &[Triple], d_min: u64) -> Result<DegreeReport> {
    if triples.is_empty() {
        return Err(Error::InvalidArgument("degree analysis needs at least one fact".into()));
    }
    if d_min == 0 {
        return Err(Error::InvalidArgument("d_min must be >= 1".into()));
    }
    let mut degrees: BTreeMap<usize, u64> = BTreeMap::new();
    for t in triples {
        *degrees.entry(t.subject).or_default() += 1;
        *degrees.entry(t.object).or_default() += 1;
    }
    let values: Vec<u64> = degrees.values().copied().collect();
    let histogram = log_binned_pdf(&values);
    let (alpha_hat, alpha_hat_shifted) = discrete_power_law_mle(&values, d_min)?;
    Ok(DegreeReport {
        degrees,
        histogram,
        alpha_hat,
        alpha_hat_shifted,
        d_min,
        n_facts: triples.len(),
    })
}

fn log_binned_pdf(values: &[u64]) -> Vec<HistogramBin> {
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    let mut total = 0u64;
    for &d in values.iter().filter(|&&d| d > 0) {
        *counts.entry(63 - d.leading_zeros()).or_default() += 1;
        total += 1;
    }
    counts
        .into_iter()
        .map(|(k, c)| {
            let lower = 1u64 << k;
            let upper = lower << 1;
            HistogramBin {
                lower,
                upper,
                pdf: c as f64 / (total as f64 * (upper - lower) as f64),
            }
        })
        .collect()
}

// B_2j / (2j)!
const EULER_MACLAURIN: [f64; 6] = [
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
];

/// Hurwitz zeta ζ(s, q) = Σ_{k≥0} (q+k)^(−s) for s > 1, q > 0, via direct
/// summation of the first terms and an Euler–Maclaurin tail.
pub fn hurwitz_zeta(s: f64, q: f64) -> f64 {
    const HEAD: usize = 16;
    let mut sum: f64 = (0..HEAD).map(|k| (q + k as f64).powf(-s)).sum();
    let a = q + HEAD as f64;
    sum += a.powf(1.0 - s) / (s - 1.0) + 0.5 * a.powf(-s);
    // rising factorial s(s+1)…(s+2j−2) times a^(−s−2j+1)
    let mut rising = s;
    let mut power = a.powf(-s - 1.0);
    for (j, coeff) in EULER_MACLAURIN.iter().enumerate() {
        if j > 0 {
            let m = 2.0 * j as f64;
            rising *= (s + m - 1.0) * (s + m);
            power /= a * a;
        }
        sum += coeff * rising * power;
    }
    sum
}

/// Fits P(d) ∝ d^(−α) on the degrees ≥ `d_min`.
///
/// Returns `(exact, shifted)`: the maximizer of the discrete likelihood
/// −N·ln ζ(α, d_min) − α·Σ ln d, and the closed-form continuous
/// approximation 1 + N / Σ ln(d / (d_min − ½)).
pub fn discrete_power_law_mle(values: &[u64], d_min: u64) -> Result<(f64, f64)> {
    let tail: Vec<f64> = values
        .iter()
        .filter(|&&d| d >= d_min)
        .map(|&d| d as f64)
        .collect();
    if tail.is_empty() {
        return Err(Error::InvalidArgument(format!("no values >= d_min = {d_min}")));
    }
    let n = tail.len() as f64;
    let sum_ln: f64 = tail.iter().map(|d| d.ln()).sum();
    let shift = d_min as f64 - 0.5;
    let sum_shift: f64 = tail.iter().map(|d| (d / shift).ln()).sum();
    let shifted = 1.0 + n / sum_shift;

    let q = d_min as f64;
    let log_lik = |alpha: f64| -n * hurwitz_zeta(alpha, q).ln() - alpha * sum_ln;
    let exact = golden_section_max(log_lik, 1.0 + 1e-9, 50.0, 1e-12);
    Ok((exact, shifted))
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}
