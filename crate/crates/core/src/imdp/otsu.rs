//! Otsu thresholding of a score distribution.
//!
//! Scores are binned into `bins` equal-width bins over `[min, max]` and every
//! interior bin edge is tried as a threshold. Class means use bin centres, as
//! in the classic image-histogram formulation. The between-class variance is
//! compared in exact integer arithmetic so the arg-max and its tie-break
//! (lowest edge wins) do not depend on rounding.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OtsuResult {
    pub threshold: f64,
    pub bin_count: usize,
    /// Index of the chosen edge; the upper class is bins `boundary..`.
    pub boundary: usize,
    pub inter_class_variance: f64,
}

/// Equal-width histogram whose bin membership agrees exactly with
/// [`Histogram::edge`]: a value lies in bin `t` iff `edge(t) <= v` and
/// (`t` is the last bin or `v < edge(t + 1)`).
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub min: f64,
    pub max: f64,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::Config("Otsu needs at least 2 bins".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::OutOfRange("non-finite score".into()));
        }
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if min >= max {
            return Err(Error::Degenerate(
                "fewer than two distinct scores; no threshold separates them".into(),
            ));
        }
        let mut h = Histogram {
            min,
            max,
            counts: vec![0; bins],
        };
        for &v in values {
            let b = h.bin_of(v);
            h.counts[b] += 1;
        }
        Ok(h)
    }

    pub fn bins(&self) -> usize {
        self.counts.len()
    }

    pub fn edge(&self, t: usize) -> f64 {
        self.min + (self.max - self.min) * t as f64 / self.bins() as f64
    }

    pub fn bin_of(&self, v: f64) -> usize {
        let bins = self.bins();
        let guess = ((v - self.min) / (self.max - self.min) * bins as f64).floor();
        let mut b = (guess.max(0.0) as usize).min(bins - 1);
        while b > 0 && v < self.edge(b) {
            b -= 1;
        }
        while b + 1 < bins && v >= self.edge(b + 1) {
            b += 1;
        }
        b
    }
}

/// 256-bit product of two `u128`s as (high, low).
fn mul_wide(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = u64::MAX as u128;
    let (a1, a0) = (a >> 64, a & MASK);
    let (b1, b0) = (b >> 64, b & MASK);
    let low = a0 * b0;
    let (mid, mid_carry) = (a0 * b1).overflowing_add(a1 * b0);
    let (lo, lo_carry) = low.overflowing_add(mid << 64);
    let hi = a1 * b1 + (mid >> 64) + ((mid_carry as u128) << 64) + lo_carry as u128;
    (hi, lo)
}

/// Between-class variance up to a positive constant, as a fraction
/// `(n1·S0 − n0·S1)² / (n0·n1)` where `S` sums doubled bin centres.
#[derive(Debug, Clone, Copy)]
struct Variance {
    num: u128,
    den: u128,
}

impl Variance {
    fn new(n0: u64, s0: u128, n1: u64, s1: u128) -> Result<Self> {
        let overflow = || Error::OutOfRange("score distribution too large for Otsu".into());
        let a = (n1 as u128).checked_mul(s0).ok_or_else(overflow)?;
        let b = (n0 as u128).checked_mul(s1).ok_or_else(overflow)?;
        let d = a.abs_diff(b);
        Ok(Variance {
            num: d.checked_mul(d).ok_or_else(overflow)?,
            den: n0 as u128 * n1 as u128,
        })
    }

    fn greater_than(&self, other: &Variance) -> bool {
        mul_wide(self.num, other.den) > mul_wide(other.num, self.den)
    }
}

/// Threshold maximizing the between-class variance `ω0·ω1·(μ0 − μ1)²`.
pub fn otsu_threshold(scores: &[f64], bins: usize) -> Result<OtsuResult> {
    let h = Histogram::new(scores, bins)?;
    let total_n: u64 = h.counts.iter().sum();
    let total_s: u128 = h
        .counts
        .iter()
        .enumerate()
        .map(|(i, &c)| c as u128 * (2 * i as u128 + 1))
        .sum();

    let mut best: Option<(usize, Variance)> = None;
    let (mut n0, mut s0) = (0u64, 0u128);
    for t in 1..bins {
        n0 += h.counts[t - 1];
        s0 += h.counts[t - 1] as u128 * (2 * (t - 1) as u128 + 1);
        let n1 = total_n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let v = Variance::new(n0, s0, n1, total_s - s0)?;
        if best.is_none_or(|(_, b)| v.greater_than(&b)) {
            best = Some((t, v));
        }
    }
    let (boundary, v) = best.expect("min and max fall in the first and last bin");

    // Back to score units: μ in bin-centre units is S/(2n); one bin is
    // (max − min)/bins wide.
    let width = (h.max - h.min) / bins as f64;
    let n = total_n as f64;
    let variance = v.num as f64 / (v.den as f64 * 4.0 * n * n) * width * width;
    Ok(OtsuResult {
        threshold: h.edge(boundary),
        bin_count: bins,
        boundary,
        inter_class_variance: variance,
    })
}
