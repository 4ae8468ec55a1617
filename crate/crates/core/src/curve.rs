//! Analysis of IPS-versus-vocabulary-size curves: Kneedle elbow, the 90%
//! quality point, the largest single-step gain and the recommended range.

use std::io::Read;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::integrated_performance_score;

/// Points `(k, ips)` sorted by strictly increasing `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IpsCurve {
    points: Vec<(usize, f64)>,
}

impl IpsCurve {
    pub fn new(points: Vec<(usize, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("curve has no points".into()));
        }
        if let Some(w) = points.windows(2).find(|w| w[0].0 >= w[1].0) {
            return Err(Error::Config(format!(
                "curve k values must be strictly increasing ({} then {})",
                w[0].0, w[1].0
            )));
        }
        if let Some(&(k, v)) = points.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::OutOfRange(format!("IPS at k = {k} is {v}")));
        }
        Ok(IpsCurve { points })
    }

    /// Builds a curve from `(k, lmc, osr)` rows.
    pub fn from_metrics(rows: &[(usize, f64, f64)]) -> Result<Self> {
        let points = rows
            .iter()
            .map(|&(k, lmc, osr)| Ok((k, integrated_performance_score(lmc, osr)?)))
            .collect::<Result<Vec<_>>>()?;
        IpsCurve::new(points)
    }

    pub fn points(&self) -> &[(usize, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn max_ips(&self) -> f64 {
        self.points
            .iter()
            .map(|p| p.1)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Parses CSV with a `k` column and either an `ips` column or `lmc` and
    /// `osr` columns (IPS is then computed). `path` only labels errors.
    pub fn from_csv_reader<R: Read>(reader: R, path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::parse(path, 1, e.to_string()))?
            .clone();
        let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let k_col = col("k").ok_or_else(|| Error::parse(path, 1, "missing `k` column"))?;
        let ips_col = col("ips");
        let metric_cols = col("lmc").zip(col("osr"));
        if ips_col.is_none() && metric_cols.is_none() {
            return Err(Error::parse(
                path,
                1,
                "expected an `ips` column or `lmc` and `osr` columns",
            ));
        }

        let mut points = Vec::new();
        for (i, record) in rdr.records().enumerate() {
            let line = i + 2;
            let record = record.map_err(|e| Error::parse(path, line, e.to_string()))?;
            let field = |c: usize| {
                record
                    .get(c)
                    .ok_or_else(|| Error::parse(path, line, format!("missing field {}", c + 1)))
            };
            let real = |c: usize| -> Result<f64> {
                let s = field(c)?;
                s.parse::<f64>()
                    .map_err(|_| Error::parse(path, line, format!("`{s}` is not a number")))
            };
            let k_str = field(k_col)?;
            let k = k_str.parse::<usize>().map_err(|_| {
                Error::parse(path, line, format!("`{k_str}` is not a vocabulary size"))
            })?;
            let ips = match (ips_col, metric_cols) {
                (Some(c), _) => real(c)?,
                (None, Some((l, o))) => integrated_performance_score(real(l)?, real(o)?)
                    .map_err(|e| Error::parse(path, line, e.to_string()))?,
                (None, None) => unreachable!(),
            };
            points.push((k, ips));
        }
        IpsCurve::new(points)
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        IpsCurve::from_csv_reader(file, path)
    }

    /// Curve of a built-in reference grid (`hu`, `et`, `fi`).
    pub fn builtin(language: &str) -> Result<Self> {
        let csv = crate::data::reference_grid(language)
            .ok_or_else(|| Error::Config(format!("no reference grid for `{language}`")))?;
        IpsCurve::from_csv_reader(csv.as_bytes(), Path::new(&format!("<builtin:{language}>")))
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("k,ips\n");
        for (k, ips) in &self.points {
            out.push_str(&format!("{k},{ips}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Elbow {
    pub k: usize,
    /// False when no local maximum of the difference curve met the
    /// threshold and the global maximum was used instead.
    pub distinct: bool,
}

fn normalize(v: &[f64]) -> Vec<f64> {
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    v.iter()
        .map(|&x| if span > 0.0 { (x - min) / span } else { 0.0 })
        .collect()
}

/// Offline Kneedle on the raw points of a concave increasing curve.
pub fn kneedle_elbow(curve: &IpsCurve, sensitivity: f64) -> Result<Elbow> {
    let n = curve.len();
    if n < 3 {
        return Err(Error::Degenerate(format!(
            "elbow detection needs at least 3 points, got {n}"
        )));
    }
    if !(sensitivity.is_finite() && sensitivity >= 0.0) {
        return Err(Error::Config(format!("invalid sensitivity {sensitivity}")));
    }
    let xs: Vec<f64> = curve.points.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = curve.points.iter().map(|p| p.1).collect();
    let xn = normalize(&xs);
    let yn = normalize(&ys);
    let d: Vec<f64> = xn
        .iter()
        .zip(&yn)
        .map(|(x, y)| {
            let v = y - x;
            if v.abs() < 1e-12 {
                0.0
            } else {
                v
            }
        })
        .collect();

    let at = |i: isize| d[i.clamp(0, n as isize - 1) as usize];
    let is_max = |i: usize| d[i] >= at(i as isize - 1) && d[i] >= at(i as isize + 1);
    let is_min = |i: usize| d[i] <= at(i as isize - 1) && d[i] <= at(i as isize + 1);
    let step = sensitivity * (xn[n - 1] - xn[0]) / (n - 1) as f64;

    let first_max = (0..n)
        .find(|&i| is_max(i))
        .expect("the global maximum is a local one");
    let mut threshold = 0.0;
    let mut threshold_index = first_max;
    for i in first_max..n - 1 {
        if is_max(i) {
            threshold = d[i] - step;
            threshold_index = i;
        }
        if is_min(i) {
            threshold = 0.0;
        }
        if d[i + 1] < threshold {
            return Ok(Elbow {
                k: curve.points[threshold_index].0,
                distinct: true,
            });
        }
    }

    // Global arg-max of d, earliest on ties.
    let best = (0..n).fold(0, |b, i| if d[i] > d[b] { i } else { b });
    log::warn!("no distinct knee; using the maximum of the difference curve");
    Ok(Elbow {
        k: curve.points[best].0,
        distinct: false,
    })
}

/// Smallest `k` whose IPS is at least 90% of the curve maximum.
pub fn q90_point(curve: &IpsCurve) -> usize {
    let target = 0.9 * curve.max_ips();
    curve
        .points
        .iter()
        .find(|p| p.1 >= target)
        .map(|p| p.0)
        .expect("the maximum itself qualifies")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GainMode {
    /// Largest IPS increase between neighbouring grid points.
    #[default]
    AbsoluteDelta,
    /// Largest IPS increase per unit of `k`.
    PerUnitDelta,
}

impl std::str::FromStr for GainMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absolute" | "absolute_delta" => Ok(GainMode::AbsoluteDelta),
            "per-unit" | "per_unit" | "per_unit_delta" => Ok(GainMode::PerUnitDelta),
            _ => Err(Error::Config(format!("unknown gain mode `{s}`"))),
        }
    }
}

/// Upper endpoint of the neighbouring pair with the largest gain; ties go to
/// the smaller `k`.
pub fn max_gain_point(curve: &IpsCurve, mode: GainMode) -> Result<usize> {
    if curve.len() < 2 {
        return Err(Error::Degenerate("gain needs at least 2 points".into()));
    }
    let mut best: Option<(f64, usize)> = None;
    for w in curve.points.windows(2) {
        let (k0, y0) = w[0];
        let (k1, y1) = w[1];
        let gain = match mode {
            GainMode::AbsoluteDelta => y1 - y0,
            GainMode::PerUnitDelta => (y1 - y0) / (k1 - k0) as f64,
        };
        if best.is_none_or(|(g, _)| gain > g) {
            best = Some((gain, k1));
        }
    }
    Ok(best.expect("at least one interval").1)
}

/// Key points of a curve, shaped like a results table row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveAnalysis {
    pub k_gain: usize,
    pub gain_mode: GainMode,
    pub k_elbow: usize,
    pub k_q90: usize,
    pub recommended_range: (usize, usize),
    pub elbow_is_distinct: bool,
    pub max_ips: f64,
    pub sensitivity: f64,
    pub warnings: Vec<String>,
}

pub const DEFAULT_SENSITIVITY: f64 = 1.0;

/// Elbow to q90 range, with the max-gain point as advice.
pub fn recommend_range(
    curve: &IpsCurve,
    sensitivity: f64,
    mode: GainMode,
) -> Result<CurveAnalysis> {
    let elbow = kneedle_elbow(curve, sensitivity)?;
    let k_q90 = q90_point(curve);
    let k_gain = max_gain_point(curve, mode)?;

    let mut warnings = Vec::new();
    let first = curve.points[0].1;
    let last = curve.points[curve.len() - 1].1;
    if last < first {
        warnings.push("curve is not increasing overall".to_string());
    }
    if !elbow.distinct {
        warnings.push("no distinct knee".to_string());
    }
    if elbow.k > k_q90 {
        warnings.push("degenerate range: elbow lies above the q90 point".to_string());
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(CurveAnalysis {
        k_gain,
        gain_mode: mode,
        k_elbow: elbow.k,
        k_q90,
        recommended_range: (elbow.k, k_q90),
        elbow_is_distinct: elbow.distinct,
        max_ips: curve.max_ips(),
        sensitivity,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(points: &[(usize, f64)]) -> IpsCurve {
        IpsCurve::new(points.to_vec()).unwrap()
    }

    #[test]
    fn reference_grids_reproduce_key_points() {
        for (lang, q90) in [("hu", 128_000), ("et", 128_000), ("fi", 150_000)] {
            let c = IpsCurve::builtin(lang).unwrap();
            assert_eq!(c.len(), 15);
            let a = recommend_range(&c, DEFAULT_SENSITIVITY, GainMode::AbsoluteDelta).unwrap();
            assert_eq!(a.k_elbow, 80_000, "{lang}");
            assert!(a.elbow_is_distinct);
            assert_eq!(a.k_q90, q90, "{lang}");
            assert_eq!(a.recommended_range, (80_000, q90));
        }
    }

    #[test]
    fn absolute_gain_points() {
        let et = IpsCurve::builtin("et").unwrap();
        assert_eq!(
            max_gain_point(&et, GainMode::AbsoluteDelta).unwrap(),
            16_000
        );
        let hu = IpsCurve::builtin("hu").unwrap();
        assert_eq!(
            max_gain_point(&hu, GainMode::AbsoluteDelta).unwrap(),
            32_000
        );
    }

    #[test]
    fn gain_modes_differ_on_uneven_grid() {
        let c = curve(&[(0, 0.0), (1, 0.1), (11, 0.5)]);
        assert_eq!(max_gain_point(&c, GainMode::AbsoluteDelta).unwrap(), 11);
        assert_eq!(max_gain_point(&c, GainMode::PerUnitDelta).unwrap(), 1);
        let tie = curve(&[(1, 0.0), (2, 0.5), (3, 1.0)]);
        assert_eq!(max_gain_point(&tie, GainMode::AbsoluteDelta).unwrap(), 2);
        assert!(max_gain_point(&curve(&[(1, 0.2)]), GainMode::AbsoluteDelta).is_err());
    }

    #[test]
    fn q90_rows() {
        let hu = IpsCurve::builtin("hu").unwrap();
        let q = q90_point(&hu);
        let ips = |k| hu.points().iter().find(|p| p.0 == k).unwrap().1;
        assert!(ips(q) >= 0.9 * hu.max_ips());
        assert!(ips(100_000) < 0.9 * hu.max_ips());
        assert_eq!(q90_point(&curve(&[(5, 0.4)])), 5);
    }

    #[test]
    fn linear_curve_has_no_distinct_knee() {
        let c = curve(&[(1, 0.1), (2, 0.2), (3, 0.3), (4, 0.4), (5, 0.5)]);
        let e = kneedle_elbow(&c, 1.0).unwrap();
        assert!(!e.distinct);
        let a = recommend_range(&c, 1.0, GainMode::AbsoluteDelta).unwrap();
        assert!(a.warnings.iter().any(|w| w == "no distinct knee"));
    }

    #[test]
    fn sharp_knee() {
        let c = curve(&[(1, 0.0), (2, 0.8), (3, 0.9), (4, 0.95), (5, 1.0)]);
        assert_eq!(
            kneedle_elbow(&c, 1.0).unwrap(),
            Elbow {
                k: 2,
                distinct: true
            }
        );
    }

    #[test]
    fn too_few_points() {
        let c = curve(&[(1, 0.1), (2, 0.2)]);
        assert!(matches!(kneedle_elbow(&c, 1.0), Err(Error::Degenerate(_))));
        assert!(kneedle_elbow(&curve(&[(1, 0.1), (2, 0.2), (3, 0.25)]), f64::NAN).is_err());
    }

    #[test]
    fn elbow_is_affine_invariant() {
        for lang in ["hu", "et", "fi"] {
            let c = IpsCurve::builtin(lang).unwrap();
            let base = kneedle_elbow(&c, 1.0).unwrap();
            let scaled = curve(
                &c.points()
                    .iter()
                    .map(|&(k, y)| (3 * k + 1000, 2.5 * y - 0.7))
                    .collect::<Vec<_>>(),
            );
            let e = kneedle_elbow(&scaled, 1.0).unwrap();
            assert_eq!(e.k, 3 * base.k + 1000);
            assert_eq!(e.distinct, base.distinct);
        }
    }

    #[test]
    fn csv_forms() {
        let p = Path::new("c.csv");
        let a = IpsCurve::from_csv_reader("k,ips\n1,0.1\n2,0.3\n".as_bytes(), p).unwrap();
        assert_eq!(a.points(), [(1, 0.1), (2, 0.3)]);
        let b = IpsCurve::from_csv_reader("k,lmc,osr\n1,1.0,0.0\n".as_bytes(), p).unwrap();
        assert_eq!(b.points(), [(1, 1.0)]);
        let back = IpsCurve::from_csv_reader(a.to_csv_string().as_bytes(), p).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn csv_errors_carry_lines() {
        let p = Path::new("c.csv");
        let e = IpsCurve::from_csv_reader("k,ips\n1,0.1\n2,abc\n".as_bytes(), p).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e:?}");
        let e = IpsCurve::from_csv_reader("size,ips\n1,0.1\n".as_bytes(), p).unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = IpsCurve::from_csv_reader("k,ips\n2,0.1\n1,0.2\n".as_bytes(), p).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }
}
