use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Two grid points closer than this are treated as the same `lambda`.
pub const GRID_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveLabel {
    Exact,
    Noisy,
    /// 1-based ensemble index.
    Randomized(usize),
    Mitigated,
    Zne,
}

impl fmt::Display for CurveLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CurveLabel::Exact => f.write_str("exact"),
            CurveLabel::Noisy => f.write_str("noisy"),
            CurveLabel::Randomized(r) => write!(f, "randomized_{r}"),
            CurveLabel::Mitigated => f.write_str("mitigated"),
            CurveLabel::Zne => f.write_str("zne"),
        }
    }
}

impl FromStr for CurveLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "exact" => CurveLabel::Exact,
            "noisy" => CurveLabel::Noisy,
            "mitigated" => CurveLabel::Mitigated,
            "zne" => CurveLabel::Zne,
            _ => match s.strip_prefix("randomized_").map(str::parse::<usize>) {
                Some(Ok(r)) => CurveLabel::Randomized(r),
                _ => return Err(Error::InvalidParameter(format!("unknown curve label {s:?}"))),
            },
        })
    }
}

impl Serialize for CurveLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CurveLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Observable values on a strictly increasing `lambda` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveRecord")]
pub struct Curve {
    label: CurveLabel,
    lambdas: Vec<f64>,
    values: Vec<f64>,
    stderrs: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveRecord {
    label: CurveLabel,
    lambdas: Vec<f64>,
    values: Vec<f64>,
    stderrs: Option<Vec<f64>>,
}

impl TryFrom<CurveRecord> for Curve {
    type Error = Error;

    fn try_from(r: CurveRecord) -> Result<Self> {
        Curve::new(r.label, r.lambdas, r.values, r.stderrs)
    }
}

impl Curve {
    pub fn new(label: CurveLabel, lambdas: Vec<f64>, values: Vec<f64>, stderrs: Option<Vec<f64>>) -> Result<Self> {
        if lambdas.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: lambdas.len(),
                found: values.len(),
            });
        }
        if let Some(se) = &stderrs {
            if se.len() != lambdas.len() {
                return Err(Error::DimensionMismatch {
                    expected: lambdas.len(),
                    found: se.len(),
                });
            }
            if se.iter().any(|s| !s.is_finite() || *s < 0.0) {
                return Err(Error::NonFinite(format!("stderrs of {label} curve")));
            }
        }
        if lambdas.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("{label} curve")));
        }
        if lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(format!(
                "{label} curve grid is not strictly increasing"
            )));
        }
        Ok(Curve {
            label,
            lambdas,
            values,
            stderrs,
        })
    }

    /// Evaluates `f` on every grid point.
    pub fn from_fn(label: CurveLabel, lambdas: &[f64], f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let values = lambdas.iter().map(|&l| f(l)).collect::<Result<Vec<_>>>()?;
        Curve::new(label, lambdas.to_vec(), values, None)
    }

    pub fn label(&self) -> CurveLabel {
        self.label
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn stderrs(&self) -> Option<&[f64]> {
        self.stderrs.as_deref()
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn relabeled(mut self, label: CurveLabel) -> Self {
        self.label = label;
        self
    }

    /// Sub-curve on the given points; every point must be on the grid.
    pub fn restrict(&self, points: &[f64]) -> Result<Curve> {
        let mut idx = Vec::with_capacity(points.len());
        for &p in points {
            let i = self.position(p).ok_or_else(|| {
                Error::OutOfDomain(format!("lambda = {p} is not on the {} grid", self.label))
            })?;
            idx.push(i);
        }
        self.select(&idx)
    }

    /// Sub-curve on grid points within `[lo, hi]` (with [`GRID_TOL`] slack).
    pub fn restrict_range(&self, lo: f64, hi: f64) -> Result<Curve> {
        let idx: Vec<usize> = (0..self.len())
            .filter(|&i| self.lambdas[i] >= lo - GRID_TOL && self.lambdas[i] <= hi + GRID_TOL)
            .collect();
        self.select(&idx)
    }

    fn select(&self, idx: &[usize]) -> Result<Curve> {
        Curve::new(
            self.label,
            idx.iter().map(|&i| self.lambdas[i]).collect(),
            idx.iter().map(|&i| self.values[i]).collect(),
            self.stderrs.as_ref().map(|s| idx.iter().map(|&i| s[i]).collect()),
        )
    }

    fn position(&self, p: f64) -> Option<usize> {
        let i = self.lambdas.partition_point(|&l| l < p - GRID_TOL);
        (i < self.len() && (self.lambdas[i] - p).abs() <= GRID_TOL).then_some(i)
    }

    pub fn same_grid(&self, other: &Curve) -> bool {
        self.len() == other.len()
            && self
                .lambdas
                .iter()
                .zip(&other.lambdas)
                .all(|(a, b)| (a - b).abs() <= GRID_TOL)
    }

    pub(crate) fn ensure_same_grid(&self, other: &Curve) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "{} and {} curves are on different grids",
                self.label, other.label
            )))
        }
    }

    /// Root-mean-square difference to `reference` on the shared grid.
    pub fn rmse(&self, reference: &Curve) -> Result<f64> {
        self.ensure_same_grid(reference)?;
        if self.is_empty() {
            return Err(Error::Empty("rmse of an empty curve".into()));
        }
        Ok(rmse(&self.values, &reference.values))
    }

    /// CSV with header `lambda,value,stderr,label`; a missing stderr is an
    /// empty field.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,value,stderr,label\n");
        for i in 0..self.len() {
            let se = self.stderrs.as_ref().map(|s| s[i].to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}\n", self.lambdas[i], self.values[i], se, self.label));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Curve> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("lambda,value,stderr,label") {
            return Err(Error::Config("curve CSV header must be lambda,value,stderr,label".into()));
        }
        let (mut lambdas, mut values, mut stderrs) = (Vec::new(), Vec::new(), Vec::new());
        let mut label = None;
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let bad = |what: &str| Error::Config(format!("curve CSV row {}: {what}", n + 1));
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(bad("expected 4 fields"));
            }
            lambdas.push(fields[0].parse::<f64>().map_err(|_| bad("bad lambda"))?);
            values.push(fields[1].parse::<f64>().map_err(|_| bad("bad value"))?);
            stderrs.push(if fields[2].is_empty() {
                None
            } else {
                Some(fields[2].parse::<f64>().map_err(|_| bad("bad stderr"))?)
            });
            let l: CurveLabel = fields[3].parse().map_err(|_| bad("bad label"))?;
            if label.is_some_and(|prev| prev != l) {
                return Err(bad("mixed labels"));
            }
            label = Some(l);
        }
        let label = label.ok_or_else(|| Error::Empty("curve CSV has no rows".into()))?;
        let stderrs = if stderrs.iter().all(Option::is_some) && !stderrs.is_empty() {
            Some(stderrs.into_iter().flatten().collect())
        } else if stderrs.iter().all(Option::is_none) {
            None
        } else {
            return Err(Error::Config("curve CSV mixes present and missing stderrs".into()));
        };
        Curve::new(label, lambdas, values, stderrs)
    }
}

pub(crate) fn rmse(a: &[f64], b: &[f64]) -> f64 {
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    (ss / a.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Curve {
        Curve::new(CurveLabel::Noisy, vec![1.0, 1.5, 2.0], vec![0.1, 0.2, 0.3], Some(vec![0.01, 0.0, 0.02])).unwrap()
    }

    #[test]
    fn invariants_enforced() {
        assert!(Curve::new(CurveLabel::Exact, vec![1.0, 1.0], vec![0.0, 0.0], None).is_err());
        assert!(Curve::new(CurveLabel::Exact, vec![2.0, 1.0], vec![0.0, 0.0], None).is_err());
        assert!(Curve::new(CurveLabel::Exact, vec![1.0], vec![0.0, 0.0], None).is_err());
        assert!(Curve::new(CurveLabel::Exact, vec![1.0], vec![f64::NAN], None).is_err());
        assert!(Curve::new(CurveLabel::Exact, vec![1.0], vec![0.0], Some(vec![-1.0])).is_err());
    }

    #[test]
    fn labels_round_trip() {
        for l in [
            CurveLabel::Exact,
            CurveLabel::Noisy,
            CurveLabel::Randomized(7),
            CurveLabel::Mitigated,
            CurveLabel::Zne,
        ] {
            assert_eq!(l.to_string().parse::<CurveLabel>().unwrap(), l);
        }
        assert!("randomized_x".parse::<CurveLabel>().is_err());
    }

    #[test]
    fn csv_round_trip() {
        let c = sample();
        let text = c.to_csv();
        assert!(text.starts_with("lambda,value,stderr,label\n1,0.1,0.01,noisy\n"));
        assert_eq!(Curve::from_csv(&text).unwrap(), c);
        let bare = Curve::new(CurveLabel::Randomized(2), vec![1.0], vec![0.5], None).unwrap();
        assert_eq!(bare.to_csv(), "lambda,value,stderr,label\n1,0.5,,randomized_2\n");
        assert_eq!(Curve::from_csv(&bare.to_csv()).unwrap(), bare);
        assert!(Curve::from_csv("x,y\n").is_err());
    }

    #[test]
    fn restriction() {
        let c = sample();
        let r = c.restrict(&[2.0, 1.0 + 1e-12]).unwrap_err();
        assert!(matches!(r, Error::InvalidParameter(_)), "{r}");
        let r = c.restrict(&[1.0 + 1e-12, 2.0]).unwrap();
        assert_eq!(r.values(), &[0.1, 0.3]);
        assert_eq!(r.stderrs().unwrap(), &[0.01, 0.02]);
        assert!(c.restrict(&[1.25]).is_err());
        assert_eq!(c.restrict_range(1.2, 2.0).unwrap().lambdas(), &[1.5, 2.0]);
    }

    #[test]
    fn rmse_value() {
        let a = Curve::new(CurveLabel::Exact, vec![1.0, 2.0], vec![0.0, 0.0], None).unwrap();
        let b = Curve::new(CurveLabel::Noisy, vec![1.0, 2.0], vec![3.0, 4.0], None).unwrap();
        assert!((b.rmse(&a).unwrap() - 12.5f64.sqrt()).abs() < 1e-15);
        let c = Curve::new(CurveLabel::Noisy, vec![1.0, 3.0], vec![3.0, 4.0], None).unwrap();
        assert!(c.rmse(&a).is_err());
    }

    #[test]
    fn json_validates() {
        let c = sample();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<Curve>(&text).unwrap(), c);
        let bad = text.replace("[1.0,1.5,2.0]", "[2.0,1.5,1.0]");
        assert!(serde_json::from_str::<Curve>(&bad).is_err());
    }
}
