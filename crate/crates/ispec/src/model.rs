//! Periodic Ising model specifications and their two edge-weight systems.
//!
//! A model has an `m x n` period: `m` sites horizontally, `n` vertically.
//! `jh[i][j]` couples site `(i, j)` to `(i+1 mod m, j)` and `jv[i][j]`
//! couples `(i, j)` to `(i, j+1 mod n)`. The inverse temperature is never
//! stored in the model; it is passed to [`PeriodicIsingModel::weights`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicIsingModel {
    m: usize,
    n: usize,
    #[serde(rename = "Jh")]
    jh: Vec<Vec<f64>>,
    #[serde(rename = "Jv")]
    jv: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    m: i64,
    n: i64,
    #[serde(rename = "Jh")]
    jh: Vec<Vec<f64>>,
    #[serde(rename = "Jv")]
    jv: Vec<Vec<f64>>,
}

/// Parses and validates a JSON model document
/// `{"m": int, "n": int, "Jh": [[float]], "Jv": [[float]]}`.
pub fn parse_model(text: &str) -> Result<PeriodicIsingModel> {
    let doc: ModelDocument =
        serde_json::from_str(text).map_err(|e| Error::MalformedDocument(e.to_string()))?;
    if doc.m < 1 || doc.n < 1 {
        return Err(Error::MalformedDocument(format!(
            "periods must be positive, got m = {}, n = {}",
            doc.m, doc.n
        )));
    }
    PeriodicIsingModel::new(doc.m as usize, doc.n as usize, doc.jh, doc.jv)
}

fn check_grid(name: &'static str, g: &[Vec<f64>], m: usize, n: usize) -> Result<()> {
    if g.len() != m || g.iter().any(|row| row.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "{name} must be {m}x{n} (indexed [i][j])"
        )));
    }
    for (i, row) in g.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositiveCoupling {
                    grid: name,
                    i,
                    j,
                    value: v,
                });
            }
        }
    }
    Ok(())
}

impl PeriodicIsingModel {
    pub fn new(m: usize, n: usize, jh: Vec<Vec<f64>>, jv: Vec<Vec<f64>>) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::DimensionMismatch("periods must be positive".into()));
        }
        check_grid("Jh", &jh, m, n)?;
        check_grid("Jv", &jv, m, n)?;
        Ok(PeriodicIsingModel { m, n, jh, jv })
    }

    /// The `1 x 1` model with every coupling equal to `j`.
    pub fn homogeneous(j: f64) -> Result<Self> {
        Self::new(1, 1, vec![vec![j]], vec![vec![j]])
    }

    /// The `1 x 1` model with horizontal coupling `jh` and vertical `jv`.
    pub fn anisotropic(jh: f64, jv: f64) -> Result<Self> {
        Self::new(1, 1, vec![vec![jh]], vec![vec![jv]])
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sites(&self) -> usize {
        self.m * self.n
    }

    pub fn jh(&self) -> &[Vec<f64>] {
        &self.jh
    }

    pub fn jv(&self) -> &[Vec<f64>] {
        &self.jv
    }

    /// Horizontal coupling leaving site `(x, y)`, with periodic indexing.
    pub fn jh_at(&self, x: usize, y: usize) -> f64 {
        self.jh[x % self.m][y % self.n]
    }

    /// Vertical coupling leaving site `(x, y)`, with periodic indexing.
    pub fn jv_at(&self, x: usize, y: usize) -> f64 {
        self.jv[x % self.m][y % self.n]
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serialization cannot fail")
    }

    /// The same infinite model with an `(a m) x (b n)` fundamental domain.
    pub fn replicate(&self, a: usize, b: usize) -> Result<Self> {
        if a == 0 || b == 0 {
            return Err(Error::InvalidArgument(
                "replication factors must be positive".into(),
            ));
        }
        let tile = |g: &[Vec<f64>]| -> Vec<Vec<f64>> {
            (0..a * self.m)
                .map(|i| (0..b * self.n).map(|j| g[i % self.m][j % self.n]).collect())
                .collect()
        };
        Self::new(a * self.m, b * self.n, tile(&self.jh), tile(&self.jv))
    }

    /// Replication factors that make both periods even.
    pub fn even_factors(&self) -> (usize, usize) {
        (
            if self.m % 2 == 0 { 1 } else { 2 },
            if self.n % 2 == 0 { 1 } else { 2 },
        )
    }

    /// Edge weights at inverse temperature `beta`.
    pub fn weights(&self, beta: f64, kind: WeightKind) -> Result<EdgeWeightMap> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
        }
        let f = |j: f64| match kind {
            WeightKind::HighTemp => (beta * j).tanh(),
            WeightKind::LowTemp => (-2.0 * beta * j).exp(),
        };
        let map = |g: &[Vec<f64>]| -> Vec<Vec<f64>> {
            g.iter().map(|row| row.iter().map(|&j| f(j)).collect()).collect()
        };
        Ok(EdgeWeightMap {
            kind,
            th: map(&self.jh),
            tv: map(&self.jv),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WeightKind {
    /// `tanh(beta J)`: polygon (high-temperature) expansion on the lattice.
    HighTemp,
    /// `exp(-2 beta J)`: domain-wall (low-temperature) expansion.
    LowTemp,
}

impl WeightKind {
    pub fn flipped(self) -> Self {
        match self {
            WeightKind::HighTemp => WeightKind::LowTemp,
            WeightKind::LowTemp => WeightKind::HighTemp,
        }
    }
}

/// Per-edge weights in `(0, 1)` over one fundamental domain, indexed like
/// the coupling grids: `th[i][j]` on the horizontal edge leaving `(i, j)`,
/// `tv[i][j]` on the vertical one.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeWeightMap {
    pub kind: WeightKind,
    pub th: Vec<Vec<f64>>,
    pub tv: Vec<Vec<f64>>,
}

impl EdgeWeightMap {
    /// Weights given directly; entries may be `0` (edge absent) up to `< 1`.
    pub fn from_grids(kind: WeightKind, th: Vec<Vec<f64>>, tv: Vec<Vec<f64>>) -> Result<Self> {
        let m = th.len();
        let n = th.first().map_or(0, Vec::len);
        if m == 0 || n == 0 || tv.len() != m || th.iter().chain(&tv).any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch("weight grids must both be m x n".into()));
        }
        if let Some(&bad) = th.iter().chain(&tv).flatten().find(|&&t| !(0.0..1.0).contains(&t)) {
            return Err(Error::WeightOutOfRange(bad));
        }
        Ok(EdgeWeightMap { kind, th, tv })
    }

    pub fn m(&self) -> usize {
        self.th.len()
    }

    pub fn n(&self) -> usize {
        self.th[0].len()
    }

    pub fn th_at(&self, x: usize, y: usize) -> f64 {
        self.th[x % self.m()][y % self.n()]
    }

    pub fn tv_at(&self, x: usize, y: usize) -> f64 {
        self.tv[x % self.m()][y % self.n()]
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.th.iter().chain(&self.tv).flatten().copied()
    }

    /// Moves every weight to the dual-lattice edge crossing it.
    ///
    /// Dual site `(i, j)` sits in the plaquette whose lower-left corner is
    /// site `(i, j)`. The dual horizontal edge leaving it crosses the
    /// vertical bond `(i+1, j)-(i+1, j+1)`, and the dual vertical edge
    /// crosses the horizontal bond `(i, j+1)-(i+1, j+1)`.
    pub fn on_dual_lattice(&self) -> Self {
        let (m, n) = (self.m(), self.n());
        let th = (0..m)
            .map(|i| (0..n).map(|j| self.tv[(i + 1) % m][j]).collect())
            .collect();
        let tv = (0..m)
            .map(|i| (0..n).map(|j| self.th[i][(j + 1) % n]).collect())
            .collect();
        EdgeWeightMap {
            kind: self.kind,
            th,
            tv,
        }
    }
}

/// The duality map `t -> (1 - t)/(1 + t)`, which sends `tanh(beta J)` to
/// `exp(-2 beta J)` and back, applied entrywise; flips the weight kind.
pub fn dualize(weights: &EdgeWeightMap) -> Result<EdgeWeightMap> {
    if let Some(bad) = weights.values().find(|t| !(0.0..=1.0).contains(t)) {
        return Err(Error::WeightOutOfRange(bad));
    }
    let f = |g: &[Vec<f64>]| -> Vec<Vec<f64>> {
        g.iter()
            .map(|row| row.iter().map(|&t| (1.0 - t) / (1.0 + t)).collect())
            .collect()
    };
    Ok(EdgeWeightMap {
        kind: weights.kind.flipped(),
        th: f(&weights.th),
        tv: f(&weights.tv),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_homogeneous() {
        let m = parse_model(r#"{"m":1,"n":1,"Jh":[[1.0]],"Jv":[[1.0]]}"#).unwrap();
        assert_eq!(m, PeriodicIsingModel::homogeneous(1.0).unwrap());
    }

    #[test]
    fn parses_one_by_two() {
        let m = parse_model(r#"{"m":1,"n":2,"Jh":[[0.9,1.6]],"Jv":[[0.7,1.3]]}"#).unwrap();
        assert_eq!((m.m(), m.n()), (1, 2));
        assert_eq!(m.jh_at(0, 1), 1.6);
        assert_eq!(m.jv_at(0, 3), 1.3);
    }

    #[test]
    fn rejects_invalid_documents() {
        assert!(matches!(
            parse_model(r#"{"m":1,"n":1,"Jh":[[-1.0]],"Jv":[[1.0]]}"#),
            Err(Error::NonPositiveCoupling { grid: "Jh", .. })
        ));
        assert!(matches!(
            parse_model(r#"{"m":1,"n":2,"Jh":[[1.0]],"Jv":[[1.0,1.0]]}"#),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(matches!(
            parse_model(r#"{"m":1,"n":1,"Jh":[[1.0]]}"#),
            Err(Error::MalformedDocument(_))
        ));
        assert!(matches!(
            parse_model(r#"{"m":1,"n":1,"Jh":[[1.0]],"Jv":[[1.0]],"h":0.1}"#),
            Err(Error::MalformedDocument(_))
        ));
        assert!(matches!(
            parse_model(r#"{"m":0,"n":1,"Jh":[],"Jv":[]}"#),
            Err(Error::MalformedDocument(_))
        ));
    }

    #[test]
    fn json_round_trip() {
        let m = PeriodicIsingModel::new(2, 1, vec![vec![1.0], vec![0.5]], vec![vec![2.0], vec![0.25]])
            .unwrap();
        assert_eq!(parse_model(&m.to_json()).unwrap(), m);
    }

    #[test]
    fn weight_values() {
        let m = PeriodicIsingModel::homogeneous(1.0).unwrap();
        let hi = m.weights(0.5, WeightKind::HighTemp).unwrap();
        let lo = m.weights(0.5, WeightKind::LowTemp).unwrap();
        assert!((hi.th[0][0] - 0.46211715726000974).abs() < 1e-15);
        assert!((lo.tv[0][0] - 0.36787944117144233).abs() < 1e-15);
        let tiny = m.weights(1e-12, WeightKind::HighTemp).unwrap();
        assert!(tiny.th[0][0] < 1e-11);
        let tiny = m.weights(1e-12, WeightKind::LowTemp).unwrap();
        assert!(1.0 - tiny.th[0][0] < 1e-11);
        assert!(m.weights(0.0, WeightKind::HighTemp).is_err());
    }

    #[test]
    fn dualize_values() {
        let w = EdgeWeightMap::from_grids(WeightKind::HighTemp, vec![vec![0.0]], vec![vec![0.5_f64.tanh()]])
            .unwrap();
        let d = dualize(&w).unwrap();
        assert_eq!(d.kind, WeightKind::LowTemp);
        assert_eq!(d.th[0][0], 1.0);
        assert!((d.tv[0][0] - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn replicate_tiles_grids() {
        let m = PeriodicIsingModel::homogeneous(1.0).unwrap().replicate(2, 2).unwrap();
        assert_eq!((m.m(), m.n()), (2, 2));
        assert!(m.jh().iter().chain(m.jv()).flatten().all(|&j| j == 1.0));
        let base = PeriodicIsingModel::new(1, 2, vec![vec![0.9, 1.6]], vec![vec![0.7, 1.3]]).unwrap();
        let r = base.replicate(3, 2).unwrap();
        for x in 0..3 {
            for y in 0..4 {
                assert_eq!(r.jh_at(x, y), base.jh_at(x, y));
                assert_eq!(r.jv_at(x, y), base.jv_at(x, y));
            }
        }
        assert_eq!(base.even_factors(), (2, 1));
    }

    #[test]
    fn dual_lattice_positions() {
        let w = EdgeWeightMap::from_grids(
            WeightKind::LowTemp,
            vec![vec![0.1, 0.2], vec![0.3, 0.4]],
            vec![vec![0.5, 0.6], vec![0.7, 0.8]],
        )
        .unwrap();
        let d = w.on_dual_lattice();
        assert_eq!(d.th, vec![vec![0.7, 0.8], vec![0.5, 0.6]]);
        assert_eq!(d.tv, vec![vec![0.2, 0.1], vec![0.4, 0.3]]);
    }

    proptest! {
        #[test]
        fn prop_dualize_is_involution(t in 0.0f64..1.0, s in 0.0f64..1.0) {
            let w = EdgeWeightMap::from_grids(WeightKind::HighTemp, vec![vec![t]], vec![vec![s]]).unwrap();
            let back = dualize(&dualize(&w).unwrap()).unwrap();
            prop_assert!((back.th[0][0] - t).abs() < 1e-14);
            prop_assert!((back.tv[0][0] - s).abs() < 1e-14);
            prop_assert_eq!(back.kind, WeightKind::HighTemp);
        }

        #[test]
        fn prop_weights_in_unit_interval_and_monotone(j in 0.05f64..3.0, b in 0.001f64..3.0) {
            let m = PeriodicIsingModel::homogeneous(j).unwrap();
            let h1 = m.weights(b, WeightKind::HighTemp).unwrap().th[0][0];
            let h2 = m.weights(b * 1.01, WeightKind::HighTemp).unwrap().th[0][0];
            let l1 = m.weights(b, WeightKind::LowTemp).unwrap().th[0][0];
            let l2 = m.weights(b * 1.01, WeightKind::LowTemp).unwrap().th[0][0];
            prop_assert!(h1 > 0.0 && h1 < 1.0 && l1 > 0.0 && l1 < 1.0);
            prop_assert!(h2 > h1);
            prop_assert!(l2 < l1);
        }

        #[test]
        fn prop_dualize_maps_tanh_to_exp(j in 0.05f64..3.0, b in 0.01f64..3.0) {
            let m = PeriodicIsingModel::homogeneous(j).unwrap();
            let d = dualize(&m.weights(b, WeightKind::HighTemp).unwrap()).unwrap();
            let lo = m.weights(b, WeightKind::LowTemp).unwrap();
            prop_assert!((d.th[0][0] - lo.th[0][0]).abs() < 1e-12);
        }
    }
}
