//! Populations, projections and their JSON form.

use serde::{Deserialize, Serialize};

use super::neuron::NeuronParams;
use crate::error::{Error, Result};

/// Dense row-major matrix; rows index the source neuron, columns the target.
///
/// Serialized as a list of rows.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl WeightMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    /// `value` on the diagonal, zero elsewhere.
    pub fn one_to_one(n: usize, value: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, value);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::ShapeMismatch("ragged weight matrix".into()));
        }
        Ok(Self {
            rows: n_rows,
            cols: n_cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.cols.max(1)).take(self.rows).map(<[f64]>::to_vec).collect()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|w| w.is_finite())
    }

    pub fn clamp(&mut self, lo: f64, hi: f64) {
        for w in &mut self.data {
            *w = w.clamp(lo, hi);
        }
    }

    /// Drop column `c` (used when a target neuron is removed).
    pub fn remove_column(&mut self, c: usize) {
        let mut data = Vec::with_capacity(self.rows * (self.cols - 1));
        for r in 0..self.rows {
            for (j, &w) in self.row(r).iter().enumerate() {
                if j != c {
                    data.push(w);
                }
            }
        }
        self.cols -= 1;
        self.data = data;
    }

    /// Drop row `r` (used when a source neuron is removed).
    pub fn remove_row(&mut self, r: usize) {
        self.data.drain(r * self.cols..(r + 1) * self.cols);
        self.rows -= 1;
    }

    pub fn push_column(&mut self, column: &[f64]) {
        assert_eq!(column.len(), self.rows);
        let mut data = Vec::with_capacity(self.rows * (self.cols + 1));
        for r in 0..self.rows {
            data.extend_from_slice(self.row(r));
            data.push(column[r]);
        }
        self.cols += 1;
        self.data = data;
    }

    pub fn push_row(&mut self, row: &[f64]) {
        assert_eq!(row.len(), self.cols);
        self.data.extend_from_slice(row);
        self.rows += 1;
    }
}

impl Serialize for WeightMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for WeightMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        WeightMatrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

/// Which learning rule, if any, owns a projection's weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PlasticityTag {
    #[default]
    Fixed,
    Stdp,
    RewardStdp,
    Hebbian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub name: String,
    pub size: usize,
    pub params: NeuronParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub source: String,
    pub target: String,
    /// `source.size x target.size`, row-major.
    pub weights: WeightMatrix,
    /// Transmission delay (ms). Rounded up to whole steps, minimum one step.
    pub delay: f64,
    #[serde(default)]
    pub rule: PlasticityTag,
}

#[derive(Deserialize)]
struct RawNetwork {
    populations: Vec<Population>,
    projections: Vec<Projection>,
}

/// Populations of LIF neurons joined by weighted, delayed projections.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawNetwork")]
pub struct Network {
    populations: Vec<Population>,
    projections: Vec<Projection>,
}

impl TryFrom<RawNetwork> for Network {
    type Error = Error;
    fn try_from(raw: RawNetwork) -> Result<Self> {
        let mut net = Network::new();
        for p in raw.populations {
            net.add_population(&p.name, p.size, p.params)?;
        }
        for p in raw.projections {
            net.connect(&p.source, &p.target, p.weights, p.delay, p.rule)?;
        }
        Ok(net)
    }
}

impl Network {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_population(&mut self, name: &str, size: usize, params: NeuronParams) -> Result<()> {
        params.validate()?;
        if self.population_index(name).is_some() {
            return Err(Error::Duplicate {
                kind: "population",
                name: name.into(),
            });
        }
        self.populations.push(Population {
            name: name.into(),
            size,
            params,
        });
        Ok(())
    }

    pub fn connect(
        &mut self,
        source: &str,
        target: &str,
        weights: WeightMatrix,
        delay: f64,
        rule: PlasticityTag,
    ) -> Result<usize> {
        let s = self
            .population(source)
            .ok_or_else(|| Error::UnknownPopulation(source.into()))?;
        let t = self
            .population(target)
            .ok_or_else(|| Error::UnknownPopulation(target.into()))?;
        if weights.shape() != (s.size, t.size) {
            return Err(Error::ShapeMismatch(format!(
                "{source}->{target}: weights {:?}, expected {:?}",
                weights.shape(),
                (s.size, t.size)
            )));
        }
        if !weights.is_finite() {
            return Err(Error::NonFinite(format!("{source}->{target} weights")));
        }
        if !(delay >= 0.0) || !delay.is_finite() {
            return Err(Error::param("delay", "must be finite and >= 0"));
        }
        self.projections.push(Projection {
            source: source.into(),
            target: target.into(),
            weights,
            delay,
            rule,
        });
        Ok(self.projections.len() - 1)
    }

    pub fn populations(&self) -> &[Population] {
        &self.populations
    }

    pub fn projections(&self) -> &[Projection] {
        &self.projections
    }

    pub fn population(&self, name: &str) -> Option<&Population> {
        self.populations.iter().find(|p| p.name == name)
    }

    pub fn population_index(&self, name: &str) -> Option<usize> {
        self.populations.iter().position(|p| p.name == name)
    }

    pub fn projection(&self, source: &str, target: &str) -> Option<&Projection> {
        self.projections
            .iter()
            .find(|p| p.source == source && p.target == target)
    }

    /// Mutable weights of the first `source -> target` projection.
    pub fn weights_mut(&mut self, source: &str, target: &str) -> Option<&mut WeightMatrix> {
        self.projections
            .iter_mut()
            .find(|p| p.source == source && p.target == target)
            .map(|p| &mut p.weights)
    }

    pub fn weights(&self, source: &str, target: &str) -> Option<&WeightMatrix> {
        self.projection(source, target).map(|p| &p.weights)
    }

    pub fn neuron_count(&self) -> usize {
        self.populations.iter().map(|p| p.size).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.populations.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pop() -> Network {
        let mut n = Network::new();
        n.add_population("a", 2, NeuronParams::default()).unwrap();
        n.add_population("b", 3, NeuronParams::default()).unwrap();
        n
    }

    #[test]
    fn connect_validates_endpoints_and_shapes() {
        let mut n = two_pop();
        assert!(n
            .connect("a", "c", WeightMatrix::zeros(2, 3), 1.0, PlasticityTag::Fixed)
            .is_err());
        assert!(n
            .connect("a", "b", WeightMatrix::zeros(3, 2), 1.0, PlasticityTag::Fixed)
            .is_err());
        assert!(n
            .connect("a", "b", WeightMatrix::zeros(2, 3), -1.0, PlasticityTag::Fixed)
            .is_err());
        let mut w = WeightMatrix::zeros(2, 3);
        w.set(0, 0, f64::INFINITY);
        assert!(n.connect("a", "b", w, 1.0, PlasticityTag::Fixed).is_err());
        assert!(n
            .connect("a", "b", WeightMatrix::filled(2, 3, 0.5), 1.0, PlasticityTag::Stdp)
            .is_ok());
        assert!(n.add_population("a", 1, NeuronParams::default()).is_err());
    }

    #[test]
    fn json_is_row_major_and_validated() {
        let mut n = two_pop();
        let w = WeightMatrix::from_fn(2, 3, |r, c| (r * 3 + c) as f64);
        n.connect("a", "b", w, 2.0, PlasticityTag::RewardStdp).unwrap();
        let json = serde_json::to_value(&n).unwrap();
        assert_eq!(
            json["projections"][0]["weights"],
            serde_json::json!([[0.0, 1.0, 2.0], [3.0, 4.0, 5.0]])
        );
        assert_eq!(json["projections"][0]["rule"], "reward_stdp");
        let back = Network::from_json(&n.to_json().unwrap()).unwrap();
        assert_eq!(back, n);

        let bad = serde_json::json!({
            "populations": [],
            "projections": [{"source": "x", "target": "y", "weights": [], "delay": 1.0}]
        });
        assert!(serde_json::from_value::<Network>(bad).is_err());
    }

    #[test]
    fn matrix_edits() {
        let mut m = WeightMatrix::from_fn(2, 3, |r, c| (r * 3 + c) as f64);
        m.remove_column(1);
        assert_eq!(m.to_rows(), vec![vec![0.0, 2.0], vec![3.0, 5.0]]);
        m.push_column(&[7.0, 8.0]);
        assert_eq!(m.row(1), &[3.0, 5.0, 8.0]);
        m.remove_row(0);
        assert_eq!(m.shape(), (1, 3));
        m.push_row(&[1.0, 1.0, 1.0]);
        assert_eq!(m.column(2), vec![8.0, 1.0]);
    }
}
