//! Cross-unit weight matrices and per-unit link matrices.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::ingest::TradeFlowTable;
use crate::states::StateCode;

/// Row-stochastic `N x N` weights with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightScheme {
    pub id: String,
    pub labels: Vec<StateCode>,
    pub w: DMatrix<f64>,
}

impl WeightScheme {
    /// Row-normalizes a non-negative link-strength matrix. The diagonal is
    /// ignored.
    pub fn from_strengths(id: &str, labels: Vec<StateCode>, strength: &DMatrix<f64>) -> Result<Self> {
        let n = labels.len();
        if strength.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} strengths for {n} labels",
                strength.nrows(),
                strength.ncols()
            )));
        }
        let mut w = DMatrix::zeros(n, n);
        for i in 0..n {
            let total: f64 = (0..n).filter(|&j| j != i).map(|j| strength[(i, j)]).sum();
            if !(total > 0.0) || !total.is_finite() {
                return Err(Error::IsolatedUnit(labels[i].to_string()));
            }
            for j in 0..n {
                if j != i {
                    w[(i, j)] = strength[(i, j)] / total;
                }
            }
        }
        Ok(Self {
            id: id.to_string(),
            labels,
            w,
        })
    }

    /// Wraps an already normalized matrix after checking the invariants.
    pub fn from_matrix(id: &str, labels: Vec<StateCode>, w: DMatrix<f64>) -> Result<Self> {
        let n = labels.len();
        if w.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!("{}x{} weights for {n} labels", w.nrows(), w.ncols())));
        }
        for i in 0..n {
            if w[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument(format!("nonzero diagonal for {}", labels[i])));
            }
            if w.row(i).iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("negative weight in row {}", labels[i])));
            }
            let s = w.row(i).sum();
            if s == 0.0 {
                return Err(Error::IsolatedUnit(labels[i].to_string()));
            }
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidArgument(format!("row {} sums to {s}", labels[i])));
            }
        }
        Ok(Self {
            id: id.to_string(),
            labels,
            w,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> RowDVector<f64> {
        self.w.row(i).into_owned()
    }

    /// Foreign averages `W y` for a single cross-section.
    pub fn star(&self, y: &DVector<f64>) -> DVector<f64> {
        &self.w * y
    }

    /// Foreign averages for a `T x N` panel, returned as `T x N`.
    pub fn star_panel(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        y * self.w.transpose()
    }

    /// Units are disconnected into the given groups if no weight crosses them.
    pub fn is_connected(&self) -> bool {
        let n = self.len();
        if n == 0 {
            return true;
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !seen[j] && (self.w[(i, j)] > 0.0 || self.w[(j, i)] > 0.0) {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

fn label_index(labels: &[StateCode]) -> Result<HashMap<StateCode, usize>> {
    let mut idx = HashMap::new();
    for (i, l) in labels.iter().enumerate() {
        if idx.insert(*l, i).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate label {l}")));
        }
    }
    Ok(idx)
}

/// Trade weights: the weight of `j` for `i` is bilateral trade between the
/// pair (flows in both directions) over the total trade of `i` with all other
/// units. Self-flows are ignored.
pub fn trade_weights(table: &TradeFlowTable, labels: &[StateCode]) -> Result<WeightScheme> {
    let idx = label_index(labels)?;
    let n = labels.len();
    let mut bilateral = DMatrix::zeros(n, n);
    for e in &table.entries {
        let o = *idx
            .get(&e.origin)
            .ok_or_else(|| Error::UnknownLabel(e.origin.to_string()))?;
        let d = *idx
            .get(&e.destination)
            .ok_or_else(|| Error::UnknownLabel(e.destination.to_string()))?;
        if e.self_flow || o == d {
            continue;
        }
        bilateral[(o, d)] += e.value;
        bilateral[(d, o)] += e.value;
    }
    WeightScheme::from_strengths("trade", labels.to_vec(), &bilateral)
}

/// Adjacency weights: `1/deg(i)` on each neighbor. A unit without borders
/// takes weight one on its `fallback` partner when one is configured.
pub fn adjacency_weights(
    borders: &[(StateCode, StateCode)],
    labels: &[StateCode],
    fallback: &BTreeMap<StateCode, StateCode>,
) -> Result<WeightScheme> {
    let idx = label_index(labels)?;
    let n = labels.len();
    let mut adj = DMatrix::zeros(n, n);
    for (a, b) in borders {
        // borders may mention units outside a reduced universe
        if let (Some(&i), Some(&j)) = (idx.get(a), idx.get(b)) {
            if i != j {
                adj[(i, j)] = 1.0;
                adj[(j, i)] = 1.0;
            }
        }
    }
    for i in 0..n {
        if adj.row(i).sum() == 0.0 {
            if let Some(partner) = fallback.get(&labels[i]) {
                let j = *idx
                    .get(partner)
                    .ok_or_else(|| Error::UnknownLabel(partner.to_string()))?;
                adj[(i, j)] = 1.0;
            }
        }
    }
    WeightScheme::from_strengths("adjacency", labels.to_vec(), &adj)
}

/// `2 x N` selector-plus-weights matrix for one unit.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkMatrix {
    pub unit: usize,
    pub weights: RowDVector<f64>,
}

impl LinkMatrix {
    pub fn as_matrix(&self) -> DMatrix<f64> {
        let n = self.weights.len();
        let mut m = DMatrix::zeros(2, n);
        m[(0, self.unit)] = 1.0;
        m.row_mut(1).copy_from(&self.weights);
        m
    }

    /// `(y_i, sum_j w_ij y_j)`.
    pub fn apply(&self, y: &DVector<f64>) -> (f64, f64) {
        (y[self.unit], self.weights.dot(&y.transpose()))
    }
}

pub fn link_matrix(scheme: &WeightScheme, i: usize) -> Result<LinkMatrix> {
    if i >= scheme.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: scheme.len(),
        });
    }
    Ok(LinkMatrix {
        unit: i,
        weights: scheme.row(i),
    })
}

/// Dense text with a header row of labels and the row label in column one.
pub fn write_weights<W: Write>(scheme: &WeightScheme, writer: W) -> Result<()> {
    write_labeled_matrix(&scheme.labels, &scheme.w, writer)
}

pub fn read_weights<R: Read>(id: &str, reader: R) -> Result<WeightScheme> {
    let (labels, w) = read_labeled_matrix(reader)?;
    WeightScheme::from_matrix(id, labels, w)
}

pub(crate) fn write_labeled_matrix<W: Write>(labels: &[StateCode], m: &DMatrix<f64>, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let mut header = vec!["unit".to_string()];
    header.extend(labels.iter().map(|l| l.to_string()));
    out.write_record(&header)?;
    for (i, l) in labels.iter().enumerate() {
        let mut rec = vec![l.to_string()];
        rec.extend(m.row(i).iter().map(|v| v.to_string()));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub(crate) fn read_labeled_matrix<R: Read>(reader: R) -> Result<(Vec<StateCode>, DMatrix<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::EmptyFile("weight matrix".into()));
    }
    let labels = header
        .iter()
        .skip(1)
        .map(str::parse)
        .collect::<Result<Vec<StateCode>>>()?;
    let n = labels.len();
    let mut m = DMatrix::zeros(n, n);
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if i >= n || rec.get(0).map(str::parse::<StateCode>).transpose()? != Some(labels[i]) {
            return Err(Error::DimensionMismatch("row labels do not match header".into()));
        }
        for j in 0..n {
            let cell = rec.get(j + 1).unwrap_or("");
            m[(i, j)] = cell
                .parse()
                .map_err(|_| Error::InvalidArgument(format!("bad matrix entry `{cell}`")))?;
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::DimensionMismatch(format!("{rows} rows for {n} labels")));
    }
    Ok((labels, m))
}

/// Directed edge list `from,to,weight` of nonzero weights.
pub fn write_edge_list<W: Write>(scheme: &WeightScheme, writer: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["from", "to", "weight"])?;
    for i in 0..scheme.len() {
        for j in 0..scheme.len() {
            let v = scheme.w[(i, j)];
            if v > 0.0 {
                out.write_record([scheme.labels[i].to_string(), scheme.labels[j].to_string(), v.to_string()])?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{code, contiguous_borders, default_island_fallback, default_universe, RegionMap};

    fn abc() -> Vec<StateCode> {
        vec![code("AA"), code("BB"), code("CC")]
    }

    #[test]
    fn three_state_trade_row() {
        let t = TradeFlowTable::from_flows([
            (code("AA"), code("BB"), 2.0),
            (code("BB"), code("AA"), 1.0),
            (code("AA"), code("CC"), 1.0),
            (code("BB"), code("CC"), 1.0),
        ])
        .unwrap();
        let s = trade_weights(&t, &abc()).unwrap();
        assert_eq!(s.w.row(0).iter().copied().collect::<Vec<_>>(), vec![0.0, 0.75, 0.25]);
    }

    #[test]
    fn two_units_force_unit_weights() {
        let labels = vec![code("AA"), code("BB")];
        let t = TradeFlowTable::from_flows([(code("AA"), code("BB"), 3.5)]).unwrap();
        let s = trade_weights(&t, &labels).unwrap();
        assert_eq!(s.w, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    }

    #[test]
    fn isolated_and_unknown_units() {
        let t = TradeFlowTable::from_flows([(code("AA"), code("BB"), 1.0), (code("CC"), code("CC"), 9.0)]).unwrap();
        assert!(matches!(trade_weights(&t, &abc()), Err(Error::IsolatedUnit(s)) if s == "CC"));
        let t = TradeFlowTable::from_flows([(code("AA"), code("ZZ"), 1.0)]).unwrap();
        assert!(matches!(trade_weights(&t, &abc()), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn chain_adjacency() {
        let borders = vec![(code("AA"), code("BB")), (code("BB"), code("CC"))];
        let s = adjacency_weights(&borders, &abc(), &BTreeMap::new()).unwrap();
        assert_eq!(s.w.row(1).iter().copied().collect::<Vec<_>>(), vec![0.5, 0.0, 0.5]);
        let lonely = vec![(code("AA"), code("BB"))];
        assert!(matches!(
            adjacency_weights(&lonely, &abc(), &BTreeMap::new()),
            Err(Error::IsolatedUnit(_))
        ));
    }

    #[test]
    fn island_fallback_puts_unit_weight_on_partner() {
        let labels = default_universe();
        let s = adjacency_weights(&contiguous_borders(), &labels, &default_island_fallback()).unwrap();
        let ak = labels.iter().position(|l| *l == code("AK")).unwrap();
        let wa = labels.iter().position(|l| *l == code("WA")).unwrap();
        assert_eq!(s.w[(ak, wa)], 1.0);
        assert_eq!(s.w.row(ak).sum(), 1.0);
        for i in 0..labels.len() {
            assert!((s.w.row(i).sum() - 1.0).abs() < 1e-12);
            assert_eq!(s.w[(i, i)], 0.0);
        }
        assert!(adjacency_weights(&contiguous_borders(), &labels, &BTreeMap::new()).is_err());
    }

    #[test]
    fn contiguous_48_rows_sum_to_one() {
        let map = RegionMap::noaa();
        let labels: Vec<_> = default_universe()
            .into_iter()
            .filter(|s| map.region_of(s).is_some())
            .collect();
        let s = adjacency_weights(&contiguous_borders(), &labels, &BTreeMap::new()).unwrap();
        assert_eq!(s.len(), 48);
        for i in 0..48 {
            assert!((s.w.row(i).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn link_matrix_selects_and_averages() {
        let w = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.5, 0.5, 0.0, 0.5, 0.5, 0.5, 0.0]);
        let s = WeightScheme::from_matrix("u", abc(), w).unwrap();
        let l = link_matrix(&s, 0).unwrap();
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(l.apply(&y), (1.0, 2.5));
        assert_eq!(l.as_matrix() * &y, DVector::from_vec(vec![1.0, 2.5]));
        let e0 = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        assert_eq!(l.apply(&e0), (1.0, 0.0));
        assert!(matches!(link_matrix(&s, 3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn dense_text_roundtrip() {
        let t = TradeFlowTable::from_flows([
            (code("AA"), code("BB"), 2.0),
            (code("BB"), code("CC"), 7.0),
            (code("AA"), code("CC"), 1.0 / 3.0),
        ])
        .unwrap();
        let s = trade_weights(&t, &abc()).unwrap();
        let mut buf = Vec::new();
        write_weights(&s, &mut buf).unwrap();
        let back = read_weights("trade", buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }
}
