//! JSON encoding of states and channels.
//!
//! Complex numbers are `[re, im]` pairs, matrices are lists of rows, and a
//! layout is a list of `[label, dim]` pairs.

use serde::{Deserialize, Serialize};

use crate::channels::QuantumChannel;
use crate::error::{Error, Result};

use super::layout::SystemLayout;
use super::linalg::{CMatrix, C64};
use super::state::DensityOperator;

pub type JsonMatrix = Vec<Vec<[f64; 2]>>;
pub type JsonLayout = Vec<(String, usize)>;

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StateJson {
    pub layout: JsonLayout,
    pub matrix: JsonMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChannelJson {
    #[serde(rename = "in")]
    pub input: JsonLayout,
    pub out: JsonLayout,
    pub kraus: Vec<JsonMatrix>,
}

pub fn layout_to_json(layout: &SystemLayout) -> JsonLayout {
    layout.factors().iter().map(|(l, d)| (l.to_string(), *d)).collect()
}

pub fn layout_from_json(layout: &JsonLayout) -> Result<SystemLayout> {
    SystemLayout::new(layout.iter().cloned())
}

pub fn matrix_to_json(m: &CMatrix) -> JsonMatrix {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Parses a rectangular matrix; `what` names the field for diagnostics.
pub fn matrix_from_json(rows: &JsonMatrix, what: &str) -> Result<CMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != ncols) {
        return Err(Error::Parse(format!(
            "{what}: row {i} has {} entries, expected {ncols}",
            r.len()
        )));
    }
    for (i, r) in rows.iter().enumerate() {
        for (j, z) in r.iter().enumerate() {
            if !z[0].is_finite() || !z[1].is_finite() {
                return Err(Error::Parse(format!("{what}[{i}][{j}] is not finite")));
            }
        }
    }
    Ok(CMatrix::from_fn(nrows, ncols, |i, j| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

impl StateJson {
    pub fn from_state(state: &DensityOperator) -> Self {
        StateJson {
            layout: layout_to_json(state.layout()),
            matrix: matrix_to_json(state.matrix()),
        }
    }

    pub fn to_state(&self) -> Result<DensityOperator> {
        let layout = layout_from_json(&self.layout).map_err(|e| Error::Parse(format!("layout: {e}")))?;
        let m = matrix_from_json(&self.matrix, "matrix")?;
        DensityOperator::new(layout, m).map_err(|e| Error::Parse(format!("matrix: {e}")))
    }
}

impl ChannelJson {
    pub fn from_channel(channel: &QuantumChannel) -> Self {
        ChannelJson {
            input: layout_to_json(channel.input()),
            out: layout_to_json(channel.output()),
            kraus: channel.kraus().iter().map(matrix_to_json).collect(),
        }
    }

    pub fn to_channel(&self) -> Result<QuantumChannel> {
        let input = layout_from_json(&self.input).map_err(|e| Error::Parse(format!("in: {e}")))?;
        let output = layout_from_json(&self.out).map_err(|e| Error::Parse(format!("out: {e}")))?;
        let kraus = self
            .kraus
            .iter()
            .enumerate()
            .map(|(k, m)| matrix_from_json(m, &format!("kraus[{k}]")))
            .collect::<Result<Vec<_>>>()?;
        QuantumChannel::new(input, output, kraus).map_err(|e| Error::Parse(format!("kraus: {e}")))
    }
}

fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))
}

/// Parses a state object `{"layout": ..., "matrix": ...}`.
///
/// ```
/// let text = r#"{"layout": [["A", 2]], "matrix": [[[0.5, 0], [0, 0]], [[0, 0], [0.5, 0]]]}"#;
/// let rho = qrs_core::tensor::json::state_from_str(text).unwrap();
/// assert_eq!(rho.dim(), 2);
/// ```
pub fn state_from_str(text: &str) -> Result<DensityOperator> {
    parse::<StateJson>(text)?.to_state()
}

/// Parses a channel object `{"in": ..., "out": ..., "kraus": [...]}`.
pub fn channel_from_str(text: &str) -> Result<QuantumChannel> {
    parse::<ChannelJson>(text)?.to_channel()
}

pub fn state_to_string(state: &DensityOperator) -> String {
    serde_json::to_string_pretty(&StateJson::from_state(state)).expect("serializable")
}

pub fn channel_to_string(channel: &QuantumChannel) -> String {
    serde_json::to_string_pretty(&ChannelJson::from_channel(channel)).expect("serializable")
}
