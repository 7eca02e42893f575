//! JSON documents describing state and channel devices.
//!
//! Matrices are stored as `{"re": [[...]], "im": [[...]]}` row by row; `im`
//! may be omitted for real matrices. A state device looks like
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "kind": "state",
//!   "dims": [2, 2],
//!   "state": {"re": [[...]], "im": [[...]]},
//!   "alice": [[effect, effect], ...],
//!   "bob": [[effect, effect], ...]
//! }
//! ```
//!
//! A channel device has `"kind": "channel"`, `dims` of the input state
//! (Alice, channel input) and an extra `channel` entry holding either
//! `{"d_in", "d_out", "choi"}` or `{"kraus": [...]}` (each `d_out x d_in`).

use serde::{Deserialize, Serialize};

use crate::channels::{choi_from_kraus, ChannelChoi, ChannelDevice};
use crate::devices::{MeasurementSet, Povm, StateDevice};
use crate::linalg::{ComplexMatrix, DensityMatrix, C64};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub im: Vec<Vec<f64>>,
}

impl MatrixDoc {
    pub fn from_matrix(m: &ComplexMatrix) -> Self {
        let rows = |f: fn(&C64) -> f64| -> Vec<Vec<f64>> {
            (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| f(&m[(r, c)])).collect()).collect()
        };
        MatrixDoc { re: rows(|z| z.re), im: rows(|z| z.im) }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let rows = self.re.len();
        let cols = self.re.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || self.re.iter().any(|r| r.len() != cols) {
            return Err(Error::Document("matrix rows are empty or ragged".into()));
        }
        if !self.im.is_empty() && (self.im.len() != rows || self.im.iter().any(|r| r.len() != cols)) {
            return Err(Error::Document("imaginary part has a different shape".into()));
        }
        Ok(ComplexMatrix::from_fn(rows, cols, |r, c| C64::new(self.re[r][c], self.im.get(r).map_or(0.0, |row| row[c]))))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChannelDoc {
    Choi { d_in: usize, d_out: usize, choi: MatrixDoc },
    Kraus { kraus: Vec<MatrixDoc> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DeviceBody {
    State {
        dims: [usize; 2],
        state: MatrixDoc,
        alice: Vec<Vec<MatrixDoc>>,
        bob: Vec<Vec<MatrixDoc>>,
    },
    Channel {
        dims: [usize; 2],
        state: MatrixDoc,
        alice: Vec<Vec<MatrixDoc>>,
        bob: Vec<Vec<MatrixDoc>>,
        channel: ChannelDoc,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceDocument {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: DeviceBody,
}

/// A parsed device of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Device {
    State(StateDevice),
    Channel(ChannelDevice),
}

fn povms_doc(povms: &[Povm]) -> Vec<Vec<MatrixDoc>> {
    povms.iter().map(|p| p.effects().iter().map(MatrixDoc::from_matrix).collect()).collect()
}

fn parse_povms(docs: &[Vec<MatrixDoc>]) -> Result<Vec<Povm>> {
    docs.iter().map(|effects| Povm::new(effects.iter().map(MatrixDoc::to_matrix).collect::<Result<_>>()?)).collect()
}

fn parse_common(
    dims: [usize; 2],
    state: &MatrixDoc,
    alice: &[Vec<MatrixDoc>],
    bob: &[Vec<MatrixDoc>],
) -> Result<(MeasurementSet, DensityMatrix)> {
    let rho = DensityMatrix::new(state.to_matrix()?, dims.to_vec())?;
    let ms = MeasurementSet::new(parse_povms(alice)?, parse_povms(bob)?)?;
    Ok((ms, rho))
}

fn dims_of(rho: &DensityMatrix) -> [usize; 2] {
    [rho.dims()[0], rho.dims()[1]]
}

impl DeviceDocument {
    pub fn from_state_device(dev: &StateDevice) -> Self {
        let ms = dev.measurements();
        DeviceDocument {
            schema_version: SCHEMA_VERSION,
            body: DeviceBody::State {
                dims: dims_of(dev.state()),
                state: MatrixDoc::from_matrix(dev.state().matrix()),
                alice: povms_doc(ms.alice()),
                bob: povms_doc(ms.bob()),
            },
        }
    }

    pub fn from_channel_device(dev: &ChannelDevice) -> Self {
        let ms = dev.measurements();
        let c = dev.channel();
        DeviceDocument {
            schema_version: SCHEMA_VERSION,
            body: DeviceBody::Channel {
                dims: dims_of(dev.state()),
                state: MatrixDoc::from_matrix(dev.state().matrix()),
                alice: povms_doc(ms.alice()),
                bob: povms_doc(ms.bob()),
                channel: ChannelDoc::Choi { d_in: c.d_in(), d_out: c.d_out(), choi: MatrixDoc::from_matrix(c.choi()) },
            },
        }
    }

    pub fn from_device(dev: &Device) -> Self {
        match dev {
            Device::State(d) => Self::from_state_device(d),
            Device::Channel(d) => Self::from_channel_device(d),
        }
    }

    pub fn to_device(&self) -> Result<Device> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Document(format!("unsupported schema_version {}", self.schema_version)));
        }
        match &self.body {
            DeviceBody::State { dims, state, alice, bob } => {
                let (ms, rho) = parse_common(*dims, state, alice, bob)?;
                Ok(Device::State(StateDevice::new(ms, rho)?))
            }
            DeviceBody::Channel { dims, state, alice, bob, channel } => {
                let (ms, rho) = parse_common(*dims, state, alice, bob)?;
                let c = match channel {
                    ChannelDoc::Choi { d_in, d_out, choi } => ChannelChoi::new(choi.to_matrix()?, *d_in, *d_out)?,
                    ChannelDoc::Kraus { kraus } => {
                        choi_from_kraus(&kraus.iter().map(MatrixDoc::to_matrix).collect::<Result<Vec<_>>>()?)?
                    }
                };
                Ok(Device::Channel(ChannelDevice::new(ms, rho, c)?))
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("device documents always serialize")
    }
}
