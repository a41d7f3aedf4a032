//! Parameter snapshots: an 8-byte little-endian header length, a JSON
//! header, then the parameters as little-endian `f64`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecfield::ParamPoint;

use super::gan::ToyGanConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub spec: ToyGanConfig,
    pub seed: u64,
    pub steps: usize,
    /// Generator parameter count; the discriminator follows.
    pub split: usize,
    pub len: usize,
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::Snapshot(e.to_string())
}

pub fn write_snapshot<W: Write>(mut w: W, cfg: &ToyGanConfig, steps: usize, params: &ParamPoint) -> Result<()> {
    let header = SnapshotHeader { spec: cfg.clone(), seed: cfg.seed, steps, split: params.split(), len: params.len() };
    let json = serde_json::to_vec(&header).map_err(io_err)?;
    w.write_all(&(json.len() as u64).to_le_bytes()).map_err(io_err)?;
    w.write_all(&json).map_err(io_err)?;
    let mut body = Vec::with_capacity(8 * params.len());
    for v in params.values() {
        body.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&body).map_err(io_err)?;
    w.flush().map_err(io_err)
}

pub fn read_snapshot<R: Read>(mut r: R) -> Result<(SnapshotHeader, ParamPoint)> {
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(io_err)?;
    let len = usize::try_from(u64::from_le_bytes(len)).map_err(io_err)?;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json).map_err(io_err)?;
    let header: SnapshotHeader = serde_json::from_slice(&json).map_err(io_err)?;
    let mut body = Vec::new();
    r.read_to_end(&mut body).map_err(io_err)?;
    if body.len() != 8 * header.len {
        return Err(Error::Snapshot(format!("expected {} parameter bytes, found {}", 8 * header.len, body.len())));
    }
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk"))).collect();
    let params = ParamPoint::new(values, header.split)?;
    Ok((header, params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::{SolverConfig, SolverKind};
    use crate::toygan::gan::{GanLoss, Target};
    use crate::toygan::train::initial_params;

    #[test]
    fn round_trip_is_bit_exact() {
        let cfg = ToyGanConfig::new(
            Target::Gaussian1D { mean: 2.0, std: 0.5 },
            GanLoss::NonSaturating,
            SolverConfig::new(SolverKind::GnAdaptive),
        );
        let p = initial_params(&cfg);
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &cfg, 17, &p).unwrap();
        let (header, back) = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back, p);
        assert_eq!(header.steps, 17);
        assert_eq!(header.spec, cfg);

        buf.pop();
        assert!(read_snapshot(buf.as_slice()).is_err());
    }
}
