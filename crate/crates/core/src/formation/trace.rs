use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::pipeline::ErpxModel;
use crate::error::{ErpxError, Result};
use crate::regress::RegressorKind;

/// One formation run in the flat trace table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub dataset: String,
    pub base: RegressorKind,
    pub run: usize,
    #[serde(rename = "D")]
    pub n_features: usize,
    pub d: usize,
    pub s: usize,
    pub e: usize,
    pub h: usize,
    pub erpx_mse: f64,
    pub base_mse: f64,
}

impl TraceRow {
    pub fn from_model<T: crate::scalar::Real>(
        dataset: &str,
        run: usize,
        model: &ErpxModel<T>,
        erpx_mse: T,
        base_mse: T,
    ) -> Self {
        let t = &model.trace;
        TraceRow {
            dataset: dataset.to_string(),
            base: model.spec.kind,
            run,
            n_features: t.n_features,
            d: t.d,
            s: t.s,
            e: t.e,
            h: t.h,
            erpx_mse: erpx_mse.as_f64(),
            base_mse: base_mse.as_f64(),
        }
    }
}

pub fn write_trace<W: Write>(writer: W, rows: &[TraceRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| ErpxError::io("<trace>", e))?;
    Ok(())
}

pub fn read_trace<R: Read>(reader: R) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize().map(|row| row.map_err(ErpxError::from)).collect()
}

pub fn write_trace_csv(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| ErpxError::io(path, e))?;
    write_trace(f, rows)
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>> {
    let f = std::fs::File::open(path).map_err(|e| ErpxError::io(path, e))?;
    read_trace(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let rows = vec![TraceRow {
            dataset: "octane".into(),
            base: RegressorKind::Lasso,
            run: 1,
            n_features: 226,
            d: 226,
            s: 190,
            e: 8,
            h: 3,
            erpx_mse: 0.051,
            base_mse: 0.084,
        }];
        let mut buf = Vec::new();
        write_trace(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), "dataset,base,run,D,d,s,e,h,erpx_mse,base_mse");
        assert_eq!(read_trace(buf.as_slice()).unwrap(), rows);
    }
}
