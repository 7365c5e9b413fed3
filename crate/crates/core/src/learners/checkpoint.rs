//! Model checkpoints.
//!
//! Layout: one line of JSON header terminated by `\n`, followed by
//! `param_count` little-endian IEEE-754 `f64` values.
//!
//! ```text
//! {"format":"fairfront-model","version":1,"architecture":{"kind":"softmax_regression"},
//!  "dim":4,"classes":2,"seed":7,"param_count":10}\n
//! <80 bytes of parameters>
//! ```

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::model::{Architecture, Model};
use crate::error::{Error, Result};

pub const FORMAT: &str = "fairfront-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub architecture: Architecture,
    pub dim: usize,
    pub classes: usize,
    pub seed: u64,
    pub param_count: usize,
}

pub fn save_checkpoint<W: Write>(mut writer: W, model: &Model, seed: u64) -> Result<()> {
    let header = CheckpointHeader {
        format: FORMAT.into(),
        version: VERSION,
        architecture: model.architecture(),
        dim: model.dim(),
        classes: model.classes(),
        seed,
        param_count: model.params().len(),
    };
    serde_json::to_writer(&mut writer, &header).map_err(std::io::Error::from)?;
    writer.write_all(b"\n")?;
    for p in model.params() {
        writer.write_all(&p.to_le_bytes())?;
    }
    writer.flush()?;
    Ok(())
}

pub fn load_checkpoint<R: BufRead>(mut reader: R) -> Result<(CheckpointHeader, Model)> {
    let mut line = String::new();
    reader.read_line(&mut line)?;
    let header: CheckpointHeader = serde_json::from_str(line.trim_end()).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if header.format != FORMAT {
        return Err(Error::param("format", format!("not a model checkpoint: {:?}", header.format)));
    }
    if header.version != VERSION {
        return Err(Error::Schema {
            found: header.version,
            expected: VERSION,
        });
    }
    let mut params = Vec::with_capacity(header.param_count);
    let mut buf = [0u8; 8];
    for _ in 0..header.param_count {
        reader.read_exact(&mut buf)?;
        params.push(f64::from_le_bytes(buf));
    }
    let model = Model::from_params(header.architecture, header.dim, header.classes, params)?;
    Ok((header, model))
}
