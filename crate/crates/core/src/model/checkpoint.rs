//! Plain-text checkpoints. Values are stored as the hex of their IEEE-754
//! bits, so a round trip is bit-exact.
//!
//! ```text
//! harmonrank-checkpoint v1
//! {"config": {...}, "schema": {...}}
//! embedding.0 300 8
//! 3fa1... 3f9b... ...
//! ```

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelConfig, ModelParams};
use crate::data::Schema;
use crate::error::{Error, Result};

const MAGIC: &str = "harmonrank-checkpoint v1";

/// A trained model with the schema it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub schema: Option<Schema>,
    pub params: ModelParams,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    schema: Option<Schema>,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

pub fn write_checkpoint<W: Write>(ckpt: &Checkpoint, mut out: W) -> Result<()> {
    ckpt.params.check_shapes(&ckpt.config)?;
    writeln!(out, "{MAGIC}")?;
    let header = Header {
        config: ckpt.config.clone(),
        schema: ckpt.schema.clone(),
    };
    writeln!(out, "{}", serde_json::to_string(&header)?)?;
    for (name, t) in ckpt.params.named_tensors() {
        let dims: Vec<String> = t.shape.iter().map(usize::to_string).collect();
        writeln!(out, "{name} {}", dims.join(" "))?;
        let vals: Vec<String> = t
            .data
            .iter()
            .map(|v| format!("{:016x}", v.to_bits()))
            .collect();
        writeln!(out, "{}", vals.join(" "))?;
    }
    Ok(())
}

pub fn read_checkpoint<R: Read>(input: R) -> Result<Checkpoint> {
    let mut lines = BufReader::new(input).lines();
    let mut next = |what: &str| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| bad(format!("truncated before {what}")))?
            .map_err(Error::from)
    };
    if next("magic")?.trim_end() != MAGIC {
        return Err(bad("not a harmonrank checkpoint"));
    }
    let header: Header = serde_json::from_str(&next("header")?)?;
    header.config.validate()?;
    let mut params = ModelParams::zeros(&header.config);
    for (name, t) in params.named_tensors_mut() {
        let line = next(&name)?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(name.as_str()) {
            return Err(bad(format!("expected tensor {name}, found {line:?}")));
        }
        let shape: Vec<usize> = parts
            .map(|p| {
                p.parse()
                    .map_err(|_| bad(format!("bad dimension {p:?} for {name}")))
            })
            .collect::<Result<_>>()?;
        if shape != t.shape {
            return Err(bad(format!(
                "{name}: expected shape {:?}, found {shape:?}",
                t.shape
            )));
        }
        let values = next(&name)?;
        let mut n = 0;
        for (slot, word) in t.data.iter_mut().zip(values.split_whitespace()) {
            let bits = u64::from_str_radix(word, 16)
                .map_err(|_| bad(format!("bad value {word:?} in {name}")))?;
            *slot = f64::from_bits(bits);
            n += 1;
        }
        if n != t.len() || values.split_whitespace().count() != t.len() {
            return Err(bad(format!("{name}: expected {} values", t.len())));
        }
    }
    if !params.all_finite() {
        return Err(bad("non-finite parameter"));
    }
    Ok(Checkpoint {
        config: header.config,
        schema: header.schema,
        params,
    })
}

pub fn save_checkpoint(ckpt: &Checkpoint, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    write_checkpoint(ckpt, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    read_checkpoint(fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_params;

    #[test]
    fn round_trip_is_bit_exact() {
        let cfg = ModelConfig {
            num_objectives: 3,
            buckets: 5,
            ..ModelConfig::default()
        };
        let mut params = init_params(&cfg, 9).unwrap();
        params.b1.data[0] = -0.1;
        params.w3.data[0] = f64::MIN_POSITIVE;
        let ckpt = Checkpoint {
            config: cfg,
            schema: None,
            params,
        };
        let mut buf = Vec::new();
        write_checkpoint(&ckpt, &mut buf).unwrap();
        let back = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back.config, ckpt.config);
        for ((_, a), (_, b)) in back
            .params
            .named_tensors()
            .iter()
            .zip(ckpt.params.named_tensors())
        {
            let ab: Vec<u64> = a.data.iter().map(|v| v.to_bits()).collect();
            let bb: Vec<u64> = b.data.iter().map(|v| v.to_bits()).collect();
            assert_eq!(ab, bb);
        }
    }

    #[test]
    fn corrupt_input_is_rejected() {
        assert!(read_checkpoint("nope\n".as_bytes()).is_err());
        let cfg = ModelConfig::default();
        let ckpt = Checkpoint {
            config: cfg.clone(),
            schema: None,
            params: init_params(&cfg, 1).unwrap(),
        };
        let mut buf = Vec::new();
        write_checkpoint(&ckpt, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let truncated: String = text.lines().take(5).collect::<Vec<_>>().join("\n");
        assert!(read_checkpoint(truncated.as_bytes()).is_err());
    }
}
