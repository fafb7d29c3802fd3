use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::lstm::{HeadKind, ModelConfig, ModelParams};
use crate::math::Rng;

/// A trained model snapshot: architecture, parameter values, the master
/// seed that produced it, and a training stage tag.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub params: ModelParams,
    pub seed: u64,
    pub stage: String,
}

const MAGIC: &[u8] = b"LSSA1\n";

/// File layout: magic bytes `LSSA1\n`, one structured-text header line
/// (version, dims, seed, stage, named parameter shapes in fixed order),
/// then the raw little-endian f64 parameter values concatenated in header
/// order.
pub fn save_checkpoint(ck: &Checkpoint, path: &Path) -> Result<()> {
    let blocks = ck.params.blocks();
    let shapes: Vec<String> = blocks
        .iter()
        .map(|(name, b)| format!("{}:{}x{}", name, b.value.rows(), b.value.cols()))
        .collect();
    let header = format!(
        "v=1 vocab={} embed={} hidden={} layers={} keep={:?} head={} seed={} stage={} blocks={}\n",
        ck.config.vocab_size,
        ck.config.embed_dim,
        ck.config.hidden_dim,
        ck.config.layers,
        ck.config.dropout_keep,
        ck.params.head.kind(),
        ck.seed,
        ck.stage,
        shapes.join(",")
    );
    let f = std::fs::File::create(path)?;
    let mut w = BufWriter::new(f);
    w.write_all(MAGIC)?;
    w.write_all(header.as_bytes())?;
    for (_, block) in &blocks {
        for v in block.value.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn header_field<'a>(fields: &'a [(&str, &str)], key: &str) -> Result<&'a str> {
    fields
        .iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| Error::Checkpoint(format!("missing header field '{key}'")))
}

fn parse_num<T: std::str::FromStr>(s: &str, key: &str) -> Result<T> {
    s.parse()
        .map_err(|_| Error::Checkpoint(format!("bad value for '{key}': {s}")))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let f = std::fs::File::open(path)?;
    let mut r = BufReader::new(f);

    let mut magic = [0u8; 6];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Checkpoint("file too short for magic".into()))?;
    if magic != MAGIC {
        return Err(Error::Checkpoint("bad magic bytes".into()));
    }
    let mut header = Vec::new();
    loop {
        let mut byte = [0u8; 1];
        r.read_exact(&mut byte)
            .map_err(|_| Error::Checkpoint("unterminated header".into()))?;
        if byte[0] == b'\n' {
            break;
        }
        header.push(byte[0]);
        if header.len() > 1 << 20 {
            return Err(Error::Checkpoint("header implausibly long".into()));
        }
    }
    let header = String::from_utf8(header)
        .map_err(|_| Error::Checkpoint("header is not UTF-8".into()))?;
    let fields: Vec<(&str, &str)> = header
        .split_whitespace()
        .filter_map(|kv| kv.split_once('='))
        .collect();

    let version: u32 = parse_num(header_field(&fields, "v")?, "v")?;
    if version != 1 {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let config = ModelConfig {
        vocab_size: parse_num(header_field(&fields, "vocab")?, "vocab")?,
        embed_dim: parse_num(header_field(&fields, "embed")?, "embed")?,
        hidden_dim: parse_num(header_field(&fields, "hidden")?, "hidden")?,
        layers: parse_num(header_field(&fields, "layers")?, "layers")?,
        dropout_keep: parse_num(header_field(&fields, "keep")?, "keep")?,
    };
    config.validate().map_err(|e| {
        Error::Checkpoint(format!("invalid config in checkpoint header: {e}"))
    })?;
    let head = match header_field(&fields, "head")? {
        "lm" => HeadKind::Lm,
        "binary" => HeadKind::Binary,
        other => return Err(Error::Checkpoint(format!("unknown head kind '{other}'"))),
    };
    let seed: u64 = parse_num(header_field(&fields, "seed")?, "seed")?;
    let stage = header_field(&fields, "stage")?.to_string();

    // Zero-init to the declared architecture, then overwrite values.
    let mut params = ModelParams::init(&config, head, &mut Rng::new(0));
    let declared = header_field(&fields, "blocks")?.to_string();
    let expected: Vec<String> = params
        .blocks()
        .iter()
        .map(|(name, b)| format!("{}:{}x{}", name, b.value.rows(), b.value.cols()))
        .collect();
    if declared != expected.join(",") {
        return Err(Error::Checkpoint(format!(
            "block layout mismatch: file has '{declared}'"
        )));
    }
    for (name, block) in params.blocks_mut() {
        for v in block.value.data_mut() {
            let mut buf = [0u8; 8];
            r.read_exact(&mut buf).map_err(|_| {
                Error::Checkpoint(format!("truncated data while reading block '{name}'"))
            })?;
            *v = f64::from_le_bytes(buf);
            if !v.is_finite() {
                return Err(Error::Checkpoint(format!(
                    "non-finite value in block '{name}'"
                )));
            }
        }
        block.grad.fill(0.0);
        block.adam_m.fill(0.0);
        block.adam_v.fill(0.0);
        block.step = 0;
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Checkpoint("trailing bytes after parameters".into()));
    }

    Ok(Checkpoint {
        config,
        params,
        seed,
        stage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_everything() {
        let mut config = ModelConfig::new(15).with_dims(4, 6);
        config.dropout_keep = 0.5;
        let params = ModelParams::init(&config, HeadKind::Lm, &mut Rng::new(3));
        let ck = Checkpoint {
            config,
            params,
            seed: 1234,
            stage: "lm".into(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ck");
        save_checkpoint(&ck, &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(loaded.config, ck.config);
        assert_eq!(loaded.seed, 1234);
        assert_eq!(loaded.stage, "lm");
        for ((_, a), (_, b)) in ck.params.blocks().iter().zip(loaded.params.blocks()) {
            assert_eq!(a.value.data(), b.value.data());
        }
    }

    #[test]
    fn binary_head_round_trips() {
        let config = ModelConfig::new(15).with_dims(4, 6);
        let params = ModelParams::init(&config, HeadKind::Binary, &mut Rng::new(3));
        let ck = Checkpoint {
            config,
            params,
            seed: 7,
            stage: "classifier".into(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("clf.ck");
        save_checkpoint(&ck, &path).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert!(matches!(loaded.params.head, crate::lstm::Head::Binary { .. }));
    }

    #[test]
    fn rejects_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.ck");
        std::fs::write(&path, b"NOPE!\nv=1").unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::Checkpoint(_))
        ));
    }

    #[test]
    fn rejects_truncated_data() {
        let config = ModelConfig::new(15).with_dims(4, 6);
        let params = ModelParams::init(&config, HeadKind::Lm, &mut Rng::new(3));
        let ck = Checkpoint {
            config,
            params,
            seed: 1,
            stage: "lm".into(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ck");
        save_checkpoint(&ck, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
        assert!(matches!(
            load_checkpoint(&path),
            Err(Error::Checkpoint(_))
        ));
    }
}
