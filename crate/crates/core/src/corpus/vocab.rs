use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
pub const BOS: u32 = 2;
pub const EOS: u32 = 3;

pub const SPECIALS: [&str; 4] = ["<pad>", "<unk>", "<bos>", "<eos>"];
pub const NUM_SPECIALS: usize = 4;

/// Token <-> id mapping with the four reserved specials at ids 0..=3.
#[derive(Clone, Debug)]
pub struct Vocab {
    id_of: HashMap<String, u32>,
    token_of: Vec<String>,
}

impl Vocab {
    /// Keep the `cap - 4` most frequent tokens; ties break lexicographically.
    /// Everything else maps to UNK at encode time.
    pub fn build(corpus: &[Vec<String>], cap: usize) -> Result<Vocab> {
        if cap < NUM_SPECIALS + 1 {
            return Err(Error::Config(format!(
                "vocab cap {cap} too small; need at least {}",
                NUM_SPECIALS + 1
            )));
        }
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for sent in corpus {
            for tok in sent {
                *freq.entry(tok.as_str()).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(&str, u64)> = freq.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(cap - NUM_SPECIALS);

        let mut token_of: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        token_of.extend(ranked.into_iter().map(|(t, _)| t.to_string()));
        Ok(Vocab::from_tokens(token_of))
    }

    fn from_tokens(token_of: Vec<String>) -> Vocab {
        let id_of = token_of
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocab { id_of, token_of }
    }

    pub fn size(&self) -> usize {
        self.token_of.len()
    }

    pub fn non_special_ids(&self) -> impl Iterator<Item = u32> + '_ {
        (NUM_SPECIALS as u32)..(self.size() as u32)
    }

    pub fn id(&self, token: &str) -> u32 {
        self.id_of.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.token_of[id as usize]
    }

    pub fn is_special(id: u32) -> bool {
        id < NUM_SPECIALS as u32
    }

    /// Frame tokens as BOS..EOS, truncating to `max_len` total ids while
    /// keeping the EOS.
    pub fn encode(&self, tokens: &[String], max_len: usize) -> Vec<u32> {
        let body = tokens.len().min(max_len.saturating_sub(2));
        let mut ids = Vec::with_capacity(body + 2);
        ids.push(BOS);
        ids.extend(tokens[..body].iter().map(|t| self.id(t)));
        ids.push(EOS);
        ids
    }

    /// Inverse of `encode` over in-vocab tokens: drops framing and PAD,
    /// renders UNK as its literal token.
    pub fn decode(&self, ids: &[u32]) -> Vec<String> {
        ids.iter()
            .filter(|&&id| id != PAD && id != BOS && id != EOS)
            .map(|&id| self.token(id).to_string())
            .collect()
    }

    /// One token per line; line number = id − 4 after the '#' header lines.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "# vocab v1: one token per line, id = line index + 4")?;
        writeln!(f, "# specials (implicit): <pad>=0 <unk>=1 <bos>=2 <eos>=3")?;
        for tok in &self.token_of[NUM_SPECIALS..] {
            writeln!(f, "{tok}")?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Vocab> {
        let f = std::fs::File::open(path)?;
        let mut token_of: Vec<String> = SPECIALS.iter().map(|s| s.to_string()).collect();
        for line in BufReader::new(f).lines() {
            let line = line?;
            if line.starts_with('#') || line.is_empty() {
                continue;
            }
            token_of.push(line);
        }
        Ok(Vocab::from_tokens(token_of))
    }
}
