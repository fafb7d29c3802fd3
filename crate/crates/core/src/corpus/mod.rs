//! Tokenization, vocabulary construction, dataset splits, and batching.

mod batch;
mod split;
mod tokenizer;
mod vocab;

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

pub use batch::{make_batches, Batch};
pub use split::{split_dataset, DatasetSplit};
pub use tokenizer::tokenize;
pub use vocab::{Vocab, BOS, EOS, NUM_SPECIALS, PAD, SPECIALS, UNK};

use crate::error::Result;

/// Binary text class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Carrier,
    Stego,
}

impl Label {
    pub fn as_str(&self) -> &'static str {
        match self {
            Label::Carrier => "carrier",
            Label::Stego => "stego",
        }
    }
}

/// A text as a framed id sequence: BOS, body, EOS, no PAD inside. The
/// scored length n counts every position after BOS through EOS.
#[derive(Clone, Debug)]
pub struct TokenSequence {
    pub ids: Vec<u32>,
    pub label: Option<Label>,
}

impl TokenSequence {
    pub fn new(ids: Vec<u32>, label: Option<Label>) -> TokenSequence {
        debug_assert!(ids.len() >= 2, "sequence must at least be BOS EOS");
        debug_assert_eq!(ids.first(), Some(&BOS));
        debug_assert_eq!(ids.last(), Some(&EOS));
        debug_assert!(ids.iter().all(|&id| id != PAD));
        TokenSequence { ids, label }
    }

    /// Number of scored positions (length − 1).
    pub fn scored_len(&self) -> usize {
        self.ids.len() - 1
    }

    /// Number of body words (framing excluded).
    pub fn word_count(&self) -> usize {
        self.ids.len() - 2
    }

    pub fn with_label(mut self, label: Label) -> TokenSequence {
        self.label = Some(label);
        self
    }
}

/// Read a one-sentence-per-line corpus file; blank lines are skipped.
pub fn read_corpus(path: &Path) -> Result<Vec<String>> {
    let f = std::fs::File::open(path)?;
    let mut lines = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push(line);
        }
    }
    Ok(lines)
}

pub fn write_corpus(path: &Path, lines: &[String]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    for line in lines {
        writeln!(f, "{line}")?;
    }
    Ok(())
}

/// Tokenize and encode a batch of raw sentences.
pub fn encode_corpus(
    lines: &[String],
    vocab: &Vocab,
    max_len: usize,
    label: Option<Label>,
) -> Vec<TokenSequence> {
    lines
        .iter()
        .map(|line| TokenSequence::new(vocab.encode(&tokenize(line), max_len), label))
        .collect()
}
