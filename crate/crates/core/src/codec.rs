//! Stego codecs (in progress).
