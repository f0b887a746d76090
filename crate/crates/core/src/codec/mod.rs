//! Block codes, state compression and the per-scheme codebooks.

mod bch;
mod codebook;
mod huffman;

pub use bch::{build_shortened_code, parent_ladder, LinearBlockCode, ParentCode, PARENT_LENGTH};
pub use codebook::{build_codebook, log2_exact, Codebook, Scheme, SchemeCodec, SideInfo};
pub use huffman::{huffman_build, huffman_build_support, HuffmanCode};
