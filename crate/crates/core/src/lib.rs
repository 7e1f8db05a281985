//! Computational tools for limit groups: free-group words, graphs of groups
//! and their modular automorphisms, discriminating homomorphisms for
//! constructible limit groups, shortening of homomorphisms, matrix
//! embeddings, and measured laminations.

pub mod clg;
pub mod gad;
pub mod homs;
pub mod laminations;
pub mod linalg;
pub mod representations;
pub mod shortening;
pub mod word;

pub use homs::{Hom, HomError, Presentation};
pub use word::{Alphabet, Letter, Word, WordError};
