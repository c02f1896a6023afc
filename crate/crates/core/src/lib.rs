//! Entity Context Graphs: building free-text-relation triples from
//! entity-centric documents, learning entity embeddings through a CNN
//! relation encoder, joint training with a labelled KG, and evaluation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod config;
pub mod corpus;
pub mod encoder;
pub mod evaluator;
pub mod gradcheck;
pub mod numerics;
pub mod trainer;
pub mod triples;
