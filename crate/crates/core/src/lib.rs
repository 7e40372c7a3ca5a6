//! Formal SignWriting (FSW) parsing and tokenization, rule-based and
//! model-assisted cleaning of SignBank-style term lists, IoU evaluation, and
//! export of tagged parallel corpora for machine translation.

pub mod corpus;
pub mod eval;
pub mod fsw;
pub mod llm;
pub mod pipeline;
pub mod rules;
pub mod tokenizer;
