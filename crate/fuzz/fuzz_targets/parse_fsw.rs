#![no_main]

use libfuzzer_sys::fuzz_target;
use signbank::fsw::{parse_sequence_with, serialize, ParseMode};
use signbank::tokenizer::{detokenize, tokenize};

fuzz_target!(|data: &str| {
    for mode in [ParseMode::Lenient, ParseMode::Strict] {
        if let Ok(seq) = parse_sequence_with(data, mode) {
            // accepted input must survive both round trips
            let text = serialize(&seq);
            assert_eq!(parse_sequence_with(&text, mode).unwrap(), seq);
            assert_eq!(detokenize(&tokenize(&seq)).unwrap(), seq);
        }
    }
});
