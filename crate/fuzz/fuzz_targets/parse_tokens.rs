#![no_main]

use libfuzzer_sys::fuzz_target;
use signbank::tokenizer::{build_vocabulary, detokenize, parse_tokens};

fuzz_target!(|data: &str| {
    if let Ok(tokens) = parse_tokens(data) {
        let vocab = build_vocabulary();
        let ids = vocab.encode_tokens(&tokens).unwrap();
        assert_eq!(vocab.decode_ids(&ids).unwrap(), tokens);
        let _ = detokenize(&tokens);
    }
});
