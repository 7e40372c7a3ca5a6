#![no_main]

use libfuzzer_sys::fuzz_target;
use signbank::llm::{parse_clean_response, parse_clean_response_strict, parse_expand_response};

fuzz_target!(|data: &str| {
    let _ = parse_clean_response(data);
    let _ = parse_clean_response_strict(data);
    let _ = parse_expand_response(data, "de");
    let _ = parse_expand_response(data, "en");
});
