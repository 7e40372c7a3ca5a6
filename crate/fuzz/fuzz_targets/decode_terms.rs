#![no_main]

use libfuzzer_sys::fuzz_target;
use signbank::corpus::decode_terms;

fuzz_target!(|data: &str| {
    let _ = decode_terms(data);
});
