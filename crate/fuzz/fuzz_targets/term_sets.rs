#![no_main]

use libfuzzer_sys::fuzz_target;
use signbank::corpus::parse_entry_keys;
use signbank::eval::parse_term_sets;
use signbank::pipeline::parse_gold;
use signbank::rules::parse_outcome_log;

fuzz_target!(|data: &str| {
    let _ = parse_term_sets(data);
    let _ = parse_gold(data);
    let _ = parse_entry_keys(data);
    let _ = parse_outcome_log(data);
});
