#![no_main]

use libfuzzer_sys::fuzz_target;
use signbank::rules::FilterConfig;

fuzz_target!(|data: &str| {
    let _ = FilterConfig::from_toml(data);
});
