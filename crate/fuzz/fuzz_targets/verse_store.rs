#![no_main]

use libfuzzer_sys::fuzz_target;
use signbank::rules::{parse_bible_reference, VerseStore};

fuzz_target!(|data: &str| {
    let _ = VerseStore::parse(data);
    for line in data.lines() {
        let _ = parse_bible_reference(line);
    }
});
