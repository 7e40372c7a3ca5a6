#![no_main]

use libfuzzer_sys::fuzz_target;
use signbank::corpus::{parse_corpus, write_corpus, Provenance};
use signbank::fsw::ParseMode;

fuzz_target!(|data: &str| {
    let report = parse_corpus(data, Provenance::Original, ParseMode::Lenient);
    let again = parse_corpus(&write_corpus(&report.corpus), Provenance::Original, ParseMode::Lenient);
    assert!(again.rejects.is_empty());
    assert_eq!(again.corpus, report.corpus);
});
