#![no_main]

use libfuzzer_sys::fuzz_target;
use nnv_cli::report::RunRecord;

// Decoded records re-encode to an equal record.
fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(rec) = RunRecord::from_json(src) {
        let back = RunRecord::from_json(&rec.to_json()).expect("encoded records decode");
        assert_eq!(back.to_json(), rec.to_json());
    }
});
