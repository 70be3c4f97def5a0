#![no_main]

use libfuzzer_sys::fuzz_target;
use nnv_cli::problem::{parse_problem, SetDesc};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let Ok(file) = parse_problem(src) else { return };
    for (field, desc) in [("input", &file.input), ("output", &file.output)] {
        if let Ok(set) = desc.to_set(field) {
            let _ = SetDesc::from_set(&set);
        }
    }
});
