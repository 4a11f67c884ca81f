#![no_main]

use libfuzzer_sys::fuzz_target;
use loopsum::chc::{parse_clauses, parse_program};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        let _ = parse_clauses(s);
        if let Ok(p) = parse_program(s) {
            // Printing and parsing again must give the same program.
            let again = parse_program(&p.to_string()).expect("printed program parses");
            assert_eq!(again.clauses.len(), p.clauses.len());
        }
    }
});
