#![no_main]

use libfuzzer_sys::fuzz_target;
use loopsum::pathexpr::{eliminate_multipath, has_alt_under_star, RegExpr, StarOrder};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(e) = RegExpr::parse(s) {
            assert_eq!(RegExpr::parse(&e.to_string()).as_ref(), Ok(&e));
            if e.size() <= 64 {
                assert!(!has_alt_under_star(&eliminate_multipath(&e, StarOrder::File)));
            }
        }
    }
});
