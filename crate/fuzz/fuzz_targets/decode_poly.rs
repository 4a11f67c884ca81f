#![no_main]

use libfuzzer_sys::fuzz_target;
use loopsum::poly::Polynomial;
use loopsum::summarize::SymInterval;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(p) = Polynomial::parse(s) {
            assert_eq!(Polynomial::parse(&p.to_string()).as_ref(), Ok(&p));
            assert_eq!(Polynomial::from_json(&p.to_json()).as_ref(), Some(&p));
        }
        if let Ok(v) = serde_json::from_str::<serde_json::Value>(s) {
            let _ = Polynomial::from_json(&v);
            if let Some(iv) = SymInterval::from_json(&v) {
                assert_eq!(SymInterval::from_json(&iv.to_json()), Some(iv));
            }
        }
    }
});
