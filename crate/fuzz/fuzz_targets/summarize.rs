#![no_main]

use libfuzzer_sys::fuzz_target;
use loopsum::chc::parse_program;
use loopsum::summarize::{summarize_program, Options};

fuzz_target!(|data: &[u8]| {
    if data.len() > 400 {
        return;
    }
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(p) = parse_program(s) {
            let opts = Options { grid: Some(2), sim_budget: 500, ..Options::default() };
            let _ = summarize_program(&p, &opts);
        }
    }
});
