#![no_main]

use bergman_lab::cli::{parse_budget, MAX_BUDGET};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((name, count)) = parse_budget(text) {
        assert!(!name.is_empty());
        assert!(count <= MAX_BUDGET);
        assert_eq!(parse_budget(&format!("{name}={count}")), Ok((name, count)));
    }
});
