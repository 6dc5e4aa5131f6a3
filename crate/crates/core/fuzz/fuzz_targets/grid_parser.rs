#![no_main]

use bergman_lab::cli::{parse_grid, MAX_GRID_LEN};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok((name, values)) = parse_grid(text) {
        assert!(!name.is_empty());
        assert!(!values.is_empty() && values.len() <= MAX_GRID_LEN);
        assert!(values.iter().all(|v| (0.0..1.0).contains(v)));
    }
});
