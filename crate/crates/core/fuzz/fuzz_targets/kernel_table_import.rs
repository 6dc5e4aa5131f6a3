#![no_main]

use bergman_lab::kernel::{export_table, import_table};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(model) = import_table(text) {
        let again = import_table(&export_table(&model)).expect("exported table must import");
        assert_eq!(again.log_coeffs.len(), model.log_coeffs.len());
        for (a, b) in again.log_coeffs.iter().zip(&model.log_coeffs) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
});
