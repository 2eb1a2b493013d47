#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(r) = gprwi::signal::parse_radargram_csv(text, "fuzz") {
        let _ = gprwi::signal::time_zero_calibrate(&r, 0.2);
    }
});
