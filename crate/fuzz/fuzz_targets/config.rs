#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = gprwi_cli::config::parse_config(text) {
        let _ = cfg.model(0).validate();
        let _ = cfg.acquisition().window_offsets();
    }
});
