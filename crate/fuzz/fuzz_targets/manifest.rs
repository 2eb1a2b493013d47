#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = gprwi::dataset::parse_manifest(text, std::path::Path::new("fuzz")) {
        let back = gprwi::dataset::parse_manifest(&gprwi::dataset::format_manifest(&m), std::path::Path::new("fuzz"))
            .expect("formatted manifest parses");
        assert_eq!(back.entries.len(), m.entries.len());
    }
});
