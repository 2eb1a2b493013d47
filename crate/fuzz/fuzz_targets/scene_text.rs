#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = gprwi::scene::parse_scene(text) {
        // written scenes must read back
        let again = gprwi::scene::parse_scene(&gprwi::scene::write_scene(&cfg)).expect("written scene parses");
        assert_eq!(again.layers.len(), cfg.layers.len());
        assert_eq!(again.grains.len(), cfg.grains.len());
    }
});
