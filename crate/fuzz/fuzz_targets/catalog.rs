#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cat) = gprwi::eval::MaterialCatalog::parse(text) {
        for c in cat.classes() {
            let hit = gprwi::eval::classify_material(c.eps_r, &cat).expect("non-empty catalog");
            assert_eq!(hit.eps_r, c.eps_r);
        }
    }
});
