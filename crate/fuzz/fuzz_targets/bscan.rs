#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(scan) = gprwi::em::decode_bscan(data) {
        let bytes = gprwi::em::encode_bscan(&scan).expect("decoded scan encodes");
        assert!(gprwi::em::decode_bscan(&bytes).is_ok());
    }
});
