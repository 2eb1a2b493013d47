#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = gprwi_nn::decode_checkpoint::<f32>(data);
    let _ = gprwi_nn::decode_checkpoint::<f64>(data);
});
