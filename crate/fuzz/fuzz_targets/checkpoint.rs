#![no_main]

use colorfulness::colornet::{decode_checkpoint, encode_checkpoint};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(model) = decode_checkpoint(text) {
        let written = encode_checkpoint(&model);
        let again = decode_checkpoint(&written).expect("written checkpoint decodes");
        assert_eq!(encode_checkpoint(&again), written);
    }
});
