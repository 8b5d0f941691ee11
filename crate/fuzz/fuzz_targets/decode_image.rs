#![no_main]

use colorfulness::color::decode_image;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(img) = decode_image(data) {
        assert_eq!(img.data().len(), img.width() * img.height() * 3);
        let _ = colorfulness::metrics::cf_hasler(&img);
    }
});
