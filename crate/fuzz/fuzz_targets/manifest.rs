#![no_main]

use colorfulness::dataset::DatasetManifest;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = DatasetManifest::parse("fuzz", text, None) {
        let again = DatasetManifest::parse("fuzz", &m.to_csv(), None).expect("written manifest parses");
        assert_eq!(again.ids(), m.ids());
    }
});
