#![no_main]

use colorfulness::scaling::PwcMatrix;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = PwcMatrix::parse(text) {
        assert_eq!(PwcMatrix::parse(&m.to_text()).expect("written matrix parses"), m);
    }
});
