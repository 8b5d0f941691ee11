#![no_main]

use colorfulness_service::{parse_log, replay};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if parse_log(text).is_ok() {
        if let Ok(session) = replay(text) {
            assert!(session.votes_recorded() <= session.total_pairs());
        }
    }
});
