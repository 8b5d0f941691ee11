#![no_main]

use colorfulness::dataset::FoldPlan;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(plan) = FoldPlan::parse(text) {
        assert_eq!(FoldPlan::parse(&plan.to_csv()).expect("written plan parses"), plan);
        for itr in 0..plan.fold_count {
            let _ = plan.roles(itr);
        }
    }
});
