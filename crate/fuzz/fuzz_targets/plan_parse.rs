#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // must never panic; a successful parse must echo and hash cleanly
        if let Ok(plan) = prandtl_lab::plan::Plan::parse(text) {
            let _ = plan.run_id();
            let _ = plan.canonical();
        }
    }
});
