#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(table) = prandtl_lab::csvio::parse_table(text) {
            // downstream consumers of untrusted tables must also hold up
            let _ = prandtl_lab::runner::nash_check(&table);
            if let (Some(x), Some(v)) = (table.column("x"), table.column("val")) {
                let series = prandtl_lab::decay::Series {
                    x: x.to_vec(),
                    v: v.to_vec(),
                };
                let _ = prandtl_lab::decay::fit_exponent(&series, (1.0, 1e4), "fuzz", 0.0, 0.0);
            }
        }
    }
});
