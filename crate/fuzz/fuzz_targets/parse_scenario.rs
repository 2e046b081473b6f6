//! Scenario TOML parsing and validation must reject bad input without panicking.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = cellcoop::cli::parse_scenario_str(text, "fuzz.toml");
    }
});
