#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // parsing either yields a validated config or a diagnostic; never a panic
        let _ = skewheat::config::parse_config(text);
    }
});
