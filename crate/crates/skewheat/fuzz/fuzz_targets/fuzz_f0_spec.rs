#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(f0) = skewheat::config::parse_f0_spec(text) {
            // accepted smooth parts must evaluate finitely on the clamped range
            for i in -10..=10 {
                let y = i as f64;
                assert!(f0.eval(y).is_finite());
                assert!(f0.deriv(y).is_finite());
            }
        }
    }
});
