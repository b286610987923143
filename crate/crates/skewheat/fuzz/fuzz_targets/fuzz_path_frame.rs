#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // decoding must never panic or over-allocate on hostile frames; a
    // successful decode must re-encode to the same bytes
    if let Ok(p) = skewheat::io::decode_path_frame(data) {
        let back = skewheat::io::encode_path_frame(&p);
        assert_eq!(back, data);
    }
});
