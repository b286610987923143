#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = skewheat::io::read_path_csv(text) {
            // a parsed path must survive the binary round trip
            let frame = skewheat::io::encode_path_frame(&p);
            let q = skewheat::io::decode_path_frame(&frame).unwrap();
            assert_eq!(p, q);
        }
    }
});
