#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = crisismine_core::embedding::vecfile::decode(data) {
        let again = crisismine_core::embedding::vecfile::decode(&crisismine_core::embedding::vecfile::encode(&m)).unwrap();
        assert_eq!(again.ids(), m.ids());
    }
});
