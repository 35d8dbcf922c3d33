#![no_main]

use fraclat::kernel::{read_cache, write_cache};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(table) = read_cache(text) {
        // anything accepted must survive a round trip unchanged
        let mut buf = Vec::new();
        write_cache(&table, &mut buf).expect("write accepted table");
        let again = read_cache(std::str::from_utf8(&buf).unwrap()).expect("reread");
        assert_eq!(again.values().len(), table.values().len());
        for (a, b) in again.values().iter().zip(table.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
});
