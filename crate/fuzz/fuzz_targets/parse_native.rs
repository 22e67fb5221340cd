#![no_main]

use fracdg::mesh::{parse_native, write_native};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(mesh) = parse_native(text) {
        // Anything accepted must survive a write/parse cycle unchanged.
        let again = parse_native(&write_native(&mesh)).expect("written mesh parses");
        assert_eq!(again.elements(), mesh.elements());
        assert_eq!(again.edges().len(), mesh.edges().len());
    }
});
