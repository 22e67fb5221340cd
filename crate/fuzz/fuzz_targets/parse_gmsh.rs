#![no_main]

use fracdg::mesh::{parse_gmsh, parse_mesh};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(mesh) = parse_gmsh(text) {
        assert!(mesh.elements().iter().all(|e| e.area > 0.0));
    }
    let _ = parse_mesh(text);
});
