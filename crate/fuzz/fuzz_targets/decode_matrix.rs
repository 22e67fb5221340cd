#![no_main]

use fracdg::assembly::read_dense_binary;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(m) = read_dense_binary(data) {
        assert_eq!(16 + 8 * m.rows() * m.cols(), data.len());
    }
});
