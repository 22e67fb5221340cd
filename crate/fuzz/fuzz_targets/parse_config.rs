#![no_main]

use fracdg_cli::config::{parse_list, parse_pairs, ConfigFile, KEYS};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ConfigFile::parse(text) {
        for key in KEYS {
            if let Some(v) = cfg.raw(key) {
                let _ = cfg.get::<f64>(key);
                let _ = parse_list::<usize>(v);
                let _ = parse_pairs(v);
            }
        }
    }
});
