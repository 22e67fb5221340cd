#![no_main]

use fracdg::verify::ConditionTable;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = ConditionTable::parse_csv(text) {
        let _ = table.trend_violations();
        let _ = ConditionTable::parse_csv(&table.to_csv());
    }
});
