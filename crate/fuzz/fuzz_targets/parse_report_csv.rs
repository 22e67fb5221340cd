#![no_main]

use fracdg::verify::ConvergenceReport;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(report) = ConvergenceReport::parse_csv(text) {
        let csv = report.to_csv();
        let again = ConvergenceReport::parse_csv(&csv).expect("written report parses");
        assert_eq!(again.to_csv(), csv);
        let _ = report.companion(true);
    }
});
