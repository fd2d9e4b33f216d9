#![no_main]

use libfuzzer_sys::fuzz_target;
use tentspace::suite::SuiteReport;

fuzz_target!(|text: &str| {
    let Ok(report) = SuiteReport::from_json(text) else {
        return;
    };
    let json = report.to_json();
    let back = SuiteReport::from_json(&json).expect("re-parse of emitted report");
    assert_eq!(back.to_json(), json);
    let _ = report.to_csv();
});
