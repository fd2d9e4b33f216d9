#![no_main]

use libfuzzer_sys::fuzz_target;
use tentspace::suite::SuiteConfig;

fuzz_target!(|text: &str| {
    if let Ok(config) = SuiteConfig::parse(text) {
        // everything accepted has already been validated
        for entry in &config.checks {
            assert!(entry.spec.validate().is_ok());
        }
        assert!(!config.ladder.is_empty());
    }
});
