#![no_main]

use libfuzzer_sys::fuzz_target;
use tentspace::suite::parse_ladder;

fuzz_target!(|text: &str| {
    if let Ok(ladder) = parse_ladder(text) {
        let shown: Vec<String> = ladder
            .iter()
            .map(|r| format!("{}x{}", r.cells, r.levels))
            .collect();
        assert_eq!(parse_ladder(&shown.join(",")).unwrap(), ladder);
    }
});
