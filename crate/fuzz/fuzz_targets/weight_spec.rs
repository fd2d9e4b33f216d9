#![no_main]

use libfuzzer_sys::fuzz_target;
use tentspace::verify::WeightSource;
use tentspace::WeightSpec;

fuzz_target!(|text: &str| {
    if let Ok(spec) = text.parse::<WeightSpec>() {
        let again: WeightSpec = spec.to_string().parse().unwrap();
        assert_eq!(again, spec);
    }
    if let Ok(source) = text.parse::<WeightSource>() {
        assert_eq!(source.to_string().parse::<WeightSource>().unwrap(), source);
    }
});
