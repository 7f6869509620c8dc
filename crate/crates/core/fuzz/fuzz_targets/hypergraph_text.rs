#![no_main]
use libfuzzer_sys::fuzz_target;
use nibble_match::Hypergraph;

fuzz_target!(|data: &[u8]| {
    let _ = Hypergraph::parse_text_bytes(data);
});
