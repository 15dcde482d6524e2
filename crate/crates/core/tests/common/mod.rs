#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::Arc;

use accnote::gateway::{Gateway, HashingEmbedder, MockBackend, MockRule, MockScript, ResponseCache};
use accnote::model::{load_dataset, DataEntry};

pub const MISBAR: &str = "https://www.misbar.com/en/factcheck/...";

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn entries() -> Vec<DataEntry> {
    load_dataset(&fixture("example2.jsonl")).unwrap().entries
}

pub fn script() -> MockScript {
    MockScript::load(&fixture("mock_script.json")).unwrap()
}

/// The fixture script with `rules` tried first.
pub fn script_with(rules: Vec<MockRule>) -> MockScript {
    let mut s = script();
    s.rules.splice(0..0, rules);
    s
}

pub fn gateway(mock: &Arc<MockBackend>, cache: Option<&std::path::Path>) -> Gateway {
    let g = Gateway::new(mock.clone(), Arc::new(HashingEmbedder::default()));
    match cache {
        Some(p) => g.with_cache(ResponseCache::open(p).unwrap()),
        None => g,
    }
}
