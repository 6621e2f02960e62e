//! Minimal stderr logging controlled by the PEBBLE_LOG environment variable.

use std::sync::OnceLock;

#[derive(PartialEq, PartialOrd, Clone, Copy)]
pub enum Level {
    Quiet = 0,
    Info = 1,
    Debug = 2,
}

pub fn level() -> Level {
    static LEVEL: OnceLock<Level> = OnceLock::new();
    *LEVEL.get_or_init(|| match std::env::var("PEBBLE_LOG").as_deref() {
        Ok("debug") => Level::Debug,
        Ok("info") => Level::Info,
        _ => Level::Quiet,
    })
}

pub fn info(msg: impl AsRef<str>) {
    if level() >= Level::Info {
        eprintln!("[pebble] {}", msg.as_ref());
    }
}
