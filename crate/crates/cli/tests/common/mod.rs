//! Helpers for driving the `pixdiff` binary.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const RING: [(i32, i32); 8] = [
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
];

pub fn pixdiff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pixdiff"))
        .args(args)
        .env_remove("PIXDIFF_THREADS")
        .output()
        .expect("pixdiff runs")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

/// Writes a binary PGM by hand, independent of the library encoder.
pub fn write_pgm(
    dir: &Path,
    name: &str,
    w: usize,
    h: usize,
    f: impl Fn(usize, usize) -> u8,
) -> PathBuf {
    let mut bytes = format!("P5\n{w} {h}\n255\n").into_bytes();
    for i in 0..h {
        for j in 0..w {
            bytes.push(f(i, j));
        }
    }
    let path = dir.join(name);
    std::fs::write(&path, bytes).unwrap();
    path
}

/// Header and pixels of a binary PGM with the canonical header layout.
pub fn read_pgm(path: &Path) -> (usize, usize, Vec<u8>) {
    let bytes = std::fs::read(path).unwrap();
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        let start = pos;
        while !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        fields.push(String::from_utf8(bytes[start..pos].to_vec()).unwrap());
        pos += 1;
    }
    assert_eq!(fields[0], "P5");
    let (w, h) = (fields[1].parse().unwrap(), fields[2].parse().unwrap());
    (w, h, bytes[pos..].to_vec())
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Angular pairs `(x_{i+1}, x_i)` in the JSON layout `[du, dv, du', dv']`.
pub fn angular_json() -> String {
    let pairs: Vec<String> = (0..8)
        .map(|i| {
            let (a, b) = (RING[(i + 1) % 8], RING[i]);
            format!("[{},{},{},{}]", a.0, a.1, b.0, b.1)
        })
        .collect();
    format!("{{\"window\":3,\"pairs\":[{}]}}", pairs.join(","))
}

/// Drops the timing fields of a JSON report so runs can be compared.
pub fn strip_timings(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(m) => {
            m.retain(|k, _| !k.ends_with("_ns"));
            m.values_mut().for_each(strip_timings);
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(strip_timings),
        _ => {}
    }
}
