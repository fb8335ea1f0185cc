use std::io::Write;
use std::path::Path;

/// Shortest decimal that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

/// Comma-separated text with a header row and LF line endings. Fields never
/// contain commas, so no quoting is done.
#[derive(Debug, Clone)]
pub struct Csv {
    text: String,
    width: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self {
            text,
            width: header.len(),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        debug_assert_eq!(fields.len(), self.width);
        debug_assert!(fields.iter().all(|f| !f.contains(',')));
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

/// Pretty JSON. `serde_json::Value` maps are sorted, so key order is stable.
pub fn json(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("value serializes") + "\n"
}

pub fn write_to(path: Option<&Path>, text: &str) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}
