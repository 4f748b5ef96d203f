//! Deterministic text output: fixed numeric formatting (12 significant
//! digits, scientific notation), LF line endings, and a config echo header
//! so every file reproduces its run.

use serde_json::Value;

/// Formats a float with 12 significant digits in scientific notation.
/// Negative zero is normalized so equal values always print identically.
pub fn fmt_f(x: f64) -> String {
    if x == 0.0 {
        return "0.00000000000e0".to_string();
    }
    format!("{x:.11e}")
}

/// Builder for one output document.
pub struct Document {
    buf: String,
}

impl Document {
    /// Starts a document with the tool banner and the resolved config echo.
    pub fn new(subcommand: &str, config_echo: &Value) -> Self {
        let mut buf = String::new();
        buf.push_str(&format!(
            "# gyrsim {} {}\n",
            env!("CARGO_PKG_VERSION"),
            subcommand
        ));
        buf.push_str(&format!("# config = {config_echo}\n"));
        Self { buf }
    }

    pub fn comment(&mut self, text: &str) {
        self.buf.push_str("# ");
        self.buf.push_str(text);
        self.buf.push('\n');
    }

    pub fn columns(&mut self, names: &[&str]) {
        self.buf.push_str(&names.join(","));
        self.buf.push('\n');
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    /// `key = value` line for single-record outputs.
    pub fn kv(&mut self, key: &str, value: &str) {
        self.buf.push_str(key);
        self.buf.push_str(" = ");
        self.buf.push_str(value);
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Status column content: `ok` or the error text with the field separator
/// stripped.
pub fn status_field<E: std::fmt::Display>(result: Result<(), &E>) -> String {
    match result {
        Ok(()) => "ok".to_string(),
        Err(e) => e.to_string().replace(',', ";"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_are_stable() {
        assert_eq!(fmt_f(16.4), "1.64000000000e1");
        assert_eq!(fmt_f(0.0), "0.00000000000e0");
        assert_eq!(fmt_f(-0.0), "0.00000000000e0");
        assert_eq!(fmt_f(-1.5e-9), "-1.50000000000e-9");
        assert_eq!(fmt_f(f64::NAN), "NaN");
    }

    #[test]
    fn document_layout() {
        let mut doc = Document::new("map", &serde_json::json!({"a": 1}));
        doc.columns(&["x", "y"]);
        doc.row(&[fmt_f(1.0), fmt_f(2.0)]);
        let text = doc.finish();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# gyrsim "));
        assert_eq!(lines.next().unwrap(), "# config = {\"a\":1}");
        assert_eq!(lines.next().unwrap(), "x,y");
    }
}
