//! Deterministic serialization helpers.
//!
//! Every numeric value is printed with 17 significant digits
//! (`{:.16e}`), which is enough to round-trip any finite `f64` exactly, and
//! JSON objects are emitted in a fixed key order, so identical inputs produce
//! byte-identical output files.

/// Full-precision scientific notation; parsing the result recovers the exact
/// same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Incremental writer for a flat-ish JSON object with insertion-ordered keys.
pub struct JsonObject {
    buf: String,
    first: bool,
}

impl JsonObject {
    pub fn new() -> Self {
        JsonObject { buf: String::from("{"), first: true }
    }

    fn key(&mut self, name: &str) {
        if !self.first {
            self.buf.push(',');
        }
        self.first = false;
        self.buf.push('"');
        self.buf.push_str(name);
        self.buf.push_str("\":");
    }

    pub fn f64(mut self, name: &str, x: f64) -> Self {
        self.key(name);
        if x.is_finite() {
            self.buf.push_str(&fmt_f64(x));
        } else {
            self.buf.push_str("null");
        }
        self
    }

    pub fn usize(mut self, name: &str, x: usize) -> Self {
        self.key(name);
        self.buf.push_str(&x.to_string());
        self
    }

    pub fn bool(mut self, name: &str, x: bool) -> Self {
        self.key(name);
        self.buf.push_str(if x { "true" } else { "false" });
        self
    }

    pub fn str(mut self, name: &str, x: &str) -> Self {
        self.key(name);
        self.buf.push_str(&json_escape(x));
        self
    }

    /// Pre-serialized JSON value (nested object, array, or `null`).
    pub fn raw(mut self, name: &str, x: &str) -> Self {
        self.key(name);
        self.buf.push_str(x);
        self
    }

    pub fn finish(mut self) -> String {
        self.buf.push('}');
        self.buf
    }
}

impl Default for JsonObject {
    fn default() -> Self {
        Self::new()
    }
}

pub fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// JSON array of full-precision numbers.
pub fn json_f64_array(xs: &[f64]) -> String {
    let mut s = String::from("[");
    for (i, &x) in xs.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        if x.is_finite() {
            s.push_str(&fmt_f64(x));
        } else {
            s.push_str("null");
        }
    }
    s.push(']');
    s
}

/// CSV with a header row and `\n` line endings. Cells must already be
/// comma-free (numbers, identifiers, or `;`-joined flag lists).
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = String::new();
    s.push_str(&header.join(","));
    s.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_exactly() {
        for &x in &[
            0.0,
            1.0,
            -1.0 / 3.0,
            std::f64::consts::PI,
            5.783185962946785,
            1.4057434687549563e-1,
            f64::MIN_POSITIVE,
            1e300,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn json_object_is_ordered_and_parseable() {
        let s = JsonObject::new()
            .f64("cp", 5.783185962946785)
            .usize("iterations", 12)
            .bool("converged", true)
            .str("domain", "disk")
            .finish();
        assert!(s.starts_with("{\"cp\":5.783"));
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["iterations"], 12);
        assert_eq!(v["converged"], true);
        assert_eq!(v["domain"], "disk");
        assert!((v["cp"].as_f64().unwrap() - 5.783185962946785).abs() == 0.0);
    }

    #[test]
    fn non_finite_becomes_null_in_json() {
        let s = JsonObject::new().f64("x", f64::NAN).finish();
        assert_eq!(s, "{\"x\":null}");
        serde_json::from_str::<serde_json::Value>(&s).unwrap();
    }

    #[test]
    fn csv_has_header_and_rows() {
        let rows = vec![
            vec!["1".to_string(), "2".to_string()],
            vec!["3".to_string(), "4".to_string()],
        ];
        assert_eq!(csv_table(&["a", "b"], &rows), "a,b\n1,2\n3,4\n");
    }
}
