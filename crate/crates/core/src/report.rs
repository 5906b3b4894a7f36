//! Named metric results together with the parameters that produced them.

use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricEntry {
    pub value: f64,
    pub params: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub entries: BTreeMap<String, MetricEntry>,
}

impl MetricsReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert<K, V>(&mut self, name: &str, value: f64, params: impl IntoIterator<Item = (K, V)>)
    where
        K: Into<String>,
        V: ToString,
    {
        let params = params.into_iter().map(|(k, v)| (k.into(), v.to_string())).collect();
        self.entries.insert(name.to_string(), MetricEntry { value, params });
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.get(name).map(|e| e.value)
    }

    fn format_value(v: f64) -> String {
        if v.is_infinite() && v > 0.0 {
            "inf".to_string()
        } else {
            format!("{v:.6}")
        }
    }

    /// Aligned human-readable table.
    pub fn to_table(&self) -> String {
        let width = self.entries.keys().map(String::len).max().unwrap_or(6).max(6);
        let mut out = format!("{:<width$}  {:>14}  params\n", "metric", "value");
        for (name, e) in &self.entries {
            let params: Vec<String> = e.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(
                out,
                "{name:<width$}  {:>14}  {}",
                Self::format_value(e.value),
                params.join(" ")
            );
        }
        out
    }

    /// One `key=value` record per line: `name=<metric> value=<v> <param>=<p> ...`.
    pub fn to_records(&self) -> String {
        let mut out = String::new();
        for (name, e) in &self.entries {
            let _ = write!(out, "name={name} value={}", Self::format_value(e.value));
            for (k, v) in &e.params {
                let _ = write!(out, " {k}={v}");
            }
            out.push('\n');
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_and_table() {
        let mut r = MetricsReport::new();
        r.insert("psnr", f64::INFINITY, [("peak", "1")]);
        r.insert("tc", 0.5, [("row", 3), ("col", 4)]);
        assert_eq!(r.get("tc"), Some(0.5));
        let rec = r.to_records();
        assert!(rec.contains("name=psnr value=inf peak=1"));
        assert!(rec.contains("name=tc value=0.500000 col=4 row=3"));
        assert!(r.to_table().lines().count() == 3);
    }
}
