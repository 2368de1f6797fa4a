use serde_json::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Table,
}

pub fn print(value: &Value, format: Format) {
    match format {
        Format::Json => println!("{}", String::from_utf8_lossy(&fairlens_core::canonical::value_to_canonical_bytes(value))),
        Format::Table => print!("{}", table(value)),
    }
}

/// Top-level fields one per line; nested values are shown as compact JSON.
fn table(value: &Value) -> String {
    let Value::Object(map) = value else {
        return format!("{value}\n");
    };
    let width = map.keys().map(String::len).max().unwrap_or(0);
    map.iter()
        .map(|(k, v)| {
            let shown = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            format!("{k:<width$}  {shown}\n")
        })
        .collect()
}
