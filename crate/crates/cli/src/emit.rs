//! Output formats shared by the verbs.

use clap::ValueEnum;
use serde_json::Value;
use tensera_core::Sequent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Json,
    Dot,
    Text,
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn seq_text(v: &Value) -> String {
    match Sequent::from_json(v) {
        Ok(s) => s.to_string(),
        Err(_) => v.to_string(),
    }
}

/// Graphviz rendering of a proof in the shared JSON shape, conclusion at the
/// top and premises below it.
pub fn proof_dot(proof: &Value) -> String {
    fn go(v: &Value, id: &mut usize, out: &mut String) -> usize {
        let me = *id;
        *id += 1;
        let rule = v.get("rule").and_then(Value::as_str).unwrap_or("?");
        let seq = seq_text(v.get("seq").unwrap_or(&Value::Null));
        out.push_str(&format!(
            "  p{me} [shape=box, label=\"{}\\n{}\"];\n",
            escape(&seq),
            escape(rule)
        ));
        for p in v.get("prems").and_then(Value::as_array).into_iter().flatten() {
            let child = go(p, id, out);
            out.push_str(&format!("  p{me} -> p{child};\n"));
        }
        me
    }
    let mut out = String::from("digraph proof {\n");
    go(proof, &mut 0, &mut out);
    out.push_str("}\n");
    out
}

/// One line per inference, indented by depth.
pub fn proof_text(proof: &Value) -> String {
    fn go(v: &Value, depth: usize, out: &mut String) {
        let rule = v.get("rule").and_then(Value::as_str).unwrap_or("?");
        let params = v.get("params").map(Value::to_string).unwrap_or_default();
        let seq = seq_text(v.get("seq").unwrap_or(&Value::Null));
        out.push_str(&format!(
            "{:indent$}{seq}    [{rule} {params}]\n",
            "",
            indent = 2 * depth
        ));
        for p in v.get("prems").and_then(Value::as_array).into_iter().flatten() {
            go(p, depth + 1, out);
        }
    }
    let mut out = String::new();
    go(proof, 0, &mut out);
    out
}

pub fn proof(v: &Value, how: Emit) -> String {
    match how {
        Emit::Json => format!("{}\n", serde_json::to_string_pretty(v).expect("json")),
        Emit::Dot => proof_dot(v),
        Emit::Text => proof_text(v),
    }
}

pub fn sequent(s: &Sequent, how: Emit) -> String {
    match how {
        Emit::Json => format!("{}\n", serde_json::to_string_pretty(&s.to_json()).expect("json")),
        Emit::Dot => s.to_dot(),
        Emit::Text => format!("{s}\n"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn dot_has_one_node_per_inference() {
        let p = json!({"seq": "a, ~a, o{}", "rule": "rf", "params": [0], "prems": [
            {"seq": "a, ~a", "rule": "id", "params": [0, 1], "prems": []}
        ]});
        let dot = proof_dot(&p);
        assert_eq!(dot.matches("shape=box").count(), 2);
        assert!(dot.contains("p0 -> p1"));
        assert_eq!(proof_text(&p).lines().count(), 2);
    }
}
