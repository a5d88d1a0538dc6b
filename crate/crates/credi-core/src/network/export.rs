//! Serializers for [`CharacterNetwork`]: GraphML, DOT, and a JSON form
//! that re-imports losslessly.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use super::{CharacterNetwork, NetworkError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    GraphMl,
    Dot,
    Json,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "graphml" => Ok(ExportFormat::GraphMl),
            "dot" => Ok(ExportFormat::Dot),
            "json" => Ok(ExportFormat::Json),
            other => Err(format!("unknown format `{other}` (expected graphml, dot or json)")),
        }
    }
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

pub fn to_graphml(net: &CharacterNetwork) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(concat!(
        "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\"",
        " xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\"",
        " xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns",
        " http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n"
    ));
    out.push_str("  <key id=\"d0\" for=\"node\" attr.name=\"size\" attr.type=\"double\"/>\n");
    out.push_str("  <key id=\"d1\" for=\"node\" attr.name=\"role\" attr.type=\"string\"/>\n");
    out.push_str("  <key id=\"d2\" for=\"node\" attr.name=\"quote_count\" attr.type=\"int\"/>\n");
    out.push_str("  <key id=\"d3\" for=\"edge\" attr.name=\"weight\" attr.type=\"int\"/>\n");
    out.push_str(
        "  <key id=\"d4\" for=\"edge\" attr.name=\"polarity_score\" attr.type=\"double\"/>\n",
    );
    out.push_str("  <key id=\"d5\" for=\"edge\" attr.name=\"color\" attr.type=\"string\"/>\n");
    out.push_str("  <graph id=\"G\" edgedefault=\"undirected\">\n");
    for node in &net.nodes {
        let id = xml_escape(&node.name);
        writeln!(out, "    <node id=\"{id}\">").unwrap();
        writeln!(out, "      <data key=\"d0\">{}</data>", node.size).unwrap();
        writeln!(out, "      <data key=\"d1\">{}</data>", node.role.as_str()).unwrap();
        writeln!(out, "      <data key=\"d2\">{}</data>", node.quote_count).unwrap();
        out.push_str("    </node>\n");
    }
    for edge in &net.edges {
        writeln!(
            out,
            "    <edge source=\"{}\" target=\"{}\">",
            xml_escape(&edge.a),
            xml_escape(&edge.b)
        )
        .unwrap();
        writeln!(out, "      <data key=\"d3\">{}</data>", edge.weight).unwrap();
        writeln!(out, "      <data key=\"d4\">{}</data>", edge.polarity_score).unwrap();
        writeln!(out, "      <data key=\"d5\">{}</data>", edge.color).unwrap();
        out.push_str("    </edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

pub fn to_dot(net: &CharacterNetwork) -> String {
    let mut out = String::from("graph characters {\n");
    for node in &net.nodes {
        let name = dot_escape(&node.name);
        writeln!(
            out,
            "  \"{name}\" [width={}, role=\"{}\", quotes={}];",
            node.size,
            node.role.as_str(),
            node.quote_count
        )
        .unwrap();
    }
    for edge in &net.edges {
        // Same log damping as node sizes keeps heavy edges drawable.
        let penwidth = 1.0 + (1.0 + edge.weight as f64).ln();
        writeln!(
            out,
            "  \"{}\" -- \"{}\" [penwidth={penwidth}, color=\"{}\", weight={}];",
            dot_escape(&edge.a),
            dot_escape(&edge.b),
            edge.color,
            edge.weight
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

pub fn export_network(
    net: &CharacterNetwork,
    format: ExportFormat,
    path: impl AsRef<Path>,
) -> Result<(), NetworkError> {
    let text = match format {
        ExportFormat::GraphMl => to_graphml(net),
        ExportFormat::Dot => to_dot(net),
        ExportFormat::Json => {
            let mut s = serde_json::to_string_pretty(net).expect("network serializes");
            s.push('\n');
            s
        }
    };
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads back a JSON export.
pub fn load_network_json(path: impl AsRef<Path>) -> Result<CharacterNetwork, NetworkError> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| NetworkError::Schema(e.to_string()))
}
