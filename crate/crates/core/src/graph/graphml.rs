use std::io::{self, Write};

use super::NavGraph;

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
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

/// Writes `graph` as a directed GraphML document.
///
/// Nodes are `n{id}` with a `title` attribute; edges are `e{id}`. When
/// `categories` is given it must hold one label per node.
pub fn write_graphml<W: Write>(graph: &NavGraph, categories: Option<&[String]>, mut out: W) -> io::Result<()> {
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(out, r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns">"#)?;
    writeln!(out, r#"  <key id="title" for="node" attr.name="title" attr.type="string"/>"#)?;
    if categories.is_some() {
        writeln!(out, r#"  <key id="category" for="node" attr.name="category" attr.type="string"/>"#)?;
    }
    writeln!(out, r#"  <graph id="G" edgedefault="directed">"#)?;
    for node in graph.nodes() {
        write!(out, r#"    <node id="n{}"><data key="title">{}</data>"#, node.id, escape(&node.title))?;
        if let Some(labels) = categories {
            write!(out, r#"<data key="category">{}</data>"#, escape(&labels[node.id]))?;
        }
        writeln!(out, "</node>")?;
    }
    for e in graph.edges() {
        writeln!(out, r#"    <edge id="e{}" source="n{}" target="n{}"/>"#, e.id, e.src, e.dst)?;
    }
    writeln!(out, "  </graph>")?;
    writeln!(out, "</graphml>")
}
