//! GraphML and CSV writers. All output is built in memory so it can be
//! hashed before it is written.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::community::CommunitySet;
use crate::coverage::TimeSeries;
use crate::error::Result;
use crate::graph::NarrativeGraph;
use crate::news::CooccurrenceNetwork;
use crate::subnode::{Subnode, SubnodeId};

fn escape(s: &str) -> String {
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

type MergedEdge<'a> = (u64, BTreeMap<&'a str, u64>);

const HEADER: &str = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n";

fn key(out: &mut String, id: &str, domain: &str, ty: &str) {
    let _ = writeln!(
        out,
        "  <key id=\"{id}\" for=\"{domain}\" attr.name=\"{id}\" attr.type=\"{ty}\"/>"
    );
}

fn data(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = write!(
        out,
        "<data key=\"{key}\">{}</data>",
        escape(&value.to_string())
    );
}

/// GraphML of the narrative graph. Node attributes: label, group, ner_score
/// and the ids of the communities holding the node. Edge attributes: weight
/// and the three most frequent relationship phrases. The undirected form
/// sums both directions and joins their relationship multisets.
pub fn narrative_graphml(
    graph: &NarrativeGraph,
    communities: Option<&CommunitySet>,
    directed: bool,
) -> String {
    let index = communities
        .map(CommunitySet::node_index)
        .unwrap_or_default();
    let mut out = String::from(HEADER);
    key(&mut out, "label", "node", "string");
    key(&mut out, "group", "node", "long");
    key(&mut out, "ner_score", "node", "double");
    key(&mut out, "communities", "node", "string");
    key(&mut out, "weight", "edge", "long");
    key(&mut out, "relations", "edge", "string");
    let kind = if directed { "directed" } else { "undirected" };
    let _ = writeln!(out, "  <graph id=\"narrative\" edgedefault=\"{kind}\">");
    for n in &graph.nodes {
        let _ = write!(out, "    <node id=\"{}\">", n.id);
        data(&mut out, "label", n.label_text());
        data(&mut out, "group", n.group_id);
        data(&mut out, "ner_score", n.ner_score);
        let ids: Vec<String> = index
            .get(&n.id)
            .into_iter()
            .flatten()
            .map(usize::to_string)
            .collect();
        data(&mut out, "communities", ids.join(" "));
        out.push_str("</node>\n");
    }
    // (weight, relationship counts) per exported edge
    let mut edges: BTreeMap<(SubnodeId, SubnodeId), MergedEdge> = BTreeMap::new();
    for (&(a, b), e) in &graph.edges {
        let k = if directed {
            (a, b)
        } else {
            (a.min(b), a.max(b))
        };
        let entry = edges.entry(k).or_default();
        entry.0 += e.weight;
        for (r, c) in &e.relations {
            *entry.1.entry(r).or_insert(0) += c;
        }
    }
    for ((a, b), (w, rels)) in edges {
        let mut rels: Vec<(&str, u64)> = rels.into_iter().collect();
        rels.sort_by(|x, y| y.1.cmp(&x.1).then(x.0.cmp(y.0)));
        let top: Vec<&str> = rels.into_iter().take(3).map(|r| r.0).collect();
        let _ = write!(out, "    <edge source=\"{a}\" target=\"{b}\">");
        data(&mut out, "weight", w);
        data(&mut out, "relations", top.join("; "));
        out.push_str("</edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

/// Undirected GraphML of one window network with raw counts as weights and
/// the two row-normalised weights of each pair.
pub fn network_graphml(net: &CooccurrenceNetwork) -> String {
    let mut out = String::from(HEADER);
    key(&mut out, "label", "node", "string");
    key(&mut out, "weight", "edge", "long");
    key(&mut out, "norm_source", "edge", "double");
    key(&mut out, "norm_target", "edge", "double");
    let _ = writeln!(
        out,
        "  <graph id=\"window{}\" edgedefault=\"undirected\">",
        net.window
    );
    for (i, e) in net.entities.iter().enumerate() {
        let _ = write!(out, "    <node id=\"n{i}\">");
        data(&mut out, "label", e);
        out.push_str("</node>\n");
    }
    for (i, j, c) in net.edges() {
        let _ = write!(out, "    <edge source=\"n{i}\" target=\"n{j}\">");
        data(&mut out, "weight", c);
        data(&mut out, "norm_source", net.normalized[i][j]);
        data(&mut out, "norm_target", net.normalized[j][i]);
        out.push_str("</edge>\n");
    }
    out.push_str("  </graph>\n</graphml>\n");
    out
}

fn to_csv<F>(header: &[&str], fill: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let run = |w: &mut csv::Writer<Vec<u8>>| -> csv::Result<()> {
        w.write_record(header)?;
        fill(w)?;
        w.flush()?;
        Ok(())
    };
    run(&mut w).map_err(|e| crate::error::Error::InvalidInput(format!("csv: {e}")))?;
    let bytes = w
        .into_inner()
        .map_err(|e| crate::error::Error::InvalidInput(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Count matrix of a window network, entity names as header and first
/// column. With `normalized` the row-normalised matrix is written instead.
pub fn network_csv(net: &CooccurrenceNetwork, normalized: bool) -> Result<String> {
    let mut header = vec!["entity"];
    header.extend(net.entities.iter().map(String::as_str));
    to_csv(&header, |w| {
        for (i, e) in net.entities.iter().enumerate() {
            let mut row = vec![e.clone()];
            if normalized {
                row.extend(net.normalized[i].iter().map(f64::to_string));
            } else {
                row.extend(net.counts[i].iter().map(u64::to_string));
            }
            w.write_record(&row)?;
        }
        Ok(())
    })
}

pub fn subnodes_csv(subnodes: &[Subnode]) -> Result<String> {
    to_csv(&["id", "group", "label", "ner_score", "members"], |w| {
        for s in subnodes {
            w.write_record([
                s.id.to_string(),
                s.group_id.to_string(),
                s.label_text(),
                s.ner_score.to_string(),
                s.member_phrases.len().to_string(),
            ])?;
        }
        Ok(())
    })
}

/// Rows of arbitrary string cells under `header`.
pub fn table_csv(header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    to_csv(header, |w| {
        for r in rows {
            w.write_record(r)?;
        }
        Ok(())
    })
}

pub fn series_csv(series: &TimeSeries) -> Result<String> {
    let rows: Vec<Vec<String>> = series
        .points()
        .iter()
        .map(|(d, v)| vec![d.to_string(), v.to_string()])
        .collect();
    table_csv(&["date", "value"], &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{AliasMap, RelationTuple, Source, StopList};
    use crate::news::cooccur_network;

    #[test]
    fn escapes_markup() {
        assert_eq!(escape("a<b & \"c\""), "a&lt;b &amp; &quot;c&quot;");
    }

    #[test]
    fn network_exports() {
        let t = RelationTuple::new(
            "d",
            Source::News,
            Some("2020-01-01".parse().unwrap()),
            "bill gates",
            "funds",
            "vaccine research",
        )
        .unwrap();
        let ents = vec!["gates".to_string(), "research".to_string()];
        let net = cooccur_network(0, [&t], &ents, &AliasMap::new(), &StopList::default());
        let g = network_graphml(&net);
        assert!(g.contains("<edge source=\"n0\" target=\"n1\"><data key=\"weight\">1</data>"));
        assert_eq!(
            network_csv(&net, false).unwrap(),
            "entity,gates,research\ngates,0,1\nresearch,1,0\n"
        );
    }
}
