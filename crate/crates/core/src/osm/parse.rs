use super::{OsmDocument, OsmError, OsmNode, OsmWay};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use std::collections::BTreeMap;

/// Parses an OSM v0.6 XML extract.
///
/// Captures `node` and `way` elements (with way tags), ignores `relation`
/// elements entirely, and enforces referential integrity: every `nd ref`
/// must resolve to a node in the same document.
pub fn parse_osm(xml: &[u8]) -> Result<OsmDocument, OsmError> {
    let mut reader = Reader::from_reader(xml);
    let mut buf = Vec::new();
    let mut doc = OsmDocument::default();
    // Way under construction; `nd`/`tag` children attach to it. Relation
    // children never set this, so their members/tags fall through.
    let mut current_way: Option<OsmWay> = None;

    loop {
        let event = reader.read_event_into(&mut buf).map_err(|e| OsmError::Xml {
            offset: reader.buffer_position(),
            message: e.to_string(),
        })?;
        match event {
            Event::Eof => break,
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(event, Event::Empty(_));
                match e.name().as_ref() {
                    b"node" => {
                        let node = parse_node(e)?;
                        if doc.nodes.insert(node.id, node).is_some() {
                            return Err(OsmError::DuplicateNode(node.id));
                        }
                    }
                    b"way" => {
                        let id = required_i64(e, "way", "id")?;
                        let way = OsmWay {
                            id,
                            node_refs: Vec::new(),
                            tags: BTreeMap::new(),
                        };
                        if empty {
                            return Err(OsmError::DegenerateWay { way_id: id });
                        }
                        current_way = Some(way);
                    }
                    b"nd" => {
                        if let Some(way) = current_way.as_mut() {
                            way.node_refs.push(required_i64(e, "nd", "ref")?);
                        }
                    }
                    b"tag" => {
                        if let Some(way) = current_way.as_mut() {
                            let k = required_string(e, "tag", "k")?;
                            let v = required_string(e, "tag", "v")?;
                            way.tags.insert(k, v);
                        }
                    }
                    // relations and everything else: parsed and discarded
                    _ => {}
                }
            }
            Event::End(ref e) if e.name().as_ref() == b"way" => {
                if let Some(way) = current_way.take() {
                    if way.node_refs.len() < 2 {
                        return Err(OsmError::DegenerateWay { way_id: way.id });
                    }
                    let id = way.id;
                    if doc.ways.insert(id, way).is_some() {
                        return Err(OsmError::DuplicateWay(id));
                    }
                }
            }
            _ => {}
        }
        buf.clear();
    }

    for way in doc.ways.values() {
        for node_id in &way.node_refs {
            if !doc.nodes.contains_key(node_id) {
                return Err(OsmError::DanglingNodeRef {
                    way_id: way.id,
                    node_id: *node_id,
                });
            }
        }
    }
    Ok(doc)
}

fn attribute_value(
    e: &BytesStart<'_>,
    element: &'static str,
    attribute: &'static str,
) -> Result<Option<String>, OsmError> {
    for attr in e.attributes() {
        let attr = attr.map_err(|err| OsmError::InvalidAttribute {
            element,
            attribute,
            value: err.to_string(),
        })?;
        if attr.key.as_ref() == attribute.as_bytes() {
            let value = attr
                .unescape_value()
                .map_err(|err| OsmError::InvalidAttribute {
                    element,
                    attribute,
                    value: err.to_string(),
                })?;
            return Ok(Some(value.into_owned()));
        }
    }
    Ok(None)
}

fn required_string(
    e: &BytesStart<'_>,
    element: &'static str,
    attribute: &'static str,
) -> Result<String, OsmError> {
    attribute_value(e, element, attribute)?.ok_or(OsmError::MissingAttribute { element, attribute })
}

fn required_i64(
    e: &BytesStart<'_>,
    element: &'static str,
    attribute: &'static str,
) -> Result<i64, OsmError> {
    let raw = required_string(e, element, attribute)?;
    raw.parse().map_err(|_| OsmError::InvalidAttribute {
        element,
        attribute,
        value: raw,
    })
}

fn required_f64(
    e: &BytesStart<'_>,
    element: &'static str,
    attribute: &'static str,
) -> Result<f64, OsmError> {
    let raw = required_string(e, element, attribute)?;
    raw.parse().map_err(|_| OsmError::InvalidAttribute {
        element,
        attribute,
        value: raw,
    })
}

fn parse_node(e: &BytesStart<'_>) -> Result<OsmNode, OsmError> {
    let id = required_i64(e, "node", "id")?;
    let lat = required_f64(e, "node", "lat")?;
    let lon = required_f64(e, "node", "lon")?;
    if !lat.is_finite() || !lon.is_finite() || !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
        return Err(OsmError::InvalidCoordinate {
            node_id: id,
            lat,
            lon,
        });
    }
    Ok(OsmNode { id, lat, lon })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_nodes_without_ways() {
        let xml = br#"<?xml version="1.0"?>
            <osm version="0.6">
              <node id="1" lat="1.0" lon="2.0"/>
              <node id="2" lat="1.5" lon="2.5"/>
            </osm>"#;
        let doc = parse_osm(xml).unwrap();
        assert_eq!(doc.node_count(), 2);
        assert_eq!(doc.way_count(), 0);
        assert_eq!(doc.nodes[&1].lat, 1.0);
    }

    #[test]
    fn relations_are_ignored() {
        let xml = br#"<osm version="0.6">
              <relation id="9">
                <member type="way" ref="1" role="outer"/>
                <tag k="type" v="multipolygon"/>
              </relation>
            </osm>"#;
        let doc = parse_osm(xml).unwrap();
        assert_eq!(doc.node_count(), 0);
        assert_eq!(doc.way_count(), 0);
    }

    #[test]
    fn captures_way_tags_and_refs_in_order() {
        let xml = br#"<osm>
              <node id="4" lat="0.0" lon="0.0"/>
              <node id="2" lat="0.1" lon="0.1"/>
              <way id="10">
                <nd ref="4"/>
                <nd ref="2"/>
                <tag k="highway" v="residential"/>
                <tag k="name" v="A &amp; B Street"/>
              </way>
            </osm>"#;
        let doc = parse_osm(xml).unwrap();
        let way = &doc.ways[&10];
        assert_eq!(way.node_refs, vec![4, 2]);
        assert_eq!(way.tags["highway"], "residential");
        assert_eq!(way.tags["name"], "A & B Street");
    }

    #[test]
    fn malformed_xml_reports_byte_offset() {
        // Mismatched closing tag.
        let xml = b"<osm><node id=\"1\" lat=\"0\" lon=\"0\"/><foo></bar></osm>";
        match parse_osm(xml) {
            Err(OsmError::Xml { offset, .. }) => assert!(offset > 0),
            other => panic!("expected xml error, got {other:?}"),
        }
    }

    #[test]
    fn dangling_reference_names_way_and_node() {
        let xml = br#"<osm>
              <node id="1" lat="0.0" lon="0.0"/>
              <way id="10"><nd ref="1"/><nd ref="99"/></way>
            </osm>"#;
        match parse_osm(xml) {
            Err(OsmError::DanglingNodeRef { way_id, node_id }) => {
                assert_eq!(way_id, 10);
                assert_eq!(node_id, 99);
            }
            other => panic!("expected dangling ref, got {other:?}"),
        }
    }

    #[test]
    fn rejects_out_of_range_coordinates() {
        let xml = br#"<osm><node id="1" lat="95.0" lon="0.0"/></osm>"#;
        assert!(matches!(
            parse_osm(xml),
            Err(OsmError::InvalidCoordinate { node_id: 1, .. })
        ));
    }

    #[test]
    fn rejects_single_node_way() {
        let xml = br#"<osm>
              <node id="1" lat="0.0" lon="0.0"/>
              <way id="10"><nd ref="1"/></way>
            </osm>"#;
        assert!(matches!(
            parse_osm(xml),
            Err(OsmError::DegenerateWay { way_id: 10 })
        ));
    }

    #[test]
    fn node_tags_do_not_leak_into_ways() {
        let xml = br#"<osm>
              <node id="1" lat="0.0" lon="0.0">
                <tag k="highway" v="crossing"/>
              </node>
              <node id="2" lat="0.1" lon="0.1"/>
              <way id="10"><nd ref="1"/><nd ref="2"/></way>
            </osm>"#;
        let doc = parse_osm(xml).unwrap();
        assert!(doc.ways[&10].tags.is_empty());
    }
}
