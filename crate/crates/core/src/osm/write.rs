use super::OsmDocument;
use quick_xml::events::{BytesDecl, BytesStart, Event};
use quick_xml::Writer;

/// Serializes a document back to OSM XML, nodes then ways, sorted by id.
/// Coordinates use the shortest representation that round-trips the double,
/// so parse -> write -> parse is structurally lossless.
pub fn write_osm_xml(doc: &OsmDocument) -> String {
    let mut writer = Writer::new_with_indent(Vec::new(), b' ', 2);
    writer
        .write_event(Event::Decl(BytesDecl::new("1.0", Some("UTF-8"), None)))
        .unwrap();

    let mut osm = BytesStart::new("osm");
    osm.push_attribute(("version", "0.6"));
    osm.push_attribute(("generator", "sdpp"));
    writer.write_event(Event::Start(osm)).unwrap();

    for node in doc.nodes.values() {
        let mut el = BytesStart::new("node");
        el.push_attribute(("id", node.id.to_string().as_str()));
        el.push_attribute(("lat", node.lat.to_string().as_str()));
        el.push_attribute(("lon", node.lon.to_string().as_str()));
        writer.write_event(Event::Empty(el)).unwrap();
    }

    for way in doc.ways.values() {
        let mut el = BytesStart::new("way");
        el.push_attribute(("id", way.id.to_string().as_str()));
        writer.write_event(Event::Start(el)).unwrap();
        for node_ref in &way.node_refs {
            let mut nd = BytesStart::new("nd");
            nd.push_attribute(("ref", node_ref.to_string().as_str()));
            writer.write_event(Event::Empty(nd)).unwrap();
        }
        for (k, v) in &way.tags {
            let mut tag = BytesStart::new("tag");
            tag.push_attribute(("k", k.as_str()));
            tag.push_attribute(("v", v.as_str()));
            writer.write_event(Event::Empty(tag)).unwrap();
        }
        writer
            .write_event(Event::End(BytesStart::new("way").to_end()))
            .unwrap();
    }

    writer
        .write_event(Event::End(BytesStart::new("osm").to_end()))
        .unwrap();
    let mut bytes = writer.into_inner();
    bytes.push(b'\n');
    String::from_utf8(bytes).expect("writer output is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::super::{filter_roads, parse_osm};
    use super::*;

    #[test]
    fn round_trip_preserves_structure() {
        let xml = br#"<osm>
              <node id="1" lat="37.00000000001" lon="-122.12345678901234"/>
              <node id="2" lat="37.0001" lon="-122.0002"/>
              <node id="3" lat="37.0002" lon="-122.0003"/>
              <way id="10">
                <nd ref="1"/><nd ref="2"/>
                <tag k="highway" v="residential"/>
                <tag k="name" v="Quote &quot;&amp; Fork"/>
              </way>
              <way id="11">
                <nd ref="2"/><nd ref="3"/>
                <tag k="building" v="yes"/>
              </way>
            </osm>"#;
        let parsed = parse_osm(xml).unwrap();
        let retained = filter_roads(&parsed);
        let serialized = write_osm_xml(&retained);
        let reparsed = parse_osm(serialized.as_bytes()).unwrap();
        assert_eq!(retained, reparsed);
        // Full-precision doubles survive the text round trip bit-exactly.
        assert_eq!(
            reparsed.nodes[&1].lon,
            -122.12345678901234_f64
        );
    }
}
