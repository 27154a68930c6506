use super::{ExtractedFields, KnowledgeError, SpecField};
use regex::Regex;
use std::sync::OnceLock;

const FEET_TO_METERS: f64 = 0.3048;

fn field_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r#"(?i)\b(bike_lane_width|shoulder_width|total_width|lane_width)\b["'*]*\s*[:=]\s*(-?\d+(?:\.\d+)?)\s*([a-zA-Z]*)"#,
        )
        .expect("static regex compiles")
    })
}

/// Pulls `field: value unit` assignments for the four width fields out of a
/// free-form response. Units `m`/`meter`/`meters` (or none) are meters;
/// `ft`/`feet` convert at 0.3048 m/ft; anything else doesn't count as a
/// match. The first assignment per field wins. Values outside [0, 30] m are
/// a hard error; a response with no recognizable field at all is an
/// extraction failure the caller may retry.
pub fn parse_spec_response(raw: &str) -> Result<ExtractedFields, KnowledgeError> {
    let mut fields = ExtractedFields::default();
    for caps in field_pattern().captures_iter(raw) {
        let field = match caps[1].to_ascii_lowercase().as_str() {
            "lane_width" => SpecField::LaneWidth,
            "bike_lane_width" => SpecField::BikeLaneWidth,
            "shoulder_width" => SpecField::ShoulderWidth,
            "total_width" => SpecField::TotalWidth,
            _ => unreachable!("pattern alternation is exhaustive"),
        };
        if fields.get(field).is_some() {
            continue;
        }
        let factor = match caps[3].to_ascii_lowercase().as_str() {
            "" | "m" | "meter" | "meters" => 1.0,
            "ft" | "feet" => FEET_TO_METERS,
            _ => continue, // unknown unit: not a recognizable assignment
        };
        let value: f64 = caps[2].parse().expect("regex guarantees a number");
        let meters = value * factor;
        if !(0.0..=30.0).contains(&meters) {
            return Err(KnowledgeError::ValueOutOfRange {
                field,
                value: meters,
            });
        }
        fields.set(field, meters);
    }
    if fields.is_empty() {
        return Err(KnowledgeError::ExtractionFailure);
    }
    Ok(fields)
}

/// Renders fields in the schema format the prompt requests. Parsing the
/// rendered text reproduces the values (for up to 4 decimal places,
/// exactly).
pub fn render_spec_fields(fields: &ExtractedFields) -> String {
    let mut out = String::new();
    for field in SpecField::ALL {
        if let Some(v) = fields.get(field) {
            out.push_str(&format!("{}: {} m\n", field.key(), v));
        }
    }
    out
}
