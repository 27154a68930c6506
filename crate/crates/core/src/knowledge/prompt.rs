use super::{Chunk, ExtractionQuery, KnowledgeError, SpecField, TargetField};

/// A named prompt preamble. Everything after the preamble (context, segment
/// attributes, output schema) is template-independent, so swapping templates
/// changes only the leading bytes of the prompt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub name: String,
    pub preamble: String,
}

/// Templates loaded from a plain-text file with `[name]` section headers.
#[derive(Debug, Clone)]
pub struct PromptLibrary {
    templates: Vec<PromptTemplate>,
}

impl PromptLibrary {
    /// The templates shipped with the crate (`p1`, `p2`).
    pub fn builtin() -> Self {
        Self::parse(include_str!("../../../../assets/prompts.txt"))
            .expect("bundled prompt file is well-formed")
    }

    pub fn load(path: &std::path::Path) -> Result<Self, KnowledgeError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sections start with a `[name]` line; text before the first section is
    /// ignored. Preambles are trimmed of surrounding blank lines.
    pub fn parse(text: &str) -> Result<Self, KnowledgeError> {
        let mut templates: Vec<PromptTemplate> = Vec::new();
        let mut current: Option<(String, Vec<&str>)> = None;
        for line in text.lines() {
            let trimmed = line.trim();
            if trimmed.len() > 2 && trimmed.starts_with('[') && trimmed.ends_with(']') {
                if let Some((name, body)) = current.take() {
                    templates.push(PromptTemplate {
                        name,
                        preamble: body.join("\n").trim().to_string(),
                    });
                }
                current = Some((trimmed[1..trimmed.len() - 1].to_string(), Vec::new()));
            } else if let Some((_, body)) = current.as_mut() {
                body.push(line);
            }
        }
        if let Some((name, body)) = current.take() {
            templates.push(PromptTemplate {
                name,
                preamble: body.join("\n").trim().to_string(),
            });
        }
        if templates.is_empty() {
            return Err(KnowledgeError::EmptyPromptFile);
        }
        Ok(Self { templates })
    }

    pub fn get(&self, name: &str) -> Result<&PromptTemplate, KnowledgeError> {
        self.templates
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| KnowledgeError::UnknownTemplate(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.templates.iter().map(|t| t.name.as_str()).collect()
    }
}

/// Assembles the extraction prompt: template preamble, retrieved manual
/// context, segment attributes, prior values (context-carrying schedule
/// only), then the required output schema.
pub fn build_prompt(
    query: &ExtractionQuery,
    retrieved: &[&Chunk],
    template: &PromptTemplate,
) -> String {
    let mut out = String::new();
    out.push_str(&template.preamble);
    out.push_str("\n\nContext from the road manual:\n");
    if retrieved.is_empty() {
        out.push_str("No context retrieved from the road manual.\n");
    } else {
        for chunk in retrieved {
            out.push_str(&format!("[chunk {}]\n{}\n", chunk.index, chunk.text.trim_end()));
        }
    }

    let seg = &query.segment;
    out.push_str("\nRoad segment attributes:\n");
    out.push_str(&format!("highway_class: {}\n", seg.highway_class));
    out.push_str(&format!("lane_count: {}\n", seg.lane_count));
    out.push_str(&format!("oneway: {}\n", seg.oneway));
    out.push_str(&format!("has_bike_lane: {}\n", seg.has_bike_lane));

    if !query.prior_context.is_empty() {
        out.push_str("\nPreviously extracted values (meters):\n");
        for (field, value) in &query.prior_context {
            out.push_str(&format!("{}: {}\n", field.key(), value));
        }
    }

    out.push_str(
        "\nRespond with one line per requested field, exactly in the form \
         `<field>: <value> m` (meters) or `<field>: <value> ft` (feet):\n",
    );
    let fields: &[SpecField] = match query.target_field {
        TargetField::All => &SpecField::ALL,
        TargetField::Single(ref f) => std::slice::from_ref(f),
    };
    for field in fields {
        out.push_str(&format!("{}: <value> m\n", field.key()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::tests::segment;
    use crate::osm::HighwayClass;

    fn library() -> PromptLibrary {
        PromptLibrary::parse("[p1]\nShort preamble.\n\n[p2]\nLonger, more explicit preamble.\n")
            .unwrap()
    }

    fn query() -> ExtractionQuery {
        ExtractionQuery::new(
            segment(HighwayClass::Residential, 2, true),
            TargetField::All,
        )
    }

    #[test]
    fn empty_retrieval_is_marked_explicitly() {
        let lib = library();
        let prompt = build_prompt(&query(), &[], lib.get("p1").unwrap());
        assert!(prompt.contains("No context retrieved from the road manual."));
        assert!(prompt.contains("highway_class: residential"));
        assert!(prompt.contains("lane_width: <value> m"));
    }

    #[test]
    fn prior_context_lines_appear_verbatim() {
        let lib = library();
        let mut q = query();
        q.target_field = TargetField::Single(SpecField::BikeLaneWidth);
        q.prior_context.push((SpecField::LaneWidth, 3.6));
        let prompt = build_prompt(&q, &[], lib.get("p2").unwrap());
        assert!(prompt.contains("lane_width: 3.6"));
        // Single-field queries request only that field.
        assert!(prompt.contains("bike_lane_width: <value> m"));
        assert!(!prompt.contains("total_width: <value> m"));
    }

    #[test]
    fn templates_differ_only_in_preamble() {
        let lib = library();
        let p1 = lib.get("p1").unwrap();
        let p2 = lib.get("p2").unwrap();
        let a = build_prompt(&query(), &[], p1);
        let b = build_prompt(&query(), &[], p2);
        let tail_a = a.strip_prefix(p1.preamble.as_str()).unwrap();
        let tail_b = b.strip_prefix(p2.preamble.as_str()).unwrap();
        assert_eq!(tail_a, tail_b);
        assert_ne!(a, b);
    }

    #[test]
    fn unknown_template_is_a_config_error() {
        assert!(matches!(
            library().get("p9"),
            Err(KnowledgeError::UnknownTemplate(name)) if name == "p9"
        ));
    }

    #[test]
    fn retrieved_chunks_appear_with_indices() {
        let chunk = Chunk {
            index: 7,
            text: "lane width shall be 3.6 m".to_string(),
            char_span: (0, 25),
        };
        let lib = library();
        let prompt = build_prompt(&query(), &[&chunk], lib.get("p1").unwrap());
        assert!(prompt.contains("[chunk 7]"));
        assert!(prompt.contains("lane width shall be 3.6 m"));
    }

    #[test]
    fn builtin_library_has_the_shipped_templates() {
        let lib = PromptLibrary::builtin();
        assert!(lib.get("p1").is_ok());
        assert!(lib.get("p2").is_ok());
    }

    #[test]
    fn empty_prompt_file_is_rejected() {
        assert!(matches!(
            PromptLibrary::parse("no sections here\n"),
            Err(KnowledgeError::EmptyPromptFile)
        ));
    }
}
