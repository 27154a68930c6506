use crate::config::{parse_origin, Settings};
use crate::CliError;
use anyhow::Context;
use sdpp_core::eval::{compute_metrics, eval_frame, match_lanes, EvalReport, GroundTruthMap};
use sdpp_core::generation::{
    auto_frame, build_map, extract_specs, to_geojson, validate_map, EnhancedMap, ExtractionSetup,
    SegmentFailure, Variant,
};
use sdpp_core::knowledge::{BackendKind, RoadSpec};
use sdpp_core::osm::{
    filter_roads, normalize_roads, parse_osm, write_osm_xml, RoadSegment, SegmentFile,
};
use sdpp_core::LocalFrame;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// On-disk form of the extraction stage output (`specs.json`).
#[derive(Debug, Serialize, Deserialize)]
pub struct SpecsFile {
    pub backend: BackendKind,
    pub variant: Variant,
    pub template: Option<String>,
    pub specs: Vec<RoadSpec>,
    pub failures: Vec<SegmentFailure>,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .with_context(|| format!("serializing {}", path.display()))?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(CliError::from)
}

fn load_segments(path: &Path) -> Result<Vec<RoadSegment>, CliError> {
    let file: SegmentFile = serde_json::from_str(&read_to_string(path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok(file.segments)
}

fn load_specs(path: &Path) -> Result<SpecsFile, CliError> {
    let file: SpecsFile = serde_json::from_str(&read_to_string(path)?)
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok(file)
}

fn load_enhanced(path: &Path) -> Result<EnhancedMap, CliError> {
    EnhancedMap::from_json_str(&read_to_string(path)?)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(CliError::from)
}

pub fn cmd_filter(input: &Path, output: &Path) -> Result<(), CliError> {
    let xml = std::fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let doc = parse_osm(&xml).with_context(|| format!("parsing {}", input.display()))?;
    let filtered = filter_roads(&doc);
    std::fs::write(output, write_osm_xml(&filtered))
        .with_context(|| format!("writing {}", output.display()))?;
    eprintln!(
        "filter: kept {} of {} ways ({} nodes)",
        filtered.way_count(),
        doc.way_count(),
        filtered.node_count()
    );
    Ok(())
}

pub fn cmd_normalize(input: &Path, output: &Path) -> Result<(), CliError> {
    let xml = std::fs::read(input).with_context(|| format!("reading {}", input.display()))?;
    let doc = parse_osm(&xml).with_context(|| format!("parsing {}", input.display()))?;
    let normalized = normalize_roads(&doc).context("normalizing roads")?;
    for warning in &normalized.warnings {
        eprintln!("warning: {warning}");
    }
    write_json(
        output,
        &SegmentFile {
            segments: normalized.segments,
        },
    )?;
    Ok(())
}

pub fn cmd_extract(input: &Path, output: &Path, settings: &Settings) -> Result<(), CliError> {
    let (backend, store) = settings.build_backend()?;
    extract_to_file(input, output, settings, backend.as_ref(), store.as_ref())
}

fn extract_to_file(
    input: &Path,
    output: &Path,
    settings: &Settings,
    backend: &dyn sdpp_core::knowledge::ExtractionBackend,
    store: Option<&sdpp_core::knowledge::VectorStore>,
) -> Result<(), CliError> {
    let segments = load_segments(input)?;
    let setup = ExtractionSetup {
        backend,
        store,
        top_k: settings.top_k,
        template: settings.template_metadata(),
    };
    let extraction = extract_specs(settings.variant, &segments, &setup);
    for failure in &extraction.failures {
        eprintln!("warning: way {}: {}", failure.way_id, failure.reason);
    }
    write_json(
        output,
        &SpecsFile {
            backend: settings.backend_kind(),
            variant: settings.variant,
            template: settings.template_metadata(),
            specs: extraction.specs,
            failures: extraction.failures,
        },
    )?;
    Ok(())
}

fn frame_for(segments: &[RoadSegment], origin: Option<&str>) -> Result<LocalFrame, CliError> {
    match origin {
        None => Ok(auto_frame(segments)),
        Some(text) => {
            let (lat, lon) = parse_origin(text)?;
            LocalFrame::new(lat, lon).map_err(|e| CliError::Config(e.to_string()))
        }
    }
}

pub fn cmd_generate(
    segments_path: &Path,
    specs_path: &Path,
    output: &Path,
    origin: Option<&str>,
) -> Result<(), CliError> {
    let segments = load_segments(segments_path)?;
    let specs = load_specs(specs_path)?;
    let frame = frame_for(&segments, origin)?;
    let map = build_map(
        specs.variant,
        specs.backend,
        specs.template,
        &segments,
        &specs.specs,
        specs.failures,
        &frame,
    );
    let validity = validate_map(&map, &segments);
    write_json(output, &map)?;
    eprintln!(
        "generate: {} segments, {} failures, validity {:.0}%",
        map.segments.len(),
        map.failures.len(),
        validity.percent_valid()
    );
    Ok(())
}

pub fn cmd_export(input: &Path, output: &Path) -> Result<(), CliError> {
    let map = load_enhanced(input)?;
    write_json(output, &to_geojson(&map))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OutputFormat {
    Table,
    Json,
    Both,
}

pub fn cmd_eval(
    enhanced_path: &Path,
    gt_path: &Path,
    threshold: f64,
    step: f64,
    format: OutputFormat,
    report_path: Option<&Path>,
) -> Result<EvalReport, CliError> {
    if threshold <= 0.0 {
        return Err(CliError::Config(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    if step <= 0.0 {
        return Err(CliError::Config(format!("step must be positive, got {step}")));
    }
    let map = load_enhanced(enhanced_path)?;
    let gt = GroundTruthMap::load(gt_path)
        .with_context(|| format!("loading ground truth {}", gt_path.display()))?;
    let input_segments: Vec<RoadSegment> =
        map.segments.iter().map(|s| s.segment.clone()).collect();
    let validity = validate_map(&map, &input_segments);
    let frame = eval_frame(&map, &gt);
    let matches = match_lanes(&map, &gt, &frame, step);
    let report =
        compute_metrics(&matches, &validity, threshold, step).context("computing metrics")?;
    match format {
        OutputFormat::Table => print!("{}", report.to_table()),
        OutputFormat::Json => print!("{}", report.to_json_string()),
        OutputFormat::Both => {
            print!("{}", report.to_table());
            print!("{}", report.to_json_string());
        }
    }
    if let Some(path) = report_path {
        std::fs::write(path, report.to_json_string())
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(report)
}

pub fn cmd_run(
    input: &Path,
    out_dir: &Path,
    settings: &Settings,
    origin: Option<&str>,
) -> Result<(), CliError> {
    // Validate the backend configuration before any stage runs.
    let (backend, store) = settings.build_backend()?;
    if let Some(origin) = origin {
        parse_origin(origin)?;
    }
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let filtered = out_dir.join("filtered.osm.xml");
    let segments = out_dir.join("segments.json");
    let specs = out_dir.join("specs.json");
    let enhanced = out_dir.join("enhanced.json");
    let geojson = out_dir.join("enhanced.geojson");

    cmd_filter(input, &filtered)?;
    cmd_normalize(&filtered, &segments)?;
    extract_to_file(&segments, &specs, settings, backend.as_ref(), store.as_ref())?;
    cmd_generate(&segments, &specs, &enhanced, origin)?;
    cmd_export(&enhanced, &geojson)?;

    let map = load_enhanced(&enhanced)?;
    let input_segments = load_segments(&segments)?;
    let validity = validate_map(&map, &input_segments);
    println!(
        "run: {} segments enhanced, {} failures, validity {:.0}%",
        map.segments.len(),
        map.failures.len(),
        validity.percent_valid()
    );
    for reason in &validity.failures {
        eprintln!("validity: {reason}");
    }
    Ok(())
}
