use super::{validate_instance, AnnotationInstance, Violation};
use crate::canonical::to_canonical_string;
use crate::error::AnnotationError;

/// A structurally parsed document plus the paths of fields that were
/// present but not understood.
#[derive(Debug, Clone)]
pub struct ParsedDocument {
    pub instance: AnnotationInstance,
    pub ignored_fields: Vec<String>,
}

/// Deserialize without semantic validation. Unknown fields are collected
/// and logged, never fatal.
pub fn parse_document(bytes: &[u8]) -> Result<ParsedDocument, AnnotationError> {
    let mut ignored = Vec::new();
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let mut record = |path: serde_ignored::Path<'_>| ignored.push(path.to_string());
    let tracked = serde_ignored::Deserializer::new(&mut de, &mut record);
    let instance: AnnotationInstance =
        serde_path_to_error::deserialize(tracked).map_err(|e| AnnotationError::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
    de.end().map_err(|e| AnnotationError::Parse {
        path: ".".into(),
        message: e.to_string(),
    })?;
    for path in &ignored {
        log::warn!("ignoring unknown field {path}");
    }
    Ok(ParsedDocument {
        instance,
        ignored_fields: ignored,
    })
}

/// Parse and validate; any invariant violation is an error listing all of
/// them.
pub fn parse_instance(bytes: &[u8]) -> Result<AnnotationInstance, AnnotationError> {
    let doc = parse_document(bytes)?;
    let violations: Vec<Violation> = validate_instance(&doc.instance);
    if violations.is_empty() {
        Ok(doc.instance)
    } else {
        Err(AnnotationError::Invalid(violations))
    }
}

/// Canonical document text: sorted keys, fixed three-decimal floats,
/// two-space indentation.
pub fn serialize_instance(inst: &AnnotationInstance) -> String {
    to_canonical_string(inst, true).expect("instances always serialize")
}

#[cfg(test)]
mod tests {
    use super::super::*;
    use super::*;

    const MINIMAL: &str = r#"{"instance_id":"m","synced":false,
        "videos":[{"video_id":"v1","game":"Valheim","duration_s":30,"pov_index":1}],
        "true_labels":[],"distractor_labels":[]}"#;

    #[test]
    fn minimal_document() {
        let inst = parse_instance(MINIMAL.as_bytes()).unwrap();
        assert!(inst.true_labels.is_empty());
        assert!(inst.distractor_labels.is_empty());
        assert_eq!(inst.videos[0].sync_offset_s, 0.0);
    }

    #[test]
    fn single_label_document() {
        let doc = r#"{"instance_id":"m","synced":false,
            "videos":[{"video_id":"v1","game":"g","duration_s":30,"pov_index":1}],
            "true_labels":[{"id":"l1","video_id":"v1","kind":"SA","caption":"reloads the rifle",
                "interval":{"start_s":0.0,"end_s":2.0}}],
            "distractor_labels":[]}"#;
        let inst = parse_instance(doc.as_bytes()).unwrap();
        assert_eq!(inst.true_labels.len(), 1);
        assert_eq!(inst.true_labels[0].kind, EntityKind::SA);
        assert_eq!(inst.true_labels[0].caption, "reloads the rifle");
    }

    #[test]
    fn missing_actor_is_validation_error() {
        let doc = r#"{"instance_id":"m","synced":false,
            "videos":[{"video_id":"v1","game":"g","duration_s":30,"pov_index":1}],
            "true_labels":[{"id":"l1","video_id":"v1","kind":"OA","caption":"throws a grenade",
                "interval":{"start_s":0.0,"end_s":2.0}}]}"#;
        match parse_instance(doc.as_bytes()) {
            Err(AnnotationError::Invalid(v)) => {
                assert_eq!(v.len(), 1);
                assert_eq!(v[0].path, "true_labels[0].actor");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_document_reports_path() {
        let doc = r#"{"instance_id":"m","synced":false,
            "videos":[{"video_id":"v1","game":"g","duration_s":"long","pov_index":1}]}"#;
        match parse_document(doc.as_bytes()) {
            Err(AnnotationError::Parse { path, .. }) => assert_eq!(path, "videos[0].duration_s"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_ignored_with_record() {
        let doc = r#"{"instance_id":"m","synced":false,"notes":"x",
            "videos":[{"video_id":"v1","game":"g","duration_s":30,"pov_index":1,"fps":60}]}"#;
        let parsed = parse_document(doc.as_bytes()).unwrap();
        assert_eq!(parsed.ignored_fields, vec!["notes".to_string(), "videos.0.fps".to_string()]);
    }

    #[test]
    fn canonical_round_trip_is_byte_exact() {
        let params = SynthParams::small(3, 2);
        let inst = synth_instance(&params).unwrap();
        let text = serialize_instance(&inst);
        let back = parse_instance(text.as_bytes()).unwrap();
        assert_eq!(serialize_instance(&back), text);
    }
}
