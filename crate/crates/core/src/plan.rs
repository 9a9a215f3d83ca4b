//! Typed edit-plan data model and plan-level constraint checks.
//!
//! An edit plan has four fields: a rewritten instruction, a task label, an
//! optional image-search query, and an optional mask phrase. The wire format
//! is a single JSON object with exactly the keys `refined_text_instruction`
//! (string), `subtask` (string), `image_search` (string or `false`), and
//! `mask` (string or `false`). Absent `image_search`/`mask` keys are accepted
//! on input as the empty state; output always emits literal `false`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The seven known task labels plus an escape for unrecognized text.
///
/// Unknown labels parse into [`TaskLabel::Other`] so future vocabulary
/// extensions are never silently coerced into a known label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum TaskLabel {
    AddObject,
    RemoveObject,
    ReplaceObject,
    ChangeBackground,
    GlobalStyle,
    ChangeColor,
    CombinedTasks,
    /// Unrecognized label text, carried verbatim (trimmed).
    Other(String),
}

impl TaskLabel {
    pub const VOCABULARY: [&'static str; 7] = [
        "add_object",
        "remove_object",
        "replace_object",
        "change_background",
        "global_style",
        "change_color",
        "combined_tasks",
    ];

    /// Wire string for this label.
    pub fn as_str(&self) -> &str {
        match self {
            TaskLabel::AddObject => "add_object",
            TaskLabel::RemoveObject => "remove_object",
            TaskLabel::ReplaceObject => "replace_object",
            TaskLabel::ChangeBackground => "change_background",
            TaskLabel::GlobalStyle => "global_style",
            TaskLabel::ChangeColor => "change_color",
            TaskLabel::CombinedTasks => "combined_tasks",
            TaskLabel::Other(s) => s,
        }
    }

    /// True exactly for the labels allowed to carry a search query:
    /// addition, replacement, and background change.
    pub fn search_eligible(&self) -> bool {
        matches!(
            self,
            TaskLabel::AddObject | TaskLabel::ReplaceObject | TaskLabel::ChangeBackground
        )
    }

    /// True when this is one of the seven known vocabulary members.
    pub fn is_known(&self) -> bool {
        !matches!(self, TaskLabel::Other(_))
    }
}

impl From<TaskLabel> for String {
    fn from(label: TaskLabel) -> String {
        label.as_str().to_owned()
    }
}

impl From<String> for TaskLabel {
    fn from(s: String) -> TaskLabel {
        normalize_task_label(&s)
    }
}

impl std::fmt::Display for TaskLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Case-insensitive, whitespace-trimmed match against the known vocabulary.
/// Unmatched text returns [`TaskLabel::Other`] carrying the trimmed original.
pub fn normalize_task_label(text: &str) -> TaskLabel {
    let trimmed = text.trim();
    match trimmed.to_ascii_lowercase().as_str() {
        "add_object" => TaskLabel::AddObject,
        "remove_object" => TaskLabel::RemoveObject,
        "replace_object" => TaskLabel::ReplaceObject,
        "change_background" => TaskLabel::ChangeBackground,
        "global_style" => TaskLabel::GlobalStyle,
        "change_color" => TaskLabel::ChangeColor,
        "combined_tasks" => TaskLabel::CombinedTasks,
        _ => TaskLabel::Other(trimmed.to_owned()),
    }
}

/// A parsed four-field edit plan.
///
/// `image_search`/`mask` use `None` as the sole encoding of the empty state;
/// present values are guaranteed nonempty after trimming.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditPlan {
    pub refined_instruction: String,
    pub task: TaskLabel,
    pub image_search: Option<String>,
    pub mask_phrase: Option<String>,
}

impl EditPlan {
    /// Number of fields on which two plans differ (0..=4).
    pub fn field_diff_count(&self, other: &EditPlan) -> usize {
        usize::from(self.refined_instruction != other.refined_instruction)
            + usize::from(self.task != other.task)
            + usize::from(self.image_search != other.image_search)
            + usize::from(self.mask_phrase != other.mask_phrase)
    }
}

pub const FIELD_REFINED: &str = "refined_text_instruction";
pub const FIELD_SUBTASK: &str = "subtask";
pub const FIELD_IMAGE_SEARCH: &str = "image_search";
pub const FIELD_MASK: &str = "mask";
const PLAN_FIELDS: [&str; 4] = [FIELD_REFINED, FIELD_SUBTASK, FIELD_IMAGE_SEARCH, FIELD_MASK];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlanError {
    #[error("MissingField: plan document lacks required key \"{0}\"")]
    MissingField(String),
    #[error("MalformedDocument: {0}")]
    MalformedDocument(String),
    #[error("EmptyStringField: field \"{0}\" is present but whitespace-only")]
    EmptyStringField(String),
}

/// Parse a plan document in the four-field wire format.
///
/// The literal boolean `false` (or key absence) for `image_search`/`mask`
/// maps to the empty state; string values map to the present state.
/// Whitespace-only strings are rejected rather than treated as empty.
pub fn parse_edit_plan(document: &str) -> Result<EditPlan, PlanError> {
    let value: serde_json::Value = serde_json::from_str(document)
        .map_err(|e| PlanError::MalformedDocument(format!("not parseable as JSON: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| PlanError::MalformedDocument("top level is not an object".into()))?;

    for key in obj.keys() {
        if !PLAN_FIELDS.contains(&key.as_str()) {
            return Err(PlanError::MalformedDocument(format!(
                "unexpected key \"{key}\" (the wire format has exactly four keys)"
            )));
        }
    }

    let refined = required_string(obj, FIELD_REFINED)?;
    let subtask = required_string(obj, FIELD_SUBTASK)?;
    let image_search = optional_string(obj, FIELD_IMAGE_SEARCH)?;
    let mask_phrase = optional_string(obj, FIELD_MASK)?;

    Ok(EditPlan {
        refined_instruction: refined,
        task: normalize_task_label(&subtask),
        image_search,
        mask_phrase,
    })
}

fn required_string(
    obj: &serde_json::Map<String, serde_json::Value>,
    key: &str,
) -> Result<String, PlanError> {
    let value = obj
        .get(key)
        .ok_or_else(|| PlanError::MissingField(key.to_owned()))?;
    let s = value.as_str().ok_or_else(|| {
        PlanError::MalformedDocument(format!("key \"{key}\" must be a string"))
    })?;
    if s.trim().is_empty() {
        return Err(PlanError::EmptyStringField(key.to_owned()));
    }
    Ok(s.to_owned())
}

fn optional_string(
    obj: &serde_json::Map<String, serde_json::Value>,
    key: &str,
) -> Result<Option<String>, PlanError> {
    match obj.get(key) {
        None | Some(serde_json::Value::Bool(false)) => Ok(None),
        Some(serde_json::Value::String(s)) => {
            if s.trim().is_empty() {
                Err(PlanError::EmptyStringField(key.to_owned()))
            } else {
                Ok(Some(s.clone()))
            }
        }
        Some(other) => Err(PlanError::MalformedDocument(format!(
            "key \"{key}\" must be a string or false, got {other}"
        ))),
    }
}

/// Serialize a plan to the wire format: exactly four keys, empty optional
/// fields emitted as literal `false` for byte-compatibility.
pub fn serialize_edit_plan(plan: &EditPlan) -> String {
    let mut obj = serde_json::Map::new();
    obj.insert(
        FIELD_REFINED.into(),
        serde_json::Value::String(plan.refined_instruction.clone()),
    );
    obj.insert(
        FIELD_SUBTASK.into(),
        serde_json::Value::String(plan.task.as_str().to_owned()),
    );
    obj.insert(FIELD_IMAGE_SEARCH.into(), optional_to_wire(&plan.image_search));
    obj.insert(FIELD_MASK.into(), optional_to_wire(&plan.mask_phrase));
    serde_json::Value::Object(obj).to_string()
}

fn optional_to_wire(field: &Option<String>) -> serde_json::Value {
    match field {
        Some(s) => serde_json::Value::String(s.clone()),
        None => serde_json::Value::Bool(false),
    }
}

/// A video handle: a path-like identifier plus the metadata needed by the
/// pipeline without decoding anything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoHandle {
    pub path: String,
    pub frames: u32,
    pub height: u32,
    pub width: u32,
    /// Native frame rate, used only for context-frame sampling.
    #[serde(default = "default_fps")]
    pub fps: f64,
}

fn default_fps() -> f64 {
    16.0
}

impl VideoHandle {
    pub fn new(path: impl Into<String>, frames: u32, height: u32, width: u32) -> Self {
        VideoHandle {
            path: path.into(),
            frames,
            height,
            width,
            fps: default_fps(),
        }
    }
}

/// A raw edit request: source video, user instruction, optional references.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EditRequest {
    pub source_video: VideoHandle,
    pub raw_instruction: String,
    /// Identifiers (paths or URIs) of user-supplied reference images.
    #[serde(default)]
    pub user_references: Vec<String>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RequestError {
    #[error("raw_instruction must be nonempty after trimming")]
    EmptyInstruction,
    #[error("source video must have at least one frame")]
    NoFrames,
    #[error("source video dimensions must be positive")]
    ZeroDimension,
}

impl EditRequest {
    pub fn new(
        source_video: VideoHandle,
        raw_instruction: impl Into<String>,
        user_references: Vec<String>,
    ) -> Result<Self, RequestError> {
        let raw_instruction = raw_instruction.into();
        if raw_instruction.trim().is_empty() {
            return Err(RequestError::EmptyInstruction);
        }
        if source_video.frames == 0 {
            return Err(RequestError::NoFrames);
        }
        if source_video.height == 0 || source_video.width == 0 {
            return Err(RequestError::ZeroDimension);
        }
        Ok(EditRequest {
            source_video,
            raw_instruction,
            user_references,
        })
    }
}

/// Identifier of a violated validation rule.
pub mod rule {
    /// Search query present while the request carries user references.
    pub const R1: &str = "R1";
    /// Search query present while the task is not search-eligible.
    pub const R2: &str = "R2";
    /// Mask phrase present while the task is not a removal.
    pub const R3: &str = "R3";
    /// Warning: search query and mask phrase both present.
    pub const W1: &str = "W1";
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Valid,
    Invalid,
}

/// Outcome of plan validation. Valid iff `violations` is empty; warnings
/// never affect the verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub verdict: Verdict,
    /// (rule id, human-readable reason), sorted by rule id.
    pub violations: Vec<(String, String)>,
    /// (rule id, reason) notes that do not invalidate the plan.
    pub warnings: Vec<(String, String)>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        matches!(self.verdict, Verdict::Valid)
    }
}

/// Toggles for the configurable validation rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationConfig {
    /// Enforce rule R3 (mask phrase allowed only for `remove_object`).
    pub mask_only_for_removal: bool,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            mask_only_for_removal: true,
        }
    }
}

/// Check a parsed plan against the plan-level constraints.
///
/// Rules checked: R1 (user references suppress web image search), R2 (search
/// only for search-eligible tasks), R3 (mask phrase only for removals,
/// configurable). Invalid plans produce a report, never an error. The
/// violation list is sorted by rule id, so it is independent of check order.
pub fn validate_plan(plan: &EditPlan, request: &EditRequest) -> ValidationReport {
    validate_plan_with(plan, request, ValidationConfig::default())
}

pub fn validate_plan_with(
    plan: &EditPlan,
    request: &EditRequest,
    config: ValidationConfig,
) -> ValidationReport {
    let mut violations: Vec<(String, String)> = Vec::new();
    let mut warnings: Vec<(String, String)> = Vec::new();

    if plan.image_search.is_some() && !request.user_references.is_empty() {
        violations.push((
            rule::R1.into(),
            format!(
                "image_search is set but the request carries {} user reference(s); \
                 user-provided references suppress web image search",
                request.user_references.len()
            ),
        ));
    }
    if plan.image_search.is_some() && !plan.task.search_eligible() {
        violations.push((
            rule::R2.into(),
            format!(
                "image_search is set but task \"{}\" is not search-eligible \
                 (allowed: add_object, replace_object, change_background)",
                plan.task
            ),
        ));
    }
    if config.mask_only_for_removal
        && plan.mask_phrase.is_some()
        && plan.task != TaskLabel::RemoveObject
    {
        violations.push((
            rule::R3.into(),
            format!("mask is set but task \"{}\" is not remove_object", plan.task),
        ));
    }
    if plan.image_search.is_some() && plan.mask_phrase.is_some() {
        warnings.push((
            rule::W1.into(),
            "plan carries both image_search and mask; no known plan does".into(),
        ));
    }

    violations.sort();
    let verdict = if violations.is_empty() {
        Verdict::Valid
    } else {
        Verdict::Invalid
    };
    ValidationReport {
        verdict,
        violations,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn request_with_refs(refs: Vec<String>) -> EditRequest {
        EditRequest::new(VideoHandle::new("clip.d", 81, 480, 832), "do the edit", refs).unwrap()
    }

    fn plan(task: TaskLabel, q: Option<&str>, m: Option<&str>) -> EditPlan {
        EditPlan {
            refined_instruction: "Refined instruction.".into(),
            task,
            image_search: q.map(str::to_owned),
            mask_phrase: m.map(str::to_owned),
        }
    }

    #[test]
    fn parses_search_bearing_plan() {
        let doc = r#"{"refined_text_instruction":"Replace the yellow duck mascot on the right side of the frame with a Joker in a white lab coat, plaid shirt, and orange vest.","subtask":"replace_object","image_search":"Joker","mask":false}"#;
        let plan = parse_edit_plan(doc).unwrap();
        assert_eq!(plan.task, TaskLabel::ReplaceObject);
        assert_eq!(plan.image_search.as_deref(), Some("Joker"));
        assert_eq!(plan.mask_phrase, None);
    }

    #[test]
    fn parses_double_false_plan() {
        let doc = r#"{"refined_text_instruction":"Convert this video to a live-action, photorealistic format.","subtask":"global_style","image_search":false,"mask":false}"#;
        let plan = parse_edit_plan(doc).unwrap();
        assert_eq!(plan.image_search, None);
        assert_eq!(plan.mask_phrase, None);
    }

    #[test]
    fn missing_subtask_is_missing_field() {
        let doc = r#"{"refined_text_instruction":"x","image_search":false,"mask":false}"#;
        assert_eq!(
            parse_edit_plan(doc),
            Err(PlanError::MissingField("subtask".into()))
        );
    }

    #[test]
    fn absent_optional_keys_decode_as_empty() {
        let doc = r#"{"refined_text_instruction":"x","subtask":"global_style"}"#;
        let plan = parse_edit_plan(doc).unwrap();
        assert_eq!(plan.image_search, None);
        assert_eq!(plan.mask_phrase, None);
    }

    #[test]
    fn whitespace_only_fields_are_rejected() {
        let doc = r#"{"refined_text_instruction":"x","subtask":"global_style","image_search":"   ","mask":false}"#;
        assert_eq!(
            parse_edit_plan(doc),
            Err(PlanError::EmptyStringField("image_search".into()))
        );
        let doc = r#"{"refined_text_instruction":"  ","subtask":"global_style","image_search":false,"mask":false}"#;
        assert_eq!(
            parse_edit_plan(doc),
            Err(PlanError::EmptyStringField("refined_text_instruction".into()))
        );
    }

    #[test]
    fn true_and_null_are_malformed() {
        for bad in ["true", "null", "3"] {
            let doc = format!(
                r#"{{"refined_text_instruction":"x","subtask":"global_style","image_search":{bad},"mask":false}}"#
            );
            assert!(matches!(
                parse_edit_plan(&doc),
                Err(PlanError::MalformedDocument(_))
            ));
        }
    }

    #[test]
    fn unexpected_key_is_malformed() {
        let doc = r#"{"refined_text_instruction":"x","subtask":"global_style","image_search":false,"mask":false,"extra":1}"#;
        assert!(matches!(
            parse_edit_plan(doc),
            Err(PlanError::MalformedDocument(_))
        ));
    }

    #[test]
    fn non_json_is_malformed() {
        assert!(matches!(
            parse_edit_plan("not json at all"),
            Err(PlanError::MalformedDocument(_))
        ));
    }

    #[test]
    fn label_normalization() {
        assert_eq!(normalize_task_label("Replace_Object"), TaskLabel::ReplaceObject);
        assert_eq!(normalize_task_label("remove_object"), TaskLabel::RemoveObject);
        assert_eq!(normalize_task_label(" ADD_OBJECT "), TaskLabel::AddObject);
        assert_eq!(
            normalize_task_label("camera_edit"),
            TaskLabel::Other("camera_edit".into())
        );
    }

    #[test]
    fn search_eligibility_is_exact() {
        let eligible: Vec<&str> = TaskLabel::VOCABULARY
            .iter()
            .copied()
            .filter(|l| normalize_task_label(l).search_eligible())
            .collect();
        assert_eq!(
            eligible,
            vec!["add_object", "replace_object", "change_background"]
        );
        assert!(!TaskLabel::Other("search_me".into()).search_eligible());
    }

    #[test]
    fn r1_fires_on_user_references_with_search() {
        let report = validate_plan(
            &plan(TaskLabel::AddObject, Some("Darth Vader"), None),
            &request_with_refs(vec!["ref0.ppm".into()]),
        );
        assert_eq!(report.verdict, Verdict::Invalid);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].0, rule::R1);
    }

    #[test]
    fn r2_fires_on_ineligible_task_with_search() {
        let report = validate_plan(
            &plan(TaskLabel::GlobalStyle, Some("Van Gogh style"), None),
            &request_with_refs(vec![]),
        );
        assert_eq!(report.verdict, Verdict::Invalid);
        assert_eq!(report.violations[0].0, rule::R2);
    }

    #[test]
    fn removal_mask_is_valid() {
        let report = validate_plan(
            &plan(TaskLabel::RemoveObject, None, Some("person on the right")),
            &request_with_refs(vec![]),
        );
        assert!(report.is_valid());
        assert!(report.warnings.is_empty());
    }

    #[test]
    fn r3_fires_on_non_removal_mask_and_can_be_disabled() {
        let p = plan(TaskLabel::GlobalStyle, None, Some("the sky"));
        let req = request_with_refs(vec![]);
        let report = validate_plan(&p, &req);
        assert_eq!(report.violations[0].0, rule::R3);
        let relaxed = validate_plan_with(
            &p,
            &req,
            ValidationConfig {
                mask_only_for_removal: false,
            },
        );
        assert!(relaxed.is_valid());
    }

    #[test]
    fn both_tools_set_is_a_warning_not_a_violation() {
        let report = validate_plan(
            &plan(TaskLabel::RemoveObject, Some("thing"), Some("thing")),
            &request_with_refs(vec![]),
        );
        // R2 fires for the search query; W1 notes the unusual combination.
        assert!(report.warnings.iter().any(|(id, _)| id == rule::W1));
        assert!(report.violations.iter().all(|(id, _)| id != rule::W1));
    }

    #[test]
    fn empty_plan_never_fires_rules() {
        for task in TaskLabel::VOCABULARY {
            let report = validate_plan(
                &plan(normalize_task_label(task), None, None),
                &request_with_refs(vec!["a".into()]),
            );
            assert!(report.is_valid(), "task {task} fired a rule on an empty plan");
        }
    }

    #[test]
    fn serialize_emits_false_for_empty_fields() {
        let p = plan(TaskLabel::GlobalStyle, None, None);
        let wire = serialize_edit_plan(&p);
        assert!(wire.contains(r#""image_search":false"#));
        assert!(wire.contains(r#""mask":false"#));
        assert_eq!(parse_edit_plan(&wire).unwrap(), p);
    }

    #[test]
    fn request_invariants() {
        assert_eq!(
            EditRequest::new(VideoHandle::new("v", 81, 10, 10), "   ", vec![]),
            Err(RequestError::EmptyInstruction)
        );
        assert_eq!(
            EditRequest::new(VideoHandle::new("v", 0, 10, 10), "x", vec![]),
            Err(RequestError::NoFrames)
        );
        assert_eq!(
            EditRequest::new(VideoHandle::new("v", 1, 0, 10), "x", vec![]),
            Err(RequestError::ZeroDimension)
        );
    }
}
