//! Story configuration: one JSON document that swaps the whole narrative.
//!
//! [`validate_config`] works on raw JSON and reports every finding in a
//! fixed traversal order; [`load_config`] fails on the first error finding
//! and otherwise deserializes with defaults filled in.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::gesture::DEFAULT_BURST_WINDOW_MS;
use crate::rules::{ChaosThreshold, DEFAULT_MISSION_TARGET};
use crate::text::normalize_answer;
use crate::types::{Dance, Pose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrativeConfig {
    pub title: String,
    pub intro_text: String,
    pub tutorial_steps: Vec<String>,
    #[serde(default = "default_mission_target")]
    pub mission_target: u32,
    #[serde(default)]
    pub dances: DanceNames,
    #[serde(default = "default_chaos_track")]
    pub chaos_track: String,
    pub quiz: Vec<QuizQuestion>,
    pub words: Vec<String>,
    pub hidden_objects: HiddenObjectsLayout,
    #[serde(default = "default_burst_window")]
    pub burst_window_ms: u64,
    #[serde(default)]
    pub chaos_threshold: ChaosThreshold,
}

/// Display names for the four dances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DanceNames {
    pub macarena: String,
    pub samba: String,
    pub move_it: String,
    pub twist: String,
}

impl Default for DanceNames {
    fn default() -> Self {
        DanceNames {
            macarena: "Macarena".into(),
            samba: "Samba".into(),
            move_it: "I Like to Move It".into(),
            twist: "Twist".into(),
        }
    }
}

impl DanceNames {
    pub fn name(&self, dance: Dance) -> &str {
        match dance {
            Dance::Macarena => &self.macarena,
            Dance::Samba => &self.samba,
            Dance::MoveIt => &self.move_it,
            Dance::Twist => &self.twist,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuizQuestion {
    pub question: String,
    pub accepted_answers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenObjectsLayout {
    pub target_pose: Pose,
    #[serde(default)]
    pub tolerance: PoseTolerance,
    pub objects: Vec<SceneObject>,
}

/// Closed-interval tolerance for the marker pose.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseTolerance {
    pub distance: f64,
    pub angle_deg: f64,
}

impl Default for PoseTolerance {
    fn default() -> Self {
        PoseTolerance {
            distance: 10.0,
            angle_deg: 15.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneObject {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

fn default_mission_target() -> u32 {
    DEFAULT_MISSION_TARGET
}

fn default_chaos_track() -> String {
    "Axel F".into()
}

fn default_burst_window() -> u64 {
    DEFAULT_BURST_WINDOW_MS
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Finding {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("config is not valid JSON: {0}")]
    ParseError(String),
    #[error("invalid config field `{field}`: {reason}")]
    ValidationError { field: String, reason: String },
}

/// Parse, validate and default a config from JSON bytes.
pub fn load_config(bytes: &[u8]) -> Result<NarrativeConfig, ConfigError> {
    let value: Value =
        serde_json::from_slice(bytes).map_err(|e| ConfigError::ParseError(e.to_string()))?;
    if let Some(f) = validate_config(&value)
        .into_iter()
        .find(|f| f.severity == Severity::Error)
    {
        return Err(ConfigError::ValidationError {
            field: f.field,
            reason: f.message,
        });
    }
    serde_json::from_value(value).map_err(|e| ConfigError::ValidationError {
        field: String::new(),
        reason: e.to_string(),
    })
}

/// Serialize with every default spelled out.
pub fn save_config(cfg: &NarrativeConfig) -> String {
    serde_json::to_string_pretty(cfg).expect("config serializes")
}

const KNOWN_FIELDS: [&str; 11] = [
    "title",
    "intro_text",
    "tutorial_steps",
    "mission_target",
    "dances",
    "chaos_track",
    "quiz",
    "words",
    "hidden_objects",
    "burst_window_ms",
    "chaos_threshold",
];

struct Lint {
    findings: Vec<Finding>,
}

impl Lint {
    fn error(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.findings.push(Finding {
            severity: Severity::Error,
            field: field.into(),
            message: message.into(),
        });
    }

    fn warn(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.findings.push(Finding {
            severity: Severity::Warning,
            field: field.into(),
            message: message.into(),
        });
    }

    fn string<'a>(&mut self, obj: &'a Map<String, Value>, key: &str, path: &str) -> Option<&'a str> {
        match obj.get(key) {
            None => {
                self.error(path, "missing required string");
                None
            }
            Some(Value::String(s)) => Some(s),
            Some(_) => {
                self.error(path, "expected a string");
                None
            }
        }
    }

    fn number(&mut self, obj: &Map<String, Value>, key: &str, path: &str) -> Option<f64> {
        match obj.get(key) {
            None => {
                self.error(path, "missing required number");
                None
            }
            Some(Value::Number(n)) => n.as_f64(),
            Some(_) => {
                self.error(path, "expected a number");
                None
            }
        }
    }

    fn array<'a>(&mut self, obj: &'a Map<String, Value>, key: &str, path: &str) -> Option<&'a Vec<Value>> {
        match obj.get(key) {
            None => {
                self.error(path, "missing required array");
                None
            }
            Some(Value::Array(a)) => Some(a),
            Some(_) => {
                self.error(path, "expected an array");
                None
            }
        }
    }

    fn object<'a>(&mut self, v: &'a Value, path: &str) -> Option<&'a Map<String, Value>> {
        match v {
            Value::Object(m) => Some(m),
            _ => {
                self.error(path, "expected an object");
                None
            }
        }
    }

    fn pose(&mut self, v: Option<&Value>, path: &str) {
        let Some(v) = v else {
            self.error(path, "missing required pose");
            return;
        };
        if let Some(obj) = self.object(v, path) {
            for key in ["x", "y", "rot_deg"] {
                self.number(obj, key, &format!("{path}.{key}"));
            }
        }
    }
}

/// Lint a parsed config. Findings come out in field order; the config is
/// loadable iff none of them has [`Severity::Error`].
pub fn validate_config(cfg: &Value) -> Vec<Finding> {
    let mut lint = Lint {
        findings: Vec::new(),
    };
    let Some(root) = lint.object(cfg, "") else {
        return lint.findings;
    };

    lint.string(root, "title", "title");
    lint.string(root, "intro_text", "intro_text");
    if let Some(steps) = lint.array(root, "tutorial_steps", "tutorial_steps") {
        for (i, s) in steps.iter().enumerate() {
            if !s.is_string() {
                lint.error(format!("tutorial_steps[{i}]"), "expected a string");
            }
        }
        if steps.is_empty() {
            lint.warn("tutorial_steps", "no tutorial steps; players get no guidance");
        }
    }

    if let Some(v) = root.get("mission_target") {
        match v.as_u64() {
            Some(n) if n >= 1 && n <= u32::MAX as u64 => {}
            _ => lint.error("mission_target", "must be a positive integer"),
        }
    }

    if let Some(v) = root.get("dances") {
        if let Some(obj) = lint.object(v, "dances") {
            for d in Dance::ALL {
                let path = format!("dances.{}", d.as_str());
                if let Some(name) = lint.string(obj, d.as_str(), &path) {
                    if name.trim().is_empty() {
                        lint.error(path, "dance name must not be empty");
                    }
                }
            }
        }
    }

    if let Some(v) = root.get("chaos_track") {
        match v.as_str() {
            Some(s) if !s.trim().is_empty() => {}
            _ => lint.error("chaos_track", "must be a non-empty string"),
        }
    }

    if let Some(quiz) = lint.array(root, "quiz", "quiz") {
        if quiz.is_empty() {
            lint.error("quiz", "at least one question is required");
        }
        for (i, entry) in quiz.iter().enumerate() {
            let path = format!("quiz[{i}]");
            let Some(obj) = lint.object(entry, &path) else {
                continue;
            };
            lint.string(obj, "question", &format!("{path}.question"));
            let answers_path = format!("{path}.accepted_answers");
            if let Some(answers) = lint.array(obj, "accepted_answers", &answers_path) {
                if answers.is_empty() {
                    lint.error(&answers_path, "at least one accepted answer is required");
                }
                let mut seen = BTreeSet::new();
                for (j, a) in answers.iter().enumerate() {
                    match a.as_str() {
                        Some(s) if normalize_answer(s).is_empty() => {
                            lint.error(format!("{answers_path}[{j}]"), "answer is blank")
                        }
                        Some(s) => {
                            if !seen.insert(normalize_answer(s)) {
                                lint.warn(
                                    format!("{answers_path}[{j}]"),
                                    "duplicate of an earlier answer after normalization",
                                );
                            }
                        }
                        None => lint.error(format!("{answers_path}[{j}]"), "expected a string"),
                    }
                }
            }
        }
    }

    if let Some(words) = lint.array(root, "words", "words") {
        if words.is_empty() {
            lint.error("words", "at least one word is required");
        }
        let mut seen = BTreeSet::new();
        for (i, w) in words.iter().enumerate() {
            let path = format!("words[{i}]");
            match w.as_str() {
                None => lint.error(path, "expected a string"),
                Some("") => lint.error(path, "word is empty"),
                Some(s) if !s.chars().all(|c| c.is_alphabetic() && !c.is_uppercase()) => {
                    lint.error(path, "word must be lowercase letters only")
                }
                Some(s) => {
                    if !seen.insert(s) {
                        lint.warn(path, "duplicate word");
                    }
                }
            }
        }
    }

    match root.get("hidden_objects") {
        None => lint.error("hidden_objects", "missing required object"),
        Some(v) => {
            if let Some(obj) = lint.object(v, "hidden_objects") {
                lint.pose(obj.get("target_pose"), "hidden_objects.target_pose");
                if let Some(t) = obj.get("tolerance") {
                    if let Some(tol) = lint.object(t, "hidden_objects.tolerance") {
                        for key in ["distance", "angle_deg"] {
                            let path = format!("hidden_objects.tolerance.{key}");
                            if let Some(n) = lint.number(tol, key, &path) {
                                if n < 0.0 {
                                    lint.error(path, "tolerance must not be negative");
                                }
                            }
                        }
                    }
                }
                if let Some(objects) = lint.array(obj, "objects", "hidden_objects.objects") {
                    if objects.is_empty() {
                        lint.error("hidden_objects.objects", "at least one object is required");
                    }
                    let mut ids = BTreeSet::new();
                    let mut duplicate = false;
                    for (i, o) in objects.iter().enumerate() {
                        let path = format!("hidden_objects.objects[{i}]");
                        let Some(o) = lint.object(o, &path) else {
                            continue;
                        };
                        if let Some(id) = lint.string(o, "id", &format!("{path}.id")) {
                            if id.is_empty() {
                                lint.error(format!("{path}.id"), "object id is empty");
                            }
                            duplicate |= !ids.insert(id);
                        }
                        lint.number(o, "x", &format!("{path}.x"));
                        lint.number(o, "y", &format!("{path}.y"));
                    }
                    if duplicate {
                        lint.error("hidden_objects.objects", "object ids must be unique");
                    }
                }
            }
        }
    }

    if let Some(v) = root.get("burst_window_ms") {
        if v.as_u64().is_none() {
            lint.error("burst_window_ms", "must be a non-negative integer");
        }
    }

    if let Some(v) = root.get("chaos_threshold") {
        if v.as_f64().and_then(ChaosThreshold::from_f64).is_none() {
            lint.error("chaos_threshold", "must be a positive number");
        }
    }

    for key in root.keys() {
        if !KNOWN_FIELDS.contains(&key.as_str()) {
            lint.warn(key.clone(), "unknown field is ignored");
        }
    }

    lint.findings
}
