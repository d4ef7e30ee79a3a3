//! Line-completion benchmarking: datasets, metrics, and the eval driver.
//!
//! A benchmark example supplies a repository, a file prefix, and the
//! reference next line. The driver builds a prompt for every example
//! (recording how long that takes), compares supplied predictions against
//! the references, and aggregates exact match, edit similarity, and
//! identifier-level scores into a versioned report.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ContextGraph;
use crate::index::build_graph;
use crate::prompt::build_prompt;
use crate::render::Scope;
use crate::source::SourceFile;
use crate::tokens::TokenCounter;

/// Version stamp for the aggregate report format.
pub const REPORT_SCHEMA: u32 = 1;
/// Version stamp for per-example record lines.
pub const RECORD_SCHEMA: u32 = 1;

/// One benchmark example: complete the next line of `file_path` given
/// everything before the cursor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchExample {
    pub example_id: String,
    /// Repository to index; relative paths resolve against the dataset
    /// file's directory.
    pub repo_root: String,
    /// Repo-relative path of the file being completed.
    pub file_path: String,
    /// File content before the cursor.
    pub prefix: String,
    /// Ground-truth completion line.
    pub reference: String,
}

#[derive(Debug, Clone, Deserialize)]
struct PredictionLine {
    example_id: String,
    prediction: String,
}

/// Load a JSONL dataset. A malformed line is a hard error naming the line.
pub fn load_examples(path: &Path) -> Result<Vec<BenchExample>> {
    let text = read_text(path)?;
    let mut examples = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let example: BenchExample =
            serde_json::from_str(line).map_err(|e| Error::Dataset {
                path: path.to_path_buf(),
                line: idx + 1,
                reason: e.to_string(),
            })?;
        examples.push(example);
    }
    Ok(examples)
}

/// Load a predictions JSONL file into an id → prediction map.
pub fn load_predictions(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = read_text(path)?;
    let mut predictions = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: PredictionLine =
            serde_json::from_str(line).map_err(|e| Error::Dataset {
                path: path.to_path_buf(),
                line: idx + 1,
                reason: e.to_string(),
            })?;
        predictions.insert(parsed.example_id, parsed.prediction);
    }
    Ok(predictions)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

/// First line of a (possibly multi-line) model output, without any line
/// terminator.
pub fn first_line(text: &str) -> &str {
    let line = text.split('\n').next().unwrap_or("");
    line.strip_suffix('\r').unwrap_or(line)
}

/// Exact match after trimming surrounding whitespace from both sides.
pub fn exact_match(prediction: &str, reference: &str) -> bool {
    prediction.trim() == reference.trim()
}

fn lcs_chars(a: &[char], b: &[char]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut curr = vec![0usize; b.len() + 1];
    for &ca in a {
        for (j, &cb) in b.iter().enumerate() {
            curr[j + 1] = if ca == cb {
                prev[j] + 1
            } else {
                prev[j + 1].max(curr[j])
            };
        }
        std::mem::swap(&mut prev, &mut curr);
        curr.fill(0);
    }
    prev[b.len()]
}

/// Character-level similarity in [0, 1]: twice the longest common
/// subsequence over the combined length (the insert/delete-only edit
/// similarity). Two empty strings are identical.
pub fn edit_similarity(a: &str, b: &str) -> f64 {
    let ac: Vec<char> = a.chars().collect();
    let bc: Vec<char> = b.chars().collect();
    if ac.is_empty() && bc.is_empty() {
        return 1.0;
    }
    2.0 * lcs_chars(&ac, &bc) as f64 / (ac.len() + bc.len()) as f64
}

const PYTHON_KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
    "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global",
    "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return",
    "try", "while", "with", "yield",
];

fn skip_string(chars: &[char], start: usize) -> usize {
    let quote = chars[start];
    if start + 2 < chars.len() && chars[start + 1] == quote && chars[start + 2] == quote {
        let mut i = start + 3;
        while i + 2 < chars.len() {
            if chars[i] == quote && chars[i + 1] == quote && chars[i + 2] == quote {
                return i + 3;
            }
            if chars[i] == '\\' {
                i += 1;
            }
            i += 1;
        }
        return chars.len();
    }
    let mut i = start + 1;
    while i < chars.len() {
        match chars[i] {
            c if c == quote => return i + 1,
            '\\' => i += 2,
            // An unterminated one-line string ends at the line break.
            '\n' => return i,
            _ => i += 1,
        }
    }
    chars.len()
}

/// Identifiers of a code snippet in occurrence order. The lexer is
/// deliberately lenient — it tolerates incomplete lines — and drops
/// keywords, string/number literals, and comments.
pub fn identifiers(code: &str) -> Vec<String> {
    let chars: Vec<char> = code.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
        } else if c == '"' || c == '\'' {
            i = skip_string(&chars, i);
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            // `r"..."`, `f'...'`, `rb"..."`: the run is a string prefix,
            // not an identifier.
            let is_prefix = word.len() <= 2
                && word
                    .chars()
                    .all(|c| matches!(c, 'r' | 'R' | 'b' | 'B' | 'u' | 'U' | 'f' | 'F'));
            if is_prefix && i < chars.len() && (chars[i] == '"' || chars[i] == '\'') {
                i = skip_string(&chars, i);
                continue;
            }
            if !PYTHON_KEYWORDS.contains(&word.as_str()) {
                out.push(word);
            }
        } else if c.is_ascii_digit() {
            // Number literal, including hex/underscore/float glue.
            i += 1;
            while i < chars.len()
                && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.')
            {
                i += 1;
            }
        } else {
            i += 1;
        }
    }
    out
}

/// Identifier-level scores: exact match of the ordered identifier lists,
/// and the set-level F1. Two identifier-free snippets agree perfectly; an
/// identifier-free snippet against a non-empty one scores zero.
pub fn identifier_match(prediction: &str, reference: &str) -> (f64, f64) {
    let pred = identifiers(prediction);
    let refs = identifiers(reference);
    if pred.is_empty() && refs.is_empty() {
        return (1.0, 1.0);
    }
    if pred.is_empty() || refs.is_empty() {
        return (0.0, 0.0);
    }
    let ordered = if pred == refs { 1.0 } else { 0.0 };
    let pred_set: std::collections::BTreeSet<&str> = pred.iter().map(String::as_str).collect();
    let ref_set: std::collections::BTreeSet<&str> = refs.iter().map(String::as_str).collect();
    let overlap = pred_set.intersection(&ref_set).count() as f64;
    let precision = overlap / pred_set.len() as f64;
    let recall = overlap / ref_set.len() as f64;
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    (ordered, f1)
}

/// Settings for an evaluation run.
#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub max_tokens: usize,
    pub scope: Scope,
    /// When set, built graphs are also cached on disk under this directory,
    /// keyed by repository path. The cache is not content-addressed: delete
    /// it if a repository changes between runs.
    pub cache_dir: Option<PathBuf>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            max_tokens: 2048,
            scope: Scope::Complete,
            cache_dir: None,
        }
    }
}

/// Aggregate scores over the evaluated examples.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub schema: u32,
    pub total_examples: usize,
    pub evaluated: usize,
    pub skipped: usize,
    pub exact_match: f64,
    pub edit_similarity: f64,
    pub identifier_match: f64,
    pub identifier_f1: f64,
    /// Prompt construction time only; model generation is not measured
    /// here.
    pub timing_ms: TimingSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct TimingSummary {
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
}

/// Per-example result line.
#[derive(Debug, Clone, Serialize)]
pub struct ExampleRecord {
    pub schema: u32,
    pub example_id: String,
    pub exact_match: bool,
    pub edit_similarity: f64,
    pub identifier_match: f64,
    pub identifier_f1: f64,
    pub generation_ms: f64,
    pub prediction: String,
    pub reference: String,
}

/// Everything an evaluation run produces.
#[derive(Debug)]
pub struct EvalOutcome {
    pub report: EvalReport,
    pub records: Vec<ExampleRecord>,
    /// Human-readable notes about skipped or defaulted examples.
    pub diagnostics: Vec<String>,
}

fn fnv1a64(text: &str) -> u64 {
    let mut hash = 0xcbf29ce484222325u64;
    for byte in text.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Nearest-rank percentile of an ascending-sorted slice.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return 0.0;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Load (or build and remember) the context graph for one repository.
fn graph_for<'c>(
    cache: &'c mut BTreeMap<String, ContextGraph>,
    root: &Path,
    cache_dir: Option<&Path>,
) -> Result<&'c ContextGraph> {
    let key = root.to_string_lossy().into_owned();
    if !cache.contains_key(&key) {
        let mut loaded = None;
        let disk_path =
            cache_dir.map(|dir| dir.join(format!("graph-{:016x}.json", fnv1a64(&key))));
        if let Some(path) = disk_path.as_deref() {
            if path.is_file() {
                // A stale or corrupt cache entry falls back to rebuilding.
                loaded = ContextGraph::load(path).ok();
            }
        }
        let graph = match loaded {
            Some(graph) => graph,
            None => {
                let graph = build_graph(root)?;
                if let Some(path) = disk_path.as_deref() {
                    if let Some(parent) = path.parent() {
                        let _ = fs::create_dir_all(parent);
                    }
                    let _ = graph.save(path);
                }
                graph
            }
        };
        cache.insert(key.clone(), graph);
    }
    Ok(&cache[&key])
}

/// Run the benchmark: build a prompt per example, score the supplied
/// predictions, and aggregate. Examples whose repository is missing are
/// skipped with a diagnostic; a prediction missing for an example scores
/// as an empty completion.
pub fn run_eval(
    dataset_path: &Path,
    predictions_path: &Path,
    options: &EvalOptions,
    counter: &dyn TokenCounter,
) -> Result<EvalOutcome> {
    let examples = load_examples(dataset_path)?;
    let predictions = load_predictions(predictions_path)?;
    let dataset_dir = dataset_path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));

    let mut graphs: BTreeMap<String, ContextGraph> = BTreeMap::new();
    let mut records = Vec::new();
    let mut diagnostics = Vec::new();
    let mut skipped = 0usize;

    for example in &examples {
        let root = {
            let raw = Path::new(&example.repo_root);
            if raw.is_absolute() {
                raw.to_path_buf()
            } else {
                dataset_dir.join(raw)
            }
        };
        if !root.is_dir() {
            diagnostics.push(format!(
                "example {}: repository {} not found, skipped",
                example.example_id,
                root.display()
            ));
            skipped += 1;
            continue;
        }
        let graph = graph_for(&mut graphs, &root, options.cache_dir.as_deref())?;
        let unfinished = SourceFile::new(&example.file_path, example.prefix.clone());
        let plan = build_prompt(
            &unfinished,
            None,
            graph,
            options.max_tokens,
            options.scope,
            counter,
        )?;

        let prediction = match predictions.get(&example.example_id) {
            Some(p) => first_line(p).to_string(),
            None => {
                diagnostics.push(format!(
                    "example {}: no prediction supplied, scored as empty",
                    example.example_id
                ));
                String::new()
            }
        };
        let em = exact_match(&prediction, &example.reference);
        let es = edit_similarity(&prediction, &example.reference);
        let (id_em, id_f1) = identifier_match(&prediction, &example.reference);
        records.push(ExampleRecord {
            schema: RECORD_SCHEMA,
            example_id: example.example_id.clone(),
            exact_match: em,
            edit_similarity: es,
            identifier_match: id_em,
            identifier_f1: id_f1,
            generation_ms: plan.generation_ms,
            prediction,
            reference: example.reference.clone(),
        });
    }

    let mut timings: Vec<f64> = records.iter().map(|r| r.generation_ms).collect();
    timings.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
    let report = EvalReport {
        schema: REPORT_SCHEMA,
        total_examples: examples.len(),
        evaluated: records.len(),
        skipped,
        exact_match: mean(
            &records
                .iter()
                .map(|r| if r.exact_match { 1.0 } else { 0.0 })
                .collect::<Vec<_>>(),
        ),
        edit_similarity: mean(&records.iter().map(|r| r.edit_similarity).collect::<Vec<_>>()),
        identifier_match: mean(
            &records
                .iter()
                .map(|r| r.identifier_match)
                .collect::<Vec<_>>(),
        ),
        identifier_f1: mean(&records.iter().map(|r| r.identifier_f1).collect::<Vec<_>>()),
        timing_ms: TimingSummary {
            mean: mean(&timings),
            p50: percentile(&timings, 50.0),
            p95: percentile(&timings, 95.0),
        },
    };
    Ok(EvalOutcome {
        report,
        records,
        diagnostics,
    })
}
