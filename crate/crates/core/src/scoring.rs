//! Word error rate: minimum-edit alignment, per-file and pooled corpus
//! aggregation, table/diff rendering and the pairs-file conventions.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::error::ParseError;
use crate::normalize::{Normalizer, NormalizerConfig, NormalizeError};

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("duplicate file id {id:?}")]
    DuplicateId { id: String },
    #[error(transparent)]
    Normalize(#[from] NormalizeError),
}

#[derive(Debug, Error)]
pub enum PairsError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{path} has no matching counterpart file")]
    MissingCounterpart { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Match,
    Substitute,
    Delete,
    Insert,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EditCounts {
    pub hits: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub ref_len: usize,
}

impl EditCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    pub fn add(&mut self, other: &EditCounts) {
        self.hits += other.hits;
        self.substitutions += other.substitutions;
        self.deletions += other.deletions;
        self.insertions += other.insertions;
        self.ref_len += other.ref_len;
    }
}

/// Unit-cost Levenshtein alignment. The backtrack prefers
/// match > substitution > deletion > insertion, which pins down a unique op
/// sequence (replaying ref → hyp) for any input pair.
pub fn edit_align<T: PartialEq>(ref_words: &[T], hyp_words: &[T]) -> (EditCounts, Vec<EditOp>) {
    let (r, h) = (ref_words.len(), hyp_words.len());
    let cols = h + 1;
    let mut dp = vec![0u32; (r + 1) * cols];
    for (j, cell) in dp.iter_mut().enumerate().take(cols) {
        *cell = j as u32;
    }
    for i in 1..=r {
        dp[i * cols] = i as u32;
        for j in 1..=h {
            let diag = dp[(i - 1) * cols + j - 1]
                + if ref_words[i - 1] == hyp_words[j - 1] { 0 } else { 1 };
            let del = dp[(i - 1) * cols + j] + 1;
            let ins = dp[i * cols + j - 1] + 1;
            dp[i * cols + j] = diag.min(del).min(ins);
        }
    }

    let mut ops = Vec::with_capacity(r.max(h));
    let (mut i, mut j) = (r, h);
    while i > 0 || j > 0 {
        let cost = dp[i * cols + j];
        if i > 0 && j > 0 && ref_words[i - 1] == hyp_words[j - 1] && dp[(i - 1) * cols + j - 1] == cost
        {
            ops.push(EditOp::Match);
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && dp[(i - 1) * cols + j - 1] + 1 == cost {
            ops.push(EditOp::Substitute);
            i -= 1;
            j -= 1;
        } else if i > 0 && dp[(i - 1) * cols + j] + 1 == cost {
            ops.push(EditOp::Delete);
            i -= 1;
        } else {
            ops.push(EditOp::Insert);
            j -= 1;
        }
    }
    ops.reverse();

    let mut counts = EditCounts { ref_len: r, ..Default::default() };
    for op in &ops {
        match op {
            EditOp::Match => counts.hits += 1,
            EditOp::Substitute => counts.substitutions += 1,
            EditOp::Delete => counts.deletions += 1,
            EditOp::Insert => counts.insertions += 1,
        }
    }
    (counts, ops)
}

/// WER over zero reference words is undefined unless there were no
/// insertions either; the tagged case keeps the insertion count visible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WerValue {
    Ratio(f64),
    UndefinedRef { insertions: usize },
}

impl WerValue {
    pub fn fraction(&self) -> Option<f64> {
        match self {
            WerValue::Ratio(v) => Some(*v),
            WerValue::UndefinedRef { .. } => None,
        }
    }

    /// One-decimal percentage, "n/a" for the undefined case.
    pub fn percent_string(&self) -> String {
        match self {
            WerValue::Ratio(v) => format!("{:.1}", v * 100.0),
            WerValue::UndefinedRef { .. } => "n/a".to_string(),
        }
    }
}

pub fn wer(counts: &EditCounts) -> WerValue {
    if counts.ref_len == 0 {
        if counts.insertions == 0 {
            WerValue::Ratio(0.0)
        } else {
            WerValue::UndefinedRef { insertions: counts.insertions }
        }
    } else {
        WerValue::Ratio(counts.errors() as f64 / counts.ref_len as f64)
    }
}

/// Input to corpus scoring: one reference/hypothesis text pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScorePair {
    pub id: String,
    pub reference: String,
    pub hypothesis: String,
}

/// Per-file result, carrying the aligned tokens so diffs can be rendered
/// without re-running the DP.
#[derive(Debug, Clone)]
pub struct FileScore {
    pub id: String,
    pub counts: EditCounts,
    pub wer: WerValue,
    pub ref_tokens: Vec<String>,
    pub hyp_tokens: Vec<String>,
    pub ops: Vec<EditOp>,
}

#[derive(Debug, Clone)]
pub struct WerReport {
    pub per_file: Vec<FileScore>,
    pub aggregate: EditCounts,
    pub normalized_refs: bool,
    pub normalized_hyps: bool,
}

impl WerReport {
    /// Pooled corpus WER: Σ errors / Σ ref_len, never a mean of ratios.
    pub fn corpus_wer(&self) -> WerValue {
        wer(&self.aggregate)
    }

    /// Mean of the per-file WERs that are defined, for comparison against
    /// the pooled value.
    pub fn mean_file_wer(&self) -> Option<f64> {
        let defined: Vec<f64> = self.per_file.iter().filter_map(|f| f.wer.fraction()).collect();
        if defined.is_empty() {
            None
        } else {
            Some(defined.iter().sum::<f64>() / defined.len() as f64)
        }
    }

    pub fn undefined_files(&self) -> usize {
        self.per_file.iter().filter(|f| f.wer.fraction().is_none()).count()
    }
}

/// Score a corpus of pairs, normalizing the selected sides first
/// (both by default). Files are scored in parallel; output order follows
/// the input order.
pub fn score_corpus(
    pairs: &[ScorePair],
    cfg: &NormalizerConfig,
    normalize_refs: bool,
    normalize_hyps: bool,
) -> Result<WerReport, ScoringError> {
    let mut seen = HashSet::new();
    for pair in pairs {
        if !seen.insert(pair.id.as_str()) {
            return Err(ScoringError::DuplicateId { id: pair.id.clone() });
        }
    }
    let normalizer = Normalizer::new(cfg.clone())?;
    let tokens = |text: &str, normalize: bool| -> Vec<String> {
        let text = if normalize { normalizer.normalize(text) } else { text.to_string() };
        text.split_whitespace().map(str::to_string).collect()
    };
    let per_file: Vec<FileScore> = pairs
        .par_iter()
        .map(|pair| {
            let ref_tokens = tokens(&pair.reference, normalize_refs);
            let hyp_tokens = tokens(&pair.hypothesis, normalize_hyps);
            let (counts, ops) = edit_align(&ref_tokens, &hyp_tokens);
            FileScore { id: pair.id.clone(), counts, wer: wer(&counts), ref_tokens, hyp_tokens, ops }
        })
        .collect();
    let mut aggregate = EditCounts::default();
    for f in &per_file {
        aggregate.add(&f.counts);
    }
    Ok(WerReport {
        per_file,
        aggregate,
        normalized_refs: normalize_refs,
        normalized_hyps: normalize_hyps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableStyle {
    Plain,
    Markdown,
}

fn render_table(headers: &[&str], rows: &[Vec<String>], style: TableStyle) -> String {
    match style {
        TableStyle::Markdown => {
            let mut out = format!("| {} |\n", headers.join(" | "));
            out.push_str(&format!("|{}\n", " --- |".repeat(headers.len())));
            for row in rows {
                out.push_str(&format!("| {} |\n", row.join(" | ")));
            }
            out
        }
        TableStyle::Plain => {
            let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
            for row in rows {
                for (w, cell) in widths.iter_mut().zip(row) {
                    *w = (*w).max(cell.chars().count());
                }
            }
            let mut out = String::new();
            let mut push_row = |cells: Vec<&str>| {
                let line: Vec<String> = cells
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        if i == 0 {
                            format!("{c:<width$}", width = widths[0])
                        } else {
                            format!("{c:>width$}", width = widths[i])
                        }
                    })
                    .collect();
                out.push_str(line.join("  ").trim_end());
                out.push('\n');
            };
            push_row(headers.to_vec());
            for row in rows {
                push_row(row.iter().map(String::as_str).collect());
            }
            out
        }
    }
}

/// Per-file rows plus an aggregate "all" row, WER as one-decimal percent.
pub fn render_report(report: &WerReport, style: TableStyle) -> String {
    let mut rows: Vec<Vec<String>> = report
        .per_file
        .iter()
        .map(|f| vec![f.id.clone(), f.wer.percent_string()])
        .collect();
    rows.push(vec!["all".to_string(), report.corpus_wer().percent_string()]);
    render_table(&["file", "wer%"], &rows, style)
}

/// Two value columns, one report per normalization mode.
pub fn render_before_after(before: &WerReport, after: &WerReport, style: TableStyle) -> String {
    debug_assert_eq!(before.per_file.len(), after.per_file.len());
    let mut rows: Vec<Vec<String>> = before
        .per_file
        .iter()
        .zip(&after.per_file)
        .map(|(b, a)| {
            debug_assert_eq!(b.id, a.id);
            vec![b.id.clone(), b.wer.percent_string(), a.wer.percent_string()]
        })
        .collect();
    rows.push(vec![
        "all".to_string(),
        before.corpus_wer().percent_string(),
        after.corpus_wer().percent_string(),
    ]);
    render_table(&["file", "before%", "after%"], &rows, style)
}

/// Machine-readable report: header key=value lines, a TSV block of per-file
/// counts, a total row, then summary key=value lines. Stable ordering and
/// formatting so repeated runs are byte-identical.
pub fn render_machine_report(report: &WerReport, mode: Option<&str>) -> String {
    let mut out = String::from("report_version=1\n");
    if let Some(mode) = mode {
        out.push_str(&format!("mode={mode}\n"));
    }
    out.push_str(&format!("normalize_refs={}\n", report.normalized_refs));
    out.push_str(&format!("normalize_hyps={}\n", report.normalized_hyps));
    out.push_str(&format!("files={}\n", report.per_file.len()));
    out.push_str("id\tref_len\thits\tsubstitutions\tdeletions\tinsertions\twer_pct\n");
    let row = |id: &str, c: &EditCounts, w: &WerValue| {
        format!(
            "{id}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            c.ref_len,
            c.hits,
            c.substitutions,
            c.deletions,
            c.insertions,
            w.percent_string()
        )
    };
    for f in &report.per_file {
        out.push_str(&row(&f.id, &f.counts, &f.wer));
    }
    out.push_str(&row("total", &report.aggregate, &report.corpus_wer()));
    out.push_str(&format!(
        "corpus_wer_pct={}\n",
        report.corpus_wer().percent_string()
    ));
    out.push_str(&format!(
        "mean_file_wer_pct={}\n",
        report
            .mean_file_wer()
            .map(|v| format!("{:.1}", v * 100.0))
            .unwrap_or_else(|| "n/a".to_string())
    ));
    out.push_str(&format!("undefined_files={}\n", report.undefined_files()));
    out
}

/// Two-row GT/PRED view of one alignment: substitutions as `*word*`,
/// deletions as `-word-` on the GT row, insertions as `+word+` on the PRED
/// row, columns padded so the rows line up.
pub fn render_diff(ref_tokens: &[String], hyp_tokens: &[String], ops: &[EditOp]) -> String {
    let mut gt_cells: Vec<String> = Vec::with_capacity(ops.len());
    let mut pred_cells: Vec<String> = Vec::with_capacity(ops.len());
    let (mut i, mut j) = (0, 0);
    for op in ops {
        let (g, p) = match op {
            EditOp::Match => {
                let cell = ref_tokens[i].clone();
                i += 1;
                j += 1;
                (cell.clone(), cell)
            }
            EditOp::Substitute => {
                let g = format!("*{}*", ref_tokens[i]);
                let p = format!("*{}*", hyp_tokens[j]);
                i += 1;
                j += 1;
                (g, p)
            }
            EditOp::Delete => {
                let g = format!("-{}-", ref_tokens[i]);
                i += 1;
                (g, String::new())
            }
            EditOp::Insert => {
                let p = format!("+{}+", hyp_tokens[j]);
                j += 1;
                (String::new(), p)
            }
        };
        let width = g.chars().count().max(p.chars().count());
        gt_cells.push(format!("{g:<width$}"));
        pred_cells.push(format!("{p:<width$}"));
    }
    let gt = format!("GT:   {}", gt_cells.join(" "));
    let pred = format!("PRED: {}", pred_cells.join(" "));
    format!("{}\n{}\n", gt.trim_end(), pred.trim_end())
}

/// Pairs file: `id<TAB>ref_path<TAB>hyp_path` per line; relative paths are
/// resolved against the pairs file's directory.
pub fn load_pairs_file(path: &Path) -> Result<Vec<ScorePair>, PairsError> {
    let read = |p: &Path| {
        std::fs::read_to_string(p).map_err(|source| PairsError::Io { path: p.to_path_buf(), source })
    };
    let text = read(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [id, ref_path, hyp_path] = fields.as_slice() else {
            return Err(ParseError::new(
                "pairs file",
                line_no,
                "expected id<TAB>ref_path<TAB>hyp_path",
            )
            .into());
        };
        let resolve = |p: &str| {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };
        pairs.push(ScorePair {
            id: id.to_string(),
            reference: read(&resolve(ref_path))?,
            hypothesis: read(&resolve(hyp_path))?,
        });
    }
    Ok(pairs)
}

/// Directory convention: every `<id>.ref.txt` pairs with `<id>.hyp.txt`.
/// Ids are sorted for deterministic output; a file missing its counterpart
/// is an error.
pub fn load_pairs_dir(dir: &Path) -> Result<Vec<ScorePair>, PairsError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|source| PairsError::Io { path: dir.to_path_buf(), source })?;
    let mut ref_ids = Vec::new();
    let mut hyp_ids = HashSet::new();
    for entry in entries {
        let entry = entry.map_err(|source| PairsError::Io { path: dir.to_path_buf(), source })?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(id) = name.strip_suffix(".ref.txt") {
            ref_ids.push(id.to_string());
        } else if let Some(id) = name.strip_suffix(".hyp.txt") {
            hyp_ids.insert(id.to_string());
        }
    }
    ref_ids.sort();
    let mut pairs = Vec::new();
    for id in &ref_ids {
        let hyp_path = dir.join(format!("{id}.hyp.txt"));
        if !hyp_ids.remove(id.as_str()) {
            return Err(PairsError::MissingCounterpart { path: hyp_path });
        }
        let read = |p: PathBuf| {
            std::fs::read_to_string(&p).map_err(|source| PairsError::Io { path: p, source })
        };
        pairs.push(ScorePair {
            id: id.clone(),
            reference: read(dir.join(format!("{id}.ref.txt")))?,
            hypothesis: read(hyp_path)?,
        });
    }
    if let Some(id) = hyp_ids.into_iter().min() {
        return Err(PairsError::MissingCounterpart { path: dir.join(format!("{id}.ref.txt")) });
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn identity_alignment() {
        let (counts, ops) = edit_align(&words("a b c"), &words("a b c"));
        assert_eq!(counts, EditCounts { hits: 3, ref_len: 3, ..Default::default() });
        assert_eq!(ops, vec![EditOp::Match; 3]);
    }

    #[test]
    fn substitution_alignment() {
        let (counts, ops) = edit_align(&words("a b c"), &words("a x c"));
        assert_eq!(counts.substitutions, 1);
        assert_eq!(ops, vec![EditOp::Match, EditOp::Substitute, EditOp::Match]);
        assert_eq!(wer(&counts), WerValue::Ratio(1.0 / 3.0));
    }

    #[test]
    fn insertions_can_coexist_with_full_hits() {
        let (counts, ops) = edit_align(&words("a b"), &words("a x b y"));
        assert_eq!(counts.hits, 2);
        assert_eq!(counts.insertions, 2);
        assert_eq!(ops, vec![EditOp::Match, EditOp::Insert, EditOp::Match, EditOp::Insert]);
        assert_eq!(wer(&counts), WerValue::Ratio(1.0)); // 2 errors / 2 ref words
    }

    #[test]
    fn count_identities_hold() {
        for (r, h) in [("a b c", "a x c"), ("", "x y"), ("a a a", ""), ("x y z", "z y x")] {
            let (rw, hw) = (words(r), words(h));
            let (c, ops) = edit_align(&rw, &hw);
            assert_eq!(c.hits + c.substitutions + c.deletions, rw.len());
            assert_eq!(c.hits + c.substitutions + c.insertions, hw.len());
            assert_eq!(ops.len(), c.hits + c.substitutions + c.deletions + c.insertions);
            assert!(c.errors() <= rw.len().max(hw.len()));
        }
    }

    #[test]
    fn wer_of_empty_reference() {
        assert_eq!(wer(&EditCounts::default()), WerValue::Ratio(0.0));
        let counts = EditCounts { insertions: 2, ..Default::default() };
        assert_eq!(wer(&counts), WerValue::UndefinedRef { insertions: 2 });
    }

    fn pair(id: &str, r: &str, h: &str) -> ScorePair {
        ScorePair { id: id.to_string(), reference: r.to_string(), hypothesis: h.to_string() }
    }

    #[test]
    fn corpus_wer_pools_counts() {
        let pairs = [
            pair("a", "w x", "w y"),                        // 1 error / 2 ref
            pair("b", "a b c d e f g h", "a b c d e f g h"), // 0 / 8
        ];
        let report = score_corpus(&pairs, &NormalizerConfig::default(), true, true).unwrap();
        assert_eq!(report.corpus_wer(), WerValue::Ratio(0.1));
        assert_eq!(report.mean_file_wer(), Some(0.25));
    }

    #[test]
    fn normalization_equalizes_number_pair() {
        let pairs = [pair("a", "I have 1 cat.", "i have one cat")];
        let report = score_corpus(&pairs, &NormalizerConfig::default(), true, true).unwrap();
        assert_eq!(report.corpus_wer(), WerValue::Ratio(0.0));
        let raw = score_corpus(&pairs, &NormalizerConfig::default(), false, false).unwrap();
        assert!(raw.corpus_wer().fraction().unwrap() > 0.0);
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let pairs = [pair("a", "x", "x"), pair("a", "y", "y")];
        assert!(matches!(
            score_corpus(&pairs, &NormalizerConfig::default(), true, true),
            Err(ScoringError::DuplicateId { .. })
        ));
    }

    #[test]
    fn report_rendering_formats_percentages() {
        let report = score_corpus(&[], &NormalizerConfig::default(), true, true).unwrap();
        assert_eq!(render_report(&report, TableStyle::Plain), "file  wer%\nall    0.0\n");

        let counts = EditCounts { hits: 44, substitutions: 56, ref_len: 100, ..Default::default() };
        let report = WerReport {
            per_file: vec![FileScore {
                id: "test".to_string(),
                counts,
                wer: wer(&counts),
                ref_tokens: vec![],
                hyp_tokens: vec![],
                ops: vec![],
            }],
            aggregate: counts,
            normalized_refs: true,
            normalized_hyps: true,
        };
        let table = render_report(&report, TableStyle::Plain);
        assert!(table.contains("56.0"), "got table:\n{table}");
        let md = render_report(&report, TableStyle::Markdown);
        assert!(md.starts_with("| file | wer% |"));
        assert!(md.contains("| all | 56.0 |"));
    }

    #[test]
    fn before_after_table_has_two_value_columns() {
        let pairs = [pair("a", "I have 1 cat.", "i have one cat")];
        let cfg = NormalizerConfig::default();
        let before = score_corpus(&pairs, &cfg, false, false).unwrap();
        let after = score_corpus(&pairs, &cfg, true, true).unwrap();
        let table = render_before_after(&before, &after, TableStyle::Plain);
        let header = table.lines().next().unwrap();
        assert!(header.contains("before%") && header.contains("after%"));
        assert!(table.lines().last().unwrap().starts_with("all"));
        assert!(table.lines().last().unwrap().ends_with("0.0"));
    }

    #[test]
    fn machine_report_is_stable_and_complete() {
        let pairs = [pair("a", "w x", "w y")];
        let report = score_corpus(&pairs, &NormalizerConfig::default(), true, true).unwrap();
        let text = render_machine_report(&report, Some("after"));
        assert!(text.contains("mode=after\n"));
        assert!(text.contains("a\t2\t1\t1\t0\t0\t50.0\n"));
        assert!(text.contains("total\t2\t1\t1\t0\t0\t50.0\n"));
        assert!(text.contains("corpus_wer_pct=50.0\n"));
        assert_eq!(text, render_machine_report(&report, Some("after")));
    }

    #[test]
    fn diff_marks_substitutions_insertions_deletions() {
        let (r, h) = (words("a b c"), words("a x c"));
        let (_, ops) = edit_align(&r, &h);
        assert_eq!(render_diff(&r, &h, &ops), "GT:   a *b* c\nPRED: a *x* c\n");

        let (r, h) = (words("a b"), words("a x b y"));
        let (_, ops) = edit_align(&r, &h);
        assert_eq!(render_diff(&r, &h, &ops), "GT:   a     b\nPRED: a +x+ b +y+\n");

        let (r, h) = (words("a b c"), words("a c"));
        let (_, ops) = edit_align(&r, &h);
        assert_eq!(render_diff(&r, &h, &ops), "GT:   a -b- c\nPRED: a     c\n");

        let (r, h) = (words("same words"), words("same words"));
        let (_, ops) = edit_align(&r, &h);
        assert_eq!(render_diff(&r, &h, &ops), "GT:   same words\nPRED: same words\n");
    }

    #[test]
    fn pairs_file_and_dir_loaders() {
        let dir = tempfile::tempdir().unwrap();
        let p = |name: &str, content: &str| {
            let path = dir.path().join(name);
            std::fs::write(&path, content).unwrap();
            path
        };
        p("x.ref.txt", "a b");
        p("x.hyp.txt", "a b");
        p("y.ref.txt", "c");
        p("y.hyp.txt", "d");
        let pairs = load_pairs_dir(dir.path()).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].id, "x"); // sorted by id
        assert_eq!(pairs[1].hypothesis, "d");

        let pairs_file = p("pairs.tsv", "x\tx.ref.txt\tx.hyp.txt\ny\ty.ref.txt\ty.hyp.txt\n");
        let pairs = load_pairs_file(&pairs_file).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[0].reference, "a b");

        p("z.ref.txt", "lonely");
        assert!(matches!(load_pairs_dir(dir.path()), Err(PairsError::MissingCounterpart { .. })));
    }
}
