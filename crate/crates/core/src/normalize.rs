//! Transcript text normalization: cleaning, interjection filtering, number
//! canonicalization and GLM token rewriting.
//!
//! The full chain (see [`Normalizer::normalize`]) is designed to be
//! idempotent: running it twice yields the same string. That drives a few
//! deliberate grammar restrictions, noted inline, so that re-parsing a
//! verbalized number can never produce a different spelling.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

#[derive(Debug, Error)]
pub enum NormalizeError {
    #[error("glm line {line}: {reason}")]
    MalformedRule { line: usize, reason: String },
    #[error("cannot read glm file {path}: {source}")]
    GlmRead {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalizerConfig {
    /// Interjections carry meaning in conversational references, so they
    /// survive normalization by default.
    pub keep_interjections: bool,
    pub interjection_set: BTreeSet<String>,
    pub glm_path: Option<PathBuf>,
}

impl Default for NormalizerConfig {
    fn default() -> Self {
        NormalizerConfig {
            keep_interjections: true,
            interjection_set: ["hmm", "mm", "mhm", "mmm", "uh", "um", "oh", "ah"]
                .into_iter()
                .map(str::to_string)
                .collect(),
            glm_path: None,
        }
    }
}

/// Whisper-style cleanup: NFKD with combining marks stripped, lowercased,
/// bracketed/parenthesized spans removed, curly apostrophes mapped to ASCII,
/// hyphens to spaces, and everything dropped except letters, digits,
/// letter-flanked apostrophes and digit-flanked periods (kept so decimals
/// like "3.5" still verbalize as "three point five").
pub fn basic_clean(text: &str) -> String {
    let lowered: String = text
        .nfkd()
        .filter(|c| !is_combining_mark(*c))
        .flat_map(char::to_lowercase)
        .collect();
    let unbracketed = remove_bracketed(&lowered);
    let mapped: Vec<char> = unbracketed
        .chars()
        .map(|c| match c {
            '\u{2018}' | '\u{2019}' => '\'',
            '-' | '\u{2010}' | '\u{2011}' | '\u{2012}' | '\u{2013}' | '\u{2014}' | '\u{2015}' => {
                ' '
            }
            other => other,
        })
        .collect();
    let flanked = |i: usize, pred: fn(char) -> bool| {
        i > 0 && i + 1 < mapped.len() && pred(mapped[i - 1]) && pred(mapped[i + 1])
    };
    let mut kept = String::with_capacity(mapped.len());
    for (i, &c) in mapped.iter().enumerate() {
        let keep = c.is_ascii_lowercase()
            || c.is_ascii_digit()
            || c.is_whitespace()
            || (c == '\'' && flanked(i, |ch| ch.is_ascii_lowercase()))
            || (c == '.' && flanked(i, |ch| ch.is_ascii_digit()));
        if keep {
            kept.push(c);
        }
    }
    collapse_whitespace(&kept)
}

static BRACKETED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\[[^\[\]]*\]|\([^()]*\)").unwrap());

fn remove_bracketed(text: &str) -> String {
    let mut cur = text.to_string();
    loop {
        // innermost-first so nested spans vanish after a few rounds
        let next = BRACKETED.replace_all(&cur, " ").into_owned();
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

fn collapse_whitespace(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Remove standalone interjection words unless the config keeps them.
pub fn filter_interjections(text: &str, cfg: &NormalizerConfig) -> String {
    if cfg.keep_interjections {
        return text.to_string();
    }
    text.split_whitespace()
        .filter(|w| !cfg.interjection_set.contains(*w))
        .collect::<Vec<_>>()
        .join(" ")
}

const UNITS: [&str; 10] =
    ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"];
const TEENS: [&str; 10] = [
    "ten",
    "eleven",
    "twelve",
    "thirteen",
    "fourteen",
    "fifteen",
    "sixteen",
    "seventeen",
    "eighteen",
    "nineteen",
];
const TENS: [&str; 8] =
    ["twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"];

enum NumberWord {
    Zero,
    Unit(u64),
    Teen(u64),
    Tens(u64),
    Hundred,
    Scale(u64),
}

fn number_word(w: &str) -> Option<NumberWord> {
    if w == "zero" {
        return Some(NumberWord::Zero);
    }
    if let Some(i) = UNITS.iter().position(|u| *u == w) {
        return Some(NumberWord::Unit(i as u64));
    }
    if let Some(i) = TEENS.iter().position(|t| *t == w) {
        return Some(NumberWord::Teen(10 + i as u64));
    }
    if let Some(i) = TENS.iter().position(|t| *t == w) {
        return Some(NumberWord::Tens(10 * (i as u64 + 2)));
    }
    match w {
        "hundred" => Some(NumberWord::Hundred),
        "thousand" => Some(NumberWord::Scale(1_000)),
        "million" => Some(NumberWord::Scale(1_000_000)),
        "billion" => Some(NumberWord::Scale(1_000_000_000)),
        _ => None,
    }
}

/// Place-value evaluation of one run of number words. `None` means the run
/// is not a well-formed number and must be left untouched.
fn parse_spelled_run(words: &[&str]) -> Option<u64> {
    if words == ["zero"] {
        return Some(0);
    }
    let mut total: u64 = 0; // finished scale groups
    let mut hundreds: u64 = 0; // "X hundred" part of the current group
    let mut sub: u64 = 0; // sub-hundred part of the current group
    let mut sub_occupied = false;
    let mut sub_allows_unit = false; // right after a tens word
    let mut last_scale = u64::MAX;
    for w in words {
        match number_word(w)? {
            // "zero" only stands alone; inside a run the whole run is invalid
            NumberWord::Zero => return None,
            NumberWord::Unit(v) => {
                if sub_occupied && !sub_allows_unit {
                    return None;
                }
                sub += v;
                sub_occupied = true;
                sub_allows_unit = false;
            }
            NumberWord::Teen(v) => {
                if sub_occupied {
                    return None;
                }
                sub = v;
                sub_occupied = true;
            }
            NumberWord::Tens(v) => {
                if sub_occupied {
                    return None;
                }
                sub = v;
                sub_occupied = true;
                sub_allows_unit = true;
            }
            NumberWord::Hundred => {
                // Only a unit prefix ("five hundred"). Colloquial forms like
                // "twelve hundred" are rejected on purpose: accepting them
                // would let a verbalized number re-parse to a different
                // spelling, breaking idempotence of the full chain.
                if hundreds != 0 || !(1..=9).contains(&sub) {
                    return None;
                }
                hundreds = sub * 100;
                sub = 0;
                sub_occupied = false;
                sub_allows_unit = false;
            }
            NumberWord::Scale(s) => {
                let group = hundreds + sub;
                if group == 0 || s >= last_scale {
                    return None;
                }
                total += group * s;
                hundreds = 0;
                sub = 0;
                sub_occupied = false;
                sub_allows_unit = false;
                last_scale = s;
            }
        }
    }
    Some(total + hundreds + sub)
}

/// Replace maximal runs of spelled number words by digit strings.
/// Invalid runs (bare "hundred", ascending scales, ...) stay untouched.
pub fn parse_spelled_numbers(text: &str) -> String {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let mut out: Vec<String> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if number_word(tokens[i]).is_none() {
            out.push(tokens[i].to_string());
            i += 1;
            continue;
        }
        let mut j = i;
        while j < tokens.len() && number_word(tokens[j]).is_some() {
            j += 1;
        }
        match parse_spelled_run(&tokens[i..j]) {
            Some(n) => out.push(n.to_string()),
            None => out.extend(tokens[i..j].iter().map(|t| t.to_string())),
        }
        i = j;
    }
    out.join(" ")
}

fn sub_hundred(r: u64) -> String {
    debug_assert!((1..=99).contains(&r));
    if r < 10 {
        UNITS[r as usize].to_string()
    } else if r < 20 {
        TEENS[(r - 10) as usize].to_string()
    } else {
        let tens = TENS[(r / 10 - 2) as usize];
        match r % 10 {
            0 => tens.to_string(),
            u => format!("{tens} {}", UNITS[u as usize]),
        }
    }
}

fn three_digit(g: u64) -> String {
    debug_assert!((1..=999).contains(&g));
    let mut parts = Vec::new();
    if g >= 100 {
        parts.push(format!("{} hundred", UNITS[(g / 100) as usize]));
    }
    if g % 100 > 0 {
        parts.push(sub_hundred(g % 100));
    }
    parts.join(" ")
}

/// Cardinal words for 0..10^12−1, space separated, no hyphens or "and".
fn cardinal(n: u64) -> String {
    debug_assert!(n < 1_000_000_000_000);
    if n == 0 {
        return "zero".to_string();
    }
    let mut parts = Vec::new();
    for (word, scale) in
        [("billion", 1_000_000_000), ("million", 1_000_000), ("thousand", 1_000)]
    {
        let g = n / scale % 1_000;
        if g > 0 {
            parts.push(three_digit(g));
            parts.push(word.to_string());
        }
    }
    if n % 1_000 > 0 {
        parts.push(three_digit(n % 1_000));
    }
    parts.join(" ")
}

fn ordinal_word(cardinal_word: &str) -> String {
    match cardinal_word {
        "zero" => "zeroth",
        "one" => "first",
        "two" => "second",
        "three" => "third",
        "five" => "fifth",
        "eight" => "eighth",
        "nine" => "ninth",
        "twelve" => "twelfth",
        w if w.ends_with('y') => return format!("{}ieth", &w[..w.len() - 1]),
        w => return format!("{w}th"),
    }
    .to_string()
}

fn ordinal(n: u64) -> String {
    let card = cardinal(n);
    let mut words: Vec<&str> = card.split(' ').collect();
    let last = ordinal_word(words.pop().unwrap());
    words
        .iter()
        .map(|w| w.to_string())
        .chain(std::iter::once(last))
        .collect::<Vec<_>>()
        .join(" ")
}

fn digit_by_digit(digits: &str) -> String {
    digits
        .chars()
        .map(|c| UNITS[c.to_digit(10).unwrap() as usize])
        .collect::<Vec<_>>()
        .join(" ")
}

fn correct_ordinal_suffix(n: u64) -> &'static str {
    match n % 100 {
        11..=13 => "th",
        _ => match n % 10 {
            1 => "st",
            2 => "nd",
            3 => "rd",
            _ => "th",
        },
    }
}

/// Every all-digit token of ≤12 digits becomes cardinal words; 13+ digits
/// (or a leading zero, where the cardinal would lose information) are read
/// digit by digit. `X.Y` reads as cardinal X "point" digits of Y. Ordinal
/// suffixes are honored when they match the number. Any other token with a
/// digit in it is spelled piecewise.
fn verbalize_token(token: &str) -> Option<String> {
    if !token.bytes().any(|b| b.is_ascii_digit()) {
        return None;
    }
    let as_cardinal = |digits: &str| -> Option<String> {
        if digits.len() > 12 || (digits.len() > 1 && digits.starts_with('0')) {
            None
        } else {
            Some(cardinal(digits.parse().unwrap()))
        }
    };
    if token.bytes().all(|b| b.is_ascii_digit()) {
        return Some(as_cardinal(token).unwrap_or_else(|| digit_by_digit(token)));
    }
    if let Some((int, frac)) = token.split_once('.') {
        let all_digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        if all_digits(int) && all_digits(frac) {
            if let Some(card) = as_cardinal(int) {
                return Some(format!("{card} point {}", digit_by_digit(frac)));
            }
        }
    }
    if token.len() > 2 {
        let (digits, suffix) = token.split_at(token.len() - 2);
        if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) && digits.len() <= 12
        {
            if let Ok(n) = digits.parse::<u64>() {
                if !(digits.len() > 1 && digits.starts_with('0'))
                    && suffix == correct_ordinal_suffix(n)
                {
                    return Some(ordinal(n));
                }
            }
        }
    }
    // mixed token: digits word by word, '.' as "point", other chars kept
    let mut pieces: Vec<String> = Vec::new();
    let mut buf = String::new();
    for c in token.chars() {
        if let Some(d) = c.to_digit(10) {
            if !buf.is_empty() {
                pieces.push(std::mem::take(&mut buf));
            }
            pieces.push(UNITS[d as usize].to_string());
        } else if c == '.' {
            if !buf.is_empty() {
                pieces.push(std::mem::take(&mut buf));
            }
            pieces.push("point".to_string());
        } else {
            buf.push(c);
        }
    }
    if !buf.is_empty() {
        pieces.push(buf);
    }
    Some(pieces.join(" "))
}

pub fn verbalize_numbers(text: &str) -> String {
    text.split_whitespace()
        .map(|t| verbalize_token(t).unwrap_or_else(|| t.to_string()))
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmRule {
    pub lhs: Vec<String>,
    pub rhs: Vec<String>,
}

/// Kaldi-style global mapping rules, kept sorted longest-lhs-first so the
/// matcher can take the first hit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GlmRuleSet {
    rules: Vec<GlmRule>,
}

impl GlmRuleSet {
    pub fn rules(&self) -> &[GlmRule] {
        &self.rules
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }
}

/// Parse `lhs => rhs1 / rhs2 ;; comment` lines. Only the first alternative
/// is kept; `;;`-lines and blank lines are skipped.
pub fn parse_glm(text: &str) -> Result<GlmRuleSet, NormalizeError> {
    let mut rules = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with(";;") {
            continue;
        }
        let Some((lhs, rhs)) = line.split_once("=>") else {
            return Err(NormalizeError::MalformedRule {
                line: line_no,
                reason: "missing '=>'".to_string(),
            });
        };
        let rhs = rhs.split(";;").next().unwrap();
        let rhs = rhs.split('/').next().unwrap();
        let lhs: Vec<String> = lhs.split_whitespace().map(str::to_lowercase).collect();
        let rhs: Vec<String> = rhs.split_whitespace().map(str::to_lowercase).collect();
        if lhs.is_empty() {
            return Err(NormalizeError::MalformedRule {
                line: line_no,
                reason: "empty left-hand side".to_string(),
            });
        }
        rules.push(GlmRule { lhs, rhs });
    }
    // stable sort: equal lengths keep file order
    rules.sort_by_key(|r| std::cmp::Reverse(r.lhs.len()));
    Ok(GlmRuleSet { rules })
}

/// One left-to-right pass; at each token the longest matching lhs fires and
/// the cursor jumps past it, so replacements are never rewritten.
pub fn apply_glm(text: &str, rules: &GlmRuleSet) -> String {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let lowered: Vec<String> = tokens.iter().map(|t| t.to_lowercase()).collect();
    let mut out: Vec<String> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let hit = rules.rules.iter().find(|r| {
            r.lhs.len() <= tokens.len() - i
                && r.lhs.iter().zip(&lowered[i..]).all(|(a, b)| a == b)
        });
        match hit {
            Some(rule) => {
                out.extend(rule.rhs.iter().cloned());
                i += rule.lhs.len();
            }
            None => {
                out.push(tokens[i].to_string());
                i += 1;
            }
        }
    }
    out.join(" ")
}

/// The full chain with the GLM file (if any) loaded once up front.
#[derive(Debug, Clone, Default)]
pub struct Normalizer {
    cfg: NormalizerConfig,
    glm: Option<GlmRuleSet>,
}

impl Normalizer {
    pub fn new(cfg: NormalizerConfig) -> Result<Self, NormalizeError> {
        let glm = match &cfg.glm_path {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|source| NormalizeError::GlmRead { path: path.clone(), source })?;
                Some(parse_glm(&text)?)
            }
            None => None,
        };
        Ok(Normalizer { cfg, glm })
    }

    /// Build with an already-parsed rule set (no file IO).
    pub fn with_rules(cfg: NormalizerConfig, glm: Option<GlmRuleSet>) -> Self {
        Normalizer { cfg, glm }
    }

    /// basic_clean → filter_interjections → parse_spelled_numbers →
    /// verbalize_numbers → apply_glm → collapse.
    ///
    /// Idempotent as long as GLM right-hand sides are themselves normalized
    /// words, which holds for real-world mapping files.
    pub fn normalize(&self, text: &str) -> String {
        let cleaned = basic_clean(text);
        let kept = filter_interjections(&cleaned, &self.cfg);
        let parsed = parse_spelled_numbers(&kept);
        let verbal = verbalize_numbers(&parsed);
        let mapped = match &self.glm {
            Some(rules) => apply_glm(&verbal, rules),
            None => verbal,
        };
        collapse_whitespace(&mapped)
    }
}

/// One-shot convenience around [`Normalizer`].
pub fn normalize(text: &str, cfg: &NormalizerConfig) -> Result<String, NormalizeError> {
    Ok(Normalizer::new(cfg.clone())?.normalize(text))
}
