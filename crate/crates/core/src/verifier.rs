//! Final-answer extraction, normalization, grading against gold answers, and
//! the debate majority-vote operator.
//!
//! Normalization does limited LaTeX cleanup plus exact-rational
//! canonicalization — enough to pool "0.5", "1/2" and "\frac{1}{2}" — and
//! deliberately stops short of symbolic algebra.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::trace::{Problem, TaskKind, TokenRecord};

const BOXED_MARKER: &str = "\\boxed{";
const FRACTION_MARKERS: [&str; 2] = ["\\frac{", "\\dfrac{"];

/// A boxed answer pulled out of generated text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtractedAnswer {
    /// Content of the boxed group, verbatim.
    pub raw: String,
    /// Canonical comparison form of `raw`.
    pub normalized: String,
    /// (first, last) indices of the tokens covering the raw content, when the
    /// producing trajectory's tokens are known.
    pub answer_token_span: Option<(usize, usize)>,
}

/// Finds the last `\boxed{…}` group with balanced braces; earlier occurrences
/// are tried when a later one never closes. Returns `None` when no balanced
/// group exists.
pub fn extract_boxed(
    text: &str,
    tokens: &[TokenRecord],
    task_kind: TaskKind,
) -> Option<ExtractedAnswer> {
    let starts: Vec<usize> = text.match_indices(BOXED_MARKER).map(|(i, _)| i).collect();
    for &marker in starts.iter().rev() {
        let content_start = marker + BOXED_MARKER.len();
        if let Some(content_end) = balanced_group_end(text, content_start) {
            let raw = &text[content_start..content_end];
            return Some(ExtractedAnswer {
                raw: raw.to_string(),
                normalized: normalize(raw, task_kind),
                answer_token_span: token_span(tokens, content_start, content_end),
            });
        }
    }
    None
}

/// Byte index of the `}` closing a group whose content starts at `start`
/// (depth already 1), or `None` if the group never closes.
fn balanced_group_end(text: &str, start: usize) -> Option<usize> {
    let mut depth = 1usize;
    // Braces are ASCII, so byte scanning is UTF-8 safe.
    for (offset, byte) in text.as_bytes()[start..].iter().enumerate() {
        match byte {
            b'{' => depth += 1,
            b'}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(start + offset);
                }
            }
            _ => {}
        }
    }
    None
}

/// Token indices whose text overlaps the byte range [start, end) of the
/// concatenated trajectory text.
fn token_span(tokens: &[TokenRecord], start: usize, end: usize) -> Option<(usize, usize)> {
    let mut first = None;
    let mut last = None;
    let mut offset = 0usize;
    for (i, tok) in tokens.iter().enumerate() {
        let tok_start = offset;
        offset += tok.token_text.len();
        if offset > start && tok_start < end {
            first.get_or_insert(i);
            last = Some(i);
        }
    }
    Some((first?, last?))
}

/// Canonical comparison form: trims whitespace, strips enclosing `$…$`/`{…}`,
/// rewrites simple `\frac{a}{b}` to `a/b`, lowercases multiple-choice answers,
/// and re-emits exact rationals (integers, decimals, fractions) canonically.
pub fn normalize(raw: &str, task_kind: TaskKind) -> String {
    let mut s = raw.trim().to_string();
    loop {
        let stripped = strip_one_enclosure(&s);
        if stripped == s {
            break;
        }
        s = stripped;
    }
    s = rewrite_fractions(&s);
    if task_kind == TaskKind::MultipleChoice {
        s = s.to_lowercase();
    }
    if let Some(canonical) = canonical_rational(&s) {
        return canonical;
    }
    if s.is_empty() && !raw.is_empty() {
        // Keep "normalized non-empty iff raw non-empty": cleaning reduced the
        // answer to nothing, so fall back to the raw form.
        return raw.to_string();
    }
    s
}

fn strip_one_enclosure(s: &str) -> String {
    let bytes = s.as_bytes();
    if bytes.len() >= 2 && bytes[0] == b'$' && bytes[bytes.len() - 1] == b'$' {
        return s[1..s.len() - 1].trim().to_string();
    }
    if bytes.len() >= 2 && bytes[0] == b'{' && bytes[bytes.len() - 1] == b'}' {
        // Strip only if the opening brace closes at the final byte.
        if balanced_group_end(s, 1) == Some(s.len() - 1) {
            return s[1..s.len() - 1].trim().to_string();
        }
    }
    s.to_string()
}

/// Replaces every balanced `\frac{A}{B}` (and `\dfrac`) with `A/B`, repeatedly
/// so nested fractions resolve inside-out. Malformed fractions are left alone.
fn rewrite_fractions(s: &str) -> String {
    let mut out = s.to_string();
    for _ in 0..32 {
        let Some((marker, idx)) = FRACTION_MARKERS
            .iter()
            .filter_map(|m| out.find(m).map(|i| (*m, i)))
            .min_by_key(|(_, i)| *i)
        else {
            break;
        };
        let a_start = idx + marker.len();
        let Some(a_end) = balanced_group_end(&out, a_start) else {
            break;
        };
        if out.as_bytes().get(a_end + 1) != Some(&b'{') {
            break;
        }
        let b_start = a_end + 2;
        let Some(b_end) = balanced_group_end(&out, b_start) else {
            break;
        };
        let replacement = format!("{}/{}", &out[a_start..a_end], &out[b_start..b_end]);
        out.replace_range(idx..=b_end, &replacement);
    }
    out
}

/// Parses an exact rational (integer, decimal, or a/b with either form on
/// each side) and re-emits it reduced, with a positive denominator; integers
/// come out bare. Non-numeric strings return `None`.
fn canonical_rational(s: &str) -> Option<String> {
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let (numer, denom) = match compact.split_once('/') {
        Some((a, b)) => {
            let (an, ad) = parse_decimal(a)?;
            let (bn, bd) = parse_decimal(b)?;
            if bn.is_zero() {
                return None;
            }
            (an * bd, ad * bn)
        }
        None => parse_decimal(&compact)?,
    };
    if denom.is_zero() {
        return None;
    }
    let mut numer = numer;
    let mut denom = denom;
    if denom.is_negative() {
        numer = -numer;
        denom = -denom;
    }
    let g = numer.gcd(&denom);
    if !g.is_zero() {
        numer /= &g;
        denom /= &g;
    }
    if numer.is_zero() {
        return Some("0".to_string());
    }
    if denom.is_one() {
        Some(numer.to_string())
    } else {
        Some(format!("{numer}/{denom}"))
    }
}

/// Parses `[+-]?digits[.digits]` into an exact (numerator, denominator) pair.
fn parse_decimal(s: &str) -> Option<(BigInt, BigInt)> {
    let (sign, digits) = match s.as_bytes().first()? {
        b'-' => (-1, &s[1..]),
        b'+' => (1, &s[1..]),
        _ => (1, s),
    };
    if digits.is_empty() {
        return None;
    }
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit())
        || !frac_part.bytes().all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let mut all_digits = String::with_capacity(int_part.len() + frac_part.len());
    all_digits.push_str(int_part);
    all_digits.push_str(frac_part);
    if all_digits.is_empty() {
        return None;
    }
    let numer = BigInt::parse_bytes(all_digits.as_bytes(), 10)? * sign;
    let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
    Some((numer, denom))
}

/// `None` extraction grades false; otherwise normalized equality (rationals
/// already compare canonically through [`normalize`]).
pub fn grade(extracted: Option<&ExtractedAnswer>, gold: &str, task_kind: TaskKind) -> bool {
    match extracted {
        None => false,
        Some(e) => e.normalized == normalize(gold, task_kind),
    }
}

/// Grades against a problem, honouring the dataset's pre-graded external
/// verdict when present (code tasks graded outside this pipeline).
pub fn grade_problem(extracted: Option<&ExtractedAnswer>, problem: &Problem) -> bool {
    if let Some(verdict) = problem.external_verdict {
        return verdict;
    }
    grade(extracted, &problem.gold_answer, problem.task_kind)
}

/// The debate voting operator 𝒱: most frequent non-`None` answer; ties go to
/// the answer first produced by the lowest-indexed agent; all `None` → `None`.
pub fn majority_vote(answers: &[Option<String>]) -> Option<String> {
    let mut tally: Vec<(&str, usize, usize)> = Vec::new();
    for (idx, answer) in answers.iter().enumerate() {
        let Some(answer) = answer else { continue };
        match tally.iter_mut().find(|(a, _, _)| a == answer) {
            Some(entry) => entry.1 += 1,
            None => tally.push((answer, 1, idx)),
        }
    }
    tally
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)))
        .map(|(answer, _, _)| answer.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tokens_for(text: &str, chunk: usize) -> Vec<TokenRecord> {
        let mut tokens = Vec::new();
        let chars: Vec<char> = text.chars().collect();
        for piece in chars.chunks(chunk) {
            tokens.push(TokenRecord {
                token_text: piece.iter().collect(),
                entropy: 0.0,
                top_logprobs: None,
                truncation_k: None,
            });
        }
        tokens
    }

    #[test]
    fn extracts_last_boxed_group() {
        let text = "first \\boxed{1} then Final Answer: \\boxed{70}";
        let e = extract_boxed(text, &[], TaskKind::Math).unwrap();
        assert_eq!(e.raw, "70");
        assert_eq!(e.normalized, "70");
    }

    #[test]
    fn no_box_means_none() {
        assert!(extract_boxed("no box here", &[], TaskKind::Math).is_none());
    }

    #[test]
    fn nested_braces_balance() {
        let e = extract_boxed("\\boxed{\\frac{1}{2}}", &[], TaskKind::Math).unwrap();
        assert_eq!(e.raw, "\\frac{1}{2}");
        assert_eq!(e.normalized, "1/2");
    }

    #[test]
    fn unbalanced_last_box_falls_back_to_earlier() {
        let e = extract_boxed("\\boxed{42} junk \\boxed{oops", &[], TaskKind::Math).unwrap();
        assert_eq!(e.raw, "42");
    }

    #[test]
    fn token_span_covers_answer() {
        let text = "answer is \\boxed{70}!";
        let tokens = tokens_for(text, 3);
        let e = extract_boxed(text, &tokens, TaskKind::Math).unwrap();
        let (a, b) = e.answer_token_span.unwrap();
        let covered: String = tokens[a..=b]
            .iter()
            .map(|t| t.token_text.as_str())
            .collect();
        assert!(covered.contains("70"));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize(" 70 ", TaskKind::Math), "70");
        assert_eq!(normalize("\\frac{1}{2}", TaskKind::Math), "1/2");
        assert_eq!(normalize("$\\frac{2}{4}$", TaskKind::Math), "1/2");
        assert_eq!(normalize("0.5", TaskKind::Math), "1/2");
        assert_eq!(normalize("-0.25", TaskKind::Math), "-1/4");
        assert_eq!(normalize("{A}", TaskKind::MultipleChoice), "a");
        assert_eq!(
            normalize("B", TaskKind::MultipleChoice),
            normalize("b", TaskKind::MultipleChoice)
        );
        assert_eq!(normalize("3.50", TaskKind::Math), "7/2");
        assert_eq!(normalize("+070", TaskKind::Math), "70");
        assert_eq!(normalize("-0", TaskKind::Math), "0");
        assert_eq!(normalize("1/0", TaskKind::Math), "1/0"); // not a rational; cleaned string
        assert_eq!(normalize("x + 1", TaskKind::Math), "x + 1");
    }

    #[test]
    fn grade_examples() {
        let e = extract_boxed("Final Answer: \\boxed{70}", &[], TaskKind::Math);
        assert!(grade(e.as_ref(), "70", TaskKind::Math));
        assert!(!grade(None, "70", TaskKind::Math));
        let half = extract_boxed("\\boxed{0.5}", &[], TaskKind::Math);
        assert!(grade(half.as_ref(), "1/2", TaskKind::Math));
    }

    #[test]
    fn external_verdict_overrides_grading() {
        let mut p = Problem {
            id: "p".into(),
            question: "q".into(),
            gold_answer: "70".into(),
            task_kind: TaskKind::Math,
            external_verdict: Some(true),
        };
        assert!(grade_problem(None, &p));
        p.external_verdict = Some(false);
        let e = extract_boxed("\\boxed{70}", &[], TaskKind::Math);
        assert!(!grade_problem(e.as_ref(), &p));
    }

    #[test]
    fn majority_vote_rules() {
        let a = |s: &str| Some(s.to_string());
        assert_eq!(majority_vote(&[a("A"), a("A"), a("B")]), a("A"));
        assert_eq!(majority_vote(&[a("A"), a("B"), None]), a("A"));
        assert_eq!(majority_vote(&[None, None, None]), None);
        // Tie between B (first at 0) and A (first at 1): lowest index wins.
        assert_eq!(majority_vote(&[a("B"), a("A"), a("A"), a("B")]), a("B"));
    }

    proptest! {
        #[test]
        fn extract_never_panics_and_balances(text in "[a-z{}\\\\ ]{0,40}", tail in "[a-z{}db ]{0,20}") {
            let input = format!("{text}\\boxed{{{tail}");
            if let Some(e) = extract_boxed(&input, &[], TaskKind::Math) {
                let mut depth = 0i64;
                for b in e.raw.bytes() {
                    if b == b'{' { depth += 1; }
                    if b == b'}' { depth -= 1; }
                    prop_assert!(depth >= 0);
                }
                prop_assert_eq!(depth, 0);
            }
        }

        #[test]
        fn grade_reflexive_over_simple_answers(answer in "[a-zA-Z0-9]{1,6}(/[1-9][0-9]{0,3})?") {
            let text = format!("steps... \\boxed{{{answer}}}");
            let e = extract_boxed(&text, &[], TaskKind::Math);
            prop_assert!(grade(e.as_ref(), &answer, TaskKind::Math));
        }

        #[test]
        fn vote_permutation_invariant_with_strict_majority(perm in 0u8..6) {
            let a = |s: &str| Some(s.to_string());
            let base = [a("X"), a("X"), a("Y")];
            let orders: [[usize; 3]; 6] = [[0,1,2],[0,2,1],[1,0,2],[1,2,0],[2,0,1],[2,1,0]];
            let order = orders[perm as usize % 6];
            let shuffled: Vec<Option<String>> = order.iter().map(|&i| base[i].clone()).collect();
            prop_assert_eq!(majority_vote(&shuffled), a("X"));
        }
    }
}
