use serde::{Deserialize, Serialize};

use super::DocChunk;

pub const DEFAULT_K_EXAMPLE: usize = 2;
pub const DEFAULT_K_KNOWLEDGE: usize = 3;
pub const DEFAULT_BUDGET_CHARS: usize = 12_000;

fn default_k_example() -> usize {
    DEFAULT_K_EXAMPLE
}
fn default_k_knowledge() -> usize {
    DEFAULT_K_KNOWLEDGE
}
fn default_budget() -> usize {
    DEFAULT_BUDGET_CHARS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PromptConfig {
    #[serde(default = "default_k_example")]
    pub k_example: usize,
    #[serde(default = "default_k_knowledge")]
    pub k_knowledge: usize,
    /// Cap on the prompt length in characters. The problem itself is never cut.
    #[serde(default = "default_budget")]
    pub budget_chars: usize,
}

impl Default for PromptConfig {
    fn default() -> Self {
        PromptConfig {
            k_example: DEFAULT_K_EXAMPLE,
            k_knowledge: DEFAULT_K_KNOWLEDGE,
            budget_chars: DEFAULT_BUDGET_CHARS,
        }
    }
}

fn render(problem: &str, knowledge: &[&(DocChunk, f64)], examples: &[&(DocChunk, f64)]) -> String {
    if knowledge.is_empty() && examples.is_empty() {
        return problem.to_string();
    }
    let mut out = String::new();
    if !knowledge.is_empty() {
        out.push_str("### Knowledge\n");
        for (c, _) in knowledge {
            out.push_str(c.text.trim_end());
            out.push_str("\n\n");
        }
    }
    if !examples.is_empty() {
        out.push_str("### Examples\n");
        for (c, _) in examples {
            out.push_str("```verilog\n");
            out.push_str(c.text.trim_end());
            out.push_str("\n```\n\n");
        }
    }
    out.push_str("### Problem\n");
    out.push_str(problem);
    out
}

fn by_score_desc<'a>(xs: &'a [(DocChunk, f64)]) -> Vec<&'a (DocChunk, f64)> {
    let mut v: Vec<_> = xs.iter().collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.id.cmp(&b.0.id)));
    v
}

/// Knowledge section, then examples, then the problem, each section in
/// descending score order. While over `budget_chars`, the lowest-scored
/// chunk is dropped; on equal scores knowledge goes before examples.
/// Character counts are Unicode scalar values.
pub fn assemble_prompt(
    problem: &str,
    examples: &[(DocChunk, f64)],
    knowledge: &[(DocChunk, f64)],
    budget_chars: usize,
) -> String {
    let mut know = by_score_desc(knowledge);
    let mut exam = by_score_desc(examples);
    loop {
        let text = render(problem, &know, &exam);
        if text.chars().count() <= budget_chars || (know.is_empty() && exam.is_empty()) {
            return text;
        }
        let drop_knowledge = match (know.last(), exam.last()) {
            (Some(k), Some(e)) => k.1 <= e.1,
            (Some(_), None) => true,
            _ => false,
        };
        if drop_knowledge {
            know.pop();
        } else {
            exam.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rag::ChunkKind;

    fn c(kind: ChunkKind, id: &str, text: &str, score: f64) -> (DocChunk, f64) {
        (
            DocChunk {
                id: id.into(),
                kind,
                text: text.into(),
                source: "t".into(),
            },
            score,
        )
    }

    #[test]
    fn no_chunks_is_just_the_problem() {
        let p = assemble_prompt("Design an adder.", &[], &[], 100);
        assert_eq!(p, "Design an adder.");
    }

    #[test]
    fn template_order_and_scores() {
        let ex = vec![
            c(ChunkKind::Example, "e1", "module e1; endmodule", 0.2),
            c(ChunkKind::Example, "e2", "module e2; endmodule", 0.9),
        ];
        let kn = vec![
            c(ChunkKind::Knowledge, "k1", "K-one", 0.1),
            c(ChunkKind::Knowledge, "k2", "K-two", 0.8),
            c(ChunkKind::Knowledge, "k3", "K-three", 0.5),
        ];
        let p = assemble_prompt("PROB", &ex, &kn, 10_000);
        let pos = |s: &str| p.find(s).unwrap_or_else(|| panic!("{s} missing"));
        assert!(pos("### Knowledge") < pos("K-two"));
        assert!(pos("K-two") < pos("K-three") && pos("K-three") < pos("K-one"));
        assert!(pos("K-one") < pos("### Examples"));
        assert!(pos("module e2") < pos("module e1"));
        assert!(pos("module e1") < pos("### Problem") && pos("### Problem") < pos("PROB"));
    }

    #[test]
    fn omits_empty_section() {
        let kn = vec![c(ChunkKind::Knowledge, "k", "Use nonblocking assignments.", 0.3)];
        let p = assemble_prompt("P", &[], &kn, 1000);
        assert!(p.contains("### Knowledge") && !p.contains("### Examples"));
    }

    #[test]
    fn budget_drops_lowest_scored_first() {
        let ex = vec![c(ChunkKind::Example, "e", "module e; endmodule", 0.6)];
        let kn = vec![
            c(ChunkKind::Knowledge, "hi", "HIGH", 0.9),
            c(ChunkKind::Knowledge, "lo", "LOW", 0.1),
        ];
        let full = assemble_prompt("P", &ex, &kn, usize::MAX);
        let budget = full.chars().count() - 1;
        let p = assemble_prompt("P", &ex, &kn, budget);
        assert!(!p.contains("LOW"));
        assert!(p.contains("HIGH") && p.contains("module e"));
        assert!(p.chars().count() <= budget);
        // Equal scores: knowledge goes first.
        let kn2 = vec![c(ChunkKind::Knowledge, "k", "KNOW", 0.6)];
        let full = assemble_prompt("P", &ex, &kn2, usize::MAX);
        let p = assemble_prompt("P", &ex, &kn2, full.chars().count() - 1);
        assert!(!p.contains("KNOW") && p.contains("module e"));
    }

    #[test]
    fn problem_is_never_truncated() {
        let kn = vec![c(ChunkKind::Knowledge, "k", "K", 0.5)];
        let p = assemble_prompt("a long problem statement", &[], &kn, 3);
        assert_eq!(p, "a long problem statement");
    }
}
