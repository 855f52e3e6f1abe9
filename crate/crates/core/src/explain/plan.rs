use serde::{Deserialize, Serialize};

use super::library::TemplateLibrary;
use crate::sql::{Direction, SetOperator};

const REF_OPEN: char = '\u{E000}';
const REF_CLOSE: char = '\u{E001}';

/// Reference to the plan step at index `idx`, for embedding in
/// [`PlanStep::Text`]. It renders as that step's final number.
pub fn step_ref(idx: usize) -> String {
    format!("{REF_OPEN}{idx}{REF_CLOSE}")
}

fn map_refs(text: &str, f: impl Fn(usize) -> String) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find(REF_OPEN) {
        out.push_str(&rest[..open]);
        let after = &rest[open + REF_OPEN.len_utf8()..];
        let close = after.find(REF_CLOSE).expect("step references are well-formed");
        let idx: usize = after[..close].parse().expect("step reference holds an index");
        out.push_str(&f(idx));
        rest = &after[close + REF_CLOSE.len_utf8()..];
    }
    out.push_str(rest);
    out
}

/// One step before wording. Sources are indices of earlier steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanStep {
    /// Finished wording, possibly holding [`step_ref`] markers.
    Text(String),
    Order {
        source: usize,
        keys: Vec<(String, Direction)>,
    },
    Limit {
        source: usize,
        n: u64,
    },
    /// The row with the largest or smallest key.
    Extreme {
        source: usize,
        key: String,
        direction: Direction,
    },
    Combine {
        op: SetOperator,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepPlan {
    pub steps: Vec<PlanStep>,
}

impl StepPlan {
    pub fn push(&mut self, step: PlanStep) -> usize {
        self.steps.push(step);
        self.steps.len() - 1
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Words every step; references become 1-based step numbers.
    pub fn render(&self, library: &TemplateLibrary) -> Vec<String> {
        let book = &library.phrasebook;
        let number = |i: usize| (i + 1).to_string();
        let source = |i: usize| book.render("results", &[("STEP", &number(i))]);
        self.steps
            .iter()
            .map(|step| {
                let text = match step {
                    PlanStep::Text(t) => map_refs(t, number),
                    PlanStep::Order { source: s, keys } => {
                        let names: Vec<String> = keys.iter().map(|(k, _)| k.clone()).collect();
                        let mut dirs: Vec<&str> = keys.iter().map(|(_, d)| direction_word(*d)).collect();
                        dirs.dedup();
                        book.render(
                            "order",
                            &[
                                ("SOURCE", &source(*s)),
                                ("KEY", &names.join(", then ")),
                                ("DIRECTION", &dirs.join(", then ")),
                            ],
                        )
                    }
                    PlanStep::Limit { source: s, n: 1 } => book.render("limit_one", &[("SOURCE", &source(*s))]),
                    PlanStep::Limit { source: s, n } => {
                        book.render("limit", &[("SOURCE", &source(*s)), ("N", &n.to_string())])
                    }
                    PlanStep::Extreme {
                        source: s,
                        key,
                        direction,
                    } => {
                        let extreme = match direction {
                            Direction::Desc => "largest",
                            Direction::Asc => "smallest",
                        };
                        book.render(
                            "extreme",
                            &[("SOURCE", &source(*s)), ("KEY", key), ("EXTREME", extreme)],
                        )
                    }
                    PlanStep::Combine { op, left, right } => {
                        let name = match op {
                            SetOperator::Intersect => "intersect",
                            SetOperator::Union => "union",
                            SetOperator::Except => "except",
                        };
                        book.render(name, &[("LEFT", &number(*left)), ("RIGHT", &number(*right))])
                    }
                };
                library.rewrites.iter().fold(text, |t, r| r.apply(&t))
            })
            .collect()
    }
}

fn direction_word(d: Direction) -> &'static str {
    match d {
        Direction::Asc => "ascending",
        Direction::Desc => "descending",
    }
}

/// Merges an ordering on one key followed by `LIMIT 1` into a single
/// "row with the largest/smallest" step. Never adds steps and is idempotent.
pub fn compress_steps(plan: StepPlan) -> StepPlan {
    let steps = plan.steps;
    let mut remap = vec![0usize; steps.len()];
    let mut out: Vec<PlanStep> = Vec::with_capacity(steps.len());
    let mut i = 0;
    while i < steps.len() {
        if let (PlanStep::Order { source, keys }, Some(PlanStep::Limit { source: ls, n: 1 })) =
            (&steps[i], steps.get(i + 1))
        {
            if keys.len() == 1 && *ls == i {
                remap[i] = out.len();
                remap[i + 1] = out.len();
                out.push(PlanStep::Extreme {
                    source: *source,
                    key: keys[0].0.clone(),
                    direction: keys[0].1,
                });
                i += 2;
                continue;
            }
        }
        remap[i] = out.len();
        out.push(steps[i].clone());
        i += 1;
    }
    for step in &mut out {
        match step {
            PlanStep::Text(t) => *t = map_refs(t, |j| step_ref(remap[j])),
            PlanStep::Order { source, .. } | PlanStep::Limit { source, .. } | PlanStep::Extreme { source, .. } => {
                *source = remap[*source]
            }
            PlanStep::Combine { left, right, .. } => {
                *left = remap[*left];
                *right = remap[*right];
            }
        }
    }
    StepPlan { steps: out }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(steps: Vec<PlanStep>) -> StepPlan {
        StepPlan { steps }
    }

    #[test]
    fn order_then_first_row_becomes_extreme() {
        let p = plan(vec![
            PlanStep::Text("find the salary of the teachers table".into()),
            PlanStep::Order {
                source: 0,
                keys: vec![("salary".into(), Direction::Desc)],
            },
            PlanStep::Limit { source: 1, n: 1 },
        ]);
        let c = compress_steps(p);
        assert_eq!(c.len(), 2);
        let text = c.render(&TemplateLibrary::default());
        assert_eq!(text[1], "find the row with the largest salary in the results of step 1");
    }

    #[test]
    fn later_references_are_renumbered() {
        let p = plan(vec![
            PlanStep::Text("a".into()),
            PlanStep::Order {
                source: 0,
                keys: vec![("x".into(), Direction::Asc)],
            },
            PlanStep::Limit { source: 1, n: 1 },
            PlanStep::Text(format!("b uses {}", step_ref(2))),
            PlanStep::Combine {
                op: SetOperator::Union,
                left: 2,
                right: 3,
            },
        ]);
        let c = compress_steps(p);
        let text = c.render(&TemplateLibrary::default());
        assert_eq!(text[2], "b uses 2");
        assert_eq!(
            text[3],
            "show the rows that are in any of the results of step 2 and step 3"
        );
    }

    #[test]
    fn other_limits_are_kept() {
        let p = plan(vec![
            PlanStep::Text("a".into()),
            PlanStep::Order {
                source: 0,
                keys: vec![("x".into(), Direction::Asc)],
            },
            PlanStep::Limit { source: 1, n: 3 },
        ]);
        let c = compress_steps(p.clone());
        assert_eq!(c, p);
        assert_eq!(
            c.render(&TemplateLibrary::default())[2],
            "only keep the first 3 rows of the results of step 2"
        );
    }

    #[test]
    fn compression_is_idempotent() {
        let p = plan(vec![
            PlanStep::Text("a".into()),
            PlanStep::Order {
                source: 0,
                keys: vec![("x".into(), Direction::Desc)],
            },
            PlanStep::Limit { source: 1, n: 1 },
        ]);
        let once = compress_steps(p);
        assert_eq!(compress_steps(once.clone()), once);
    }
}
