//! The stock aggregation grammars.
//!
//! | name               | Human state                          | Domain state                              |
//! |--------------------|--------------------------------------|-------------------------------------------|
//! | `dd`               | votedOn                              |                                           |
//! | `rd`               | votedOn; uses                        | trusts (voting target); similarTo         |
//! | `ddd`              | votedOn; uses                        | trusts; similarTo                         |
//! | `dictator`         | votedOn (current in `dictators`)     |                                           |
//! | `rd_single`        | votedOn; trusts (voting target)      |                                           |
//! | `ddd_single`       | votedOn; trusts                      |                                           |
//! | `domain_direct`    |                                      | categorizedAs (target in `problem`)       |
//! | `domain_recursive` |                                      | categorizedAs (target in `problem`); similarTo |

use crate::error::{Error, Result};
use crate::graph::labels::*;
use crate::graph::Sort;

use super::{EdgeGuard, GrammarState, Rule, TraversalGrammar};

pub const BUILTIN_NAMES: [&str; 8] = [
    "dd",
    "rd",
    "ddd",
    "dictator",
    "domain_direct",
    "domain_recursive",
    "rd_single",
    "ddd_single",
];

fn state(id: &str, sort: Sort, rules: Vec<Rule>) -> GrammarState {
    GrammarState {
        id: id.to_owned(),
        sort,
        rules,
    }
}

fn human(rules: Vec<Rule>) -> GrammarState {
    state("Human", Sort::Human, rules)
}

fn domain(rules: Vec<Rule>) -> GrammarState {
    state("Domain", Sort::Domain, rules)
}

fn solution_grammar(name: &str, states: Vec<GrammarState>) -> TraversalGrammar {
    TraversalGrammar::new(name, "Human", vec![Sort::Solution], states).expect("builtin is valid")
}

fn domain_grammar(name: &str, states: Vec<GrammarState>) -> TraversalGrammar {
    TraversalGrammar::new(name, "Domain", vec![Sort::Problem], states).expect("builtin is valid")
}

pub fn builtin(name: &str) -> Result<TraversalGrammar> {
    use EdgeGuard::*;
    let vote = || Rule::new(VOTED_ON, None, "Solution");
    let g = match name {
        "dd" => solution_grammar(name, vec![human(vec![vote()])]),
        "rd" | "ddd" => {
            let trust_guard = if name == "rd" { TargetHasVotedOn } else { None };
            solution_grammar(
                name,
                vec![
                    human(vec![vote(), Rule::new(USES, None, "Domain")]),
                    domain(vec![
                        Rule::new(TRUSTS, trust_guard, "Human"),
                        Rule::new(SIMILAR_TO, None, "Domain"),
                    ]),
                ],
            )
        }
        "rd_single" | "ddd_single" => {
            let trust_guard = if name == "rd_single" { TargetHasVotedOn } else { None };
            solution_grammar(
                name,
                vec![human(vec![vote(), Rule::new(TRUSTS, trust_guard, "Human")])],
            )
        }
        "dictator" => solution_grammar(
            name,
            vec![human(vec![Rule::new(
                VOTED_ON,
                CurrentInSet("dictators".into()),
                "Solution",
            )])],
        ),
        "domain_direct" | "domain_recursive" => {
            let mut rules = vec![Rule::new(
                CATEGORIZED_AS,
                TargetInSet("problem".into()),
                "Problem",
            )];
            if name == "domain_recursive" {
                rules.push(Rule::new(SIMILAR_TO, None, "Domain"));
            }
            domain_grammar(name, vec![domain(rules)])
        }
        other => return Err(Error::UnknownGrammar(other.to_owned())),
    };
    Ok(g)
}
