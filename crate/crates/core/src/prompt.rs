//! PDDL-style prompt rendering and parsing of plan blocks in model
//! responses.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::motion::literals::LiteralSet;
use crate::world::{
    Conjunct, Direction, DiscreteAction, EntityKind, EntityRef, Goal, PlaceRef, ProblemInstance,
    WorldState,
};

pub const SYSTEM_TEXT: &str =
    "You are an expert in PDDL and in planning robot actions for a problem. \
Answer using exactly this template:\n\
## Possible Challenges for unachieved goals based on current state ##\n\
<list the challenges that keep the goals from being achieved>\n\
\n\
## Plan ##\n\
plan = [('action_type', 'arg_1', 'arg_2', ...),]";

pub const CLOSING_LINE: &str = "Generate a plan to achieve the goals from init.";

pub const DOMAIN_TEXT: &str = "\
(define (domain household)
  (:requirements :typing)
  (:types movable_object region openable - object)
  (:constants on left_of right_of front_of behind_of - direction)
  (:predicates
    (RobotHolding ?subject) ; the robot holds subject
    (HandAvailable) ; the robot hand is empty
    (AtPosition ?subject ?direction ?reference) ; subject is at direction of reference
    (IsClosed ?door) ; the door is closed
    (PickOccludedBy ?subject ?occluder) ; (pick, subject) is blocked by occluder
    (PlaceOccludedBy ?subject ?direction ?reference ?occluder) ; (place, subject, direction, reference) is blocked by occluder
  )
  (:action pick ; example ('pick', 'bottle')
    :parameters (?subject)
    :precondition (and (HandAvailable) (not (UnsafePick ?subject)))
    :effect (and (not (HandAvailable)) (RobotHolding ?subject) (not (AtPosition ?subject ?direction ?reference))))
  (:action place ; example ('place', 'bottle', 'behind_of', 'can')
    :parameters (?subject ?direction ?reference)
    :precondition (and (RobotHolding ?subject) (not (UnsafePlace ?subject ?direction ?reference)))
    :effect (and (not (RobotHolding ?subject)) (HandAvailable) (AtPosition ?subject ?direction ?reference)))
  (:action open ; example ('open', 'door')
    :parameters (?subject)
    :precondition (and (IsClosed ?subject) (HandAvailable))
    :effect (and (not (IsClosed ?subject))))
  (:derived (UnsafePick ?subject)
    (exists (?occluder) (PickOccludedBy ?subject ?occluder)))
  (:derived (UnsafePlace ?subject ?direction ?reference)
    (exists (?occluder) (PlaceOccludedBy ?subject ?direction ?reference ?occluder)))
)";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_text: String,
    pub user_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskPlan {
    pub actions: Vec<DiscreteAction>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedResponse {
    pub challenges_text: String,
    pub plan: TaskPlan,
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("no `plan = [` block found")]
    NoPlanBlock,
    #[error("plan block is empty")]
    EmptyPlan,
    #[error("action {0} is not a tuple of quoted strings")]
    MalformedTuple(usize),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error("action {0} has the wrong number of arguments")]
    BadArity(usize),
}

fn goal_literal(prob: &ProblemInstance, c: &Conjunct) -> String {
    format!(
        "(AtPosition {} {} {})",
        prob.movables[c.subject].name,
        c.dir.token(),
        prob.name_of(c.reference.entity())
    )
}

/// Renders the prompt for state `s`. `literals` must be the literal set of
/// `s`; the output depends only on the literals, the goal and the entity
/// names.
pub fn create_prompt(
    _s: &WorldState,
    goal: &Goal,
    prob: &ProblemInstance,
    literals: &LiteralSet,
) -> PromptBundle {
    let mut objects: Vec<(EntityKind, &str)> = Vec::new();
    objects.extend(
        prob.movables
            .iter()
            .map(|m| (EntityKind::Movable, m.name.as_str())),
    );
    objects.extend(
        prob.doors
            .iter()
            .map(|d| (EntityKind::Door, d.name.as_str())),
    );
    objects.extend(
        prob.regions
            .iter()
            .map(|r| (EntityKind::Region, r.name.as_str())),
    );
    objects.sort();

    let mut u = String::new();
    u.push_str("### Domain ###\n");
    u.push_str(DOMAIN_TEXT);
    u.push_str("\n\n### Problem ###\n(:objects\n");
    for (kind, name) in &objects {
        let _ = writeln!(u, "  {name} - {}", kind.pddl_type());
    }
    u.push_str(")\n(:init\n");
    for l in literals.iter() {
        let _ = writeln!(u, "  {l}");
    }
    u.push_str(")\n(:goal (and");
    for c in &goal.conjuncts {
        let _ = write!(u, " {}", goal_literal(prob, c));
    }
    u.push_str("))\n\n");
    u.push_str(CLOSING_LINE);
    u.push('\n');
    PromptBundle {
        system_text: SYSTEM_TEXT.to_string(),
        user_text: u,
    }
}

/// Renders a plan in the tuple-list syntax accepted by [`parse_response`].
pub fn format_plan(plan: &TaskPlan, prob: &ProblemInstance) -> String {
    let tuples: Vec<String> = plan
        .actions
        .iter()
        .map(|a| {
            let parts: Vec<String> = a.tokens(prob).iter().map(|t| format!("'{t}'")).collect();
            format!("({})", parts.join(", "))
        })
        .collect();
    format!("plan = [{}]", tuples.join(", "))
}

fn is_quote(c: char) -> bool {
    matches!(
        c,
        '\'' | '"' | '\u{2018}' | '\u{2019}' | '\u{201c}' | '\u{201d}'
    )
}

fn closing_quote(open: char) -> &'static [char] {
    match open {
        '\'' => &['\''],
        '"' => &['"'],
        _ => &['\u{2019}', '\u{2018}', '\u{201d}', '\u{201c}'],
    }
}

/// Byte offset just past the `[` of the last `plan = [` occurrence.
fn find_plan_block(text: &str) -> Option<usize> {
    let mut found = None;
    for (i, _) in text.match_indices("plan") {
        let rest = &text[i + 4..];
        let t = rest.trim_start();
        let Some(t) = t.strip_prefix('=') else {
            continue;
        };
        let t = t.trim_start();
        if t.starts_with('[') {
            found = Some(text.len() - t.len() + 1);
        }
    }
    found
}

struct Scanner<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
}

impl Scanner<'_> {
    fn skip_comment(&mut self) {
        for c in self.chars.by_ref() {
            if c == '\n' {
                break;
            }
        }
    }

    fn skip_blank(&mut self) {
        while let Some(&c) = self.chars.peek() {
            if c.is_whitespace() {
                self.chars.next();
            } else if c == '#' {
                self.skip_comment();
            } else {
                break;
            }
        }
    }

    /// Whether the next non-blank char on the same logical item is a quote.
    fn quote_follows(&self) -> bool {
        for c in self.chars.clone() {
            if c.is_whitespace() {
                continue;
            }
            return is_quote(c);
        }
        false
    }

    fn quoted(&mut self) -> Option<String> {
        let open = self.chars.next()?;
        let close = closing_quote(open);
        let mut out = String::new();
        for c in self.chars.by_ref() {
            if close.contains(&c) {
                return Some(out);
            }
            if c == '\n' {
                return None;
            }
            out.push(c);
        }
        None
    }

    /// Parses one tuple after its opening delimiter.
    fn tuple(&mut self, close: char) -> Option<Vec<String>> {
        let mut items = Vec::new();
        loop {
            self.skip_blank();
            match self.chars.peek().copied() {
                Some(c) if c == close => {
                    self.chars.next();
                    return Some(items);
                }
                Some(c) if is_quote(c) => items.push(self.quoted()?),
                _ => return None,
            }
            self.skip_blank();
            match self.chars.peek().copied() {
                Some(',') => {
                    self.chars.next();
                }
                Some(c) if c == close => {}
                _ => return None,
            }
        }
    }
}

fn raw_tuples(body: &str) -> Result<Vec<Vec<String>>, ParseError> {
    let mut sc = Scanner {
        chars: body.chars().peekable(),
    };
    let mut out = Vec::new();
    loop {
        sc.skip_blank();
        let Some(c) = sc.chars.next() else { break };
        match c {
            ']' => break,
            ',' => {}
            '(' | '[' if sc.quote_follows() => {
                let close = if c == '(' { ')' } else { ']' };
                match sc.tuple(close) {
                    Some(items) => out.push(items),
                    None => return Err(ParseError::MalformedTuple(out.len())),
                }
            }
            // stray words from comments wrapped onto their own line
            _ => {}
        }
    }
    Ok(out)
}

fn challenges(text: &str, plan_at: usize) -> String {
    let head = &text[..plan_at];
    let lower = head.to_ascii_lowercase();
    let Some(start) = lower.find("## possible challenges") else {
        return String::new();
    };
    let after = start + lower[start..].find('\n').unwrap_or(lower.len() - start);
    let end = lower[after..]
        .rfind("## plan")
        .map(|e| after + e)
        .unwrap_or(head.len());
    head[after..end].trim().to_string()
}

fn entity(prob: &ProblemInstance, name: &str) -> Result<EntityRef, ParseError> {
    prob.lookup(name)
        .ok_or_else(|| ParseError::UnknownEntity(name.to_string()))
}

fn to_action(i: usize, t: &[String], prob: &ProblemInstance) -> Result<DiscreteAction, ParseError> {
    let op = t.first().ok_or(ParseError::MalformedTuple(i))?;
    let args = &t[1..];
    let arity = match op.as_str() {
        "pick" | "open" => 1,
        "place" => 3,
        _ => return Err(ParseError::MalformedTuple(i)),
    };
    if args.len() != arity {
        return Err(ParseError::BadArity(i));
    }
    let target = entity(prob, &args[0])?;
    match (op.as_str(), target) {
        ("pick", EntityRef::Movable(m)) => Ok(DiscreteAction::Pick { target: m }),
        ("open", EntityRef::Door(d)) => Ok(DiscreteAction::Open { door: d }),
        ("place", EntityRef::Movable(m)) => {
            let dir = Direction::from_token(&args[1]).ok_or(ParseError::MalformedTuple(i))?;
            let reference = match entity(prob, &args[2])? {
                EntityRef::Region(r) => PlaceRef::Region(r),
                EntityRef::Movable(o) => PlaceRef::Movable(o),
                EntityRef::Door(_) => return Err(ParseError::MalformedTuple(i)),
            };
            DiscreteAction::place(m, dir, reference).map_err(|_| ParseError::MalformedTuple(i))
        }
        _ => Err(ParseError::MalformedTuple(i)),
    }
}

/// Extracts the last plan block of a response. Tolerates comments,
/// trailing commas, comment text wrapped onto its own line, and a list left
/// unterminated at the end of the text.
pub fn parse_response(text: &str, prob: &ProblemInstance) -> Result<ParsedResponse, ParseError> {
    let start = find_plan_block(text).ok_or(ParseError::NoPlanBlock)?;
    let tuples = raw_tuples(&text[start..])?;
    if tuples.is_empty() {
        return Err(ParseError::EmptyPlan);
    }
    let actions = tuples
        .iter()
        .enumerate()
        .map(|(i, t)| to_action(i, t, prob))
        .collect::<Result<Vec<_>, _>>()?;
    let plan_at = text[..start].rfind("plan").unwrap_or(0);
    Ok(ParsedResponse {
        challenges_text: challenges(text, plan_at),
        plan: TaskPlan { actions },
        raw: text.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::literals::compute_literals;
    use crate::motion::{MotionConfig, Scene};
    use crate::scenario::demo_problem;

    #[test]
    fn single_pick_format() {
        let p = demo_problem();
        let plan = TaskPlan {
            actions: vec![DiscreteAction::Pick { target: 0 }],
        };
        assert_eq!(format_plan(&plan, &p), "plan = [('pick', 'cup')]");
    }

    #[test]
    fn empty_plan_is_rejected() {
        let p = demo_problem();
        assert_eq!(parse_response("plan = []", &p), Err(ParseError::EmptyPlan));
        assert_eq!(
            parse_response("no plan here", &p),
            Err(ParseError::NoPlanBlock)
        );
    }

    #[test]
    fn diagnostics_name_the_tuple() {
        let p = demo_problem();
        assert_eq!(
            parse_response("plan = [('pick', 'cup'), ('pick', 'ghost')]", &p),
            Err(ParseError::UnknownEntity("ghost".into()))
        );
        assert_eq!(
            parse_response("plan = [('pick', 'cup'), ('place', 'cup', 'on')]", &p),
            Err(ParseError::BadArity(1))
        );
        assert_eq!(
            parse_response("plan = [('pick', 'cup'), ('fly', 'cup')]", &p),
            Err(ParseError::MalformedTuple(1))
        );
        assert_eq!(
            parse_response("plan = [('pick', 'cup'), ('pick' 'cup')]", &p),
            Err(ParseError::MalformedTuple(1))
        );
    }

    #[test]
    fn lists_double_quotes_and_last_block() {
        let p = demo_problem();
        let text = "first try: plan = [('pick', 'plate')]\nbetter:\nplan = [[\"pick\", \"cup\"], [\"place\", \"cup\", \"on\", \"table2\",],]";
        let r = parse_response(text, &p).unwrap();
        assert_eq!(r.plan.actions.len(), 2);
        assert_eq!(r.plan.actions[0], DiscreteAction::Pick { target: 0 });
    }

    #[test]
    fn challenges_are_captured() {
        let p = demo_problem();
        let text = "## Possible Challenges for unachieved goals ##\n1. The door is closed.\n\n## Plan ##\nplan = [('open', 'door')]";
        let r = parse_response(text, &p).unwrap();
        assert_eq!(r.challenges_text, "1. The door is closed.");
        assert_eq!(r.raw, text);
    }

    #[test]
    fn prompt_skeleton_and_determinism() {
        let scene = Scene::new(demo_problem(), MotionConfig::default()).unwrap();
        let p = scene.problem();
        let lits = compute_literals(&p.s0, &scene);
        let a = create_prompt(&p.s0, &p.goal, p, &lits);
        let b = create_prompt(&p.s0, &p.goal, p, &lits);
        assert_eq!(a, b);
        assert!(a.system_text.contains("## Possible Challenges"));
        assert!(a.system_text.contains("## Plan"));
        let u = &a.user_text;
        let order = [
            "### Domain ###",
            "### Problem ###",
            "(:objects",
            "(:init",
            "(:goal (and",
            CLOSING_LINE,
        ];
        let pos: Vec<usize> = order.iter().map(|k| u.find(k).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        // movables, then doors, then regions
        assert!(u.find("cup - movable_object").unwrap() < u.find("door - openable").unwrap());
        assert!(u.find("door - openable").unwrap() < u.find("counter1 - region").unwrap());
    }
}
