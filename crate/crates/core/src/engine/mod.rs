//! LD resolution (leftmost selection, clauses in source order) with
//! Prolog's built-ins `true/0`, `fail/0`, `=/2`, `write/1` and `nl/0`.
//!
//! Trees are built depth-first up to a node and a depth budget; whatever is
//! left unexpanded is marked truncated. In LDNF mode a ground negative
//! literal spawns a subsidiary tree and a non-ground one flounders.

mod analysis;
mod obligations;

pub use analysis::*;
pub use obligations::*;

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::program::{Literal, PredKey, Program, Query};
use crate::term::{unify, Substitution, Term, VarSupply};

pub type NodeId = usize;
pub type TreeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Budget {
    pub max_nodes: usize,
    pub max_depth: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_nodes: 10_000,
            max_depth: 200,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EngineError {
    #[error("negative literal {0} selected in an LD derivation")]
    NegativeLiteral(String),
    #[error("goal is an unbound variable")]
    VariableGoal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeStatus {
    Internal,
    Success,
    Failure,
    Truncated,
    Floundered,
}

impl NodeStatus {
    pub fn label(self) -> &'static str {
        match self {
            NodeStatus::Internal => "internal",
            NodeStatus::Success => "success",
            NodeStatus::Failure => "failure",
            NodeStatus::Truncated => "truncated",
            NodeStatus::Floundered => "floundered",
        }
    }
}

/// How a node was obtained from its parent.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    Clause(usize),
    Builtin,
    Negation,
}

#[derive(Clone, Debug)]
pub struct Goal {
    pub literal: Literal,
    /// The node whose resolution step introduced this literal; `None` for
    /// literals of the root query.
    pub origin: Option<NodeId>,
}

#[derive(Clone, Debug)]
pub struct Node {
    pub goals: Vec<Goal>,
    pub depth: usize,
    pub parent: Option<NodeId>,
    pub step: Option<Step>,
    /// The parent's selected atom under the mgu of this step.
    pub resolved: Option<Term>,
    pub children: Vec<NodeId>,
    pub status: NodeStatus,
    /// The tracked template (by default the root query atoms) instantiated
    /// by every substitution along the path.
    pub answer: Vec<Term>,
    pub subsidiary: Option<TreeId>,
}

impl Node {
    pub fn selected(&self) -> Option<&Literal> {
        self.goals.first().map(|g| &g.literal)
    }

    pub fn query(&self) -> Query {
        self.goals.iter().map(|g| g.literal.clone()).collect()
    }
}

#[derive(Clone, Debug)]
pub struct LdTree {
    pub nodes: Vec<Node>,
    pub truncated: bool,
    pub floundered: bool,
}

impl LdTree {
    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn has_success(&self) -> bool {
        self.nodes.iter().any(|n| n.status == NodeStatus::Success)
    }
}

/// A main tree (index 0) plus every subsidiary tree it used.
#[derive(Clone, Debug)]
pub struct Forest {
    pub trees: Vec<LdTree>,
    pub budget: Budget,
    pub nodes_used: usize,
}

impl Forest {
    pub fn main(&self) -> &LdTree {
        &self.trees[0]
    }

    pub fn truncated(&self) -> bool {
        self.trees.iter().any(|t| t.truncated)
    }

    pub fn floundered(&self) -> bool {
        self.trees.iter().any(|t| t.floundered)
    }

    pub fn complete(&self) -> bool {
        !self.truncated()
    }

    pub fn node_count(&self) -> usize {
        self.trees.iter().map(|t| t.nodes.len()).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    True,
    Fail,
    Unify,
    Write,
    Nl,
}

pub fn builtin(key: &PredKey) -> Option<Builtin> {
    match (&*key.name, key.arity) {
        ("true", 0) => Some(Builtin::True),
        ("fail", 0) => Some(Builtin::Fail),
        ("=", 2) => Some(Builtin::Unify),
        ("write", 1) => Some(Builtin::Write),
        ("nl", 0) => Some(Builtin::Nl),
        _ => None,
    }
}

pub fn is_builtin(t: &Term) -> bool {
    PredKey::of(t).as_ref().and_then(builtin).is_some()
}

/// Result of running a built-in on a selected atom: `None` means failure.
pub fn run_builtin(b: Builtin, atom: &Term) -> Option<Substitution> {
    match b {
        Builtin::True | Builtin::Write | Builtin::Nl => Some(Substitution::new()),
        Builtin::Fail => None,
        Builtin::Unify => unify(&atom.args()[0], &atom.args()[1]),
    }
}

struct Builder<'p> {
    program: &'p Program,
    budget: Budget,
    negation: bool,
    supply: VarSupply,
    trees: Vec<Option<LdTree>>,
    memo: HashMap<Term, TreeId>,
    used: usize,
}

impl<'p> Builder<'p> {
    fn new(
        program: &'p Program,
        query: &[Literal],
        template: &[Term],
        budget: Budget,
        negation: bool,
    ) -> Self {
        let mut supply = VarSupply::new();
        program
            .clauses()
            .iter()
            .flat_map(|c| c.terms())
            .for_each(|t| supply.reserve(t));
        query.iter().for_each(|l| supply.reserve(&l.atom));
        template.iter().for_each(|t| supply.reserve(t));
        Builder {
            program,
            budget,
            negation,
            supply,
            trees: Vec::new(),
            memo: HashMap::new(),
            used: 0,
        }
    }

    fn build(
        &mut self,
        query: &[Literal],
        template: Vec<Term>,
        base_depth: usize,
    ) -> Result<TreeId, EngineError> {
        let tid = self.trees.len();
        self.trees.push(None);
        let mut tree = LdTree {
            nodes: vec![Node {
                goals: query
                    .iter()
                    .map(|l| Goal {
                        literal: l.clone(),
                        origin: None,
                    })
                    .collect(),
                depth: base_depth,
                parent: None,
                step: None,
                resolved: None,
                children: vec![],
                status: NodeStatus::Internal,
                answer: template,
                subsidiary: None,
            }],
            truncated: false,
            floundered: false,
        };
        self.used += 1;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let kids = self.expand(&mut tree, id)?;
            stack.extend(kids.into_iter().rev());
        }
        self.trees[tid] = Some(tree);
        Ok(tid)
    }

    fn child(
        &mut self,
        tree: &mut LdTree,
        id: NodeId,
        step: Step,
        theta: &Substitution,
        body: Vec<Literal>,
    ) -> NodeId {
        let parent = &tree.nodes[id];
        let mut goals: Vec<Goal> = body
            .into_iter()
            .map(|l| Goal {
                literal: l.map_atom(|a| theta.apply(a)),
                origin: Some(id),
            })
            .collect();
        goals.extend(parent.goals[1..].iter().map(|g| Goal {
            literal: g.literal.map_atom(|a| theta.apply(a)),
            origin: g.origin,
        }));
        let node = Node {
            goals,
            depth: parent.depth + 1,
            parent: Some(id),
            step: Some(step),
            resolved: Some(theta.apply(&parent.goals[0].literal.atom)),
            children: vec![],
            status: NodeStatus::Internal,
            answer: parent.answer.iter().map(|t| theta.apply(t)).collect(),
            subsidiary: None,
        };
        let cid = tree.nodes.len();
        tree.nodes.push(node);
        tree.nodes[id].children.push(cid);
        self.used += 1;
        cid
    }

    fn expand(&mut self, tree: &mut LdTree, id: NodeId) -> Result<Vec<NodeId>, EngineError> {
        let node = &tree.nodes[id];
        let Some(goal) = node.goals.first() else {
            tree.nodes[id].status = NodeStatus::Success;
            return Ok(vec![]);
        };
        if node.depth >= self.budget.max_depth || self.used >= self.budget.max_nodes {
            tree.nodes[id].status = NodeStatus::Truncated;
            tree.truncated = true;
            return Ok(vec![]);
        }
        let lit = goal.literal.clone();
        let depth = node.depth;
        let Some(key) = PredKey::of(&lit.atom) else {
            return Err(EngineError::VariableGoal);
        };
        if !lit.positive {
            if !self.negation {
                return Err(EngineError::NegativeLiteral(lit.atom.to_string()));
            }
            if !lit.atom.is_ground() {
                tree.nodes[id].status = NodeStatus::Floundered;
                tree.floundered = true;
                return Ok(vec![]);
            }
            let sub = match self.memo.get(&lit.atom) {
                Some(t) => *t,
                None => {
                    let t = self.build(
                        &[Literal::pos(lit.atom.clone())],
                        vec![lit.atom.clone()],
                        depth + 1,
                    )?;
                    self.memo.insert(lit.atom.clone(), t);
                    t
                }
            };
            tree.nodes[id].subsidiary = Some(sub);
            let s = self.trees[sub].as_ref().expect("subsidiary tree finished");
            let (success, floundered, truncated) = (s.has_success(), s.floundered, s.truncated);
            if success {
                tree.nodes[id].status = NodeStatus::Failure;
                return Ok(vec![]);
            }
            if floundered {
                tree.nodes[id].status = NodeStatus::Floundered;
                tree.floundered = true;
                return Ok(vec![]);
            }
            if truncated {
                tree.nodes[id].status = NodeStatus::Truncated;
                tree.truncated = true;
                return Ok(vec![]);
            }
            let c = self.child(tree, id, Step::Negation, &Substitution::new(), vec![]);
            return Ok(vec![c]);
        }
        if let Some(b) = builtin(&key) {
            return Ok(match run_builtin(b, &lit.atom) {
                Some(theta) => vec![self.child(tree, id, Step::Builtin, &theta, vec![])],
                None => {
                    tree.nodes[id].status = NodeStatus::Failure;
                    vec![]
                }
            });
        }
        let mut kids = Vec::new();
        for &ci in self.program.clauses_for(&key) {
            let clause = self.program.clause(ci).rename(&mut self.supply);
            if let Some(theta) = unify(&lit.atom, &clause.head) {
                kids.push(self.child(tree, id, Step::Clause(ci), &theta, clause.body));
            }
        }
        if kids.is_empty() {
            tree.nodes[id].status = NodeStatus::Failure;
        }
        Ok(kids)
    }

    fn finish(self) -> Forest {
        Forest {
            trees: self
                .trees
                .into_iter()
                .map(|t| t.expect("tree finished"))
                .collect(),
            budget: self.budget,
            nodes_used: self.used,
        }
    }
}

fn template_of(q: &[Literal]) -> Vec<Term> {
    q.iter().map(|l| l.atom.clone()).collect()
}

/// The LD-tree of a definite query. Selecting a negative literal is an error.
pub fn build_ld_tree(p: &Program, q: &[Literal], budget: Budget) -> Result<Forest, EngineError> {
    build_tracking(p, q, template_of(q), budget, false)
}

/// The LDNF forest of a normal query: main tree plus subsidiary trees.
pub fn build_ldnf_forest(
    p: &Program,
    q: &[Literal],
    budget: Budget,
) -> Result<Forest, EngineError> {
    build_tracking(p, q, template_of(q), budget, true)
}

/// Like the constructors above, but instantiates an arbitrary `template`
/// along each branch instead of the query atoms.
pub fn build_tracking(
    p: &Program,
    q: &[Literal],
    template: Vec<Term>,
    budget: Budget,
    negation: bool,
) -> Result<Forest, EngineError> {
    if q.iter().any(|l| l.atom.is_var()) {
        return Err(EngineError::VariableGoal);
    }
    let mut b = Builder::new(p, q, &template, budget, negation);
    b.build(q, template, 0)?;
    Ok(b.finish())
}

/// A single resolution step on the leftmost literal: the resolvents in
/// clause order (empty when the literal fails or the query is empty).
pub fn ld_step(
    p: &Program,
    q: &[Literal],
    supply: &mut VarSupply,
) -> Result<Vec<(Step, Query)>, EngineError> {
    let Some((first, rest)) = q.split_first() else {
        return Ok(vec![]);
    };
    if !first.positive {
        return Err(EngineError::NegativeLiteral(first.atom.to_string()));
    }
    let key = PredKey::of(&first.atom).ok_or(EngineError::VariableGoal)?;
    let resolvent = |theta: &Substitution, body: Vec<Literal>| -> Query {
        body.into_iter()
            .chain(rest.iter().cloned())
            .map(|l| l.map_atom(|a| theta.apply(a)))
            .collect()
    };
    if let Some(b) = builtin(&key) {
        return Ok(run_builtin(b, &first.atom)
            .map(|th| vec![(Step::Builtin, resolvent(&th, vec![]))])
            .unwrap_or_default());
    }
    let mut out = Vec::new();
    for &ci in p.clauses_for(&key) {
        let c = p.clause(ci).rename(supply);
        if let Some(th) = unify(&first.atom, &c.head) {
            out.push((Step::Clause(ci), resolvent(&th, c.body)));
        }
    }
    Ok(out)
}
