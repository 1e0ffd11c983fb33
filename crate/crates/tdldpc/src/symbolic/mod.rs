//! Conditions on the scale factors under which a coloured candidate cannot
//! occur, derived with the scale factors left symbolic.

mod context;
mod engine;
mod formula;
pub mod poly;

pub use context::{Atom, LambdaClass, LambdaSets};
pub use engine::{
    colouring_constraint, elimination_process, find_elimination_constraint, symbolic_matrix, CaseTree,
    ColouringConstraint, Derivation, NodeKind, SymbolicError, TreeNode, MAX_CASE_DEPTH,
};
pub use formula::{constraint_atoms, render_lit, render_lit_plain, simplify_dnf, Formula, Lit};
pub use poly::{SymPoly, UniPoly};

/// Evaluates `f` for the code over F_q with scale factors `alphas`.
pub fn eval_formula(f: &Formula, q: u64, alphas: &[u64]) -> bool {
    f.eval(q, alphas)
}
