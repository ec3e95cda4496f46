//! Template-based constraint encodings of the three checks.
//!
//! Predicates are templated only at cutpoints. Cutpoint-to-cutpoint paths
//! are composed by symbolic execution, and every universally quantified
//! entailment is replaced by existentially quantified multipliers
//! (Farkas for linear antecedents, products of antecedent conjuncts
//! otherwise). The result is a [`ConstraintProblem`] over named unknowns.

mod checks;
mod entail;
mod paths;
mod templates;

use std::collections::BTreeMap;

use thiserror::Error;

use crate::poly::Poly;
use crate::tsys::{LocId, VarId};

pub use checks::{
    encode_check1, encode_check1_with, encode_check2, encode_check2_with, encode_modified, encode_modified_with,
};
pub use entail::encode_entailment;
pub use paths::{choose_cutpoints, cutpoint_paths, loop_heads, Path, PathExec, PATH_CAP};
pub use templates::{make_templates, Templates};

/// Polynomial over unknown ids.
pub type UPoly = Poly<usize>;
/// Polynomial over program variables, fresh path variables and unknowns.
pub type SPoly = Poly<Sym>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sym {
    /// Program variable at the start of a path.
    X(VarId),
    /// Value chosen by the k-th non-deterministic step of a path.
    Fresh(usize),
    /// Solver unknown.
    U(usize),
}

impl Sym {
    pub fn is_program(&self) -> bool {
        !matches!(self, Sym::U(_))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TemplateParams {
    pub c: usize,
    pub d: usize,
    pub deg: u32,
}

impl TemplateParams {
    pub fn new(c: usize, d: usize, deg: u32) -> Result<Self, EncodeError> {
        if c == 0 || d == 0 {
            return Err(EncodeError::BadParams(c, d));
        }
        Ok(TemplateParams { c, d, deg })
    }

    /// Degree of predicate and ranking templates; never below 1.
    pub fn template_degree(&self) -> u32 {
        self.deg.max(1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckKind {
    Check1,
    Check2,
    Modified,
}

impl CheckKind {
    pub fn name(&self) -> &'static str {
        match self {
            CheckKind::Check1 => "check1",
            CheckKind::Check2 => "check2",
            CheckKind::Modified => "modified",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "check1" => Some(CheckKind::Check1),
            "check2" => Some(CheckKind::Check2),
            "modified" => Some(CheckKind::Modified),
            _ => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodeError {
    #[error("template parameters need c >= 1 and d >= 1, got c={0}, d={1}")]
    BadParams(usize, usize),
    #[error("more than {cap} simple paths between two cutpoints")]
    PathExplosion { cap: usize },
    #[error("entailment has degree {got} in program variables, above the supported {max}")]
    DegreeOverflow { got: u32, max: u32 },
    #[error("non-deterministic assignment to `{0}` does not come from branching")]
    NotBranchNdet(String),
    #[error("duplicate unknown `{0}`")]
    DuplicateUnknown(String),
    #[error("encoding not finished before the deadline")]
    Deadline,
}

/// Knobs shared by the encoders.
#[derive(Clone, Copy, Debug)]
pub struct EncodeOptions {
    pub multiplier_sort: Sort,
    /// Encoding stops with [`EncodeError::Deadline`] once this has passed.
    pub deadline: Option<std::time::Instant>,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions { multiplier_sort: Sort::Real, deadline: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sort {
    Int,
    Real,
    Bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unknown {
    pub name: String,
    pub sort: Sort,
}

/// Quantifier-free constraint over unknowns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Formula {
    True,
    False,
    /// `p = 0`
    Eq(UPoly),
    /// `p >= 0`
    Ge(UPoly),
    Bool(usize),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn eq(p: UPoly) -> Formula {
        match p.as_constant() {
            Some(c) if c == 0.into() => Formula::True,
            Some(_) => Formula::False,
            None => Formula::Eq(p),
        }
    }

    pub fn ge(p: UPoly) -> Formula {
        match p.as_constant() {
            Some(c) if c >= 0.into() => Formula::True,
            Some(_) => Formula::False,
            None => Formula::Ge(p),
        }
    }

    pub fn and(fs: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::True => {}
                Formula::False => return Formula::False,
                Formula::And(inner) => out.extend(inner),
                f => out.push(f),
            }
        }
        match out.len() {
            0 => Formula::True,
            1 => out.pop().unwrap(),
            _ => Formula::And(out),
        }
    }

    pub fn or(fs: Vec<Formula>) -> Formula {
        let mut out = Vec::new();
        for f in fs {
            match f {
                Formula::False => {}
                Formula::True => return Formula::True,
                Formula::Or(inner) => out.extend(inner),
                f => out.push(f),
            }
        }
        match out.len() {
            0 => Formula::False,
            1 => out.pop().unwrap(),
            _ => Formula::Or(out),
        }
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        match (&a, &b) {
            (Formula::False, _) | (_, Formula::True) => Formula::True,
            (Formula::True, _) => b,
            _ => Formula::Implies(Box::new(a), Box::new(b)),
        }
    }

    /// Evaluates under an assignment of every unknown it mentions.
    pub fn eval(&self, m: &Model) -> Option<bool> {
        use num_traits::{Signed, Zero};
        Some(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Eq(p) => m.eval_poly(p)?.is_zero(),
            Formula::Ge(p) => !m.eval_poly(p)?.is_negative(),
            Formula::Bool(u) => m.get_bool(*u)?,
            Formula::Not(f) => !f.eval(m)?,
            Formula::And(fs) => {
                for f in fs {
                    if !f.eval(m)? {
                        return Some(false);
                    }
                }
                true
            }
            Formula::Or(fs) => {
                for f in fs {
                    if f.eval(m)? {
                        return Some(true);
                    }
                }
                false
            }
            Formula::Implies(a, b) => !a.eval(m)? || b.eval(m)?,
        })
    }
}

/// Values for unknowns, as produced by a solver.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Model {
    pub values: BTreeMap<usize, ModelValue>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelValue {
    Num(num_rational::BigRational),
    Bool(bool),
}

impl Model {
    pub fn get_num(&self, u: usize) -> Option<&num_rational::BigRational> {
        match self.values.get(&u) {
            Some(ModelValue::Num(q)) => Some(q),
            _ => None,
        }
    }

    pub fn get_bool(&self, u: usize) -> Option<bool> {
        match self.values.get(&u) {
            Some(ModelValue::Bool(b)) => Some(*b),
            _ => None,
        }
    }

    pub fn eval_poly(&self, p: &UPoly) -> Option<num_rational::BigRational> {
        use num_rational::BigRational;
        let mut acc = BigRational::from_integer(0.into());
        for (m, c) in p.terms() {
            let mut t = BigRational::from_integer(c.clone());
            for (u, e) in m.factors() {
                let v = self.get_num(*u)?;
                for _ in 0..*e {
                    t *= v;
                }
            }
            acc += t;
        }
        Some(acc)
    }
}

/// A templated predicate: disjuncts of conjunct rows over `X` and `U`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TemplatePred {
    pub disjuncts: Vec<Vec<SPoly>>,
}

/// Existential witness of a non-inductive path (Check 2's disjunction).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessSlot {
    pub path: usize,
    pub guard: Formula,
    pub pre: Vec<usize>,
    pub fresh: Vec<usize>,
}

/// Everything needed to turn a model back into a certificate.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Layout {
    pub cutpoints: Vec<LocId>,
    pub paths: Vec<Path>,
    /// Map name ("I", "It", "BI", "Cd") to per-cutpoint templates.
    pub maps: BTreeMap<String, BTreeMap<LocId, TemplatePred>>,
    /// Resolution templates per ndet transition index (over `X`, `U`).
    pub resolution: BTreeMap<usize, SPoly>,
    pub ranking: BTreeMap<LocId, SPoly>,
    pub init: Option<Vec<usize>>,
    pub witnesses: Vec<WitnessSlot>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConstraintProblem {
    pub kind: CheckKind,
    pub params: TemplateParams,
    pub unknowns: Vec<Unknown>,
    pub constraints: Vec<Formula>,
    pub layout: Layout,
}

impl ConstraintProblem {
    pub fn unknown_id(&self, name: &str) -> Option<usize> {
        self.unknowns.iter().position(|u| u.name == name)
    }
}

impl ConstraintProblem {
    /// Equalities restricting the templates to a smaller shape: conjunct
    /// rows beyond `shape.c` become `0 >= 0`, disjuncts beyond `shape.d`
    /// become `-1 >= 0`, and monomials above the smaller degree vanish.
    /// Models of the pinned problem are models of the original one.
    pub fn shape_pins(&self, shape: TemplateParams) -> Vec<Formula> {
        let mut out = Vec::new();
        let mut pin = |row: &SPoly, max_deg: u32, falsify: bool, zero: bool| {
            for (mono, coef) in row.split_by(Sym::is_program) {
                let target: i64 = if mono.degree() > max_deg || zero {
                    0
                } else if falsify {
                    if mono.is_one() { -1 } else { 0 }
                } else {
                    continue;
                };
                let u = to_upoly(&coef);
                out.push(Formula::eq(&u - &Poly::constant(target)));
            }
        };
        let deg = shape.template_degree();
        for m in self.layout.maps.values() {
            for t in m.values() {
                for (j, d) in t.disjuncts.iter().enumerate() {
                    for (k, row) in d.iter().enumerate() {
                        if j >= shape.d {
                            pin(row, deg, k == 0, k > 0);
                        } else {
                            pin(row, deg, false, k >= shape.c);
                        }
                    }
                }
            }
        }
        for r in self.layout.resolution.values() {
            pin(r, shape.deg, false, false);
        }
        for f in self.layout.ranking.values() {
            pin(f, deg, false, false);
        }
        out
    }
}

/// Allocator for uniquely named unknowns.
pub struct Unknowns {
    pub list: Vec<Unknown>,
    /// Sort of Farkas multipliers; `Int` is the fallback for solvers that
    /// reject mixed arithmetic.
    pub multiplier_sort: Sort,
    pub deadline: Option<std::time::Instant>,
    seen: std::collections::HashSet<String>,
}

impl Default for Unknowns {
    fn default() -> Self {
        Unknowns { list: Vec::new(), multiplier_sort: Sort::Real, deadline: None, seen: Default::default() }
    }
}

impl Unknowns {
    pub fn fresh(&mut self, name: String, sort: Sort) -> usize {
        assert!(self.seen.insert(name.clone()), "duplicate unknown {name}");
        self.list.push(Unknown { name, sort });
        self.list.len() - 1
    }
}

/// Converts a polynomial free of program symbols to one over unknown ids.
pub(crate) fn to_upoly(p: &SPoly) -> UPoly {
    p.map_vars(|s| match s {
        Sym::U(u) => *u,
        other => panic!("program symbol {other:?} left in unknown polynomial"),
    })
}

/// Lifts a concrete program polynomial.
pub(crate) fn lift(p: &Poly<VarId>) -> SPoly {
    p.map_vars(|v| Sym::X(*v))
}

/// Substitutes the program variables of `p` by `state`.
pub(crate) fn at_state(p: &SPoly, state: &[SPoly]) -> SPoly {
    p.substitute(&mut |s: &Sym| match s {
        Sym::X(v) => state[*v].clone(),
        other => Poly::var(*other),
    })
}
