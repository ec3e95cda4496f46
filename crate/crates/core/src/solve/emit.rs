use std::fmt::Write;

use num_bigint::BigInt;
use num_traits::Signed;

use crate::encode::{ConstraintProblem, Formula, Sort, UPoly};

/// SMT-LIB symbol, quoted when it is not a plain identifier.
pub fn symbol(name: &str) -> String {
    let plain = !name.is_empty()
        && !name.as_bytes()[0].is_ascii_digit()
        && name.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'_');
    if plain {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

fn sort_name(s: Sort) -> &'static str {
    match s {
        Sort::Int => "Int",
        Sort::Real => "Real",
        Sort::Bool => "Bool",
    }
}

fn constant(c: &BigInt, real: bool) -> String {
    let body = if real { format!("{}.0", c.abs()) } else { c.abs().to_string() };
    if c.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

struct Emitter<'a> {
    p: &'a ConstraintProblem,
    names: Vec<String>,
}

impl Emitter<'_> {
    fn is_real(&self, poly: &UPoly) -> bool {
        poly.vars().iter().any(|u| self.p.unknowns[*u].sort == Sort::Real)
    }

    fn poly(&self, poly: &UPoly, out: &mut String) {
        let real = self.is_real(poly);
        let var = |u: usize| {
            if real && self.p.unknowns[u].sort == Sort::Int {
                format!("(to_real {})", self.names[u])
            } else {
                self.names[u].clone()
            }
        };
        let terms: Vec<String> = poly
            .terms()
            .map(|(m, c)| {
                let mut factors: Vec<String> = Vec::new();
                let one = BigInt::from(1);
                if m.is_one() || *c != one {
                    factors.push(constant(c, real));
                }
                for (u, e) in m.factors() {
                    for _ in 0..*e {
                        factors.push(var(*u));
                    }
                }
                if factors.len() == 1 {
                    factors.pop().unwrap()
                } else {
                    format!("(* {})", factors.join(" "))
                }
            })
            .collect();
        match terms.len() {
            0 => out.push_str(&constant(&BigInt::from(0), real)),
            1 => out.push_str(&terms[0]),
            _ => {
                let _ = write!(out, "(+ {})", terms.join(" "));
            }
        }
    }

    fn formula(&self, f: &Formula, out: &mut String) {
        match f {
            Formula::True => out.push_str("true"),
            Formula::False => out.push_str("false"),
            Formula::Eq(p) | Formula::Ge(p) => {
                let real = self.is_real(p);
                out.push_str(if matches!(f, Formula::Eq(_)) { "(= " } else { "(>= " });
                self.poly(p, out);
                out.push(' ');
                out.push_str(&constant(&BigInt::from(0), real));
                out.push(')');
            }
            Formula::Bool(u) => out.push_str(&self.names[*u]),
            Formula::Not(g) => {
                out.push_str("(not ");
                self.formula(g, out);
                out.push(')');
            }
            Formula::And(gs) | Formula::Or(gs) => {
                out.push_str(if matches!(f, Formula::And(_)) { "(and" } else { "(or" });
                for g in gs {
                    out.push(' ');
                    self.formula(g, out);
                }
                out.push(')');
            }
            Formula::Implies(a, b) => {
                out.push_str("(=> ");
                self.formula(a, out);
                out.push(' ');
                self.formula(b, out);
                out.push(')');
            }
        }
    }
}

/// Deterministic SMT-LIB text: declarations, assertions, `check-sat` and a
/// `get-value` over every unknown.
pub fn emit(problem: &ConstraintProblem, logic: &str) -> String {
    let e = Emitter { p: problem, names: problem.unknowns.iter().map(|u| symbol(&u.name)).collect() };
    let mut out = String::new();
    out.push_str("(set-option :produce-models true)\n");
    if !logic.is_empty() {
        let _ = writeln!(out, "(set-logic {logic})");
    }
    for (u, name) in problem.unknowns.iter().zip(&e.names) {
        let _ = writeln!(out, "(declare-fun {} () {})", name, sort_name(u.sort));
    }
    if problem.constraints.is_empty() {
        out.push_str("(assert true)\n");
    }
    for c in &problem.constraints {
        out.push_str("(assert ");
        e.formula(c, &mut out);
        out.push_str(")\n");
    }
    out.push_str("(check-sat)\n");
    if !problem.unknowns.is_empty() {
        let _ = writeln!(out, "(get-value ({}))", e.names.join(" "));
    }
    out
}
