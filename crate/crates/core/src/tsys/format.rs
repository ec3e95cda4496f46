//! Textual interchange format for transition systems.
//!
//! ```text
//! (transition-system
//!   (vars x y)
//!   (locations l0 l1 out)
//!   (init l0)
//!   (terminal out)
//!   (theta (>= (+ x -9) 0))
//!   (transition l0 l1 (>= (+ x -9) 0) (>= (+ x' (* -1 x)) 0) ...)
//!   (transition l1 l2 :ndet x ...))
//! ```
//!
//! Primed variables are written `x'`. Coefficients are decimal integers of
//! arbitrary size.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive};
use thiserror::Error;

use super::{Assertion, Transition, TransitionSystem, VarId};
use crate::poly::Poly;
use crate::sexpr::{parse_all, Sexp, SexpError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error(transparent)]
    Sexp(#[from] SexpError),
    #[error("expected {0}")]
    Expected(String),
    #[error("unknown variable `{0}`")]
    UnknownVar(String),
    #[error("unknown location `{0}`")]
    UnknownLoc(String),
    #[error("bad polynomial `{0}`")]
    BadPoly(String),
}

fn expected<T>(what: &str) -> Result<T, FormatError> {
    Err(FormatError::Expected(what.to_string()))
}

pub fn poly_to_sexp<V: Ord + Clone>(p: &Poly<V>, name: &impl Fn(&V) -> String) -> Sexp {
    let mut terms: Vec<Sexp> = p
        .terms()
        .map(|(m, c)| {
            let mut items = Vec::new();
            for (v, e) in m.factors() {
                if *e == 1 {
                    items.push(Sexp::atom(name(v)));
                } else {
                    items.push(Sexp::list([Sexp::atom("^"), Sexp::atom(name(v)), Sexp::atom(e.to_string())]));
                }
            }
            if items.is_empty() {
                return Sexp::atom(c.to_string());
            }
            if c.is_one() && items.len() == 1 {
                return items.pop().unwrap();
            }
            let mut l = vec![Sexp::atom("*"), Sexp::atom(c.to_string())];
            l.extend(items);
            Sexp::List(l)
        })
        .collect();
    match terms.len() {
        0 => Sexp::atom("0"),
        1 => terms.pop().unwrap(),
        _ => {
            let mut l = vec![Sexp::atom("+")];
            l.extend(terms);
            Sexp::List(l)
        }
    }
}

pub fn parse_poly_sexp<V: Ord + Clone>(
    s: &Sexp,
    resolve: &impl Fn(&str) -> Option<V>,
) -> Result<Poly<V>, FormatError> {
    match s {
        Sexp::Atom(a) => {
            if let Ok(c) = a.parse::<BigInt>() {
                return Ok(Poly::constant(c));
            }
            resolve(a)
                .map(Poly::var)
                .ok_or_else(|| FormatError::UnknownVar(a.clone()))
        }
        Sexp::List(items) => {
            let bad = || FormatError::BadPoly(s.to_string());
            let head = items.first().and_then(|h| h.as_atom()).ok_or_else(bad)?;
            let args = items[1..]
                .iter()
                .map(|a| parse_poly_sexp(a, resolve));
            match head {
                "+" => args.fold(Ok(Poly::zero()), |acc, a| Ok(&acc? + &a?)),
                "*" => args.fold(Ok(Poly::one()), |acc, a| Ok(&acc? * &a?)),
                "-" => {
                    let v: Vec<Poly<V>> = args.collect::<Result<_, _>>()?;
                    match v.len() {
                        0 => Err(bad()),
                        1 => Ok(-&v[0]),
                        _ => Ok(v[1..].iter().fold(v[0].clone(), |acc, x| &acc - x)),
                    }
                }
                "^" => {
                    if items.len() != 3 {
                        return Err(bad());
                    }
                    let b = parse_poly_sexp(&items[1], resolve)?;
                    let e = items[2]
                        .as_atom()
                        .and_then(|e| e.parse::<u32>().ok())
                        .ok_or_else(bad)?;
                    Ok(b.pow(e))
                }
                _ => Err(bad()),
            }
        }
    }
}

/// `(>= p 0)`
pub(crate) fn atom_to_sexp<V: Ord + Clone>(p: &Poly<V>, name: &impl Fn(&V) -> String) -> Sexp {
    Sexp::list([Sexp::atom(">="), poly_to_sexp(p, name), Sexp::atom("0")])
}

pub(crate) fn parse_atom<V: Ord + Clone>(
    s: &Sexp,
    resolve: &impl Fn(&str) -> Option<V>,
) -> Result<Poly<V>, FormatError> {
    let l = s.as_list().ok_or_else(|| FormatError::Expected("(>= poly 0)".into()))?;
    if l.len() != 3 || !l[0].is_atom(">=") {
        return expected("(>= poly 0)");
    }
    let a = parse_poly_sexp(&l[1], resolve)?;
    let b = parse_poly_sexp(&l[2], resolve)?;
    Ok(&a - &b)
}

impl TransitionSystem {
    pub(crate) fn var_resolver(&self) -> impl Fn(&str) -> Option<VarId> + '_ {
        move |s: &str| {
            let n = self.n_vars();
            if let Some(base) = s.strip_suffix('\'') {
                self.var_index(base).map(|v| v + n)
            } else {
                self.var_index(s)
            }
        }
    }
}

pub fn tsys_to_sexp(ts: &TransitionSystem) -> Sexp {
    let name = |v: &VarId| ts.var_name(*v);
    let mut items = vec![
        Sexp::atom("transition-system"),
        Sexp::list(std::iter::once(Sexp::atom("vars")).chain(ts.vars.iter().map(Sexp::atom))),
        Sexp::list(std::iter::once(Sexp::atom("locations")).chain(ts.locations.iter().map(Sexp::atom))),
        Sexp::list([Sexp::atom("init"), Sexp::atom(&ts.locations[ts.init])]),
        Sexp::list([Sexp::atom("terminal"), Sexp::atom(&ts.locations[ts.terminal])]),
        Sexp::list(
            std::iter::once(Sexp::atom("theta")).chain(ts.theta_init.conjuncts.iter().map(|p| atom_to_sexp(p, &name))),
        ),
    ];
    for t in &ts.transitions {
        let mut l = vec![
            Sexp::atom("transition"),
            Sexp::atom(&ts.locations[t.source]),
            Sexp::atom(&ts.locations[t.target]),
        ];
        if let Some(x) = t.ndet_var {
            l.push(Sexp::atom(":ndet"));
            l.push(Sexp::atom(&ts.vars[x]));
        }
        l.extend(t.relation.conjuncts.iter().map(|p| atom_to_sexp(p, &name)));
        items.push(Sexp::List(l));
    }
    Sexp::List(items)
}

/// Pretty text: one header item or transition per line.
pub fn write_tsys(ts: &TransitionSystem) -> String {
    let s = tsys_to_sexp(ts);
    let items = s.as_list().unwrap();
    let mut out = String::from("(transition-system");
    for it in &items[1..] {
        out.push_str("\n  ");
        out.push_str(&it.to_string());
    }
    out.push_str(")\n");
    out
}

fn names(s: &Sexp, head: &str) -> Result<Vec<String>, FormatError> {
    let l = s.as_list().filter(|_| s.head() == Some(head));
    let Some(l) = l else { return expected(&format!("({head} ...)")) };
    l[1..]
        .iter()
        .map(|a| a.as_atom().map(str::to_string).ok_or_else(|| FormatError::Expected("name".into())))
        .collect()
}

pub fn tsys_from_sexp(s: &Sexp) -> Result<TransitionSystem, FormatError> {
    if s.head() != Some("transition-system") {
        return expected("(transition-system ...)");
    }
    let items = &s.as_list().unwrap()[1..];
    if items.len() < 5 {
        return expected("vars, locations, init, terminal and theta");
    }
    let vars = names(&items[0], "vars")?;
    let locations = names(&items[1], "locations")?;
    let loc = |s: &str| -> Result<usize, FormatError> {
        locations
            .iter()
            .position(|l| l == s)
            .ok_or_else(|| FormatError::UnknownLoc(s.to_string()))
    };
    let init = loc(&names(&items[2], "init")?.first().cloned().unwrap_or_default())?;
    let terminal = loc(&names(&items[3], "terminal")?.first().cloned().unwrap_or_default())?;
    let mut ts = TransitionSystem {
        vars,
        locations: locations.clone(),
        init,
        terminal,
        theta_init: Assertion::top(),
        transitions: Vec::new(),
    };
    if items[4].head() != Some("theta") {
        return expected("(theta ...)");
    }
    let theta = {
        let resolve = ts.var_resolver();
        items[4].as_list().unwrap()[1..]
            .iter()
            .map(|a| parse_atom(a, &resolve))
            .collect::<Result<Vec<_>, _>>()?
    };
    ts.theta_init = Assertion::new(theta);
    let mut transitions = Vec::new();
    for t in &items[5..] {
        if t.head() != Some("transition") {
            return expected("(transition ...)");
        }
        let l = t.as_list().unwrap();
        if l.len() < 3 {
            return expected("transition source and target");
        }
        let src = loc(l[1].as_atom().unwrap_or(""))?;
        let tgt = loc(l[2].as_atom().unwrap_or(""))?;
        let mut rest = &l[3..];
        let mut ndet_var = None;
        if rest.first().map_or(false, |a| a.is_atom(":ndet")) {
            let x = rest.get(1).and_then(|a| a.as_atom()).unwrap_or("");
            ndet_var = Some(ts.var_index(x).ok_or_else(|| FormatError::UnknownVar(x.to_string()))?);
            rest = &rest[2..];
        }
        let resolve = ts.var_resolver();
        let conj = rest.iter().map(|a| parse_atom(a, &resolve)).collect::<Result<Vec<_>, _>>()?;
        transitions.push(Transition { source: src, target: tgt, relation: Assertion::new(conj), ndet_var });
    }
    ts.transitions = transitions;
    Ok(ts)
}

pub fn parse_tsys(text: &str) -> Result<TransitionSystem, FormatError> {
    let all = parse_all(text)?;
    let first = all.first().ok_or(FormatError::Sexp(SexpError::Eof))?;
    tsys_from_sexp(first)
}

/// Parses a small non-negative integer atom.
pub(crate) fn atom_usize(s: &Sexp) -> Option<usize> {
    s.as_atom()?.parse::<BigInt>().ok()?.to_usize()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_round_trip() {
        let x = Poly::var(0usize);
        let y = Poly::var(1usize);
        let p = &(&(&x * &y.pow(2)) - &(&Poly::constant(3) * &x)) + &Poly::constant(BigInt::from(10).pow(30));
        let name = |v: &usize| ["x", "y"][*v].to_string();
        let s = poly_to_sexp(&p, &name);
        let back = parse_poly_sexp(&s, &|n: &str| ["x", "y"].iter().position(|m| *m == n)).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn subtraction_and_negation_forms() {
        let r = |n: &str| if n == "x" { Some(0usize) } else { None };
        let s = crate::sexpr::parse_one("(- x 9 (- 1))").unwrap();
        assert_eq!(parse_poly_sexp(&s, &r).unwrap(), &Poly::var(0) - &Poly::constant(8));
        let s = crate::sexpr::parse_one("(/ x 2)").unwrap();
        assert!(parse_poly_sexp(&s, &r).is_err());
    }

    #[test]
    fn system_round_trip() {
        let text = "(transition-system (vars x y) (locations a b out) (init a) (terminal out)
            (theta (>= x 0))
            (transition a b (>= (+ x -9) 0))
            (transition b a :ndet x (>= (- y' y) 0) (>= (- y y') 0))
            (transition out out))";
        let ts = parse_tsys(text).unwrap();
        assert_eq!(ts.transitions[1].ndet_var, Some(0));
        assert!(ts.transitions[1].relation.conjuncts[0].mentions(&3));
        let again = parse_tsys(&write_tsys(&ts)).unwrap();
        assert_eq!(ts, again);
    }

    #[test]
    fn unknown_names_are_reported() {
        let text = "(transition-system (vars x) (locations a) (init a) (terminal a) (theta) (transition a c))";
        assert_eq!(parse_tsys(text), Err(FormatError::UnknownLoc("c".into())));
    }
}
