//! Certificates and their textual file format.
//!
//! ```text
//! (certificate
//!   (kind check1)
//!   (system (transition-system ...))
//!   (cutpoints l0 l3 out)
//!   (resolution (2 9))
//!   (theta)
//!   (map I (l0 (or (and (>= (+ x -9) 0)))) (out (or (and (>= -1 0))))))
//!   (init 9 0))
//! ```
//!
//! Predicate maps list cutpoints only; every other location reads back as
//! `true`. Witness paths are written as transition indices plus the
//! configurations visited.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::encode::CheckKind;
use crate::poly::Poly;
use crate::sexpr::{parse_all, Sexp};
use crate::tsys::{
    atom_to_sexp, atom_usize, parse_atom, parse_poly_sexp, poly_to_sexp, tsys_from_sexp, tsys_to_sexp, Assertion,
    Configuration, FormatError, LocId, Predicate, PredicateMap, Resolution, TransitionSystem, VarId,
};

#[derive(Debug, Error)]
pub enum CertError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("malformed certificate: {0}")]
    Malformed(String),
}

fn malformed<T>(s: impl Into<String>) -> Result<T, CertError> {
    Err(CertError::Malformed(s.into()))
}

/// A path through the system with the configuration after every step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub transitions: Vec<usize>,
    /// `transitions.len() + 1` configurations.
    pub configs: Vec<Configuration>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub kind: CheckKind,
    pub system: TransitionSystem,
    pub cutpoints: Vec<LocId>,
    pub resolution: Resolution,
    /// Θ of the reversed system; `true` for Check 1.
    pub theta: Assertion,
    /// Check 1 invariant.
    pub inv: Option<PredicateMap>,
    pub itilde: Option<PredicateMap>,
    pub bi: Option<PredicateMap>,
    pub cdiamond: Option<PredicateMap>,
    pub ranking: Option<BTreeMap<LocId, Poly<VarId>>>,
    pub init: Option<Vec<i128>>,
    /// Path along which BI fails to be inductive.
    pub witness: Option<Witness>,
    /// Run from an initial configuration into ¬BI.
    pub reach: Option<Witness>,
}

impl Certificate {
    pub fn new(kind: CheckKind, system: TransitionSystem, cutpoints: Vec<LocId>) -> Self {
        Certificate {
            kind,
            system,
            cutpoints,
            resolution: Resolution::new(),
            theta: Assertion::top(),
            inv: None,
            itilde: None,
            bi: None,
            cdiamond: None,
            ranking: None,
            init: None,
            witness: None,
            reach: None,
        }
    }

    pub fn restricted(&self) -> Result<TransitionSystem, crate::tsys::TsysError> {
        self.system.restrict(&self.resolution)
    }
}

fn head(name: &str, rest: impl IntoIterator<Item = Sexp>) -> Sexp {
    Sexp::list(std::iter::once(Sexp::atom(name)).chain(rest))
}

fn config_sexp(ts: &TransitionSystem, c: &Configuration) -> Sexp {
    head(&ts.locations[c.loc], c.vals.iter().map(|v| Sexp::atom(v.to_string())))
}

fn witness_sexp(name: &str, ts: &TransitionSystem, w: &Witness) -> Sexp {
    head(
        name,
        [
            head("path", w.transitions.iter().map(|t| Sexp::atom(t.to_string()))),
            head("configs", w.configs.iter().map(|c| config_sexp(ts, c))),
        ],
    )
}

fn predicate_sexp(ts: &TransitionSystem, p: &Predicate) -> Sexp {
    let name = |v: &VarId| ts.var_name(*v);
    head(
        "or",
        p.disjuncts.iter().map(|d| head("and", d.conjuncts.iter().map(|c| atom_to_sexp(c, &name)))),
    )
}

pub fn cert_to_sexp(c: &Certificate) -> Sexp {
    let ts = &c.system;
    let name = |v: &VarId| ts.var_name(*v);
    let mut items = vec![
        Sexp::atom("certificate"),
        head("kind", [Sexp::atom(c.kind.name())]),
        head("system", [tsys_to_sexp(ts)]),
        head("cutpoints", c.cutpoints.iter().map(|l| Sexp::atom(&ts.locations[*l]))),
        head("resolution", c.resolution.iter().map(|(t, p)| Sexp::list([Sexp::atom(t.to_string()), poly_to_sexp(p, &name)]))),
        head("theta", c.theta.conjuncts.iter().map(|p| atom_to_sexp(p, &name))),
    ];
    let maps = [("I", &c.inv), ("Itilde", &c.itilde), ("BI", &c.bi), ("Cdiamond", &c.cdiamond)];
    for (label, m) in maps {
        if let Some(m) = m {
            let entries = c.cutpoints.iter().map(|l| head(&ts.locations[*l], [predicate_sexp(ts, m.get(*l))]));
            items.push(head("map", std::iter::once(Sexp::atom(label)).chain(entries)));
        }
    }
    if let Some(r) = &c.ranking {
        items.push(head("ranking", r.iter().map(|(l, p)| Sexp::list([Sexp::atom(&ts.locations[*l]), poly_to_sexp(p, &name)]))));
    }
    if let Some(v) = &c.init {
        items.push(head("init", v.iter().map(|x| Sexp::atom(x.to_string()))));
    }
    if let Some(w) = &c.witness {
        items.push(witness_sexp("witness", ts, w));
    }
    if let Some(w) = &c.reach {
        items.push(witness_sexp("reach", ts, w));
    }
    Sexp::List(items)
}

/// One top-level item per line.
pub fn write_certificate(c: &Certificate) -> String {
    let Sexp::List(items) = cert_to_sexp(c) else { unreachable!() };
    let mut out = String::from("(certificate\n");
    for it in &items[1..] {
        if it.head() == Some("system") {
            out.push_str("  (system\n");
            out.push_str(&indent(&crate::tsys::write_tsys(&c.system), "    "));
            out.push_str("  )\n");
        } else {
            out.push_str(&format!("  {it}\n"));
        }
    }
    out.push_str(")\n");
    out
}

fn indent(text: &str, pad: &str) -> String {
    text.lines().map(|l| format!("{pad}{l}\n")).collect()
}

fn parse_i128(s: &Sexp) -> Result<i128, CertError> {
    match s.as_atom().and_then(|a| a.parse().ok()) {
        Some(v) => Ok(v),
        None => malformed(format!("integer expected, got {s}")),
    }
}

fn parse_config(ts: &TransitionSystem, s: &Sexp) -> Result<Configuration, CertError> {
    let l = match s.as_list() {
        Some(l) if !l.is_empty() => l,
        _ => return malformed("configuration"),
    };
    let loc = l[0].as_atom().and_then(|n| ts.loc_index(n)).ok_or_else(|| CertError::Malformed(format!("location in {s}")))?;
    let vals = l[1..].iter().map(parse_i128).collect::<Result<Vec<_>, _>>()?;
    if vals.len() != ts.n_vars() {
        return malformed(format!("arity of {s}"));
    }
    Ok(Configuration { loc, vals })
}

fn parse_witness(ts: &TransitionSystem, s: &Sexp) -> Result<Witness, CertError> {
    let l = s.as_list().unwrap_or(&[]);
    let mut w = Witness { transitions: Vec::new(), configs: Vec::new() };
    for part in &l[1..] {
        let pl = part.as_list().unwrap_or(&[]);
        match part.head() {
            Some("path") => {
                for t in &pl[1..] {
                    match atom_usize(t) {
                        Some(i) if i < ts.transitions.len() => w.transitions.push(i),
                        _ => return malformed(format!("transition index {t}")),
                    }
                }
            }
            Some("configs") => {
                for c in &pl[1..] {
                    w.configs.push(parse_config(ts, c)?);
                }
            }
            _ => return malformed(format!("witness part {part}")),
        }
    }
    if w.configs.len() != w.transitions.len() + 1 {
        return malformed("witness needs one more configuration than transitions");
    }
    Ok(w)
}

fn parse_predicate(ts: &TransitionSystem, s: &Sexp) -> Result<Predicate, CertError> {
    if s.head() != Some("or") {
        return malformed(format!("(or ...) expected, got {s}"));
    }
    let resolve = ts.var_resolver();
    let mut ds = Vec::new();
    for d in &s.as_list().unwrap()[1..] {
        if d.head() != Some("and") {
            return malformed(format!("(and ...) expected, got {d}"));
        }
        let cs = d.as_list().unwrap()[1..].iter().map(|a| parse_atom(a, &resolve)).collect::<Result<Vec<_>, _>>()?;
        ds.push(Assertion::new(cs));
    }
    Ok(Predicate::new(ds))
}

fn parse_loc(ts: &TransitionSystem, s: &Sexp) -> Result<LocId, CertError> {
    s.as_atom().and_then(|n| ts.loc_index(n)).ok_or_else(|| CertError::Malformed(format!("unknown location {s}")))
}

pub fn cert_from_sexp(s: &Sexp) -> Result<Certificate, CertError> {
    if s.head() != Some("certificate") {
        return malformed("(certificate ...) expected");
    }
    let items = &s.as_list().unwrap()[1..];
    let find = |name: &str| items.iter().find(|i| i.head() == Some(name));
    let kind = find("kind")
        .and_then(|k| k.as_list()?.get(1)?.as_atom().and_then(CheckKind::from_name))
        .ok_or_else(|| CertError::Malformed("kind".into()))?;
    let sys = find("system").and_then(|k| k.as_list()?.get(1)).ok_or_else(|| CertError::Malformed("system".into()))?;
    let ts = tsys_from_sexp(sys)?;
    let cutpoints = match find("cutpoints") {
        Some(c) => c.as_list().unwrap()[1..].iter().map(|l| parse_loc(&ts, l)).collect::<Result<Vec<_>, _>>()?,
        None => (0..ts.n_locs()).collect(),
    };
    let mut cert = Certificate::new(kind, ts.clone(), cutpoints);
    let resolve = ts.var_resolver();
    for item in items {
        let l = item.as_list().unwrap_or(&[]);
        match item.head() {
            Some("kind" | "system" | "cutpoints") => {}
            Some("resolution") => {
                for e in &l[1..] {
                    let (t, p) = match e.as_list() {
                        Some([t, p]) => (t, p),
                        _ => return malformed(format!("resolution entry {e}")),
                    };
                    let t = atom_usize(t).ok_or_else(|| CertError::Malformed(format!("transition {t}")))?;
                    cert.resolution.insert(t, parse_poly_sexp(p, &resolve)?);
                }
            }
            Some("theta") => {
                cert.theta = Assertion::new(l[1..].iter().map(|a| parse_atom(a, &resolve)).collect::<Result<_, _>>()?);
            }
            Some("map") => {
                let label = l.get(1).and_then(|a| a.as_atom()).unwrap_or("");
                let mut m = PredicateMap::uniform(ts.n_locs(), Predicate::top());
                for e in &l[2..] {
                    let (loc, p) = match e.as_list() {
                        Some([loc, p]) => (parse_loc(&ts, loc)?, parse_predicate(&ts, p)?),
                        _ => return malformed(format!("map entry {e}")),
                    };
                    m.set(loc, p);
                }
                let slot = match label {
                    "I" => &mut cert.inv,
                    "Itilde" => &mut cert.itilde,
                    "BI" => &mut cert.bi,
                    "Cdiamond" => &mut cert.cdiamond,
                    _ => return malformed(format!("unknown map {label}")),
                };
                *slot = Some(m);
            }
            Some("ranking") => {
                let mut r = BTreeMap::new();
                for e in &l[1..] {
                    match e.as_list() {
                        Some([loc, p]) => {
                            r.insert(parse_loc(&ts, loc)?, parse_poly_sexp(p, &resolve)?);
                        }
                        _ => return malformed(format!("ranking entry {e}")),
                    }
                }
                cert.ranking = Some(r);
            }
            Some("init") => {
                let v = l[1..].iter().map(parse_i128).collect::<Result<Vec<_>, _>>()?;
                if v.len() != ts.n_vars() {
                    return malformed("init arity");
                }
                cert.init = Some(v);
            }
            Some("witness") => cert.witness = Some(parse_witness(&ts, item)?),
            Some("reach") => cert.reach = Some(parse_witness(&ts, item)?),
            _ => return malformed(format!("unknown item {item}")),
        }
    }
    Ok(cert)
}

pub fn parse_certificate(text: &str) -> Result<Certificate, CertError> {
    let all = parse_all(text).map_err(|e| CertError::Format(e.into()))?;
    match all.first() {
        Some(s) => cert_from_sexp(s),
        None => malformed("empty input"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{lower, parse_program};

    #[test]
    fn round_trip() {
        let ts = lower(&parse_program("var x\nwhile x >= 9 do x := ndet() od").unwrap()).unwrap();
        let l0 = ts.loc_index("l0").unwrap();
        let out = ts.terminal;
        let mut c = Certificate::new(CheckKind::Check1, ts.clone(), vec![l0, out]);
        c.resolution.insert(ts.ndet_transitions()[0], Poly::constant(9));
        let mut inv = PredicateMap::uniform(ts.n_locs(), Predicate::top());
        inv.set(l0, Predicate::single(Assertion::new(vec![&Poly::var(0) - &Poly::constant(9)])));
        inv.set(out, Predicate::bottom());
        c.inv = Some(inv);
        c.init = Some(vec![9]);
        c.reach = Some(Witness {
            transitions: vec![0],
            configs: vec![Configuration { loc: l0, vals: vec![9] }, Configuration { loc: 1, vals: vec![9] }],
        });
        let text = write_certificate(&c);
        let back = parse_certificate(&text).unwrap();
        assert_eq!(back, c);
    }
}
