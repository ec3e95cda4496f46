//! Sparse multivariate polynomials with arbitrary-precision integer coefficients.
//!
//! The variable type is generic so the same representation serves program
//! relations (variables are indices, primed copies offset by the variable
//! count) and symbolic encodings (variables are either program-side or
//! template unknowns).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// A power product of variables. Factors are sorted by variable and carry
/// strictly positive exponents; the empty product is the constant monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Monomial<V> {
    factors: Vec<(V, u32)>,
}

impl<V: Ord + Clone> Monomial<V> {
    pub fn one() -> Self {
        Monomial { factors: Vec::new() }
    }

    pub fn var(v: V) -> Self {
        Monomial { factors: vec![(v, 1)] }
    }

    pub fn from_factors(mut factors: Vec<(V, u32)>) -> Self {
        factors.retain(|(_, e)| *e > 0);
        factors.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(V, u32)> = Vec::with_capacity(factors.len());
        for (v, e) in factors {
            match merged.last_mut() {
                Some((last, le)) if *last == v => *le += e,
                _ => merged.push((v, e)),
            }
        }
        Monomial { factors: merged }
    }

    pub fn factors(&self) -> &[(V, u32)] {
        &self.factors
    }

    pub fn degree(&self) -> u32 {
        self.factors.iter().map(|(_, e)| e).sum()
    }

    pub fn is_one(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.factors.len() + other.factors.len());
        let (mut i, mut j) = (0, 0);
        while i < self.factors.len() && j < other.factors.len() {
            let (a, ea) = &self.factors[i];
            let (b, eb) = &other.factors[j];
            match a.cmp(b) {
                std::cmp::Ordering::Less => {
                    out.push((a.clone(), *ea));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push((b.clone(), *eb));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    out.push((a.clone(), ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.factors[i..]);
        out.extend_from_slice(&other.factors[j..]);
        Monomial { factors: out }
    }

    /// Splits into the part whose variables satisfy `pred` and the rest.
    pub fn split(&self, pred: impl Fn(&V) -> bool) -> (Self, Self) {
        let (a, b): (Vec<_>, Vec<_>) = self.factors.iter().cloned().partition(|(v, _)| pred(v));
        (Monomial { factors: a }, Monomial { factors: b })
    }
}

// Graded order: lower total degree first, then lexicographic on factors.
impl<V: Ord + Clone> Ord for Monomial<V> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.factors.cmp(&other.factors))
    }
}

impl<V: Ord + Clone> PartialOrd for Monomial<V> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// All monomials over `vars` with total degree at most `degree`, in graded order.
pub fn monomials_up_to<V: Ord + Clone>(vars: &[V], degree: u32) -> Vec<Monomial<V>> {
    let mut out = vec![Monomial::one()];
    let mut frontier = vec![(Monomial::one(), 0usize)];
    for _ in 0..degree {
        let mut next = Vec::new();
        for (m, start) in &frontier {
            for (k, v) in vars.iter().enumerate().skip(*start) {
                let nm = m.mul(&Monomial::var(v.clone()));
                out.push(nm.clone());
                next.push((nm, k));
            }
        }
        frontier = next;
    }
    out.sort();
    out
}

/// A polynomial: a finite map from monomials to non-zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poly<V: Ord + Clone> {
    terms: BTreeMap<Monomial<V>, BigInt>,
}

impl<V: Ord + Clone> Default for Poly<V> {
    fn default() -> Self {
        Poly::zero()
    }
}

impl<V: Ord + Clone> Poly<V> {
    pub fn zero() -> Self {
        Poly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Poly::constant(BigInt::one())
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        let c = c.into();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(Monomial::one(), c);
        }
        Poly { terms }
    }

    pub fn var(v: V) -> Self {
        Poly::term(BigInt::one(), Monomial::var(v))
    }

    pub fn term(c: impl Into<BigInt>, m: Monomial<V>) -> Self {
        let c = c.into();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        Poly { terms }
    }

    pub fn from_terms(iter: impl IntoIterator<Item = (Monomial<V>, BigInt)>) -> Self {
        let mut p = Poly::zero();
        for (m, c) in iter {
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial<V>, c: BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(m);
        match entry {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial<V>, &BigInt)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Returns the constant value if the polynomial has no variables.
    pub fn as_constant(&self) -> Option<BigInt> {
        match self.terms.len() {
            0 => Some(BigInt::zero()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn constant_term(&self) -> BigInt {
        self.terms.get(&Monomial::one()).cloned().unwrap_or_default()
    }

    pub fn coeff(&self, m: &Monomial<V>) -> BigInt {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.degree()).max().unwrap_or(0)
    }

    /// Degree counting only the variables accepted by `pred`.
    pub fn degree_in(&self, pred: impl Fn(&V) -> bool) -> u32 {
        self.terms
            .keys()
            .map(|m| m.factors().iter().filter(|(v, _)| pred(v)).map(|(_, e)| e).sum())
            .max()
            .unwrap_or(0)
    }

    pub fn vars(&self) -> BTreeSet<V> {
        self.terms
            .keys()
            .flat_map(|m| m.factors().iter().map(|(v, _)| v.clone()))
            .collect()
    }

    pub fn mentions(&self, v: &V) -> bool {
        self.terms.keys().any(|m| m.factors().iter().any(|(w, _)| w == v))
    }

    pub fn scale(&self, c: &BigInt) -> Self {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Poly::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    /// Replaces every variable by a polynomial over a (possibly different) variable type.
    pub fn substitute<W: Ord + Clone>(&self, f: &mut impl FnMut(&V) -> Poly<W>) -> Poly<W> {
        let mut cache: BTreeMap<V, Poly<W>> = BTreeMap::new();
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut t = Poly::constant(c.clone());
            for (v, e) in m.factors() {
                let base = cache.entry(v.clone()).or_insert_with(|| f(v)).clone();
                t = &t * &base.pow(*e);
            }
            out = &out + &t;
        }
        out
    }

    pub fn map_vars<W: Ord + Clone>(&self, f: impl Fn(&V) -> W) -> Poly<W> {
        Poly::from_terms(self.terms.iter().map(|(m, c)| {
            (
                Monomial::from_factors(m.factors().iter().map(|(v, e)| (f(v), *e)).collect()),
                c.clone(),
            )
        }))
    }

    /// Groups terms by the part of each monomial whose variables satisfy
    /// `outer`; the remaining factors form the coefficient polynomial.
    pub fn split_by(&self, outer: impl Fn(&V) -> bool) -> BTreeMap<Monomial<V>, Poly<V>> {
        let mut out: BTreeMap<Monomial<V>, Poly<V>> = BTreeMap::new();
        for (m, c) in &self.terms {
            let (o, inner) = m.split(&outer);
            out.entry(o).or_default().add_term(inner, c.clone());
        }
        out.retain(|_, p| !p.is_zero());
        out
    }

    /// Exact evaluation.
    pub fn eval_big(&self, val: impl Fn(&V) -> BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (v, e) in m.factors() {
                t *= num_traits::pow(val(v), *e as usize);
            }
            acc += t;
        }
        acc
    }

    /// Evaluation in `i128`; `None` on overflow.
    pub fn eval_i128(&self, val: impl Fn(&V) -> i128) -> Option<i128> {
        let mut acc: i128 = 0;
        for (m, c) in &self.terms {
            let mut t = c.to_i128()?;
            for (v, e) in m.factors() {
                let x = val(v);
                for _ in 0..*e {
                    t = t.checked_mul(x)?;
                }
            }
            acc = acc.checked_add(t)?;
        }
        Some(acc)
    }

    /// Greatest common divisor of all coefficients (zero for the zero polynomial).
    pub fn content(&self) -> BigInt {
        use num_integer::Integer;
        self.terms
            .values()
            .fold(BigInt::zero(), |g, c| g.gcd(c))
    }

    /// Linear coefficient of `v` if `v` occurs only linearly and in no
    /// product with other variables.
    pub fn linear_coeff_isolated(&self, v: &V) -> Option<BigInt> {
        let mut coeff = None;
        for (m, c) in &self.terms {
            if m.factors().iter().any(|(w, _)| w == v) {
                if m.factors().len() == 1 && m.factors()[0].1 == 1 {
                    coeff = Some(c.clone());
                } else {
                    return None;
                }
            }
        }
        coeff
    }

    pub fn is_negative_constant(&self) -> bool {
        matches!(self.as_constant(), Some(c) if c.is_negative())
    }
}

impl<'a, V: Ord + Clone> Add<&'a Poly<V>> for &'a Poly<V> {
    type Output = Poly<V>;
    fn add(self, rhs: &'a Poly<V>) -> Poly<V> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }
}

impl<'a, V: Ord + Clone> Sub<&'a Poly<V>> for &'a Poly<V> {
    type Output = Poly<V>;
    fn sub(self, rhs: &'a Poly<V>) -> Poly<V> {
        let mut out = self.clone();
        for (m, c) in &rhs.terms {
            out.add_term(m.clone(), -c);
        }
        out
    }
}

impl<'a, V: Ord + Clone> Mul<&'a Poly<V>> for &'a Poly<V> {
    type Output = Poly<V>;
    fn mul(self, rhs: &'a Poly<V>) -> Poly<V> {
        let mut out = Poly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl<V: Ord + Clone> Neg for &Poly<V> {
    type Output = Poly<V>;
    fn neg(self) -> Poly<V> {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl<V: Ord + Clone> Add for Poly<V> {
    type Output = Poly<V>;
    fn add(self, rhs: Poly<V>) -> Poly<V> {
        &self + &rhs
    }
}

impl<V: Ord + Clone> Sub for Poly<V> {
    type Output = Poly<V>;
    fn sub(self, rhs: Poly<V>) -> Poly<V> {
        &self - &rhs
    }
}

impl<V: Ord + Clone> Mul for Poly<V> {
    type Output = Poly<V>;
    fn mul(self, rhs: Poly<V>) -> Poly<V> {
        &self * &rhs
    }
}

impl<V: Ord + Clone> Neg for Poly<V> {
    type Output = Poly<V>;
    fn neg(self) -> Poly<V> {
        -&self
    }
}

impl<V: Ord + Clone> Poly<V> {
    /// Infix rendering with a caller-supplied variable printer.
    pub fn display_with<'a>(&'a self, name: impl Fn(&V) -> String + 'a) -> impl fmt::Display + 'a {
        DisplayPoly { poly: self, name: Box::new(name) }
    }
}

struct DisplayPoly<'a, V: Ord + Clone> {
    poly: &'a Poly<V>,
    name: Box<dyn Fn(&V) -> String + 'a>,
}

impl<V: Ord + Clone> fmt::Display for DisplayPoly<'_, V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        // Highest degree first reads more naturally.
        for (i, (m, c)) in self.poly.terms.iter().rev().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            let body: Vec<String> = m
                .factors()
                .iter()
                .map(|(v, e)| {
                    if *e == 1 {
                        (self.name)(v)
                    } else {
                        format!("{}^{}", (self.name)(v), e)
                    }
                })
                .collect();
            if body.is_empty() {
                write!(f, "{}", abs)?;
            } else if abs.is_one() {
                write!(f, "{}", body.join("*"))?;
            } else {
                write!(f, "{}*{}", abs, body.join("*"))?;
            }
        }
        Ok(())
    }
}

/// A polynomial over variable indices compiled for fast repeated evaluation.
#[derive(Clone, Debug)]
pub struct CompiledPoly {
    terms: Vec<(i128, Vec<(usize, u32)>)>,
    exact: Poly<usize>,
    fits: bool,
}

impl CompiledPoly {
    pub fn new(p: &Poly<usize>) -> Self {
        let mut fits = true;
        let terms = p
            .terms()
            .map(|(m, c)| {
                let c = c.to_i128().unwrap_or_else(|| {
                    fits = false;
                    0
                });
                (c, m.factors().to_vec())
            })
            .collect();
        CompiledPoly { terms, exact: p.clone(), fits }
    }

    pub fn vars(&self) -> BTreeSet<usize> {
        self.exact.vars()
    }

    /// Evaluates at `vals`; falls back to exact arithmetic and reports `None`
    /// only when the result itself does not fit in `i128`.
    pub fn eval(&self, vals: &[i128]) -> Option<i128> {
        if self.fits {
            let mut acc: i128 = 0;
            let mut ok = true;
            'outer: for (c, fs) in &self.terms {
                let mut t = *c;
                for (v, e) in fs {
                    for _ in 0..*e {
                        match t.checked_mul(vals[*v]) {
                            Some(x) => t = x,
                            None => {
                                ok = false;
                                break 'outer;
                            }
                        }
                    }
                }
                match acc.checked_add(t) {
                    Some(x) => acc = x,
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                return Some(acc);
            }
        }
        self.exact.eval_big(|v| BigInt::from(vals[*v])).to_i128()
    }

    /// Sign test `p(vals) >= 0`, exact even when intermediate values overflow.
    pub fn nonneg(&self, vals: &[i128]) -> bool {
        match self.eval(vals) {
            Some(x) => x >= 0,
            None => !self.exact.eval_big(|v| BigInt::from(vals[*v])).is_negative(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Poly<usize> {
        Poly::var(0)
    }
    fn y() -> Poly<usize> {
        Poly::var(1)
    }

    #[test]
    fn zero_terms_are_dropped() {
        let p = &x() - &x();
        assert!(p.is_zero());
        assert_eq!(p.degree(), 0);
    }

    #[test]
    fn degree_is_max_total_exponent() {
        let p = &(&x() * &y()) + &x().pow(3);
        assert_eq!(p.degree(), 3);
        assert_eq!(Poly::<usize>::constant(5).degree(), 0);
    }

    #[test]
    fn substitution_composes() {
        // (x + y)[x := 2y] = 3y
        let p = &x() + &y();
        let q: Poly<usize> = p.substitute(&mut |v| if *v == 0 { y().scale(&BigInt::from(2)) } else { y() });
        assert_eq!(q, y().scale(&BigInt::from(3)));
    }

    #[test]
    fn split_groups_coefficients() {
        // a*x + b*x + c with program var 0 and unknowns 10, 11, 12
        let p = &(&(&Poly::var(10) * &x()) + &(&Poly::var(11) * &x())) + &Poly::var(12);
        let s = p.split_by(|v| *v < 10);
        assert_eq!(s.len(), 2);
        assert_eq!(s[&Monomial::var(0)], &Poly::var(10) + &Poly::var(11));
        assert_eq!(s[&Monomial::one()], Poly::var(12));
    }

    #[test]
    fn monomial_enumeration_counts() {
        assert_eq!(monomials_up_to(&[0usize, 1], 0).len(), 1);
        assert_eq!(monomials_up_to(&[0usize, 1], 1).len(), 3);
        assert_eq!(monomials_up_to(&[0usize, 1], 2).len(), 6);
        assert_eq!(monomials_up_to(&[0usize, 1, 2], 2).len(), 10);
    }

    #[test]
    fn compiled_eval_handles_overflow() {
        let p = x().pow(5);
        let c = CompiledPoly::new(&p);
        assert_eq!(c.eval(&[10, 0]), Some(100_000));
        let big = 10i128.pow(20);
        assert_eq!(c.eval(&[big, 0]), None);
        assert!(c.nonneg(&[big, 0]));
        assert!(!c.nonneg(&[-big, 0]));
    }
}
