//! Normal-form engine for symbolic expressions.
//!
//! An expression is kept as a fraction of two expanded polynomials over
//! *atoms*: coordinates, sin/cos/exp/log applications, and opaque rational
//! powers of compound subexpressions. Monomial entries carry rational
//! exponents; integer powers are always expanded into the polynomial
//! structure (negative ones into the denominator), so two expressions that
//! agree as rational functions of the atoms subtract to a literal zero.
//!
//! Completeness caveat: atoms are treated as algebraically independent.
//! Relations like sin² + cos² = 1 are not rewritten here; callers that need
//! them fall back to seeded numeric comparison.

use crate::rational::Rational;
use std::cmp::Ordering;

/// Domain failures raised while building or evaluating normal forms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum NfError {
    DivisionByZero,
    /// log of a non-positive constant, fractional power of a negative
    /// constant, and similar.
    Domain(String),
    /// evaluation point has fewer coordinates than the expression uses
    Dimension {
        expected: usize,
        got: usize,
    },
}

// ---------------------------------------------------------------------------
// Atoms
// ---------------------------------------------------------------------------

/// An indivisible symbol of the polynomial layer.
///
/// `Power(base)` stands for `base^r` with the exponent `r` kept in the
/// monomial entry; it is created only for non-integer powers of compound
/// or constant bases.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) enum Atom {
    Coord(usize),
    Sin(Frac),
    Cos(Frac),
    Exp(Frac),
    Log(Frac),
    Power(Frac),
}

impl Atom {
    fn max_coord(&self) -> Option<usize> {
        match self {
            Atom::Coord(i) => Some(*i),
            Atom::Sin(f) | Atom::Cos(f) | Atom::Exp(f) | Atom::Log(f) | Atom::Power(f) => {
                f.max_coord()
            }
        }
    }

    fn eval(&self, point: &[f64]) -> Result<f64, NfError> {
        match self {
            Atom::Coord(i) => {
                if *i < point.len() {
                    Ok(point[*i])
                } else {
                    Err(NfError::Dimension {
                        expected: *i + 1,
                        got: point.len(),
                    })
                }
            }
            Atom::Sin(f) => Ok(f.eval(point)?.sin()),
            Atom::Cos(f) => Ok(f.eval(point)?.cos()),
            Atom::Exp(f) => Ok(f.eval(point)?.exp()),
            Atom::Log(f) => {
                let v = f.eval(point)?;
                if v <= 0.0 {
                    Err(NfError::Domain(format!("log of non-positive value {v}")))
                } else {
                    Ok(v.ln())
                }
            }
            Atom::Power(f) => f.eval(point),
        }
    }
}

// ---------------------------------------------------------------------------
// Monomials
// ---------------------------------------------------------------------------

/// Product of atom powers. Entries are sorted by atom and the exponents are
/// nonzero; an exponent is either a positive integer or a non-integer
/// rational (negative integer powers live in the denominator polynomial).
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Monomial {
    pub entries: Vec<(Atom, Rational)>,
}

/// Result of multiplying monomials: `mult * num / den` where `den` has
/// positive integer exponents only.
pub(crate) struct MonoProd {
    pub mult: Rational,
    pub num: Monomial,
    pub den: Monomial,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial {
            entries: Vec::new(),
        }
    }

    pub fn atom(a: Atom) -> Self {
        Monomial {
            entries: vec![(a, Rational::one())],
        }
    }

    pub fn is_one(&self) -> bool {
        self.entries.is_empty()
    }

    fn degree(&self) -> Rational {
        let mut d = Rational::zero();
        for (_, e) in &self.entries {
            d += e.clone();
        }
        d
    }

    fn max_coord(&self) -> Option<usize> {
        self.entries.iter().filter_map(|(a, _)| a.max_coord()).max()
    }

    fn eval(&self, point: &[f64]) -> Result<f64, NfError> {
        let mut acc = 1.0;
        for (a, e) in &self.entries {
            let base = a.eval(point)?;
            let v = if let Some(k) = e.to_integer() {
                if base == 0.0 && k < 0 {
                    return Err(NfError::DivisionByZero);
                }
                base.powi(k as i32)
            } else {
                if base < 0.0 {
                    return Err(NfError::Domain(format!(
                        "fractional power of negative value {base}"
                    )));
                }
                if base == 0.0 && e.is_negative() {
                    return Err(NfError::DivisionByZero);
                }
                base.powf(e.to_f64())
            };
            acc *= v;
        }
        Ok(acc)
    }

    /// Graded-lexicographic order: total degree first, then exponents along
    /// the merged atom sequence (earlier atom in `Atom` order is the more
    /// significant variable).
    fn cmp_grlex(&self, other: &Self) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let mut i = 0;
        let mut j = 0;
        loop {
            match (self.entries.get(i), other.entries.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((a, ea)), Some((b, eb))) => match a.cmp(b) {
                    Ordering::Less => return Ordering::Greater, // self has the earlier atom
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match ea.cmp(eb) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        ord => return ord,
                    },
                },
            }
        }
    }

    /// Normalizes an unsorted entry list: merges equal atoms, folds exp
    /// products into a single exp atom, folds constant-base powers, and
    /// moves negative integer powers into the denominator carry.
    pub fn normalize(entries: Vec<(Atom, Rational)>) -> Result<MonoProd, NfError> {
        let mut entries = entries;
        entries.sort_by(|(a, _), (b, _)| a.cmp(b));

        // merge equal atoms
        let mut merged: Vec<(Atom, Rational)> = Vec::with_capacity(entries.len());
        for (atom, exp) in entries {
            if exp.is_zero() {
                continue;
            }
            match merged.last_mut() {
                Some((last, e)) if *last == atom => {
                    *e += exp;
                }
                _ => merged.push((atom, exp)),
            }
        }
        merged.retain(|(_, e)| !e.is_zero());

        // fold all exp factors into one: Π exp(g_i)^{r_i} = exp(Σ r_i g_i)
        let mut exp_arg: Option<Frac> = None;
        let mut rest: Vec<(Atom, Rational)> = Vec::with_capacity(merged.len());
        for (atom, exp) in merged {
            if let Atom::Exp(g) = &atom {
                let scaled = g.scale(&exp);
                exp_arg = Some(match exp_arg {
                    None => scaled,
                    Some(acc) => acc.add(&scaled),
                });
            } else {
                rest.push((atom, exp));
            }
        }
        if let Some(g) = exp_arg {
            if !g.is_zero() {
                rest.push((Atom::Exp(g), Rational::one()));
            }
        }

        // fold constant-base powers, split off denominator entries
        let mut mult = Rational::one();
        let mut num: Vec<(Atom, Rational)> = Vec::new();
        let mut den: Vec<(Atom, Rational)> = Vec::new();
        for (atom, exp) in rest {
            if let Atom::Power(b) = &atom {
                if let Some(c) = b.as_constant() {
                    if let Some(v) = c.rational_root(&exp) {
                        mult *= v;
                        continue;
                    }
                    if c.is_negative() || c.is_zero() {
                        return Err(NfError::Domain(format!(
                            "fractional power of non-positive constant {c}"
                        )));
                    }
                    // keep the fractional part in (0,1), fold the rest
                    let (fl, fr) = exp.split_floor();
                    mult *= c.pow(fl);
                    if !fr.is_zero() {
                        num.push((Atom::Power(b.clone()), fr));
                    }
                    continue;
                }
            }
            match exp.to_integer() {
                Some(k) if k < 0 => den.push((atom, Rational::from_int(-k))),
                _ => num.push((atom, exp)),
            }
        }
        num.sort_by(|(a, _), (b, _)| a.cmp(b));
        den.sort_by(|(a, _), (b, _)| a.cmp(b));
        Ok(MonoProd {
            mult,
            num: Monomial { entries: num },
            den: Monomial { entries: den },
        })
    }

    fn mul(&self, other: &Self) -> Result<MonoProd, NfError> {
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().cloned());
        Monomial::normalize(entries)
    }

    /// Componentwise quotient when `divisor` divides `self`.
    fn try_div(&self, divisor: &Self) -> Option<Monomial> {
        let mut out: Vec<(Atom, Rational)> = Vec::new();
        let mut i = 0;
        for (atom, exp) in &divisor.entries {
            loop {
                let (a, e) = self.entries.get(i)?;
                if a == atom {
                    if e < exp {
                        return None;
                    }
                    let rem = e - exp;
                    if !rem.is_zero() {
                        // a positive remainder is always a valid entry
                        out.push((a.clone(), rem));
                    }
                    i += 1;
                    break;
                } else if a < atom {
                    out.push((a.clone(), e.clone()));
                    i += 1;
                } else {
                    return None;
                }
            }
        }
        out.extend(self.entries[i..].iter().cloned());
        Some(Monomial { entries: out })
    }
}

// ---------------------------------------------------------------------------
// Polynomials
// ---------------------------------------------------------------------------

/// Expanded polynomial over atoms: terms sorted descending in grlex order,
/// coefficients nonzero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Poly {
    pub terms: Vec<(Monomial, Rational)>,
}

impl PartialOrd for Poly {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Poly {
    fn cmp(&self, other: &Self) -> Ordering {
        let mut i = 0;
        loop {
            match (self.terms.get(i), other.terms.get(i)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some((ma, ca)), Some((mb, cb))) => {
                    match ma.cmp_grlex(mb).then_with(|| ca.cmp(cb)) {
                        Ordering::Equal => i += 1,
                        ord => return ord,
                    }
                }
            }
        }
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_grlex(other)
    }
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    pub fn constant(c: Rational) -> Self {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly {
                terms: vec![(Monomial::one(), c)],
            }
        }
    }

    pub fn one() -> Self {
        Poly::constant(Rational::one())
    }

    pub fn atom(a: Atom) -> Self {
        Poly {
            terms: vec![(Monomial::atom(a), Rational::one())],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms[0].0.is_one() && self.terms[0].1.is_one()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        if self.terms.is_empty() {
            Some(Rational::zero())
        } else if self.terms.len() == 1 && self.terms[0].0.is_one() {
            Some(self.terms[0].1.clone())
        } else {
            None
        }
    }

    fn from_sorted(mut terms: Vec<(Monomial, Rational)>) -> Self {
        terms.retain(|(_, c)| !c.is_zero());
        Poly { terms }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out: Vec<(Monomial, Rational)> =
            Vec::with_capacity(self.terms.len() + other.terms.len());
        let mut i = 0;
        let mut j = 0;
        while i < self.terms.len() && j < other.terms.len() {
            let (ma, ca) = &self.terms[i];
            let (mb, cb) = &other.terms[j];
            match ma.cmp_grlex(mb) {
                Ordering::Greater => {
                    out.push((ma.clone(), ca.clone()));
                    i += 1;
                }
                Ordering::Less => {
                    out.push((mb.clone(), cb.clone()));
                    j += 1;
                }
                Ordering::Equal => {
                    let c = ca + cb;
                    if !c.is_zero() {
                        out.push((ma.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend(self.terms[i..].iter().cloned());
        out.extend(other.terms[j..].iter().cloned());
        Poly { terms: out }
    }

    pub fn neg(&self) -> Self {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    /// Multiplies by a monomial whose entries cannot produce carries
    /// (used for the integer-exponent denominators from `mul_raw`).
    fn mul_mono(&self, m: &Monomial) -> Result<Poly, NfError> {
        if m.is_one() {
            return Ok(self.clone());
        }
        let mut terms: Vec<(Monomial, Rational)> = Vec::with_capacity(self.terms.len());
        for (mono, c) in &self.terms {
            let prod = mono.mul(m)?;
            debug_assert!(prod.den.is_one() && prod.mult.is_one());
            terms.push((prod.num, c * &prod.mult));
        }
        terms.sort_by(|(a, _), (b, _)| b.cmp_grlex(a));
        Ok(Poly::from_sorted(terms))
    }

    /// Raw product `self * other = poly / den_monomial`; the denominator
    /// collects negative integer powers produced by exponent merging.
    pub fn mul_raw(&self, other: &Self) -> Result<(Poly, Monomial), NfError> {
        use std::collections::BTreeMap;
        if self.is_zero() || other.is_zero() {
            return Ok((Poly::zero(), Monomial::one()));
        }
        // group accumulated terms by their private denominator monomial
        let mut groups: BTreeMap<Monomial, BTreeMap<Monomial, Rational>> = BTreeMap::new();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let prod = ma.mul(mb)?;
                let coeff = ca * cb * prod.mult;
                if coeff.is_zero() {
                    continue;
                }
                let slot = groups
                    .entry(prod.den)
                    .or_default()
                    .entry(prod.num)
                    .or_insert_with(Rational::zero);
                *slot += coeff;
            }
        }
        if groups.len() == 1 {
            let (den, terms) = groups.into_iter().next().unwrap();
            let mut v: Vec<(Monomial, Rational)> = terms.into_iter().collect();
            v.sort_by(|(a, _), (b, _)| b.cmp_grlex(a));
            return Ok((Poly::from_sorted(v), den));
        }
        // common denominator = entry-wise max over the group denominators
        let mut common: Vec<(Atom, Rational)> = Vec::new();
        for den in groups.keys() {
            for (a, e) in &den.entries {
                match common.iter_mut().find(|(b, _)| b == a) {
                    Some((_, cur)) => {
                        if &*cur < e {
                            *cur = e.clone();
                        }
                    }
                    None => common.push((a.clone(), e.clone())),
                }
            }
        }
        common.sort_by(|(a, _), (b, _)| a.cmp(b));
        let common = Monomial { entries: common };
        let mut total = Poly::zero();
        for (den, terms) in groups {
            let factor = common
                .try_div(&den)
                .expect("common denominator must be divisible by each group denominator");
            let mut v: Vec<(Monomial, Rational)> = terms.into_iter().collect();
            v.sort_by(|(a, _), (b, _)| b.cmp_grlex(a));
            let p = Poly::from_sorted(v).mul_mono(&factor)?;
            total = total.add(&p);
        }
        Ok((total, common))
    }

    /// Exact multivariate division; `Some(q)` iff `self = q * divisor`.
    pub fn try_exact_div(&self, divisor: &Self) -> Option<Poly> {
        if divisor.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(Poly::zero());
        }
        let (lead_m, lead_c) = &divisor.terms[0];
        let mut rem = self.clone();
        let mut quo: Vec<(Monomial, Rational)> = Vec::new();
        while !rem.is_zero() {
            let (rm, rc) = &rem.terms[0];
            let qm = rm.try_div(lead_m)?;
            let qc = rc / lead_c;
            // rem -= (qc * qm) * divisor
            let scaled = divisor.scale(&qc).mul_mono(&qm).ok()?;
            rem = rem.sub(&scaled);
            quo.push((qm, qc));
        }
        quo.sort_by(|(a, _), (b, _)| b.cmp_grlex(a));
        Some(Poly::from_sorted(quo))
    }

    /// Entry-wise minimum over all terms, keeping only atoms present in every
    /// monomial with a positive minimum exponent (safe to divide out).
    fn content_exact(&self) -> Vec<(Atom, Rational)> {
        let mut acc: Option<Vec<(Atom, Rational)>> = None;
        for (m, _) in &self.terms {
            match &mut acc {
                None => acc = Some(m.entries.clone()),
                Some(cur) => {
                    let mut next = Vec::with_capacity(cur.len());
                    for (a, e) in cur.iter() {
                        if let Some((_, e2)) = m.entries.iter().find(|(b, _)| b == a) {
                            let low = if e2 < e { e2.clone() } else { e.clone() };
                            next.push((a.clone(), low));
                        }
                    }
                    *cur = next;
                }
            }
            if acc.as_ref().map(|v| v.is_empty()).unwrap_or(false) {
                break;
            }
        }
        let mut entries = acc.unwrap_or_default();
        entries.retain(|(_, e)| !e.is_negative() && !e.is_zero());
        entries
    }

    /// Content restricted to integer exponent parts, used to keep power-atom
    /// bases primitive.
    fn content_int(&self) -> Monomial {
        let mut entries = self.content_exact();
        entries.retain_mut(|(_, e)| {
            let (fl, _) = e.split_floor();
            if fl >= 1 {
                *e = Rational::from_int(fl);
                true
            } else {
                false
            }
        });
        Monomial { entries }
    }

    fn div_content(&self, content: &Monomial) -> Poly {
        if content.is_one() {
            return self.clone();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    (
                        m.try_div(content).expect("content divides every monomial"),
                        c.clone(),
                    )
                })
                .collect(),
        }
    }

    pub fn max_coord(&self) -> Option<usize> {
        self.terms.iter().filter_map(|(m, _)| m.max_coord()).max()
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, NfError> {
        let mut acc = 0.0;
        for (m, c) in &self.terms {
            acc += c.to_f64() * m.eval(point)?;
        }
        Ok(acc)
    }
}

// ---------------------------------------------------------------------------
// Fractions
// ---------------------------------------------------------------------------

/// Normalized quotient of two polynomials. Invariants: `den` is nonzero with
/// leading coefficient 1; a zero numerator forces `den = 1`; monomial content
/// common to both sides (fractional exponents included) is cancelled and
/// exact polynomial division by the full denominator has been attempted;
/// power atoms never carry integer exponents — those are expanded back into
/// their base polynomials, so `(√f)² = f` holds in normal form.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub(crate) struct Frac {
    pub num: Poly,
    pub den: Poly,
}

impl Frac {
    pub fn zero() -> Self {
        Frac {
            num: Poly::zero(),
            den: Poly::one(),
        }
    }

    pub fn one() -> Self {
        Frac {
            num: Poly::one(),
            den: Poly::one(),
        }
    }

    pub fn constant(c: Rational) -> Self {
        Frac {
            num: Poly::constant(c),
            den: Poly::one(),
        }
    }

    pub fn coord(i: usize) -> Self {
        Frac {
            num: Poly::atom(Atom::Coord(i)),
            den: Poly::one(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num.is_one() && self.den.is_one()
    }

    pub fn as_constant(&self) -> Option<Rational> {
        if self.den.is_one() {
            self.num.as_constant()
        } else {
            None
        }
    }

    /// `Some(i)` when the fraction is exactly the coordinate `xᵢ`.
    pub fn as_coord(&self) -> Option<usize> {
        if !self.den.is_one() || self.num.terms.len() != 1 {
            return None;
        }
        let (mono, coeff) = &self.num.terms[0];
        if !coeff.is_one() || mono.entries.len() != 1 {
            return None;
        }
        match &mono.entries[0] {
            (Atom::Coord(i), e) if e.is_one() => Some(*i),
            _ => None,
        }
    }

    pub fn max_coord(&self) -> Option<usize> {
        self.num.max_coord().max(self.den.max_coord())
    }

    /// `num/den` with all fraction invariants restored.
    pub fn normalize(num: Poly, den: Poly) -> Frac {
        assert!(!den.is_zero(), "fraction with zero denominator polynomial");
        if num.is_zero() {
            return Frac::zero();
        }
        if let Some(f) = expand_integer_powers(&num, &den) {
            return f;
        }
        if den.is_one() {
            return Frac { num, den };
        }
        let mut num = num;
        let mut den = den;
        // cancel shared monomial content, fractional exponents included
        let cn = num.content_exact();
        let cd = den.content_exact();
        let mut shared: Vec<(Atom, Rational)> = Vec::new();
        for (a, e) in &cn {
            if let Some((_, e2)) = cd.iter().find(|(b, _)| b == a) {
                shared.push((a.clone(), e.min(e2).clone()));
            }
        }
        if !shared.is_empty() {
            let shared = Monomial { entries: shared };
            num = num.div_content(&shared);
            den = den.div_content(&shared);
        }
        // make the denominator's leading coefficient 1
        let lc = den.terms[0].1.clone();
        if !lc.is_one() {
            let inv = lc.recip();
            num = num.scale(&inv);
            den = den.scale(&inv);
        }
        if den.is_one() {
            return Frac { num, den };
        }
        if let Some(q) = num.try_exact_div(&den) {
            return Frac {
                num: q,
                den: Poly::one(),
            };
        }
        Frac { num, den }
    }

    pub fn add(&self, other: &Self) -> Frac {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            return Frac::normalize(self.num.add(&other.num), self.den.clone());
        }
        let (n1, c1) = self.num.mul_raw(&other.den).expect("mul carries");
        let (n2, c2) = other.num.mul_raw(&self.den).expect("mul carries");
        let (dd, c3) = self.den.mul_raw(&other.den).expect("mul carries");
        // n1/c1 + n2/c2 over dd/c3  =  (n1·c2 + n2·c1)·c3 / (dd·c1·c2)
        let num = n1
            .mul_mono(&c2)
            .and_then(|a| Ok(a.add(&n2.mul_mono(&c1)?)))
            .and_then(|s| s.mul_mono(&c3))
            .expect("mono carries");
        let den = dd
            .mul_mono(&c1)
            .and_then(|d| d.mul_mono(&c2))
            .expect("mono carries");
        Frac::normalize(num, den)
    }

    pub fn neg(&self) -> Frac {
        Frac {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, other: &Self) -> Frac {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Rational) -> Frac {
        if c.is_zero() {
            return Frac::zero();
        }
        Frac {
            num: self.num.scale(c),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Frac {
        if self.is_zero() || other.is_zero() {
            return Frac::zero();
        }
        let (n, cn) = self.num.mul_raw(&other.num).expect("mul carries");
        let (d, cd) = self.den.mul_raw(&other.den).expect("mul carries");
        // (n/cn) / (d/cd) = n·cd / (d·cn)
        let num = n.mul_mono(&cd).expect("mono carries");
        let den = d.mul_mono(&cn).expect("mono carries");
        Frac::normalize(num, den)
    }

    /// Fails (with `DivisionByZero`) when `other` is the zero function.
    pub fn div(&self, other: &Self) -> Result<Frac, NfError> {
        if other.is_zero() {
            return Err(NfError::DivisionByZero);
        }
        let flipped = Frac {
            num: other.den.clone(),
            den: other.num.clone(),
        };
        Ok(self.mul(&flipped))
    }

    /// Integer or fractional power. Non-integer exponents of negative
    /// constants are rejected; fractional powers of non-constant bases use
    /// the positive-branch convention.
    pub fn pow(&self, exp: &Rational) -> Result<Frac, NfError> {
        if exp.is_zero() {
            return Ok(Frac::one());
        }
        if let Some(k) = exp.to_integer() {
            return self.pow_int(k);
        }
        if self.is_zero() {
            return if exp.is_negative() {
                Err(NfError::DivisionByZero)
            } else {
                Ok(Frac::zero())
            };
        }
        if !self.den.is_one() {
            // (n/d)^r = n^r · d^(-r)
            let n = Frac {
                num: self.num.clone(),
                den: Poly::one(),
            };
            let d = Frac {
                num: self.den.clone(),
                den: Poly::one(),
            };
            return Ok(n.pow(exp)?.mul(&d.pow(&-exp)?));
        }
        // single monomial: distribute over the coefficient and each atom
        if self.num.terms.len() == 1 {
            let (mono, coeff) = &self.num.terms[0];
            let mut entries: Vec<(Atom, Rational)> = Vec::new();
            for (a, e) in &mono.entries {
                entries.push((a.clone(), e * exp));
            }
            if !coeff.is_one() {
                if coeff.is_negative() {
                    return Err(NfError::Domain(format!(
                        "fractional power of negative coefficient {coeff}"
                    )));
                }
                entries.push((Atom::Power(Frac::constant(coeff.clone())), exp.clone()));
            }
            let prod = Monomial::normalize(entries)?;
            let num = Poly {
                terms: vec![(prod.num, prod.mult)],
            };
            let den = Poly {
                terms: vec![(prod.den, Rational::one())],
            };
            return Ok(Frac::normalize(num, den));
        }
        // compound base: split integer part, keep the rest opaque
        let (fl, fr) = exp.split_floor();
        let base = self.canonical_power_base();
        let mut out = self.pow_int(fl)?;
        if !fr.is_zero() {
            let atom = Frac {
                num: Poly {
                    terms: vec![(Monomial::atom(Atom::Power(base.0)), Rational::one())],
                },
                den: Poly::one(),
            };
            out = out.mul(&atom.pow_entry(&fr));
            // fold the content part of the base
            out = out.mul(&base.1.pow(&fr)?);
        }
        Ok(out)
    }

    /// Splits `self` (a multi-term polynomial) into a primitive base and a
    /// cancelled content fraction so equal bases normalize identically.
    fn canonical_power_base(&self) -> (Frac, Frac) {
        let content = self.num.content_int();
        let stripped = self.num.div_content(&content);
        let lc = stripped.terms[0].1.clone();
        let prim = if lc.is_one() || lc.is_negative() {
            // keep negative leading coefficients in the base
            stripped.clone()
        } else {
            stripped.scale(&lc.recip())
        };
        let content_frac = Frac {
            num: Poly {
                terms: vec![(
                    content,
                    if lc.is_negative() {
                        Rational::one()
                    } else {
                        lc
                    },
                )],
            },
            den: Poly::one(),
        };
        (
            Frac {
                num: prim,
                den: Poly::one(),
            },
            content_frac,
        )
    }

    /// `self` must be a single power-atom fraction; raises its entry exponent.
    fn pow_entry(&self, exp: &Rational) -> Frac {
        let (mono, coeff) = &self.num.terms[0];
        debug_assert!(coeff.is_one() && mono.entries.len() == 1);
        let (atom, e) = &mono.entries[0];
        Frac {
            num: Poly {
                terms: vec![(
                    Monomial {
                        entries: vec![(atom.clone(), e * exp)],
                    },
                    Rational::one(),
                )],
            },
            den: Poly::one(),
        }
    }

    fn pow_int(&self, k: i64) -> Result<Frac, NfError> {
        if k == 0 {
            return Ok(Frac::one());
        }
        if self.is_zero() {
            return if k < 0 {
                Err(NfError::DivisionByZero)
            } else {
                Ok(Frac::zero())
            };
        }
        let mut base = if k < 0 {
            Frac {
                num: self.den.clone(),
                den: self.num.clone(),
            }
        } else {
            self.clone()
        };
        // restore invariants after the flip
        base = Frac::normalize(base.num, base.den);
        let mut out = Frac::one();
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base);
        }
        Ok(out)
    }

    // -- transcendental constructors ---------------------------------------

    pub fn sin_of(arg: &Frac) -> Frac {
        if arg.is_zero() {
            return Frac::zero();
        }
        if leading_negative(arg) {
            return Frac::sin_of(&arg.neg()).neg();
        }
        Frac {
            num: Poly::atom(Atom::Sin(arg.clone())),
            den: Poly::one(),
        }
    }

    pub fn cos_of(arg: &Frac) -> Frac {
        if arg.is_zero() {
            return Frac::one();
        }
        let arg = if leading_negative(arg) {
            arg.neg()
        } else {
            arg.clone()
        };
        Frac {
            num: Poly::atom(Atom::Cos(arg)),
            den: Poly::one(),
        }
    }

    pub fn exp_of(arg: &Frac) -> Frac {
        if arg.is_zero() {
            return Frac::one();
        }
        // exp(log f) = f
        if let Some(inner) = single_unit_atom(arg) {
            if let Atom::Log(g) = inner {
                return g.clone();
            }
        }
        Frac {
            num: Poly::atom(Atom::Exp(arg.clone())),
            den: Poly::one(),
        }
    }

    pub fn log_of(arg: &Frac) -> Result<Frac, NfError> {
        if arg.is_zero() {
            return Err(NfError::Domain("log of zero".into()));
        }
        if arg.is_one() {
            return Ok(Frac::zero());
        }
        if let Some(c) = arg.as_constant() {
            if c.is_negative() {
                return Err(NfError::Domain(format!("log of negative constant {c}")));
            }
        }
        // log(exp g) = g
        if let Some(inner) = single_unit_atom(arg) {
            if let Atom::Exp(g) = inner {
                return Ok(g.clone());
            }
        }
        Ok(Frac {
            num: Poly::atom(Atom::Log(arg.clone())),
            den: Poly::one(),
        })
    }

    // -- calculus -----------------------------------------------------------

    /// Exact partial derivative along coordinate `i`.
    pub fn diff(&self, i: usize) -> Frac {
        if self.den.is_one() {
            return poly_diff(&self.num, i);
        }
        // (n/d)' = (n'·d - n·d')/d²
        let dn = poly_diff(&self.num, i);
        let dd = poly_diff(&self.den, i);
        let denom = Frac {
            num: self.den.clone(),
            den: Poly::one(),
        };
        let num_part = dn.mul(&denom).sub(&dd.mul(&Frac {
            num: self.num.clone(),
            den: Poly::one(),
        }));
        num_part
            .div(&denom.mul(&denom))
            .expect("denominator polynomial is nonzero")
    }

    /// Substitutes `map[i]` for coordinate `i`. Coordinates beyond the map
    /// are a dimension error.
    pub fn subst(&self, map: &[Frac]) -> Result<Frac, NfError> {
        let n = poly_subst(&self.num, map)?;
        let d = poly_subst(&self.den, map)?;
        n.div(&d)
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, NfError> {
        let n = self.num.eval(point)?;
        let d = self.den.eval(point)?;
        if d == 0.0 {
            return Err(NfError::DivisionByZero);
        }
        Ok(n / d)
    }
}

/// Expands power atoms whose exponents have become integers (e.g. from
/// `√f · √f`) back into their base polynomials, so that `(√f)² = f` exactly.
/// Returns `None` when there is nothing to expand.
fn expand_integer_powers(num: &Poly, den: &Poly) -> Option<Frac> {
    fn has_integer_power(p: &Poly) -> bool {
        p.terms.iter().any(|(m, _)| {
            m.entries
                .iter()
                .any(|(a, e)| matches!(a, Atom::Power(_)) && e.is_integer())
        })
    }
    fn expand_poly(p: &Poly) -> Frac {
        let mut acc = Frac::zero();
        for (mono, coeff) in &p.terms {
            let mut plain: Vec<(Atom, Rational)> = Vec::new();
            let mut extra = Frac::constant(coeff.clone());
            for (a, e) in &mono.entries {
                match (a, e.to_integer()) {
                    (Atom::Power(b), Some(k)) => {
                        extra = extra.mul(&b.pow_int(k).expect("power base is nonzero"));
                    }
                    _ => plain.push((a.clone(), e.clone())),
                }
            }
            let prod = Monomial::normalize(plain).expect("entries already valid");
            let term = Frac::normalize(
                Poly {
                    terms: vec![(prod.num, prod.mult)],
                },
                Poly {
                    terms: vec![(prod.den, Rational::one())],
                },
            );
            acc = acc.add(&term.mul(&extra));
        }
        acc
    }
    if !has_integer_power(num) && !has_integer_power(den) {
        return None;
    }
    let n = expand_poly(num);
    let d = expand_poly(den);
    Some(n.div(&d).expect("denominator polynomial is nonzero"))
}

/// True when the leading (grlex-greatest) coefficient is negative; used to
/// fix the sign convention of trig arguments.
fn leading_negative(f: &Frac) -> bool {
    f.num
        .terms
        .first()
        .map(|(_, c)| c.is_negative())
        .unwrap_or(false)
}

/// `Some(atom)` when the fraction is exactly one atom with coefficient 1.
fn single_unit_atom(f: &Frac) -> Option<&Atom> {
    if !f.den.is_one() || f.num.terms.len() != 1 {
        return None;
    }
    let (m, c) = &f.num.terms[0];
    if !c.is_one() || m.entries.len() != 1 || !m.entries[0].1.is_one() {
        return None;
    }
    Some(&m.entries[0].0)
}

fn atom_diff(atom: &Atom, i: usize) -> Frac {
    match atom {
        Atom::Coord(j) => {
            if *j == i {
                Frac::one()
            } else {
                Frac::zero()
            }
        }
        Atom::Sin(g) => Frac::cos_of(g).mul(&g.diff(i)),
        Atom::Cos(g) => Frac::sin_of(g).neg().mul(&g.diff(i)),
        Atom::Exp(g) => Frac::exp_of(g).mul(&g.diff(i)),
        Atom::Log(g) => g
            .diff(i)
            .div(g)
            .expect("log argument is a nonzero function"),
        Atom::Power(b) => b.diff(i),
    }
}

/// `dA/A` for a single atom — the logarithmic derivative, kept as a ratio so
/// that fractional powers differentiate without leaving the rational world:
/// `d(A^r) = r·A^r·(dA/A)`.
fn atom_log_deriv(atom: &Atom, i: usize) -> Frac {
    // for a power atom use the base fraction itself: d(P)/P = db/b
    if let Atom::Power(b) = atom {
        return b.diff(i).div(b).expect("power base is nonzero");
    }
    let da = atom_diff(atom, i);
    if da.is_zero() {
        return da;
    }
    let unit = Frac {
        num: Poly::atom(atom.clone()),
        den: Poly::one(),
    };
    da.div(&unit).expect("atom is a nonzero factor")
}

fn poly_diff(p: &Poly, i: usize) -> Frac {
    let mut acc = Frac::zero();
    for (mono, coeff) in &p.terms {
        for (k, (atom, exp)) in mono.entries.iter().enumerate() {
            if !exp.is_integer() {
                // d(A^r)·(rest) = r·(whole monomial)·dA/A — keeps √-powers
                // intact so quotients like ∂ᵢρ/ρ cancel exactly
                let logderiv = atom_log_deriv(atom, i);
                if logderiv.is_zero() {
                    continue;
                }
                let part = Frac::normalize(
                    Poly {
                        terms: vec![(mono.clone(), coeff * exp)],
                    },
                    Poly::one(),
                );
                acc = acc.add(&part.mul(&logderiv));
                continue;
            }
            let da = atom_diff(atom, i);
            if da.is_zero() {
                continue;
            }
            // coeff · exp · atom^(exp-1) · Π_{j≠k} atom_j^{e_j} · da
            let mut entries: Vec<(Atom, Rational)> = Vec::with_capacity(mono.entries.len());
            for (j, (a, e)) in mono.entries.iter().enumerate() {
                if j == k {
                    let reduced = e - &Rational::one();
                    if !reduced.is_zero() {
                        entries.push((a.clone(), reduced));
                    }
                } else {
                    entries.push((a.clone(), e.clone()));
                }
            }
            let prod = Monomial::normalize(entries).expect("diff entries are valid");
            let part = Frac::normalize(
                Poly {
                    terms: vec![(prod.num, coeff * exp * prod.mult)],
                },
                Poly {
                    terms: vec![(prod.den, Rational::one())],
                },
            );
            acc = acc.add(&part.mul(&da));
        }
    }
    acc
}

fn atom_subst(atom: &Atom, map: &[Frac]) -> Result<Frac, NfError> {
    match atom {
        Atom::Coord(i) => map.get(*i).cloned().ok_or(NfError::Dimension {
            expected: *i + 1,
            got: map.len(),
        }),
        Atom::Sin(g) => Ok(Frac::sin_of(&g.subst(map)?)),
        Atom::Cos(g) => Ok(Frac::cos_of(&g.subst(map)?)),
        Atom::Exp(g) => Ok(Frac::exp_of(&g.subst(map)?)),
        Atom::Log(g) => Frac::log_of(&g.subst(map)?),
        Atom::Power(b) => b.subst(map),
    }
}

fn poly_subst(p: &Poly, map: &[Frac]) -> Result<Frac, NfError> {
    let mut acc = Frac::zero();
    for (mono, coeff) in &p.terms {
        let mut term = Frac::constant(coeff.clone());
        for (atom, exp) in &mono.entries {
            let value = atom_subst(atom, map)?;
            term = term.mul(&value.pow(exp)?);
        }
        acc = acc.add(&term);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(i: usize) -> Frac {
        Frac::coord(i)
    }

    fn c(n: i64, d: i64) -> Frac {
        Frac::constant(Rational::new(n, d))
    }

    #[test]
    fn monomial_merge_and_carry() {
        // x^(-1/2) · x^(-1/2) = 1/x : negative integer exponent moves to den
        let half = Rational::new(-1, 2);
        let prod =
            Monomial::normalize(vec![(Atom::Coord(0), half.clone()), (Atom::Coord(0), half)])
                .unwrap();
        assert!(prod.num.is_one());
        assert_eq!(prod.den.entries.len(), 1);
        assert_eq!(prod.den.entries[0].1, Rational::one());
    }

    #[test]
    fn exp_atoms_fold() {
        // e^x · e^(-x) = 1
        let a = Frac::exp_of(&x(0));
        let b = Frac::exp_of(&x(0).neg());
        assert!(a.mul(&b).is_one());
    }

    #[test]
    fn denominator_cancellation() {
        // (x0² + x0) / x0 = x0 + 1
        let num = x(0).mul(&x(0)).add(&x(0));
        let q = num.div(&x(0)).unwrap();
        assert_eq!(q, x(0).add(&Frac::one()));
    }

    #[test]
    fn division_to_zero_is_exact() {
        // det·B/det - B = 0 with det = x0²+1
        let det = x(0).mul(&x(0)).add(&Frac::one());
        let b = Frac::sin_of(&x(0));
        let lhs = det.mul(&b).div(&det).unwrap();
        assert!(lhs.sub(&b).is_zero());
    }

    #[test]
    fn polynomial_expansion() {
        // (x0+1)² = x0² + 2x0 + 1
        let e = x(0).add(&Frac::one()).pow(&Rational::from_int(2)).unwrap();
        let expanded = x(0)
            .mul(&x(0))
            .add(&x(0).scale(&Rational::from_int(2)))
            .add(&Frac::one());
        assert_eq!(e, expanded);
    }

    #[test]
    fn diff_product_and_chain() {
        // d/dx0 (x0·x1) = x1
        let p = x(0).mul(&x(1));
        assert_eq!(p.diff(0), x(1));
        // d/dx0 sin(x0) = cos(x0)
        assert_eq!(Frac::sin_of(&x(0)).diff(0), Frac::cos_of(&x(0)));
        // d/dx0 log(exp(x0+x1)) = 1
        let r = Frac::log_of(&Frac::exp_of(&x(0).add(&x(1)))).unwrap();
        assert!(r.diff(0).is_one());
    }

    #[test]
    fn log_diff_is_fraction() {
        // d/dx log(x² + 1) = 2x/(x²+1)
        let arg = x(0).mul(&x(0)).add(&Frac::one());
        let d = Frac::log_of(&arg).unwrap().diff(0);
        let expect = x(0).scale(&Rational::from_int(2)).div(&arg).unwrap();
        assert_eq!(d, expect);
    }

    #[test]
    fn fractional_constant_powers_fold() {
        // (1/2)^(1/2) · (1/2)^(1/2) = 1/2 exactly
        let half = Rational::new(1, 2);
        let r = c(1, 2).pow(&half).unwrap();
        assert_eq!(r.mul(&r), c(1, 2));
        // (4/9)^(1/2) = 2/3
        assert_eq!(c(4, 9).pow(&half).unwrap(), c(2, 3));
    }

    #[test]
    fn eval_matches_structure() {
        // (x0+1)²/x1 at (2, 4) = 9/4
        let f = x(0)
            .add(&Frac::one())
            .pow(&Rational::from_int(2))
            .unwrap()
            .div(&x(1))
            .unwrap();
        let v = f.eval(&[2.0, 4.0]).unwrap();
        assert!((v - 2.25).abs() < 1e-14);
    }

    #[test]
    fn subst_composes() {
        // sin(x0) with x0 -> x0 + x1 gives sin(x0+x1)
        let f = Frac::sin_of(&x(0));
        let g = f.subst(&[x(0).add(&x(1)), x(1)]).unwrap();
        assert_eq!(g, Frac::sin_of(&x(0).add(&x(1))));
    }

    #[test]
    fn zero_denominator_rejected() {
        assert_eq!(x(0).div(&Frac::zero()), Err(NfError::DivisionByZero));
        assert!(Frac::zero().pow(&Rational::from_int(-1)).is_err());
    }

    #[test]
    fn integer_powers_of_roots_expand() {
        let half = Rational::new(1, 2);
        // (√(1+x₀))² = 1+x₀ exactly, through the power-atom expansion
        let base = Frac::one().add(&x(0));
        let root = base.pow(&half).unwrap();
        assert_eq!(root.mul(&root), base);
        // and an odd power keeps a single √ factor: (√f)³ = f·√f
        let cubed = root.pow(&Rational::from_int(3)).unwrap();
        assert_eq!(cubed, base.mul(&root));
    }

    #[test]
    fn log_derivative_of_root_is_rational() {
        // ρ = ((1+x₀²)·e^{2x₁})^{1/2}: ∂₀ρ/ρ = x₀/(1+x₀²) exactly
        let half = Rational::new(1, 2);
        let two = Rational::from_int(2);
        let base = Frac::one()
            .add(&x(0).mul(&x(0)))
            .mul(&Frac::exp_of(&x(1).scale(&two)));
        let rho = base.pow(&half).unwrap();
        let got = rho.diff(0).div(&rho).unwrap();
        let want = x(0).div(&Frac::one().add(&x(0).mul(&x(0)))).unwrap();
        assert_eq!(got, want);
        // the vertical direction: ∂₁ρ/ρ = 1
        assert_eq!(rho.diff(1).div(&rho).unwrap(), Frac::one());
    }
}
