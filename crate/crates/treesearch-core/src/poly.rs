//! Polynomials over exact rationals, with sign analysis on intervals.
//!
//! Cdf pieces, first-visit time functions and the classification
//! inequalities all reduce to low-degree polynomials with rational
//! coefficients. Deciding a predicate exactly means deciding the sign of
//! such a polynomial on an interval, which is done here with Sturm
//! sequences and root isolation — no sampling heuristics, and every
//! violation comes with a rational witness point.

use crate::rat::Rat;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    /// Coefficients in ascending degree, no trailing zeros.
    coeffs: Vec<Rat>,
}

impl Poly {
    pub fn zero() -> Poly {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: Rat) -> Poly {
        Poly::from_coeffs(vec![c])
    }

    /// `c0 + c1*x`.
    pub fn affine(c0: Rat, c1: Rat) -> Poly {
        Poly::from_coeffs(vec![c0, c1])
    }

    pub fn from_coeffs(coeffs: Vec<Rat>) -> Poly {
        let mut p = Poly { coeffs };
        p.normalize();
        p
    }

    fn normalize(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[Rat] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> Rat {
        self.coeffs.get(i).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, c)| c * Rat::from_integer(i.into()))
            .collect();
        Poly::from_coeffs(coeffs)
    }

    pub fn antiderivative(&self) -> Poly {
        let mut coeffs = vec![Rat::zero()];
        for (i, c) in self.coeffs.iter().enumerate() {
            coeffs.push(c / Rat::from_integer((i + 1).into()));
        }
        Poly::from_coeffs(coeffs)
    }

    pub fn definite_integral(&self, lo: &Rat, hi: &Rat) -> Rat {
        let f = self.antiderivative();
        f.eval(hi) - f.eval(lo)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i) + other.coeff(i)).collect();
        Poly::from_coeffs(coeffs)
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        Poly::from_coeffs(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn scale(&self, k: &Rat) -> Poly {
        Poly::from_coeffs(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![Rat::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly::from_coeffs(coeffs)
    }

    /// Remainder of `self` divided by `div` (exact rational division).
    fn rem(&self, div: &Poly) -> Poly {
        assert!(!div.is_zero());
        let mut r = self.clone();
        while !r.is_zero() && r.degree() >= div.degree() {
            let shift = r.degree() - div.degree();
            let factor = r.coeffs.last().unwrap() / div.coeffs.last().unwrap();
            let mut sub = vec![Rat::zero(); shift];
            sub.extend(div.coeffs.iter().map(|c| c * &factor));
            r = r.sub(&Poly::from_coeffs(sub));
        }
        r
    }

    /// Scales by the reciprocal of |leading coefficient|; positive scaling
    /// keeps every sign property intact.
    fn sign_normalized(&self) -> Poly {
        match self.coeffs.last() {
            None => Poly::zero(),
            Some(lc) => self.scale(&(Rat::one() / lc.abs())),
        }
    }

    fn gcd(&self, other: &Poly) -> Poly {
        let mut a = self.clone();
        let mut b = other.clone();
        while !b.is_zero() {
            let r = a.rem(&b).sign_normalized();
            a = b;
            b = r;
        }
        a
    }

    /// The square-free part `self / gcd(self, self')`: same real roots,
    /// all simple.
    fn squarefree(&self) -> Poly {
        if self.degree() <= 1 {
            return self.clone();
        }
        let g = self.gcd(&self.derivative());
        if g.degree() == 0 {
            return self.clone();
        }
        self.div_exact(&g)
    }

    fn div_exact(&self, div: &Poly) -> Poly {
        let mut r = self.clone();
        let mut q = vec![Rat::zero(); self.coeffs.len().saturating_sub(div.coeffs.len()) + 1];
        while !r.is_zero() && r.degree() >= div.degree() {
            let shift = r.degree() - div.degree();
            let factor = r.coeffs.last().unwrap() / div.coeffs.last().unwrap();
            q[shift] = factor.clone();
            let mut sub = vec![Rat::zero(); shift];
            sub.extend(div.coeffs.iter().map(|c| c * &factor));
            r = r.sub(&Poly::from_coeffs(sub));
        }
        Poly::from_coeffs(q)
    }

    fn sturm_chain(&self) -> Vec<Poly> {
        let mut chain = vec![self.clone(), self.derivative()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() {
                chain.pop();
                break;
            }
            let r = chain[n - 2].rem(&chain[n - 1]).neg().sign_normalized();
            if r.is_zero() {
                break;
            }
            chain.push(r);
        }
        chain
    }

    /// Number of distinct real roots in the half-open interval `(a, b]`.
    /// Requires a square-free polynomial.
    fn count_roots_half_open(chain: &[Poly], a: &Rat, b: &Rat) -> usize {
        let variations = |x: &Rat| {
            let mut count = 0usize;
            let mut last: Option<bool> = None;
            for p in chain {
                let v = p.eval(x);
                if v.is_zero() {
                    continue;
                }
                let sign = v.is_positive();
                if let Some(prev) = last {
                    if prev != sign {
                        count += 1;
                    }
                }
                last = Some(sign);
            }
            count
        };
        variations(a).saturating_sub(variations(b))
    }

    /// True when the polynomial has at least one real root strictly
    /// inside `(lo, hi)`.
    pub fn has_root_in_open(&self, lo: &Rat, hi: &Rat) -> bool {
        if self.is_zero() {
            return lo < hi;
        }
        if lo >= hi {
            return false;
        }
        let sf = self.squarefree();
        if sf.degree() == 0 {
            return false;
        }
        let chain = sf.sturm_chain();
        let mut count = Poly::count_roots_half_open(&chain, lo, hi);
        if count > 0 && sf.eval(hi).is_zero() {
            count -= 1;
        }
        count > 0
    }

    /// Returns a rational point in `[lo, hi]` where the polynomial is
    /// strictly negative, or `None` when it is nonnegative on the whole
    /// interval. Exact: the search enumerates the sign segments between
    /// real roots.
    pub fn negative_witness_on(&self, lo: &Rat, hi: &Rat) -> Option<Rat> {
        assert!(lo <= hi);
        if self.is_zero() {
            return None;
        }
        if self.eval(lo).is_negative() {
            return Some(lo.clone());
        }
        if self.eval(hi).is_negative() {
            return Some(hi.clone());
        }
        if lo == hi {
            return None;
        }
        let sf = self.squarefree();
        if sf.degree() == 0 {
            return None;
        }
        let chain = sf.sturm_chain();
        let count = Poly::count_roots_half_open(&chain, lo, hi);
        if count == 0 {
            // No roots in (lo, hi]: the sign is constant past lo and the
            // endpoint values are >= 0.
            return None;
        }
        // Isolate the roots of (lo, hi], ordered left to right. Each
        // bracket (a, b] holds exactly one root; when sf(b) = 0 that root
        // is b itself (an exact rational root).
        let mut brackets: Vec<(Rat, Rat)> = Vec::new();
        let mut stack = vec![(lo.clone(), hi.clone(), count)];
        let two = Rat::from_integer(2.into());
        while let Some((a, b, c)) = stack.pop() {
            if c == 0 {
                continue;
            }
            if c == 1 {
                brackets.push((a, b));
                continue;
            }
            let m = (&a + &b) / &two;
            let left = Poly::count_roots_half_open(&chain, &a, &m);
            stack.push((a, m.clone(), left));
            stack.push((m, b, c - left));
        }
        brackets.sort_by(|x, y| x.0.cmp(&y.0));
        // One rational sample per sign segment between consecutive roots.
        let mut samples: Vec<Rat> = Vec::new();
        if self.eval(lo).is_zero() {
            // Segment (lo, first root) is not represented by lo itself.
            let ub = brackets[0].1.clone();
            samples.push(Self::sample_rootfree(&sf, &chain, lo, &ub));
        }
        for (i, (_, b)) in brackets.iter().enumerate() {
            if sf.eval(b).is_zero() {
                // Exact root at b: sample strictly after it, before the
                // next root (or hi).
                if b < hi {
                    let ub = brackets.get(i + 1).map(|(_, nb)| nb.clone()).unwrap_or_else(|| hi.clone());
                    samples.push(Self::sample_rootfree(&sf, &chain, b, &ub));
                }
            } else {
                // The bracketed root lies strictly left of b, and the next
                // root strictly right of b: b sits inside a sign segment.
                samples.push(b.clone());
            }
        }
        samples.into_iter().find(|s| self.eval(s).is_negative())
    }

    /// A rational point strictly inside `(lo, ub]` with no root of `sf`
    /// in `(lo, point]` — i.e. a point of the first sign segment after
    /// `lo`. `ub > lo` required.
    fn sample_rootfree(sf: &Poly, chain: &[Poly], lo: &Rat, ub: &Rat) -> Rat {
        let two = Rat::from_integer(2.into());
        let mut candidate = (lo + ub) / &two;
        loop {
            if !sf.eval(&candidate).is_zero()
                && Poly::count_roots_half_open(chain, lo, &candidate) == 0
            {
                return candidate;
            }
            candidate = (lo + &candidate) / &two;
        }
    }

    /// Rational point with a strictly positive value, if any.
    pub fn positive_witness_on(&self, lo: &Rat, hi: &Rat) -> Option<Rat> {
        self.neg().negative_witness_on(lo, hi)
    }

    pub fn is_nonnegative_on(&self, lo: &Rat, hi: &Rat) -> bool {
        self.negative_witness_on(lo, hi).is_none()
    }

    pub fn is_nonpositive_on(&self, lo: &Rat, hi: &Rat) -> bool {
        self.positive_witness_on(lo, hi).is_none()
    }
}
