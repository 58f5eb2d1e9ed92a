//! Fixed-length floating point expansions (double-double, quad-double, ...).
//!
//! An [`Expansion<T, N>`] stores a real number as the unevaluated sum of up to
//! `N` non-overlapping scalars, giving roughly `N * p` bits of significand for a
//! `p`-bit scalar. Addition and scaling are computed exactly with error-free
//! transformations and then compressed and truncated back to `N` limbs.

use crate::real::Real;

/// Largest supported limb count.
pub const MAX_LIMBS: usize = 8;
// the widest intermediate is the exact sum or scaled product of N limbs
const SCRATCH: usize = 2 * MAX_LIMBS + 2;

/// `a + b = s + e` exactly.
#[inline]
pub fn two_sum<T: Real>(a: T, b: T) -> (T, T) {
    let s = a + b;
    let bb = s - a;
    let e = (a - (s - bb)) + (b - bb);
    (s, e)
}

/// `a + b = s + e` exactly, assuming `|a| >= |b|` (or `a == 0`).
#[inline]
fn fast_two_sum<T: Real>(a: T, b: T) -> (T, T) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn split<T: Real>(a: T) -> (T, T) {
    let c = T::splitter() * a;
    let hi = c - (c - a);
    (hi, a - hi)
}

/// `a * b = p + e` exactly (Dekker), barring overflow.
#[inline]
pub fn two_prod<T: Real>(a: T, b: T) -> (T, T) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    let e = ((ah * bh - p) + ah * bl + al * bh) + al * bl;
    (p, e)
}

/// Growable buffer of non-overlapping components in increasing magnitude.
#[derive(Clone, Copy)]
struct Buf<T> {
    c: [T; SCRATCH],
    len: usize,
}

impl<T: Real> Buf<T> {
    fn new() -> Self {
        Self { c: [T::zero(); SCRATCH], len: 0 }
    }

    /// Adds a scalar exactly (Shewchuk's Grow-Expansion with zero elimination).
    fn grow(&mut self, b: T) {
        let mut q = b;
        let mut out = 0;
        for i in 0..self.len {
            let (s, h) = two_sum(q, self.c[i]);
            if h != T::zero() {
                self.c[out] = h;
                out += 1;
            }
            q = s;
        }
        if q != T::zero() || out == 0 {
            self.c[out] = q;
            out += 1;
        }
        self.len = out;
    }

    /// Shewchuk's Compress, in place: same value, largest component carries it.
    fn compress(&mut self) {
        let m = self.len;
        if m <= 1 {
            return;
        }
        let c = &mut self.c;
        // downward pass writes at or above the slot just read
        let mut bottom = m - 1;
        let mut q = c[m - 1];
        for i in (0..m - 1).rev() {
            let (qn, r) = fast_two_sum(q, c[i]);
            if r != T::zero() {
                c[bottom] = qn;
                bottom -= 1;
                q = r;
            } else {
                q = qn;
            }
        }
        c[bottom] = q;
        // upward pass writes strictly below the slot being read
        let mut top = 0;
        let mut q = c[bottom];
        for j in bottom + 1..m {
            let (qn, r) = fast_two_sum(c[j], q);
            if r != T::zero() {
                c[top] = r;
                top += 1;
            }
            q = qn;
        }
        c[top] = q;
        self.len = top + 1;
    }

    fn truncate<const N: usize>(mut self) -> Expansion<T, N> {
        self.compress();
        let mut out = [T::zero(); N];
        let take = self.len.min(N);
        for (k, slot) in out.iter_mut().take(take).enumerate() {
            *slot = self.c[self.len - 1 - k];
        }
        Expansion { c: out }
    }
}

/// A real number held as `N` non-overlapping scalars, largest first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expansion<T, const N: usize> {
    c: [T; N],
}

impl<T: Real, const N: usize> Expansion<T, N> {
    pub fn zero() -> Self {
        Self { c: [T::zero(); N] }
    }

    pub fn from_scalar(x: T) -> Self {
        let mut c = [T::zero(); N];
        c[0] = x;
        Self { c }
    }

    /// Components, largest magnitude first.
    pub fn limbs(&self) -> &[T; N] {
        &self.c
    }

    /// Nearest scalar (up to the final rounding).
    pub fn value(&self) -> T {
        self.c.iter().rev().fold(T::zero(), |acc, &x| acc + x)
    }

    pub fn leading(&self) -> T {
        self.c[0]
    }

    pub fn is_finite(&self) -> bool {
        self.c.iter().all(|x| x.is_finite())
    }

    fn to_buf(self) -> Buf<T> {
        let mut b = Buf::new();
        for &x in self.c.iter().rev() {
            if x != T::zero() {
                b.c[b.len] = x;
                b.len += 1;
            }
        }
        b
    }

    pub fn neg(self) -> Self {
        let mut c = self.c;
        for x in c.iter_mut() {
            *x = -*x;
        }
        Self { c }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut b = self.to_buf();
        for &x in other.c.iter().rev() {
            if x != T::zero() {
                b.grow(x);
            }
        }
        b.truncate()
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn add_scalar(&self, x: T) -> Self {
        let mut b = self.to_buf();
        b.grow(x);
        b.truncate()
    }

    /// Exact product with a scalar (Shewchuk's Scale-Expansion), then truncated.
    pub fn mul_scalar(&self, x: T) -> Self {
        self.scale_full(x).truncate()
    }

    fn scale_full(&self, x: T) -> Buf<T> {
        let e = self.to_buf();
        let mut h = Buf::new();
        if e.len == 0 || x == T::zero() {
            return h;
        }
        let (mut q, hh) = two_prod(e.c[0], x);
        let push = |h: &mut Buf<T>, v: T| {
            if v != T::zero() {
                h.c[h.len] = v;
                h.len += 1;
            }
        };
        push(&mut h, hh);
        for i in 1..e.len {
            let (p1, p0) = two_prod(e.c[i], x);
            let (sum, hh) = two_sum(q, p0);
            push(&mut h, hh);
            let (qn, hh) = fast_two_sum(p1, sum);
            push(&mut h, hh);
            q = qn;
        }
        if q != T::zero() || h.len == 0 {
            h.c[h.len] = q;
            h.len += 1;
        }
        h
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut acc = Self::zero();
        for &x in other.c.iter().rev() {
            if x != T::zero() {
                let part: Self = self.scale_full(x).truncate();
                acc = acc.add(&part);
            }
        }
        acc
    }

    /// Long division by a scalar: one quotient digit per limb plus a guard.
    pub fn div_scalar(&self, d: T) -> Self {
        let mut rem = *self;
        let mut digits = Buf::new();
        for _ in 0..=N {
            let qd = rem.c[0] / d;
            if qd == T::zero() || !qd.is_finite() {
                if !qd.is_finite() {
                    return Self::from_scalar(qd);
                }
                break;
            }
            let (p, e) = two_prod(qd, d);
            let mut r = rem.to_buf();
            r.grow(-p);
            r.grow(-e);
            rem = r.truncate();
            digits.grow(qd);
        }
        digits.truncate()
    }

    /// Multiplies by `2^k` (exact while in range).
    pub fn ldexp(&self, k: i32) -> Self {
        let f = T::lit(2.0).powi(k);
        let mut c = self.c;
        for x in c.iter_mut() {
            *x = *x * f;
        }
        Self { c }
    }
}
