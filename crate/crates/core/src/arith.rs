//! Exact arithmetic kernel: arbitrary-precision rationals, projective
//! rationals, Hirzebruch-Jung continued fractions and integer matrices.
//!
//! Everything here is exact; no floating point anywhere.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;

pub type Int = BigInt;
pub type Rat = BigRational;

/// Convenience constructor for a rational from machine integers.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(Int::from(num), Int::from(den))
}

pub fn int(n: i64) -> Int {
    Int::from(n)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ArithError {
    #[error("input must be positive, got {0}")]
    NonPositive(String),
    #[error("empty continued fraction")]
    EmptyChain,
    #[error("invalid chain: hit 0/0 during continued fraction evaluation")]
    InvalidChain,
    #[error("matrix is singular")]
    Singular,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

/// A point of the projective rational line.  `Infinity` only ever arises
/// from a division by zero inside a continued fraction step; `0/0` is a
/// hard error and never a value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProjRational {
    Finite(Rat),
    Infinity,
}

impl ProjRational {
    pub fn finite(&self) -> Option<&Rat> {
        match self {
            ProjRational::Finite(r) => Some(r),
            ProjRational::Infinity => None,
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, ProjRational::Infinity)
    }
}

impl fmt::Display for ProjRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjRational::Finite(r) => write!(f, "{r}"),
            ProjRational::Infinity => write!(f, "inf"),
        }
    }
}

impl From<Rat> for ProjRational {
    fn from(r: Rat) -> Self {
        ProjRational::Finite(r)
    }
}

/// Evaluate `c - 1/v` on the projective line: `c - 1/inf = c`,
/// `c - 1/0 = inf`.
fn cf_step(c: &Rat, v: &ProjRational) -> ProjRational {
    match v {
        ProjRational::Infinity => ProjRational::Finite(c.clone()),
        ProjRational::Finite(x) if x.is_zero() => ProjRational::Infinity,
        ProjRational::Finite(x) => ProjRational::Finite(c - x.recip()),
    }
}

/// Right-to-left evaluation of `c_0 - 1/(c_1 - 1/(... - 1/c_t))` over the
/// projective rational line.  Chains containing a 0 entry evaluate without
/// special-casing because the intermediate `inf` is absorbed by the next
/// step.
pub fn cf_eval(cs: &[Rat]) -> Result<ProjRational, ArithError> {
    let (last, rest) = cs.split_last().ok_or(ArithError::EmptyChain)?;
    let mut val = ProjRational::Finite(last.clone());
    for c in rest.iter().rev() {
        val = cf_step(c, &val);
    }
    Ok(val)
}

/// A Hirzebruch-Jung expansion `c_0, c_1, ..., c_t` with `c_i >= 2` for
/// `i >= 1`.  Its value is `c_0 - 1/(c_1 - 1/(... - 1/c_t))`, which lies in
/// `(c_0 - 1, c_0]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HJExpansion(pub Vec<Int>);

impl HJExpansion {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Evaluate the expansion back to a rational.
    pub fn value(&self) -> Result<ProjRational, ArithError> {
        let cs: Vec<Rat> = self.0.iter().map(|c| Rat::from(c.clone())).collect();
        cf_eval(&cs)
    }

    /// The expansion after a non-separating blow-up sequence of `k`
    /// blow-ups at the end of the chain: the last entry grows by one and
    /// `k - 1` entries of 2 are appended.
    pub fn extend_by_blowups(&self, k: u64) -> HJExpansion {
        assert!(k >= 1, "a blow-up sequence has at least one blow-up");
        let mut cs = self.0.clone();
        if let Some(last) = cs.last_mut() {
            *last += 1;
        }
        for _ in 1..k {
            cs.push(int(2));
        }
        HJExpansion(cs)
    }
}

/// The unique Hirzebruch-Jung expansion of a positive rational, via the
/// ceiling recurrence `c_0 = ceil(x)`, `x := 1/(c_0 - x)`.
pub fn hj_expand(x: &Rat) -> Result<HJExpansion, ArithError> {
    if !x.is_positive() {
        return Err(ArithError::NonPositive(x.to_string()));
    }
    let mut cs = Vec::new();
    let mut x = x.clone();
    loop {
        let c = x.ceil().to_integer();
        cs.push(c.clone());
        let rem = Rat::from(c) - &x;
        if rem.is_zero() {
            return Ok(HJExpansion(cs));
        }
        x = rem.recip();
    }
}

/// A square matrix of arbitrary-precision integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    n: usize,
    entries: Vec<Int>,
}

impl IntMatrix {
    pub fn zero(n: usize) -> IntMatrix {
        assert!(n >= 1);
        IntMatrix { n, entries: vec![Int::zero(); n * n] }
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> IntMatrix {
        let n = rows.len();
        let mut m = IntMatrix::zero(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n);
            for (j, v) in row.iter().enumerate() {
                m[(i, j)] = int(*v);
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self[(i, j)] == self[(j, i)]))
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> Int {
        let n = self.n;
        let mut a = self.entries.clone();
        let mut sign = 1i32;
        let mut prev = Int::one();
        for k in 0..n {
            if a[k * n + k].is_zero() {
                // pivot search below row k
                match (k + 1..n).find(|&i| !a[i * n + k].is_zero()) {
                    Some(i) => {
                        for j in 0..n {
                            a.swap(i * n + j, k * n + j);
                        }
                        sign = -sign;
                    }
                    None => return Int::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let t = &a[i * n + j] * &a[k * n + k] - &a[i * n + k] * &a[k * n + j];
                    a[i * n + j] = &t / &prev;
                }
                a[i * n + k] = Int::zero();
            }
            prev = a[k * n + k].clone();
        }
        let d = a[(n - 1) * n + (n - 1)].clone();
        if sign < 0 {
            -d
        } else {
            d
        }
    }

    /// Exact solution of `M x = b` by rational Gaussian elimination.
    pub fn solve(&self, b: &[Rat]) -> Result<Vec<Rat>, ArithError> {
        let n = self.n;
        if b.len() != n {
            return Err(ArithError::Dimension(format!("{} vs {}", b.len(), n)));
        }
        let mut a: Vec<Rat> =
            self.entries.iter().map(|e| Rat::from(e.clone())).collect();
        let mut rhs = b.to_vec();
        for k in 0..n {
            let pivot_row = (k..n)
                .find(|&i| !a[i * n + k].is_zero())
                .ok_or(ArithError::Singular)?;
            if pivot_row != k {
                for j in 0..n {
                    a.swap(pivot_row * n + j, k * n + j);
                }
                rhs.swap(pivot_row, k);
            }
            let pivot = a[k * n + k].clone();
            for i in k + 1..n {
                if a[i * n + k].is_zero() {
                    continue;
                }
                let f = &a[i * n + k] / &pivot;
                for j in k..n {
                    let t = &a[i * n + j] - &(&f * &a[k * n + j]);
                    a[i * n + j] = t;
                }
                let t = &rhs[i] - &(&f * &rhs[k]);
                rhs[i] = t;
            }
        }
        let mut x = vec![Rat::zero(); n];
        for k in (0..n).rev() {
            let mut acc = rhs[k].clone();
            for j in k + 1..n {
                acc -= &a[k * n + j] * &x[j];
            }
            x[k] = acc / &a[k * n + k];
        }
        Ok(x)
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| Rat::from(self[(i, j)].clone()) * &v[j])
                    .fold(Rat::zero(), |a, b| a + b)
            })
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = Int;
    fn index(&self, (i, j): (usize, usize)) -> &Int {
        &self.entries[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Int {
        &mut self.entries[i * self.n + j]
    }
}

/// Serde helpers representing `BigRational` as a `"num/den"` string.
pub mod rat_serde {
    use super::Rat;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn to_string(r: &Rat) -> String {
        r.to_string()
    }

    pub fn parse(s: &str) -> Result<Rat, String> {
        s.parse::<Rat>().map_err(|e| format!("bad rational {s:?}: {e}"))
    }

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&to_string(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rat, D::Error> {
        let s = String::deserialize(d)?;
        parse(&s).map_err(serde::de::Error::custom)
    }

    pub mod vec {
        use super::super::Rat;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[Rat], s: S) -> Result<S::Ok, S::Error> {
            s.collect_seq(v.iter().map(super::to_string))
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rat>, D::Error> {
            let strs = Vec::<String>::deserialize(d)?;
            strs.iter()
                .map(|s| super::parse(s).map_err(serde::de::Error::custom))
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hj(num: i64, den: i64) -> Vec<i64> {
        hj_expand(&rat(num, den))
            .unwrap()
            .0
            .iter()
            .map(|c| i64::try_from(c).unwrap())
            .collect()
    }

    #[test]
    fn hj_integer_case() {
        assert_eq!(hj(5, 1), vec![5]);
    }

    #[test]
    fn hj_three_halves() {
        assert_eq!(hj(3, 2), vec![2, 2]);
    }

    #[test]
    fn hj_seven_fifths() {
        assert_eq!(hj(7, 5), vec![2, 2, 3]);
    }

    #[test]
    fn hj_rejects_non_positive() {
        assert!(hj_expand(&rat(0, 1)).is_err());
        assert!(hj_expand(&rat(-3, 2)).is_err());
    }

    #[test]
    fn cf_two_term_chain() {
        let v = cf_eval(&[rat(2, 1), rat(2, 1)]).unwrap();
        assert_eq!(v, ProjRational::Finite(rat(3, 2)));
    }

    #[test]
    fn cf_chain_with_zero_entry() {
        // [2, -1, 0, 2] -> 1, the P=Q=p=1, q=2, A=2 instance of the
        // lemma identity below.
        let v = cf_eval(&[rat(2, 1), rat(-1, 1), rat(0, 1), rat(2, 1)]).unwrap();
        assert_eq!(v, ProjRational::Finite(rat(1, 1)));
    }

    /// cf_eval([q/p, 1-A, 0, A-1+P/Q]) = 1/(Pp) for arbitrary valid data.
    fn lemma_chain_identity(p_up: i64, q_up: i64, p_lo: i64, q_lo: i64, a: i64) {
        assert_eq!(p_up * q_lo - p_lo * q_up, 1, "Pq - pQ = 1 required");
        let chain = [
            rat(q_lo, p_lo),
            rat(1 - a, 1),
            rat(0, 1),
            rat(a - 1, 1) + rat(p_up, q_up),
        ];
        let v = cf_eval(&chain).unwrap();
        assert_eq!(v, ProjRational::Finite(rat(1, p_up * p_lo)));
    }

    #[test]
    fn cf_lemma_identity_instances() {
        lemma_chain_identity(1, 1, 1, 2, 2);
        lemma_chain_identity(2, 1, 3, 2, 1);
        lemma_chain_identity(3, 2, 1, 1, 4);
        lemma_chain_identity(5, 3, 3, 2, 7);
    }

    #[test]
    fn det_1x1() {
        assert_eq!(IntMatrix::from_rows(&[vec![-1]]).det(), int(-1));
    }

    #[test]
    fn det_chain_minus2_minus1_minus2_is_zero() {
        let m = IntMatrix::from_rows(&[
            vec![-2, 1, 0],
            vec![1, -1, 1],
            vec![0, 1, -2],
        ]);
        assert_eq!(m.det(), int(0));
    }

    #[test]
    fn solve_1x1() {
        let m = IntMatrix::from_rows(&[vec![-1]]);
        let x = m.solve(&[rat(1, 1)]).unwrap();
        assert_eq!(x, vec![rat(-1, 1)]);
    }

    #[test]
    fn solve_2x2() {
        let m = IntMatrix::from_rows(&[vec![-1, 1], vec![1, -2]]);
        let x = m.solve(&[rat(1, 1), rat(0, 1)]).unwrap();
        assert_eq!(x, vec![rat(-2, 1), rat(-1, 1)]);
    }

    #[test]
    fn solve_rejects_singular() {
        let m = IntMatrix::from_rows(&[vec![1, 1], vec![1, 1]]);
        assert!(m.solve(&[rat(1, 1), rat(0, 1)]).is_err());
    }

    #[test]
    fn extend_by_blowups_matches_cf() {
        // [A] extended by k=2 gives [A+1, 2] with value A + 1/2.
        let e = HJExpansion(vec![int(3)]).extend_by_blowups(2);
        assert_eq!(e.0, vec![int(4), int(2)]);
        assert_eq!(e.value().unwrap(), ProjRational::Finite(rat(7, 2)));
    }

    /// Naive cofactor-expansion determinant, the independent oracle.
    fn det_cofactor(m: &IntMatrix) -> Int {
        let n = m.dim();
        if n == 1 {
            return m[(0, 0)].clone();
        }
        let mut acc = Int::zero();
        for j in 0..n {
            if m[(0, j)].is_zero() {
                continue;
            }
            let mut sub = IntMatrix::zero(n - 1);
            for i in 1..n {
                let mut jj = 0;
                for k in 0..n {
                    if k == j {
                        continue;
                    }
                    sub[(i - 1, jj)] = m[(i, k)].clone();
                    jj += 1;
                }
            }
            let term = &m[(0, j)] * det_cofactor(&sub);
            if j % 2 == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    }

    #[test]
    fn det_agrees_with_cofactor_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xdead);
        for _ in 0..500 {
            let n = rng.gen_range(1..=5);
            let mut m = IntMatrix::zero(n);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = int(rng.gen_range(-9..=9));
                }
            }
            assert_eq!(m.det(), det_cofactor(&m));
        }
    }

    #[test]
    fn hj_roundtrip_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let num = rng.gen_range(1..=1_000_000i64);
            let den = rng.gen_range(1..=1_000_000i64);
            let x = rat(num, den);
            let e = hj_expand(&x).unwrap();
            // tail entries >= 2
            assert!(e.0.iter().skip(1).all(|c| *c >= int(2)));
            // length <= numerator + denominator (of the reduced fraction)
            let bound = x.numer() + x.denom();
            assert!(Int::from(e.len()) <= bound);
            assert_eq!(e.value().unwrap(), ProjRational::Finite(x));
        }
    }

    #[test]
    fn solve_multiply_back_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut done = 0;
        while done < 200 {
            let n = rng.gen_range(1..=5);
            let mut m = IntMatrix::zero(n);
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = int(rng.gen_range(-9..=9));
                }
            }
            if m.det().is_zero() {
                continue;
            }
            let b: Vec<Rat> = (0..n)
                .map(|_| rat(rng.gen_range(-20..=20), rng.gen_range(1..=9)))
                .collect();
            let x = m.solve(&b).unwrap();
            assert_eq!(m.mul_vec(&x), b);
            done += 1;
        }
    }
}
