use std::cmp::Ordering;
use std::fmt;

use smallvec::SmallVec;

const WORD: usize = 64;

/// Inclusion bitmask over the `p` candidate columns; bit `j` set means column
/// `j` is in the model. The all-zero index is the intercept-only model.
///
/// Ordering compares the masks as unsigned integers, which is the tie-break
/// order used by every ranked report.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ModelIndex {
    words: SmallVec<[u64; 2]>,
    p: usize,
    k: usize,
}

impl ModelIndex {
    pub fn empty(p: usize) -> Self {
        let n_words = p.div_ceil(WORD).max(1);
        Self {
            words: SmallVec::from_elem(0, n_words),
            p,
            k: 0,
        }
    }

    pub fn full(p: usize) -> Self {
        Self::from_indices(p, 0..p)
    }

    /// # Panics
    /// If an index is `>= p`.
    pub fn from_indices(p: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut m = Self::empty(p);
        for j in indices {
            m.set(j);
        }
        m
    }

    /// Builds an index from a single-word mask. Bits at or above `p` are ignored.
    pub fn from_u64(p: usize, mask: u64) -> Self {
        let mut m = Self::empty(p);
        let mask = if p >= WORD { mask } else { mask & ((1u64 << p) - 1) };
        m.words[0] = mask;
        m.k = mask.count_ones() as usize;
        m
    }

    /// The mask as a single word, if every set bit fits in one.
    pub fn as_u64(&self) -> Option<u64> {
        if self.words[1..].iter().all(|&w| w == 0) {
            Some(self.words[0])
        } else {
            None
        }
    }

    #[inline]
    pub fn p(&self) -> usize {
        self.p
    }

    /// Number of included columns.
    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn is_null(&self) -> bool {
        self.k == 0
    }

    #[inline]
    pub fn contains(&self, j: usize) -> bool {
        j < self.p && self.words[j / WORD] >> (j % WORD) & 1 == 1
    }

    /// Sets bit `j`; returns whether it was previously clear.
    pub fn set(&mut self, j: usize) -> bool {
        assert!(j < self.p, "bit {j} out of range for p = {}", self.p);
        let w = &mut self.words[j / WORD];
        let bit = 1u64 << (j % WORD);
        let was_clear = *w & bit == 0;
        *w |= bit;
        self.k += was_clear as usize;
        was_clear
    }

    /// Clears bit `j`; returns whether it was previously set.
    pub fn clear(&mut self, j: usize) -> bool {
        assert!(j < self.p, "bit {j} out of range for p = {}", self.p);
        let w = &mut self.words[j / WORD];
        let bit = 1u64 << (j % WORD);
        let was_set = *w & bit != 0;
        *w &= !bit;
        self.k -= was_set as usize;
        was_set
    }

    /// Flips bit `j` and returns its new value.
    pub fn flip(&mut self, j: usize) -> bool {
        if self.contains(j) {
            self.clear(j);
            false
        } else {
            self.set(j);
            true
        }
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    None
                } else {
                    let b = rest.trailing_zeros() as usize;
                    rest &= rest - 1;
                    Some(wi * WORD + b)
                }
            })
        })
    }

    pub fn is_subset_of(&self, other: &ModelIndex) -> bool {
        self.words
            .iter()
            .zip(other.words.iter())
            .all(|(a, b)| a & !b == 0)
    }

    /// Lowercase hex, most significant digit first, zero-padded to `ceil(p / 4)` digits.
    pub fn to_hex(&self) -> String {
        let digits = self.p.div_ceil(4).max(1);
        let mut out = String::with_capacity(digits);
        for d in (0..digits).rev() {
            let bit = d * 4;
            let nibble = (self.words[bit / WORD] >> (bit % WORD)) & 0xf;
            out.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        out
    }

    /// Parses the [`to_hex`](Self::to_hex) form; an optional `0x` prefix is accepted.
    pub fn from_hex(p: usize, s: &str) -> Option<Self> {
        let s = s.trim();
        let s = s.strip_prefix("0x").unwrap_or(s);
        if s.is_empty() {
            return None;
        }
        let mut m = Self::empty(p);
        for (d, c) in s.chars().rev().enumerate() {
            let nibble = c.to_digit(16)? as u64;
            for b in 0..4 {
                if nibble >> b & 1 == 1 {
                    let j = d * 4 + b;
                    if j >= p {
                        return None;
                    }
                    m.set(j);
                }
            }
        }
        Some(m)
    }
}

impl Ord for ModelIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        let n = self.words.len().max(other.words.len());
        for i in (0..n).rev() {
            let a = self.words.get(i).copied().unwrap_or(0);
            let b = other.words.get(i).copied().unwrap_or(0);
            match a.cmp(&b) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for ModelIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ModelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for ModelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter_ones()).finish()
    }
}
