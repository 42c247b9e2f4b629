//! Minimum-free-energy secondary structure under an additive base-pair model.
//!
//! [`fold`] is an O(N³)-time, O(N²)-space interval dynamic program. Ties are
//! broken by a total order shared with the exhaustive oracle
//! [`enumerate_min`]: lower energy, then fewer pairs, then the
//! lexicographically smallest dot-bracket string with `(` < `.` < `)`.

use std::cell::Cell;
use std::cmp::Ordering;
use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::codon::{Nucleotide, RnaSequence};
use crate::error::{Error, Result};

/// Longest sequence [`enumerate_min`] accepts.
pub const ORACLE_MAX_LEN: usize = 20;

/// Additive Watson–Crick pair energies in abstract units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub gc: i32,
    pub au: i32,
    /// Minimum number of unpaired bases enclosed by any pair.
    pub min_hairpin: usize,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self { gc: -3, au: -2, min_hairpin: 3 }
    }
}

impl EnergyModel {
    pub fn new(gc: i32, au: i32, min_hairpin: usize) -> Result<Self> {
        if gc >= 0 || au >= 0 {
            return Err(Error::InvalidArgument("pair scores must be strictly negative".into()));
        }
        Ok(Self { gc, au, min_hairpin })
    }

    /// Score for pairing `a` with `b`, or `None` if the pair is forbidden.
    pub fn pair_score(&self, a: Nucleotide, b: Nucleotide) -> Option<i32> {
        use Nucleotide::*;
        match (a, b) {
            (G, C) | (C, G) => Some(self.gc),
            (A, U) | (U, A) => Some(self.au),
            _ => None,
        }
    }

    fn score_table(&self) -> [[i32; 4]; 4] {
        let mut t = [[0i32; 4]; 4];
        for a in Nucleotide::ALL {
            for b in Nucleotide::ALL {
                t[a.ordinal() as usize][b.ordinal() as usize] = self.pair_score(a, b).unwrap_or(0);
            }
        }
        t
    }
}

/// Dot-bracket structure with its pair table and total energy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecondaryStructure {
    pub dot_bracket: String,
    pub pair_table: Vec<Option<usize>>,
    pub mfe: i32,
}

impl SecondaryStructure {
    pub fn unpaired(n: usize) -> Self {
        Self { dot_bracket: ".".repeat(n), pair_table: vec![None; n], mfe: 0 }
    }

    fn from_pair_table(pair_table: Vec<Option<usize>>, mfe: i32) -> Self {
        let dot_bracket = pair_table
            .iter()
            .enumerate()
            .map(|(i, p)| match p {
                None => '.',
                Some(j) if *j > i => '(',
                Some(_) => ')',
            })
            .collect();
        Self { dot_bracket, pair_table, mfe }
    }

    /// Parses balanced dot-bracket notation. The energy is left at 0; use
    /// [`SecondaryStructure::with_energy`] to score it against a sequence.
    pub fn parse_dot_bracket(s: &str) -> Result<Self> {
        let mut table = vec![None; s.len()];
        let mut stack = Vec::new();
        for (i, c) in s.bytes().enumerate() {
            match c {
                b'(' => stack.push(i),
                b')' => {
                    let j = stack
                        .pop()
                        .ok_or_else(|| Error::MalformedSequence(format!("unmatched ')' at {i}")))?;
                    table[i] = Some(j);
                    table[j] = Some(i);
                }
                b'.' => {}
                _ => return Err(Error::MalformedSequence(format!("bad dot-bracket symbol {:?}", c as char))),
            }
        }
        if let Some(i) = stack.pop() {
            return Err(Error::MalformedSequence(format!("unmatched '(' at {i}")));
        }
        Ok(Self::from_pair_table(table, 0))
    }

    /// Re-scores the structure against `seq`, checking pair legality and
    /// hairpin separation.
    pub fn with_energy(mut self, seq: &RnaSequence, model: &EnergyModel) -> Result<Self> {
        if seq.len() != self.len() {
            return Err(Error::LengthMismatch { expected: seq.len(), actual: self.len() });
        }
        let mut e = 0;
        for (i, j) in self.pairs() {
            if j - i - 1 < model.min_hairpin {
                return Err(Error::MalformedSequence(format!("pair ({i},{j}) encloses too few bases")));
            }
            e += model.pair_score(seq.bases[i], seq.bases[j]).ok_or_else(|| {
                Error::MalformedSequence(format!("pair ({i},{j}) is not complementary"))
            })?;
        }
        self.mfe = e;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.pair_table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pair_table.is_empty()
    }

    /// Pairs `(i, j)` with `i < j`, ordered by `i`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.pair_table
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.filter(|&j| j > i).map(|j| (i, j)))
            .collect()
    }

    pub fn pair_count(&self) -> usize {
        self.pair_table.iter().filter(|p| p.is_some()).count() / 2
    }
}

impl fmt::Display for SecondaryStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dot_bracket)
    }
}

thread_local! {
    static FOLD_CALLS: Cell<u64> = const { Cell::new(0) };
}

/// Number of [`fold`] invocations on the current thread.
pub fn fold_invocations() -> u64 {
    FOLD_CALLS.with(|c| c.get())
}

// Energy dominates, pair count breaks ties.
const PAIR_SHIFT: u32 = 24;

#[inline]
fn pair_key(score: i32) -> i64 {
    ((score as i64) << PAIR_SHIFT) + 1
}

/// Marker in [`Folder::partners`] for an unpaired position.
pub const UNPAIRED: u32 = u32::MAX;

/// Reusable DP workspace. Intervals are half-open, `[i, e)`, stored at
/// `i * (n + 1) + e`; empty intervals read as zero energy.
pub struct Folder {
    model: EnergyModel,
    scores: [[i32; 4]; 4],
    n: usize,
    best: Vec<i64>,
    /// `choice == i` means `i` is unpaired in the optimum of `[i, e)`,
    /// otherwise it holds the partner of `i`.
    choice: Vec<u32>,
    ord: Vec<u8>,
    partners: Vec<u32>,
    stack: Vec<(u32, u32)>,
    positions: [Vec<u32>; 4],
}

/// Complementary base ordinal: A↔U, C↔G.
const COMPLEMENT: [usize; 4] = [1, 0, 3, 2];

/// Compares the optimal string of `[s, a)` with the same-length prefix of
/// the optimal string of `[s, b)`, `a < b`. `rows` holds the choice table
/// from row `base` onwards, `w` entries per row.
fn prefix_cmp(rows: &[u32], w: usize, base: usize, mut s: usize, a: usize, b: usize) -> Ordering {
    loop {
        if a <= s {
            return Ordering::Equal;
        }
        let ka = rows[(s - base) * w + a] as usize;
        let kb = rows[(s - base) * w + b] as usize;
        match (ka != s, kb != s) {
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            (false, false) => s += 1,
            (true, true) if ka == kb => s = ka + 1,
            (true, true) => {
                // Different partners for `s`: the shorter enclosed block
                // decides, and if it is a prefix of the longer one, its
                // closing ')' loses against whatever follows in the other.
                let (lo, hi, flip) = if ka < kb { (ka, kb, false) } else { (kb, ka, true) };
                let o = match prefix_cmp(rows, w, base, s + 1, lo, hi) {
                    Ordering::Equal => Ordering::Greater,
                    o => o,
                };
                return if flip { o.reverse() } else { o };
            }
        }
    }
}

impl Folder {
    pub fn new(model: EnergyModel) -> Self {
        Self {
            scores: model.score_table(),
            model,
            n: 0,
            best: Vec::new(),
            choice: Vec::new(),
            ord: Vec::new(),
            partners: Vec::new(),
            stack: Vec::new(),
            positions: Default::default(),
        }
    }

    /// Folds `bases` and returns the minimum energy. Partners are available
    /// from [`Folder::partners`] until the next call.
    pub fn run(&mut self, bases: &[Nucleotide]) -> i32 {
        let n = bases.len();
        self.n = n;
        let w = n + 1;
        // Only empty intervals `[i, i)` are read before being written.
        self.best.resize(w * w, 0);
        self.choice.resize(w * w, 0);
        for i in 0..w {
            self.best[i * w + i] = 0;
        }

        self.ord.clear();
        self.ord.extend(bases.iter().map(|b| b.ordinal()));
        let gap = self.model.min_hairpin + 1;

        // Ascending positions of each base; the partners of `i` are the
        // positions of its complement.
        for p in self.positions.iter_mut() {
            p.clear();
        }
        for (k, &o) in self.ord.iter().enumerate() {
            self.positions[o as usize].push(k as u32);
        }
        let positions = std::mem::take(&mut self.positions);

        for i in (0..n).rev() {
            let oi = self.ord[i] as usize;
            let (best_head, best_rest) = self.best.split_at_mut((i + 1) * w);
            let (choice_head, choice_rest) = self.choice.split_at_mut((i + 1) * w);
            let row_best = &mut best_head[i * w..];
            let row_choice = &mut choice_head[i * w..];
            row_best[i + 1..].copy_from_slice(&best_rest[i + 1..w]);
            row_choice[i + 1..].fill(i as u32);

            // Candidates `k` in ascending order, so each `[i, e)` sees them in
            // the same order as a per-interval scan would.
            let partners = &positions[COMPLEMENT[oi]];
            let first = partners.partition_point(|&k| (k as usize) < i + gap);
            for &k in &partners[first..] {
                let k = k as usize;
                let base = pair_key(self.scores[oi][self.ord[k] as usize]) + best_rest[k];
                let r = (k - i) * w;
                let tail = &best_rest[r + k + 1..r + w];
                for (off, &t) in tail.iter().enumerate() {
                    let e = k + 1 + off;
                    let cand = base + t;
                    let cur = row_best[e];
                    if cand > cur {
                        continue;
                    }
                    if cand < cur {
                        row_best[e] = cand;
                        row_choice[e] = k as u32;
                        continue;
                    }
                    let choice = row_choice[e] as usize;
                    // Pairing beats leaving `i` unpaired; between two
                    // partners keep the lexicographically smaller string.
                    if choice == i || prefix_cmp(choice_rest, w, i + 1, i + 1, choice, k) != Ordering::Less {
                        row_choice[e] = k as u32;
                    }
                }
            }
        }
        self.positions = positions;

        self.partners.clear();
        self.partners.resize(n, UNPAIRED);
        let mut energy = 0;
        self.stack.clear();
        if n > 0 {
            self.stack.push((0, n as u32));
        }
        while let Some((i, e)) = self.stack.pop() {
            let (i, e) = (i as usize, e as usize);
            if e <= i {
                continue;
            }
            let k = self.choice[i * w + e] as usize;
            if k == i {
                self.stack.push((i as u32 + 1, e as u32));
            } else {
                self.partners[i] = k as u32;
                self.partners[k] = i as u32;
                energy += self.scores[self.ord[i] as usize][self.ord[k] as usize];
                self.stack.push((i as u32 + 1, k as u32));
                self.stack.push((k as u32 + 1, e as u32));
            }
        }
        energy
    }

    /// Partner of each position from the last [`Folder::run`], or [`UNPAIRED`].
    pub fn partners(&self) -> &[u32] {
        &self.partners
    }
}

/// Minimum-energy non-crossing structure of `seq` under `model`.
pub fn fold(seq: &RnaSequence, model: &EnergyModel) -> SecondaryStructure {
    FOLD_CALLS.with(|c| c.set(c.get() + 1));
    let mut folder = Folder::new(*model);
    let mfe = folder.run(&seq.bases);
    let table = folder.partners().iter().map(|&p| (p != UNPAIRED).then_some(p as usize)).collect();
    SecondaryStructure::from_pair_table(table, mfe)
}

/// Folds `seq` as consecutive independent windows of `window` bases and
/// concatenates the results. Total cost is O(N·window²).
pub fn fold_windowed(seq: &RnaSequence, model: &EnergyModel, window: usize) -> SecondaryStructure {
    let mut table = Vec::with_capacity(seq.len());
    let mfe = for_each_window(seq, model, window, |off, partners| {
        table.extend(partners.iter().map(|&p| (p != UNPAIRED).then_some(off + p as usize)));
    });
    SecondaryStructure::from_pair_table(table, mfe)
}

/// Folds each window of `seq` in turn, handing `visit` the window offset and
/// window-local partner indices. Returns the total energy.
pub fn for_each_window(
    seq: &RnaSequence,
    model: &EnergyModel,
    window: usize,
    mut visit: impl FnMut(usize, &[u32]),
) -> i32 {
    assert!(window > 0, "window must be positive");
    FOLD_CALLS.with(|c| c.set(c.get() + 1));
    let mut folder = Folder::new(*model);
    let mut energy = 0;
    for (w, chunk) in seq.bases.chunks(window).enumerate() {
        energy += folder.run(chunk);
        visit(w * window, folder.partners());
    }
    energy
}

/// Window length covered by the precomputed pairing table.
pub const TABLE_WINDOW: usize = 10;
/// Inputs at least this long use the table in [`paired_windowed`].
const TABLE_MIN_BASES: usize = 1 << 20;

/// Paired-position bitmask (bit `j` = base `j`) for every window of
/// [`TABLE_WINDOW`] bases under the default model, indexed by the bases'
/// ordinals read as a base-4 number, first base most significant.
fn pairing_table() -> &'static [u16] {
    static TABLE: OnceLock<Vec<u16>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut folder = Folder::new(EnergyModel::default());
        let mut bases = [Nucleotide::A; TABLE_WINDOW];
        (0..1usize << (2 * TABLE_WINDOW))
            .map(|code| {
                for (j, b) in bases.iter_mut().enumerate() {
                    *b = Nucleotide::from_ordinal((code >> (2 * (TABLE_WINDOW - 1 - j))) as u8 & 3);
                }
                folder.run(&bases);
                folder.partners().iter().enumerate().fold(0u16, |m, (j, &p)| m | (u16::from(p != UNPAIRED) << j))
            })
            .collect()
    })
}

/// Whether each base is paired in [`fold_windowed`]'s structure, without
/// building it. Long inputs folded with the default model and
/// [`TABLE_WINDOW`] read full windows from a table computed once per process
/// by the same dynamic program.
pub fn paired_windowed(seq: &RnaSequence, model: &EnergyModel, window: usize) -> Vec<bool> {
    let mut out = Vec::with_capacity(seq.len());
    if window == TABLE_WINDOW && *model == EnergyModel::default() && seq.len() >= TABLE_MIN_BASES {
        FOLD_CALLS.with(|c| c.set(c.get() + 1));
        let table = pairing_table();
        let mut chunks = seq.bases.chunks_exact(TABLE_WINDOW);
        for c in &mut chunks {
            let code = c.iter().fold(0usize, |acc, b| (acc << 2) | b.ordinal() as usize);
            let mask = table[code];
            out.extend((0..TABLE_WINDOW).map(|j| mask >> j & 1 == 1));
        }
        let mut folder = Folder::new(*model);
        folder.run(chunks.remainder());
        out.extend(folder.partners().iter().map(|&p| p != UNPAIRED));
    } else {
        for_each_window(seq, model, window, |_, partners| out.extend(partners.iter().map(|&p| p != UNPAIRED)));
    }
    out
}

/// Exhaustive minimum over every valid non-crossing structure. Exponential;
/// limited to [`ORACLE_MAX_LEN`] bases.
pub fn enumerate_min(seq: &RnaSequence, model: &EnergyModel) -> Result<SecondaryStructure> {
    let n = seq.len();
    if n > ORACLE_MAX_LEN {
        return Err(Error::OracleTooLarge(n, ORACLE_MAX_LEN));
    }
    struct Search<'a> {
        bases: &'a [Nucleotide],
        model: &'a EnergyModel,
        chars: Vec<u8>,
        open: Vec<usize>,
        best: Option<(i32, usize, Vec<u8>)>,
    }
    // Rank of each symbol in the tie-break order.
    fn rank(c: u8) -> u8 {
        match c {
            b'(' => 0,
            b'.' => 1,
            _ => 2,
        }
    }
    impl Search<'_> {
        fn visit(&mut self, pos: usize, energy: i32, pairs: usize) {
            let n = self.bases.len();
            if self.open.len() > n - pos {
                return;
            }
            if pos == n {
                let better = match &self.best {
                    None => true,
                    Some((e, p, s)) => (energy, pairs)
                        .cmp(&(*e, *p))
                        .then_with(|| {
                            self.chars.iter().map(|&c| rank(c)).cmp(s.iter().map(|&c| rank(c)))
                        })
                        .is_lt(),
                };
                if better {
                    self.best = Some((energy, pairs, self.chars.clone()));
                }
                return;
            }
            self.chars.push(b'.');
            self.visit(pos + 1, energy, pairs);
            self.chars.pop();

            self.open.push(pos);
            self.chars.push(b'(');
            self.visit(pos + 1, energy, pairs);
            self.chars.pop();
            self.open.pop();

            if let Some(&i) = self.open.last() {
                if pos - i > self.model.min_hairpin {
                    if let Some(sc) = self.model.pair_score(self.bases[i], self.bases[pos]) {
                        self.open.pop();
                        self.chars.push(b')');
                        self.visit(pos + 1, energy + sc, pairs + 1);
                        self.chars.pop();
                        self.open.push(i);
                    }
                }
            }
        }
    }
    let mut search = Search { bases: &seq.bases, model, chars: Vec::with_capacity(n), open: Vec::new(), best: None };
    search.visit(0, 0, 0);
    let (energy, _, chars) = search.best.expect("the all-unpaired structure is always feasible");
    let s = SecondaryStructure::parse_dot_bracket(std::str::from_utf8(&chars).unwrap())?;
    Ok(SecondaryStructure { mfe: energy, ..s })
}
