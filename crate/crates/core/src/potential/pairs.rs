use crate::residue::{AminoAcid, N_AMINO_ACIDS};

/// Number of unordered residue-type pairs.
pub const N_PAIRS: usize = N_AMINO_ACIDS * (N_AMINO_ACIDS + 1) / 2;

/// Dense index of the unordered pair `{a, b}`: position of `(min, max)` in
/// row-major upper-triangle order over the alphabetical residue ordering.
pub fn pair_index(a: AminoAcid, b: AminoAcid) -> usize {
    let (i, j) = if a <= b { (a.index(), b.index()) } else { (b.index(), a.index()) };
    // rows 0..i contribute 20 + 19 + ... + (20 - i + 1) entries
    i * N_AMINO_ACIDS - i * (i.saturating_sub(1)) / 2 + (j - i)
}

/// Inverse of [`pair_index`], with the pair in sorted order.
pub fn pair_from_index(index: usize) -> Option<(AminoAcid, AminoAcid)> {
    if index >= N_PAIRS {
        return None;
    }
    let mut start = 0;
    for i in 0..N_AMINO_ACIDS {
        let row = N_AMINO_ACIDS - i;
        if index < start + row {
            let j = i + (index - start);
            return Some((AminoAcid::ALL[i], AminoAcid::ALL[j]));
        }
        start += row;
    }
    None
}
