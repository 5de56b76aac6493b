use std::fmt;
use std::str::FromStr;

/// The 20 canonical amino acids, declared in lexicographic order of their
/// three-letter codes. The discriminant is the rank in that order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum AminoAcid {
    Ala,
    Arg,
    Asn,
    Asp,
    Cys,
    Gln,
    Glu,
    Gly,
    His,
    Ile,
    Leu,
    Lys,
    Met,
    Phe,
    Pro,
    Ser,
    Thr,
    Trp,
    Tyr,
    Val,
}

pub const N_AMINO_ACIDS: usize = 20;

impl AminoAcid {
    pub const ALL: [AminoAcid; N_AMINO_ACIDS] = [
        AminoAcid::Ala,
        AminoAcid::Arg,
        AminoAcid::Asn,
        AminoAcid::Asp,
        AminoAcid::Cys,
        AminoAcid::Gln,
        AminoAcid::Glu,
        AminoAcid::Gly,
        AminoAcid::His,
        AminoAcid::Ile,
        AminoAcid::Leu,
        AminoAcid::Lys,
        AminoAcid::Met,
        AminoAcid::Phe,
        AminoAcid::Pro,
        AminoAcid::Ser,
        AminoAcid::Thr,
        AminoAcid::Trp,
        AminoAcid::Tyr,
        AminoAcid::Val,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<AminoAcid> {
        Self::ALL.get(i).copied()
    }

    pub fn code3(self) -> &'static str {
        match self {
            AminoAcid::Ala => "ALA",
            AminoAcid::Arg => "ARG",
            AminoAcid::Asn => "ASN",
            AminoAcid::Asp => "ASP",
            AminoAcid::Cys => "CYS",
            AminoAcid::Gln => "GLN",
            AminoAcid::Glu => "GLU",
            AminoAcid::Gly => "GLY",
            AminoAcid::His => "HIS",
            AminoAcid::Ile => "ILE",
            AminoAcid::Leu => "LEU",
            AminoAcid::Lys => "LYS",
            AminoAcid::Met => "MET",
            AminoAcid::Phe => "PHE",
            AminoAcid::Pro => "PRO",
            AminoAcid::Ser => "SER",
            AminoAcid::Thr => "THR",
            AminoAcid::Trp => "TRP",
            AminoAcid::Tyr => "TYR",
            AminoAcid::Val => "VAL",
        }
    }

    /// Looks up a three-letter code; case-sensitive, surrounding blanks ignored.
    pub fn from_code3(code: &str) -> Option<AminoAcid> {
        let code = code.trim();
        Self::ALL.iter().copied().find(|aa| aa.code3() == code)
    }
}

impl fmt::Display for AminoAcid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code3())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownAminoAcid(pub String);

impl fmt::Display for UnknownAminoAcid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown residue type '{}'", self.0)
    }
}

impl std::error::Error for UnknownAminoAcid {}

impl FromStr for AminoAcid {
    type Err = UnknownAminoAcid;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AminoAcid::from_code3(s).ok_or_else(|| UnknownAminoAcid(s.trim().to_string()))
    }
}
