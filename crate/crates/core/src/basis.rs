//! Fock bases of fixed-excitation subspaces.
//!
//! An `n`-excitation subspace of the `N`-mode model splits into *upper* states
//! `|e, n'_1, ..., n'_N>` carrying `n - 1` photons and *lower* states
//! `|g, n_1, ..., n_N>` carrying `n` photons. Both sectors are enumerated in
//! the same canonical order: the first mode's occupation runs from its maximum
//! down to zero, and for each value the remaining modes are ordered the same
//! way recursively. In terms of the nested parameters
//! `n >= s_2 >= s_3 >= ... >= s_N >= 0` the occupations are
//! `(n - s_2, s_2 - s_3, ..., s_{N-1} - s_N, s_N)` with `s_2` the slowest
//! index.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default refusal threshold for the lower-sector dimension.
pub const DEFAULT_CAPACITY: u128 = 200_000;

/// Exact binomial coefficient `C(n, k)`, erroring on 128-bit overflow.
pub fn binomial(n: u64, k: u64) -> Result<u128> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1); cancel the common factor
        // first so the intermediate never exceeds the final magnitude much
        let den = i as u128 + 1;
        let g = gcd(acc, den);
        let num = (n - i) as u128 / (den / g);
        acc = (acc / g).checked_mul(num).ok_or(Error::CountOverflow { n, k })?;
    }
    Ok(acc)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Atomic level of the two-level atom.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Atom {
    Ground,
    Excited,
}

impl Atom {
    fn letter(self) -> char {
        match self {
            Atom::Ground => 'g',
            Atom::Excited => 'e',
        }
    }
}

/// Which half of the arrowhead block a state lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sector {
    Upper,
    Lower,
}

impl Sector {
    pub fn name(self) -> &'static str {
        match self {
            Sector::Upper => "upper",
            Sector::Lower => "lower",
        }
    }

    pub fn atom(self) -> Atom {
        match self {
            Sector::Upper => Atom::Excited,
            Sector::Lower => Atom::Ground,
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Atom level together with the photon number of every field mode.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FockState {
    pub atom: Atom,
    pub occupations: Vec<u32>,
}

impl FockState {
    pub fn new(atom: Atom, occupations: Vec<u32>) -> Self {
        Self { atom, occupations }
    }

    pub fn ground(occupations: Vec<u32>) -> Self {
        Self::new(Atom::Ground, occupations)
    }

    pub fn excited(occupations: Vec<u32>) -> Self {
        Self::new(Atom::Excited, occupations)
    }

    pub fn modes(&self) -> usize {
        self.occupations.len()
    }

    pub fn photons(&self) -> u32 {
        self.occupations.iter().sum()
    }

    /// Total excitation number: atomic excitation plus photons.
    pub fn excitation(&self) -> u32 {
        self.photons() + u32::from(self.atom == Atom::Excited)
    }
}

/// Renders as `g:2,0,0` or `e:1,0`.
impl fmt::Display for FockState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:", self.atom.letter())?;
        for (i, n) in self.occupations.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{n}")?;
        }
        Ok(())
    }
}

impl FromStr for FockState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (atom, occ) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("state {s:?} lacks ':'")))?;
        let atom = match atom.trim() {
            "g" => Atom::Ground,
            "e" => Atom::Excited,
            other => return Err(Error::Parse(format!("unknown atom level {other:?}"))),
        };
        let occupations = occ
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|e| Error::Parse(format!("occupation {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { atom, occupations })
    }
}

impl Serialize for FockState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FockState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Mode count `N` and total excitation number `n` of a subspace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubspaceSpec {
    pub modes: usize,
    pub excitations: u32,
}

impl SubspaceSpec {
    pub fn new(modes: usize, excitations: u32) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidSpec("mode count must be at least 1".into()));
        }
        if excitations == 0 {
            return Err(Error::InvalidSpec("excitation number must be at least 1".into()));
        }
        Ok(Self { modes, excitations })
    }

    /// `C(N + n - 2, N - 1)`.
    pub fn upper_dimension(&self) -> Result<u128> {
        let (nm, n) = (self.modes as u64, self.excitations as u64);
        binomial(nm + n - 2, nm - 1)
    }

    /// `C(N + n - 1, N - 1)`.
    pub fn lower_dimension(&self) -> Result<u128> {
        let (nm, n) = (self.modes as u64, self.excitations as u64);
        binomial(nm + n - 1, nm - 1)
    }
}

pub fn upper_dimension(spec: SubspaceSpec) -> Result<u128> {
    spec.upper_dimension()
}

pub fn lower_dimension(spec: SubspaceSpec) -> Result<u128> {
    spec.lower_dimension()
}

/// All occupation vectors over `modes` modes holding `total` photons, in
/// canonical order. Works for `total == 0` (the vacuum alone).
pub fn occupations(modes: usize, total: u32) -> Vec<Vec<u32>> {
    fn recurse(prefix: &mut Vec<u32>, left: usize, total: u32, out: &mut Vec<Vec<u32>>) {
        if left == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=total).rev() {
            prefix.push(first);
            recurse(prefix, left - 1, total - first, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if modes == 0 {
        return out;
    }
    recurse(&mut Vec::with_capacity(modes), modes, total, &mut out);
    out
}

/// An ordered list of occupation vectors with a reverse index.
#[derive(Clone, Debug)]
pub struct OccupationSpace {
    modes: usize,
    total: u32,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl OccupationSpace {
    pub fn new(modes: usize, total: u32) -> Self {
        let states = occupations(modes, total);
        let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self { modes, total, states, index }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn total(&self) -> u32 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&[u32]> {
        self.states.get(i).map(Vec::as_slice)
    }

    pub fn position(&self, occ: &[u32]) -> Option<usize> {
        self.index.get(occ).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[u32]> {
        self.states.iter().map(Vec::as_slice)
    }
}

/// Upper and lower sectors of an `n`-excitation subspace.
#[derive(Clone, Debug)]
pub struct SubspaceBasis {
    spec: SubspaceSpec,
    upper: OccupationSpace,
    lower: OccupationSpace,
}

impl SubspaceBasis {
    pub fn new(spec: SubspaceSpec) -> Result<Self> {
        Self::with_capacity(spec, DEFAULT_CAPACITY)
    }

    /// Build the basis, refusing lower sectors larger than `limit`.
    pub fn with_capacity(spec: SubspaceSpec, limit: u128) -> Result<Self> {
        let dimension = spec.lower_dimension()?;
        if dimension > limit {
            return Err(Error::Capacity { dimension, limit });
        }
        Ok(Self {
            spec,
            upper: OccupationSpace::new(spec.modes, spec.excitations - 1),
            lower: OccupationSpace::new(spec.modes, spec.excitations),
        })
    }

    pub fn spec(&self) -> SubspaceSpec {
        self.spec
    }

    pub fn modes(&self) -> usize {
        self.spec.modes
    }

    pub fn excitations(&self) -> u32 {
        self.spec.excitations
    }

    pub fn upper(&self) -> &OccupationSpace {
        &self.upper
    }

    pub fn lower(&self) -> &OccupationSpace {
        &self.lower
    }

    pub fn sector(&self, sector: Sector) -> &OccupationSpace {
        match sector {
            Sector::Upper => &self.upper,
            Sector::Lower => &self.lower,
        }
    }

    pub fn upper_len(&self) -> usize {
        self.upper.len()
    }

    pub fn lower_len(&self) -> usize {
        self.lower.len()
    }

    /// Size of the whole subspace, upper plus lower.
    pub fn len(&self) -> usize {
        self.upper.len() + self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn states(&self, sector: Sector) -> Vec<FockState> {
        let atom = sector.atom();
        self.sector(sector)
            .iter()
            .map(|occ| FockState::new(atom, occ.to_vec()))
            .collect()
    }

    pub fn index_of(&self, state: &FockState) -> Result<(Sector, usize)> {
        let sector = match state.atom {
            Atom::Excited => Sector::Upper,
            Atom::Ground => Sector::Lower,
        };
        self.sector(sector)
            .position(&state.occupations)
            .map(|i| (sector, i))
            .ok_or_else(|| Error::StateNotInSubspace {
                state: state.to_string(),
                modes: self.spec.modes,
                excitations: self.spec.excitations,
            })
    }

    pub fn state_at(&self, sector: Sector, position: usize) -> Result<FockState> {
        let space = self.sector(sector);
        space
            .get(position)
            .map(|occ| FockState::new(sector.atom(), occ.to_vec()))
            .ok_or(Error::OutOfRange { sector: sector.name(), position, size: space.len() })
    }

    /// Position in the full `[upper; lower]` ordering.
    pub fn global_index(&self, sector: Sector, position: usize) -> usize {
        match sector {
            Sector::Upper => position,
            Sector::Lower => self.upper.len() + position,
        }
    }

    /// State labels of the full ordering, upper sector first.
    pub fn labels(&self) -> Vec<String> {
        self.states(Sector::Upper)
            .iter()
            .chain(self.states(Sector::Lower).iter())
            .map(ToString::to_string)
            .collect()
    }
}

pub fn enumerate_states(spec: SubspaceSpec, sector: Sector) -> Result<Vec<FockState>> {
    Ok(SubspaceBasis::new(spec)?.states(sector))
}
