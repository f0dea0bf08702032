//! Periodic square lattice (torus) and spin storage.
//!
//! Sites are indexed row-major: `site = y * width + x`. Lattices as small as
//! 1×1 are allowed; on widths or heights below 3 a neighbor may appear more
//! than once (or be the site itself), and sums count it with multiplicity.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Lattice extent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub width: usize,
    pub height: usize,
}

impl Dims {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid(
                "dims",
                format!("lattice dimensions must be positive, got {width}x{height}"),
            ));
        }
        Ok(Dims { width, height })
    }

    pub fn square(side: usize) -> Result<Self> {
        Dims::new(side, side)
    }

    pub fn sites(&self) -> usize {
        self.width * self.height
    }

    pub fn coords(&self, site: usize) -> (usize, usize) {
        (site % self.width, site / self.width)
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// Neighbors of `site` as `[left, right, up, down]`, i.e.
    /// `(x-1,y), (x+1,y), (x,y-1), (x,y+1)` with wrap-around.
    pub fn neighbor_sites(&self, site: usize) -> Result<[usize; 4]> {
        if site >= self.sites() {
            return Err(Error::SiteOutOfRange {
                site,
                len: self.sites(),
            });
        }
        Ok(self.neighbors_of(site))
    }

    #[inline]
    pub(crate) fn neighbors_of(&self, site: usize) -> [usize; 4] {
        let (w, h) = (self.width, self.height);
        let (x, y) = (site % w, site / w);
        let left = if x == 0 { w - 1 } else { x - 1 };
        let right = if x + 1 == w { 0 } else { x + 1 };
        let up = if y == 0 { h - 1 } else { y - 1 };
        let down = if y + 1 == h { 0 } else { y + 1 };
        [
            y * w + left,
            y * w + right,
            up * w + x,
            down * w + x,
        ]
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

impl FromStr for Dims {
    type Err = Error;

    /// Parses `WxH` (e.g. `256x256`) or a single side length.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let parse = |part: &str| {
            part.trim()
                .parse::<usize>()
                .map_err(|_| Error::invalid("dims", format!("expected WxH, got `{s}`")))
        };
        match s.split_once(['x', 'X']) {
            Some((w, h)) => Dims::new(parse(w)?, parse(h)?),
            None => Dims::square(parse(s)?),
        }
    }
}

/// Taxpayer behavior at one site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(i8)]
pub enum Spin {
    /// `S = -1`
    Evading = -1,
    /// `S = +1`
    Compliant = 1,
}

impl Spin {
    #[inline]
    pub fn value(self) -> i32 {
        self as i8 as i32
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::Evading => Spin::Compliant,
            Spin::Compliant => Spin::Evading,
        }
    }

    pub fn from_value(v: i32) -> Option<Spin> {
        match v {
            1 => Some(Spin::Compliant),
            -1 => Some(Spin::Evading),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinGrid {
    dims: Dims,
    spins: Vec<Spin>,
}

impl SpinGrid {
    pub fn filled(dims: Dims, spin: Spin) -> Self {
        SpinGrid {
            dims,
            spins: vec![spin; dims.sites()],
        }
    }

    pub fn from_spins(dims: Dims, spins: Vec<Spin>) -> Result<Self> {
        if spins.len() != dims.sites() {
            return Err(Error::DimensionMismatch {
                expected: dims.sites(),
                found: spins.len(),
            });
        }
        Ok(SpinGrid { dims, spins })
    }

    /// Checkerboard with `Compliant` on sites where `x + y` is even.
    pub fn checkerboard(dims: Dims) -> Self {
        let spins = (0..dims.sites())
            .map(|i| {
                let (x, y) = dims.coords(i);
                if (x + y) % 2 == 0 {
                    Spin::Compliant
                } else {
                    Spin::Evading
                }
            })
            .collect();
        SpinGrid { dims, spins }
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.spins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spins.is_empty()
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    #[inline]
    pub fn get(&self, site: usize) -> Spin {
        self.spins[site]
    }

    #[inline]
    pub fn set(&mut self, site: usize, spin: Spin) {
        self.spins[site] = spin;
    }

    pub fn count(&self, spin: Spin) -> usize {
        self.spins.iter().filter(|&&s| s == spin).count()
    }

    /// Sum of the four neighbor spins of `site`, in `{-4, -2, 0, 2, 4}`.
    pub fn neighbor_spin_sum(&self, site: usize) -> Result<i32> {
        let nb = self.dims.neighbor_sites(site)?;
        Ok(nb.iter().map(|&j| self.spins[j].value()).sum())
    }

    #[inline]
    pub(crate) fn neighbor_sum_unchecked(&self, site: usize) -> i32 {
        let [l, r, u, d] = self.dims.neighbors_of(site);
        self.spins[l].value() + self.spins[r].value() + self.spins[u].value() + self.spins[d].value()
    }

    /// `Σ_<ij> S_i S_j` by iterating the bond list: every site owns its right
    /// and down bond, giving `2N` bonds.
    pub fn bond_sum(&self) -> i64 {
        (0..self.len())
            .map(|i| {
                let [_, right, _, down] = self.dims.neighbors_of(i);
                let s = self.spins[i].value();
                (s * self.spins[right].value() + s * self.spins[down].value()) as i64
            })
            .sum()
    }

    /// Same quantity as [`bond_sum`](Self::bond_sum) computed per site:
    /// `½ Σ_i S_i · (neighbor sum of i)`.
    pub fn site_sum(&self) -> i64 {
        let twice: i64 = (0..self.len())
            .map(|i| (self.spins[i].value() * self.neighbor_sum_unchecked(i)) as i64)
            .sum();
        twice / 2
    }

    /// Dense text matrix: one line per lattice row, entries `1` / `-1`
    /// separated by single spaces.
    pub fn to_text_matrix(&self) -> String {
        let mut out = String::with_capacity(self.len() * 3);
        for row in self.spins.chunks(self.dims.width) {
            let line: Vec<&str> = row
                .iter()
                .map(|s| match s {
                    Spin::Compliant => "1",
                    Spin::Evading => "-1",
                })
                .collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text_matrix(text: &str) -> Result<Self> {
        let mut spins = Vec::new();
        let mut width = None;
        let mut height = 0;
        for (lineno, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<Spin> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<i32>()
                        .ok()
                        .and_then(Spin::from_value)
                        .ok_or_else(|| Error::Syntax {
                            line: lineno + 1,
                            message: format!("expected 1 or -1, got `{tok}`"),
                        })
                })
                .collect::<Result<_>>()?;
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::Syntax {
                        line: lineno + 1,
                        message: format!("row has {} entries, expected {w}", row.len()),
                    })
                }
                _ => {}
            }
            spins.extend(row);
            height += 1;
        }
        let dims = Dims::new(width.unwrap_or(0), height)?;
        SpinGrid::from_spins(dims, spins)
    }
}
