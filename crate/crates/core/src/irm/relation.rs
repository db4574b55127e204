use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Mode;
use crate::attendance::BinaryAttendance;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MaskedCell {
    pub row: u32,
    pub col: u32,
    /// Whether the cell is a link in the full matrix.
    pub link: bool,
}

/// Cells treated as missing during inference, with their true values.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MaskedCell>", into = "Vec<MaskedCell>")]
pub struct HeldOutMask {
    cells: Vec<MaskedCell>,
}

impl HeldOutMask {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(mut cells: Vec<MaskedCell>) -> Result<Self> {
        cells.sort_unstable();
        if cells.windows(2).any(|w| (w[0].row, w[0].col) == (w[1].row, w[1].col)) {
            return Err(Error::InvalidParameter("masked cells must be distinct".into()));
        }
        Ok(Self { cells })
    }

    /// Masks every cell of `a`.
    pub fn all(a: &BinaryAttendance) -> Self {
        let cells = (0..a.n_rows())
            .flat_map(|i| {
                (0..a.n_cols()).map(move |j| (i, j))
            })
            .map(|(i, j)| MaskedCell { row: i as u32, col: j as u32, link: a.get(i, j) })
            .collect();
        Self { cells }
    }

    pub fn cells(&self) -> &[MaskedCell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn num_links(&self) -> usize {
        self.cells.iter().filter(|c| c.link).count()
    }

    pub fn num_nonlinks(&self) -> usize {
        self.len() - self.num_links()
    }

    pub fn contains(&self, row: u32, col: u32) -> bool {
        self.cells.binary_search_by(|c| (c.row, c.col).cmp(&(row, col))).is_ok()
    }

    /// `a` with the masked links removed.
    pub fn apply(&self, a: &BinaryAttendance) -> BinaryAttendance {
        a.without_cells(self.cells.iter().filter(|c| c.link).map(|c| (c.row, c.col)))
    }
}

impl TryFrom<Vec<MaskedCell>> for HeldOutMask {
    type Error = Error;

    fn try_from(cells: Vec<MaskedCell>) -> Result<Self> {
        Self::new(cells)
    }
}

impl From<HeldOutMask> for Vec<MaskedCell> {
    fn from(m: HeldOutMask) -> Self {
        m.cells
    }
}

/// Masks `⌈fraction · links⌉` links and as many non-links, drawn uniformly
/// without replacement. Returns the masked view (held-out links removed) and
/// the mask with ground truth.
pub fn hold_out<R: Rng + ?Sized>(
    a: &BinaryAttendance,
    fraction: f64,
    rng: &mut R,
) -> Result<(BinaryAttendance, HeldOutMask)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::HoldOut(format!("fraction {fraction} outside (0, 1)")));
    }
    let n_links = a.num_links();
    let k = libm::ceil(fraction * n_links as f64) as usize;
    if k == 0 {
        return Err(Error::HoldOut("no cells would be held out".into()));
    }
    let (n_rows, n_cols) = (a.n_rows(), a.n_cols());
    let total = n_rows * n_cols;
    let n_nonlinks = total - n_links;
    if n_nonlinks < k {
        return Err(Error::HoldOut(format!("{k} non-links requested, {n_nonlinks} available")));
    }

    let links: Vec<(u32, u32)> = a.triplets().collect();
    let mut cells: Vec<MaskedCell> = rand::seq::index::sample(rng, n_links, k)
        .into_iter()
        .map(|p| MaskedCell { row: links[p].0, col: links[p].1, link: true })
        .collect();

    if n_nonlinks * 4 >= total {
        let mut chosen = BTreeSet::new();
        while chosen.len() < k {
            let i = rng.random_range(0..n_rows);
            let j = rng.random_range(0..n_cols);
            if !a.get(i, j) {
                chosen.insert((i as u32, j as u32));
            }
        }
        cells.extend(chosen.into_iter().map(|(row, col)| MaskedCell { row, col, link: false }));
    } else {
        let nonlinks: Vec<(u32, u32)> = (0..n_rows)
            .flat_map(|i| (0..n_cols).map(move |j| (i, j)))
            .filter(|&(i, j)| !a.get(i, j))
            .map(|(i, j)| (i as u32, j as u32))
            .collect();
        cells.extend(
            rand::seq::index::sample(rng, nonlinks.len(), k)
                .into_iter()
                .map(|p| MaskedCell { row: nonlinks[p].0, col: nonlinks[p].1, link: false }),
        );
    }
    let mask = HeldOutMask::new(cells)?;
    Ok((mask.apply(a), mask))
}

/// Observed adjacency of a bipartite matrix in both orientations, with the
/// masked cells split out.
#[derive(Clone, Debug)]
pub struct Relation {
    n_rows: usize,
    n_cols: usize,
    row_links: Vec<Vec<u32>>,
    col_links: Vec<Vec<u32>>,
    row_masked: Vec<Vec<u32>>,
    col_masked: Vec<Vec<u32>>,
}

impl Relation {
    pub fn new(a: &BinaryAttendance, mask: &HeldOutMask) -> Result<Self> {
        let (n_rows, n_cols) = (a.n_rows(), a.n_cols());
        let mut row_masked = vec![Vec::new(); n_rows];
        let mut col_masked = vec![Vec::new(); n_cols];
        for c in mask.cells() {
            if c.row as usize >= n_rows || c.col as usize >= n_cols {
                return Err(Error::DimensionMismatch(format!(
                    "masked cell ({}, {}) outside {n_rows}×{n_cols}",
                    c.row, c.col
                )));
            }
            row_masked[c.row as usize].push(c.col);
            col_masked[c.col as usize].push(c.row);
        }
        let mut row_links = vec![Vec::new(); n_rows];
        let mut col_links = vec![Vec::new(); n_cols];
        for (i, j) in a.triplets() {
            if row_masked[i as usize].binary_search(&j).is_ok() {
                continue;
            }
            row_links[i as usize].push(j);
            col_links[j as usize].push(i);
        }
        Ok(Self { n_rows, n_cols, row_links, col_links, row_masked, col_masked })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn size(&self, mode: Mode) -> usize {
        match mode {
            Mode::Row => self.n_rows,
            Mode::Col => self.n_cols,
        }
    }

    #[inline]
    pub(crate) fn links(&self, mode: Mode, node: usize) -> &[u32] {
        match mode {
            Mode::Row => &self.row_links[node],
            Mode::Col => &self.col_links[node],
        }
    }

    #[inline]
    pub(crate) fn masked(&self, mode: Mode, node: usize) -> &[u32] {
        match mode {
            Mode::Row => &self.row_masked[node],
            Mode::Col => &self.col_masked[node],
        }
    }

    pub fn num_observed_links(&self) -> usize {
        self.row_links.iter().map(Vec::len).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn matrix_with_links(n_links: usize, n_rows: usize, n_cols: usize) -> BinaryAttendance {
        let mut dense = vec![vec![false; n_cols]; n_rows];
        for k in 0..n_links {
            dense[k / n_cols][k % n_cols] = true;
        }
        BinaryAttendance::from_dense(&dense).unwrap()
    }

    #[test]
    fn ceiling_rule() {
        let a = matrix_with_links(100, 20, 20);
        let (view, mask) = hold_out(&a, 0.025, &mut seeded(1)).unwrap();
        assert_eq!(mask.num_links(), 3);
        assert_eq!(mask.num_nonlinks(), 3);
        assert_eq!(view.num_links(), 97);
        for c in mask.cells() {
            assert_eq!(a.get(c.row as usize, c.col as usize), c.link);
        }
    }

    #[test]
    fn degenerate_fractions_rejected() {
        let a = matrix_with_links(10, 5, 5);
        assert!(hold_out(&a, 0.0, &mut seeded(1)).is_err());
        assert!(hold_out(&a, 1.0, &mut seeded(1)).is_err());
        let empty = matrix_with_links(0, 5, 5);
        assert!(matches!(hold_out(&empty, 0.5, &mut seeded(1)), Err(Error::HoldOut(_))));
        // 24 links, 1 non-link: 12 non-links cannot be found
        let full = matrix_with_links(24, 5, 5);
        assert!(hold_out(&full, 0.5, &mut seeded(1)).is_err());
    }

    #[test]
    fn dense_matrix_uses_enumeration() {
        let a = matrix_with_links(90, 10, 10);
        let (_, mask) = hold_out(&a, 0.1, &mut seeded(3)).unwrap();
        assert_eq!(mask.num_links(), 9);
        assert_eq!(mask.num_nonlinks(), 9);
    }

    #[test]
    fn relation_excludes_masked_cells() {
        let a = BinaryAttendance::from_dense(&[vec![true, true], vec![false, true]]).unwrap();
        let mask = HeldOutMask::new(vec![MaskedCell { row: 0, col: 1, link: true }]).unwrap();
        let r = Relation::new(&a, &mask).unwrap();
        assert_eq!(r.links(Mode::Row, 0), &[0]);
        assert_eq!(r.links(Mode::Col, 1), &[1]);
        assert_eq!(r.masked(Mode::Col, 1), &[0]);
    }
}
