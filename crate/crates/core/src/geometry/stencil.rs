//! Fourth-order central differences on a uniform grid whose two ends are
//! reflection points (poles). Values beyond each end are reconstructed from
//! the parity of the field: even fields mirror, odd fields mirror with a
//! sign flip.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

/// Value at (possibly ghost) index `i` of `f`, reflected across the ends.
#[inline]
fn ghost(f: &[f64], i: isize, parity: Parity) -> f64 {
    let last = f.len() as isize - 1;
    if i < 0 {
        parity.sign() * f[(-i) as usize]
    } else if i > last {
        parity.sign() * f[(2 * last - i) as usize]
    } else {
        f[i as usize]
    }
}

/// d/dx of `f` at every node. Needs at least three nodes.
pub fn d1(f: &[f64], h: f64, parity: Parity) -> Vec<f64> {
    let n = f.len() as isize;
    (0..n)
        .map(|i| {
            let m2 = ghost(f, i - 2, parity);
            let m1 = ghost(f, i - 1, parity);
            let p1 = ghost(f, i + 1, parity);
            let p2 = ghost(f, i + 2, parity);
            (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h)
        })
        .collect()
}

/// d²/dx² of `f` at node `i`.
pub fn d2_at(f: &[f64], h: f64, parity: Parity, i: usize) -> f64 {
    let i = i as isize;
    let m2 = ghost(f, i - 2, parity);
    let m1 = ghost(f, i - 1, parity);
    let c = f[i as usize];
    let p1 = ghost(f, i + 1, parity);
    let p2 = ghost(f, i + 2, parity);
    (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h)
}
