//! Single-qubit Pauli matrices.

use crate::algebra::{c, Mat, ONE, ZERO};

pub fn id() -> Mat {
    Mat::from_shape_vec((2, 2), vec![ONE, ZERO, ZERO, ONE]).unwrap()
}

pub fn x() -> Mat {
    Mat::from_shape_vec((2, 2), vec![ZERO, ONE, ONE, ZERO]).unwrap()
}

pub fn y() -> Mat {
    Mat::from_shape_vec((2, 2), vec![ZERO, c(0.0, -1.0), c(0.0, 1.0), ZERO]).unwrap()
}

pub fn z() -> Mat {
    Mat::from_shape_vec((2, 2), vec![ONE, ZERO, ZERO, -ONE]).unwrap()
}

/// Pauli matrix by index: 0 = identity, 1 = x, 2 = y, 3 = z.
pub fn by_index(k: usize) -> Mat {
    match k % 4 {
        0 => id(),
        1 => x(),
        2 => y(),
        _ => z(),
    }
}
