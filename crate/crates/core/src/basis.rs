//! Single-qubit operators in the computational basis `{|e⟩, |g⟩}` (excited first).
//!
//! Every module builds its operators from this table: σz = diag(1, −1),
//! σ⁺ = |e⟩⟨g|, σ⁻ = |g⟩⟨e|.

use num_complex::Complex64;

use crate::linalg::ComplexMatrix;

fn mat(entries: [Complex64; 4]) -> ComplexMatrix {
    ComplexMatrix::new(2, 2, entries.to_vec()).expect("2x2 constant")
}

const O: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn identity() -> ComplexMatrix {
    ComplexMatrix::identity(2)
}

pub fn sigma_x() -> ComplexMatrix {
    mat([O, ONE, ONE, O])
}

pub fn sigma_y() -> ComplexMatrix {
    mat([O, -I, I, O])
}

pub fn sigma_z() -> ComplexMatrix {
    mat([ONE, O, O, -ONE])
}

/// Raising operator |e⟩⟨g|.
pub fn sigma_plus() -> ComplexMatrix {
    mat([O, ONE, O, O])
}

/// Lowering operator |g⟩⟨e|.
pub fn sigma_minus() -> ComplexMatrix {
    mat([O, O, ONE, O])
}

/// |e⟩⟨e|
pub fn excited() -> ComplexMatrix {
    mat([ONE, O, O, O])
}

/// |g⟩⟨g|
pub fn ground() -> ComplexMatrix {
    mat([O, O, O, ONE])
}

/// |+⟩⟨+| with |+⟩ = (|e⟩ + |g⟩)/√2.
pub fn plus() -> ComplexMatrix {
    let h = Complex64::new(0.5, 0.0);
    mat([h, h, h, h])
}
