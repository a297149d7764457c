//! Shared inputs for the benchmarks.

use tmp_ldpc::BaseMatrix;

/// Rate-3/4 base matrix with VN degrees capped at 12.
pub fn rate34() -> BaseMatrix {
    BaseMatrix::new(
        vec![vec![2, 3, 1, 4, 3, 5, 4, 3], vec![1, 1, 7, 0, 1, 6, 0, 1]],
        &[],
    )
    .expect("valid matrix")
}
