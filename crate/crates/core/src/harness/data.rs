//! Fixed matrices for the reproductions.

use crate::linalg::{ComplexMatrix, C64};

/// The 4×2 pair with entries in {0, ±1}/√3 (n = k = m = 2).
pub fn gap_pair() -> (ComplexMatrix, ComplexMatrix) {
    let s = 1.0 / 3f64.sqrt();
    let v1 = ComplexMatrix::from_real(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, -1.0]).scale_real(s);
    let v2 = ComplexMatrix::from_real(4, 2, &[1.0, 1.0, 1.0, -1.0, 1.0, 0.0, 0.0, -1.0]).scale_real(s);
    (v1, v2)
}

/// One-parameter family `[[cos x, i sin x], [−sin x, i cos x]]`.
pub fn gap_family(x: f64) -> ComplexMatrix {
    let (s, c) = x.sin_cos();
    ComplexMatrix::from_vec(2, 2, vec![C64::new(c, 0.0), C64::new(0.0, s), C64::new(-s, 0.0), C64::new(0.0, c)])
        .expect("finite entries")
}

fn cm(rows: usize, cols: usize, entries: &[(f64, f64)]) -> ComplexMatrix {
    ComplexMatrix::from_vec(rows, cols, entries.iter().map(|&(re, im)| C64::new(re, im)).collect())
        .expect("finite entries")
}

/// The printed 6×3 isometries (n = k = 3, m = 2), six significant digits.
pub fn far_pair() -> (ComplexMatrix, ComplexMatrix) {
    let v1 = cm(
        6,
        3,
        &[
            (0.0720257, 0.403635),
            (-0.27118, -0.260568),
            (-0.0507697, 0.0669192),
            (0.19795, 0.363156),
            (0.201747, -0.0722566),
            (0.679242, -0.0637345),
            (-0.259574, 0.274006),
            (-0.107846, -0.210931),
            (0.0967138, 0.297056),
            (-0.429354, -0.410058),
            (0.0846627, 0.124068),
            (0.559109, -0.251464),
            (-0.335246, 0.151762),
            (-0.130565, 0.325685),
            (0.111082, 0.0316921),
            (-0.120023, -0.12668),
            (-0.446167, -0.641698),
            (0.200846, -0.0199049),
        ],
    );
    let v2 = cm(
        6,
        3,
        &[
            (-0.472877, 0.283338),
            (-0.0970526, -0.387244),
            (0.0909608, -0.338129),
            (-0.244363, 0.193024),
            (0.00157303, 0.23514),
            (-0.104252, -0.362985),
            (0.129531, 0.238246),
            (-0.0278328, 0.419327),
            (0.00258036, -0.341585),
            (0.245734, 0.258541),
            (-0.171596, 0.148668),
            (-0.0406064, 0.0942153),
            (0.0945343, 0.420365),
            (0.0985514, 0.220795),
            (0.687703, 0.354813),
            (0.461193, -0.00493922),
            (-0.38767, -0.590272),
            (0.0784118, 0.0507872),
        ],
    );
    (v1, v2)
}

/// Printed minimizing environment unitary for [`far_pair`].
pub fn far_pair_unitary() -> ComplexMatrix {
    cm(2, 2, &[(-0.256631, 0.0241997), (-0.674035, 0.692265), (0.156281, 0.953484), (-0.196551, -0.166771)])
}

/// Printed contraction witnessing non-zero fidelity for [`far_pair`].
pub fn far_pair_contraction() -> ComplexMatrix {
    cm(2, 2, &[(-0.123603, -0.0759052), (-0.753418, 0.567052), (-0.179898, 0.274495), (-0.137246, 0.225905)])
}
