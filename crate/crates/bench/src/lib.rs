//! Fixtures shared by the benchmarks in `benches/`.

use conesheet::optimize::ansatz_field;
use conesheet::{DeformationField, MeshConfig, Params};

/// Ansatz field for `delta = 0.5`, `h = 0.05` on an `n` by `n` mesh.
pub fn ansatz_fixture(n: usize) -> (DeformationField, Params) {
    let p = Params::new(0.5, 0.05).expect("valid parameters");
    let mesh = MeshConfig {
        n_radial: n,
        n_angular: n,
        ..Default::default()
    };
    (ansatz_field(&p, &mesh).expect("ansatz"), p)
}

#[cfg(test)]
mod tests {
    #[test]
    fn fixture_has_requested_size() {
        let (f, p) = super::ansatz_fixture(16);
        assert_eq!(f.values().len(), 256);
        assert_eq!(p.h, 0.05);
    }
}
