use hyperreduce::fe::SparseSymMatrix;
use hyperreduce::Error;
use nalgebra::DVector;

/// Mass-normalized global relative error in percent,
/// `100 √(Σ_t (u−ũ)ᵀM(u−ũ)) / √(Σ_t uᵀMu)`.
pub fn gre_m(
    full: &[DVector<f64>],
    reduced: &[DVector<f64>],
    mass: &SparseSymMatrix,
) -> Result<f64, Error> {
    if full.len() != reduced.len() {
        return Err(Error::DimensionMismatch {
            what: "GRE sample count",
            expected: full.len(),
            found: reduced.len(),
        });
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (u, r) in full.iter().zip(reduced) {
        if r.len() != u.len() {
            return Err(Error::DimensionMismatch {
                what: "GRE state",
                expected: u.len(),
                found: r.len(),
            });
        }
        num += mass.quad_form(&(u - r));
        den += mass.quad_form(u);
    }
    if den == 0.0 {
        return Err(Error::ZeroReference);
    }
    Ok(100.0 * (num / den).sqrt())
}
