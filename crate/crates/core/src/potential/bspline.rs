use super::PotentialError;

/// Layout of the uniform cubic B-spline basis over Cα–Cα distance.
///
/// Basis `p` (1-based) is supported on
/// `[knot_start + (p-1)*knot_step, knot_start + (p-1)*knot_step + support_width]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineBasisConfig {
    pub n_basis: usize,
    pub knot_start: f64,
    pub knot_step: f64,
    pub support_width: f64,
}

impl Default for SplineBasisConfig {
    fn default() -> Self {
        SplineBasisConfig {
            n_basis: 8,
            knot_start: 2.2,
            knot_step: 0.6,
            support_width: 2.4,
        }
    }
}

// Knots live on a 1e-9 Å grid so that decimal layouts such as 2.2 + 2.4
// land exactly on the double nearest 4.6.
fn snap(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

impl SplineBasisConfig {
    /// Support interval `[lo, hi]` of basis `p`.
    pub fn support(&self, p: usize) -> Result<(f64, f64), PotentialError> {
        if p == 0 || p > self.n_basis {
            return Err(PotentialError::BadBasisIndex(p, self.n_basis));
        }
        let lo = snap(self.knot_start + (p - 1) as f64 * self.knot_step);
        Ok((lo, snap(lo + self.support_width)))
    }

    /// Lowest and highest distance touched by any basis.
    pub fn domain(&self) -> (f64, f64) {
        let lo = snap(self.knot_start);
        let hi = snap(self.knot_start + (self.n_basis - 1) as f64 * self.knot_step + self.support_width);
        (lo, hi)
    }

    /// Basis indices (1-based) whose open support contains `r`.
    pub fn active_bases(&self, r: f64) -> impl Iterator<Item = usize> + '_ {
        let first = ((r - self.knot_start - self.support_width) / self.knot_step).floor();
        let first = if first.is_finite() { first.max(0.0) as usize + 1 } else { 1 };
        let last = ((r - self.knot_start) / self.knot_step).ceil();
        let last = if last.is_finite() { (last.max(0.0) as usize + 1).min(self.n_basis) } else { 0 };
        (first..=last).filter(move |&p| {
            let (lo, hi) = self.support(p).expect("index in range");
            r > lo && r < hi
        })
    }
}

/// Normalized uniform cubic B-spline on `[0, 4]`, evaluated for `u <= 2`
/// (the other half follows by symmetry).
fn cubic_half(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u < 1.0 {
        u * u * u / 6.0
    } else {
        let u = u.min(2.0);
        (-3.0 * u * u * u + 12.0 * u * u - 12.0 * u + 4.0) / 6.0
    }
}

/// Value of basis `p` (1-based) at distance `r`.
///
/// Zero outside the support; peak 2/3 at the support centre; 1/6 at the
/// first and last interior knots.
pub fn bspline_eval(p: usize, r: f64, config: &SplineBasisConfig) -> Result<f64, PotentialError> {
    let (lo, hi) = config.support(p)?;
    if !(r > lo && r < hi) {
        return Ok(0.0);
    }
    let span = hi - lo;
    let step = span / 4.0;
    let from_lo = (r - lo) / step;
    let from_hi = (hi - r) / step;
    Ok(cubic_half(from_lo.min(from_hi)))
}
