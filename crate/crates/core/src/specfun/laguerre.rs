use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 200;

/// Laguerre polynomial `L_n(x)` by the three-term recurrence
/// `(k+1) L_{k+1} = (2k+1-x) L_k - k L_{k-1}`.
pub fn laguerre(n: usize, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain("laguerre", format!("x = {x}")));
    }
    if n > MAX_DEGREE {
        return Err(Error::domain(
            "laguerre",
            format!("degree {n} > {MAX_DEGREE}"),
        ));
    }
    let mut prev = 1.0;
    if n == 0 {
        return Ok(prev);
    }
    let mut cur = 1.0 - x;
    for k in 1..n {
        let k = k as f64;
        let next = ((2.0 * k + 1.0 - x) * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}
