//! One-dimensional maximization on periodic domains.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of a unimodal `f` on `[a, b]`.
pub(crate) fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Maximizes a `2π`-periodic `f` over `[start, start + 2π)`: a uniform grid
/// locates every local maximum, each is refined by golden section, and the
/// best wins. Values equal to within a relative `1e-9` count as ties and go
/// to the smallest angle.
pub(crate) fn periodic_max(f: impl Fn(f64) -> f64, start: f64, grid: usize, tol: f64) -> (f64, f64) {
    let tau = std::f64::consts::TAU;
    let h = tau / grid as f64;
    let values: Vec<f64> = (0..grid).map(|i| f(start + h * i as f64)).collect();
    let mut best: Option<(f64, f64)> = None;
    for i in 0..grid {
        let prev = values[(i + grid - 1) % grid];
        let next = values[(i + 1) % grid];
        if values[i] < prev || values[i] < next {
            continue;
        }
        let centre = start + h * i as f64;
        let (mut x, mut v) = golden_max(&f, centre - h, centre + h, tol);
        if values[i] > v {
            x = centre;
            v = values[i];
        }
        x = start + (x - start).rem_euclid(tau);
        best = match best {
            None => Some((x, v)),
            Some((bx, bv)) => {
                let tie = (v - bv).abs() <= 1e-9 * bv.abs().max(v.abs());
                if (tie && x < bx) || (!tie && v > bv) {
                    Some((x, v))
                } else {
                    Some((bx, bv))
                }
            }
        };
    }
    best.unwrap_or((start, values[0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_peak_of_cosine() {
        let (x, v) = periodic_max(|t| (t - 2.0).cos(), 0.0, 64, 1e-9);
        assert!((x - 2.0).abs() < 1e-7);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ties_go_to_smallest_angle() {
        // equal peaks at 2 and 2 + π
        let (x, _) = periodic_max(|t| (t - 2.0).cos().abs(), 0.0, 1024, 1e-9);
        assert!((x - 2.0).abs() < 1e-6, "{x}");
        let (x, _) = periodic_max(|t| (t - 4.0).cos().abs(), 0.0, 1024, 1e-9);
        assert!((x - (4.0 - std::f64::consts::PI)).abs() < 1e-6, "{x}");
    }
}
