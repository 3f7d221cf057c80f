//! Brute-force reference solver for chain-ordered separable problems.
//!
//! Every contiguous partition of the chain is tried. Each block gets the
//! minimiser of its summed cost, found by bisection on the derivative and
//! clipped to the box; among the candidates that come out ordered, the one
//! with the smallest total cost wins. This shares nothing with the pooling
//! solver beyond the problem statement, which is what makes it useful as a
//! cross-check. Cost grows as `2^(n-1)`, so keep `n` small (<= 12).

use super::OrderedBox;

/// Minimises `sum_i cost(i, x_i)` subject to
/// `bounds.lower <= x_1 <= ... <= x_n <= bounds.upper`, where each
/// `cost(i, .)` is convex with derivative `dcost(i, .)`.
///
/// `domain_floor` is a strict lower limit on admissible values (for costs
/// such as `-log x`); pass `f64::NEG_INFINITY` when there is none.
pub fn chain_oracle<C, D>(
    n: usize,
    bounds: OrderedBox,
    domain_floor: f64,
    cost: C,
    dcost: D,
) -> Vec<f64>
where
    C: Fn(usize, f64) -> f64,
    D: Fn(usize, f64) -> f64,
{
    if n == 0 {
        return Vec::new();
    }
    assert!(n <= 16, "oracle is exponential in n");

    // Value and cost for every contiguous block [s, e).
    let mut value = vec![vec![0.0; n + 1]; n];
    let mut block_cost = vec![vec![0.0; n + 1]; n];
    for s in 0..n {
        for e in s + 1..=n {
            let deriv = |x: f64| (s..e).map(|i| dcost(i, x)).sum::<f64>();
            let x = block_minimiser(&deriv, bounds, domain_floor);
            value[s][e] = x;
            block_cost[s][e] = (s..e).map(|i| cost(i, x)).sum();
        }
    }

    let mut best: Option<(f64, u32)> = None;
    for mask in 0u32..(1u32 << (n - 1)) {
        // Bit i set => cut between i and i+1.
        let mut total = 0.0;
        let mut prev = f64::NEG_INFINITY;
        let mut s = 0;
        let mut ok = true;
        for e in 1..=n {
            if e == n || mask & (1 << (e - 1)) != 0 {
                let v = value[s][e];
                if v < prev {
                    ok = false;
                    break;
                }
                prev = v;
                total += block_cost[s][e];
                s = e;
            }
        }
        if ok && best.is_none_or(|(c, _)| total < c) {
            best = Some((total, mask));
        }
    }

    let (_, mask) = best.expect("the all-in-one partition is always ordered");
    let mut out = Vec::with_capacity(n);
    let mut s = 0;
    for e in 1..=n {
        if e == n || mask & (1 << (e - 1)) != 0 {
            out.extend(std::iter::repeat_n(value[s][e], e - s));
            s = e;
        }
    }
    out
}

fn block_minimiser(deriv: &dyn Fn(f64) -> f64, bounds: OrderedBox, floor: f64) -> f64 {
    let lo_limit = bounds.lower().max(floor);
    let hi_limit = bounds.upper();

    // Bracket [a, b] with deriv(a) < 0 < deriv(b), or report a bound.
    let mut a = if lo_limit.is_finite() {
        if lo_limit == floor {
            // Open at the floor: step inside.
            floor + f64::EPSILON * floor.abs().max(1e-300)
        } else {
            lo_limit
        }
    } else {
        -1.0
    };
    if lo_limit.is_finite() && lo_limit > floor && deriv(a) >= 0.0 {
        return a;
    }
    if !lo_limit.is_finite() {
        while deriv(a) >= 0.0 {
            a *= 2.0;
        }
    }
    let mut b = if hi_limit.is_finite() {
        if deriv(hi_limit) <= 0.0 {
            return hi_limit;
        }
        hi_limit
    } else {
        let mut b = a.abs().max(1.0);
        while deriv(b) <= 0.0 {
            b *= 2.0;
        }
        b
    };
    if b <= a {
        return a;
    }
    for _ in 0..400 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        if deriv(mid) > 0.0 {
            b = mid;
        } else {
            a = mid;
        }
    }
    0.5 * (a + b)
}

/// Reference solution of the log-regularised (or, with `with_log_term`
/// false, the plain least-squares) box-isotonic problem.
pub fn oracle_solve(d: &[f64], beta: f64, bounds: OrderedBox, with_log_term: bool) -> Vec<f64> {
    if with_log_term {
        chain_oracle(
            d.len(),
            bounds,
            0.0,
            |i, x| -x.ln() + 0.5 * beta * (x - d[i]).powi(2),
            |i, x| -1.0 / x + beta * (x - d[i]),
        )
    } else {
        chain_oracle(
            d.len(),
            bounds,
            f64::NEG_INFINITY,
            |i, x| 0.5 * (x - d[i]).powi(2),
            |i, x| x - d[i],
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isotonic::box_isotonic;

    #[test]
    fn scalar_case_is_root_of_stationarity() {
        let b = OrderedBox::new(1e-6, 1e6).unwrap();
        let x = oracle_solve(&[0.7], 2.0, b, true)[0];
        assert!((-1.0 / x + 2.0 * (x - 0.7)).abs() < 1e-10);
    }

    #[test]
    fn plain_mode_matches_pava() {
        let cases: [&[f64]; 4] = [&[3.0, 1.0, 2.0, 0.0], &[0.0, 1.0], &[5.0, -1.0, 2.0], &[1.0]];
        for d in cases {
            for b in [
                OrderedBox::unbounded(),
                OrderedBox::new(0.5, 2.5).unwrap(),
                OrderedBox::new(-0.5, 0.5).unwrap(),
            ] {
                let o = oracle_solve(d, 1.0, b, false);
                let p = box_isotonic(d, b);
                for (x, y) in o.iter().zip(&p) {
                    assert!((x - y).abs() < 1e-9, "{d:?} {b:?}: {o:?} vs {p:?}");
                }
            }
        }
    }
}
