//! Regularized incomplete gamma functions and their inverses.
//!
//! `P` and `Q` come from `statrs` (series below `x = a`, Legendre continued
//! fraction above). The inverses are computed here by a bracketed Newton
//! iteration on `ln P` or `ln Q` in the log-abscissa, always inverting the
//! smaller of the two tails so that deep quantiles keep relative accuracy.

use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};

use crate::normal;

/// Regularized lower incomplete gamma `P(a, x)`; total in `x`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        gamma_lr(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 − P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma_ur(a, x)
    }
}

/// Density of the unit-scale gamma law with shape `a`.
pub fn gamma_density(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    ((a - 1.0) * x.ln() - x - ln_gamma(a)).exp()
}

/// Solves `P(a, x) = p` for `x`.
pub fn inv_gamma_p(a: f64, p: f64) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p <= 0.5 {
        invert(a, p, Tail::Lower)
    } else {
        invert(a, 1.0 - p, Tail::Upper)
    }
}

/// Solves `Q(a, x) = q` for `x`.
pub fn inv_gamma_q(a: f64, q: f64) -> f64 {
    if q <= 0.0 {
        return f64::INFINITY;
    }
    if q >= 1.0 {
        return 0.0;
    }
    if q <= 0.5 {
        invert(a, q, Tail::Upper)
    } else {
        invert(a, 1.0 - q, Tail::Lower)
    }
}

#[derive(Clone, Copy)]
enum Tail {
    Lower,
    Upper,
}

const MAX_ITER: usize = 200;
const STEP_TOL: f64 = 1e-14;

/// Newton on `g(s) = ±(ln F(e^s) − ln target)`, oriented to be increasing.
fn invert(a: f64, target: f64, tail: Tail) -> f64 {
    let ln_target = target.ln();
    let eval = |s: f64| -> (f64, f64) {
        let x = s.exp();
        let (f, sign) = match tail {
            Tail::Lower => (gamma_p(a, x), 1.0),
            Tail::Upper => (gamma_q(a, x), -1.0),
        };
        if f <= 0.0 {
            // underflow: treat as far outside the bracket
            return (sign * f64::NEG_INFINITY, 0.0);
        }
        let g = sign * (f.ln() - ln_target);
        // d/ds ln F(e^s) = ± x f(x) / F(x), oriented to be positive
        let dg = x * gamma_density(a, x) / f;
        (g, dg)
    };

    let mut s = initial_guess(a, target, tail).ln();
    let (mut g, mut dg) = eval(s);
    if g == 0.0 {
        return s.exp();
    }

    // bracket the root in s
    let (mut lo, mut hi);
    let mut step = 1.0;
    if g < 0.0 {
        lo = s;
        hi = s + step;
        while eval(hi).0 < 0.0 {
            lo = hi;
            step *= 2.0;
            hi += step;
        }
    } else {
        hi = s;
        lo = s - step;
        while eval(lo).0 > 0.0 {
            hi = lo;
            step *= 2.0;
            lo -= step;
        }
    }
    if !(lo..=hi).contains(&s) {
        s = 0.5 * (lo + hi);
        (g, dg) = eval(s);
    }

    for _ in 0..MAX_ITER {
        if g < 0.0 {
            lo = s;
        } else if g > 0.0 {
            hi = s;
        } else {
            break;
        }
        let newton = if dg > 0.0 && g.is_finite() { s - g / dg } else { f64::NAN };
        let next = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let delta = (next - s).abs();
        s = next;
        (g, dg) = eval(s);
        if delta < STEP_TOL * s.abs().max(1.0) || hi - lo < STEP_TOL {
            break;
        }
    }
    s.exp()
}

fn initial_guess(a: f64, target: f64, tail: Tail) -> f64 {
    let p = match tail {
        Tail::Lower => target,
        Tail::Upper => 1.0 - target,
    };
    // Wilson–Hilferty
    let z = normal::inv_cdf(p);
    let c = 1.0 - 1.0 / (9.0 * a) + z / (3.0 * a.sqrt());
    let wh = a * c * c * c;
    if wh > 0.0 && wh.is_finite() {
        return wh;
    }
    // small-x expansion P(a, x) ≈ x^a / Γ(a + 1)
    let small = ((p.ln() + ln_gamma(a + 1.0)) / a).exp();
    if small > 0.0 && small.is_finite() {
        small
    } else {
        a
    }
}
