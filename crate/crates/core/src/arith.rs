//! Small exact-arithmetic helpers shared by the geometry modules.

use num_bigint::BigInt;
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub fn int(v: i64) -> BigInt {
    BigInt::from(v)
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_from_int(v: &BigInt) -> BigRational {
    BigRational::from_integer(v.clone())
}

/// gcd of all entries; zero for the zero vector.
pub fn content(coords: &[BigInt]) -> BigInt {
    coords.iter().fold(BigInt::zero(), |g, c| g.gcd(c))
}

/// `floor(sqrt(r))` for a non-negative rational.
pub fn floor_sqrt(r: &BigRational) -> BigInt {
    debug_assert!(!r.is_negative());
    let (p, q) = (r.numer(), r.denom());
    Roots::sqrt(&(p * q)) / q
}

/// Integers `x` with `(x - center)^2 <= bound`, in increasing order.
pub fn integers_within(center: &BigRational, bound: &BigRational) -> Vec<BigInt> {
    if bound.is_negative() {
        return Vec::new();
    }
    let radius = floor_sqrt(bound);
    let lo: BigInt = center.floor().to_integer() - &radius - 1;
    let hi: BigInt = center.ceil().to_integer() + &radius + 1;
    let mut out = Vec::new();
    let mut x = lo;
    while x <= hi {
        let d = BigRational::from_integer(x.clone()) - center;
        if &(&d * &d) <= bound {
            out.push(x.clone());
        }
        x += 1;
    }
    out
}

/// Bezout coefficients `u` with `sum(u_i * a_i) = gcd(a)`, gcd taken non-negative.
pub fn bezout(a: &[BigInt]) -> (BigInt, Vec<BigInt>) {
    let mut g = BigInt::zero();
    let mut u = vec![BigInt::zero(); a.len()];
    for (i, ai) in a.iter().enumerate() {
        if ai.is_zero() {
            continue;
        }
        if g.is_zero() {
            g = ai.abs();
            u[i] = if ai.is_negative() { -BigInt::one() } else { BigInt::one() };
            continue;
        }
        let e = g.extended_gcd(ai);
        // e.gcd = e.x * g + e.y * ai
        for uj in u.iter_mut().take(i) {
            *uj *= &e.x;
        }
        u[i] = e.y;
        g = e.gcd;
        if g.is_negative() {
            g = -g;
            for uj in u.iter_mut().take(i + 1) {
                *uj = -uj.clone();
            }
        }
    }
    (g, u)
}

/// Least common multiple of the denominators.
pub fn common_denominator(values: &[BigRational]) -> BigInt {
    values.iter().fold(BigInt::one(), |l, v| l.lcm(v.denom()))
}

pub fn sign_of(r: &BigRational) -> i8 {
    if r.is_positive() {
        1
    } else if r.is_negative() {
        -1
    } else {
        0
    }
}

pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().ok()?;
            let d: BigInt = d.trim().parse().ok()?;
            if d.is_zero() {
                None
            } else {
                Some(BigRational::new(n, d))
            }
        }
        None => s.parse::<BigInt>().ok().map(BigRational::from_integer),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_sqrt_of_fractions() {
        assert_eq!(floor_sqrt(&rat(9, 4)), int(1));
        assert_eq!(floor_sqrt(&rat(4, 1)), int(2));
        assert_eq!(floor_sqrt(&rat(35, 9)), int(1));
        assert_eq!(floor_sqrt(&rat(0, 1)), int(0));
    }

    #[test]
    fn integers_within_is_exact() {
        let xs = integers_within(&rat(1, 2), &rat(9, 4));
        assert_eq!(xs, vec![int(-1), int(0), int(1), int(2)]);
        assert!(integers_within(&rat(0, 1), &rat(-1, 1)).is_empty());
        assert_eq!(integers_within(&rat(3, 1), &rat(0, 1)), vec![int(3)]);
    }

    #[test]
    fn bezout_identity() {
        for a in [vec![6, 10, 15], vec![0, -4, 6], vec![0, 0], vec![-3], vec![12, 18, -8]] {
            let a: Vec<BigInt> = a.into_iter().map(int).collect();
            let (g, u) = bezout(&a);
            let s: BigInt = a.iter().zip(&u).map(|(x, y)| x * y).sum();
            assert_eq!(s, g);
            assert_eq!(g, content(&a));
        }
    }

    #[test]
    fn rational_text_round_trip() {
        for s in ["3", "-7/2", "0"] {
            assert_eq!(format_rational(&parse_rational(s).unwrap()), s);
        }
        assert!(parse_rational("1/0").is_none());
        assert!(parse_rational("x").is_none());
    }
}
