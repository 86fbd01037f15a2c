//! Composite rules on uniformly spaced samples.

use crate::scalar::Scalar;

/// Trapezoid rule over samples spaced `h` apart.
pub fn trapezoid<T: Scalar>(values: &[T], h: T) -> T {
    match values.len() {
        0 | 1 => T::zero(),
        n => {
            let inner = values[1..n - 1].iter().fold(T::zero(), |acc, &v| acc + v);
            h * (inner + (values[0] + values[n - 1]) / T::lit(2.0))
        }
    }
}

/// Composite Simpson rule over samples spaced `h` apart.
///
/// An odd number of intervals closes with Simpson's 3/8 rule on the last three.
pub fn simpson<T: Scalar>(values: &[T], h: T) -> T {
    let n = values.len();
    if n < 3 {
        return trapezoid(values, h);
    }
    let intervals = n - 1;
    let (even_part, tail) = if intervals.is_multiple_of(2) {
        (intervals, T::zero())
    } else if intervals == 3 {
        (0, three_eighths(&values[0..4], h))
    } else {
        (intervals - 3, three_eighths(&values[intervals - 3..], h))
    };
    if even_part == 0 {
        return tail;
    }
    let mut acc = values[0] + values[even_part];
    for (i, &v) in values.iter().enumerate().take(even_part).skip(1) {
        acc += if i % 2 == 1 {
            T::lit(4.0) * v
        } else {
            T::lit(2.0) * v
        };
    }
    acc * h / T::lit(3.0) + tail
}

fn three_eighths<T: Scalar>(v: &[T], h: T) -> T {
    T::lit(3.0) * h / T::lit(8.0) * (v[0] + T::lit(3.0) * (v[1] + v[2]) + v[3])
}

/// Simpson rule for `f` on `[a, b]` with `intervals` subintervals (rounded up to even).
pub fn simpson_fn<T: Scalar>(f: impl Fn(T) -> T, a: T, b: T, intervals: usize) -> T {
    let m = intervals.max(2).div_ceil(2) * 2;
    let h = (b - a) / T::lit(m as f64);
    let values: Vec<T> = (0..=m).map(|i| f(a + h * T::lit(i as f64))).collect();
    simpson(&values, h)
}
