use crate::error::{Error, Result};

/// Exact solution at time `t` of the scalar problem
/// `u' + a lambda int_0^t e^{-b(t-s)} u(s) ds = 0`, `u(0) = u0`,
/// equivalently `u'' + b u' + a lambda u = 0`, `u'(0) = 0`.
pub fn scalar_ode_oracle(a: f64, b: f64, lambda: f64, u0: f64, t: f64) -> Result<f64> {
    if !(a > 0.0 && b >= 0.0 && lambda > 0.0 && a.is_finite() && b.is_finite() && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "need a > 0, b >= 0, lambda > 0; got a = {a}, b = {b}, lambda = {lambda}"
        )));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::Domain(format!("time must be finite and >= 0, got {t}")));
    }
    let c = a * lambda;
    let disc = b * b - 4.0 * c;
    if disc.abs() < 1e-14 * b * b {
        return Ok(u0 * (1.0 + 0.5 * b * t) * (-0.5 * b * t).exp());
    }
    if disc > 0.0 {
        let s = disc.sqrt();
        let r1 = 0.5 * (-b + s);
        let r2 = 0.5 * (-b - s);
        let c1 = -r2 * u0 / (r1 - r2);
        let c2 = r1 * u0 / (r1 - r2);
        Ok(c1 * (r1 * t).exp() + c2 * (r2 * t).exp())
    } else {
        let alpha = -0.5 * b;
        let omega = 0.5 * (-disc).sqrt();
        Ok((alpha * t).exp() * u0 * ((omega * t).cos() - alpha / omega * (omega * t).sin()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_ode(a: f64, b: f64, lambda: f64) {
        let u = |t: f64| scalar_ode_oracle(a, b, lambda, 1.0, t).unwrap();
        assert_eq!(u(0.0), 1.0);
        let h = 1e-4;
        // u'(0) = 0 by a one-sided difference.
        assert!(((u(h) - u(0.0)) / h).abs() < 1e-3 * (1.0 + a * lambda));
        for t in [0.3, 1.0, 2.5] {
            let d1 = (u(t + h) - u(t - h)) / (2.0 * h);
            let d2 = (u(t + h) - 2.0 * u(t) + u(t - h)) / (h * h);
            let res = d2 + b * d1 + a * lambda * u(t);
            assert!(res.abs() < 1e-5 * (1.0 + a * lambda), "res {res} at t = {t}");
        }
    }

    #[test]
    fn satisfies_the_ode_in_all_regimes() {
        check_ode(1.0, 0.5, 4.0); // underdamped
        check_ode(1.0, 5.0, 1.0); // overdamped
        check_ode(1.0, 2.0, 1.0); // critical
        check_ode(0.3, 0.0, 2.0); // undamped
    }

    #[test]
    fn known_values() {
        // b = 0, a lambda = 1: cos t.
        let v = scalar_ode_oracle(1.0, 0.0, 1.0, 2.0, 1.0).unwrap();
        assert!((v - 2.0 * 1f64.cos()).abs() < 1e-15);
        // critical b = 2, a lambda = 1: (1 + t) e^{-t}.
        let v = scalar_ode_oracle(1.0, 2.0, 1.0, 1.0, 1.0).unwrap();
        assert!((v - 2.0 * (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(scalar_ode_oracle(0.0, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(scalar_ode_oracle(1.0, -1.0, 1.0, 1.0, 1.0).is_err());
        assert!(scalar_ode_oracle(1.0, 1.0, 1.0, 1.0, -1.0).is_err());
    }
}
