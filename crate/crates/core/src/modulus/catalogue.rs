use super::Modulus;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn catalogue_names() -> &'static [&'static str] {
    &["lip", "sqrt", "loglip", "holder:<alpha>"]
}

pub(super) fn lookup<T: Real>(name: &str) -> Result<Modulus<T>> {
    match name {
        "lip" => Ok(lipschitz()),
        "sqrt" => Ok(holder(T::lit(0.5), "sqrt")),
        "loglip" => Ok(log_lipschitz()),
        other => {
            let alpha = other
                .strip_prefix("holder:")
                .and_then(|a| a.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::Config(format!("unknown modulus `{other}`")))?;
            Modulus::holder(T::lit(alpha)).map(|m| Modulus { name: other.to_string(), ..m })
        }
    }
}

pub(super) fn lipschitz<T: Real>() -> Modulus<T> {
    Modulus::new("lip", |s| s).with_tail(|d: T| -d.ln())
}

pub(super) fn log_lipschitz<T: Real>() -> Modulus<T> {
    Modulus::new("loglip", |s: T| if s <= T::zero() { T::zero() } else { s * (T::one() - s.ln()) })
        .with_tail(|d: T| (T::one() - d.ln()).ln())
        .normalized()
}

pub(super) fn holder<T: Real>(alpha: T, name: &str) -> Modulus<T> {
    let m = Modulus::new(name, move |s: T| if s <= T::zero() { T::zero() } else { s.powf(alpha) });
    if alpha == T::one() {
        m.with_tail(|d: T| -d.ln())
    } else {
        let beta = T::one() - alpha;
        m.with_tail(move |d: T| (T::one() - d.powf(beta)) / beta)
    }
}
