//! Hexadecimal floating-point text (`-0x1.8p+1`), exact for every finite f64.

use crate::error::{Error, Result};

pub fn format(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    let bits = x.to_bits();
    let exp_bits = ((bits >> 52) & 0x7ff) as i32;
    let mantissa = bits & ((1u64 << 52) - 1);
    if exp_bits == 0 && mantissa == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if exp_bits == 0 { (0, -1022) } else { (1, exp_bits - 1023) };
    let mut digits = format!("{mantissa:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    let frac = if digits.is_empty() { String::new() } else { format!(".{digits}") };
    let esign = if exp >= 0 { "+" } else { "-" };
    format!("{sign}0x{lead}{frac}p{esign}{}", exp.abs())
}

pub fn parse(text: &str) -> Result<f64> {
    let bad = || Error::Parse(format!("invalid hexadecimal float {text:?}"));
    let s = text.trim();
    match s {
        "nan" => return Ok(f64::NAN),
        "inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    let (negative, s) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let s = s
        .strip_prefix("0x")
        .or_else(|| s.strip_prefix("0X"))
        .ok_or_else(bad)?;
    let (mant, exp) = s.split_once(['p', 'P']).ok_or_else(bad)?;
    let exp: i32 = exp.parse().map_err(|_| bad())?;
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.is_empty() || frac_part.len() > 13 {
        return Err(bad());
    }
    let int_val = u64::from_str_radix(int_part, 16).map_err(|_| bad())?;
    if int_val > 1 {
        return Err(bad());
    }
    let frac_val = if frac_part.is_empty() {
        0
    } else {
        u64::from_str_radix(frac_part, 16).map_err(|_| bad())? << (4 * (13 - frac_part.len()))
    };
    let significand = (int_val << 52) | frac_val;
    // significand < 2^53 and scaling by powers of two is exact unless the
    // result leaves the representable range
    let mut value = significand as f64;
    let mut e = exp - 52;
    while e > 0 {
        let step = e.min(1000);
        value *= 2f64.powi(step);
        e -= step;
    }
    while e < 0 {
        let step = (-e).min(1000);
        value *= 2f64.powi(-step);
        e += step;
    }
    Ok(if negative { -value } else { value })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_strings() {
        assert_eq!(format(1.0), "0x1p+0");
        assert_eq!(format(-3.0), "-0x1.8p+1");
        assert_eq!(format(0.1), "0x1.999999999999ap-4");
        assert_eq!(format(0.0), "0x0p+0");
        assert_eq!(format(-0.0), "-0x0p+0");
        assert_eq!(format(f64::MIN_POSITIVE / 4.0), "0x0.4p-1022");
        assert_eq!(parse("0x1.8p+1").unwrap(), 3.0);
        assert!(parse("1.5").is_err());
        assert!(parse("0x2p+0").is_err());
    }

    #[test]
    fn round_trips() {
        for x in [
            1.0,
            -1.0,
            0.1,
            std::f64::consts::PI,
            1e-300,
            5e-324,
            f64::MAX,
            f64::MIN_POSITIVE,
            123456.789e10,
            -0.0,
        ] {
            let y = parse(&format(x)).unwrap();
            assert_eq!(x.to_bits(), y.to_bits(), "{x}");
        }
    }
}
