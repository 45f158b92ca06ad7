//! Engineering-suffix numbers: `4.7k`, `250n`, `10M`, `2.2µ`, `1e3`.
//!
//! Suffixes are case-sensitive (`m` is milli, `M` is mega). Units are not
//! accepted; the library works in strict SI.

pub fn parse_eng(text: &str) -> Result<f64, String> {
    let t = text.trim();
    if t.is_empty() {
        return Err("empty number".into());
    }
    let (number, scale) = match t.chars().last() {
        Some(c) if !c.is_ascii_digit() && c != '.' => match multiplier(c) {
            Some(m) => (&t[..t.len() - c.len_utf8()], m),
            // `inf`, `NaN` and malformed input go to the float parser.
            None => (t, 1.0),
        },
        _ => (t, 1.0),
    };
    let value: f64 = number
        .trim()
        .parse()
        .map_err(|_| format!("{text:?} is not a number with an optional k/M/G/m/µ/u/n/p suffix"))?;
    Ok(value * scale)
}

fn multiplier(c: char) -> Option<f64> {
    Some(match c {
        'p' => 1e-12,
        'n' => 1e-9,
        'u' | 'µ' | 'μ' => 1e-6,
        'm' => 1e-3,
        'k' => 1e3,
        'M' => 1e6,
        'G' => 1e9,
        _ => return None,
    })
}
