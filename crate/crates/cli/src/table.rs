use crate::compare::Row;
use crate::config::Format;
use anyhow::Result;

/// Like C's `%.12g`: 12 significant digits, trailing zeros dropped.
pub fn fmt_g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.11e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        trim_zeros(format!("{:.*}", (11 - exp) as usize, x))
    } else {
        format!("{}e{}{:02}", trim_zeros(mant.to_string()), if exp < 0 { '-' } else { '+' }, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn to_csv(rows: &[Row]) -> String {
    let mut out = String::from("engine,w,value,error_estimate,runtime_ms\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.engine.name(),
            r.w,
            fmt_g12(r.value),
            fmt_g12(r.error_estimate),
            fmt_g12(r.runtime_ms)
        ));
    }
    out
}

pub fn render(rows: &[Row], format: Format) -> Result<String> {
    Ok(match format {
        Format::Csv => to_csv(rows),
        Format::Json => serde_json::to_string_pretty(rows)? + "\n",
    })
}
