//! Output formatting: 17 significant digits for `f64`, the working
//! precision's digits for big floats and rationals.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{Context, Result};
use asymgame_core::numeric::fmt_sig;
use asymgame_core::{Precision, Real};
use serde::Serialize;
use serde_json::{Number, Value};

/// Significant digits for `f64` output.
pub const F64_DIGITS: usize = 17;

/// A number as JSON, printed at the precision it was computed in.
pub fn num<R: Real>(x: &R, prec: Precision) -> Value {
    let s = match prec {
        Precision::Float64 => fmt_sig(x.as_f64(), F64_DIGITS),
        _ => x.to_decimal_string(prec.decimal_digits()),
    };
    text_to_number(&s)
}

fn text_to_number(s: &str) -> Value {
    match s.parse::<Number>() {
        Ok(n) => Value::Number(n),
        Err(_) => Value::String(s.to_string()),
    }
}

/// Serializes `value` and rewrites every `f64` in it with 17 significant
/// digits. Numbers already carrying more digits are left alone.
pub fn to_json<T: Serialize>(value: &T) -> Result<Value> {
    let mut v = serde_json::to_value(value).context("serializing report")?;
    reformat(&mut v);
    Ok(v)
}

fn reformat(v: &mut Value) {
    match v {
        Value::Number(n) => {
            let s = n.to_string();
            let is_float = s.contains(['.', 'e', 'E']);
            let digits = s.chars().filter(|c| c.is_ascii_digit()).count();
            if is_float && digits <= F64_DIGITS + 3 {
                if let Ok(x) = s.parse::<f64>() {
                    *v = text_to_number(&fmt_sig(x, F64_DIGITS));
                }
            }
        }
        Value::Array(a) => a.iter_mut().for_each(reformat),
        Value::Object(o) => o.values_mut().for_each(reformat),
        _ => {}
    }
}

pub fn f64_text(x: f64) -> String {
    fmt_sig(x, F64_DIGITS)
}

/// Where output goes.
pub struct Sink {
    inner: Box<dyn Write>,
}

impl Sink {
    pub fn open(path: Option<&Path>) -> Result<Self> {
        let inner: Box<dyn Write> = match path {
            Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
            None => Box::new(io::stdout()),
        };
        Ok(Sink { inner })
    }

    pub fn json(&mut self, v: &Value) -> Result<()> {
        serde_json::to_writer_pretty(&mut self.inner, v)?;
        writeln!(self.inner)?;
        Ok(())
    }

    /// Header plus rows of pre-formatted fields.
    pub fn csv(&mut self, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_writer(&mut self.inner);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}
