//! Plain-text model files.
//!
//! ```text
//! # popcd-rbm v1
//! visible 3
//! hidden 2
//! weights
//! <3 lines of 2 values>
//! visible_bias
//! <1 line of 3 values>
//! hidden_bias
//! <1 line of 2 values>
//! ```
//!
//! Values are written in shortest round-trip form, so saving and loading
//! reproduces the parameters bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{RbmError, Result};
use crate::rbm::RbmParams;

pub const MODEL_HEADER: &str = "# popcd-rbm v1";

fn push_row(out: &mut String, values: &[f64]) {
    for (i, x) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{x:e}");
    }
    out.push('\n');
}

pub fn write_model(params: &RbmParams) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_HEADER}");
    let _ = writeln!(out, "visible {}", params.num_visible());
    let _ = writeln!(out, "hidden {}", params.num_hidden());
    out.push_str("weights\n");
    for j in 0..params.num_visible() {
        push_row(&mut out, params.weight_row(j));
    }
    out.push_str("visible_bias\n");
    push_row(&mut out, params.visible_bias());
    out.push_str("hidden_bias\n");
    push_row(&mut out, params.hidden_bias());
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn err(line: usize, message: impl Into<String>) -> RbmError {
        RbmError::Parse {
            location: format!("line {line}"),
            message: message.into(),
        }
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        loop {
            match self.inner.next() {
                Some((_, l)) if l.trim().is_empty() => continue,
                Some((i, l)) => return Ok((i + 1, l.trim())),
                None => return Err(Self::err(0, format!("unexpected end of file, expected {what}"))),
            }
        }
    }

    fn keyword(&mut self, word: &str) -> Result<()> {
        let (i, l) = self.next(word)?;
        if l == word {
            Ok(())
        } else {
            Err(Self::err(i, format!("expected `{word}`, found `{l}`")))
        }
    }

    fn count(&mut self, key: &str) -> Result<usize> {
        let (i, l) = self.next(key)?;
        l.strip_prefix(key)
            .and_then(|rest| rest.trim().parse().ok())
            .filter(|&n: &usize| n > 0)
            .ok_or_else(|| Self::err(i, format!("expected `{key} <positive count>`")))
    }

    fn row(&mut self, len: usize, what: &str) -> Result<Vec<f64>> {
        let (i, l) = self.next(what)?;
        let values = l
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| Self::err(i, format!("bad number `{t}`: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if values.len() != len {
            return Err(Self::err(i, format!("{what} row has {} values, expected {len}", values.len())));
        }
        Ok(values)
    }
}

pub fn read_model(text: &str) -> Result<RbmParams> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let (i, header) = lines.next("header")?;
    if header != MODEL_HEADER {
        return Err(Lines::err(i, format!("expected header `{MODEL_HEADER}`")));
    }
    let m = lines.count("visible")?;
    let n = lines.count("hidden")?;
    lines.keyword("weights")?;
    let mut weights = Vec::with_capacity(m * n);
    for _ in 0..m {
        weights.extend(lines.row(n, "weights")?);
    }
    lines.keyword("visible_bias")?;
    let b = lines.row(m, "visible_bias")?;
    lines.keyword("hidden_bias")?;
    let c = lines.row(n, "hidden_bias")?;
    if let Ok((i, extra)) = lines.next("") {
        return Err(Lines::err(i, format!("trailing content `{extra}`")));
    }
    RbmParams::new(weights, b, c)
}

pub fn save_model(path: impl AsRef<Path>, params: &RbmParams) -> Result<()> {
    std::fs::write(path, write_model(params))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<RbmParams> {
    read_model(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::random_params;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut p = random_params(5, 3, 1.7, 1);
        p.flat_set(0, f64::MIN_POSITIVE);
        p.flat_set(1, -1e300);
        p.flat_set(2, 0.1 + 0.2);
        let text = write_model(&p);
        assert!(text.starts_with(MODEL_HEADER));
        assert_eq!(read_model(&text).unwrap(), p);
    }

    #[test]
    fn small_file_by_hand() {
        let text = "# popcd-rbm v1\nvisible 2\nhidden 1\nweights\n0.5\n-1e0\nvisible_bias\n0 1\n\nhidden_bias\n2.5\n";
        let p = read_model(text).unwrap();
        assert_eq!(p.weights(), &[0.5, -1.0]);
        assert_eq!(p.visible_bias(), &[0.0, 1.0]);
        assert_eq!(p.hidden_bias(), &[2.5]);
    }

    #[test]
    fn malformed_files_report_lines() {
        let good = write_model(&random_params(2, 2, 1.0, 2));
        let cases = [
            good.replacen("v1", "v2", 1),
            good.replacen("hidden 2", "hidden 0", 1),
            good.replacen("weights", "weight", 1),
            good.clone() + "7\n",
            good.lines().take(5).collect::<Vec<_>>().join("\n"),
            good.replacen("visible_bias\n", "visible_bias\nx ", 1),
            good.replacen("hidden_bias\n", "hidden_bias\ninf ", 1),
        ];
        for text in cases {
            assert!(read_model(&text).is_err(), "{text}");
        }
        match read_model(&good.replacen("visible 2", "visible two", 1)) {
            Err(RbmError::Parse { location, .. }) => assert_eq!(location, "line 2"),
            other => panic!("{other:?}"),
        }
    }
}
