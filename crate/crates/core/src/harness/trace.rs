//! Per-tick trace and its CSV form.

use std::fmt::Write as _;

use crate::control::Phase;

pub const CSV_HEADER: &str = "t,phase,theta1,d2,x,y,f_n,f_t,v_n_cmd,v_t_cmd,k_eq,k_f,b";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSample {
    pub t: f64,
    pub phase: Phase,
    pub theta1: f64,
    pub d2: f64,
    pub x: f64,
    pub y: f64,
    pub f_n: f64,
    pub f_t: f64,
    pub v_n_cmd: f64,
    pub v_t_cmd: f64,
    pub k_eq: f64,
    pub k_f: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub samples: Vec<TraceSample>,
}

impl Trace {
    pub fn new(samples: Vec<TraceSample>) -> Self {
        Self { samples }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time of the first sample in `phase`.
    pub fn phase_start(&self, phase: Phase) -> Option<f64> {
        self.samples.iter().find(|s| s.phase == phase).map(|s| s.t)
    }

    /// First sample after the approach, i.e. the tick contact was declared.
    pub fn contact_time(&self) -> Option<f64> {
        self.samples.iter().find(|s| s.phase != Phase::Approach).map(|s| s.t)
    }

    /// Phases never go backwards.
    pub fn phases_monotone(&self) -> bool {
        self.samples.windows(2).all(|w| w[1].phase >= w[0].phase)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.samples.len() * 140 + CSV_HEADER.len() + 1);
        out.push_str(CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let fields = [
                s.theta1, s.d2, s.x, s.y, s.f_n, s.f_t, s.v_n_cmd, s.v_t_cmd, s.k_eq, s.k_f, s.b,
            ];
            let _ = write!(out, "{},{}", fmt_sig9(s.t), s.phase.token());
            for v in fields {
                out.push(',');
                out.push_str(&fmt_sig9(v));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim_end() == CSV_HEADER => {}
            Some(h) => return Err(format!("unexpected header: {h}")),
            None => return Err("empty trace file".into()),
        }
        let mut samples = Vec::new();
        for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let cols: Vec<&str> = line.trim_end().split(',').collect();
            if cols.len() != 13 {
                return Err(format!("row {}: expected 13 columns, got {}", i + 2, cols.len()));
            }
            let num = |j: usize| -> Result<f64, String> {
                cols[j]
                    .parse::<f64>()
                    .map_err(|e| format!("row {}, column {j}: {e}", i + 2))
            };
            let phase = Phase::from_token(cols[1]).ok_or_else(|| format!("row {}: bad phase {}", i + 2, cols[1]))?;
            samples.push(TraceSample {
                t: num(0)?,
                phase,
                theta1: num(2)?,
                d2: num(3)?,
                x: num(4)?,
                y: num(5)?,
                f_n: num(6)?,
                f_t: num(7)?,
                v_n_cmd: num(8)?,
                v_t_cmd: num(9)?,
                k_eq: num(10)?,
                k_f: num(11)?,
                b: num(12)?,
            });
        }
        Ok(Self { samples })
    }
}

/// Formats like C's `%.9g`: nine significant digits, trailing zeros
/// dropped, exponent form outside `[1e-4, 1e9)`.
pub fn fmt_sig9(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matches_printf_g() {
        // Reference strings from printf("%.9g").
        let cases = [
            (0.002, "0.002"),
            (1.0, "1"),
            (-2.0, "-2"),
            (754.716981, "754.716981"),
            (0.1 + 0.2, "0.3"),
            (1.0 / 3.0, "0.333333333"),
            (-1.23456789012e-5, "-1.23456789e-05"),
            (123456789.4, "123456789"),
            (1234567890.0, "1.23456789e+09"),
            (9.9999999999e-5, "0.0001"),
            (0.00012345678912, "0.000123456789"),
        ];
        for (v, want) in cases {
            assert_eq!(fmt_sig9(v), want, "{v}");
        }
    }

    fn sample(t: f64, phase: Phase) -> TraceSample {
        TraceSample {
            t,
            phase,
            theta1: 1.0,
            d2: 0.3,
            x: 0.15,
            y: 0.26,
            f_n: -2.0,
            f_t: 0.1,
            v_n_cmd: 0.0,
            v_t_cmd: 0.05,
            k_eq: 754.7,
            k_f: 0.013,
            b: 20.0,
        }
    }

    #[test]
    fn csv_header_and_rows() {
        let trace = Trace::new(vec![sample(0.0, Phase::Approach), sample(0.002, Phase::Stabilize)]);
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        assert_eq!(
            lines.next(),
            Some("0,approach,1,0.3,0.15,0.26,-2,0.1,0,0.05,754.7,0.013,20")
        );
        assert_eq!(csv.lines().count(), 3);
        assert_eq!(Trace::from_csv(&csv).unwrap(), trace);
    }

    #[test]
    fn monotone_phase_check() {
        let ok = Trace::new(vec![sample(0.0, Phase::Approach), sample(1.0, Phase::Sweep)]);
        assert!(ok.phases_monotone());
        let bad = Trace::new(vec![sample(0.0, Phase::Sweep), sample(1.0, Phase::Stabilize)]);
        assert!(!bad.phases_monotone());
    }

    #[test]
    fn rejects_malformed_csv() {
        assert!(Trace::from_csv("").is_err());
        assert!(Trace::from_csv("a,b\n").is_err());
        let bad = format!("{CSV_HEADER}\n0,hover,1,1,1,1,1,1,1,1,1,1,1\n");
        assert!(Trace::from_csv(&bad).is_err());
    }

    proptest! {
        #[test]
        fn nine_digits_survive_parsing(v in -1e6..1e6f64) {
            let back: f64 = fmt_sig9(v).parse().unwrap();
            let tol = v.abs() * 1e-8 + 1e-300;
            prop_assert!((back - v).abs() <= tol, "{} -> {}", v, back);
        }
    }
}
