//! Byte-stable CSV writers for traces and profiles.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use crate::profile::MotionProfile;
use crate::sim::Trace;

pub const TRACE_HEADER: &str =
    "t,theta_rad,omega_rad_s,i_a,i_b,v_a,v_b,torque_nm,ena,rev,home,fwd_lim,rev_lim";
pub const PROFILE_HEADER: &str = "t,pos_steps,vel_steps_s,acc_steps_s2";

/// Formats `x` with nine significant digits, in plain decimal notation for
/// moderate magnitudes and exponent notation otherwise. Trailing zeros are
/// trimmed and negative zero prints as `0`.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_owned()))
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_owned()
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

pub fn trace_csv(trace: &Trace) -> String {
    let mut out = String::with_capacity(64 * (trace.frames.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for f in &trace.frames {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fmt_sig9(f.t),
            fmt_sig9(f.state.theta),
            fmt_sig9(f.state.omega),
            fmt_sig9(f.state.i_a),
            fmt_sig9(f.state.i_b),
            fmt_sig9(f.volts.v_a),
            fmt_sig9(f.volts.v_b),
            fmt_sig9(f.torque),
            fmt_sig9(f.ena),
            fmt_sig9(f.rev),
            flag(f.home_active),
            flag(f.fwd_limit_active),
            flag(f.rev_limit_active),
        );
    }
    out
}

/// Writes a trace CSV; I/O errors name the path.
pub fn write_trace_csv(trace: &Trace, path: &Path) -> io::Result<()> {
    fs::write(path, trace_csv(trace))
        .map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

/// Samples a profile every `dt` seconds, always including the end point.
pub fn profile_csv(profile: &MotionProfile, dt: f64) -> String {
    let mut out = String::from(PROFILE_HEADER);
    out.push('\n');
    let total = profile.total_time();
    let n = if total > 0.0 { (total / dt - 1e-9).ceil() as u64 } else { 0 };
    for k in 0..=n {
        let t = (k as f64 * dt).min(total);
        let s = profile.sample(t);
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_sig9(t),
            fmt_sig9(s.position),
            fmt_sig9(s.velocity),
            fmt_sig9(s.acceleration)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig9(0.0), "0");
        assert_eq!(fmt_sig9(-0.0), "0");
        assert_eq!(fmt_sig9(1.0), "1");
        assert_eq!(fmt_sig9(0.05), "0.05");
        assert_eq!(fmt_sig9(std::f64::consts::PI), "3.14159265");
        assert_eq!(fmt_sig9(-123456.789012), "-123456.789");
        assert_eq!(fmt_sig9(1.0e-7), "1e-7");
        assert_eq!(fmt_sig9(2.5e12), "2.5e12");
        assert_eq!(fmt_sig9(0.628318530718), "0.628318531");
    }

    #[test]
    fn empty_trace_is_header_only() {
        let csv = trace_csv(&Trace::default());
        assert_eq!(csv, format!("{TRACE_HEADER}\n"));
    }
}
