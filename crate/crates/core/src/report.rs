//! CSV tables for sweeps. Floats are written in scientific notation with 17
//! significant digits so values round-trip exactly.

use std::io::Write;

use crate::config::watts_to_dbm;
use crate::sim::{CampaignConfig, SweepRow};

pub const SUMMARY_HEADER: [&str; 11] =
    ["strategy", "allocation", "P_s_dBm", "x_E", "y_E", "mean_RD", "se_RD", "mean_RS", "se_RS", "trials", "seed"];

pub const PER_USER_HEADER: [&str; 9] =
    ["strategy", "allocation", "P_s_dBm", "x_E", "y_E", "user", "mean_R", "mean_R_E", "mean_secrecy"];

pub const DIAGNOSTICS_HEADER: [&str; 9] = [
    "strategy",
    "allocation",
    "P_s_dBm",
    "x_E",
    "y_E",
    "blocked_links",
    "unserved_user_trials",
    "clipped_secrecy",
    "flagged_trials",
];

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Leading columns shared by every table. Eavesdropper coordinates are empty
/// when the placement is random.
fn key(cfg: &CampaignConfig, row: &SweepRow) -> Vec<String> {
    let (x, y) = match row.point.eve.fixed_xy() {
        Some((x, y)) => (fmt_f64(x), fmt_f64(y)),
        None => (String::new(), String::new()),
    };
    vec![
        cfg.strategy.label().to_string(),
        cfg.allocation.label().to_string(),
        fmt_f64(watts_to_dbm(row.point.power)),
        x,
        y,
    ]
}

pub fn write_summary<W: Write>(out: W, cfg: &CampaignConfig, rows: &[SweepRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for row in rows {
        let s = &row.stats;
        let mut rec = key(cfg, row);
        rec.extend([fmt_f64(s.mean_rd), fmt_f64(s.se_rd), fmt_f64(s.mean_rs), fmt_f64(s.se_rs)]);
        rec.extend([s.trials.to_string(), cfg.master_seed.to_string()]);
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_per_user<W: Write>(out: W, cfg: &CampaignConfig, rows: &[SweepRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PER_USER_HEADER)?;
    for row in rows {
        for (k, u) in row.stats.per_user.iter().enumerate() {
            let mut rec = key(cfg, row);
            rec.extend([k.to_string(), fmt_f64(u.mean_rate), fmt_f64(u.mean_wiretap), fmt_f64(u.mean_secrecy)]);
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_diagnostics<W: Write>(out: W, cfg: &CampaignConfig, rows: &[SweepRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DIAGNOSTICS_HEADER)?;
    for row in rows {
        let d = row.stats.diagnostics;
        let mut rec = key(cfg, row);
        rec.extend([d.blocked_links, d.unserved_user_trials, d.clipped_secrecy, d.flagged_trials].map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;
    use crate::sim::{self, EvePlacement};

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(0.1).parse::<f64>().unwrap(), 0.1);
        assert_eq!(fmt_f64(-2.5), "-2.5000000000000000e0");
    }

    #[test]
    fn summary_shape() {
        let mut cfg = Config::default().resolve().unwrap();
        cfg.trials = 2;
        cfg.eve = EvePlacement::GridOver { x_min: 1.0, x_max: 39.0, y_min: 1.0, y_max: 39.0, step: 19.0 };
        let rows = sim::sweep(&cfg).unwrap();
        let mut buf = Vec::new();
        write_summary(&mut buf, &cfg, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "strategy,allocation,P_s_dBm,x_E,y_E,mean_RD,se_RD,mean_RS,se_RS,trials,seed");
        assert_eq!(lines.len(), 10);
        assert!(lines[1].starts_with("broadcasting,fixed,2.3979400086720375e1,1.0000000000000000e0,1.0000000000000000e0,"));

        let mut buf = Vec::new();
        write_per_user(&mut buf, &cfg, &rows).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 9 * 6);
    }
}
