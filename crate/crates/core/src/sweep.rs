//! Sweep execution: deflection-versus-beam-size tables (fig2) and
//! deflection-versus-drive-voltage tables (fig3), with reproducible
//! CSV/JSON emission.
//!
//! Every row carries the same column set in a fixed order; quantities
//! that do not apply to the current mode stay empty. All drive-derived
//! quantities are peak-to-peak: the kick in a row is the one produced by
//! the full drive swing, so the first-order shift, the unamplified
//! deflection, and the recovered lock-in swing are directly comparable.
//! Row-local physical failures (e.g. the beam clipping the detector
//! aperture) are recorded in the row's error column instead of aborting
//! the sweep.

use serde::Serialize;
use std::io;

use crate::darkport::{evaluate, validity_check};
use crate::detector::{simulate_drive, DriveSetup};
use crate::error::Result;
use crate::geometry::{
    mirror_angle, momentum_kick, piezo_travel, pointer_shift_experimental,
    unamplified_deflection,
};
use crate::lockin::lockin_demodulate_with;
use crate::scenario::{Scenario, Spacing, SweepSection, SweepVariable};
use crate::states::Interaction;

/// One sweep point. Field order is the CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// The swept quantity: beam size at the detector (m) for fig2,
    /// drive peak-to-peak voltage (V) for fig3.
    pub sweep_value: f64,
    /// First-order amplified deflection at the detector, pk-pk (m).
    pub pointer_shift_m: Option<f64>,
    /// Exit-plane centroid from the exact model at the same kick (m).
    pub exact_centroid_m: Option<f64>,
    /// Unamplified geometric deflection, pk-pk (m).
    pub delta_m: Option<f64>,
    /// pointer_shift_m / delta_m.
    pub amplification: Option<f64>,
    /// Exact port transmission probability.
    pub postselect_prob: Option<f64>,
    /// Kick is transversely weak (k·a < 1).
    pub valid_ka: Option<bool>,
    /// First-order condition holds (kick coupling below the port overlap).
    pub valid_weak: Option<bool>,
    /// Mirror tilt from the drive, pk-pk (rad). fig3 only.
    pub mirror_angle_rad: Option<f64>,
    /// Piezo tip travel from the drive, pk-pk (m). fig3 only.
    pub piezo_travel_m: Option<f64>,
    /// Lock-in recovered deflection swing (m). Noise runs only.
    pub lockin_amplitude_pp_m: Option<f64>,
    /// Mirror tilt inferred from the recovered swing, pk-pk (rad).
    pub lockin_angle_rad: Option<f64>,
    pub lockin_snr: Option<f64>,
    pub lockin_locked: Option<bool>,
    /// Explanation when a column group is absent for this row.
    pub error: Option<String>,
}

/// A labelled block of rows sharing one port phase.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTable {
    pub label: String,
    pub phi_rad: f64,
    /// "reference" for the primary angle, "companion" for the
    /// illustrative extra angles.
    pub role: String,
    pub rows: Vec<SweepRow>,
}

/// Complete result of one sweep command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutput {
    pub scenario_hash: String,
    pub seed: u64,
    pub noise: bool,
    /// "fig2" or "fig3".
    pub kind: String,
    /// Smallest drive that still locked, scanning downward (fig3+noise).
    pub lock_floor_drive_vpp: Option<f64>,
    /// First drive that failed to lock, scanning downward (fig3+noise).
    pub first_unlocked_drive_vpp: Option<f64>,
    pub tables: Vec<SweepTable>,
}

/// Beam-size grid when the scenario's sweep block is aimed at another
/// variable: 700–1400 μm in 15 steps, floored at the collimated size.
fn default_sigma_sweep(a: f64) -> SweepSection {
    SweepSection {
        variable: SweepVariable::Sigma,
        start: a.max(700e-6),
        stop: (2.0 * a).max(1400e-6),
        points: 15,
        spacing: Spacing::Linear,
    }
}

/// Drive grid when the scenario's sweep block is aimed at another
/// variable: 0.1 μV to 1 V, log-spaced, 36 points.
fn default_drive_sweep() -> SweepSection {
    SweepSection {
        variable: SweepVariable::DriveVpp,
        start: 1e-7,
        stop: 1.0,
        points: 36,
        spacing: Spacing::Log,
    }
}

/// Shared row physics: everything the drive voltage and the port phase
/// determine, independent of which sweep produced the row.
fn compute_row(
    scn: &Scenario,
    phi: f64,
    sigma: f64,
    vpp: f64,
    sweep_value: f64,
    noise: bool,
    seed: u64,
    fig3_columns: bool,
) -> SweepRow {
    let layout = scn.layout();
    let cal = scn.cal();
    let meter = layout.meter();
    let theta = mirror_angle(vpp, &cal);
    let k = momentum_kick(theta, layout.k0);
    let inter = Interaction { k, phi };

    let mut row = SweepRow {
        sweep_value,
        pointer_shift_m: None,
        exact_centroid_m: None,
        delta_m: None,
        amplification: None,
        postselect_prob: None,
        valid_ka: None,
        valid_weak: None,
        mirror_angle_rad: fig3_columns.then_some(theta),
        piezo_travel_m: fig3_columns.then_some(piezo_travel(vpp, &cal)),
        lockin_amplitude_pp_m: None,
        lockin_angle_rad: None,
        lockin_snr: None,
        lockin_locked: None,
        error: None,
    };

    let shift = match pointer_shift_experimental(k, phi, sigma, &layout) {
        Ok(v) => v,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.pointer_shift_m = Some(shift);
    let delta = unamplified_deflection(k, layout.l_md, layout.k0);
    row.delta_m = Some(delta);
    if delta != 0.0 {
        row.amplification = Some(shift / delta);
    }
    match evaluate(&meter, &inter) {
        Ok(exact) => {
            row.exact_centroid_m = Some(exact.centroid);
            row.postselect_prob = Some(exact.postselect_prob);
            row.valid_ka = Some(exact.validity.weak_kick);
            row.valid_weak = Some(exact.validity.weak_coupling);
        }
        Err(e) => {
            // keep the geometric columns, explain the missing oracle ones
            row.error = Some(e.to_string());
            let v = validity_check(&meter, &inter);
            row.valid_ka = Some(v.weak_kick);
            row.valid_weak = Some(v.weak_coupling);
            return row;
        }
    }

    // a beam whose oscillation plus width leaves the active area is
    // reported as an error even in noiseless sweeps
    let max_excursion = shift.abs() / 2.0 + 3.0 * sigma;
    if max_excursion >= scn.detector.active_halfwidth {
        row.error = Some(format!(
            "beam extent {max_excursion:.3e} m exceeds the detector half-width {:.3e} m",
            scn.detector.active_halfwidth
        ));
        return row;
    }

    if noise {
        let setup = DriveSetup {
            layout: &layout,
            cal: &cal,
            phi,
            sigma,
            input_power: scn.input_power,
        };
        let mut cfg = scn.detector_config();
        cfg.seed = seed;
        let demod = simulate_drive(
            &setup,
            &cfg,
            vpp,
            scn.drive_freq,
            scn.lockin.sample_rate,
            scn.lockin.duration,
            true,
        )
        .and_then(|ts| {
            lockin_demodulate_with(
                &ts,
                scn.drive_freq,
                scn.lockin.tau,
                scn.lockin.snr_threshold,
            )
        });
        match demod {
            Ok(r) => {
                row.lockin_amplitude_pp_m = Some(r.amplitude);
                row.lockin_snr = Some(r.snr_estimate);
                row.lockin_locked = Some(r.locked);
                // invert the linear chain: swing per unit kick, then
                // kick back to mirror tilt
                let shift_per_k =
                    pointer_shift_experimental(1.0, phi, sigma, &layout).unwrap_or(f64::NAN);
                if shift_per_k.is_finite() && shift_per_k > 0.0 {
                    row.lockin_angle_rad =
                        Some(r.amplitude / shift_per_k / (2.0 * layout.k0));
                }
            }
            Err(e) => {
                row.error = Some(e.to_string());
            }
        }
    }
    row
}

/// Deflection versus beam size, one table per configured port phase.
/// The first angle is the reference, the rest are companions.
pub fn run_fig2_sweep(scn: &Scenario, noise: bool) -> Result<SweepOutput> {
    scn.validate()?;
    let sweep = if scn.sweep.variable == SweepVariable::Sigma {
        scn.sweep
    } else {
        default_sigma_sweep(scn.a())
    };
    let sigmas = sweep.values();
    let angles = if scn.fig2_phi_list.is_empty() {
        vec![scn.phi]
    } else {
        scn.fig2_phi_list.clone()
    };
    let mut tables = Vec::with_capacity(angles.len());
    for (ti, &phi) in angles.iter().enumerate() {
        let role = if ti == 0 { "reference" } else { "companion" };
        let rows = sigmas
            .iter()
            .enumerate()
            .map(|(ri, &sigma)| {
                let seed = scn.detector.seed.wrapping_add((ti * 1000 + ri) as u64);
                compute_row(scn, phi, sigma, scn.drive_vpp, sigma, noise, seed, false)
            })
            .collect();
        tables.push(SweepTable {
            label: format!("phi_deg={:.4}", phi.to_degrees()),
            phi_rad: phi,
            role: role.to_owned(),
            rows,
        });
    }
    Ok(SweepOutput {
        scenario_hash: scn.hash(),
        seed: scn.detector.seed,
        noise,
        kind: "fig2".to_owned(),
        lock_floor_drive_vpp: None,
        first_unlocked_drive_vpp: None,
        tables,
    })
}

/// Deflection versus drive voltage at the scenario's port phase and
/// detector beam size. With noise enabled each row carries the lock-in
/// read-out, and the lock floor (scanning from large drives downward)
/// is reported in the output header.
pub fn run_fig3_sweep(scn: &Scenario, noise: bool) -> Result<SweepOutput> {
    scn.validate()?;
    let sweep = if scn.sweep.variable == SweepVariable::DriveVpp {
        let decades = (scn.sweep.stop / scn.sweep.start).log10().abs();
        if scn.sweep.spacing != Spacing::Log || !(decades >= 3.0) {
            return Err(crate::error::Error::config(
                "sweep",
                "drive sweep must be log-spaced over at least three decades",
            ));
        }
        scn.sweep
    } else {
        default_drive_sweep()
    };
    let sigma = scn.sigma()?;
    let drives = sweep.values();
    let rows: Vec<SweepRow> = drives
        .iter()
        .enumerate()
        .map(|(ri, &vpp)| {
            let seed = scn.detector.seed.wrapping_add(ri as u64);
            compute_row(scn, scn.phi, sigma, vpp, vpp, noise, seed, true)
        })
        .collect();

    // scan downward for the lock floor
    let mut lock_floor = None;
    let mut first_unlocked = None;
    if noise {
        let mut order: Vec<&SweepRow> = rows.iter().collect();
        order.sort_by(|a, b| b.sweep_value.total_cmp(&a.sweep_value));
        for row in order {
            match row.lockin_locked {
                Some(true) => lock_floor = Some(row.sweep_value),
                _ => {
                    first_unlocked = Some(row.sweep_value);
                    break;
                }
            }
        }
    }

    Ok(SweepOutput {
        scenario_hash: scn.hash(),
        seed: scn.detector.seed,
        noise,
        kind: "fig3".to_owned(),
        lock_floor_drive_vpp: lock_floor,
        first_unlocked_drive_vpp: first_unlocked,
        tables: vec![SweepTable {
            label: "drive_sweep".to_owned(),
            phi_rad: scn.phi,
            role: "reference".to_owned(),
            rows,
        }],
    })
}

fn fmt_opt_f(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn fmt_opt_b(v: Option<bool>) -> String {
    v.map(|b| b.to_string()).unwrap_or_default()
}

fn csv_escape(text: &str) -> String {
    if text.contains(',') || text.contains('"') || text.contains('\n') {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_owned()
    }
}

/// CSV with a comment block recording provenance (scenario hash, seed,
/// noise flag, sweep kind, lock floor when measured), then one header +
/// row block per table, tables separated by a blank line.
pub fn write_csv<W: io::Write>(out: &mut W, o: &SweepOutput) -> io::Result<()> {
    writeln!(out, "# scenario_hash={}", o.scenario_hash)?;
    writeln!(out, "# seed={}", o.seed)?;
    writeln!(out, "# noise={}", if o.noise { "on" } else { "off" })?;
    writeln!(out, "# sweep={}", o.kind)?;
    if let Some(v) = o.lock_floor_drive_vpp {
        writeln!(out, "# lock_floor_drive_vpp={v:e}")?;
    }
    if let Some(v) = o.first_unlocked_drive_vpp {
        writeln!(out, "# first_unlocked_drive_vpp={v:e}")?;
    }
    let fig3 = o.kind == "fig3";
    let mut columns = vec![
        "sweep_value",
        "pointer_shift_m",
        "exact_centroid_m",
        "delta_m",
        "amplification",
        "postselect_prob",
        "valid_ka",
        "valid_weak",
    ];
    if fig3 {
        columns.push("mirror_angle_rad");
        columns.push("piezo_travel_m");
    }
    if o.noise {
        columns.extend([
            "lockin_amplitude_pp_m",
            "lockin_angle_rad",
            "lockin_snr",
            "lockin_locked",
        ]);
    }
    columns.push("error");

    for (ti, table) in o.tables.iter().enumerate() {
        if ti > 0 {
            writeln!(out)?;
        }
        writeln!(
            out,
            "# table={} role={} phi_rad={:e}",
            table.label, table.role, table.phi_rad
        )?;
        writeln!(out, "{}", columns.join(","))?;
        for row in &table.rows {
            let mut cells = vec![
                format!("{:e}", row.sweep_value),
                fmt_opt_f(row.pointer_shift_m),
                fmt_opt_f(row.exact_centroid_m),
                fmt_opt_f(row.delta_m),
                fmt_opt_f(row.amplification),
                fmt_opt_f(row.postselect_prob),
                fmt_opt_b(row.valid_ka),
                fmt_opt_b(row.valid_weak),
            ];
            if fig3 {
                cells.push(fmt_opt_f(row.mirror_angle_rad));
                cells.push(fmt_opt_f(row.piezo_travel_m));
            }
            if o.noise {
                cells.push(fmt_opt_f(row.lockin_amplitude_pp_m));
                cells.push(fmt_opt_f(row.lockin_angle_rad));
                cells.push(fmt_opt_f(row.lockin_snr));
                cells.push(fmt_opt_b(row.lockin_locked));
            }
            cells.push(csv_escape(row.error.as_deref().unwrap_or("")));
            writeln!(out, "{}", cells.join(","))?;
        }
    }
    Ok(())
}

/// Pretty JSON mirror of the CSV content.
pub fn write_json<W: io::Write>(out: &mut W, o: &SweepOutput) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, o)?;
    writeln!(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::preset;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn reference() -> Scenario {
        preset("dixon2009").unwrap()
    }

    #[test]
    fn fig2_produces_one_table_per_angle() {
        let out = run_fig2_sweep(&reference(), false).unwrap();
        assert_eq!(out.kind, "fig2");
        assert_eq!(out.tables.len(), 3);
        assert_eq!(out.tables[0].role, "reference");
        assert_eq!(out.tables[1].role, "companion");
        for t in &out.tables {
            assert_eq!(t.rows.len(), 15);
            assert_relative_eq!(t.rows[0].sweep_value, 700e-6);
            assert_relative_eq!(t.rows[14].sweep_value, 1400e-6);
        }
        // larger sigma, larger shift, within one table
        for t in &out.tables {
            for pair in t.rows.windows(2) {
                assert!(
                    pair[1].pointer_shift_m.unwrap() > pair[0].pointer_shift_m.unwrap(),
                    "shift must grow with beam size"
                );
            }
        }
    }

    #[test]
    fn fig2_reference_point_reproduces_the_bench_numbers() {
        let mut scn = reference();
        scn.fig2_phi_list = vec![scn.phi]; // the 2% port angle
        scn.sweep.start = 1240e-6;
        scn.sweep.stop = 1340e-6;
        scn.sweep.points = 2;
        let out = run_fig2_sweep(&scn, false).unwrap();
        let row = &out.tables[0].rows[0];
        let shift = row.pointer_shift_m.unwrap();
        assert!((shift - 297e-6).abs() < 2e-6, "shift {shift}");
        let amp = row.amplification.unwrap();
        assert!((70.0..130.0).contains(&amp), "amplification {amp}");
        assert!(row.valid_ka.unwrap() && row.valid_weak.unwrap());
        assert!(row.error.is_none());
        assert!(row.postselect_prob.unwrap() > 0.019);
        assert!(row.postselect_prob.unwrap() < 0.021);
    }

    #[test]
    fn fig2_tables_scale_like_the_inverse_coupling() {
        let mut scn = reference();
        scn.fig2_phi_list = vec![7.2 * PI / 180.0, scn.phi];
        let out = run_fig2_sweep(&scn, false).unwrap();
        let (small, large) = (&out.tables[0], &out.tables[1]);
        for (a, b) in small.rows.iter().zip(&large.rows) {
            let ratio = a.pointer_shift_m.unwrap() / b.pointer_shift_m.unwrap();
            assert!((ratio - 2.2706).abs() < 0.01, "ratio {ratio}");
        }
    }

    #[test]
    fn every_row_keeps_the_amplification_identity() {
        let out = run_fig2_sweep(&reference(), false).unwrap();
        for t in &out.tables {
            for row in &t.rows {
                let lhs = row.amplification.unwrap();
                let rhs = row.pointer_shift_m.unwrap() / row.delta_m.unwrap();
                assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
            }
        }
        let out3 = run_fig3_sweep(&reference(), false).unwrap();
        for row in &out3.tables[0].rows {
            if let (Some(a), Some(s), Some(d)) =
                (row.amplification, row.pointer_shift_m, row.delta_m)
            {
                assert_relative_eq!(a, s / d, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn fig3_rows_carry_the_calibration_chain() {
        let out = run_fig3_sweep(&reference(), false).unwrap();
        assert_eq!(out.kind, "fig3");
        let rows = &out.tables[0].rows;
        assert_eq!(rows.len(), 36);
        assert_relative_eq!(rows[0].sweep_value, 1e-7, max_relative = 1e-12);
        assert_relative_eq!(rows[35].sweep_value, 1.0, max_relative = 1e-12);
        let cal = reference().cal();
        for row in rows {
            let v = row.sweep_value;
            assert_relative_eq!(
                row.mirror_angle_rad.unwrap(),
                v * cal.response / cal.lever_arm,
                max_relative = 1e-12
            );
            assert_relative_eq!(
                row.piezo_travel_m.unwrap(),
                v * cal.response,
                max_relative = 1e-12
            );
            assert!(row.lockin_locked.is_none(), "noiseless run has no lockin");
        }
    }

    #[test]
    fn fig3_with_noise_reports_a_lock_floor() {
        let mut scn = reference();
        // keep the test quick: short record, coarse grid
        scn.lockin.duration = 0.5;
        scn.sweep = crate::scenario::SweepSection {
            variable: SweepVariable::DriveVpp,
            start: 1e-8,
            stop: 1e-2,
            points: 13,
            spacing: Spacing::Log,
        };
        let out = run_fig3_sweep(&scn, true).unwrap();
        let rows = &out.tables[0].rows;
        assert!(rows.iter().all(|r| r.lockin_snr.is_some() || r.error.is_some()));
        // the largest drives must lock even on a short record
        let top = rows.last().unwrap();
        assert_eq!(top.lockin_locked, Some(true));
        assert!(out.lock_floor_drive_vpp.is_some());
        assert!(out.first_unlocked_drive_vpp.is_some());
        assert!(out.lock_floor_drive_vpp.unwrap() > out.first_unlocked_drive_vpp.unwrap());
        // recovered angle at the top row matches the driven angle
        let expected = top.mirror_angle_rad.unwrap();
        let got = top.lockin_angle_rad.unwrap();
        assert!(
            (got / expected - 1.0).abs() < 0.05,
            "recovered {got} vs driven {expected}"
        );
    }

    #[test]
    fn fig3_rejects_a_narrow_drive_sweep() {
        let mut scn = reference();
        scn.sweep = crate::scenario::SweepSection {
            variable: SweepVariable::DriveVpp,
            start: 0.1,
            stop: 1.0,
            points: 5,
            spacing: Spacing::Log,
        };
        let err = run_fig3_sweep(&scn, false).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn clipped_rows_explain_themselves() {
        let mut scn = reference();
        scn.detector.active_halfwidth = 4e-3;
        // 3σ alone approaches the aperture at the top of the sigma sweep
        scn.sweep.stop = 1600e-6;
        let out = run_fig2_sweep(&scn, false).unwrap();
        let last = out.tables[0].rows.last().unwrap();
        assert!(last.error.as_deref().unwrap_or("").contains("half-width"));
        assert!(last.pointer_shift_m.is_some(), "physics columns survive");
        let first = &out.tables[0].rows[0];
        assert!(first.error.is_none());
    }

    #[test]
    fn csv_emission_is_deterministic_and_commented() {
        let out = run_fig2_sweep(&reference(), false).unwrap();
        let mut one = Vec::new();
        let mut two = Vec::new();
        write_csv(&mut one, &out).unwrap();
        write_csv(&mut two, &out).unwrap();
        assert_eq!(one, two);
        let text = String::from_utf8(one).unwrap();
        assert!(text.starts_with("# scenario_hash="));
        assert!(text.contains("# noise=off"));
        assert!(text.contains("# sweep=fig2"));
        assert!(text.contains("# table=phi_deg=7.2000 role=reference"));
        let headers: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with("sweep_value"))
            .collect();
        assert_eq!(headers.len(), 3);
        assert_eq!(
            headers[0],
            "sweep_value,pointer_shift_m,exact_centroid_m,delta_m,amplification,postselect_prob,valid_ka,valid_weak,error"
        );
        // blank line between tables
        assert_eq!(text.matches("\n\n").count(), 2);
    }

    #[test]
    fn fig3_csv_adds_the_drive_columns() {
        let out = run_fig3_sweep(&reference(), false).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut buf, &out).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text
            .lines()
            .find(|l| l.starts_with("sweep_value"))
            .unwrap();
        assert!(header.contains("mirror_angle_rad,piezo_travel_m"));
        assert!(!header.contains("lockin_"), "noiseless: no lockin columns");
    }

    #[test]
    fn json_emission_parses_back() {
        let out = run_fig3_sweep(&reference(), false).unwrap();
        let mut buf = Vec::new();
        write_json(&mut buf, &out).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["kind"], "fig3");
        assert_eq!(v["tables"][0]["rows"].as_array().unwrap().len(), 36);
    }

    #[test]
    fn csv_escape_quotes_commas() {
        assert_eq!(csv_escape("plain"), "plain");
        assert_eq!(csv_escape("a,b"), "\"a,b\"");
        assert_eq!(csv_escape("say \"hi\""), "\"say \"\"hi\"\"\"");
    }
}
