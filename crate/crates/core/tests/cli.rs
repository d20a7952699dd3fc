use std::path::Path;
use std::process::{Command, Output};

use qamgame::cli::commands;
use qamgame::delay_qos::{self, TrafficQoS};
use qamgame::game::{self, Policy, UserProfile};
use qamgame::modulation::{Coding, ModulationScheme};

fn qamgame(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qamgame")).args(args).output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn col(row: &[String], i: usize) -> f64 {
    row[i].parse().unwrap()
}

#[test]
fn table1_rows() {
    let out = qamgame(&["table1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("b,alpha,beta,gamma_star_db,f_at_star,b_over_gamma_db,coefficient\n"));
    let rows = rows(&text);
    assert_eq!(rows.len(), 5);
    let qpsk = &rows[0];
    assert_eq!(
        (qpsk[0].as_str(), qpsk[1].as_str(), qpsk[2].as_str()),
        ("2", "1.00000", "1.00000")
    );
    assert!((col(qpsk, 3) - 9.1).abs() <= 0.1);
    assert!((col(qpsk, 4) - 0.801).abs() <= 0.005);
    assert!((col(qpsk, 5) + 6.1).abs() <= 0.1);
    assert!((col(qpsk, 6) - 0.1978).abs() <= 0.001);
    let b8 = &rows[3];
    assert!((col(b8, 3) - 27.3).abs() <= 0.1);
    assert!((col(b8, 6) - 0.0112).abs() <= 0.0005);
}

#[test]
fn table1_honours_packet_length_and_cap() {
    let out = qamgame(&["table1", "--packet-bits", "20", "--b-max", "4"]);
    let rows = rows(&stdout(&out));
    assert_eq!(rows.len(), 2);
    let star = ModulationScheme::uncoded(2, 20).unwrap().optimal_sir().unwrap().db();
    assert!((col(&rows[0], 3) - star).abs() < 1e-4);
}

#[test]
fn sir_sweep_peaks_at_optimum() {
    let out = qamgame(&["sir-sweep"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("sir_db,b,utility_norm\n"));
    let rows = rows(&text);
    assert_eq!(rows.len(), 400 * 5);
    for b in [2u32, 4, 6, 8, 10] {
        let series: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r[1] == b.to_string())
            .map(|r| (col(r, 0), col(r, 2)))
            .collect();
        let peak = series
            .iter()
            .cloned()
            .fold((0.0, f64::MIN), |a, p| if p.1 > a.1 { p } else { a });
        let star = ModulationScheme::uncoded(b, 100).unwrap().optimal_sir().unwrap().db();
        let nearest = series
            .iter()
            .min_by(|a, b| (a.0 - star).abs().total_cmp(&(b.0 - star).abs()))
            .unwrap();
        assert_eq!(peak.0, nearest.0, "b = {b}");
        if b == 2 {
            assert!((peak.1 - 0.1978).abs() < 1e-3);
        }
        // decays towards both ends of the axis
        assert!(series[0].1 < peak.1 / 2.0 || b == 2);
        assert!(series.last().unwrap().1 < peak.1 / 2.0 || b == 10);
    }
}

#[test]
fn delay_sweep_is_reproducible_and_recomputable() {
    let a = qamgame(&["delay-sweep", "--points", "60"]);
    let b = qamgame(&["delay-sweep", "--points", "60"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(!text.contains('\r'));

    let traffic = TrafficQoS::new(0.1 / 100.0, 1.0).unwrap();
    let user = UserProfile::new(1.0, traffic, 100, 10, Coding::Uncoded).unwrap();
    for row in rows(&text) {
        assert_eq!(row.len(), 9);
        let dn = col(&row, 1);
        match commands::delay_point(&user, 1.0, Policy::ParetoDominant, dn).unwrap() {
            None => assert_eq!(row[2], "infeasible"),
            Some(o) => {
                assert_eq!(row[2], "ok");
                assert_eq!(row[3], o.bits_per_symbol.to_string());
                assert_eq!(row[5], commands::num(o.gamma_db));
                assert_eq!(row[6], commands::num(o.power_norm));
                assert_eq!(row[8], commands::num(o.utility_norm));
            }
        }
    }
}

#[test]
fn delay_sweep_staircase_follows_feasibility() {
    // QPSK is kept until it cannot meet the bound even at R_s = B; the SIR
    // starts rising above the optimum once Omega*_2 / 2 exceeds B.
    let out = qamgame(&["delay-sweep"]);
    let traffic = TrafficQoS::new(0.1 / 100.0, 1.0).unwrap();
    let qpsk = ModulationScheme::uncoded(2, 100).unwrap();
    let star = qpsk.optimal_sir().unwrap().db();
    for row in rows(&stdout(&out)).iter().filter(|r| r[2] == "ok") {
        let t = traffic.with_delay_bound(col(row, 1)).unwrap();
        let qpsk_fits = delay_qos::feasible_at_bandwidth(&qpsk, 1.0, &t);
        assert_eq!(row[3] == "2", qpsk_fits, "D*B = {}", row[1]);
        if qpsk_fits {
            let within_band = delay_qos::omega_star(&qpsk, &t).unwrap() / 2.0 <= 1.0;
            assert_eq!((col(row, 5) - star).abs() < 1e-9, within_band, "D*B = {}", row[1]);
        }
    }
}

#[test]
fn coded_sweep_needs_less_power() {
    let out = qamgame(&["delay-sweep", "--coded", "--points", "40"]);
    let rows = rows(&stdout(&out));
    assert_eq!(rows.len(), 80);
    let (uncoded, coded) = rows.split_at(40);
    let mut compared = 0;
    for (u, c) in uncoded.iter().zip(coded) {
        assert_eq!((u[0].as_str(), c[0].as_str()), ("uncoded", "coded"));
        if u[2] == "ok" && c[2] == "ok" && u[3] == c[3] {
            compared += 1;
            assert!(col(c, 6) < col(u, 6));
            assert!(col(c, 8) > col(u, 8));
        }
    }
    assert!(compared > 20);
}

#[test]
fn delay_sweep_rejects_multi_user_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "two.json",
        r#"{"version": 1, "users": [{"delay_bound_s": 500}, {"delay_bound_s": 800}]}"#,
    );
    let out = qamgame(&["delay-sweep", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("single-user"));
}

#[test]
fn nash_single_user_matches_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "one.json",
        r#"{"version": 1, "noise_w": 0.25, "users": [{"gain": 2.0, "delay_bound_s": 60}]}"#,
    );
    let out = qamgame(&["nash", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let user = &report["users"][0];
    let traffic = TrafficQoS::new(0.1 / 100.0, 60.0).unwrap();
    let profile = UserProfile::new(2.0, traffic, 100, 10, Coding::Uncoded).unwrap();
    let point = commands::delay_point(&profile, 1.0, Policy::ParetoDominant, 60.0)
        .unwrap()
        .unwrap();
    assert_eq!(user["b"], point.bits_per_symbol);
    assert!((user["gamma_db"].as_f64().unwrap() - point.gamma_db).abs() < 1e-12);
    // utility over B * h / sigma^2
    let normalized = user["utility_bits_per_joule"].as_f64().unwrap() * 0.25 / 2.0;
    assert!(((normalized - point.utility_norm) / point.utility_norm).abs() < 1e-9);
    let power_norm = user["power_w"].as_f64().unwrap() * 2.0 / 0.25;
    assert!(((power_norm - point.power_norm) / point.power_norm).abs() < 1e-9);
}

#[test]
fn nash_symmetric_users_get_identical_rows() {
    let dir = tempfile::tempdir().unwrap();
    let user = r#"{"gain": 0.5, "source_rate_fraction": 0.01, "delay_bound_s": 5000}"#;
    let cfg = write_config(
        dir.path(),
        "three.json",
        &format!(r#"{{"version": 1, "users": [{user}, {user}, {user}]}}"#),
    );
    let out = qamgame(&["nash", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let users = report["users"].as_array().unwrap();
    assert_eq!(users.len(), 3);
    for key in ["b", "rs_hz", "gamma_db", "size"] {
        assert_eq!(users[0][key], users[1][key]);
        assert_eq!(users[0][key], users[2][key]);
    }
    let p: Vec<f64> = users.iter().map(|u| u["power_w"].as_f64().unwrap()).collect();
    assert!(p.iter().all(|x| ((x - p[0]) / p[0]).abs() < 1e-10));
    assert!(report["converged"].as_bool().unwrap());

    let diag = &report["diagnostics"];
    for (a, b) in diag["iterated_powers_w"]
        .as_array()
        .unwrap()
        .iter()
        .zip(diag["closed_form_powers_w"].as_array().unwrap())
    {
        assert_eq!(
            format!("{:.7e}", a.as_f64().unwrap()),
            format!("{:.7e}", b.as_f64().unwrap())
        );
    }
}

#[test]
fn nash_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    // second user cannot fit one packet into its delay bound
    let cfg = write_config(
        dir.path(),
        "tight.json",
        r#"{"version": 1, "users": [{"delay_bound_s": 500}, {"delay_bound_s": 5}]}"#,
    );
    let out = qamgame(&["nash", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("user 1"));

    // two users at full band each occupy ~0.9 of the receiver
    let cfg = write_config(
        dir.path(),
        "crowded.json",
        r#"{"version": 1, "policy": "maxrate", "users": [{"delay_bound_s": 500}, {"delay_bound_s": 500}]}"#,
    );
    assert_eq!(qamgame(&["nash", "--config", &cfg]).status.code(), Some(4));

    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"version": 1, "users": [{"delay_bound_s": 5, "x": 1}]}"#,
    );
    assert_eq!(qamgame(&["nash", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn validate_mg1_default_scenario() {
    let out = qamgame(&["validate-mg1", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let z: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("z="))
        .unwrap()
        .parse()
        .unwrap();
    assert!(z.abs() <= 3.0, "{text}");
    assert!(text.contains("packets=1000000\n"));
}

#[test]
fn validate_mg1_error_free_link_without_arrivals() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "idle.json",
        r#"{"version": 1, "users": [{"arrival_rate_pps": 0, "delay_bound_s": 500}]}"#,
    );
    let out = qamgame(&[
        "validate-mg1",
        "--config",
        &cfg,
        "--bits-per-symbol",
        "2",
        "--symbol-rate",
        "0.5",
        "--sir-db",
        "60",
        "--n-packets",
        "1000",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("efficiency=1\n"));
    assert!(text.contains("simulated_delay_s=100\n"), "{text}");
    assert!(text.contains("analytic_delay_s=100\n"));
    assert!(text.contains("z=0\n"));
}

#[test]
fn validate_mg1_is_deterministic_and_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.txt");
    let b = dir.path().join("b.txt");
    for path in [&a, &b] {
        let out = qamgame(&[
            "validate-mg1",
            "--n-packets",
            "20000",
            "--seed",
            "9",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        assert!(out.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let other = qamgame(&["validate-mg1", "--n-packets", "20000", "--seed", "10"]);
    assert_ne!(std::fs::read(&a).unwrap(), other.stdout);
}

#[test]
fn validate_mg1_unstable_operating_point() {
    // efficiency at 0 dB is far below the offered load
    let out = qamgame(&[
        "validate-mg1",
        "--sir-db",
        "0",
        "--symbol-rate",
        "0.01",
        "--n-packets",
        "100",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unstable"));
}

#[test]
fn usage_errors() {
    assert_eq!(qamgame(&["table1", "--bogus"]).status.code(), Some(2));
    assert_eq!(qamgame(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(qamgame(&["table1", "--b-max", "7"]).status.code(), Some(2));
    assert_eq!(
        qamgame(&["sir-sweep", "--start", "5", "--stop", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        qamgame(&["nash", "--config", "/nonexistent.json"]).status.code(),
        Some(2)
    );
    assert_eq!(qamgame(&["--help"]).status.code(), Some(0));
}

#[test]
fn equilibrium_library_and_report_agree() {
    let traffic = TrafficQoS::new(1e-3, 500.0).unwrap();
    let user = UserProfile::new(1.0, traffic, 100, 10, Coding::Uncoded).unwrap();
    let s = game::best_response(&user, 1.0, Policy::ParetoDominant).unwrap();
    let out = qamgame(&["nash"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["users"][0]["rs_hz"].as_f64().unwrap(), s.symbol_rate);
    assert_eq!(report["users"][0]["gamma_db"].as_f64().unwrap(), s.target_sir.db());
}
