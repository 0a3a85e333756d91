use holomimo::experiment::{read_csv, write_csv};
use holomimo::{
    build_channel, build_svd_precoder, capacity, channel_svd, epa, link_budget, run_sweep, sample_disk, Scheme,
    SweepConfig,
};

fn small_config() -> SweepConfig {
    SweepConfig {
        r_t: 3.0,
        r_r: 3.0,
        n_modes: 8,
        sweep: vec![0.3, 1.0, 3.0],
        ..SweepConfig::default()
    }
}

#[test]
fn csv_round_trip_is_exact() {
    let result = run_sweep(&small_config()).unwrap();
    let mut bytes = Vec::new();
    write_csv(&result.records, &mut bytes).unwrap();
    let back = read_csv(bytes.as_slice()).unwrap();
    assert_eq!(back, result.records);
}

#[test]
fn sweep_matches_direct_computation() {
    let cfg = small_config();
    let result = run_sweep(&cfg).unwrap();
    let tx = sample_disk(cfg.r_t, cfg.pitch, 0.0).unwrap();
    for rec in result.records.iter().filter(|r| r.scheme == Scheme::SvdEpa) {
        let rx = sample_disk(cfg.r_r, cfg.pitch, rec.d_wavelengths).unwrap();
        let h = build_channel(&tx, &rx).unwrap();
        let svd = channel_svd(&h).unwrap();
        let f = build_svd_precoder(&svd, cfg.n_modes).unwrap();
        let link = link_budget(cfg.snr_db, rec.d_wavelengths).unwrap();
        let direct = capacity(&h, &f, &epa(cfg.n_modes).unwrap(), &link).unwrap();
        assert!((direct - rec.capacity_bits).abs() <= 1e-8, "{direct} vs {}", rec.capacity_bits);
    }
}

#[test]
fn records_follow_sweep_then_scheme_order() {
    let cfg = small_config();
    let result = run_sweep(&cfg).unwrap();
    assert_eq!(result.records.len(), cfg.sweep.len() * cfg.schemes.len());
    for (i, rec) in result.records.iter().enumerate() {
        assert_eq!(rec.d_over_dr, cfg.sweep[i / cfg.schemes.len()]);
        assert_eq!(rec.scheme, cfg.schemes[i % cfg.schemes.len()]);
    }
    assert_eq!(result.metadata.tx_points, tx_count(&cfg));
}

fn tx_count(cfg: &SweepConfig) -> usize {
    sample_disk(cfg.r_t, cfg.pitch, 0.0).unwrap().len()
}

#[test]
fn config_rejects_unknown_fields() {
    assert!(SweepConfig::from_json(r#"{"radius": 3}"#).is_err());
    assert!(SweepConfig::from_json(r#"{"sweep": [1.0, 0.5]}"#).is_err());
    let cfg = SweepConfig::from_json(r#"{"r_t": 4, "schemes": ["walsh_polar"]}"#).unwrap();
    assert_eq!(cfg.schemes, vec![Scheme::WalshPolar]);
    assert_eq!(cfg.r_r, 10.0);
}
