use ptcm::sim::theory::{theoretical_ber_pam, wilson_interval};
use ptcm::sim::{run_sweep, SimConfig};

#[test]
fn full_profile_rsse_and_va_give_identical_ber_columns() {
    let cfg = SimConfig::parse(
        "channel.preset = three-tap\ndecoder.list = va, rsse:4/4\n\
         sim.snr_db = 4,8\nsim.min_errors = 50\nsim.max_bits = 50000",
    )
    .unwrap();
    let records = run_sweep(&cfg).unwrap();
    let (va, rs) = records.split_at(2);
    for (a, b) in va.iter().zip(rs) {
        assert_eq!(a.decoder, "va");
        assert_eq!(b.decoder, "rsse:4/4");
        assert_eq!((a.bits_simulated, a.bit_errors), (b.bits_simulated, b.bit_errors));
        assert_eq!(a.states_full, b.states_reduced);
    }
}

#[test]
fn uncoded_bpsk_sweep_follows_q_curve() {
    let cfg = SimConfig::parse(
        "code.kind = uncoded\nmapping.bits = 1\nchannel.preset = ideal\n\
         sim.snr_db = 0,2,4,6,8\nsim.min_errors = 100\nsim.max_bits = 5000000\nsim.block_steps = 1000",
    )
    .unwrap();
    let records = run_sweep(&cfg).unwrap();
    for w in records.windows(2) {
        let (_, hi) = wilson_interval(w[1].bit_errors, w[1].bits_simulated, 1.96);
        let (lo, _) = wilson_interval(w[0].bit_errors, w[0].bits_simulated, 1.96);
        assert!(w[1].ber <= w[0].ber || lo <= hi, "{} dB", w[1].snr_db);
    }
    for r in &records {
        let (lo, hi) = wilson_interval(r.bit_errors, r.bits_simulated, 3.0);
        let p = theoretical_ber_pam(2, r.snr_db);
        assert!(lo <= p && p <= hi, "{} dB: {} vs {p}", r.snr_db, r.ber);
    }
}

#[test]
fn punctured_link_with_uncoded_bits_recovers_noiseless_blocks() {
    let cfg = SimConfig::parse(
        "puncture.mask = 11,10\nmapping.bits = 3\nmapping.uncoded_bits = 1\n\
         channel.preset = two-tap\ndecoder.list = va, rsse:2, rsse:1\n\
         sim.snr_db = inf\nsim.max_bits = 20000",
    )
    .unwrap();
    for r in run_sweep(&cfg).unwrap() {
        assert_eq!(r.bit_errors, 0, "{}", r.decoder);
    }
}

#[test]
fn free_running_blocks_decode_with_sliding_window() {
    let cfg = SimConfig::parse(
        "channel.preset = two-tap\ndecoder.termination = free\ndecoder.list = va, rsse:1\n\
         sim.snr_db = inf, 12\nsim.max_bits = 20000\nsim.min_errors = 1000",
    )
    .unwrap();
    let records = run_sweep(&cfg).unwrap();
    assert_eq!(records[0].bit_errors, 0);
    assert_eq!(records[2].bit_errors, 0);
    assert!(records[1].ber < 1e-2);
}

#[test]
fn shipped_configs_are_valid() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = SimConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        cfg.validate().unwrap();
        n += 1;
    }
    assert!(n >= 3);
}
